//! Matrix permanents by Ryser's inclusion-exclusion formula with Gray-code
//! subset order, and the first/second minor tables the permanent-minors
//! engine is built on.

use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::Accumulator;

/// Largest dimension accepted by [`permanent`].
pub const MAX_PERMANENT_DIM: usize = 25;

// Row sums are recomputed from the current subset this often to stop the
// add/subtract updates from drifting.
const RESYNC_INTERVAL: u64 = 1 << 10;

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from rows; fails unless every row has `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidModel("matrix rows must form a square".into()));
        }
        Ok(Self {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// The matrix with the given rows and columns removed. Index lists must be
    /// sorted and duplicate-free.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> Self {
        let keep_rows: Vec<usize> = (0..self.dim).filter(|r| !rows.contains(r)).collect();
        let keep_cols: Vec<usize> = (0..self.dim).filter(|c| !cols.contains(c)).collect();
        let dim = keep_rows.len();
        debug_assert_eq!(dim, keep_cols.len());
        let mut data = Vec::with_capacity(dim * dim);
        for &r in &keep_rows {
            for &c in &keep_cols {
                data.push(self[(r, c)]);
            }
        }
        Self { dim, data }
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for SquareMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

/// `perm(A) = Σ_σ Π_i A_{iσ(i)}` in `O(2ⁿ n)` operations.
///
/// Uses `perm(A) = (-1)ⁿ Σ_{S ⊆ cols} (-1)^{|S|} Π_i Σ_{j ∈ S} A_ij`, visiting
/// subsets in Gray-code order so each step updates the row sums by one column.
/// For non-negative input the result is clamped at zero.
pub fn permanent(matrix: &SquareMatrix, compensated: bool) -> Result<f64> {
    let n = matrix.dim;
    if n > MAX_PERMANENT_DIM {
        return Err(Error::DimensionLimit {
            dim: n,
            max: MAX_PERMANENT_DIM,
        });
    }
    match n {
        0 => return Ok(1.0),
        1 => return Ok(matrix.data[0]),
        2 => return Ok(matrix.data[0] * matrix.data[3] + matrix.data[1] * matrix.data[2]),
        _ => {}
    }
    let mut row_sums = vec![0.0; n];
    let mut acc = Accumulator::new(compensated);
    let mut subset: u64 = 0;
    for step in 1u64..(1u64 << n) {
        let col = step.trailing_zeros() as usize;
        let mask = 1u64 << col;
        subset ^= mask;
        if step % RESYNC_INTERVAL == 0 {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                let row = matrix.row(i);
                *rs = (0..n)
                    .filter(|c| subset & (1 << c) != 0)
                    .map(|c| row[c])
                    .sum();
            }
        } else if subset & mask != 0 {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs += matrix.data[i * n + col];
            }
        } else {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs -= matrix.data[i * n + col];
            }
        }
        let prod: f64 = row_sums.iter().product();
        if (n - subset.count_ones() as usize).is_multiple_of(2) {
            acc.add(prod);
        } else {
            acc.add(-prod);
        }
    }
    let value = acc.value();
    if matrix.data.iter().all(|&x| x >= 0.0) {
        Ok(value.max(0.0))
    } else {
        Ok(value)
    }
}

/// Permanents of every first and second minor of a matrix.
///
/// `first[j][a]` is the permanent with row `j` and column `a` removed;
/// `second` holds, for rows `j < k` and columns `a < b`, the permanent with
/// both rows and both columns removed. A minor is skipped (stored as zero)
/// when `skip` says no term of the expansion can use it.
pub(crate) struct MinorTable {
    dim: usize,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl MinorTable {
    pub(crate) fn build(
        matrix: &SquareMatrix,
        with_second: bool,
        compensated: bool,
    ) -> Result<Self> {
        let n = matrix.dim;
        let first_idx: Vec<(usize, usize)> =
            (0..n).flat_map(|j| (0..n).map(move |a| (j, a))).collect();
        let first = first_idx
            .par_iter()
            .map(|&(j, a)| {
                if matrix[(j, a)] == 0.0 {
                    Ok(0.0)
                } else {
                    permanent(&matrix.minor(&[j], &[a]), compensated)
                }
            })
            .collect::<Result<Vec<f64>>>()?;

        let mut second = Vec::new();
        if with_second && n >= 2 {
            let pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|j| (j + 1..n).map(move |k| (j, k)))
                .collect();
            let idx: Vec<((usize, usize), (usize, usize))> = pairs
                .iter()
                .flat_map(|&rp| pairs.iter().map(move |&cp| (rp, cp)))
                .collect();
            second = idx
                .par_iter()
                .map(|&((j, k), (a, b))| {
                    let used = matrix[(j, a)] * matrix[(k, b)] != 0.0
                        || matrix[(j, b)] * matrix[(k, a)] != 0.0;
                    if used {
                        permanent(&matrix.minor(&[j, k], &[a, b]), compensated)
                    } else {
                        Ok(0.0)
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
        }
        Ok(Self {
            dim: n,
            first,
            second,
        })
    }

    pub(crate) fn first(&self, j: usize, a: usize) -> f64 {
        self.first[j * self.dim + a]
    }

    /// Second minor for distinct rows `{j, k}` and distinct columns `{a, b}`
    /// in any order.
    pub(crate) fn second(&self, j: usize, k: usize, a: usize, b: usize) -> f64 {
        let (j, k) = if j < k { (j, k) } else { (k, j) };
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let n = self.dim;
        let n_pairs = n * (n - 1) / 2;
        self.second[pair_index(n, j, k) * n_pairs + pair_index(n, a, b)]
    }
}

// Position of (j, k), j < k, in the lexicographic list of pairs.
fn pair_index(n: usize, j: usize, k: usize) -> usize {
    j * n - j * (j + 1) / 2 + (k - j - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rel_diff;
    use itertools::Itertools;
    use proptest::prelude::*;

    fn brute_permanent(m: &SquareMatrix) -> f64 {
        let n = m.dim();
        (0..n)
            .permutations(n)
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(i, &j)| m[(i, j)])
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn identity_and_ones() {
        assert_eq!(permanent(&SquareMatrix::identity(5), true).unwrap(), 1.0);
        let ones = SquareMatrix::from_fn(4, |_, _| 1.0);
        assert_eq!(permanent(&ones, true).unwrap(), 24.0);
        let ones = SquareMatrix::from_fn(3, |_, _| 1.0);
        assert_eq!(permanent(&ones, false).unwrap(), 6.0);
        assert_eq!(permanent(&SquareMatrix::zeros(0), false).unwrap(), 1.0);
    }

    #[test]
    fn two_by_two_symmetric() {
        let w = 0.37;
        let m = SquareMatrix::from_rows(&[vec![1.0, w], vec![w, 1.0]]).unwrap();
        assert_eq!(permanent(&m, false).unwrap(), 1.0 + w * w);
    }

    #[test]
    fn fixed_six_by_six_matches_enumeration() {
        // deterministic pseudo-random entries in [0, 1)
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let m = SquareMatrix::from_fn(6, |_, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        });
        let r = permanent(&m, true).unwrap();
        assert!(rel_diff(r, brute_permanent(&m)) < 1e-12);
    }

    #[test]
    fn dimension_limit() {
        let m = SquareMatrix::identity(26);
        assert_eq!(
            permanent(&m, false),
            Err(Error::DimensionLimit { dim: 26, max: 25 })
        );
    }

    #[test]
    fn resync_path_exercised() {
        // 11 columns → 2047 steps, crosses the resync interval
        let m = SquareMatrix::from_fn(11, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        let ryser = permanent(&m, true).unwrap();
        let small = m.minor(&[0, 1, 2, 3], &[0, 1, 2, 3]);
        assert!(rel_diff(permanent(&small, true).unwrap(), brute_permanent(&small)) < 1e-12);
        // Laplace expansion along row 0 through 10x10 minors
        let laplace: f64 = (0..11)
            .map(|a| m[(0, a)] * permanent(&m.minor(&[0], &[a]), true).unwrap())
            .sum();
        assert!(rel_diff(ryser, laplace) < 1e-12);
    }

    #[test]
    fn minor_table_indexing() {
        let m = SquareMatrix::from_fn(5, |i, j| 1.0 + 0.1 * i as f64 + 0.01 * j as f64);
        let t = MinorTable::build(&m, true, true).unwrap();
        for (j, k, a, b) in [(0, 1, 2, 3), (3, 1, 4, 0), (4, 2, 1, 3)] {
            let mut rows = [j, k];
            rows.sort();
            let mut cols = [a, b];
            cols.sort();
            let direct = brute_permanent(&m.minor(&rows, &cols));
            assert!(rel_diff(t.second(j, k, a, b), direct) < 1e-13);
        }
        assert!(rel_diff(t.first(2, 3), brute_permanent(&m.minor(&[2], &[3]))) < 1e-13);
    }

    proptest! {
        #[test]
        fn matches_enumeration(n in 1usize..=7, seed in proptest::collection::vec(0.0f64..1.0, 49)) {
            let m = SquareMatrix::from_fn(n, |i, j| seed[i * 7 + j]);
            let brute = brute_permanent(&m);
            let ryser = permanent(&m, true).unwrap();
            prop_assert!((ryser - brute).abs() <= 1e-12 * brute.max(1e-300));
        }
    }
}
