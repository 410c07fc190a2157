//! Vacuum expectation values of bosonic operator strings on a finite mode
//! lattice, used to confirm the combinatorial factors that appear when
//! normal-ordering photon-number operators between `n`-photon states.
//!
//! Every ladder operator maps an occupation vector to a single occupation
//! vector, so a state reached from the vacuum is one basis vector times an
//! amplitude `√k`. The integer `k` is tracked exactly and the square root is
//! taken once at the end.

use itertools::Itertools;
use serde::Serialize;

use super::identities::IdentityCheck;
use crate::error::{Error, Result};

pub const MAX_VEV_PHOTONS: usize = 4;
pub const MAX_VEV_MODES: usize = 6;

const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BosonOp {
    Create(usize),
    Annihilate(usize),
    Number(usize),
}

/// `√weight_sq · |occupation⟩` on a finite lattice, or the null vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockState {
    occupation: Vec<u32>,
    weight_sq: u128,
}

impl FockState {
    pub fn vacuum(modes: usize) -> Self {
        Self {
            occupation: vec![0; modes],
            weight_sq: 1,
        }
    }

    pub fn is_null(&self) -> bool {
        self.weight_sq == 0
    }

    pub fn occupation(&self) -> &[u32] {
        &self.occupation
    }

    pub fn apply(&self, op: BosonOp) -> Self {
        let mut next = self.clone();
        if self.is_null() {
            return next;
        }
        match op {
            BosonOp::Create(m) => {
                next.occupation[m] += 1;
                next.weight_sq *= u128::from(next.occupation[m]);
            }
            BosonOp::Annihilate(m) => {
                next.weight_sq *= u128::from(self.occupation[m]);
                next.occupation[m] = self.occupation[m].saturating_sub(1);
            }
            BosonOp::Number(m) => {
                let k = u128::from(self.occupation[m]);
                next.weight_sq *= k * k;
            }
        }
        next
    }

    pub fn vacuum_amplitude(&self) -> f64 {
        if self.occupation.iter().all(|&k| k == 0) {
            (self.weight_sq as f64).sqrt()
        } else {
            0.0
        }
    }
}

/// `⟨0| ops[0] ops[1] … ops[last] |0⟩`, applying the rightmost operator first.
pub fn vacuum_expectation(modes: usize, ops: &[BosonOp]) -> f64 {
    ops.iter()
        .rev()
        .fold(FockState::vacuum(modes), |state, &op| state.apply(op))
        .vacuum_amplitude()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VevReport {
    pub n_photons: usize,
    pub modes: usize,
    /// Observed `⟨0| a^n n̂ a†^n |0⟩` with every index on one site.
    pub number_factor: f64,
    /// Observed `⟨0| a^n n̂ n̂ a†^n |0⟩` with every index on one site.
    pub number_squared_factor: f64,
    pub checks: Vec<IdentityCheck>,
}

impl VevReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.max_deviation <= c.tolerance)
    }
}

struct Check {
    inner: IdentityCheck,
}

impl Check {
    fn new(identity: &str) -> Self {
        Self {
            inner: IdentityCheck {
                identity: identity.into(),
                evaluations: 0,
                max_deviation: 0.0,
                tolerance: TOLERANCE,
            },
        }
    }

    fn compare(&mut self, observed: f64, expected: f64, indices: &[usize]) -> Result<()> {
        let deviation = (observed - expected).abs() / expected.abs().max(1.0);
        self.inner.evaluations += 1;
        self.inner.max_deviation = self.inner.max_deviation.max(deviation);
        if deviation.is_nan() || deviation > TOLERANCE {
            return Err(Error::IdentityViolation {
                identity: self.inner.identity.clone(),
                permutation: indices.to_vec(),
                deviation,
            });
        }
        Ok(())
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Counts permutations `σ` with `annihilated[j] = created[σ(j)]` for all `j`.
fn matching_permutations(annihilated: &[usize], created: &[usize]) -> f64 {
    let n = annihilated.len();
    (0..n)
        .permutations(n)
        .filter(|p| (0..n).all(|j| annihilated[j] == created[p[j]]))
        .count() as f64
}

/// On a lattice of `modes` sites with `n_photons` photons, checks:
///
/// - `permutation-sum`: `⟨0| Π_j a_{x_j} Π_j a†_{y_j} |0⟩` equals the number
///   of permutations matching the two site lists;
/// - `number`: `⟨0| a_p^n n̂_q a†_r^n |0⟩ = n!·n·δ_pq δ_qr`;
/// - `number-squared`: `⟨0| a_p^n n̂_q n̂_t a†_r^n |0⟩ = n!·n²·δ_pq δ_qt δ_tr`.
///
/// The annihilated site list of the permutation-sum check runs over sorted
/// multisets only, since annihilators commute.
pub fn appendix_b_vev_suite(n_photons: usize, modes: usize) -> Result<VevReport> {
    if n_photons == 0 || n_photons > MAX_VEV_PHOTONS {
        return Err(Error::InvalidModel(format!(
            "photon number must be in 1..={MAX_VEV_PHOTONS}, got {n_photons}"
        )));
    }
    if modes == 0 || modes > MAX_VEV_MODES {
        return Err(Error::InvalidModel(format!(
            "mode lattice size must be in 1..={MAX_VEV_MODES}, got {modes}"
        )));
    }
    let n = n_photons;

    let mut perm_sum = Check::new("permutation-sum");
    for annihilated in (0..modes).combinations_with_replacement(n) {
        for created in (0..n).map(|_| 0..modes).multi_cartesian_product() {
            let ops: Vec<BosonOp> = annihilated
                .iter()
                .map(|&m| BosonOp::Annihilate(m))
                .chain(created.iter().map(|&m| BosonOp::Create(m)))
                .collect();
            let indices: Vec<usize> = annihilated.iter().chain(&created).copied().collect();
            perm_sum.compare(
                vacuum_expectation(modes, &ops),
                matching_permutations(&annihilated, &created),
                &indices,
            )?;
        }
    }

    let string = |outer: usize, middle: &[usize], inner: usize| -> Vec<BosonOp> {
        std::iter::repeat_n(BosonOp::Annihilate(outer), n)
            .chain(middle.iter().map(|&m| BosonOp::Number(m)))
            .chain(std::iter::repeat_n(BosonOp::Create(inner), n))
            .collect()
    };
    let nf = n as f64;
    let number_expected = factorial(n) * nf;
    let squared_expected = factorial(n) * nf * nf;

    let mut number = Check::new("number");
    let mut squared = Check::new("number-squared");
    for p in 0..modes {
        for r in 0..modes {
            for q in 0..modes {
                let expected = if p == q && q == r {
                    number_expected
                } else {
                    0.0
                };
                number.compare(
                    vacuum_expectation(modes, &string(p, &[q], r)),
                    expected,
                    &[p, q, r],
                )?;
                for t in 0..modes {
                    let expected = if p == q && q == t && t == r {
                        squared_expected
                    } else {
                        0.0
                    };
                    squared.compare(
                        vacuum_expectation(modes, &string(p, &[q, t], r)),
                        expected,
                        &[p, q, t, r],
                    )?;
                }
            }
        }
    }

    Ok(VevReport {
        n_photons,
        modes,
        number_factor: vacuum_expectation(modes, &string(0, &[0], 0)),
        number_squared_factor: vacuum_expectation(modes, &string(0, &[0, 0], 0)),
        checks: vec![perm_sum.inner, number.inner, squared.inner],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_photon_factors() {
        let r = appendix_b_vev_suite(1, 3).unwrap();
        assert!(r.passed());
        assert_eq!(r.number_factor, 1.0);
        assert_eq!(r.number_squared_factor, 1.0);
    }

    #[test]
    fn two_and_three_photon_factors() {
        let r = appendix_b_vev_suite(2, 4).unwrap();
        assert!(r.passed());
        assert_eq!(r.number_factor, 4.0);
        assert_eq!(r.number_squared_factor, 8.0);
        let r = appendix_b_vev_suite(3, 3).unwrap();
        assert_eq!(r.number_factor, 18.0);
        assert_eq!(r.number_squared_factor, 54.0);
    }

    #[test]
    fn four_photons_on_largest_lattice() {
        let r = appendix_b_vev_suite(4, 6).unwrap();
        assert!(r.passed());
        assert_eq!(r.number_factor, 96.0);
        assert_eq!(r.number_squared_factor, 384.0);
    }

    #[test]
    fn commutator_on_one_site() {
        // ⟨0| a a† |0⟩ = 1, ⟨0| a† a |0⟩ = 0
        assert_eq!(
            vacuum_expectation(1, &[BosonOp::Annihilate(0), BosonOp::Create(0)]),
            1.0
        );
        assert_eq!(
            vacuum_expectation(1, &[BosonOp::Create(0), BosonOp::Annihilate(0)]),
            0.0
        );
        assert_eq!(
            vacuum_expectation(2, &[BosonOp::Annihilate(1), BosonOp::Create(0)]),
            0.0
        );
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(appendix_b_vev_suite(5, 2).is_err());
        assert!(appendix_b_vev_suite(2, 7).is_err());
        assert!(appendix_b_vev_suite(0, 2).is_err());
    }
}
