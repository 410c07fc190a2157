//! Exact QFI of `N` single-photon emitters whose Gaussian profiles overlap.
//!
//! All photons share one spatial mode continuum, so every inner product is a
//! sum over permutations `σ` of products of pairwise Gaussian overlaps
//! `W_jk = exp[-(μ̃_j - μ̃_k)² / (8 s²)]`. Writing the raw permutation weights
//! `exp[Σ_l μ̃_l μ̃_σ(l) / (4 s²)]` as `exp[Σ_l μ̃_l² / (4 s²)] · Π_l W_{lσ(l)}`
//! and cancelling the common factor between numerator and denominator keeps
//! every weight in `(0, 1]`, which is what lets the engines reach `d ≫ s`.
//!
//! Two engines evaluate the resulting weighted permutation averages:
//!
//! - [`Engine::Enumerate`] visits all `N!` permutations (`N ≤ 11`).
//! - [`Engine::PermanentMinors`] expands each average over one or two fixed
//!   assignments `j → a` (and `k → b`) and sums permanents of the remaining
//!   minors, computed by Ryser's formula.

mod enumerate;
pub mod identities;
mod permanent;
pub mod vev;

use serde::{Deserialize, Serialize};

pub use enumerate::{heap_permutations, MAX_ENUMERATE_SOURCES};
pub use permanent::{permanent, SquareMatrix, MAX_PERMANENT_DIM};

use crate::closed_form::{Method, QfiResult};
use crate::error::{Error, Result};
use crate::geometry::{deformed_derivatives, deformed_positions, Deformation, EmitterArray};
use crate::numeric::Accumulator;
use permanent::MinorTable;

/// Arrays up to this size default to the enumeration engine.
pub const ENUMERATE_DEFAULT_MAX: usize = 7;

/// Negative QFI values above `-CLAMP_TOLERANCE · |4 𝓒|` are roundoff and
/// clamped to zero.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Enumerate,
    PermanentMinors,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Enumerate => "enumerate",
            Engine::PermanentMinors => "permanent-minors",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub engine: Engine,
    /// Combine partial sums in a fixed order so results are bit-identical
    /// regardless of thread count.
    pub deterministic: bool,
    /// Neumaier-compensated accumulation.
    pub compensated_sum: bool,
}

impl EngineConfig {
    /// Enumeration up to [`ENUMERATE_DEFAULT_MAX`] sources, permanents beyond.
    pub fn for_sources(n_sources: usize) -> Self {
        let engine = if n_sources <= ENUMERATE_DEFAULT_MAX {
            Engine::Enumerate
        } else {
            Engine::PermanentMinors
        };
        Self::with_engine(engine)
    }

    pub fn with_engine(engine: Engine) -> Self {
        Self {
            engine,
            deterministic: true,
            compensated_sum: true,
        }
    }

    fn check_size(&self, n_sources: usize) -> Result<()> {
        let max = match self.engine {
            Engine::Enumerate => MAX_ENUMERATE_SOURCES,
            Engine::PermanentMinors => MAX_PERMANENT_DIM,
        };
        if n_sources > max {
            return Err(Error::EngineLimit {
                engine: self.engine.name(),
                n_sources,
                max,
            });
        }
        Ok(())
    }
}

/// Pairwise overlaps `W_jk = exp[-(μ̃_j - μ̃_k)² / (8 s²)]` of the stretched
/// sources, with their logarithms kept alongside.
///
/// Entries that would be subnormal are flushed to zero; `log_entries` stay
/// finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOverlapMatrix {
    entries: SquareMatrix,
    log_entries: SquareMatrix,
}

impl PairOverlapMatrix {
    pub fn new(array: &EmitterArray, def: &Deformation) -> Self {
        Self::from_positions(&deformed_positions(array, def), array.sigma())
    }

    pub fn from_positions(positions: &[f64], sigma: f64) -> Self {
        let n = positions.len();
        let scale = 8.0 * sigma * sigma;
        let log_entries = SquareMatrix::from_fn(n, |j, k| {
            if j == k {
                0.0
            } else {
                let diff = positions[j] - positions[k];
                -(diff * diff) / scale
            }
        });
        let entries = SquareMatrix::from_fn(n, |j, k| {
            let w = log_entries[(j, k)].exp();
            if w < f64::MIN_POSITIVE {
                0.0
            } else {
                w
            }
        });
        Self {
            entries,
            log_entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn entries(&self) -> &SquareMatrix {
        &self.entries
    }

    pub fn log_entries(&self) -> &SquareMatrix {
        &self.log_entries
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[(j, k)]
    }
}

/// Weighted permutation sums requested from an engine:
/// `norm = Σ_σ w_σ`, `first[i] = Σ_σ w_σ L_i(σ)` and
/// `second[p] = Σ_σ w_σ L_i(σ) L_k(σ)` for `(i, k) = products[p]`, where
/// `w_σ = Π_l W_{lσ(l)}` and `L_i(σ) = Σ_j linear[i]_{jσ(j)}`.
pub(crate) struct MomentRequest<'a> {
    pub(crate) weights: &'a SquareMatrix,
    pub(crate) log_weights: &'a SquareMatrix,
    pub(crate) linear: Vec<SquareMatrix>,
    pub(crate) products: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Moments {
    pub(crate) norm: f64,
    pub(crate) first: Vec<f64>,
    pub(crate) second: Vec<f64>,
}

impl Moments {
    fn zeros(request: &MomentRequest<'_>) -> Self {
        Self {
            norm: 0.0,
            first: vec![0.0; request.linear.len()],
            second: vec![0.0; request.products.len()],
        }
    }

    fn add(&self, other: &Moments) -> Moments {
        Moments {
            norm: self.norm + other.norm,
            first: self
                .first
                .iter()
                .zip(&other.first)
                .map(|(a, b)| a + b)
                .collect(),
            second: self
                .second
                .iter()
                .zip(&other.second)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    fn combine_ordered(parts: &[Moments], compensated: bool) -> Moments {
        let sum = |f: &dyn Fn(&Moments) -> f64| {
            let mut acc = Accumulator::new(compensated);
            for p in parts {
                acc.add(f(p));
            }
            acc.value()
        };
        let n_first = parts.first().map_or(0, |p| p.first.len());
        let n_second = parts.first().map_or(0, |p| p.second.len());
        Moments {
            norm: sum(&|p| p.norm),
            first: (0..n_first).map(|i| sum(&|p| p.first[i])).collect(),
            second: (0..n_second).map(|i| sum(&|p| p.second[i])).collect(),
        }
    }
}

fn minor_moments(request: &MomentRequest<'_>, compensated: bool) -> Result<Moments> {
    let w = request.weights;
    let n = w.dim();
    let norm = permanent(w, compensated)?;
    if request.linear.is_empty() {
        return Ok(Moments {
            norm,
            first: Vec::new(),
            second: Vec::new(),
        });
    }
    let table = MinorTable::build(w, !request.products.is_empty(), compensated)?;

    let first = request
        .linear
        .iter()
        .map(|u| {
            let mut acc = Accumulator::new(compensated);
            for j in 0..n {
                for a in 0..n {
                    if w[(j, a)] != 0.0 {
                        acc.add(u[(j, a)] * w[(j, a)] * table.first(j, a));
                    }
                }
            }
            acc.value()
        })
        .collect();

    // Σ_σ w_σ (Σ_j u_{jσ(j)})(Σ_k v_{kσ(k)}) splits into the j = k terms,
    // one fixed assignment j → a, and the ordered pairs j ≠ k with two fixed
    // assignments j → a, k → b (a ≠ b). Each ordered pair (j, k) appears once
    // with each ordered column pair, so no symmetry factor is needed.
    let second = request
        .products
        .iter()
        .map(|&(iu, iv)| {
            let (u, v) = (&request.linear[iu], &request.linear[iv]);
            let mut acc = Accumulator::new(compensated);
            for j in 0..n {
                for a in 0..n {
                    let wja = w[(j, a)];
                    if wja == 0.0 {
                        continue;
                    }
                    acc.add(u[(j, a)] * v[(j, a)] * wja * table.first(j, a));
                    for k in (0..n).filter(|&k| k != j) {
                        for b in (0..n).filter(|&b| b != a) {
                            let wkb = w[(k, b)];
                            if wkb != 0.0 {
                                acc.add(
                                    u[(j, a)] * v[(k, b)] * wja * wkb * table.second(j, k, a, b),
                                );
                            }
                        }
                    }
                }
            }
            acc.value()
        })
        .collect();

    Ok(Moments {
        norm,
        first,
        second,
    })
}

fn compute_moments(request: &MomentRequest<'_>, config: &EngineConfig) -> Result<Moments> {
    config.check_size(request.weights.dim())?;
    match config.engine {
        Engine::Enumerate => Ok(enumerate::enumerate_moments(
            request,
            config.deterministic,
            config.compensated_sum,
        )),
        Engine::PermanentMinors => minor_moments(request, config.compensated_sum),
    }
}

/// `perm(W) = Σ_σ Π_j W_{jσ(j)}`: the state normalisation with the common
/// exponential factor removed. At least 1 (identity permutation).
pub fn perm_sum_norm(w: &PairOverlapMatrix, config: &EngineConfig) -> Result<f64> {
    let request = MomentRequest {
        weights: &w.entries,
        log_weights: &w.log_entries,
        linear: Vec::new(),
        products: Vec::new(),
    };
    Ok(compute_moments(&request, config)?.norm)
}

/// Everything one engine pass yields for an array.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTerms {
    /// `perm(W)`.
    pub norm: f64,
    /// `𝓑`, the weighted average of `Σ_j μ̃'_j (μ̃_j + μ̃_σ(j)) / (4 s²)`.
    pub term_b: f64,
    /// `𝓒`, the weighted average of the diagonal plus cross terms over `16 s⁴`.
    pub term_c: f64,
    /// `4(𝓒 - 𝓑²)` evaluated in shift-invariant form (see [`overlap_terms`]).
    pub qfi: f64,
}

const STAT_B: usize = 0;
const STAT_D: usize = 1;
const STAT_QR: usize = 2;
const STAT_P: usize = 3;
const STAT_Q: usize = 4;

/// Runs one engine pass and returns `perm(W)`, `𝓑`, `𝓒` and the QFI.
///
/// `𝓑` and `𝓒` follow the literal permutation-sum definitions. For `d ≫ s`
/// both grow like `d²` while `4(𝓒 - 𝓑²)` stays `O(1)`, so the QFI itself is
/// taken from the identical expression with every linear statistic measured
/// relative to its identity-permutation value:
///
/// `QFI = ⟨D⟩/s² + (⟨p q⟩ - ⟨p⟩⟨q⟩) / (4 s⁴)` with
/// `D_σ = Σ_j μ̃'_j μ̃'_σ(j)`, `p_σ = Σ_j μ̃'_j (μ̃_σ(j) - μ̃_j)` and
/// `q_σ = Σ_j μ̃'_σ(j) (μ̃_j - μ̃_σ(j))`.
pub fn overlap_terms(
    array: &EmitterArray,
    def: &Deformation,
    config: &EngineConfig,
) -> Result<OverlapTerms> {
    let n = array.n_sources();
    config.check_size(n)?;
    let s2 = array.sigma() * array.sigma();
    let mu = deformed_positions(array, def);
    let dmu = deformed_derivatives(n, def);
    let w = PairOverlapMatrix::from_positions(&mu, array.sigma());

    let linear = vec![
        SquareMatrix::from_fn(n, |j, a| dmu[j] * (mu[j] + mu[a])),
        SquareMatrix::from_fn(n, |j, a| dmu[j] * dmu[a]),
        SquareMatrix::from_fn(n, |j, a| dmu[a] * (mu[j] + mu[a])),
        SquareMatrix::from_fn(n, |j, a| dmu[j] * (mu[a] - mu[j])),
        SquareMatrix::from_fn(n, |j, a| dmu[a] * (mu[j] - mu[a])),
    ];
    let request = MomentRequest {
        weights: &w.entries,
        log_weights: &w.log_entries,
        linear,
        products: vec![(STAT_QR, STAT_B), (STAT_P, STAT_Q)],
    };
    let m = compute_moments(&request, config)?;
    let norm = m.norm;
    if !norm.is_finite() || norm < 1.0 - 1e-9 {
        return Err(Error::NumericalBreakdown(format!(
            "permutation normalisation perm(W) = {norm} is not a finite value >= 1"
        )));
    }
    let term_b = m.first[STAT_B] / (4.0 * s2 * norm);
    let term_c = (4.0 * s2 * m.first[STAT_D] + m.second[0]) / (16.0 * s2 * s2 * norm);
    let mean_p = m.first[STAT_P] / norm;
    let mean_q = m.first[STAT_Q] / norm;
    let qfi =
        m.first[STAT_D] / (s2 * norm) + (m.second[1] / norm - mean_p * mean_q) / (4.0 * s2 * s2);
    Ok(OverlapTerms {
        norm,
        term_b,
        term_c,
        qfi,
    })
}

/// `𝓑` for the stretched array.
pub fn term_b(array: &EmitterArray, def: &Deformation, config: &EngineConfig) -> Result<f64> {
    Ok(overlap_terms(array, def, config)?.term_b)
}

/// `𝓒` for the stretched array.
pub fn term_c(array: &EmitterArray, def: &Deformation, config: &EngineConfig) -> Result<f64> {
    Ok(overlap_terms(array, def, config)?.term_c)
}

/// Exact single-photon QFI `4(𝓒 - 𝓑²)` for overlapping sources.
///
/// Diagnostics: `term_B`, `term_C`, `log_perm` (`ln perm(W)`) and
/// `qfi_direct` (`4(𝓒 - 𝓑²)` evaluated literally). Small negative values from
/// roundoff are clamped to zero and flagged with `clamped = 1`.
pub fn qfi_overlap(
    array: &EmitterArray,
    def: &Deformation,
    config: &EngineConfig,
) -> Result<QfiResult> {
    let terms = overlap_terms(array, def, config)?;
    let method = match config.engine {
        Engine::Enumerate => Method::OverlapEnumerate,
        Engine::PermanentMinors => Method::OverlapPermanentMinors,
    };
    let mut value = terms.qfi;
    let mut clamped = 0.0;
    if !value.is_finite() {
        return Err(Error::NumericalBreakdown(format!(
            "QFI evaluated to {value}"
        )));
    }
    if value < 0.0 {
        let slack = CLAMP_TOLERANCE * (4.0 * terms.term_c).abs().max(1.0);
        if value < -slack {
            return Err(Error::NumericalBreakdown(format!(
                "QFI {value:e} is negative beyond the roundoff slack {slack:e}"
            )));
        }
        log::warn!("clamping roundoff-negative overlap QFI {value:e} to zero");
        value = 0.0;
        clamped = 1.0;
    }
    Ok(QfiResult::new(value, method)
        .with_diagnostic("term_B", terms.term_b)
        .with_diagnostic("term_C", terms.term_c)
        .with_diagnostic("log_perm", terms.norm.ln())
        .with_diagnostic(
            "qfi_direct",
            4.0 * (terms.term_c - terms.term_b * terms.term_b),
        )
        .with_diagnostic("clamped", clamped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::qfi_spe;
    use crate::numeric::rel_diff;
    use itertools::Itertools;
    use proptest::prelude::*;

    fn arr(n: usize, d: f64, s: f64) -> EmitterArray {
        EmitterArray::new(n, d, s).unwrap()
    }

    fn xi(v: f64) -> Deformation {
        Deformation::new(v).unwrap()
    }

    fn enumerate() -> EngineConfig {
        EngineConfig::with_engine(Engine::Enumerate)
    }

    fn minors() -> EngineConfig {
        EngineConfig::with_engine(Engine::PermanentMinors)
    }

    /// `𝓑`, `𝓒` straight from the unscaled permutation weights
    /// `exp[Σ_l μ̃_l μ̃_σ(l) / (4 s²)]`, as a check on the reweighting.
    fn literal_terms(n: usize, d: f64, s: f64, x: f64) -> (f64, f64) {
        let mu: Vec<f64> = (1..=n)
            .map(|j| (j as f64 - (n as f64 + 1.0) / 2.0) * x * d)
            .collect();
        let dmu: Vec<f64> = (1..=n)
            .map(|j| (j as f64 - (n as f64 + 1.0) / 2.0) * x)
            .collect();
        let (mut den, mut bn, mut cn) = (0.0, 0.0, 0.0);
        for p in (0..n).permutations(n) {
            let e = (0..n).map(|l| mu[l] * mu[p[l]]).sum::<f64>() / (4.0 * s * s);
            let w = e.exp();
            den += w;
            bn += w * (0..n).map(|j| dmu[j] * (mu[j] + mu[p[j]])).sum::<f64>();
            let diag: f64 = (0..n)
                .map(|j| dmu[j] * dmu[p[j]] * ((mu[j] + mu[p[j]]).powi(2) + 4.0 * s * s))
                .sum();
            let mut off = 0.0;
            for j in 0..n {
                for k in 0..n {
                    if j != k {
                        off += dmu[p[j]] * dmu[k] * (mu[j] + mu[p[j]]) * (mu[k] + mu[p[k]]);
                    }
                }
            }
            cn += w * (diag + off);
        }
        (bn / (4.0 * s * s * den), cn / (16.0 * s.powi(4) * den))
    }

    #[test]
    fn pair_overlap_matrix_values() {
        let w = PairOverlapMatrix::new(&arr(2, 1.0, 1.0), &xi(1.0));
        assert!(rel_diff(w.get(0, 1), (-1.0f64 / 8.0).exp()) < 1e-15);
        assert!((w.get(0, 1) - 0.8825).abs() < 1e-4);
        assert_eq!(w.get(0, 0), 1.0);

        let far = PairOverlapMatrix::new(&arr(4, 1e3, 1.0), &xi(1.0));
        assert_eq!(far.entries(), &SquareMatrix::identity(4));
        assert!(far.log_entries()[(0, 3)].is_finite());

        let collapsed = PairOverlapMatrix::new(&arr(3, 1.0, 1.0), &xi(0.0));
        assert_eq!(collapsed.entries(), &SquareMatrix::from_fn(3, |_, _| 1.0));

        let w = PairOverlapMatrix::new(&arr(5, 0.7, 0.3), &xi(2.0));
        let nn = (-(2.0f64 * 0.7).powi(2) / (8.0 * 0.09)).exp();
        for j in 0..4 {
            assert!(rel_diff(w.get(j, j + 1), nn) < 1e-14);
            for k in 0..5 {
                assert_eq!(w.get(j, k), w.get(k, j));
                assert!(w.get(j, k) > 0.0 && w.get(j, k) <= 1.0);
            }
        }
    }

    #[test]
    fn norm_special_cases() {
        for cfg in [enumerate(), minors()] {
            let far = PairOverlapMatrix::new(&arr(4, 1e3, 1.0), &xi(1.0));
            assert_eq!(perm_sum_norm(&far, &cfg).unwrap(), 1.0);
            let ones = PairOverlapMatrix::new(&arr(3, 1.0, 1.0), &xi(0.0));
            assert!(rel_diff(perm_sum_norm(&ones, &cfg).unwrap(), 6.0) < 1e-14);
            let two = PairOverlapMatrix::new(&arr(2, 1.0, 1.0), &xi(1.0));
            let w = two.get(0, 1);
            assert!(rel_diff(perm_sum_norm(&two, &cfg).unwrap(), 1.0 + w * w) < 1e-15);
        }
    }

    #[test]
    fn reweighting_matches_literal_formulas() {
        for (n, d, s, x) in [
            (2, 1.0, 1.0, 1.0),
            (3, 0.4, 0.5, 1.5),
            (3, 1.1, 0.7, 2.0),
            (4, 0.3, 0.3, 2.0),
        ] {
            let (b, c) = literal_terms(n, d, s, x);
            for cfg in [enumerate(), minors()] {
                let t = overlap_terms(&arr(n, d, s), &xi(x), &cfg).unwrap();
                assert!(rel_diff(t.term_b, b) < 1e-12, "B n={n} d={d}");
                assert!(rel_diff(t.term_c, c) < 1e-12, "C n={n} d={d}");
                let direct = 4.0 * (c - b * b);
                assert!(
                    rel_diff(t.qfi, direct) < 1e-9,
                    "QFI n={n} d={d}: {} vs {direct}",
                    t.qfi
                );
            }
        }
    }

    #[test]
    fn two_source_hand_enumeration() {
        // N = 2, d = s = ξ = 1: μ̃ = (-1/2, 1/2), μ̃' = (-1/2, 1/2), w = e^{-1/8}
        let w = (-0.125f64).exp();
        let w2 = w * w;
        let norm = 1.0 + w2;
        // identity: Σ μ̃'_j 2μ̃_j = 1; swap: μ̃_j + μ̃_σ(j) = 0
        let b = (1.0 * 1.0 + w2 * 0.0) / (4.0 * norm);
        // identity: Σ μ̃'_j² (4μ̃_j² + 4) + cross 2·μ̃'_1μ̃'_2·4μ̃_1μ̃_2 = 2.5 + 0.5 = 3
        // swap: diag Σ μ̃'_j μ̃'_σ(j)·4 = -2; cross terms vanish
        let c = (3.0 - 2.0 * w2) / (16.0 * norm);
        for cfg in [enumerate(), minors()] {
            let t = overlap_terms(&arr(2, 1.0, 1.0), &xi(1.0), &cfg).unwrap();
            assert!(rel_diff(t.term_b, b) < 1e-15);
            assert!(rel_diff(t.term_c, c) < 1e-15);
            assert!(rel_diff(t.qfi, 4.0 * (c - b * b)) < 1e-12);
        }
    }

    #[test]
    fn clear_separation_limits() {
        let s = 1.0;
        for n in 1..=6 {
            let a = arr(n, 50.0, s);
            let t = overlap_terms(&a, &xi(1.0), &enumerate()).unwrap();
            let sum_sq: f64 = crate::geometry::sum_sq_derivatives(n);
            // identity-only: 𝓑 = Σ_j μ̃'_j μ̃_j / (2 s²) = ξ² d Σ μ'² / (2 s²)
            assert!(rel_diff(t.term_b, 50.0 * sum_sq / 2.0) < 1e-12);
            let spe = qfi_spe(&a, &xi(1.0)).value;
            assert!(rel_diff(t.qfi, spe) < 1e-12);
        }
        let t = overlap_terms(&arr(2, 1e4, 1.0), &xi(1.0), &minors()).unwrap();
        assert!(rel_diff(4.0 * (t.term_c - t.term_b * t.term_b), 0.5) < 1e-4);
        assert!(rel_diff(t.qfi, 0.5) < 1e-14);
    }

    #[test]
    fn single_source_is_zero() {
        for cfg in [enumerate(), minors()] {
            let t = overlap_terms(&arr(1, 1.0, 1.0), &xi(1.0), &cfg).unwrap();
            assert_eq!(t.term_b, 0.0);
            assert_eq!(t.term_c, 0.0);
            assert_eq!(
                qfi_overlap(&arr(1, 1.0, 1.0), &xi(1.0), &cfg)
                    .unwrap()
                    .value,
                0.0
            );
        }
    }

    #[test]
    fn engine_limits() {
        let a = arr(12, 1.0, 1.0);
        assert!(matches!(
            qfi_overlap(&a, &xi(1.0), &enumerate()),
            Err(Error::EngineLimit { max: 11, .. })
        ));
        assert_eq!(EngineConfig::for_sources(7).engine, Engine::Enumerate);
        assert_eq!(EngineConfig::for_sources(8).engine, Engine::PermanentMinors);
    }

    #[test]
    fn engines_agree_on_grid() {
        for n in 1..=7 {
            for ratio in [0.1, 0.5, 1.0, 2.0, 5.0] {
                for x in [1.0, 2.0] {
                    let a = arr(n, ratio * 0.3, 0.3);
                    let e = overlap_terms(&a, &xi(x), &enumerate()).unwrap();
                    let p = overlap_terms(&a, &xi(x), &minors()).unwrap();
                    assert!(rel_diff(e.norm, p.norm) < 1e-10, "norm n={n} d/s={ratio}");
                    assert!(rel_diff(e.term_b, p.term_b) < 1e-10, "B n={n} d/s={ratio}");
                    assert!(rel_diff(e.term_c, p.term_c) < 1e-10, "C n={n} d/s={ratio}");
                    assert!(rel_diff(e.qfi, p.qfi) < 1e-10, "QFI n={n} d/s={ratio}");
                }
            }
        }
    }

    #[test]
    fn deterministic_runs_are_bit_identical() {
        let a = arr(7, 0.25, 0.3);
        let cfg = enumerate();
        let first = qfi_overlap(&a, &xi(2.0), &cfg).unwrap();
        for threads in [1, 2, 5] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let again = pool.install(|| qfi_overlap(&a, &xi(2.0), &cfg).unwrap());
            assert_eq!(first.value.to_bits(), again.value.to_bits());
            assert_eq!(first.diagnostics, again.diagnostics);
        }
    }

    #[test]
    fn small_spacing_suppresses_information() {
        for n in 2..=6 {
            let a = arr(n, 0.05 * 0.3, 0.3);
            let v = qfi_overlap(&a, &xi(1.0), &enumerate()).unwrap().value;
            assert!(v.is_finite() && v >= 0.0);
            assert!(v < qfi_spe(&a, &xi(1.0)).value);
        }
    }

    #[test]
    fn clear_separation_convergence() {
        for n in 2..=6 {
            let cfg = EngineConfig::for_sources(n);
            for (d, x) in [(1.2, 2.0), (1.8, 1.0), (3.0, 1.0)] {
                let a = arr(n, d, 0.3);
                let v = qfi_overlap(&a, &xi(x), &cfg).unwrap().value;
                let spe = qfi_spe(&a, &xi(x)).value;
                assert!(rel_diff(v, spe) < 5e-3, "n={n} d={d} xi={x}");
            }
        }
    }

    #[test]
    fn unit_stretch_at_four_sigma_still_overlaps() {
        // Neighbouring overlap exp(-2) at ξd = 4s shifts the two-source QFI by
        // about 10%; the fidelity route sees the same shift.
        let a = arr(2, 4.0, 1.0);
        let v = qfi_overlap(&a, &xi(1.0), &enumerate()).unwrap().value;
        let spe = qfi_spe(&a, &xi(1.0)).value;
        assert!(rel_diff(v, spe) > 0.05);
        let fid =
            crate::oracle::fidelity_qfi(&a, &xi(1.0), &crate::oracle::default_steps(1.0)).unwrap();
        assert!(rel_diff(v, fid.qfi_estimate) < 1e-6);
    }

    #[test]
    fn eight_sources_default_to_permanents() {
        let a = arr(8, 0.5, 0.3);
        let cfg = EngineConfig::for_sources(8);
        let p = qfi_overlap(&a, &xi(2.0), &cfg).unwrap();
        assert_eq!(p.method, Method::OverlapPermanentMinors);
        let e = qfi_overlap(&a, &xi(2.0), &enumerate()).unwrap();
        assert!(rel_diff(p.value, e.value) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn engines_agree_random(n in 2usize..=6, ratio in 0.05f64..6.0, x in 0.5f64..2.5) {
            let a = arr(n, ratio * 0.3, 0.3);
            let e = qfi_overlap(&a, &xi(x), &enumerate()).unwrap();
            let p = qfi_overlap(&a, &xi(x), &minors()).unwrap();
            prop_assert!(rel_diff(e.value, p.value) < 1e-10);
            prop_assert!(e.value >= 0.0);
        }

        #[test]
        fn two_source_norm_monotone(d1 in 0.01f64..5.0, step in 0.0f64..1.0) {
            let n1 = perm_sum_norm(&PairOverlapMatrix::new(&arr(2, d1, 1.0), &xi(1.0)), &enumerate()).unwrap();
            let n2 = perm_sum_norm(&PairOverlapMatrix::new(&arr(2, d1 + step, 1.0), &xi(1.0)), &enumerate()).unwrap();
            prop_assert!(n1 >= 1.0 && n2 >= 1.0);
            prop_assert!(n2 <= n1);
        }
    }
}
