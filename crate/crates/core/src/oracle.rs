//! Independent numerical routes to the quantities computed analytically
//! elsewhere in the crate: fidelity finite differences for the overlap QFI,
//! explicitly truncated photon-number series, and generator moments of the
//! NOON-like optimal state.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{deformed_positions, deformed_positions_at, Deformation, EmitterArray};
use crate::numeric::log_sum_exp;
use crate::overlap::{permanent, SquareMatrix};

/// Largest array whose state overlap is enumerated permutation by permutation.
pub const MAX_OVERLAP_ENUMERATE: usize = 7;
/// Largest array accepted by the cross-permanent route.
pub const MAX_OVERLAP_SOURCES: usize = 20;
/// Default finite-difference ladder in units of `s`.
pub const DEFAULT_STEP_LADDER: [f64; 3] = [1e-3, 5e-4, 2.5e-4];
/// Successive fidelity estimates may differ by at most this fraction.
pub const MAX_STEP_CHANGE: f64 = 0.1;
/// Bound on the neglected tail of the truncated series oracles.
pub const SERIES_TAIL_BOUND: f64 = 1e-12;

const TAIL_SCAN_LIMIT: usize = 100_000;

/// Result of a fidelity finite-difference estimate of the QFI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityEstimate {
    pub base_spacing: f64,
    /// Smallest step of the ladder.
    pub step: f64,
    /// `F(d, d + step)`.
    pub fidelity: f64,
    pub qfi_estimate: f64,
    /// Number of extrapolation levels applied.
    pub richardson_order: usize,
    /// `8(1 - F(d, d + δ))/δ²` for every step, in ladder order.
    pub raw_estimates: Vec<f64>,
}

fn cross_log_overlaps(a: &[f64], b: &[f64], sigma: f64) -> SquareMatrix {
    let scale = 8.0 * sigma * sigma;
    SquareMatrix::from_fn(a.len(), |j, k| {
        let diff = a[j] - b[k];
        -(diff * diff) / scale
    })
}

fn log_permanent(log_entries: &SquareMatrix) -> Result<f64> {
    let n = log_entries.dim();
    if n <= MAX_OVERLAP_ENUMERATE {
        let terms: Vec<f64> = (0..n)
            .permutations(n)
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(j, &k)| log_entries[(j, k)])
                    .sum()
            })
            .collect();
        return Ok(log_sum_exp(&terms));
    }
    // Row-wise scaling keeps the largest entry of every row at one.
    let row_max: Vec<f64> = (0..n)
        .map(|j| {
            log_entries
                .row(j)
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let scaled = SquareMatrix::from_fn(n, |j, k| (log_entries[(j, k)] - row_max[j]).exp());
    let perm = permanent(&scaled, true)?;
    Ok(perm.ln() + row_max.iter().sum::<f64>())
}

/// `⟨Ψ(d1)|Ψ(d2)⟩` for `N` single photons, normalised; real and in `(0, 1]`.
///
/// Exactly one when `d1 == d2`.
pub fn state_overlap(array: &EmitterArray, def: &Deformation, d1: f64, d2: f64) -> Result<f64> {
    let n = array.n_sources();
    if n > MAX_OVERLAP_SOURCES {
        return Err(Error::EngineLimit {
            engine: "state-overlap",
            n_sources: n,
            max: MAX_OVERLAP_SOURCES,
        });
    }
    for d in [d1, d2] {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidArray(format!(
                "spacing must be finite and positive, got {d}"
            )));
        }
    }
    if d1 == d2 {
        return Ok(1.0);
    }
    let s = array.sigma();
    let a = deformed_positions_at(array, def, d1);
    let b = deformed_positions_at(array, def, d2);
    let ln_cross = log_permanent(&cross_log_overlaps(&a, &b, s))?;
    let ln_a = log_permanent(&cross_log_overlaps(&a, &a, s))?;
    let ln_b = log_permanent(&cross_log_overlaps(&b, &b, s))?;
    let overlap = (ln_cross - 0.5 * (ln_a + ln_b)).exp();
    Ok(overlap.min(1.0))
}

/// The default ladder `{1e-3, 5e-4, 2.5e-4} · s`.
pub fn default_steps(sigma: f64) -> Vec<f64> {
    DEFAULT_STEP_LADDER.iter().map(|f| f * sigma).collect()
}

/// Polynomial extrapolation to `h = 0` through the points `(h_i, y_i)`.
pub fn neville_at_zero(h: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (hi, hj) = (h[i], h[i + level]);
            p[i] = (hi * p[i + 1] - hj * p[i]) / (hi - hj);
        }
    }
    p[0]
}

/// QFI from the pure-state fidelity, `8(1 - F(d, d + δ))/δ²`, extrapolated
/// to `δ → 0` over the supplied ladder.
///
/// The leading error is linear in `δ`, so a ladder of `k` steps removes the
/// first `k - 1` error orders.
pub fn fidelity_qfi(
    array: &EmitterArray,
    def: &Deformation,
    steps: &[f64],
) -> Result<FidelityEstimate> {
    let d = array.spacing();
    if steps.len() < 2 {
        return Err(Error::InvalidSteps(format!(
            "at least two steps are needed for extrapolation, got {}",
            steps.len()
        )));
    }
    if steps
        .iter()
        .any(|&h| !(h.is_finite() && h > 0.0 && h < d / 10.0))
    {
        return Err(Error::InvalidSteps(format!(
            "steps must be positive and below d/10 = {}, got {steps:?}",
            d / 10.0
        )));
    }
    if steps.iter().tuple_combinations().any(|(a, b)| a == b) {
        return Err(Error::InvalidSteps(format!(
            "steps must be distinct, got {steps:?}"
        )));
    }

    let mut fidelities = Vec::with_capacity(steps.len());
    let mut raw = Vec::with_capacity(steps.len());
    for &h in steps {
        let f = state_overlap(array, def, d, d + h)?;
        fidelities.push(f);
        // 1 - F from the log keeps digits when F is within 1e-8 of one.
        let one_minus = if f >= 1.0 { 0.0 } else { -f.ln().exp_m1() };
        raw.push(8.0 * one_minus / (h * h));
    }
    for (a, b) in raw.iter().tuple_windows() {
        let scale = a.abs().max(b.abs());
        if scale > 0.0 {
            let change = (a - b).abs() / scale;
            if change > MAX_STEP_CHANGE {
                return Err(Error::StepTooLarge {
                    relative_change: change,
                });
            }
        }
    }
    let estimate = neville_at_zero(steps, &raw).max(0.0);
    let smallest = steps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(FidelityEstimate {
        base_spacing: d,
        step: steps[smallest],
        fidelity: fidelities[smallest],
        qfi_estimate: estimate,
        richardson_order: steps.len() - 1,
        raw_estimates: raw,
    })
}

/// Sums `term(n)` for `n = 0..=n_max` and bounds the neglected tail by
/// summing onwards until the terms vanish.
fn truncated_series(n_max: usize, log_term: impl Fn(usize) -> Option<f64>) -> Result<f64> {
    let term = |n: usize| log_term(n).map_or(0.0, f64::exp);
    let total: f64 = (0..=n_max).map(term).sum();
    let mut tail = 0.0;
    let mut converged = false;
    for n in n_max + 1..n_max + TAIL_SCAN_LIMIT {
        let t = term(n);
        tail += t;
        if t <= f64::MIN_POSITIVE || (n > n_max + 8 && t < 1e-18 * tail) {
            converged = true;
            break;
        }
    }
    let tolerance = SERIES_TAIL_BOUND * total.max(1.0);
    if !converged || tail > tolerance {
        return Err(Error::TruncationTooSmall {
            n_max,
            tail: if converged { tail } else { f64::INFINITY },
            tolerance,
        });
    }
    Ok(total)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `Σ_{n ≤ n_max} e^{-r²} r^{2n} n² / n!`, the second moment of a Poisson
/// photon number with mean `r²`.
pub fn poisson_moment_oracle(r: f64, n_max: usize) -> Result<f64> {
    if !r.is_finite() {
        return Err(Error::InvalidModel(format!(
            "amplitude must be finite, got {r}"
        )));
    }
    let lambda = r * r;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    truncated_series(n_max, |n| {
        (n > 0).then(|| -lambda + n as f64 * lambda.ln() - ln_factorial(n) + 2.0 * (n as f64).ln())
    })
}

/// `Σ_{n ≤ n_max} n² n̄^n / (1 + n̄)^{n+1}`, the second moment of a thermal
/// photon number with mean `n̄`.
pub fn thermal_series_oracle(mean_photons: f64, n_max: usize) -> Result<f64> {
    if !(mean_photons.is_finite() && mean_photons >= 0.0) {
        return Err(Error::InvalidModel(format!(
            "mean photon number must be finite and non-negative, got {mean_photons}"
        )));
    }
    if mean_photons == 0.0 {
        return Ok(0.0);
    }
    let ln_ratio = (mean_photons / (1.0 + mean_photons)).ln();
    let ln_norm = -(1.0 + mean_photons).ln();
    truncated_series(n_max, |n| {
        (n > 0).then(|| ln_norm + n as f64 * ln_ratio + 2.0 * (n as f64).ln())
    })
}

/// Generator-variance evaluation for the NOON-like state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoonOracle {
    /// `4 Var(G)` with both branches treated as orthogonal.
    pub value: f64,
    /// Single-photon overlap `exp[-(μ̃_N - μ̃_1)² / (8 s²)]` between the two
    /// branch modes; not applied to `value`.
    pub branch_overlap: f64,
}

/// `4 Var(G)` on `(|N at source 1⟩ + |N at source N⟩)/√2`.
///
/// Each branch holds `N` photons in one Gaussian mode with zero mean momentum
/// and per-photon momentum variance `1/(4 s²)`. With
/// `G = ξ Σ_j μ'_j ∫ dk k n_j(k)`, each branch has `⟨G⟩ = 0` and
/// `⟨G²⟩ = ξ² μ'_edge² N / (4 s²)` with `|μ'_edge| = (N - 1)/2`, and `G`
/// does not couple the branches. The result is `ξ² N (N - 1)² / (4 s²)`.
pub fn noon_variance_oracle(array: &EmitterArray, def: &Deformation) -> Result<NoonOracle> {
    let n = array.n_sources();
    if n < 2 {
        return Err(Error::DegenerateArray {
            n_sources: n,
            required: 2,
        });
    }
    let s2 = array.sigma() * array.sigma();
    let xi = def.stretch();
    let edge = (n as f64 - 1.0) / 2.0;
    let photon_momentum_variance = 1.0 / (4.0 * s2);
    let branch_second_moment = xi * xi * edge * edge * n as f64 * photon_momentum_variance;
    let variance = 0.5 * branch_second_moment + 0.5 * branch_second_moment;

    let mu = deformed_positions(array, def);
    let span = mu[n - 1] - mu[0];
    Ok(NoonOracle {
        value: 4.0 * variance,
        branch_overlap: (-(span * span) / (8.0 * s2)).exp(),
    })
}
