//! Permutation-group identities satisfied by the centred source positions,
//! checked by brute force over every `σ ∈ S_N`.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::position_derivatives;

/// Largest array the suite enumerates.
pub const MAX_IDENTITY_SOURCES: usize = 7;

const RELATIVE_TOLERANCE: f64 = 1e-12;
const CENTRED_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub evaluations: usize,
    /// Largest deviation seen, relative to the scale of the summands.
    pub max_deviation: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub n_sources: usize,
    pub spacing: f64,
    pub permutations: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.max_deviation <= c.tolerance)
    }
}

struct Tracker {
    check: IdentityCheck,
}

impl Tracker {
    fn new(identity: &str, tolerance: f64) -> Self {
        Self {
            check: IdentityCheck {
                identity: identity.to_string(),
                evaluations: 0,
                max_deviation: 0.0,
                tolerance,
            },
        }
    }

    fn compare(&mut self, lhs: f64, rhs: f64, scale: f64, perm: &[usize]) -> Result<()> {
        let deviation = if scale > 0.0 {
            (lhs - rhs).abs() / scale
        } else {
            (lhs - rhs).abs()
        };
        self.check.evaluations += 1;
        self.check.max_deviation = self.check.max_deviation.max(deviation);
        if deviation.is_nan() || deviation > self.check.tolerance {
            return Err(Error::IdentityViolation {
                identity: self.check.identity.clone(),
                permutation: perm.to_vec(),
                deviation,
            });
        }
        Ok(())
    }
}

type NamedFn = (&'static str, fn(f64) -> f64);

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (j, &p) in perm.iter().enumerate() {
        inv[p] = j;
    }
    inv
}

fn abs_sum(values: impl Iterator<Item = f64>) -> f64 {
    values.map(f64::abs).sum()
}

/// Enumerates `S_N` and checks, for the positions `μ_j = (j - (N+1)/2) d`:
///
/// - `perm-invariance[G]`: `Σ_j G(μ_σ(j)) = Σ_j G(μ_j)` for `G ∈ {x, x², exp}`;
/// - `derivative-pairing`: `Σ_j μ'_σ(j) μ_σ(j) = Σ_j μ'_j μ_j`;
/// - `inverse-sum`: `Σ_σ Σ_j μ'_j (x_σ(j) - μ_j) = Σ_σ Σ_j μ'_j (x_σ⁻¹(j) - μ_j)`
///   for a fixed probe vector `x`;
/// - `shift`: `Σ_j μ'_j (x_σ⁻¹(j) - μ_j) = Σ_j μ'_σ(j) (x_j - μ_σ(j))` per `σ`,
///   and the corresponding totals over `σ`;
/// - `centred-cross-sum`: `Σ_σ Σ_j μ_j μ_σ(j) = 0`, scaled by
///   `(N-1)! · max|μ|²`.
///
/// The first failing identity aborts the suite with
/// [`Error::IdentityViolation`].
pub fn appendix_a_identity_suite(n_sources: usize, spacing: f64) -> Result<IdentityReport> {
    if n_sources == 0 {
        return Err(Error::InvalidArray(
            "at least one source is required".into(),
        ));
    }
    if n_sources > MAX_IDENTITY_SOURCES {
        return Err(Error::EngineLimit {
            engine: "identity-suite",
            n_sources,
            max: MAX_IDENTITY_SOURCES,
        });
    }
    if !spacing.is_finite() {
        return Err(Error::InvalidArray(format!(
            "spacing must be finite, got {spacing}"
        )));
    }
    let n = n_sources;
    let dmu = position_derivatives(n);
    let mu: Vec<f64> = dmu.iter().map(|m| m * spacing).collect();
    let probe: Vec<f64> = (0..n)
        .map(|j| 0.37 * spacing + 1.3 * (j as f64).powi(2) - 0.8 * j as f64)
        .collect();

    let functions: [NamedFn; 3] = [
        ("perm-invariance[x]", |x| x),
        ("perm-invariance[x^2]", |x| x * x),
        ("perm-invariance[exp]", f64::exp),
    ];
    let mut invariance: Vec<Tracker> = functions
        .iter()
        .map(|(name, _)| Tracker::new(name, RELATIVE_TOLERANCE))
        .collect();
    let mut pairing = Tracker::new("derivative-pairing", RELATIVE_TOLERANCE);
    let mut shift = Tracker::new("shift", RELATIVE_TOLERANCE);
    let mut inverse_sum = Tracker::new("inverse-sum", RELATIVE_TOLERANCE);
    let mut shift_total = Tracker::new("shift-total", RELATIVE_TOLERANCE);
    let mut centred = Tracker::new("centred-cross-sum", CENTRED_TOLERANCE);

    let direct_pairing: f64 = (0..n).map(|j| dmu[j] * mu[j]).sum();
    let mut totals = [0.0f64; 3];
    let mut total_scale = 0.0;
    let mut cross_total = 0.0;
    let mut permutations = 0usize;
    let identity: Vec<usize> = (0..n).collect();

    for perm in (0..n).permutations(n) {
        permutations += 1;
        let inv = inverse(&perm);

        for ((_, g), tracker) in functions.iter().zip(invariance.iter_mut()) {
            let lhs: f64 = perm.iter().map(|&p| g(mu[p])).sum();
            let rhs: f64 = mu.iter().map(|&m| g(m)).sum();
            tracker.compare(lhs, rhs, abs_sum(mu.iter().map(|&m| g(m))), &perm)?;
        }

        let lhs: f64 = perm.iter().map(|&p| dmu[p] * mu[p]).sum();
        pairing.compare(
            lhs,
            direct_pairing,
            abs_sum((0..n).map(|j| dmu[j] * mu[j])),
            &perm,
        )?;

        let forward: f64 = (0..n).map(|j| dmu[j] * (probe[perm[j]] - mu[j])).sum();
        let backward: f64 = (0..n).map(|j| dmu[j] * (probe[inv[j]] - mu[j])).sum();
        let shifted: f64 = (0..n)
            .map(|j| dmu[perm[j]] * (probe[j] - mu[perm[j]]))
            .sum();
        let scale = abs_sum((0..n).flat_map(|j| [dmu[j] * probe[inv[j]], dmu[j] * mu[j]]));
        shift.compare(backward, shifted, scale, &perm)?;
        totals[0] += forward;
        totals[1] += backward;
        totals[2] += shifted;
        total_scale += scale;

        cross_total += (0..n).map(|j| mu[j] * mu[perm[j]]).sum::<f64>();
    }

    inverse_sum.compare(totals[0], totals[1], total_scale, &identity)?;
    shift_total.compare(totals[0], totals[2], total_scale, &identity)?;

    let factorial: f64 = (1..n).map(|k| k as f64).product();
    let max_mu = mu.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    centred.compare(cross_total, 0.0, factorial * max_mu * max_mu, &identity)?;

    let mut checks: Vec<IdentityCheck> = invariance.into_iter().map(|t| t.check).collect();
    checks.extend(
        [pairing, shift, inverse_sum, shift_total, centred]
            .into_iter()
            .map(|t| t.check),
    );
    Ok(IdentityReport {
        n_sources,
        spacing,
        permutations,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_sources_wide_spacing() {
        let r = appendix_a_identity_suite(4, 15.0).unwrap();
        assert!(r.passed());
        assert_eq!(r.permutations, 24);
        assert_eq!(r.checks.len(), 8);
        assert!(r.checks.iter().all(|c| c.evaluations > 0));
    }

    #[test]
    fn single_source_trivial() {
        let r = appendix_a_identity_suite(1, 3.0).unwrap();
        assert!(r.passed());
        assert_eq!(r.permutations, 1);
        assert!(r.checks.iter().all(|c| c.max_deviation == 0.0));
    }

    #[test]
    fn centred_cross_sum_six_sources() {
        let r = appendix_a_identity_suite(6, 1.0).unwrap();
        let c = r
            .checks
            .iter()
            .find(|c| c.identity == "centred-cross-sum")
            .unwrap();
        assert!(c.max_deviation <= 1e-10);
    }

    #[test]
    fn all_sizes_pass() {
        for n in 1..=7 {
            for d in [0.0, 0.3, 1.0, 15.0] {
                assert!(
                    appendix_a_identity_suite(n, d).unwrap().passed(),
                    "n={n} d={d}"
                );
            }
        }
    }

    #[test]
    fn rejects_large_arrays() {
        assert!(matches!(
            appendix_a_identity_suite(8, 1.0),
            Err(Error::EngineLimit { max: 7, .. })
        ));
        assert!(appendix_a_identity_suite(0, 1.0).is_err());
    }

    #[test]
    fn violation_names_identity() {
        let mut t = Tracker::new("demo", 1e-12);
        let err = t.compare(1.0, 2.0, 1.0, &[1, 0]).unwrap_err();
        assert_eq!(
            err,
            Error::IdentityViolation {
                identity: "demo".into(),
                permutation: vec![1, 0],
                deviation: 1.0
            }
        );
    }
}
