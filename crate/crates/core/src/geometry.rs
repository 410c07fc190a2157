//! Array geometry: expected source positions, their homogeneous stretch and
//! the spacing derivatives every QFI formula is built from.
//!
//! Sources are indexed `1..=N` in reported output; slices returned here are
//! 0-based with element `j - 1` holding source `j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` identical Gaussian emitters with spacing `d` and standard deviation `s`,
/// centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterArray {
    n_sources: usize,
    spacing: f64,
    sigma: f64,
}

impl EmitterArray {
    pub fn new(n_sources: usize, spacing: f64, sigma: f64) -> Result<Self> {
        if n_sources == 0 {
            return Err(Error::InvalidArray("n_sources must be at least 1".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidArray(format!(
                "spacing must be finite and > 0, got {spacing}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidArray(format!(
                "sigma must be finite and > 0, got {sigma}"
            )));
        }
        Ok(Self {
            n_sources,
            spacing,
            sigma,
        })
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Same array with a different spacing.
    pub fn with_spacing(&self, spacing: f64) -> Result<Self> {
        Self::new(self.n_sources, spacing, self.sigma)
    }
}

/// Homogeneous stretch of the array about its centre by factor `ξ ≥ 0`.
///
/// In QFI formulas the stretch enters through the factor `ξ` itself (not
/// `ξ - 1`), so `ξ = 1` is the undeformed array and `ξ = 0` collapses every
/// source onto the centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    stretch: f64,
}

impl Deformation {
    pub fn new(stretch: f64) -> Result<Self> {
        if !stretch.is_finite() {
            return Err(Error::InvalidDeformation(format!(
                "stretch must be finite, got {stretch}"
            )));
        }
        if stretch < 0.0 {
            return Err(Error::InvalidDeformation(format!(
                "stretch must be non-negative (a negative factor is a reflection), got {stretch}"
            )));
        }
        Ok(Self { stretch })
    }

    pub fn identity() -> Self {
        Self { stretch: 1.0 }
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }
}

impl Default for Deformation {
    fn default() -> Self {
        Self::identity()
    }
}

/// `μ'_j = j - (N+1)/2`, the dimensionless derivative of each position with
/// respect to the spacing. Values are exact half-integers.
pub fn position_derivatives(n_sources: usize) -> Vec<f64> {
    let centre = (n_sources as f64 + 1.0) / 2.0;
    (1..=n_sources).map(|j| j as f64 - centre).collect()
}

/// `μ_j = μ'_j · d`. Mirror-image sources are exact negatives of each other,
/// so the positions sum to zero exactly.
pub fn source_positions(array: &EmitterArray) -> Vec<f64> {
    position_derivatives(array.n_sources)
        .into_iter()
        .map(|m| m * array.spacing)
        .collect()
}

/// `μ̃_j = ξ · μ_j`.
pub fn deformed_positions(array: &EmitterArray, def: &Deformation) -> Vec<f64> {
    deformed_positions_at(array, def, array.spacing)
}

/// Stretched positions of the same array evaluated at another spacing.
pub fn deformed_positions_at(array: &EmitterArray, def: &Deformation, spacing: f64) -> Vec<f64> {
    position_derivatives(array.n_sources)
        .into_iter()
        .map(|m| def.stretch * m * spacing)
        .collect()
}

/// `∂_d μ̃_j = ξ μ'_j`.
pub fn deformed_derivatives(n_sources: usize, def: &Deformation) -> Vec<f64> {
    position_derivatives(n_sources)
        .into_iter()
        .map(|m| def.stretch * m)
        .collect()
}

/// `Σ_j μ'_j² = N(N² - 1)/12`.
pub fn sum_sq_derivatives(n_sources: usize) -> f64 {
    let n = n_sources as u128;
    // N(N²-1) is a product of three consecutive integers, hence divisible by 6;
    // keep the remaining /2 in floating point.
    let sixth = (n - 1) * n * (n + 1) / 6;
    sixth as f64 / 2.0
}

/// Pairwise sum from both ends towards the centre, so that symmetric
/// sequences cancel exactly.
pub fn symmetric_sum(values: &[f64]) -> f64 {
    let n = values.len();
    let mut total = 0.0;
    for i in 0..n / 2 {
        total += values[i] + values[n - 1 - i];
    }
    if n % 2 == 1 {
        total += values[n / 2];
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arr(n: usize, d: f64, s: f64) -> EmitterArray {
        EmitterArray::new(n, d, s).unwrap()
    }

    #[test]
    fn positions_n4_d15() {
        assert_eq!(
            source_positions(&arr(4, 15.0, 2.0)),
            vec![-22.5, -7.5, 7.5, 22.5]
        );
    }

    #[test]
    fn positions_small_arrays() {
        assert_eq!(source_positions(&arr(1, 5.0, 1.0)), vec![0.0]);
        assert_eq!(source_positions(&arr(3, 2.0, 1.0)), vec![-2.0, 0.0, 2.0]);
    }

    #[test]
    fn stretched_positions() {
        let a = arr(4, 15.0, 2.0);
        let two = Deformation::new(2.0).unwrap();
        assert_eq!(deformed_positions(&a, &two), vec![-45.0, -15.0, 15.0, 45.0]);
        assert_eq!(
            deformed_positions(&a, &Deformation::identity()),
            source_positions(&a)
        );
        let zero = Deformation::new(0.0).unwrap();
        assert!(deformed_positions(&a, &zero).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn derivatives() {
        assert_eq!(position_derivatives(2), vec![-0.5, 0.5]);
        assert_eq!(position_derivatives(5), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let sq: f64 = position_derivatives(4).iter().map(|m| m * m).sum();
        assert_eq!(sq, 5.0);
    }

    #[test]
    fn sum_sq_values() {
        assert_eq!(sum_sq_derivatives(1), 0.0);
        assert_eq!(sum_sq_derivatives(4), 5.0);
        // brute force: 2 * (0.25 + 2.25 + 6.25 + 12.25 + 20.25)
        assert_eq!(sum_sq_derivatives(10), 82.5);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(EmitterArray::new(0, 1.0, 1.0).is_err());
        assert!(EmitterArray::new(2, 0.0, 1.0).is_err());
        assert!(EmitterArray::new(2, 1.0, -1.0).is_err());
        assert!(EmitterArray::new(2, f64::INFINITY, 1.0).is_err());
        assert!(EmitterArray::new(2, 1.0, f64::NAN).is_err());
        assert!(Deformation::new(-0.5).is_err());
        assert!(Deformation::new(f64::NAN).is_err());
        assert!(Deformation::new(0.0).is_ok());
    }

    #[test]
    fn sum_sq_matches_brute_force_exactly_up_to_50() {
        for n in 1..=50 {
            let brute: f64 = position_derivatives(n).iter().map(|m| m * m).sum();
            assert_eq!(sum_sq_derivatives(n), brute, "N = {n}");
        }
    }

    proptest! {
        #[test]
        fn centred_and_homogeneous(n in 1usize..60, d in 1e-3f64..1e3, xi in 0.0f64..10.0) {
            let a = arr(n, d, 1.0);
            let def = Deformation::new(xi).unwrap();
            prop_assert_eq!(symmetric_sum(&source_positions(&a)), 0.0);
            prop_assert_eq!(symmetric_sum(&position_derivatives(n)), 0.0);
            let mu = deformed_positions(&a, &def);
            for w in mu.windows(2) {
                let gap = w[1] - w[0];
                prop_assert!((gap - xi * d).abs() <= 1e-12 * (1.0 + xi * d * n as f64));
            }
        }

        #[test]
        fn sum_sq_large_n(n in 50usize..5000) {
            let brute: f64 = position_derivatives(n).iter().map(|m| m * m).sum();
            let closed = sum_sq_derivatives(n);
            prop_assert!((brute - closed).abs() <= 1e-12 * closed);
        }
    }
}
