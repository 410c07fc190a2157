//! Near-field photon counting: its classical Fisher information, the pure
//! state SLD and the first two moments of the optimal estimator built from it.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    deformed_derivatives, deformed_positions, position_derivatives, Deformation, EmitterArray,
};

pub const MIN_QUADRATURE_POINTS: usize = 32;
pub const MIN_HALF_WIDTH: f64 = 8.0;
/// Successive quadrature refinements may differ by at most this fraction.
pub const QUADRATURE_REFINEMENT_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Gauss-Legendre nodes per source dimension.
    pub points: usize,
    /// Half-width of the integration window in units of `s`.
    pub half_width: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            points: 64,
            half_width: 10.0,
        }
    }
}

/// Photon counting with one detected position per source.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingModel {
    array: EmitterArray,
    def: Deformation,
    quadrature: Quadrature,
}

impl CountingModel {
    pub fn new(array: EmitterArray, def: Deformation, quadrature: Quadrature) -> Result<Self> {
        if quadrature.points < MIN_QUADRATURE_POINTS {
            return Err(Error::InvalidModel(format!(
                "quadrature needs at least {MIN_QUADRATURE_POINTS} points, got {}",
                quadrature.points
            )));
        }
        if !(quadrature.half_width >= MIN_HALF_WIDTH && quadrature.half_width.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "quadrature half-width must be at least {MIN_HALF_WIDTH} s, got {}",
                quadrature.half_width
            )));
        }
        Ok(Self {
            array,
            def,
            quadrature,
        })
    }

    pub fn with_default_quadrature(array: EmitterArray, def: Deformation) -> Self {
        Self {
            array,
            def,
            quadrature: Quadrature::default(),
        }
    }

    pub fn array(&self) -> &EmitterArray {
        &self.array
    }

    pub fn deformation(&self) -> &Deformation {
        &self.def
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }
}

fn gaussian_density(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// `Π_j |f(x_j, μ̃_j)|²`, one detected position per source.
pub fn photon_count_pdf(model: &CountingModel, positions: &[f64]) -> Result<f64> {
    let n = model.array.n_sources();
    if positions.len() != n {
        return Err(Error::InvalidArray(format!(
            "expected {n} detected positions, got {}",
            positions.len()
        )));
    }
    let s = model.array.sigma();
    Ok(deformed_positions(&model.array, &model.def)
        .iter()
        .zip(positions)
        .map(|(&mu, &x)| gaussian_density(x, mu, s))
        .product())
}

fn integrate_per_source(
    model: &CountingModel,
    points: usize,
    integrand: impl Fn(usize, f64) -> f64,
) -> Vec<f64> {
    let degree =
        NonZeroUsize::new(points).expect("quadrature point count is validated as positive");
    let rule = GaussLegendre::new(degree);
    let s = model.array.sigma();
    let half = model.quadrature.half_width * s;
    deformed_positions(&model.array, &model.def)
        .iter()
        .enumerate()
        .map(|(j, &mu)| rule.integrate(mu - half, mu + half, |x| integrand(j, x)))
        .collect()
}

/// Per-source integrals of the marginal densities; each should be one.
pub fn pdf_marginal_norms(model: &CountingModel) -> Vec<f64> {
    let s = model.array.sigma();
    let mu = deformed_positions(&model.array, &model.def);
    integrate_per_source(model, model.quadrature.points, |j, x| {
        gaussian_density(x, mu[j], s)
    })
}

fn cfi_terms(model: &CountingModel, points: usize) -> Vec<f64> {
    let s = model.array.sigma();
    let s4 = s.powi(4);
    let mu = deformed_positions(&model.array, &model.def);
    let dmu = deformed_derivatives(model.array.n_sources(), &model.def);
    integrate_per_source(model, points, |j, x| {
        let score = (x - mu[j]) * dmu[j];
        gaussian_density(x, mu[j], s) * score * score / s4
    })
}

fn refined(model: &CountingModel) -> Result<Vec<f64>> {
    let coarse = cfi_terms(model, model.quadrature.points);
    let fine = cfi_terms(model, 2 * model.quadrature.points);
    let (c, f): (f64, f64) = (coarse.iter().sum(), fine.iter().sum());
    let scale = c.abs().max(f.abs());
    if scale > 0.0 {
        let change = (c - f).abs() / scale;
        if change > QUADRATURE_REFINEMENT_TOLERANCE {
            return Err(Error::QuadratureDivergence {
                relative_change: change,
            });
        }
    }
    Ok(fine)
}

/// Fisher information of each source's detected position; they add up to
/// the total because the density factorises.
pub fn cfi_contributions(model: &CountingModel) -> Result<Vec<f64>> {
    refined(model)
}

/// Classical Fisher information `∫ (∂_d p)² / p` of near-field photon
/// counting, as a sum of one-dimensional Gauss-Legendre integrals.
pub fn cfi_quadrature(model: &CountingModel) -> Result<f64> {
    Ok(refined(model)?.iter().sum())
}

/// Moments of the optimal counting estimator `O = d·1 + Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorMoments {
    /// `⟨O⟩ - d`.
    pub mean_bias: f64,
    /// `⟨O²⟩ - ⟨O⟩²`.
    pub variance: f64,
}

/// First two moments of `O = d·1 + Q` on the single-photon state, where
/// `Q = c (|U⟩⟨Ψ| + |Ψ⟩⟨U|)`, `c = 12 / (ξ² N (N² - 1))` and
/// `|U⟩ = Σ_j μ'_j ∫ dx f(x) (x_j - μ_j) |x⟩` uses the unstretched centres.
///
/// With `a = ⟨Ψ|U⟩ = Σ_j μ'_j (μ̃_j - μ_j)` and
/// `⟨U|U⟩ = s² Σ_j μ'_j² + a²`, the moments are `⟨Q⟩ = 2ca` and
/// `⟨Q²⟩ = c² (⟨U|U⟩ + 3a²)`. Only `ξ = 1` is accepted.
pub fn estimator_moments(array: &EmitterArray, def: &Deformation) -> Result<EstimatorMoments> {
    if def.stretch() != 1.0 {
        return Err(Error::UnsupportedStretch(def.stretch()));
    }
    let n = array.n_sources();
    if n < 2 {
        return Err(Error::DegenerateArray {
            n_sources: n,
            required: 2,
        });
    }
    let nf = n as f64;
    let xi = def.stretch();
    let c = 12.0 / (xi * xi * nf * (nf * nf - 1.0));
    let s2 = array.sigma() * array.sigma();
    let dmu = position_derivatives(n);
    let stretched = deformed_positions(array, def);
    let a: f64 = dmu
        .iter()
        .zip(&stretched)
        .map(|(&m, &mt)| m * (mt - m * array.spacing()))
        .sum();
    let u_norm = s2 * dmu.iter().map(|m| m * m).sum::<f64>() + a * a;
    let mean_q = 2.0 * c * a;
    let mean_q2 = c * c * (u_norm + 3.0 * a * a);
    Ok(EstimatorMoments {
        mean_bias: mean_q,
        variance: mean_q2 - mean_q * mean_q,
    })
}

/// Pure-state SLD `L = 2(|Ψ'⟩⟨Ψ| + |Ψ⟩⟨Ψ'|)` in the orthonormal basis
/// `{|Ψ⟩, |e_1⟩, …, |e_N⟩}`, where `|e_j⟩` replaces the photon of source `j`
/// by the first Hermite-Gauss excitation of its mode. In that basis
/// `|Ψ'⟩ = Σ_j μ̃'_j / (2s) |e_j⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PureSld {
    /// Coefficients of `|Ψ⟩` (the first basis vector).
    pub state: Vec<f64>,
    /// Coefficients of `∂_d |Ψ⟩`.
    pub derivative: Vec<f64>,
}

impl PureSld {
    pub fn dim(&self) -> usize {
        self.state.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let on_state = dot(&self.state, v);
        let on_derivative = dot(&self.derivative, v);
        self.derivative
            .iter()
            .zip(&self.state)
            .map(|(&dp, &p)| 2.0 * (dp * on_state + p * on_derivative))
            .collect()
    }

    /// `⟨Ψ|L|Ψ⟩`.
    pub fn expectation(&self) -> f64 {
        self.apply(&self.state)
            .iter()
            .zip(&self.state)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `⟨Ψ|L²|Ψ⟩ = ‖L|Ψ⟩‖²`, equal to the QFI of the pure state.
    pub fn expectation_sq(&self) -> f64 {
        self.apply(&self.state).iter().map(|x| x * x).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.derivative.iter().all(|&x| x == 0.0)
    }
}

pub fn sld_pure(array: &EmitterArray, def: &Deformation) -> PureSld {
    let n = array.n_sources();
    let s = array.sigma();
    let mut state = vec![0.0; n + 1];
    state[0] = 1.0;
    let derivative = std::iter::once(0.0)
        .chain(
            deformed_derivatives(n, def)
                .into_iter()
                .map(|m| m / (2.0 * s)),
        )
        .collect();
    PureSld { state, derivative }
}
