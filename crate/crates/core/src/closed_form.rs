//! Closed-form QFI for every source class when the sources are mutually
//! independent (`d ≫ s`), together with the QCRB and the cross-class ratios.
//!
//! Convention: the QFI is `4 Var(G)` for pure states, and the bound on the
//! variance of any unbiased estimator of `d` after `ν` repetitions is
//! `1 / (ν · QFI)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{position_derivatives, sum_sq_derivatives, Deformation, EmitterArray};
use crate::oracle;

/// Relative tolerance on the neglected tail of truncated photon-number series.
pub const SERIES_TAIL_TOLERANCE: f64 = 1e-12;

/// Default Fock truncation for coherent sources.
pub const DEFAULT_COHERENT_TRUNCATION: usize = 40;

/// Diagnostics key recording the factor between `Var(G)` and the QFI.
pub const CONVENTION_KEY: &str = "qfi_over_generator_variance";

/// Mean thermal photon numbers, shared by all sources or given per source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanPhotons {
    Shared(f64),
    PerSource(Vec<f64>),
}

impl MeanPhotons {
    fn resolve(&self, n_sources: usize) -> Result<Vec<f64>> {
        let values = match self {
            MeanPhotons::Shared(v) => vec![*v; n_sources],
            MeanPhotons::PerSource(v) => {
                if v.len() != n_sources {
                    return Err(Error::InvalidModel(format!(
                        "thermal mean photon list has {} entries for {} sources",
                        v.len(),
                        n_sources
                    )));
                }
                v.clone()
            }
        };
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidModel(format!(
                "thermal mean photon numbers must be finite and >= 0, got {bad}"
            )));
        }
        Ok(values)
    }
}

/// Light emitted by every source of the array.
///
/// Coherent sources carry no phase: the QFI does not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceModel {
    Spe,
    Coherent { amplitude: f64, truncation: usize },
    Thermal { mean_photons: MeanPhotons },
    EntangledOddEven { weight: f64 },
    OptimalNoon,
}

impl SourceModel {
    pub fn coherent(amplitude: f64) -> Self {
        SourceModel::Coherent {
            amplitude,
            truncation: DEFAULT_COHERENT_TRUNCATION,
        }
    }

    pub fn thermal(mean_photons: f64) -> Self {
        SourceModel::Thermal {
            mean_photons: MeanPhotons::Shared(mean_photons),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SourceModel::Spe => "spe",
            SourceModel::Coherent { .. } => "coherent",
            SourceModel::Thermal { .. } => "thermal",
            SourceModel::EntangledOddEven { .. } => "entangled-odd-even",
            SourceModel::OptimalNoon => "optimal",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SourceModel::Coherent {
                amplitude,
                truncation,
            } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "coherent amplitude must be finite and >= 0, got {amplitude}"
                    )));
                }
                if *truncation < 1 {
                    return Err(Error::InvalidModel(
                        "coherent truncation must be >= 1".into(),
                    ));
                }
            }
            SourceModel::Thermal { mean_photons } => {
                if let MeanPhotons::Shared(v) = mean_photons {
                    if !(v.is_finite() && *v >= 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "thermal mean photon number must be finite and >= 0, got {v}"
                        )));
                    }
                }
            }
            SourceModel::EntangledOddEven { weight } => {
                if !(0.0..=1.0).contains(weight) {
                    return Err(Error::InvalidModel(format!(
                        "entangled weight p must lie in [0, 1], got {weight}"
                    )));
                }
            }
            SourceModel::Spe | SourceModel::OptimalNoon => {}
        }
        Ok(())
    }
}

/// Which operation produced a [`QfiResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Spe,
    CoherentSeries,
    CoherentLattice,
    CoherentLimit,
    Thermal,
    EntangledOddEven,
    Optimal,
    OverlapEnumerate,
    OverlapPermanentMinors,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Spe => "spe-closed-form",
            Method::CoherentSeries => "coherent-series",
            Method::CoherentLattice => "coherent-lattice",
            Method::CoherentLimit => "coherent-limit",
            Method::Thermal => "thermal-closed-form",
            Method::EntangledOddEven => "entangled-odd-even",
            Method::Optimal => "optimal-noon",
            Method::OverlapEnumerate => "overlap-enumerate",
            Method::OverlapPermanentMinors => "overlap-permanent-minors",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A QFI value (units 1/length²) with the operation that produced it and any
/// named intermediate quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfiResult {
    pub value: f64,
    pub method: Method,
    pub diagnostics: BTreeMap<String, f64>,
}

impl QfiResult {
    pub fn new(value: f64, method: Method) -> Self {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert(CONVENTION_KEY.to_string(), 4.0);
        Self {
            value,
            method,
            diagnostics,
        }
    }

    pub fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }
}

fn stretch_over_sigma_sq(array: &EmitterArray, def: &Deformation) -> f64 {
    let xi = def.stretch();
    xi * xi / (array.sigma() * array.sigma())
}

/// `ξ² N(N²-1) / (12 s²)`.
pub fn qfi_spe(array: &EmitterArray, def: &Deformation) -> QfiResult {
    let value = stretch_over_sigma_sq(array, def) * sum_sq_derivatives(array.n_sources());
    QfiResult::new(value, Method::Spe)
}

/// Upper bound on `Σ_{n > n_max} e^{-λ} λ^n n² / n!`, or `None` when the
/// term ratio has not yet dropped below one at `n_max`.
pub fn poisson_second_moment_tail(lambda: f64, n_max: usize) -> Option<f64> {
    if lambda == 0.0 {
        return Some(0.0);
    }
    let m = (n_max + 1) as f64;
    // t_{n+1}/t_n = λ(n+1)/n², decreasing for n ≥ 1
    let ratio = lambda * (m + 1.0) / (m * m);
    if ratio >= 1.0 {
        return None;
    }
    let ln_fact: f64 = (2..=n_max + 1).map(|k| (k as f64).ln()).sum();
    let ln_first = -lambda + m * lambda.ln() + 2.0 * m.ln() - ln_fact;
    Some(ln_first.exp() / (1.0 - ratio))
}

/// Truncated `E[n²]` of a Poisson distribution with mean `λ`, summed with a
/// running term recursion.
fn poisson_second_moment(lambda: f64, n_max: usize) -> Result<f64> {
    let tail = poisson_second_moment_tail(lambda, n_max).unwrap_or(f64::INFINITY);
    let exact = lambda + lambda * lambda;
    if tail > SERIES_TAIL_TOLERANCE * exact {
        return Err(Error::TruncationTooSmall {
            n_max,
            tail,
            tolerance: SERIES_TAIL_TOLERANCE * exact,
        });
    }
    let mut term = (-lambda).exp();
    let mut total = 0.0;
    for n in 1..=n_max {
        term *= lambda / n as f64;
        total += term * (n * n) as f64;
    }
    Ok(total)
}

/// Coherent-state QFI from the per-source factorisation of the photon-number
/// sum: `(ξ²/s²) Σ_k μ'_k² E[n_k²]` with every `E[n²]` truncated at `n_max`.
pub fn qfi_coherent_series(
    array: &EmitterArray,
    def: &Deformation,
    model: &SourceModel,
) -> Result<QfiResult> {
    let (amplitude, truncation) = coherent_params(model)?;
    let lambda = amplitude * amplitude;
    let second = poisson_second_moment(lambda, truncation)?;
    let tail = poisson_second_moment_tail(lambda, truncation).unwrap_or(f64::INFINITY);
    let value = stretch_over_sigma_sq(array, def) * sum_sq_derivatives(array.n_sources()) * second;
    Ok(QfiResult::new(value, Method::CoherentSeries)
        .with_diagnostic("mean_n_squared", second)
        .with_diagnostic("tail_bound", tail))
}

/// The literal `N`-fold photon-number lattice sum, for cross-checking the
/// factorised series on small arrays (`N ≤ 3`).
pub fn qfi_coherent_lattice(
    array: &EmitterArray,
    def: &Deformation,
    model: &SourceModel,
) -> Result<QfiResult> {
    let (amplitude, truncation) = coherent_params(model)?;
    let n = array.n_sources();
    if n > 3 {
        return Err(Error::EngineLimit {
            engine: "coherent lattice",
            n_sources: n,
            max: 3,
        });
    }
    let lambda = amplitude * amplitude;
    // r^{2n}/n! for n = 0..=n_max
    let mut weights = Vec::with_capacity(truncation + 1);
    let mut w = 1.0;
    weights.push(w);
    for k in 1..=truncation {
        w *= lambda / k as f64;
        weights.push(w);
    }
    let mu_prime = position_derivatives(n);
    let mut occupation = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let weight: f64 = occupation.iter().map(|&k| weights[k]).product();
        let moment: f64 = occupation
            .iter()
            .zip(&mu_prime)
            .map(|(&k, m)| m * m * (k * k) as f64)
            .sum();
        total += weight * moment;
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == n {
                let value =
                    stretch_over_sigma_sq(array, def) * (-(n as f64) * lambda).exp() * total;
                return Ok(QfiResult::new(value, Method::CoherentLattice));
            }
            occupation[pos] += 1;
            if occupation[pos] <= truncation {
                break;
            }
            occupation[pos] = 0;
            pos += 1;
        }
    }
}

fn coherent_params(model: &SourceModel) -> Result<(f64, usize)> {
    model.validate()?;
    match model {
        SourceModel::Coherent {
            amplitude,
            truncation,
        } => Ok((*amplitude, *truncation)),
        other => Err(Error::InvalidModel(format!(
            "expected a coherent model, got {}",
            other.name()
        ))),
    }
}

/// Unit-mean-photon (`r² = 1`) coherent QFI, `ξ² N(N²-1) / (6 s²)`.
pub fn qfi_coherent_limit(array: &EmitterArray, def: &Deformation) -> QfiResult {
    let value = 2.0 * stretch_over_sigma_sq(array, def) * sum_sq_derivatives(array.n_sources());
    QfiResult::new(value, Method::CoherentLimit)
}

/// Thermal (blackbody) QFI `(ξ²/s²) Σ_j μ'_j² n̄_j (1 + 2 n̄_j)`.
pub fn qfi_thermal(
    array: &EmitterArray,
    def: &Deformation,
    model: &SourceModel,
) -> Result<QfiResult> {
    let mean_photons = match model {
        SourceModel::Thermal { mean_photons } => mean_photons.resolve(array.n_sources())?,
        other => {
            return Err(Error::InvalidModel(format!(
                "expected a thermal model, got {}",
                other.name()
            )))
        }
    };
    let sum: f64 = position_derivatives(array.n_sources())
        .iter()
        .zip(&mean_photons)
        .map(|(m, nbar)| m * m * nbar * (1.0 + 2.0 * nbar))
        .sum();
    Ok(QfiResult::new(
        stretch_over_sigma_sq(array, def) * sum,
        Method::Thermal,
    ))
}

/// Single photons from either the odd- or the even-indexed sources with
/// weights `p` and `1 - p`.
pub fn qfi_entangled_odd_even(
    array: &EmitterArray,
    def: &Deformation,
    model: &SourceModel,
) -> Result<QfiResult> {
    model.validate()?;
    let weight = match model {
        SourceModel::EntangledOddEven { weight } => *weight,
        other => {
            return Err(Error::InvalidModel(format!(
                "expected an entangled odd/even model, got {}",
                other.name()
            )))
        }
    };
    let n = array.n_sources();
    if n < 2 {
        return Err(Error::DegenerateArray {
            n_sources: n,
            required: 2,
        });
    }
    let (mut odd, mut even) = (0.0, 0.0);
    for (idx, m) in position_derivatives(n).iter().enumerate() {
        // reported index j = idx + 1
        if idx % 2 == 0 {
            odd += m * m;
        } else {
            even += m * m;
        }
    }
    let value = stretch_over_sigma_sq(array, def) * (weight * odd + (1.0 - weight) * even);
    Ok(QfiResult::new(value, Method::EntangledOddEven)
        .with_diagnostic("odd_sum", odd)
        .with_diagnostic("even_sum", even))
}

/// NOON-like optimal state: `ξ² N²(N-1)² / (4 s²)`.
///
/// The generator-moment oracle value is attached under `oracle_noon`; the two
/// are reported side by side and are not expected to coincide.
pub fn qfi_optimal(array: &EmitterArray, def: &Deformation) -> Result<QfiResult> {
    let n = array.n_sources();
    if n < 2 {
        log::warn!("optimal state needs two distinct extremal sources; N = {n} gives QFI 0");
        return Ok(QfiResult::new(0.0, Method::Optimal));
    }
    let nf = n as f64;
    let scale = def.stretch() * nf * (nf - 1.0);
    let value = scale * scale / (4.0 * array.sigma() * array.sigma());
    let noon = oracle::noon_variance_oracle(array, def)?;
    Ok(QfiResult::new(value, Method::Optimal)
        .with_diagnostic("oracle_noon", noon.value)
        .with_diagnostic("oracle_branch_overlap", noon.branch_overlap))
}

/// Dispatch on the source model. Coherent sources use the truncated series.
pub fn qfi_closed(
    array: &EmitterArray,
    def: &Deformation,
    model: &SourceModel,
) -> Result<QfiResult> {
    model.validate()?;
    match model {
        SourceModel::Spe => Ok(qfi_spe(array, def)),
        SourceModel::Coherent { .. } => qfi_coherent_series(array, def, model),
        SourceModel::Thermal { .. } => qfi_thermal(array, def, model),
        SourceModel::EntangledOddEven { .. } => qfi_entangled_odd_even(array, def, model),
        SourceModel::OptimalNoon => qfi_optimal(array, def),
    }
}

/// Quantum Cramér-Rao bound `1 / (ν · QFI)` on the variance of `d`.
pub fn qcrb(qfi: &QfiResult, repetitions: u64) -> Result<f64> {
    if repetitions == 0 {
        return Err(Error::InvalidModel("repetitions must be >= 1".into()));
    }
    if !(qfi.value.is_finite() && qfi.value >= 0.0) {
        return Err(Error::NumericalBreakdown(format!(
            "QFI must be finite and non-negative, got {}",
            qfi.value
        )));
    }
    if qfi.value == 0.0 {
        return Err(Error::ZeroInformation);
    }
    Ok(1.0 / (repetitions as f64 * qfi.value))
}

/// QFI of each source class divided by the single-photon QFI.
///
/// Keys: `entangled_odd_even` (p = 1/2), `spe`, `coherent_limit`,
/// `thermal` (n̄ = 1) and `optimal`.
pub fn ratio_summary(array: &EmitterArray, def: &Deformation) -> Result<BTreeMap<String, f64>> {
    let n = array.n_sources();
    if n < 2 {
        return Err(Error::DegenerateArray {
            n_sources: n,
            required: 2,
        });
    }
    let spe = qfi_spe(array, def).value;
    if spe == 0.0 {
        return Err(Error::ZeroInformation);
    }
    let entangled =
        qfi_entangled_odd_even(array, def, &SourceModel::EntangledOddEven { weight: 0.5 })?.value;
    let coherent = qfi_coherent_limit(array, def).value;
    let thermal = qfi_thermal(array, def, &SourceModel::thermal(1.0))?.value;
    let optimal = qfi_optimal(array, def)?.value;
    let mut out = BTreeMap::new();
    out.insert("entangled_odd_even".to_string(), entangled / spe);
    out.insert("spe".to_string(), 1.0);
    out.insert("coherent_limit".to_string(), coherent / spe);
    out.insert("thermal".to_string(), thermal / spe);
    out.insert("optimal".to_string(), optimal / spe);
    Ok(out)
}
