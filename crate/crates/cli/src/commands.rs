//! Single-value subcommands and the argument resolution shared with sweeps.

use std::io::Write;

use emitter_qfi::closed_form::{qfi_closed, DEFAULT_COHERENT_TRUNCATION};
use emitter_qfi::estimator::{cfi_quadrature, estimator_moments, CountingModel};
use emitter_qfi::numeric::rel_diff;
use emitter_qfi::oracle::{
    default_steps, fidelity_qfi, noon_variance_oracle, poisson_moment_oracle, state_overlap,
    thermal_series_oracle,
};
use emitter_qfi::overlap::qfi_overlap;
use emitter_qfi::{
    qcrb, Deformation, EmitterArray, Engine, EngineConfig, Error, MeanPhotons, QfiResult,
    SourceModel,
};
use serde_json::json;

use crate::args::{
    ClosedArgs, ClosedModel, EngineArg, EngineArgs, GeometryArgs, OracleArgs, OracleKind,
    OverlapArgs, ReportArgs, SourceArgs,
};
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::{write_json, write_single, Format, Record, Unit};

pub const DEFAULT_SPACING: f64 = 1.0;
pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_STRETCH: f64 = 1.0;
pub const DEFAULT_AMPLITUDE: f64 = 1.0;
pub const DEFAULT_MEAN_PHOTONS: f64 = 1.0;
pub const DEFAULT_ENTANGLED_WEIGHT: f64 = 0.5;
pub const DEFAULT_POISSON_TRUNCATION: usize = 80;
pub const DEFAULT_THERMAL_TRUNCATION: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub d: f64,
    pub sigma: f64,
    pub stretch: f64,
}

impl Geometry {
    pub fn resolve(args: &GeometryArgs, config: &Config) -> CliResult<Self> {
        Ok(Self {
            d: config.pick(args.d, "d", DEFAULT_SPACING)?,
            sigma: config.pick(args.sigma, "sigma", DEFAULT_SIGMA)?,
            stretch: config.pick(args.stretch, "stretch", DEFAULT_STRETCH)?,
        })
    }

    pub fn array(&self, n: usize) -> CliResult<(EmitterArray, Deformation)> {
        self.array_at(n, self.d)
    }

    pub fn array_at(&self, n: usize, d: f64) -> CliResult<(EmitterArray, Deformation)> {
        Ok((
            EmitterArray::new(n, d, self.sigma)?,
            Deformation::new(self.stretch)?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reporting {
    pub repetitions: u64,
    pub format: Format,
    pub unit: Unit,
}

impl Reporting {
    pub fn resolve(args: &ReportArgs, config: &Config) -> CliResult<Self> {
        let repetitions = config.pick(args.repetitions, "repetitions", 1)?;
        if repetitions == 0 {
            return Err(CliError::Usage("--repetitions must be at least 1".into()));
        }
        Ok(Self {
            repetitions,
            format: config.pick(args.format, "format", Format::Csv)?,
            unit: config.pick(args.unit, "unit", Unit::Arb)?,
        })
    }
}

pub fn resolve_source(
    model: ClosedModel,
    args: &SourceArgs,
    config: &Config,
) -> CliResult<SourceModel> {
    let source = match model {
        ClosedModel::Spe => SourceModel::Spe,
        ClosedModel::Coherent => SourceModel::Coherent {
            amplitude: config.pick(args.amplitude, "amplitude", DEFAULT_AMPLITUDE)?,
            truncation: config.pick(args.truncation, "truncation", DEFAULT_COHERENT_TRUNCATION)?,
        },
        ClosedModel::Thermal => {
            let values = config.pick_list(args.mean_photons.clone(), "mean-photons")?;
            let mean_photons = match values.as_slice() {
                [] => MeanPhotons::Shared(DEFAULT_MEAN_PHOTONS),
                [one] => MeanPhotons::Shared(*one),
                many => MeanPhotons::PerSource(many.to_vec()),
            };
            SourceModel::Thermal { mean_photons }
        }
        ClosedModel::EntangledOddEven => SourceModel::EntangledOddEven {
            weight: config.pick(args.p, "p", DEFAULT_ENTANGLED_WEIGHT)?,
        },
        ClosedModel::Optimal => SourceModel::OptimalNoon,
    };
    source.validate()?;
    Ok(source)
}

pub fn resolve_engine(args: &EngineArgs, config: &Config, n: usize) -> CliResult<EngineConfig> {
    let mut engine = match config.pick_opt(args.engine, "engine")? {
        Some(EngineArg::Enumerate) => EngineConfig::with_engine(Engine::Enumerate),
        Some(EngineArg::Permanent) => EngineConfig::with_engine(Engine::PermanentMinors),
        None => EngineConfig::for_sources(n),
    };
    engine.deterministic = config.pick_switch(args.deterministic, "deterministic")?;
    Ok(engine)
}

/// QCRB for `ν` repetitions; unbounded when the QFI vanishes.
pub fn bound(result: &QfiResult, repetitions: u64) -> CliResult<f64> {
    match qcrb(result, repetitions) {
        Ok(v) => Ok(v),
        Err(Error::ZeroInformation) => Ok(f64::INFINITY),
        Err(e) => Err(e.into()),
    }
}

pub fn record(param: f64, result: QfiResult, model: String, repetitions: u64) -> CliResult<Record> {
    let qcrb = bound(&result, repetitions)?;
    Ok(Record {
        param,
        qfi: result.value,
        qcrb,
        model,
        method: result.method.as_str().to_string(),
        diagnostics: result.diagnostics,
    })
}

fn required_n(flag: Option<usize>, config: &Config) -> CliResult<usize> {
    config.pick_required(flag, "n")
}

pub fn cmd_closed<W: Write>(args: &ClosedArgs, config: &Config, out: &mut W) -> CliResult<()> {
    let model: ClosedModel = config.pick_required(args.model, "model")?;
    let n = required_n(args.n, config)?;
    let geometry = Geometry::resolve(&args.geometry, config)?;
    let reporting = Reporting::resolve(&args.report, config)?;
    let source = resolve_source(model, &args.source, config)?;
    let (array, def) = geometry.array(n)?;
    let result = qfi_closed(&array, &def, &source)?;
    let rec = record(
        geometry.d,
        result,
        source.name().to_string(),
        reporting.repetitions,
    )?;
    write_single(out, &rec, reporting.format, reporting.unit)
}

pub fn cmd_overlap<W: Write>(args: &OverlapArgs, config: &Config, out: &mut W) -> CliResult<()> {
    let n = required_n(args.n, config)?;
    let geometry = Geometry::resolve(&args.geometry, config)?;
    let reporting = Reporting::resolve(&args.report, config)?;
    let engine = resolve_engine(&args.engine, config, n)?;
    let (array, def) = geometry.array(n)?;
    let result = qfi_overlap(&array, &def, &engine)?;
    let rec = record(
        geometry.d,
        result,
        "overlap".to_string(),
        reporting.repetitions,
    )?;
    if reporting.format == Format::Csv {
        for (key, value) in &rec.diagnostics {
            eprintln!("# {key} = {value:.16e}");
        }
    }
    write_single(out, &rec, reporting.format, reporting.unit)
}

pub fn cmd_oracle<W: Write>(args: &OracleArgs, config: &Config, out: &mut W) -> CliResult<()> {
    let geometry = Geometry::resolve(&args.geometry, config)?;
    let n = || required_n(args.n, config);
    let value = match args.kind {
        OracleKind::Fidelity => {
            let (array, def) = geometry.array(n()?)?;
            let steps = if args.steps.is_empty() {
                default_steps(geometry.sigma)
            } else {
                args.steps.clone()
            };
            let estimate = fidelity_qfi(&array, &def, &steps)?;
            let exact = qfi_overlap(&array, &def, &EngineConfig::for_sources(array.n_sources()))?;
            json!({
                "oracle": "fidelity",
                "estimate": estimate,
                "overlap_qfi": exact.value,
                "relative_difference": rel_diff(estimate.qfi_estimate, exact.value),
            })
        }
        OracleKind::StateOverlap => {
            let (array, def) = geometry.array(n()?)?;
            let d2 = config.pick_required(args.d2, "d2")?;
            json!({
                "oracle": "state-overlap",
                "d1": geometry.d,
                "d2": d2,
                "overlap": state_overlap(&array, &def, geometry.d, d2)?,
            })
        }
        OracleKind::Poisson => {
            let r = config.pick(args.source.amplitude, "amplitude", DEFAULT_AMPLITUDE)?;
            let n_max = config.pick(
                args.source.truncation,
                "truncation",
                DEFAULT_POISSON_TRUNCATION,
            )?;
            let value = poisson_moment_oracle(r, n_max)?;
            let closed = r * r + r.powi(4);
            json!({
                "oracle": "poisson",
                "amplitude": r,
                "truncation": n_max,
                "value": value,
                "closed_form": closed,
                "absolute_difference": (value - closed).abs(),
            })
        }
        OracleKind::Thermal => {
            let values = config.pick_list(args.source.mean_photons.clone(), "mean-photons")?;
            let nbar = match values.as_slice() {
                [] => DEFAULT_MEAN_PHOTONS,
                [one] => *one,
                _ => {
                    return Err(CliError::Usage(
                        "thermal oracle takes a single --mean-photons".into(),
                    ))
                }
            };
            let n_max = config.pick(
                args.source.truncation,
                "truncation",
                DEFAULT_THERMAL_TRUNCATION,
            )?;
            let value = thermal_series_oracle(nbar, n_max)?;
            let closed = nbar * (1.0 + 2.0 * nbar);
            json!({
                "oracle": "thermal",
                "mean_photons": nbar,
                "truncation": n_max,
                "value": value,
                "closed_form": closed,
                "absolute_difference": (value - closed).abs(),
            })
        }
        OracleKind::Noon => {
            let (array, def) = geometry.array(n()?)?;
            let oracle = noon_variance_oracle(&array, &def)?;
            let reference = qfi_closed(&array, &def, &SourceModel::OptimalNoon)?.value;
            json!({
                "oracle": "noon",
                "oracle_value": oracle.value,
                "optimal_formula": reference,
                "formula_over_oracle": reference / oracle.value,
                "branch_overlap": oracle.branch_overlap,
            })
        }
        OracleKind::Cfi => {
            let (array, def) = geometry.array(n()?)?;
            let spe = qfi_closed(&array, &def, &SourceModel::Spe)?.value;
            let cfi = cfi_quadrature(&CountingModel::with_default_quadrature(array, def))?;
            json!({
                "oracle": "cfi",
                "cfi": cfi,
                "spe_qfi": spe,
                "relative_difference": rel_diff(cfi, spe),
            })
        }
        OracleKind::Estimator => {
            let (array, def) = geometry.array(n()?)?;
            let moments = estimator_moments(&array, &def)?;
            let spe = qfi_closed(&array, &def, &SourceModel::Spe)?.value;
            json!({
                "oracle": "estimator",
                "mean_bias": moments.mean_bias,
                "variance": moments.variance,
                "variance_times_qfi": moments.variance * spe,
            })
        }
    };
    write_json(out, &value)
}
