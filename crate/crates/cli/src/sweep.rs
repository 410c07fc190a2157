//! Grids over the spacing `d` or the array size `N`. Grid points run on the
//! rayon pool; records always come back in grid order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use emitter_qfi::closed_form::qfi_closed;
use emitter_qfi::overlap::qfi_overlap;
use emitter_qfi::{EngineConfig, SourceModel};
use rayon::prelude::*;

use crate::args::{ClosedModel, SweepArgs, SweepModel, SweepVariable};
use crate::commands::{record, resolve_engine, resolve_source, Geometry, Reporting};
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::{write_table, Record};

/// Closed-form models of a size sweep, in the order they are written.
pub const ALL_CLOSED_MODELS: [ClosedModel; 5] = [
    ClosedModel::Optimal,
    ClosedModel::Thermal,
    ClosedModel::Coherent,
    ClosedModel::Spe,
    ClosedModel::EntangledOddEven,
];

#[derive(Debug, Clone, PartialEq)]
pub enum SweepModels {
    Overlap(EngineChoice),
    Closed(Vec<SourceModel>),
}

/// Engine settings of an overlap sweep; `None` picks per array size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineChoice {
    pub fixed: Option<EngineConfig>,
    pub deterministic: bool,
}

impl EngineChoice {
    fn for_sources(&self, n: usize) -> EngineConfig {
        let mut cfg = self.fixed.unwrap_or_else(|| EngineConfig::for_sources(n));
        cfg.deterministic = self.deterministic;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// Absolute spacings, evaluated for each array size.
    Spacing {
        sizes: Vec<usize>,
        spacings: Vec<f64>,
    },
    /// Every array size from `min` to `max` at a fixed spacing.
    Size { min: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub grid: Grid,
    pub models: SweepModels,
    pub geometry: Geometry,
    pub repetitions: u64,
}

/// `steps` evenly spaced points from `min` to `max`, both included.
pub fn linear_grid(min: f64, max: f64, steps: usize) -> Vec<f64> {
    let last = (steps - 1) as f64;
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                max
            } else {
                min + (max - min) * i as f64 / last
            }
        })
        .collect()
}

fn evaluate(spec: &SweepSpec, n: usize, d: f64, model: Option<&SourceModel>) -> CliResult<Record> {
    let (array, def) = spec.geometry.array_at(n, d)?;
    match (&spec.models, model) {
        (SweepModels::Overlap(engine), _) => {
            let result = qfi_overlap(&array, &def, &engine.for_sources(n))?;
            record(d, result, format!("overlap/n={n}"), spec.repetitions)
        }
        (SweepModels::Closed(_), Some(source)) => {
            let result = qfi_closed(&array, &def, source)?;
            let (param, name) = match spec.grid {
                Grid::Spacing { .. } => (d, format!("{}/n={n}", source.name())),
                Grid::Size { .. } => (n as f64, source.name().to_string()),
            };
            record(param, result, name, spec.repetitions)
        }
        (SweepModels::Closed(_), None) => unreachable!("closed-form tasks always carry a model"),
    }
}

/// Evaluates every grid point; the result is in grid order.
pub fn run_sweep(spec: &SweepSpec) -> CliResult<Vec<Record>> {
    let models: Vec<Option<&SourceModel>> = match &spec.models {
        SweepModels::Overlap(_) => vec![None],
        SweepModels::Closed(list) => list.iter().map(Some).collect(),
    };
    let tasks: Vec<(usize, f64, Option<&SourceModel>)> = match &spec.grid {
        Grid::Spacing { sizes, spacings } => sizes
            .iter()
            .flat_map(|&n| {
                let models = &models;
                models
                    .iter()
                    .flat_map(move |&m| spacings.iter().map(move |&d| (n, d, m)))
            })
            .collect(),
        Grid::Size { min, max } => (*min..=*max)
            .flat_map(|n| models.iter().map(move |&m| (n, spec.geometry.d, m)))
            .collect(),
    };
    tasks
        .par_iter()
        .map(|&(n, d, m)| evaluate(spec, n, d, m))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn closed_models(model: SweepModel) -> Vec<ClosedModel> {
    match model {
        SweepModel::Spe => vec![ClosedModel::Spe],
        SweepModel::Coherent => vec![ClosedModel::Coherent],
        SweepModel::Thermal => vec![ClosedModel::Thermal],
        SweepModel::EntangledOddEven => vec![ClosedModel::EntangledOddEven],
        SweepModel::Optimal => vec![ClosedModel::Optimal],
        SweepModel::All | SweepModel::Overlap => ALL_CLOSED_MODELS.to_vec(),
    }
}

fn integer_bound(value: f64, name: &str) -> CliResult<usize> {
    if value.fract() != 0.0 || value < 1.0 || !value.is_finite() {
        return Err(CliError::Usage(format!(
            "--{name} of a size sweep must be a positive integer, got {value}"
        )));
    }
    Ok(value as usize)
}

/// Resolves flags and configuration into a validated sweep.
pub fn resolve_spec(
    args: &SweepArgs,
    config: &Config,
) -> CliResult<(SweepSpec, Reporting, Option<PathBuf>)> {
    let variable = config.pick(args.variable, "variable", SweepVariable::D)?;
    let geometry = Geometry::resolve(&args.geometry, config)?;
    let reporting = Reporting::resolve(&args.report, config)?;
    let min: f64 = config.pick_required(args.min, "min")?;
    let max: f64 = config.pick_required(args.max, "max")?;
    if min.is_nan() || max.is_nan() || min >= max {
        return Err(CliError::Usage(format!(
            "sweep needs --min < --max, got {min} and {max}"
        )));
    }
    let default_model = match variable {
        SweepVariable::D => SweepModel::Overlap,
        SweepVariable::N => SweepModel::All,
    };
    let model = config.pick(args.model, "model", default_model)?;

    let grid = match variable {
        SweepVariable::D => {
            let steps: usize = config.pick_required(args.steps, "steps")?;
            if steps < 2 {
                return Err(CliError::Usage(format!(
                    "sweep needs --steps >= 2, got {steps}"
                )));
            }
            let scale = if config.pick_switch(args.in_sigma, "in-sigma")? {
                geometry.sigma
            } else {
                1.0
            };
            let (lo, hi) = (min * scale, max * scale);
            if lo.is_nan() || lo <= 0.0 {
                return Err(CliError::Usage(format!(
                    "spacing sweeps need --min > 0, got {min}"
                )));
            }
            let sizes = config.pick_list(args.n.clone(), "n")?;
            if sizes.is_empty() {
                return Err(CliError::Usage(
                    "spacing sweeps need --n (one or more sizes)".into(),
                ));
            }
            Grid::Spacing {
                sizes,
                spacings: linear_grid(lo, hi, steps),
            }
        }
        SweepVariable::N => {
            if model == SweepModel::Overlap {
                return Err(CliError::Usage(
                    "size sweeps use the closed-form models; choose --model other than overlap"
                        .into(),
                ));
            }
            Grid::Size {
                min: integer_bound(min, "min")?,
                max: integer_bound(max, "max")?,
            }
        }
    };

    let models = if model == SweepModel::Overlap {
        let n_max = match &grid {
            Grid::Spacing { sizes, .. } => sizes.iter().copied().max().unwrap_or(1),
            Grid::Size { max, .. } => *max,
        };
        let explicit = args.engine.engine.is_some() || config.raw("engine").is_some();
        let resolved = resolve_engine(&args.engine, config, n_max)?;
        SweepModels::Overlap(EngineChoice {
            fixed: explicit.then_some(resolved),
            deterministic: resolved.deterministic,
        })
    } else {
        SweepModels::Closed(
            closed_models(model)
                .into_iter()
                .map(|m| resolve_source(m, &args.source, config))
                .collect::<CliResult<_>>()?,
        )
    };
    let output = config.pick_opt(args.output.clone(), "output")?;
    Ok((
        SweepSpec {
            grid,
            models,
            geometry,
            repetitions: reporting.repetitions,
        },
        reporting,
        output,
    ))
}

pub fn cmd_sweep<W: Write>(args: &SweepArgs, config: &Config, out: &mut W) -> CliResult<()> {
    let (spec, reporting, output) = resolve_spec(args, config)?;
    let variable = match spec.grid {
        Grid::Spacing { .. } => "d",
        Grid::Size { .. } => "n",
    };
    let sink = match &output {
        Some(path) => Some(
            File::create(path)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let records = run_sweep(&spec)?;
    match sink {
        Some(file) => {
            let mut writer = BufWriter::new(file);
            write_table(
                &mut writer,
                &records,
                reporting.format,
                reporting.unit,
                variable,
            )?;
            writer.flush()?;
            log::info!(
                "wrote {} records to {}",
                records.len(),
                output.unwrap_or_default().display()
            );
            Ok(())
        }
        None => write_table(out, &records, reporting.format, reporting.unit, variable),
    }
}
