//! The self-check suite: algebraic identities, engine agreement, closed-form
//! ratios and every oracle comparison, each with its tolerance.

use std::io::Write;

use emitter_qfi::closed_form::qfi_optimal;
use emitter_qfi::closed_form::{qfi_spe, ratio_summary};
use emitter_qfi::estimator::{cfi_quadrature, estimator_moments, sld_pure, CountingModel};
use emitter_qfi::numeric::rel_diff;
use emitter_qfi::oracle::{
    default_steps, fidelity_qfi, noon_variance_oracle, poisson_moment_oracle, thermal_series_oracle,
};
use emitter_qfi::overlap::identities::{appendix_a_identity_suite, MAX_IDENTITY_SOURCES};
use emitter_qfi::overlap::qfi_overlap;
use emitter_qfi::overlap::vev::appendix_b_vev_suite;
use emitter_qfi::{Deformation, EmitterArray, Engine, EngineConfig, Error, Result};
use serde::Serialize;

use crate::args::CheckArgs;
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::write_json;

pub const DEFAULT_MAX_N: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    /// `None` for informational entries that never fail.
    pub tolerance: Option<f64>,
    pub deviation: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckOutcome {
    fn measured(name: impl Into<String>, tolerance: f64, deviation: f64) -> Self {
        Self {
            name: name.into(),
            tolerance: Some(tolerance),
            deviation,
            passed: deviation <= tolerance,
            error: None,
        }
    }

    fn info(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            tolerance: None,
            deviation: value,
            passed: true,
            error: None,
        }
    }

    fn from_result(name: impl Into<String>, tolerance: f64, result: Result<f64>) -> Self {
        match result {
            Ok(dev) => Self::measured(name, tolerance, dev),
            Err(e) => Self {
                name: name.into(),
                tolerance: Some(tolerance),
                deviation: f64::NAN,
                passed: false,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub max_n: usize,
    pub negated: bool,
    pub checks: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect()
    }
}

fn arr(n: usize, d: f64, s: f64) -> Result<EmitterArray> {
    EmitterArray::new(n, d, s)
}

fn max_of(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    values.into_iter().try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

fn identity_checks(max_n: usize) -> Vec<CheckOutcome> {
    let mut worst: Vec<(String, f64, f64)> = Vec::new();
    for n in 1..=max_n.min(MAX_IDENTITY_SOURCES) {
        for d in [1.0, 15.0] {
            match appendix_a_identity_suite(n, d) {
                Ok(report) => {
                    for c in report.checks {
                        match worst.iter_mut().find(|w| w.0 == c.identity) {
                            Some(w) => w.2 = w.2.max(c.max_deviation),
                            None => worst.push((c.identity, c.tolerance, c.max_deviation)),
                        }
                    }
                }
                Err(e) => {
                    return vec![CheckOutcome::from_result(
                        format!("identity/n={n}/d={d}"),
                        0.0,
                        Err(e),
                    )];
                }
            }
        }
    }
    worst
        .into_iter()
        .map(|(name, tol, dev)| CheckOutcome::measured(format!("identity/{name}"), tol, dev))
        .collect()
}

fn vev_checks() -> Vec<CheckOutcome> {
    (1..=4)
        .map(|n| {
            let result = appendix_b_vev_suite(n, 5).map(|r| {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                let nf = n as f64;
                let suite = r.checks.iter().fold(0.0f64, |m, c| m.max(c.max_deviation));
                suite
                    .max(rel_diff(r.number_factor, fact * nf))
                    .max(rel_diff(r.number_squared_factor, fact * nf * nf))
            });
            CheckOutcome::from_result(format!("vev/n={n}"), 1e-12, result)
        })
        .collect()
}

fn engine_equivalence(max_n: usize) -> CheckOutcome {
    let s = 0.3;
    let result = max_of((1..=max_n.min(7)).flat_map(|n| {
        [0.1, 0.5, 1.0, 2.0, 5.0]
            .into_iter()
            .flat_map(move |ratio| {
                [1.0, 2.0].into_iter().map(move |x| {
                    let a = arr(n, ratio * s, s)?;
                    let def = Deformation::new(x)?;
                    let e = qfi_overlap(&a, &def, &EngineConfig::with_engine(Engine::Enumerate))?;
                    let p = qfi_overlap(
                        &a,
                        &def,
                        &EngineConfig::with_engine(Engine::PermanentMinors),
                    )?;
                    Ok(rel_diff(e.value, p.value))
                })
            })
    }));
    CheckOutcome::from_result("overlap/engine-equivalence", 1e-10, result)
}

fn ratio_check() -> CheckOutcome {
    let expected = [
        ("entangled_odd_even", 0.5),
        ("spe", 1.0),
        ("coherent_limit", 2.0),
        ("thermal", 3.0),
    ];
    let result = max_of((2..=10).map(|n| {
        let ratios = ratio_summary(&arr(n, 1.0, 0.3)?, &Deformation::new(2.0)?)?;
        Ok(expected
            .iter()
            .map(|(k, v)| rel_diff(ratios[*k], *v))
            .fold(0.0f64, f64::max))
    }));
    CheckOutcome::from_result("closed-form/ratio-law", 1e-12, result)
}

fn clear_separation_check(max_n: usize) -> CheckOutcome {
    let result = max_of((2..=max_n.clamp(2, 5)).map(|n| {
        let a = arr(n, 1.2, 0.3)?;
        let def = Deformation::new(2.0)?;
        let v = qfi_overlap(&a, &def, &EngineConfig::for_sources(n))?.value;
        Ok(rel_diff(v, qfi_spe(&a, &def).value))
    }));
    CheckOutcome::from_result("overlap/clear-separation", 5e-3, result)
}

fn fidelity_check(max_n: usize) -> CheckOutcome {
    let result = max_of((2..=max_n.clamp(2, 4)).flat_map(|n| {
        [0.5, 1.0, 2.0].into_iter().map(move |d| {
            let a = arr(n, d, 1.0)?;
            let def = Deformation::identity();
            let est = fidelity_qfi(&a, &def, &default_steps(1.0))?;
            let exact = qfi_overlap(&a, &def, &EngineConfig::for_sources(n))?.value;
            Ok(rel_diff(est.qfi_estimate, exact))
        })
    }));
    CheckOutcome::from_result("oracle/fidelity", 1e-3, result)
}

fn series_checks() -> Vec<CheckOutcome> {
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
    let poisson = max_of(
        grid.iter()
            .map(|&r| Ok((poisson_moment_oracle(r, 80)? - (r * r + r.powi(4))).abs())),
    );
    let thermal = max_of(
        grid.iter()
            .map(|r| r * 1.5)
            .map(|nbar| Ok((thermal_series_oracle(nbar, 250)? - nbar * (1.0 + 2.0 * nbar)).abs())),
    );
    vec![
        CheckOutcome::from_result("oracle/poisson-series", 1e-10, poisson),
        CheckOutcome::from_result("oracle/thermal-series", 1e-10, thermal),
    ]
}

fn counting_checks() -> Vec<CheckOutcome> {
    let cfi = max_of((2..=6).flat_map(|n| {
        [1.0, 2.0].into_iter().map(move |x| {
            let a = arr(n, 1.0, 0.3)?;
            let def = Deformation::new(x)?;
            let spe = qfi_spe(&a, &def).value;
            Ok(rel_diff(
                cfi_quadrature(&CountingModel::with_default_quadrature(a, def))?,
                spe,
            ))
        })
    }));
    let saturation = max_of((2..=6).map(|n| {
        let a = arr(n, 15.0, 2.0)?;
        let def = Deformation::identity();
        let m = estimator_moments(&a, &def)?;
        Ok((m.variance * qfi_spe(&a, &def).value - 1.0).abs())
    }));
    let bias = max_of((2..=6).map(|n| {
        let a = arr(n, 15.0, 2.0)?;
        Ok(estimator_moments(&a, &Deformation::identity())?
            .mean_bias
            .abs()
            / 15.0)
    }));
    let sld = max_of((1..=8).map(|n| {
        let a = arr(n, 1.0, 0.3)?;
        let def = Deformation::new(2.0)?;
        let l = sld_pure(&a, &def);
        let spe = qfi_spe(&a, &def).value;
        let scale = spe.max(1.0);
        Ok((l.expectation().abs() / scale).max((l.expectation_sq() - spe).abs() / scale))
    }));
    vec![
        CheckOutcome::from_result("estimator/cfi-equals-qfi", 1e-6, cfi),
        CheckOutcome::from_result("estimator/variance-times-qfi", 1e-8, saturation),
        CheckOutcome::from_result("estimator/bias", 1e-12, bias),
        CheckOutcome::from_result("estimator/sld-moments", 1e-10, sld),
    ]
}

fn noon_report() -> Vec<CheckOutcome> {
    let ratio = || -> Result<(f64, f64)> {
        let a = arr(4, 15.0, 0.3)?;
        let def = Deformation::new(2.0)?;
        let oracle = noon_variance_oracle(&a, &def)?;
        let formula = qfi_optimal(&a, &def)?.value;
        Ok((formula, formula / oracle.value))
    };
    match ratio() {
        Ok((formula, r)) => vec![
            CheckOutcome::measured("optimal/formula-n4", 1e-12, rel_diff(formula, 1600.0)),
            CheckOutcome::info("optimal/formula-over-oracle-n4", r),
        ],
        Err(e) => vec![CheckOutcome::from_result(
            "optimal/formula-n4",
            1e-12,
            Err::<f64, Error>(e),
        )],
    }
}

/// Runs the suite. Enumeration-heavy checks stop at `max_n` sources.
pub fn run_checks(max_n: usize) -> CheckReport {
    let mut checks = identity_checks(max_n);
    checks.extend(vev_checks());
    checks.push(engine_equivalence(max_n));
    checks.push(clear_separation_check(max_n));
    checks.push(ratio_check());
    checks.push(fidelity_check(max_n));
    checks.extend(series_checks());
    checks.extend(counting_checks());
    checks.extend(noon_report());
    CheckReport {
        max_n,
        negated: false,
        checks,
    }
}

fn negate(report: &mut CheckReport) {
    report.negated = true;
    for c in report.checks.iter_mut() {
        c.passed = !c.passed;
    }
}

fn write_text<W: Write>(out: &mut W, report: &CheckReport) -> CliResult<()> {
    for c in &report.checks {
        let status = if c.tolerance.is_none() {
            "INFO"
        } else if c.passed {
            "PASS"
        } else {
            "FAIL"
        };
        let tolerance = c
            .tolerance
            .map_or_else(|| "-".to_string(), |t| format!("{t:.1e}"));
        write!(
            out,
            "{status} {:<40} deviation={:.3e} tolerance={tolerance}",
            c.name, c.deviation
        )?;
        if let Some(e) = &c.error {
            write!(out, " error=\"{e}\"")?;
        }
        writeln!(out)?;
    }
    let failures = report.failures();
    writeln!(
        out,
        "{} checks, {} failed",
        report.checks.len(),
        failures.len()
    )?;
    Ok(())
}

pub fn cmd_check<W: Write>(args: &CheckArgs, config: &Config, out: &mut W) -> CliResult<()> {
    let max_n = config.pick(args.max_n, "max-n", DEFAULT_MAX_N)?;
    if max_n < 1 {
        return Err(CliError::Usage("--max-n must be at least 1".into()));
    }
    let mut report = run_checks(max_n);
    if config.pick_switch(args.self_test_negate, "self-test-negate")? {
        negate(&mut report);
    }
    if args.json {
        write_json(&mut *out, &serde_json::to_value(&report)?)?;
    } else {
        write_text(out, &report)?;
    }
    if let Some(path) = &args.report {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
        write_json(
            std::io::BufWriter::new(file),
            &serde_json::to_value(&report)?,
        )?;
    }
    let failures = report.failures();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(failures))
    }
}
