//! The four subcommands. Each builds a report and says whether its checks
//! passed; writing it out is left to `main`.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sjq_core::cfield::GridValue;
use sjq_core::diagnostics::{run_suite, Check, SuiteConfig};
use sjq_core::fock::{weyl_generator, FockTruncation};
use sjq_core::io::{parse_covector_list, read_text, to_json_string};
use sjq_core::kahler::{polar_decompose, KahlerResiduals, STRUCTURE_TOL};
use sjq_core::linalg::c;
use sjq_core::pipeline::{sj_summary, sj_summary_of, SjSummary, SjTolerances};
use sjq_core::sj::{sj_operator, state_on_weyl, Covector, QuasiFreeState};

use crate::config::{load, Format, Loaded, Restriction, RunConfig, SourceInfo, SourceSpec};
use crate::error::CliError;

/// Bumped whenever a report field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

/// Default agreement threshold between the two state paths.
pub const STATE_TOL: f64 = 1e-8;

/// Largest Fock dimension used by `state-eval`; the per-mode cutoff is
/// lowered until `(cutoff + 1)^N` fits.
pub const STATE_MAX_DIM: usize = 1024;

pub struct Outcome {
    /// File stem under `--out`.
    pub stem: &'static str,
    pub body: String,
    pub passed: bool,
    /// One line for stderr.
    pub summary: String,
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(sjq_core::Error::from)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Input(format!("CSV buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

fn json<T: Serialize>(v: &T) -> Result<String, CliError> {
    Ok(to_json_string(v)?)
}

fn sj_tolerances(cfg: &RunConfig) -> SjTolerances {
    cfg.tol.map(SjTolerances::uniform).unwrap_or_default()
}

#[derive(Serialize)]
struct DecomposeReport<'a> {
    schema_version: u32,
    command: &'static str,
    source: &'a SourceInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    restriction: Option<&'a Restriction>,
    dim: usize,
    modes: usize,
    thetas: &'a [f64],
    lambda: Vec<GridValue>,
    residuals: KahlerResiduals,
    structure_tol: f64,
    passed: bool,
}

#[derive(Serialize)]
struct LongRow {
    quantity: String,
    index: Option<usize>,
    hbar: Option<f64>,
    value: f64,
}

pub fn decompose(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let Loaded { source, op, restriction } = load(cfg)?;
    let k = polar_decompose(&op)?;
    let residuals = k.residuals();
    let structure_tol = cfg.tol.unwrap_or(STRUCTURE_TOL);
    let passed = residuals.max() <= structure_tol;
    let lambda: Vec<GridValue> = cfg
        .grid
        .positive()
        .iter()
        .map(|&hbar| GridValue {
            hbar,
            value: k.lambda(hbar),
        })
        .collect();
    let report = DecomposeReport {
        schema_version: SCHEMA_VERSION,
        command: "decompose",
        source: &source,
        restriction: restriction.as_ref(),
        dim: op.dim(),
        modes: k.modes(),
        thetas: k.thetas(),
        lambda,
        residuals,
        structure_tol,
        passed,
    };
    let body = match cfg.format_or(Format::Json) {
        Format::Json => json(&report)?,
        Format::Csv => {
            let mut rows: Vec<LongRow> = Vec::new();
            rows.extend(k.thetas().iter().enumerate().map(|(i, &t)| LongRow {
                quantity: "theta".into(),
                index: Some(i),
                hbar: None,
                value: t,
            }));
            rows.extend(report.lambda.iter().map(|g| LongRow {
                quantity: "lambda".into(),
                index: None,
                hbar: Some(g.hbar),
                value: g.value,
            }));
            if let serde_json::Value::Object(map) = serde_json::to_value(residuals).map_err(sjq_core::Error::from)? {
                rows.extend(map.into_iter().map(|(name, v)| LongRow {
                    quantity: format!("residual.{name}"),
                    index: None,
                    hbar: None,
                    value: v.as_f64().unwrap_or(f64::NAN),
                }));
            }
            csv_string(&rows)?
        }
    };
    Ok(Outcome {
        stem: "decompose",
        body,
        passed,
        summary: format!(
            "decompose: {} modes, worst structure residual {:.3e} (tolerance {structure_tol:.1e})",
            k.modes(),
            residuals.max()
        ),
    })
}

#[derive(Serialize)]
struct SjReport<'a> {
    schema_version: u32,
    command: &'static str,
    source: &'a SourceInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    restriction: Option<&'a Restriction>,
    hbar: f64,
    perturbation: f64,
    summary: SjSummary,
    tolerances: SjTolerances,
    failures: Vec<&'static str>,
    passed: bool,
}

#[derive(Serialize)]
struct SjRow<'a> {
    quantity: &'a str,
    value: f64,
    tolerance: f64,
    passed: bool,
}

pub fn sj_check(cfg: &RunConfig, perturbation: f64) -> Result<Outcome, CliError> {
    if !(perturbation.is_finite() && perturbation >= 0.0) {
        return Err(CliError::Input(format!(
            "--perturb must be finite and non-negative, got {perturbation}"
        )));
    }
    let Loaded { source, op, restriction } = load(cfg)?;
    let k = polar_decompose(&op)?;
    // purity and the axioms do not depend on ħ; the state is built at the top of the grid
    let hbar = cfg.grid.positive().first().copied().unwrap_or(1.0);
    let summary = if perturbation == 0.0 {
        sj_summary(&op, &k, hbar)?
    } else {
        let a = sj_operator(&k, &op).perturbed(perturbation)?;
        sj_summary_of(&op, &k, &a, hbar)?
    };
    let tolerances = sj_tolerances(cfg);
    let failures = summary.failures(&tolerances);
    let passed = failures.is_empty();
    let report = SjReport {
        schema_version: SCHEMA_VERSION,
        command: "sj-check",
        source: &source,
        restriction: restriction.as_ref(),
        hbar,
        perturbation,
        summary,
        tolerances,
        failures: failures.clone(),
        passed,
    };
    let body = match cfg.format_or(Format::Json) {
        Format::Json => json(&report)?,
        Format::Csv => {
            let s = &summary;
            let t = &tolerances;
            let rows = [
                ("positivity", s.positivity, t.positivity),
                ("commutator", s.commutator, t.commutator),
                ("purity", s.purity, t.purity),
                ("uniqueness", s.uniqueness, t.uniqueness),
                ("theta_norm", s.theta_norm, t.theta),
                ("theta_square", s.theta_square, t.theta),
            ];
            let rows: Vec<SjRow> = rows
                .iter()
                .map(|&(quantity, value, tolerance)| SjRow {
                    quantity,
                    value,
                    tolerance,
                    passed: !failures.contains(&quantity.split('_').next().unwrap_or(quantity)),
                })
                .collect();
            csv_string(&rows)?
        }
    };
    let summary_line = if passed {
        "sj-check: all axiom, uniqueness and purity residuals within tolerance".to_string()
    } else {
        format!("sj-check: failed {}", failures.join(", "))
    };
    Ok(Outcome {
        stem: "sj_check",
        body,
        passed,
        summary: summary_line,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
struct StateRow {
    hbar: f64,
    phi_index: usize,
    norm_sq: f64,
    cutoff: usize,
    closed_form: f64,
    quasi_free: f64,
    fock_re: Option<f64>,
    fock_im: Option<f64>,
    diff: Option<f64>,
    status: &'static str,
}

#[derive(Serialize)]
struct StateReport<'a> {
    schema_version: u32,
    command: &'static str,
    source: &'a SourceInfo,
    tolerance: f64,
    rows: &'a [StateRow],
    passed: bool,
}

/// Largest per-mode cutoff not above `cutoff` with `(c + 1)^modes ≤ STATE_MAX_DIM`.
pub fn state_cutoff(cutoff: usize, modes: usize) -> usize {
    let mut c = cutoff;
    while c > 0 && (c + 1).checked_pow(modes as u32).is_none_or(|d| d > STATE_MAX_DIM) {
        c -= 1;
    }
    c
}

pub fn state_eval(cfg: &RunConfig, phi_path: &Path) -> Result<Outcome, CliError> {
    let text = read_text(phi_path).map_err(|e| CliError::Input(format!("{}: {e}", phi_path.display())))?;
    let phis = parse_covector_list(&text)?;
    let modes = match phis.first() {
        Some(p) => p.len(),
        None => return Err(CliError::Input(format!("{}: no covectors", phi_path.display()))),
    };
    if let Some(bad) = phis.iter().position(|p| p.len() != modes) {
        return Err(CliError::Input(format!(
            "covector {bad} has {} components, expected {modes}",
            phis[bad].len()
        )));
    }
    let mut cfg = cfg.clone();
    if let SourceSpec::Rotation { modes: m } = &mut cfg.source {
        *m = modes;
    }
    let Loaded { source, op, .. } = load(&cfg)?;
    let k = polar_decompose(&op)?;
    if k.modes() != modes {
        return Err(CliError::Input(format!(
            "covectors have {modes} components but the operator has {} modes",
            k.modes()
        )));
    }
    let tol = cfg.tol.unwrap_or(STATE_TOL);
    let cutoff = state_cutoff(cfg.cutoff, modes);
    let trunc = FockTruncation::new(modes, cutoff)?;
    let covectors = phis
        .iter()
        .map(|p| Covector::from_components(&k, p.clone()))
        .collect::<sjq_core::Result<Vec<_>>>()?;
    let jobs: Vec<(f64, usize)> = cfg
        .grid
        .positive()
        .iter()
        .flat_map(|&h| (0..phis.len()).map(move |i| (h, i)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(hbar, i)| -> Result<StateRow, CliError> {
            let norm_sq: f64 = phis[i].iter().map(|z| z.norm_sqr()).sum();
            let closed = (-(hbar / 2.0) * norm_sq).exp();
            let qf = state_on_weyl(&covectors[i].real, &QuasiFreeState::sj(&k, hbar)?)?;
            let mut row = StateRow {
                hbar,
                phi_index: i,
                norm_sq,
                cutoff,
                closed_form: closed,
                quasi_free: qf.re,
                fock_re: None,
                fock_im: None,
                diff: None,
                status: "truncated",
            };
            match weyl_generator(&phis[i], hbar, trunc) {
                Ok(w) => {
                    let fock = w.vacuum_expectation();
                    let diff = (fock - c(closed)).norm().max((qf - c(closed)).norm());
                    row.fock_re = Some(fock.re);
                    row.fock_im = Some(fock.im);
                    row.diff = Some(diff);
                    row.status = if diff <= tol { "ok" } else { "mismatch" };
                }
                Err(sjq_core::Error::TruncationTooSmall { .. }) => {}
                Err(e) => return Err(e.into()),
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let passed = failed == 0;
    let body = match cfg.format_or(Format::Csv) {
        Format::Csv => csv_string(&rows)?,
        Format::Json => json(&StateReport {
            schema_version: SCHEMA_VERSION,
            command: "state-eval",
            source: &source,
            tolerance: tol,
            rows: &rows,
            passed,
        })?,
    };
    Ok(Outcome {
        stem: "state_eval",
        body,
        passed,
        summary: format!(
            "state-eval: {} of {} rows agree within {tol:.1e} (cutoff {cutoff})",
            rows.len() - failed,
            rows.len()
        ),
    })
}

#[derive(Serialize)]
struct SuiteSettings {
    seed: u64,
    cutoff: usize,
    hbar_grid: String,
    tol: Option<f64>,
    density: f64,
}

#[derive(Serialize)]
struct InputSection<'a> {
    source: &'a SourceInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    restriction: Option<&'a Restriction>,
    thetas: Vec<f64>,
    kahler_residual: f64,
    sj: SjSummary,
    failures: Vec<&'static str>,
    passed: bool,
}

#[derive(Serialize)]
struct SuiteReport<'a> {
    schema_version: u32,
    command: &'static str,
    config: SuiteSettings,
    input: InputSection<'a>,
    checks: &'a [Check],
    checks_passed: usize,
    checks_total: usize,
    passed: bool,
}

pub fn suite(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let Loaded { source, op, restriction } = load(cfg)?;
    let k = polar_decompose(&op)?;
    let hbar = cfg.grid.positive().first().copied().unwrap_or(1.0);
    let sj = sj_summary(&op, &k, hbar)?;
    let kahler_residual = k.residuals().max();
    let mut failures = sj.failures(&sj_tolerances(cfg));
    if kahler_residual > cfg.tol.unwrap_or(STRUCTURE_TOL) {
        failures.insert(0, "structure");
    }
    let input = InputSection {
        source: &source,
        restriction: restriction.as_ref(),
        thetas: k.thetas().to_vec(),
        kahler_residual,
        sj,
        passed: failures.is_empty(),
        failures,
    };

    let density = match cfg.source {
        SourceSpec::Sprinkle { density, .. } => density,
        _ => SuiteConfig::default().density,
    };
    let suite_cfg = SuiteConfig {
        seed: cfg.seed,
        cutoff: cfg.cutoff,
        grid: cfg.grid.clone(),
        tol: cfg.tol,
        density,
    };
    let checks = run_suite(&suite_cfg);
    let checks_passed = checks.iter().filter(|c| c.passed).count();
    let input_ok = input.passed;
    let passed = input_ok && checks_passed == checks.len();
    let body = match cfg.format_or(Format::Json) {
        Format::Json => json(&SuiteReport {
            schema_version: SCHEMA_VERSION,
            command: "suite",
            config: SuiteSettings {
                seed: suite_cfg.seed,
                cutoff: suite_cfg.cutoff,
                hbar_grid: suite_cfg.grid.to_string(),
                tol: suite_cfg.tol,
                density,
            },
            input,
            checks: &checks,
            checks_passed,
            checks_total: checks.len(),
            passed,
        })?,
        Format::Csv => {
            let worst = [
                kahler_residual,
                sj.commutator,
                sj.purity,
                sj.uniqueness,
                (sj.theta_norm - 1.0).abs(),
                sj.theta_square,
                -sj.positivity,
            ]
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
            let mut rows = vec![Check {
                id: 0,
                name: "input_operator".into(),
                passed: input.passed,
                value: worst,
                threshold: cfg.tol.unwrap_or(STRUCTURE_TOL),
                detail: if input.passed {
                    "structure and SJ residuals".into()
                } else {
                    format!("failed {}", input.failures.join(", "))
                },
            }];
            rows.extend(checks.iter().cloned());
            csv_string(&rows)?
        }
    };
    Ok(Outcome {
        stem: "suite",
        body,
        passed,
        summary: format!(
            "suite: {checks_passed} of {} checks passed, input operator {}",
            checks.len(),
            if input_ok { "green" } else { "red" }
        ),
    })
}
