//! `spectrum`: dense eigenvalues and z(μ) samples with a PASS/FAIL verdict.

use anyhow::{bail, Result};
use sinc_pint::linalg::{eigenvalues_real, C64};
use sinc_pint::precond::kronecker_approx;
use sinc_pint::speclab::{
    dense_preconditioned_spectrum, z_function, SpectralRegion, SpectralReport,
};
use sinc_pint::SincIntegrationMatrix;

use crate::config::RunConfig;
use crate::output::{emit, Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Eigenvalues of the all-at-once matrix.
    Operator,
    /// Eigenvalues of the preconditioned matrix, checked against the theorem region.
    Preconditioned,
    /// z(μ) on log-spaced positive μ.
    ZCurve,
    /// Non-unity preconditioned eigenvalues checked against the annulus.
    AnnulusCheck,
}

impl Mode {
    fn id(&self) -> &'static str {
        match self {
            Mode::Operator => "operator",
            Mode::Preconditioned => "preconditioned",
            Mode::ZCurve => "z-curve",
            Mode::AnnulusCheck => "annulus-check",
        }
    }
}

pub const Z_SAMPLES: usize = 200;

pub struct Outcome {
    pub table: Table,
    /// `None` when no bound applies.
    pub passed: Option<bool>,
    pub verdict: String,
}

fn complex_table(values: &[C64]) -> Table {
    let mut t = Table::new(&["re", "im"]);
    for v in values {
        t.push(vec![Cell::Num(v.re), Cell::Num(v.im)]);
    }
    t
}

fn region_text(r: &SpectralRegion) -> String {
    match r {
        SpectralRegion::Interval { lo, hi } => format!("interval [{lo}, {hi}]"),
        SpectralRegion::Annulus {
            center,
            inner,
            outer,
        } => {
            format!("annulus center {center} radii [{inner}, {outer}]")
        }
        SpectralRegion::Unchecked => "no region".into(),
    }
}

fn preconditioned(cfg: &RunConfig) -> Result<SpectralReport> {
    let model = cfg.model()?;
    if !model.is_linear() {
        bail!(
            "the spectrum command needs a linear problem, got {}",
            cfg.problem
        );
    }
    let grid = cfg.grid()?;
    let kind = cfg.precond_kind()?;
    let Some((source, omega)) = kind.parts() else {
        bail!("the preconditioned spectrum needs a preconditioner, got none");
    };
    let sys = model.linear_system(&grid)?;
    let approx = kronecker_approx(&sys.blocks, grid.size(), source)?;
    Ok(dense_preconditioned_spectrum(
        &model, &grid, omega, &approx,
    )?)
}

fn verdict(rep: &SpectralReport) -> String {
    format!(
        "{}: {} violation(s), region {}, {} non-unity of {}, max prediction gap {:.3e}",
        if rep.passed() { "PASS" } else { "FAIL" },
        rep.bound_violations.len(),
        region_text(&rep.region),
        rep.nonunity.len(),
        rep.eigenvalues.len(),
        rep.max_prediction_gap
    )
}

pub fn compute(cfg: &RunConfig, mode: Mode) -> Result<Outcome> {
    match mode {
        Mode::Operator => {
            let model = cfg.model()?;
            if !model.is_linear() {
                bail!(
                    "the spectrum command needs a linear problem, got {}",
                    cfg.problem
                );
            }
            let grid = cfg.grid()?;
            let dense = model.linear_system(&grid)?.to_dense()?;
            let values = eigenvalues_real(&dense)?;
            Ok(Outcome {
                verdict: format!(
                    "n/a: no bound applies to the operator spectrum ({} eigenvalues)",
                    values.len()
                ),
                table: complex_table(&values),
                passed: None,
            })
        }
        Mode::Preconditioned => {
            let rep = preconditioned(cfg)?;
            Ok(Outcome {
                verdict: verdict(&rep),
                passed: Some(rep.passed()),
                table: complex_table(&rep.eigenvalues),
            })
        }
        Mode::AnnulusCheck => {
            let rep = preconditioned(cfg)?;
            let SpectralRegion::Annulus { center, .. } = rep.region else {
                let v = format!(
                    "FAIL: spectrum of K̄ is not imaginary, {}",
                    region_text(&rep.region)
                );
                return Ok(Outcome {
                    table: complex_table(&rep.nonunity),
                    passed: Some(false),
                    verdict: v,
                });
            };
            let mut t = Table::new(&["re", "im", "radius"]);
            for l in &rep.nonunity {
                t.push(vec![
                    Cell::Num(l.re),
                    Cell::Num(l.im),
                    Cell::Num((l - center).norm()),
                ]);
            }
            Ok(Outcome {
                verdict: verdict(&rep),
                passed: Some(rep.passed()),
                table: t,
            })
        }
        Mode::ZCurve => {
            let grid = cfg.grid()?;
            let imat = SincIntegrationMatrix::new(grid.size())?;
            let mut t = Table::new(&["mu", "z"]);
            let mut bad = 0;
            for k in 0..Z_SAMPLES {
                let mu = 10f64.powf(-6.0 + 18.0 * k as f64 / (Z_SAMPLES - 1) as f64);
                let z = z_function(C64::new(mu, 0.0), &grid, &imat)?;
                if !(z.im.abs() <= 1e-8 && z.re >= -1e-8 && z.re < 2.0) {
                    bad += 1;
                }
                t.push(vec![Cell::Num(mu), Cell::Num(z.re)]);
            }
            Ok(Outcome {
                verdict: format!(
                    "{}: {bad} violation(s) of 0 <= z < 2 over {Z_SAMPLES} samples",
                    if bad == 0 { "PASS" } else { "FAIL" }
                ),
                passed: Some(bad == 0),
                table: t,
            })
        }
    }
}

/// Writes the CSV, prints the verdict on standard error and maps FAIL to exit code 2.
pub fn cmd_spectrum(cfg: &RunConfig, mode: Mode, timestamp: bool) -> Result<u8> {
    let out = compute(cfg, mode)?;
    emit(
        cfg.out.as_deref(),
        &format!("spectrum-{}.csv", mode.id()),
        &out.table.to_csv(timestamp)?,
    )?;
    eprintln!("verdict {}", out.verdict);
    Ok(if out.passed == Some(false) { 2 } else { 0 })
}
