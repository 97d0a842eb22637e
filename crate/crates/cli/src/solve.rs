//! `solve`: one run of the configured problem, summarized as JSON.

use std::time::Instant;

use anyhow::Result;
use serde::Serialize;
use sinc_pint::krylov::{gmres, GmresConfig, GmresReport, Preconditioner};
use sinc_pint::models::{error_against, error_max, sinc_reference, ProblemModel};
use sinc_pint::newton::{newton_solve, NewtonConfig, NewtonReport, PrecondPolicy};
use sinc_pint::precond::{build_preconditioner, ApplyOptions, PreconditionerKind};
use sinc_pint::{Error, SincGrid};

use crate::config::RunConfig;
use crate::output::{emit, Cell, Table};

pub struct LinearRun {
    pub report: GmresReport,
    pub error: Option<f64>,
    pub solve_ms: f64,
    pub cond2v: Option<f64>,
}

/// Preconditioner build plus GMRES, timed; assembly happens before the clock starts.
pub fn run_linear(
    model: &ProblemModel,
    grid: &SincGrid,
    kind: PreconditionerKind,
    gmres_cfg: &GmresConfig,
    apply: ApplyOptions,
) -> Result<LinearRun> {
    let sys = model.linear_system(grid)?;
    let clock = Instant::now();
    let pc = build_preconditioner(&sys, kind, apply)?;
    let report = gmres(
        &sys,
        &sys.rhs,
        pc.as_ref().map(|p| p as &dyn Preconditioner),
        gmres_cfg,
    )?;
    let solve_ms = clock.elapsed().as_secs_f64() * 1e3;
    let error = match model.exact_samples(grid) {
        Some(_) => Some(error_max(&report.solution, model, grid)?),
        None => None,
    };
    Ok(LinearRun {
        report,
        error,
        solve_ms,
        cond2v: pc.as_ref().map(|p| p.cond2v()),
    })
}

pub struct NonlinearRun {
    /// `None` when an inner solve failed; the error is kept in `failure`.
    pub report: Option<NewtonReport>,
    pub failure: Option<String>,
    pub solve_ms: f64,
}

pub fn run_nonlinear(
    model: &ProblemModel,
    grid: &SincGrid,
    cfg: &NewtonConfig,
) -> Result<NonlinearRun> {
    let sys = model.nonlinear_system(grid)?;
    let clock = Instant::now();
    let result = newton_solve(&sys, cfg);
    let solve_ms = clock.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(report) => Ok(NonlinearRun {
            report: Some(report),
            failure: None,
            solve_ms,
        }),
        Err(e @ (Error::InnerSolve { .. } | Error::Divergence { .. })) => Ok(NonlinearRun {
            report: None,
            failure: Some(e.to_string()),
            solve_ms,
        }),
        Err(e) => Err(e.into()),
    }
}

/// Reference states from a finer Sinc solve, for models without an exact solution.
/// Always preconditioned with NKPA so the reference stays cheap.
pub fn reference(model: &ProblemModel, grid: &SincGrid, cfg: &RunConfig) -> Result<Vec<f64>> {
    let ref_cfg = NewtonConfig {
        policy: PrecondPolicy::Nkpa,
        ..newton_config(cfg)?
    };
    Ok(sinc_reference(model, grid, cfg.newton.reference_extra, &ref_cfg)?.0)
}

pub fn apply_options(cfg: &RunConfig) -> ApplyOptions {
    ApplyOptions {
        threads: cfg.threads.unwrap_or(0),
        ..Default::default()
    }
}

pub fn gmres_config(cfg: &RunConfig) -> GmresConfig {
    GmresConfig {
        tol: cfg.tol,
        maxit: cfg.maxit,
        record_history: false,
    }
}

pub fn newton_config(cfg: &RunConfig) -> Result<NewtonConfig> {
    Ok(NewtonConfig {
        rtol: cfg.newton.rtol,
        max_newton: cfg.newton.max_newton,
        inner: gmres_config(cfg),
        policy: cfg.precond_policy()?,
        refresh: cfg.refresh()?,
        apply: apply_options(cfg),
    })
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub problem: String,
    pub m: usize,
    /// Unknowns per time point.
    pub n: usize,
    pub precond: String,
    #[serde(rename = "It_G")]
    pub it_g: usize,
    #[serde(rename = "It_N", skip_serializing_if = "Option::is_none")]
    pub it_n: Option<usize>,
    #[serde(rename = "Error")]
    pub error: Option<f64>,
    /// `exact` or `reference`, naming what the error is measured against.
    pub error_against: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    pub converged: bool,
    #[serde(rename = "cond2V")]
    pub cond2v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub seed: u64,
}

/// Runs the solve, writes the artifacts and returns the exit code.
pub fn cmd_solve(cfg: &RunConfig, timestamp: bool) -> Result<u8> {
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let kind = cfg.precond_kind()?;
    let (summary, solution) = if cfg.is_nonlinear() {
        let newton = newton_config(cfg)?;
        let run = run_nonlinear(&model, &grid, &newton)?;
        let error = match &run.report {
            Some(r) if r.converged => {
                let reference = reference(&model, &grid, cfg)?;
                Some(error_against(
                    &r.solution,
                    &reference,
                    model.n,
                    model.error_components,
                )?)
            }
            _ => None,
        };
        let summary = Summary {
            problem: cfg.problem.clone(),
            m: grid.size(),
            n: model.n,
            precond: kind.label(),
            it_g: run.report.as_ref().map_or(0, |r| r.max_inner_iters),
            it_n: Some(run.report.as_ref().map_or(0, |r| r.newton_iters)),
            error,
            error_against: error.map(|_| "reference"),
            wall_ms: timestamp.then_some(run.solve_ms),
            converged: run.report.as_ref().is_some_and(|r| r.converged),
            cond2v: None,
            failure: run.failure,
            seed: cfg.seed,
        };
        (summary, run.report.map(|r| r.solution))
    } else {
        let run = run_linear(&model, &grid, kind, &gmres_config(cfg), apply_options(cfg))?;
        let summary = Summary {
            problem: cfg.problem.clone(),
            m: grid.size(),
            n: model.n,
            precond: kind.label(),
            it_g: run.report.iterations,
            it_n: None,
            error: run.error,
            error_against: run.error.map(|_| "exact"),
            wall_ms: timestamp.then_some(run.solve_ms),
            converged: run.report.converged,
            cond2v: run.cond2v,
            failure: None,
            seed: cfg.seed,
        };
        (summary, Some(run.report.solution))
    };

    let json = serde_json::to_string_pretty(&summary)? + "\n";
    emit(cfg.out.as_deref(), "summary.json", &json)?;
    if let (true, Some(dir), Some(y)) = (cfg.dump_solution, cfg.out.as_deref(), solution) {
        emit(
            Some(dir),
            "solution.csv",
            &solution_table(&grid, model.n, &y).to_csv(timestamp)?,
        )?;
    }
    Ok(if summary.converged { 0 } else { 2 })
}

fn solution_table(grid: &SincGrid, n: usize, y: &[f64]) -> Table {
    let mut t = Table::new(&["j", "t", "i", "value"]);
    for (j, (block, tj)) in y.chunks(n).zip(&grid.points).enumerate() {
        for (i, v) in block.iter().enumerate() {
            t.push(vec![
                Cell::Int(j),
                Cell::Num(*tj),
                Cell::Int(i),
                Cell::Num(*v),
            ]);
        }
    }
    t
}
