//! `bench`: benchmark tables, one row per (n, m, preconditioner).

use anyhow::{bail, Result};
use sinc_pint::models::{error_against, ProblemModel};
use sinc_pint::precond::PreconditionerKind;
use sinc_pint::SincGrid;

use crate::config::RunConfig;
use crate::output::{emit, Cell, Table};
use crate::solve::{
    apply_options, gmres_config, newton_config, reference, run_linear, run_nonlinear,
};

pub const TABLES: [&str; 5] = [
    "heat-const",
    "heat-varying",
    "wave",
    "wave-omega-sweep",
    "allen-cahn",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Tier {
    Small,
    Full,
}

struct Plan {
    problem: &'static str,
    sizes: Vec<usize>,
    half_widths: Vec<usize>,
    kinds: Vec<PreconditionerKind>,
}

fn plan(table: &str, tier: Tier, omega: f64) -> Result<Plan> {
    let full = tier == Tier::Full;
    let half_widths = if full {
        vec![16, 32, 64, 128]
    } else {
        vec![16, 32]
    };
    let sides = if full { vec![32, 64, 128] } else { vec![32] };
    Ok(match table {
        "heat-const" => Plan {
            problem: "heat2d-const",
            sizes: sides,
            half_widths,
            kinds: vec![PreconditionerKind::P, PreconditionerKind::POmega(omega)],
        },
        "heat-varying" => Plan {
            problem: "heat2d-varying",
            sizes: sides,
            half_widths,
            kinds: vec![PreconditionerKind::Averaging, PreconditionerKind::Nkpa],
        },
        "wave" => Plan {
            problem: "wave2d",
            sizes: if full { vec![32, 64] } else { vec![32] },
            half_widths,
            kinds: vec![PreconditionerKind::POmega(omega)],
        },
        "wave-omega-sweep" => {
            let mut omegas = vec![1e-3, 1e-6, 1e-9, 1e-12];
            if full {
                omegas.push(1e-15);
            }
            Plan {
                problem: "wave2d",
                sizes: sides,
                half_widths,
                kinds: omegas.into_iter().map(PreconditionerKind::POmega).collect(),
            }
        }
        "allen-cahn" => Plan {
            problem: "allen-cahn",
            sizes: if full {
                vec![256, 512, 1024]
            } else {
                vec![256]
            },
            half_widths,
            kinds: vec![
                PreconditionerKind::Nkpa,
                PreconditionerKind::NkpaOmega(omega),
            ],
        },
        other => bail!(
            "unknown table '{other}', expected one of {}",
            TABLES.join(", ")
        ),
    })
}

/// One solved cell; `failure` marks a sentinel.
struct CellResult {
    error: f64,
    it_n: Option<usize>,
    it_g: Option<usize>,
    converged: bool,
    solve_ms: Option<f64>,
    failure: Option<String>,
}

impl CellResult {
    fn sentinel(reason: String) -> Self {
        CellResult {
            error: f64::NAN,
            it_n: None,
            it_g: None,
            converged: false,
            solve_ms: None,
            failure: Some(reason),
        }
    }
}

fn run_cell(
    cfg: &RunConfig,
    model: &ProblemModel,
    grid: &SincGrid,
    kind: PreconditionerKind,
    reference_states: Option<&[f64]>,
) -> Result<CellResult> {
    if cfg.is_nonlinear() {
        let run = run_nonlinear(model, grid, &newton_config(cfg)?)?;
        let Some(report) = run.report else {
            return Ok(CellResult::sentinel(run.failure.unwrap_or_default()));
        };
        let error = match reference_states {
            Some(r) if report.converged => {
                error_against(&report.solution, r, model.n, model.error_components)?
            }
            _ => f64::NAN,
        };
        Ok(CellResult {
            error,
            it_n: Some(report.newton_iters),
            it_g: Some(report.max_inner_iters),
            converged: report.converged,
            solve_ms: Some(run.solve_ms),
            failure: None,
        })
    } else {
        let run = run_linear(model, grid, kind, &gmres_config(cfg), apply_options(cfg))?;
        Ok(CellResult {
            error: run.error.unwrap_or(f64::NAN),
            it_n: None,
            it_g: Some(run.report.iterations),
            converged: run.report.converged,
            solve_ms: Some(run.solve_ms),
            failure: None,
        })
    }
}

struct Row {
    size: usize,
    n: usize,
    m: usize,
    kind: PreconditionerKind,
    result: CellResult,
}

/// Runs every cell of the table; failures become sentinel cells and are counted.
fn collect(table: &str, tier: Tier, base: &RunConfig) -> Result<(Vec<Row>, usize)> {
    let p = plan(table, tier, base.omega)?;
    let mut cells = Vec::new();
    let mut warnings = 0;
    for &size in &p.sizes {
        for &mh in &p.half_widths {
            let mut cfg = RunConfig {
                problem: p.problem.into(),
                n: Some(size),
                half_width: mh,
                ..base.clone()
            };
            let model = cfg.model()?;
            let grid = cfg.grid()?;
            let reference_states = if cfg.is_nonlinear() {
                match reference(&model, &grid, &cfg) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        warnings += 1;
                        eprintln!("warning: reference for n={size} M={mh} failed: {e}");
                        None
                    }
                }
            } else {
                None
            };
            for &kind in &p.kinds {
                cfg.precond = Some(kind.label());
                let result = run_cell(&cfg, &model, &grid, kind, reference_states.as_deref())
                    .unwrap_or_else(|e| CellResult::sentinel(e.to_string()));
                if let Some(f) = &result.failure {
                    warnings += 1;
                    eprintln!("warning: n={size} m={} {}: {f}", grid.size(), kind.label());
                }
                cells.push(Row {
                    size,
                    n: model.n,
                    m: grid.size(),
                    kind,
                    result,
                });
            }
        }
    }
    Ok((cells, warnings))
}

fn omega_of(kind: PreconditionerKind) -> Option<f64> {
    kind.parts().map(|(_, w)| w).filter(|w| *w < 1.0)
}

fn long_table(cells: &[Row], table: &str) -> Table {
    let mut t = Table::new(&[
        "table",
        "n_side",
        "n",
        "m",
        "precond",
        "Error",
        "It_N",
        "It_G",
        "converged",
        "solve_ms",
        "note",
    ]);
    for row in cells {
        let r = &row.result;
        t.push(vec![
            table.into(),
            Cell::Int(row.size),
            Cell::Int(row.n),
            Cell::Int(row.m),
            row.kind.label().into(),
            r.error.into(),
            r.it_n.into(),
            r.it_g.into(),
            r.converged.into(),
            r.solve_ms.into(),
            r.failure.clone().into(),
        ]);
    }
    t
}

/// The ω sweep laid out with one Error/It_G column pair per ω.
fn sweep_table(cells: &[Row]) -> Table {
    let mut omegas: Vec<f64> = Vec::new();
    for row in cells {
        if let Some(w) = omega_of(row.kind) {
            if !omegas.contains(&w) {
                omegas.push(w);
            }
        }
    }
    let mut header: Vec<String> = vec!["n_side".into(), "n".into(), "m".into()];
    for w in &omegas {
        header.push(format!("Error(omega={w:e})"));
        header.push(format!("It_G(omega={w:e})"));
    }
    let mut t = Table {
        header,
        rows: Vec::new(),
    };
    for group in cells.chunks(omegas.len().max(1)) {
        let first = &group[0];
        let mut r = vec![
            Cell::Int(first.size),
            Cell::Int(first.n),
            Cell::Int(first.m),
        ];
        for row in group {
            r.push(row.result.error.into());
            r.push(row.result.it_g.into());
        }
        t.push(r);
    }
    t
}

pub fn cmd_bench(table: &str, tier: Tier, base: &RunConfig, timestamp: bool) -> Result<u8> {
    let (cells, warnings) = collect(table, tier, base)?;
    let mut t = if table == "wave-omega-sweep" {
        sweep_table(&cells)
    } else {
        long_table(&cells, table)
    };
    if !timestamp {
        t = t.without("solve_ms");
    }
    let tier_id = match tier {
        Tier::Small => "small",
        Tier::Full => "full",
    };
    let stem = format!("bench-{table}-{tier_id}");
    emit(
        base.out.as_deref(),
        &format!("{stem}.csv"),
        &t.to_csv(timestamp)?,
    )?;
    if base.out.is_some() {
        emit(base.out.as_deref(), &format!("{stem}.md"), &t.to_markdown())?;
    }
    if warnings > 0 {
        eprintln!("{warnings} warning(s)");
    }
    Ok(0)
}
