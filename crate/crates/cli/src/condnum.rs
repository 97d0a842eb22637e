//! `condnum`: eigenvector conditioning of the time factors over (M, ω).

use anyhow::{bail, Result};
use sinc_pint::speclab::condition_growth;

use crate::config::RunConfig;
use crate::output::{emit, Cell, Table};

/// Largest half-width accepted without `--allow-large`.
pub const MAX_HALF_WIDTH: usize = 256;

pub fn compute(
    cfg: &RunConfig,
    half_widths: &[usize],
    omegas: &[f64],
    allow_large: bool,
) -> Result<Table> {
    if let Some(m) = half_widths.iter().find(|m| **m > MAX_HALF_WIDTH) {
        if !allow_large {
            bail!("M = {m} exceeds the cap {MAX_HALF_WIDTH}; pass --allow-large to override");
        }
    }
    let rows = condition_growth(half_widths, omegas, cfg.horizon, cfg.strip, cfg.alpha)?;
    let mut t = Table::new(&["M", "omega", "cond2V", "cond2U"]);
    for r in rows {
        t.push(vec![
            Cell::Int(r.half_width),
            Cell::Num(r.omega),
            Cell::Num(r.cond2v),
            Cell::Num(r.cond2u),
        ]);
    }
    Ok(t)
}

pub fn cmd_condnum(
    cfg: &RunConfig,
    half_widths: &[usize],
    omegas: &[f64],
    allow_large: bool,
    timestamp: bool,
) -> Result<u8> {
    let t = compute(cfg, half_widths, omegas, allow_large)?;
    emit(cfg.out.as_deref(), "condnum.csv", &t.to_csv(timestamp)?)?;
    Ok(0)
}
