//! Newton iteration for the nonlinear all-at-once system with a preconditioned GMRES inner solve.

use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresConfig, Preconditioner};
use crate::linalg::norm2;
use crate::precond::{
    build_preconditioner, ApplyOptions, DiagonalizedPreconditioner, PreconditionerKind,
};
use crate::system::NonlinearSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecondPolicy {
    None,
    /// Averaged Jacobian blocks with `S`.
    Averaging,
    Nkpa,
    NkpaDamped(f64),
}

impl PrecondPolicy {
    pub fn kind(&self) -> PreconditionerKind {
        match *self {
            PrecondPolicy::None => PreconditionerKind::None,
            PrecondPolicy::Averaging => PreconditionerKind::Averaging,
            PrecondPolicy::Nkpa => PreconditionerKind::Nkpa,
            PrecondPolicy::NkpaDamped(w) => PreconditionerKind::NkpaOmega(w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refresh {
    EveryIteration,
    /// Build the preconditioner from the first Jacobian and keep it.
    FreezeFirst,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonConfig {
    pub rtol: f64,
    pub max_newton: usize,
    pub inner: GmresConfig,
    pub policy: PrecondPolicy,
    pub refresh: Refresh,
    pub apply: ApplyOptions,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            rtol: 1e-10,
            max_newton: 20,
            inner: GmresConfig::default(),
            policy: PrecondPolicy::Nkpa,
            refresh: Refresh::EveryIteration,
            apply: ApplyOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub solution: Vec<f64>,
    pub newton_iters: usize,
    pub max_inner_iters: usize,
    pub inner_iters: Vec<usize>,
    /// `‖F(y_k) - b‖`, starting from the zero guess.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// `cond2V` of the last preconditioner built.
    pub cond2v: Option<f64>,
}

/// Solves `F(y) = b` from `y = 0`.
pub fn newton_solve(sys: &NonlinearSystem, cfg: &NewtonConfig) -> Result<NewtonReport> {
    newton_solve_from(sys, vec![0.0; sys.len()], cfg)
}

/// Solves `F(y) = b` from a given starting iterate. The stopping rule is relative to `‖F(0) - b‖`.
pub fn newton_solve_from(
    sys: &NonlinearSystem,
    start: Vec<f64>,
    cfg: &NewtonConfig,
) -> Result<NewtonReport> {
    if !(cfg.rtol > 0.0 && cfg.rtol < 1.0) {
        return Err(Error::Parameter(format!(
            "rtol must lie in (0, 1), got {}",
            cfg.rtol
        )));
    }
    if cfg.max_newton == 0 {
        return Err(Error::Parameter("max_newton must be at least 1".into()));
    }
    cfg.inner.validate()?;
    if start.len() != sys.len() {
        return Err(Error::Shape(format!(
            "start has length {}, expected {}",
            start.len(),
            sys.len()
        )));
    }

    let r0 = norm2(&sys.residual(&vec![0.0; sys.len()])?);
    let mut y = start;
    let mut res = sys.residual(&y)?;
    let mut history = vec![norm2(&res)];
    let mut inner_iters = Vec::new();
    let mut frozen: Option<DiagonalizedPreconditioner> = None;
    let mut cond2v = None;
    let mut converged = history[0] <= cfg.rtol * r0;
    let mut increases = 0;

    while !converged && inner_iters.len() < cfg.max_newton {
        let step = inner_iters.len() + 1;
        let jac = sys.jacobian(&y)?;
        let mut fresh = match (cfg.refresh, &frozen) {
            (Refresh::FreezeFirst, Some(_)) => None,
            _ => build_preconditioner(&jac, cfg.policy.kind(), cfg.apply)?,
        };
        if let Some(p) = &fresh {
            cond2v = Some(p.cond2v());
        }
        if cfg.refresh == Refresh::FreezeFirst && frozen.is_none() {
            frozen = fresh.take();
        }
        let pc: Option<&dyn Preconditioner> = match cfg.refresh {
            Refresh::FreezeFirst => frozen.as_ref().map(|p| p as &dyn Preconditioner),
            Refresh::EveryIteration => fresh.as_ref().map(|p| p as &dyn Preconditioner),
        };
        let rep = gmres(&jac, &res, pc, &cfg.inner)?;
        inner_iters.push(rep.iterations);
        if !rep.converged {
            return Err(Error::InnerSolve {
                step,
                iterations: rep.iterations,
            });
        }
        for (yi, di) in y.iter_mut().zip(&rep.solution) {
            *yi -= di;
        }
        res = sys.residual(&y)?;
        let rn = norm2(&res);
        if !rn.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "non-finite residual at Newton step {step}"
            )));
        }
        let prev = *history.last().unwrap_or(&r0);
        history.push(rn);
        increases = if rn > prev { increases + 1 } else { 0 };
        if increases >= 2 {
            return Err(Error::Divergence { step });
        }
        converged = rn <= cfg.rtol * r0;
    }

    Ok(NewtonReport {
        solution: y,
        newton_iters: inner_iters.len(),
        max_inner_iters: inner_iters.iter().copied().max().unwrap_or(0),
        inner_iters,
        residual_history: history,
        converged,
        cond2v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DiagonalOperator, Laplacian1d, SpatialOperator};
    use crate::sinc::{SincGrid, SincParams};
    use crate::system::{BlockFamily, LinearTerm, NonlinearTerm};
    use std::sync::Arc;

    fn grid(m_half: usize) -> SincGrid {
        SincGrid::new(SincParams::new(2.0, m_half).unwrap()).unwrap()
    }

    #[test]
    fn linear_problem_takes_one_step() {
        let g = grid(8);
        let k: Arc<dyn SpatialOperator> = Arc::new(Laplacian1d {
            n: 10,
            hx: 1.0 / 11.0,
        });
        let r0: Vec<f64> = (0..10).map(|i| (i as f64 * 0.3).sin()).collect();
        let sys = NonlinearSystem::assemble(Arc::new(LinearTerm(k)), &g, None, &r0).unwrap();
        let cfg = NewtonConfig {
            rtol: 1e-9,
            ..Default::default()
        };
        let rep = newton_solve(&sys, &cfg).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.newton_iters, 1);
    }

    /// `q(y) = y - y²`, one state.
    struct Logistic;

    impl NonlinearTerm for Logistic {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
            out[0] = y[0] - y[0] * y[0];
        }
        fn jacobian(&self, _times: &[f64], states: &[&[f64]]) -> BlockFamily {
            BlockFamily::General(
                states
                    .iter()
                    .map(|s| {
                        Arc::new(DiagonalOperator(vec![1.0 - 2.0 * s[0]]))
                            as Arc<dyn SpatialOperator>
                    })
                    .collect(),
            )
        }
    }

    #[test]
    fn logistic_converges_quadratically() {
        let g = grid(8);
        let sys = NonlinearSystem::assemble(Arc::new(Logistic), &g, None, &[0.2]).unwrap();
        let cfg = NewtonConfig {
            rtol: 1e-14,
            inner: GmresConfig {
                tol: 1e-14,
                ..Default::default()
            },
            ..Default::default()
        };
        let rep = newton_solve(&sys, &cfg).unwrap();
        assert!(rep.converged);
        let r = &rep.residual_history;
        // Convergence order from the last three residuals above the rounding floor.
        let usable: Vec<f64> = r.iter().copied().filter(|x| *x > 1e-13 * r[0]).collect();
        let k = usable.len();
        assert!(k >= 3, "{r:?}");
        let order = (usable[k - 1] / usable[k - 2]).ln() / (usable[k - 2] / usable[k - 3]).ln();
        assert!(order >= 1.8, "order {order}, history {r:?}");
        // Exact logistic solution through y(0) = 0.2.
        for (t, y) in g.points.iter().zip(&rep.solution) {
            let exact = 0.2 * t.exp() / (1.0 - 0.2 + 0.2 * t.exp());
            assert!((y - exact).abs() < 1e-3);
        }
    }

    #[test]
    fn frozen_and_fresh_agree() {
        let g = grid(8);
        let sys = NonlinearSystem::assemble(Arc::new(Logistic), &g, None, &[0.2]).unwrap();
        let a = newton_solve(&sys, &NewtonConfig::default()).unwrap();
        let b = newton_solve(
            &sys,
            &NewtonConfig {
                refresh: Refresh::FreezeFirst,
                ..Default::default()
            },
        )
        .unwrap();
        let c = newton_solve(
            &sys,
            &NewtonConfig {
                policy: PrecondPolicy::None,
                ..Default::default()
            },
        )
        .unwrap();
        for ((x, y), z) in a.solution.iter().zip(&b.solution).zip(&c.solution) {
            assert!((x - y).abs() < 1e-8);
            assert!((x - z).abs() < 1e-8);
        }
    }

    #[test]
    fn inner_failure_is_reported() {
        let g = grid(8);
        let sys = NonlinearSystem::assemble(Arc::new(Logistic), &g, None, &[0.2]).unwrap();
        let cfg = NewtonConfig {
            policy: PrecondPolicy::None,
            inner: GmresConfig {
                maxit: 1,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(matches!(
            newton_solve(&sys, &cfg),
            Err(Error::InnerSolve { step: 1, .. })
        ));
    }
}
