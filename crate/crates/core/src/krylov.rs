//! Right-preconditioned GMRES without restarts.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::precond::DiagonalizedPreconditioner;
use crate::system::AllAtOnceSystem;

/// Operator handle `x -> A x`.
pub trait LinearOperator {
    fn apply_op(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Preconditioner handle `r -> P⁻¹ r`.
pub trait Preconditioner {
    fn apply_pinv(&self, r: &[f64]) -> Result<Vec<f64>>;
}

impl LinearOperator for AllAtOnceSystem {
    fn apply_op(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply(x)
    }
}

impl Preconditioner for DiagonalizedPreconditioner {
    fn apply_pinv(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.apply_inverse(r)
    }
}

/// Wraps a closure as an operator or preconditioner.
pub struct FnOperator<F>(pub F);

impl<F: Fn(&[f64]) -> Result<Vec<f64>>> LinearOperator for FnOperator<F> {
    fn apply_op(&self, x: &[f64]) -> Result<Vec<f64>> {
        (self.0)(x)
    }
}

impl<F: Fn(&[f64]) -> Result<Vec<f64>>> Preconditioner for FnOperator<F> {
    fn apply_pinv(&self, r: &[f64]) -> Result<Vec<f64>> {
        (self.0)(r)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmresConfig {
    pub tol: f64,
    pub maxit: usize,
    pub record_history: bool,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            tol: 1e-10,
            maxit: 1000,
            record_history: true,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Parameter(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.maxit == 0 {
            return Err(Error::Parameter("maxit must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GmresReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// Arnoldi estimates of `‖b - A x_k‖ / ‖b‖`, one per iteration.
    pub residual_history: Vec<f64>,
    /// The Arnoldi estimate reached `tol` (or a breakdown left a true residual below `tol`).
    pub converged: bool,
    pub estimated_residual: f64,
    /// `‖b - A x‖ / ‖b‖`, recomputed at exit.
    pub true_residual: f64,
    pub breakdown: bool,
}

const REORTH_TRIGGER: f64 = 1e-8;
const BREAKDOWN: f64 = 1e-14;

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Solves `A x = b` from a zero initial guess with `x = P⁻¹ u`, `u` in the Krylov space of `A P⁻¹`.
pub fn gmres(
    a: &dyn LinearOperator,
    b: &[f64],
    precond: Option<&dyn Preconditioner>,
    cfg: &GmresConfig,
) -> Result<GmresReport> {
    cfg.validate()?;
    if !finite(b) {
        return Err(Error::NumericalFailure(
            "right-hand side is not finite".into(),
        ));
    }
    let n = b.len();
    let beta = norm2(b);
    if beta == 0.0 {
        return Ok(GmresReport {
            solution: vec![0.0; n],
            iterations: 0,
            residual_history: vec![],
            converged: true,
            estimated_residual: 0.0,
            true_residual: 0.0,
            breakdown: false,
        });
    }
    let pinv = |x: &[f64]| -> Result<Vec<f64>> {
        match precond {
            Some(p) => p.apply_pinv(x),
            None => Ok(x.to_vec()),
        }
    };

    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|x| x / beta).collect()];
    // Columns of the Hessenberg matrix, rotated in place into R.
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut history = Vec::new();
    let mut estimate = 1.0;
    let mut converged = false;
    let mut breakdown = false;

    for k in 0..cfg.maxit {
        let z = pinv(&basis[k])?;
        let mut w = a.apply_op(&z)?;
        if !finite(&w) {
            return Err(Error::NumericalFailure(format!(
                "non-finite operator output at GMRES step {}",
                k + 1
            )));
        }
        let mut h = vec![0.0; k + 2];
        for (i, v) in basis.iter().enumerate() {
            let c = dot(&w, v);
            h[i] = c;
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
        }
        let wn = norm2(&w);
        let loss = basis.iter().map(|v| dot(&w, v).abs()).fold(0.0, f64::max);
        if loss > REORTH_TRIGGER * wn {
            for (i, v) in basis.iter().enumerate() {
                let c = dot(&w, v);
                h[i] += c;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let hnext = norm2(&w);
        h[k + 1] = hnext;

        for i in 0..k {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        let rho = h[k].hypot(h[k + 1]);
        let (c, s) = if rho == 0.0 {
            (1.0, 0.0)
        } else {
            (h[k] / rho, h[k + 1] / rho)
        };
        cs.push(c);
        sn.push(s);
        h[k] = rho;
        h[k + 1] = 0.0;
        let gk = g[k];
        g[k] = c * gk;
        g.push(-s * gk);
        r_cols.push(h);

        estimate = g[k + 1].abs() / beta;
        if !estimate.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "non-finite residual estimate at GMRES step {}",
                k + 1
            )));
        }
        if cfg.record_history {
            history.push(estimate);
        }
        if estimate <= cfg.tol {
            converged = true;
            break;
        }
        if hnext <= BREAKDOWN * beta {
            breakdown = true;
            break;
        }
        basis.push(w.iter().map(|x| x / hnext).collect());
    }

    let iterations = r_cols.len();
    let mut y = vec![0.0; iterations];
    for i in (0..iterations).rev() {
        let mut acc = g[i];
        for j in (i + 1)..iterations {
            acc -= r_cols[j][i] * y[j];
        }
        let d = r_cols[i][i];
        y[i] = if d == 0.0 { 0.0 } else { acc / d };
    }
    let mut u = vec![0.0; n];
    for (yi, v) in y.iter().zip(&basis) {
        for (ui, vi) in u.iter_mut().zip(v) {
            *ui += yi * vi;
        }
    }
    let solution = pinv(&u)?;
    let ax = a.apply_op(&solution)?;
    let true_residual = norm2(
        &b.iter()
            .zip(&ax)
            .map(|(bi, ai)| bi - ai)
            .collect::<Vec<_>>(),
    ) / beta;
    if !true_residual.is_finite() {
        return Err(Error::NumericalFailure("non-finite final residual".into()));
    }
    if breakdown && !converged {
        converged = true_residual <= cfg.tol;
    }
    Ok(GmresReport {
        solution,
        iterations,
        residual_history: history,
        converged,
        estimated_residual: estimate,
        true_residual,
        breakdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn dense_op(a: DMatrix<f64>) -> FnOperator<impl Fn(&[f64]) -> Result<Vec<f64>>> {
        FnOperator(move |x: &[f64]| Ok((&a * DVector::from_column_slice(x)).as_slice().to_vec()))
    }

    #[test]
    fn zero_rhs() {
        let a = dense_op(DMatrix::identity(3, 3));
        let rep = gmres(&a, &[0.0; 3], None, &GmresConfig::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.solution, vec![0.0; 3]);
        assert!(rep.converged);
    }

    #[test]
    fn identity_converges_in_one_step() {
        let a = dense_op(DMatrix::identity(4, 4));
        let b = [1.0, -2.0, 3.0, 0.5];
        let rep = gmres(&a, &b, None, &GmresConfig::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        assert!(rep.true_residual < 1e-15);
    }

    #[test]
    fn bad_config_and_input() {
        let a = dense_op(DMatrix::identity(2, 2));
        let cfg = GmresConfig {
            tol: 0.0,
            ..Default::default()
        };
        assert!(gmres(&a, &[1.0, 1.0], None, &cfg).is_err());
        let cfg = GmresConfig {
            maxit: 0,
            ..Default::default()
        };
        assert!(gmres(&a, &[1.0, 1.0], None, &cfg).is_err());
        assert!(matches!(
            gmres(&a, &[f64::NAN, 1.0], None, &GmresConfig::default()),
            Err(Error::NumericalFailure(_))
        ));
        let nan = FnOperator(|x: &[f64]| Ok(vec![f64::NAN; x.len()]));
        assert!(matches!(
            gmres(&nan, &[1.0, 1.0], None, &GmresConfig::default()),
            Err(Error::NumericalFailure(_))
        ));
    }

    #[test]
    fn maxit_reached_reports_failure() {
        let a = dense_op(DMatrix::from_fn(20, 20, |i, j| {
            if i == j {
                1.0 + i as f64
            } else {
                0.0
            }
        }));
        let b = vec![1.0; 20];
        let cfg = GmresConfig {
            maxit: 3,
            ..Default::default()
        };
        let rep = gmres(&a, &b, None, &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
    }

    fn arb_system() -> impl Strategy<Value = (DMatrix<f64>, Vec<f64>)> {
        (2usize..=30).prop_flat_map(|s| {
            (
                proptest::collection::vec(-1.0f64..1.0, s * s),
                proptest::collection::vec(-1.0f64..1.0, s),
            )
                .prop_map(move |(entries, b)| {
                    let a = DMatrix::from_vec(s, s, entries)
                        + DMatrix::identity(s, s) * (2.0 * s as f64).sqrt();
                    (a, b)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn finite_termination_and_monotone_history((a, b) in arb_system()) {
            let s = b.len();
            prop_assume!(norm2(&b) > 1e-3);
            let op = dense_op(a.clone());
            let cfg = GmresConfig { tol: 1e-12, ..Default::default() };
            let rep = gmres(&op, &b, None, &cfg).unwrap();
            prop_assert!(rep.converged);
            prop_assert!(rep.iterations <= s);
            prop_assert!(rep.true_residual <= 1e-11);
            for w in rep.residual_history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }

        #[test]
        fn preconditioning_does_not_change_the_answer((a, b) in arb_system()) {
            prop_assume!(norm2(&b) > 1e-3);
            let op = dense_op(a.clone());
            let diag = a.diagonal();
            let jacobi = FnOperator(move |r: &[f64]| Ok(r.iter().zip(diag.iter()).map(|(x, d)| x / d).collect()));
            let cfg = GmresConfig { tol: 1e-12, ..Default::default() };
            let plain = gmres(&op, &b, None, &cfg).unwrap();
            let pre = gmres(&op, &b, Some(&jacobi), &cfg).unwrap();
            let diff = norm2(&plain.solution.iter().zip(&pre.solution).map(|(x, y)| x - y).collect::<Vec<_>>());
            prop_assert!(diff <= 1e-8 * norm2(&plain.solution).max(1.0));
        }
    }
}
