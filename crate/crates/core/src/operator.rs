//! Spatial operators `K` acting on `R^n`, together with the complex shifted solves
//! `(I - lambda K) x = r` needed by the diagonalized preconditioner.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{complexify, C64, ZERO};

/// Dense fallback cap for shifted solves on operators without structure.
pub const DENSE_SHIFT_CAP: usize = 2048;

/// Solver for `(I - lambda K) x = r`, with `lambda` and `K` fixed at construction.
pub trait ShiftedSolver: Send + Sync {
    fn shift(&self) -> C64;

    /// Overwrites `rhs` with the solution.
    fn solve(&self, rhs: &mut [C64]) -> Result<()>;
}

pub trait SpatialOperator: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// `out = K x`.
    fn apply(&self, x: &[f64], out: &mut [f64]);

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut dense = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            dense.column_mut(j).copy_from_slice(&col);
            e[j] = 0.0;
        }
        dense
    }

    fn diagonal(&self) -> Vec<f64> {
        self.to_dense().diagonal().iter().copied().collect()
    }

    /// `trace(K^T K)`.
    fn frobenius_sq(&self) -> f64 {
        self.to_dense().norm_squared()
    }

    fn tridiagonal(&self) -> Option<Tridiagonal> {
        None
    }

    fn shifted_solver(&self, lambda: C64) -> Result<Box<dyn ShiftedSolver>> {
        DenseShiftedSolver::new(&self.to_dense(), lambda)
            .map(|s| Box::new(s) as Box<dyn ShiftedSolver>)
    }
}

/// Dense LU of `I - lambda K`.
pub struct DenseShiftedSolver {
    lambda: C64,
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseShiftedSolver {
    pub fn new(k: &DMatrix<f64>, lambda: C64) -> Result<Self> {
        let n = k.nrows();
        if n > DENSE_SHIFT_CAP {
            return Err(Error::TooLarge {
                size: n,
                cap: DENSE_SHIFT_CAP,
            });
        }
        let a = DMatrix::<C64>::identity(n, n) - complexify(k) * lambda;
        Ok(DenseShiftedSolver { lambda, lu: a.lu() })
    }
}

impl ShiftedSolver for DenseShiftedSolver {
    fn shift(&self) -> C64 {
        self.lambda
    }

    fn solve(&self, rhs: &mut [C64]) -> Result<()> {
        let b = DVector::from_column_slice(rhs);
        let x = self
            .lu
            .solve(&b)
            .ok_or_else(|| Error::NumericalFailure("singular shifted system".into()))?;
        rhs.copy_from_slice(x.as_slice());
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DenseOperator(pub DMatrix<f64>);

impl SpatialOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|j| self.0[(i, j)] * x[j]).sum();
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.0.clone()
    }
}

#[derive(Debug, Clone)]
pub struct DiagonalOperator(pub Vec<f64>);

impl SpatialOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for ((o, d), xi) in out.iter_mut().zip(&self.0).zip(x) {
            *o = d * xi;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.0.clone()
    }

    fn frobenius_sq(&self) -> f64 {
        self.0.iter().map(|d| d * d).sum()
    }

    fn tridiagonal(&self) -> Option<Tridiagonal> {
        let n = self.0.len();
        Some(Tridiagonal {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: self.0.clone(),
            upper: vec![0.0; n.saturating_sub(1)],
        })
    }

    fn shifted_solver(&self, lambda: C64) -> Result<Box<dyn ShiftedSolver>> {
        Ok(Box::new(self.tridiagonal().unwrap().shifted(lambda)?))
    }
}

/// Real tridiagonal matrix; `lower[i]` is entry `(i+1, i)`, `upper[i]` is `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    /// `scale * self + diag(shift)`.
    pub fn affine(&self, scale: f64, shift: Option<&[f64]>) -> Tridiagonal {
        let mut diag: Vec<f64> = self.diag.iter().map(|d| scale * d).collect();
        if let Some(s) = shift {
            for (d, c) in diag.iter_mut().zip(s) {
                *d += c;
            }
        }
        Tridiagonal {
            lower: self.lower.iter().map(|v| scale * v).collect(),
            diag,
            upper: self.upper.iter().map(|v| scale * v).collect(),
        }
    }

    /// Thomas factorization of `I - lambda T`.
    pub fn shifted(&self, lambda: C64) -> Result<ThomasSolver> {
        let n = self.diag.len();
        let one = C64::new(1.0, 0.0);
        let mut pivots = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n.saturating_sub(1));
        let lower: Vec<C64> = self.lower.iter().map(|&l| -lambda * l).collect();
        let mut prev_upper = ZERO;
        for i in 0..n {
            let a = one - lambda * self.diag[i];
            let p = if i == 0 {
                a
            } else {
                a - lower[i - 1] * prev_upper
            };
            if p.norm() < 1e-300 {
                return Err(Error::NumericalFailure(format!(
                    "zero pivot at row {i} of the shifted tridiagonal system"
                )));
            }
            pivots.push(p);
            if i + 1 < n {
                let u = -lambda * self.upper[i] / p;
                upper.push(u);
                prev_upper = u;
            }
        }
        Ok(ThomasSolver {
            lambda,
            lower,
            pivots,
            upper,
        })
    }
}

/// Precomputed complex Thomas elimination.
pub struct ThomasSolver {
    lambda: C64,
    lower: Vec<C64>,
    pivots: Vec<C64>,
    upper: Vec<C64>,
}

impl ShiftedSolver for ThomasSolver {
    fn shift(&self) -> C64 {
        self.lambda
    }

    fn solve(&self, rhs: &mut [C64]) -> Result<()> {
        let n = self.pivots.len();
        if rhs.len() != n {
            return Err(Error::Shape(format!(
                "tridiagonal rhs {} vs {n}",
                rhs.len()
            )));
        }
        rhs[0] /= self.pivots[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) / self.pivots[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = rhs[i + 1];
            rhs[i] -= self.upper[i] * next;
        }
        Ok(())
    }
}

/// Centered second difference on `n` interior points with homogeneous Dirichlet ends.
#[derive(Debug, Clone)]
pub struct Laplacian1d {
    pub n: usize,
    pub hx: f64,
}

impl Laplacian1d {
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let s = (k as f64 * std::f64::consts::PI / (2.0 * (self.n + 1) as f64)).sin();
        -4.0 * s * s / (self.hx * self.hx)
    }
}

impl SpatialOperator for Laplacian1d {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let inv = 1.0 / (self.hx * self.hx);
        let n = self.n;
        for i in 0..n {
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] } else { 0.0 };
            out[i] = (left - 2.0 * x[i] + right) * inv;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        vec![-2.0 / (self.hx * self.hx); self.n]
    }

    fn frobenius_sq(&self) -> f64 {
        let inv2 = 1.0 / self.hx.powi(4);
        (4.0 * self.n as f64 + 2.0 * (self.n as f64 - 1.0)) * inv2
    }

    fn tridiagonal(&self) -> Option<Tridiagonal> {
        let inv = 1.0 / (self.hx * self.hx);
        Some(Tridiagonal {
            lower: vec![inv; self.n - 1],
            diag: vec![-2.0 * inv; self.n],
            upper: vec![inv; self.n - 1],
        })
    }

    fn shifted_solver(&self, lambda: C64) -> Result<Box<dyn ShiftedSolver>> {
        Ok(Box::new(self.tridiagonal().unwrap().shifted(lambda)?))
    }
}

/// Orthonormal discrete sine transform matrix `sqrt(2/(N+1)) sin(i k pi / (N+1))`.
fn sine_matrix(n: usize) -> DMatrix<f64> {
    let scale = (2.0 / (n + 1) as f64).sqrt();
    let w = std::f64::consts::PI / (n + 1) as f64;
    DMatrix::from_fn(n, n, |i, k| scale * (((i + 1) * (k + 1)) as f64 * w).sin())
}

/// Five-point Laplacian on an `n_side x n_side` interior grid, `x1` index fastest.
#[derive(Clone)]
pub struct Laplacian2d {
    pub n_side: usize,
    pub hx: f64,
    sine: Arc<DMatrix<f64>>,
    eig1d: Arc<Vec<f64>>,
}

impl fmt::Debug for Laplacian2d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Laplacian2d")
            .field("n_side", &self.n_side)
            .field("hx", &self.hx)
            .finish()
    }
}

impl Laplacian2d {
    pub fn new(n_side: usize, hx: f64) -> Self {
        let one_d = Laplacian1d { n: n_side, hx };
        let eig1d = (1..=n_side).map(|k| one_d.eigenvalue(k)).collect();
        Laplacian2d {
            n_side,
            hx,
            sine: Arc::new(sine_matrix(n_side)),
            eig1d: Arc::new(eig1d),
        }
    }

    /// Eigenvalues of the 2D operator, `mu_a + mu_b`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_side * self.n_side);
        for b in self.eig1d.iter() {
            for a in self.eig1d.iter() {
                out.push(a + b);
            }
        }
        out
    }

    /// DST-diagonalized solver of `(I - lambda Delta) x = r`.
    pub fn dst_solver(&self, lambda: C64) -> DstShiftedSolver {
        let n = self.n_side;
        let mut inv_denominators = Vec::with_capacity(n * n);
        for b in self.eig1d.iter() {
            for a in self.eig1d.iter() {
                inv_denominators.push(C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) - lambda * (a + b)));
            }
        }
        DstShiftedSolver {
            lambda,
            n_side: n,
            sine: Arc::clone(&self.sine),
            inv_denominators,
        }
    }
}

impl SpatialOperator for Laplacian2d {
    fn dim(&self) -> usize {
        self.n_side * self.n_side
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n_side;
        let inv = 1.0 / (self.hx * self.hx);
        for j in 0..n {
            for i in 0..n {
                let idx = i + n * j;
                let mut acc = -4.0 * x[idx];
                if i > 0 {
                    acc += x[idx - 1];
                }
                if i + 1 < n {
                    acc += x[idx + 1];
                }
                if j > 0 {
                    acc += x[idx - n];
                }
                if j + 1 < n {
                    acc += x[idx + n];
                }
                out[idx] = acc * inv;
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        vec![-4.0 / (self.hx * self.hx); self.dim()]
    }

    fn frobenius_sq(&self) -> f64 {
        let n = self.n_side as f64;
        (16.0 * n * n + 4.0 * n * (n - 1.0)) / self.hx.powi(4)
    }

    fn shifted_solver(&self, lambda: C64) -> Result<Box<dyn ShiftedSolver>> {
        if lambda == C64::new(0.0, 0.0) {
            return Ok(Box::new(IdentitySolver));
        }
        Ok(Box::new(self.dst_solver(lambda)))
    }
}

/// `λ = 0`: the shifted system is the identity.
pub struct IdentitySolver;

impl ShiftedSolver for IdentitySolver {
    fn shift(&self) -> C64 {
        C64::new(0.0, 0.0)
    }

    fn solve(&self, _rhs: &mut [C64]) -> Result<()> {
        Ok(())
    }
}

pub struct DstShiftedSolver {
    lambda: C64,
    n_side: usize,
    sine: Arc<DMatrix<f64>>,
    inv_denominators: Vec<C64>,
}

impl DstShiftedSolver {
    /// `S X S` applied to the real and imaginary panels separately.
    fn transform(&self, re: &DMatrix<f64>, im: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let s = &*self.sine;
        (s * re * s, s * im * s)
    }
}

impl ShiftedSolver for DstShiftedSolver {
    fn shift(&self) -> C64 {
        self.lambda
    }

    fn solve(&self, rhs: &mut [C64]) -> Result<()> {
        let n = self.n_side;
        if rhs.len() != n * n {
            return Err(Error::Shape(format!("DST rhs {} vs {}", rhs.len(), n * n)));
        }
        let re = DMatrix::from_iterator(n, n, rhs.iter().map(|c| c.re));
        let im = DMatrix::from_iterator(n, n, rhs.iter().map(|c| c.im));
        let (hre, him) = self.transform(&re, &im);
        let mut sre = DMatrix::zeros(n, n);
        let mut sim = DMatrix::zeros(n, n);
        for (idx, d) in self.inv_denominators.iter().enumerate() {
            let v = C64::new(hre[idx], him[idx]) * d;
            sre[idx] = v.re;
            sim[idx] = v.im;
        }
        let (xre, xim) = self.transform(&sre, &sim);
        for (idx, r) in rhs.iter_mut().enumerate() {
            *r = C64::new(xre[idx], xim[idx]);
        }
        Ok(())
    }
}

/// First-order wave operator `[[0, I], [Delta, 0]]` on `2N` unknowns `[y; p]`.
#[derive(Debug, Clone)]
pub struct WaveOperator {
    pub laplacian: Laplacian2d,
}

impl SpatialOperator for WaveOperator {
    fn dim(&self) -> usize {
        2 * self.laplacian.dim()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.laplacian.dim();
        let (y, p) = x.split_at(n);
        let (oy, op) = out.split_at_mut(n);
        oy.copy_from_slice(p);
        self.laplacian.apply(y, op);
    }

    fn diagonal(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn frobenius_sq(&self) -> f64 {
        self.laplacian.dim() as f64 + self.laplacian.frobenius_sq()
    }

    fn shifted_solver(&self, lambda: C64) -> Result<Box<dyn ShiftedSolver>> {
        if lambda == C64::new(0.0, 0.0) {
            return Ok(Box::new(IdentitySolver));
        }
        Ok(Box::new(WaveShiftedSolver {
            lambda,
            inner: self.laplacian.dst_solver(lambda * lambda),
            laplacian: self.laplacian.clone(),
        }))
    }
}

/// Block elimination: `(I - lambda^2 Delta) y = a + lambda b`, then `p = b + lambda Delta y`.
pub struct WaveShiftedSolver {
    lambda: C64,
    inner: DstShiftedSolver,
    laplacian: Laplacian2d,
}

impl ShiftedSolver for WaveShiftedSolver {
    fn shift(&self) -> C64 {
        self.lambda
    }

    fn solve(&self, rhs: &mut [C64]) -> Result<()> {
        let n = self.laplacian.dim();
        if rhs.len() != 2 * n {
            return Err(Error::Shape(format!("wave rhs {} vs {}", rhs.len(), 2 * n)));
        }
        let (a, b) = rhs.split_at_mut(n);
        for (ai, bi) in a.iter_mut().zip(b.iter()) {
            *ai += self.lambda * bi;
        }
        self.inner.solve(a)?;
        let re: Vec<f64> = a.iter().map(|c| c.re).collect();
        let im: Vec<f64> = a.iter().map(|c| c.im).collect();
        let mut lre = vec![0.0; n];
        let mut lim = vec![0.0; n];
        self.laplacian.apply(&re, &mut lre);
        self.laplacian.apply(&im, &mut lim);
        for (i, bi) in b.iter_mut().enumerate() {
            *bi += self.lambda * C64::new(lre[i], lim[i]);
        }
        Ok(())
    }
}

/// `scale * base + diag(shift)`.
#[derive(Debug, Clone)]
pub struct AffineOperator {
    pub base: Arc<dyn SpatialOperator>,
    pub scale: f64,
    pub shift: Option<Vec<f64>>,
}

impl AffineOperator {
    pub fn scaled(base: Arc<dyn SpatialOperator>, scale: f64) -> Self {
        AffineOperator {
            base,
            scale,
            shift: None,
        }
    }
}

impl SpatialOperator for AffineOperator {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.base.apply(x, out);
        for o in out.iter_mut() {
            *o *= self.scale;
        }
        if let Some(s) = &self.shift {
            for ((o, c), xi) in out.iter_mut().zip(s).zip(x) {
                *o += c * xi;
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self
            .base
            .diagonal()
            .iter()
            .map(|v| self.scale * v)
            .collect();
        if let Some(s) = &self.shift {
            for (di, c) in d.iter_mut().zip(s) {
                *di += c;
            }
        }
        d
    }

    fn frobenius_sq(&self) -> f64 {
        let base_diag = self.base.diagonal();
        let mut total = self.scale * self.scale * self.base.frobenius_sq();
        if let Some(s) = &self.shift {
            total += s
                .iter()
                .zip(&base_diag)
                .map(|(c, b)| 2.0 * self.scale * b * c + c * c)
                .sum::<f64>();
        }
        total
    }

    fn tridiagonal(&self) -> Option<Tridiagonal> {
        self.base
            .tridiagonal()
            .map(|t| t.affine(self.scale, self.shift.as_deref()))
    }

    fn shifted_solver(&self, lambda: C64) -> Result<Box<dyn ShiftedSolver>> {
        match &self.shift {
            None => self.base.shifted_solver(lambda * self.scale),
            Some(_) => match self.tridiagonal() {
                Some(t) => Ok(Box::new(t.shifted(lambda)?)),
                None => DenseShiftedSolver::new(&self.to_dense(), lambda)
                    .map(|s| Box::new(s) as Box<dyn ShiftedSolver>),
            },
        }
    }
}

/// Frobenius inner product `trace(A^T B)` of two operators that share a base, using only
/// the base's diagonal and norm.
pub fn affine_inner(a: &AffineOperator, b: &AffineOperator) -> f64 {
    let base_diag = a.base.diagonal();
    let mut total = a.scale * b.scale * a.base.frobenius_sq();
    if let Some(sb) = &b.shift {
        total += a.scale * base_diag.iter().zip(sb).map(|(d, c)| d * c).sum::<f64>();
    }
    if let Some(sa) = &a.shift {
        total += b.scale * base_diag.iter().zip(sa).map(|(d, c)| d * c).sum::<f64>();
        if let Some(sb) = &b.shift {
            total += sa.iter().zip(sb).map(|(x, y)| x * y).sum::<f64>();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_complex(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn residual(k: &DMatrix<f64>, lambda: C64, x: &[C64], r: &[C64]) -> f64 {
        let n = k.nrows();
        let a = DMatrix::<C64>::identity(n, n) - complexify(k) * lambda;
        let ax = a * DVector::from_column_slice(x);
        let rv = DVector::from_column_slice(r);
        (ax - &rv).norm() / rv.norm()
    }

    fn check_solver(op: &dyn SpatialOperator, lambda: C64, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_complex(op.dim(), &mut rng);
        let mut x = r.clone();
        op.shifted_solver(lambda).unwrap().solve(&mut x).unwrap();
        residual(&op.to_dense(), lambda, &x, &r)
    }

    #[test]
    fn laplacian_1d_closed_form() {
        let lap = Laplacian1d { n: 3, hx: 1.0 };
        let dense = lap.to_dense();
        let expected =
            DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.0, 1.0, -2.0, 1.0, 0.0, 1.0, -2.0]);
        assert_eq!(dense, expected);
        let mut eig: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut closed: Vec<f64> = (1..=3)
            .map(|k| 2.0 * (k as f64 * std::f64::consts::PI / 4.0).cos() - 2.0)
            .collect();
        closed.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in eig.iter().zip(&closed) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!((lap.frobenius_sq() - dense.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn structured_queries_match_dense() {
        let lap2 = Laplacian2d::new(5, 0.3);
        let d = lap2.to_dense();
        assert!((lap2.frobenius_sq() - d.norm_squared()).abs() < 1e-9 * d.norm_squared());
        assert_eq!(
            lap2.diagonal(),
            d.diagonal().iter().copied().collect::<Vec<_>>()
        );
        let wave = WaveOperator { laplacian: lap2 };
        let wd = wave.to_dense();
        assert!((wave.frobenius_sq() - wd.norm_squared()).abs() < 1e-9 * wd.norm_squared());
        let base: Arc<dyn SpatialOperator> = Arc::new(Laplacian1d { n: 6, hx: 0.5 });
        let a = AffineOperator {
            base: base.clone(),
            scale: 0.3,
            shift: Some(vec![0.1, -0.2, 0.3, 0.0, 1.0, 2.0]),
        };
        let b = AffineOperator {
            base,
            scale: -1.1,
            shift: Some(vec![1.0, 1.0, -0.5, 0.2, 0.0, 0.4]),
        };
        let (ad, bd) = (a.to_dense(), b.to_dense());
        assert!((a.frobenius_sq() - ad.norm_squared()).abs() < 1e-12);
        assert!((affine_inner(&a, &b) - ad.dot(&bd)).abs() < 1e-12);
    }

    #[test]
    fn shifted_solve_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lap1: Arc<dyn SpatialOperator> = Arc::new(Laplacian1d { n: 12, hx: 0.2 });
        let ops: Vec<Box<dyn SpatialOperator>> = vec![
            Box::new(DiagonalOperator(vec![-1.0, -3.0, -0.5])),
            Box::new(Laplacian1d { n: 10, hx: 0.1 }),
            Box::new(Laplacian2d::new(6, 0.4)),
            Box::new(WaveOperator {
                laplacian: Laplacian2d::new(4, 0.5),
            }),
            Box::new(AffineOperator::scaled(lap1.clone(), 0.7)),
            Box::new(AffineOperator {
                base: lap1,
                scale: 0.01,
                shift: Some((0..12).map(|i| 1.0 - 0.1 * i as f64).collect()),
            }),
        ];
        for op in &ops {
            for s in 0..20 {
                let lambda = C64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                let res = check_solver(op.as_ref(), lambda, s);
                assert!(res < 1e-10, "{op:?} lambda={lambda} res={res}");
            }
        }
    }

    #[test]
    fn shift_zero_is_identity_and_conjugation_commutes() {
        let op = Laplacian2d::new(5, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_complex(25, &mut rng);
        let mut x = r.clone();
        op.shifted_solver(ZERO).unwrap().solve(&mut x).unwrap();
        for (a, b) in x.iter().zip(&r) {
            assert!((a - b).norm() < 1e-14);
        }
        let lambda = C64::new(0.3, 0.7);
        let mut x1 = r.clone();
        op.shifted_solver(lambda).unwrap().solve(&mut x1).unwrap();
        let mut x2: Vec<C64> = r.iter().map(|c| c.conj()).collect();
        op.shifted_solver(lambda.conj())
            .unwrap()
            .solve(&mut x2)
            .unwrap();
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a.conj() - b).norm() < 1e-12);
        }
    }
}
