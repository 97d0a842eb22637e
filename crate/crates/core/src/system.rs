//! All-at-once space-time operators in matrix-free Kronecker form.
//!
//! Vectors are time-major: block `l` (length `n`) holds the state at `t_l`. Viewed as an
//! `n x m` column-major panel, `(C ⊗ I_n) z` is `Z C^T`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{AffineOperator, SpatialOperator};
use crate::sinc::{SincGrid, SincIntegrationMatrix};

/// Dense path cap on `m n`.
pub const DENSE_CAP: usize = 5000;

/// Source term `g(t)` written into the output slice.
pub type Source = dyn Fn(f64, &mut [f64]) + Send + Sync;

/// The time-indexed spatial operators `K(t_j)`.
#[derive(Debug, Clone)]
pub enum BlockFamily {
    Constant(Arc<dyn SpatialOperator>),
    /// `K_j = scales[j] * base + diag(shifts[j])`.
    Affine {
        base: Arc<dyn SpatialOperator>,
        scales: Vec<f64>,
        shifts: Option<Vec<Vec<f64>>>,
    },
    General(Vec<Arc<dyn SpatialOperator>>),
}

impl BlockFamily {
    pub fn dim(&self) -> usize {
        match self {
            BlockFamily::Constant(k) => k.dim(),
            BlockFamily::Affine { base, .. } => base.dim(),
            BlockFamily::General(ks) => ks.first().map_or(0, |k| k.dim()),
        }
    }

    /// Number of time blocks, `None` for a constant family.
    pub fn len(&self) -> Option<usize> {
        match self {
            BlockFamily::Constant(_) => None,
            BlockFamily::Affine { scales, .. } => Some(scales.len()),
            BlockFamily::General(ks) => Some(ks.len()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    fn validate(&self, m: usize) -> Result<()> {
        let n = self.dim();
        if let Some(len) = self.len() {
            if len != m {
                return Err(Error::Shape(format!("expected {m} time blocks, got {len}")));
            }
        }
        match self {
            BlockFamily::Affine {
                shifts: Some(s), ..
            } => {
                if s.len() != m || s.iter().any(|v| v.len() != n) {
                    return Err(Error::Shape(
                        "affine shift vectors have the wrong shape".into(),
                    ));
                }
            }
            BlockFamily::General(ks) if ks.iter().any(|k| k.dim() != n) => {
                return Err(Error::Shape("time blocks differ in dimension".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// `out = K(t_j) x`.
    pub fn apply_block(&self, j: usize, x: &[f64], out: &mut [f64]) {
        match self {
            BlockFamily::Constant(k) => k.apply(x, out),
            BlockFamily::Affine {
                base,
                scales,
                shifts,
            } => {
                base.apply(x, out);
                let s = scales[j];
                for o in out.iter_mut() {
                    *o *= s;
                }
                if let Some(sh) = shifts {
                    for ((o, c), xi) in out.iter_mut().zip(&sh[j]).zip(x) {
                        *o += c * xi;
                    }
                }
            }
            BlockFamily::General(ks) => ks[j].apply(x, out),
        }
    }

    /// Operator handle for block `j`.
    pub fn block(&self, j: usize) -> Arc<dyn SpatialOperator> {
        match self {
            BlockFamily::Constant(k) => Arc::clone(k),
            BlockFamily::Affine {
                base,
                scales,
                shifts,
            } => Arc::new(AffineOperator {
                base: Arc::clone(base),
                scale: scales[j],
                shift: shifts.as_ref().map(|s| s[j].clone()),
            }),
            BlockFamily::General(ks) => Arc::clone(&ks[j]),
        }
    }
}

fn for_each_block<F>(n: usize, x: &[f64], out: &mut [f64], f: F)
where
    F: Fn(usize, &[f64], &mut [f64]) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(n)
            .zip(x.par_chunks(n))
            .enumerate()
            .for_each(|(j, (o, xi))| f(j, xi, o));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (j, (o, xi)) in out.chunks_mut(n).zip(x.chunks(n)).enumerate() {
            f(j, xi, o);
        }
    }
}

/// `out = (C ⊗ I_n) z` for a dense `m x m` time matrix `C`.
pub fn apply_time_matrix(c: &DMatrix<f64>, n: usize, z: &[f64], out: &mut [f64]) {
    let m = c.nrows();
    for_each_block(n, z, out, |l, _, o| {
        o.fill(0.0);
        for j in 0..m {
            let clj = c[(l, j)];
            if clj != 0.0 {
                for (oi, zi) in o.iter_mut().zip(&z[j * n..(j + 1) * n]) {
                    *oi += clj * zi;
                }
            }
        }
    });
}

fn rhs_vector(
    coupling: &DMatrix<f64>,
    grid: &SincGrid,
    n: usize,
    source: Option<&Source>,
    initial: &[f64],
) -> Result<Vec<f64>> {
    if initial.len() != n {
        return Err(Error::Shape(format!(
            "initial vector has length {}, expected {n}",
            initial.len()
        )));
    }
    let m = grid.size();
    let mut rhs = vec![0.0; m * n];
    if let Some(g) = source {
        let mut gh = vec![0.0; m * n];
        for (l, t) in grid.points.iter().enumerate() {
            g(*t, &mut gh[l * n..(l + 1) * n]);
        }
        apply_time_matrix(coupling, n, &gh, &mut rhs);
    }
    for block in rhs.chunks_mut(n) {
        for (b, r) in block.iter_mut().zip(initial) {
            *b += r;
        }
    }
    Ok(rhs)
}

/// Linear all-at-once operator `I - (I^{(-1)} D ⊗ I_n) blockdiag(K_j)` with its right-hand side.
#[derive(Debug, Clone)]
pub struct AllAtOnceSystem {
    pub grid: SincGrid,
    pub imat: SincIntegrationMatrix,
    /// `I^{(-1)} D`.
    pub coupling: DMatrix<f64>,
    pub blocks: BlockFamily,
    pub n: usize,
    pub rhs: Vec<f64>,
}

impl AllAtOnceSystem {
    fn with_family(
        blocks: BlockFamily,
        grid: &SincGrid,
        source: Option<&Source>,
        initial: &[f64],
    ) -> Result<Self> {
        let m = grid.size();
        blocks.validate(m)?;
        let n = blocks.dim();
        let imat = SincIntegrationMatrix::new(m)?;
        let coupling = imat.times_diagonal(&grid.d);
        let rhs = rhs_vector(&coupling, grid, n, source, initial)?;
        Ok(AllAtOnceSystem {
            grid: grid.clone(),
            imat,
            coupling,
            blocks,
            n,
            rhs,
        })
    }

    /// `(I_m ⊗ I_n - I^{(-1)} D ⊗ K) y = (I^{(-1)} D ⊗ I_n) g_h + e_m ⊗ r`.
    pub fn assemble_constant(
        k: Arc<dyn SpatialOperator>,
        grid: &SincGrid,
        source: Option<&Source>,
        initial: &[f64],
    ) -> Result<Self> {
        Self::with_family(BlockFamily::Constant(k), grid, source, initial)
    }

    /// Time-varying coefficients, one operator per collocation time (ascending).
    pub fn assemble_varying(
        blocks: BlockFamily,
        grid: &SincGrid,
        source: Option<&Source>,
        initial: &[f64],
    ) -> Result<Self> {
        if matches!(blocks, BlockFamily::Constant(_)) {
            return Self::with_family(blocks, grid, source, initial);
        }
        if blocks.len() != Some(grid.size()) {
            return Err(Error::Shape(format!(
                "expected {} operators, got {:?}",
                grid.size(),
                blocks.len()
            )));
        }
        Self::with_family(blocks, grid, source, initial)
    }

    pub fn m(&self) -> usize {
        self.grid.size()
    }

    pub fn len(&self) -> usize {
        self.m() * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.len() {
            return Err(Error::Shape(format!(
                "vector has length {}, expected {}",
                y.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// `out = A y`.
    pub fn apply_into(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        self.check(y)?;
        let n = self.n;
        let mut kz = vec![0.0; y.len()];
        let blocks = &self.blocks;
        for_each_block(n, y, &mut kz, |j, x, o| blocks.apply_block(j, x, o));
        apply_time_matrix(&self.coupling, n, &kz, out);
        for (o, yi) in out.iter_mut().zip(y) {
            *o = yi - *o;
        }
        Ok(())
    }

    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; y.len()];
        self.apply_into(y, &mut out)?;
        Ok(out)
    }

    /// `A y - b`.
    pub fn residual(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.apply(y)?;
        for (ri, bi) in r.iter_mut().zip(&self.rhs) {
            *ri -= bi;
        }
        Ok(r)
    }

    /// Explicit dense assembly for `m n <= DENSE_CAP`.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let size = self.len();
        if size > DENSE_CAP {
            return Err(Error::TooLarge {
                size,
                cap: DENSE_CAP,
            });
        }
        let m = self.m();
        let n = self.n;
        let mut a = DMatrix::<f64>::identity(size, size);
        for j in 0..m {
            let kj = self.blocks.block(j).to_dense();
            for l in 0..m {
                let c = self.coupling[(l, j)];
                let mut view = a.view_mut((l * n, j * n), (n, n));
                view -= &kj * c;
            }
        }
        Ok(a)
    }
}

/// Nonlinear right-hand side `q(t, y)` and its Jacobian structure.
pub trait NonlinearTerm: Send + Sync {
    fn dim(&self) -> usize;

    /// `out = q(t, y)`.
    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]);

    /// Jacobian blocks `grad_y q(t_j, y_j)` for all collocation times.
    fn jacobian(&self, times: &[f64], states: &[&[f64]]) -> BlockFamily;
}

/// `q(t, y) = K y`.
#[derive(Debug, Clone)]
pub struct LinearTerm(pub Arc<dyn SpatialOperator>);

impl NonlinearTerm for LinearTerm {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        self.0.apply(y, out);
    }

    fn jacobian(&self, _times: &[f64], _states: &[&[f64]]) -> BlockFamily {
        BlockFamily::Constant(Arc::clone(&self.0))
    }
}

/// `F(y) = y - (I^{(-1)} D ⊗ I_n) q(y)` with `b_h` from the linear formula.
#[derive(Clone)]
pub struct NonlinearSystem {
    pub grid: SincGrid,
    pub imat: SincIntegrationMatrix,
    pub coupling: DMatrix<f64>,
    pub term: Arc<dyn NonlinearTerm>,
    pub n: usize,
    pub rhs: Vec<f64>,
}

impl NonlinearSystem {
    pub fn assemble(
        term: Arc<dyn NonlinearTerm>,
        grid: &SincGrid,
        source: Option<&Source>,
        initial: &[f64],
    ) -> Result<Self> {
        let m = grid.size();
        let n = term.dim();
        let imat = SincIntegrationMatrix::new(m)?;
        let coupling = imat.times_diagonal(&grid.d);
        let rhs = rhs_vector(&coupling, grid, n, source, initial)?;
        Ok(NonlinearSystem {
            grid: grid.clone(),
            imat,
            coupling,
            term,
            n,
            rhs,
        })
    }

    pub fn m(&self) -> usize {
        self.grid.size()
    }

    pub fn len(&self) -> usize {
        self.m() * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.len() {
            return Err(Error::Shape(format!(
                "vector has length {}, expected {}",
                y.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Stacked `q(t_j, y_j)`.
    pub fn nonlinear_part(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        let mut q = vec![0.0; y.len()];
        let points = &self.grid.points;
        let term = &self.term;
        for_each_block(self.n, y, &mut q, |j, x, o| term.eval(points[j], x, o));
        Ok(q)
    }

    /// `F(y) - b_h`.
    pub fn residual(&self, y: &[f64]) -> Result<Vec<f64>> {
        let q = self.nonlinear_part(y)?;
        let mut out = vec![0.0; y.len()];
        apply_time_matrix(&self.coupling, self.n, &q, &mut out);
        for ((o, yi), bi) in out.iter_mut().zip(y).zip(&self.rhs) {
            *o = yi - *o - bi;
        }
        Ok(out)
    }

    /// Linear all-at-once operator `grad F(y)`; its right-hand side is zero.
    pub fn jacobian(&self, y: &[f64]) -> Result<AllAtOnceSystem> {
        self.check(y)?;
        let states: Vec<&[f64]> = y.chunks(self.n).collect();
        let blocks = self.term.jacobian(&self.grid.points, &states);
        blocks.validate(self.m())?;
        if blocks.dim() != self.n {
            return Err(Error::Shape(
                "Jacobian blocks have the wrong dimension".into(),
            ));
        }
        Ok(AllAtOnceSystem {
            grid: self.grid.clone(),
            imat: self.imat.clone(),
            coupling: self.coupling.clone(),
            blocks,
            n: self.n,
            rhs: vec![0.0; self.len()],
        })
    }
}
