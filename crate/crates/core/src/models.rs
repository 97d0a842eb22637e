//! Semi-discretized benchmark problems: 2D heat (constant and time-varying), 2D first-order
//! wave, 1D Allen–Cahn, and synthetic spectra for the eigenvalue checks.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::newton::{newton_solve, NewtonConfig, NewtonReport};
use crate::operator::{
    AffineOperator, DenseOperator, DiagonalOperator, Laplacian1d, Laplacian2d, ShiftedSolver,
    SpatialOperator, WaveOperator,
};
use crate::precond::average_operator;
use crate::sinc::{indefinite_integral_weights, SincGrid, SincParams};
use crate::system::{AllAtOnceSystem, BlockFamily, NonlinearSystem, NonlinearTerm, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Heat2dConst,
    Heat2dVarying,
    Wave2d,
    AllenCahn1d,
    SyntheticDiagonal,
}

impl ProblemKind {
    pub fn id(&self) -> &'static str {
        match self {
            ProblemKind::Heat2dConst => "heat2d-const",
            ProblemKind::Heat2dVarying => "heat2d-varying",
            ProblemKind::Wave2d => "wave2d",
            ProblemKind::AllenCahn1d => "allen-cahn",
            ProblemKind::SyntheticDiagonal => "synthetic",
        }
    }
}

/// Right-hand side structure of `y' = ...`.
#[derive(Clone)]
pub enum Dynamics {
    /// `K y`.
    Constant(Arc<dyn SpatialOperator>),
    /// `c(t) B y`.
    Scaled {
        base: Arc<dyn SpatialOperator>,
        coefficient: fn(f64) -> f64,
    },
    /// `q(t, y)`.
    Nonlinear(Arc<dyn NonlinearTerm>),
}

/// An assembled space-time problem.
pub enum Assembled {
    Linear(AllAtOnceSystem),
    Nonlinear(NonlinearSystem),
}

#[derive(Clone)]
pub struct ProblemModel {
    pub kind: ProblemKind,
    /// State dimension per time point.
    pub n: usize,
    pub hx: f64,
    pub horizon: f64,
    pub dynamics: Dynamics,
    pub source: Option<Arc<Source>>,
    pub initial: Vec<f64>,
    pub exact: Option<Arc<Source>>,
    /// Leading entries of each state compared by [`error_max`].
    pub error_components: usize,
}

impl std::fmt::Debug for ProblemModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemModel")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("hx", &self.hx)
            .field("horizon", &self.horizon)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemModel {
    pub fn grid(&self, half_width: usize) -> Result<SincGrid> {
        SincGrid::new(SincParams::new(self.horizon, half_width)?)
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self.dynamics, Dynamics::Nonlinear(_))
    }

    pub fn assemble(&self, grid: &SincGrid) -> Result<Assembled> {
        let src = self.source.as_deref();
        match &self.dynamics {
            Dynamics::Constant(k) => {
                AllAtOnceSystem::assemble_constant(Arc::clone(k), grid, src, &self.initial)
                    .map(Assembled::Linear)
            }
            Dynamics::Scaled { base, coefficient } => {
                let family = BlockFamily::Affine {
                    base: Arc::clone(base),
                    scales: grid.points.iter().map(|t| coefficient(*t)).collect(),
                    shifts: None,
                };
                AllAtOnceSystem::assemble_varying(family, grid, src, &self.initial)
                    .map(Assembled::Linear)
            }
            Dynamics::Nonlinear(q) => {
                NonlinearSystem::assemble(Arc::clone(q), grid, src, &self.initial)
                    .map(Assembled::Nonlinear)
            }
        }
    }

    pub fn linear_system(&self, grid: &SincGrid) -> Result<AllAtOnceSystem> {
        match self.assemble(grid)? {
            Assembled::Linear(s) => Ok(s),
            Assembled::Nonlinear(_) => {
                Err(Error::Parameter(format!("{} is nonlinear", self.kind.id())))
            }
        }
    }

    pub fn nonlinear_system(&self, grid: &SincGrid) -> Result<NonlinearSystem> {
        match self.assemble(grid)? {
            Assembled::Nonlinear(s) => Ok(s),
            Assembled::Linear(_) => Err(Error::Parameter(format!("{} is linear", self.kind.id()))),
        }
    }

    /// Averaged operator `K̄` on `grid`; for nonlinear problems, of the Jacobian at the initial state.
    pub fn averaged_operator(&self, grid: &SincGrid) -> Result<Arc<dyn SpatialOperator>> {
        match &self.dynamics {
            Dynamics::Constant(k) => Ok(Arc::clone(k)),
            Dynamics::Scaled { base, coefficient } => {
                let c: Vec<f64> = grid.points.iter().map(|t| coefficient(*t)).collect();
                Ok(Arc::new(AffineOperator::scaled(
                    Arc::clone(base),
                    c.iter().sum::<f64>() / c.len() as f64,
                )))
            }
            Dynamics::Nonlinear(q) => {
                let states: Vec<&[f64]> = vec![self.initial.as_slice(); grid.size()];
                average_operator(&q.jacobian(&grid.points, &states))
            }
        }
    }

    /// Solver for `(I - λ K̄) x = r`.
    pub fn shifted_solver(&self, grid: &SincGrid, lambda: C64) -> Result<Box<dyn ShiftedSolver>> {
        self.averaged_operator(grid)?.shifted_solver(lambda)
    }

    /// Stacked exact states at the collocation times.
    pub fn exact_samples(&self, grid: &SincGrid) -> Option<Vec<f64>> {
        let exact = self.exact.as_ref()?;
        let n = self.n;
        let mut out = vec![0.0; grid.size() * n];
        for (l, t) in grid.points.iter().enumerate() {
            exact(*t, &mut out[l * n..(l + 1) * n]);
        }
        Some(out)
    }
}

/// Max-norm error over all collocation times against the model's exact solution.
pub fn error_max(y: &[f64], model: &ProblemModel, grid: &SincGrid) -> Result<f64> {
    let exact = model.exact_samples(grid).ok_or_else(|| {
        Error::UnsupportedMetric(format!("{} has no exact solution", model.kind.id()))
    })?;
    error_against(y, &exact, model.n, model.error_components)
}

/// Max-norm error against reference states, over the first `components` entries of each block.
pub fn error_against(y: &[f64], reference: &[f64], n: usize, components: usize) -> Result<f64> {
    if y.len() != reference.len() || n == 0 || !y.len().is_multiple_of(n) || components > n {
        return Err(Error::Shape(format!(
            "solution of length {} vs reference of length {} with block size {n}",
            y.len(),
            reference.len()
        )));
    }
    Ok(y.chunks(n)
        .zip(reference.chunks(n))
        .flat_map(|(a, b)| {
            a[..components]
                .iter()
                .zip(&b[..components])
                .map(|(x, z)| (x - z).abs())
        })
        .fold(0.0, f64::max))
}

/// Centered second difference on `n` interior points of `(0, length)` with Dirichlet values.
/// Returns the operator and the boundary forcing `(left, 0, …, 0, right) / h²`.
pub fn laplacian_1d(n: usize, length: f64, bc: (f64, f64)) -> Result<(Laplacian1d, Vec<f64>)> {
    if n < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 interior points, got {n}"
        )));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Parameter(format!(
            "interval length must be positive, got {length}"
        )));
    }
    let hx = length / (n + 1) as f64;
    let mut forcing = vec![0.0; n];
    forcing[0] = bc.0 / (hx * hx);
    forcing[n - 1] += bc.1 / (hx * hx);
    Ok((Laplacian1d { n, hx }, forcing))
}

fn bump(x: f64) -> f64 {
    x * (PI - x)
}

/// Samples of `x1 (π - x1) x2 (π - x2)` and of its Laplacian on the interior grid.
fn product_profile(n_side: usize, hx: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = Vec::with_capacity(n_side * n_side);
    let mut lap = Vec::with_capacity(n_side * n_side);
    for j in 0..n_side {
        let b2 = bump((j + 1) as f64 * hx);
        for i in 0..n_side {
            let b1 = bump((i + 1) as f64 * hx);
            p.push(b1 * b2);
            lap.push(-2.0 * (b1 + b2));
        }
    }
    (p, lap)
}

fn check_side(n_side: usize, horizon: f64) -> Result<f64> {
    if n_side < 4 {
        return Err(Error::Parameter(format!(
            "need at least 4 points per side, got {n_side}"
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Parameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    Ok(PI / (n_side + 1) as f64)
}

/// `y_t = Δy + g` on `(0, π)²`, exact solution `x1(π-x1)x2(π-x2) e^{-t}`.
pub fn make_heat2d_const(n_side: usize, horizon: f64) -> Result<ProblemModel> {
    let hx = check_side(n_side, horizon)?;
    let (p, lap) = product_profile(n_side, hx);
    let k: Arc<dyn SpatialOperator> = Arc::new(Laplacian2d::new(n_side, hx));
    let sp = p.clone();
    let source = move |t: f64, out: &mut [f64]| {
        let e = (-t).exp();
        for ((o, a), b) in out.iter_mut().zip(&sp).zip(&lap) {
            *o = -(a + b) * e;
        }
    };
    let ep = p.clone();
    let exact = move |t: f64, out: &mut [f64]| {
        let e = (-t).exp();
        for (o, a) in out.iter_mut().zip(&ep) {
            *o = a * e;
        }
    };
    Ok(ProblemModel {
        kind: ProblemKind::Heat2dConst,
        n: n_side * n_side,
        hx,
        horizon,
        dynamics: Dynamics::Constant(k),
        source: Some(Arc::new(source)),
        initial: p,
        exact: Some(Arc::new(exact)),
        error_components: n_side * n_side,
    })
}

/// `κ(t) = 1 / ((1.2 + t) ln(1.2 + t))`.
pub fn kappa(t: f64) -> f64 {
    let s = 1.2 + t;
    1.0 / (s * s.ln())
}

/// `y_t = κ(t) Δy + g`, exact solution `x1(π-x1)x2(π-x2) / ln(1.2 + t)`.
pub fn make_heat2d_varying(n_side: usize, horizon: f64) -> Result<ProblemModel> {
    let hx = check_side(n_side, horizon)?;
    let (p, lap) = product_profile(n_side, hx);
    let base: Arc<dyn SpatialOperator> = Arc::new(Laplacian2d::new(n_side, hx));
    let sp = p.clone();
    // The profile is not a Laplacian eigenfunction, so g = y_t - κ Δy is nonzero.
    let source = move |t: f64, out: &mut [f64]| {
        let s = 1.2 + t;
        let l = s.ln();
        let c = -1.0 / (s * l * l);
        for ((o, a), b) in out.iter_mut().zip(&sp).zip(&lap) {
            *o = c * (a + b);
        }
    };
    let ep = p.clone();
    let exact = move |t: f64, out: &mut [f64]| {
        let c = 1.0 / (1.2 + t).ln();
        for (o, a) in out.iter_mut().zip(&ep) {
            *o = a * c;
        }
    };
    let initial = p.iter().map(|a| a / 1.2f64.ln()).collect();
    Ok(ProblemModel {
        kind: ProblemKind::Heat2dVarying,
        n: n_side * n_side,
        hx,
        horizon,
        dynamics: Dynamics::Scaled {
            base,
            coefficient: kappa,
        },
        source: Some(Arc::new(source)),
        initial,
        exact: Some(Arc::new(exact)),
        error_components: n_side * n_side,
    })
}

/// `y_tt = Δy + g` as `[y; p]' = [[0, I], [Δ, 0]] [y; p] + [0; g]`, exact `y = x1(π-x1)x2(π-x2) ln(1+t)`.
/// Errors are measured on the displacement `y`.
pub fn make_wave2d(n_side: usize, horizon: f64) -> Result<ProblemModel> {
    let hx = check_side(n_side, horizon)?;
    let (p, lap) = product_profile(n_side, hx);
    let nn = n_side * n_side;
    let k: Arc<dyn SpatialOperator> = Arc::new(WaveOperator {
        laplacian: Laplacian2d::new(n_side, hx),
    });
    let sp = p.clone();
    let source = move |t: f64, out: &mut [f64]| {
        let (gy, gp) = out.split_at_mut(nn);
        gy.fill(0.0);
        let a = -1.0 / ((1.0 + t) * (1.0 + t));
        let b = (1.0 + t).ln();
        for ((o, pv), lv) in gp.iter_mut().zip(&sp).zip(&lap) {
            *o = a * pv - b * lv;
        }
    };
    let ep = p.clone();
    let exact = move |t: f64, out: &mut [f64]| {
        let (ey, epv) = out.split_at_mut(nn);
        let l = (1.0 + t).ln();
        let r = 1.0 / (1.0 + t);
        for ((y, q), pv) in ey.iter_mut().zip(epv.iter_mut()).zip(&ep) {
            *y = pv * l;
            *q = pv * r;
        }
    };
    let mut initial = vec![0.0; 2 * nn];
    initial[nn..].copy_from_slice(&p);
    Ok(ProblemModel {
        kind: ProblemKind::Wave2d,
        n: 2 * nn,
        hx,
        horizon,
        dynamics: Dynamics::Constant(k),
        source: Some(Arc::new(source)),
        initial,
        exact: Some(Arc::new(exact)),
        error_components: nn,
    })
}

/// `q(y) = ε (Δy + f) + y - y³` with boundary forcing `f`.
#[derive(Debug, Clone)]
pub struct AllenCahnTerm {
    pub laplacian: Arc<Laplacian1d>,
    pub forcing: Vec<f64>,
    pub epsilon: f64,
}

impl NonlinearTerm for AllenCahnTerm {
    fn dim(&self) -> usize {
        self.laplacian.n
    }

    fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        self.laplacian.apply(y, out);
        for ((o, f), yi) in out.iter_mut().zip(&self.forcing).zip(y) {
            *o = self.epsilon * (*o + f) + yi - yi * yi * yi;
        }
    }

    fn jacobian(&self, times: &[f64], states: &[&[f64]]) -> BlockFamily {
        BlockFamily::Affine {
            base: Arc::clone(&self.laplacian) as Arc<dyn SpatialOperator>,
            scales: vec![self.epsilon; times.len()],
            shifts: Some(
                states
                    .iter()
                    .map(|s| s.iter().map(|y| 1.0 - 3.0 * y * y).collect())
                    .collect(),
            ),
        }
    }
}

/// `y_t = 0.01 y_xx + y - y³` on `(-1, 1)`, `y(±1) = ±1`, `y(x, 0) = 0.53x + 0.47 sin(-1.5πx)`.
pub fn make_allen_cahn(n: usize, horizon: f64) -> Result<ProblemModel> {
    if n < 8 {
        return Err(Error::Parameter(format!(
            "need at least 8 interior points, got {n}"
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Parameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let (lap, forcing) = laplacian_1d(n, 2.0, (-1.0, 1.0))?;
    let hx = lap.hx;
    let initial = (1..=n)
        .map(|i| {
            let x = -1.0 + i as f64 * hx;
            0.53 * x + 0.47 * (-1.5 * PI * x).sin()
        })
        .collect();
    let term = AllenCahnTerm {
        laplacian: Arc::new(lap),
        forcing,
        epsilon: 0.01,
    };
    Ok(ProblemModel {
        kind: ProblemKind::AllenCahn1d,
        n,
        hx,
        horizon,
        dynamics: Dynamics::Nonlinear(Arc::new(term)),
        source: None,
        initial,
        exact: None,
        error_components: n,
    })
}

/// Prescribed spectrum for a synthetic `K`.
#[derive(Debug, Clone)]
pub enum SyntheticSpectrum {
    /// `K = diag(values)`, all negative.
    NegativeReal(Vec<f64>),
    /// 2×2 rotation blocks with eigenvalues `±iβ`.
    ImaginaryPairs(Vec<f64>),
}

/// `y' = K y` with ones as initial data and `σ(K)` prescribed.
pub fn make_synthetic(spectrum: SyntheticSpectrum, horizon: f64) -> Result<ProblemModel> {
    let k: Arc<dyn SpatialOperator> = match &spectrum {
        SyntheticSpectrum::NegativeReal(v) => {
            if v.is_empty() || v.iter().any(|x| !(*x < 0.0)) {
                return Err(Error::Parameter(
                    "synthetic real spectrum must be negative".into(),
                ));
            }
            Arc::new(DiagonalOperator(v.clone()))
        }
        SyntheticSpectrum::ImaginaryPairs(b) => {
            if b.is_empty() || b.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parameter(
                    "synthetic imaginary spectrum must be finite".into(),
                ));
            }
            let n = 2 * b.len();
            let mut m = DMatrix::zeros(n, n);
            for (i, beta) in b.iter().enumerate() {
                m[(2 * i, 2 * i + 1)] = *beta;
                m[(2 * i + 1, 2 * i)] = -beta;
            }
            Arc::new(DenseOperator(m))
        }
    };
    let n = k.dim();
    Ok(ProblemModel {
        kind: ProblemKind::SyntheticDiagonal,
        n,
        hx: 0.0,
        horizon,
        dynamics: Dynamics::Constant(k),
        source: None,
        initial: vec![1.0; n],
        exact: None,
        error_components: n,
    })
}

/// Nyström interpolant `y(t) = r + ∫_0^t (q(s, y_h) + g(s)) ds` of a converged solution,
/// evaluated at `times`.
pub fn nystrom_interpolate(
    model: &ProblemModel,
    grid: &SincGrid,
    solution: &[f64],
    times: &[f64],
) -> Result<Vec<f64>> {
    let n = model.n;
    let m = grid.size();
    if solution.len() != n * m {
        return Err(Error::Shape(format!(
            "solution has length {}, expected {}",
            solution.len(),
            n * m
        )));
    }
    let mut f = vec![0.0; n * m];
    let mut g = vec![0.0; n];
    for (l, t) in grid.points.iter().enumerate() {
        let y = &solution[l * n..(l + 1) * n];
        let out = &mut f[l * n..(l + 1) * n];
        match &model.dynamics {
            Dynamics::Constant(k) => k.apply(y, out),
            Dynamics::Scaled { base, coefficient } => {
                base.apply(y, out);
                let c = coefficient(*t);
                for o in out.iter_mut() {
                    *o *= c;
                }
            }
            Dynamics::Nonlinear(q) => q.eval(*t, y, out),
        }
        if let Some(src) = &model.source {
            src(*t, &mut g);
            for (o, gi) in out.iter_mut().zip(&g) {
                *o += gi;
            }
        }
    }
    let mut result = Vec::with_capacity(n * times.len());
    for &t in times {
        let w = indefinite_integral_weights(grid, t)?;
        let mut y = model.initial.clone();
        for (l, wl) in w.iter().enumerate() {
            if *wl != 0.0 {
                for (yi, fi) in y.iter_mut().zip(&f[l * n..(l + 1) * n]) {
                    *yi += wl * fi;
                }
            }
        }
        result.extend(y);
    }
    Ok(result)
}

/// Reference states at the collocation times of `grid` from a finer Sinc solve with
/// `2M + extra` half-width, interpolated by the Nyström formula.
pub fn sinc_reference(
    model: &ProblemModel,
    grid: &SincGrid,
    extra: usize,
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, NewtonReport)> {
    let fine = model.grid(2 * grid.params.half_width + extra)?;
    let sys = model.nonlinear_system(&fine)?;
    let rep = newton_solve(&sys, cfg)?;
    if !rep.converged {
        return Err(Error::NumericalFailure(
            "reference Newton solve did not converge".into(),
        ));
    }
    let states = nystrom_interpolate(model, &fine, &rep.solution, &grid.points)?;
    Ok((states, rep))
}

/// `out = f(t, y)` for the semi-discrete model `y' = f(t, y)`.
pub fn model_rhs(model: &ProblemModel, t: f64, y: &[f64], out: &mut [f64]) {
    match &model.dynamics {
        Dynamics::Constant(k) => k.apply(y, out),
        Dynamics::Scaled { base, coefficient } => {
            base.apply(y, out);
            let c = coefficient(t);
            for o in out.iter_mut() {
                *o *= c;
            }
        }
        Dynamics::Nonlinear(q) => q.eval(t, y, out),
    }
    if let Some(src) = &model.source {
        let mut g = vec![0.0; y.len()];
        src(t, &mut g);
        for (o, gi) in out.iter_mut().zip(&g) {
            *o += gi;
        }
    }
}

const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive Dormand–Prince 5(4) integration of `y' = f(t, y)` from `t = 0`, returning the
/// stacked states at the ascending `times`.
pub fn dormand_prince<F>(f: F, y0: &[f64], times: &[f64], rtol: f64, atol: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Parameter(
            "output times must be ascending and non-negative".into(),
        ));
    }
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut h = 1e-4;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    f(t, &y, &mut k[0]);
    let mut out = Vec::with_capacity(n * times.len());
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut steps = 0usize;
    for &target in times {
        while t < target {
            steps += 1;
            if steps > 10_000_000 {
                return Err(Error::NumericalFailure(
                    "adaptive integrator exceeded its step budget".into(),
                ));
            }
            let last = t + h >= target;
            let step = if last { target - t } else { h };
            for s in 1..7 {
                stage.copy_from_slice(&y);
                for (r, a) in DP_A[s].iter().enumerate().take(s) {
                    if *a != 0.0 {
                        for (si, ki) in stage.iter_mut().zip(&k[r]) {
                            *si += step * a * ki;
                        }
                    }
                }
                f(t + DP_C[s] * step, &stage, &mut k[s]);
            }
            let mut err = 0.0f64;
            for i in 0..n {
                let mut hi = 0.0;
                let mut ei = 0.0;
                for s in 0..7 {
                    hi += DP_B[s] * k[s][i];
                    ei += DP_E[s] * k[s][i];
                }
                y_new[i] = y[i] + step * hi;
                let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((step * ei / sc).abs());
            }
            if !err.is_finite() {
                return Err(Error::NumericalFailure(
                    "adaptive integrator produced non-finite values".into(),
                ));
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y.copy_from_slice(&y_new);
                // First-same-as-last: k7 is f at the accepted point.
                let k7 = k[6].clone();
                k[0].copy_from_slice(&k7);
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if !(last && err <= 1.0) {
                h = step * factor;
            }
        }
        out.extend_from_slice(&y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn laplacian_1d_stencils() {
        let (lap, forcing) = laplacian_1d(3, 4.0, (0.0, 0.0)).unwrap();
        assert_eq!(lap.hx, 1.0);
        assert_eq!(forcing, vec![0.0; 3]);
        let (lap, _) = laplacian_1d(9, 5.0, (0.0, 0.0)).unwrap();
        let u: Vec<f64> = (1..=9)
            .map(|i| {
                let x = i as f64 * lap.hx;
                x * (5.0 - x)
            })
            .collect();
        let mut out = vec![0.0; 9];
        lap.apply(&u, &mut out);
        assert!(out.iter().all(|v| (v + 2.0).abs() < 1e-12));
        let (lap, forcing) = laplacian_1d(6, 1.4, (-1.0, 1.0)).unwrap();
        let inv = 1.0 / (lap.hx * lap.hx);
        assert!((forcing[0] + inv).abs() < 1e-12 && (forcing[5] - inv).abs() < 1e-12);
        assert!(forcing[1..5].iter().all(|v| *v == 0.0));
        assert!(laplacian_1d(1, 1.0, (0.0, 0.0)).is_err());
    }

    fn manufactured_residual(model: &ProblemModel, t: f64) -> f64 {
        // y'(t) by a central difference of the exact solution, against f(t, y).
        let n = model.n;
        let exact = model.exact.as_ref().unwrap();
        let mut y = vec![0.0; n];
        exact(t, &mut y);
        let eps = 1e-5;
        let (mut yp, mut ym) = (vec![0.0; n], vec![0.0; n]);
        exact(t + eps, &mut yp);
        exact(t - eps, &mut ym);
        let mut f = vec![0.0; n];
        model_rhs(model, t, &y, &mut f);
        let scale = y.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        (0..n)
            .map(|i| ((yp[i] - ym[i]) / (2.0 * eps) - f[i]).abs())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn manufactured_solutions_solve_the_semi_discrete_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for model in [
            make_heat2d_const(8, 2.0).unwrap(),
            make_heat2d_varying(8, 2.0).unwrap(),
            make_wave2d(8, 2.0).unwrap(),
        ] {
            let mut y0 = vec![0.0; model.n];
            model.exact.as_ref().unwrap()(0.0, &mut y0);
            assert!(y0
                .iter()
                .zip(&model.initial)
                .all(|(a, b)| (a - b).abs() < 1e-13));
            for _ in 0..10 {
                let t = rng.random_range(0.05..1.95);
                let r = manufactured_residual(&model, t);
                // The finite-difference derivative carries ~1e-10 error; the discrete
                // Laplacian itself is exact on the profile.
                assert!(r < 1e-8, "{:?} residual {r}", model.kind);
            }
        }
    }

    #[test]
    fn discrete_laplacian_is_exact_on_the_profile() {
        let n = 8;
        let hx = PI / 9.0;
        let (p, lap) = product_profile(n, hx);
        let op = Laplacian2d::new(n, hx);
        let mut out = vec![0.0; n * n];
        op.apply(&p, &mut out);
        assert!(out.iter().zip(&lap).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    fn dense_shift_check(model: &ProblemModel, lambda: C64, seed: u64) -> f64 {
        let g = model.grid(4).unwrap();
        let kbar = model.averaged_operator(&g).unwrap().to_dense();
        let n = model.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut x = r.clone();
        model
            .shifted_solver(&g, lambda)
            .unwrap()
            .solve(&mut x)
            .unwrap();
        let a = DMatrix::<C64>::identity(n, n) - crate::linalg::complexify(&kbar) * lambda;
        let res = &a * DVector::from_column_slice(&x) - DVector::from_column_slice(&r);
        res.norm() / DVector::from_column_slice(&r).norm()
    }

    #[test]
    fn shifted_solves_match_dense_oracles() {
        assert!(
            dense_shift_check(&make_heat2d_const(8, 2.0).unwrap(), C64::new(0.3, 0.7), 2) < 1e-11
        );
        assert!(dense_shift_check(&make_wave2d(6, 2.0).unwrap(), C64::new(0.2, 0.9), 3) < 1e-10);
        assert!(
            dense_shift_check(
                &make_heat2d_varying(6, 2.0).unwrap(),
                C64::new(-0.4, 2.0),
                4
            ) < 1e-11
        );
        assert!(
            dense_shift_check(&make_allen_cahn(16, 2.0).unwrap(), C64::new(0.1, -3.0), 5) < 1e-11
        );
    }

    #[test]
    fn shifted_solve_contract_for_every_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let models = [
            make_heat2d_const(6, 2.0).unwrap(),
            make_heat2d_varying(6, 2.0).unwrap(),
            make_wave2d(5, 2.0).unwrap(),
            make_allen_cahn(12, 2.0).unwrap(),
            make_synthetic(SyntheticSpectrum::ImaginaryPairs(vec![1.0, 4.0]), 2.0).unwrap(),
        ];
        for model in &models {
            for k in 0..20 {
                let radius = rng.random_range(0.0..10.0);
                let angle = rng.random_range(0.0..2.0 * PI);
                let lambda = C64::from_polar(radius, angle);
                let r = dense_shift_check(model, lambda, 100 + k);
                assert!(r <= 1e-10, "{:?} λ = {lambda}: {r}", model.kind);
            }
            let g = model.grid(4).unwrap();
            let r: Vec<C64> = (0..model.n)
                .map(|i| C64::new(i as f64, 1.0 - i as f64))
                .collect();
            let mut x = r.clone();
            model
                .shifted_solver(&g, C64::new(0.0, 0.0))
                .unwrap()
                .solve(&mut x)
                .unwrap();
            assert!(x.iter().zip(&r).all(|(a, b)| (a - b).norm() < 1e-14));
            let lambda = C64::new(0.7, 1.3);
            let mut a = r.clone();
            model
                .shifted_solver(&g, lambda)
                .unwrap()
                .solve(&mut a)
                .unwrap();
            let mut b: Vec<C64> = r.iter().map(|z| z.conj()).collect();
            model
                .shifted_solver(&g, lambda.conj())
                .unwrap()
                .solve(&mut b)
                .unwrap();
            let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(a
                .iter()
                .zip(&b)
                .all(|(p, q)| (p.conj() - q).norm() <= 1e-12 * scale));
        }
    }

    #[test]
    fn wave_spectrum_is_imaginary() {
        let model = make_wave2d(6, 2.0).unwrap();
        let g = model.grid(2).unwrap();
        let k = model.averaged_operator(&g).unwrap().to_dense();
        let eig = crate::linalg::eigenvalues_real(&k).unwrap();
        assert!(eig.iter().all(|z| z.re.abs() <= 1e-10));
    }

    #[test]
    fn varying_nkpa_reduces_to_kappa_ratios() {
        let model = make_heat2d_varying(6, 2.0).unwrap();
        let g = model.grid(16).unwrap();
        let sys = model.linear_system(&g).unwrap();
        let dhat = crate::precond::nkpa_diagonal(&sys.blocks, g.size()).unwrap();
        let kap: Vec<f64> = g.points.iter().map(|t| kappa(*t)).collect();
        let mean = kap.iter().sum::<f64>() / kap.len() as f64;
        for (d, k) in dhat.iter().zip(&kap) {
            assert!((d - k / mean).abs() <= 1e-13);
        }
        let spread = dhat.iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max);
        assert!(spread > 0.3, "{spread}");
    }

    #[test]
    fn allen_cahn_jacobian_matches_finite_differences() {
        let model = make_allen_cahn(16, 2.0).unwrap();
        let Dynamics::Nonlinear(q) = &model.dynamics else {
            unreachable!()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fam = q.jacobian(&[0.5], &[y.as_slice()]);
        let mut jv = vec![0.0; 16];
        fam.apply_block(0, &v, &mut jv);
        let err = |eps: f64| {
            let yp: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
            let ym: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a - eps * b).collect();
            let (mut qp, mut qm) = (vec![0.0; 16], vec![0.0; 16]);
            q.eval(0.5, &yp, &mut qp);
            q.eval(0.5, &ym, &mut qm);
            (0..16)
                .map(|i| ((qp[i] - qm[i]) / (2.0 * eps) - jv[i]).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "order {order}");

        // Linear profile through the boundary values: q stays finite.
        let lin: Vec<f64> = (1..=16).map(|i| -1.0 + i as f64 * model.hx).collect();
        let mut out = vec![0.0; 16];
        q.eval(0.0, &lin, &mut out);
        assert!(out.iter().all(|v| v.is_finite() && v.abs() < 1.0));
    }

    #[test]
    fn error_metric() {
        let model = make_heat2d_const(4, 2.0).unwrap();
        let g = model.grid(3).unwrap();
        let exact = model.exact_samples(&g).unwrap();
        assert_eq!(error_max(&exact, &model, &g).unwrap(), 0.0);
        let mut off = exact.clone();
        off[5] += 0.25;
        assert!((error_max(&off, &model, &g).unwrap() - 0.25).abs() < 1e-15);
        let ac = make_allen_cahn(8, 2.0).unwrap();
        let g = ac.grid(2).unwrap();
        assert!(matches!(
            error_max(&vec![0.0; 40], &ac, &g),
            Err(Error::UnsupportedMetric(_))
        ));
    }

    #[test]
    fn dormand_prince_on_exponential_decay() {
        let times = [0.5, 1.0, 2.0];
        let out =
            dormand_prince(|_t, y, o| o[0] = -3.0 * y[0], &[1.0], &times, 1e-12, 1e-14).unwrap();
        for (t, y) in times.iter().zip(&out) {
            assert!((y - (-3.0 * t).exp()).abs() < 1e-11);
        }
    }

    #[test]
    fn nystrom_interpolant_reproduces_collocation_values() {
        let model = make_heat2d_const(4, 2.0).unwrap();
        let g = model.grid(12).unwrap();
        let sys = model.linear_system(&g).unwrap();
        let pc = crate::precond::build_preconditioner(
            &sys,
            crate::precond::PreconditionerKind::P,
            Default::default(),
        )
        .unwrap()
        .unwrap();
        let rep = crate::krylov::gmres(&sys, &sys.rhs, Some(&pc), &Default::default()).unwrap();
        let back = nystrom_interpolate(&model, &g, &rep.solution, &g.points).unwrap();
        let d = back
            .iter()
            .zip(&rep.solution)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-8, "{d}");
    }
}
