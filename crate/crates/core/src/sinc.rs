//! Sinc temporal grid, basis evaluation and the collocated indefinite-integration matrix.
//!
//! The interval `(0, T)` is mapped onto the real line by `phi(t) = ln(t / (T - t))`,
//! with inverse `psi(x) = T e^x / (1 + e^x)`. Collocation points are `t_j = psi(j h)`
//! for `j = -M..=M`, stored in ascending order.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Parameters of the Sinc discretization on `(0, horizon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SincParams {
    /// Final time `T`.
    pub horizon: f64,
    /// Half-width `M`; the grid has `2M + 1` points.
    pub half_width: usize,
    /// Strip half-width `d` of the analyticity domain, in `(0, pi)`.
    pub strip: f64,
    /// Hölder exponent `alpha`, in `(0, 1]`.
    pub alpha: f64,
}

impl SincParams {
    /// Parameters with the default strip `d = pi/2` and `alpha = 1`.
    pub fn new(horizon: f64, half_width: usize) -> Result<Self> {
        Self::with_strip(horizon, half_width, FRAC_PI_2, 1.0)
    }

    pub fn with_strip(horizon: f64, half_width: usize, strip: f64, alpha: f64) -> Result<Self> {
        let p = SincParams {
            horizon,
            half_width,
            strip,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Parameter(format!(
                "T must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.strip > 0.0 && self.strip < PI) {
            return Err(Error::Parameter(format!(
                "d must lie in (0, pi), got {}",
                self.strip
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Number of collocation points `m = 2M + 1`.
    pub fn size(&self) -> usize {
        2 * self.half_width + 1
    }

    /// Step `h = sqrt(pi d / (alpha M))`. `M = 0` uses the `M = 1` step.
    pub fn step(&self) -> f64 {
        let m = self.half_width.max(1) as f64;
        (PI * self.strip / (self.alpha * m)).sqrt()
    }

    /// Predicted exponential rate `sqrt(pi d alpha)` in `exp(-rate sqrt(M))`.
    pub fn convergence_rate(&self) -> f64 {
        (PI * self.strip * self.alpha).sqrt()
    }
}

/// Collocation data of a Sinc discretization.
#[derive(Debug, Clone)]
pub struct SincGrid {
    pub params: SincParams,
    pub h: f64,
    /// `t_j = psi(jh)`, ascending.
    pub points: Vec<f64>,
    /// `psi'(jh) = t_j (T - t_j) / T`.
    pub weights: Vec<f64>,
    /// Diagonal of `D = h diag(psi'(jh))`.
    pub d: Vec<f64>,
}

impl SincGrid {
    pub fn new(params: SincParams) -> Result<Self> {
        params.validate()?;
        let h = params.step();
        let big_t = params.horizon;
        let half = params.half_width as i64;
        let mut points = Vec::with_capacity(params.size());
        let mut weights = Vec::with_capacity(params.size());
        for j in -half..=half {
            let x = j as f64 * h;
            points.push(map_to_time(big_t, x));
            // T e^x / (1 + e^x)^2 written symmetrically in x.
            let c = (0.5 * x).cosh();
            weights.push(big_t / (4.0 * c * c));
        }
        let d = weights.iter().map(|w| h * w).collect();
        Ok(SincGrid {
            params,
            h,
            points,
            weights,
            d,
        })
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn horizon(&self) -> f64 {
        self.params.horizon
    }

    /// Signed index `j` of the storage position `l`.
    pub fn offset(&self, l: usize) -> i64 {
        l as i64 - self.params.half_width as i64
    }

    /// `phi(t) = ln(t / (T - t))`.
    pub fn to_line(&self, t: f64) -> f64 {
        (t / (self.params.horizon - t)).ln()
    }

    /// `Cond_2(D^{1/2}) = e^{Mh/2} (1 + e^{-Mh}) / 2`.
    pub fn sqrt_d_condition(&self) -> f64 {
        let mh = self.params.half_width as f64 * self.h;
        (0.5 * mh).exp() * (1.0 + (-mh).exp()) / 2.0
    }
}

/// `psi(x) = T e^x / (1 + e^x)` evaluated without cancellation on either side.
pub fn map_to_time(horizon: f64, x: f64) -> f64 {
    if x < 0.0 {
        let e = x.exp();
        horizon * e / (1.0 + e)
    } else {
        horizon / (1.0 + (-x).exp())
    }
}

/// `Sinc(x) = sin(pi x) / (pi x)`, exact zeros at nonzero integers.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let k = x.round();
    let r = x - k;
    if r == 0.0 {
        return 0.0;
    }
    let sign = if (k as i64) % 2 == 0 { 1.0 } else { -1.0 };
    sign * (PI * r).sin() / (PI * x)
}

const GAUSS_POINTS: usize = 20;

fn gauss_legendre() -> &'static ([f64; GAUSS_POINTS], [f64; GAUSS_POINTS]) {
    static RULE: OnceLock<([f64; GAUSS_POINTS], [f64; GAUSS_POINTS])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GAUSS_POINTS;
        let mut nodes = [0.0; GAUSS_POINTS];
        let mut weights = [0.0; GAUSS_POINTS];
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn sin_over_x(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        u.sin() / u
    }
}

/// Standard sine integral `Si(x) = int_0^x sin(u)/u du`.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        -sine_integral(-x)
    } else if x <= 4.0 {
        si_series(x)
    } else if x < 60.0 {
        si_quadrature(x)
    } else {
        si_asymptotic(x)
    }
}

fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = CompensatedSum::default();
    let mut n = 0usize;
    loop {
        let contrib = term / (2 * n + 1) as f64;
        sum.add(contrib);
        if contrib.abs() < 1e-18 {
            break;
        }
        n += 1;
        term *= -x2 / ((2 * n) as f64 * (2 * n + 1) as f64);
    }
    sum.value()
}

fn si_quadrature(x: f64) -> f64 {
    let (nodes, w) = gauss_legendre();
    let panels = x.ceil() as usize;
    let width = x / panels as f64;
    let mut sum = CompensatedSum::default();
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        let mut panel = 0.0;
        for (ni, wi) in nodes.iter().zip(w.iter()) {
            panel += wi * sin_over_x(mid + 0.5 * width * ni);
        }
        sum.add(0.5 * width * panel);
    }
    sum.value()
}

/// `Si(x) = pi/2 - f(x) cos x - g(x) sin x` with the asymptotic series for `f`, `g`.
fn si_asymptotic(x: f64) -> f64 {
    let inv2 = 1.0 / (x * x);
    let (mut f, mut g) = (0.0, 0.0);
    let (mut tf, mut tg) = (1.0, 1.0);
    for k in 0..40 {
        f += tf;
        g += tg;
        let kf = k as f64;
        let nf = -tf * (2.0 * kf + 1.0) * (2.0 * kf + 2.0) * inv2;
        let ng = -tg * (2.0 * kf + 2.0) * (2.0 * kf + 3.0) * inv2;
        if nf.abs() > tf.abs() || nf.abs() < 1e-20 {
            break;
        }
        tf = nf;
        tg = ng;
    }
    f /= x;
    g *= inv2;
    FRAC_PI_2 - f * x.cos() - g * x.sin()
}

/// `int_0^y sin(pi t)/(pi t) dt`.
pub fn sinc_integral(y: f64) -> f64 {
    sine_integral(PI * y) / PI
}

/// `sigma_k = 1/2 + int_0^k sin(pi t)/(pi t) dt`.
pub fn sigma_value(k: i64) -> f64 {
    let s = sinc_integral(k.unsigned_abs() as f64);
    if k >= 0 {
        0.5 + s
    } else {
        0.5 - s
    }
}

/// Toeplitz matrix `I^{(-1)}` with entries `sigma_{l-j}`.
#[derive(Debug, Clone)]
pub struct SincIntegrationMatrix {
    m: usize,
    /// `int_0^k sinc` for `k = 0..m`.
    odd_part: Vec<f64>,
}

impl SincIntegrationMatrix {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "integration matrix size must be odd and positive, got {m}"
            )));
        }
        let odd_part = (0..m).map(|k| sinc_integral(k as f64)).collect();
        Ok(SincIntegrationMatrix { m, odd_part })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    /// `sigma_k` for `|k| < m`.
    pub fn sigma(&self, k: i64) -> f64 {
        let s = self.odd_part[k.unsigned_abs() as usize];
        if k >= 0 {
            0.5 + s
        } else {
            0.5 - s
        }
    }

    /// Skew-symmetric part entry `sigma_k - 1/2`, odd in `k`.
    pub fn skew(&self, k: i64) -> f64 {
        let s = self.odd_part[k.unsigned_abs() as usize];
        if k >= 0 {
            s
        } else {
            -s
        }
    }

    pub fn entry(&self, l: usize, j: usize) -> f64 {
        self.sigma(l as i64 - j as i64)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |l, j| self.entry(l, j))
    }

    /// `out = I^{(-1)} x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (l, o) in out.iter_mut().enumerate().take(self.m) {
            *o = x
                .iter()
                .enumerate()
                .map(|(j, xj)| self.entry(l, j) * xj)
                .sum();
        }
    }

    /// Dense `I^{(-1)} D`.
    pub fn times_diagonal(&self, diag: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.m, |l, j| self.entry(l, j) * diag[j])
    }
}

/// Endpoint treatment for [`sinc_interpolate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoints {
    /// Plain Sinc series; the interpolant vanishes at both ends.
    Vanishing,
    /// Series corrected by the linear auxiliary functions `w_a`, `w_b` carrying the given end values.
    Values { left: f64, right: f64 },
}

fn check_len(values: &[f64], grid: &SincGrid) -> Result<()> {
    if values.len() != grid.size() {
        return Err(Error::Shape(format!(
            "expected {} samples, got {}",
            grid.size(),
            values.len()
        )));
    }
    Ok(())
}

/// Evaluates the Sinc interpolant of `values` (samples at the grid points) at `t`.
pub fn sinc_interpolate(values: &[f64], grid: &SincGrid, t: f64, ends: Endpoints) -> Result<f64> {
    check_len(values, grid)?;
    let big_t = grid.horizon();
    match ends {
        Endpoints::Vanishing => {
            if !(t > 0.0 && t < big_t) {
                return Err(Error::Domain {
                    t,
                    domain: format!("(0, {big_t})"),
                });
            }
            let x = grid.to_line(t) / grid.h;
            Ok(values
                .iter()
                .enumerate()
                .map(|(l, f)| f * sinc(x - grid.offset(l) as f64))
                .sum())
        }
        Endpoints::Values { left, right } => {
            if !(0.0..=big_t).contains(&t) {
                return Err(Error::Domain {
                    t,
                    domain: format!("[0, {big_t}]"),
                });
            }
            let wa = |s: f64| (big_t - s) / big_t;
            let wb = |s: f64| s / big_t;
            let linear = left * wa(t) + right * wb(t);
            if t == 0.0 || t == big_t {
                return Ok(linear);
            }
            let x = grid.to_line(t) / grid.h;
            let series: f64 = values
                .iter()
                .zip(&grid.points)
                .enumerate()
                .map(|(l, (f, &tl))| {
                    (f - left * wa(tl) - right * wb(tl)) * sinc(x - grid.offset(l) as f64)
                })
                .sum();
            Ok(linear + series)
        }
    }
}

/// Weights `w_j` with `int_0^t f_h(s) ds = sum_j w_j f_j`, for `t` in `[0, T]`.
pub fn indefinite_integral_weights(grid: &SincGrid, t: f64) -> Result<Vec<f64>> {
    let big_t = grid.horizon();
    if !(0.0..=big_t).contains(&t) {
        return Err(Error::Domain {
            t,
            domain: format!("[0, {big_t}]"),
        });
    }
    if t == 0.0 {
        return Ok(vec![0.0; grid.size()]);
    }
    if t == big_t {
        return Ok(grid.d.clone());
    }
    let x = grid.to_line(t) / grid.h;
    Ok(grid
        .d
        .iter()
        .enumerate()
        .map(|(l, d)| d * (0.5 + sinc_integral(x - grid.offset(l) as f64)))
        .collect())
}

/// `int_0^t f_h(s) ds = sum_j f_j psi'(jh) J[j,h](phi(t))` for `t` in `[0, T]`.
pub fn sinc_indefinite_integral(values: &[f64], grid: &SincGrid, t: f64) -> Result<f64> {
    check_len(values, grid)?;
    let w = indefinite_integral_weights(grid, t)?;
    Ok(values.iter().zip(&w).map(|(f, w)| f * w).sum())
}
