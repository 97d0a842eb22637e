//! Spectral diagnostics: the `z(μ)` function, predicted non-unity eigenvalues, dense spectra
//! of preconditioned operators with region checks, condition-number growth and ω-sweeps.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresConfig, Preconditioner};
use crate::linalg::{complexify, condition_number, eig_general, eigenvalues_real, C64, ZERO};
use crate::models::{error_max, ProblemKind, ProblemModel};
use crate::precond::{
    build_damped_skew, build_preconditioner, diagonalize_time_factor, ApplyOptions,
    KroneckerApprox, PreconditionerKind,
};
use crate::sinc::{SincGrid, SincIntegrationMatrix, SincParams};
use crate::system::DENSE_CAP;

fn check_sizes(grid: &SincGrid, imat: &SincIntegrationMatrix) -> Result<()> {
    if grid.size() != imat.size() {
        return Err(Error::Shape(format!(
            "grid of size {} with integration matrix of size {}",
            grid.size(),
            imat.size()
        )));
    }
    Ok(())
}

/// `eᵀ (μ⁻¹ D⁻¹ + C)⁻¹ e` for a dense time matrix `C`.
fn resolvent_sum(mu: C64, grid: &SincGrid, c: &DMatrix<f64>) -> Result<C64> {
    let m = grid.size();
    let inv_mu = C64::new(1.0, 0.0) / mu;
    let mut a = complexify(c);
    for (j, d) in grid.d.iter().enumerate() {
        a[(j, j)] += inv_mu / d;
    }
    let e = DVector::from_element(m, C64::new(1.0, 0.0));
    let w = a.lu().solve(&e).ok_or(Error::Singular { mu })?;
    let z = w.iter().fold(ZERO, |acc, x| acc + x);
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Singular { mu });
    }
    Ok(z)
}

/// `z(μ) = eᵀ (μ⁻¹ D⁻¹ + I^{(-1)})⁻¹ e`, with `z(0) = 0`.
pub fn z_function(mu: C64, grid: &SincGrid, imat: &SincIntegrationMatrix) -> Result<C64> {
    check_sizes(grid, imat)?;
    if mu == ZERO {
        return Ok(ZERO);
    }
    resolvent_sum(mu, grid, &imat.to_dense())
}

/// `γ(μ) = eᵀ (μ⁻¹ D⁻¹ + S)⁻¹ e`, linked to `z` by `z = 2 - 4 / (2 + γ)`.
pub fn gamma_function(mu: C64, grid: &SincGrid, imat: &SincIntegrationMatrix) -> Result<C64> {
    check_sizes(grid, imat)?;
    if mu == ZERO {
        return Ok(ZERO);
    }
    let s = build_damped_skew(imat, 1.0)?;
    resolvent_sum(mu, grid, &s.matrix)
}

/// Smallest accepted `|2 - ω z(μ)|`.
pub const PREDICTION_FLOOR: f64 = 1e-14;

/// The non-unity eigenvalue `2 / (2 - ω z(μ))` of `P(ω)⁻¹ A` for the scalar block `K = -μ`.
pub fn predicted_nonunity(
    mu: C64,
    omega: f64,
    grid: &SincGrid,
    imat: &SincIntegrationMatrix,
) -> Result<C64> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::Parameter(format!(
            "omega must lie in (0, 1], got {omega}"
        )));
    }
    let z = z_function(mu, grid, imat)?;
    let denom = C64::new(2.0, 0.0) - z * omega;
    if denom.norm() < PREDICTION_FLOOR {
        return Err(Error::NearSingularPrediction {
            denominator: denom.norm(),
        });
    }
    Ok(C64::new(2.0, 0.0) / denom)
}

/// Tolerances of the dense spectral checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralTolerances {
    /// `|λ - 1|` at or below this counts as a unity eigenvalue.
    pub unity: f64,
    /// Slack added to every region bound.
    pub slack: f64,
    /// Largest accepted gap, relative to `max(1, |λ|)`, between an eigenvalue and its prediction.
    pub matching: f64,
}

impl Default for SpectralTolerances {
    fn default() -> Self {
        SpectralTolerances {
            unity: 1e-6,
            slack: 1e-8,
            matching: 1e-7,
        }
    }
}

/// Region the preconditioned spectrum must lie in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralRegion {
    /// `σ(K̄) ⊂ ℝ⁻`: real eigenvalues in `[1, 1/(1-ω)]`.
    Interval { lo: f64, hi: f64 },
    /// `σ(K̄) ⊂ iℝ`: non-unity eigenvalues with `inner ≤ |λ - center| ≤ outer`.
    Annulus { center: f64, inner: f64, outer: f64 },
    /// No theorem covers `σ(K̄)`; only unity counting and prediction matching are done.
    Unchecked,
}

impl SpectralRegion {
    pub fn for_omega(mus: &[C64], omega: f64) -> Self {
        let scale = mus.iter().map(|m| m.norm()).fold(0.0, f64::max).max(1.0);
        let tol = 1e-10 * scale;
        if mus.iter().all(|m| m.im.abs() <= tol && m.re >= -tol) {
            let hi = if omega < 1.0 {
                1.0 / (1.0 - omega)
            } else {
                f64::INFINITY
            };
            SpectralRegion::Interval { lo: 1.0, hi }
        } else if mus.iter().all(|m| m.re.abs() <= tol) {
            let outer = if omega < 1.0 {
                omega / ((2.0 - omega) * (1.0 - omega))
            } else {
                f64::INFINITY
            };
            SpectralRegion::Annulus {
                center: 2.0 / (2.0 - omega),
                inner: omega / (2.0 - omega),
                outer,
            }
        } else {
            SpectralRegion::Unchecked
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub eigenvalue: C64,
    /// One of `real-axis`, `interval`, `annulus` or `prediction`.
    pub bound: &'static str,
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub eigenvalues: Vec<C64>,
    /// `2 / (2 - ω z(μ))` for each `μ ∈ -σ(K̄)`.
    pub predicted: Vec<C64>,
    pub mus: Vec<C64>,
    pub unity_count: usize,
    pub nonunity: Vec<C64>,
    pub region: SpectralRegion,
    pub bound_violations: Vec<BoundViolation>,
    /// Largest relative gap in the greedy matching of non-unity eigenvalues to predictions.
    pub max_prediction_gap: f64,
    pub tolerances: SpectralTolerances,
}

impl SpectralReport {
    pub fn passed(&self) -> bool {
        self.bound_violations.is_empty()
    }
}

/// Eigenvalues of `P(ω)⁻¹ A` for a small linear model, checked against the theorem regions.
pub fn dense_preconditioned_spectrum(
    model: &ProblemModel,
    grid: &SincGrid,
    omega: f64,
    approx: &KroneckerApprox,
) -> Result<SpectralReport> {
    dense_preconditioned_spectrum_with(model, grid, omega, approx, SpectralTolerances::default())
}

pub fn dense_preconditioned_spectrum_with(
    model: &ProblemModel,
    grid: &SincGrid,
    omega: f64,
    approx: &KroneckerApprox,
    tol: SpectralTolerances,
) -> Result<SpectralReport> {
    let size = grid.size() * model.n;
    if size > DENSE_CAP {
        return Err(Error::TooLarge {
            size,
            cap: DENSE_CAP,
        });
    }
    let sys = model.linear_system(grid)?;
    let a = sys.to_dense()?;
    let s = build_damped_skew(&sys.imat, omega)?;
    if approx.dhat.len() != grid.size() || approx.kbar.dim() != model.n {
        return Err(Error::Shape(
            "Kronecker approximation does not match the model".into(),
        ));
    }
    let factor = DMatrix::from_fn(grid.size(), grid.size(), |l, j| {
        s.matrix[(l, j)] * grid.d[j] * approx.dhat[j]
    });
    let kbar = approx.kbar.to_dense();
    let p = DMatrix::identity(size, size) - factor.kronecker(&kbar);
    let pa = p
        .lu()
        .solve(&a)
        .ok_or_else(|| Error::NumericalFailure("dense preconditioner is singular".into()))?;
    let eigenvalues = eigenvalues_real(&pa)?;

    let mus: Vec<C64> = eigenvalues_real(&kbar)?.into_iter().map(|l| -l).collect();
    let predicted = mus
        .iter()
        .map(|mu| predicted_nonunity(*mu, omega, grid, &sys.imat))
        .collect::<Result<Vec<_>>>()?;

    let one = C64::new(1.0, 0.0);
    let nonunity: Vec<C64> = eigenvalues
        .iter()
        .copied()
        .filter(|l| (l - one).norm() > tol.unity)
        .collect();
    let unity_count = eigenvalues.len() - nonunity.len();
    let region = SpectralRegion::for_omega(&mus, omega);
    let mut violations = Vec::new();
    match region {
        SpectralRegion::Interval { lo, hi } => {
            for l in &eigenvalues {
                if l.im.abs() > tol.slack {
                    violations.push(BoundViolation {
                        eigenvalue: *l,
                        bound: "real-axis",
                        distance: l.im.abs(),
                    });
                }
                let below = (lo - tol.slack) - l.re;
                let above = l.re - (hi + tol.slack);
                if below > 0.0 || above > 0.0 {
                    violations.push(BoundViolation {
                        eigenvalue: *l,
                        bound: "interval",
                        distance: below.max(above),
                    });
                }
            }
        }
        SpectralRegion::Annulus {
            center,
            inner,
            outer,
        } => {
            for l in &nonunity {
                let r = (l - C64::new(center, 0.0)).norm();
                let below = (inner - tol.slack) - r;
                let above = r - (outer + tol.slack);
                if below > 0.0 || above > 0.0 {
                    violations.push(BoundViolation {
                        eigenvalue: *l,
                        bound: "annulus",
                        distance: below.max(above),
                    });
                }
            }
        }
        SpectralRegion::Unchecked => {}
    }

    let mut used = vec![false; predicted.len()];
    let mut max_gap: f64 = 0.0;
    for l in &nonunity {
        let best = predicted
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, p)| (i, (l - p).norm() / l.norm().max(1.0)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let gap = match best {
            Some((i, gap)) => {
                used[i] = true;
                gap
            }
            None => f64::INFINITY,
        };
        max_gap = max_gap.max(gap);
        if gap > tol.matching {
            violations.push(BoundViolation {
                eigenvalue: *l,
                bound: "prediction",
                distance: gap,
            });
        }
    }

    Ok(SpectralReport {
        eigenvalues,
        predicted,
        mus,
        unity_count,
        nonunity,
        region,
        bound_violations: violations,
        max_prediction_gap: max_gap,
        tolerances: tol,
    })
}

/// One `(M, ω)` cell of a conditioning table. Failed eigensolves leave NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionRow {
    pub half_width: usize,
    pub omega: f64,
    pub cond2v: f64,
    /// Condition number of the eigenvector matrix of `I^{(-1)} D`, independent of ω.
    pub cond2u: f64,
}

/// `Cond₂(U)` for the unit-column eigenvector matrix of `I^{(-1)} D`.
pub fn cond2u(grid: &SincGrid, imat: &SincIntegrationMatrix) -> Result<f64> {
    check_sizes(grid, imat)?;
    let c = imat.times_diagonal(&grid.d);
    let eig = eig_general(&complexify(&c))?;
    Ok(condition_number(&eig.vectors))
}

/// `Cond₂(V_ω)` of the time-factor diagonalization with `D̂ = 1`.
pub fn cond2v(grid: &SincGrid, imat: &SincIntegrationMatrix, omega: f64) -> Result<f64> {
    let s = build_damped_skew(imat, omega)?;
    let eig = diagonalize_time_factor(&s, grid, &vec![1.0; grid.size()])?;
    Ok(eig.cond2v)
}

/// Condition numbers for every `(M, ω)` pair, one row each.
pub fn condition_growth(
    half_widths: &[usize],
    omegas: &[f64],
    horizon: f64,
    strip: f64,
    alpha: f64,
) -> Result<Vec<ConditionRow>> {
    if half_widths.is_empty() || omegas.is_empty() {
        return Err(Error::Parameter("need at least one M and one omega".into()));
    }
    if half_widths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(
            "M values must be strictly ascending".into(),
        ));
    }
    if let Some(w) = omegas.iter().find(|w| !(**w > 0.0 && **w <= 1.0)) {
        return Err(Error::Parameter(format!(
            "omega must lie in (0, 1], got {w}"
        )));
    }
    let mut rows = Vec::with_capacity(half_widths.len() * omegas.len());
    for &mh in half_widths {
        let grid = SincGrid::new(SincParams::with_strip(horizon, mh, strip, alpha)?)?;
        let imat = SincIntegrationMatrix::new(grid.size())?;
        let u = cond2u(&grid, &imat).unwrap_or(f64::NAN);
        for &omega in omegas {
            rows.push(ConditionRow {
                half_width: mh,
                omega,
                cond2v: cond2v(&grid, &imat, omega).unwrap_or(f64::NAN),
                cond2u: u,
            });
        }
    }
    Ok(rows)
}

/// One `(m, ω)` cell of an ω-sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub half_width: usize,
    pub omega: f64,
    pub iterations: Option<usize>,
    pub converged: bool,
    /// Max error on the measured components, NaN when the cell failed.
    pub error: f64,
    pub cond2v: f64,
    /// Set when building or running the solve failed.
    pub failure: Option<String>,
}

fn sweep_cell(model: &ProblemModel, mh: usize, omega: f64, cfg: &GmresConfig) -> Result<SweepCell> {
    let grid = model.grid(mh)?;
    let sys = model.linear_system(&grid)?;
    let pc = build_preconditioner(
        &sys,
        PreconditionerKind::POmega(omega),
        ApplyOptions::default(),
    )?;
    let pc = pc.ok_or_else(|| Error::Parameter("p_omega produced no preconditioner".into()))?;
    let rep = gmres(&sys, &sys.rhs, Some(&pc as &dyn Preconditioner), cfg)?;
    Ok(SweepCell {
        half_width: mh,
        omega,
        iterations: Some(rep.iterations),
        converged: rep.converged,
        error: error_max(&rep.solution, model, &grid)?,
        cond2v: pc.cond2v(),
        failure: None,
    })
}

/// Runs the `P(ω)`-preconditioned wave solve for every `(M, ω)`; solver failures become
/// sentinel cells.
pub fn omega_sweep(
    model: &ProblemModel,
    half_widths: &[usize],
    omegas: &[f64],
    cfg: &GmresConfig,
) -> Result<Vec<SweepCell>> {
    if model.kind != ProblemKind::Wave2d {
        return Err(Error::Parameter(format!(
            "omega sweep needs the wave model, got {}",
            model.kind.id()
        )));
    }
    cfg.validate()?;
    let mut cells = Vec::with_capacity(half_widths.len() * omegas.len());
    for &mh in half_widths {
        for &omega in omegas {
            cells.push(
                sweep_cell(model, mh, omega, cfg).unwrap_or_else(|e| SweepCell {
                    half_width: mh,
                    omega,
                    iterations: None,
                    converged: false,
                    error: f64::NAN,
                    cond2v: f64::NAN,
                    failure: Some(e.to_string()),
                }),
            );
        }
    }
    Ok(cells)
}
