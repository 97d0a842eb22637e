//! Run configuration: JSON file, then command-line overrides, then validation.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sinc_pint::models::{
    make_allen_cahn, make_heat2d_const, make_heat2d_varying, make_synthetic, make_wave2d,
    ProblemModel, SyntheticSpectrum,
};
use sinc_pint::newton::{PrecondPolicy, Refresh};
use sinc_pint::precond::PreconditionerKind;
use sinc_pint::{SincGrid, SincParams};

/// Environment variable holding the default worker count for the shifted solves.
pub const THREADS_ENV: &str = "SINC_PINT_THREADS";

pub const PROBLEMS: [&str; 6] = [
    "heat2d-const",
    "heat2d-varying",
    "wave2d",
    "allen-cahn",
    "synthetic-heat",
    "synthetic-wave",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSettings {
    pub rtol: f64,
    pub max_newton: usize,
    /// `every_iteration` or `freeze_first`.
    pub refresh: String,
    /// Extra half-width of the finer solve used as the error reference.
    pub reference_extra: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            rtol: 1e-10,
            max_newton: 20,
            refresh: "every_iteration".into(),
            reference_extra: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: String,
    /// Points per side for the 2D models, interior points for Allen–Cahn, spectrum size for
    /// the synthetic models. Model default when absent.
    pub n: Option<usize>,
    #[serde(alias = "T")]
    pub horizon: f64,
    #[serde(alias = "M")]
    pub half_width: usize,
    #[serde(alias = "d")]
    pub strip: f64,
    pub alpha: f64,
    /// One of `none, p, p_omega, avg, nkpa, nkpa_omega`; model default when absent.
    pub precond: Option<String>,
    pub omega: f64,
    pub tol: f64,
    pub maxit: usize,
    pub newton: NewtonSettings,
    /// Step-(ii) workers; falls back to the environment, then to the global pool.
    pub threads: Option<usize>,
    /// Output directory; standard output when absent.
    pub out: Option<PathBuf>,
    pub dump_solution: bool,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: "heat2d-const".into(),
            n: None,
            horizon: 2.0,
            half_width: 16,
            strip: FRAC_PI_2,
            alpha: 1.0,
            precond: None,
            omega: 0.01,
            tol: 1e-10,
            maxit: 1000,
            newton: NewtonSettings::default(),
            threads: None,
            out: None,
            dump_solution: false,
            seed: 0,
        }
    }
}

/// Command-line overrides, applied on top of the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Sinc half-width, m = 2M + 1.
    #[arg(long = "M")]
    pub half_width: Option<usize>,
    /// Time horizon.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    /// none, p, p_omega, avg, nkpa, nkpa_omega, or e.g. p_omega(1e-6).
    #[arg(long)]
    pub precond: Option<String>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub maxit: Option<usize>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave out every clock-derived value so reruns are byte-identical.
    #[arg(long)]
    pub no_timestamp: bool,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// File (or defaults), overrides, environment, then validation.
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let mut cfg = match &o.config {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        if let Some(v) = &o.problem {
            cfg.problem = v.clone();
        }
        if let Some(v) = o.n {
            cfg.n = Some(v);
        }
        if let Some(v) = o.half_width {
            cfg.half_width = v;
        }
        if let Some(v) = o.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = &o.precond {
            cfg.precond = Some(v.clone());
        }
        if let Some(v) = o.omega {
            cfg.omega = v;
        }
        if let Some(v) = o.tol {
            cfg.tol = v;
        }
        if let Some(v) = o.maxit {
            cfg.maxit = v;
        }
        if let Some(v) = o.threads {
            cfg.threads = Some(v);
        }
        if let Some(v) = &o.out {
            cfg.out = Some(v.clone());
        }
        if cfg.threads.is_none() {
            if let Ok(v) = std::env::var(THREADS_ENV) {
                let k = v
                    .trim()
                    .parse()
                    .with_context(|| format!("{THREADS_ENV}={v} is not a count"))?;
                cfg.threads = Some(k);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !PROBLEMS.contains(&self.problem.as_str()) {
            bail!(
                "unknown problem '{}', expected one of {}",
                self.problem,
                PROBLEMS.join(", ")
            );
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            bail!("T must be positive, got {}", self.horizon);
        }
        if !(self.strip > 0.0 && self.strip < std::f64::consts::PI) {
            bail!("d must lie in (0, pi), got {}", self.strip);
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            bail!("alpha must be positive, got {}", self.alpha);
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            bail!("omega must lie in (0, 1], got {}", self.omega);
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            bail!("tol must lie in (0, 1), got {}", self.tol);
        }
        if self.maxit == 0 {
            bail!("maxit must be positive");
        }
        if !(self.newton.rtol > 0.0 && self.newton.rtol < 1.0) {
            bail!("newton.rtol must lie in (0, 1), got {}", self.newton.rtol);
        }
        if self.newton.max_newton == 0 {
            bail!("newton.max_newton must be positive");
        }
        self.refresh()?;
        self.precond_kind()?;
        if self.n == Some(0) {
            bail!("n must be positive");
        }
        Ok(())
    }

    pub fn is_nonlinear(&self) -> bool {
        self.problem == "allen-cahn"
    }

    pub fn refresh(&self) -> Result<Refresh> {
        match self.newton.refresh.as_str() {
            "every_iteration" => Ok(Refresh::EveryIteration),
            "freeze_first" => Ok(Refresh::FreezeFirst),
            other => bail!("unknown refresh '{other}', expected every_iteration or freeze_first"),
        }
    }

    fn default_precond(&self) -> &'static str {
        match self.problem.as_str() {
            "heat2d-varying" | "allen-cahn" => "nkpa",
            "heat2d-const" => "p",
            _ => "p_omega",
        }
    }

    pub fn precond_kind(&self) -> Result<PreconditionerKind> {
        parse_precond(
            self.precond.as_deref().unwrap_or(self.default_precond()),
            self.omega,
        )
    }

    pub fn precond_policy(&self) -> Result<PrecondPolicy> {
        Ok(match self.precond_kind()? {
            PreconditionerKind::None => PrecondPolicy::None,
            PreconditionerKind::P | PreconditionerKind::Averaging => PrecondPolicy::Averaging,
            PreconditionerKind::Nkpa => PrecondPolicy::Nkpa,
            PreconditionerKind::NkpaOmega(w) => PrecondPolicy::NkpaDamped(w),
            PreconditionerKind::POmega(_) => bail!("p_omega has no nonlinear form, use nkpa_omega"),
        })
    }

    pub fn size(&self) -> usize {
        self.n.unwrap_or(match self.problem.as_str() {
            "allen-cahn" => 256,
            "synthetic-heat" | "synthetic-wave" => 16,
            _ => 32,
        })
    }

    pub fn model(&self) -> Result<ProblemModel> {
        let n = self.size();
        let t = self.horizon;
        let model = match self.problem.as_str() {
            "heat2d-const" => make_heat2d_const(n, t),
            "heat2d-varying" => make_heat2d_varying(n, t),
            "wave2d" => make_wave2d(n, t),
            "allen-cahn" => make_allen_cahn(n, t),
            "synthetic-heat" => {
                make_synthetic(SyntheticSpectrum::NegativeReal(dirichlet_spectrum(n)), t)
            }
            "synthetic-wave" => {
                if !n.is_multiple_of(2) {
                    bail!("synthetic-wave needs an even n, got {n}");
                }
                let betas = dirichlet_spectrum(n / 2)
                    .iter()
                    .map(|l| (-l).sqrt())
                    .collect();
                make_synthetic(SyntheticSpectrum::ImaginaryPairs(betas), t)
            }
            other => bail!("unknown problem '{other}'"),
        };
        Ok(model?)
    }

    pub fn params(&self, half_width: usize) -> Result<SincParams> {
        Ok(SincParams::with_strip(
            self.horizon,
            half_width,
            self.strip,
            self.alpha,
        )?)
    }

    pub fn grid(&self) -> Result<SincGrid> {
        Ok(SincGrid::new(self.params(self.half_width)?)?)
    }
}

/// Eigenvalues of the second difference on `n` interior points of `(0, π)`.
pub fn dirichlet_spectrum(n: usize) -> Vec<f64> {
    let hx = std::f64::consts::PI / (n + 1) as f64;
    (1..=n)
        .map(|k| -4.0 / (hx * hx) * (k as f64 * hx / 2.0).sin().powi(2))
        .collect()
}

/// Parses a preconditioner name; `p_omega` and `nkpa_omega` take `omega` unless written as `p_omega(w)`.
pub fn parse_precond(name: &str, omega: f64) -> Result<PreconditionerKind> {
    let (base, w) = match name.split_once('(') {
        Some((base, rest)) => {
            let Some(value) = rest.strip_suffix(')') else {
                bail!("malformed preconditioner '{name}'");
            };
            let w: f64 = value
                .trim()
                .parse()
                .with_context(|| format!("bad omega in '{name}'"))?;
            if !(w > 0.0 && w <= 1.0) {
                bail!("omega must lie in (0, 1], got {w}");
            }
            (base, Some(w))
        }
        None => (name, None),
    };
    let kind = match (base, w) {
        ("none", None) => PreconditionerKind::None,
        ("p", None) => PreconditionerKind::P,
        ("avg", None) => PreconditionerKind::Averaging,
        ("nkpa", None) => PreconditionerKind::Nkpa,
        ("p_omega", w) => PreconditionerKind::POmega(w.unwrap_or(omega)),
        ("nkpa_omega", w) => PreconditionerKind::NkpaOmega(w.unwrap_or(omega)),
        _ => bail!(
            "unknown preconditioner '{name}', expected none, p, p_omega, avg, nkpa or nkpa_omega"
        ),
    };
    Ok(kind)
}
