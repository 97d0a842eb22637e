//! Browser bindings for three spectral checks: the z(μ) curve, the preconditioned spectrum of a
//! small model against its theorem region, and the growth of Cond₂(V) with M.

use sinc_pint::linalg::C64;
use sinc_pint::models::{make_heat2d_const, make_wave2d, ProblemModel};
use sinc_pint::precond::{kronecker_approx, ApproxSource};
use sinc_pint::speclab::{
    condition_growth, dense_preconditioned_spectrum, z_function, SpectralRegion,
};
use sinc_pint::{Result, SincGrid, SincIntegrationMatrix, SincParams};
use wasm_bindgen::prelude::*;

/// Mesh points per side for the dense spectrum; keeps the eigensolve interactive.
pub const SPECTRUM_SIDE: usize = 4;
/// Largest half-width the page offers.
pub const MAX_HALF_WIDTH: usize = 128;
/// Largest half-width for the dense spectrum, whose eigensolve is of order (m·n)³.
pub const MAX_SPECTRUM_HALF_WIDTH: usize = 16;

const HORIZON: f64 = 2.0;

fn grid(half_width: usize) -> Result<SincGrid> {
    SincGrid::new(SincParams::new(HORIZON, half_width)?)
}

/// `(μ, z(μ))` pairs, flattened, on `samples` log-spaced points of `[10^lo, 10^hi]`.
pub fn z_curve_points(half_width: usize, samples: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let g = grid(half_width)?;
    let imat = SincIntegrationMatrix::new(g.size())?;
    let step = if samples > 1 {
        (hi - lo) / (samples - 1) as f64
    } else {
        0.0
    };
    let mut out = Vec::with_capacity(2 * samples);
    for k in 0..samples {
        let mu = 10f64.powf(lo + step * k as f64);
        out.push(mu);
        out.push(z_function(C64::new(mu, 0.0), &g, &imat)?.re);
    }
    Ok(out)
}

/// Eigenvalues of the preconditioned matrix and the verdict against the theorem region.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Spectrum {
    re: Vec<f64>,
    im: Vec<f64>,
    passed: bool,
    verdict: String,
}

#[wasm_bindgen]
impl Spectrum {
    pub fn re(&self) -> Vec<f64> {
        self.re.clone()
    }

    pub fn im(&self) -> Vec<f64> {
        self.im.clone()
    }

    pub fn passed(&self) -> bool {
        self.passed
    }

    pub fn verdict(&self) -> String {
        self.verdict.clone()
    }
}

fn model(problem: &str) -> Result<ProblemModel> {
    match problem {
        "heat" => make_heat2d_const(SPECTRUM_SIDE, HORIZON),
        "wave" => make_wave2d(SPECTRUM_SIDE, HORIZON),
        other => Err(sinc_pint::Error::Parameter(format!(
            "unknown problem '{other}', expected heat or wave"
        ))),
    }
}

fn region_text(r: &SpectralRegion) -> String {
    match r {
        SpectralRegion::Interval { lo, hi } => format!("interval [{lo:.4}, {hi:.4}]"),
        SpectralRegion::Annulus {
            center,
            inner,
            outer,
        } => {
            format!("annulus about {center:.4} with radii [{inner:.4}, {outer:.4}]")
        }
        SpectralRegion::Unchecked => "no region".into(),
    }
}

pub fn spectrum_of(problem: &str, half_width: usize, omega: f64) -> Result<Spectrum> {
    let model = model(problem)?;
    let g = grid(half_width)?;
    let sys = model.linear_system(&g)?;
    let approx = kronecker_approx(&sys.blocks, g.size(), ApproxSource::Averaging)?;
    let rep = dense_preconditioned_spectrum(&model, &g, omega, &approx)?;
    let verdict = format!(
        "{}: {} of {} eigenvalues away from 1, {} outside the {}",
        if rep.passed() { "PASS" } else { "FAIL" },
        rep.nonunity.len(),
        rep.eigenvalues.len(),
        rep.bound_violations.len(),
        region_text(&rep.region)
    );
    Ok(Spectrum {
        re: rep.eigenvalues.iter().map(|l| l.re).collect(),
        im: rep.eigenvalues.iter().map(|l| l.im).collect(),
        passed: rep.passed(),
        verdict,
    })
}

/// `(M, Cond₂(V))` pairs, flattened, for M = 4, 8, ... up to `max_half_width`.
pub fn cond_points(omega: f64, max_half_width: usize) -> Result<Vec<f64>> {
    let ms: Vec<usize> = std::iter::successors(Some(4), |m| Some(m * 2))
        .take_while(|m| *m <= max_half_width)
        .collect();
    let rows = condition_growth(&ms, &[omega], HORIZON, std::f64::consts::FRAC_PI_2, 1.0)?;
    Ok(rows
        .iter()
        .flat_map(|r| [r.half_width as f64, r.cond2v])
        .collect())
}

fn js(e: sinc_pint::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn capped(half_width: usize) -> std::result::Result<usize, JsError> {
    if half_width == 0 || half_width > MAX_HALF_WIDTH {
        return Err(JsError::new(&format!(
            "M must lie in 1..={MAX_HALF_WIDTH}, got {half_width}"
        )));
    }
    Ok(half_width)
}

#[wasm_bindgen]
pub fn z_curve(half_width: usize, samples: usize) -> std::result::Result<Vec<f64>, JsError> {
    z_curve_points(capped(half_width)?, samples.min(1000), -6.0, 12.0).map_err(js)
}

#[wasm_bindgen]
pub fn preconditioned_spectrum(
    problem: &str,
    half_width: usize,
    omega: f64,
) -> std::result::Result<Spectrum, JsError> {
    if half_width > MAX_SPECTRUM_HALF_WIDTH {
        return Err(JsError::new(&format!(
            "the dense spectrum supports M up to {MAX_SPECTRUM_HALF_WIDTH}"
        )));
    }
    spectrum_of(problem, capped(half_width)?, omega).map_err(js)
}

#[wasm_bindgen]
pub fn cond_growth(omega: f64, max_half_width: usize) -> std::result::Result<Vec<f64>, JsError> {
    cond_points(omega, capped(max_half_width)?).map_err(js)
}
