//! Diagonalization-based space-time preconditioners.
//!
//! `P(ω) = I - (S(ω) D D̂) ⊗ K̄` where `S(ω) = I^{(-1)} - (ω/2) e eᵀ`. With the time factor
//! diagonalized as `V Σ V⁻¹`, applying `P⁻¹` costs two panel products and `m` independent
//! shifted solves `(I - λ_j K̄)⁻¹`.

use std::cmp::Ordering;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    complexify, condition_number, eig_general, eig_hermitian, inverse_complex, C64, ZERO,
};
use crate::operator::{
    affine_inner, AffineOperator, DenseOperator, ShiftedSolver, SpatialOperator,
};
use crate::sinc::{SincGrid, SincIntegrationMatrix};
use crate::system::{apply_time_matrix, AllAtOnceSystem, BlockFamily};

/// Largest accepted diagonalization residual.
pub const RECONSTRUCTION_GATE: f64 = 1e-8;

/// `S(ω) = I^{(-1)} - (ω/2) e eᵀ`, stored densely.
#[derive(Debug, Clone)]
pub struct DampedSkewMatrix {
    pub omega: f64,
    pub matrix: DMatrix<f64>,
}

impl DampedSkewMatrix {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn build_damped_skew(imat: &SincIntegrationMatrix, omega: f64) -> Result<DampedSkewMatrix> {
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::Parameter(format!(
            "omega must lie in (0, 1], got {omega}"
        )));
    }
    let m = imat.size();
    let lift = 0.5 * (1.0 - omega);
    // The skew part is odd in l - j by construction, so ω = 1 is exactly skew-symmetric.
    let matrix = DMatrix::from_fn(m, m, |l, j| imat.skew(l as i64 - j as i64) + lift);
    Ok(DampedSkewMatrix { omega, matrix })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxSource {
    Averaging,
    Nkpa,
}

/// `blockdiag(K_j) ≈ diag(D̂) ⊗ K̄`.
#[derive(Debug, Clone)]
pub struct KroneckerApprox {
    pub kbar: Arc<dyn SpatialOperator>,
    pub dhat: Vec<f64>,
    pub source: ApproxSource,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Arithmetic mean of the family.
pub fn average_operator(family: &BlockFamily) -> Result<Arc<dyn SpatialOperator>> {
    match family {
        BlockFamily::Constant(k) => Ok(Arc::clone(k)),
        BlockFamily::Affine {
            base,
            scales,
            shifts,
        } => {
            if scales.is_empty() {
                return Err(Error::Shape("empty operator family".into()));
            }
            let shift = match shifts {
                Some(s) => {
                    let n = base.dim();
                    if s.iter().any(|v| v.len() != n) {
                        return Err(Error::Shape("affine shift vectors differ in length".into()));
                    }
                    let mut acc = vec![0.0; n];
                    for v in s {
                        for (a, x) in acc.iter_mut().zip(v) {
                            *a += x;
                        }
                    }
                    let inv = 1.0 / s.len() as f64;
                    Some(acc.into_iter().map(|a| a * inv).collect())
                }
                None => None,
            };
            Ok(Arc::new(AffineOperator {
                base: Arc::clone(base),
                scale: mean(scales),
                shift,
            }))
        }
        BlockFamily::General(ks) => {
            let first = ks
                .first()
                .ok_or_else(|| Error::Shape("empty operator family".into()))?;
            let n = first.dim();
            let mut acc = DMatrix::<f64>::zeros(n, n);
            for k in ks {
                if k.dim() != n {
                    return Err(Error::Shape("operators differ in dimension".into()));
                }
                acc += k.to_dense();
            }
            acc /= ks.len() as f64;
            Ok(Arc::new(DenseOperator(acc)))
        }
    }
}

/// Frobenius-optimal `D̂_j = tr(K_jᵀ K̄) / tr(K̄ᵀ K̄)` with `K̄` the family mean.
pub fn nkpa_diagonal(family: &BlockFamily, m: usize) -> Result<Vec<f64>> {
    match family {
        BlockFamily::Constant(k) => {
            if k.frobenius_sq() == 0.0 {
                return Err(Error::DegenerateOperator(
                    "averaged operator is zero".into(),
                ));
            }
            Ok(vec![1.0; m])
        }
        BlockFamily::Affine {
            base,
            scales,
            shifts,
        } => {
            let kbar = average_operator(family)?;
            let denom = kbar.frobenius_sq();
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::DegenerateOperator(
                    "averaged operator is zero".into(),
                ));
            }
            let bar = AffineOperator {
                base: Arc::clone(base),
                scale: mean(scales),
                shift: shifts.as_ref().map(|_| {
                    kbar.diagonal()
                        .iter()
                        .zip(base.diagonal())
                        .map(|(k, b)| k - mean(scales) * b)
                        .collect()
                }),
            };
            Ok((0..scales.len())
                .map(|j| {
                    let kj = AffineOperator {
                        base: Arc::clone(base),
                        scale: scales[j],
                        shift: shifts.as_ref().map(|s| s[j].clone()),
                    };
                    affine_inner(&kj, &bar) / denom
                })
                .collect())
        }
        BlockFamily::General(ks) => {
            let kbar = average_operator(family)?.to_dense();
            let denom = kbar.norm_squared();
            if denom == 0.0 {
                return Err(Error::DegenerateOperator(
                    "averaged operator is zero".into(),
                ));
            }
            Ok(ks.iter().map(|k| k.to_dense().dot(&kbar) / denom).collect())
        }
    }
}

pub fn kronecker_approx(
    family: &BlockFamily,
    m: usize,
    source: ApproxSource,
) -> Result<KroneckerApprox> {
    let kbar = average_operator(family)?;
    let dhat = match source {
        ApproxSource::Averaging => vec![1.0; m],
        ApproxSource::Nkpa => nkpa_diagonal(family, m)?,
    };
    Ok(KroneckerApprox { kbar, dhat, source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalizationMode {
    /// ω = 1 with positive weights: Hermitian eigensolve of `i W^{1/2} S W^{1/2}`.
    ExactSkew,
    /// Similarity-scaled non-symmetric eigensolve of `W^{1/2} S(ω) W^{1/2}`.
    General,
    /// Direct eigensolve of `S(ω) W` when some weight is non-positive.
    Direct,
}

/// Eigendecomposition `S(ω) D D̂ = V Σ V⁻¹`.
#[derive(Debug, Clone)]
pub struct TimeFactorEigen {
    pub lambdas: Vec<C64>,
    pub v: DMatrix<C64>,
    pub vinv: DMatrix<C64>,
    /// Index of the conjugate partner, when eigenpairs were paired.
    pub partner: Vec<Option<usize>>,
    pub cond2v: f64,
    pub residual: f64,
    pub mode: DiagonalizationMode,
    /// The diagonalized time factor `S(ω) D D̂`.
    pub factor: DMatrix<f64>,
}

fn cmp_eigen(a: &C64, b: &C64) -> Ordering {
    a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re))
}

fn sort_pairs(values: &mut Vec<C64>, vectors: &mut DMatrix<C64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| cmp_eigen(&values[i], &values[j]));
    *values = order.iter().map(|&i| values[i]).collect();
    *vectors = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, order[c])]
    });
}

/// Makes eigenpairs of a real matrix exactly conjugate-symmetric. Each eigenvalue in the upper
/// half plane is matched to the nearest conjugate in the lower half; what is left must be real
/// to within its own magnitude. Tolerances are relative to each eigenvalue, since the spectrum
/// of `S(ω) D` spans many decades. Returns partner indices, or all `None` if the split is ambiguous.
fn pair_conjugates(values: &mut [C64], vectors: &mut DMatrix<C64>) -> Vec<Option<usize>> {
    let m = values.len();
    let scale = values
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let close = |a: C64, b: C64| (a - b).norm() <= 1e-8 * a.norm().max(b.norm()) + 1e-14 * scale;
    let none = vec![None; m];
    let mut partner = vec![None; m];
    let mut pos: Vec<usize> = (0..m).filter(|&i| values[i].im > 0.0).collect();
    // Largest imaginary parts first, so near-real eigenvalues are matched last.
    pos.sort_by(|&i, &j| values[j].im.total_cmp(&values[i].im));
    for &p in &pos {
        if partner[p].is_some() {
            continue;
        }
        let target = values[p].conj();
        let best = (0..m)
            .filter(|&q| q != p && partner[q].is_none() && values[q].im < 0.0)
            .min_by(|&a, &b| {
                (values[a] - target)
                    .norm()
                    .total_cmp(&(values[b] - target).norm())
            });
        match best {
            Some(q) if close(values[q], target) => {
                partner[p] = Some(q);
                partner[q] = Some(p);
            }
            _ if close(values[p], C64::new(values[p].re, 0.0)) => {}
            _ => return none,
        }
    }
    let real: Vec<usize> = (0..m).filter(|&i| partner[i].is_none()).collect();
    if real
        .iter()
        .any(|&i| !close(values[i], C64::new(values[i].re, 0.0)))
    {
        return none;
    }
    for p in 0..m {
        if let Some(q) = partner[p] {
            if values[p].im > 0.0 {
                values[q] = values[p].conj();
                for r in 0..vectors.nrows() {
                    vectors[(r, q)] = vectors[(r, p)].conj();
                }
            }
        }
    }
    for &i in &real {
        values[i] = C64::new(values[i].re, 0.0);
        let mut col = vectors.column(i).into_owned();
        let pivot = col
            .iter()
            .copied()
            .fold(ZERO, |a, b| if b.norm() > a.norm() { b } else { a });
        if pivot.norm() > 0.0 {
            let phase = pivot.conj() / pivot.norm();
            for c in col.iter_mut() {
                *c = C64::new((*c * phase).re, 0.0);
            }
            let nrm = col.norm();
            if nrm > 0.0 {
                col /= C64::new(nrm, 0.0);
            }
            vectors.set_column(i, &col);
        }
    }
    partner
}

/// Pairs the eigenvectors of a real skew matrix by index symmetry of the sorted spectrum,
/// `λ_k ↔ λ_{m-1-k}`, which keeps `Q` unitary even when many eigenvalues are tiny.
fn pair_skew(values: &mut [C64], vectors: &mut DMatrix<C64>) -> Vec<Option<usize>> {
    let m = values.len();
    let mut partner = vec![None; m];
    for k in 0..m / 2 {
        let j = m - 1 - k;
        let mean = 0.5 * (values[k].im - values[j].im);
        values[k] = C64::new(0.0, mean);
        values[j] = C64::new(0.0, -mean);
        for r in 0..vectors.nrows() {
            vectors[(r, j)] = vectors[(r, k)].conj();
        }
        partner[k] = Some(j);
        partner[j] = Some(k);
    }
    if m % 2 == 1 {
        let c = m / 2;
        values[c] = ZERO;
        let mut col = vectors.column(c).into_owned();
        let pivot = col
            .iter()
            .copied()
            .fold(ZERO, |a, b| if b.norm() > a.norm() { b } else { a });
        if pivot.norm() > 0.0 {
            let phase = pivot.conj() / pivot.norm();
            for x in col.iter_mut() {
                *x = C64::new((*x * phase).re, 0.0);
            }
            let nrm = col.norm();
            col /= C64::new(nrm, 0.0);
            vectors.set_column(c, &col);
        }
    }
    partner
}

fn reconstruction_residual(a: &DMatrix<f64>, v: &DMatrix<C64>, lambdas: &[C64]) -> f64 {
    let mut vn = v.clone();
    crate::linalg::normalize_columns(&mut vn);
    let ac = complexify(a);
    let mut r = &ac * &vn;
    for (j, lam) in lambdas.iter().enumerate() {
        for i in 0..r.nrows() {
            r[(i, j)] -= vn[(i, j)] * lam;
        }
    }
    let anorm = a.norm();
    if anorm == 0.0 {
        r.norm()
    } else {
        r.norm() / anorm
    }
}

/// Diagonalizes `S(ω) D D̂`.
pub fn diagonalize_time_factor(
    s: &DampedSkewMatrix,
    grid: &SincGrid,
    dhat: &[f64],
) -> Result<TimeFactorEigen> {
    let m = s.size();
    if grid.size() != m || dhat.len() != m {
        return Err(Error::Shape(format!(
            "time factor of size {m} with grid of size {} and {} weights",
            grid.size(),
            dhat.len()
        )));
    }
    let w: Vec<f64> = grid.d.iter().zip(dhat).map(|(d, e)| d * e).collect();
    if w.iter().any(|x| *x == 0.0 || !x.is_finite()) {
        return Err(Error::DegenerateOperator("zero entry in D·D̂".into()));
    }
    let factor = DMatrix::from_fn(m, m, |l, j| s.matrix[(l, j)] * w[j]);
    let positive = w.iter().all(|x| *x > 0.0);

    let (lambdas, v, vinv, partner, mode) = if positive {
        let sq: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
        let b = DMatrix::from_fn(m, m, |l, j| sq[l] * s.matrix[(l, j)] * sq[j]);
        if s.omega == 1.0 {
            // B is skew, so i·B is Hermitian with eigenvalues θ and B = -i·H.
            let h = b.map(|x| C64::new(0.0, x));
            let (theta, q) = eig_hermitian(&h)?;
            let mut lambdas: Vec<C64> = theta.iter().map(|t| C64::new(0.0, -t)).collect();
            let mut q = q;
            sort_pairs(&mut lambdas, &mut q);
            let partner = pair_skew(&mut lambdas, &mut q);
            let v = DMatrix::from_fn(m, m, |r, c| q[(r, c)] / sq[r]);
            let vinv = DMatrix::from_fn(m, m, |r, c| q[(c, r)].conj() * sq[c]);
            (lambdas, v, vinv, partner, DiagonalizationMode::ExactSkew)
        } else {
            let eig = eig_general(&complexify(&b))?;
            let mut lambdas = eig.values;
            let mut x = eig.vectors;
            let mut v = DMatrix::from_fn(m, m, |r, c| x[(r, c)] / sq[r]);
            crate::linalg::normalize_columns(&mut v);
            x = v;
            sort_pairs(&mut lambdas, &mut x);
            let partner = pair_conjugates(&mut lambdas, &mut x);
            let vinv = inverse_complex(&x)?;
            (lambdas, x, vinv, partner, DiagonalizationMode::General)
        }
    } else {
        let eig = eig_general(&complexify(&factor))?;
        let mut lambdas = eig.values;
        let mut x = eig.vectors;
        sort_pairs(&mut lambdas, &mut x);
        let partner = pair_conjugates(&mut lambdas, &mut x);
        let vinv = inverse_complex(&x)?;
        (lambdas, x, vinv, partner, DiagonalizationMode::Direct)
    };

    let residual = reconstruction_residual(&factor, &v, &lambdas);
    if !(residual <= RECONSTRUCTION_GATE) {
        return Err(Error::Diagonalization { residual });
    }
    let cond2v = condition_number(&v);
    Ok(TimeFactorEigen {
        lambdas,
        v,
        vinv,
        partner,
        cond2v,
        residual,
        mode,
        factor,
    })
}

/// Runtime knobs for [`DiagonalizedPreconditioner`].
#[derive(Debug, Clone, Copy)]
pub struct ApplyOptions {
    /// Solve one member of each conjugate pair and conjugate the result.
    pub conjugate_economy: bool,
    /// Worker count for the shifted solves; 0 uses the global pool.
    pub threads: usize,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        ApplyOptions {
            conjugate_economy: true,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ApplyStats {
    pub applications: usize,
    /// Largest `‖Im‖ / ‖Re‖` of the assembled result seen so far.
    pub max_imag_ratio: f64,
}

/// `P⁻¹` applied by the three-step diagonalization procedure.
pub struct DiagonalizedPreconditioner {
    pub eigen: TimeFactorEigen,
    pub approx: KroneckerApprox,
    pub omega: f64,
    n: usize,
    /// Indices that are solved explicitly, with their conjugate partner (if skipped).
    active: Vec<(usize, Option<usize>)>,
    solvers: Vec<Box<dyn ShiftedSolver>>,
    options: ApplyOptions,
    stats: Mutex<ApplyStats>,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for DiagonalizedPreconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiagonalizedPreconditioner")
            .field("m", &self.eigen.lambdas.len())
            .field("n", &self.n)
            .field("omega", &self.omega)
            .field("mode", &self.eigen.mode)
            .field("cond2v", &self.eigen.cond2v)
            .finish()
    }
}

impl DiagonalizedPreconditioner {
    pub fn new(
        imat: &SincIntegrationMatrix,
        grid: &SincGrid,
        approx: KroneckerApprox,
        omega: f64,
        options: ApplyOptions,
    ) -> Result<Self> {
        let s = build_damped_skew(imat, omega)?;
        let eigen = diagonalize_time_factor(&s, grid, &approx.dhat)?;
        Self::from_eigen(eigen, approx, omega, options)
    }

    pub fn from_eigen(
        eigen: TimeFactorEigen,
        approx: KroneckerApprox,
        omega: f64,
        options: ApplyOptions,
    ) -> Result<Self> {
        let m = eigen.lambdas.len();
        let n = approx.kbar.dim();
        let mut active = Vec::with_capacity(m);
        for j in 0..m {
            match (options.conjugate_economy, eigen.partner[j]) {
                (true, Some(_)) if eigen.lambdas[j].im < 0.0 => {}
                (true, Some(p)) => active.push((j, Some(p))),
                _ => active.push((j, None)),
            }
        }
        #[cfg(feature = "parallel")]
        let pool = if options.threads > 0 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(options.threads)
                    .build()
                    .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        let kbar = &approx.kbar;
        let build = |&(j, _): &(usize, Option<usize>)| {
            let lambda = eigen.lambdas[j];
            kbar.shifted_solver(lambda)
                .map_err(|_| Error::ShiftSolve { index: j, lambda })
        };
        #[cfg(feature = "parallel")]
        let solvers: Result<Vec<_>> = {
            use rayon::prelude::*;
            let run = || active.par_iter().map(build).collect();
            match &pool {
                Some(p) => p.install(run),
                None => run(),
            }
        };
        #[cfg(not(feature = "parallel"))]
        let solvers: Result<Vec<_>> = active.iter().map(build).collect();
        Ok(DiagonalizedPreconditioner {
            eigen,
            approx,
            omega,
            n,
            active,
            solvers: solvers?,
            options,
            stats: Mutex::new(ApplyStats::default()),
            #[cfg(feature = "parallel")]
            pool,
        })
    }

    pub fn m(&self) -> usize {
        self.eigen.lambdas.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cond2v(&self) -> f64 {
        self.eigen.cond2v
    }

    pub fn options(&self) -> ApplyOptions {
        self.options
    }

    pub fn stats(&self) -> ApplyStats {
        *self.stats.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Number of shifted solves per application.
    pub fn solve_count(&self) -> usize {
        self.active.len()
    }

    /// One shifted solve on the Step-(i) output for active slot `k`.
    fn solve_slot(&self, k: usize, r: &[f64]) -> Result<Vec<C64>> {
        let (j, _) = self.active[k];
        let n = self.n;
        let m = self.m();
        let vinv = &self.eigen.vinv;
        let mut col = vec![ZERO; n];
        for l in 0..m {
            let c = vinv[(j, l)];
            if c != ZERO {
                for (x, rv) in col.iter_mut().zip(&r[l * n..(l + 1) * n]) {
                    *x += c * rv;
                }
            }
        }
        let lambda = self.eigen.lambdas[j];
        self.solvers[k]
            .solve(&mut col)
            .map_err(|_| Error::ShiftSolve { index: j, lambda })?;
        if col.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::ShiftSolve { index: j, lambda });
        }
        Ok(col)
    }

    /// `P⁻¹ r`.
    pub fn apply_inverse(&self, r: &[f64]) -> Result<Vec<f64>> {
        let m = self.m();
        let n = self.n;
        if r.len() != m * n {
            return Err(Error::Shape(format!(
                "vector has length {}, expected {}",
                r.len(),
                m * n
            )));
        }
        let slots: Vec<usize> = (0..self.active.len()).collect();
        #[cfg(feature = "parallel")]
        let solved: Result<Vec<Vec<C64>>> = {
            use rayon::prelude::*;
            let run = || slots.par_iter().map(|&k| self.solve_slot(k, r)).collect();
            match &self.pool {
                Some(p) => p.install(run),
                None => run(),
            }
        };
        #[cfg(not(feature = "parallel"))]
        let solved: Result<Vec<Vec<C64>>> = slots.iter().map(|&k| self.solve_slot(k, r)).collect();
        let solved = solved?;

        let v = &self.eigen.v;
        let mut re = vec![0.0; m * n];
        let mut im = vec![0.0; m * n];
        for (k, col) in solved.iter().enumerate() {
            let (j, partner) = self.active[k];
            let weight = if partner.is_some() { 2.0 } else { 1.0 };
            for l in 0..m {
                let c = v[(l, j)];
                let out_re = &mut re[l * n..(l + 1) * n];
                for (o, x) in out_re.iter_mut().zip(col) {
                    *o += weight * (c * x).re;
                }
                if partner.is_none() {
                    let out_im = &mut im[l * n..(l + 1) * n];
                    for (o, x) in out_im.iter_mut().zip(col) {
                        *o += (c * x).im;
                    }
                }
            }
        }
        let re_norm = re.iter().map(|x| x * x).sum::<f64>().sqrt();
        let im_norm = im.iter().map(|x| x * x).sum::<f64>().sqrt();
        let ratio = if re_norm > 0.0 {
            im_norm / re_norm
        } else {
            im_norm
        };
        let mut st = self.stats.lock().unwrap_or_else(|e| e.into_inner());
        st.applications += 1;
        st.max_imag_ratio = st.max_imag_ratio.max(ratio);
        Ok(re)
    }

    /// Matrix-free `P x`.
    pub fn apply_forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = self.m();
        let n = self.n;
        if x.len() != m * n {
            return Err(Error::Shape(format!(
                "vector has length {}, expected {}",
                x.len(),
                m * n
            )));
        }
        let mut kx = vec![0.0; m * n];
        for (o, xi) in kx.chunks_mut(n).zip(x.chunks(n)) {
            self.approx.kbar.apply(xi, o);
        }
        let mut out = vec![0.0; m * n];
        apply_time_matrix(&self.eigen.factor, n, &kx, &mut out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi - *o;
        }
        Ok(out)
    }

    /// Dense `P` for small problems.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let size = self.m() * self.n;
        if size > crate::system::DENSE_CAP {
            return Err(Error::TooLarge {
                size,
                cap: crate::system::DENSE_CAP,
            });
        }
        let k = self.approx.kbar.to_dense();
        Ok(DMatrix::identity(size, size) - self.eigen.factor.kronecker(&k))
    }
}

/// Named preconditioner choices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PreconditionerKind {
    None,
    /// Averaged `K̄` with `S`.
    P,
    /// Averaged `K̄` with `S(ω)`.
    POmega(f64),
    /// Alias of `P` that names the averaging explicitly.
    Averaging,
    Nkpa,
    NkpaOmega(f64),
}

impl PreconditionerKind {
    pub fn parts(&self) -> Option<(ApproxSource, f64)> {
        match *self {
            PreconditionerKind::None => None,
            PreconditionerKind::P | PreconditionerKind::Averaging => {
                Some((ApproxSource::Averaging, 1.0))
            }
            PreconditionerKind::POmega(w) => Some((ApproxSource::Averaging, w)),
            PreconditionerKind::Nkpa => Some((ApproxSource::Nkpa, 1.0)),
            PreconditionerKind::NkpaOmega(w) => Some((ApproxSource::Nkpa, w)),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            PreconditionerKind::None => "none".into(),
            PreconditionerKind::P => "p".into(),
            PreconditionerKind::POmega(w) => format!("p_omega({w})"),
            PreconditionerKind::Averaging => "avg".into(),
            PreconditionerKind::Nkpa => "nkpa".into(),
            PreconditionerKind::NkpaOmega(w) => format!("nkpa_omega({w})"),
        }
    }
}

/// Builds the preconditioner for a linear all-at-once system.
pub fn build_preconditioner(
    sys: &AllAtOnceSystem,
    kind: PreconditionerKind,
    options: ApplyOptions,
) -> Result<Option<DiagonalizedPreconditioner>> {
    let Some((source, omega)) = kind.parts() else {
        return Ok(None);
    };
    let approx = kronecker_approx(&sys.blocks, sys.m(), source)?;
    DiagonalizedPreconditioner::new(&sys.imat, &sys.grid, approx, omega, options).map(Some)
}
