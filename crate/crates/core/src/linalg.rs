//! Dense Hermitian linear algebra at desk scale (dimension <= 64).
//!
//! Eigendecompositions are delegated to `nalgebra`'s Hermitian solver; this
//! module owns the spectral calculus built on top of it: matrix functions,
//! positive-part projections, generalized eigenvalues of a pair, sampling of
//! random states and channels, and the JSON matrix format.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const MAX_DIM: usize = 64;

/// Relative asymmetry above which an input is rejected rather than symmetrized.
const HERMITIAN_REJECT_TOL: f64 = 1e-8;
/// `min eig >= STRICT_POSITIVITY * max eig` for strictly positive operators.
pub const STRICT_POSITIVITY: f64 = 1e-10;
const UNIT_TRACE_TOL: f64 = 1e-12;
const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// A dense complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
}

/// Ascending eigenvalues and the matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        &scaled * v.adjoint()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("dimension >= 1")
    }
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

impl HermitianOperator {
    /// Validates and symmetrizes a square matrix.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let (rows, cols) = mat.shape();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows > MAX_DIM {
            return Err(Error::DimensionTooLarge(rows));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = (&mat - mat.adjoint()).norm();
        let scale = mat.norm().max(f64::MIN_POSITIVE);
        if asym > HERMITIAN_REJECT_TOL * scale.max(1.0) {
            return Err(Error::NotHermitian(asym / scale));
        }
        Ok(Self { mat: symmetrize(&mat) })
    }

    /// Real diagonal operator.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mat = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(mat)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim))
    }

    /// Builds from row-major real and imaginary parts.
    pub fn from_parts(dim: usize, re: &[f64], im: Option<&[f64]>) -> Result<Self> {
        if re.len() != dim * dim || im.is_some_and(|im| im.len() != dim * dim) {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for dimension {dim}",
                dim * dim
            )));
        }
        let mat = CMatrix::from_fn(dim, dim, |i, j| {
            let k = i * dim + j;
            Complex64::new(re[k], im.map_or(0.0, |im| im[k]))
        });
        Self::new(mat)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scale(&self, t: f64) -> Self {
        Self { mat: self.mat.scale(t) }
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, t: f64, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Self {
            mat: symmetrize(&(&self.mat + other.mat.scale(t))),
        })
    }

    /// Re-symmetrizes an expected-Hermitian product without the rejection check.
    pub(crate) fn from_product(mat: CMatrix) -> Self {
        Self { mat: symmetrize(&mat) }
    }

    /// `Tr[self * other]`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &Self) -> f64 {
        self.mat
            .iter()
            .zip(other.mat.transpose().iter())
            .map(|(a, b)| (a * b).re)
            .sum()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.mat[(i, j)].norm() <= tol))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.mat.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn eigh(&self) -> Result<SpectralDecomposition> {
        eigh(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(eigh(self)?.eigenvalues)
    }

    /// Largest absolute eigenvalue.
    pub fn operator_norm(&self) -> Result<f64> {
        let e = eigh(self)?;
        Ok(e.min().abs().max(e.max().abs()))
    }

    pub fn to_json(&self) -> MatrixJson {
        let n = self.dim();
        MatrixJson {
            dim: n,
            re: (0..n).map(|i| (0..n).map(|j| self.mat[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| self.mat[(i, j)].im).collect()).collect(),
        }
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn eigh(a: &HermitianOperator) -> Result<SpectralDecomposition> {
    let n = a.dim();
    let eig = nalgebra::SymmetricEigen::try_new(a.mat.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenFailed { dim: n, norm: a.mat.norm() })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// `V f(Λ) V†` for a decomposition already at hand.
pub fn apply_spectral(dec: &SpectralDecomposition, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    let v = &dec.eigenvectors;
    let mut scaled = v.clone();
    for (j, &l) in dec.eigenvalues.iter().enumerate() {
        let fl = f(l);
        if !fl.is_finite() {
            return Err(Error::SpectrumOutsideDomain(l));
        }
        scaled.column_mut(j).scale_mut(fl);
    }
    Ok(HermitianOperator::from_product(&scaled * v.adjoint()))
}

/// Spectral calculus `f(a) = V f(Λ) V†`.
pub fn matrix_function(a: &HermitianOperator, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    apply_spectral(&eigh(a)?, f)
}

/// Strictly positive power `a^p` with `a > 0`.
pub fn positive_power(a: &HermitianOperator, p: f64) -> Result<HermitianOperator> {
    matrix_function(a, |x| if x > 0.0 { x.powf(p) } else { f64::NAN })
}

pub fn log_positive(a: &HermitianOperator) -> Result<HermitianOperator> {
    matrix_function(a, |x| if x > 0.0 { x.ln() } else { f64::NAN })
}

/// Threshold below which an eigenvalue is not counted as positive.
pub fn projection_threshold(dec: &SpectralDecomposition) -> f64 {
    1e-12 * dec.min().abs().max(dec.max().abs()).max(1.0)
}

/// Orthogonal projector onto eigenvectors with eigenvalue above
/// `1e-12 * max(1, ||a||)`.
pub fn positive_part_projection(a: &HermitianOperator) -> Result<HermitianOperator> {
    let dec = eigh(a)?;
    let tau = projection_threshold(&dec);
    apply_spectral(&dec, |x| if x > tau { 1.0 } else { 0.0 })
}

/// A pair `(rho, sigma)` of positive operators of equal dimension.
///
/// `sigma` is always strictly positive. `rho` is strictly positive unless the
/// pair was built with [`OperatorPair::with_psd_rho`].
#[derive(Debug, Clone)]
pub struct OperatorPair {
    rho: HermitianOperator,
    sigma: HermitianOperator,
    normalized: bool,
    rho_strictly_positive: bool,
}

fn check_strictly_positive(a: &HermitianOperator) -> Result<()> {
    let ev = a.eigenvalues()?;
    let (min, max) = (ev[0], ev[ev.len() - 1]);
    if !(max > 0.0) || min < STRICT_POSITIVITY * max {
        return Err(Error::NotStrictlyPositive { min, max });
    }
    Ok(())
}

fn check_psd(a: &HermitianOperator) -> Result<()> {
    let ev = a.eigenvalues()?;
    let max = ev[ev.len() - 1].abs().max(ev[0].abs());
    if ev[0] < -1e-12 * max.max(1.0) {
        return Err(Error::NotPositive(ev[0]));
    }
    Ok(())
}

fn unit_trace(a: &HermitianOperator) -> bool {
    (a.trace() - 1.0).abs() <= UNIT_TRACE_TOL
}

impl OperatorPair {
    /// Both operators strictly positive.
    pub fn new(rho: HermitianOperator, sigma: HermitianOperator) -> Result<Self> {
        if rho.dim() != sigma.dim() {
            return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
        }
        check_strictly_positive(&rho)?;
        check_strictly_positive(&sigma)?;
        let normalized = unit_trace(&rho) && unit_trace(&sigma);
        Ok(Self { rho, sigma, normalized, rho_strictly_positive: true })
    }

    /// Strictly positive density matrices.
    pub fn new_normalized(rho: HermitianOperator, sigma: HermitianOperator) -> Result<Self> {
        let pair = Self::new(rho, sigma)?;
        if !pair.normalized {
            let t = if unit_trace(&pair.rho) { pair.sigma.trace() } else { pair.rho.trace() };
            return Err(Error::NotNormalized(t));
        }
        Ok(pair)
    }

    /// `rho` only positive semidefinite, `sigma` strictly positive.
    ///
    /// Every divergence in this crate other than the Umegaki relative entropy
    /// is well defined on such pairs.
    pub fn with_psd_rho(rho: HermitianOperator, sigma: HermitianOperator) -> Result<Self> {
        if rho.dim() != sigma.dim() {
            return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
        }
        check_psd(&rho)?;
        check_strictly_positive(&sigma)?;
        let normalized = unit_trace(&rho) && unit_trace(&sigma);
        let rho_strictly_positive = check_strictly_positive(&rho).is_ok();
        Ok(Self { rho, sigma, normalized, rho_strictly_positive })
    }

    #[inline]
    pub fn rho(&self) -> &HermitianOperator {
        &self.rho
    }

    #[inline]
    pub fn sigma(&self) -> &HermitianOperator {
        &self.sigma
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    #[inline]
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    #[inline]
    pub fn rho_strictly_positive(&self) -> bool {
        self.rho_strictly_positive
    }

    /// Whether `rho` and `sigma` commute up to `tol` in Frobenius norm.
    pub fn commutes(&self, tol: f64) -> bool {
        let a = self.rho.matrix();
        let b = self.sigma.matrix();
        (a * b - b * a).norm() <= tol * (a.norm() * b.norm()).max(f64::MIN_POSITIVE)
    }

    /// `(rho, rho + sigma)`.
    pub fn with_sigma_plus_rho(&self) -> Result<Self> {
        let sum = self.sigma.add_scaled(1.0, &self.rho)?;
        Self::with_psd_rho(self.rho.clone(), sum)
    }

    /// `(rho, t sigma)` for `t > 0`.
    pub fn with_scaled_sigma(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidInput(format!("scale {t} must be positive")));
        }
        Self::with_psd_rho(self.rho.clone(), self.sigma.scale(t))
    }

    pub fn to_json(&self) -> PairJson {
        PairJson { rho: self.rho.to_json(), sigma: self.sigma.to_json() }
    }
}

/// Sorted eigenvalues of `sigma^{-1/2} rho sigma^{-1/2}`.
pub fn generalized_eigenvalues(pair: &OperatorPair) -> Result<Vec<f64>> {
    let isqrt = positive_power(pair.sigma(), -0.5)?;
    let m = isqrt.matrix() * pair.rho().matrix() * isqrt.matrix();
    HermitianOperator::from_product(m).eigenvalues()
}

/// `R = || sigma^{-1/2} rho sigma^{-1/2} ||_inf`.
pub fn relative_sup(pair: &OperatorPair) -> Result<f64> {
    let ev = generalized_eigenvalues(pair)?;
    Ok(ev[ev.len() - 1].max(0.0))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `dim x cols` matrix with i.i.d. standard complex Gaussian entries.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(scale * re, scale * im)
    })
}

/// Random density matrix `G G† / Tr[G G†]` with `G` a `dim x rank` Ginibre
/// matrix. Full-rank samples are mixed with `1e-8` of the maximally mixed state.
pub fn sample_density_with<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Result<HermitianOperator> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::InvalidInput(format!("need 1 <= rank ({rank}) <= dim ({dim})")));
    }
    if dim > MAX_DIM {
        return Err(Error::DimensionTooLarge(dim));
    }
    let g = complex_gaussian(rng, dim, rank);
    let mut w = &g * g.adjoint();
    let tr: f64 = w.diagonal().iter().map(|z| z.re).sum();
    w.scale_mut(1.0 / tr);
    if rank == dim {
        let eps = 1e-8;
        w.scale_mut(1.0 - eps);
        for i in 0..dim {
            w[(i, i)] += Complex64::new(eps / dim as f64, 0.0);
        }
    }
    HermitianOperator::new(w)
}

pub fn sample_density(dim: usize, rank: usize, seed: u64) -> Result<HermitianOperator> {
    sample_density_with(&mut rng_from_seed(seed), dim, rank)
}

/// Haar-random isometry `rows x cols` (`rows >= cols`) from the QR
/// decomposition of a Gaussian matrix, with the phases of `R`'s diagonal
/// absorbed into `Q`.
pub fn haar_isometry<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let g = complex_gaussian(rng, rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let n = d.norm();
        if n > 0.0 {
            let phase = d / n;
            q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    haar_isometry(rng, dim, dim)
}

/// Stinespring channel `X -> Tr_env[V X V†]` with `V: C^in -> C^out ⊗ C^env`.
#[derive(Debug, Clone)]
pub struct Channel {
    isometry: CMatrix,
    dim_in: usize,
    dim_out: usize,
    dim_env: usize,
}

impl Channel {
    pub fn from_isometry(isometry: CMatrix, dim_out: usize, dim_env: usize) -> Result<Self> {
        let (rows, dim_in) = isometry.shape();
        if rows != dim_out * dim_env || rows < dim_in {
            return Err(Error::InvalidInput(format!(
                "isometry of shape {rows}x{dim_in} incompatible with out {dim_out}, env {dim_env}"
            )));
        }
        Ok(Self { isometry, dim_in, dim_out, dim_env })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim_env(&self) -> usize {
        self.dim_env
    }

    pub fn isometry(&self) -> &CMatrix {
        &self.isometry
    }

    pub fn apply(&self, x: &HermitianOperator) -> Result<HermitianOperator> {
        if x.dim() != self.dim_in {
            return Err(Error::DimensionMismatch(x.dim(), self.dim_in));
        }
        let v = &self.isometry;
        let y = v * x.matrix() * v.adjoint();
        let (dout, denv) = (self.dim_out, self.dim_env);
        let out = CMatrix::from_fn(dout, dout, |a, b| {
            (0..denv).map(|e| y[(a * denv + e, b * denv + e)]).sum()
        });
        Ok(HermitianOperator::from_product(out))
    }
}

pub fn sample_channel_with<R: Rng + ?Sized>(
    rng: &mut R,
    dim_in: usize,
    dim_out: usize,
    dim_env: usize,
) -> Result<Channel> {
    if dim_in == 0 || dim_out == 0 || dim_env == 0 {
        return Err(Error::InvalidInput("channel dimensions must be >= 1".into()));
    }
    if dim_out * dim_env < dim_in {
        return Err(Error::InvalidInput(format!(
            "dim_out * dim_env = {} must be >= dim_in = {dim_in}",
            dim_out * dim_env
        )));
    }
    if dim_in > MAX_DIM || dim_out * dim_env > MAX_DIM * MAX_DIM {
        return Err(Error::DimensionTooLarge(dim_in.max(dim_out)));
    }
    let v = haar_isometry(rng, dim_out * dim_env, dim_in);
    Channel::from_isometry(v, dim_out, dim_env)
}

/// Random channel from a Haar isometry; deterministic per seed.
pub fn sample_channel(dim_in: usize, dim_out: usize, dim_env: usize, seed: u64) -> Result<Channel> {
    sample_channel_with(&mut rng_from_seed(seed), dim_in, dim_out, dim_env)
}

/// `{"dim": n, "re": [[...]], "im": [[...]]}`; `im` may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn to_operator(&self) -> Result<HermitianOperator> {
        let n = self.dim;
        let rows_ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|row| row.len() == n);
        if !rows_ok(&self.re) || !(self.im.is_empty() || rows_ok(&self.im)) {
            return Err(Error::InvalidInput(format!("matrix rows do not match dim {n}")));
        }
        let mat = CMatrix::from_fn(n, n, |i, j| {
            let im = if self.im.is_empty() { 0.0 } else { self.im[i][j] };
            Complex64::new(self.re[i][j], im)
        });
        HermitianOperator::new(mat)
    }
}

/// `{"rho": <matrix>, "sigma": <matrix>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairJson {
    pub rho: MatrixJson,
    pub sigma: MatrixJson,
}

impl PairJson {
    /// Strict pair when possible, otherwise one with positive semidefinite `rho`.
    pub fn to_pair(&self) -> Result<OperatorPair> {
        let rho = self.rho.to_operator()?;
        let sigma = self.sigma.to_operator()?;
        OperatorPair::with_psd_rho(rho, sigma)
    }
}

pub fn load_operator(path: &Path) -> Result<HermitianOperator> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str::<MatrixJson>(&text)?.to_operator()
}

pub fn save_operator(path: &Path, a: &HermitianOperator) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&a.to_json())?)?;
    Ok(())
}

pub fn load_pair(path: &Path) -> Result<OperatorPair> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str::<PairJson>(&text)?.to_pair()
}
