//! Dense complex linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative tolerance used when deciding whether a Hermitian matrix is
/// positive semidefinite: `min_eig >= -PSD_RTOL * trace`.
pub const PSD_RTOL: f64 = 1e-10;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// `tr(Aᴴ B)`, i.e. the Frobenius inner product.
pub fn trace_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.dotc(b)
}

/// Column-major vectorization.
pub fn vec(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVec, rows: usize) -> CMat {
    assert_eq!(v.len() % rows, 0);
    CMat::from_column_slice(rows, v.len() / rows, v.as_slice())
}

/// Dense Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn max_asymmetry(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Mirrors the upper triangle onto the lower one and zeroes the imaginary
/// part of the diagonal, producing an exactly Hermitian matrix.
pub fn hermitize(mut m: CMat) -> CMat {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)] = c(m[(j, j)].re);
        for i in 0..j {
            let v = m[(i, j)];
            m[(j, i)] = v.conj();
        }
    }
    m
}

/// Averages `m` with its conjugate transpose.
pub fn hermitian_part(m: &CMat) -> CMat {
    hermitize((m + m.adjoint()).scale(0.5))
}

pub fn trace_re(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eigenvalues(m: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    eigenvalues(m)[0]
}

/// Clamps the negative eigenvalues of a Hermitian matrix to zero. Returns the
/// projected matrix and whether any eigenvalue was clamped.
pub fn project_psd(m: &CMat) -> (CMat, bool) {
    let eig = hermitian_part(m).symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return (hermitian_part(m), false);
    }
    let clamped = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| c(l.max(0.0))));
    let v = &eig.eigenvectors;
    let projected = v * DMatrix::from_diagonal(&clamped) * v.adjoint();
    (hermitize(projected), true)
}

/// Returns `L` with `L·Lᴴ = m` for a Hermitian PSD matrix.
///
/// Cholesky is tried first. Numerically semidefinite inputs fall back to an
/// eigendecomposition whose eigenvalues below `PSD_RTOL·trace` are set to 0.
pub fn psd_factor(m: &CMat) -> Result<CMat> {
    if let Some(l) = cholesky_lower(m) {
        return Ok(l);
    }
    let trace = trace_re(m).abs();
    let eig = hermitian_part(m).symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let floor = PSD_RTOL * trace.max(f64::MIN_POSITIVE);
    if min_eig < -floor {
        return Err(Error::NotPsd { min_eig, trace });
    }
    let mut l = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = if lambda > floor { lambda.sqrt() } else { 0.0 };
        l.column_mut(j).scale_mut(s);
    }
    Ok(l)
}

/// Lower Cholesky factor of a Hermitian matrix, reading the lower triangle.
/// Returns `None` unless every pivot is strictly positive.
///
/// nalgebra's complex Cholesky takes complex square roots of the pivots and
/// therefore accepts indefinite input, hence this version.
pub fn cholesky_lower(m: &CMat) -> Option<CMat> {
    let n = m.nrows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = c(djj);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Cholesky factorization of a Hermitian positive definite matrix with
/// left and right solves.
#[derive(Clone)]
pub struct HpdFactor {
    lower: CMat,
}

impl HpdFactor {
    pub fn new(m: &CMat, what: &'static str) -> Result<Self> {
        cholesky_lower(m)
            .map(|lower| HpdFactor { lower })
            .ok_or(Error::Singular(what))
    }

    pub fn lower(&self) -> &CMat {
        &self.lower
    }

    /// `H⁻¹ X`
    pub fn solve_left(&self, x: &CMat) -> CMat {
        let w = self.lower.solve_lower_triangular(x).expect("nonzero pivots");
        self.lower.ad_solve_lower_triangular(&w).expect("nonzero pivots")
    }

    /// `X H⁻¹`, using `X H⁻¹ = (H⁻¹ Xᴴ)ᴴ` for Hermitian `H`.
    pub fn solve_right(&self, x: &CMat) -> CMat {
        self.solve_left(&x.adjoint()).adjoint()
    }

    pub fn solve_vec(&self, x: &CVec) -> CVec {
        let w = self.lower.solve_lower_triangular(x).expect("nonzero pivots");
        self.lower.ad_solve_lower_triangular(&w).expect("nonzero pivots")
    }
}

/// Circularly symmetric complex Gaussian with unit variance.
pub fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn cn_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVec {
    CVec::from_fn(len, |_, _| cn01(rng))
}

pub fn cn_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    // Column-major draw order, matching `from_fn`'s traversal.
    CMat::from_fn(rows, cols, |_, _| cn01(rng))
}

pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// `max |a - b| / max(max |b|, tiny)`: a normwise relative difference.
pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
