//! Channel covariance construction and correlated channel sampling.
//!
//! Covariances follow the Gaussian local-scattering model for a
//! half-wavelength uniform linear array, optionally modulated by independent
//! log-normal gain variations over the array:
//!
//! ```text
//! [R]_mn = β · 10^((f_m + f_n)/20) · E_δ{ exp(jπ (n−m) sin(θ + δ)) },   δ ~ N(0, σ_φ²)
//! ```
//!
//! The expectation is evaluated by Gauss–Legendre quadrature on
//! `[−6σ_φ, 6σ_φ]` with the Gaussian density folded into the weights.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, PSD_RTOL};
use crate::quadrature::GaussLegendre;

/// What a covariance matrix describes. Carried for diagnostics only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovRole {
    /// Channel of user `k` (0-based).
    User(usize),
    Jammer,
    /// Covariance of the pilot projection `y_k` (0-based user).
    PilotProjection(usize),
    /// Covariance of the received data signal.
    Data,
    Generic,
}

/// A Hermitian positive semidefinite matrix with its smallest eigenvalue
/// cached at construction.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    entries: CMat,
    min_eig: f64,
    role: CovRole,
}

impl CovarianceMatrix {
    /// Validates and wraps `entries`.
    ///
    /// Inputs whose asymmetry is within rounding (`1e-12` of the largest
    /// entry) are made exactly Hermitian; anything else is rejected.
    pub fn new(entries: CMat, role: CovRole) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Dimension {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let asym = linalg::max_asymmetry(&entries);
        if asym > 1e-12 * scale.max(1.0) {
            return Err(Error::NotHermitian(asym));
        }
        let entries = linalg::hermitize(entries);
        let trace = linalg::trace_re(&entries);
        let min_eig = linalg::min_eigenvalue(&entries);
        if min_eig < -PSD_RTOL * trace.abs() || trace < 0.0 {
            return Err(Error::NotPsd { min_eig, trace });
        }
        let n = entries.nrows();
        for j in 0..n {
            for i in 0..j {
                let lhs = entries[(i, j)].norm_sqr();
                let rhs = entries[(i, i)].re * entries[(j, j)].re;
                if lhs > rhs * (1.0 + 1e-9) + 1e-300 {
                    return Err(Error::NotPsd { min_eig, trace });
                }
            }
        }
        Ok(CovarianceMatrix { entries, min_eig, role })
    }

    pub fn identity(dim: usize) -> Self {
        CovarianceMatrix {
            entries: linalg::identity(dim),
            min_eig: 1.0,
            role: CovRole::Generic,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    pub fn role(&self) -> CovRole {
        self.role
    }

    pub fn with_role(mut self, role: CovRole) -> Self {
        self.role = role;
        self
    }

    pub fn trace(&self) -> f64 {
        linalg::trace_re(&self.entries)
    }
}

impl AsRef<CMat> for CovarianceMatrix {
    fn as_ref(&self) -> &CMat {
        &self.entries
    }
}

/// Parameters of one local-scattering covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringParams {
    /// Average large-scale fading, linear and noise-normalized.
    pub beta: f64,
    /// Nominal angle of arrival in radians.
    pub theta: f64,
    /// Angular standard deviation in radians.
    pub sigma_phi: f64,
    /// Standard deviation (dB) of the per-antenna gain variations.
    pub fading_std: f64,
    pub antennas: usize,
}

impl ScatteringParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.sigma_phi > 0.0 && self.sigma_phi.is_finite()) {
            return Err(Error::Domain(format!(
                "sigma_phi must be positive, got {}",
                self.sigma_phi
            )));
        }
        if !(self.fading_std >= 0.0) {
            return Err(Error::Domain("fading_std must be non-negative".into()));
        }
        if self.antennas == 0 {
            return Err(Error::Domain("antenna count must be positive".into()));
        }
        Ok(())
    }

    /// Draws the per-antenna gain variations `f_m ~ N(0, fading_std²)` in dB.
    pub fn draw_fading<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        if self.fading_std == 0.0 {
            return vec![0.0; self.antennas];
        }
        let normal = Normal::new(0.0, self.fading_std).expect("validated std");
        (0..self.antennas).map(|_| normal.sample(rng)).collect()
    }
}

/// Quadrature settings for the angular expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringQuadrature {
    pub nodes: usize,
    /// Half-width of the integration window in units of `σ_φ`.
    pub span_sigmas: f64,
}

impl Default for ScatteringQuadrature {
    fn default() -> Self {
        ScatteringQuadrature {
            nodes: 200,
            span_sigmas: 6.0,
        }
    }
}

impl ScatteringQuadrature {
    /// The default rule, raised to `⌈π(M−1)·span·σ_φ⌉ + 64` nodes for large arrays.
    pub fn for_array(antennas: usize, sigma_phi: f64) -> Self {
        let base = Self::default();
        let excursion = PI * antennas.saturating_sub(1) as f64 * 2.0 * base.span_sigmas * sigma_phi;
        let needed = (0.5 * excursion).ceil() as usize + 64;
        ScatteringQuadrature {
            nodes: base.nodes.max(needed),
            ..base
        }
    }

    /// Normalized angular kernel `k(d) = E_δ{exp(jπ d sin(θ+δ))}` for
    /// `d = 0..antennas`. The truncated Gaussian weights are renormalized so
    /// that `k(0) = 1` exactly.
    pub fn kernel(&self, theta: f64, sigma_phi: f64, antennas: usize) -> Vec<Complex64> {
        let gl = GaussLegendre::new(self.nodes);
        let half = self.span_sigmas * sigma_phi;
        let mut total = 0.0;
        let mut acc = vec![Complex64::new(0.0, 0.0); antennas];
        for (&x, &w) in gl.nodes.iter().zip(&gl.weights) {
            let delta = half * x;
            let weight = w * (-delta * delta / (2.0 * sigma_phi * sigma_phi)).exp();
            total += weight;
            let s = (theta + delta).sin();
            for (d, slot) in acc.iter_mut().enumerate() {
                *slot += Complex64::from_polar(weight, PI * d as f64 * s);
            }
        }
        acc.into_iter().map(|z| z / total).collect()
    }
}

/// Builds the local-scattering covariance with the default quadrature.
/// `fading` holds the per-antenna variations `f_m` in dB; `None` means
/// `f_m = 0`.
pub fn build_local_scattering_covariance(
    params: &ScatteringParams,
    fading: Option<&[f64]>,
) -> Result<CovarianceMatrix> {
    let quad = ScatteringQuadrature::for_array(params.antennas, params.sigma_phi);
    build_local_scattering_with(params, fading, &quad, CovRole::Generic)
}

pub fn build_local_scattering_with(
    params: &ScatteringParams,
    fading: Option<&[f64]>,
    quad: &ScatteringQuadrature,
    role: CovRole,
) -> Result<CovarianceMatrix> {
    params.validate()?;
    let m = params.antennas;
    let gains: Vec<f64> = match fading {
        Some(f) if f.len() != m => {
            return Err(Error::Dimension {
                expected: m,
                got: f.len(),
            })
        }
        Some(f) => f.iter().map(|&fm| 10f64.powf(fm / 20.0)).collect(),
        None => vec![1.0; m],
    };
    let kernel = quad.kernel(params.theta, params.sigma_phi, m);
    let r = CMat::from_fn(m, m, |row, col| {
        let k = if col >= row {
            kernel[col - row]
        } else {
            kernel[row - col].conj()
        };
        k * (params.beta * gains[row] * gains[col])
    });
    CovarianceMatrix::new(r, role)
}

/// Log-distance path loss, noise-normalized: `β(d) = β₀ (d/d₀)^(−α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub ref_distance_m: f64,
    /// `β₀` in dB at the reference distance, noise variance included.
    pub ref_gain_db: f64,
    pub exponent: f64,
}

impl Default for PathLoss {
    /// −148.1 dB at 1 km with exponent 3.76, referred to a −124 dBW noise
    /// floor so that transmit powers in dBW read as SNRs.
    fn default() -> Self {
        PathLoss {
            ref_distance_m: 1000.0,
            ref_gain_db: -24.1,
            exponent: 3.76,
        }
    }
}

impl PathLoss {
    pub fn gain(&self, distance_m: f64, min_distance_m: f64) -> Result<f64> {
        pathloss(distance_m, self, min_distance_m)
    }
}

pub fn pathloss(distance_m: f64, model: &PathLoss, min_distance_m: f64) -> Result<f64> {
    if !(distance_m >= min_distance_m) || !distance_m.is_finite() {
        return Err(Error::Domain(format!(
            "distance {distance_m} m is below the minimum {min_distance_m} m"
        )));
    }
    let beta0 = 10f64.powf(model.ref_gain_db / 10.0);
    Ok(beta0 * (distance_m / model.ref_distance_m).powf(-model.exponent))
}

/// A point in the cell plane, in meters, with the BS at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Angle of arrival seen from the BS.
    pub fn aoa(&self) -> f64 {
        self.y.atan2(self.x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryParams {
    pub cell_side_m: f64,
    pub min_bs_distance_m: f64,
    pub users: Vec<Position>,
    pub jammer: Position,
    pub pathloss: PathLoss,
}

impl GeometryParams {
    pub fn validate(&self) -> Result<()> {
        let half = 0.5 * self.cell_side_m;
        for (i, p) in self.users.iter().chain(std::iter::once(&self.jammer)).enumerate() {
            if p.distance() < self.min_bs_distance_m {
                return Err(Error::Config(format!(
                    "position #{i} ({}, {}) is closer than {} m to the BS",
                    p.x, p.y, self.min_bs_distance_m
                )));
            }
            if p.x.abs() > half || p.y.abs() > half {
                return Err(Error::Config(format!(
                    "position #{i} ({}, {}) lies outside the cell",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    }

    /// Uniform draw over the square cell excluding the minimum-distance disc
    /// (rejection sampling).
    pub fn sample_position<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        let half = 0.5 * self.cell_side_m;
        loop {
            let p = Position::new(rng.random_range(-half..half), rng.random_range(-half..half));
            if p.distance() >= self.min_bs_distance_m {
                return p;
            }
        }
    }

    /// Scattering parameters for a transmitter at `pos`.
    pub fn scattering_at(
        &self,
        pos: Position,
        antennas: usize,
        sigma_phi: f64,
        fading_std: f64,
    ) -> Result<ScatteringParams> {
        Ok(ScatteringParams {
            beta: self.pathloss.gain(pos.distance(), self.min_bs_distance_m)?,
            theta: pos.aoa(),
            sigma_phi,
            fading_std,
            antennas,
        })
    }
}

/// Pre-factored sampler for `CN(0, R)`.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    factor: CMat,
}

impl ChannelSampler {
    pub fn new(r: &CovarianceMatrix) -> Result<Self> {
        Ok(ChannelSampler {
            factor: linalg::psd_factor(r.entries())?,
        })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVec {
        let z = linalg::cn_vector(self.factor.ncols(), rng);
        &self.factor * z
    }
}

/// Draws `h = L z` with `L Lᴴ = R` and `z ~ CN(0, I)`.
pub fn sample_channel<R: Rng + ?Sized>(r: &CovarianceMatrix, rng: &mut R) -> Result<CVec> {
    Ok(ChannelSampler::new(r)?.sample(rng))
}

/// Convenience: a real diagonal covariance.
pub fn diagonal_covariance(diag: &[f64]) -> Result<CovarianceMatrix> {
    let d = CVec::from_iterator(diag.len(), diag.iter().map(|&x| c(x)));
    CovarianceMatrix::new(CMat::from_diagonal(&d), CovRole::Generic)
}
