//! Linear channel estimators and the closed-form effective SINR of the
//! bilinear equalizer (BE).
//!
//! A linear estimate is `ĥ_k = A_k y_k`. With the BE detector `v_k = ĥ_k`,
//! the use-and-forget effective SINR is
//!
//! ```text
//!          τ p_t p_d |tr(A_kᴴ R_k)|²
//! ρ_k = ─────────────────────────────────────────────────────────
//!        [k = m] τ q_t q_d |tr(A_mᴴ R_w)|²  +  tr(A_kᴴ Q A_k B_k)
//! ```
//!
//! Writing `a = vec(A)` turns the denominator into `aᴴ C a` with
//! `C = B_kᵀ ⊗ Q (+ s_t s_dᴴ for the target)`, so the SINR-maximizing (MS)
//! estimator is `a* = C⁻¹ r_k`. The fast paths below never form `C`: the
//! Kronecker solve becomes `Q⁻¹ R B⁻¹` and the jamming term is a rank-one
//! Sherman–Morrison update.

use nalgebra::LU;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, trace_inner, CMat, CVec, HpdFactor};
use crate::sysmodel::{data_cov_with, pilot_cov_with, JammerStatistics, SystemConfig};

/// Largest antenna count for which the dense `M²×M²` reference path runs.
pub const DENSE_MAX_ANTENNAS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// SE-maximizing estimator.
    Ms,
    /// MMSE estimator aware of the pilot jamming statistics.
    Mmse,
    /// MMSE estimator that ignores the jammer (`B_k` without `S_w^(t)`).
    MmseOblivious,
    Custom,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Ms => "MS",
            Scheme::Mmse => "MMSE",
            Scheme::MmseOblivious => "MMSE-oblivious",
            Scheme::Custom => "custom",
        }
    }
}

/// The matrix `A_k` of a linear channel estimate `ĥ_k = A_k y_k`.
#[derive(Debug, Clone)]
pub struct EstimatorMatrix {
    pub a: CMat,
    pub scheme: Scheme,
    pub user: usize,
}

impl EstimatorMatrix {
    pub fn custom(a: CMat, user: usize) -> Self {
        EstimatorMatrix {
            a,
            scheme: Scheme::Custom,
            user,
        }
    }

    pub fn estimate(&self, y: &CVec) -> CVec {
        &self.a * y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinrMethod {
    ClosedForm,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrReport {
    pub user: usize,
    pub sinr: f64,
    /// Spectral efficiency in bit/s/Hz.
    pub se: f64,
    pub method: SinrMethod,
    /// Standard error of `se`; 0 for closed forms.
    pub std_err: f64,
    /// Set when the SINR was 0/0 and has been defined as 0.
    pub degenerate: bool,
}

impl SinrReport {
    pub(crate) fn closed_form(cfg: &SystemConfig, user: usize, sinr: f64, degenerate: bool) -> Self {
        let sinr = sinr.max(0.0);
        SinrReport {
            user,
            sinr,
            se: cfg.prelog() * (1.0 + sinr).log2(),
            method: SinrMethod::ClosedForm,
            std_err: 0.0,
            degenerate,
        }
    }
}

/// `(1 − τ/T) log₂(1 + sinr)`
pub fn se_from_sinr(sinr: f64, tau: usize, block_len: usize) -> Result<f64> {
    if tau >= block_len {
        return Err(Error::Domain(format!(
            "pilot length {tau} leaves no data samples in a block of {block_len}"
        )));
    }
    if !(sinr >= 0.0) {
        return Err(Error::Domain(format!("SINR must be non-negative, got {sinr}")));
    }
    Ok((1.0 - tau as f64 / block_len as f64) * (1.0 + sinr).log2())
}

/// Effective SINR of the BE detector for an arbitrary estimator, evaluated
/// with the true statistics of `cfg`.
pub fn sinr_closed_form(cfg: &SystemConfig, est: &EstimatorMatrix, k: usize) -> Result<SinrReport> {
    cfg.check_user(k)?;
    check_dim(cfg, &est.a)?;
    let stats = JammerStatistics::genie(cfg);
    let b = pilot_cov_with(cfg, &stats, k);
    let q = data_cov_with(cfg, &stats);
    let p = cfg.powers;
    let a = &est.a;
    let num = cfg.tau_f() * p.p_t * p.p_d * trace_inner(a, cfg.r(k)).norm_sqr();
    let mut den = trace_inner(a, &(&q * a * &b)).re;
    if k == cfg.target {
        den += cfg.tau_f() * p.q_t * p.q_d * trace_inner(a, cfg.r_w()).norm_sqr();
    }
    Ok(ratio_report(cfg, k, num, den))
}

pub(crate) fn ratio_report(cfg: &SystemConfig, k: usize, num: f64, den: f64) -> SinrReport {
    if den <= 0.0 {
        SinrReport::closed_form(cfg, k, 0.0, true)
    } else {
        SinrReport::closed_form(cfg, k, num / den, false)
    }
}

fn check_dim(cfg: &SystemConfig, a: &CMat) -> Result<()> {
    if a.nrows() != cfg.antennas || a.ncols() != cfg.antennas {
        return Err(Error::Dimension {
            expected: cfg.antennas,
            got: a.nrows().max(a.ncols()),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("estimator matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Intermediate products shared by the MS estimator and its optimal SINR.
struct MsTerms {
    /// `Q⁻¹ R_k B_k⁻¹`
    x0: CMat,
    /// `Q⁻¹ S_t B_m⁻¹` (target only)
    y0: Option<CMat>,
}

fn ms_terms(cfg: &SystemConfig, stats: &JammerStatistics, k: usize) -> Result<MsTerms> {
    let b = HpdFactor::new(&pilot_cov_with(cfg, stats, k), "pilot covariance B_k")?;
    let q = HpdFactor::new(&data_cov_with(cfg, stats), "data covariance Q")?;
    let kron_solve = |x: &CMat| b.solve_right(&q.solve_left(x));
    let x0 = kron_solve(cfg.r(k));
    let y0 = (k == cfg.target).then(|| kron_solve(&stats.pilot));
    Ok(MsTerms { x0, y0 })
}

/// MS estimator computed from the true statistics.
pub fn ms_estimator(cfg: &SystemConfig, k: usize) -> Result<EstimatorMatrix> {
    ms_estimator_with(cfg, &JammerStatistics::genie(cfg), k)
}

/// MS estimator computed from the given (possibly estimated) jammer
/// statistics, in `O(M³)`.
pub fn ms_estimator_with(cfg: &SystemConfig, stats: &JammerStatistics, k: usize) -> Result<EstimatorMatrix> {
    cfg.check_user(k)?;
    let MsTerms { x0, y0 } = ms_terms(cfg, stats, k)?;
    let a = match y0 {
        None => x0,
        Some(y0) => {
            let alpha = trace_inner(&stats.data, &x0) / (c(1.0) + trace_inner(&stats.data, &y0));
            x0 - y0 * alpha
        }
    };
    Ok(EstimatorMatrix {
        a,
        scheme: Scheme::Ms,
        user: k,
    })
}

/// Dense `M²×M²` system `C` of the MS problem (reference path).
pub fn ms_system_dense(cfg: &SystemConfig, stats: &JammerStatistics, k: usize) -> Result<CMat> {
    if cfg.antennas > DENSE_MAX_ANTENNAS {
        return Err(Error::Domain(format!(
            "dense reference path is limited to M <= {DENSE_MAX_ANTENNAS}"
        )));
    }
    let b = pilot_cov_with(cfg, stats, k);
    let q = data_cov_with(cfg, stats);
    let mut sys = linalg::kron(&b.transpose(), &q);
    if k == cfg.target {
        sys += linalg::vec(&stats.pilot) * linalg::vec(&stats.data).adjoint();
    }
    Ok(sys)
}

fn dense_solve(sys: CMat, rhs: &CVec) -> Result<CVec> {
    LU::new(sys).solve(rhs).ok_or(Error::Singular("dense MS system"))
}

/// MS estimator via the dense Kronecker system. Only for `M ≤ 16`.
pub fn ms_estimator_dense(cfg: &SystemConfig, k: usize) -> Result<EstimatorMatrix> {
    cfg.check_user(k)?;
    let sys = ms_system_dense(cfg, &JammerStatistics::genie(cfg), k)?;
    let a = dense_solve(sys, &linalg::vec(cfg.r(k)))?;
    Ok(EstimatorMatrix {
        a: linalg::unvec(&a, cfg.antennas),
        scheme: Scheme::Ms,
        user: k,
    })
}

/// Optimal effective SINR `ρ_k*` from the true statistics.
pub fn sinr_optimal(cfg: &SystemConfig, k: usize) -> Result<SinrReport> {
    sinr_optimal_with(cfg, &JammerStatistics::genie(cfg), k)
}

/// Optimal effective SINR predicted from the given jammer statistics using
/// the `O(M³)` matrix-inversion-lemma form.
pub fn sinr_optimal_with(cfg: &SystemConfig, stats: &JammerStatistics, k: usize) -> Result<SinrReport> {
    cfg.check_user(k)?;
    Ok(SinrReport::closed_form(
        cfg,
        k,
        optimal_sinr_value(cfg, stats, k)?,
        false,
    ))
}

pub(crate) fn optimal_sinr_value(cfg: &SystemConfig, stats: &JammerStatistics, k: usize) -> Result<f64> {
    let p = cfg.powers;
    let gain = cfg.tau_f() * p.p_t * p.p_d;
    if gain == 0.0 {
        return Ok(0.0);
    }
    let MsTerms { x0, y0 } = ms_terms(cfg, stats, k)?;
    let r = cfg.r(k);
    let main = trace_inner(r, &x0);
    let value = match y0 {
        None => main,
        Some(y0) => {
            let cross_t = trace_inner(r, &y0);
            let cross_d = trace_inner(&stats.data, &x0);
            let self_term = trace_inner(&stats.data, &y0);
            main - cross_t * cross_d / (c(1.0) + self_term)
        }
    };
    Ok(gain * value.re)
}

/// `τ p_t p_d r_kᴴ C⁻¹ r_k` by dense inversion. Only for `M ≤ 16`.
pub fn sinr_optimal_dense(cfg: &SystemConfig, k: usize) -> Result<f64> {
    cfg.check_user(k)?;
    let sys = ms_system_dense(cfg, &JammerStatistics::genie(cfg), k)?;
    let r = linalg::vec(cfg.r(k));
    let x = dense_solve(sys, &r)?;
    let p = cfg.powers;
    let v: Complex64 = r.dotc(&x);
    Ok(cfg.tau_f() * p.p_t * p.p_d * v.re)
}

/// Jamming-aware MMSE estimator `√(τ p_t) R_k B_k⁻¹`.
pub fn mmse_estimator(cfg: &SystemConfig, k: usize) -> Result<EstimatorMatrix> {
    mmse_estimator_with(cfg, &JammerStatistics::genie(cfg), k)
}

pub fn mmse_estimator_with(cfg: &SystemConfig, stats: &JammerStatistics, k: usize) -> Result<EstimatorMatrix> {
    cfg.check_user(k)?;
    let b = HpdFactor::new(&pilot_cov_with(cfg, stats, k), "pilot covariance B_k")?;
    let a = b.solve_right(cfg.r(k)) * c((cfg.tau_f() * cfg.powers.p_t).sqrt());
    Ok(EstimatorMatrix {
        a,
        scheme: Scheme::Mmse,
        user: k,
    })
}

/// MMSE estimator that models the pilot projection as jam-free.
pub fn mmse_estimator_oblivious(cfg: &SystemConfig, k: usize) -> Result<EstimatorMatrix> {
    let mut stats = JammerStatistics::genie(cfg);
    stats.pilot.fill(c(0.0));
    let mut est = mmse_estimator_with(cfg, &stats, k)?;
    est.scheme = Scheme::MmseOblivious;
    Ok(est)
}

/// Builds the estimator of the requested scheme from the true statistics.
pub fn estimator(cfg: &SystemConfig, scheme: Scheme, k: usize) -> Result<EstimatorMatrix> {
    match scheme {
        Scheme::Ms => ms_estimator(cfg, k),
        Scheme::Mmse => mmse_estimator(cfg, k),
        Scheme::MmseOblivious => mmse_estimator_oblivious(cfg, k),
        Scheme::Custom => Err(Error::Domain("custom estimators have no constructor".into())),
    }
}
