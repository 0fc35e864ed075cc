//! Scenario description, exact second-order statistics and received-signal
//! synthesis under ideal hardware.
//!
//! User indices are 0-based everywhere in the library; `target` is the index
//! of the user whose pilot the jammer replays.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;

use crate::covmodel::{ChannelSampler, CovRole, CovarianceMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

/// Transmit powers, linear and noise-normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Powers {
    /// User pilot power `p_t`.
    pub p_t: f64,
    /// User data power `p_d`.
    pub p_d: f64,
    /// Jammer pilot-phase power `q_t`.
    pub q_t: f64,
    /// Jammer data-phase power `q_d`.
    pub q_d: f64,
}

/// Per-block average power budgets `𝒫` (users) and `𝒫_w` (jammer).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budgets {
    pub user: f64,
    pub jammer: f64,
}

#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub antennas: usize,
    /// Coherence block length `T` in samples.
    pub block_len: usize,
    /// Pilot length `τ`.
    pub tau: usize,
    /// 0-based index of the attacked user.
    pub target: usize,
    pub powers: Powers,
    /// When set, the powers must exhaust the budgets exactly.
    pub budgets: Option<Budgets>,
    pub r_users: Vec<CovarianceMatrix>,
    pub r_jammer: CovarianceMatrix,
}

impl SystemConfig {
    pub fn users(&self) -> usize {
        self.r_users.len()
    }

    pub fn tau_f(&self) -> f64 {
        self.tau as f64
    }

    pub fn block_len_f(&self) -> f64 {
        self.block_len as f64
    }

    /// Pre-log factor `1 − τ/T`.
    pub fn prelog(&self) -> f64 {
        1.0 - self.tau_f() / self.block_len_f()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.users();
        if k == 0 {
            return Err(Error::Config("at least one user is required".into()));
        }
        if !(k <= self.tau && self.tau <= self.block_len) {
            return Err(Error::Config(format!(
                "pilot length must satisfy K <= tau <= T (K={k}, tau={}, T={})",
                self.tau, self.block_len
            )));
        }
        if self.target >= k {
            return Err(Error::Config(format!(
                "target user {} does not exist (K={k})",
                self.target + 1
            )));
        }
        let p = &self.powers;
        for (name, v) in [("p_t", p.p_t), ("p_d", p.p_d), ("q_t", p.q_t), ("q_d", p.q_d)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite non-negative power")));
            }
        }
        for (i, r) in self.r_users.iter().chain(std::iter::once(&self.r_jammer)).enumerate() {
            if r.dim() != self.antennas {
                return Err(Error::Dimension {
                    expected: self.antennas,
                    got: r.dim(),
                })
                .map_err(|e| Error::Config(format!("covariance #{i}: {e}")));
            }
        }
        if let Some(b) = self.budgets {
            let t = self.block_len_f();
            let tau = self.tau_f();
            let user = tau * p.p_t + (t - tau) * p.p_d;
            let jam = tau * p.q_t + (t - tau) * p.q_d;
            if linalg::rel_err(user, b.user * t) > 1e-9 {
                return Err(Error::Config(format!(
                    "user powers spend {user} per block, budget allows {}",
                    b.user * t
                )));
            }
            if linalg::rel_err(jam, b.jammer * t) > 1e-9 {
                return Err(Error::Config(format!(
                    "jammer powers spend {jam} per block, budget allows {}",
                    b.jammer * t
                )));
            }
        }
        Ok(())
    }

    pub fn with_powers(&self, powers: Powers) -> SystemConfig {
        SystemConfig { powers, ..self.clone() }
    }

    pub fn r(&self, k: usize) -> &CMat {
        self.r_users[k].entries()
    }

    pub fn r_w(&self) -> &CMat {
        self.r_jammer.entries()
    }

    /// `Σ_i R_i`
    pub fn r_sum(&self) -> CMat {
        let mut acc = CMat::zeros(self.antennas, self.antennas);
        for r in &self.r_users {
            acc += r.entries();
        }
        acc
    }

    pub(crate) fn check_user(&self, k: usize) -> Result<()> {
        if k >= self.users() {
            return Err(Error::Domain(format!(
                "user index {k} out of range (K={})",
                self.users()
            )));
        }
        Ok(())
    }
}

/// Jammer statistics as seen by the receiver: either the true values or
/// sample estimates.
#[derive(Debug, Clone)]
pub struct JammerStatistics {
    /// Jamming term in the target's pilot projection (`S_w^(t) = τ q_t R_w`
    /// under ideal hardware).
    pub pilot: CMat,
    /// Jamming term in the data covariance (`S_w^(d) = q_d R_w`).
    pub data: CMat,
    /// Jamming term leaking into non-target pilot projections. Zero under
    /// ideal hardware; `q_t κ_w² R_w` with jammer impairments.
    pub pilot_leak: CMat,
}

impl JammerStatistics {
    /// True statistics under ideal hardware.
    pub fn genie(cfg: &SystemConfig) -> Self {
        let p = cfg.powers;
        JammerStatistics {
            pilot: cfg.r_w() * c(cfg.tau_f() * p.q_t),
            data: cfg.r_w() * c(p.q_d),
            pilot_leak: CMat::zeros(cfg.antennas, cfg.antennas),
        }
    }
}

/// `B_k` built from the given jammer statistics.
pub fn pilot_cov_with(cfg: &SystemConfig, stats: &JammerStatistics, k: usize) -> CMat {
    let mut b = cfg.r(k) * c(cfg.tau_f() * cfg.powers.p_t);
    if k == cfg.target {
        b += &stats.pilot;
    } else {
        b += &stats.pilot_leak;
    }
    for i in 0..cfg.antennas {
        b[(i, i)] += 1.0;
    }
    b
}

/// `Q` built from the given jammer statistics.
pub fn data_cov_with(cfg: &SystemConfig, stats: &JammerStatistics) -> CMat {
    let mut q = cfg.r_sum() * c(cfg.powers.p_d) + &stats.data;
    for i in 0..cfg.antennas {
        q[(i, i)] += 1.0;
    }
    q
}

/// Covariance `B_k` of the pilot projection `y_k`.
pub fn pilot_projection_covariance(cfg: &SystemConfig, k: usize) -> Result<CovarianceMatrix> {
    cfg.check_user(k)?;
    let b = pilot_cov_with(cfg, &JammerStatistics::genie(cfg), k);
    CovarianceMatrix::new(b, CovRole::PilotProjection(k))
}

/// Covariance `Q` of the received data signal.
pub fn data_covariance(cfg: &SystemConfig) -> Result<CovarianceMatrix> {
    CovarianceMatrix::new(data_cov_with(cfg, &JammerStatistics::genie(cfg)), CovRole::Data)
}

/// Orthonormal pilot book: the columns of the unitary τ×τ DFT matrix.
#[derive(Debug, Clone)]
pub struct PilotBook {
    pilots: CMat,
}

impl PilotBook {
    pub fn dft(tau: usize) -> Self {
        let scale = 1.0 / (tau as f64).sqrt();
        let pilots = CMat::from_fn(tau, tau, |n, i| {
            Complex64::from_polar(scale, -2.0 * PI * (i * n) as f64 / tau as f64)
        });
        PilotBook { pilots }
    }

    pub fn tau(&self) -> usize {
        self.pilots.nrows()
    }

    pub fn count(&self) -> usize {
        self.pilots.ncols()
    }

    /// Pilot `φ_i` as a column vector.
    pub fn pilot(&self, i: usize) -> CVec {
        self.pilots.column(i).into_owned()
    }

    pub fn matrix(&self) -> &CMat {
        &self.pilots
    }
}

/// One block's channel draw.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `M×K`, column `k` is `h_k`.
    pub h: CMat,
    pub h_w: CVec,
}

/// Samplers for all users and the jammer of a configuration.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    users: Vec<ChannelSampler>,
    jammer: ChannelSampler,
}

impl ChannelModel {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        Ok(ChannelModel {
            users: cfg.r_users.iter().map(ChannelSampler::new).collect::<Result<_>>()?,
            jammer: ChannelSampler::new(&cfg.r_jammer)?,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        let m = self.jammer.dim();
        let mut h = CMat::zeros(m, self.users.len());
        for (k, s) in self.users.iter().enumerate() {
            h.set_column(k, &s.sample(rng));
        }
        let h_w = self.jammer.sample(rng);
        ChannelRealization { h, h_w }
    }
}

/// Whether receiver noise is drawn. `Suppressed` is a deterministic test
/// hook and consumes no randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Draw,
    Suppressed,
}

pub(crate) fn noise_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, mode: NoiseMode, rng: &mut R) -> CMat {
    match mode {
        NoiseMode::Draw => linalg::cn_matrix(rows, cols, rng),
        NoiseMode::Suppressed => CMat::zeros(rows, cols),
    }
}

/// Received pilot matrix `Y_t` (M×τ); the jammer replays the target's pilot.
pub fn synth_pilot_signal<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    pilots: &PilotBook,
    ch: &ChannelRealization,
    noise: NoiseMode,
    rng: &mut R,
) -> CMat {
    let tau = pilots.tau();
    let k = cfg.users();
    let mut y = noise_matrix(cfg.antennas, tau, noise, rng);
    let user_amp = c((cfg.tau_f() * cfg.powers.p_t).sqrt());
    let phi_t = pilots.matrix().columns(0, k).transpose();
    y += (&ch.h * phi_t) * user_amp;
    let jam_amp = c((cfg.tau_f() * cfg.powers.q_t).sqrt());
    let phi_m = pilots.matrix().column(cfg.target).transpose();
    y += (&ch.h_w * phi_m) * jam_amp;
    y
}

/// `y_k = Y_t φ_k*`
pub fn project_pilot(y_t: &CMat, pilots: &PilotBook, k: usize) -> CVec {
    let phi_conj = pilots.matrix().column(k).map(|z| z.conj());
    y_t * phi_conj
}

/// Received data vector for one symbol time.
pub fn synth_data_signal<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    symbols: &[Complex64],
    jam_symbol: Complex64,
    noise: NoiseMode,
    rng: &mut R,
) -> CVec {
    assert_eq!(symbols.len(), cfg.users(), "one symbol per user");
    let mut y = noise_matrix(cfg.antennas, 1, noise, rng).column(0).into_owned();
    let x = CVec::from_column_slice(symbols);
    y += (&ch.h * x) * c(cfg.powers.p_d.sqrt());
    y += &ch.h_w * (jam_symbol * cfg.powers.q_d.sqrt());
    y
}

/// Unit-modulus QPSK symbol.
pub fn draw_qpsk<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re = if rng.random::<bool>() {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    };
    let im = if rng.random::<bool>() {
        FRAC_1_SQRT_2
    } else {
        -FRAC_1_SQRT_2
    };
    Complex64::new(re, im)
}
