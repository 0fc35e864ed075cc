//! Transmitter hardware impairments at the users and the jammer.
//!
//! A fraction `κ²` of each transmitter's power becomes independent Gaussian
//! distortion. The pilot projection covariance becomes
//!
//! ```text
//! B̃_k = τ p_t (1−κ_u²) R_k + p_t κ_u² Σ_i R_i + S_k + I
//! ```
//!
//! with `S_m = q_t (τ − (τ−1) κ_w²) R_w` for the target and
//! `S_k = q_t κ_w² R_w` for everyone else. The data covariance `Q` does not
//! change.

use nalgebra::LU;
use rand::Rng;

use crate::covmodel::{CovRole, CovarianceMatrix};
use crate::error::{Error, Result};
use crate::estimators::{ratio_report, EstimatorMatrix, Scheme, SinrReport, DENSE_MAX_ANTENNAS};
use crate::linalg::{self, c, trace_inner, CMat, CVec, HpdFactor};
use crate::sysmodel::{
    data_cov_with, noise_matrix, ChannelRealization, JammerStatistics, NoiseMode, PilotBook, SystemConfig,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpairmentConfig {
    pub kappa_u: f64,
    pub kappa_w: f64,
}

impl ImpairmentConfig {
    pub fn new(kappa_u: f64, kappa_w: f64) -> Result<Self> {
        let imp = ImpairmentConfig { kappa_u, kappa_w };
        imp.validate()?;
        Ok(imp)
    }

    pub fn ideal() -> Self {
        ImpairmentConfig {
            kappa_u: 0.0,
            kappa_w: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("kappa_u", self.kappa_u), ("kappa_w", self.kappa_w)] {
            if !(0.0..=1.0).contains(&k) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {k}")));
            }
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.kappa_u == 0.0 && self.kappa_w == 0.0
    }

    /// `τ − (τ−1) κ_w²`, the target's jamming coefficient.
    pub fn target_jam_coef(&self, tau: usize) -> f64 {
        let tau = tau as f64;
        tau - (tau - 1.0) * self.kappa_w * self.kappa_w
    }

    /// `κ_w²`, the jamming coefficient of non-target users.
    pub fn leak_jam_coef(&self) -> f64 {
        self.kappa_w * self.kappa_w
    }
}

/// True jammer statistics under impairments: `pilot = S̃`, `pilot_leak = S̆`.
pub fn impaired_statistics(cfg: &SystemConfig, imp: &ImpairmentConfig) -> JammerStatistics {
    let p = cfg.powers;
    JammerStatistics {
        pilot: cfg.r_w() * c(p.q_t * imp.target_jam_coef(cfg.tau)),
        data: cfg.r_w() * c(p.q_d),
        pilot_leak: cfg.r_w() * c(p.q_t * imp.leak_jam_coef()),
    }
}

/// Known (non-jamming) part of `B̃_k`: `τ p_t (1−κ_u²) R_k + p_t κ_u² Σ R_i + I`.
pub fn known_pilot_terms(cfg: &SystemConfig, imp: &ImpairmentConfig, k: usize) -> CMat {
    let p_t = cfg.powers.p_t;
    let ku2 = imp.kappa_u * imp.kappa_u;
    let mut b = cfg.r(k) * c(cfg.tau_f() * p_t * (1.0 - ku2));
    if ku2 > 0.0 {
        b += cfg.r_sum() * c(p_t * ku2);
    }
    for i in 0..cfg.antennas {
        b[(i, i)] += 1.0;
    }
    b
}

/// `B̃_k` built from the given jammer statistics.
pub fn pilot_cov_impaired_with(cfg: &SystemConfig, imp: &ImpairmentConfig, stats: &JammerStatistics, k: usize) -> CMat {
    let mut b = known_pilot_terms(cfg, imp, k);
    if k == cfg.target {
        b += &stats.pilot;
    } else {
        b += &stats.pilot_leak;
    }
    b
}

pub fn pilot_covariance_impaired(cfg: &SystemConfig, imp: &ImpairmentConfig, k: usize) -> Result<CovarianceMatrix> {
    cfg.check_user(k)?;
    imp.validate()?;
    let b = pilot_cov_impaired_with(cfg, imp, &impaired_statistics(cfg, imp), k);
    CovarianceMatrix::new(b, CovRole::PilotProjection(k))
}

/// Received pilot matrix with distorted transmitters.
///
/// Draw order: receiver noise, user distortion (`τ×K`, column-major),
/// jammer distortion (`τ`). Distortion is drawn even when `κ = 0`, so that
/// seeds line up across ideal and impaired runs.
pub fn synth_pilot_signal_impaired<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    imp: &ImpairmentConfig,
    pilots: &PilotBook,
    ch: &ChannelRealization,
    noise: NoiseMode,
    rng: &mut R,
) -> CMat {
    let tau = pilots.tau();
    let k = cfg.users();
    let p = cfg.powers;
    let mut y = noise_matrix(cfg.antennas, tau, noise, rng);
    let ku2 = imp.kappa_u * imp.kappa_u;
    let kw2 = imp.kappa_w * imp.kappa_w;

    let user_amp = c((cfg.tau_f() * p.p_t * (1.0 - ku2)).sqrt());
    let phi_t = pilots.matrix().columns(0, k).transpose();
    y += (&ch.h * phi_t) * user_amp;
    let jam_amp = c((cfg.tau_f() * p.q_t * (1.0 - kw2)).sqrt());
    let phi_m = pilots.matrix().column(cfg.target).transpose();
    y += (&ch.h_w * phi_m) * jam_amp;

    let eta_u = linalg::cn_matrix(tau, k, rng) * c((p.p_t * ku2).sqrt());
    let eta_w = linalg::cn_vector(tau, rng) * c((p.q_t * kw2).sqrt());
    y += &ch.h * eta_u.transpose();
    y += &ch.h_w * eta_w.transpose();
    y
}

/// Received data vector for one symbol time with distorted transmitters.
///
/// Draw order: receiver noise, `K` user distortions, jammer distortion.
pub fn synth_data_signal_impaired<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    imp: &ImpairmentConfig,
    ch: &ChannelRealization,
    symbols: &[num_complex::Complex64],
    jam_symbol: num_complex::Complex64,
    noise: NoiseMode,
    rng: &mut R,
) -> CVec {
    assert_eq!(symbols.len(), cfg.users(), "one symbol per user");
    let p = cfg.powers;
    let ku2 = imp.kappa_u * imp.kappa_u;
    let kw2 = imp.kappa_w * imp.kappa_w;
    let mut y = noise_matrix(cfg.antennas, 1, noise, rng).column(0).into_owned();
    let x = CVec::from_column_slice(symbols);
    y += (&ch.h * x) * c((p.p_d * (1.0 - ku2)).sqrt());
    y += &ch.h_w * (jam_symbol * (p.q_d * (1.0 - kw2)).sqrt());

    let eta_u = linalg::cn_vector(cfg.users(), rng) * c((p.p_d * ku2).sqrt());
    let eta_w = linalg::cn01(rng) * (p.q_d * kw2).sqrt();
    y += &ch.h * eta_u;
    y += &ch.h_w * eta_w;
    y
}

/// Effective SINR of the BE detector under impairments for an arbitrary
/// estimator, with the true statistics.
pub fn sinr_impaired(
    cfg: &SystemConfig,
    imp: &ImpairmentConfig,
    est: &EstimatorMatrix,
    k: usize,
) -> Result<SinrReport> {
    cfg.check_user(k)?;
    imp.validate()?;
    let a = &est.a;
    if a.nrows() != cfg.antennas || a.ncols() != cfg.antennas {
        return Err(Error::Dimension {
            expected: cfg.antennas,
            got: a.nrows().max(a.ncols()),
        });
    }
    let stats = impaired_statistics(cfg, imp);
    let b = pilot_cov_impaired_with(cfg, imp, &stats, k);
    let q = data_cov_with(cfg, &stats);
    let p = cfg.powers;
    let tau = cfg.tau_f();
    let ku2 = imp.kappa_u * imp.kappa_u;

    let own = trace_inner(a, cfg.r(k)).norm_sqr();
    let num = tau * p.p_t * p.p_d * (1.0 - ku2).powi(2) * own;

    let jam_coef = if k == cfg.target {
        imp.target_jam_coef(cfg.tau)
    } else {
        imp.leak_jam_coef()
    };
    let mut den = trace_inner(a, &(&q * a * &b)).re;
    den += p.q_t * p.q_d * jam_coef * trace_inner(a, cfg.r_w()).norm_sqr();
    if ku2 > 0.0 {
        let cross: f64 = (0..cfg.users()).map(|i| trace_inner(a, cfg.r(i)).norm_sqr()).sum();
        den += p.p_t * p.p_d * ku2 * cross;
        den += tau * p.p_t * p.p_d * ku2 * (1.0 - ku2) * own;
    }
    Ok(ratio_report(cfg, k, num, den))
}

/// Low-rank factors of `C̃_k − B̃_kᵀ⊗Q = Σ_j vec(U_j) vec(V_j)ᴴ`.
fn low_rank_terms(cfg: &SystemConfig, imp: &ImpairmentConfig, stats: &JammerStatistics, k: usize) -> Vec<(CMat, CMat)> {
    let p = cfg.powers;
    let ku2 = imp.kappa_u * imp.kappa_u;
    let pilot = if k == cfg.target {
        &stats.pilot
    } else {
        &stats.pilot_leak
    };
    let mut terms = vec![(pilot.clone(), stats.data.clone())];
    if ku2 > 0.0 {
        let c1 = c(p.p_t * p.p_d * ku2);
        for i in 0..cfg.users() {
            terms.push((cfg.r(i) * c1, cfg.r(i).clone()));
        }
        let c2 = c(cfg.tau_f() * p.p_t * p.p_d * ku2 * (1.0 - ku2));
        terms.push((cfg.r(k) * c2, cfg.r(k).clone()));
    }
    terms
}

/// `C̃_k⁻¹ r_k` in matrix form, via a capacitance-matrix solve on top of the
/// Kronecker solve `X ↦ Q⁻¹ X B̃⁻¹`.
fn solve_c_tilde(cfg: &SystemConfig, imp: &ImpairmentConfig, stats: &JammerStatistics, k: usize) -> Result<CMat> {
    let b = HpdFactor::new(&pilot_cov_impaired_with(cfg, imp, stats, k), "pilot covariance B̃_k")?;
    let q = HpdFactor::new(&data_cov_with(cfg, stats), "data covariance Q")?;
    let kron_solve = |x: &CMat| b.solve_right(&q.solve_left(x));

    let x0 = kron_solve(cfg.r(k));
    let terms = low_rank_terms(cfg, imp, stats, k);
    let z: Vec<CMat> = terms.iter().map(|(u, _)| kron_solve(u)).collect();
    let n = terms.len();
    let mut cap = CMat::identity(n, n);
    let mut rhs = CVec::zeros(n);
    for (i, (_, v)) in terms.iter().enumerate() {
        rhs[i] = trace_inner(v, &x0);
        for j in 0..n {
            cap[(i, j)] += trace_inner(v, &z[j]);
        }
    }
    let w = LU::new(cap).solve(&rhs).ok_or(Error::Singular("capacitance matrix"))?;
    let mut a = x0;
    for (j, zj) in z.iter().enumerate() {
        a -= zj * w[j];
    }
    Ok(a)
}

/// MS estimator under impairments from the true statistics.
pub fn ms_estimator_impaired(cfg: &SystemConfig, imp: &ImpairmentConfig, k: usize) -> Result<EstimatorMatrix> {
    ms_estimator_impaired_with(cfg, imp, &impaired_statistics(cfg, imp), k)
}

/// MS estimator under impairments from the given jammer statistics.
pub fn ms_estimator_impaired_with(
    cfg: &SystemConfig,
    imp: &ImpairmentConfig,
    stats: &JammerStatistics,
    k: usize,
) -> Result<EstimatorMatrix> {
    cfg.check_user(k)?;
    imp.validate()?;
    Ok(EstimatorMatrix {
        a: solve_c_tilde(cfg, imp, stats, k)?,
        scheme: Scheme::Ms,
        user: k,
    })
}

/// Dense `M²×M²` matrix `C̃_k`. Only for `M ≤ 16`.
pub fn ms_system_impaired_dense(cfg: &SystemConfig, imp: &ImpairmentConfig, k: usize) -> Result<CMat> {
    if cfg.antennas > DENSE_MAX_ANTENNAS {
        return Err(Error::Domain(format!(
            "dense reference path is limited to M <= {DENSE_MAX_ANTENNAS}"
        )));
    }
    cfg.check_user(k)?;
    let stats = impaired_statistics(cfg, imp);
    let b = pilot_cov_impaired_with(cfg, imp, &stats, k);
    let q = data_cov_with(cfg, &stats);
    let mut sys = linalg::kron(&b.transpose(), &q);
    for (u, v) in low_rank_terms(cfg, imp, &stats, k) {
        sys += linalg::vec(&u) * linalg::vec(&v).adjoint();
    }
    Ok(sys)
}

/// MS estimator under impairments by dense inversion. Only for `M ≤ 16`.
pub fn ms_estimator_impaired_dense(cfg: &SystemConfig, imp: &ImpairmentConfig, k: usize) -> Result<EstimatorMatrix> {
    let sys = ms_system_impaired_dense(cfg, imp, k)?;
    let a = LU::new(sys)
        .solve(&linalg::vec(cfg.r(k)))
        .ok_or(Error::Singular("dense impaired MS system"))?;
    Ok(EstimatorMatrix {
        a: linalg::unvec(&a, cfg.antennas),
        scheme: Scheme::Ms,
        user: k,
    })
}

/// `ρ̃_k* = τ p_t p_d (1−κ_u²)² r_kᴴ C̃_k⁻¹ r_k` from the true statistics.
pub fn sinr_optimal_impaired(cfg: &SystemConfig, imp: &ImpairmentConfig, k: usize) -> Result<SinrReport> {
    sinr_optimal_impaired_with(cfg, imp, &impaired_statistics(cfg, imp), k)
}

pub fn sinr_optimal_impaired_with(
    cfg: &SystemConfig,
    imp: &ImpairmentConfig,
    stats: &JammerStatistics,
    k: usize,
) -> Result<SinrReport> {
    cfg.check_user(k)?;
    imp.validate()?;
    let p = cfg.powers;
    let ku2 = imp.kappa_u * imp.kappa_u;
    let gain = cfg.tau_f() * p.p_t * p.p_d * (1.0 - ku2).powi(2);
    if gain == 0.0 {
        return Ok(ratio_report(cfg, k, 0.0, 1.0));
    }
    let a = solve_c_tilde(cfg, imp, stats, k)?;
    let value = gain * trace_inner(cfg.r(k), &a).re;
    Ok(ratio_report(cfg, k, value, 1.0))
}

/// Jamming-aware MMSE estimator under impairments, `√(τ p_t (1−κ_u²)) R_k B̃_k⁻¹`.
pub fn mmse_estimator_impaired(cfg: &SystemConfig, imp: &ImpairmentConfig, k: usize) -> Result<EstimatorMatrix> {
    cfg.check_user(k)?;
    imp.validate()?;
    let stats = impaired_statistics(cfg, imp);
    let b = HpdFactor::new(&pilot_cov_impaired_with(cfg, imp, &stats, k), "pilot covariance B̃_k")?;
    let scale = (cfg.tau_f() * cfg.powers.p_t * (1.0 - imp.kappa_u * imp.kappa_u)).sqrt();
    Ok(EstimatorMatrix {
        a: b.solve_right(cfg.r(k)) * c(scale),
        scheme: Scheme::Mmse,
        user: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{ms_estimator, sinr_closed_form, sinr_optimal};
    use crate::synthetic::{random_config, ConfigRanges};
    use crate::sysmodel::{pilot_projection_covariance, project_pilot, synth_pilot_signal, ChannelModel};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn imp(ku: f64, kw: f64) -> ImpairmentConfig {
        ImpairmentConfig::new(ku, kw).unwrap()
    }

    #[test]
    fn rejects_out_of_range_levels() {
        assert!(ImpairmentConfig::new(1.1, 0.0).is_err());
        assert!(ImpairmentConfig::new(0.0, -0.1).is_err());
        assert!(ImpairmentConfig::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn ideal_levels_reduce_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let zero = ImpairmentConfig::ideal();
        for _ in 0..5 {
            let cfg = random_config(&mut rng, 5, 3, &ConfigRanges::default());
            for k in 0..3 {
                let bt = pilot_covariance_impaired(&cfg, &zero, k).unwrap();
                let b = pilot_projection_covariance(&cfg, k).unwrap();
                assert!(linalg::rel_diff(bt.entries(), b.entries()) < 1e-15);

                let ms = ms_estimator(&cfg, k).unwrap();
                let ms_t = ms_estimator_impaired(&cfg, &zero, k).unwrap();
                assert!(linalg::rel_diff(&ms_t.a, &ms.a) < 1e-10);

                let s = sinr_closed_form(&cfg, &ms, k).unwrap().sinr;
                let s_t = sinr_impaired(&cfg, &zero, &ms, k).unwrap().sinr;
                assert!(linalg::rel_err(s, s_t) < 1e-12);
                let o = sinr_optimal(&cfg, k).unwrap().sinr;
                let o_t = sinr_optimal_impaired(&cfg, &zero, k).unwrap().sinr;
                assert!(linalg::rel_err(o, o_t) < 1e-10);
            }
        }
    }

    #[test]
    fn full_jammer_distortion_endpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let cfg = random_config(&mut rng, 3, 2, &ConfigRanges::default());
        let s = impaired_statistics(&cfg, &imp(0.0, 1.0));
        let expect = cfg.r_w() * c(cfg.powers.q_t);
        assert!(linalg::rel_diff(&s.pilot, &expect) < 1e-15);
        assert!(linalg::rel_diff(&s.pilot_leak, &expect) < 1e-15);
    }

    #[test]
    fn full_user_distortion_kills_sinr() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let cfg = random_config(&mut rng, 4, 2, &ConfigRanges::default());
        let i = imp(1.0, 0.3);
        let a = EstimatorMatrix::custom(linalg::cn_matrix(4, 4, &mut rng), 0);
        assert_eq!(sinr_impaired(&cfg, &i, &a, 0).unwrap().sinr, 0.0);
        assert_eq!(sinr_optimal_impaired(&cfg, &i, 1).unwrap().sinr, 0.0);
    }

    #[test]
    fn target_jam_coefficient_dominates() {
        for tau in 1..10 {
            for j in 0..=20 {
                let i = imp(0.0, j as f64 / 20.0);
                assert!(i.target_jam_coef(tau) >= i.leak_jam_coef());
            }
        }
    }

    #[test]
    fn low_rank_path_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for trial in 0..12 {
            let m = [2, 3, 4][trial % 3];
            let cfg = random_config(&mut rng, m, 1 + trial % 4, &ConfigRanges::default());
            let i = imp(rng.random_range(0.0..0.5), rng.random_range(0.0..1.0));
            for k in 0..cfg.users() {
                let fast = ms_estimator_impaired(&cfg, &i, k).unwrap();
                let dense = ms_estimator_impaired_dense(&cfg, &i, k).unwrap();
                assert!(linalg::rel_diff(&fast.a, &dense.a) < 1e-9, "trial {trial} user {k}");
                let opt = sinr_optimal_impaired(&cfg, &i, k).unwrap().sinr;
                let plug = sinr_impaired(&cfg, &i, &fast, k).unwrap().sinr;
                assert!(linalg::rel_err(opt, plug) < 1e-8);
            }
        }
    }

    #[test]
    fn perturbations_never_beat_ms() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let cfg = random_config(&mut rng, 4, 3, &ConfigRanges::default());
        let i = imp(0.1, 0.1);
        for k in 0..3 {
            let best = ms_estimator_impaired(&cfg, &i, k).unwrap();
            let rho = sinr_impaired(&cfg, &i, &best, k).unwrap().sinr;
            let scale = best.a.norm();
            for t in 0..300i32 {
                let eps = 10f64.powi(-(t % 6)) * scale;
                let d = linalg::cn_matrix(4, 4, &mut rng) * c(eps);
                let pert = EstimatorMatrix::custom(&best.a + d, k);
                let r = sinr_impaired(&cfg, &i, &pert, k).unwrap().sinr;
                assert!(r <= rho * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn optimal_sinr_non_increasing_in_user_distortion() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let cfg = random_config(&mut rng, 6, 3, &ConfigRanges::default());
        for k in 0..3 {
            let mut prev = f64::INFINITY;
            for j in 0..=20 {
                let rho = sinr_optimal_impaired(&cfg, &imp(j as f64 / 20.0, 0.1), k).unwrap().sinr;
                assert!(rho <= prev * (1.0 + 1e-10));
                prev = rho;
            }
        }
    }

    #[test]
    fn ideal_synthesis_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cfg = random_config(&mut rng, 4, 2, &ConfigRanges::default());
        let book = PilotBook::dft(cfg.tau);
        let ch = ChannelModel::new(&cfg).unwrap().draw(&mut rng);
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let a = synth_pilot_signal(&cfg, &book, &ch, NoiseMode::Draw, &mut r1);
        let b = synth_pilot_signal_impaired(&cfg, &ImpairmentConfig::ideal(), &book, &ch, NoiseMode::Draw, &mut r2);
        assert_eq!(a, b);
    }

    fn unit_channel(users: usize) -> ChannelRealization {
        ChannelRealization {
            h: CMat::from_element(1, users, c(1.0)),
            h_w: CVec::zeros(1),
        }
    }

    #[test]
    fn pilot_power_is_conserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let mut cfg = random_config(&mut rng, 1, 1, &ConfigRanges::default());
        cfg.tau = 4;
        cfg.powers.p_t = 2.5;
        let book = PilotBook::dft(4);
        let i = imp(0.6, 0.0);
        let ch = unit_channel(1);
        let n = 40_000;
        let (mut acc, mut eps_acc) = (0.0, 0.0);
        let mean = (4.0 * 2.5 * (1.0 - 0.36f64)).sqrt();
        for _ in 0..n {
            let y = synth_pilot_signal_impaired(&cfg, &i, &book, &ch, NoiseMode::Suppressed, &mut rng);
            acc += y.norm_squared() / 4.0;
            let ym = project_pilot(&y, &book, 0)[0];
            eps_acc += (ym - c(mean)).norm_sqr();
        }
        assert!((acc / n as f64 - 2.5).abs() < 0.05);
        // projected distortion has variance p_t κ_u²
        assert!((eps_acc / n as f64 - 2.5 * 0.36).abs() < 0.03);
    }

    #[test]
    fn data_power_is_conserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut cfg = random_config(&mut rng, 1, 1, &ConfigRanges::default());
        cfg.powers.p_d = 1.7;
        let i = imp(0.5, 0.0);
        let ch = unit_channel(1);
        let n = 40_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let x = crate::sysmodel::draw_qpsk(&mut rng);
            let y = synth_data_signal_impaired(&cfg, &i, &ch, &[x], c(0.0), NoiseMode::Suppressed, &mut rng);
            acc += y[0].norm_sqr();
        }
        assert!((acc / n as f64 - 1.7).abs() < 0.03);
    }

    #[test]
    fn empirical_pilot_covariance_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let cfg = random_config(&mut rng, 2, 2, &ConfigRanges::default());
        let i = imp(0.3, 0.4);
        let book = PilotBook::dft(cfg.tau);
        let model = ChannelModel::new(&cfg).unwrap();
        let n = 100_000;
        for k in 0..2 {
            let b = pilot_covariance_impaired(&cfg, &i, k).unwrap();
            let mut sum = CMat::zeros(2, 2);
            let mut sq = nalgebra::DMatrix::<f64>::zeros(2, 4);
            for _ in 0..n {
                let ch = model.draw(&mut rng);
                let y = synth_pilot_signal_impaired(&cfg, &i, &book, &ch, NoiseMode::Draw, &mut rng);
                let yk = project_pilot(&y, &book, k);
                let o = linalg::outer(&yk);
                for r in 0..2 {
                    for s in 0..2 {
                        sq[(r, 2 * s)] += o[(r, s)].re * o[(r, s)].re;
                        sq[(r, 2 * s + 1)] += o[(r, s)].im * o[(r, s)].im;
                    }
                }
                sum += o;
            }
            let nf = n as f64;
            for r in 0..2 {
                for s in 0..2 {
                    let mean: Complex64 = sum[(r, s)] / nf;
                    let se_re = ((sq[(r, 2 * s)] / nf - mean.re * mean.re) / nf).sqrt();
                    let se_im = ((sq[(r, 2 * s + 1)] / nf - mean.im * mean.im) / nf).sqrt();
                    let t = b.entries()[(r, s)];
                    assert!((mean.re - t.re).abs() <= 3.0 * se_re, "user {k} ({r},{s}) re");
                    assert!(
                        (mean.im - t.im).abs() <= 3.0 * se_im.max(1e-12),
                        "user {k} ({r},{s}) im"
                    );
                }
            }
        }
    }
}
