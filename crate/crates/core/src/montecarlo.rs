//! Monte Carlo evaluation of the use-and-forget SE bound for linear
//! detectors, and sampled versus closed-form detector moments.
//!
//! For a detector `v_k` the effective SINR is
//!
//! ```text
//!                  g |E{v_kᴴ h_k}|²
//! ρ_k = ───────────────────────────────────────────────────────────────────
//!        p_d Σ_i E|v_kᴴ h_i|² + q_d E|v_kᴴ h_w|² + E‖v_k‖² − g |E{v_kᴴ h_k}|²
//! ```
//!
//! with `g = p_d (1−κ_u²)`. Expectations are sample means over independent
//! blocks; standard errors come from a jackknife over fixed batches.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{self, EstimatorMatrix, Scheme};
use crate::impairments::{self, synth_pilot_signal_impaired, ImpairmentConfig};
use crate::linalg::{c, trace_inner, CMat, CVec, HpdFactor};
use crate::sysmodel::{
    pilot_cov_with, project_pilot, synth_pilot_signal, ChannelModel, ChannelRealization, JammerStatistics, NoiseMode,
    PilotBook, SystemConfig,
};

/// Jackknife batches; each batch has its own RNG stream.
pub const BATCHES: usize = 50;

pub const MIN_BLOCKS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    /// `v_k = ĥ_k`
    Bilinear,
    /// `v_k` is column `k` of `Ĥ (ĤᴴĤ)⁻¹`.
    ZeroForcing,
}

/// A detector for every user, built on one estimator per user.
#[derive(Debug, Clone)]
pub struct Detector {
    pub kind: DetectorKind,
    pub estimators: Vec<EstimatorMatrix>,
}

impl Detector {
    pub fn new(kind: DetectorKind, estimators: Vec<EstimatorMatrix>) -> Self {
        Detector { kind, estimators }
    }

    /// Estimators of `scheme` built from the given jammer statistics.
    pub fn with_stats(
        cfg: &SystemConfig,
        imp: Option<&ImpairmentConfig>,
        kind: DetectorKind,
        scheme: Scheme,
        stats: &JammerStatistics,
    ) -> Result<Self> {
        let estimators = (0..cfg.users())
            .map(|k| match (scheme, imp) {
                (Scheme::Ms, None) => estimators::ms_estimator_with(cfg, stats, k),
                (Scheme::Ms, Some(i)) => impairments::ms_estimator_impaired_with(cfg, i, stats, k),
                (Scheme::Mmse, None) => estimators::mmse_estimator_with(cfg, stats, k),
                (Scheme::Mmse, Some(i)) => impairments::mmse_estimator_impaired(cfg, i, k),
                (Scheme::MmseOblivious, _) => estimators::mmse_estimator_oblivious(cfg, k),
                (Scheme::Custom, _) => Err(Error::Domain("custom estimators have no constructor".into())),
            })
            .collect::<Result<_>>()?;
        Ok(Detector { kind, estimators })
    }

    /// Estimators of `scheme` built from the true statistics.
    pub fn for_scheme(
        cfg: &SystemConfig,
        imp: Option<&ImpairmentConfig>,
        kind: DetectorKind,
        scheme: Scheme,
    ) -> Result<Self> {
        let stats = match imp {
            None => JammerStatistics::genie(cfg),
            Some(i) => impairments::impaired_statistics(cfg, i),
        };
        Detector::with_stats(cfg, imp, kind, scheme, &stats)
    }

    /// All-zero detectors.
    pub fn null(cfg: &SystemConfig) -> Self {
        let m = cfg.antennas;
        Detector {
            kind: DetectorKind::Bilinear,
            estimators: (0..cfg.users())
                .map(|k| EstimatorMatrix::custom(CMat::zeros(m, m), k))
                .collect(),
        }
    }
}

/// `Ĥ (ĤᴴĤ)⁻¹`; column `k` is the zero-forcing detector of user `k`.
pub fn zf_matrix(h_hat: &CMat) -> Result<CMat> {
    if h_hat.ncols() > h_hat.nrows() {
        return Err(Error::RankDeficient);
    }
    let gram = h_hat.adjoint() * h_hat;
    let f = HpdFactor::new(&gram, "Gram matrix").map_err(|_| Error::RankDeficient)?;
    let v = f.solve_right(h_hat);
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::RankDeficient);
    }
    Ok(v)
}

/// Zero-forcing detector of user `k`.
pub fn zf_detector(h_hat: &CMat, k: usize) -> Result<CVec> {
    if k >= h_hat.ncols() {
        return Err(Error::Domain(format!("user index {k} out of range")));
    }
    Ok(zf_matrix(h_hat)?.column(k).into_owned())
}

/// Per-user running sums of the detector moments and their squares.
#[derive(Debug, Clone)]
struct Sums {
    blocks: usize,
    skipped: usize,
    /// `v_kᴴ h_k`
    gain: Vec<Complex64>,
    gain_sq: Vec<(f64, f64)>,
    /// `|v_kᴴ h_i|²`, row `k`, column `i`.
    cross: Vec<Vec<f64>>,
    cross_sq: Vec<Vec<f64>>,
    jam: Vec<f64>,
    jam_sq: Vec<f64>,
    norm: Vec<f64>,
    norm_sq: Vec<f64>,
}

impl Sums {
    fn new(users: usize) -> Self {
        Sums {
            blocks: 0,
            skipped: 0,
            gain: vec![c(0.0); users],
            gain_sq: vec![(0.0, 0.0); users],
            cross: vec![vec![0.0; users]; users],
            cross_sq: vec![vec![0.0; users]; users],
            jam: vec![0.0; users],
            jam_sq: vec![0.0; users],
            norm: vec![0.0; users],
            norm_sq: vec![0.0; users],
        }
    }

    fn record(&mut self, v: &CMat, ch: &ChannelRealization) {
        self.blocks += 1;
        let users = self.gain.len();
        let proj = v.adjoint() * &ch.h;
        let jam = v.adjoint() * &ch.h_w;
        for k in 0..users {
            let g = proj[(k, k)];
            self.gain[k] += g;
            self.gain_sq[k].0 += g.re * g.re;
            self.gain_sq[k].1 += g.im * g.im;
            for i in 0..users {
                let x = proj[(k, i)].norm_sqr();
                self.cross[k][i] += x;
                self.cross_sq[k][i] += x * x;
            }
            let j = jam[k].norm_sqr();
            self.jam[k] += j;
            self.jam_sq[k] += j * j;
            let n = v.column(k).norm_squared();
            self.norm[k] += n;
            self.norm_sq[k] += n * n;
        }
    }

    fn add(&mut self, o: &Sums, sign: f64) {
        let users = self.gain.len();
        self.blocks = if sign > 0.0 {
            self.blocks + o.blocks
        } else {
            self.blocks - o.blocks
        };
        self.skipped = if sign > 0.0 {
            self.skipped + o.skipped
        } else {
            self.skipped - o.skipped
        };
        for k in 0..users {
            self.gain[k] += o.gain[k] * sign;
            self.gain_sq[k].0 += o.gain_sq[k].0 * sign;
            self.gain_sq[k].1 += o.gain_sq[k].1 * sign;
            for i in 0..users {
                self.cross[k][i] += o.cross[k][i] * sign;
                self.cross_sq[k][i] += o.cross_sq[k][i] * sign;
            }
            self.jam[k] += o.jam[k] * sign;
            self.jam_sq[k] += o.jam_sq[k] * sign;
            self.norm[k] += o.norm[k] * sign;
            self.norm_sq[k] += o.norm_sq[k] * sign;
        }
    }

    /// Use-and-forget SINR of user `k` from the sample means.
    fn sinr(&self, cfg: &SystemConfig, gain_coef: f64, k: usize) -> f64 {
        if self.blocks == 0 {
            return 0.0;
        }
        let n = self.blocks as f64;
        let g = (self.gain[k] / n).norm_sqr() * gain_coef;
        let p = cfg.powers;
        let inter: f64 = self.cross[k].iter().sum::<f64>() / n;
        let den = p.p_d * inter + p.q_d * self.jam[k] / n + self.norm[k] / n - g;
        if den <= 0.0 || g == 0.0 {
            0.0
        } else {
            g / den
        }
    }
}

struct Simulator<'a> {
    cfg: &'a SystemConfig,
    imp: Option<&'a ImpairmentConfig>,
    model: ChannelModel,
    pilots: PilotBook,
}

impl<'a> Simulator<'a> {
    fn new(cfg: &'a SystemConfig, imp: Option<&'a ImpairmentConfig>) -> Result<Self> {
        cfg.validate()?;
        if let Some(i) = imp {
            i.validate()?;
        }
        Ok(Simulator {
            cfg,
            imp,
            model: ChannelModel::new(cfg)?,
            pilots: PilotBook::dft(cfg.tau),
        })
    }

    fn batch(&self, det: &Detector, seed: u64, batch: usize, blocks: usize) -> Sums {
        let cfg = self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(batch as u64);
        let users = cfg.users();
        let mut sums = Sums::new(users);
        let mut h_hat = CMat::zeros(cfg.antennas, users);
        for _ in 0..blocks {
            let ch = self.model.draw(&mut rng);
            let y_t = match self.imp {
                None => synth_pilot_signal(cfg, &self.pilots, &ch, NoiseMode::Draw, &mut rng),
                Some(i) => synth_pilot_signal_impaired(cfg, i, &self.pilots, &ch, NoiseMode::Draw, &mut rng),
            };
            for (k, est) in det.estimators.iter().enumerate() {
                let y_k = project_pilot(&y_t, &self.pilots, k);
                h_hat.set_column(k, &est.estimate(&y_k));
            }
            match det.kind {
                DetectorKind::Bilinear => sums.record(&h_hat, &ch),
                DetectorKind::ZeroForcing => match zf_matrix(&h_hat) {
                    Ok(v) => sums.record(&v, &ch),
                    Err(_) => sums.skipped += 1,
                },
            }
        }
        sums
    }

    /// Per-batch sums in batch order.
    fn run(&self, det: &Detector, blocks: usize, seed: u64) -> Vec<Sums> {
        let batches = BATCHES.min(blocks);
        (0..batches)
            .into_par_iter()
            .map(|b| {
                let len = blocks / batches + usize::from(b < blocks % batches);
                self.batch(det, seed, b, len)
            })
            .collect()
    }
}

fn total(parts: &[Sums], users: usize) -> Sums {
    let mut t = Sums::new(users);
    for p in parts {
        t.add(p, 1.0);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub per_user_se: Vec<f64>,
    pub per_user_sinr: Vec<f64>,
    /// Jackknife standard errors of the SE.
    pub std_err: Vec<f64>,
    pub blocks: usize,
    pub seed: u64,
    /// Blocks skipped because the zero-forcing Gram matrix was singular.
    pub skipped: usize,
}

/// Monte Carlo SE of every user with the given detector over `blocks`
/// independent blocks.
pub fn evaluate_se(
    cfg: &SystemConfig,
    imp: Option<&ImpairmentConfig>,
    det: &Detector,
    blocks: usize,
    seed: u64,
) -> Result<MonteCarloResult> {
    if blocks < MIN_BLOCKS {
        return Err(Error::Config(format!("at least {MIN_BLOCKS} blocks are required")));
    }
    let users = cfg.users();
    if det.estimators.len() != users {
        return Err(Error::Dimension {
            expected: users,
            got: det.estimators.len(),
        });
    }
    if det.kind == DetectorKind::ZeroForcing && users > cfg.antennas {
        return Err(Error::Config("zero forcing needs K <= M".into()));
    }
    let sim = Simulator::new(cfg, imp)?;
    let parts = sim.run(det, blocks, seed);
    let all = total(&parts, users);
    let ku = imp.map_or(0.0, |i| i.kappa_u);
    let gain_coef = cfg.powers.p_d * (1.0 - ku * ku);
    let prelog = cfg.prelog();
    let se = |s: &Sums, k: usize| prelog * (1.0 + s.sinr(cfg, gain_coef, k)).log2();

    let per_user_sinr: Vec<f64> = (0..users).map(|k| all.sinr(cfg, gain_coef, k)).collect();
    let per_user_se: Vec<f64> = (0..users).map(|k| se(&all, k)).collect();
    let b = parts.len() as f64;
    let mut leave_out = Vec::with_capacity(parts.len());
    for p in &parts {
        let mut s = all.clone();
        s.add(p, -1.0);
        leave_out.push(s);
    }
    let std_err = (0..users)
        .map(|k| {
            let thetas: Vec<f64> = leave_out.iter().map(|s| se(s, k)).collect();
            let mean = thetas.iter().sum::<f64>() / b;
            ((b - 1.0) / b * thetas.iter().map(|t| (t - mean).powi(2)).sum::<f64>()).sqrt()
        })
        .collect();
    Ok(MonteCarloResult {
        per_user_se,
        per_user_sinr,
        std_err,
        blocks: all.blocks,
        seed,
        skipped: all.skipped,
    })
}

/// A moment with its closed form and its sample estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment<T> {
    pub closed_form: T,
    pub sampled: T,
    pub std_err: T,
}

impl Moment<f64> {
    pub fn z_score(&self) -> f64 {
        z(self.sampled - self.closed_form, self.std_err)
    }
}

impl Moment<Complex64> {
    /// Larger of the real and imaginary z-scores.
    pub fn z_score(&self) -> f64 {
        let d = self.sampled - self.closed_form;
        z(d.re, self.std_err.re).max(z(d.im, self.std_err.im))
    }
}

fn z(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff.abs() / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Detector moments of user `k` for the bilinear detector built on `a`.
#[derive(Debug, Clone)]
pub struct MomentReport {
    /// `E{ĥ_kᴴ h_k}`
    pub gain: Moment<Complex64>,
    /// `E|ĥ_kᴴ h_i|²` for every user `i`.
    pub cross: Vec<Moment<f64>>,
    /// `E|ĥ_kᴴ h_w|²`
    pub jam: Moment<f64>,
    /// `E‖ĥ_k‖²`
    pub norm: Moment<f64>,
    pub blocks: usize,
}

impl MomentReport {
    pub fn max_z_score(&self) -> f64 {
        self.cross
            .iter()
            .map(|m| m.z_score())
            .chain([self.gain.z_score(), self.jam.z_score(), self.norm.z_score()])
            .fold(0.0, f64::max)
    }
}

/// Closed-form moments of `ĥ_k = A y_k` under ideal hardware.
pub fn closed_form_moments(cfg: &SystemConfig, a: &CMat, k: usize) -> Result<(Complex64, Vec<f64>, f64, f64)> {
    cfg.check_user(k)?;
    let p = cfg.powers;
    let tau = cfg.tau_f();
    let b = pilot_cov_with(cfg, &JammerStatistics::genie(cfg), k);
    let ab = a * &b;
    let quad = |r: &CMat| trace_inner(a, &(r * &ab)).re;
    let t_k = trace_inner(a, cfg.r(k));
    let gain = t_k * (tau * p.p_t).sqrt();
    let cross = (0..cfg.users())
        .map(|i| {
            let base = quad(cfg.r(i));
            if i == k {
                base + tau * p.p_t * t_k.norm_sqr()
            } else {
                base
            }
        })
        .collect();
    let mut jam = quad(cfg.r_w());
    if k == cfg.target {
        jam += tau * p.q_t * trace_inner(a, cfg.r_w()).norm_sqr();
    }
    let norm = trace_inner(a, &ab).re;
    Ok((gain, cross, jam, norm))
}

/// Sampled and closed-form moments of the bilinear detector of user `k`.
pub fn moment_oracles(cfg: &SystemConfig, a: &CMat, k: usize, blocks: usize, seed: u64) -> Result<MomentReport> {
    if blocks < 1000 {
        return Err(Error::Config("moment oracles need at least 1000 blocks".into()));
    }
    let (gain_cf, cross_cf, jam_cf, norm_cf) = closed_form_moments(cfg, a, k)?;
    let users = cfg.users();
    // Only user k's moments are reported; the other estimators are zero.
    let mut ests: Vec<EstimatorMatrix> = (0..users)
        .map(|i| EstimatorMatrix::custom(CMat::zeros(cfg.antennas, cfg.antennas), i))
        .collect();
    ests[k] = EstimatorMatrix::custom(a.clone(), k);
    let det = Detector::new(DetectorKind::Bilinear, ests);
    let sim = Simulator::new(cfg, None)?;
    let all = total(&sim.run(&det, blocks, seed), users);
    let n = all.blocks as f64;
    let se = |sum: f64, sq: f64| ((sq / n - (sum / n).powi(2)).max(0.0) / n).sqrt();
    let real = |cf: f64, sum: f64, sq: f64| Moment {
        closed_form: cf,
        sampled: sum / n,
        std_err: se(sum, sq),
    };
    Ok(MomentReport {
        gain: Moment {
            closed_form: gain_cf,
            sampled: all.gain[k] / n,
            std_err: Complex64::new(
                se(all.gain[k].re, all.gain_sq[k].0),
                se(all.gain[k].im, all.gain_sq[k].1),
            ),
        },
        cross: (0..users)
            .map(|i| real(cross_cf[i], all.cross[k][i], all.cross_sq[k][i]))
            .collect(),
        jam: real(jam_cf, all.jam[k], all.jam_sq[k]),
        norm: real(norm_cf, all.norm[k], all.norm_sq[k]),
        blocks: all.blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodel::CovarianceMatrix;
    use crate::estimators::{mmse_estimator, sinr_closed_form, sinr_optimal};
    use crate::linalg::{self, rel_diff};
    use crate::synthetic::{random_config, ConfigRanges};
    use crate::sysmodel::Powers;

    fn cfg(seed: u64, m: usize, k: usize) -> SystemConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_config(&mut rng, m, k, &ConfigRanges::default())
    }

    #[test]
    fn zf_with_orthonormal_columns() {
        let mut h = CMat::zeros(4, 2);
        h[(0, 0)] = c(1.0);
        h[(2, 1)] = Complex64::new(0.0, 1.0);
        assert!(rel_diff(&zf_matrix(&h).unwrap(), &h) < 1e-15);
    }

    #[test]
    fn zf_nulls_other_users() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = linalg::cn_matrix(6, 4, &mut rng);
        let v = zf_matrix(&h).unwrap();
        let g = v.adjoint() * &h;
        assert!(rel_diff(&g, &linalg::identity(4)) < 1e-10);
    }

    #[test]
    fn zf_single_user() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = linalg::cn_matrix(5, 1, &mut rng);
        let v = zf_detector(&h, 0).unwrap();
        let expect = h.column(0) / c(h.norm_squared());
        assert!((v - expect).norm() < 1e-12);
    }

    #[test]
    fn zf_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let col = linalg::cn_vector(3, &mut rng);
        let h = CMat::from_columns(&[col.clone(), col]);
        assert!(matches!(zf_matrix(&h), Err(Error::RankDeficient)));
        assert!(matches!(zf_matrix(&CMat::zeros(2, 3)), Err(Error::RankDeficient)));
    }

    #[test]
    fn null_detector_gives_zero_se() {
        let c = cfg(4, 4, 2);
        let r = evaluate_se(&c, None, &Detector::null(&c), 200, 1).unwrap();
        assert!(r.per_user_se.iter().all(|&s| s == 0.0));
        assert!(r.std_err.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn requires_enough_blocks() {
        let c = cfg(5, 2, 1);
        assert!(evaluate_se(&c, None, &Detector::null(&c), 99, 1)
            .unwrap_err()
            .is_config());
    }

    #[test]
    fn deterministic() {
        let c = cfg(6, 4, 2);
        let det = Detector::for_scheme(&c, None, DetectorKind::Bilinear, Scheme::Ms).unwrap();
        let a = evaluate_se(&c, None, &det, 500, 42).unwrap();
        let b = evaluate_se(&c, None, &det, 500, 42).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| evaluate_se(&c, None, &det, 500, 42).unwrap());
        assert_eq!(a, single);
    }

    #[test]
    fn zero_estimator_moments_vanish() {
        let c = cfg(7, 3, 2);
        let rep = moment_oracles(&c, &CMat::zeros(3, 3), 0, 1000, 3).unwrap();
        assert_eq!(rep.gain.closed_form, c0());
        assert_eq!(rep.gain.sampled, c0());
        assert_eq!(rep.norm.sampled, 0.0);
        assert_eq!(rep.jam.closed_form, 0.0);
        assert_eq!(rep.max_z_score(), 0.0);
    }

    fn c0() -> Complex64 {
        c(0.0)
    }

    #[test]
    fn jam_moment_branch_difference() {
        let c = cfg(8, 4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = linalg::cn_matrix(4, 4, &mut rng);
        let m = c.target;
        let other = (m + 1) % 3;
        let (_, _, jam_m, _) = closed_form_moments(&c, &a, m).unwrap();
        // same A evaluated as a non-target user with identical statistics
        let mut twin = c.clone();
        twin.r_users[other] = c.r_users[m].clone();
        let (_, _, jam_o, _) = closed_form_moments(&twin, &a, other).unwrap();
        let (_, _, jam_m2, _) = closed_form_moments(&twin, &a, m).unwrap();
        let extra = c.tau_f() * c.powers.q_t * trace_inner(&a, c.r_w()).norm_sqr();
        let bm = pilot_cov_with(&twin, &JammerStatistics::genie(&twin), m);
        let bo = pilot_cov_with(&twin, &JammerStatistics::genie(&twin), other);
        // B_m − B_o = τ q_t R_w, so the jam moments differ by the trace term
        // plus tr(Aᴴ R_w A τ q_t R_w).
        let via_b = trace_inner(&a, &(twin.r_w() * &a * (&bm - &bo))).re;
        assert!(linalg::rel_err(jam_m2 - jam_o, extra + via_b) < 1e-10);
        assert_eq!(jam_m, jam_m2);
    }

    #[test]
    fn moments_match_closed_forms() {
        let c = cfg(9, 3, 2);
        for k in 0..2 {
            let a = estimators::ms_estimator(&c, k).unwrap().a;
            let rep = moment_oracles(&c, &a, k, 20_000, 10 + k as u64).unwrap();
            assert!(rep.max_z_score() <= 3.0, "user {k}: {rep:?}");
        }
    }

    #[test]
    fn ms_closed_form_matches_simulation() {
        let c = cfg(10, 4, 2);
        let det = Detector::for_scheme(&c, None, DetectorKind::Bilinear, Scheme::Ms).unwrap();
        let r = evaluate_se(&c, None, &det, 20_000, 5).unwrap();
        for k in 0..2 {
            let cf = sinr_optimal(&c, k).unwrap().se;
            assert!((r.per_user_se[k] - cf).abs() <= 3.0 * r.std_err[k], "user {k}");
        }
    }

    #[test]
    fn white_rayleigh_mmse() {
        let (m, users, tau) = (4, 2, 2);
        let powers = Powers {
            p_t: 1.5,
            p_d: 0.8,
            q_t: 0.0,
            q_d: 0.0,
        };
        let c = SystemConfig {
            antennas: m,
            block_len: 50,
            tau,
            target: 0,
            powers,
            budgets: None,
            r_users: vec![CovarianceMatrix::identity(m); users],
            r_jammer: CovarianceMatrix::identity(m),
        };
        let t = tau as f64;
        let rho = t * powers.p_t * powers.p_d * m as f64 / ((powers.p_d * users as f64 + 1.0) * (t * powers.p_t + 1.0));
        let cf = sinr_closed_form(&c, &mmse_estimator(&c, 0).unwrap(), 0).unwrap().sinr;
        assert!(linalg::rel_err(rho, cf) < 1e-12);
        let det = Detector::for_scheme(&c, None, DetectorKind::Bilinear, Scheme::Mmse).unwrap();
        let r = evaluate_se(&c, None, &det, 20_000, 6).unwrap();
        let se = c.prelog() * (1.0 + rho).log2();
        assert!((r.per_user_se[0] - se).abs() <= 3.0 * r.std_err[0]);
    }

    #[test]
    fn zf_beats_nothing_without_jamming() {
        let mut c = cfg(11, 6, 3);
        c.powers.q_t = 0.0;
        c.powers.q_d = 0.0;
        let det = Detector::for_scheme(&c, None, DetectorKind::ZeroForcing, Scheme::Mmse).unwrap();
        let r = evaluate_se(&c, None, &det, 1000, 7).unwrap();
        assert_eq!(r.skipped, 0);
        assert!(r.per_user_se.iter().all(|&s| s > 0.0));
    }

    #[test]
    fn zf_needs_enough_antennas() {
        let c = cfg(12, 2, 3);
        let det = Detector::null(&c);
        let det = Detector::new(DetectorKind::ZeroForcing, det.estimators);
        assert!(evaluate_se(&c, None, &det, 100, 1).unwrap_err().is_config());
    }
}
