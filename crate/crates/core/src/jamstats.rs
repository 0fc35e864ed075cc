//! Sample estimates of the jamming statistics from received blocks.
//!
//! The receiver knows `τ`, the user powers and `R_1..R_K`, so subtracting
//! the known part of the sample covariances leaves the jamming terms:
//! `Ŝ_t = B̂_m − τ p_t R_m − I` and `Ŝ_d = Q̂ − p_d Σ R_i − I`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::impairments::{
    known_pilot_terms, synth_data_signal_impaired, synth_pilot_signal_impaired, ImpairmentConfig,
};
use crate::linalg::{self, c, CMat, CVec};
use crate::sysmodel::{
    draw_qpsk, project_pilot, synth_data_signal, synth_pilot_signal, ChannelModel, JammerStatistics, NoiseMode,
    PilotBook, SystemConfig,
};

/// Blocks simulated per RNG stream.
const BATCH: usize = 50;

/// Default number of estimation blocks.
pub const DEFAULT_BLOCKS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Clamp negative eigenvalues of the residuals to zero.
    Psd,
    /// Keep the raw (unbiased, possibly indefinite) residuals.
    Raw,
}

#[derive(Debug, Clone)]
pub struct JammingStats {
    /// Estimate of the target's pilot-phase jamming term.
    pub s_t_hat: CMat,
    /// Estimate of the data-phase jamming term.
    pub s_d_hat: CMat,
    /// Pilot-phase jamming term seen by non-target users.
    pub s_t_leak: CMat,
    pub n: usize,
    /// Set when any residual had a negative eigenvalue clamped.
    pub psd_projected: bool,
}

impl JammingStats {
    pub fn to_statistics(&self) -> JammerStatistics {
        JammerStatistics {
            pilot: self.s_t_hat.clone(),
            data: self.s_d_hat.clone(),
            pilot_leak: self.s_t_leak.clone(),
        }
    }
}

fn sample_covariance(obs: &[CVec], what: &'static str) -> Result<CMat> {
    let first = obs.first().ok_or(Error::Empty(what))?;
    let m = first.len();
    let mut acc = CMat::zeros(m, m);
    for y in obs {
        if y.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: y.len(),
            });
        }
        acc.ger(c(1.0), y, &y.conjugate(), c(1.0));
    }
    Ok(linalg::hermitize(acc / c(obs.len() as f64)))
}

/// `B̂ = (1/N) Σ y yᴴ`
pub fn sample_pilot_covariance(obs: &[CVec]) -> Result<CMat> {
    sample_covariance(obs, "pilot observations")
}

/// `Q̂ = (1/N) Σ y yᴴ`
pub fn sample_data_covariance(obs: &[CVec]) -> Result<CMat> {
    sample_covariance(obs, "data observations")
}

fn finish(residual: CMat, projection: Projection) -> (CMat, bool) {
    let residual = linalg::hermitize(residual);
    match projection {
        Projection::Raw => (residual, false),
        Projection::Psd => linalg::project_psd(&residual),
    }
}

/// Target pilot-phase jamming estimate from `B̂_m`. Under impairments the
/// impaired known terms are subtracted instead.
pub fn estimate_st(b_hat: &CMat, cfg: &SystemConfig, imp: &ImpairmentConfig, projection: Projection) -> (CMat, bool) {
    finish(b_hat - known_pilot_terms(cfg, imp, cfg.target), projection)
}

/// Data-phase jamming estimate from `Q̂`.
pub fn estimate_sd(q_hat: &CMat, cfg: &SystemConfig, projection: Projection) -> (CMat, bool) {
    let mut known = cfg.r_sum() * c(cfg.powers.p_d);
    for i in 0..cfg.antennas {
        known[(i, i)] += 1.0;
    }
    finish(q_hat - known, projection)
}

/// Sums of `y_m y_mᴴ` and `y_d y_dᴴ` over one batch of blocks.
fn batch_sums(
    cfg: &SystemConfig,
    imp: Option<&ImpairmentConfig>,
    model: &ChannelModel,
    pilots: &PilotBook,
    seed: u64,
    batch: usize,
    blocks: usize,
) -> (CMat, CMat) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    let m = cfg.antennas;
    let mut yp = CMat::zeros(m, blocks);
    let mut yd = CMat::zeros(m, blocks);
    let mut symbols = vec![c(0.0); cfg.users()];
    for b in 0..blocks {
        let ch = model.draw(&mut rng);
        let y_t = match imp {
            None => synth_pilot_signal(cfg, pilots, &ch, NoiseMode::Draw, &mut rng),
            Some(i) => synth_pilot_signal_impaired(cfg, i, pilots, &ch, NoiseMode::Draw, &mut rng),
        };
        yp.set_column(b, &project_pilot(&y_t, pilots, cfg.target));
        for s in symbols.iter_mut() {
            *s = draw_qpsk(&mut rng);
        }
        let xw = draw_qpsk(&mut rng);
        let y = match imp {
            None => synth_data_signal(cfg, &ch, &symbols, xw, NoiseMode::Draw, &mut rng),
            Some(i) => synth_data_signal_impaired(cfg, i, &ch, &symbols, xw, NoiseMode::Draw, &mut rng),
        };
        yd.set_column(b, &y);
    }
    (&yp * yp.adjoint(), &yd * yd.adjoint())
}

/// Simulates `n` blocks and returns `(B̂_m, Q̂)`.
///
/// Blocks are grouped in batches with one RNG stream each and the batch sums
/// are added in batch order, so the result does not depend on the number of
/// worker threads.
pub fn sample_covariances(
    cfg: &SystemConfig,
    imp: Option<&ImpairmentConfig>,
    n: usize,
    seed: u64,
) -> Result<(CMat, CMat)> {
    if n == 0 {
        return Err(Error::Empty("estimation blocks"));
    }
    cfg.validate()?;
    let model = ChannelModel::new(cfg)?;
    let pilots = PilotBook::dft(cfg.tau);
    let batches = n.div_ceil(BATCH);
    let sums: Vec<(CMat, CMat)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let len = BATCH.min(n - b * BATCH);
            batch_sums(cfg, imp, &model, &pilots, seed, b, len)
        })
        .collect();
    let m = cfg.antennas;
    let (mut bp, mut qd) = (CMat::zeros(m, m), CMat::zeros(m, m));
    for (p, d) in &sums {
        bp += p;
        qd += d;
    }
    let scale = c(1.0 / n as f64);
    Ok((linalg::hermitize(bp * scale), linalg::hermitize(qd * scale)))
}

/// Runs the full estimation pipeline over `n` simulated blocks.
pub fn estimate_all(
    cfg: &SystemConfig,
    imp: Option<&ImpairmentConfig>,
    n: usize,
    seed: u64,
    projection: Projection,
) -> Result<JammingStats> {
    if let Some(i) = imp {
        i.validate()?;
    }
    let (b_hat, q_hat) = sample_covariances(cfg, imp, n, seed)?;
    let ideal = ImpairmentConfig::ideal();
    let level = imp.unwrap_or(&ideal);
    let (s_t_hat, proj_t) = estimate_st(&b_hat, cfg, level, projection);
    let (s_d_hat, proj_d) = estimate_sd(&q_hat, cfg, projection);
    let ratio = level.leak_jam_coef() / level.target_jam_coef(cfg.tau);
    let s_t_leak = &s_t_hat * c(ratio);
    Ok(JammingStats {
        s_t_hat,
        s_d_hat,
        s_t_leak,
        n,
        psd_projected: proj_t || proj_d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodel::CovarianceMatrix;
    use crate::impairments::impaired_statistics;
    use crate::synthetic::{random_config, ConfigRanges};
    use crate::sysmodel::{pilot_cov_with, Powers};
    use num_complex::Complex64;

    fn frob(m: &CMat) -> f64 {
        m.norm()
    }

    #[test]
    fn single_outer_product() {
        let y = CVec::from_vec(vec![c(1.0), c(0.0)]);
        let b = sample_pilot_covariance(&[y]).unwrap();
        assert_eq!(b, CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(0.0)])));
    }

    #[test]
    fn repeated_vector() {
        let v = CVec::from_vec(vec![Complex64::new(0.5, -1.0), c(2.0), Complex64::new(0.0, 0.3)]);
        let obs = vec![v.clone(); 7];
        let b = sample_data_covariance(&obs).unwrap();
        assert!(linalg::rel_diff(&b, &linalg::outer(&v)) < 1e-15);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(sample_pilot_covariance(&[]), Err(Error::Empty(_))));
        assert!(matches!(sample_data_covariance(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn exact_covariances_invert_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = random_config(&mut rng, 4, 2, &ConfigRanges::default());
        let genie = JammerStatistics::genie(&cfg);
        let b = pilot_cov_with(&cfg, &genie, cfg.target);
        let (st, _) = estimate_st(&b, &cfg, &ImpairmentConfig::ideal(), Projection::Raw);
        assert!(linalg::rel_diff(&st, &genie.pilot) < 1e-12);
        let q = crate::sysmodel::data_cov_with(&cfg, &genie);
        let (sd, _) = estimate_sd(&q, &cfg, Projection::Raw);
        assert!(linalg::rel_diff(&sd, &genie.data) < 1e-12);
    }

    #[test]
    fn impaired_residual_and_leak() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = random_config(&mut rng, 3, 2, &ConfigRanges::default());
        let imp = ImpairmentConfig::new(0.2, 0.3).unwrap();
        let truth = impaired_statistics(&cfg, &imp);
        let b = crate::impairments::pilot_cov_impaired_with(&cfg, &imp, &truth, cfg.target);
        let (st, _) = estimate_st(&b, &cfg, &imp, Projection::Raw);
        assert!(linalg::rel_diff(&st, &truth.pilot) < 1e-12);
        let ratio = imp.leak_jam_coef() / imp.target_jam_coef(cfg.tau);
        assert!(linalg::rel_diff(&(&st * c(ratio)), &truth.pilot_leak) < 1e-12);
    }

    #[test]
    fn projection_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = random_config(&mut rng, 4, 2, &ConfigRanges::default());
        let stats = estimate_all(&cfg, None, 1, 9, Projection::Psd).unwrap();
        assert!(stats.psd_projected);
        assert_eq!(linalg::max_asymmetry(&stats.s_t_hat), 0.0);
        assert!(linalg::min_eigenvalue(&stats.s_t_hat) >= -1e-9 * stats.s_t_hat.norm());
        assert!(linalg::min_eigenvalue(&stats.s_d_hat) >= -1e-9 * stats.s_d_hat.norm());
    }

    #[test]
    fn zero_blocks_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = random_config(&mut rng, 2, 1, &ConfigRanges::default());
        assert!(matches!(
            estimate_all(&cfg, None, 0, 1, Projection::Raw),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = random_config(&mut rng, 3, 2, &ConfigRanges::default());
        let a = estimate_all(&cfg, None, 230, 77, Projection::Psd).unwrap();
        let b = estimate_all(&cfg, None, 230, 77, Projection::Psd).unwrap();
        assert_eq!(a.s_t_hat, b.s_t_hat);
        assert_eq!(a.s_d_hat, b.s_d_hat);
        let c2 = estimate_all(&cfg, None, 230, 78, Projection::Psd).unwrap();
        assert_ne!(a.s_t_hat, c2.s_t_hat);
    }

    #[test]
    fn sample_covariance_error_halves() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = crate::synthetic::random_scattering(
            &mut rng,
            4,
            &ConfigRanges::default(),
            crate::covmodel::CovRole::Generic,
        );
        let sampler = crate::covmodel::ChannelSampler::new(&r).unwrap();
        let mut err = |n: usize| -> f64 {
            (0..50)
                .map(|_| {
                    let obs: Vec<CVec> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
                    frob(&(sample_pilot_covariance(&obs).unwrap() - r.entries()))
                })
                .sum::<f64>()
                / 50.0
        };
        let ratio = err(4000) / err(1000);
        assert!((0.35..=0.7).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn unbiased_entrywise() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = random_config(&mut rng, 2, 2, &ConfigRanges::default());
        let runs: Vec<CMat> = (0..100)
            .map(|s| sample_covariances(&cfg, None, 100, 1000 + s).unwrap().0)
            .collect();
        let truth = pilot_cov_with(&cfg, &JammerStatistics::genie(&cfg), cfg.target);
        let n = runs.len() as f64;
        for i in 0..2 {
            for j in 0..2 {
                for part in [|z: Complex64| z.re, |z: Complex64| z.im] {
                    let vals: Vec<f64> = runs.iter().map(|m| part(m[(i, j)])).collect();
                    let mean = vals.iter().sum::<f64>() / n;
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                    let se = (var / n).sqrt();
                    assert!((mean - part(truth[(i, j)])).abs() <= 3.0 * se.max(1e-12));
                }
            }
        }
    }

    fn jam_free(m: usize) -> SystemConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut cfg = random_config(&mut rng, m, 2, &ConfigRanges::default());
        cfg.powers.q_t = 0.0;
        cfg.powers.q_d = 0.0;
        cfg
    }

    #[test]
    fn jam_free_null_calibration() {
        let cfg = jam_free(4);
        let n = 10_000;
        let stats = estimate_all(&cfg, None, n, 3, Projection::Psd).unwrap();
        let genie = JammerStatistics::genie(&cfg);
        let b = pilot_cov_with(&cfg, &genie, cfg.target);
        let q = crate::sysmodel::data_cov_with(&cfg, &genie);
        let bound = |m: &CMat| 5.0 * linalg::trace_re(m) / m.nrows() as f64 / (n as f64).sqrt();
        assert!(frob(&stats.s_t_hat) < bound(&b));
        assert!(frob(&stats.s_d_hat) < bound(&q));
    }

    #[test]
    fn jam_free_residual_shrinks() {
        let cfg = jam_free(3);
        let small = estimate_all(&cfg, None, 500, 4, Projection::Raw).unwrap();
        let large = estimate_all(&cfg, None, 8000, 4, Projection::Raw).unwrap();
        assert!(frob(&large.s_t_hat) < frob(&small.s_t_hat));
        assert!(frob(&large.s_d_hat) < frob(&small.s_d_hat));
    }

    #[test]
    fn stronger_jammer_is_estimated_better() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = random_config(&mut rng, 4, 2, &ConfigRanges::default());
        let mut prev = f64::INFINITY;
        for q_db in [0.0, 10.0, 20.0, 30.0] {
            let q = linalg::db_to_linear(q_db);
            let cfg = base.with_powers(Powers {
                q_t: q,
                q_d: q,
                ..base.powers
            });
            let truth = JammerStatistics::genie(&cfg);
            let err: f64 = (0..10)
                .map(|s| {
                    let est = estimate_all(&cfg, None, 400, 50 + s, Projection::Raw).unwrap();
                    frob(&(est.s_t_hat - &truth.pilot)) / frob(&truth.pilot)
                })
                .sum();
            assert!(err < prev, "q = {q_db} dB");
            prev = err;
        }
    }

    #[test]
    fn sample_dimension_mismatch() {
        let obs = vec![CVec::zeros(2), CVec::zeros(3)];
        assert!(matches!(sample_pilot_covariance(&obs), Err(Error::Dimension { .. })));
    }

    #[test]
    fn noise_only_blocks_give_identity() {
        // zero powers: B̂ → I
        let cfg = SystemConfig {
            antennas: 2,
            block_len: 10,
            tau: 1,
            target: 0,
            powers: Powers {
                p_t: 0.0,
                p_d: 0.0,
                q_t: 0.0,
                q_d: 0.0,
            },
            budgets: None,
            r_users: vec![CovarianceMatrix::identity(2)],
            r_jammer: CovarianceMatrix::identity(2),
        };
        let (b, q) = sample_covariances(&cfg, None, 20_000, 1).unwrap();
        assert!(linalg::rel_diff(&b, &linalg::identity(2)) < 0.05);
        assert!(linalg::rel_diff(&q, &linalg::identity(2)) < 0.05);
    }
}
