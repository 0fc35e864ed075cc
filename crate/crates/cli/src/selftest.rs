//! Quick internal consistency checks on small random systems.

use antijam::estimators::{ms_estimator, ms_estimator_dense, sinr_closed_form, sinr_optimal, sinr_optimal_dense};
use antijam::impairments::{ms_estimator_impaired, pilot_covariance_impaired, sinr_impaired, ImpairmentConfig};
use antijam::linalg::{rel_diff, rel_err};
use antijam::powalloc::{check_convexity, default_convexity_grid, split_powers};
use antijam::synthetic::{random_config, ConfigRanges};
use antijam::sysmodel::{pilot_projection_covariance, Budgets, Powers};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check {
        name,
        passed: worst <= tol,
        detail: format!("worst {worst:.3e}, tolerance {tol:.1e}"),
    }
}

pub fn run(seed: u64) -> antijam::Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranges = ConfigRanges::default();
    let (mut fast_dense, mut reduction, mut convex) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..10 {
        let m = [2, 3, 4, 6][i % 4];
        let mut cfg = random_config(&mut rng, m, 1 + i % 3, &ranges);
        for k in 0..cfg.users() {
            let fast = ms_estimator(&cfg, k)?;
            fast_dense = fast_dense.max(rel_diff(&fast.a, &ms_estimator_dense(&cfg, k)?.a));
            fast_dense = fast_dense.max(rel_err(sinr_optimal(&cfg, k)?.sinr, sinr_optimal_dense(&cfg, k)?));

            let ideal = ImpairmentConfig::ideal();
            let b = pilot_projection_covariance(&cfg, k)?;
            let bt = pilot_covariance_impaired(&cfg, &ideal, k)?;
            reduction = reduction.max(rel_diff(bt.entries(), b.entries()));
            reduction = reduction.max(rel_diff(&ms_estimator_impaired(&cfg, &ideal, k)?.a, &fast.a));
            let x = sinr_closed_form(&cfg, &fast, k)?.sinr;
            reduction = reduction.max(rel_err(sinr_impaired(&cfg, &ideal, &fast, k)?.sinr, x));
        }
        let (user, jammer) = (1.0, 10.0);
        let (p_t, p_d) = split_powers(0.5, user, cfg.tau, cfg.block_len);
        let (q_t, q_d) = split_powers(0.5, jammer, cfg.tau, cfg.block_len);
        cfg.powers = Powers { p_t, p_d, q_t, q_d };
        cfg.budgets = Some(Budgets { user, jammer });
        let rep = check_convexity(&cfg, &default_convexity_grid())?;
        convex = convex.max(-rep.min_second_diff / rep.max_abs_value.max(f64::MIN_POSITIVE));
    }
    Ok(vec![
        check("fast MS solver matches dense system", fast_dense, 1e-8),
        check("impaired model reduces to ideal at zero distortion", reduction, 1e-10),
        check("target SINR convex in jammer pilot fraction", convex, 1e-6),
    ])
}
