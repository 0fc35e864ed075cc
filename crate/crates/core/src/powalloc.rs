//! Pilot/data power splits for the users (maximize the target's optimal
//! SINR) and for the jammer (minimize it).
//!
//! A split is parameterized by the share of the block budget spent on the
//! pilot phase: `p_t = φ 𝒫 T / τ`, `p_d = (1−φ) 𝒫 T / (T−τ)`, and likewise
//! `ζ` for the jammer.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::optimal_sinr_value;
use crate::impairments::{impaired_statistics, sinr_optimal_impaired_with, ImpairmentConfig};
use crate::sysmodel::{Budgets, JammerStatistics, Powers, SystemConfig};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    User,
    Jammer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    pub phase: Phase,
    /// `p_t` or `q_t`.
    pub pilot_power: f64,
    /// `p_d` or `q_d`.
    pub data_power: f64,
    /// Pilot-phase share of the budget (`φ` or `ζ`).
    pub fraction: f64,
    /// Target user's optimal SINR at this split.
    pub objective: f64,
}

/// Where the jamming statistics used by the objective come from.
#[derive(Debug, Clone, Copy)]
pub enum StatsSource<'a> {
    Genie,
    /// Estimated statistics; they do not depend on the user powers.
    Estimated(&'a JammerStatistics),
}

#[derive(Debug, Clone)]
pub struct Allocation {
    pub best: PowerSplit,
    /// `(fraction, objective)` for every evaluated grid point, in order.
    pub trace: Vec<(f64, f64)>,
    /// Total objective evaluations, including refinement.
    pub evaluations: usize,
}

fn budgets(cfg: &SystemConfig) -> Result<Budgets> {
    let b = cfg
        .budgets
        .ok_or_else(|| Error::Config("power allocation needs per-block budgets".into()))?;
    if !(b.user > 0.0 && b.jammer >= 0.0 && b.user.is_finite() && b.jammer.is_finite()) {
        return Err(Error::Config("budgets must be finite, user budget positive".into()));
    }
    if cfg.tau >= cfg.block_len {
        return Err(Error::Config("power split needs tau < T".into()));
    }
    Ok(b)
}

/// `(pilot, data)` powers for a pilot-phase share of a block budget.
pub fn split_powers(fraction: f64, budget: f64, tau: usize, block_len: usize) -> (f64, f64) {
    let t = block_len as f64;
    let tau = tau as f64;
    (fraction * budget * t / tau, (1.0 - fraction) * budget * t / (t - tau))
}

/// Target user's optimal SINR for the given powers.
pub fn target_objective(
    cfg: &SystemConfig,
    imp: Option<&ImpairmentConfig>,
    source: StatsSource<'_>,
    powers: Powers,
) -> Result<f64> {
    let cfg = cfg.with_powers(powers);
    let m = cfg.target;
    match imp {
        None => {
            let genie;
            let stats = match source {
                StatsSource::Genie => {
                    genie = JammerStatistics::genie(&cfg);
                    &genie
                }
                StatsSource::Estimated(s) => s,
            };
            optimal_sinr_value(&cfg, stats, m)
        }
        Some(i) => {
            let genie;
            let stats = match source {
                StatsSource::Genie => {
                    genie = impaired_statistics(&cfg, i);
                    &genie
                }
                StatsSource::Estimated(s) => s,
            };
            Ok(sinr_optimal_impaired_with(&cfg, i, stats, m)?.sinr)
        }
    }
}

fn user_split(cfg: &SystemConfig, b: &Budgets, phi: f64, objective: f64) -> PowerSplit {
    let (p_t, p_d) = split_powers(phi, b.user, cfg.tau, cfg.block_len);
    PowerSplit {
        phase: Phase::User,
        pilot_power: p_t,
        data_power: p_d,
        fraction: phi,
        objective,
    }
}

fn jammer_split(cfg: &SystemConfig, b: &Budgets, zeta: f64, objective: f64) -> PowerSplit {
    let (q_t, q_d) = split_powers(zeta, b.jammer, cfg.tau, cfg.block_len);
    PowerSplit {
        phase: Phase::Jammer,
        pilot_power: q_t,
        data_power: q_d,
        fraction: zeta,
        objective,
    }
}

/// Minimizes `f` on `[a, b]` by golden-section search until the bracket is
/// narrower than `tol`. Returns `(x, f(x), evaluations)`.
pub fn golden_section_min<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64, usize)>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut evals = 2;
    while b - a >= tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2)?;
        }
        evals += 1;
    }
    Ok(if f1 <= f2 { (x1, f1, evals) } else { (x2, f2, evals) })
}

/// Grid search over `φ ∈ {s, 2s, …, 1−s}` for the split maximizing the
/// target's SINR, optionally refined by golden section within `±s` of the
/// best grid point. Ties go to the lowest fraction.
pub fn solve_user_allocation(
    cfg: &SystemConfig,
    imp: Option<&ImpairmentConfig>,
    source: StatsSource<'_>,
    grid_step: f64,
    refine: bool,
) -> Result<Allocation> {
    let b = budgets(cfg)?;
    if !(grid_step > 0.0 && grid_step < 1.0) {
        return Err(Error::Config(format!("grid step must lie in (0, 1), got {grid_step}")));
    }
    let points = ((1.0 / grid_step).round() as usize).saturating_sub(1).max(1);
    let eval = |phi: f64| -> Result<f64> {
        let (p_t, p_d) = split_powers(phi, b.user, cfg.tau, cfg.block_len);
        target_objective(cfg, imp, source, Powers { p_t, p_d, ..cfg.powers })
    };
    let trace: Vec<(f64, f64)> = (1..=points)
        .into_par_iter()
        .map(|i| {
            let phi = i as f64 * grid_step;
            eval(phi).map(|v| (phi, v))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &(_, v)) in trace.iter().enumerate() {
        if v > trace[best].1 {
            best = i;
        }
    }
    let (mut phi, mut value) = trace[best];
    let mut evaluations = trace.len();
    if refine {
        let lo = (phi - grid_step).max(grid_step * 1e-3);
        let hi = (phi + grid_step).min(1.0 - grid_step * 1e-3);
        let (x, neg, n) = golden_section_min(|x| eval(x).map(|v| -v), lo, hi, grid_step * 1e-4)?;
        evaluations += n;
        if -neg > value {
            phi = x;
            value = -neg;
        }
    }
    Ok(Allocation {
        best: user_split(cfg, &b, phi, value),
        trace,
        evaluations,
    })
}

/// Golden-section search over `ζ ∈ [0, 1]` for the jammer split minimizing
/// the target's SINR. Both endpoints are also evaluated.
pub fn solve_jammer_allocation(cfg: &SystemConfig, imp: Option<&ImpairmentConfig>, tol: f64) -> Result<Allocation> {
    let b = budgets(cfg)?;
    if !(tol > 0.0) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    let eval = |zeta: f64| -> Result<f64> {
        let (q_t, q_d) = split_powers(zeta, b.jammer, cfg.tau, cfg.block_len);
        target_objective(cfg, imp, StatsSource::Genie, Powers { q_t, q_d, ..cfg.powers })
    };
    let (x, v, n) = golden_section_min(eval, 0.0, 1.0, tol)?;
    let ends = [(0.0, eval(0.0)?), (1.0, eval(1.0)?)];
    let mut best = (x, v);
    for e in ends {
        if e.1 < best.1 {
            best = e;
        }
    }
    Ok(Allocation {
        best: jammer_split(cfg, &b, best.0, best.1),
        trace: vec![ends[0], (x, v), ends[1]],
        evaluations: n + 2,
    })
}

/// High-jamming-budget user split: half the budget on each phase.
pub fn even_user_split(cfg: &SystemConfig) -> Result<PowerSplit> {
    let b = budgets(cfg)?;
    let (p_t, p_d) = split_powers(0.5, b.user, cfg.tau, cfg.block_len);
    let objective = target_objective(cfg, None, StatsSource::Genie, Powers { p_t, p_d, ..cfg.powers })?;
    Ok(user_split(cfg, &b, 0.5, objective))
}

/// High-budget jammer split: half the budget on each phase.
pub fn even_jammer_split(cfg: &SystemConfig) -> Result<PowerSplit> {
    let b = budgets(cfg)?;
    let (q_t, q_d) = split_powers(0.5, b.jammer, cfg.tau, cfg.block_len);
    let objective = target_objective(cfg, None, StatsSource::Genie, Powers { q_t, q_d, ..cfg.powers })?;
    Ok(jammer_split(cfg, &b, 0.5, objective))
}

#[derive(Debug, Clone)]
pub struct ConvexityReport {
    /// Interior grid points.
    pub points: Vec<f64>,
    /// Second differences at the interior points, normalized to the local
    /// half-span so that uniform grids give `f(x−h) − 2f(x) + f(x+h)`.
    pub second_diff: Vec<f64>,
    pub min_second_diff: f64,
    pub max_abs_value: f64,
}

impl ConvexityReport {
    /// Convex up to a floor of `rtol · max|f|`.
    pub fn is_convex(&self, rtol: f64) -> bool {
        self.min_second_diff > -rtol * self.max_abs_value
    }
}

/// Second differences of an arbitrary function on a grid in `(0, 1)`.
pub fn check_convexity_of<F>(f: F, grid: &[f64]) -> Result<ConvexityReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if grid.len() < 5 {
        return Err(Error::Config("convexity check needs at least 5 grid points".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] <= 0.0 || grid[grid.len() - 1] >= 1.0 {
        return Err(Error::Config("grid must be strictly increasing inside (0, 1)".into()));
    }
    let values: Vec<f64> = grid.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(grid.len() - 2);
    let mut second_diff = Vec::with_capacity(grid.len() - 2);
    for i in 1..grid.len() - 1 {
        let (x0, x1, x2) = (grid[i - 1], grid[i], grid[i + 1]);
        let (f0, f1, f2) = (values[i - 1], values[i], values[i + 1]);
        let d2 = 2.0 * ((f2 - f1) / (x2 - x1) - (f1 - f0) / (x1 - x0)) / (x2 - x0);
        let h = 0.5 * (x2 - x0);
        points.push(x1);
        second_diff.push(d2 * h * h);
    }
    Ok(ConvexityReport {
        points,
        min_second_diff: second_diff.iter().copied().fold(f64::INFINITY, f64::min),
        second_diff,
        max_abs_value: values.iter().map(|v| v.abs()).fold(0.0, f64::max),
    })
}

/// Second differences of the target's optimal SINR in the jammer's split.
pub fn check_convexity(cfg: &SystemConfig, grid: &[f64]) -> Result<ConvexityReport> {
    let b = budgets(cfg)?;
    check_convexity_of(
        |zeta| {
            let (q_t, q_d) = split_powers(zeta, b.jammer, cfg.tau, cfg.block_len);
            target_objective(cfg, None, StatsSource::Genie, Powers { q_t, q_d, ..cfg.powers })
        },
        grid,
    )
}

/// `21` interior points `(i+1)/22`.
pub fn default_convexity_grid() -> Vec<f64> {
    (0..21).map(|i| (i + 1) as f64 / 22.0).collect()
}

/// Applies a split to a configuration, returning the updated powers.
pub fn apply_split(cfg: &SystemConfig, split: &PowerSplit) -> SystemConfig {
    let mut p = cfg.powers;
    match split.phase {
        Phase::User => {
            p.p_t = split.pilot_power;
            p.p_d = split.data_power;
        }
        Phase::Jammer => {
            p.q_t = split.pilot_power;
            p.q_d = split.data_power;
        }
    }
    cfg.with_powers(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{db_to_linear, rel_err};
    use crate::synthetic::{random_config, ConfigRanges};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn with_budgets(mut cfg: SystemConfig, user: f64, jammer: f64) -> SystemConfig {
        cfg.budgets = Some(Budgets { user, jammer });
        let (p_t, p_d) = split_powers(0.5, user, cfg.tau, cfg.block_len);
        let (q_t, q_d) = split_powers(0.5, jammer, cfg.tau, cfg.block_len);
        cfg.powers = Powers { p_t, p_d, q_t, q_d };
        cfg
    }

    fn scenario(seed: u64, m: usize, user: f64, jammer: f64) -> SystemConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_config(&mut rng, m, 3, &ConfigRanges::default());
        with_budgets(cfg, user, jammer)
    }

    /// Wide angular spread keeps `R_w` well conditioned, so a large jamming
    /// budget dominates in every spatial direction.
    fn wide_scenario(seed: u64, m: usize, user: f64, jammer: f64) -> SystemConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ranges = ConfigRanges {
            sigma_phi_deg: (40.0, 60.0),
            ..ConfigRanges::default()
        };
        with_budgets(random_config(&mut rng, m, 3, &ranges), user, jammer)
    }

    fn assert_feasible(cfg: &SystemConfig, s: &PowerSplit) {
        let b = cfg.budgets.unwrap();
        let budget = match s.phase {
            Phase::User => b.user,
            Phase::Jammer => b.jammer,
        };
        let t = cfg.block_len_f();
        let spent = cfg.tau_f() * s.pilot_power + (t - cfg.tau_f()) * s.data_power;
        assert!(rel_err(spent, budget * t) < 1e-9);
        assert!(s.pilot_power >= 0.0 && s.data_power >= 0.0);
        apply_split(cfg, s).validate().unwrap();
    }

    #[test]
    fn even_split_arithmetic() {
        let (p_t, p_d) = split_powers(0.5, 1.0, 5, 200);
        assert!((p_t - 20.0).abs() < 1e-12);
        assert!((p_d - 200.0 / 390.0).abs() < 1e-12);
        let budget = 10f64.powf(0.5);
        let (p_t, p_d) = split_powers(0.5, budget, 3, 200);
        assert!((p_t - 105.409).abs() < 1e-3);
        assert!((p_d - 1.6052).abs() < 1e-4);
        let (p_t, p_d) = split_powers(0.5, 2.5, 100, 200);
        assert!((p_t - 2.5).abs() < 1e-12 && (p_d - 2.5).abs() < 1e-12);
    }

    #[test]
    fn even_splits_are_feasible() {
        let cfg = scenario(1, 4, 3.0, 40.0);
        let s1 = even_user_split(&cfg).unwrap();
        let s2 = even_jammer_split(&cfg).unwrap();
        assert_feasible(&cfg, &s1);
        assert_feasible(&cfg, &s2);
        let half = 0.5 * 3.0 * cfg.block_len_f();
        assert!(rel_err(cfg.tau_f() * s1.pilot_power, half) < 1e-12);
        assert!(rel_err((cfg.block_len_f() - cfg.tau_f()) * s1.data_power, half) < 1e-12);
    }

    #[test]
    fn grid_has_99_points() {
        let cfg = scenario(2, 3, 2.0, 20.0);
        let a = solve_user_allocation(&cfg, None, StatsSource::Genie, 0.01, false).unwrap();
        assert_eq!(a.trace.len(), 99);
        assert_eq!(a.evaluations, 99);
        assert!((a.trace[0].0 - 0.01).abs() < 1e-12);
        assert!((a.trace[98].0 - 0.99).abs() < 1e-12);
        assert_feasible(&cfg, &a.best);
        for &(_, v) in &a.trace {
            assert!(a.best.objective >= v);
        }
    }

    #[test]
    fn user_split_dominates_reference_points() {
        let cfg = scenario(3, 4, 3.0, 30.0);
        let a = solve_user_allocation(&cfg, None, StatsSource::Genie, 0.01, true).unwrap();
        assert_feasible(&cfg, &a.best);
        let c1 = even_user_split(&cfg).unwrap();
        assert!(a.best.objective >= c1.objective);
        for (phi, v) in &a.trace {
            if (phi - 0.1).abs() < 1e-9 || (phi - 0.9).abs() < 1e-9 {
                assert!(a.best.objective >= *v);
            }
        }
    }

    #[test]
    fn lowest_fraction_wins_ties() {
        // no user channel gain: the objective is identically zero
        let mut cfg = scenario(4, 2, 1.0, 1.0);
        cfg.powers.p_t = 0.0;
        let flat = solve_user_allocation(&cfg, None, StatsSource::Genie, 0.1, false);
        let a = flat.unwrap();
        let max = a.trace.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        let first = a.trace.iter().position(|t| t.1 == max).unwrap();
        assert_eq!(a.best.fraction, a.trace[first].0);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx, _) = golden_section_min(|x| Ok((x - 0.3).powi(2) + 1.0), 0.0, 1.0, 1e-8).unwrap();
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jammer_split_matches_fine_grid() {
        let cfg = scenario(5, 3, 1.0, 10.0);
        let tol = 1e-5;
        let a = solve_jammer_allocation(&cfg, None, tol).unwrap();
        assert_feasible(&cfg, &a.best);
        let eval = |z: f64| {
            let (q_t, q_d) = split_powers(z, 10.0, cfg.tau, cfg.block_len);
            target_objective(&cfg, None, StatsSource::Genie, Powers { q_t, q_d, ..cfg.powers }).unwrap()
        };
        let (mut gz, mut gv) = (0.0, f64::INFINITY);
        for i in 0..=10_000 {
            let z = i as f64 * 1e-4;
            let v = eval(z);
            if v < gv {
                gz = z;
                gv = v;
            }
        }
        assert!(a.best.objective <= gv * (1.0 + 1e-9));
        assert!((a.best.fraction - gz).abs() <= 1e-4 + tol);
    }

    #[test]
    fn convexity_in_jammer_split() {
        for seed in 0..5 {
            let cfg = scenario(10 + seed, 4, 1.0, 10.0);
            let rep = check_convexity(&cfg, &default_convexity_grid()).unwrap();
            assert!(rep.is_convex(1e-6), "seed {seed}: {}", rep.min_second_diff);
        }
    }

    #[test]
    fn concave_control_is_flagged() {
        let rep = check_convexity_of(|x| Ok(-(x - 0.5).powi(2)), &default_convexity_grid()).unwrap();
        assert!(!rep.is_convex(1e-6));
        assert!(rep.min_second_diff < 0.0);
    }

    #[test]
    fn convexity_grid_validation() {
        let cfg = scenario(6, 2, 1.0, 1.0);
        assert!(check_convexity(&cfg, &[0.1, 0.2, 0.3, 0.4]).is_err());
        assert!(check_convexity(&cfg, &[0.1, 0.3, 0.2, 0.4, 0.5]).is_err());
        assert!(check_convexity(&cfg, &[0.0, 0.2, 0.3, 0.4, 0.5]).is_err());
    }

    #[test]
    fn high_budget_shape() {
        let cfg = wide_scenario(7, 4, 1.0, 1e4);
        let eval = |z: f64| {
            let (q_t, q_d) = split_powers(z, 1e4, cfg.tau, cfg.block_len);
            target_objective(&cfg, None, StatsSource::Genie, Powers { q_t, q_d, ..cfg.powers }).unwrap()
        };
        assert!(eval(0.5) <= eval(0.25));
        assert!(eval(0.5) <= eval(0.75));
    }

    #[test]
    fn high_budget_fractions_approach_half() {
        let base = wide_scenario(8, 4, db_to_linear(0.0), 1.0);
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for ratio in [1e2, 1e3, 1e4] {
            let cfg = with_budgets(base.clone(), 1.0, ratio);
            let u = solve_user_allocation(&cfg, None, StatsSource::Genie, 0.01, true).unwrap();
            let j = solve_jammer_allocation(&cfg, None, 1e-5).unwrap();
            let d = ((u.best.fraction - 0.5).abs(), (j.best.fraction - 0.5).abs());
            assert!(d.0 <= prev.0 + 1e-12 && d.1 <= prev.1 + 1e-12, "ratio {ratio}: {d:?}");
            prev = d;
        }
        assert!(prev.0 <= 0.02 && prev.1 <= 0.02, "{prev:?}");
    }

    #[test]
    fn missing_budget_is_config_error() {
        let mut cfg = scenario(9, 2, 1.0, 1.0);
        cfg.budgets = None;
        assert!(solve_user_allocation(&cfg, None, StatsSource::Genie, 0.01, false)
            .unwrap_err()
            .is_config());
    }

    #[test]
    fn estimated_source_with_genie_values_matches_genie() {
        let cfg = scenario(11, 3, 2.0, 20.0);
        let g = solve_user_allocation(&cfg, None, StatsSource::Genie, 0.05, false).unwrap();
        let stats = JammerStatistics::genie(&cfg);
        let e = solve_user_allocation(&cfg, None, StatsSource::Estimated(&stats), 0.05, false).unwrap();
        assert_eq!(g.best.fraction, e.best.fraction);
        assert!(rel_err(g.best.objective, e.best.objective) < 1e-12);
    }
}
