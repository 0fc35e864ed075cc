//! Experiment runners. Every runner is deterministic in the scenario seed:
//! each trial or sweep point draws from its own seed-derived stream and
//! results are collected in order.

use antijam::estimators::{self, se_from_sinr, sinr_closed_form, Scheme, SinrReport};
use antijam::impairments::{self, ImpairmentConfig};
use antijam::jamstats::{estimate_all, Projection};
use antijam::linalg::db_to_linear;
use antijam::montecarlo::{evaluate_se, Detector, DetectorKind};
use antijam::powalloc::{
    default_convexity_grid, solve_jammer_allocation, solve_user_allocation, split_powers, target_objective, Allocation,
    StatsSource,
};
use antijam::sysmodel::{JammerStatistics, Powers, SystemConfig};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::scenario::{Hardware, Method, RatioAxis, Scenario, StatsMode};
use crate::table::{ResultTable, Row};

const DOMAIN_GEOMETRY: u64 = 1;
const DOMAIN_MONTE_CARLO: u64 = 2;
const DOMAIN_STATS: u64 = 3;

/// Deterministic sub-seed for `(domain, index)`.
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(domain);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

fn geometry_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, DOMAIN_GEOMETRY, index))
}

struct Point<'a> {
    axis: &'a str,
    coordinate: f64,
    index: u64,
}

struct Outcome {
    method: Method,
    hardware: Hardware,
    stats: StatsMode,
    user: usize,
    report: SinrReport,
    seed: u64,
}

fn impairment(scn: &Scenario, hw: Hardware) -> Option<ImpairmentConfig> {
    match hw {
        Hardware::Ideal => None,
        Hardware::Impaired => Some(scn.impairments),
    }
}

fn estimated_stats(
    scn: &Scenario,
    cfg: &SystemConfig,
    imp: Option<&ImpairmentConfig>,
    seed: u64,
) -> CliResult<JammerStatistics> {
    let projection = if scn.project_psd {
        Projection::Psd
    } else {
        Projection::Raw
    };
    Ok(estimate_all(cfg, imp, scn.stats_blocks, seed, projection)?.to_statistics())
}

fn genie_stats(cfg: &SystemConfig, imp: Option<&ImpairmentConfig>) -> JammerStatistics {
    match imp {
        None => JammerStatistics::genie(cfg),
        Some(i) => impairments::impaired_statistics(cfg, i),
    }
}

fn ms_reports(
    cfg: &SystemConfig,
    imp: Option<&ImpairmentConfig>,
    stats: &JammerStatistics,
    users: &[usize],
) -> CliResult<Vec<SinrReport>> {
    users
        .iter()
        .map(|&k| {
            let r = match imp {
                None => {
                    let a = estimators::ms_estimator_with(cfg, stats, k)?;
                    sinr_closed_form(cfg, &a, k)?
                }
                Some(i) => {
                    let a = impairments::ms_estimator_impaired_with(cfg, i, stats, k)?;
                    impairments::sinr_impaired(cfg, i, &a, k)?
                }
            };
            Ok(r)
        })
        .collect()
}

fn mmse_zf_reports(
    scn: &Scenario,
    cfg: &SystemConfig,
    imp: Option<&ImpairmentConfig>,
    stats: &JammerStatistics,
    users: &[usize],
    seed: u64,
) -> CliResult<Vec<SinrReport>> {
    let det = Detector::with_stats(cfg, imp, DetectorKind::ZeroForcing, Scheme::Mmse, stats)?;
    let mc = evaluate_se(cfg, imp, &det, scn.experiment.mc_blocks, seed)?;
    Ok(users
        .iter()
        .map(|&k| SinrReport {
            user: k,
            sinr: mc.per_user_sinr[k],
            se: mc.per_user_se[k],
            method: estimators::SinrMethod::MonteCarlo,
            std_err: mc.std_err[k],
            degenerate: false,
        })
        .collect())
}

/// Every requested method, hardware variant and stats mode at one
/// configuration.
fn evaluate_point(
    scn: &Scenario,
    cfg: &SystemConfig,
    hardware: &[Hardware],
    modes: &[StatsMode],
    index: u64,
) -> CliResult<Vec<Outcome>> {
    let mut out = Vec::new();
    for (h, &hw) in hardware.iter().enumerate() {
        let imp = impairment(scn, hw);
        let imp = imp.as_ref();
        for &mode in modes {
            let stats = match mode {
                StatsMode::Genie => genie_stats(cfg, imp),
                StatsMode::Estimated => {
                    let seed = derive_seed(scn.seed, DOMAIN_STATS, index * 8 + h as u64);
                    estimated_stats(scn, cfg, imp, seed)?
                }
            };
            for &method in &scn.methods {
                let mc_seed = derive_seed(scn.seed, DOMAIN_MONTE_CARLO, index * 8 + h as u64);
                let (reports, seed) = match method {
                    Method::Ms => (ms_reports(cfg, imp, &stats, &scn.report_users)?, scn.seed),
                    Method::MmseZf => (
                        mmse_zf_reports(scn, cfg, imp, &stats, &scn.report_users, mc_seed)?,
                        mc_seed,
                    ),
                };
                out.extend(reports.into_iter().map(|report| Outcome {
                    method,
                    hardware: hw,
                    stats: mode,
                    user: report.user,
                    report,
                    seed,
                }));
            }
        }
    }
    Ok(out)
}

fn rows_for(scn: &Scenario, point: &Point<'_>, outcomes: Vec<Outcome>) -> Vec<Row> {
    outcomes
        .into_iter()
        .map(|o| Row {
            scenario: scn.name.clone(),
            method: o.method.label().to_string(),
            hardware: o.hardware.label().to_string(),
            stats: o.stats.label().to_string(),
            user: o.user + 1,
            axis: point.axis.to_string(),
            coordinate: point.coordinate,
            se: o.report.se,
            sinr: o.report.sinr,
            std_err: o.report.std_err,
            seed: o.seed,
        })
        .collect()
}

fn run_points<F>(scn: &Scenario, axis: &str, coords: &[f64], modes: &[StatsMode], build: F) -> CliResult<ResultTable>
where
    F: Fn(usize) -> CliResult<SystemConfig> + Sync,
{
    let per_point: Vec<Vec<Row>> = coords
        .par_iter()
        .enumerate()
        .map(|(i, &coordinate)| {
            let cfg = build(i)?;
            let point = Point {
                axis,
                coordinate,
                index: i as u64,
            };
            let outcomes = evaluate_point(scn, &cfg, &scn.hardware, modes, point.index)?;
            Ok(rows_for(scn, &point, outcomes))
        })
        .collect::<CliResult<_>>()?;
    Ok(ResultTable::new(per_point.into_iter().flatten().collect()))
}

/// SE samples over random jammer placements and fading realizations, plus
/// their empirical CDF.
pub fn run_cdf_experiment(scn: &Scenario) -> CliResult<ResultTable> {
    let trials = scn.experiment.trials;
    let coords: Vec<f64> = (0..trials).map(|t| t as f64).collect();
    let table = run_points(scn, "trial", &coords, &scn.stats_modes, |t| {
        let mut rng = geometry_rng(scn.seed, t as u64 + 1);
        let jammer = scn.geometry.sample_position(&mut rng);
        let fading = scn.draw_fading(scn.antennas, &mut rng);
        scn.system_config(scn.antennas, jammer, fading.as_deref())
    })?;
    Ok(table.with_cdf())
}

fn fixed_config(scn: &Scenario, antennas: usize) -> CliResult<SystemConfig> {
    let mut rng = geometry_rng(scn.seed, 0);
    let fading = scn.draw_fading(antennas, &mut rng);
    scn.system_config(antennas, scn.jammer()?, fading.as_deref())
}

/// Pilot and data powers with ratio `pilot/data = ratio` spending exactly
/// `budget` per sample on average.
pub fn ratio_powers(ratio: f64, budget: f64, tau: usize, block_len: usize) -> (f64, f64) {
    let t = block_len as f64;
    let tf = tau as f64;
    let data = budget * t / (tf * ratio + t - tf);
    (ratio * data, data)
}

fn required<'a, T>(v: &'a Option<Vec<T>>, name: &str) -> CliResult<&'a [T]> {
    v.as_deref()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| CliError::Config(format!("this experiment needs a non-empty {name}")))
}

/// SE across a grid of pilot-to-data power ratios at a fixed budget, for the
/// users' or the jammer's powers.
pub fn run_ratio_sweep(scn: &Scenario, axis: Option<RatioAxis>) -> CliResult<ResultTable> {
    let axis = axis
        .or(scn.sweep.ratio_axis)
        .ok_or_else(|| CliError::Config("ratio sweep needs sweep.ratio_axis".into()))?;
    let ratios = required(&scn.sweep.ratio_db, "sweep.ratio_db")?;
    let base = fixed_config(scn, scn.antennas)?;
    let label = match axis {
        RatioAxis::User => "user_ratio_db",
        RatioAxis::Jammer => "jammer_ratio_db",
    };
    run_points(scn, label, ratios, &scn.stats_modes, |i| {
        let r = db_to_linear(ratios[i]);
        let mut cfg = base.clone();
        match axis {
            RatioAxis::User => {
                let (p_t, p_d) = ratio_powers(r, scn.budgets.user, scn.tau, scn.block_len);
                cfg.powers = Powers { p_t, p_d, ..cfg.powers };
            }
            RatioAxis::Jammer => {
                let (q_t, q_d) = ratio_powers(r, scn.budgets.jammer, scn.tau, scn.block_len);
                cfg.powers = Powers { q_t, q_d, ..cfg.powers };
            }
        }
        Ok(cfg)
    })
}

/// SE across jamming powers `q_t = q_d`, for every configured stats mode.
pub fn run_jampower_sweep(scn: &Scenario) -> CliResult<ResultTable> {
    let powers = required(&scn.sweep.jam_power_db, "sweep.jam_power_db")?;
    let base = fixed_config(scn, scn.antennas)?;
    run_points(scn, "jam_power_db", powers, &scn.stats_modes, |i| {
        let q = db_to_linear(powers[i]);
        let mut cfg = base.clone();
        cfg.powers = Powers {
            q_t: q,
            q_d: q,
            ..cfg.powers
        };
        if let Some(b) = cfg.budgets.as_mut() {
            b.jammer = q;
        }
        Ok(cfg)
    })
}

/// SE versus the number of BS antennas.
pub fn run_antenna_sweep(scn: &Scenario) -> CliResult<ResultTable> {
    let antennas = required(&scn.sweep.antennas, "sweep.antennas")?;
    let coords: Vec<f64> = antennas.iter().map(|&m| m as f64).collect();
    run_points(scn, "antennas", &coords, &scn.stats_modes, |i| {
        fixed_config(scn, antennas[i])
    })
}

/// Result of an allocation run: the optimizer output plus the objective
/// traced over the search grid as table rows.
pub struct AllocationRun {
    pub allocation: Allocation,
    pub table: ResultTable,
}

fn trace_rows(
    scn: &Scenario,
    cfg: &SystemConfig,
    hw: Hardware,
    stats: StatsMode,
    axis: &str,
    trace: &[(f64, f64)],
) -> CliResult<Vec<Row>> {
    trace
        .iter()
        .map(|&(x, sinr)| {
            Ok(Row {
                scenario: scn.name.clone(),
                method: Method::Ms.label().to_string(),
                hardware: hw.label().to_string(),
                stats: stats.label().to_string(),
                user: cfg.target + 1,
                axis: axis.to_string(),
                coordinate: x,
                se: se_from_sinr(sinr, cfg.tau, cfg.block_len)?,
                sinr,
                std_err: 0.0,
                seed: scn.seed,
            })
        })
        .collect()
}

fn first_hardware(scn: &Scenario) -> Hardware {
    scn.hardware[0]
}

/// Best user pilot-power fraction for the target user.
pub fn run_user_allocation(scn: &Scenario) -> CliResult<AllocationRun> {
    let cfg = fixed_config(scn, scn.antennas)?;
    let hw = first_hardware(scn);
    let imp = impairment(scn, hw);
    let mode = scn.stats_modes[0];
    let est;
    let source = match mode {
        StatsMode::Genie => StatsSource::Genie,
        StatsMode::Estimated => {
            est = estimated_stats(scn, &cfg, imp.as_ref(), derive_seed(scn.seed, DOMAIN_STATS, 0))?;
            StatsSource::Estimated(&est)
        }
    };
    let allocation = solve_user_allocation(
        &cfg,
        imp.as_ref(),
        source,
        scn.experiment.grid_step,
        scn.experiment.refine,
    )?;
    let rows = trace_rows(scn, &cfg, hw, mode, "user_pilot_fraction", &allocation.trace)?;
    Ok(AllocationRun {
        allocation,
        table: ResultTable::new(rows),
    })
}

/// Jammer pilot-power fraction minimizing the target user's SINR.
pub fn run_jammer_allocation(scn: &Scenario) -> CliResult<AllocationRun> {
    let cfg = fixed_config(scn, scn.antennas)?;
    let hw = first_hardware(scn);
    let imp = impairment(scn, hw);
    let allocation = solve_jammer_allocation(&cfg, imp.as_ref(), scn.experiment.jammer_tol)?;
    let mut grid = vec![0.0];
    grid.extend(default_convexity_grid());
    grid.push(1.0);
    let trace: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&zeta| {
            let (q_t, q_d) = split_powers(zeta, scn.budgets.jammer, cfg.tau, cfg.block_len);
            target_objective(
                &cfg,
                imp.as_ref(),
                StatsSource::Genie,
                Powers { q_t, q_d, ..cfg.powers },
            )
            .map(|v| (zeta, v))
        })
        .collect::<antijam::Result<_>>()?;
    let rows = trace_rows(scn, &cfg, hw, StatsMode::Genie, "jammer_pilot_fraction", &trace)?;
    Ok(AllocationRun {
        allocation,
        table: ResultTable::new(rows),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_powers_spend_the_budget() {
        for ratio in [0.01, 0.5, 1.0, 7.0, 100.0] {
            let (p, d) = ratio_powers(ratio, 3.0, 5, 200);
            assert!((p / d - ratio).abs() < 1e-12 * ratio);
            assert!((5.0 * p + 195.0 * d - 600.0).abs() < 1e-9);
        }
    }

    #[test]
    fn derived_seeds_are_distinct_and_stable() {
        let a = derive_seed(7, 1, 0);
        assert_eq!(a, derive_seed(7, 1, 0));
        let all = [a, derive_seed(7, 1, 1), derive_seed(7, 2, 0), derive_seed(8, 1, 0)];
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
    }
}
