//! Scenario files: a TOML description of geometry, powers, hardware and the
//! sweep to run. Powers are given in dB and converted once at load time.

use std::path::Path;

use antijam::covmodel::{
    build_local_scattering_with, CovRole, GeometryParams, PathLoss, Position, ScatteringQuadrature,
};
use antijam::impairments::ImpairmentConfig;
use antijam::linalg::{db_to_linear, rel_err};
use antijam::montecarlo::MIN_BLOCKS;
use antijam::powalloc::split_powers;
use antijam::sysmodel::{Budgets, Powers, SystemConfig};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

const PRESETS: [(&str, &str); 5] = [
    ("placement-cdf", include_str!("../presets/placement-cdf.toml")),
    ("user-ratio", include_str!("../presets/user-ratio.toml")),
    ("jammer-ratio", include_str!("../presets/jammer-ratio.toml")),
    ("jam-power", include_str!("../presets/jam-power.toml")),
    ("antennas", include_str!("../presets/antennas.toml")),
];

/// Names of the bundled scenario presets.
pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// TOML source of a bundled preset.
pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "MS")]
    Ms,
    #[serde(rename = "MMSE-ZF")]
    MmseZf,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Ms => "MS",
            Method::MmseZf => "MMSE-ZF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StatsMode {
    Genie,
    Estimated,
}

impl StatsMode {
    pub fn label(self) -> &'static str {
        match self {
            StatsMode::Genie => "genie",
            StatsMode::Estimated => "estimated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hardware {
    Ideal,
    Impaired,
}

impl Hardware {
    pub fn label(self) -> &'static str {
        match self {
            Hardware::Ideal => "ideal",
            Hardware::Impaired => "impaired",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioAxis {
    User,
    Jammer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub system: SystemSection,
    #[serde(default)]
    pub powers: PowerSection,
    #[serde(default)]
    pub budgets: BudgetSection,
    pub geometry: GeometrySection,
    #[serde(default)]
    pub impairments: ImpairmentSection,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub stats: StatsSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub antennas: usize,
    #[serde(default = "default_block_len")]
    pub block_len: usize,
    /// Defaults to the number of users.
    pub tau: Option<usize>,
    /// 1-based index of the target user.
    pub target: usize,
    #[serde(default = "default_sigma_phi")]
    pub sigma_phi_deg: f64,
    #[serde(default)]
    pub fading_std_db: f64,
}

/// Transmit powers in dB. A missing pair is derived from the matching budget
/// with an even pilot/data split.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    pub p_t: Option<f64>,
    pub p_d: Option<f64>,
    pub q_t: Option<f64>,
    pub q_d: Option<f64>,
}

/// Average per-sample power budgets in dB.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    pub user: Option<f64>,
    pub jammer: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default = "default_cell")]
    pub cell_side_m: f64,
    #[serde(default = "default_min_distance")]
    pub min_distance_m: f64,
    pub users: Vec<[f64; 2]>,
    /// Fixed jammer position; CDF runs draw it at random instead.
    pub jammer: Option<[f64; 2]>,
    pub pathloss: Option<PathLossSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossSection {
    pub ref_distance_m: f64,
    pub ref_gain_db: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpairmentSection {
    #[serde(default = "default_kappa")]
    pub kappa_u: f64,
    #[serde(default = "default_kappa")]
    pub kappa_w: f64,
    #[serde(default = "default_hardware")]
    pub hardware: Vec<Hardware>,
}

impl Default for ImpairmentSection {
    fn default() -> Self {
        ImpairmentSection {
            kappa_u: default_kappa(),
            kappa_w: default_kappa(),
            hardware: default_hardware(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    #[serde(default = "default_stats_modes")]
    pub modes: Vec<StatsMode>,
    #[serde(default = "default_stats_blocks")]
    pub blocks: usize,
    /// Project estimated statistics onto the PSD cone.
    #[serde(default = "default_true")]
    pub project_psd: bool,
}

impl Default for StatsSection {
    fn default() -> Self {
        StatsSection {
            modes: default_stats_modes(),
            blocks: default_stats_blocks(),
            project_psd: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Random jammer placements for CDF runs.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Monte Carlo blocks per MMSE-ZF evaluation.
    #[serde(default = "default_mc_blocks")]
    pub mc_blocks: usize,
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_true")]
    pub refine: bool,
    #[serde(default = "default_jammer_tol")]
    pub jammer_tol: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            trials: default_trials(),
            mc_blocks: default_mc_blocks(),
            grid_step: default_grid_step(),
            refine: true,
            jammer_tol: default_jammer_tol(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub ratio_axis: Option<RatioAxis>,
    /// Pilot-to-data power ratios in dB.
    pub ratio_db: Option<Vec<f64>>,
    /// Jammer powers `q_t = q_d` in dB.
    pub jam_power_db: Option<Vec<f64>>,
    pub antennas: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
    /// 1-based users to report; all users when absent.
    pub users: Option<Vec<usize>>,
}

fn default_methods() -> Vec<Method> {
    vec![Method::Ms, Method::MmseZf]
}
fn default_block_len() -> usize {
    200
}
fn default_sigma_phi() -> f64 {
    10.0
}
fn default_cell() -> f64 {
    250.0
}
fn default_min_distance() -> f64 {
    25.0
}
fn default_kappa() -> f64 {
    0.1
}
fn default_hardware() -> Vec<Hardware> {
    vec![Hardware::Ideal]
}
fn default_stats_modes() -> Vec<StatsMode> {
    vec![StatsMode::Genie]
}
fn default_stats_blocks() -> usize {
    1000
}
fn default_true() -> bool {
    true
}
fn default_trials() -> usize {
    1000
}
fn default_mc_blocks() -> usize {
    1000
}
fn default_grid_step() -> f64 {
    0.01
}
fn default_jammer_tol() -> f64 {
    1e-6
}

impl ScenarioFile {
    pub fn from_toml(src: &str) -> CliResult<Self> {
        Ok(toml::from_str(src)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let src = std::fs::read_to_string(path)?;
        Self::from_toml(&src)
    }

    pub fn preset(name: &str) -> CliResult<Self> {
        let src = preset_source(name).ok_or_else(|| {
            let known: Vec<_> = preset_names().collect();
            CliError::Config(format!("unknown preset {name:?}; available: {}", known.join(", ")))
        })?;
        Self::from_toml(src)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

/// A validated scenario with all powers in linear scale.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub antennas: usize,
    pub block_len: usize,
    pub tau: usize,
    /// 0-based.
    pub target: usize,
    pub sigma_phi: f64,
    pub fading_std: f64,
    pub powers: Powers,
    pub budgets: Budgets,
    pub geometry: GeometryParams,
    pub fixed_jammer: Option<Position>,
    pub impairments: ImpairmentConfig,
    pub hardware: Vec<Hardware>,
    pub methods: Vec<Method>,
    pub stats_modes: Vec<StatsMode>,
    pub stats_blocks: usize,
    pub project_psd: bool,
    pub experiment: ExperimentSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
    /// 0-based users to report.
    pub report_users: Vec<usize>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn pair(a: Option<f64>, b: Option<f64>, names: &str) -> CliResult<Option<(f64, f64)>> {
    match (a, b) {
        (Some(x), Some(y)) => Ok(Some((db_to_linear(x), db_to_linear(y)))),
        (None, None) => Ok(None),
        _ => Err(config_err(format!("{names} must be given together"))),
    }
}

fn resolve_powers(
    given: Option<(f64, f64)>,
    budget_db: Option<f64>,
    tau: usize,
    block_len: usize,
    who: &str,
) -> CliResult<((f64, f64), f64)> {
    let t = block_len as f64;
    let tf = tau as f64;
    match (given, budget_db) {
        (Some((pilot, data)), None) => Ok(((pilot, data), (tf * pilot + (t - tf) * data) / t)),
        (Some((pilot, data)), Some(b)) => {
            let budget = db_to_linear(b);
            let spent = (tf * pilot + (t - tf) * data) / t;
            if rel_err(spent, budget) > 1e-6 {
                return Err(config_err(format!(
                    "{who} powers average {spent:.6e} per sample but the budget is {budget:.6e}"
                )));
            }
            Ok(((pilot, data), budget))
        }
        (None, Some(b)) => {
            let budget = db_to_linear(b);
            Ok((split_powers(0.5, budget, tau, block_len), budget))
        }
        (None, None) => Err(config_err(format!("{who} needs either powers or a budget"))),
    }
}

fn check_finite(name: &str, v: f64) -> CliResult<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be finite")))
    }
}

impl Scenario {
    pub fn from_file(f: &ScenarioFile) -> CliResult<Self> {
        let sys = &f.system;
        let k = f.geometry.users.len();
        if k == 0 {
            return Err(config_err("at least one user position is required"));
        }
        if sys.antennas == 0 {
            return Err(config_err("antennas must be positive"));
        }
        let tau = sys.tau.unwrap_or(k);
        if !(k <= tau && tau < sys.block_len) {
            return Err(config_err(format!(
                "pilot length must satisfy K <= tau < T (K={k}, tau={tau}, T={})",
                sys.block_len
            )));
        }
        if sys.target == 0 || sys.target > k {
            return Err(config_err(format!("target user {} does not exist (K={k})", sys.target)));
        }
        check_finite("sigma_phi_deg", sys.sigma_phi_deg)?;
        if !(sys.sigma_phi_deg > 0.0) {
            return Err(config_err("sigma_phi_deg must be positive"));
        }
        if !(sys.fading_std_db >= 0.0 && sys.fading_std_db.is_finite()) {
            return Err(config_err("fading_std_db must be finite and non-negative"));
        }
        for (name, v) in [
            ("powers.p_t", f.powers.p_t),
            ("powers.p_d", f.powers.p_d),
            ("powers.q_t", f.powers.q_t),
            ("powers.q_d", f.powers.q_d),
            ("budgets.user", f.budgets.user),
            ("budgets.jammer", f.budgets.jammer),
        ] {
            if let Some(x) = v {
                check_finite(name, x)?;
            }
        }

        let users = pair(f.powers.p_t, f.powers.p_d, "powers.p_t and powers.p_d")?;
        let jammer = pair(f.powers.q_t, f.powers.q_d, "powers.q_t and powers.q_d")?;
        let ((p_t, p_d), user_budget) = resolve_powers(users, f.budgets.user, tau, sys.block_len, "user")?;
        let ((q_t, q_d), jam_budget) = resolve_powers(jammer, f.budgets.jammer, tau, sys.block_len, "jammer")?;

        let pathloss = match &f.geometry.pathloss {
            Some(p) => PathLoss {
                ref_distance_m: p.ref_distance_m,
                ref_gain_db: p.ref_gain_db,
                exponent: p.exponent,
            },
            None => PathLoss::default(),
        };
        let fixed_jammer = f.geometry.jammer.map(|[x, y]| Position::new(x, y));
        let geometry = GeometryParams {
            cell_side_m: f.geometry.cell_side_m,
            min_bs_distance_m: f.geometry.min_distance_m,
            users: f.geometry.users.iter().map(|&[x, y]| Position::new(x, y)).collect(),
            // Placeholder for random placements; validated only when fixed.
            jammer: fixed_jammer.unwrap_or(Position::new(f.geometry.cell_side_m / 2.0, 0.0)),
            pathloss,
        };
        if !(geometry.cell_side_m > 2.0 * geometry.min_bs_distance_m * std::f64::consts::FRAC_1_SQRT_2)
            || !(geometry.min_bs_distance_m > 0.0)
        {
            return Err(config_err("cell must be larger than the minimum-distance disc"));
        }
        geometry.validate().map_err(|e| config_err(e.to_string()))?;

        let impairments = ImpairmentConfig::new(f.impairments.kappa_u, f.impairments.kappa_w)
            .map_err(|e| config_err(e.to_string()))?;
        if f.impairments.hardware.is_empty() {
            return Err(config_err("impairments.hardware must list at least one variant"));
        }
        if f.methods.is_empty() {
            return Err(config_err("methods must not be empty"));
        }
        if f.stats.modes.is_empty() {
            return Err(config_err("stats.modes must not be empty"));
        }
        if f.stats.blocks == 0 {
            return Err(config_err("stats.blocks must be positive"));
        }
        let exp = &f.experiment;
        if exp.trials == 0 {
            return Err(config_err("experiment.trials must be positive"));
        }
        if f.methods.contains(&Method::MmseZf) && exp.mc_blocks < MIN_BLOCKS {
            return Err(config_err(format!(
                "experiment.mc_blocks must be at least {MIN_BLOCKS}"
            )));
        }
        if !(exp.grid_step > 0.0 && exp.grid_step < 0.5) {
            return Err(config_err("experiment.grid_step must lie in (0, 0.5)"));
        }
        if !(exp.jammer_tol > 0.0) {
            return Err(config_err("experiment.jammer_tol must be positive"));
        }
        let sw = &f.sweep;
        for (name, empty) in [
            ("sweep.ratio_db", sw.ratio_db.as_ref().is_some_and(|v| v.is_empty())),
            (
                "sweep.jam_power_db",
                sw.jam_power_db.as_ref().is_some_and(|v| v.is_empty()),
            ),
            ("sweep.antennas", sw.antennas.as_ref().is_some_and(|v| v.is_empty())),
        ] {
            if empty {
                return Err(config_err(format!("{name} must not be empty")));
            }
        }
        for v in sw.ratio_db.iter().chain(sw.jam_power_db.iter()).flatten() {
            check_finite("sweep value", *v)?;
        }
        if sw.antennas.iter().flatten().any(|&m| m == 0) {
            return Err(config_err("sweep.antennas entries must be positive"));
        }
        let report_users = match &f.output.users {
            None => (0..k).collect(),
            Some(list) => {
                if list.is_empty() {
                    return Err(config_err("output.users must not be empty"));
                }
                let mut out = Vec::with_capacity(list.len());
                for &u in list {
                    if u == 0 || u > k {
                        return Err(config_err(format!("reported user {u} does not exist (K={k})")));
                    }
                    out.push(u - 1);
                }
                out
            }
        };

        Ok(Scenario {
            name: f.name.clone(),
            seed: f.seed,
            antennas: sys.antennas,
            block_len: sys.block_len,
            tau,
            target: sys.target - 1,
            sigma_phi: sys.sigma_phi_deg.to_radians(),
            fading_std: sys.fading_std_db,
            powers: Powers { p_t, p_d, q_t, q_d },
            budgets: Budgets {
                user: user_budget,
                jammer: jam_budget,
            },
            geometry,
            fixed_jammer,
            impairments,
            hardware: f.impairments.hardware.clone(),
            methods: f.methods.clone(),
            stats_modes: f.stats.modes.clone(),
            stats_blocks: f.stats.blocks,
            project_psd: f.stats.project_psd,
            experiment: exp.clone(),
            sweep: sw.clone(),
            output: f.output.clone(),
            report_users,
        })
    }

    pub fn users(&self) -> usize {
        self.geometry.users.len()
    }

    pub fn jammer(&self) -> CliResult<Position> {
        self.fixed_jammer
            .ok_or_else(|| config_err("this experiment needs a fixed geometry.jammer position"))
    }

    /// Per-antenna fading variations for every user and then the jammer.
    pub fn draw_fading<R: Rng + ?Sized>(&self, antennas: usize, rng: &mut R) -> Option<Vec<Vec<f64>>> {
        if self.fading_std == 0.0 {
            return None;
        }
        let normal = rand_distr::Normal::new(0.0, self.fading_std).expect("validated std");
        Some(
            (0..=self.users())
                .map(|_| {
                    (0..antennas)
                        .map(|_| rand_distr::Distribution::sample(&normal, rng))
                        .collect()
                })
                .collect(),
        )
    }

    /// System configuration for `antennas` BS antennas with the jammer at
    /// `jammer` and the given fading variations.
    pub fn system_config(
        &self,
        antennas: usize,
        jammer: Position,
        fading: Option<&[Vec<f64>]>,
    ) -> CliResult<SystemConfig> {
        let quad = ScatteringQuadrature::for_array(antennas, self.sigma_phi);
        let k = self.users();
        let mut covs = Vec::with_capacity(k + 1);
        for (i, pos) in self
            .geometry
            .users
            .iter()
            .copied()
            .chain(std::iter::once(jammer))
            .enumerate()
        {
            let params = self
                .geometry
                .scattering_at(pos, antennas, self.sigma_phi, self.fading_std)?;
            let role = if i < k { CovRole::User(i) } else { CovRole::Jammer };
            let f = fading.map(|all| all[i].as_slice());
            covs.push(build_local_scattering_with(&params, f, &quad, role)?);
        }
        let r_jammer = covs.pop().expect("jammer covariance");
        let cfg = SystemConfig {
            antennas,
            block_len: self.block_len,
            tau: self.tau,
            target: self.target,
            powers: self.powers,
            budgets: Some(self.budgets),
            r_users: covs,
            r_jammer,
        };
        cfg.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(cfg)
    }
}
