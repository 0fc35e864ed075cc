use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use antijam::linalg::linear_to_db;
use antijam_cli::experiments::{self, AllocationRun};
use antijam_cli::scenario::{Format, Hardware, RatioAxis, Scenario, ScenarioFile, StatsMode};
use antijam_cli::{selftest, CliError, CliResult, ResultTable};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "antijam", version, about = "Jamming-robust massive MIMO uplink experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// SE distribution over random jammer placements.
    Cdf(Common),
    /// Target SE across pilot-to-data power ratios.
    RatioSweep {
        #[command(flatten)]
        common: Common,
        /// Overrides `sweep.ratio_axis`.
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
    },
    /// SE across jamming powers.
    JamSweep(Common),
    /// SE across BS array sizes.
    AntennaSweep(Common),
    /// Optimal user pilot/data split for the target user.
    AllocUser(Common),
    /// Jammer pilot/data split minimizing the target SINR.
    AllocJammer(Common),
    /// Runs internal consistency checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    User,
    Jammer,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Bundled scenario: placement-cdf, user-ratio, jammer-ratio, jam-power or antennas.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also evaluate the hardware-impaired variant.
    #[arg(long)]
    impairments: bool,
    /// Blocks used to estimate the jammer statistics.
    #[arg(long)]
    stats_blocks: Option<usize>,
    #[arg(long, value_enum)]
    stats_mode: Option<StatsMode>,
    /// Overrides `experiment.trials`.
    #[arg(long)]
    trials: Option<usize>,
}

impl Common {
    fn scenario(&self) -> CliResult<Scenario> {
        let mut file = match (&self.scenario, &self.preset) {
            (Some(p), _) => ScenarioFile::load(p)?,
            (None, Some(name)) => ScenarioFile::preset(name)?,
            (None, None) => return Err(CliError::Config("pass --scenario <file> or --preset <name>".into())),
        };
        if let Some(s) = self.seed {
            file.seed = s;
        }
        if self.impairments && !file.impairments.hardware.contains(&Hardware::Impaired) {
            file.impairments.hardware.push(Hardware::Impaired);
        }
        if let Some(n) = self.stats_blocks {
            file.stats.blocks = n;
        }
        if let Some(m) = self.stats_mode {
            file.stats.modes = vec![m];
        }
        if let Some(t) = self.trials {
            file.experiment.trials = t;
        }
        Scenario::from_file(&file)
    }

    fn init_workers(&self) -> CliResult<()> {
        if let Some(n) = self.workers {
            if n == 0 {
                return Err(CliError::Config("--workers must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

fn emit(table: &ResultTable, scn: &Scenario, common: &Common) -> CliResult<()> {
    let format = common.format.unwrap_or(scn.output.format);
    let path = common
        .out
        .clone()
        .or_else(|| scn.output.path.as_ref().map(PathBuf::from));
    match path {
        Some(p) => {
            for f in table.emit(&p, format)? {
                eprintln!("wrote {}", f.display());
            }
        }
        None => {
            let stdout = std::io::stdout().lock();
            match format {
                Format::Csv => table.write_csv(stdout)?,
                Format::Json => table.write_json(stdout)?,
            }
        }
    }
    Ok(())
}

fn report_allocation(run: &AllocationRun) {
    let b = &run.allocation.best;
    eprintln!(
        "best pilot fraction {:.6}: pilot {:.3} dB, data {:.3} dB, target SINR {:.6e} ({} evaluations)",
        b.fraction,
        linear_to_db(b.pilot_power),
        linear_to_db(b.data_power),
        b.objective,
        run.allocation.evaluations
    );
}

fn run(cli: Cli) -> CliResult<()> {
    let (common, table) = match &cli.command {
        Command::Selftest { seed } => {
            let checks = selftest::run(*seed)?;
            let mut out = std::io::stdout().lock();
            let mut failed = 0;
            for c in &checks {
                writeln!(
                    out,
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                )?;
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(CliError::Core(antijam::Error::Domain(format!(
                    "{failed} self-test check(s) failed"
                ))));
            }
            return Ok(());
        }
        Command::Cdf(c) => {
            c.init_workers()?;
            let scn = c.scenario()?;
            (c, (experiments::run_cdf_experiment(&scn)?, scn))
        }
        Command::RatioSweep { common, axis } => {
            common.init_workers()?;
            let scn = common.scenario()?;
            let axis = axis.map(|a| match a {
                AxisArg::User => RatioAxis::User,
                AxisArg::Jammer => RatioAxis::Jammer,
            });
            (common, (experiments::run_ratio_sweep(&scn, axis)?, scn))
        }
        Command::JamSweep(c) => {
            c.init_workers()?;
            let scn = c.scenario()?;
            (c, (experiments::run_jampower_sweep(&scn)?, scn))
        }
        Command::AntennaSweep(c) => {
            c.init_workers()?;
            let scn = c.scenario()?;
            (c, (experiments::run_antenna_sweep(&scn)?, scn))
        }
        Command::AllocUser(c) => {
            c.init_workers()?;
            let scn = c.scenario()?;
            let r = experiments::run_user_allocation(&scn)?;
            report_allocation(&r);
            (c, (r.table, scn))
        }
        Command::AllocJammer(c) => {
            c.init_workers()?;
            let scn = c.scenario()?;
            let r = experiments::run_jammer_allocation(&scn)?;
            report_allocation(&r);
            (c, (r.table, scn))
        }
    };
    let (table, scn) = table;
    emit(&table, &scn, common)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
