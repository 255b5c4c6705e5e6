use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chainplan_core::bilevel::{oracle_grid_size, oracle_solve, GRID_WARN};
use chainplan_core::scenarios::{
    compare_batch, finance_table, run_pipeline_with, sweep, write_csv, ExperimentConfig, FinanceConfig, ScenarioError,
    SweepFactor,
};
use chainplan_core::swarm::write_trace_csv;
use chainplan_core::{BilevelError, BilevelProblem};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

#[derive(Parser, Debug)]
#[command(name = "chainplan", version, about = "Seeded supply-chain planning experiments")]
struct Cli {
    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving every output file.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Factor {
    Demand,
    Distance,
}

impl From<Factor> for SweepFactor {
    fn from(f: Factor) -> Self {
        match f {
            Factor::Demand => SweepFactor::Demand,
            Factor::Distance => SweepFactor::Distance,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full pipeline once: report.csv, report.json and trace.csv.
    Plan(Common),
    /// Vary one multiplier and record the minimum operating cost per level.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "demand")]
        factor: Factor,
        /// Comma-separated multipliers; defaults depend on the factor.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
    /// Finance metrics of the planned solution under every mode, credit
    /// level and cycle.
    Finance(Common),
    /// Exhaustive grid solution of a bilevel problem JSON file.
    Oracle {
        /// Problem JSON file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        grid_step: f64,
    },
    /// Baseline against full method over consecutive seeds.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        runs: u64,
    },
}

#[derive(Debug)]
enum Failure {
    /// Bad input or arguments; exit code 2.
    Usage(String),
    /// A stage failed on valid input; exit code 3.
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::InvalidConfig(_) => Failure::Usage(e.to_string()),
            ScenarioError::Stage { .. } => Failure::Runtime(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(format!("output stage failed writing {}: {e}", path.display()))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_experiment(common: &Common) -> Result<ExperimentConfig, Failure> {
    let text = read_text(&common.config)?;
    let mut cfg = ExperimentConfig::from_json_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", common.config.display())))?;
    if let Some(seed) = common.seed {
        cfg.scenario.seed = seed;
    }
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Usage(format!("cannot create output directory {}: {e}", dir.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn csv_file<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    write_csv(rows, create(path)?).map_err(|e| io_failure(path, e))
}

fn json_file<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_failure(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn plan(common: &Common) -> Result<(), Failure> {
    let cfg = load_experiment(common)?;
    prepare_out(&common.out)?;
    let out =
        run_pipeline_with(&cfg.scenario, cfg.finance.as_ref(), &cfg.swarm_config(), Some(cfg.guidance_settings()))?;
    let r = &out.report;
    info!("seed {} unit cost {:.4} on-time {:.4} decision {}", r.seed, r.unit_cost, r.on_time_rate, r.decision_code);
    csv_file(&common.out.join("report.csv"), &r.cycle_rows())?;
    json_file(&common.out.join("report.json"), r)?;
    let trace = common.out.join("trace.csv");
    write_trace_csv(&out.swarm.trace, create(&trace)?).map_err(|e| io_failure(&trace, e))
}

fn run_sweep(common: &Common, factor: Factor, levels: Option<Vec<f64>>) -> Result<(), Failure> {
    let cfg = load_experiment(common)?;
    let factor = SweepFactor::from(factor);
    let levels = levels.unwrap_or_else(|| factor.default_levels());
    if let Some(bad) = levels.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Failure::Usage(format!("sweep level {bad} must be positive")));
    }
    prepare_out(&common.out)?;
    let rows = sweep(&cfg.scenario, factor, &levels, &cfg.swarm_config(), Some(cfg.guidance_settings()))?;
    csv_file(&common.out.join(format!("sweep_{}.csv", factor.as_str())), &rows)
}

fn finance(common: &Common) -> Result<(), Failure> {
    let cfg = load_experiment(common)?;
    prepare_out(&common.out)?;
    let base = cfg.finance.clone().unwrap_or_default();
    let out = run_pipeline_with(&cfg.scenario, Some(&base), &cfg.swarm_config(), Some(cfg.guidance_settings()))?;
    csv_file(&common.out.join("finance.csv"), &finance_table(&out.report, &base))
}

fn oracle(config: &Path, out: &Path, grid_step: f64) -> Result<(), Failure> {
    let text = read_text(config)?;
    let problem =
        BilevelProblem::from_json_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
    problem.validate().map_err(|e| Failure::Usage(format!("{}: {e}", config.display())))?;
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Failure::Usage(format!("grid step must be positive, got {grid_step}")));
    }
    let points = oracle_grid_size(&problem, grid_step);
    if points > GRID_WARN {
        warn!("oracle grid has {points} points; this may take a while");
    }
    prepare_out(out)?;
    let solution = oracle_solve(&problem, grid_step).map_err(|e| match e {
        BilevelError::InvalidStep(_) | BilevelError::DimensionMismatch(_) => Failure::Usage(e.to_string()),
        _ => Failure::Runtime(format!("oracle stage failed: {e}")),
    })?;
    info!("oracle value {} over {} leader points", solution.value, solution.leader_points);
    json_file(&out.join("solution.json"), &solution)
}

fn report(common: &Common, runs: u64) -> Result<(), Failure> {
    if runs == 0 {
        return Err(Failure::Usage("runs must be at least 1".into()));
    }
    let cfg = load_experiment(common)?;
    prepare_out(&common.out)?;
    let start = cfg.scenario.seed;
    let seeds: Vec<u64> = (0..runs).map(|i| start.wrapping_add(i)).collect();
    let finance = cfg.finance.clone().unwrap_or_else(FinanceConfig::default);
    let (tables, summary) =
        compare_batch(&cfg.scenario, &finance, &cfg.swarm_config(), cfg.guidance_settings(), &seeds)?;
    let unsafe_baselines = tables.iter().filter(|t| !t.baseline_safe).count();
    if unsafe_baselines > 0 {
        info!("{unsafe_baselines} of {runs} baselines violate the risk gate");
    }
    json_file(&common.out.join("comparison.json"), &tables)?;
    csv_file(&common.out.join("comparison.csv"), &summary)
}

fn threads_from_env() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("CHAINPLAN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Usage(format!("CHAINPLAN_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(format!("cannot start worker pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    threads_from_env()?;
    match cli.command {
        Command::Plan(c) => plan(&c),
        Command::Sweep { common, factor, levels } => run_sweep(&common, factor, levels),
        Command::Finance(c) => finance(&c),
        Command::Oracle { config, out, grid_step } => oracle(&config, &out, grid_step),
        Command::Report { common, runs } => report(&common, runs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Runtime(m)) = &f;
            eprintln!("chainplan: {m}");
            ExitCode::from(f.code())
        }
    }
}
