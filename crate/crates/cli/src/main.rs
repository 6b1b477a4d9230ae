use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hvac_mpc::sim::output::{write_metrics, write_pareto, write_trajectories};
use hvac_mpc::sim::scenario::{SCARCE_CAP_PER_3, SUFFICIENT_CAP_PER_3};
use hvac_mpc::sim::{builtin, pareto_sweep, run_closed_loop, with_jobs, Scenario, SimulationResult, Strategy, SweepMode};
use hvac_mpc::Error;

#[derive(Parser)]
#[command(name = "hvac-mpc", version, about = "Multi-zone HVAC MPC under a shared energy cap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop run of one strategy.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = strategy_parser())]
        strategy: Option<Strategy>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Pareto sweep over comfort weights.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Restrict to these strategies (repeatable). Default: all three.
        #[arg(long, value_parser = strategy_parser())]
        strategy: Vec<Strategy>,
        /// Comma-separated weights. Default: 8 values log-spaced over 1e3..1e8.
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Mode::ClosedLoop)]
        mode: Mode,
    },
    /// Runs all three strategies and prints a comparison table.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Prints a builtin scenario as TOML.
    Config { name: String },
}

fn strategy_parser() -> impl TypedValueParser<Value = Strategy> {
    clap::builder::PossibleValuesParser::new(Strategy::ALL.map(Strategy::name))
        .map(|s| s.parse::<Strategy>().expect("listed value"))
}

#[derive(Args)]
struct Common {
    /// Builtin name (small3, large36) or path to a TOML file.
    #[arg(long, default_value = "small3")]
    scenario: String,
    /// `sufficient`, `scarce`, or a constant cap in W.
    #[arg(long)]
    cap: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Closed-loop steps (default from the scenario).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 = one per zone up to the core count.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, env = "HVAC_MPC_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    ClosedLoop,
    SingleStep,
}

enum Failure {
    Config(String),
    Solver(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_solver_failure() => Failure::Solver(e),
            Error::Io(msg) => Failure::Io(msg),
            e => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn load(common: &Common) -> Result<Scenario, Failure> {
    let mut s = match builtin(&common.scenario) {
        Some(s) => s,
        None => {
            let text = fs::read_to_string(&common.scenario)
                .map_err(|e| Failure::Config(format!("{}: {e}", common.scenario)))?;
            Scenario::from_toml(&text)?
        }
    };
    if let Some(cap) = &common.cap {
        s = match cap.as_str() {
            "sufficient" => s.with_cap_per_three(SUFFICIENT_CAP_PER_3),
            "scarce" => s.with_cap_per_three(SCARCE_CAP_PER_3),
            w => {
                let w: f64 = w
                    .parse()
                    .map_err(|_| Failure::Config(format!("--cap: expected sufficient, scarce or watts, got {w}")))?;
                s.cap = hvac_mpc::sim::scenario::CapProfile::Constant(w);
                s
            }
        };
    }
    if let Some(p) = common.horizon {
        s.control.horizon = p;
    }
    if let Some(k) = common.steps {
        s.steps = k;
    }
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    s.validate()?;
    Ok(s)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn print_table(results: &[SimulationResult]) {
    let n = results.first().map_or(0, |r| r.comfort_indices.len());
    let mut header = format!("{:<14}", "strategy");
    for i in 1..=n {
        header += &format!("{:>10}", format!("I_c{i}"));
    }
    header += &format!("{:>10}", "I_c0");
    for i in 1..=n {
        header += &format!("{:>10}", format!("P_{i} [W]"));
    }
    header += &format!("{:>12}{:>10}", "max viol W", "time s");
    println!("{header}");
    for r in results {
        let mut line = format!("{:<14}", r.strategy.name());
        for v in &r.comfort_indices {
            line += &format!("{v:>10.4}");
        }
        line += &format!("{:>10.4}", r.overall_comfort);
        for v in &r.energy_rates {
            line += &format!("{v:>10.1}");
        }
        line += &format!("{:>12.3}{:>10.2}", r.max_cap_violation(), r.wall_time_s);
        println!("{line}");
    }
}

fn default_alphas() -> Vec<f64> {
    (0..8).map(|i| 10f64.powf(3.0 + 5.0 * i as f64 / 7.0)).collect()
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { common, strategy, alpha } => {
            let mut s = load(&common)?;
            if let Some(st) = strategy {
                s.strategy = st;
            }
            if let Some(a) = alpha {
                s.control.alpha = a;
                s.validate()?;
            }
            let r = with_jobs(common.jobs, s.n_zones(), || run_closed_loop(&s))?;
            write_trajectories(create(&common.out, "trajectories.csv")?, &r)?;
            write_metrics(create(&common.out, "metrics.csv")?, std::slice::from_ref(&r))?;
            println!("{}: {} zones, {} steps", s.name, s.n_zones(), r.steps());
            print_table(std::slice::from_ref(&r));
        }
        Command::Sweep { common, strategy, alpha, mode } => {
            let s = load(&common)?;
            let alphas = if alpha.is_empty() { default_alphas() } else { alpha };
            if alphas.len() < 2 {
                return Err(Failure::Config("a sweep needs at least two alpha values".into()));
            }
            let strategies = if strategy.is_empty() { Strategy::ALL.to_vec() } else { strategy };
            let mode = match mode {
                Mode::ClosedLoop => SweepMode::ClosedLoop,
                Mode::SingleStep => SweepMode::SingleStep,
            };
            let points = with_jobs(common.jobs, s.n_zones(), || pareto_sweep(&s, &alphas, &strategies, mode))?;
            write_pareto(create(&common.out, "pareto.csv")?, &points)?;
            println!("{}: {} points written to {}", s.name, points.len(), common.out.join("pareto.csv").display());
        }
        Command::Compare { common, alpha } => {
            let mut s = load(&common)?;
            if let Some(a) = alpha {
                s.control.alpha = a;
                s.validate()?;
            }
            let mut results = Vec::new();
            for st in Strategy::ALL {
                s.strategy = st;
                let r = with_jobs(common.jobs, s.n_zones(), || run_closed_loop(&s))?;
                write_trajectories(create(&common.out, &format!("trajectories_{}.csv", st.name()))?, &r)?;
                results.push(r);
            }
            write_metrics(create(&common.out, "metrics.csv")?, &results)?;
            println!("{}: {} zones, {} steps", s.name, s.n_zones(), s.steps);
            print_table(&results);
        }
        Command::Config { name } => {
            let s = builtin(&name).ok_or_else(|| Failure::Config(format!("unknown builtin scenario {name}")))?;
            print!("{}", s.to_toml()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver failure: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("io error: {msg}");
            ExitCode::from(1)
        }
    }
}
