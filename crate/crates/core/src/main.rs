use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cbf_bt::sim::{self, ScenarioConfig};

#[derive(Parser)]
#[command(name = "cbf-bt", version, about = "Run behavior-tree missions with barrier-function filtered controls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config. Exits 0 if the mission completed, 2 if not, 1 on error.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's output.dir, else ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        max_ticks: Option<u64>,
        /// Override a parameter, e.g. `--set k_b=0.5` or `--set gamma.connected=2`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Also write trajectory.svg.
        #[arg(long)]
        plot: bool,
        /// Also write constraints.csv with every half-plane considered.
        #[arg(long)]
        dump_constraints: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Command::Run { config, out, max_ticks, set, plot, dump_constraints } = Cli::parse().command;
    match run(config, out, max_ticks, set, plot, dump_constraints) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(
    config: PathBuf,
    out: Option<PathBuf>,
    max_ticks: Option<u64>,
    set: Vec<String>,
    plot: bool,
    dump_constraints: bool,
) -> Result<bool, Box<dyn std::error::Error>> {
    let mut cfg = ScenarioConfig::load(&config)?;
    for s in &set {
        cfg.set(s)?;
    }
    if let Some(m) = max_ticks {
        cfg.max_ticks = Some(m);
    }
    let scenario = cfg.resolve()?;
    let output = sim::run(&scenario)?;
    let dir = out.or(cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let written =
        sim::write_outputs(&output, &dir, plot || cfg.output.plot, dump_constraints || cfg.output.dump_constraints)?;
    let m = &output.metrics;
    println!(
        "{}: {} after {} ticks (min battery {:.3}, min pairwise distance {:.3})",
        m.scenario,
        if m.completed { "completed" } else { "not completed" },
        m.ticks_elapsed,
        m.min_battery,
        m.min_pairwise_distance
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(m.completed)
}
