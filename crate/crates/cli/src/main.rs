use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use expgraft::experience::TransitionDump;
use expgraft::fixtures::run_walker_demo;
use expgraft::harness::{self, ExperimentConfig, ModeName};
use expgraft::EnvKind;

#[derive(Parser)]
#[command(
    name = "expgraft",
    version,
    about = "Experience grafting experiments for DDPG"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run per seed and write learning curves plus an aggregate.
    Run(RunArgs),
    /// Recompute aggregate.csv from the per-run CSVs in a directory.
    Report {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
    },
    /// Graft a scripted two-trial walker scenario and print the result.
    GraftDemo {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// linewalker, pointgoal or pendulum
    #[arg(long)]
    env: Option<EnvKind>,
    /// noeg, eg or autoeg
    #[arg(long)]
    mode: Option<ModeName>,
    /// Fixed grafting threshold (mode eg only)
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Comma-separated list, e.g. 1,2,3
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with any configuration keys; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write every episode's transitions
    #[arg(long)]
    dump_trajectories: bool,
}

impl RunArgs {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(env) = self.env {
            cfg.env = env;
        }
        if let Some(mode) = self.mode {
            cfg.mode = mode;
            if mode != ModeName::Eg && self.epsilon.is_none() {
                cfg.epsilon = None;
            }
        }
        if self.epsilon.is_some() {
            cfg.epsilon = self.epsilon;
        }
        if let Some(n) = self.episodes {
            cfg.episodes = n;
        }
        if let Some(seeds) = self.seeds {
            cfg.seeds = seeds;
        }
        if let Some(out) = self.out {
            cfg.out = out;
        }
        cfg.dump_trajectories |= self.dump_trajectories;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_aggregate(rows: &[harness::AggregateRow]) {
    for r in rows {
        println!(
            "{:<22} {:>14.4} ± {:<12.4} (n={})",
            r.metric, r.mean, r.stddev, r.n_seeds
        );
    }
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let cfg = args.resolve()?;
    let report = harness::run_experiment(&cfg)?;
    for s in &report.seeds {
        match &s.error {
            None => eprintln!("seed {}: {} episodes", s.seed, s.episodes_completed),
            Some(e) => eprintln!(
                "seed {}: aborted after {} episodes: {e}",
                s.seed, s.episodes_completed
            ),
        }
    }
    print_aggregate(&report.aggregate);
    println!("wrote {}", report.out_dir.display());
    Ok(if report.succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn graft_demo(seed: u64) -> Result<()> {
    let (fixture, out) = run_walker_demo(seed)?;
    println!("fall trial quality:  {}", fixture.fall_trial.quality());
    println!("slow trial quality:  {}", fixture.slow_trial.quality());
    println!(
        "candidates found {}, qualified {}, returned {}",
        out.stats.candidates_found, out.stats.candidates_qualified, out.stats.returned
    );
    for (i, syn) in out.trajectories.iter().enumerate() {
        println!(
            "synthetic #{i}: quality {}, head {} + tail {} transitions, junction error {}",
            syn.quality,
            syn.head.len(),
            syn.tail.len(),
            syn.junction_error
        );
        let mut dump = TransitionDump::new(Vec::new())?;
        dump.write_episode(i, &syn.transitions().collect::<Vec<_>>())?;
        print!("{}", String::from_utf8(dump.finish()?)?);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Report { input } => harness::report(&input)
            .map(|rows| {
                print_aggregate(&rows);
                ExitCode::SUCCESS
            })
            .map_err(Into::into),
        Command::GraftDemo { seed } => graft_demo(seed).map(|()| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
