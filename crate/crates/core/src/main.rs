use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use mofql::harness::{self, DemoShape, RunConfig, SweepGrid};

#[derive(Parser)]
#[command(name = "mofql", version, about = "Multi-objective fuzzy Q-learning for pursuit-evasion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Key-value (TOML) config file; missing keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config file.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy and write store.txt, episodes.csv, trajectories.csv and timing.csv.
    Train {
        #[command(flatten)]
        common: Common,
        /// Overrides the configured episode count.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Greedy evaluation of a stored policy for one preference angle pair.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Store file written by `train`.
        #[arg(long)]
        store: PathBuf,
        /// Polar angle from the avoid axis (rad).
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4, allow_negative_numbers = true)]
        theta: f64,
        /// Azimuth in the evade/reach plane (rad).
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2, allow_negative_numbers = true)]
        phi: f64,
        /// Evaluate the full 5x5 angle grid instead of a single pair.
        #[arg(long)]
        grid: bool,
    },
    /// Sweep ray count, temperature and discount over several seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = vec![5usize, 10, 20, 30, 50])]
        rays: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0, 5.0, 10.0, 20.0])]
        taus: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.9, 0.7, 0.5, 0.3, 0.1])]
        gammas: Vec<f64>,
        /// Number of seeds per cell, counting up from the master seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Overrides the configured episode count.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Sample a synthetic cloud and extract its Pareto front.
    ParetoDemo {
        #[command(flatten)]
        common: Common,
        /// convex, plane or concave.
        #[arg(long, default_value = "convex")]
        shape: String,
        #[arg(long, default_value_t = 500)]
        n: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common, episodes } => {
            let mut cfg = common.load()?;
            if let Some(e) = episodes {
                cfg.episodes = e;
            }
            let out = harness::cmd_train(&cfg, &cfg.out).context("training failed")?;
            println!(
                "trained {} episodes, final global hypervolume {}, output in {}",
                out.records.len(),
                out.final_global_hypervolume(),
                cfg.out.display()
            );
        }
        Command::Eval {
            common,
            store,
            theta,
            phi,
            grid,
        } => {
            let cfg = common.load()?;
            let angles = (!grid).then_some((theta, phi));
            let results = harness::cmd_eval(&store, &cfg, angles, &cfg.out).context("evaluation failed")?;
            for (t, p, e, _) in results {
                println!("theta={t} phi={p} outcome={} steps={}", e.outcome, e.steps);
            }
        }
        Command::Sweep {
            common,
            rays,
            taus,
            gammas,
            seeds,
            episodes,
        } => {
            let mut cfg = common.load()?;
            if let Some(e) = episodes {
                cfg.episodes = e;
            }
            let grid = SweepGrid {
                ray_counts: rays,
                taus,
                gammas,
                seeds: (cfg.seed..cfg.seed + seeds).collect(),
            };
            let rows = harness::cmd_sweep(&cfg, &grid, &cfg.out).context("sweep failed")?;
            println!("{} cells written to {}", rows.len(), cfg.out.display());
        }
        Command::ParetoDemo { common, shape, n } => {
            let cfg = common.load()?;
            let shape: DemoShape = shape.parse()?;
            let demo = harness::cmd_pareto_demo(shape, n, cfg.seed, &cfg.out)?;
            println!("{shape}: {} of {} points on the front", demo.front.len(), demo.points.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
