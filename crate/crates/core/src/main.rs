use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use arsg_core::error::Result;
use arsg_core::harness::{
    analyze_cmd, compare_optimizers, grid_search, run_experiment, run_regret, RunConfig, Selection,
};
use arsg_core::optim::OptimizerKind;

#[derive(Parser)]
#[command(name = "arsg", version, about = "ARSG optimizers: gain analysis, training runs, grid search, comparisons, regret")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the gain factor and stationary std over tau, one CSV per mu.
    Analyze(AnalyzeArgs),
    /// Run one training config; writes metrics.csv and metadata.json.
    Train(TrainArgs),
    /// Grid search over the initial step size.
    Grid(GridArgs),
    /// Run several configs on the same problem and seed.
    Compare(CompareArgs),
    /// Track regret against the full-batch comparator and evaluate the bounds.
    Regret(TrainArgs),
    /// Print an example config.
    Example,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, default_value_t = 0.999)]
    beta: f64,
    /// Comma-separated observation factors.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.05, 0.1, 0.2])]
    mu: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    tau_min: f64,
    #[arg(long, default_value_t = 20.0)]
    tau_max: f64,
    #[arg(long, default_value_t = 2001)]
    points: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value = "analysis")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    optimizer: Option<OptimizerKind>,
    /// Initial step size (the schedule shape is kept).
    #[arg(long)]
    alpha: Option<f64>,
    /// Constant observation factor.
    #[arg(long)]
    mu: Option<f64>,
    /// Enable the observation boost.
    #[arg(long)]
    obsb: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectBy {
    FinalLoss,
    TestAcc,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated step sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    alphas: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SelectBy::FinalLoss)]
    select: SelectBy,
    /// Number of trailing test evaluations averaged by `test-acc`.
    #[arg(long, default_value_t = 5)]
    last_k: usize,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct CompareArgs {
    /// Repeat once per run.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Target training loss; defaults to the worst final loss among converged runs.
    #[arg(long)]
    target: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "compare")]
    out_dir: PathBuf,
}

fn load(path: &Path, o: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(d) = &o.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(t) = o.iterations {
        cfg.iterations = t;
    }
    if let Some(k) = o.optimizer {
        cfg.optimizer = k;
    }
    if let Some(a) = o.alpha {
        cfg = cfg.with_alpha(a)?;
    }
    if let Some(m) = o.mu {
        cfg.hyper.mu = arsg_core::optim::Schedule::constant(m);
    }
    if o.obsb {
        cfg.obsb.enabled = true;
    }
    Ok(cfg)
}

/// Returns the process exit status: 0 success, 3 for a divergent run.
fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze(a) => {
            let paths = analyze_cmd(a.beta, &a.mu, (a.tau_min, a.tau_max), a.points, a.alpha, a.sigma, &a.out_dir)?;
            for p in paths {
                println!("{}", p.display());
            }
            Ok(0)
        }
        Command::Train(a) => {
            let cfg = load(&a.config, &a.overrides)?;
            let art = run_experiment(&cfg)?;
            println!("{}", art.dir.display());
            match &art.outcome.abort {
                Some(abort) => {
                    eprintln!("run diverged at t = {}: {}", abort.t, abort.reason);
                    Ok(3)
                }
                None => {
                    println!("final loss {}", art.outcome.losses.last().copied().unwrap_or(f64::NAN));
                    Ok(0)
                }
            }
        }
        Command::Grid(a) => {
            let cfg = load(&a.config, &a.overrides)?;
            let selection = match a.select {
                SelectBy::FinalLoss => Selection::FinalLoss,
                SelectBy::TestAcc => Selection::TestAccuracy { last_k: a.last_k },
            };
            let result = grid_search(&cfg, &a.alphas, selection, true)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            result.write_table(&cfg.out_dir.join("grid.csv"))?;
            let best = serde_json::to_string_pretty(&result.best_config)?;
            std::fs::write(cfg.out_dir.join("best_config.json"), best)?;
            for e in &result.entries {
                let flag = if e.diverged { " (diverged)" } else { "" };
                println!("alpha {:<10} final loss {:.6e}{flag}", e.alpha, e.final_loss);
            }
            println!("selected alpha {}", result.best_alpha());
            Ok(0)
        }
        Command::Compare(a) => {
            let cfgs = a
                .configs
                .iter()
                .map(|p| {
                    let mut c = RunConfig::load(p)?;
                    if let Some(s) = a.seed {
                        c.seed = s;
                    }
                    Ok(c)
                })
                .collect::<Result<Vec<_>>>()?;
            let cmp = compare_optimizers(&cfgs, a.target)?;
            std::fs::create_dir_all(&a.out_dir)?;
            cmp.write_merged(&a.out_dir.join("losses.csv"))?;
            cmp.write_summary(&a.out_dir.join("summary.csv"))?;
            for s in &cmp.summary {
                let hit = s.iterations_to_target.map_or("never".to_string(), |t| t.to_string());
                println!("{:<16} final loss {:.6e}  iterations to {:.6e}: {hit}", s.label, s.final_loss, cmp.target);
            }
            Ok(if cmp.summary.iter().any(|s| s.diverged) { 3 } else { 0 })
        }
        Command::Regret(a) => {
            let cfg = load(&a.config, &a.overrides)?;
            let out = run_regret(&cfg, Some(&cfg.out_dir))?;
            println!("R_T = {} after T = {}", out.record.regret, out.record.t);
            for (name, tally) in [("thm2", out.thm2), ("cor1", out.cor1), ("thm3", out.thm3)] {
                if tally.evaluated == 0 {
                    println!("{name}: preconditions not met");
                } else {
                    println!("{name}: {} violations in {} evaluations", tally.violations, tally.evaluated);
                }
            }
            Ok(0)
        }
        Command::Example => {
            println!("{}", serde_json::to_string_pretty(&arsg_core::harness::example_config())?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
