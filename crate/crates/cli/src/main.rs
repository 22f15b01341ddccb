use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cdas_core::fixed_point::{self, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE};
use cdas_core::harness::{self, write_comparison};
use cdas_core::{
    BankConfig, Checkpoint, DifficultyDistribution, EquilibriumProblem, Error, Experiment,
    ExperimentConfig, ProblemBank, Result, StrategyKind,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cdas", version, about = "Competence-difficulty alignment sampling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write metrics, summary and checkpoint.
    Run {
        #[command(flatten)]
        overrides: Overrides,
        /// Stop after this many steps and checkpoint.
        #[arg(long)]
        stop_at: Option<usize>,
    },
    /// Run several strategies on shared banks, one sweep per seed.
    Compare {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated strategy names.
        #[arg(long, value_delimiter = ',', value_parser = parse_strategy, default_value = "random,curriculum,prioritized,dynamic,cdas")]
        strategies: Vec<StrategyKind>,
        /// Seeds as a list (`0,1,2`) or a half-open range (`0..10`).
        #[arg(long, value_parser = parse_seeds)]
        seeds: Option<SeedList>,
    },
    /// Continue a run from its checkpoint.
    Resume {
        checkpoint: PathBuf,
        /// Output directory; defaults to the checkpoint's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the difficulty/competence equilibrium for given pass rates.
    FixedPoint {
        /// JSON array or whitespace/comma separated pass rates.
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        /// Write the solution JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write per-iteration deltas and contraction ratios as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Generate or inspect problem banks.
    Bank {
        #[command(subcommand)]
        action: BankAction,
    },
}

#[derive(Subcommand)]
enum BankAction {
    Generate {
        #[arg(long, default_value_t = 2000)]
        n_problems: usize,
        #[arg(long, default_value_t = 0)]
        bank_seed: u64,
        #[arg(long, value_enum, default_value_t = DistributionKind::Normal)]
        distribution: DistributionKind,
        /// Mean for `normal`.
        #[arg(long, default_value_t = 0.0)]
        mean: f64,
        /// Standard deviation for `normal`, level spacing for `levels`.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out: PathBuf,
    },
    Inspect { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum DistributionKind {
    Normal,
    Levels,
}

#[derive(Clone, Debug)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
        if a >= b {
            return Err(format!("empty seed range {s}"));
        }
        return Ok(SeedList((a..b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|e| format!("bad seed `{x}`: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(SeedList)
}

/// One flag per config field; a flag beats the config file.
#[derive(Args)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_problems: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    rollouts: Option<usize>,
    #[arg(long = "steps", alias = "total-steps")]
    total_steps: Option<usize>,
    #[arg(long, value_parser = parse_strategy)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    no_symmetric: bool,
    #[arg(long)]
    no_warmup: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    discrimination: Option<f64>,
    #[arg(long)]
    learn_rate: Option<f64>,
    #[arg(long)]
    initial_ability: Option<f64>,
    #[arg(long)]
    bank_seed: Option<u64>,
    #[arg(long)]
    curriculum_switch_step: Option<u64>,
    #[arg(long)]
    curriculum_threshold: Option<u8>,
    #[arg(long)]
    dynamic_retry_cap: Option<usize>,
    #[arg(long)]
    dynamic_oversample_factor: Option<f64>,
    #[arg(long = "out", alias = "output")]
    output: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> std::result::Result<StrategyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field.clone() {
                    c.$field = v;
                }
            )*};
        }
        set!(n_problems, batch_size, rollouts, total_steps, strategy, seed, curriculum_threshold, dynamic_retry_cap, dynamic_oversample_factor);
        if self.no_symmetric {
            c.symmetric = false;
        }
        if self.no_warmup {
            c.warmup = false;
        }
        if let Some(v) = self.discrimination {
            c.learner.discrimination = v;
        }
        if let Some(v) = self.learn_rate {
            c.learner.learn_rate = v;
        }
        if self.initial_ability.is_some() {
            c.learner.initial_ability = self.initial_ability;
        }
        if self.bank_seed.is_some() {
            c.bank.seed = self.bank_seed;
        }
        if self.curriculum_switch_step.is_some() {
            c.curriculum_switch_step = self.curriculum_switch_step;
        }
        if self.output.is_some() {
            c.output = self.output.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn output_dir(config: &ExperimentConfig) -> PathBuf {
    config.output.clone().unwrap_or_else(|| PathBuf::from("cdas-out"))
}

fn report(exp: &Experiment, dir: &Path) -> Result<()> {
    exp.write_outputs(dir)?;
    let s = exp.summary();
    eprintln!(
        "{} seed {}: {} of {} steps, ability {:.4}, rollouts {}, outputs in {}",
        s.strategy,
        s.seed,
        s.steps,
        exp.config().total_steps,
        s.final_ability,
        s.cumulative_rollouts,
        dir.display()
    );
    Ok(())
}

fn read_pass_rates(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        });
    }
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::config(path.display().to_string(), format!("`{t}`: {e}")))
        })
        .collect()
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("values serialize");
    match path {
        Some(p) => fs::write(p, text + "\n").map_err(|e| Error::io(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { overrides, stop_at } => {
            let config = overrides.resolve()?;
            let dir = output_dir(&config);
            let mut exp = Experiment::new(config)?;
            match stop_at {
                Some(step) => exp.run_until(step)?,
                None => exp.run_to_end()?,
            }
            report(&exp, &dir)
        }
        Command::Compare {
            overrides,
            strategies,
            seeds,
        } => {
            let base = overrides.resolve()?;
            let dir = output_dir(&base);
            let results = match seeds {
                Some(SeedList(seeds)) => harness::sweep(&base, &strategies, &seeds)?,
                None => {
                    let configs: Vec<ExperimentConfig> = strategies
                        .iter()
                        .map(|&strategy| ExperimentConfig {
                            strategy,
                            ..base.clone()
                        })
                        .collect();
                    harness::compare(&configs)?
                }
            };
            write_comparison(&dir, &results)?;
            eprintln!("{} runs, outputs in {}", results.len(), dir.display());
            Ok(())
        }
        Command::Resume { checkpoint, out } => {
            let dir = out.unwrap_or_else(|| {
                checkpoint
                    .parent()
                    .map(Path::to_path_buf)
                    .unwrap_or_default()
            });
            let mut exp = Experiment::from_checkpoint(Checkpoint::read(&checkpoint)?)?;
            if exp.is_finished() {
                eprintln!(
                    "run already complete at step {}; nothing to resume",
                    exp.step()
                );
                return Ok(());
            }
            exp.run_to_end()?;
            report(&exp, &dir)
        }
        Command::FixedPoint {
            input,
            tolerance,
            max_iters,
            out,
            trajectory,
        } => {
            let problem = EquilibriumProblem::from_pass_rates(read_pass_rates(&input)?);
            match fixed_point::solve(&problem, tolerance, max_iters) {
                Ok(solution) => {
                    if let Some(path) = &trajectory {
                        solution.trajectory.write_csv_file(path)?;
                    }
                    write_json(out.as_deref(), &solution)
                }
                Err(Error::Convergence {
                    iterations,
                    last_delta,
                    trajectory: t,
                }) => {
                    if let Some(path) = &trajectory {
                        t.write_csv_file(path)?;
                    }
                    Err(Error::Convergence {
                        iterations,
                        last_delta,
                        trajectory: t,
                    })
                }
                Err(e) => Err(e),
            }
        }
        Command::Bank { action } => match action {
            BankAction::Generate {
                n_problems,
                bank_seed,
                distribution,
                mean,
                scale,
                out,
            } => {
                let distribution = match distribution {
                    DistributionKind::Normal => DifficultyDistribution::Normal { mean, std: scale },
                    DistributionKind::Levels => DifficultyDistribution::Levels { spacing: scale },
                };
                let bank = ProblemBank::generate(&BankConfig {
                    n_problems,
                    seed: bank_seed,
                    distribution,
                })?;
                write_json(Some(&out), &bank)?;
                eprintln!("{} problems, sha256 {}", bank.len(), bank.hash());
                Ok(())
            }
            BankAction::Inspect { path } => {
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let bank: ProblemBank = serde_json::from_str(&text).map_err(|e| Error::Json {
                    path: path.clone(),
                    source: e,
                })?;
                let regenerated = ProblemBank::generate(&bank.config)?;
                let mut levels = [0usize; 5];
                for p in &bank.problems {
                    if let Some(l) = p.level_tag.filter(|l| (1..=5).contains(l)) {
                        levels[usize::from(l) - 1] += 1;
                    }
                }
                let info = serde_json::json!({
                    "n_problems": bank.len(),
                    "config": bank.config,
                    "sha256": bank.hash(),
                    "matches_generator": regenerated == bank,
                    "level_counts": levels,
                    "difficulty_quantiles": {
                        "p05": bank.quantile(0.05),
                        "p50": bank.quantile(0.5),
                        "p95": bank.quantile(0.95),
                    },
                });
                write_json(None, &info)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
