//! Command-line driver for the parameter-identification experiments.
//!
//! Exit codes: 0 success, 2 validation error, 3 solver failure,
//! 4 reproduction tolerance failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ldg_inverse::bayes::Observation;
use ldg_inverse::experiments::{
    presets, report, write_observation, write_profile_csv, write_sample_outputs,
    ExperimentConfig, ExperimentContext, ExperimentError,
};
use ldg_inverse::mcmc::Chain;
use ldg_inverse::model::QField;
use ldg_inverse::stats::{summarize, CiLevel, Segment, DEFAULT_CLT_LAG};

#[derive(Parser)]
#[command(name = "ldg", about = "Bayesian identification of reduced Landau-de Gennes parameters", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem at the reference parameters and write the
    /// observation field plus its provenance sidecar.
    Generate {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the Metropolis-Hastings chain against an observation and write
    /// chain, statistics, KS table and histograms.
    Sample {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Observation CSV (defaults to <out>/observation.csv, generating it
        /// first when missing).
        #[arg(long)]
        obs: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Profile-likelihood scan over an alpha grid.
    Profile {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Grid as lo:hi:count (defaults to the preset grid for vortex runs).
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a full reproduction bundle (table2, table3, table4, table5, fig5,
    /// fig14, oracle) and compare against the published reference values.
    Reproduce {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute statistics from an existing chain CSV.
    Stats {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, default_value_t = 200)]
        burn_in: usize,
        #[arg(long, default_value_t = DEFAULT_CLT_LAG)]
        clt_lag: usize,
    },
    /// Emit a preset config as TOML (to stdout or a file).
    Config {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(
    config: &Option<PathBuf>,
    preset_name: &Option<String>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match (config, preset_name) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => presets::preset(name)
            .ok_or_else(|| ExperimentError::UnknownPreset(name.clone()))?,
        (None, None) => {
            return Err(ExperimentError::InvalidConfig(
                "either --config or --preset is required".into(),
            ))
        }
    };
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    Ok(cfg)
}

fn load_or_generate_observation(
    ctx: &ExperimentContext,
    obs_path: &Option<PathBuf>,
    out: &PathBuf,
) -> Result<Observation, ExperimentError> {
    match obs_path {
        Some(path) => {
            let field = QField::read_csv(path, ctx.disc.mesh.clone())?;
            let sidecar = path.with_extension("json");
            let provenance = std::fs::read_to_string(sidecar)
                .ok()
                .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
                .and_then(|v| serde_json::from_value(v["provenance"].clone()).ok());
            Ok(Observation { field, provenance })
        }
        None => {
            let (obs, solve) = ctx.generate_observation()?;
            write_observation(out, &obs, &solve)?;
            Ok(obs)
        }
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, ExperimentError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(ExperimentError::InvalidConfig(format!(
            "grid must be lo:hi:count, got '{spec}'"
        )));
    }
    let lo: f64 = parts[0].parse().map_err(|_| {
        ExperimentError::InvalidConfig(format!("bad grid lower bound '{}'", parts[0]))
    })?;
    let hi: f64 = parts[1].parse().map_err(|_| {
        ExperimentError::InvalidConfig(format!("bad grid upper bound '{}'", parts[1]))
    })?;
    let count: usize = parts[2].parse().map_err(|_| {
        ExperimentError::InvalidConfig(format!("bad grid count '{}'", parts[2]))
    })?;
    if count < 1 || hi <= lo {
        return Err(ExperimentError::InvalidConfig(format!("degenerate grid '{spec}'")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count)
        .map(|i| lo + i as f64 * (hi - lo) / (count - 1) as f64)
        .collect())
}

fn run(cli: Cli) -> Result<bool, ExperimentError> {
    match cli.command {
        Command::Generate { config, preset, out, seed } => {
            let cfg = load_config(&config, &preset, seed)?;
            let ctx = ExperimentContext::new(cfg)?;
            let (obs, solve) = ctx.generate_observation()?;
            let path = write_observation(&out, &obs, &solve)?;
            println!(
                "observation ({}, alpha*={}, beta*={}) -> {}",
                ctx.config.branch,
                ctx.config.alpha_star,
                ctx.config.beta_star,
                path.display()
            );
            Ok(true)
        }
        Command::Sample { config, preset, obs, out, seed } => {
            let cfg = load_config(&config, &preset, seed)?;
            let ctx = ExperimentContext::new(cfg)?;
            let observation = load_or_generate_observation(&ctx, &obs, &out)?;
            let result = ctx.sample(&observation)?;
            write_sample_outputs(&out, &ctx.config.name, &ctx.config, &result)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&ldg_inverse::experiments::stats_json(
                    &ctx.config,
                    &result
                ))?
            );
            Ok(true)
        }
        Command::Profile { config, preset, grid, out, seed } => {
            let cfg = load_config(&config, &preset, seed)?;
            let ctx = ExperimentContext::new(cfg)?;
            let observation = load_or_generate_observation(&ctx, &None, &out)?;
            let grid = match grid {
                Some(spec) => parse_grid(&spec)?,
                None => presets::profile_grid(ctx.config.alpha_star),
            };
            let prof = ctx.profile(&observation, &grid)?;
            std::fs::create_dir_all(&out)?;
            write_profile_csv(&out.join(format!("profile-{}.csv", ctx.config.name)), &prof.scan)?;
            println!(
                "{}",
                serde_json::json!({
                    "flatness": prof.scan.flatness,
                    "verdict": prof.verdict,
                })
            );
            Ok(true)
        }
        Command::Reproduce { preset, out, seed } => {
            std::fs::create_dir_all(&out)?;
            let rep = if preset == "oracle" {
                report::quadrature_cross_check(seed)?
            } else {
                report::reproduce(&preset, Some(&out), seed)?
            };
            rep.write(&out.join(format!("comparison-{preset}.json")))?;
            rep.print_summary();
            Ok(rep.passed)
        }
        Command::Stats { chain, burn_in, clt_lag } => {
            let (samples, accepted) = Chain::read_csv_samples(&chain)?;
            if samples.is_empty() || burn_in >= samples.len() {
                return Err(ExperimentError::InvalidConfig(format!(
                    "chain has {} rows, burn-in {burn_in} leaves nothing",
                    samples.len()
                )));
            }
            let dim = samples[0].len();
            let cols: Vec<Vec<f64>> = (0..dim)
                .map(|c| samples[burn_in..].iter().map(|s| s[c]).collect())
                .collect();
            let seg = Segment { cols };
            let stats = summarize(&seg, clt_lag, CiLevel::P95)?;
            let acc = accepted.iter().filter(|&&a| a).count() as f64 / accepted.len() as f64;
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "stats": stats,
                    "acceptance_rate": acc,
                }))?
            );
            Ok(true)
        }
        Command::Config { preset, out } => {
            let cfg = presets::preset(&preset)
                .ok_or_else(|| ExperimentError::UnknownPreset(preset.clone()))?;
            let text = cfg.to_toml_string();
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                ExperimentError::Solver(_) | ExperimentError::BranchMismatch { .. } => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
