//! Command-line front end: proposition verification suites, the
//! desk-scale experiments, config management, CSV output, and static
//! SVG plots.

mod config;
mod plot;
mod runner;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use coupled_rl::coupling::{verify_proposition, PropositionId, PropositionReport};

use config::ExperimentConfig;
use runner::{feature_count, records_from_csv, records_to_csv, run_experiment, RunRecord};

/// Usage and configuration problems exit with 2; runtime failures with 1.
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "coupled-rl",
    version,
    about = "Coupled expected/distributional RL: verification suites and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run proposition verifications and write per-proposition reports.
    Verify {
        /// Proposition IDs (P2 P3 Cor P4 P5 P6 P7 P8 P9); empty with
        /// --all runs everything.
        ids: Vec<String>,
        /// Run the full suite.
        #[arg(long)]
        all: bool,
        /// Number of seeds (0..N) per proposition.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Report directory.
        #[arg(long, default_value = "reports")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
    },
    /// Run an experiment config across its seeds and write RunRecord CSV.
    Run {
        /// Config document; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        env: Option<String>,
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        episodes: Option<usize>,
        /// Single seed shorthand.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated seed list.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        fourier_order: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        experiment: Option<String>,
        /// Output directory for config.kv, runs.csv and plots.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Also render runs.svg.
        #[arg(long)]
        plot: bool,
    },
    /// Evaluate a step-size grid around a config and record every cell.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated step sizes (alpha for tabular algorithms,
        /// learning rate otherwise).
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Re-derive results from a stored config and check they match.
    Replay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "replay")]
        out: PathBuf,
        /// Previously written CSV to compare against (wallclock_ms is
        /// the one permitted difference).
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Render mean-return curves from a RunRecord CSV as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "plot.svg")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Verify {
            ids,
            all,
            seeds,
            out,
            format,
        } => cmd_verify(ids, all, seeds, &out, format),
        Command::Run {
            config,
            env,
            algo,
            episodes,
            seed,
            seeds,
            alpha,
            learning_rate,
            fourier_order,
            gamma,
            experiment,
            out,
            plot,
        } => {
            let overrides = RunOverrides {
                env,
                algo,
                episodes,
                seed,
                seeds,
                alpha,
                learning_rate,
                fourier_order,
                gamma,
                experiment,
            };
            cmd_run(config.as_deref(), overrides, &out, plot)
        }
        Command::Sweep {
            config,
            values,
            out,
        } => cmd_sweep(&config, &values, &out),
        Command::Replay {
            config,
            out,
            against,
        } => cmd_replay(&config, &out, against.as_deref()),
        Command::Plot { input, out } => cmd_plot(&input, &out),
    }
}

fn cmd_verify(
    ids: Vec<String>,
    all: bool,
    seed_count: u64,
    out: &Path,
    format: ReportFormat,
) -> Result<ExitCode> {
    let ids: Vec<PropositionId> = if all || ids.is_empty() {
        PropositionId::ALL.to_vec()
    } else {
        let mut parsed = Vec::new();
        for raw in &ids {
            match raw.parse::<PropositionId>() {
                Ok(id) => parsed.push(id),
                Err(msg) => {
                    eprintln!("error: {msg}");
                    eprintln!("valid ids: P2 P3 Cor P4 P5 P6 P7 P8 P9");
                    return Ok(ExitCode::from(EXIT_USAGE));
                }
            }
        }
        parsed
    };
    let seeds: Vec<u64> = (0..seed_count).collect();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut all_pass = true;
    for id in ids {
        let report = verify_proposition(id, &seeds).map_err(|e| anyhow!("{id}: {e}"))?;
        let status = report_status(&report);
        println!(
            "{:<4} {:<48} {}",
            report.id.to_string(),
            report.title,
            status
        );
        for note in &report.notes {
            println!("     note: {note}");
        }
        all_pass &= report.pass;
        let path = out.join(format!(
            "{}.{}",
            report.id,
            if format == ReportFormat::Json { "json" } else { "csv" }
        ));
        let contents = match format {
            ReportFormat::Json => serde_json::to_string_pretty(&report)?,
            ReportFormat::Csv => report_to_csv(&report),
        };
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn report_status(report: &PropositionReport) -> &'static str {
    match (report.pass, report.expects_divergence) {
        (true, false) => "PASS (equivalent)",
        (true, true) => "PASS (diverged as expected)",
        (false, _) => "FAIL",
    }
}

fn report_to_csv(report: &PropositionReport) -> String {
    let mut out = String::from("id,pass,seed,steps,max_gap,verdict\n");
    for run in &report.runs {
        let verdict = if run.verdict.is_equivalent() {
            "equivalent".to_string()
        } else {
            "diverged".to_string()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            report.id, report.pass, run.seed, run.steps, run.max_gap, verdict
        ));
    }
    out
}

#[derive(Default)]
struct RunOverrides {
    env: Option<String>,
    algo: Option<String>,
    episodes: Option<usize>,
    seed: Option<u64>,
    seeds: Option<String>,
    alpha: Option<f64>,
    learning_rate: Option<f64>,
    fourier_order: Option<usize>,
    gamma: Option<f64>,
    experiment: Option<String>,
}

fn build_config(path: Option<&Path>, overrides: RunOverrides) -> Result<ExperimentConfig> {
    let mut config = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_document(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(env) = overrides.env {
        config.env = env.parse()?;
    }
    if let Some(algo) = overrides.algo {
        config.algo = algo.parse()?;
    }
    if let Some(episodes) = overrides.episodes {
        config.episodes = episodes;
    }
    if let Some(seeds) = overrides.seeds {
        config.seeds = seeds
            .split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|e| anyhow!("bad seed {s:?}: {e}")))
            .collect::<Result<_>>()?;
    }
    if let Some(seed) = overrides.seed {
        config.seeds = vec![seed];
    }
    if let Some(alpha) = overrides.alpha {
        config.alpha = alpha;
    }
    if let Some(lr) = overrides.learning_rate {
        config.learning_rate = lr;
    }
    if let Some(order) = overrides.fourier_order {
        config.fourier_order = order;
    }
    if let Some(gamma) = overrides.gamma {
        config.gamma = gamma;
    }
    if let Some(name) = overrides.experiment {
        config.experiment = name;
    }
    Ok(config)
}

fn cmd_run(
    config_path: Option<&Path>,
    overrides: RunOverrides,
    out: &Path,
    plot: bool,
) -> Result<ExitCode> {
    let config = match build_config(config_path, overrides) {
        Ok(c) => c,
        Err(err) => {
            eprintln!("error: {err:#}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    if let Err(err) = config.validate() {
        eprintln!("error: {err:#}");
        return Ok(ExitCode::from(EXIT_USAGE));
    }
    execute_run(&config, out, plot)?;
    Ok(ExitCode::SUCCESS)
}

fn execute_run(config: &ExperimentConfig, out: &Path, plot: bool) -> Result<Vec<RunRecord>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    println!(
        "run: {} / {} on {} | {} episodes x {} seeds | config {}",
        config.experiment,
        config.algo,
        config.env,
        config.episodes,
        config.seeds.len(),
        config.hash()
    );
    if let Some(features) = feature_count(config) {
        println!(
            "fourier order {} -> {} features",
            config.fourier_order, features
        );
    }
    let records = run_experiment(config)?;
    fs::write(out.join("config.kv"), config.to_document())?;
    fs::write(out.join("runs.csv"), records_to_csv(&records))?;
    if plot {
        let svg = plot::render_returns_svg(&records, &config.experiment);
        fs::write(out.join("runs.svg"), svg)?;
    }
    let means = runner::final_window_means(&records, 100);
    for (seed, mean) in means {
        println!("seed {seed}: final-100 mean return {mean:.2}");
    }
    Ok(records)
}

fn cmd_sweep(config_path: &Path, values: &str, out: &Path) -> Result<ExitCode> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let base = match ExperimentConfig::from_document(&text) {
        Ok(c) => c,
        Err(err) => {
            eprintln!("error: {err:#}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    let parsed: Result<Vec<f64>> = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| anyhow!("bad value {v:?}: {e}")))
        .collect();
    let grid = match parsed {
        Ok(g) if !g.is_empty() => g,
        _ => {
            eprintln!("error: --values needs a comma-separated list of step sizes");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    fs::create_dir_all(out)?;
    let mut summary = String::from("step_size,config_hash,seed,final_mean_return\n");
    for value in grid {
        let mut cell = base.clone();
        if cell.algo.is_tabular() {
            cell.alpha = value;
        } else {
            cell.learning_rate = value;
        }
        cell.experiment = format!("{}-step-{value}", base.experiment);
        let cell_dir = out.join(format!("step-{value}"));
        let records = execute_run(&cell, &cell_dir, false)?;
        for (seed, mean) in runner::final_window_means(&records, 100) {
            summary.push_str(&format!("{value},{},{seed},{mean}\n", cell.hash()));
        }
    }
    fs::write(out.join("summary.csv"), summary)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_replay(config_path: &Path, out: &Path, against: Option<&Path>) -> Result<ExitCode> {
    let text = fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let config = match ExperimentConfig::from_document(&text) {
        Ok(c) => c,
        Err(err) => {
            eprintln!("error: {err:#}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    let records = execute_run(&config, out, false)?;
    if let Some(reference_path) = against {
        let reference = records_from_csv(
            &fs::read_to_string(reference_path)
                .with_context(|| format!("reading {}", reference_path.display()))?,
        )?;
        if reference.len() != records.len() {
            bail!(
                "replay produced {} rows, reference has {}",
                records.len(),
                reference.len()
            );
        }
        for (new, old) in records.iter().zip(&reference) {
            let same = new.seed == old.seed
                && new.episode == old.episode
                && new.ret.to_bits() == old.ret.to_bits()
                && new.length == old.length
                && new.config_hash == old.config_hash;
            if !same {
                bail!(
                    "replay mismatch at seed {} episode {}: ({}, {}) vs ({}, {})",
                    new.seed,
                    new.episode,
                    new.ret,
                    new.length,
                    old.ret,
                    old.length
                );
            }
        }
        println!(
            "replay verified: {} rows identical (wallclock_ms excluded)",
            records.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot(input: &Path, out: &Path) -> Result<ExitCode> {
    let records = records_from_csv(
        &fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?,
    )?;
    let title = input
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "returns".to_string());
    let svg = plot::render_returns_svg(&records, &title);
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out, svg).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}
