use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spikelab::acceptance::{run_acceptance_with, AcceptanceSettings, ALL_CRITERIA};
use spikelab::config::{ExperimentConfig, ModelKind, Overrides};
use spikelab::figures;
use spikelab::formats;
use spikelab::scenario::{run_scenario, Check, Scenario};
use spikelab::theory::Theory;
use spikelab_core::measures::Atom;
use spikelab_core::overlap::spectral_measure_of_matrix;
use spikelab_core::sampler::sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Spiked random matrices: limit laws, simulations and overlap statistics.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for data files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Run a single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Format of the summary printed to stdout.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, value_enum)]
    model: Option<ModelKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Limit law in the spike direction, its outlier and overlap profile.
    Analytic {
        /// Step of the density grid.
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Sample one matrix and write its spectral measure in the spike direction.
    Simulate,
    /// Windowed overlap profile against the limit profile.
    Profile,
    /// Predicted against sampled outliers.
    Outlier,
    /// Local-law diagnostic of the resolvent in the spike direction.
    Diagnose,
    /// Profile data for the figure panels.
    Figures {
        /// Panels to produce (1a, 1b, 2a, 2b, 3a, 3b); all by default.
        #[arg(long = "panel")]
        panels: Vec<String>,
    },
    /// Acceptance suite.
    Accept {
        /// Criteria to run; all by default.
        #[arg(long = "criterion", value_parser = clap::value_parser!(u8).range(1..=8))]
        criteria: Vec<u8>,
        /// Replace every tolerance (for checking that failures are reported).
        #[arg(long)]
        tolerance: Option<f64>,
        /// Seeds for the multi-seed criteria.
        #[arg(long = "seeds", value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.apply(&Overrides {
        model: cli.model,
        n: cli.n,
        theta: cli.theta,
        alpha: cli.alpha,
        seed: cli.seed,
    });
    config.validate()?;
    Ok(config)
}

fn print_summary<T: Serialize>(format: Format, checks: &[Check], extra: &T) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match format {
        Format::Json => formats::write_json(&mut out, extra)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for c in checks {
                w.serialize(c)?;
            }
            w.flush()?;
        }
    }
    out.flush()?;
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<fs::File> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

#[derive(Serialize)]
struct AnalyticSummary {
    support: Vec<[f64; 2]>,
    outlier_location: Option<f64>,
    outlier_mass: Option<f64>,
    atoms: Vec<[f64; 2]>,
    law_file: String,
    profile_file: String,
}

fn analytic(cli: &Cli, step: f64) -> anyhow::Result<bool> {
    let config = load_config(cli)?;
    let theory = Theory::for_config(&config.spiked(0)?)?;
    let lo = theory.support().iter().map(|i| i.lo).fold(f64::INFINITY, f64::min);
    let hi = theory.support().iter().map(|i| i.hi).fold(f64::NEG_INFINITY, f64::max);
    let grid: Vec<f64> = (0..)
        .map(|k| lo + k as f64 * step)
        .take_while(|x| *x <= hi)
        .collect();
    let density = grid
        .iter()
        .map(|&x| Ok((x, theory.spiked_density(x)?)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let atoms: Vec<Atom> = theory.spiked_atoms()?;
    let law_path = cli.out.join("law.csv");
    formats::write_law(create(&law_path)?, &density, &atoms)?;

    let profile_path = cli.out.join("profile-theory.csv");
    let mut w = csv::Writer::from_writer(create(&profile_path)?);
    w.write_record(["x", "theory"])?;
    for &x in &grid {
        if let Ok(p) = theory.profile(x) {
            w.write_record([format!("{x:?}"), format!("{p:?}")])?;
        }
    }
    w.flush()?;

    let outlier = theory.outlier()?;
    let summary = AnalyticSummary {
        support: theory.support().iter().map(|i| [i.lo, i.hi]).collect(),
        outlier_location: outlier.map(|o| o.location),
        outlier_mass: outlier.map(|o| o.mass),
        atoms: atoms.iter().map(|a| [a.location, a.weight]).collect(),
        law_file: law_path.display().to_string(),
        profile_file: profile_path.display().to_string(),
    };
    match cli.format {
        Format::Json => formats::write_json(io::stdout().lock(), &summary)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record(["kind", "location", "mass"])?;
            for a in &atoms {
                w.write_record(["atom".to_string(), format!("{:?}", a.location), format!("{:?}", a.weight)])?;
            }
            for i in theory.support() {
                w.write_record(["support".to_string(), format!("{:?}", i.lo), format!("{:?}", i.hi)])?;
            }
            w.flush()?;
        }
    }
    Ok(true)
}

fn simulate(cli: &Cli) -> anyhow::Result<bool> {
    let config = load_config(cli)?;
    let seed = config.run.seeds[0];
    let realized = sample(&config.spiked(seed)?)?;
    let mu = spectral_measure_of_matrix(&realized.matrix, &realized.spike_direction)?;
    let path = cli.out.join(format!("spectrum-seed-{seed}.csv"));
    formats::write_spectral_measure(create(&path)?, &mu)?;
    #[derive(Serialize)]
    struct Summary {
        seed: u64,
        n: usize,
        largest_eigenvalue: f64,
        smallest_eigenvalue: f64,
        weight_sum: f64,
        file: String,
    }
    let s = Summary {
        seed,
        n: mu.len(),
        largest_eigenvalue: mu.eigenvalues()[0],
        smallest_eigenvalue: mu.eigenvalues()[mu.len() - 1],
        weight_sum: mu.total_mass(),
        file: path.display().to_string(),
    };
    match cli.format {
        Format::Json => formats::write_json(io::stdout().lock(), &s)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.serialize(&s)?;
            w.flush()?;
        }
    }
    Ok(true)
}

/// Runs the configured scenario and judges the checks whose names start with
/// one of `prefixes` (plus seed failures).
fn scenario_command(cli: &Cli, id: &str, prefixes: &[&str]) -> anyhow::Result<bool> {
    let config = load_config(cli)?;
    let report = run_scenario(&Scenario {
        id: id.into(),
        config,
        out_dir: Some(cli.out.clone()),
    })?;
    let checks: Vec<Check> = report
        .checks
        .iter()
        .filter(|c| c.name == "failed_seeds" || prefixes.iter().any(|p| c.name.starts_with(p)))
        .cloned()
        .collect();
    print_summary(cli.format, &checks, &report)?;
    Ok(checks.iter().all(|c| c.passed))
}

fn figures_command(cli: &Cli, wanted: &[String]) -> anyhow::Result<bool> {
    let panels: Vec<_> = figures::panels(cli.n)
        .into_iter()
        .filter(|p| wanted.is_empty() || wanted.iter().any(|w| w == p.id))
        .collect();
    if panels.is_empty() {
        anyhow::bail!("no panel matches {wanted:?}");
    }
    let mut summaries = Vec::new();
    for p in &panels {
        log::info!("figure panel {}", p.id);
        summaries.push(figures::generate(p, &cli.out)?);
    }
    formats::write_json(create(&cli.out.join("figures.json"))?, &summaries)?;
    match cli.format {
        Format::Json => formats::write_json(io::stdout().lock(), &summaries)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            for s in &summaries {
                w.serialize(s)?;
            }
            w.flush()?;
        }
    }
    Ok(true)
}

fn accept(cli: &Cli, criteria: &[u8], tolerance: Option<f64>, seeds: Option<Vec<u64>>) -> anyhow::Result<bool> {
    let mut settings = AcceptanceSettings {
        criteria: if criteria.is_empty() { ALL_CRITERIA.to_vec() } else { criteria.to_vec() },
        tolerance_override: tolerance,
        ..Default::default()
    };
    if let Some(s) = seeds {
        settings.seeds = s;
    }
    let (report, timings) = run_acceptance_with(&settings, |r, t| {
        eprintln!(
            "criterion {} {} ({:.1} s{})",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            t.elapsed.as_secs_f64(),
            if t.within_budget() { "" } else { ", over budget" }
        );
    });
    let path = cli.out.join("acceptance.json");
    create(&path)?.write_all(report.to_json().as_bytes())?;
    match cli.format {
        Format::Json => io::stdout().lock().write_all(report.to_json().as_bytes())?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record(["criterion", "check", "value", "target", "tolerance", "passed"])?;
            for r in &report.criteria {
                for c in &r.checks {
                    w.write_record([
                        r.id.to_string(),
                        c.name.clone(),
                        format!("{:?}", c.value),
                        format!("{:?}", c.target),
                        format!("{:?}", c.tolerance),
                        c.passed.to_string(),
                    ])?;
                }
                if let Some(e) = &r.error {
                    w.write_record([r.id.to_string(), "error".into(), e.clone(), String::new(), String::new(), "false".into()])?;
                }
            }
            w.flush()?;
        }
    }
    Ok(report.passed && timings.iter().all(|t| t.within_budget()))
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Analytic { step } => analytic(cli, *step),
        Command::Simulate => simulate(cli),
        Command::Profile => scenario_command(cli, "profile", &["profile_"]),
        Command::Outlier => scenario_command(cli, "outlier", &["outlier_", "seeds_without_outlier", "spurious_outliers"]),
        Command::Diagnose => scenario_command(cli, "diagnose", &["local_law_"]),
        Command::Figures { panels } => figures_command(cli, panels),
        Command::Accept { criteria, tolerance, seeds } => accept(cli, criteria, *tolerance, seeds.clone()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
