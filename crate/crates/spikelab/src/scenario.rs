//! Monte Carlo scenarios: sample each seed, build the spectral measure in the
//! spike direction and compare outliers, overlap profile and local law with
//! the limit predictions.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use spikelab_core::analytic::Interval;
use spikelab_core::closed_forms::Model;
use spikelab_core::measures::{ComplexPoint, WeightedSpectralMeasure};
use spikelab_core::overlap::{
    extract_outliers, local_law_diagnostic, spectral_measure_of_matrix, windowed_profile,
    LocalLawDiagnostic, OverlapProfile,
};
use spikelab_core::sampler::sample;

use crate::config::{ExperimentConfig, GridSpec};
use crate::formats;
use crate::theory::{BulkLimit, SpikedLimit, Theory};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: String,
    pub config: ExperimentConfig,
    /// CSV and JSON files go to `out_dir/<id>/` when set.
    pub out_dir: Option<PathBuf>,
}

/// A comparison against a named tolerance: passes when
/// `|value − target| ≤ tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub tolerance_name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, tolerance_name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            tolerance_name: tolerance_name.into(),
            value,
            target,
            tolerance,
            passed: (value - target).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cluster {
    pub location: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedResult {
    pub seed: u64,
    pub error: Option<String>,
    pub largest_eigenvalue: Option<f64>,
    pub smallest_eigenvalue: Option<f64>,
    pub weight_sum: Option<f64>,
    pub outliers: Vec<Cluster>,
    /// Outlier cluster nearest to the predicted outlier.
    pub matched_outlier: Option<Cluster>,
    pub max_weight: Option<f64>,
    pub profile_sup_error: Option<f64>,
    pub local_law_max_ratio: Option<f64>,
}

impl SeedResult {
    fn failed(seed: u64, err: &anyhow::Error) -> Self {
        Self {
            seed,
            error: Some(format!("{err:#}")),
            largest_eigenvalue: None,
            smallest_eigenvalue: None,
            weight_sum: None,
            outliers: Vec::new(),
            matched_outlier: None,
            max_weight: None,
            profile_sup_error: None,
            local_law_max_ratio: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub model: &'static str,
    pub n: usize,
    pub theta: f64,
    pub alpha: Option<f64>,
    pub window_half_width: f64,
    pub support: Vec<[f64; 2]>,
    pub theory_outlier: Option<Cluster>,
    pub seeds: Vec<SeedResult>,
    pub mean_outlier_location: Option<f64>,
    pub mean_outlier_mass: Option<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// Per-seed data kept for file output.
#[derive(Debug, Clone)]
pub struct SeedArtifacts {
    pub measure: WeightedSpectralMeasure,
    pub profile: OverlapProfile,
    pub diagnostic: LocalLawDiagnostic,
}

/// Grid points: the configured grid, or each bulk interval shrunk by `trim`
/// and stepped by `step`.
pub fn profile_grid(config: &ExperimentConfig, theory: &Theory) -> Vec<f64> {
    match config.run.grid {
        Some(g) => g.points(),
        None => theory
            .interior(config.edge_trim())
            .iter()
            .flat_map(|i| GridSpec { lo: i.lo, hi: i.hi, step: config.run.grid_step }.points())
            .collect(),
    }
}

fn widest(support: &[Interval]) -> Option<Interval> {
    support
        .iter()
        .copied()
        .max_by(|a, b| (a.hi - a.lo).total_cmp(&(b.hi - b.lo)))
}

fn diagnostic_grid(config: &ExperimentConfig, theory: &Theory) -> Vec<ComplexPoint> {
    let energies = if config.run.diagnostic.energies.is_empty() {
        widest(theory.support()).map(|i| vec![0.5 * (i.lo + i.hi)]).unwrap_or_default()
    } else {
        config.run.diagnostic.energies.clone()
    };
    energies
        .iter()
        .flat_map(|&e| config.run.diagnostic.etas.iter().map(move |&eta| ComplexPoint::new(e, eta)))
        .collect()
}

/// Everything shared by the seeds of one scenario.
pub struct Prepared {
    pub theory: Theory,
    pub grid: Vec<f64>,
    pub theory_profile: Vec<f64>,
    pub diagnostic_grid: Vec<ComplexPoint>,
    pub window: f64,
}

pub fn prepare(config: &ExperimentConfig) -> anyhow::Result<Prepared> {
    config.validate()?;
    let theory = Theory::for_config(&config.spiked(0)?)?;
    let grid = profile_grid(config, &theory);
    let theory_profile = grid.iter().map(|&x| theory.profile(x).unwrap_or(f64::NAN)).collect();
    let diagnostic_grid = diagnostic_grid(config, &theory);
    Ok(Prepared {
        theory,
        grid,
        theory_profile,
        diagnostic_grid,
        window: config.window(),
    })
}

pub fn analyze_seed(
    config: &ExperimentConfig,
    prepared: &Prepared,
    seed: u64,
) -> anyhow::Result<(SeedResult, SeedArtifacts)> {
    let realized = sample(&config.spiked(seed)?)?;
    let measure = spectral_measure_of_matrix(&realized.matrix, &realized.spike_direction)?;
    drop(realized);
    let theory = &prepared.theory;
    let clusters: Vec<Cluster> = extract_outliers(&measure, theory.support(), config.run.margin)?
        .into_iter()
        .map(|c| Cluster { location: c.location, weight: c.weight })
        .collect();
    let matched = theory.outlier()?.and_then(|o| {
        clusters
            .iter()
            .copied()
            .min_by(|a, b| (a.location - o.location).abs().total_cmp(&(b.location - o.location).abs()))
    });
    let mut profile = windowed_profile(&measure, &prepared.grid, prepared.window)?;
    profile.theory = Some(prepared.theory_profile.clone());
    let sup = profile.sup_error(f64::NEG_INFINITY, f64::INFINITY);
    let diagnostic = local_law_diagnostic(
        &measure,
        &SpikedLimit(theory),
        &BulkLimit(theory),
        &prepared.diagnostic_grid,
        config.model.n,
        config.run.diagnostic.tau,
    )?;
    let result = SeedResult {
        seed,
        error: None,
        largest_eigenvalue: measure.eigenvalues().first().copied(),
        smallest_eigenvalue: measure.eigenvalues().last().copied(),
        weight_sum: Some(measure.total_mass()),
        outliers: clusters,
        matched_outlier: matched,
        max_weight: measure.weights().iter().copied().reduce(f64::max),
        profile_sup_error: sup,
        local_law_max_ratio: (!diagnostic.points.is_empty()).then(|| diagnostic.max_ratio()),
    };
    Ok((result, SeedArtifacts { measure, profile, diagnostic }))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.reduce(f64::max)
}

pub fn run_scenario(scenario: &Scenario) -> anyhow::Result<ComparisonReport> {
    let config = &scenario.config;
    let prepared = prepare(config)?;
    let outcomes: Vec<(SeedResult, Option<SeedArtifacts>)> = config
        .run
        .seeds
        .par_iter()
        .map(|&seed| match analyze_seed(config, &prepared, seed) {
            Ok((r, a)) => (r, Some(a)),
            Err(e) => {
                log::warn!("scenario {} seed {seed}: {e:#}", scenario.id);
                (SeedResult::failed(seed, &e), None)
            }
        })
        .collect();

    let theory = &prepared.theory;
    let tol = &config.tolerances;
    let theory_outlier = theory.outlier()?.map(|o| Cluster { location: o.location, weight: o.mass });
    let seeds: Vec<SeedResult> = outcomes.iter().map(|(r, _)| r.clone()).collect();
    let ok: Vec<&SeedResult> = seeds.iter().filter(|s| s.error.is_none()).collect();
    let mean_location = mean(ok.iter().filter_map(|s| s.matched_outlier.map(|c| c.location)));
    let mean_mass = mean(ok.iter().filter_map(|s| s.matched_outlier.map(|c| c.weight)));

    let mut checks = vec![Check::new(
        "failed_seeds",
        "none",
        (seeds.len() - ok.len()) as f64,
        0.0,
        0.0,
    )];
    match theory_outlier {
        Some(o) => {
            let missing = ok.iter().filter(|s| s.matched_outlier.is_none()).count();
            checks.push(Check::new("seeds_without_outlier", "none", missing as f64, 0.0, 0.0));
            checks.push(Check::new(
                "outlier_location",
                "outlier_location",
                mean_location.unwrap_or(f64::NAN),
                o.location,
                tol.outlier_location,
            ));
            checks.push(Check::new(
                "outlier_mass",
                "outlier_mass",
                mean_mass.unwrap_or(f64::NAN),
                o.weight,
                tol.outlier_mass,
            ));
        }
        None => {
            let most = ok.iter().map(|s| s.outliers.len()).max().unwrap_or(0);
            checks.push(Check::new("spurious_outliers", "none", most as f64, 0.0, 0.0));
        }
    }
    if let Some(e) = max_of(ok.iter().filter_map(|s| s.profile_sup_error)) {
        checks.push(Check::new("profile_sup_error", "profile_sup_error", e, 0.0, tol.profile_sup_error));
    }
    if let Some(r) = max_of(ok.iter().filter_map(|s| s.local_law_max_ratio)) {
        checks.push(Check::new("local_law_ratio", "local_law_ratio", r, 0.0, tol.local_law_ratio));
    }
    let passed = checks.iter().all(|c| c.passed);

    let report = ComparisonReport {
        scenario: scenario.id.clone(),
        model: match config.model() {
            Model::Additive => "additive",
            Model::Multiplicative => "multiplicative",
        },
        n: config.model.n,
        theta: config.model.theta,
        alpha: (config.model() == Model::Multiplicative).then(|| theory.alpha()),
        window_half_width: prepared.window,
        support: theory.support().iter().map(|i| [i.lo, i.hi]).collect(),
        theory_outlier,
        seeds,
        mean_outlier_location: mean_location,
        mean_outlier_mass: mean_mass,
        checks,
        passed,
    };
    if let Some(dir) = &scenario.out_dir {
        write_outputs(&dir.join(&scenario.id), &report, &outcomes)?;
    }
    Ok(report)
}

fn create(path: &Path) -> anyhow::Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn write_outputs(
    dir: &Path,
    report: &ComparisonReport,
    outcomes: &[(SeedResult, Option<SeedArtifacts>)],
) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (r, artifacts) in outcomes {
        let Some(a) = artifacts else { continue };
        let seed_dir = dir.join(format!("seed-{}", r.seed));
        fs::create_dir_all(&seed_dir)?;
        formats::write_spectral_measure(create(&seed_dir.join("spectrum.csv"))?, &a.measure)?;
        formats::write_profile(create(&seed_dir.join("profile.csv"))?, &a.profile)?;
        formats::write_diagnostic(create(&seed_dir.join("diagnostic.csv"))?, &a.diagnostic)?;
    }
    formats::write_json(create(&dir.join("report.json"))?, report)
}

/// Runs scenarios concurrently; results come back sorted by scenario id.
pub fn run_scenarios(scenarios: &[Scenario]) -> Vec<(String, anyhow::Result<ComparisonReport>)> {
    let mut out: Vec<(String, anyhow::Result<ComparisonReport>)> = scenarios
        .par_iter()
        .map(|s| (s.id.clone(), run_scenario(s)))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}
