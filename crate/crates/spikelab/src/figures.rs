//! Data behind the overlap-profile panels: a single matrix per panel for
//! panels 1x and 2x, ten pooled matrices with narrower windows for panels 3x.

use std::fs;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use spikelab_core::overlap::{pooled_profile, spectral_measure_of_matrix};
use spikelab_core::sampler::sample;

use crate::config::{ExperimentConfig, GridSpec, ModelKind, WindowScale};
use crate::formats;
use crate::theory::Theory;

#[derive(Debug, Clone)]
pub struct FigurePanel {
    pub id: &'static str,
    pub config: ExperimentConfig,
}

#[allow(clippy::too_many_arguments)]
fn panel(
    id: &'static str,
    kind: ModelKind,
    n: usize,
    columns: Option<usize>,
    theta: f64,
    seeds: Vec<u64>,
    scale: WindowScale,
    exponent: f64,
) -> FigurePanel {
    let mut c = ExperimentConfig::default();
    c.model.kind = kind;
    c.model.n = n;
    c.model.columns = columns;
    c.model.theta = theta;
    c.run.seeds = seeds;
    c.run.window_scale = scale;
    c.run.window_exponent = exponent;
    FigurePanel { id, config: c }
}

/// All panels. `n` rescales every panel, keeping `m/n` fixed.
pub fn panels(n: Option<usize>) -> Vec<FigurePanel> {
    let size = |default: usize| n.unwrap_or(default);
    let cols = |default_n: usize, alpha: usize| Some(alpha * size(default_n));
    let ten: Vec<u64> = (0..10).collect();
    vec![
        panel("1a", ModelKind::Additive, size(3000), None, 2.0, vec![0], WindowScale::Sqrt, 0.1),
        panel("1b", ModelKind::Additive, size(3000), None, -4.0, vec![0], WindowScale::Sqrt, 0.1),
        panel("2a", ModelKind::Multiplicative, size(2000), cols(2000, 4), 2.0, vec![0], WindowScale::Sqrt, 0.1),
        panel("2b", ModelKind::Multiplicative, size(2000), cols(2000, 2), 2.0, vec![0], WindowScale::Sqrt, 0.1),
        panel("3a", ModelKind::Multiplicative, size(2000), cols(2000, 4), 2.0, ten.clone(), WindowScale::Linear, 0.3),
        panel("3b", ModelKind::Multiplicative, size(3000), cols(3000, 4), 2.0, ten, WindowScale::Linear, 0.2),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelSummary {
    pub id: String,
    pub n: usize,
    pub theta: f64,
    pub alpha: Option<f64>,
    pub matrices: usize,
    pub window_half_width: f64,
    /// Over the bulk minus the default edge trim.
    pub interior_sup_error: Option<f64>,
    pub file: String,
}

/// Samples the panel, writes `figure-<id>.csv` (profile over the open bulk)
/// into `out_dir` and returns its summary.
pub fn generate(panel: &FigurePanel, out_dir: &Path) -> anyhow::Result<PanelSummary> {
    let config = &panel.config;
    config.validate()?;
    let theory = Theory::for_config(&config.spiked(0)?)?;
    let step = config.run.grid_step;
    let grid: Vec<f64> = theory
        .interior(step)
        .iter()
        .flat_map(|i| GridSpec { lo: i.lo, hi: i.hi, step }.points())
        .collect();
    let measures = config
        .run
        .seeds
        .par_iter()
        .map(|&seed| {
            let r = sample(&config.spiked(seed)?)?;
            Ok(spectral_measure_of_matrix(&r.matrix, &r.spike_direction)?)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let window = config.window();
    let profile = pooled_profile(&measures, &grid, window)?
        .with_theory(|x| theory.profile(x).unwrap_or(f64::NAN));
    let trim = config.edge_trim();
    let interior_sup_error = theory
        .interior(trim)
        .iter()
        .filter_map(|i| profile.sup_error(i.lo, i.hi))
        .reduce(f64::max);

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let file = format!("figure-{}.csv", panel.id);
    let path = out_dir.join(&file);
    formats::write_profile(
        fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        &profile,
    )?;
    Ok(PanelSummary {
        id: panel.id.into(),
        n: config.model.n,
        theta: config.model.theta,
        alpha: (config.model.kind == ModelKind::Multiplicative).then(|| theory.alpha()),
        matrices: measures.len(),
        window_half_width: window,
        interior_sup_error,
        file,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_catalogue() {
        let p = panels(None);
        assert_eq!(p.len(), 6);
        assert_eq!(p[2].config.model.columns, Some(8000));
        assert_eq!(p[5].config.model.columns, Some(12000));
        assert_eq!(p[4].config.run.seeds.len(), 10);
        let small = panels(Some(100));
        assert_eq!(small[3].config.model.columns, Some(200));
    }

    #[test]
    fn small_panel_writes_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = &panels(Some(200))[0];
        let s = generate(p, dir.path()).unwrap();
        assert_eq!(s.matrices, 1);
        let rows = formats::read_profile(fs::File::open(dir.path().join(&s.file)).unwrap()).unwrap();
        assert!(rows.len() > 300);
        assert!(rows.iter().all(|r| r.x > -2.0 && r.x < 2.0));
    }
}
