//! Experiment configuration, read from TOML.
//!
//! ```toml
//! [model]
//! kind = "multiplicative"      # or "additive"
//! n = 2000
//! theta = 2.0
//! alpha = 4.0                  # or `columns = 8000`; multiplicative only
//! entry_law = "gaussian"       # "rademacher", "uniform"
//! base = [{ location = 1.0, weight = 1.0 }]
//!
//! [run]
//! seeds = [0, 1, 2, 3, 4]
//! window_exponent = 0.1
//! window_scale = "sqrt"        # half-width n^e/√n; "linear" gives n^e/n
//! grid = { lo = 1.4, hi = 8.6, step = 0.01 }
//! edge_trim = 0.4
//! margin = 0.1
//! diagnostic = { energies = [5.0], etas = [0.2, 0.1, 0.05, 0.025], tau = 0.1 }
//!
//! [tolerances]
//! outlier_location = 0.05
//! outlier_mass = 0.05
//! profile_sup_error = 0.15
//! local_law_ratio = 5.0
//! ```
//!
//! Every field is optional. A missing `base` means `δ_0` (additive) or `δ_1`
//! (multiplicative); a missing `grid` covers the predicted bulk minus
//! `edge_trim` at each edge.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use spikelab_core::closed_forms::Model;
use spikelab_core::measures::AtomicMeasure;
use spikelab_core::overlap::{window_half_width, DEFAULT_OUTLIER_MARGIN, DEFAULT_TAU, DEFAULT_WINDOW_EXPONENT};
use spikelab_core::sampler::{Aspect, EntryLaw, SpikedModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Additive,
    Multiplicative,
}

impl From<ModelKind> for Model {
    fn from(k: ModelKind) -> Self {
        match k {
            ModelKind::Additive => Model::Additive,
            ModelKind::Multiplicative => Model::Multiplicative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EntryLawName {
    #[default]
    Gaussian,
    Rademacher,
    Uniform,
}

impl From<EntryLawName> for EntryLaw {
    fn from(l: EntryLawName) -> Self {
        match l {
            EntryLawName::Gaussian => EntryLaw::Gaussian,
            EntryLawName::Rademacher => EntryLaw::Rademacher,
            EntryLawName::Uniform => EntryLaw::UniformSqrt3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub location: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub n: usize,
    pub theta: f64,
    pub alpha: Option<f64>,
    pub columns: Option<usize>,
    pub entry_law: EntryLawName,
    pub base: Option<Vec<AtomSpec>>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            kind: ModelKind::Additive,
            n: 1000,
            theta: 2.0,
            alpha: None,
            columns: None,
            entry_law: EntryLawName::Gaussian,
            base: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowScale {
    /// `ε = n^e / √n`.
    #[default]
    Sqrt,
    /// `ε = n^e / n`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticSpec {
    /// Empty means the midpoint of the widest bulk interval.
    pub energies: Vec<f64>,
    pub etas: Vec<f64>,
    pub tau: f64,
}

impl Default for DiagnosticSpec {
    fn default() -> Self {
        Self {
            energies: Vec::new(),
            etas: vec![0.2, 0.1, 0.05, 0.025],
            tau: DEFAULT_TAU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seeds: Vec<u64>,
    pub window_exponent: f64,
    pub window_scale: WindowScale,
    pub grid: Option<GridSpec>,
    /// Distance kept from each bulk edge by the default grid; `None` picks
    /// 0.2 (additive) or 0.4 (multiplicative).
    pub edge_trim: Option<f64>,
    pub grid_step: f64,
    pub margin: f64,
    pub diagnostic: DiagnosticSpec,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seeds: vec![0],
            window_exponent: DEFAULT_WINDOW_EXPONENT,
            window_scale: WindowScale::Sqrt,
            grid: None,
            edge_trim: None,
            grid_step: 0.01,
            margin: DEFAULT_OUTLIER_MARGIN,
            diagnostic: DiagnosticSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub outlier_location: f64,
    pub outlier_mass: f64,
    pub profile_sup_error: f64,
    pub local_law_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            outlier_location: 0.05,
            outlier_mass: 0.05,
            profile_sup_error: 0.15,
            local_law_ratio: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub run: RunSection,
    pub tolerances: Tolerances,
}

/// Command-line values that replace configuration entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<ModelKind>,
    pub n: Option<usize>,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(k) = o.model {
            self.model.kind = k;
        }
        if let Some(n) = o.n {
            self.model.n = n;
        }
        if let Some(t) = o.theta {
            self.model.theta = t;
        }
        if let Some(a) = o.alpha {
            self.model.alpha = Some(a);
            self.model.columns = None;
        }
        if let Some(s) = o.seed {
            self.run.seeds = vec![s];
        }
    }

    pub fn model(&self) -> Model {
        self.model.kind.into()
    }

    pub fn base(&self) -> anyhow::Result<AtomicMeasure> {
        Ok(match &self.model.base {
            Some(atoms) => AtomicMeasure::new(atoms.iter().map(|a| (a.location, a.weight)))?,
            None => AtomicMeasure::dirac(match self.model.kind {
                ModelKind::Additive => 0.0,
                ModelKind::Multiplicative => 1.0,
            }),
        })
    }

    pub fn aspect(&self) -> anyhow::Result<Aspect> {
        Ok(match (self.model.columns, self.model.alpha) {
            (Some(_), Some(_)) => bail!("give either `alpha` or `columns`, not both"),
            (Some(m), None) => Aspect::Columns(m),
            (None, Some(a)) => Aspect::Ratio(a),
            (None, None) => Aspect::Ratio(1.0),
        })
    }

    /// Sampler configuration for one seed.
    pub fn spiked(&self, seed: u64) -> anyhow::Result<SpikedModelConfig> {
        Ok(SpikedModelConfig {
            model: self.model(),
            n: self.model.n,
            aspect: self.aspect()?,
            theta: self.model.theta,
            base: self.base()?,
            entry_law: self.model.entry_law.into(),
            seed,
        })
    }

    pub fn window(&self) -> f64 {
        let n = self.model.n;
        match self.run.window_scale {
            WindowScale::Sqrt => window_half_width(n, self.run.window_exponent),
            WindowScale::Linear => (n as f64).powf(self.run.window_exponent) / n as f64,
        }
    }

    pub fn edge_trim(&self) -> f64 {
        self.run.edge_trim.unwrap_or(match self.model.kind {
            ModelKind::Additive => 0.2,
            ModelKind::Multiplicative => 0.4,
        })
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.run.seeds.is_empty() {
            return Err(spikelab_core::Error::Config("seed list is empty".into()).into());
        }
        if !(self.run.grid_step > 0.0) || self.run.grid.is_some_and(|g| !(g.step > 0.0 && g.hi >= g.lo)) {
            return Err(spikelab_core::Error::Config("grid step must be positive".into()).into());
        }
        if !(self.run.margin > 0.0) {
            return Err(spikelab_core::Error::Config("margin must be positive".into()).into());
        }
        // Surfaces aspect, base and diagonal problems before any sampling.
        self.spiked(0)?.diagonal()?;
        if self.model() == Model::Multiplicative {
            self.spiked(0)?.columns()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"
            [model]
            kind = "multiplicative"
            n = 2000
            theta = 2.0
            columns = 8000
            entry_law = "rademacher"
            base = [{ location = 1.0, weight = 1.0 }]

            [run]
            seeds = [3, 4]
            window_scale = "linear"
            window_exponent = 0.3
            grid = { lo = 1.4, hi = 8.6, step = 0.1 }

            [tolerances]
            profile_sup_error = 0.2
        "#;
        let c = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(c.model.kind, ModelKind::Multiplicative);
        assert_eq!(c.aspect().unwrap(), Aspect::Columns(8000));
        assert_eq!(c.run.seeds, vec![3, 4]);
        assert_eq!(c.run.grid.unwrap().points().len(), 73);
        assert!((c.window() - 2000f64.powf(0.3) / 2000.0).abs() < 1e-15);
        assert_eq!(c.tolerances.outlier_mass, 0.05);
        assert_eq!(c.tolerances.profile_sup_error, 0.2);
        c.validate().unwrap();
    }

    #[test]
    fn overrides_and_errors() {
        let mut c = ExperimentConfig::default();
        c.apply(&Overrides {
            model: Some(ModelKind::Multiplicative),
            alpha: Some(4.0),
            seed: Some(9),
            ..Default::default()
        });
        assert_eq!(c.run.seeds, vec![9]);
        assert_eq!(c.base().unwrap(), AtomicMeasure::dirac(1.0));
        c.run.seeds.clear();
        let err = c.validate().unwrap_err();
        assert!(matches!(
            err.downcast_ref::<spikelab_core::Error>(),
            Some(spikelab_core::Error::Config(_))
        ));
        assert!(ExperimentConfig::from_toml("[model]\nbogus = 1").is_err());
    }
}
