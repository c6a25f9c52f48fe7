//! Limit predictions for a sampled configuration, from closed forms when the
//! base measure is `δ_0` (additive) or `δ_1` (multiplicative) and from the
//! fixed-point solvers otherwise.

use spikelab_core::analytic::{
    find_outlier_additive_with_support, find_outlier_multiplicative_with_support,
    FreeAdditiveSolution, FreeMultiplicativeSolution, Interval, Outlier, SolverSettings,
    SpikedAdditive, SpikedMultiplicative,
};
use spikelab_core::closed_forms::{
    marchenko_pastur_stieltjes, mp_outlier_exists, mp_outlier_location, mp_outlier_mass,
    overlap_profile_additive, overlap_profile_multiplicative, semicircle_stieltjes,
    spiked_mp_law, spiked_semicircle_law, Model, RankOneLaw,
};
use spikelab_core::measures::{Atom, AtomicMeasure, ComplexPoint, Stieltjes};
use spikelab_core::sampler::SpikedModelConfig;
use spikelab_core::Result;

type C64 = ComplexPoint;

#[derive(Debug, Clone)]
enum Limit {
    Closed(RankOneLaw),
    Additive(SpikedAdditive, FreeAdditiveSolution),
    Multiplicative(SpikedMultiplicative, FreeMultiplicativeSolution),
}

/// Limit laws attached to one configuration. The bulk support is computed
/// once at construction.
#[derive(Debug, Clone)]
pub struct Theory {
    model: Model,
    theta: f64,
    alpha: f64,
    limit: Limit,
    support: Vec<Interval>,
}

fn is_dirac_at(base: &AtomicMeasure, x: f64) -> bool {
    matches!(base.atoms(), [a] if a.location == x)
}

impl Theory {
    /// For the multiplicative model `α = m/n` of the realized matrix.
    pub fn for_config(config: &SpikedModelConfig) -> Result<Self> {
        let alpha = match config.model {
            Model::Additive => f64::NAN,
            Model::Multiplicative => config.alpha()?,
        };
        Self::new(config.model, config.theta, alpha, config.base.clone())
    }

    pub fn new(model: Model, theta: f64, alpha: f64, base: AtomicMeasure) -> Result<Self> {
        let settings = SolverSettings::default();
        let (limit, mut support) = match model {
            Model::Additive if is_dirac_at(&base, 0.0) => {
                let law = spiked_semicircle_law(theta);
                let s = vec![Interval { lo: law.support.0, hi: law.support.1 }];
                (Limit::Closed(law), s)
            }
            Model::Multiplicative if is_dirac_at(&base, 1.0) => {
                let law = spiked_mp_law(alpha, theta)?;
                let s = vec![Interval { lo: law.support.0, hi: law.support.1 }];
                (Limit::Closed(law), s)
            }
            Model::Additive => {
                let bulk = FreeAdditiveSolution::new(base, settings);
                let s = bulk.support()?;
                (Limit::Additive(SpikedAdditive::new(theta, bulk.clone()), bulk), s)
            }
            Model::Multiplicative => {
                let bulk = FreeMultiplicativeSolution::new(base, alpha, settings)?;
                let s = bulk.support()?;
                (
                    Limit::Multiplicative(SpikedMultiplicative::new(theta, bulk.clone())?, bulk),
                    s,
                )
            }
        };
        // With fewer columns than rows the covariance matrix has a kernel;
        // its zero eigenvalues belong to the bulk, not to the outliers.
        if model == Model::Multiplicative && alpha < 1.0 {
            support.insert(0, Interval { lo: 0.0, hi: 0.0 });
        }
        Ok(Self {
            model,
            theta,
            alpha,
            limit,
            support,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `NaN` for the additive model.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.limit, Limit::Closed(_))
    }

    pub fn support(&self) -> &[Interval] {
        &self.support
    }

    /// Support intervals with `trim` removed at each end; degenerate ones
    /// are dropped.
    pub fn interior(&self, trim: f64) -> Vec<Interval> {
        self.support
            .iter()
            .map(|i| Interval { lo: i.lo + trim, hi: i.hi - trim })
            .filter(|i| i.lo < i.hi)
            .collect()
    }

    /// Limit of the averaged square projection at the bulk location `x`.
    pub fn profile(&self, x: f64) -> Result<f64> {
        match &self.limit {
            Limit::Closed(law) => match law.model {
                Model::Additive => overlap_profile_additive(self.theta, x),
                Model::Multiplicative => overlap_profile_multiplicative(self.alpha, self.theta, x),
            },
            Limit::Additive(_, bulk) => bulk.spiked_ratio(self.theta, x),
            Limit::Multiplicative(_, bulk) => bulk.spiked_ratio(self.theta, x),
        }
    }

    /// Predicted outlier and its mass in the spike direction.
    pub fn outlier(&self) -> Result<Option<Outlier>> {
        Ok(match &self.limit {
            Limit::Closed(law) => match law.model {
                Model::Additive => (self.theta.abs() > 1.0).then(|| Outlier {
                    location: self.theta + 1.0 / self.theta,
                    mass: 1.0 - 1.0 / (self.theta * self.theta),
                }),
                Model::Multiplicative => mp_outlier_exists(self.alpha, self.theta).then(|| Outlier {
                    location: mp_outlier_location(self.alpha, self.theta),
                    mass: mp_outlier_mass(self.alpha, self.theta),
                }),
            },
            Limit::Additive(_, bulk) => {
                find_outlier_additive_with_support(self.theta, bulk, &self.support)?.outlier
            }
            Limit::Multiplicative(_, bulk) => {
                let positive: Vec<Interval> =
                    self.support.iter().copied().filter(|i| i.hi > 0.0).collect();
                find_outlier_multiplicative_with_support(self.theta, bulk, &positive)?.outlier
            }
        })
    }

    /// Transform of the spiked limit law `⟨v₁, (M − z)^{-1} v₁⟩`.
    pub fn spiked_transform(&self, z: C64) -> Result<C64> {
        match &self.limit {
            Limit::Closed(law) => Ok(law.stieltjes(z)),
            Limit::Additive(s, _) => s.eval(z),
            Limit::Multiplicative(s, _) => s.eval(z),
        }
    }

    /// Transform of the bulk law (`μ_sc ⊞ μ_A` or `μ_α ⊠ μ_Σ`).
    pub fn bulk_transform(&self, z: C64) -> Result<C64> {
        match &self.limit {
            Limit::Closed(law) => Ok(match law.model {
                Model::Additive => semicircle_stieltjes(z),
                Model::Multiplicative => marchenko_pastur_stieltjes(self.alpha, z),
            }),
            Limit::Additive(_, bulk) => bulk.eval(z),
            Limit::Multiplicative(_, bulk) => bulk.eval(z),
        }
    }

    /// Density of the absolutely continuous part of the spiked law.
    pub fn spiked_density(&self, x: f64) -> Result<f64> {
        match &self.limit {
            Limit::Closed(law) => Ok(law.density(x)),
            Limit::Additive(s, _) => s.boundary_density(x),
            Limit::Multiplicative(s, _) => s.boundary_density(x),
        }
    }

    /// Atoms of the spiked law: the outlier and, for closed forms, the atom
    /// at zero of the rank-deficient covariance model.
    pub fn spiked_atoms(&self) -> Result<Vec<Atom>> {
        match &self.limit {
            Limit::Closed(law) => Ok(law.atoms.clone()),
            _ => Ok(self
                .outlier()?
                .map(|o| Atom { location: o.location, weight: o.mass })
                .into_iter()
                .collect()),
        }
    }
}

/// Stieltjes evaluator adapter for the spiked limit transform.
pub struct SpikedLimit<'a>(pub &'a Theory);
/// Stieltjes evaluator adapter for the bulk limit transform.
pub struct BulkLimit<'a>(pub &'a Theory);

impl Stieltjes for SpikedLimit<'_> {
    fn eval(&self, z: C64) -> Result<C64> {
        self.0.spiked_transform(z)
    }
    fn source(&self) -> spikelab_core::measures::StieltjesSource {
        if self.0.is_closed_form() {
            spikelab_core::measures::StieltjesSource::ClosedForm
        } else {
            spikelab_core::measures::StieltjesSource::FixedPoint
        }
    }
}

impl Stieltjes for BulkLimit<'_> {
    fn eval(&self, z: C64) -> Result<C64> {
        self.0.bulk_transform(z)
    }
    fn source(&self) -> spikelab_core::measures::StieltjesSource {
        SpikedLimit(self.0).source()
    }
}
