//! Seeded sampling of spiked Wigner and Wishart matrices.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`; Gaussian entries
//! use the ziggurat transform of `rand_distr::StandardNormal`. Both are
//! platform independent, so a configuration and seed fix the matrix bit for
//! bit. Wigner entries are drawn row by row over the upper triangle
//! (diagonal included), Wishart entries of `X` row by row.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::closed_forms::Model;
use crate::eig::SymmetricMatrix;
use crate::error::{Error, Result};
use crate::measures::AtomicMeasure;

/// Law of the centered, unit-variance matrix entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntryLaw {
    #[default]
    Gaussian,
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    UniformSqrt3,
}

impl EntryLaw {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            EntryLaw::Gaussian => rng.sample(StandardNormal),
            EntryLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryLaw::UniformSqrt3 => {
                let r = 3.0f64.sqrt();
                rng.random_range(-r..=r)
            }
        }
    }
}

/// Number of columns of `X` in the multiplicative model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aspect {
    Columns(usize),
    /// `m = round(α·n)`.
    Ratio(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikedModelConfig {
    pub model: Model,
    pub n: usize,
    /// Ignored by the additive model.
    pub aspect: Aspect,
    pub theta: f64,
    /// Law approximated by the non-spiked eigenvalues `γ_2, …, γ_n`.
    pub base: AtomicMeasure,
    pub entry_law: EntryLaw,
    pub seed: u64,
}

impl SpikedModelConfig {
    pub fn additive(n: usize, theta: f64, base: AtomicMeasure, seed: u64) -> Self {
        Self {
            model: Model::Additive,
            n,
            aspect: Aspect::Ratio(1.0),
            theta,
            base,
            entry_law: EntryLaw::Gaussian,
            seed,
        }
    }

    pub fn multiplicative(n: usize, aspect: Aspect, theta: f64, base: AtomicMeasure, seed: u64) -> Self {
        Self {
            model: Model::Multiplicative,
            n,
            aspect,
            theta,
            base,
            entry_law: EntryLaw::Gaussian,
            seed,
        }
    }

    pub fn with_entry_law(mut self, law: EntryLaw) -> Self {
        self.entry_law = law;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn columns(&self) -> Result<usize> {
        let m = match self.aspect {
            Aspect::Columns(m) => m,
            Aspect::Ratio(alpha) => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::Config(format!("aspect ratio {alpha} must be positive")));
                }
                (alpha * self.n as f64).round() as usize
            }
        };
        if m == 0 {
            return Err(Error::Config("X needs at least one column".into()));
        }
        Ok(m)
    }

    /// `m / n`.
    pub fn alpha(&self) -> Result<f64> {
        Ok(self.columns()? as f64 / self.n as f64)
    }

    /// Diagonal of `A_n` or `Σ_n`: `θ` first, then the base atoms in
    /// increasing order.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        if self.n < 2 {
            return Err(Error::Config(format!("n = {} must be at least 2", self.n)));
        }
        if !self.theta.is_finite() {
            return Err(Error::Config(format!("spike {} is not finite", self.theta)));
        }
        let mut diag = Vec::with_capacity(self.n);
        diag.push(self.theta);
        diag.extend(base_slots(&self.base, self.n - 1));
        Ok(diag)
    }
}

/// Spreads `slots` diagonal positions over the atoms of `base` by the
/// largest-remainder method (ties go to the heavier atom, then the lower
/// location).
pub fn base_slots(base: &AtomicMeasure, slots: usize) -> Vec<f64> {
    let atoms = base.atoms();
    let quotas: Vec<f64> = atoms.iter().map(|a| a.weight * slots as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&i, &j| {
        let (ri, rj) = (quotas[i] - quotas[i].floor(), quotas[j] - quotas[j].floor());
        rj.total_cmp(&ri)
            .then(atoms[j].weight.total_cmp(&atoms[i].weight))
            .then(i.cmp(&j))
    });
    // Flooring loses less than one slot per atom.
    let left = slots.saturating_sub(assigned);
    for &i in order.iter().take(left) {
        counts[i] += 1;
    }
    let mut out = Vec::with_capacity(slots);
    for (atom, &c) in atoms.iter().zip(&counts) {
        out.extend(core::iter::repeat_n(atom.location, c));
    }
    out.truncate(slots);
    out
}

/// A sampled matrix together with the spike direction and its configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedModel {
    pub matrix: SymmetricMatrix,
    /// `e₁`, the eigenvector of the spike in `A_n` or `Σ_n`.
    pub spike_direction: Vec<f64>,
    pub config: SpikedModelConfig,
}

fn first_basis_vector(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

/// `W = X/√n + A` with `A = diag(θ, γ_2, …, γ_n)`.
pub fn sample_wigner(config: &SpikedModelConfig) -> Result<RealizedModel> {
    if config.model != Model::Additive {
        return Err(Error::Config("sample_wigner needs the additive model".into()));
    }
    let diag = config.diagonal()?;
    let n = config.n;
    let scale = 1.0 / (n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut matrix = SymmetricMatrix::from_upper(n, |_, _| scale * config.entry_law.draw(&mut rng));
    for (i, d) in diag.iter().enumerate() {
        matrix.set(i, i, matrix.get(i, i) + d);
    }
    Ok(RealizedModel {
        matrix,
        spike_direction: first_basis_vector(n),
        config: config.clone(),
    })
}

/// `S = Σ^{1/2} X Xᵀ Σ^{1/2} / n` with `X` of size `n × m`.
pub fn sample_wishart(config: &SpikedModelConfig) -> Result<RealizedModel> {
    if config.model != Model::Multiplicative {
        return Err(Error::Config("sample_wishart needs the multiplicative model".into()));
    }
    let diag = config.diagonal()?;
    if let Some(g) = diag.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::Config(format!("covariance eigenvalue {g} is negative")));
    }
    let n = config.n;
    let m = config.columns()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut y = vec![0.0; n * m];
    for (i, row) in y.chunks_exact_mut(m).enumerate() {
        let root = diag[i].sqrt();
        for x in row.iter_mut() {
            *x = root * config.entry_law.draw(&mut rng);
        }
    }
    let mut s = vec![0.0; n * n];
    // SAFETY: y is n×m row-major and s is n×n row-major; the strides match.
    unsafe {
        matrixmultiply::dgemm(
            n,
            m,
            n,
            1.0 / n as f64,
            y.as_ptr(),
            m as isize,
            1,
            y.as_ptr(),
            1,
            m as isize,
            0.0,
            s.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    drop(y);
    for i in 0..n {
        for j in 0..i {
            let mid = 0.5 * (s[i * n + j] + s[j * n + i]);
            s[i * n + j] = mid;
            s[j * n + i] = mid;
        }
    }
    Ok(RealizedModel {
        matrix: SymmetricMatrix::from_row_major(n, s)?,
        spike_direction: first_basis_vector(n),
        config: config.clone(),
    })
}

/// Dispatches on `config.model`.
pub fn sample(config: &SpikedModelConfig) -> Result<RealizedModel> {
    match config.model {
        Model::Additive => sample_wigner(config),
        Model::Multiplicative => sample_wishart(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::eigenvalues;

    fn dirac(x: f64) -> AtomicMeasure {
        AtomicMeasure::dirac(x)
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SpikedModelConfig::additive(40, 2.0, dirac(0.0), 9);
        assert_eq!(sample_wigner(&cfg).unwrap(), sample_wigner(&cfg).unwrap());
        assert_ne!(
            sample_wigner(&cfg).unwrap().matrix,
            sample_wigner(&cfg.clone().with_seed(10)).unwrap().matrix
        );
        let cfg = SpikedModelConfig::multiplicative(30, Aspect::Ratio(2.0), 2.0, dirac(1.0), 9);
        assert_eq!(sample_wishart(&cfg).unwrap(), sample_wishart(&cfg).unwrap());
    }

    #[test]
    fn two_by_two_construction() {
        let cfg = SpikedModelConfig::additive(2, 0.0, dirac(0.0), 123);
        let w = sample_wigner(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let draws: Vec<f64> = (0..3).map(|_| EntryLaw::Gaussian.draw(&mut rng)).collect();
        let scale = 1.0 / 2.0f64.sqrt();
        assert_eq!(w.matrix.get(0, 0), draws[0] * scale);
        assert_eq!(w.matrix.get(0, 1), draws[1] * scale);
        assert_eq!(w.matrix.get(1, 0), draws[1] * scale);
        assert_eq!(w.matrix.get(1, 1), draws[2] * scale);
        assert!((w.matrix.trace() - (draws[0] + draws[2]) / 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(w.spike_direction, vec![1.0, 0.0]);
    }

    #[test]
    fn slots_follow_largest_remainder() {
        let base = AtomicMeasure::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let s = base_slots(&base, 5);
        assert_eq!(s, vec![-1.0, -1.0, -1.0, 1.0, 1.0]);
        let base = AtomicMeasure::new([(0.0, 0.2), (1.0, 0.3), (2.0, 0.5)]).unwrap();
        let s = base_slots(&base, 7);
        assert_eq!(s.len(), 7);
        assert_eq!(s.iter().filter(|x| **x == 0.0).count(), 1);
        assert_eq!(s.iter().filter(|x| **x == 1.0).count(), 2);
        assert_eq!(s.iter().filter(|x| **x == 2.0).count(), 4);
        let cfg = SpikedModelConfig::additive(4, 7.0, dirac(0.5), 0);
        assert_eq!(cfg.diagonal().unwrap(), vec![7.0, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn config_errors() {
        let base = AtomicMeasure::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let cfg = SpikedModelConfig::multiplicative(10, Aspect::Ratio(2.0), 1.0, base, 0);
        assert!(matches!(sample_wishart(&cfg), Err(Error::Config(_))));
        let cfg = SpikedModelConfig::multiplicative(10, Aspect::Ratio(2.0), -1.0, dirac(1.0), 0);
        assert!(matches!(sample_wishart(&cfg), Err(Error::Config(_))));
        let cfg = SpikedModelConfig::additive(1, 1.0, dirac(0.0), 0);
        assert!(matches!(sample_wigner(&cfg), Err(Error::Config(_))));
        let cfg = SpikedModelConfig::additive(5, 1.0, dirac(0.0), 0);
        assert!(matches!(sample_wishart(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn zero_covariance_gives_zero_matrix() {
        let cfg = SpikedModelConfig::multiplicative(20, Aspect::Columns(30), 0.0, dirac(0.0), 4);
        let s = sample_wishart(&cfg).unwrap();
        assert!(s.matrix.as_slice().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn wigner_outlier() {
        let cfg = SpikedModelConfig::additive(500, 5.0, dirac(0.0), 1);
        let ev = eigenvalues(&sample_wigner(&cfg).unwrap().matrix).unwrap();
        assert!((ev[0] - 5.2).abs() < 0.2, "{}", ev[0]);
    }

    #[test]
    fn wishart_edges_and_outlier() {
        let cfg = SpikedModelConfig::multiplicative(500, Aspect::Ratio(4.0), 1.0, dirac(1.0), 2);
        let ev = eigenvalues(&sample_wishart(&cfg).unwrap().matrix).unwrap();
        assert!((ev[0] - 9.0).abs() < 0.3, "{}", ev[0]);
        assert!((ev[499] - 1.0).abs() < 0.3, "{}", ev[499]);
        let cfg = SpikedModelConfig::multiplicative(1000, Aspect::Ratio(4.0), 2.0, dirac(1.0), 3);
        let s = sample_wishart(&cfg).unwrap();
        assert!(s.matrix.as_slice().iter().step_by(1001).all(|d| *d >= 0.0));
        let ev = eigenvalues(&s.matrix).unwrap();
        assert!((ev[0] - 10.0).abs() < 0.3, "{}", ev[0]);
        assert!(ev[999] > -1e-10);
    }
}
