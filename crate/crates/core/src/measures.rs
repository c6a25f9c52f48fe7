//! Measures on the real line and the complex-analysis primitives built on them:
//! the upper-half-plane square root, Stieltjes transforms, Stieltjes inversion
//! and moments.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// A point `E + iη` of the closed upper half-plane.
pub type ComplexPoint = Complex64;

/// Tolerance on the total mass of an [`AtomicMeasure`].
pub const ATOMIC_MASS_TOLERANCE: f64 = 1e-12;
/// Atoms closer than this are merged.
pub const ATOM_MERGE_DISTANCE: f64 = 1e-12;
/// Tolerance on the total mass of a [`WeightedSpectralMeasure`].
pub const SPECTRAL_MASS_TOLERANCE: f64 = 1e-8;
/// Largest moment order accepted by [`Moments::moment`].
pub const MAX_MOMENT_ORDER: u32 = 16;

/// Boundary-limit height used for closed-form evaluators.
pub const CLOSED_FORM_ETA: f64 = 1e-8;
/// Default height for evaluators backed by a fixed-point solver.
pub const FIXED_POINT_ETA: f64 = 1e-4;

/// Square root whose values lie in the closed upper half-plane.
///
/// Equal to `sign(Im z)·(|z| + z)/√(2(|z| + Re z))` with `sign(0) = +1`. On the
/// negative real axis the formula degenerates to `0/0`; the value there is the
/// limit from `Im z > 0`, namely `+i√|z|`.
pub fn branch_sqrt(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    // t = |z| + Re z, computed without cancellation when Re z < 0.
    let t = if z.re >= 0.0 {
        r + z.re
    } else {
        z.im * z.im / (r - z.re)
    };
    if t == 0.0 {
        return Complex64::new(0.0, (-z.re).sqrt());
    }
    let root = Complex64::new((0.5 * t).sqrt(), z.im / (2.0 * t).sqrt());
    if z.im < 0.0 {
        -root
    } else {
        root
    }
}

/// Where the values of a [`Stieltjes`] evaluator come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StieltjesSource {
    ClosedForm,
    FixedPoint,
    Empirical,
}

/// A Stieltjes transform `z ↦ ∫ dν(x)/(x − z)` on the upper half-plane.
pub trait Stieltjes {
    fn eval(&self, z: ComplexPoint) -> Result<Complex64>;

    fn source(&self) -> StieltjesSource;

    /// Smallest `Im z` at which [`Stieltjes::eval`] is trusted.
    fn min_imag(&self) -> f64 {
        0.0
    }
}

impl<T: Stieltjes + ?Sized> Stieltjes for &T {
    fn eval(&self, z: ComplexPoint) -> Result<Complex64> {
        (**self).eval(z)
    }
    fn source(&self) -> StieltjesSource {
        (**self).source()
    }
    fn min_imag(&self) -> f64 {
        (**self).min_imag()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Finitely supported probability measure.
///
/// Atoms are kept sorted by location. Zero-weight atoms are dropped and atoms
/// closer than [`ATOM_MERGE_DISTANCE`] are merged at construction, so two
/// measures that agree as measures have identical representations.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut raw: Vec<Atom> = Vec::new();
        for (location, weight) in atoms {
            if !location.is_finite() || !weight.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "non-finite atom ({location}, {weight})"
                )));
            }
            if weight < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "negative weight {weight} at {location}"
                )));
            }
            if weight > 0.0 {
                raw.push(Atom { location, weight });
            }
        }
        let total: f64 = raw.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > ATOMIC_MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        raw.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut merged: Vec<Atom> = Vec::with_capacity(raw.len());
        for atom in raw {
            match merged.last_mut() {
                Some(last) if atom.location - last.location <= ATOM_MERGE_DISTANCE => {
                    last.weight += atom.weight;
                }
                _ => merged.push(atom),
            }
        }
        Ok(Self { atoms: merged })
    }

    pub fn dirac(location: f64) -> Self {
        Self {
            atoms: alloc::vec![Atom {
                location,
                weight: 1.0
            }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn min_location(&self) -> f64 {
        self.atoms[0].location
    }

    pub fn max_location(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].location
    }
}

impl Stieltjes for AtomicMeasure {
    fn eval(&self, z: ComplexPoint) -> Result<Complex64> {
        stieltjes_of_atomic(self, z)
    }
    fn source(&self) -> StieltjesSource {
        StieltjesSource::ClosedForm
    }
}

/// `Σ_k w_k/(x_k − z)`.
///
/// Real `z` is accepted away from the atoms; `z` equal to an atom location is a
/// [`Error::Pole`].
pub fn stieltjes_of_atomic(measure: &AtomicMeasure, z: ComplexPoint) -> Result<Complex64> {
    if z.im < 0.0 {
        return Err(Error::Domain(format!("Im z = {} < 0", z.im)));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for atom in &measure.atoms {
        let gap = Complex64::new(atom.location, 0.0) - z;
        if gap.re == 0.0 && gap.im == 0.0 {
            return Err(Error::Pole(z.re));
        }
        acc += atom.weight / gap;
    }
    Ok(acc)
}

/// Sorted eigenvalues (descending) carrying nonnegative weights of total mass 1.
///
/// With uniform weights this is an empirical spectral measure; with weights
/// `⟨φ_i, v⟩²` it is the spectral measure of the matrix in direction `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSpectralMeasure {
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSpectralMeasure {
    /// Builds the measure, sorting the pairs by eigenvalue (descending).
    pub fn new(eigenvalues: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} eigenvalues but {} weights",
                eigenvalues.len(),
                weights.len()
            )));
        }
        if eigenvalues.is_empty() {
            return Err(Error::InvalidMeasure("empty spectrum".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMeasure(format!("invalid weight {w}")));
        }
        if let Some(l) = eigenvalues.iter().find(|l| !l.is_finite()) {
            return Err(Error::InvalidMeasure(format!("non-finite eigenvalue {l}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SPECTRAL_MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let sorted = eigenvalues.windows(2).all(|w| w[0] >= w[1]);
        if sorted {
            return Ok(Self {
                eigenvalues,
                weights,
            });
        }
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        Ok(Self {
            eigenvalues: order.iter().map(|&i| eigenvalues[i]).collect(),
            weights: order.iter().map(|&i| weights[i]).collect(),
        })
    }

    /// Empirical spectral measure: weight `1/n` on every eigenvalue.
    pub fn uniform(eigenvalues: Vec<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        let w = 1.0 / n as f64;
        Self::new(eigenvalues, alloc::vec![w; n])
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.eigenvalues
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

impl Stieltjes for WeightedSpectralMeasure {
    fn eval(&self, z: ComplexPoint) -> Result<Complex64> {
        stieltjes_of_spectral(self, z)
    }
    fn source(&self) -> StieltjesSource {
        StieltjesSource::Empirical
    }
}

/// `Σ_i w_i/(λ_i − z)` for `Im z > 0`.
pub fn stieltjes_of_spectral(
    measure: &WeightedSpectralMeasure,
    z: ComplexPoint,
) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!(
            "empirical transform needs Im z > 0, got {}",
            z.im
        )));
    }
    Ok(measure
        .iter()
        .map(|(lambda, w)| w / (Complex64::new(lambda, 0.0) - z))
        .sum())
}

/// `Im s(x + iη)/π`, the Stieltjes-inversion estimate of the density at `x`.
pub fn density_from_stieltjes<S: Stieltjes + ?Sized>(s: &S, x: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) || eta < s.min_imag() {
        return Err(Error::Domain(format!(
            "eta = {eta:e} below the evaluator guard {:e}",
            s.min_imag()
        )));
    }
    Ok(s.eval(Complex64::new(x, eta))?.im / core::f64::consts::PI)
}

pub trait Moments {
    /// `Σ w_i λ_i^k` for `k ≤ 16`.
    fn moment(&self, k: u32) -> Result<f64>;
}

fn check_order(k: u32) -> Result<()> {
    if k > MAX_MOMENT_ORDER {
        return Err(Error::Domain(format!(
            "moment order {k} exceeds {MAX_MOMENT_ORDER}"
        )));
    }
    Ok(())
}

impl Moments for WeightedSpectralMeasure {
    fn moment(&self, k: u32) -> Result<f64> {
        check_order(k)?;
        Ok(self.iter().map(|(l, w)| w * l.powi(k as i32)).sum())
    }
}

impl Moments for AtomicMeasure {
    fn moment(&self, k: u32) -> Result<f64> {
        check_order(k)?;
        Ok(self
            .atoms
            .iter()
            .map(|a| a.weight * a.location.powi(k as i32))
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sqrt_examples() {
        assert!((branch_sqrt(c(4.0, 0.0)) - c(2.0, 0.0)).norm() < 1e-15);
        let neg = branch_sqrt(c(-8.0, 0.0));
        assert!((neg - c(0.0, 8f64.sqrt())).norm() < 1e-14);
        // limit from the upper half-plane
        let near = branch_sqrt(c(-8.0, 1e-9));
        assert!((near - neg).norm() < 1e-9);
        assert!((branch_sqrt(c(0.0, 2.0)) - c(1.0, 1.0)).norm() < 1e-15);
        assert_eq!(branch_sqrt(c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn sqrt_lower_half_plane_maps_up() {
        let r = branch_sqrt(c(-3.0, -1e-12));
        assert!(r.im > 0.0);
        assert!((r * r - c(-3.0, -1e-12)).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn sqrt_squares_back(re in -1e6f64..1e6, im in -1e6f64..1e6) {
            let z = c(re, im);
            let r = branch_sqrt(z);
            prop_assert!((r * r - z).norm() <= 1e-12 * z.norm().max(1e-300));
            prop_assert!(r.im >= 0.0);
        }

        #[test]
        fn spectral_transform_maps_upper_half_plane(
            pts in proptest::collection::vec((-10f64..10.0, 0.0f64..1.0), 1..40),
            re in -12f64..12.0,
            im in 1e-6f64..10.0,
        ) {
            let total: f64 = pts.iter().map(|p| p.1).sum::<f64>();
            prop_assume!(total > 1e-3);
            let eig: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let w: Vec<f64> = pts.iter().map(|p| p.1 / total).collect();
            let m = WeightedSpectralMeasure::new(eig, w).unwrap();
            let s = stieltjes_of_spectral(&m, c(re, im)).unwrap();
            prop_assert!(s.im > 0.0);
        }
    }

    #[test]
    fn atomic_construction_merges_and_drops() {
        let m = AtomicMeasure::new([(1.0, 0.25), (0.0, 0.0), (1.0 + 1e-13, 0.25), (-1.0, 0.5)])
            .unwrap();
        assert_eq!(m.atoms().len(), 2);
        assert_eq!(m.atoms()[0].location, -1.0);
        assert!((m.atoms()[1].weight - 0.5).abs() < 1e-15);
        assert!(AtomicMeasure::new([(0.0, 0.5)]).is_err());
        assert!(AtomicMeasure::new([(0.0, 1.5), (1.0, -0.5)]).is_err());
    }

    #[test]
    fn atomic_transform_examples() {
        let s = stieltjes_of_atomic(&AtomicMeasure::dirac(0.0), c(0.0, 1.0)).unwrap();
        assert!((s - c(0.0, 1.0)).norm() < 1e-15);
        let pm = AtomicMeasure::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let s = stieltjes_of_atomic(&pm, c(0.0, 1.0)).unwrap();
        assert!((s - c(0.0, 0.5)).norm() < 1e-15);
        assert_eq!(
            stieltjes_of_atomic(&AtomicMeasure::dirac(2.0), c(2.0, 0.0)),
            Err(Error::Pole(2.0))
        );
    }

    #[test]
    fn spectral_transform_examples() {
        let m = WeightedSpectralMeasure::new(vec![1.0], vec![1.0]).unwrap();
        let s = stieltjes_of_spectral(&m, c(0.0, 1.0)).unwrap();
        assert!((s - c(0.5, 0.5)).norm() < 1e-15);
        let m = WeightedSpectralMeasure::uniform(vec![-1.0, 1.0]).unwrap();
        let s = stieltjes_of_spectral(&m, c(0.0, 2.0)).unwrap();
        assert!((s - c(0.0, 0.4)).norm() < 1e-15);
        assert!(matches!(
            stieltjes_of_spectral(&m, c(0.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn spectral_measure_sorts_descending() {
        let m = WeightedSpectralMeasure::new(vec![1.0, 3.0, 2.0], vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(m.eigenvalues(), &[3.0, 2.0, 1.0]);
        assert_eq!(m.weights(), &[0.3, 0.5, 0.2]);
        assert!(WeightedSpectralMeasure::new(vec![1.0], vec![0.9]).is_err());
    }

    #[test]
    fn moments() {
        let pm = WeightedSpectralMeasure::uniform(vec![-1.0, 1.0]).unwrap();
        assert_eq!(pm.moment(0).unwrap(), 1.0);
        assert_eq!(pm.moment(1).unwrap(), 0.0);
        let d = AtomicMeasure::dirac(3.0);
        assert_eq!(d.moment(2).unwrap(), 9.0);
        assert!(d.moment(17).is_err());
    }

    struct Guarded;
    impl Stieltjes for Guarded {
        fn eval(&self, z: ComplexPoint) -> Result<Complex64> {
            Ok(-1.0 / z)
        }
        fn source(&self) -> StieltjesSource {
            StieltjesSource::FixedPoint
        }
        fn min_imag(&self) -> f64 {
            1e-4
        }
    }

    #[test]
    fn density_respects_guard() {
        assert!(density_from_stieltjes(&Guarded, 0.0, 1e-6).is_err());
        assert!(density_from_stieltjes(&Guarded, 0.0, 1e-3).is_ok());
    }
}
