//! Exact rank-one limit laws: semicircle, Marchenko–Pastur, their spiked
//! versions in the direction of the spike, and the limiting overlap profiles.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::measures::{branch_sqrt, Atom, ComplexPoint, Stieltjes, StieltjesSource};

/// Which perturbation model a law or experiment refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// `W = X/√n + A`.
    Additive,
    /// `S = Σ^{1/2} X Xᵀ Σ^{1/2}/n`.
    Multiplicative,
}

/// Step of the angular grid used by [`RankOneLaw::total_mass`].
pub const MASS_GRID_STEP: f64 = 1e-4;
/// Bulk densities below this make a ratio of densities meaningless.
pub const RATIO_DENOMINATOR_FLOOR: f64 = 1e-8;

pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

/// Bulk edges `((1 − √α)², (1 + √α)²)`.
pub fn mp_edges(alpha: f64) -> (f64, f64) {
    let r = alpha.sqrt();
    ((1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r))
}

/// Absolutely continuous part of the Marchenko–Pastur law with ratio `alpha`.
/// The atom at zero is [`mp_zero_atom`].
pub fn marchenko_pastur_density(alpha: f64, x: f64) -> f64 {
    let (a, b) = mp_edges(alpha);
    if x <= a || x >= b {
        0.0
    } else {
        ((b - x) * (x - a)).sqrt() / (2.0 * PI * x)
    }
}

/// Mass `(1 − α)₊` of the Marchenko–Pastur law at zero.
pub fn mp_zero_atom(alpha: f64) -> f64 {
    (1.0 - alpha).max(0.0)
}

/// `s_sc(z) = (−z + √(z² − 4))/2` with the upper-half-plane root.
#[derive(Debug, Clone, Copy, Default)]
pub struct SemicircleTransform;

pub fn semicircle_stieltjes(z: ComplexPoint) -> Complex64 {
    let r = branch_sqrt(z * z - 4.0);
    let plus = -z + r;
    let minus = -z - r;
    // The two roots multiply to 1; divide by the larger one.
    if plus.norm() >= minus.norm() {
        plus / 2.0
    } else {
        2.0 / minus
    }
}

impl Stieltjes for SemicircleTransform {
    fn eval(&self, z: ComplexPoint) -> crate::error::Result<Complex64> {
        Ok(semicircle_stieltjes(z))
    }
    fn source(&self) -> StieltjesSource {
        StieltjesSource::ClosedForm
    }
}

/// `s_α(z) = (α − z − 1 + √((z − b)(z − a)))/(2z)`.
#[derive(Debug, Clone, Copy)]
pub struct MarchenkoPasturTransform {
    pub alpha: f64,
}

pub fn marchenko_pastur_stieltjes(alpha: f64, z: ComplexPoint) -> Complex64 {
    let (a, b) = mp_edges(alpha);
    let r = branch_sqrt((z - b) * (z - a));
    let base = Complex64::new(alpha - 1.0, 0.0) - z;
    let plus = base + r;
    let minus = base - r;
    // Roots of z s² − (α − 1 − z) s + 1 = 0 multiply to 1/z.
    if plus.norm() >= minus.norm() {
        plus / (2.0 * z)
    } else {
        2.0 / minus
    }
}

impl Stieltjes for MarchenkoPasturTransform {
    fn eval(&self, z: ComplexPoint) -> Result<Complex64> {
        Ok(marchenko_pastur_stieltjes(self.alpha, z))
    }
    fn source(&self) -> StieltjesSource {
        StieltjesSource::ClosedForm
    }
}

/// A rank-one spiked limit law in the direction of the spike.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneLaw {
    pub model: Model,
    pub theta: f64,
    /// Aspect ratio `m/n`; only meaningful for [`Model::Multiplicative`].
    pub alpha: f64,
    /// Bulk interval carrying the absolutely continuous part.
    pub support: (f64, f64),
    /// Atoms, sorted by location. May be empty.
    pub atoms: Vec<Atom>,
}

/// Spiked semicircle law `μ_{sc,θ}`.
pub fn spiked_semicircle_law(theta: f64) -> RankOneLaw {
    let mut atoms = Vec::new();
    if theta.abs() > 1.0 {
        atoms.push(Atom {
            location: theta + 1.0 / theta,
            weight: 1.0 - 1.0 / (theta * theta),
        });
    }
    RankOneLaw {
        model: Model::Additive,
        theta,
        alpha: f64::NAN,
        support: (-2.0, 2.0),
        atoms,
    }
}

/// Location `θ(αθ − α + 1)/(θ − 1)` of the covariance outlier.
pub fn mp_outlier_location(alpha: f64, theta: f64) -> f64 {
    theta * (alpha * theta - alpha + 1.0) / (theta - 1.0)
}

/// Mass `d_{α,θ}` of the covariance outlier (meaningful above threshold).
pub fn mp_outlier_mass(alpha: f64, theta: f64) -> f64 {
    let t = theta - 1.0;
    alpha * (t * t - 1.0 / alpha) / (t * (alpha * theta - alpha + 1.0))
}

/// Whether `|θ − 1| > 1/√α`.
pub fn mp_outlier_exists(alpha: f64, theta: f64) -> bool {
    (theta - 1.0).abs() > 1.0 / alpha.sqrt()
}

/// Spiked Marchenko–Pastur law `μ_{α,θ}`. Negative spikes are rejected.
pub fn spiked_mp_law(alpha: f64, theta: f64) -> Result<RankOneLaw> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::Domain(format!(
            "covariance spike theta = {theta} must be nonnegative"
        )));
    }
    let support = mp_edges(alpha);
    let mut atoms = Vec::new();
    if theta == 0.0 {
        // Σ v = 0, so the whole mass sits at the origin.
        atoms.push(Atom {
            location: 0.0,
            weight: 1.0,
        });
    } else {
        if alpha < 1.0 {
            atoms.push(Atom {
                location: 0.0,
                weight: (1.0 - alpha) / (alpha * (theta - 1.0) + 1.0),
            });
        }
        if theta != 1.0 && mp_outlier_exists(alpha, theta) {
            atoms.push(Atom {
                location: mp_outlier_location(alpha, theta),
                weight: mp_outlier_mass(alpha, theta),
            });
        }
    }
    atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
    Ok(RankOneLaw {
        model: Model::Multiplicative,
        theta,
        alpha,
        support,
        atoms,
    })
}

impl RankOneLaw {
    /// Density of the absolutely continuous part (zero off the open bulk).
    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support;
        if x <= lo || x >= hi {
            return 0.0;
        }
        let theta = self.theta;
        match self.model {
            Model::Additive => {
                (4.0 - x * x).sqrt() / (2.0 * PI * (theta * theta + 1.0 - theta * x))
            }
            Model::Multiplicative => {
                let alpha = self.alpha;
                let denom = x * (1.0 - theta) + theta * (alpha * theta - alpha + 1.0);
                theta * ((hi - x) * (x - lo)).sqrt() / (2.0 * PI * x * denom)
            }
        }
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Integral of the bulk density.
    ///
    /// Integrates in the angle `t` of `x = c + h·cos t` with the midpoint rule,
    /// which absorbs the square-root edges and the `x^{-1/2}` singularity of the
    /// `α = 1` law at the origin.
    pub fn bulk_mass(&self) -> f64 {
        let (lo, hi) = self.support;
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let steps = (PI / MASS_GRID_STEP).ceil() as usize;
        let dt = PI / steps as f64;
        (0..steps)
            .map(|j| {
                let t = (j as f64 + 0.5) * dt;
                self.density(center + half * t.cos()) * half * t.sin()
            })
            .sum::<f64>()
            * dt
    }

    pub fn total_mass(&self) -> f64 {
        self.bulk_mass() + self.atom_mass()
    }

    /// Closed-form transform: the spiked relation evaluated with the exact
    /// semicircle or Marchenko–Pastur transform.
    pub fn stieltjes(&self, z: ComplexPoint) -> Complex64 {
        let theta = self.theta;
        match self.model {
            Model::Additive => 1.0 / (theta - semicircle_stieltjes(z) - z),
            Model::Multiplicative => {
                let alpha = self.alpha;
                let s = marchenko_pastur_stieltjes(alpha, z);
                1.0 / (theta * (alpha - 1.0) - z * theta * s - z)
            }
        }
    }
}

impl Stieltjes for RankOneLaw {
    fn eval(&self, z: ComplexPoint) -> Result<Complex64> {
        Ok(self.stieltjes(z))
    }
    fn source(&self) -> StieltjesSource {
        StieltjesSource::ClosedForm
    }
}

/// Limiting averaged square projection `1/(θ² − θx + 1)` on `[−2, 2]`.
pub fn overlap_profile_additive(theta: f64, x: f64) -> Result<f64> {
    if !(x.abs() <= 2.0) {
        return Err(Error::Domain(format!("x = {x} outside [-2, 2]")));
    }
    Ok(1.0 / (theta * theta - theta * x + 1.0))
}

/// Limiting averaged square projection `θ/(x(1 − θ) + θ(αθ − α + 1))` on `[a, b]`.
pub fn overlap_profile_multiplicative(alpha: f64, theta: f64, x: f64) -> Result<f64> {
    let (a, b) = mp_edges(alpha);
    if !(x >= a && x <= b) {
        return Err(Error::Domain(format!("x = {x} outside [{a}, {b}]")));
    }
    Ok(theta / (x * (1.0 - theta) + theta * (alpha * theta - alpha + 1.0)))
}

/// Pointwise ratio of a spiked density to the bulk density.
pub fn ratio_general<F, G>(spiked_density: F, bulk_density: G, x: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> Result<f64>,
{
    let bulk = bulk_density(x)?;
    if !(bulk > RATIO_DENOMINATOR_FLOOR) {
        return Err(Error::DivisionNearZero(bulk));
    }
    Ok(spiked_density(x)? / bulk)
}

/// Additive ratio written through the boundary value `a + ib` of the bulk
/// transform: `1/((θ − a − x)² + b²)`.
pub fn additive_ratio_from_boundary(theta: f64, x: f64, bulk_boundary: Complex64) -> f64 {
    let re = theta - bulk_boundary.re - x;
    1.0 / (re * re + bulk_boundary.im * bulk_boundary.im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::density_from_stieltjes;

    #[test]
    fn densities() {
        assert!((semicircle_density(0.0) - 1.0 / PI).abs() < 1e-15);
        assert_eq!(semicircle_density(2.0), 0.0);
        assert_eq!(semicircle_density(3.0), 0.0);
        assert!((marchenko_pastur_density(1.0, 2.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(marchenko_pastur_density(4.0, 0.5), 0.0);
        assert_eq!(mp_zero_atom(0.5), 0.5);
        assert_eq!(mp_zero_atom(4.0), 0.0);
    }

    #[test]
    fn semicircle_transform_values() {
        let s = semicircle_stieltjes(Complex64::new(0.0, 2.0));
        assert!((s - Complex64::new(0.0, 2f64.sqrt() - 1.0)).norm() < 1e-15);
        // real-axis limits on both sides of the bulk
        let right = semicircle_stieltjes(Complex64::new(2.5, 1e-12));
        assert!((right.re + 0.5).abs() < 1e-10);
        let left = semicircle_stieltjes(Complex64::new(-2.5, 1e-12));
        assert!((left.re - 0.5).abs() < 1e-10);
        let d = density_from_stieltjes(&SemicircleTransform, 0.0, 1e-8).unwrap();
        assert!((d - 1.0 / PI).abs() < 1e-6);
        let d = density_from_stieltjes(&SemicircleTransform, 3.0, 1e-8).unwrap();
        assert!(d.abs() < 1e-3);
    }

    #[test]
    fn mp_transform_values() {
        let s = marchenko_pastur_stieltjes(1.0, Complex64::new(-1.0, 1e-6));
        assert!((s.re - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-6);
        // interior: density via inversion
        for &x in &[1.5, 5.0, 8.5] {
            let d = density_from_stieltjes(&MarchenkoPasturTransform { alpha: 4.0 }, x, 1e-9)
                .unwrap();
            assert!((d - marchenko_pastur_density(4.0, x)).abs() < 1e-7, "{x}");
        }
    }

    #[test]
    fn spiked_semicircle_examples() {
        let law = spiked_semicircle_law(0.0);
        assert!(law.atoms.is_empty());
        for &x in &[-1.9, -0.3, 0.0, 1.2] {
            assert!((law.density(x) - semicircle_density(x)).abs() <= 1e-12);
        }
        let law = spiked_semicircle_law(2.0);
        assert_eq!(law.atoms.len(), 1);
        assert!((law.atoms[0].location - 2.5).abs() < 1e-15);
        assert!((law.atoms[0].weight - 0.75).abs() < 1e-15);
        assert!((law.density(0.0) - 1.0 / (5.0 * PI)).abs() < 1e-15);
        let d = density_from_stieltjes(&law, 0.0, 1e-8).unwrap();
        assert!((d - 1.0 / (5.0 * PI)).abs() < 1e-7);
        assert!(spiked_semicircle_law(1.0).atoms.is_empty());
    }

    #[test]
    fn spiked_mp_examples() {
        let law = spiked_mp_law(4.0, 2.0).unwrap();
        assert_eq!(law.support, (1.0, 9.0));
        assert_eq!(law.atoms.len(), 1);
        assert!((law.atoms[0].location - 10.0).abs() < 1e-12);
        assert!((law.atoms[0].weight - 0.6).abs() < 1e-12);
        let law = spiked_mp_law(0.5, 2.0).unwrap();
        assert!((law.atoms[0].location).abs() < 1e-15);
        assert!((law.atoms[0].weight - 1.0 / 3.0).abs() < 1e-12);
        let plain = spiked_mp_law(4.0, 1.0).unwrap();
        assert!(plain.atoms.is_empty());
        for &x in &[1.1, 3.0, 8.9] {
            assert!((plain.density(x) - marchenko_pastur_density(4.0, x)).abs() <= 1e-12);
        }
        assert!(spiked_mp_law(4.0, -1.0).is_err());
        assert!(!spiked_mp_law(4.0, 1.4).unwrap().atoms.iter().any(|a| a.location > 9.0));
    }

    #[test]
    fn spiked_mp_mass_formula_agrees_with_ratio_form() {
        for &(alpha, theta) in &[(4.0, 2.0), (2.0, 2.0), (4.0, 0.25), (0.5, 4.0)] {
            let t: f64 = theta - 1.0;
            let alt = (1.0 - 1.0 / (alpha * t * t)) / (1.0 + 1.0 / (alpha * t));
            assert!((mp_outlier_mass(alpha, theta) - alt).abs() < 1e-12);
        }
    }

    #[test]
    fn total_masses() {
        for &theta in &[0.0, 0.5, 1.0, 1.1, 2.0, -4.0, 10.0] {
            let law = spiked_semicircle_law(theta);
            assert!((law.total_mass() - 1.0).abs() < 1e-6, "theta {theta}");
        }
        for &alpha in &[0.25, 0.5, 1.0, 2.0, 4.0] {
            for &theta in &[0.0, 0.25, 0.5, 1.0, 1.4, 2.0, 4.0] {
                let law = spiked_mp_law(alpha, theta).unwrap();
                assert!(
                    (law.total_mass() - 1.0).abs() < 1e-6,
                    "alpha {alpha} theta {theta}: {}",
                    law.total_mass()
                );
            }
        }
    }

    #[test]
    fn profiles() {
        assert!((overlap_profile_additive(2.0, 0.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(overlap_profile_additive(0.0, 1.3).unwrap(), 1.0);
        assert!((overlap_profile_additive(2.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(overlap_profile_additive(2.0, 2.1).is_err());
        assert!((overlap_profile_multiplicative(4.0, 2.0, 5.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(overlap_profile_multiplicative(4.0, 1.0, 3.3).unwrap(), 1.0);
        assert!((overlap_profile_multiplicative(4.0, 2.0, 9.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(overlap_profile_multiplicative(4.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn rank_one_ratio_matches_profiles() {
        let spiked = spiked_semicircle_law(2.0);
        for &x in &[-1.5, 0.0, 0.7, 1.9] {
            let r = ratio_general(
                |x| Ok(spiked.density(x)),
                |x| Ok(semicircle_density(x)),
                x,
            )
            .unwrap();
            assert!((r - overlap_profile_additive(2.0, x).unwrap()).abs() < 1e-6);
            let boundary = semicircle_stieltjes(Complex64::new(x, 1e-8));
            let r2 = additive_ratio_from_boundary(2.0, x, boundary);
            assert!((r2 - r).abs() < 1e-6);
        }
        let spiked = spiked_mp_law(4.0, 2.0).unwrap();
        for &x in &[1.5, 5.0, 8.5] {
            let r = ratio_general(
                |x| Ok(spiked.density(x)),
                |x| Ok(marchenko_pastur_density(4.0, x)),
                x,
            )
            .unwrap();
            assert!((r - overlap_profile_multiplicative(4.0, 2.0, x).unwrap()).abs() < 1e-6);
        }
        let edge = ratio_general(|x| Ok(spiked.density(x)), |x| Ok(marchenko_pastur_density(4.0, x)), 9.0);
        assert!(matches!(edge, Err(Error::DivisionNearZero(_))));
    }

    #[test]
    fn closed_form_transforms_invert_to_densities() {
        let law = spiked_mp_law(4.0, 2.0).unwrap();
        for &x in &[1.2, 4.0, 8.0] {
            let d = density_from_stieltjes(&law, x, 1e-9).unwrap();
            assert!((d - law.density(x)).abs() < 1e-6, "{x}");
        }
        // the transform has a pole at the outlier
        let near = law.stieltjes(Complex64::new(10.0, 1e-6));
        assert!((near.im * 1e-6 - 0.6).abs() < 1e-5);
    }
}
