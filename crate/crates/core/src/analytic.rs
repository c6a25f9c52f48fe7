//! Fixed-point solvers for the limit transforms `s_{μ_sc ⊞ μ_A}` (Pastur
//! equation) and `s_{μ_α ⊠ μ_Σ}` (Silverstein equation), the spiked transforms
//! built from them, and the outlier equations with their residue masses.
//!
//! The damped iteration `s ← (1 − d)s + d·T(s)` started at `s = i` is the
//! primary scheme. Once the steps are small, a few Newton steps on
//! `s − T(s) = 0` finish the job; this matters near the real axis where the
//! iteration contracts at rate `1 − O(η)`. Boundary values `lim_{η→0⁺} s(x+iη)`
//! are approached by walking `η` down from `1e-2` to [`BOUNDARY_ETA`], each
//! level warm-started from the previous one.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::closed_forms::Model;
use crate::error::{Error, Result};
use crate::measures::{AtomicMeasure, ComplexPoint, Stieltjes, StieltjesSource};

/// Height at which boundary limits `z → x⁺` are evaluated.
pub const BOUNDARY_ETA: f64 = 1e-8;
/// Density below which a point is considered outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;
/// Grid step of the support scan.
pub const SUPPORT_GRID_STEP: f64 = 1e-3;
/// Finite-difference step for `w′`.
pub const W_DERIVATIVE_STEP: f64 = 1e-6;
/// Finite-difference step for `F′` (in the `1/x` variable).
pub const F_DERIVATIVE_STEP: f64 = 1e-7;
/// `|F′|` below this is treated as a tangency: no outlier is reported.
pub const F_DERIVATIVE_FLOOR: f64 = 1e-10;

const CONTINUATION_START: f64 = 1e-2;
const NEWTON_SWITCH: f64 = 1e-3;
const NEWTON_MAX_STEPS: usize = 60;
const FALLBACK_DAMPING: f64 = 0.25;
const ROOT_SAMPLES: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Step and residual tolerance, relative to `max(1, |s|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Damping `d ∈ (0, 1]` of the fixed-point iteration.
    pub damping: f64,
    /// Smallest `Im z` accepted by the public evaluators.
    pub min_imag: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 100_000,
            damping: 0.5,
            min_imag: crate::measures::FIXED_POINT_ETA,
        }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x > self.hi {
            x - self.hi
        } else {
            0.0
        }
    }
}

/// A self-consistent equation `s = T(s; z)`.
trait FixedPointMap {
    fn map(&self, s: Complex64, z: Complex64) -> Complex64;
    fn map_derivative(&self, s: Complex64, z: Complex64) -> Complex64;
}

struct PasturMap<'a>(&'a AtomicMeasure);

impl FixedPointMap for PasturMap<'_> {
    fn map(&self, s: Complex64, z: Complex64) -> Complex64 {
        self.0
            .atoms()
            .iter()
            .map(|a| a.weight / (a.location - s - z))
            .sum()
    }
    fn map_derivative(&self, s: Complex64, z: Complex64) -> Complex64 {
        self.0
            .atoms()
            .iter()
            .map(|a| {
                let d = a.location - s - z;
                a.weight / (d * d)
            })
            .sum()
    }
}

struct SilversteinMap<'a> {
    base: &'a AtomicMeasure,
    alpha: f64,
}

impl FixedPointMap for SilversteinMap<'_> {
    fn map(&self, s: Complex64, z: Complex64) -> Complex64 {
        self.base
            .atoms()
            .iter()
            .map(|a| a.weight / (a.location * (self.alpha - 1.0 - z * s) - z))
            .sum()
    }
    fn map_derivative(&self, s: Complex64, z: Complex64) -> Complex64 {
        self.base
            .atoms()
            .iter()
            .map(|a| {
                let d = a.location * (self.alpha - 1.0 - z * s) - z;
                a.weight * a.location * z / (d * d)
            })
            .sum()
    }
}

fn scale(s: Complex64) -> f64 {
    s.norm().max(1.0)
}

fn residual<M: FixedPointMap>(map: &M, s: Complex64, z: Complex64) -> f64 {
    (s - map.map(s, z)).norm()
}

fn newton_polish<M: FixedPointMap>(
    map: &M,
    z: Complex64,
    start: Complex64,
    tolerance: f64,
) -> Option<Complex64> {
    let mut s = start;
    let mut last = f64::INFINITY;
    for _ in 0..NEWTON_MAX_STEPS {
        let g = s - map.map(s, z);
        let dg = 1.0 - map.map_derivative(s, z);
        if dg.norm() == 0.0 || !g.is_finite() {
            return None;
        }
        let delta = g / dg;
        s -= delta;
        if !s.is_finite() {
            return None;
        }
        let size = delta.norm();
        if size <= 4.0 * f64::EPSILON * scale(s) || (size >= last && last <= tolerance * scale(s))
        {
            break;
        }
        last = size;
    }
    let ok = residual(map, s, z) <= tolerance * scale(s) && s.im >= 0.0 && (z.im == 0.0 || s.im > 0.0);
    ok.then_some(s)
}

fn damped_iteration<M: FixedPointMap>(
    map: &M,
    z: Complex64,
    start: Complex64,
    damping: f64,
    settings: &SolverSettings,
) -> Result<Complex64> {
    let tol = settings.tolerance;
    let mut s = start;
    let mut step = f64::INFINITY;
    let mut newton_tries = 0usize;
    for k in 0..settings.max_iterations {
        let next = (1.0 - damping) * s + damping * map.map(s, z);
        if !next.is_finite() {
            return Err(Error::NonConvergence {
                iterations: k,
                last_step: f64::INFINITY,
            });
        }
        step = (next - s).norm();
        s = next;
        if step < tol * scale(s) && residual(map, s, z) < tol * scale(s) && s.im > 0.0 {
            return Ok(s);
        }
        if step < NEWTON_SWITCH * scale(s) && k % 8 == 0 && newton_tries < 64 {
            newton_tries += 1;
            if let Some(polished) = newton_polish(map, z, s, tol) {
                return Ok(polished);
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: settings.max_iterations,
        last_step: step,
    })
}

fn solve_with_fallback<M: FixedPointMap>(
    map: &M,
    z: Complex64,
    start: Complex64,
    settings: &SolverSettings,
) -> Result<Complex64> {
    match damped_iteration(map, z, start, settings.damping, settings) {
        Ok(s) => Ok(s),
        Err(Error::NonConvergence { .. }) if settings.damping > FALLBACK_DAMPING => {
            damped_iteration(map, z, start, FALLBACK_DAMPING, settings)
        }
        Err(e) => Err(e),
    }
}

/// Solves at any `Im z > 0`, walking `η` down when `z` is close to the axis.
fn solve_near_axis<M: FixedPointMap>(
    map: &M,
    z: Complex64,
    settings: &SolverSettings,
) -> Result<Complex64> {
    let start = Complex64::new(0.0, 1.0);
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("Im z = {} must be positive", z.im)));
    }
    if z.im >= CONTINUATION_START {
        return solve_with_fallback(map, z, start, settings);
    }
    let mut eta = CONTINUATION_START;
    let mut s = solve_with_fallback(map, Complex64::new(z.re, eta), start, settings)?;
    while eta > z.im {
        eta = (eta * 0.1).max(z.im);
        s = solve_with_fallback(map, Complex64::new(z.re, eta), s, settings)?;
    }
    Ok(s)
}

fn check_guard(z: ComplexPoint, settings: &SolverSettings) -> Result<()> {
    if z.im < settings.min_imag {
        return Err(Error::Domain(format!(
            "Im z = {:e} below the solver guard {:e}",
            z.im, settings.min_imag
        )));
    }
    Ok(())
}

/// `s_{μ_sc ⊞ μ_A}(z)`: the solution of `s = ∫ dμ_A(λ)/(λ − s − z)` with `Im s > 0`.
pub fn solve_free_additive(
    base: &AtomicMeasure,
    z: ComplexPoint,
    settings: &SolverSettings,
) -> Result<Complex64> {
    check_guard(z, settings)?;
    solve_near_axis(&PasturMap(base), z, settings)
}

/// `s_{μ_α ⊠ μ_Σ}(z)`: the solution of `s = ∫ dμ_Σ(t)/(t(α − 1 − zs) − z)`.
pub fn solve_free_multiplicative(
    base: &AtomicMeasure,
    alpha: f64,
    z: ComplexPoint,
    settings: &SolverSettings,
) -> Result<Complex64> {
    check_alpha(alpha)?;
    check_guard(z, settings)?;
    solve_near_axis(&SilversteinMap { base, alpha }, z, settings)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    Ok(())
}

/// Scans `[lo, hi]` on a grid and returns the maximal runs of grid points whose
/// density is at least [`SUPPORT_THRESHOLD`].
pub fn scan_support<F>(lo: f64, hi: f64, step: f64, density: F) -> Result<Vec<Interval>>
where
    F: Fn(f64) -> Result<f64>,
{
    let count = ((hi - lo) / step).ceil() as usize;
    let mut runs = Vec::new();
    let mut open: Option<f64> = None;
    let mut prev = lo;
    for j in 0..=count {
        let x = lo + j as f64 * step;
        let inside = density(x)? >= SUPPORT_THRESHOLD;
        match (inside, open) {
            (true, None) => open = Some(x),
            (false, Some(start)) => {
                runs.push(Interval { lo: start, hi: prev });
                open = None;
            }
            _ => {}
        }
        prev = x;
    }
    if let Some(start) = open {
        runs.push(Interval { lo: start, hi: prev });
    }
    Ok(runs)
}

/// Limit transform of `μ_sc ⊞ μ_A` backed by the Pastur fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeAdditiveSolution {
    base: AtomicMeasure,
    settings: SolverSettings,
}

impl FreeAdditiveSolution {
    pub fn new(base: AtomicMeasure, settings: SolverSettings) -> Self {
        Self { base, settings }
    }

    pub fn base(&self) -> &AtomicMeasure {
        &self.base
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    /// `s(z)` for `Im z` at or above the guard.
    pub fn stieltjes(&self, z: ComplexPoint) -> Result<Complex64> {
        solve_free_additive(&self.base, z, &self.settings)
    }

    /// `s(x + i·BOUNDARY_ETA)`, the boundary limit from the upper half-plane.
    pub fn boundary_value(&self, x: f64) -> Result<Complex64> {
        solve_near_axis(
            &PasturMap(&self.base),
            Complex64::new(x, BOUNDARY_ETA),
            &self.settings,
        )
    }

    pub fn boundary_density(&self, x: f64) -> Result<f64> {
        Ok(self.boundary_value(x)?.im / core::f64::consts::PI)
    }

    /// Self-consistency residual `|s − ∫ dμ_A(λ)/(λ − s − z)|`.
    pub fn residual(&self, s: Complex64, z: ComplexPoint) -> f64 {
        residual(&PasturMap(&self.base), s, z)
    }

    /// Support of `μ_sc ⊞ μ_A`, scanned on `[min atom − 2.5, max atom + 2.5]`.
    pub fn support(&self) -> Result<Vec<Interval>> {
        scan_support(
            self.base.min_location() - 2.5,
            self.base.max_location() + 2.5,
            SUPPORT_GRID_STEP,
            |x| self.boundary_density(x),
        )
    }

    /// Ratio of the spiked density to the bulk density at `x`, through boundary
    /// values of both transforms.
    pub fn spiked_ratio(&self, theta: f64, x: f64) -> Result<f64> {
        let spiked = SpikedAdditive::new(theta, self.clone());
        crate::closed_forms::ratio_general(
            |x| spiked.boundary_density(x),
            |x| self.boundary_density(x),
            x,
        )
    }
}

impl Stieltjes for FreeAdditiveSolution {
    fn eval(&self, z: ComplexPoint) -> Result<Complex64> {
        self.stieltjes(z)
    }
    fn source(&self) -> StieltjesSource {
        StieltjesSource::FixedPoint
    }
    fn min_imag(&self) -> f64 {
        self.settings.min_imag
    }
}

/// Limit transform of `μ_α ⊠ μ_Σ` backed by the Silverstein fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeMultiplicativeSolution {
    base: AtomicMeasure,
    alpha: f64,
    settings: SolverSettings,
}

impl FreeMultiplicativeSolution {
    pub fn new(base: AtomicMeasure, alpha: f64, settings: SolverSettings) -> Result<Self> {
        check_alpha(alpha)?;
        if base.min_location() < 0.0 {
            return Err(Error::InvalidMeasure(format!(
                "covariance spectrum has negative atom {}",
                base.min_location()
            )));
        }
        Ok(Self {
            base,
            alpha,
            settings,
        })
    }

    pub fn base(&self) -> &AtomicMeasure {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    fn map(&self) -> SilversteinMap<'_> {
        SilversteinMap {
            base: &self.base,
            alpha: self.alpha,
        }
    }

    pub fn stieltjes(&self, z: ComplexPoint) -> Result<Complex64> {
        check_guard(z, &self.settings)?;
        solve_near_axis(&self.map(), z, &self.settings)
    }

    pub fn boundary_value(&self, x: f64) -> Result<Complex64> {
        solve_near_axis(&self.map(), Complex64::new(x, BOUNDARY_ETA), &self.settings)
    }

    pub fn boundary_density(&self, x: f64) -> Result<f64> {
        Ok(self.boundary_value(x)?.im / core::f64::consts::PI)
    }

    pub fn residual(&self, s: Complex64, z: ComplexPoint) -> f64 {
        residual(&self.map(), s, z)
    }

    /// Support inside `(0, ∞)`, scanned on `(0, max atom·(1 + √α)² + 1]`.
    pub fn support(&self) -> Result<Vec<Interval>> {
        let r = self.alpha.sqrt();
        let hi = self.base.max_location() * (1.0 + r) * (1.0 + r) + 1.0;
        scan_support(SUPPORT_GRID_STEP, hi, SUPPORT_GRID_STEP, |x| {
            self.boundary_density(x)
        })
    }

    pub fn spiked_ratio(&self, theta: f64, x: f64) -> Result<f64> {
        let spiked = SpikedMultiplicative::new(theta, self.clone())?;
        crate::closed_forms::ratio_general(
            |x| spiked.boundary_density(x),
            |x| self.boundary_density(x),
            x,
        )
    }
}

impl Stieltjes for FreeMultiplicativeSolution {
    fn eval(&self, z: ComplexPoint) -> Result<Complex64> {
        self.stieltjes(z)
    }
    fn source(&self) -> StieltjesSource {
        StieltjesSource::FixedPoint
    }
    fn min_imag(&self) -> f64 {
        self.settings.min_imag
    }
}

/// `1/(θ − s(z) − z)` with `s = s_{μ_sc ⊞ μ_A}`.
pub fn spiked_stieltjes_additive(
    theta: f64,
    free_add: &FreeAdditiveSolution,
    z: ComplexPoint,
) -> Result<Complex64> {
    Ok(1.0 / (theta - free_add.stieltjes(z)? - z))
}

/// `1/(θ(α − 1) − zθ·s(z) − z)` with `s = s_{μ_α ⊠ μ_Σ}`.
pub fn spiked_stieltjes_multiplicative(
    theta: f64,
    free_mult: &FreeMultiplicativeSolution,
    z: ComplexPoint,
) -> Result<Complex64> {
    let s = free_mult.stieltjes(z)?;
    Ok(spiked_multiplicative_relation(theta, free_mult.alpha, s, z))
}

fn spiked_multiplicative_relation(theta: f64, alpha: f64, s: Complex64, z: Complex64) -> Complex64 {
    1.0 / (theta * (alpha - 1.0) - z * theta * s - z)
}

/// Transform of the limiting spectral measure in the spike direction (additive model).
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedAdditive {
    pub theta: f64,
    pub bulk: FreeAdditiveSolution,
}

impl SpikedAdditive {
    pub fn new(theta: f64, bulk: FreeAdditiveSolution) -> Self {
        Self { theta, bulk }
    }

    pub fn boundary_density(&self, x: f64) -> Result<f64> {
        let s = self.bulk.boundary_value(x)?;
        let z = Complex64::new(x, BOUNDARY_ETA);
        Ok((1.0 / (self.theta - s - z)).im / core::f64::consts::PI)
    }
}

impl Stieltjes for SpikedAdditive {
    fn eval(&self, z: ComplexPoint) -> Result<Complex64> {
        spiked_stieltjes_additive(self.theta, &self.bulk, z)
    }
    fn source(&self) -> StieltjesSource {
        StieltjesSource::FixedPoint
    }
    fn min_imag(&self) -> f64 {
        self.bulk.settings.min_imag
    }
}

/// Transform of the limiting spectral measure in the spike direction (covariance model).
#[derive(Debug, Clone, PartialEq)]
pub struct SpikedMultiplicative {
    pub theta: f64,
    pub bulk: FreeMultiplicativeSolution,
}

impl SpikedMultiplicative {
    pub fn new(theta: f64, bulk: FreeMultiplicativeSolution) -> Result<Self> {
        if !(theta >= 0.0) {
            return Err(Error::Domain(format!(
                "covariance spike theta = {theta} must be nonnegative"
            )));
        }
        Ok(Self { theta, bulk })
    }

    pub fn boundary_density(&self, x: f64) -> Result<f64> {
        let s = self.bulk.boundary_value(x)?;
        let z = Complex64::new(x, BOUNDARY_ETA);
        Ok(spiked_multiplicative_relation(self.theta, self.bulk.alpha, s, z).im
            / core::f64::consts::PI)
    }
}

impl Stieltjes for SpikedMultiplicative {
    fn eval(&self, z: ComplexPoint) -> Result<Complex64> {
        spiked_stieltjes_multiplicative(self.theta, &self.bulk, z)
    }
    fn source(&self) -> StieltjesSource {
        StieltjesSource::FixedPoint
    }
    fn min_imag(&self) -> f64 {
        self.bulk.settings.min_imag
    }
}

/// Predicted outlier of the spiked model, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierReport {
    pub model: Model,
    pub spike: f64,
    pub outlier: Option<Outlier>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outlier {
    pub location: f64,
    /// Limit of the square projection of the outlier eigenvector(s) on the spike.
    pub mass: f64,
}

impl OutlierReport {
    pub fn exists(&self) -> bool {
        self.outlier.is_some()
    }
    pub fn location(&self) -> Option<f64> {
        self.outlier.map(|o| o.location)
    }
    pub fn mass(&self) -> Option<f64> {
        self.outlier.map(|o| o.mass)
    }
}

/// Connected components of the complement of `support`; unbounded ends are
/// `±∞`. Bounded ends are the nearest scanned grid points outside the support.
fn complement(support: &[Interval], step: f64) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut left = f64::NEG_INFINITY;
    for iv in support {
        out.push(Interval {
            lo: left,
            hi: iv.lo - step,
        });
        left = iv.hi + step;
    }
    out.push(Interval {
        lo: left,
        hi: f64::INFINITY,
    });
    out.retain(|c| c.lo < c.hi);
    out
}

fn bisect<F>(mut lo: f64, mut hi: f64, f: &F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut f_lo = f(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sign changes of `f` on `[lo, hi]`, each refined by bisection.
fn roots_on<F>(lo: f64, hi: f64, f: &F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut roots = Vec::new();
    let h = (hi - lo) / ROOT_SAMPLES as f64;
    let mut x_prev = lo;
    let mut f_prev = f(lo)?;
    for j in 1..=ROOT_SAMPLES {
        let x = if j == ROOT_SAMPLES { hi } else { lo + j as f64 * h };
        let fx = f(x)?;
        if f_prev == 0.0 {
            roots.push(x_prev);
        } else if (fx < 0.0) != (f_prev < 0.0) && fx != 0.0 {
            roots.push(bisect(x_prev, x, f)?);
        } else if fx == 0.0 && j == ROOT_SAMPLES {
            roots.push(x);
        }
        x_prev = x;
        f_prev = fx;
    }
    Ok(roots)
}

/// Pushes an unbounded end out until `f` changes sign relative to `f(anchor)`.
fn expand_bracket<F>(anchor: f64, direction: f64, f: &F) -> Result<Option<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    let f_anchor = f(anchor)?;
    let mut width = 1.0;
    for _ in 0..64 {
        let x = anchor + direction * width;
        if (f(x)? < 0.0) != (f_anchor < 0.0) {
            return Ok(Some(x));
        }
        width *= 2.0;
    }
    Ok(None)
}

/// `w(x) = x + s_{μ_sc ⊞ μ_A}(x)` for `x` off the support.
pub fn subordination_w(free_add: &FreeAdditiveSolution, x: f64) -> Result<f64> {
    let s = free_add.boundary_value(x)?;
    if s.im / core::f64::consts::PI >= SUPPORT_THRESHOLD {
        return Err(Error::Support(x));
    }
    Ok(x + s.re)
}

/// Solves `w(x) = θ` on the complement of the support and reports the residue
/// mass `1/w′(x)`.
pub fn find_outlier_additive(theta: f64, free_add: &FreeAdditiveSolution) -> Result<OutlierReport> {
    let support = free_add.support()?;
    find_outlier_additive_with_support(theta, free_add, &support)
}

/// [`find_outlier_additive`] with a precomputed support.
pub fn find_outlier_additive_with_support(
    theta: f64,
    free_add: &FreeAdditiveSolution,
    support: &[Interval],
) -> Result<OutlierReport> {
    let g = |x: f64| subordination_w(free_add, x).map(|w| w - theta);
    let mut candidates = Vec::new();
    for comp in complement(support, SUPPORT_GRID_STEP) {
        let (lo, hi) = match (comp.lo.is_finite(), comp.hi.is_finite()) {
            (true, true) => (comp.lo, comp.hi),
            (true, false) => match expand_bracket(comp.lo, 1.0, &g)? {
                Some(x) => (comp.lo, x),
                None => continue,
            },
            (false, true) => match expand_bracket(comp.hi, -1.0, &g)? {
                Some(x) => (x, comp.hi),
                None => continue,
            },
            (false, false) => continue,
        };
        candidates.extend(roots_on(lo, hi, &g)?);
    }
    let mut best: Option<Outlier> = None;
    for x in candidates {
        let h = W_DERIVATIVE_STEP;
        let dw = (subordination_w(free_add, x + h)? - subordination_w(free_add, x - h)?) / (2.0 * h);
        let mass = 1.0 / dw;
        if mass > 0.0 && mass <= 1.0 + 1e-9 && best.is_none_or(|b| mass > b.mass) {
            best = Some(Outlier { location: x, mass });
        }
    }
    Ok(OutlierReport {
        model: Model::Additive,
        spike: theta,
        outlier: best,
    })
}

/// `F(y) = (α − 1)y − s_{μ_α ⊠ μ_Σ}(1/y)` for `1/y` off the support.
pub fn outlier_f(free_mult: &FreeMultiplicativeSolution, y: f64) -> Result<f64> {
    if y == 0.0 || !y.is_finite() {
        return Err(Error::Domain(format!("F is undefined at y = {y}")));
    }
    let x = 1.0 / y;
    let s = free_mult.boundary_value(x)?;
    if s.im / core::f64::consts::PI >= SUPPORT_THRESHOLD {
        return Err(Error::Support(x));
    }
    Ok((free_mult.alpha - 1.0) * y - s.re)
}

/// Solves `1/F(1/x) = θ` on the positive complement of the support and reports
/// the residue mass `x·F(1/x)/F′(1/x)`.
pub fn find_outlier_multiplicative(
    theta: f64,
    free_mult: &FreeMultiplicativeSolution,
) -> Result<OutlierReport> {
    let support = free_mult.support()?;
    find_outlier_multiplicative_with_support(theta, free_mult, &support)
}

pub fn find_outlier_multiplicative_with_support(
    theta: f64,
    free_mult: &FreeMultiplicativeSolution,
    support: &[Interval],
) -> Result<OutlierReport> {
    if !(theta >= 0.0) {
        return Err(Error::Domain(format!(
            "covariance spike theta = {theta} must be nonnegative"
        )));
    }
    let none = OutlierReport {
        model: Model::Multiplicative,
        spike: theta,
        outlier: None,
    };
    if theta == 0.0 {
        return Ok(none);
    }
    let target = 1.0 / theta;
    let g = |x: f64| outlier_f(free_mult, 1.0 / x).map(|f| f - target);
    let mut candidates = Vec::new();
    for comp in complement(support, SUPPORT_GRID_STEP) {
        let lo = comp.lo.max(SUPPORT_GRID_STEP);
        if comp.hi.is_finite() {
            if comp.hi > lo {
                candidates.extend(roots_on(lo, comp.hi, &g)?);
            }
        } else if let Some(x) = expand_bracket(lo, 1.0, &g)? {
            candidates.extend(roots_on(lo, x, &g)?);
        }
    }
    let mut best: Option<Outlier> = None;
    for x in candidates {
        let y = 1.0 / x;
        let h = F_DERIVATIVE_STEP;
        let df = (outlier_f(free_mult, y + h)? - outlier_f(free_mult, y - h)?) / (2.0 * h);
        if df.abs() < F_DERIVATIVE_FLOOR {
            log::warn!("tangent root of 1/F(1/x) = {theta} at x = {x}; no outlier reported");
            continue;
        }
        let mass = x * outlier_f(free_mult, y)? / df;
        if mass > 0.0 && mass <= 1.0 + 1e-9 && best.is_none_or(|b| mass > b.mass) {
            best = Some(Outlier { location: x, mass });
        }
    }
    Ok(OutlierReport {
        outlier: best,
        ..none
    })
}
