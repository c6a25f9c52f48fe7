//! Statistics computed from eigenpairs: the spectral measure in a direction,
//! windowed overlap profiles, outliers and the local-law diagnostic.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::analytic::Interval;
use crate::eig::{self, EigenDecomposition, SymmetricMatrix};
use crate::error::{Error, Result};
use crate::measures::{ComplexPoint, Stieltjes, WeightedSpectralMeasure};

/// Default window exponent: `ε_n = n^{0.1}/√n`.
pub const DEFAULT_WINDOW_EXPONENT: f64 = 0.1;
/// Default distance from the bulk beyond which an eigenvalue is an outlier.
pub const DEFAULT_OUTLIER_MARGIN: f64 = 0.1;
/// Outlier eigenvalues closer than this form one cluster.
pub const OUTLIER_CLUSTER_GAP: f64 = 1e-6;
/// Default `τ` of the local-law domain.
pub const DEFAULT_TAU: f64 = 0.1;

/// `n^{exponent} / √n`.
pub fn window_half_width(n: usize, exponent: f64) -> f64 {
    let n = n as f64;
    n.powf(exponent) / n.sqrt()
}

/// `μ_{(M, v)} = Σ ⟨φ_i, v⟩² δ_{λ_i}` from a full decomposition.
pub fn spectral_measure_in_direction(
    decomp: &EigenDecomposition,
    v: &[f64],
) -> Result<WeightedSpectralMeasure> {
    if v.len() != decomp.dim() {
        return Err(Error::Domain(format!(
            "direction of length {} in dimension {}",
            v.len(),
            decomp.dim()
        )));
    }
    let norm = eig::dot(v, v).sqrt();
    if !((norm - 1.0).abs() <= eig::UNIT_NORM_TOLERANCE) {
        return Err(Error::Norm(norm));
    }
    let weights = decomp.vectors().map(|phi| eig::dot(phi, v).powi(2)).collect();
    WeightedSpectralMeasure::new(decomp.eigenvalues().to_vec(), weights)
}

/// Same measure straight from the matrix, without forming eigenvectors.
pub fn spectral_measure_of_matrix(matrix: &SymmetricMatrix, v: &[f64]) -> Result<WeightedSpectralMeasure> {
    let (values, weights) = eig::spectral_weights(matrix, v)?;
    WeightedSpectralMeasure::new(values, weights)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapProfile {
    pub grid: Vec<f64>,
    /// `n/count · Σ` of the weights in the window; `None` for empty windows.
    pub estimates: Vec<Option<f64>>,
    pub window_half_width: f64,
    pub counts: Vec<usize>,
    pub theory: Option<Vec<f64>>,
}

impl OverlapProfile {
    /// Attaches `theory(x)` at every grid point.
    pub fn with_theory<F: FnMut(f64) -> f64>(mut self, theory: F) -> Self {
        self.theory = Some(self.grid.iter().copied().map(theory).collect());
        self
    }

    /// `|estimate − theory|` where both exist.
    pub fn abs_errors(&self) -> Vec<Option<f64>> {
        match &self.theory {
            None => self.grid.iter().map(|_| None).collect(),
            Some(t) => self
                .estimates
                .iter()
                .zip(t)
                .map(|(e, t)| e.map(|e| (e - t).abs()).filter(|d| d.is_finite()))
                .collect(),
        }
    }

    /// Largest error over grid points in `[lo, hi]`; `None` when no point
    /// there has both an estimate and a theory value.
    pub fn sup_error(&self, lo: f64, hi: f64) -> Option<f64> {
        self.grid
            .iter()
            .zip(self.abs_errors())
            .filter(|(x, _)| **x >= lo && **x <= hi)
            .filter_map(|(_, e)| e)
            .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))))
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("window half-width {epsilon} must be positive")));
    }
    Ok(())
}

/// Window statistic `n/|I| Σ_{i ∈ I} w_i` with `I = {i : |λ_i − x| ≤ ε}`.
pub fn windowed_profile(
    measure: &WeightedSpectralMeasure,
    grid: &[f64],
    epsilon: f64,
) -> Result<OverlapProfile> {
    pooled_profile(core::slice::from_ref(measure), grid, epsilon)
}

/// The window statistic with eigenvalues and weights pooled over several
/// independent samples of the same size: `n/|I| Σ_{i ∈ I} w_i` where `I`
/// runs over all samples.
pub fn pooled_profile(
    measures: &[WeightedSpectralMeasure],
    grid: &[f64],
    epsilon: f64,
) -> Result<OverlapProfile> {
    check_epsilon(epsilon)?;
    let n = measures.first().map_or(0, |m| m.len());
    if measures.iter().any(|m| m.len() != n) {
        return Err(Error::Domain("pooled measures differ in size".into()));
    }
    let mut estimates = Vec::with_capacity(grid.len());
    let mut counts = Vec::with_capacity(grid.len());
    for &x in grid {
        let mut count = 0usize;
        let mut mass = 0.0;
        for m in measures {
            // Eigenvalues are stored in descending order.
            let ev = m.eigenvalues();
            let start = ev.partition_point(|&l| l > x + epsilon);
            let end = ev.partition_point(|&l| l >= x - epsilon);
            for i in start..end {
                if (ev[i] - x).abs() <= epsilon {
                    count += 1;
                    mass += m.weights()[i];
                }
            }
        }
        counts.push(count);
        estimates.push((count > 0).then(|| n as f64 * mass / count as f64));
    }
    Ok(OverlapProfile {
        grid: grid.to_vec(),
        estimates,
        window_half_width: epsilon,
        counts,
        theory: None,
    })
}

/// Outlier eigenvalues merged into one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierCluster {
    /// Mean of the clustered eigenvalues.
    pub location: f64,
    /// Summed weight.
    pub weight: f64,
    pub eigenvalues: Vec<f64>,
}

/// `(eigenvalue, weight)` pairs in descending order.
pub type SpectrumPart = Vec<(f64, f64)>;

/// Splits the spectrum into outliers (farther than `margin` from every bulk
/// interval) and bulk eigenvalues, each as `(eigenvalue, weight)` in
/// descending order.
pub fn partition_spectrum(
    measure: &WeightedSpectralMeasure,
    bulk: &[Interval],
    margin: f64,
) -> Result<(SpectrumPart, SpectrumPart)> {
    if !(margin > 0.0) {
        return Err(Error::Domain(format!("margin {margin} must be positive")));
    }
    let (outliers, inside) = measure
        .iter()
        .partition(|(l, _)| bulk.iter().all(|b| b.distance(*l) > margin));
    Ok((outliers, inside))
}

/// Outliers of `measure` relative to `bulk`, adjacent ones within
/// [`OUTLIER_CLUSTER_GAP`] merged. Clusters are in descending order.
pub fn extract_outliers(
    measure: &WeightedSpectralMeasure,
    bulk: &[Interval],
    margin: f64,
) -> Result<Vec<OutlierCluster>> {
    let (outliers, _) = partition_spectrum(measure, bulk, margin)?;
    let mut clusters: Vec<OutlierCluster> = Vec::new();
    for (l, w) in outliers {
        match clusters.last_mut() {
            Some(c) if c.eigenvalues.last().is_some_and(|&prev| prev - l <= OUTLIER_CLUSTER_GAP) => {
                c.eigenvalues.push(l);
                c.weight += w;
            }
            _ => clusters.push(OutlierCluster {
                location: l,
                weight: w,
                eigenvalues: alloc::vec![l],
            }),
        }
    }
    for c in &mut clusters {
        c.location = c.eigenvalues.iter().sum::<f64>() / c.eigenvalues.len() as f64;
    }
    Ok(clusters)
}

/// One evaluation of the local-law diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticPoint {
    pub energy: f64,
    pub eta: f64,
    /// `|s_emp(z) − s_theory(z)|`.
    pub abs_shat: f64,
    /// `√(Im s_bulk(z)/(nη)) + 1/(nη)`.
    pub psi: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalLawDiagnostic {
    pub n: usize,
    pub tau: f64,
    pub points: Vec<DiagnosticPoint>,
}

impl LocalLawDiagnostic {
    pub fn max_ratio(&self) -> f64 {
        self.points.iter().fold(0.0, |m, p| m.max(p.ratio))
    }
}

/// Whether `z` lies in `{n^{−1+τ} ≤ η ≤ 1/τ, |E| ≤ 1/τ}`.
pub fn in_local_law_domain(z: ComplexPoint, n: usize, tau: f64) -> bool {
    let lower = (n as f64).powf(tau - 1.0);
    z.im >= lower && z.im <= 1.0 / tau && z.re.abs() <= 1.0 / tau
}

/// Compares an empirical transform with its deterministic limit against the
/// envelope `ψ`, which uses the bulk transform.
pub fn local_law_diagnostic<E, T, B>(
    empirical: &E,
    theory: &T,
    bulk: &B,
    grid: &[ComplexPoint],
    n: usize,
    tau: f64,
) -> Result<LocalLawDiagnostic>
where
    E: Stieltjes + ?Sized,
    T: Stieltjes + ?Sized,
    B: Stieltjes + ?Sized,
{
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Domain(format!("tau = {tau} must lie in (0, 1)")));
    }
    let mut points = Vec::with_capacity(grid.len());
    for &z in grid {
        if !in_local_law_domain(z, n, tau) {
            return Err(Error::Domain(format!(
                "z = {} + {}i outside the local-law domain for n = {n}, tau = {tau}",
                z.re, z.im
            )));
        }
        let abs_shat = (empirical.eval(z)? - theory.eval(z)?).norm();
        let n_eta = n as f64 * z.im;
        let psi = (bulk.eval(z)?.im.max(0.0) / n_eta).sqrt() + 1.0 / n_eta;
        points.push(DiagnosticPoint {
            energy: z.re,
            eta: z.im,
            abs_shat,
            psi,
            ratio: abs_shat / psi,
        });
    }
    Ok(LocalLawDiagnostic { n, tau, points })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Domain("slope needs two or more paired points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("log-log slope needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("abscissae are all equal".into()));
    }
    Ok(sxy / sxx)
}

/// Median of a nonempty slice (mean of the middle pair for even length).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::sym_eig;
    use crate::measures::Moments;
    use alloc::vec;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymmetricMatrix::from_upper(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn diagonal_matrix_measure() {
        let m = SymmetricMatrix::from_row_major(2, vec![1.0, 0.0, 0.0, 2.0]).unwrap();
        let mu = spectral_measure_in_direction(&sym_eig(&m).unwrap(), &[1.0, 0.0]).unwrap();
        assert_eq!(mu.eigenvalues(), &[2.0, 1.0]);
        assert_eq!(mu.weights(), &[0.0, 1.0]);
    }

    #[test]
    fn eigenvector_direction_and_moments() {
        let m = random_symmetric(12, 5);
        let d = sym_eig(&m).unwrap();
        let mu = spectral_measure_in_direction(&d, d.vector(3)).unwrap();
        assert!((mu.weights()[3] - 1.0).abs() < 1e-12);
        let mut v: Vec<f64> = (0..12).map(|i| (i as f64 + 1.0).sin()).collect();
        let norm = eig::dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let mu = spectral_measure_in_direction(&d, &v).unwrap();
        let fast = spectral_measure_of_matrix(&m, &v).unwrap();
        for k in 1..=3u32 {
            let direct = m.power_form(&v, k);
            assert!((mu.moment(k).unwrap() - direct).abs() < 1e-8);
            assert!((fast.moment(k).unwrap() - direct).abs() < 1e-8);
        }
        assert!(matches!(
            spectral_measure_in_direction(&d, &[1.0; 12]),
            Err(Error::Norm(_))
        ));
    }

    #[test]
    fn uniform_weights_give_unit_profile() {
        let ev: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let mu = WeightedSpectralMeasure::uniform(ev).unwrap();
        let grid: Vec<f64> = (0..41).map(|i| -1.2 + 0.06 * i as f64).collect();
        let p = windowed_profile(&mu, &grid, 0.05).unwrap();
        for (e, c) in p.estimates.iter().zip(&p.counts) {
            assert_eq!(e.is_some(), *c > 0);
            if let Some(e) = e {
                assert!((e - 1.0).abs() < 1e-12);
            }
        }
        assert!(p.estimates.iter().any(|e| e.is_none()));
    }

    #[test]
    fn single_point_profile() {
        let mu = WeightedSpectralMeasure::new(vec![0.0], vec![1.0]).unwrap();
        let p = windowed_profile(&mu, &[0.0], 0.1).unwrap();
        assert_eq!(p.estimates, vec![Some(1.0)]);
        assert!(windowed_profile(&mu, &[0.0], 0.0).is_err());
    }

    #[test]
    fn disjoint_windows_telescope() {
        let ev: Vec<f64> = (0..30).map(|i| i as f64 / 10.0).collect();
        let w: Vec<f64> = (0..30).map(|i| (i + 1) as f64 / 465.0).collect();
        let mu = WeightedSpectralMeasure::new(ev, w).unwrap();
        let grid = [0.2, 1.0, 1.8, 2.6];
        let p = windowed_profile(&mu, &grid, 0.25).unwrap();
        let total: f64 = p
            .estimates
            .iter()
            .zip(&p.counts)
            .map(|(e, c)| e.unwrap_or(0.0) * *c as f64 / 30.0)
            .sum();
        let covered: f64 = mu
            .iter()
            .filter(|(l, _)| grid.iter().any(|x| (l - x).abs() <= 0.25))
            .map(|(_, w)| w)
            .sum();
        assert!((total - covered).abs() < 1e-14);
    }

    #[test]
    fn outliers_partition_and_cluster() {
        let mu = WeightedSpectralMeasure::new(
            vec![5.0, 5.0 + 5e-7, 1.9, 0.0, -1.0, -3.0],
            vec![0.2, 0.1, 0.1, 0.2, 0.2, 0.2],
        )
        .unwrap();
        let bulk = [Interval { lo: -2.0, hi: 2.0 }];
        let clusters = extract_outliers(&mu, &bulk, 0.2).unwrap();
        assert_eq!(clusters.len(), 2);
        assert!((clusters[0].weight - 0.3).abs() < 1e-15);
        assert_eq!(clusters[0].eigenvalues.len(), 2);
        assert_eq!(clusters[1].location, -3.0);
        let (out, inside) = partition_spectrum(&mu, &bulk, 0.2).unwrap();
        assert_eq!(out.len() + inside.len(), mu.len());
        assert!(extract_outliers(&mu, &bulk, 0.0).is_err());
    }

    #[test]
    fn degenerate_cluster_weights_are_basis_invariant() {
        // M = Q diag(3, 1, 1, 1, 0) Qᵀ with Q a reflector.
        let n = 5;
        let u = [1.0, 2.0, -1.0, 0.5, 0.3];
        let uu = eig::dot(&u, &u);
        let q = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 } - 2.0 * u[i] * u[j] / uu;
        let diag = [3.0, 1.0, 1.0, 1.0, 0.0];
        let m = SymmetricMatrix::from_upper(n, |i, j| (0..n).map(|l| q(i, l) * diag[l] * q(j, l)).sum());
        let v = [0.5, 0.5, 0.5, 0.5, 0.0];
        let exact: f64 = (1..4)
            .map(|l| (0..n).map(|i| q(i, l) * v[i]).sum::<f64>().powi(2))
            .sum();
        let in_cluster = |l: f64| (l - 1.0).abs() < 1e-8;

        let d = sym_eig(&m).unwrap();
        let fast = spectral_measure_of_matrix(&m, &v).unwrap();
        let full = spectral_measure_in_direction(&d, &v).unwrap();
        // Re-randomize the eigenbasis of the cluster with a rotation.
        let idx: Vec<usize> = (0..n).filter(|&i| in_cluster(d.eigenvalues()[i])).collect();
        assert_eq!(idx.len(), 3);
        let (c, s) = (0.6f64, 0.8f64);
        let rot = [[c, -s, 0.0], [s * c, c * c, -s], [s * s, s * c, c]];
        let mut rotated = 0.0;
        for r in &rot {
            let phi: Vec<f64> = (0..n)
                .map(|k| idx.iter().zip(r).map(|(&i, rc)| rc * d.vector(i)[k]).sum())
                .collect();
            assert!((eig::dot(&phi, &phi) - 1.0).abs() < 1e-12);
            rotated += eig::dot(&phi, &v).powi(2);
        }
        let cluster = |mu: &WeightedSpectralMeasure| -> f64 {
            mu.iter().filter(|(l, _)| in_cluster(*l)).map(|(_, w)| w).sum()
        };
        assert!(exact > 0.1);
        for got in [cluster(&fast), cluster(&full), rotated] {
            assert!((got - exact).abs() < 1e-8, "{got} vs {exact}");
        }
    }

    #[test]
    fn identical_evaluators_give_zero_ratio() {
        let mu = WeightedSpectralMeasure::uniform(vec![-1.0, 0.0, 1.0]).unwrap();
        let grid = [Complex64::new(0.0, 0.5), Complex64::new(0.3, 0.2)];
        let d = local_law_diagnostic(&mu, &mu, &mu, &grid, 100, 0.1).unwrap();
        assert!(d.points.iter().all(|p| p.ratio == 0.0 && p.psi > 0.0));
        let bad = [Complex64::new(0.0, 1e-4)];
        assert!(matches!(
            local_law_diagnostic(&mu, &mu, &mu, &bad, 100, 0.1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn slope_and_median() {
        let xs = [0.2, 0.1, 0.05];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
        assert!((window_half_width(10_000, 0.1) - 10f64.powf(0.4) / 100.0).abs() < 1e-15);
    }
}
