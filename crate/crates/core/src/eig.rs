//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by implicit QL with Wilkinson shifts.
//!
//! Two entry points share the kernel. [`sym_eig`] returns the full
//! decomposition. [`spectral_weights`] returns the eigenvalues and the squared
//! components `⟨φ_i, v⟩²` of a single direction; it never forms eigenvectors,
//! which makes it `O(n³)` with a small constant and `O(n²)` memory.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Entrywise symmetry tolerance accepted at construction.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Allowed deviation of a direction vector from unit norm.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-10;

const QL_MAX_SWEEPS: usize = 60;

/// Dense symmetric matrix stored in full, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Checks symmetry within [`SYMMETRY_TOLERANCE`] and stores the
    /// symmetrized matrix.
    pub fn from_row_major(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Domain(format!(
                "{} entries for a {n}x{n} matrix",
                data.len()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                let gap = (a - b).abs();
                if !(gap <= SYMMETRY_TOLERANCE) {
                    return Err(Error::Asymmetry { row: i, col: j, gap });
                }
                let mid = 0.5 * (a + b);
                data[i * n + j] = mid;
                data[j * n + i] = mid;
            }
        }
        Ok(Self { n, data })
    }

    /// Builds the matrix from its upper triangle `f(i, j)`, `i ≤ j`.
    pub fn from_upper<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    /// `⟨v, Mᵏ v⟩`.
    pub fn power_form(&self, v: &[f64], k: u32) -> f64 {
        let mut x = v.to_vec();
        for _ in 0..k {
            x = self.matvec(&x);
        }
        dot(v, &x)
    }
}

/// Eigenvalues in descending order with their orthonormal eigenvectors.
///
/// Each eigenvector has its largest-magnitude entry (lowest index on ties)
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    /// Row `i` holds the eigenvector of `eigenvalues[i]`.
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.vectors[i * n..(i + 1) * n]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.dim().max(1))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Eight independent accumulators let the loop vectorize; the summation
    // order is fixed, so results are reproducible.
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (x, y) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for j in chunks * 8..a.len() {
        tail += a[j] * b[j];
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `row -= a·x + b·y`.
#[inline]
fn rank2_update(row: &mut [f64], a: f64, x: &[f64], b: f64, y: &[f64]) {
    for ((r, xj), yj) in row.iter_mut().zip(x).zip(y) {
        *r -= a * xj + b * yj;
    }
}

/// Householder reflector `H = I − β u uᵀ` with `H x = e₀·alpha`.
struct Reflector {
    u: Vec<f64>,
    beta: f64,
}

fn reflector(x: &[f64]) -> (Reflector, f64) {
    let head = x.first().copied().unwrap_or(0.0);
    let tail: f64 = x.iter().skip(1).map(|v| v * v).sum();
    if tail == 0.0 {
        return (
            Reflector {
                u: x.to_vec(),
                beta: 0.0,
            },
            head,
        );
    }
    let sigma = (head * head + tail).sqrt();
    let alpha = if head >= 0.0 { -sigma } else { sigma };
    let mut u = x.to_vec();
    u[0] -= alpha;
    let beta = 1.0 / (sigma * (sigma + head.abs()));
    (Reflector { u, beta }, alpha)
}

struct Tridiagonal {
    diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`; `off[n − 1] = 0`.
    off: Vec<f64>,
    /// Reflector of step `k` acts on indices `k + 1..n`.
    reflectors: Vec<Reflector>,
}

/// Reduces the row-major `a` (destroyed) to tridiagonal form `Qᵀ A Q` with
/// `Q e₀ = e₀`.
///
/// Step `k` applies the rank-two update to each row of the trailing block and,
/// while the row is hot, takes its product with the next reflector, so each
/// step makes one pass over the trailing block.
fn tridiagonalize(a: &mut [f64], n: usize, keep_reflectors: bool) -> Tridiagonal {
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut reflectors = Vec::new();
    if n == 0 {
        return Tridiagonal {
            diag,
            off,
            reflectors,
        };
    }
    if n == 1 {
        diag[0] = a[0];
        return Tridiagonal {
            diag,
            off,
            reflectors,
        };
    }
    let (mut refl, first) = reflector(&a[1..n]);
    off[0] = first;
    let mut p = vec![0.0; n - 1];
    if refl.beta != 0.0 {
        for i in 0..n - 1 {
            let r = i + 1;
            p[i] = refl.beta * dot(&a[r * n + 1..r * n + n], &refl.u);
        }
    }
    let mut w = vec![0.0; n - 1];
    for k in 0..n - 1 {
        diag[k] = a[k * n + k];
        let m = n - k - 1;
        let next_row = k + 1;
        let (next, next_off) = if refl.beta != 0.0 {
            let u = &refl.u;
            let half = 0.5 * refl.beta * dot(u, &p[..m]);
            for j in 0..m {
                w[j] = p[j] - half * u[j];
            }
            let w = &w[..m];
            {
                let row = &mut a[next_row * n + k + 1..next_row * n + n];
                rank2_update(row, u[0], w, w[0], u);
            }
            let (nr, noff) = reflector(&a[next_row * n + k + 2..next_row * n + n]);
            for i in 1..m {
                let r = k + 1 + i;
                let row = &mut a[r * n + k + 1..r * n + n];
                rank2_update(row, u[i], w, w[i], u);
                if nr.beta != 0.0 {
                    p[i - 1] = nr.beta * dot(&row[1..], &nr.u);
                }
            }
            (nr, noff)
        } else {
            let (nr, noff) = reflector(&a[next_row * n + k + 2..next_row * n + n]);
            if nr.beta != 0.0 {
                for i in 1..m {
                    let r = k + 1 + i;
                    p[i - 1] = nr.beta * dot(&a[r * n + k + 2..r * n + n], &nr.u);
                }
            }
            (nr, noff)
        };
        if k + 2 < n {
            off[k + 1] = next_off;
        }
        if keep_reflectors {
            reflectors.push(refl);
        }
        refl = next;
    }
    diag[n - 1] = a[n * n - 1];
    Tridiagonal {
        diag,
        off,
        reflectors,
    }
}

/// Implicit QL on the tridiagonal `(d, e)`; eigenvalues overwrite `d`.
/// `rotate(i, c, s)` receives every plane rotation acting on `(i, i + 1)`.
fn implicit_ql<R>(d: &mut [f64], e: &mut [f64], mut rotate: R) -> Result<()>
where
    R: FnMut(usize, f64, f64),
{
    let n = d.len();
    let eps = f64::EPSILON;
    let mut shift = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > QL_MAX_SWEEPS {
                    return Err(Error::EigenConvergence(l));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                shift += h;

                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate(i, c, s);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if !(e[l].abs() > eps * tst1) {
                    break;
                }
            }
        }
        d[l] += shift;
        e[l] = 0.0;
    }
    Ok(())
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Full symmetric eigendecomposition.
pub fn sym_eig(matrix: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let n = matrix.dim();
    let mut a = matrix.data.clone();
    let tri = tridiagonalize(&mut a, n, true);
    drop(a);

    // zt = Qᵀ = H_last ⋯ H_0, built by applying H_0, H_1, … in turn.
    let mut zt = vec![0.0; n * n];
    for i in 0..n {
        zt[i * n + i] = 1.0;
    }
    let mut coeff = vec![0.0; n];
    for (k, refl) in tri.reflectors.iter().enumerate() {
        if refl.beta == 0.0 {
            continue;
        }
        coeff.iter_mut().for_each(|c| *c = 0.0);
        for (i, ui) in refl.u.iter().enumerate() {
            let row = &zt[(k + 1 + i) * n..(k + 2 + i) * n];
            for (c, z) in coeff.iter_mut().zip(row) {
                *c += ui * z;
            }
        }
        for (i, ui) in refl.u.iter().enumerate() {
            let f = refl.beta * ui;
            let row = &mut zt[(k + 1 + i) * n..(k + 2 + i) * n];
            for (z, c) in row.iter_mut().zip(&coeff) {
                *z -= f * c;
            }
        }
    }

    let Tridiagonal {
        mut diag, mut off, ..
    } = tri;
    implicit_ql(&mut diag, &mut off, |i, c, s| {
        let (head, tail) = zt.split_at_mut((i + 1) * n);
        let zi = &mut head[i * n..];
        let zi1 = &mut tail[..n];
        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
            let h = *b;
            *b = s * *a + c * h;
            *a = c * *a - s * h;
        }
    })?;

    let order = descending_order(&diag);
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &i in &order {
        let v = &zt[i * n..(i + 1) * n];
        let mut lead = 0;
        for (j, x) in v.iter().enumerate() {
            if x.abs() > v[lead].abs() {
                lead = j;
            }
        }
        let sign = if v.get(lead).copied().unwrap_or(0.0) < 0.0 {
            -1.0
        } else {
            1.0
        };
        vectors.extend(v.iter().map(|x| sign * x));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        vectors,
    })
}

/// Eigenvalues (descending) and the weights `⟨φ_i, v⟩²` of a unit vector `v`.
///
/// `v` is first mapped to `e₀` by a reflector `P` (skipped when `v = e₀`);
/// the weights are then the squared first components of the eigenvectors of
/// `P M P`, which the QL sweep tracks without forming any eigenvector.
pub fn spectral_weights(matrix: &SymmetricMatrix, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = matrix.dim();
    if v.len() != n {
        return Err(Error::Domain(format!(
            "direction of length {} for a {n}x{n} matrix",
            v.len()
        )));
    }
    let norm = dot(v, v).sqrt();
    if !((norm - 1.0).abs() <= UNIT_NORM_TOLERANCE) {
        return Err(Error::Norm(norm));
    }
    let mut a = matrix.data.clone();
    let (refl, _) = reflector(v);
    if refl.beta != 0.0 {
        let u = &refl.u;
        let p: Vec<f64> = (0..n).map(|i| refl.beta * dot(&a[i * n..(i + 1) * n], u)).collect();
        let half = 0.5 * refl.beta * dot(u, &p);
        let w: Vec<f64> = p.iter().zip(u).map(|(pi, ui)| pi - half * ui).collect();
        for i in 0..n {
            rank2_update(&mut a[i * n..(i + 1) * n], u[i], &w, w[i], u);
        }
    }
    let tri = tridiagonalize(&mut a, n, false);
    drop(a);
    let Tridiagonal {
        mut diag, mut off, ..
    } = tri;
    let mut first = vec![0.0; n];
    if n > 0 {
        first[0] = 1.0;
    }
    implicit_ql(&mut diag, &mut off, |i, c, s| {
        let h = first[i + 1];
        first[i + 1] = s * first[i] + c * h;
        first[i] = c * first[i] - s * h;
    })?;
    let order = descending_order(&diag);
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let weights = order.iter().map(|&i| first[i] * first[i]).collect();
    Ok((eigenvalues, weights))
}

/// Eigenvalues only, descending.
pub fn eigenvalues(matrix: &SymmetricMatrix) -> Result<Vec<f64>> {
    let n = matrix.dim();
    let mut e0 = vec![0.0; n];
    if n > 0 {
        e0[0] = 1.0;
    }
    spectral_weights(matrix, &e0).map(|(values, _)| values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymmetricMatrix::from_upper(n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn reconstruction_error(m: &SymmetricMatrix, d: &EigenDecomposition) -> f64 {
        let n = m.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n)
                    .map(|k| d.eigenvalues()[k] * d.vector(k)[i] * d.vector(k)[j])
                    .sum();
                worst = worst.max((r - m.get(i, j)).abs());
            }
        }
        worst
    }

    fn gram_error(d: &EigenDecomposition) -> f64 {
        let n = d.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let g = dot(d.vector(i), d.vector(j));
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    #[test]
    fn identity() {
        let mut m = SymmetricMatrix::zeros(3);
        for i in 0..3 {
            m.set(i, i, 1.0);
        }
        let d = sym_eig(&m).unwrap();
        assert_eq!(d.eigenvalues(), &[1.0, 1.0, 1.0]);
        assert!(gram_error(&d) < 1e-14);
    }

    #[test]
    fn swap_matrix() {
        let m = SymmetricMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let d = sym_eig(&m).unwrap();
        assert!((d.eigenvalues()[0] - 1.0).abs() < 1e-15);
        assert!((d.eigenvalues()[1] + 1.0).abs() < 1e-15);
        let h = 0.5f64.sqrt();
        assert!((d.vector(0)[0] - h).abs() < 1e-15 && (d.vector(0)[1] - h).abs() < 1e-15);
        // ±(1, −1)/√2, lowest index wins the tie
        assert!((d.vector(1)[0] - h).abs() < 1e-15 && (d.vector(1)[1] + h).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let err = SymmetricMatrix::from_row_major(2, vec![0.0, 1.0, 1.1, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Asymmetry { .. }));
    }

    #[test]
    fn small_sizes() {
        for n in 0..4 {
            let m = random_symmetric(n, n as u64);
            let d = sym_eig(&m).unwrap();
            assert_eq!(d.dim(), n);
            if n > 0 {
                assert!(reconstruction_error(&m, &d) < 1e-13);
            }
        }
    }

    #[test]
    fn random_50_reconstruction() {
        let m = random_symmetric(50, 7);
        let d = sym_eig(&m).unwrap();
        assert!(reconstruction_error(&m, &d) < 1e-8);
        assert!(gram_error(&d) < 1e-8);
        assert!(d.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        for v in d.vectors() {
            let lead = v.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn residual_bound() {
        for &n in &[2usize, 5, 50, 200] {
            let m = random_symmetric(n, 100 + n as u64);
            let d = sym_eig(&m).unwrap();
            let scale = m.max_abs();
            for i in 0..n {
                let mv = m.matvec(d.vector(i));
                let res = mv
                    .iter()
                    .zip(d.vector(i))
                    .map(|(a, b)| (a - d.eigenvalues()[i] * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-8 * (1.0 + d.eigenvalues()[i].abs()) * scale.max(1.0));
            }
            assert!(gram_error(&d) < 1e-8, "n = {n}");
        }
    }

    #[test]
    fn weights_match_full_decomposition() {
        let n = 60;
        let m = random_symmetric(n, 3);
        let d = sym_eig(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let (values, weights) = spectral_weights(&m, &v).unwrap();
        for i in 0..n {
            assert!((values[i] - d.eigenvalues()[i]).abs() < 1e-12);
            let w = dot(d.vector(i), &v).powi(2);
            assert!((weights[i] - w).abs() < 1e-12, "{i}");
        }
        assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut e0 = vec![0.0; n];
        e0[0] = 1.0;
        let (_, w0) = spectral_weights(&m, &e0).unwrap();
        for i in 0..n {
            assert!((w0[i] - d.vector(i)[0].powi(2)).abs() < 1e-12);
        }
        v[0] += 1e-3;
        assert!(matches!(spectral_weights(&m, &v), Err(Error::Norm(_))));
    }
}
