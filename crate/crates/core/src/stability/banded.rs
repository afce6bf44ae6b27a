//! Symmetric banded matrices and the smallest generalized eigenpair of
//! `K φ = λ M φ` with `M` diagonal positive.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Lower band storage: entry `(i, j)` with `0 <= i - j <= bw` lives at `i * (bw + 1) + (i - j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSym {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)` (once on the diagonal).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        self.data[i * (self.bw + 1) + (i - j)] += v;
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * (self.bw + 1)]).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] += row[0] * x[i];
            for d in 1..=self.bw.min(i) {
                let j = i - d;
                y[i] += row[d] * x[j];
                y[j] += row[d] * x[i];
            }
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `D^{-1/2} self D^{-1/2}` for a positive diagonal `d`.
    pub fn congruence(&self, d: &[f64]) -> BandedSym {
        let s: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
        let mut out = self.clone();
        for i in 0..self.n {
            for k in 0..=self.bw.min(i) {
                out.data[i * (self.bw + 1) + k] *= s[i] * s[i - k];
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let lo_j = i.saturating_sub(self.bw);
            let hi_j = (i + self.bw).min(self.n - 1);
            let radius: f64 = (lo_j..=hi_j).filter(|&j| j != i).map(|j| self.get(i, j).abs()).sum();
            let c = self.get(i, i);
            lo = lo.min(c - radius);
            hi = hi.max(c + radius);
        }
        (lo, hi)
    }

    /// Number of eigenvalues below `sigma`, from the pivots of an unpivoted
    /// `LDLᵀ` of `self - sigma I`. Tiny pivots are nudged off zero, which
    /// leaves the count valid for all `sigma` away from the spectrum.
    pub fn count_below(&self, sigma: f64) -> Result<usize> {
        let f = self.ldlt(sigma, true)?;
        Ok(f.d.iter().filter(|&&p| p < 0.0).count())
    }

    fn ldlt(&self, sigma: f64, nudge: bool) -> Result<Ldlt> {
        let (n, bw) = (self.n, self.bw);
        let scale = self.data.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(sigma.abs()).max(f64::MIN_POSITIVE);
        // l[i][k] = L(i, i-k) for k in 1..=bw
        let mut l = vec![0.0; n * (bw + 1)];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..i {
                // L(i,j) = (A(i,j) - Σ_{p<j} L(i,p) d_p L(j,p)) / d_j
                let mut s = self.get(i, j);
                let p0 = j0.max(j.saturating_sub(bw));
                for p in p0..j {
                    s -= l[i * (bw + 1) + (i - p)] * d[p] * l[j * (bw + 1) + (j - p)];
                }
                l[i * (bw + 1) + (i - j)] = s / d[j];
            }
            let mut s = self.get(i, i) - sigma;
            for p in j0..i {
                let lip = l[i * (bw + 1) + (i - p)];
                s -= lip * lip * d[p];
            }
            if s.abs() < 1e-300_f64.max(f64::EPSILON * 1e-6 * scale) {
                if !nudge {
                    return Err(Error::Numerical("zero pivot in banded factorization".into()));
                }
                s = f64::EPSILON * 1e-6 * scale;
            }
            if !s.is_finite() {
                return Err(Error::Numerical("non-finite pivot in banded factorization".into()));
            }
            d[i] = s;
        }
        Ok(Ldlt { n, bw, l, d })
    }
}

struct Ldlt {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldlt {
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let mut x = b.to_vec();
        for i in 0..n {
            for p in i.saturating_sub(bw)..i {
                x[i] -= self.l[i * (bw + 1) + (i - p)] * x[p];
            }
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for j in i + 1..=(i + bw).min(n - 1) {
                x[i] -= self.l[j * (bw + 1) + (j - i)] * x[j];
            }
        }
        x
    }
}

/// Smallest eigenpair of `K φ = λ M φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Eigenvector, normalized so that `φᵀ M φ = 1`.
    pub vector: Vec<f64>,
    /// `true` when the dense fallback produced the result.
    pub dense: bool,
}

/// Largest size for the dense fallback.
pub const DENSE_LIMIT: usize = 2048;

/// Minimal generalized eigenpair via inertia bisection and shifted inverse
/// iteration on `M^{-1/2} K M^{-1/2}`; falls back to a dense solve when the
/// banded route breaks down and `n <= DENSE_LIMIT`.
pub fn min_eig(k: &BandedSym, mass: &[f64]) -> Result<EigenPair> {
    if mass.len() != k.n() {
        return Err(Error::Config("mass diagonal does not match matrix size".into()));
    }
    if mass.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Numerical("mass diagonal must be positive".into()));
    }
    if k.n() == 0 {
        return Err(Error::Config("empty eigenproblem".into()));
    }
    let c = k.congruence(mass);
    match banded_min(&c) {
        Ok((value, y)) => Ok(finish(value, y, mass, false)),
        Err(e) if c.n() <= DENSE_LIMIT => {
            log::debug!("banded eigensolver fell back to dense: {e}");
            let (value, y) = dense_min(&c);
            Ok(finish(value, y, mass, true))
        }
        Err(e) => Err(e),
    }
}

fn finish(value: f64, y: Vec<f64>, mass: &[f64], dense: bool) -> EigenPair {
    let mut vector: Vec<f64> = y.iter().zip(mass).map(|(v, m)| v / m.sqrt()).collect();
    let norm: f64 = vector.iter().zip(mass).map(|(v, m)| v * v * m).sum::<f64>().sqrt();
    // sign convention: largest entry positive
    let pivot = vector.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
    let s = if pivot < 0.0 { -1.0 / norm } else { 1.0 / norm };
    for v in vector.iter_mut() {
        *v *= s;
    }
    EigenPair { value, vector, dense }
}

fn dense_min(c: &BandedSym) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(c.to_dense());
    let (i, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    (value, eig.eigenvectors.column(i).iter().copied().collect())
}

fn banded_min(c: &BandedSym) -> Result<(f64, Vec<f64>)> {
    let (mut lo, mut hi) = c.gershgorin();
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    lo -= 1e-3 * width + 1e-300;
    hi += 1e-3 * width;
    if c.count_below(lo)? != 0 {
        return Err(Error::Numerical("inertia count inconsistent at the Gershgorin bound".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            break;
        }
        if c.count_below(mid)? >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // shifted inverse iteration from just below the eigenvalue
    let shift = lo - 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let f = c.ldlt(shift, true)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut y: Vec<f64> = (0..c.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut y);
    let mut rq = f64::NAN;
    for _ in 0..50 {
        let mut z = f.solve(&y);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("inverse iteration diverged".into()));
        }
        normalize(&mut z);
        let new_rq = c.quad_form(&z);
        let done = (new_rq - rq).abs() <= 1e-14 * new_rq.abs().max(hi - lo).max(f64::MIN_POSITIVE);
        y = z;
        rq = new_rq;
        if done {
            break;
        }
    }
    if !rq.is_finite() {
        return Err(Error::Numerical("Rayleigh quotient is not finite".into()));
    }
    Ok((rq, y))
}

fn normalize(y: &mut [f64]) {
    let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in y.iter_mut() {
        *v /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> BandedSym {
        let mut a = BandedSym::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn second_difference_spectrum() {
        let n = 200;
        let a = laplacian_1d(n);
        let e = min_eig(&a, &vec![1.0; n]).unwrap();
        let expect = 4.0 * (std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin().powi(2);
        assert!((e.value - expect).abs() < 1e-12, "{} vs {}", e.value, expect);
        assert!(!e.dense);
        let r: f64 = a.mul_vec(&e.vector).iter().zip(&e.vector).map(|(x, y)| (x - e.value * y).abs()).fold(0.0, f64::max);
        assert!(r < 1e-9);
    }

    #[test]
    fn matches_dense_on_random_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        let mut a = BandedSym::zeros(n, 3);
        for i in 0..n {
            for d in 0..=3.min(i) {
                a.add(i, i - d, rng.gen_range(-1.0..1.0));
            }
        }
        let mass: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        let e = min_eig(&a, &mass).unwrap();
        let (dense, _) = dense_min(&a.congruence(&mass));
        assert!((e.value - dense).abs() < 1e-10, "{} vs {}", e.value, dense);
        let lhs = a.mul_vec(&e.vector);
        for i in 0..n {
            assert!((lhs[i] - e.value * mass[i] * e.vector[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn inertia_count_matches_dense() {
        let a = laplacian_1d(30);
        let eig = SymmetricEigen::new(a.to_dense());
        for sigma in [0.1, 1.0, 2.0, 3.5] {
            let expect = eig.eigenvalues.iter().filter(|&&l| l < sigma).count();
            assert_eq!(a.count_below(sigma).unwrap(), expect);
        }
    }

    #[test]
    fn spd_has_positive_minimum() {
        let mut a = laplacian_1d(40);
        for i in 0..40 {
            a.add(i, i, 0.5);
        }
        assert!(min_eig(&a, &vec![1.0; 40]).unwrap().value > 0.0);
    }
}
