//! Even power series of the Laplacian chain at the origin.
//!
//! Writing `v_k(r) = Σ_j α[k][j] r^{2j}`, the relation `-Δ v_k = v_{k+1}`
//! with `Δ r^{2j} = 2j(N+2j-2) r^{2j-2}` gives
//! `α[k][j] = -α[k+1][j-1] / (2j(N+2j-2))`, where `v_m := e^{v_0}` is
//! expanded through the usual exponential-of-series recurrence.

use crate::constants::Dimension;

#[derive(Debug, Clone, PartialEq)]
pub struct OriginSeries {
    /// `coeffs[k][j]` multiplies `r^{2j}` in `v_k`.
    pub coeffs: Vec<Vec<f64>>,
}

impl OriginSeries {
    /// Coefficients through `r^{2 * terms}` for initial data `a_k = Δ^k u(0)`.
    pub fn new(dim: Dimension, a: &[f64], terms: usize) -> Self {
        let m = dim.m as usize;
        let nf = dim.nf();
        let mut coeffs = vec![vec![0.0; terms + 1]; m];
        for (k, row) in coeffs.iter_mut().enumerate() {
            row[0] = if k % 2 == 0 { a[k] } else { -a[k] };
        }
        // exp_series[j]: coefficient of s^j in e^{v_0(s)}, s = r^2
        let mut exp_series = vec![0.0; terms + 1];
        exp_series[0] = a[0].exp();
        for j in 1..=terms {
            let denom = 2.0 * j as f64 * (nf + 2.0 * j as f64 - 2.0);
            // the forcing of v_{m-1} needs exp_series[j-1], which uses α[0][..j-1] only
            if j >= 2 {
                let n = j - 1;
                let mut acc = 0.0;
                for i in 1..=n {
                    acc += i as f64 * coeffs[0][i] * exp_series[n - i];
                }
                exp_series[n] = acc / n as f64;
            }
            for k in 0..m {
                let source = if k + 1 < m {
                    coeffs[k + 1][j - 1]
                } else {
                    exp_series[j - 1]
                };
                coeffs[k][j] = -source / denom;
            }
        }
        OriginSeries { coeffs }
    }

    pub fn terms(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    pub fn value(&self, k: usize, r: f64) -> f64 {
        let s = r * r;
        self.coeffs[k].iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn derivative(&self, k: usize, r: f64) -> f64 {
        let s = r * r;
        let c = &self.coeffs[k];
        let mut acc = 0.0;
        for j in (1..c.len()).rev() {
            acc = acc * s + 2.0 * j as f64 * c[j];
        }
        acc * r
    }

    pub fn second_derivative(&self, k: usize, r: f64) -> f64 {
        let s = r * r;
        let c = &self.coeffs[k];
        let mut acc = 0.0;
        for j in (1..c.len()).rev() {
            let jf = j as f64;
            acc = acc * s + 2.0 * jf * (2.0 * jf - 1.0) * c[j];
        }
        acc
    }

    /// Magnitude of the last retained term, used as a truncation-error proxy.
    pub fn tail_estimate(&self, r: f64) -> f64 {
        let j = self.terms();
        let s = (r * r).powi(j as i32);
        self.coeffs
            .iter()
            .map(|row| row[j].abs() * s)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::c_coeff_f64;

    #[test]
    fn m1_leading_coefficient() {
        let dim = Dimension::new(1, 5).unwrap();
        let s = OriginSeries::new(dim, &[0.0], 6);
        assert!((s.coeffs[0][1] + 1.0 / 10.0).abs() < 1e-15);
    }

    #[test]
    fn m2_chain() {
        let dim = Dimension::new(2, 6).unwrap();
        let a1 = 0.7;
        let s = OriginSeries::new(dim, &[0.0, a1], 6);
        // v_1 = -Δu, v_1 ≈ -a_1 - e^{0} r^2/(2N)
        assert!((s.coeffs[1][0] + a1).abs() < 1e-15);
        assert!((s.coeffs[1][1] + 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn u_series_matches_polynomial_plus_forcing() {
        // u = Σ_{k<m} a_k r^{2k}/c_k + (-1)^m e^{a_0} r^{2m}/c_m + O(r^{2m+2})
        for (m, n) in [(1u32, 3u32), (2, 5), (3, 7), (4, 11)] {
            let dim = Dimension::new(m, n).unwrap();
            let a: Vec<f64> = (0..m).map(|k| 0.3 - 0.2 * k as f64).collect();
            let s = OriginSeries::new(dim, &a, m as usize + 2);
            for (k, &ak) in a.iter().enumerate() {
                let expect = ak / c_coeff_f64(k as u32, n);
                assert!((s.coeffs[0][k] - expect).abs() < 1e-14 * expect.abs().max(1.0));
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let expect = sign * a[0].exp() / c_coeff_f64(m, n);
            let got = s.coeffs[0][m as usize];
            assert!((got - expect).abs() < 1e-14 * expect.abs());
        }
    }

    #[test]
    fn exponential_recurrence_against_direct_expansion() {
        // m = 1: u = a0 + α1 s + α2 s^2; check α2 from e^{u} = e^{a0}(1 + α1 s + ...)
        let dim = Dimension::new(1, 4).unwrap();
        let s = OriginSeries::new(dim, &[0.5], 4);
        let e0 = 0.5f64.exp();
        let a1 = -e0 / 8.0;
        assert!((s.coeffs[0][1] - a1).abs() < 1e-15);
        // -Δ(α2 r^4) = -α2 * 4(N+2) r^2 = e0 * α1 r^2
        let a2 = -e0 * a1 / (4.0 * 6.0);
        assert!((s.coeffs[0][2] - a2).abs() < 1e-15);
    }
}
