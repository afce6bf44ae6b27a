//! Closed-form constants: Hardy and Rellich constants, the iterated-Laplacian
//! coefficients `c_k`, the system coefficient `d_m`, the polynomials `P_k(N)`,
//! the algebraic profiles `W_j` and the spherical solutions.
//!
//! Product formulas are evaluated in exact rational arithmetic; the `f64`
//! view of every constant is the correctly rounded value of the rational.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-order `m` of the operator `(-Δ)^m` together with the space dimension `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dimension {
    pub m: u32,
    pub n: u32,
}

impl Dimension {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Dimension("m must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::Dimension("N must be at least 1".into()));
        }
        Ok(Dimension { m, n })
    }

    pub fn is_supercritical(&self) -> bool {
        self.n > 2 * self.m
    }

    /// Rejects `N <= 2m`.
    pub fn require_supercritical(&self) -> Result<()> {
        if self.is_supercritical() {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "requires N > 2m, got m = {}, N = {}",
                self.m, self.n
            )))
        }
    }

    pub fn m_is_odd(&self) -> bool {
        self.m % 2 == 1
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(m={}, N={})", self.m, self.n)
    }
}

/// An exact rational constant with its binary64 rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalConstant {
    value: BigRational,
    float_view: f64,
}

impl RationalConstant {
    pub fn new(value: BigRational) -> Self {
        let float_view = value.to_f64().unwrap_or(f64::NAN);
        RationalConstant { value, float_view }
    }

    pub fn from_integer(v: BigInt) -> Self {
        Self::new(BigRational::from_integer(v))
    }

    pub fn exact(&self) -> &BigRational {
        &self.value
    }

    pub fn to_f64(&self) -> f64 {
        self.float_view
    }

    pub fn ln(&self) -> f64 {
        // ln(p) - ln(q) stays accurate when p/q overflows or underflows f64.
        let p = self.value.numer();
        let q = self.value.denom();
        big_ln(p) - big_ln(q)
    }

    /// `"p/q"` rendering used in tables.
    pub fn ratio_string(&self) -> String {
        format!("{}/{}", self.value.numer(), self.value.denom())
    }

    pub fn is_positive(&self) -> bool {
        self.value.is_positive()
    }
}

impl fmt::Display for RationalConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.ratio_string())
    }
}

impl Serialize for RationalConstant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("RationalConstant", 2)?;
        st.serialize_field("exact", &self.ratio_string())?;
        st.serialize_field("float", &self.float_view)?;
        st.end()
    }
}

fn big_ln(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits < 1000 {
        return v.to_f64().unwrap().abs().ln();
    }
    let shift = bits - 64;
    let top: BigInt = v.abs() >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

fn int(v: i64) -> BigInt {
    BigInt::from(v)
}

/// `λ_{N,m} = (N-2)^2 / 16^{m/2} · Π_{i=1}^{(m-1)/2} (N-4i-2)^2 (N+4i-2)^2` for odd `m`.
pub fn hardy_lambda(dim: Dimension) -> Result<RationalConstant> {
    if !dim.m_is_odd() {
        return Err(Error::Parity(format!(
            "hardy_lambda needs odd m, got m = {}",
            dim.m
        )));
    }
    dim.require_supercritical()?;
    let n = dim.n as i64;
    let mut num = int(n - 2).pow(2);
    for i in 1..=((dim.m as i64 - 1) / 2) {
        num *= int(n - 4 * i - 2).pow(2) * int(n + 4 * i - 2).pow(2);
    }
    // 16^{m/2} = 4^m
    let den = int(4).pow(dim.m);
    Ok(RationalConstant::new(BigRational::new(num, den)))
}

/// `μ_{N,m} = 16^{-m/2} Π_{i=0}^{(m-2)/2} (N+4i)^2 (N-4i-4)^2` for even `m`.
pub fn rellich_mu(dim: Dimension) -> Result<RationalConstant> {
    if dim.m_is_odd() {
        return Err(Error::Parity(format!(
            "rellich_mu needs even m, got m = {}",
            dim.m
        )));
    }
    dim.require_supercritical()?;
    let n = dim.n as i64;
    let mut num = BigInt::one();
    for i in 0..=((dim.m as i64 - 2) / 2) {
        num *= int(n + 4 * i).pow(2) * int(n - 4 * i - 4).pow(2);
    }
    let den = int(4).pow(dim.m);
    Ok(RationalConstant::new(BigRational::new(num, den)))
}

/// The Hardy-type constant matching the parity of `m`.
pub fn gamma_const(dim: Dimension) -> Result<RationalConstant> {
    dim.require_supercritical()?;
    if dim.m_is_odd() {
        hardy_lambda(dim)
    } else {
        rellich_mu(dim)
    }
}

/// `c_k = Δ^k (r^{2k}) = Π_{i=1}^k 2i (N-2+2i)`.
pub fn c_coeff(k: u32, n: u32) -> RationalConstant {
    RationalConstant::from_integer(c_coeff_int(k, n as i64))
}

pub(crate) fn c_coeff_int(k: u32, n: i64) -> BigInt {
    (1..=k as i64).fold(BigInt::one(), |acc, i| acc * int(2 * i) * int(n - 2 + 2 * i))
}

/// `c_k` as a float, the form used inside the integrators.
pub fn c_coeff_f64(k: u32, n: u32) -> f64 {
    let nf = n as f64;
    (1..=k).fold(1.0, |acc, i| {
        let i = i as f64;
        acc * 2.0 * i * (nf - 2.0 + 2.0 * i)
    })
}

/// `d_m` with `1/d_m = Π_{i=1}^{m-1} 2i (N-2i-2)`.
pub fn d_coeff(dim: Dimension) -> Result<RationalConstant> {
    dim.require_supercritical()?;
    if dim.m < 2 {
        return Err(Error::Dimension("d_m is defined for m >= 2".into()));
    }
    let n = dim.n as i64;
    let inv = (1..dim.m as i64).fold(BigInt::one(), |acc, i| acc * int(2 * i) * int(n - 2 * i - 2));
    Ok(RationalConstant::new(BigRational::new(BigInt::one(), inv)))
}

/// `P_k(N) = 2^k k! Π_{l=0}^{k-1} (N + 2l)`.
pub fn p_poly(k: u32, n: u32) -> RationalConstant {
    RationalConstant::from_integer(p_poly_int(k, n as i64))
}

fn p_poly_int(k: u32, n: i64) -> BigInt {
    let mut acc = int(2).pow(k);
    for i in 1..=k as i64 {
        acc *= int(i);
    }
    for l in 0..k as i64 {
        acc *= int(n + 2 * l);
    }
    acc
}

/// `W_j(r) = (1 + r^2)^{j - N/2}`.
pub fn w_eval(j: i32, dim: Dimension, r: f64) -> f64 {
    let p = j as f64 - dim.nf() / 2.0;
    (1.0 + r * r).powf(p)
}

/// Radial Laplacian of `W_j`, by direct differentiation.
pub fn w_laplacian(j: i32, dim: Dimension, r: f64) -> f64 {
    let p = j as f64 - dim.nf() / 2.0;
    let s = 1.0 + r * r;
    2.0 * p * s.powf(p - 2.0) * (dim.nf() * s + 2.0 * (p - 1.0) * r * r)
}

/// Spherical solution `ln[(2m)! (4λ)^{2m} / (4 + λ^2 r^2)^{2m}]` of `(-Δ)^m u = e^u` in dimension `2m`.
///
/// For `m = 1` this is `ln[32 λ^2 / (4 + λ^2 r^2)^2]`.
pub fn spherical_solution(m: u32, lam: f64, r: f64) -> f64 {
    let two_m = 2.0 * m as f64;
    ln_factorial(2 * m) + two_m * (4.0 * lam).ln() - two_m * (4.0 + lam * lam * r * r).ln()
}

/// Initial data `Δ^k u(0)`, `k < m`, of the spherical solution, evaluated with the `c_k` of dimension `n`.
pub fn spherical_initial_data(m: u32, n: u32, lam: f64) -> Vec<f64> {
    let two_m = 2.0 * m as f64;
    let x = lam * lam / 4.0;
    (0..m)
        .map(|k| {
            if k == 0 {
                ln_factorial(2 * m) + two_m * lam.ln()
            } else {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                // coefficient of r^{2k} in -2m ln(1 + x r^2), times c_k
                -two_m * sign * x.powi(k as i32) / kf * c_coeff_f64(k, n)
            }
        })
        .collect()
}

fn ln_factorial(k: u32) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// One row of the `find_n0` comparison `P_m(N)` against `λ_{N,m}`.
#[derive(Debug, Clone, Serialize)]
pub struct N0Row {
    pub n: u32,
    pub p_m: String,
    pub lambda: String,
    pub lambda_float: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct N0Scan {
    pub m: u32,
    pub n0: u32,
    /// Last `N` of the verification window.
    pub window_end: u32,
    /// `λ_{N,m}/P_m(N)` is strictly increasing across `[N0, window_end]`.
    pub ratio_increasing: bool,
    pub rows: Vec<N0Row>,
}

pub const N0_WINDOW: u32 = 200;

/// Whether `P_m(N) <= λ_{N,m}` in exact arithmetic.
pub fn p_le_lambda(m: u32, n: u32) -> Result<bool> {
    let lam = hardy_lambda(Dimension::new(m, n)?)?;
    let p = BigRational::from_integer(p_poly_int(m, n as i64));
    Ok(&p <= lam.exact())
}

/// Smallest `N0 > 2m` with `P_m(N) <= λ_{N,m}` for every `N` in `[N0, N0 + 200]`.
pub fn find_n0(m: u32) -> Result<N0Scan> {
    if m < 3 || m % 2 == 0 {
        return Err(Error::Parity(format!("find_n0 needs odd m >= 3, got {m}")));
    }
    let mut rows: Vec<N0Row> = Vec::new();
    let mut ratios: Vec<BigRational> = Vec::new();
    let mut candidate: Option<u32> = None;
    let mut n = 2 * m + 1;
    loop {
        let lam = hardy_lambda(Dimension::new(m, n)?)?;
        let p = BigRational::from_integer(p_poly_int(m, n as i64));
        let holds = &p <= lam.exact();
        ratios.push(lam.exact() / &p);
        rows.push(N0Row {
            n,
            p_m: p.numer().to_string(),
            lambda: lam.ratio_string(),
            lambda_float: lam.to_f64(),
            holds,
        });
        if holds {
            candidate.get_or_insert(n);
        } else {
            candidate = None;
        }
        if let Some(n0) = candidate {
            if n == n0 + N0_WINDOW {
                let start = (n0 - (2 * m + 1)) as usize;
                let ratio_increasing = ratios[start..].windows(2).all(|w| w[0] < w[1]);
                return Ok(N0Scan {
                    m,
                    n0,
                    window_end: n,
                    ratio_increasing,
                    rows,
                });
            }
        }
        n += 1;
        if n > 1_000_000 {
            return Err(Error::Search(format!("no N0 found for m = {m}")));
        }
    }
}

/// Row of the Hardy-constant table.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub m: u32,
    pub n: u32,
    pub exact: String,
    pub float: f64,
}

/// `γ_{N,m}` for every supercritical pair in the given ranges.
pub fn hardy_table(ms: impl IntoIterator<Item = u32>, ns: std::ops::RangeInclusive<u32>) -> Vec<TableRow> {
    let mut rows = Vec::new();
    for m in ms {
        for n in ns.clone() {
            let Ok(dim) = Dimension::new(m, n) else { continue };
            if let Ok(g) = gamma_const(dim) {
                rows.push(TableRow {
                    m,
                    n,
                    exact: g.ratio_string(),
                    float: g.to_f64(),
                });
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    fn dim(m: u32, n: u32) -> Dimension {
        Dimension::new(m, n).unwrap()
    }

    #[test]
    fn hardy_lambda_examples() {
        assert_eq!(hardy_lambda(dim(1, 10)).unwrap().exact(), &rat(16, 1));
        // 5^2 * 1^2 * 9^2 / 64
        assert_eq!(hardy_lambda(dim(3, 7)).unwrap().exact(), &rat(2025, 64));
        assert!(matches!(hardy_lambda(dim(3, 6)), Err(Error::Dimension(_))));
        assert!(matches!(hardy_lambda(dim(2, 8)), Err(Error::Parity(_))));
    }

    #[test]
    fn rellich_mu_examples() {
        assert_eq!(rellich_mu(dim(2, 8)).unwrap().exact(), &rat(64, 1));
        assert_eq!(rellich_mu(dim(2, 5)).unwrap().exact(), &rat(25, 16));
        assert!(matches!(rellich_mu(dim(4, 8)), Err(Error::Dimension(_))));
        assert!(matches!(rellich_mu(dim(3, 8)), Err(Error::Parity(_))));
    }

    #[test]
    fn gamma_dispatch() {
        assert_eq!(gamma_const(dim(3, 7)).unwrap().exact(), &rat(2025, 64));
        assert_eq!(gamma_const(dim(2, 8)).unwrap().exact(), &rat(64, 1));
        assert_eq!(gamma_const(dim(1, 3)).unwrap().exact(), &rat(1, 4));
        assert!(gamma_const(dim(2, 4)).is_err());
    }

    #[test]
    fn classical_cases_exact() {
        for n in 3..=64 {
            let l = hardy_lambda(dim(1, n)).unwrap();
            assert_eq!(l.exact(), &rat((n as i64 - 2).pow(2), 4));
        }
        for n in 5..=64 {
            let n64 = n as i64;
            let mu = rellich_mu(dim(2, n)).unwrap();
            assert_eq!(mu.exact(), &rat(n64 * n64 * (n64 - 4) * (n64 - 4), 16));
        }
    }

    #[test]
    fn float_view_is_rounded_rational() {
        let l = hardy_lambda(dim(3, 7)).unwrap();
        assert_eq!(l.to_f64(), 2025.0 / 64.0);
        let r = RationalConstant::new(rat(1, 3));
        assert_eq!(r.to_f64(), 1.0 / 3.0);
        assert!((l.ln() - (2025.0f64 / 64.0).ln()).abs() < 1e-15);
        assert_eq!(l.ratio_string(), "2025/64");
    }

    #[test]
    fn c_coeff_examples_and_recurrence() {
        assert_eq!(c_coeff(1, 10).exact(), &rat(20, 1));
        assert_eq!(c_coeff(2, 10).exact(), &rat(960, 1));
        assert_eq!(c_coeff(0, 7).exact(), &rat(1, 1));
        assert_eq!(c_coeff(3, 7).exact(), &rat(33264, 1));
        for n in 1..=64u32 {
            for k in 1..=8u32 {
                let prev = c_coeff_int(k - 1, n as i64);
                let step = BigInt::from(2 * k as i64) * BigInt::from(n as i64 - 2 + 2 * k as i64);
                assert_eq!(c_coeff_int(k, n as i64), prev * step);
                let f = c_coeff_f64(k, n);
                let exact = c_coeff(k, n).to_f64();
                assert!((f - exact).abs() <= 1e-15 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn d_coeff_examples() {
        assert_eq!(d_coeff(dim(2, 6)).unwrap().exact(), &rat(1, 4));
        assert_eq!(d_coeff(dim(2, 5)).unwrap().exact(), &rat(1, 2));
        assert!(d_coeff(dim(3, 6)).is_err());
    }

    #[test]
    fn d_coeff_closes_the_system() {
        // d_m times the product of the chain coefficients of the cooperative system is 1
        for m in 2..=6u32 {
            for n in (2 * m + 1)..(2 * m + 12) {
                let d = d_coeff(dim(m, n)).unwrap();
                let mut prod = BigRational::one();
                for k in 0..(m - 1) as i64 {
                    let mi = m as i64;
                    let ni = n as i64;
                    prod *= BigRational::from_integer(BigInt::from((ni - 2 * mi + 2 * k) * (2 * mi - 2 * k - 2)));
                }
                assert_eq!(prod * d.exact(), BigRational::one());
            }
        }
    }

    #[test]
    fn p_poly_examples() {
        assert_eq!(p_poly(1, 10).exact(), &rat(20, 1));
        assert_eq!(p_poly(3, 7).exact(), &rat(33264, 1));
        assert_eq!(p_poly(2, 5).exact(), &rat(280, 1));
    }

    #[test]
    fn w_eval_examples() {
        let d = dim(2, 8);
        for r in [0.0, 0.3, 7.0, 1e3] {
            assert_eq!(w_eval(4, d, r), 1.0);
        }
        assert!((w_eval(2, d, 1.0) - 0.25).abs() < 1e-15);
        let d = dim(2, 9);
        let ratio = w_eval(2, d, 1e4) / 1e4f64.powi(2 * 2 - 9);
        assert!((ratio - 1.0).abs() < 1e-6);
    }

    #[test]
    fn spherical_examples() {
        let lam = 0.5f64.sqrt();
        assert!(spherical_solution(1, lam, 0.0).abs() < 1e-15);
        // m = 1 coincides with ln(32 λ^2 / (4 + λ^2 r^2)^2)
        for r in [0.0, 0.5, 3.0, 40.0] {
            for lam in [0.3f64, 1.0, 2.5] {
                let direct = (32.0 * lam * lam / (4.0 + lam * lam * r * r).powi(2)).ln();
                assert!((spherical_solution(1, lam, r) - direct).abs() < 1e-12);
            }
        }
        let r = 1e6f64;
        let slope = (spherical_solution(1, 1.0, 2.0 * r) - spherical_solution(1, 1.0, r)) / 2f64.ln();
        assert!((slope + 4.0).abs() < 1e-6);
        // m = 2, λ = 1: u(0) = ln 24
        assert!((spherical_solution(2, 1.0, 0.0) - 24f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn spherical_initial_data_matches_formula() {
        // m = 1: u(0) = ln(2λ²), Δu(0) = -N λ²/... reproduced by finite differences
        for m in 1..=3u32 {
            let lam = 0.8;
            let n = 2 * m;
            let a = spherical_initial_data(m, n, lam);
            assert!((a[0] - spherical_solution(m, lam, 0.0)).abs() < 1e-14);
            if m >= 2 {
                // Δu(0) = N u''(0); u''(0) by central difference
                let h = 1e-3;
                let upp = (spherical_solution(m, lam, h) - 2.0 * spherical_solution(m, lam, 0.0)
                    + spherical_solution(m, lam, -h))
                    / (h * h);
                assert!((a[1] - n as f64 * upp).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn find_n0_m3() {
        let scan = find_n0(3).unwrap();
        assert_eq!(scan.n0, 21);
        assert!(scan.ratio_increasing);
        assert!(!p_le_lambda(3, 20).unwrap());
        assert!(p_le_lambda(3, 21).unwrap());
        assert!(p_le_lambda(3, 40).unwrap());
        // integer check of the boundary values
        let row20 = scan.rows.iter().find(|r| r.n == 20).unwrap();
        assert_eq!(row20.p_m, "506880");
        assert_eq!(row20.lambda, "480249/1");
        for row in scan.rows.iter().filter(|r| r.n >= scan.n0) {
            assert!(row.holds);
        }
    }

    #[test]
    fn find_n0_m5_baseline() {
        let scan = find_n0(5).unwrap();
        assert!(scan.ratio_increasing);
        let n0 = scan.n0;
        assert!(!p_le_lambda(5, n0 - 1).unwrap());
        assert!((n0..=n0 + N0_WINDOW).all(|n| p_le_lambda(5, n).unwrap()));
        assert!(find_n0(4).is_err());
    }
}
