use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{c_coeff_f64, d_coeff, gamma_const, Dimension};
use crate::error::{Error, Result};
use crate::optimize::{log_scan_max, nelder_mead_max};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

/// Polynomial `P` in the construction `u = -P - C + z`.
///
/// `Multivariate` is `Σ c_α x'^α + Σ_k radial[k] |x|^{2k}` with `x' ∈ R^d` the
/// first `d` coordinates of `x ∈ R^N`. A polynomial in fewer than `N`
/// coordinates alone never tends to infinity along the remaining ones, so the
/// radial part carries the growth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolynomialSpec {
    Radial {
        /// `b_k` multiplies `r^{2k}`.
        coefficients: Vec<f64>,
    },
    Multivariate {
        d: usize,
        terms: Vec<Monomial>,
        #[serde(default)]
        radial: Vec<f64>,
    },
}

fn radial_eval(b: &[f64], r2: f64) -> f64 {
    b.iter().rev().fold(0.0, |acc, c| acc * r2 + c)
}

impl PolynomialSpec {
    pub fn radial(coefficients: Vec<f64>) -> Self {
        PolynomialSpec::Radial { coefficients }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, PolynomialSpec::Radial { .. })
    }

    pub fn degree(&self) -> u32 {
        let rdeg = |b: &[f64]| b.iter().rposition(|&c| c != 0.0).map_or(0, |k| 2 * k as u32);
        match self {
            PolynomialSpec::Radial { coefficients } => rdeg(coefficients),
            PolynomialSpec::Multivariate { terms, radial, .. } => terms
                .iter()
                .filter(|t| t.coefficient != 0.0)
                .map(|t| t.exponents.iter().sum::<u32>())
                .max()
                .unwrap_or(0)
                .max(rdeg(radial)),
        }
    }

    /// Value at radius `r` (radial case only).
    pub fn eval_radial(&self, r: f64) -> f64 {
        match self {
            PolynomialSpec::Radial { coefficients } => radial_eval(coefficients, r * r),
            PolynomialSpec::Multivariate { .. } => f64::NAN,
        }
    }

    /// Value at the point with leading coordinates `xp` and remaining radius `rho`.
    pub fn eval_point(&self, xp: &[f64], rho: f64) -> f64 {
        match self {
            PolynomialSpec::Radial { coefficients } => {
                let r2 = xp.iter().map(|x| x * x).sum::<f64>() + rho * rho;
                radial_eval(coefficients, r2)
            }
            PolynomialSpec::Multivariate { terms, radial, .. } => {
                let r2 = xp.iter().map(|x| x * x).sum::<f64>() + rho * rho;
                let mono: f64 = terms
                    .iter()
                    .map(|t| {
                        t.coefficient
                            * t.exponents
                                .iter()
                                .zip(xp)
                                .map(|(&e, &x)| x.powi(e as i32))
                                .product::<f64>()
                    })
                    .sum();
                mono + radial_eval(radial, r2)
            }
        }
    }

    /// `(-Δ)^k P` at radius `r` for the radial case.
    pub fn neg_laplacian_power(&self, k: u32, n: u32, r: f64) -> f64 {
        let PolynomialSpec::Radial { coefficients } = self else {
            return f64::NAN;
        };
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let r2 = r * r;
        let mut acc = 0.0;
        for (j, &b) in coefficients.iter().enumerate().skip(k as usize) {
            let j = j as u32;
            acc += b * c_coeff_f64(j, n) / c_coeff_f64(j - k, n) * r2.powi((j - k) as i32);
        }
        sign * acc
    }

    fn lead_dim(&self) -> usize {
        match self {
            PolynomialSpec::Radial { .. } => 0,
            PolynomialSpec::Multivariate { d, .. } => *d,
        }
    }

    /// Degree bound `deg P <= 2m - 2` and growth `P(x) / ln|x| -> ∞`.
    pub fn check_admissible(&self, dim: Dimension) -> Result<()> {
        let bound = 2 * dim.m - 2;
        if self.degree() > bound {
            return Err(Error::Admissibility(format!(
                "degree {} exceeds 2m - 2 = {bound}",
                self.degree()
            )));
        }
        match self {
            PolynomialSpec::Radial { coefficients } => {
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Admissibility("non-finite coefficient".into()));
                }
                match coefficients.iter().enumerate().skip(1).rev().find(|(_, &c)| c != 0.0) {
                    Some((_, &c)) if c > 0.0 => Ok(()),
                    _ => Err(Error::Admissibility(
                        "top nonconstant radial coefficient must be positive".into(),
                    )),
                }
            }
            PolynomialSpec::Multivariate { d, terms, .. } => {
                if *d == 0 || *d > 3 || *d as u32 >= dim.n {
                    return Err(Error::Admissibility(format!("need 1 <= d <= 3 and d < N, got d = {d}")));
                }
                if terms.iter().any(|t| t.exponents.len() != *d || !t.coefficient.is_finite()) {
                    return Err(Error::Admissibility("monomial exponents must have length d".into()));
                }
                let ratios: Vec<f64> = [1e1, 1e2, 1e3, 1e4]
                    .iter()
                    .map(|&r: &f64| self.sphere_min(r) / r.ln())
                    .collect();
                let grows = ratios.windows(2).all(|w| w[1] > 1.5 * w[0].max(0.0) && w[1] > 0.0);
                if grows {
                    Ok(())
                } else {
                    Err(Error::Admissibility(format!(
                        "sampled min of P over spheres stalls: min/ln R = {ratios:?}"
                    )))
                }
            }
        }
    }

    /// Sampled minimum of `P` over the sphere `|x| = r`.
    fn sphere_min(&self, r: f64) -> f64 {
        let d = self.lead_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5f3e);
        let mut best = f64::INFINITY;
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for i in 0..=d {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; d + 1];
                e[i] = s;
                dirs.push(e);
            }
        }
        for _ in 0..4000 {
            let v: Vec<f64> = (0..=d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            dirs.push(v);
        }
        for v in dirs {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let xp: Vec<f64> = v[..d].iter().map(|x| r * x / norm).collect();
            let rho = r * v[d].abs() / norm;
            best = best.min(self.eval_point(&xp, rho));
        }
        best
    }
}

/// A maximum and where it was found, as `(x', ρ)` or `[r]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Maximum {
    pub value: f64,
    pub at: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityConstants {
    pub c_p: Maximum,
    pub c_p_prime: Maximum,
    /// `max(C_P, C_P')`.
    pub c_tilde: f64,
}

const SEEDS: usize = 64;

/// Halton point in `[0,1)^dim` with a seeded Cranley–Patterson shift.
fn halton(i: usize, dim: usize, shift: &[f64]) -> Vec<f64> {
    const PRIMES: [usize; 6] = [2, 3, 5, 7, 11, 13];
    (0..dim)
        .map(|j| {
            let b = PRIMES[j];
            let (mut f, mut x, mut k) = (1.0, 0.0, i + 1);
            while k > 0 {
                f /= b as f64;
                x += f * (k % b) as f64;
                k /= b;
            }
            (x + shift[j]).fract()
        })
        .collect()
}

fn maximize(p: &PolynomialSpec, seed: u64, obj: &dyn Fn(&[f64], f64) -> f64, include_origin: bool) -> Maximum {
    match p {
        PolynomialSpec::Radial { .. } => {
            let s = log_scan_max(|r| obj(&[], r), 1e-6, 1e6, 10_000);
            let origin = obj(&[], 0.0);
            if include_origin && origin >= s.value {
                Maximum { value: origin, at: vec![0.0] }
            } else {
                Maximum { value: s.value, at: vec![s.x] }
            }
        }
        PolynomialSpec::Multivariate { d, .. } => {
            let d = *d;
            // radius beyond which P dominates the logarithmic terms
            let mut r_dom = 1.0;
            while r_dom < 1e6 && p.sphere_min(r_dom) < 40.0 * (1.0 + r_dom * r_dom).ln() + 40.0 {
                r_dom *= 2.0;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shift: Vec<f64> = (0..=d).map(|_| rng.gen::<f64>()).collect();
            let f = |y: &[f64]| obj(&y[..d], y[d].abs());
            let mut starts: Vec<Vec<f64>> = Vec::with_capacity(SEEDS + 1);
            if include_origin {
                starts.push(vec![0.0; d + 1]);
            }
            for i in 0..SEEDS {
                let h = halton(i, d + 1, &shift);
                starts.push(h.iter().map(|t| r_dom * (2.0 * t - 1.0)).collect());
            }
            let mut best = Maximum {
                value: f64::NEG_INFINITY,
                at: vec![0.0; d + 1],
            };
            for x0 in starts {
                let step = 0.1 * r_dom.max(1.0);
                let (x, v) = nelder_mead_max(f, &x0, step, 4000, 1e-14);
                let (x, v) = nelder_mead_max(f, &x, 1e-3 * step, 4000, 1e-15).max_by_value((x, v));
                if v > best.value {
                    let mut at = x.clone();
                    at[d] = at[d].abs();
                    best = Maximum { value: v, at };
                }
            }
            best
        }
    }
}

trait MaxByValue {
    fn max_by_value(self, other: (Vec<f64>, f64)) -> (Vec<f64>, f64);
}

impl MaxByValue for (Vec<f64>, f64) {
    fn max_by_value(self, other: (Vec<f64>, f64)) -> (Vec<f64>, f64) {
        if self.1 >= other.1 {
            self
        } else {
            other
        }
    }
}

/// `C_P = max f`, `f = -P + (N+2)/2 ln(1+|x|²) + ln d_m - ln(N(N-2)) + (1+|x|²)^{m-N/2}`.
pub fn compute_cp(p: &PolynomialSpec, dim: Dimension, seed: u64) -> Result<Maximum> {
    dim.require_supercritical()?;
    p.check_admissible(dim)?;
    let nf = dim.nf();
    let base = d_coeff(dim)?.ln() - (nf * (nf - 2.0)).ln();
    let expo = dim.m as f64 - nf / 2.0;
    let obj = move |xp: &[f64], rho: f64| {
        let s = 1.0 + xp.iter().map(|x| x * x).sum::<f64>() + rho * rho;
        -p.eval_point(xp, rho) + 0.5 * (nf + 2.0) * s.ln() + base + s.powf(expo)
    };
    let best = maximize(p, seed, &obj, true);
    if !best.value.is_finite() {
        return Err(Error::Numerical("C_P is not finite".into()));
    }
    Ok(best)
}

/// `C_P' = max_{x != 0} (1 - ln γ - P + 2m ln|x|)` together with `C̃_P = max(C_P, C_P')`.
pub fn compute_cp_prime(p: &PolynomialSpec, dim: Dimension, seed: u64) -> Result<AdmissibilityConstants> {
    let c_p = compute_cp(p, dim, seed)?;
    let ln_gamma = gamma_const(dim)?.ln();
    let two_m = 2.0 * dim.m as f64;
    let obj = move |xp: &[f64], rho: f64| {
        let r2 = xp.iter().map(|x| x * x).sum::<f64>() + rho * rho;
        if r2 == 0.0 {
            return f64::NEG_INFINITY;
        }
        1.0 - ln_gamma - p.eval_point(xp, rho) + 0.5 * two_m * r2.ln()
    };
    let c_p_prime = maximize(p, seed, &obj, false);
    if !c_p_prime.value.is_finite() {
        return Err(Error::Numerical("C_P' is not finite".into()));
    }
    Ok(AdmissibilityConstants {
        c_tilde: c_p.value.max(c_p_prime.value),
        c_p,
        c_p_prime,
    })
}
