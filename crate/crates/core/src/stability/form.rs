//! Discretized stability quadratic form on an annulus.
//!
//! With `L` the conservative radial Laplacian on a uniform grid and `φ`
//! vanishing on `m` layers at each end, the form is
//! `Σ w |L^{m/2} φ|²` for even `m` and `Σ w |D L^{(m-1)/2} φ|²` for odd `m`,
//! where `D` is the forward difference and `w` the `r^{N-1}` quadrature weight.

use serde::Serialize;

use super::banded::BandedSym;
use crate::constants::Dimension;
use crate::error::{Error, Result};
use crate::radial_ivp::RadialProfile;

/// Sparse row: `(node index, coefficient)`.
type Row = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct AssembledForm {
    pub dim: Dimension,
    pub support: (f64, f64),
    /// Number of grid intervals.
    pub n: usize,
    /// Radii of the unknowns (nodes `m..=n-m`).
    pub radii: Vec<f64>,
    /// Higher-order Dirichlet form.
    pub a: BandedSym,
    /// Potential term, `e^{u} r^{N-1} h`.
    pub b: Vec<f64>,
    /// Volume mass `r^{N-1} h`.
    pub volume: Vec<f64>,
    /// Hardy-weighted mass `r^{N-1-2m} h`.
    pub hardy: Vec<f64>,
}

/// Which diagonal normalizes the Rayleigh quotient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MassKind {
    Volume,
    Hardy,
}

impl AssembledForm {
    pub fn mass(&self, kind: MassKind) -> &[f64] {
        match kind {
            MassKind::Volume => &self.volume,
            MassKind::Hardy => &self.hardy,
        }
    }

    /// `A - t B`.
    pub fn shifted(&self, t: f64) -> BandedSym {
        let mut k = self.a.clone();
        for (i, b) in self.b.iter().enumerate() {
            k.add(i, i, -t * b);
        }
        k
    }

    /// `φᵀ (A - B) φ`.
    pub fn q_value(&self, phi: &[f64]) -> f64 {
        let pot: f64 = phi.iter().zip(&self.b).map(|(p, b)| p * p * b).sum();
        self.a.quad_form(phi) - pot
    }
}

/// Form for the profile's `e^{u}` on `support = (r_a, r_b)` with `n` intervals.
pub fn assemble_form(profile: &RadialProfile, support: (f64, f64), n: usize) -> Result<AssembledForm> {
    let (ra, rb) = support;
    if !(ra >= 0.0 && rb > ra && rb <= profile.r_end()) {
        return Err(Error::Range(format!(
            "annulus [{ra}, {rb}] not inside [0, {}]",
            profile.r_end()
        )));
    }
    let mut err = None;
    let form = assemble_with_potential(profile.dim(), support, n, |r| match profile.evaluate_component(0, r) {
        Ok((u, _, _)) => u.exp(),
        Err(e) => {
            err = Some(e);
            0.0
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(form),
    }
}

/// Form with an arbitrary potential `V(r)` in place of `e^{u(r)}`.
pub fn assemble_with_potential<F: FnMut(f64) -> f64>(
    dim: Dimension,
    support: (f64, f64),
    n: usize,
    mut potential: F,
) -> Result<AssembledForm> {
    let m = dim.m as usize;
    let (ra, rb) = support;
    if n < 64 {
        return Err(Error::Config(format!("form grid needs at least 64 intervals, got {n}")));
    }
    if !(ra >= 0.0 && rb > ra) {
        return Err(Error::Range(format!("invalid annulus [{ra}, {rb}]")));
    }
    let h = (rb - ra) / n as f64;
    let r = |i: usize| ra + h * i as f64;
    let p = dim.nf() - 1.0;
    let weight = |x: f64| if p == 0.0 { 1.0 } else { x.powf(p) };

    // radial Laplacian rows on nodes 1..n-1; zero rows at the ends
    let lap: Vec<Row> = (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                return Vec::new();
            }
            let wi = weight(r(i)) * h * h;
            let cm = weight(r(i) - 0.5 * h) / wi;
            let cp = weight(r(i) + 0.5 * h) / wi;
            vec![(i - 1, cm), (i, -cm - cp), (i + 1, cp)]
        })
        .collect();
    let first = m;
    let last = n - m;
    if last < first {
        return Err(Error::Config("annulus grid too small for the boundary layers".into()));
    }
    let mut g: Vec<Row> = (0..=n)
        .map(|i| if (first..=last).contains(&i) { vec![(i, 1.0)] } else { Vec::new() })
        .collect();
    for _ in 0..m / 2 {
        g = compose(&lap, &g);
    }
    let (rows, w): (Vec<Row>, Vec<f64>) = if m % 2 == 0 {
        let w = (0..=n)
            .map(|i| weight(r(i)) * h * if i == 0 || i == n { 0.5 } else { 1.0 })
            .collect();
        (g, w)
    } else {
        let diff: Vec<Row> = (0..n).map(|i| vec![(i, -1.0 / h), (i + 1, 1.0 / h)]).collect();
        let w = (0..n).map(|i| weight(r(i) + 0.5 * h) * h).collect();
        (compose(&diff, &g), w)
    };

    let unknowns = last - first + 1;
    let mut a = BandedSym::zeros(unknowns, m);
    for (row, wi) in rows.iter().zip(&w) {
        for &(ca, va) in row {
            for &(cb, vb) in row {
                if ca >= cb {
                    a.add(ca - first, cb - first, wi * va * vb);
                }
            }
        }
    }
    let radii: Vec<f64> = (first..=last).map(r).collect();
    let volume: Vec<f64> = radii.iter().map(|&x| weight(x) * h).collect();
    let hardy: Vec<f64> = radii
        .iter()
        .zip(&volume)
        .map(|(&x, v)| v * x.powi(-2 * m as i32))
        .collect();
    let b = radii.iter().zip(&volume).map(|(&x, v)| potential(x) * v).collect();
    Ok(AssembledForm {
        dim,
        support,
        n,
        radii,
        a,
        b,
        volume,
        hardy,
    })
}

/// Sparse product `outer ∘ inner` with rows indexed by node.
fn compose(outer: &[Row], inner: &[Row]) -> Vec<Row> {
    outer
        .iter()
        .map(|row| {
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for &(j, c) in row {
                for &(k, d) in &inner[j] {
                    match acc.iter_mut().find(|e| e.0 == k) {
                        Some(e) => e.1 += c * d,
                        None => acc.push((k, c * d)),
                    }
                }
            }
            acc.sort_by_key(|e| e.0);
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::banded::min_eig;

    #[test]
    fn m1_unit_interval_matches_closed_form() {
        let dim = Dimension::new(1, 1).unwrap();
        let n = 128;
        let f = assemble_with_potential(dim, (0.0, 1.0), n, |_| 0.0).unwrap();
        let e = min_eig(&f.a, &f.volume).unwrap();
        let h = 1.0 / n as f64;
        let expect = 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
        assert!((e.value - expect).abs() <= 1e-8 * expect, "{} vs {expect}", e.value);
    }

    #[test]
    fn m2_unit_interval_is_squared_second_difference() {
        // N = 1: A = h Sᵀ S restricted to nodes 2..n-2, S the Dirichlet second difference
        let dim = Dimension::new(2, 1).unwrap();
        let n = 64;
        let h = 1.0 / n as f64;
        let f = assemble_with_potential(dim, (0.0, 1.0), n, |_| 0.0).unwrap();
        let s = nalgebra::DMatrix::from_fn(n - 1, n - 1, |i, j| match i.abs_diff(j) {
            0 => -2.0 / (h * h),
            1 => 1.0 / (h * h),
            _ => 0.0,
        });
        let full = s.transpose() * &s * h;
        let dense = f.a.to_dense();
        for i in 0..n - 3 {
            for j in 0..n - 3 {
                let expect = full[(i + 1, j + 1)];
                assert!((dense[(i, j)] - expect).abs() <= 1e-8 * expect.abs().max(1.0));
            }
        }
    }

    #[test]
    fn m2_clamped_beam_limit() {
        // clamped beam on [0,1]: λ_1 = 4.730040744862704^4
        let dim = Dimension::new(2, 1).unwrap();
        let f = assemble_with_potential(dim, (0.0, 1.0), 512, |_| 0.0).unwrap();
        let e = min_eig(&f.a, &f.volume).unwrap();
        let expect = 4.730040744862704f64.powi(4);
        assert!((e.value - expect).abs() < 0.01 * expect, "{} vs {expect}", e.value);
    }

    #[test]
    fn m1_weighted_convergence_is_second_order() {
        let dim = Dimension::new(1, 5).unwrap();
        let ev = |n| {
            let f = assemble_with_potential(dim, (1.0, 2.0), n, |_| 0.0).unwrap();
            min_eig(&f.a, &f.volume).unwrap().value
        };
        let (e1, e2, e3) = (ev(64), ev(128), ev(256));
        let rate = ((e1 - e2) / (e2 - e3)).log2();
        assert!(rate > 1.8 && rate < 2.2, "observed rate {rate}");
    }

    #[test]
    fn form_without_potential_is_semidefinite() {
        for m in 1..=4 {
            let dim = Dimension::new(m, 2 * m + 3).unwrap();
            let f = assemble_with_potential(dim, (0.5, 3.0), 96, |_| 0.0).unwrap();
            let e = min_eig(&f.a, &f.volume).unwrap();
            assert!(e.value > 0.0, "m={m}: {}", e.value);
        }
    }

    #[test]
    fn min_eigenvalue_nonincreasing_in_potential_scale() {
        let dim = Dimension::new(2, 6).unwrap();
        let f = assemble_with_potential(dim, (1.0, 4.0), 128, |r| 30.0 / r.powi(4)).unwrap();
        let mut prev = f64::INFINITY;
        for t in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let e = min_eig(&f.shifted(t), &f.hardy).unwrap().value;
            assert!(e <= prev + 1e-9);
            prev = e;
        }
    }
}
