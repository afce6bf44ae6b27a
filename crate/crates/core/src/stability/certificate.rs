use serde::Serialize;

use crate::constants::{gamma_const, Dimension, RationalConstant};
use crate::error::{Error, Result};
use crate::optimize::golden_max;
use crate::radial_ivp::RadialProfile;

/// Fraction of the radial range treated as the tail band.
pub const TAIL_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertVerdict {
    Pass,
    Fail,
    InconclusiveTail,
}

/// Outcome of the test `sup_r e^{u(r)} r^{2m} <= γ_{N,m}`.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub dim: Dimension,
    pub gamma: RationalConstant,
    pub sup_value: f64,
    pub sup_radius: f64,
    /// `gamma - sup_value`.
    pub margin: f64,
    pub verdict: CertVerdict,
    /// Set when the sup sits in the last `TAIL_BAND` of the radial range.
    pub tail_note: bool,
    pub r_end: f64,
}

impl Certificate {
    pub fn passes(&self) -> bool {
        self.verdict == CertVerdict::Pass
    }
}

/// Grid sup of `e^{u} r^{2m}` with golden-section refinement around the best node.
pub fn pointwise_certificate(profile: &RadialProfile) -> Result<Certificate> {
    let dim = profile.dim();
    if !profile.status().is_global() {
        return Err(Error::Classification(format!(
            "certificate needs a global profile, got {:?}",
            profile.status()
        )));
    }
    let gamma = gamma_const(dim)?;
    let two_m = 2.0 * dim.m as f64;
    let grid = profile.grid();
    let u = profile.u();
    let log_q = |r: f64, u: f64| if r > 0.0 { u + two_m * r.ln() } else { f64::NEG_INFINITY };

    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, (&r, &ui)) in grid.iter().zip(u).enumerate() {
        let q = log_q(r, ui);
        if q > best {
            best = q;
            best_i = i;
        }
    }
    if !best.is_finite() {
        return Err(Error::Numerical("certificate sup is not finite".into()));
    }
    let mut sup_radius = grid[best_i];
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(grid.len() - 1)];
    if hi > lo {
        let (r, q) = golden_max(
            |r| profile.evaluate_component(0, r).map_or(f64::NEG_INFINITY, |(ui, _, _)| log_q(r, ui)),
            lo,
            hi,
            1e-13,
        );
        if q > best {
            best = q;
            sup_radius = r;
        }
    }
    let sup_value = best.exp();
    let r_end = profile.r_end();
    // an underflowed sup means e^u vanishes to machine precision; no maximizer to locate
    let tail_note = sup_value > 0.0 && sup_radius >= (1.0 - TAIL_BAND) * r_end;
    let margin = gamma.to_f64() - sup_value;
    let verdict = if tail_note {
        CertVerdict::InconclusiveTail
    } else if margin >= 0.0 {
        CertVerdict::Pass
    } else {
        CertVerdict::Fail
    };
    Ok(Certificate {
        dim,
        gamma,
        sup_value,
        sup_radius,
        margin,
        verdict,
        tail_note,
        r_end,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_ivp::{integrate, IntegratorConfig, Problem};

    fn constant_profile(dim: Dimension, c: f64, r_end: f64) -> RadialProfile {
        let grid: Vec<f64> = (0..=100).map(|i| r_end * i as f64 / 100.0).collect();
        let m = dim.m as usize;
        let mut v = vec![vec![0.0; grid.len()]; m];
        v[0] = vec![c; grid.len()];
        RadialProfile::from_samples(dim, grid, v.clone(), vec![vec![0.0; 101]; m]).unwrap()
    }

    #[test]
    fn constant_u_hits_the_tail() {
        let dim = Dimension::new(1, 10).unwrap();
        let c = 16f64.ln() - 50.0;
        let cert = pointwise_certificate(&constant_profile(dim, c, 10.0)).unwrap();
        assert!(cert.tail_note);
        assert_eq!(cert.verdict, CertVerdict::InconclusiveTail);
        assert!((cert.sup_radius - 10.0).abs() < 1e-12);
    }

    #[test]
    fn blow_up_profile_rejected() {
        let p = Problem::new(Dimension::new(2, 5).unwrap(), vec![0.0, 0.0]).unwrap();
        let prof = integrate(&p, &IntegratorConfig::with_r_max(100.0)).unwrap();
        assert!(matches!(pointwise_certificate(&prof), Err(Error::Classification(_))));
    }

    #[test]
    fn subcritical_dimension_rejected() {
        let dim = Dimension::new(2, 4).unwrap();
        assert!(matches!(
            pointwise_certificate(&constant_profile(dim, 0.0, 1.0)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn scaling_leaves_certificate_invariant() {
        // u_λ(r) = u(λ r) + 2m ln λ has the same e^u r^{2m} at corresponding radii
        let dim = Dimension::new(3, 7).unwrap();
        let base = Problem::new(dim, vec![0.0, 0.0, -28.0]).unwrap();
        let lam: f64 = 1.7;
        let scaled_a: Vec<f64> = base
            .a
            .iter()
            .enumerate()
            .map(|(k, &a)| a * lam.powi(2 * k as i32) + if k == 0 { 6.0 * lam.ln() } else { 0.0 })
            .collect();
        let scaled = Problem::new(dim, scaled_a).unwrap();
        let cfg = IntegratorConfig::with_r_max(60.0).tolerances(1e-12, 1e-14);
        let c1 = pointwise_certificate(&integrate(&base, &cfg).unwrap()).unwrap();
        let c2 = pointwise_certificate(&integrate(&scaled, &cfg).unwrap()).unwrap();
        assert!((c1.sup_value - c2.sup_value).abs() <= 1e-8 * c1.sup_value);
        assert!((c1.sup_radius / lam - c2.sup_radius).abs() < 1e-4 * c1.sup_radius);
    }
}
