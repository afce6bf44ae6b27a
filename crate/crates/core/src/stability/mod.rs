//! Stability evidence for radial profiles: the pointwise Hardy certificate
//! (sufficient for stability) and eigenvalue scans of the discretized
//! quadratic form on annuli (witnesses of instability).

mod banded;
mod certificate;
mod form;

use rayon::prelude::*;
use serde::Serialize;

pub use banded::{min_eig, BandedSym, EigenPair, DENSE_LIMIT};
pub use certificate::{pointwise_certificate, CertVerdict, Certificate, TAIL_BAND};
pub use form::{assemble_form, assemble_with_potential, AssembledForm, MassKind};

use crate::error::{Error, Result};
use crate::radial_ivp::RadialProfile;

/// Absolute floor of the negativity threshold.
pub const TOL_EIG: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    Trial,
    Eigen,
}

/// A grid test function on an annulus together with the form value it produces.
#[derive(Debug, Clone, Serialize)]
pub struct FormWitness {
    pub support: (f64, f64),
    pub n: usize,
    pub radii: Vec<f64>,
    pub phi: Vec<f64>,
    /// `φᵀ (A - B) φ` as assembled.
    pub q_value: f64,
    /// `q_value / φᵀ M φ` with the Hardy-weighted mass; for `Eigen` the minimal eigenvalue.
    pub rayleigh: f64,
    pub kind: WitnessKind,
    pub tol_eig: f64,
    /// Minimal eigenvalue and its form value on the same annulus with `2n` intervals.
    pub refined_rayleigh: Option<f64>,
    pub refined_q_value: Option<f64>,
}

impl FormWitness {
    pub fn is_negative(&self) -> bool {
        self.rayleigh < -self.tol_eig
    }
}

/// Negativity threshold for a form: the absolute floor or the round-off level of
/// the normalized operator, whichever is larger.
pub fn eig_tolerance(form: &AssembledForm) -> f64 {
    let scale = form
        .a
        .diag()
        .iter()
        .zip(&form.hardy)
        .map(|(a, m)| a / m)
        .fold(0.0f64, f64::max);
    TOL_EIG.max(16.0 * f64::EPSILON * scale)
}

/// Minimal eigenpair of `(A - B, M_hardy)` on one annulus.
pub fn eigen_witness(profile: &RadialProfile, support: (f64, f64), n: usize) -> Result<FormWitness> {
    let form = assemble_form(profile, support, n)?;
    let pair = min_eig(&form.shifted(1.0), &form.hardy)?;
    Ok(FormWitness {
        support,
        n,
        q_value: form.q_value(&pair.vector),
        rayleigh: pair.value,
        kind: WitnessKind::Eigen,
        tol_eig: eig_tolerance(&form),
        radii: form.radii,
        phi: pair.vector,
        refined_rayleigh: None,
        refined_q_value: None,
    })
}

/// Bump `r^{-(N-2m)/2} sin^{2m}(π log(r/r_a) / log(r_b/r_a))`, the Hardy
/// extremal power cut off in the logarithmic variable.
pub fn trial_witness(profile: &RadialProfile, support: (f64, f64), n: usize) -> Result<FormWitness> {
    let form = assemble_form(profile, support, n)?;
    let dim = profile.dim();
    let m = dim.m as i32;
    let (ra, rb) = support;
    let ra = ra.max(rb * 1e-6);
    let decay = -0.5 * (dim.nf() - 2.0 * m as f64);
    let phi: Vec<f64> = form
        .radii
        .iter()
        .map(|&r| {
            let t = (r.max(ra) / ra).ln() / (rb / ra).ln();
            r.powf(decay) * (std::f64::consts::PI * t).sin().powi(2 * m)
        })
        .collect();
    let q_value = form.q_value(&phi);
    let norm: f64 = phi.iter().zip(&form.hardy).map(|(p, w)| p * p * w).sum();
    Ok(FormWitness {
        support,
        n,
        q_value,
        rayleigh: q_value / norm,
        kind: WitnessKind::Trial,
        tol_eig: eig_tolerance(&form),
        radii: form.radii,
        phi,
        refined_rayleigh: None,
        refined_q_value: None,
    })
}

/// Annuli and resolution used by [`stability_verdict`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictPolicy {
    /// Explicit annuli; when empty, [`default_annuli`] is used.
    pub annuli: Vec<(f64, f64)>,
    pub n: usize,
    /// Skip the eigen scan when the certificate passes.
    pub stop_on_certificate: bool,
}

impl Default for VerdictPolicy {
    fn default() -> Self {
        VerdictPolicy {
            annuli: Vec::new(),
            n: 1024,
            stop_on_certificate: true,
        }
    }
}

/// Ratio of the default annuli. Narrow annuli make the cutoff cost of a
/// higher-order form dominate, so the default supports are wide.
pub const ANNULUS_RATIO: f64 = 64.0;

/// Geometric annuli `[r/64, r]` with `r = 0.95 r_end / 4^j`, inner radius down to `r_end / 10^4`.
pub fn default_annuli(r_end: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut rb = 0.95 * r_end;
    while rb / ANNULUS_RATIO >= 1e-4 * r_end && out.len() < 12 {
        out.push((rb / ANNULUS_RATIO, rb));
        rb *= 0.25;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnulusResult {
    pub support: (f64, f64),
    pub rayleigh: f64,
    pub tol_eig: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StabilityVerdict {
    CertifiedStable {
        certificate: Certificate,
    },
    InstabilityWitness {
        certificate: Certificate,
        witness: Box<FormWitness>,
        scanned: Vec<AnnulusResult>,
    },
    Inconclusive {
        certificate: Certificate,
        scanned: Vec<AnnulusResult>,
    },
}

impl StabilityVerdict {
    pub fn certificate(&self) -> &Certificate {
        match self {
            StabilityVerdict::CertifiedStable { certificate }
            | StabilityVerdict::InstabilityWitness { certificate, .. }
            | StabilityVerdict::Inconclusive { certificate, .. } => certificate,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StabilityVerdict::CertifiedStable { .. } => "certified-stable",
            StabilityVerdict::InstabilityWitness { .. } => "instability-witness",
            StabilityVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Certificate first; otherwise an eigen scan over the policy annuli (in parallel).
/// The most negative annulus becomes the witness and is re-solved on a refined grid.
pub fn stability_verdict(profile: &RadialProfile, policy: &VerdictPolicy) -> Result<StabilityVerdict> {
    let certificate = pointwise_certificate(profile)?;
    if certificate.passes() && policy.stop_on_certificate {
        return Ok(StabilityVerdict::CertifiedStable { certificate });
    }
    let annuli = if policy.annuli.is_empty() {
        default_annuli(profile.r_end())
    } else {
        policy.annuli.clone()
    };
    let results: Vec<Result<FormWitness>> = annuli
        .par_iter()
        .map(|&s| eigen_witness(profile, s, policy.n))
        .collect();
    let mut witnesses = Vec::with_capacity(results.len());
    for r in results {
        witnesses.push(r?);
    }
    let scanned: Vec<AnnulusResult> = witnesses
        .iter()
        .map(|w| AnnulusResult {
            support: w.support,
            rayleigh: w.rayleigh,
            tol_eig: w.tol_eig,
        })
        .collect();
    let best = witnesses
        .into_iter()
        .filter(|w| w.is_negative())
        .min_by(|a, b| a.rayleigh.total_cmp(&b.rayleigh));
    match best {
        Some(mut w) => {
            let refined = eigen_witness(profile, w.support, 2 * w.n)?;
            w.refined_rayleigh = Some(refined.rayleigh);
            w.refined_q_value = Some(refined.q_value);
            if certificate.passes() {
                return Err(Error::Numerical(format!(
                    "certificate passed but annulus {:?} has rayleigh {}",
                    w.support, w.rayleigh
                )));
            }
            Ok(StabilityVerdict::InstabilityWitness {
                certificate,
                witness: Box::new(w),
                scanned,
            })
        }
        None if certificate.passes() => Ok(StabilityVerdict::CertifiedStable { certificate }),
        None => Ok(StabilityVerdict::Inconclusive { certificate, scanned }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Dimension;
    use crate::radial_ivp::{integrate, IntegratorConfig, Problem};

    #[test]
    fn m1_n3_trial_and_eigen_agree_in_sign() {
        // e^u r^2 -> 2(N-2) = 2 > 1/4 for large r: unstable outside compacts
        let p = Problem::new(Dimension::new(1, 3).unwrap(), vec![0.0]).unwrap();
        let prof = integrate(&p, &IntegratorConfig::with_r_max(200.0)).unwrap();
        let s = (1.0, 199.0);
        let t = trial_witness(&prof, s, 1024).unwrap();
        let e = eigen_witness(&prof, s, 1024).unwrap();
        assert!(t.rayleigh < 0.0 && e.rayleigh < 0.0, "{} {}", t.rayleigh, e.rayleigh);
        assert!(e.rayleigh <= t.rayleigh + 1e-12);
        assert!(e.q_value < 0.0);
    }

    #[test]
    fn eigen_refinement_is_stable() {
        let p = Problem::new(Dimension::new(1, 3).unwrap(), vec![0.0]).unwrap();
        let prof = integrate(&p, &IntegratorConfig::with_r_max(200.0)).unwrap();
        let e1 = eigen_witness(&prof, (10.0, 150.0), 512).unwrap().rayleigh;
        let e2 = eigen_witness(&prof, (10.0, 150.0), 1024).unwrap().rayleigh;
        assert!((e1 - e2).abs() <= 0.05 * e2.abs());
    }

    #[test]
    fn zero_potential_is_certified() {
        let dim = Dimension::new(2, 6).unwrap();
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.1).collect();
        let v = vec![vec![-800.0; 201], vec![0.0; 201]];
        let prof = RadialProfile::from_samples(dim, grid, v, vec![vec![0.0; 201]; 2]).unwrap();
        let verdict = stability_verdict(&prof, &VerdictPolicy::default()).unwrap();
        assert_eq!(verdict.label(), "certified-stable");
    }

    #[test]
    fn certificate_pass_implies_nonnegative_forms() {
        let dim = Dimension::new(3, 7).unwrap();
        let p = Problem::new(dim, vec![0.0, 0.0, -29.0]).unwrap();
        let prof = integrate(&p, &IntegratorConfig::with_r_max(60.0)).unwrap();
        let policy = VerdictPolicy {
            stop_on_certificate: false,
            n: 512,
            ..VerdictPolicy::default()
        };
        let v = stability_verdict(&prof, &policy).unwrap();
        assert_eq!(v.label(), "certified-stable");
        assert!(v.certificate().margin > 1e-6);
    }
}
