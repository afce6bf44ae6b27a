//! Brackets for the borderline value `β₀` of `a_{m-1}` (even `m`) and for the
//! threshold below which the pointwise certificate passes.

use serde::Serialize;

use crate::constants::Dimension;
use crate::error::{Error, Result};
use crate::radial_ivp::{integrate, IntegratorConfig, Problem, ProfileStatus, RadialProfile};
use crate::stability::{pointwise_certificate, CertVerdict};

/// Which side of the dichotomy an integration landed on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Classification {
    /// Finite-radius blow-up. `radius` is `None` when only the early
    /// commitment `v_{m-1} < 0` was observed before `r_max`.
    BlowUp {
        radius: Option<f64>,
        error_bar: Option<f64>,
        committed_at: Option<f64>,
    },
    GlobalTo { r_max: f64 },
}

impl Classification {
    pub fn is_blow_up(&self) -> bool {
        matches!(self, Classification::BlowUp { .. })
    }

    /// Best available radius for the blow-up side.
    pub fn blow_up_radius(&self) -> Option<f64> {
        match *self {
            Classification::BlowUp {
                radius, committed_at, ..
            } => radius.or(committed_at),
            Classification::GlobalTo { .. } => None,
        }
    }
}

/// One classification with the settings that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct ClassRecord {
    pub a: Vec<f64>,
    pub classification: Classification,
    pub r_max: f64,
    pub u_cap: f64,
    pub attempts: usize,
}

/// First radius where `v_{m-1} < 0` for even `m`. Since `v_{m-1}` is strictly
/// decreasing, such a solution has `Δ^{m-1} u >= c > 0` from there on and cannot be global.
pub fn commitment_radius(profile: &RadialProfile) -> Option<f64> {
    let dim = profile.dim();
    if dim.m_is_odd() {
        return None;
    }
    let m = dim.m as usize;
    profile
        .grid()
        .iter()
        .zip(profile.v(m - 1))
        .find(|(_, &v)| v < 0.0)
        .map(|(&r, _)| r)
}

fn classify_profile(profile: &RadialProfile) -> Classification {
    let committed_at = commitment_radius(profile);
    match profile.status() {
        ProfileStatus::BlowUp { radius, error_bar, .. } => Classification::BlowUp {
            radius: Some(radius),
            error_bar: Some(error_bar),
            committed_at,
        },
        ProfileStatus::Global { r_max } => match committed_at {
            Some(_) => Classification::BlowUp {
                radius: None,
                error_bar: None,
                committed_at,
            },
            None => Classification::GlobalTo { r_max },
        },
    }
}

/// Integrates and classifies; on an inconclusive run, retries once with `u_cap`
/// doubled and once with `r_max` doubled (more steps each time).
pub fn classify(p: &Problem, cfg: &IntegratorConfig) -> Result<(ClassRecord, RadialProfile)> {
    let mut attempt_cfg = cfg.clone();
    let mut last_err = None;
    for attempt in 0..3 {
        match integrate(p, &attempt_cfg) {
            Ok(profile) => {
                let record = ClassRecord {
                    a: p.a.clone(),
                    classification: classify_profile(&profile),
                    r_max: attempt_cfg.r_max,
                    u_cap: attempt_cfg.u_cap,
                    attempts: attempt + 1,
                };
                return Ok((record, profile));
            }
            Err(Error::Inconclusive { steps, radius, .. }) => {
                last_err = Some(format!("{steps} steps, stopped at r = {radius}"));
                attempt_cfg.max_steps *= 2;
                if attempt == 0 {
                    attempt_cfg.u_cap *= 2.0;
                } else {
                    let r = attempt_cfg.r_max * 2.0;
                    attempt_cfg.set_r_max(r);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Classification(format!(
        "persistently inconclusive for a = {:?}: {}",
        p.a,
        last_err.unwrap_or_default()
    )))
}

/// Interval for a critical value of `a_{m-1}` together with its evidence.
#[derive(Debug, Clone, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
    pub lo_evidence: ClassRecord,
    pub hi_evidence: ClassRecord,
    /// Every classification made during the search, in order.
    pub trail: Vec<ClassRecord>,
}

/// Settings for the bracketing searches.
#[derive(Debug, Clone, Serialize)]
pub struct ShootingConfig {
    /// Initial truncation radius.
    pub r_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_expansions: usize,
    pub expansion_factor: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            r_max: 200.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_expansions: 200,
            expansion_factor: 4.0,
        }
    }
}

impl ShootingConfig {
    fn integrator(&self, p: &Problem, r_max: f64) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::with_r_max(r_max).tolerances(self.rel_tol, self.abs_tol);
        if cfg.u_cap <= p.a[0].max(0.0) {
            cfg.u_cap = p.a[0].max(0.0) + crate::radial_ivp::DEFAULT_U_CAP;
        }
        cfg
    }
}

fn problem_with_last(dim: Dimension, head: &[f64], last: f64) -> Result<Problem> {
    if head.len() + 1 != dim.m as usize {
        return Err(Error::Config(format!(
            "head must have m - 1 = {} entries, got {}",
            dim.m - 1,
            head.len()
        )));
    }
    let mut a = head.to_vec();
    a.push(last);
    Problem::new(dim, a)
}

/// Bracket `[lo, hi]` for `β₀`: `lo` global to its `r_max`, `hi` blow-up, `hi - lo <= tol`.
pub fn find_borderline(dim: Dimension, head: &[f64], tol: f64, sc: &ShootingConfig) -> Result<Bracket> {
    if dim.m_is_odd() {
        return Err(Error::Parity(format!(
            "m = {} is odd: every radial solution is global, there is no borderline value",
            dim.m
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Config("bracket tolerance must be positive".into()));
    }
    let mut r_max = sc.r_max;
    let mut trail = Vec::new();
    let run = |beta: f64, r_max: &mut f64, trail: &mut Vec<ClassRecord>| -> Result<ClassRecord> {
        let p = problem_with_last(dim, head, beta)?;
        let (rec, _) = classify(&p, &sc.integrator(&p, *r_max))?;
        if let Some(rb) = rec.classification.blow_up_radius() {
            while rb > 0.5 * *r_max {
                *r_max *= 2.0;
            }
        }
        trail.push(rec.clone());
        Ok(rec)
    };

    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut lo_rec = run(lo, &mut r_max, &mut trail)?;
    let mut hi_rec = run(hi, &mut r_max, &mut trail)?;
    let mut step = hi - lo;
    let mut expansions = 0;
    while lo_rec.classification.is_blow_up() {
        if expansions >= sc.max_expansions {
            return Err(Error::Search("no global-side value found below the seed".into()));
        }
        expansions += 1;
        step *= sc.expansion_factor;
        hi = lo;
        hi_rec = lo_rec;
        lo = hi - step;
        lo_rec = run(lo, &mut r_max, &mut trail)?;
    }
    while !hi_rec.classification.is_blow_up() {
        if expansions >= sc.max_expansions {
            return Err(Error::Search("no blow-up-side value found above the seed".into()));
        }
        expansions += 1;
        step *= sc.expansion_factor;
        lo = hi;
        lo_rec = hi_rec;
        hi = lo + step;
        hi_rec = run(hi, &mut r_max, &mut trail)?;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let rec = run(mid, &mut r_max, &mut trail)?;
        if rec.classification.is_blow_up() {
            hi = mid;
            hi_rec = rec;
        } else {
            lo = mid;
            lo_rec = rec;
        }
    }
    Ok(Bracket {
        lo,
        hi,
        width: hi - lo,
        lo_evidence: lo_rec,
        hi_evidence: hi_rec,
        trail,
    })
}

/// One certificate evaluation during the threshold search.
#[derive(Debug, Clone, Serialize)]
pub struct CertSample {
    pub beta: f64,
    pub passes: bool,
    pub verdict: Option<CertVerdict>,
    pub sup_value: f64,
    pub margin: f64,
}

/// Bracket for the largest `a_{m-1}` at which the pointwise certificate passes.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdBracket {
    /// Certificate passes at `lo`.
    pub lo: f64,
    /// Certificate fails (or the solution leaves the global side) at `hi`.
    pub hi: f64,
    pub width: f64,
    /// The certificate held at every sample up to the borderline bracket.
    pub degenerate: bool,
    pub samples: Vec<CertSample>,
}

/// Certificate sample at `a_{m-1} = beta`.
pub fn certificate_sample(dim: Dimension, head: &[f64], beta: f64, sc: &ShootingConfig) -> Result<CertSample> {
    let p = problem_with_last(dim, head, beta)?;
    let r_max = sc.r_max.max(IntegratorConfig::for_problem(&p).r_max);
    let (rec, profile) = classify(&p, &sc.integrator(&p, r_max))?;
    if rec.classification.is_blow_up() {
        return Ok(CertSample {
            beta,
            passes: false,
            verdict: None,
            sup_value: f64::INFINITY,
            margin: f64::NEG_INFINITY,
        });
    }
    let cert = pointwise_certificate(&profile)?;
    Ok(CertSample {
        beta,
        passes: cert.passes(),
        verdict: Some(cert.verdict),
        sup_value: cert.sup_value,
        margin: cert.margin,
    })
}

/// Bisects the predicate "certificate passes" in `a_{m-1}`.
///
/// For even `m`, `borderline` must be the `β₀` bracket and the search stays below
/// its `lo`; when the certificate passes at `β₀_lo - tol` the degenerate bracket
/// `[β₀_lo - tol, β₀_lo]` is returned. For odd `m` the search is unrestricted.
pub fn find_certificate_threshold(
    dim: Dimension,
    head: &[f64],
    tol: f64,
    borderline: Option<&Bracket>,
    sc: &ShootingConfig,
) -> Result<ThresholdBracket> {
    if !(tol > 0.0) {
        return Err(Error::Config("bracket tolerance must be positive".into()));
    }
    let mut samples = Vec::new();
    let sample = |beta: f64, samples: &mut Vec<CertSample>| -> Result<bool> {
        let s = certificate_sample(dim, head, beta, sc)?;
        let ok = s.passes;
        samples.push(s);
        Ok(ok)
    };

    let (mut lo, mut hi);
    if dim.m_is_odd() {
        if borderline.is_some() {
            return Err(Error::Parity("odd m has no borderline bracket".into()));
        }
        let seed = 0.0;
        let mut step = 1.0;
        if sample(seed, &mut samples)? {
            lo = seed;
            hi = seed + step;
            let mut n = 0;
            while sample(hi, &mut samples)? {
                n += 1;
                if n >= sc.max_expansions {
                    return Err(Error::Search("certificate never fails above the seed".into()));
                }
                lo = hi;
                step *= sc.expansion_factor;
                hi = lo + step;
            }
        } else {
            hi = seed;
            lo = seed - step;
            let mut n = 0;
            while !sample(lo, &mut samples)? {
                n += 1;
                if n >= sc.max_expansions {
                    return Err(Error::Search("certificate never passes below the seed".into()));
                }
                hi = lo;
                step *= sc.expansion_factor;
                lo = hi - step;
            }
        }
    } else {
        let b = borderline.ok_or_else(|| Error::Config("even m needs the borderline bracket first".into()))?;
        let top = b.lo - tol;
        if sample(top, &mut samples)? {
            check_monotone(&samples)?;
            return Ok(ThresholdBracket {
                lo: top,
                hi: b.lo,
                width: tol,
                degenerate: true,
                samples,
            });
        }
        hi = top;
        let mut step = 1.0;
        lo = hi - step;
        let mut n = 0;
        while !sample(lo, &mut samples)? {
            n += 1;
            if n >= sc.max_expansions {
                return Err(Error::Search("certificate never passes below the borderline".into()));
            }
            hi = lo;
            step *= sc.expansion_factor;
            lo = hi - step;
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sample(mid, &mut samples)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    check_monotone(&samples)?;
    Ok(ThresholdBracket {
        lo,
        hi,
        width: hi - lo,
        degenerate: false,
        samples,
    })
}

/// Sorted by `beta`, all passing samples must precede all failing ones.
fn check_monotone(samples: &[CertSample]) -> Result<()> {
    let mut sorted: Vec<&CertSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    let first_fail = sorted.iter().position(|s| !s.passes).unwrap_or(sorted.len());
    if let Some(bad) = sorted[first_fail..].iter().find(|s| s.passes) {
        let diag: Vec<String> = sorted
            .iter()
            .map(|s| format!("{:.6e}:{}", s.beta, if s.passes { "pass" } else { "fail" }))
            .collect();
        return Err(Error::Search(format!(
            "certificate predicate not monotone (pass at {} above a failure); samples {}",
            bad.beta,
            diag.join(", ")
        )));
    }
    Ok(())
}
