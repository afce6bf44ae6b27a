//! Explicit constructions of stable radial solutions and the inequality
//! chains used to certify them.

use serde::Serialize;

use crate::constants::{c_coeff_f64, gamma_const, hardy_lambda, p_poly, rellich_mu, Dimension};
use crate::error::{Error, Result};
use crate::optimize::log_scan_max;
use crate::radial_ivp::{compare_profiles, integrate, IntegratorConfig, OrderingReport, Problem, ProfileStatus, RadialProfile};
use crate::shooting::{classify, Bracket, ShootingConfig};
use crate::stability::{pointwise_certificate, Certificate};

/// Window for one-dimensional sups.
pub const SCAN_WINDOW: (f64, f64) = (1e-6, 1e6);
pub const SCAN_NODES: usize = 10_000;

/// Integrator settings used by the constructions: tight tolerances and a radius
/// large enough for the certificate sup to sit well inside the domain.
pub fn construction_config(p: &Problem, r_min: f64) -> IntegratorConfig {
    let base = IntegratorConfig::for_problem(p);
    let mut cfg = IntegratorConfig::with_r_max(base.r_max.max(r_min)).tolerances(1e-11, 1e-13);
    cfg.u_cap = base.u_cap;
    cfg
}

/// Odd-`m` recipe: `a_{m-1} = -H₀` makes `Ψ <= ln λ - 2m ln r`.
#[derive(Debug, Clone, Serialize)]
pub struct OddCaseRecipe {
    pub dim: Dimension,
    pub head: Vec<f64>,
    #[serde(rename = "H0")]
    pub h0: f64,
    /// Two-level grid scan value (independent of the golden-section polish).
    pub scan_value: f64,
    pub chosen_a_last: f64,
    pub sup_radius: f64,
}

/// `h(r) = c_{m-1} r^{2-2m} [a_0 + Σ_{1<=k<=m-2} a_k r^{2k}/c_k + 2m ln r - ln λ]`.
pub fn h_function(dim: Dimension, head: &[f64], ln_gamma: f64, r: f64) -> f64 {
    let m = dim.m as i32;
    let s = r * r;
    let mut acc = 2.0 * m as f64 * r.ln() - ln_gamma;
    let mut pow = 1.0;
    for (k, &a) in head.iter().enumerate() {
        acc += a * pow / c_coeff_f64(k as u32, dim.n);
        pow *= s;
    }
    c_coeff_f64(dim.m - 1, dim.n) * r.powi(2 - 2 * m) * acc
}

fn check_head(dim: Dimension, head: &[f64]) -> Result<()> {
    if head.len() + 1 != dim.m as usize {
        return Err(Error::Config(format!(
            "head must have m - 1 = {} entries, got {}",
            dim.m - 1,
            head.len()
        )));
    }
    if head.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config("head entries must be finite".into()));
    }
    Ok(())
}

/// Two-level scan: the coarse log grid, then a second grid of the same size
/// across the two cells around the coarse maximizer.
fn two_level_scan<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> (f64, f64, bool, bool) {
    let coarse = |i: usize| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp();
    let (mut bi, mut bv) = (0, f64::NEG_INFINITY);
    for i in 0..n {
        let v = f(coarse(i));
        if v > bv {
            bi = i;
            bv = v;
        }
    }
    let (a, b) = (coarse(bi.saturating_sub(1)).ln(), coarse((bi + 1).min(n - 1)).ln());
    let (mut x, mut v) = (coarse(bi), bv);
    for j in 0..n {
        let t = (a + (b - a) * j as f64 / (n - 1) as f64).exp();
        let fv = f(t);
        if fv > v {
            x = t;
            v = fv;
        }
    }
    (x, v, bi == 0, bi == n - 1)
}

/// Maximizes `h` over the scan window and returns `a_{m-1} = -H₀`.
pub fn sup_h(dim: Dimension, head: &[f64]) -> Result<OddCaseRecipe> {
    check_head(dim, head)?;
    let ln_lambda = hardy_lambda(dim)?.ln();
    let f = |r: f64| h_function(dim, head, ln_lambda, r);
    let (lo, hi) = SCAN_WINDOW;
    let polished = log_scan_max(f, lo, hi, SCAN_NODES);
    let (_, scan_value, at_lo, _) = two_level_scan(f, lo, hi, SCAN_NODES);
    if at_lo || !polished.value.is_finite() {
        return Err(Error::Numerical(format!(
            "h has no interior maximum in the scan window (value {})",
            polished.value
        )));
    }
    Ok(OddCaseRecipe {
        dim,
        head: head.to_vec(),
        h0: polished.value,
        scan_value,
        chosen_a_last: -polished.value,
        sup_radius: polished.x,
    })
}

/// Even-`m` recipe from the borderline profile.
#[derive(Debug, Clone, Serialize)]
pub struct EvenCaseRecipe {
    pub dim: Dimension,
    pub head: Vec<f64>,
    /// Reference value of `a_{m-1}` whose global profile defines `g`.
    pub reference_beta: f64,
    pub reference_r_max: f64,
    pub sup_g: f64,
    pub sup_radius: f64,
    pub chosen_a_last: f64,
    /// `g` evaluated at `0.95 r_max`, to compare with `-β₀`.
    pub tail_value: f64,
    /// `|tail_value + β| / |β|` for the reference `β`.
    pub tail_relative_gap: f64,
    /// The decay `u = o(r^{2m-2})` behind `lim g = -β₀` is only observed up to `r_max`.
    pub tail_assumption: &'static str,
}

/// `g(r) = c_{m-1} r^{2-2m} [u_β(r) - ln(μ / r^{2m})] - β` for the global
/// reference `β = bracket.lo`.
pub fn g_function(dim: Dimension, profile: &RadialProfile, beta: f64, ln_mu: f64, r: f64) -> Result<f64> {
    let m = dim.m as i32;
    let u = profile.evaluate_component(0, r)?.0;
    Ok(c_coeff_f64(dim.m - 1, dim.n) * r.powi(2 - 2 * m) * (u - ln_mu + 2.0 * m as f64 * r.ln()) - beta)
}

/// Sup of `g` on `(0, r_max]` for the global end of the `β₀` bracket.
pub fn sup_g(dim: Dimension, head: &[f64], bracket: &Bracket, sc: &ShootingConfig) -> Result<EvenCaseRecipe> {
    if dim.m_is_odd() {
        return Err(Error::Parity(format!("sup_g needs even m, got m = {}", dim.m)));
    }
    check_head(dim, head)?;
    let ln_mu = rellich_mu(dim)?.ln();
    let beta = bracket.lo;
    let mut a = head.to_vec();
    a.push(beta);
    let p = Problem::new(dim, a)?;
    let r_max = bracket.lo_evidence.r_max;
    let cfg = IntegratorConfig::with_r_max(r_max).tolerances(sc.rel_tol, sc.abs_tol);
    let (rec, profile) = classify(&p, &cfg)?;
    if rec.classification.is_blow_up() {
        return Err(Error::Classification(format!(
            "reference profile at a_(m-1) = {beta} is not global"
        )));
    }
    let r_end = profile.r_end();
    let g = |r: f64| g_function(dim, &profile, beta, ln_mu, r).unwrap_or(f64::NEG_INFINITY);
    let lo = SCAN_WINDOW.0.max(r_end * 1e-9);
    let s = log_scan_max(g, lo, r_end, SCAN_NODES);
    if s.at_lower_end {
        return Err(Error::Numerical("g has no interior maximum".into()));
    }
    let tail_value = g(0.95 * r_end);
    Ok(EvenCaseRecipe {
        dim,
        head: head.to_vec(),
        reference_beta: beta,
        reference_r_max: r_end,
        sup_g: s.value,
        sup_radius: s.x,
        chosen_a_last: -s.value,
        tail_value,
        tail_relative_gap: (tail_value + beta).abs() / beta.abs().max(f64::MIN_POSITIVE),
        tail_assumption: "borderline decay observed on [0, r_max] only",
    })
}

/// Certificate of the profile with data `(head, a_last)`.
pub fn certify_data(dim: Dimension, head: &[f64], a_last: f64, r_min: f64) -> Result<(RadialProfile, Certificate)> {
    let mut a = head.to_vec();
    a.push(a_last);
    let p = Problem::new(dim, a)?;
    let profile = integrate(&p, &construction_config(&p, r_min))?;
    let cert = pointwise_certificate(&profile)?;
    Ok((profile, cert))
}

/// Output of the odd-`m` construction with sign-alternating data.
#[derive(Debug, Clone, Serialize)]
pub struct Thm31Output {
    pub dim: Dimension,
    pub eps: f64,
    pub beta: f64,
    pub xi0: f64,
    pub gamma0: f64,
    pub eps1: f64,
    pub h_plus_1: f64,
    pub a: Vec<f64>,
    /// Largest `Δ^{m-2} u(r) - (-β + e^{ξ₀}/(2N))` over the grid (should be `<= 0`).
    pub intermediate_bound_slack: f64,
    /// `Δ^{m-1} u(r_max)`.
    pub last_laplacian_at_r_max: f64,
    pub certificate: Certificate,
    pub betas_tried: Vec<f64>,
    #[serde(skip)]
    pub profile: Option<RadialProfile>,
}

/// `H₊(1) = 1 + Σ_{k=1}^{m-3} 1/c_k + 1/c_{m-1}`.
pub fn h_plus_one(dim: Dimension) -> f64 {
    let mut h = 1.0;
    for k in 1..dim.m.saturating_sub(2) {
        h += 1.0 / c_coeff_f64(k, dim.n);
    }
    h + 1.0 / c_coeff_f64(dim.m - 1, dim.n)
}

/// Doubles `β` from 1 until the profile with `a_k = (-1)^k ε₁` (`k <= m-3`),
/// `a_{m-2} = -β`, `a_{m-1} = ε₁` satisfies `u <= ln λ - 2m ln r` on the grid.
pub fn thm31_pipeline(dim: Dimension) -> Result<Thm31Output> {
    if !dim.m_is_odd() || dim.m < 3 {
        return Err(Error::Parity(format!("the construction needs odd m >= 3, got m = {}", dim.m)));
    }
    dim.require_supercritical()?;
    let m = dim.m as usize;
    let nf = dim.nf();
    let hp = h_plus_one(dim);
    let gamma0 = hp.exp();
    let mut beta: f64 = 1.0;
    let mut tried = Vec::new();
    let mut best_sup = f64::NAN;
    while beta <= 2f64.powi(40) {
        tried.push(beta);
        let xi0 = -hp - beta / c_coeff_f64(dim.m - 2, dim.n) - gamma0 / c_coeff_f64(dim.m, dim.n);
        let eps1 = (xi0.exp() / (4.0 * nf * nf)).min(1.0);
        let eps = eps1;
        let mut a: Vec<f64> = (0..m).map(|k| if k % 2 == 0 { eps } else { -eps }).collect();
        a[m - 2] = -beta;
        a[m - 1] = eps;
        let p = Problem::new(dim, a.clone())?;
        let profile = integrate(&p, &construction_config(&p, 0.0))?;
        let cert = pointwise_certificate(&profile)?;
        best_sup = cert.sup_value;
        if cert.passes() {
            let bound = -beta + xi0.exp() / (2.0 * nf);
            let sign = if (m - 2) % 2 == 0 { 1.0 } else { -1.0 };
            let slack = profile
                .v(m - 2)
                .iter()
                .map(|v| sign * v - bound)
                .fold(f64::NEG_INFINITY, f64::max);
            let last_sign = if (m - 1) % 2 == 0 { 1.0 } else { -1.0 };
            let last = last_sign * *profile.v(m - 1).last().unwrap();
            return Ok(Thm31Output {
                dim,
                eps,
                beta,
                xi0,
                gamma0,
                eps1,
                h_plus_1: hp,
                a,
                intermediate_bound_slack: slack,
                last_laplacian_at_r_max: last,
                certificate: cert,
                betas_tried: tried,
                profile: Some(profile),
            });
        }
        beta *= 2.0;
    }
    Err(Error::Search(format!(
        "no beta <= 2^40 certified; last sup of e^u r^(2m) = {best_sup}"
    )))
}

/// Node-wise check of one inequality `lhs >= rhs - tol (1 + |rhs|)`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub label: String,
    pub checked: usize,
    pub violations: usize,
    /// Smallest `lhs - rhs` seen.
    pub worst_slack: f64,
    pub worst_radius: f64,
}

impl BoundCheck {
    fn new(label: String) -> Self {
        BoundCheck {
            label,
            checked: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            worst_radius: 0.0,
        }
    }

    fn record(&mut self, r: f64, lhs: f64, rhs: f64, tol: f64) {
        self.checked += 1;
        let slack = lhs - rhs;
        if slack < -tol * (1.0 + rhs.abs()) {
            self.violations += 1;
        }
        if slack < self.worst_slack {
            self.worst_slack = slack;
            self.worst_radius = r;
        }
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma37Report {
    /// `-Δ^{m-k} u >= r^{2k} e^u / P_k(N)` for `k = 1..m-1`.
    pub chain: Vec<BoundCheck>,
    /// `-u' >= r^{2m-1} e^u / ((N+2m-2) P_{m-1}(N))`.
    pub derivative: BoundCheck,
    /// `P_m(N) / r^{2m} >= e^u`.
    pub final_bound: BoundCheck,
    pub holds: bool,
}

/// Checks the inequality chain behind the `P_m(N)/r^{2m}` bound at every node.
pub fn lemma37_bounds(profile: &RadialProfile, tol: f64) -> Result<Lemma37Report> {
    let dim = profile.dim();
    if !dim.m_is_odd() {
        return Err(Error::Parity(format!("the bound chain needs odd m, got m = {}", dim.m)));
    }
    let m = dim.m as usize;
    let a = profile.initial_data();
    if let Some(k) = (1..m).find(|&k| a[k] > 0.0) {
        return Err(Error::Config(format!("needs a_k <= 0 for 1 <= k <= m-1, but a_{k} = {}", a[k])));
    }
    let p: Vec<f64> = (0..=dim.m).map(|k| if k == 0 { 1.0 } else { p_poly(k, dim.n).to_f64() }).collect();
    let mut chain: Vec<BoundCheck> = (1..m).map(|k| BoundCheck::new(format!("k={k}"))).collect();
    let mut derivative = BoundCheck::new("derivative".into());
    let mut final_bound = BoundCheck::new("final".into());
    let grid = profile.grid();
    for (i, &r) in grid.iter().enumerate() {
        let eu = profile.u()[i].exp();
        for (c, k) in chain.iter_mut().zip(1..m) {
            let j = m - k;
            // -Δ^j u = -(-1)^j v_j
            let lhs = if j % 2 == 0 { -profile.v(j)[i] } else { profile.v(j)[i] };
            c.record(r, lhs, r.powi(2 * k as i32) * eu / p[k], tol);
        }
        let rhs = r.powi(2 * m as i32 - 1) * eu / ((dim.nf() + 2.0 * m as f64 - 2.0) * p[m - 1]);
        derivative.record(r, -profile.dv(0)[i], rhs, tol);
        if r > 0.0 {
            final_bound.record(r, p[m] / r.powi(2 * m as i32), eu, tol);
        }
    }
    let holds = chain.iter().all(BoundCheck::holds) && derivative.holds() && final_bound.holds();
    Ok(Lemma37Report {
        chain,
        derivative,
        final_bound,
        holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonVerdict {
    pub report: OrderingReport,
    pub status_a: ProfileStatus,
    pub status_b: ProfileStatus,
    pub holds: bool,
}

/// Integrates both problems and checks `Δ^k u_A >= Δ^k u_B` on the common interval.
pub fn comparison_oracle(pa: &Problem, pb: &Problem, cfg: &IntegratorConfig, tol: f64) -> Result<ComparisonVerdict> {
    if pa.dim != pb.dim {
        return Err(Error::Dimension("problems have different dimensions".into()));
    }
    if pa.a.iter().zip(&pb.a).any(|(x, y)| x < y) {
        return Err(Error::Config("comparison needs a_k(A) >= a_k(B) for every k".into()));
    }
    let fa = integrate(pa, cfg)?;
    let fb = integrate(pb, cfg)?;
    let common = fa.r_end().min(fb.r_end());
    let report = compare_profiles(&fa.truncated(common)?, &fb.truncated(common)?, tol)?;
    Ok(ComparisonVerdict {
        holds: report.holds,
        report,
        status_a: fa.status(),
        status_b: fb.status(),
    })
}

/// Closed-form maximizer of `h` for `m = 3` and zero head: stationarity gives
/// `6 ln r = ln λ + 3/2` and then `h = c_2 · 1.5 / r^4`.
pub fn sup_h_m3_zero_head(n: u32) -> Result<(f64, f64)> {
    let dim = Dimension::new(3, n)?;
    let ln_l = gamma_const(dim)?.ln();
    let r = ((ln_l + 1.5) / 6.0).exp();
    Ok((r, c_coeff_f64(2, n) * 1.5 / r.powi(4)))
}
