//! Radial initial-value problem for `(-Δ)^m u = e^u`, integrated as the
//! chain `-v_k'' - (N-1)/r v_k' = v_{k+1}` (`k < m-1`) closed by
//! `-v_{m-1}'' - (N-1)/r v_{m-1}' = e^{v_0}`, with `v_k(0) = (-1)^k a_k`.

mod dopri;
mod profile;
mod series;

use serde::{Deserialize, Serialize};

pub use profile::{compare_profiles, ComponentOrdering, OrderingReport, ProfileStatus, RadialProfile};
pub use series::OriginSeries;

use crate::constants::{c_coeff_f64, Dimension};
use crate::error::{Error, Result};
use dopri::{step_factor, Dopri};

/// Dimension pair plus initial data `a_k = Δ^k u(0)`, `0 <= k < m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub dim: Dimension,
    pub a: Vec<f64>,
}

impl Problem {
    pub fn new(dim: Dimension, a: Vec<f64>) -> Result<Self> {
        if a.len() != dim.m as usize {
            return Err(Error::Config(format!(
                "expected {} initial values, got {}",
                dim.m,
                a.len()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("initial data must be finite".into()));
        }
        Ok(Problem { dim, a })
    }

    /// `Ψ(r) = Σ_k a_k r^{2k} / c_k`, the polyharmonic polynomial with the same data.
    pub fn polynomial_part(&self, r: f64) -> f64 {
        let s = r * r;
        let mut pow = 1.0;
        let mut acc = 0.0;
        for (k, &ak) in self.a.iter().enumerate() {
            acc += ak * pow / c_coeff_f64(k as u32, self.dim.n);
            pow *= s;
        }
        acc
    }

    pub fn sup_norm(&self) -> f64 {
        self.a.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }
}

/// Integration controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub r_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Blow-up threshold on `v_0 = u`.
    pub u_cap: f64,
    /// Radius of the series launch.
    pub r_taylor: f64,
    pub max_steps: usize,
}

pub const DEFAULT_U_CAP: f64 = 50.0;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_STEPS: usize = 500_000;

impl IntegratorConfig {
    /// Defaults for `p`: `r_max = 50 (1 + |a|_∞)^{1/2}`.
    pub fn for_problem(p: &Problem) -> Self {
        Self::with_r_max(50.0 * (1.0 + p.sup_norm()).sqrt()).ensure_cap(p)
    }

    pub fn with_r_max(r_max: f64) -> Self {
        IntegratorConfig {
            r_max,
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: DEFAULT_ABS_TOL,
            u_cap: DEFAULT_U_CAP,
            r_taylor: 1e-4 * r_max.min(1.0),
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    /// Keeps `r_taylor` tied to `r_max` after the latter changes.
    pub fn set_r_max(&mut self, r_max: f64) {
        self.r_max = r_max;
        self.r_taylor = self.r_taylor.min(1e-4 * r_max.min(1.0));
    }

    pub fn tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    fn ensure_cap(mut self, p: &Problem) -> Self {
        if self.u_cap <= p.a[0].max(0.0) {
            self.u_cap = p.a[0].max(0.0) + DEFAULT_U_CAP;
        }
        self
    }

    pub fn validate(&self, p: &Problem) -> Result<()> {
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(Error::Config(format!("r_max must be positive, got {}", self.r_max)));
        }
        if !(self.r_taylor > 0.0 && self.r_taylor < self.r_max) {
            return Err(Error::Config(format!(
                "r_taylor = {} must lie in (0, r_max = {})",
                self.r_taylor, self.r_max
            )));
        }
        if !in_unit(self.rel_tol) || !in_unit(self.abs_tol) {
            return Err(Error::Config("tolerances must lie in (0, 1)".into()));
        }
        if self.u_cap <= p.a[0].max(0.0) {
            return Err(Error::Config(format!(
                "u_cap = {} must exceed max(a_0, 0) = {}",
                self.u_cap,
                p.a[0].max(0.0)
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// State `(v_k(r0), v_k'(r0))` produced by the series launch.
#[derive(Debug, Clone, PartialEq)]
pub struct LaunchState {
    pub r0: f64,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    pub series: OriginSeries,
}

const SERIES_TERMS_EXTRA: usize = 3;

/// Series launch at `r0`, halving `r0` until the last retained term is below `tol`.
pub fn taylor_launch(p: &Problem, r0: f64, r_max: f64, tol: f64) -> Result<LaunchState> {
    if !(r0 > 0.0) || r0 >= r_max {
        return Err(Error::Config(format!("launch radius {r0} must lie in (0, r_max = {r_max})")));
    }
    let m = p.dim.m as usize;
    let series = OriginSeries::new(p.dim, &p.a, m + SERIES_TERMS_EXTRA);
    let mut r = r0;
    let scale = 1.0 + p.sup_norm();
    while series.tail_estimate(r) > tol * scale {
        r *= 0.5;
        if r < 1e-300 {
            return Err(Error::Numerical("series launch radius underflowed".into()));
        }
    }
    let v = (0..m).map(|k| series.value(k, r)).collect();
    let dv = (0..m).map(|k| series.derivative(k, r)).collect();
    Ok(LaunchState { r0: r, v, dv, series })
}

fn chain_rhs(m: usize, nm1: f64, r: f64, y: &[f64], dy: &mut [f64]) {
    let (v, w) = y.split_at(m);
    let (dv, dw) = dy.split_at_mut(m);
    dv.copy_from_slice(w);
    for k in 0..m {
        let source = if k + 1 < m { v[k + 1] } else { v[0].exp() };
        dw[k] = -nm1 / r * w[k] - source;
    }
}

/// Mandatory output radii `2^j` strictly inside `(lo, hi)`, plus `hi`.
fn dyadic_nodes(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut j = lo.log2().floor() as i32;
    loop {
        let x = 2f64.powi(j);
        if x >= hi {
            break;
        }
        if x > lo {
            out.push(x);
        }
        j += 1;
    }
    out.push(hi);
    out
}

/// Adaptive Dormand–Prince integration from the series launch to `r_max`.
pub fn integrate(p: &Problem, cfg: &IntegratorConfig) -> Result<RadialProfile> {
    cfg.validate(p)?;
    let m = p.dim.m as usize;
    let nm1 = p.dim.nf() - 1.0;
    let launch = taylor_launch(p, cfg.r_taylor, cfg.r_max, cfg.abs_tol * 1e-3)?;

    let n_state = 2 * m;
    let mut solver = Dopri::new(move |r: f64, y: &[f64], dy: &mut [f64]| chain_rhs(m, nm1, r, y, dy), n_state);

    let mut trace = Trace {
        grid: vec![0.0],
        v: (0..m).map(|k| vec![launch.series.coeffs[k][0]]).collect(),
        dv: vec![vec![0.0]; m],
        d2v: (0..m).map(|k| vec![launch.series.second_derivative(k, 0.0)]).collect(),
    };

    let mut r = launch.r0;
    let mut y: Vec<f64> = launch.v.iter().chain(launch.dv.iter()).copied().collect();
    let mut f = vec![0.0; n_state];
    solver.eval(r, &y, &mut f);
    trace.push(r, &y, &f);

    let targets = dyadic_nodes(r, cfg.r_max);
    let mut target_idx = 0;
    let mut h = (launch.r0 * 0.5).max(1e-8 * cfg.r_max);
    let mut steps = 0usize;
    let mut status = None;

    while status.is_none() {
        if steps >= cfg.max_steps {
            let partial = trace.into_profile(p.dim, launch.r0, launch.series, ProfileStatus::Global { r_max: r });
            return Err(Error::Inconclusive {
                steps,
                radius: r,
                partial: Box::new(partial),
            });
        }
        steps += 1;
        let target = targets[target_idx];
        let mut h_try = h;
        let hits_target = r + h_try >= target * (1.0 - 1e-14);
        if hits_target {
            h_try = target - r;
        }
        let out = solver.step(r, &y, &f, h_try, cfg.rel_tol, cfg.abs_tol);
        if out.err <= 1.0 {
            r = if hits_target { target } else { r + h_try };
            y = out.y_new;
            f = out.f_new;
            trace.push(r, &y, &f);
            if hits_target {
                target_idx += 1;
            }
            // u'' proxy is f[m], the derivative of w_0 = u'
            if y[0] > cfg.u_cap && y[m] > 0.0 && f[m] > 0.0 {
                status = Some(blow_up_status(p.dim.m, r, y[m], f[m]));
                break;
            }
            if target_idx == targets.len() {
                status = Some(ProfileStatus::Global { r_max: r });
                break;
            }
            if !hits_target {
                h = h_try * step_factor(out.err);
            }
        } else {
            h = h_try * step_factor(out.err);
        }
        if h < 1e-12 * r {
            status = Some(ProfileStatus::BlowUp {
                radius: r,
                error_bar: h.max(1e-12 * r),
                detected_at: r,
            });
        }
    }

    Ok(trace.into_profile(p.dim, launch.r0, launch.series, status.unwrap()))
}

struct Trace {
    grid: Vec<f64>,
    v: Vec<Vec<f64>>,
    dv: Vec<Vec<f64>>,
    d2v: Vec<Vec<f64>>,
}

impl Trace {
    fn push(&mut self, r: f64, y: &[f64], f: &[f64]) {
        let m = self.v.len();
        self.grid.push(r);
        for k in 0..m {
            self.v[k].push(y[k]);
            self.dv[k].push(y[m + k]);
            self.d2v[k].push(f[m + k]);
        }
    }

    fn into_profile(self, dim: Dimension, r0: f64, series: OriginSeries, status: ProfileStatus) -> RadialProfile {
        RadialProfile::from_parts(dim, self.grid, self.v, self.dv, self.d2v, Some((r0, series)), status)
    }
}

/// Blow-up radius from the local asymptotics `u ~ 2m ln(1/(R - r))`:
/// `R - r ≈ 2m/u'` and `R - r ≈ (2m/u'')^{1/2}`; their spread is the error bar.
fn blow_up_status(m: u32, r: f64, du: f64, ddu: f64) -> ProfileStatus {
    let two_m = 2.0 * m as f64;
    let from_slope = r + two_m / du;
    let from_curvature = r + (two_m / ddu).sqrt();
    ProfileStatus::BlowUp {
        radius: from_slope,
        error_bar: (from_slope - from_curvature).abs(),
        detected_at: r,
    }
}
