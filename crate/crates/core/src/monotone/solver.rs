use rayon::prelude::*;
use serde::Serialize;

use super::polynomial::PolynomialSpec;
use crate::constants::{d_coeff, w_eval, Dimension};
use crate::error::{Error, Result};
use crate::radial_ivp::RadialProfile;
use crate::stability::{pointwise_certificate, Certificate};

/// Radial finite-volume discretization of `-Δ` on `r_i = R (i/n)^2`, node `n` Dirichlet.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub dim: Dimension,
    pub r: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl RadialGrid {
    /// `nodes` points including the origin and the outer boundary.
    pub fn quadratic(dim: Dimension, r_trunc: f64, nodes: usize) -> Result<Self> {
        if nodes < 8 || !(r_trunc > 0.0) || !r_trunc.is_finite() {
            return Err(Error::Config(format!("bad grid: nodes={nodes}, R={r_trunc}")));
        }
        let n = nodes - 1;
        let r: Vec<f64> = (0..=n).map(|i| r_trunc * (i as f64 / n as f64).powi(2)).collect();
        let nf = dim.nf();
        let face = |i: usize| 0.5 * (r[i] + r[i + 1]);
        let flux = |i: usize| face(i).powf(nf - 1.0) / (r[i + 1] - r[i]);
        let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            let inner = if i == 0 { 0.0 } else { face(i - 1) };
            let vol = (face(i).powf(nf) - inner.powf(nf)) / nf;
            let fl = if i == 0 { 0.0 } else { flux(i - 1) };
            let fr = flux(i);
            lower[i] = -fl / vol;
            diag[i] = (fl + fr) / vol;
            upper[i] = -fr / vol;
        }
        Ok(RadialGrid { dim, r, lower, diag, upper })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_trunc(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// `(-Δ_h w)_i` at the interior nodes.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let n = self.r.len() - 1;
        (0..n)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { self.lower[i] * w[i - 1] };
                left + self.diag[i] * w[i] + self.upper[i] * w[i + 1]
            })
            .collect()
    }

    /// Solve `-Δ_h w = f` with `w_n = boundary`.
    pub fn solve(&self, f: &[f64], boundary: f64) -> Vec<f64> {
        let n = self.r.len() - 1;
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let mut rhs = f[i];
            if i == n - 1 {
                rhs -= self.upper[i] * boundary;
            }
            let (a, b) = (self.lower[i], self.diag[i]);
            let denom = if i == 0 { b } else { b - a * c[i - 1] };
            c[i] = if i == n - 1 { 0.0 } else { self.upper[i] / denom };
            d[i] = if i == 0 { rhs / denom } else { (rhs - a * d[i - 1]) / denom };
        }
        let mut w = vec![0.0; n + 1];
        w[n] = boundary;
        w[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            w[i] = d[i] - c[i] * w[i + 1];
        }
        w
    }
}

/// Coupling constants `κ_k = (N - 2m + 2k - 2)(2m - 2k)`, `k = 1..m-1`.
pub fn couplings(dim: Dimension) -> Vec<f64> {
    let (m, n) = (dim.m as f64, dim.nf());
    (1..dim.m)
        .map(|k| {
            let k = k as f64;
            (n - 2.0 * m + 2.0 * k - 2.0) * (2.0 * m - 2.0 * k)
        })
        .collect()
}

/// Radius with `W_m(R) <= tol`.
pub fn truncation_radius(dim: Dimension, tol: f64) -> f64 {
    let e = dim.m as f64 - dim.nf() / 2.0;
    (tol.powf(1.0 / e) - 1.0).max(1.0).sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainCheck {
    pub label: String,
    /// Smallest `lhs - rhs` over interior nodes, scaled by `max(|rhs|, tiny)`.
    pub worst_relative: f64,
    pub worst_radius: f64,
}

/// `(Z, V_1, ..., V_{m-1}) = (W_m, W_{m-1}, ..., W_1)` on the grid with the
/// discrete chain inequalities.
#[derive(Debug, Clone, Serialize)]
pub struct SuperSolution {
    pub components: Vec<Vec<f64>>,
    pub checks: Vec<ChainCheck>,
    /// Relative deviation of `-Δ_h V_{m-1}` from `N(N-2) W_{-1}`.
    pub last_identity_error: f64,
}

pub fn super_solution(grid: &RadialGrid) -> Result<SuperSolution> {
    let dim = grid.dim;
    dim.require_supercritical()?;
    let m = dim.m as i32;
    let kap = couplings(dim);
    let components: Vec<Vec<f64>> = (0..m)
        .map(|k| grid.r.iter().map(|&r| w_eval(m - k, dim, r)).collect())
        .collect();
    let mut checks = Vec::new();
    for k in 0..(m as usize - 1) {
        let lhs = grid.apply(&components[k]);
        let mut worst = f64::INFINITY;
        let mut at = 0.0;
        for (i, l) in lhs.iter().enumerate() {
            let rhs = kap[k] * components[k + 1][i];
            let rel = (l - rhs) / rhs.abs().max(1e-300);
            if rel < worst {
                worst = rel;
                at = grid.r[i];
            }
        }
        checks.push(ChainCheck {
            label: format!("-Δ V_{k} >= κ_{} V_{}", k + 1, k + 1),
            worst_relative: worst,
            worst_radius: at,
        });
    }
    let nf = dim.nf();
    let lhs = grid.apply(&components[m as usize - 1]);
    let last_identity_error = lhs
        .iter()
        .zip(&grid.r)
        .map(|(l, &r)| {
            let exact = nf * (nf - 2.0) * w_eval(-1, dim, r);
            ((l - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    Ok(SuperSolution {
        components,
        checks,
        last_identity_error,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneConfig {
    pub nodes: usize,
    /// Truncation radius; `None` picks `R` with `W_m(R) <= boundary_tol`.
    pub r_trunc: Option<f64>,
    pub boundary_tol: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Allowed increase between iterates before monotonicity counts as broken.
    pub monotone_slack: f64,
}

impl Default for MonotoneConfig {
    fn default() -> Self {
        MonotoneConfig {
            nodes: 8192,
            r_trunc: None,
            boundary_tol: 1e-8,
            tol: 1e-10,
            max_iter: 20_000,
            monotone_slack: 1e-12,
        }
    }
}

/// Converged iterate of the cooperative system
/// `-Δz = κ_1 v_1, ..., -Δv_{m-1} = d_m e^{-P-C+z}`.
#[derive(Debug, Clone, Serialize)]
pub struct SystemIterate {
    pub dim: Dimension,
    pub polynomial: PolynomialSpec,
    pub c: f64,
    pub r: Vec<f64>,
    /// `z, v_1, ..., v_{m-1}`.
    pub components: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
    pub iterations: usize,
    pub sup_changes: Vec<f64>,
    pub residual: f64,
    pub monotone: bool,
    /// `0 <= z <= W_m` at every node.
    pub sandwich: bool,
}

impl SystemIterate {
    pub fn z(&self) -> &[f64] {
        &self.components[0]
    }

    pub fn u(&self) -> Vec<f64> {
        self.r
            .iter()
            .zip(self.z())
            .map(|(&r, z)| -self.polynomial.eval_radial(r) - self.c + z)
            .collect()
    }

    /// `(-Δ)^k u` at every node.
    pub fn laplacian_chain(&self) -> Vec<Vec<f64>> {
        let n = self.dim.n;
        let mut prod = 1.0;
        (0..self.dim.m as usize)
            .map(|k| {
                if k > 0 {
                    prod *= self.kappa[k - 1];
                }
                self.r
                    .iter()
                    .zip(&self.components[k])
                    .map(|(&r, w)| {
                        let poly = -self.polynomial.neg_laplacian_power(k as u32, n, r);
                        if k == 0 {
                            poly - self.c + w
                        } else {
                            poly + prod * w
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// `a_k = Δ^k u(0)`.
    pub fn initial_data(&self) -> Vec<f64> {
        self.laplacian_chain()
            .iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 0 { v[0] } else { -v[0] })
            .collect()
    }

    /// Sampled profile of `u` with derivatives from three-point differences.
    pub fn to_profile(&self) -> Result<RadialProfile> {
        let chain = self.laplacian_chain();
        let dv: Vec<Vec<f64>> = chain.iter().map(|v| nonuniform_derivative(&self.r, v)).collect();
        RadialProfile::from_samples(self.dim, self.r.clone(), chain, dv)
    }
}

fn nonuniform_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        d[i] = (-h1 / (h0 * (h0 + h1))) * y[i - 1] + ((h1 - h0) / (h0 * h1)) * y[i]
            + (h0 / (h1 * (h0 + h1))) * y[i + 1];
    }
    let (h0, h1) = (x[n - 1] - x[n - 2], x[n - 2] - x[n - 3]);
    d[n - 1] = ((2.0 * h0 + h1) / (h0 * (h0 + h1))) * y[n - 1]
        - ((h0 + h1) / (h0 * h1)) * y[n - 2]
        + (h0 / (h1 * (h0 + h1))) * y[n - 3];
    d
}

/// Gauss–Seidel sweep from the super-solution; every sweep must not increase any component.
pub fn monotone_iterate(p: &PolynomialSpec, dim: Dimension, c: f64, cfg: &MonotoneConfig) -> Result<SystemIterate> {
    dim.require_supercritical()?;
    if !p.is_radial() {
        return Err(Error::Unsupported(
            "monotone iteration is radial; multivariate P only feeds the constants".into(),
        ));
    }
    p.check_admissible(dim)?;
    if !c.is_finite() {
        return Err(Error::Config("C must be finite".into()));
    }
    let r_trunc = cfg.r_trunc.unwrap_or_else(|| truncation_radius(dim, cfg.boundary_tol));
    let grid = RadialGrid::quadratic(dim, r_trunc, cfg.nodes)?;
    let sup = super_solution(&grid)?;
    let m = dim.m as usize;
    let kappa = couplings(dim);
    let dm = d_coeff(dim)?.to_f64();
    let boundary: Vec<f64> = sup.components.iter().map(|w| *w.last().unwrap()).collect();
    let minus_p_c: Vec<f64> = grid.r.iter().map(|&r| -p.eval_radial(r) - c).collect();
    let nint = grid.len() - 1;

    let mut state = sup.components;
    let mut sup_changes = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut next = vec![Vec::new(); m];
        let src: Vec<f64> = (0..nint).map(|i| dm * (minus_p_c[i] + state[0][i]).exp()).collect();
        next[m - 1] = grid.solve(&src, boundary[m - 1]);
        for k in (0..m - 1).rev() {
            let f: Vec<f64> = next[k + 1][..nint].iter().map(|v| kappa[k] * v).collect();
            next[k] = grid.solve(&f, boundary[k]);
        }
        let mut change = 0.0f64;
        for (k, (new, old)) in next.iter().zip(&state).enumerate() {
            for (i, (a, b)) in new.iter().zip(old).enumerate() {
                if *a > b + cfg.monotone_slack {
                    return Err(Error::Monotonicity {
                        iteration: iterations,
                        node: i,
                        detail: format!("component {k} increased by {:e} at r = {}", a - b, grid.r[i]),
                    });
                }
                change = change.max((a - b).abs());
            }
        }
        state = next;
        sup_changes.push(change);
        if change <= cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "monotone iteration did not reach {:e} in {} sweeps (last change {:e})",
            cfg.tol,
            cfg.max_iter,
            sup_changes.last().copied().unwrap_or(f64::NAN)
        )));
    }

    // residual of every equation with the final state
    let mut residual = 0.0f64;
    for k in 0..m {
        let lhs = grid.apply(&state[k]);
        for i in 0..nint {
            let rhs = if k + 1 < m {
                kappa[k] * state[k + 1][i]
            } else {
                dm * (minus_p_c[i] + state[0][i]).exp()
            };
            residual = residual.max((lhs[i] - rhs).abs());
        }
    }
    let wm: Vec<f64> = grid.r.iter().map(|&r| w_eval(dim.m as i32, dim, r)).collect();
    let sandwich = state[0]
        .iter()
        .zip(&wm)
        .all(|(z, w)| *z >= -cfg.monotone_slack && *z <= w + cfg.monotone_slack);
    Ok(SystemIterate {
        dim,
        polynomial: p.clone(),
        c,
        r: grid.r,
        components: state,
        kappa,
        iterations,
        sup_changes,
        residual,
        monotone: true,
        sandwich,
    })
}

/// Initial data extracted on successively doubled grids with Richardson
/// extrapolation in `h²` (two stages when at least three levels are run).
#[derive(Debug, Clone, Serialize)]
pub struct ExtrapolatedData {
    pub nodes: Vec<usize>,
    pub levels: Vec<Vec<f64>>,
    pub extrapolated: Vec<f64>,
    /// Largest change between the last two extrapolants, per component.
    pub error_estimate: Vec<f64>,
}

pub fn extrapolated_initial_data(
    p: &PolynomialSpec,
    dim: Dimension,
    c: f64,
    cfg: &MonotoneConfig,
    levels: usize,
) -> Result<ExtrapolatedData> {
    if levels < 2 {
        return Err(Error::Config("extrapolation needs at least two levels".into()));
    }
    let intervals = cfg.nodes - 1;
    let nodes: Vec<usize> = (0..levels).map(|l| (intervals << l) + 1).collect();
    let runs: Vec<Result<Vec<f64>>> = nodes
        .par_iter()
        .map(|&n| {
            let c2 = MonotoneConfig { nodes: n, ..cfg.clone() };
            monotone_iterate(p, dim, c, &c2).map(|it| it.initial_data())
        })
        .collect();
    let levels = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let stage = |rows: &[Vec<f64>], factor: f64| -> Vec<Vec<f64>> {
        rows.windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a + (a - b) / (factor - 1.0)).collect())
            .collect()
    };
    let mut table = stage(&levels, 4.0);
    if table.len() >= 2 {
        let second = stage(&table, 16.0);
        if second.len() >= 2 {
            table = second;
        } else {
            // two first-stage values: report the finer one, judged against the second stage
            let s = second[0].clone();
            table = vec![table[1].clone(), s];
        }
    } else {
        table = vec![levels[levels.len() - 1].clone(), table[0].clone()];
    }
    let k = table.len();
    let extrapolated = table[k - 1].clone();
    let error_estimate = table[k - 1].iter().zip(&table[k - 2]).map(|(a, b)| (a - b).abs()).collect();
    Ok(ExtrapolatedData {
        nodes,
        levels,
        extrapolated,
        error_estimate,
    })
}

/// Pointwise certificate of the constructed `u`, with the profile it was computed on.
pub fn certify_constructed(it: &SystemIterate) -> Result<(RadialProfile, Certificate)> {
    let profile = it.to_profile()?;
    let cert = pointwise_certificate(&profile)?;
    Ok((profile, cert))
}

/// `max |u(r)| / r^{2m-2}` over `[R/2, R]`.
pub fn outer_growth_ratio(it: &SystemIterate) -> f64 {
    let r_end = *it.r.last().unwrap();
    let p = 2 * it.dim.m as i32 - 2;
    it.r.iter()
        .zip(it.u())
        .filter(|(&r, _)| r >= 0.5 * r_end)
        .map(|(&r, u)| u.abs() / r.powi(p))
        .fold(0.0, f64::max)
}
