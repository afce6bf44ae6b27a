use serde::Serialize;

use super::series::OriginSeries;
use crate::constants::Dimension;
use crate::error::{Error, Result};

/// Outcome of a radial integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileStatus {
    /// No blow-up detected up to `r_max`.
    Global { r_max: f64 },
    /// `v_0` crossed the cap with positive, accelerating slope (or the step size underflowed).
    BlowUp {
        radius: f64,
        error_bar: f64,
        detected_at: f64,
    },
}

impl ProfileStatus {
    pub fn is_global(&self) -> bool {
        matches!(self, ProfileStatus::Global { .. })
    }
}

/// Grid samples of the Laplacian chain `v_k = (-Δ)^k u` with a piecewise
/// quintic (or cubic, without second derivatives) Hermite interpolant.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    dim: Dimension,
    grid: Vec<f64>,
    v: Vec<Vec<f64>>,
    dv: Vec<Vec<f64>>,
    d2v: Option<Vec<Vec<f64>>>,
    series: Option<(f64, OriginSeries)>,
    status: ProfileStatus,
}

impl RadialProfile {
    pub(crate) fn from_parts(
        dim: Dimension,
        grid: Vec<f64>,
        v: Vec<Vec<f64>>,
        dv: Vec<Vec<f64>>,
        d2v: Vec<Vec<f64>>,
        series: Option<(f64, OriginSeries)>,
        status: ProfileStatus,
    ) -> Self {
        RadialProfile {
            dim,
            grid,
            v,
            dv,
            d2v: Some(d2v),
            series,
            status,
        }
    }

    /// Profile built from externally computed samples (cubic Hermite interpolation).
    ///
    /// `v[k][i]` and `dv[k][i]` are `v_k` and `v_k'` at `grid[i]`; the grid must
    /// start at 0 and increase strictly.
    pub fn from_samples(dim: Dimension, grid: Vec<f64>, v: Vec<Vec<f64>>, dv: Vec<Vec<f64>>) -> Result<Self> {
        if grid.len() < 2 || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("grid must start at 0 and be strictly increasing".into()));
        }
        if v.len() != dim.m as usize || dv.len() != dim.m as usize {
            return Err(Error::Config("need m rows of samples".into()));
        }
        if v.iter().chain(dv.iter()).any(|row| row.len() != grid.len()) {
            return Err(Error::Config("sample rows must match the grid".into()));
        }
        let r_max = *grid.last().unwrap();
        Ok(RadialProfile {
            dim,
            grid,
            v,
            dv,
            d2v: None,
            series: None,
            status: ProfileStatus::Global { r_max },
        })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn status(&self) -> ProfileStatus {
        self.status
    }

    pub fn r_end(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Stored `v_k` samples.
    pub fn v(&self, k: usize) -> &[f64] {
        &self.v[k]
    }

    pub fn dv(&self, k: usize) -> &[f64] {
        &self.dv[k]
    }

    /// `u = v_0` at the nodes.
    pub fn u(&self) -> &[f64] {
        &self.v[0]
    }

    /// `Δ^k u(0)` recovered from the first node.
    pub fn initial_data(&self) -> Vec<f64> {
        (0..self.dim.m as usize)
            .map(|k| if k % 2 == 0 { self.v[k][0] } else { -self.v[k][0] })
            .collect()
    }

    fn locate(&self, r: f64) -> Result<usize> {
        if !(0.0..=self.r_end()).contains(&r) {
            return Err(Error::Range(format!(
                "radius {r} outside profile [0, {}]",
                self.r_end()
            )));
        }
        let idx = self.grid.partition_point(|&g| g <= r);
        Ok(idx.saturating_sub(1).min(self.grid.len() - 2))
    }

    fn in_series_zone(&self, r: f64) -> Option<&OriginSeries> {
        match &self.series {
            Some((r0, s)) if r <= *r0 => Some(s),
            _ => None,
        }
    }

    /// Dense output `(v_0(r), …, v_{m-1}(r))`.
    pub fn evaluate(&self, r: f64) -> Result<Vec<f64>> {
        let i = self.locate(r)?;
        let m = self.dim.m as usize;
        if let Some(s) = self.in_series_zone(r) {
            return Ok((0..m).map(|k| s.value(k, r)).collect());
        }
        Ok((0..m).map(|k| self.hermite(k, i, r).0).collect())
    }

    /// `(v_k(r), v_k'(r), v_k''(r))` from the interpolant.
    pub fn evaluate_component(&self, k: usize, r: f64) -> Result<(f64, f64, f64)> {
        let i = self.locate(r)?;
        if let Some(s) = self.in_series_zone(r) {
            return Ok((s.value(k, r), s.derivative(k, r), s.second_derivative(k, r)));
        }
        Ok(self.hermite(k, i, r))
    }

    fn hermite(&self, k: usize, i: usize, r: f64) -> (f64, f64, f64) {
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let (f0, f1) = (self.v[k][i], self.v[k][i + 1]);
        let (d0, d1) = (self.dv[k][i] * h, self.dv[k][i + 1] * h);
        if t == 0.0 {
            return (f0, self.dv[k][i], self.d2v.as_ref().map_or(f64::NAN, |s| s[k][i]));
        }
        if t == 1.0 {
            return (f1, self.dv[k][i + 1], self.d2v.as_ref().map_or(f64::NAN, |s| s[k][i + 1]));
        }
        match &self.d2v {
            Some(d2v) => {
                let (s0, s1) = (d2v[k][i] * h * h, d2v[k][i + 1] * h * h);
                let t2 = t * t;
                let t3 = t2 * t;
                let t4 = t3 * t;
                let t5 = t4 * t;
                let val = f0 * (1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5)
                    + d0 * (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5)
                    + s0 * 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5)
                    + s1 * 0.5 * (t3 - 2.0 * t4 + t5)
                    + d1 * (-4.0 * t3 + 7.0 * t4 - 3.0 * t5)
                    + f1 * (10.0 * t3 - 15.0 * t4 + 6.0 * t5);
                let dval = f0 * (-30.0 * t2 + 60.0 * t3 - 30.0 * t4)
                    + d0 * (1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4)
                    + s0 * 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4)
                    + s1 * 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4)
                    + d1 * (-12.0 * t2 + 28.0 * t3 - 15.0 * t4)
                    + f1 * (30.0 * t2 - 60.0 * t3 + 30.0 * t4);
                let ddval = f0 * (-60.0 * t + 180.0 * t2 - 120.0 * t3)
                    + d0 * (-36.0 * t + 96.0 * t2 - 60.0 * t3)
                    + s0 * 0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3)
                    + s1 * 0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3)
                    + d1 * (-24.0 * t + 84.0 * t2 - 60.0 * t3)
                    + f1 * (60.0 * t - 180.0 * t2 + 120.0 * t3);
                (val, dval / h, ddval / (h * h))
            }
            None => {
                let t2 = t * t;
                let t3 = t2 * t;
                let val = f0 * (2.0 * t3 - 3.0 * t2 + 1.0)
                    + d0 * (t3 - 2.0 * t2 + t)
                    + f1 * (-2.0 * t3 + 3.0 * t2)
                    + d1 * (t3 - t2);
                let dval = f0 * (6.0 * t2 - 6.0 * t) + d0 * (3.0 * t2 - 4.0 * t + 1.0) + f1 * (-6.0 * t2 + 6.0 * t) + d1 * (3.0 * t2 - 2.0 * t);
                let ddval = f0 * (12.0 * t - 6.0) + d0 * (6.0 * t - 4.0) + f1 * (-12.0 * t + 6.0) + d1 * (6.0 * t - 2.0);
                (val, dval / h, ddval / (h * h))
            }
        }
    }

    /// Restriction to `[0, r]` (node list truncated, `r` appended if needed).
    pub fn truncated(&self, r: f64) -> Result<RadialProfile> {
        let i = self.locate(r)?;
        let mut out = self.clone();
        let keep = if self.grid[i + 1] == r { i + 2 } else { i + 1 };
        out.grid.truncate(keep);
        for row in out.v.iter_mut().chain(out.dv.iter_mut()) {
            row.truncate(keep);
        }
        if let Some(d2v) = out.d2v.as_mut() {
            for row in d2v.iter_mut() {
                row.truncate(keep);
            }
        }
        if *out.grid.last().unwrap() < r {
            let m = self.dim.m as usize;
            let comps: Vec<_> = (0..m).map(|k| self.evaluate_component(k, r).unwrap()).collect();
            out.grid.push(r);
            for (k, (val, d, dd)) in comps.into_iter().enumerate() {
                out.v[k].push(val);
                out.dv[k].push(d);
                if let Some(d2v) = out.d2v.as_mut() {
                    d2v[k].push(dd);
                }
            }
        }
        out.status = ProfileStatus::Global { r_max: r };
        Ok(out)
    }
}

/// Per-`k` outcome of comparing `Δ^k u_a` against `Δ^k u_b`.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentOrdering {
    pub k: usize,
    pub checked: usize,
    pub violations: usize,
    /// Most negative `Δ^k u_a - Δ^k u_b` seen (0 when none negative).
    pub worst_gap: f64,
    pub worst_radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    pub common_radius: f64,
    pub components: Vec<ComponentOrdering>,
    pub holds: bool,
}

/// Checks `Δ^k u_a(r) >= Δ^k u_b(r) - tol (1 + |Δ^k u_b(r)|)` on the union of both grids
/// restricted to the common interval.
pub fn compare_profiles(pa: &RadialProfile, pb: &RadialProfile, tol: f64) -> Result<OrderingReport> {
    if pa.dim() != pb.dim() {
        return Err(Error::Dimension(format!(
            "profiles have different dimensions {} vs {}",
            pa.dim(),
            pb.dim()
        )));
    }
    let common = pa.r_end().min(pb.r_end());
    let mut radii: Vec<f64> = pa
        .grid()
        .iter()
        .chain(pb.grid())
        .copied()
        .filter(|&r| r <= common)
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let m = pa.dim().m as usize;
    let mut components: Vec<ComponentOrdering> = (0..m)
        .map(|k| ComponentOrdering {
            k,
            checked: 0,
            violations: 0,
            worst_gap: 0.0,
            worst_radius: 0.0,
        })
        .collect();
    for &r in &radii {
        let va = pa.evaluate(r)?;
        let vb = pb.evaluate(r)?;
        for (k, c) in components.iter_mut().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let (la, lb) = (sign * va[k], sign * vb[k]);
            let gap = la - lb;
            c.checked += 1;
            if gap < -tol * (1.0 + lb.abs()) {
                c.violations += 1;
            }
            if gap < c.worst_gap {
                c.worst_gap = gap;
                c.worst_radius = r;
            }
        }
    }
    let holds = components.iter().all(|c| c.violations == 0);
    Ok(OrderingReport {
        common_radius: common,
        components,
        holds,
    })
}
