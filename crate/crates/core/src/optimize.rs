//! Small derivative-free maximizers used by the sup computations.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
///
/// Returns `(x, f(x))` for the best point seen, which includes both endpoints.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut best = (lo, f(lo));
    let fhi = f(hi);
    if fhi > best.1 {
        best = (hi, fhi);
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= xtol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Result of a scanned maximization in `log r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanMax {
    pub x: f64,
    pub value: f64,
    /// Best value on the raw scan before polishing.
    pub scan_value: f64,
    pub at_lower_end: bool,
    pub at_upper_end: bool,
}

/// Maximizes `f` over `[lo, hi]` (both positive) on a logarithmic grid of `n`
/// nodes, then polishes the best cell with golden section.
pub fn log_scan_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize) -> ScanMax {
    assert!(lo > 0.0 && hi > lo && n >= 3);
    let (la, lb) = (lo.ln(), hi.ln());
    let node = |i: usize| (la + (lb - la) * i as f64 / (n - 1) as f64).exp();
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let v = f(node(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let a = node(best_i.saturating_sub(1));
    let b = node((best_i + 1).min(n - 1));
    let (x, value) = golden_max(|t| f(t.exp()), a.ln(), b.ln(), 1e-14);
    let (x, value) = if value >= best { (x.exp(), value) } else { (node(best_i), best) };
    ScanMax {
        x,
        value,
        scan_value: best,
        at_lower_end: best_i == 0,
        at_upper_end: best_i == n - 1,
    }
}

/// Nelder–Mead maximization of `f` from `x0` with initial simplex scale `step`.
pub fn nelder_mead_max<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], step: f64, max_iter: usize, ftol: f64) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), -f(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = -f(&x);
        simplex.push((x, v));
    }
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect() };
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[d].1);
        if (worst - best).abs() <= ftol * (1.0 + best.abs()) {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let xr = combine(&centroid, &simplex[d].0, -1.0);
        let fr = -f(&xr);
        if fr < simplex[0].1 {
            let xe = combine(&centroid, &simplex[d].0, -2.0);
            let fe = -f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let xc = combine(&centroid, &simplex[d].0, 0.5);
            let fc = -f(&xc);
            if fc < simplex[d].1 {
                simplex[d] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x = combine(&x0, &item.0, 0.5);
                    let v = -f(&x);
                    *item = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (x, -v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_scan_on_ln_over_power() {
        // max of ln(r)/r at r = e
        let s = log_scan_max(|r| r.ln() / r, 1e-3, 1e3, 200);
        assert!((s.x - std::f64::consts::E).abs() < 1e-6);
        assert!(!s.at_lower_end && !s.at_upper_end);
    }

    #[test]
    fn nelder_mead_quadratic() {
        let (x, v) = nelder_mead_max(|x| -(x[0] - 1.0).powi(2) - 2.0 * (x[1] + 0.5).powi(2), &[0.0, 0.0], 0.5, 2000, 1e-15);
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] + 0.5).abs() < 1e-5);
        assert!(v.abs() < 1e-9);
    }
}
