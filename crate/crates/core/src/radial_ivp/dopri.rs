//! Dormand–Prince 5(4) embedded pair with FSAL and proportional step control.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub(crate) struct StepOutcome {
    pub y_new: Vec<f64>,
    pub f_new: Vec<f64>,
    /// Scaled RMS error estimate; the step is acceptable when `<= 1`.
    pub err: f64,
}

pub(crate) struct Dopri<F> {
    rhs: F,
    dim: usize,
    k: [Vec<f64>; 6],
    tmp: Vec<f64>,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Dopri<F> {
    pub fn new(rhs: F, dim: usize) -> Self {
        Dopri {
            rhs,
            dim,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
        }
    }

    pub fn eval(&mut self, t: f64, y: &[f64], out: &mut [f64]) {
        (self.rhs)(t, y, out)
    }

    /// One trial step from `(t, y)` with derivative `f0 = f(t, y)`.
    pub fn step(&mut self, t: f64, y: &[f64], f0: &[f64], h: f64, rtol: f64, atol: f64) -> StepOutcome {
        let n = self.dim;
        let [k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * f0[i];
        }
        (self.rhs)(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * f0[i] + A32 * k2[i]);
        }
        (self.rhs)(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * f0[i] + A42 * k2[i] + A43 * k3[i]);
        }
        (self.rhs)(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * f0[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        (self.rhs)(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * f0[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        (self.rhs)(t + h, tmp, k6);
        let mut y_new = vec![0.0; n];
        for i in 0..n {
            y_new[i] = y[i] + h * (B1 * f0[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        (self.rhs)(t + h, &y_new, k7);

        let mut acc = 0.0;
        for i in 0..n {
            let e = h * (E1 * f0[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
            acc += (e / sc).powi(2);
        }
        let mut err = (acc / n as f64).sqrt();
        if !err.is_finite() || y_new.iter().chain(k7.iter()).any(|v| !v.is_finite()) {
            err = f64::INFINITY;
        }
        StepOutcome {
            y_new,
            f_new: k7.clone(),
            err,
        }
    }
}

/// Step-size factor for the next attempt given the scaled error.
pub(crate) fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        5.0
    } else if !err.is_finite() {
        0.1
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    }
}
