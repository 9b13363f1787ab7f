//! Explicit Runge–Kutta integrators.
//!
//! [`rk4_step`] is the workhorse for the network and shooting maps. The
//! adaptive Dormand–Prince driver serves the low-dimensional slow-flow
//! problems, where tight tolerances matter more than raw speed.

/// Right-hand side `f(t, y, dy)`.
pub trait Rhs {
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Rhs for F {
    fn eval(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        self(t, y, dy)
    }
}

/// Scratch space for [`rk4_step`] so hot loops do not allocate.
#[derive(Debug, Clone)]
pub struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Workspace {
    pub fn new(dim: usize) -> Self {
        Rk4Workspace {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }
}

/// One classical fourth-order step, updating `y` in place.
pub fn rk4_step<F: Rhs>(f: &mut F, t: f64, y: &mut [f64], h: f64, ws: &mut Rk4Workspace) {
    let n = y.len();
    f.eval(t, y, &mut ws.k1);
    for i in 0..n {
        ws.tmp[i] = y[i] + 0.5 * h * ws.k1[i];
    }
    f.eval(t + 0.5 * h, &ws.tmp, &mut ws.k2);
    for i in 0..n {
        ws.tmp[i] = y[i] + 0.5 * h * ws.k2[i];
    }
    f.eval(t + 0.5 * h, &ws.tmp, &mut ws.k3);
    for i in 0..n {
        ws.tmp[i] = y[i] + h * ws.k3[i];
    }
    f.eval(t + h, &ws.tmp, &mut ws.k4);
    for i in 0..n {
        y[i] += h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
}

/// Integrates over `[t0, t0 + steps * h]` with fixed RK4 steps.
pub fn rk4_integrate<F: Rhs>(f: &mut F, t0: f64, y: &mut [f64], h: f64, steps: usize) {
    let mut ws = Rk4Workspace::new(y.len());
    for s in 0..steps {
        rk4_step(f, t0 + s as f64 * h, y, h, &mut ws);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub atol: f64,
    pub rtol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            atol: 1e-10,
            rtol: 1e-10,
            h_init: 1e-3,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

/// What the observer wants after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedEnd,
    Stopped,
    StepSizeUnderflow,
    MaxSteps,
    NonFinite,
}

// Dormand–Prince 5(4) tableau
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand–Prince step from `(t, y)` with size `h`. Returns the fifth-order
/// solution and the scaled error norm (accept when ≤ 1).
pub fn dopri_step<F: Rhs>(
    f: &mut F,
    t: f64,
    y: &[f64],
    h: f64,
    atol: f64,
    rtol: f64,
) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    f.eval(t, y, &mut k[0]);
    let stages: [(f64, &[f64]); 5] = [
        (C2, &[A21]),
        (C3, &[A31, A32]),
        (C4, &[A41, A42, A43]),
        (C5, &[A51, A52, A53, A54]),
        (1.0, &[A61, A62, A63, A64, A65]),
    ];
    for (s, (c, a)) in stages.iter().enumerate() {
        for i in 0..n {
            let mut acc = y[i];
            for (j, aj) in a.iter().enumerate() {
                acc += h * aj * k[j][i];
            }
            tmp[i] = acc;
        }
        f.eval(t + c * h, &tmp, &mut k[s + 1]);
    }
    let mut y_new = vec![0.0; n];
    for i in 0..n {
        y_new[i] = y[i] + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
    }
    f.eval(t + h, &y_new, &mut k[6]);
    let mut err = 0.0;
    for i in 0..n {
        let e = h
            * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                + E7 * k[6][i]);
        let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
        err += (e / scale).powi(2);
    }
    (y_new, (err / n as f64).sqrt())
}

/// Adaptive integration from `t0` toward `t_end` (either direction).
///
/// `observe(t, y)` sees every accepted point, including the initial one, and
/// can stop the run early.
pub fn integrate_adaptive<F: Rhs, O: FnMut(f64, &[f64]) -> Control>(
    f: &mut F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &AdaptiveOptions,
    mut observe: O,
) -> (f64, Vec<f64>, Termination) {
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    if observe(t, &y) == Control::Stop {
        return (t, y, Termination::Stopped);
    }
    let mut h = opts.h_init.min(opts.h_max).min((t_end - t0).abs());
    let mut steps = 0;
    while (t_end - t) * dir > 0.0 {
        if steps >= opts.max_steps {
            return (t, y, Termination::MaxSteps);
        }
        steps += 1;
        let remaining = (t_end - t).abs();
        let last = h >= remaining;
        let h_try = if last { remaining } else { h };
        let (y_new, err) = dopri_step(f, t, &y, dir * h_try, opts.atol, opts.rtol);
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h = h_try * 0.25;
            if h < opts.h_min {
                return (t, y, Termination::NonFinite);
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t_end } else { t + dir * h_try };
            y = y_new;
            if observe(t, &y) == Control::Stop {
                return (t, y, Termination::Stopped);
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h_try * factor).min(opts.h_max);
        if h < opts.h_min {
            return (t, y, Termination::StepSizeUnderflow);
        }
    }
    (t, y, Termination::ReachedEnd)
}
