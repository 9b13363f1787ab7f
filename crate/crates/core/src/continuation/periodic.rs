use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

use super::newton::{newton_corrector, solve_linear, NewtonOptions, Residual};
use super::{
    complex_eigenvalues, BifurcationPoint, Branch, BranchEnd, BranchKind, BranchPoint, EventKind,
    FrozenSystem, ParamSpec,
};
use crate::error::{Error, Result};
use crate::linalg::complex_null_vector;
use crate::network::NetworkModel;

/// Initial guess for a periodic orbit near a Hopf point.
#[derive(Debug, Clone)]
pub struct PeriodicSeed {
    /// `(u(0), u̇(0))`.
    pub x0: Vec<f64>,
    pub period: f64,
    pub param: f64,
    /// False when node Q barely moves, so its velocity cannot anchor the phase.
    pub velocity_phase: bool,
}

impl PeriodicSeed {
    /// Restarts from a converged branch point.
    pub fn from_point(point: &BranchPoint, model: &NetworkModel) -> Self {
        let x0 = point.state.clone();
        let norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
        PeriodicSeed {
            velocity_phase: x0[model.q].abs() > 1e-6 * norm,
            x0,
            period: point.period.unwrap_or(0.0),
            param: point.param,
        }
    }
}

/// Builds `u(t) = a0·Re(e^{iωt} v)` from the critical eigenvector `v`.
///
/// The phase is chosen so that node Q sits at a turning point at `t = 0`
/// (`u̇_Q(0) = 0`, `u_Q(0) > 0`).
pub fn seed_periodic_orbit(
    model: &NetworkModel,
    spec: &ParamSpec,
    hopf: &BifurcationPoint,
    a0: f64,
) -> Result<PeriodicSeed> {
    if !(a0 > 0.0) || !a0.is_finite() {
        return Err(Error::SeedFailure(format!("seed amplitude must be positive, got {a0}")));
    }
    if hopf.kind != EventKind::Hopf || !(hopf.frequency > 0.0) {
        return Err(Error::SeedFailure("not a Hopf point with a crossing pair".into()));
    }
    let n = model.n;
    let omega = hopf.frequency;
    let lambda = Complex::new(0.0, omega);
    let damping = spec.damping(model, hopf.param);
    let mut a = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = Complex::new(model.stiffness[(i, j)], 0.0);
        }
        let c = if i == model.q { -model.nu } else { damping[i] };
        a[(i, i)] += lambda * lambda + lambda * model.epsilon * c;
    }
    let (v, _, ratio) = complex_null_vector(a);
    if ratio > 1e-6 {
        return Err(Error::SeedFailure(format!(
            "no critical eigenvector at the Hopf point (singular-value ratio {ratio:e})"
        )));
    }
    let norm = v.norm();
    let velocity_phase = v[model.q].norm() > 1e-8 * norm;
    let pivot = if velocity_phase {
        model.q
    } else {
        (0..n).max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm())).unwrap()
    };
    let rot = v[pivot].conj() / (v[pivot].norm() * norm);
    let mut x0 = vec![0.0; 2 * n];
    for k in 0..n {
        let w = v[k] * rot;
        x0[k] = a0 * w.re;
        x0[n + k] = -a0 * omega * w.im;
    }
    Ok(PeriodicSeed {
        x0,
        period: 2.0 * std::f64::consts::PI / omega,
        param: hopf.param,
        velocity_phase,
    })
}

/// Return-map residual `Φ_T(x0) − x0` with `steps` RK4 steps.
pub fn shooting_residual(
    model: &NetworkModel,
    spec: &ParamSpec,
    x0: &[f64],
    period: f64,
    mu: f64,
    steps: usize,
) -> Vec<f64> {
    let sys = FrozenSystem::new(model, spec, mu);
    let mut y = sys.flow(x0, period, steps, None);
    for (yi, xi) in y.iter_mut().zip(x0) {
        *yi -= xi;
    }
    y
}

/// Floquet multipliers sorted by distance from 1; the first is the trivial one.
pub fn floquet_multipliers(monodromy: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut mult = complex_eigenvalues(monodromy);
    let one = Complex::new(1.0, 0.0);
    mult.sort_by(|a, b| (a - one).norm().total_cmp(&(b - one).norm()));
    mult
}

#[derive(Debug, Clone, Copy)]
pub struct PeriodicOptions {
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_points: usize,
    /// Lower bound on RK4 steps per period; raised when the damping is stiff.
    pub steps_per_period: usize,
    pub stop_at_first_sn: bool,
    /// Stop once any `|u_k|` exceeds this.
    pub max_amplitude: f64,
    /// Stop once the period exceeds this multiple of the seed period.
    pub period_cap: f64,
    /// `+1` follows increasing `u_Q(0)` from the seed, `-1` the opposite way.
    pub direction: f64,
    pub newton: NewtonOptions,
}

impl Default for PeriodicOptions {
    fn default() -> Self {
        PeriodicOptions {
            ds: 0.05,
            ds_min: 1e-6,
            ds_max: 0.25,
            max_points: 300,
            steps_per_period: 256,
            stop_at_first_sn: false,
            max_amplitude: 20.0,
            period_cap: 10.0,
            direction: 1.0,
            newton: NewtonOptions {
                tol: 1e-9,
                max_iter: 8,
                fd_step: 1e-7,
            },
        }
    }
}

enum Phase {
    Velocity(usize),
    Integral { x_ref: DVector<f64>, f_ref: DVector<f64> },
}

enum Extra {
    Anchor { index: usize, value: f64 },
    Arclength { origin: DVector<f64>, tangent: DVector<f64>, ds: f64 },
}

/// Unknowns `(x0, T, μ/p_scale)`.
struct Shooting<'a> {
    model: &'a NetworkModel,
    spec: &'a ParamSpec,
    steps: usize,
    p_scale: f64,
    fd_step: f64,
    phase: Phase,
    extra: Extra,
}

impl Shooting<'_> {
    fn n2(&self) -> usize {
        2 * self.model.n
    }

    fn mu(&self, x: &DVector<f64>) -> f64 {
        self.p_scale * x[self.n2() + 1]
    }

    fn frozen(&self, x: &DVector<f64>) -> FrozenSystem<'_> {
        FrozenSystem::new(self.model, self.spec, self.mu(x))
    }

    fn set_integral_reference(&mut self, x: &DVector<f64>) {
        if let Phase::Integral { .. } = self.phase {
            let n2 = self.n2();
            let mut f = vec![0.0; n2];
            self.frozen(x).rhs(&x.as_slice()[..n2], &mut f);
            self.phase = Phase::Integral {
                x_ref: x.rows(0, n2).into_owned(),
                f_ref: DVector::from_vec(f),
            };
        }
    }
}

impl Residual for Shooting<'_> {
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let n2 = self.n2();
        let period = x[n2];
        let x0 = &x.as_slice()[..n2];
        let y = self.frozen(x).flow(x0, period, self.steps, None);
        let mut r = DVector::zeros(n2 + 2);
        for i in 0..n2 {
            r[i] = y[i] - x0[i];
        }
        r[n2] = match &self.phase {
            Phase::Velocity(q) => x[self.model.n + q],
            Phase::Integral { x_ref, f_ref } => {
                (0..n2).map(|i| f_ref[i] * (x[i] - x_ref[i])).sum()
            }
        };
        r[n2 + 1] = match &self.extra {
            Extra::Anchor { index, value } => x[*index] - value,
            Extra::Arclength { origin, tangent, ds } => (x - origin).dot(tangent) - ds,
        };
        r
    }

    /// Forward differences, one flow per column, columns in parallel.
    fn jacobian(&self, x: &DVector<f64>, _h: f64) -> DMatrix<f64> {
        let f0 = self.eval(x);
        let cols: Vec<DVector<f64>> = (0..x.len())
            .into_par_iter()
            .map(|j| {
                let step = self.fd_step * x[j].abs().max(1.0);
                let mut xp = x.clone();
                xp[j] += step;
                (self.eval(&xp) - &f0) / step
            })
            .collect();
        DMatrix::from_columns(&cols)
    }
}

fn steps_for(model: &NetworkModel, spec: &ParamSpec, seed: &PeriodicSeed, range: (f64, f64), min_steps: usize) -> usize {
    let mut gersh: f64 = 0.0;
    for i in 0..model.n {
        gersh = gersh.max((0..model.n).map(|j| model.stiffness[(i, j)].abs()).sum());
    }
    let dmax = spec
        .damping(model, range.0.abs().max(range.1.abs()))
        .iter()
        .fold(model.nu, |m, c| m.max(c.abs()));
    let rho = gersh.sqrt() + model.epsilon * dmax;
    min_steps.max((2.0 * seed.period * rho).ceil() as usize)
}

fn unit_last(dim: usize) -> DVector<f64> {
    let mut e = DVector::zeros(dim);
    e[dim - 1] = 1.0;
    e
}

fn tangent_from(j: &DMatrix<f64>) -> Result<DVector<f64>> {
    let t = solve_linear(j.clone(), &unit_last(j.nrows()))?;
    let norm = t.norm();
    Ok(t / norm)
}

struct Corrected {
    x: DVector<f64>,
    jac: DMatrix<f64>,
    tangent: DVector<f64>,
    iterations: usize,
}

fn correct_along(
    sys: &mut Shooting<'_>,
    origin: &DVector<f64>,
    tangent: &DVector<f64>,
    ds: f64,
    newton: &NewtonOptions,
) -> Result<Corrected> {
    sys.extra = Extra::Arclength {
        origin: origin.clone(),
        tangent: tangent.clone(),
        ds,
    };
    let sol = newton_corrector(&*sys, origin + tangent * ds, newton)?;
    let jac = sys.jacobian(&sol.x, newton.fd_step);
    let tangent = tangent_from(&jac)?;
    Ok(Corrected {
        x: sol.x,
        jac,
        tangent,
        iterations: sol.iterations,
    })
}

fn branch_point(sys: &Shooting<'_>, x: &DVector<f64>, jac: &DMatrix<f64>) -> BranchPoint {
    let n = sys.model.n;
    let n2 = 2 * n;
    let mut max_u = vec![0.0; n];
    sys.frozen(x)
        .flow(&x.as_slice()[..n2], x[n2], sys.steps, Some(&mut max_u));
    let mut mono = jac.view((0, 0), (n2, n2)).into_owned();
    for i in 0..n2 {
        mono[(i, i)] += 1.0;
    }
    let mult = floquet_multipliers(&mono);
    let measure = mult[1..].iter().map(|m| m.norm()).fold(0.0, f64::max);
    BranchPoint {
        param: sys.mu(x),
        state: x.as_slice()[..n2].to_vec(),
        max_u,
        period: Some(x[n2]),
        stable: measure < 1.0,
        stability_measure: measure,
        event: None,
    }
}

/// Pseudo-arclength continuation of the periodic branch through `seed`.
///
/// The first point is the seed corrected with `u_Q(0)` held fixed. A stall
/// before any step is taken is an error; a later stall ends the branch and
/// is reported in [`Branch::end`].
pub fn continue_periodic(
    model: &NetworkModel,
    spec: &ParamSpec,
    seed: &PeriodicSeed,
    range: (f64, f64),
    opts: &PeriodicOptions,
) -> Result<Branch> {
    let n = model.n;
    let n2 = 2 * n;
    let (lo, hi) = (range.0.min(range.1), range.0.max(range.1));
    let p_scale = seed.param.abs().max(1.0);
    let phase = if seed.velocity_phase {
        Phase::Velocity(model.q)
    } else {
        Phase::Integral {
            x_ref: DVector::zeros(n2),
            f_ref: DVector::zeros(n2),
        }
    };
    let anchor = if seed.velocity_phase {
        model.q
    } else {
        (0..n2)
            .max_by(|&i, &j| seed.x0[i].abs().total_cmp(&seed.x0[j].abs()))
            .unwrap()
    };
    let mut sys = Shooting {
        model,
        spec,
        steps: steps_for(model, spec, seed, (lo, hi), opts.steps_per_period),
        p_scale,
        fd_step: opts.newton.fd_step,
        phase,
        extra: Extra::Anchor {
            index: anchor,
            value: seed.x0[anchor],
        },
    };

    let mut x = DVector::from_iterator(
        n2 + 2,
        seed.x0.iter().copied().chain([seed.period, seed.param / p_scale]),
    );
    sys.set_integral_reference(&x);
    let sol = newton_corrector(&sys, x.clone(), &opts.newton)?;
    x = sol.x;
    let jac = sys.jacobian(&x, opts.newton.fd_step);
    let mut tangent = tangent_from(&jac)? * opts.direction.signum();

    let mut points = vec![branch_point(&sys, &x, &jac)];
    let mut events = Vec::new();
    let mut ds = opts.ds;
    let pi = n2 + 1;
    let end = loop {
        if points.len() >= opts.max_points {
            break BranchEnd::MaxPoints;
        }
        sys.set_integral_reference(&x);
        let step = loop {
            match correct_along(&mut sys, &x, &tangent, ds, &opts.newton) {
                Ok(c) if c.x.iter().all(|v| v.is_finite()) && c.x[n2] > 0.0 => break Some(c),
                _ => {
                    ds *= 0.5;
                    if ds < opts.ds_min {
                        break None;
                    }
                }
            }
        };
        let Some(c) = step else {
            if points.len() == 1 {
                return Err(Error::BranchStalled {
                    parameter: sys.mu(&x),
                    min_step: opts.ds_min,
                });
            }
            break BranchEnd::Stalled {
                parameter: sys.mu(&x),
                min_step: opts.ds_min,
            };
        };
        let mu_new = sys.mu(&c.x);
        if mu_new < lo || mu_new > hi {
            break BranchEnd::RangeExit;
        }
        let fold = tangent[pi] * c.tangent[pi] < 0.0;
        if fold {
            let sn = refine_fold(&mut sys, &x, &tangent, ds, &c, &opts.newton);
            let n2 = sys.n2();
            events.push(BifurcationPoint {
                kind: EventKind::SaddleNode,
                param: sys.mu(&sn),
                state: sn.as_slice()[..n2].to_vec(),
                frequency: 2.0 * std::f64::consts::PI / sn[n2],
                period: Some(sn[n2]),
            });
        }
        let mut point = branch_point(&sys, &c.x, &c.jac);
        if fold {
            point.event = Some(EventKind::SaddleNode);
        }
        let too_big = point.max_u.iter().any(|u| u.abs() > opts.max_amplitude)
            || c.x.rows(0, n).amax() > opts.max_amplitude;
        let too_long = c.x[n2] > opts.period_cap * seed.period;
        points.push(point);
        if c.iterations <= 3 {
            ds = (ds * 1.5).min(opts.ds_max);
        }
        x = c.x;
        tangent = c.tangent;
        if fold && opts.stop_at_first_sn {
            break BranchEnd::FirstSaddleNode;
        }
        if too_big {
            break BranchEnd::AmplitudeCap;
        }
        if too_long {
            break BranchEnd::PeriodCap;
        }
    };

    Ok(Branch {
        kind: BranchKind::Periodic,
        param_label: spec.free.label(),
        points,
        events,
        end,
    })
}

/// Regula falsi on the step length for a zero of the tangent's parameter
/// component. Falls back to the bracketing point with the smaller component.
fn refine_fold(
    sys: &mut Shooting<'_>,
    origin: &DVector<f64>,
    t0: &DVector<f64>,
    ds: f64,
    end: &Corrected,
    newton: &NewtonOptions,
) -> DVector<f64> {
    let pi = sys.n2() + 1;
    let (mut s0, mut g0) = (0.0, t0[pi]);
    let (mut s1, mut g1) = (ds, end.tangent[pi]);
    let mut best = if g0.abs() < g1.abs() {
        (g0.abs(), origin.clone())
    } else {
        (g1.abs(), end.x.clone())
    };
    let mut side = 0;
    for _ in 0..12 {
        if best.0 < 1e-7 {
            break;
        }
        let s = (s0 * g1 - s1 * g0) / (g1 - g0);
        let Ok(c) = correct_along(sys, origin, t0, s, newton) else {
            break;
        };
        let g = c.tangent[pi];
        if g.abs() < best.0 {
            best = (g.abs(), c.x.clone());
        }
        if g * g0 > 0.0 {
            s0 = s;
            g0 = g;
            if side == -1 {
                g1 *= 0.5;
            }
            side = -1;
        } else {
            s1 = s;
            g1 = g;
            if side == 1 {
                g0 *= 0.5;
            }
            side = 1;
        }
    }
    best.1
}
