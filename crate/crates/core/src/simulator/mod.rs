//! Closed-loop simulation of the network with delay-based amplitude estimates.
//!
//! Each linear node estimates the oscillation amplitude from one carrier period
//! of locally available history, using a four-point trapezoidal quadrature.
//! The estimates drive the damping rate laws, which in turn feed back into the
//! equations of motion.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{full_rhs, modal_decompose, NetworkModel, Regime};
use crate::ode::{rk4_step, Rk4Workspace};
use crate::slowflow::{
    bifurcation_values, make_large_damping_model, make_small_damping_model, trigger_threshold,
    RateLaw, SlowFlowModel,
};

mod history;

pub use history::HistoryBuffer;

const ZERO_SHAPE_TOL: f64 = 1e-12;
const DENSE_POINTS: usize = 256;

/// Four-point amplitude estimator for every node.
#[derive(Debug, Clone)]
pub struct Estimator {
    pub omega: f64,
    pub window: f64,
    /// Row `k` maps displacements to the signal node `k` demodulates, already
    /// divided by the node's gain. All-zero rows give `A_k = 0`.
    pub gains: DMatrix<f64>,
}

impl Estimator {
    pub fn new(model: &NetworkModel, sf: &SlowFlowModel) -> Self {
        let n = model.n;
        let omega = sf.omega;
        let mut gains = DMatrix::zeros(n, n);
        match sf.regime {
            Regime::Small => {
                let shape = sf.mode_shape.as_ref().expect("small regime carries a mode");
                for k in 0..n {
                    let p = shape[k];
                    if p.abs() < ZERO_SHAPE_TOL {
                        continue;
                    }
                    let scale = 1.0 / (p * (omega * omega - 1.0));
                    for j in 0..n {
                        gains[(k, j)] = model.laplacian[(k, j)] * scale;
                    }
                }
            }
            Regime::Large => {
                for k in 0..n {
                    if k == model.q || model.adjacency[(k, model.q)] != 0.0 {
                        gains[(k, model.q)] = 1.0;
                    }
                }
            }
        }
        Estimator {
            omega,
            window: 2.0 * std::f64::consts::PI / omega,
            gains,
        }
    }

    /// All nodal estimates at time `t`.
    pub fn estimate_all(&self, history: &HistoryBuffer, t: f64, out: &mut [f64]) {
        let n = out.len();
        let h = self.window / 3.0;
        let mut u = vec![0.0; n];
        let mut acc = vec![Complex::new(0.0, 0.0); n];
        for j in 0..4 {
            let s = t - self.window + j as f64 * h;
            let w = if j == 0 || j == 3 { 0.5 * h } else { h };
            history.displacement_at(s, &mut u);
            let z = Complex::from_polar(w, self.omega * s);
            for (a, x) in acc.iter_mut().zip(&u) {
                *a += z * *x;
            }
        }
        let scale = self.omega / std::f64::consts::PI;
        for k in 0..n {
            let mut c = Complex::new(0.0, 0.0);
            for j in 0..n {
                let g = self.gains[(k, j)];
                if g != 0.0 {
                    c += acc[j] * g;
                }
            }
            out[k] = scale * c.norm();
        }
    }

    /// Estimate for a single node.
    pub fn estimate_amplitude(&self, history: &HistoryBuffer, t: f64, k: usize) -> f64 {
        let mut out = vec![0.0; self.gains.nrows()];
        self.estimate_all(history, t, &mut out);
        out[k]
    }
}

/// Exogenous burst `ε f sin(ω_c t)` applied while `εt ≤ duration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    /// Per-node amplitudes `f` (before the ε scaling).
    pub amplitude: Vec<f64>,
    /// Carrier frequency; defaults to the active carrier of the regime.
    pub carrier: Option<f64>,
    /// Burst length in slow time.
    pub duration: f64,
}

impl Burst {
    pub fn none(n: usize) -> Self {
        Burst {
            amplitude: vec![0.0; n],
            carrier: None,
            duration: 0.0,
        }
    }

    pub fn single(n: usize, node: usize, value: f64) -> Self {
        let mut amplitude = vec![0.0; n];
        amplitude[node] = value;
        Burst {
            amplitude,
            carrier: None,
            duration: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub regime: Regime,
    pub delta: f64,
    pub tau: f64,
    pub burst: Burst,
    /// Half-width of the uniform noise added to `u(0)`.
    pub noise: f64,
    /// Fast-time step; defaults to a hundredth of the carrier period.
    pub dt: Option<f64>,
    /// Fast-time horizon; defaults to the burst plus twelve damping time
    /// constants.
    pub t_end: Option<f64>,
    /// Record every this many steps.
    pub sample_every: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(regime: Regime, delta: f64, tau: f64, burst: Burst) -> Self {
        ScenarioConfig {
            regime,
            delta,
            tau,
            burst,
            noise: 0.0,
            dt: None,
            t_end: None,
            sample_every: 10,
            seed: 0,
        }
    }
}

/// Force vector at time `t`.
pub fn excitation(t: f64, burst: &Burst, carrier: f64, epsilon: f64, out: &mut [f64]) {
    if burst.duration > 0.0 && t >= 0.0 && epsilon * t <= burst.duration {
        let s = epsilon * (burst.carrier.unwrap_or(carrier) * t).sin();
        for (o, f) in out.iter_mut().zip(&burst.amplitude) {
            *o = f * s;
        }
    } else {
        out.fill(0.0);
    }
}

/// Uniform noise on `[−a, a]` per displacement, drawn once from the seed.
pub fn initial_displacement(n: usize, amplitude: f64, seed: u64) -> Vec<f64> {
    if amplitude == 0.0 {
        return vec![0.0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-amplitude..=amplitude)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Quiescent,
    Hysteretic,
    PersistentOscillation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub activation: f64,
    pub quiescence_fraction: f64,
    pub zeta_band: f64,
    pub zeta_rest: f64,
    /// Fast time at which the burst stops.
    pub burst_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub zeta: Vec<f64>,
    pub a: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceMeta {
    pub regime: Regime,
    pub q: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub tau: f64,
    pub omega: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub t_end: f64,
    pub weights: Vec<f64>,
    pub thresholds: Thresholds,
    pub outcome: Outcome,
    /// Set when integration stopped early on a non-finite state.
    pub diverged_at: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationTrace {
    pub records: Vec<TraceRecord>,
    pub meta: TraceMeta,
}

impl SimulationTrace {
    pub fn n(&self) -> usize {
        self.meta.weights.len()
    }

    /// Weighted damping aggregate of record `i`.
    pub fn zeta_aggregate(&self, i: usize) -> f64 {
        self.meta
            .weights
            .iter()
            .zip(&self.records[i].zeta)
            .map(|(w, z)| w * z)
            .sum()
    }
}

/// Integration state for one closed-loop run.
pub struct Simulator<'a> {
    model: &'a NetworkModel,
    regime: Regime,
    law: RateLaw,
    estimator: Estimator,
    burst: Burst,
    pub t: f64,
    pub dt: f64,
    pub state: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub history: HistoryBuffer,
    ws: Rk4Workspace,
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a NetworkModel, sf: SlowFlowModel, config: &ScenarioConfig) -> Result<Self> {
        let n = model.n;
        let period = sf.carrier_period();
        let dt = config.dt.unwrap_or(period / 100.0);
        if !(dt > 0.0 && dt <= period / 40.0 * (1.0 + 1e-12)) {
            return Err(Error::config(
                "scenario.dt",
                format!("must lie in (0, T/40] with T = {period}, got {dt}"),
            ));
        }
        if config.burst.amplitude.len() != n {
            return Err(Error::config(
                "scenario.burst.amplitude",
                format!("expected {n} entries, got {}", config.burst.amplitude.len()),
            ));
        }
        let law = RateLaw {
            sf: sf.clone(),
            delta: config.delta,
            tau: config.tau,
        };
        let estimator = Estimator::new(model, &sf);
        let mut state = vec![0.0; 3 * n];
        let u0 = initial_displacement(n, config.noise, config.seed);
        state[..n].copy_from_slice(&u0);
        let rest = sf.rest_node(config.delta);
        for k in 0..n {
            state[2 * n + k] = if k == model.q { 0.0 } else { rest };
        }
        let mut history = HistoryBuffer::new(n, estimator.window);
        history.push(0.0, &state[..n], &state[n..2 * n]);
        Ok(Simulator {
            model,
            regime: config.regime,
            law,
            estimator,
            burst: config.burst.clone(),
            t: 0.0,
            dt,
            state,
            amplitudes: vec![0.0; n],
            history,
            ws: Rk4Workspace::new(3 * n),
        })
    }

    /// Refreshes the nodal estimates from the history at the current time.
    pub fn update_estimates(&mut self) {
        self.estimator
            .estimate_all(&self.history, self.t, &mut self.amplitudes);
    }

    /// One RK4 step with the delayed estimates frozen at their start-of-step
    /// values.
    pub fn step(&mut self) -> Result<()> {
        let n = self.model.n;
        self.update_estimates();
        let model = self.model;
        let regime = self.regime;
        let law = &self.law;
        let amps = &self.amplitudes;
        let burst = &self.burst;
        let carrier = self.estimator.omega;
        let mut force = vec![0.0; n];
        let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            excitation(t, burst, carrier, model.epsilon, &mut force);
            full_rhs(y, model, regime, Some(law), &force, amps, dy);
        };
        rk4_step(&mut rhs, self.t, &mut self.state, self.dt, &mut self.ws);
        if self.state.iter().any(|x| !x.is_finite()) {
            return Err(Error::IntegrationDiverged {
                last_good_time: self.t,
            });
        }
        self.t += self.dt;
        self.history
            .push(self.t, &self.state[..n], &self.state[n..2 * n]);
        Ok(())
    }

    fn record(&self) -> TraceRecord {
        let n = self.model.n;
        TraceRecord {
            t: self.t,
            u: self.state[..n].to_vec(),
            v: self.state[n..2 * n].to_vec(),
            zeta: self.state[2 * n..].to_vec(),
            a: self.amplitudes.clone(),
        }
    }
}

/// Slow-flow model for the requested regime.
pub fn slow_flow_for(model: &NetworkModel, regime: Regime) -> Result<SlowFlowModel> {
    match regime {
        Regime::Small => make_small_damping_model(&modal_decompose(model)?, model),
        Regime::Large => Ok(make_large_damping_model(model)),
    }
}

/// Default classification thresholds for a scenario.
pub fn default_thresholds(sf: &SlowFlowModel, config: &ScenarioConfig) -> Thresholds {
    let activation = match trigger_threshold(sf, config.delta) {
        Ok(a_bar) => 1.2 * a_bar,
        // no bistability window: fall back to the fold amplitude
        Err(_) => bifurcation_values(sf).a_sn,
    };
    Thresholds {
        activation,
        quiescence_fraction: 0.05,
        zeta_band: 2.0 * config.delta,
        zeta_rest: sf.rest_aggregate(config.delta),
        burst_end: config.burst.duration / sf.epsilon,
    }
}

/// Runs a scenario, returning the trace recorded so far even on divergence.
pub fn run_scenario_partial(
    model: &NetworkModel,
    config: &ScenarioConfig,
) -> Result<(SimulationTrace, Option<Error>)> {
    let sf = slow_flow_for(model, config.regime)?;
    if config.sample_every == 0 {
        return Err(Error::config("scenario.sample_every", "must be at least 1"));
    }
    if !(config.tau > 0.0) || !(config.delta > 0.0) {
        return Err(Error::config("delta/tau", "must both be positive"));
    }
    let thresholds = default_thresholds(&sf, config);
    let t_end = config
        .t_end
        .unwrap_or((config.burst.duration + 12.0 * config.tau) / model.epsilon);
    let mut sim = Simulator::new(model, sf.clone(), config)?;
    let steps = (t_end / sim.dt).ceil() as usize;
    let mut records = Vec::with_capacity(steps / config.sample_every + 2);
    sim.update_estimates();
    records.push(sim.record());
    let mut failure = None;
    for i in 1..=steps {
        if let Err(e) = sim.step() {
            failure = Some(e);
            break;
        }
        if i % config.sample_every == 0 {
            sim.update_estimates();
            records.push(sim.record());
        }
    }
    let mut trace = SimulationTrace {
        records,
        meta: TraceMeta {
            regime: config.regime,
            q: model.q,
            epsilon: model.epsilon,
            delta: config.delta,
            tau: config.tau,
            omega: sf.omega,
            dt: sim.dt,
            sample_every: config.sample_every,
            t_end,
            weights: sf.weights.clone(),
            thresholds,
            outcome: Outcome::Quiescent,
            diverged_at: failure.as_ref().map(|_| sim.t),
        },
    };
    trace.meta.outcome = classify_trace(&trace, &thresholds);
    Ok((trace, failure))
}

pub fn run_scenario(model: &NetworkModel, config: &ScenarioConfig) -> Result<SimulationTrace> {
    match run_scenario_partial(model, config)? {
        (trace, None) => Ok(trace),
        (_, Some(e)) => Err(e),
    }
}

/// Labels a trace by whether it ignited after the burst and whether it came
/// back to rest by the end.
pub fn classify_trace(trace: &SimulationTrace, th: &Thresholds) -> Outcome {
    let max_a = |r: &TraceRecord| r.a.iter().copied().fold(0.0, f64::max);
    let peak = trace
        .records
        .iter()
        .filter(|r| r.t > th.burst_end)
        .map(max_a)
        .fold(0.0, f64::max);
    if !(peak > th.activation) {
        return Outcome::Quiescent;
    }
    let Some(last) = trace.records.last() else {
        return Outcome::Quiescent;
    };
    let quiet = max_a(last) < th.quiescence_fraction * peak;
    let zeta_end = trace.zeta_aggregate(trace.records.len() - 1);
    let settled = (zeta_end - th.zeta_rest).abs() <= th.zeta_band;
    if quiet && settled {
        Outcome::Hysteretic
    } else {
        Outcome::PersistentOscillation
    }
}

/// Sliding one-period projection `|(ω/π)∫ u_k(s) e^{jωs} ds|` over the
/// trailing period, evaluated at every record. Uses dense trapezoidal
/// quadrature on a Hermite interpolant of the recorded samples.
pub fn project_modal_amplitude(trace: &SimulationTrace, omega: f64, k: usize) -> Vec<(f64, f64)> {
    let period = 2.0 * std::f64::consts::PI / omega;
    let recs = &trace.records;
    let times: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let sample = |s: f64| -> f64 {
        if s < 0.0 || recs.is_empty() {
            return 0.0;
        }
        let idx = times.partition_point(|&t| t <= s);
        if idx == 0 {
            return recs[0].u[k];
        }
        if idx >= recs.len() {
            return recs[recs.len() - 1].u[k];
        }
        let (a, b) = (&recs[idx - 1], &recs[idx]);
        let h = b.t - a.t;
        let x = (s - a.t) / h;
        let (x2, x3) = (x * x, x * x * x);
        (2.0 * x3 - 3.0 * x2 + 1.0) * a.u[k]
            + (x3 - 2.0 * x2 + x) * h * a.v[k]
            + (-2.0 * x3 + 3.0 * x2) * b.u[k]
            + (x3 - x2) * h * b.v[k]
    };
    let h = period / DENSE_POINTS as f64;
    recs.iter()
        .map(|r| {
            let mut acc = Complex::new(0.0, 0.0);
            for j in 0..=DENSE_POINTS {
                let s = r.t - period + j as f64 * h;
                let w = if j == 0 || j == DENSE_POINTS { 0.5 * h } else { h };
                acc += Complex::from_polar(w * sample(s), omega * s);
            }
            (r.t, omega / std::f64::consts::PI * acc.norm())
        })
        .collect()
}

/// Index of the first record after the burst ends.
pub fn post_burst_index(trace: &SimulationTrace) -> Option<usize> {
    let end = trace.meta.thresholds.burst_end;
    trace.records.iter().position(|r| r.t >= end)
}
