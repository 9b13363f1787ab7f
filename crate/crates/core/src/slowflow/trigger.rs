//! Burst triggering: threshold amplitude and required burst duration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Regime;
use crate::ode::{dopri_step, integrate_adaptive, AdaptiveOptions, Control};

use super::SlowFlowModel;

/// Unstable-branch amplitude at `ζ = ζ_HB + δ`, which a burst must exceed.
pub fn trigger_threshold(sf: &SlowFlowModel, delta: f64) -> Result<f64> {
    let p2 = sf.p2();
    let lhs = 8.0 * delta;
    let rhs = p2 * sf.eta;
    if lhs >= rhs {
        return Err(Error::NoThreshold { lhs, rhs });
    }
    let inner = ((rhs - lhs) / (p2.powi(3) * sf.eta)).sqrt();
    Ok((1.0 / p2 - inner).max(0.0).sqrt())
}

/// Projection `Σ_i P_{i,I} f_i` of a forcing vector on the dominant mode.
pub fn forcing_projection(sf: &SlowFlowModel, f: &[f64]) -> Result<f64> {
    let shape = sf
        .mode_shape
        .as_ref()
        .ok_or(Error::UnsupportedRegime(Regime::Large.name()))?;
    Ok(shape.iter().zip(f).map(|(p, f)| p * f).sum())
}

/// Forced amplitude and phase rates at `ζ = ζ_HB + δ`.
///
/// At `A = 0` the phase equation is singular. There the phase is taken as
/// already locked, so the returned pair is the linear growth rate
/// `|Σ P_{i,I} f_i|/(2ω)` and a zero phase rate.
pub fn forced_amplitude_rhs(
    sf: &SlowFlowModel,
    a: f64,
    phi: f64,
    f: &[f64],
    delta: f64,
) -> Result<(f64, f64)> {
    let s = forcing_projection(sf, f)?;
    if a == 0.0 {
        return Ok((s.abs() / (2.0 * sf.omega), 0.0));
    }
    let unforced = -0.5 * delta * a + sf.cubic() * a.powi(3) - sf.quintic() * a.powi(5);
    let da = unforced - phi.sin() / (2.0 * sf.omega) * s;
    let dphi = -phi.cos() / (2.0 * a * sf.omega) * s;
    Ok((da, dphi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TriggerMethod {
    #[default]
    ClosedForm,
    Integrate,
}

#[derive(Debug, Clone, Serialize)]
pub struct TriggerPlan {
    pub f: Vec<f64>,
    pub delta: f64,
    pub a_bar: f64,
    /// Burst duration in fast time.
    pub t_req: f64,
    /// Locked phase used by the integrated estimate.
    pub phi: f64,
    pub method: TriggerMethod,
}

/// Minimum burst duration needed to push the amplitude past the threshold.
///
/// The closed form assumes linear growth from rest. The integrated variant
/// follows the phase-locked forced amplitude law from `A = 0` until it first
/// reaches the threshold.
pub fn required_trigger_time(
    sf: &SlowFlowModel,
    f: &[f64],
    delta: f64,
    method: TriggerMethod,
) -> Result<TriggerPlan> {
    let a_bar = trigger_threshold(sf, delta)?;
    let s = forcing_projection(sf, f)?;
    let f_norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    // projections at rounding level count as orthogonal
    if !s.is_finite() || s.abs() <= 1e-12 * f_norm {
        return Err(Error::InfiniteTriggerTime);
    }
    let phi = -s.signum() * std::f64::consts::FRAC_PI_2;
    let t_req = match method {
        TriggerMethod::ClosedForm => 2.0 * sf.omega * a_bar / (sf.epsilon * s.abs()),
        TriggerMethod::Integrate => locked_phase_crossing(sf, s.abs(), delta, a_bar)? / sf.epsilon,
    };
    Ok(TriggerPlan {
        f: f.to_vec(),
        delta,
        a_bar,
        t_req,
        phi,
        method,
    })
}

/// Slow time at which `A' = −δA/2 + aA³ − bA⁵ + g` first reaches `a_bar`.
fn locked_phase_crossing(sf: &SlowFlowModel, s_abs: f64, delta: f64, a_bar: f64) -> Result<f64> {
    let g = s_abs / (2.0 * sf.omega);
    let (c3, c5) = (sf.cubic(), sf.quintic());
    let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        let a = y[0];
        dy[0] = -0.5 * delta * a + c3 * a.powi(3) - c5 * a.powi(5) + g;
    };
    // the forced law can stall below the threshold; the linear-growth time
    // bounds any successful crossing well within this horizon
    let horizon = 1e3 * (a_bar / g).max(1.0);
    let opts = AdaptiveOptions {
        atol: 1e-12,
        rtol: 1e-12,
        h_init: 1e-4 * a_bar / g,
        ..Default::default()
    };
    let mut prev = (0.0, 0.0);
    let mut crossed = None;
    integrate_adaptive(&mut rhs.clone(), 0.0, &[0.0], horizon, &opts, |t, y| {
        if y[0] >= a_bar {
            crossed = Some((prev, t));
            return Control::Stop;
        }
        let a = y[0];
        if -0.5 * delta * a + c3 * a.powi(3) - c5 * a.powi(5) + g <= 0.0 {
            // stalled on a forced equilibrium below the threshold
            return Control::Stop;
        }
        prev = (t, a);
        Control::Continue
    });
    let Some(((t0, a0), t1)) = crossed else {
        return Err(Error::InfiniteTriggerTime);
    };
    // refine the crossing by bisection on the step length from the last
    // point below threshold
    let (mut lo, mut hi) = (0.0, t1 - t0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (y, _) = dopri_step(&mut rhs.clone(), t0, &[a0], mid, 1e-12, 1e-12);
        if y[0] >= a_bar {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(t0 + 0.5 * (lo + hi))
}
