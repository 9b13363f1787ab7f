use rayon::prelude::*;
use serde::Serialize;

use super::equilibria::{continue_equilibria, EquilibriumOptions};
use super::periodic::{continue_periodic, seed_periodic_orbit, PeriodicOptions};
use super::{BifurcationPoint, EventKind, ParamSpec};
use crate::error::Result;
use crate::network::{dominant_mode, modal_decompose, NetworkModel};
use crate::slowflow::{uniform_asymptotes, UniformAsymptotes};

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub mu_range: (f64, f64),
    pub equilibria: EquilibriumOptions,
    pub periodic: PeriodicOptions,
    pub seed_amplitude: f64,
    /// Bisection steps when locating the fold of the SN curve in ε.
    pub fold_bisections: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            mu_range: (0.1, 400.0),
            equilibria: EquilibriumOptions {
                points: 240,
                geometric: true,
                ..Default::default()
            },
            periodic: PeriodicOptions {
                stop_at_first_sn: true,
                ..Default::default()
            },
            seed_amplitude: 1e-3,
            fold_bisections: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSlice {
    pub epsilon: f64,
    /// Sorted by parameter value.
    pub hopf: Vec<BifurcationPoint>,
    /// First fold on the periodic branch from each Hopf point, where found.
    pub saddle_nodes: Vec<BifurcationPoint>,
    /// Index into `hopf` of the branch each saddle-node was found on.
    pub sn_source: Vec<usize>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoParameterMap {
    pub param_label: String,
    pub slices: Vec<EpsilonSlice>,
    /// Curve `k` joins the `k`-th Hopf point (by parameter) of each slice.
    pub hopf_curves: Vec<Vec<(f64, f64)>>,
    pub sn_curves: Vec<Vec<(f64, f64)>>,
    pub asymptotes: Option<UniformAsymptotes>,
    /// ε at which the fold on the dominant-mode branch disappears, if that
    /// happens inside the grid.
    pub sn_fold_epsilon: Option<f64>,
}

fn slice(model: &NetworkModel, spec: &ParamSpec, eps: f64, opts: &SweepOptions) -> EpsilonSlice {
    let m = model.with_epsilon(eps);
    let mut out = EpsilonSlice {
        epsilon: eps,
        hopf: Vec::new(),
        saddle_nodes: Vec::new(),
        sn_source: Vec::new(),
        failures: Vec::new(),
    };
    let eq = match continue_equilibria(&m, spec, opts.mu_range, &opts.equilibria) {
        Ok(b) => b,
        Err(e) => {
            out.failures.push(format!("equilibria: {e}"));
            return out;
        }
    };
    out.hopf = eq.events_of(EventKind::Hopf).cloned().collect();
    out.hopf.sort_by(|a, b| a.param.total_cmp(&b.param));
    for (i, h) in out.hopf.iter().enumerate() {
        let branch = seed_periodic_orbit(&m, spec, h, opts.seed_amplitude)
            .and_then(|seed| continue_periodic(&m, spec, &seed, opts.mu_range, &opts.periodic));
        match branch {
            Ok(b) => {
                if let Some(sn) = b.events_of(EventKind::SaddleNode).next() {
                    out.saddle_nodes.push(sn.clone());
                    out.sn_source.push(i);
                }
            }
            Err(e) => out
                .failures
                .push(format!("periodic branch from Hopf at {}: {e}", h.param)),
        }
    }
    out
}

impl EpsilonSlice {
    /// The Hopf point whose frequency is closest to `omega`.
    pub fn hopf_near_frequency(&self, omega: f64) -> Option<usize> {
        (0..self.hopf.len()).min_by(|&a, &b| {
            (self.hopf[a].frequency - omega)
                .abs()
                .total_cmp(&(self.hopf[b].frequency - omega).abs())
        })
    }

    /// Saddle-node on the branch from `hopf[i]`, if one was found.
    pub fn saddle_node_from(&self, i: usize) -> Option<&BifurcationPoint> {
        self.sn_source
            .iter()
            .position(|&s| s == i)
            .map(|k| &self.saddle_nodes[k])
    }
}

/// Whether the branch from the Hopf point of the dominant mode folds.
fn folds_on_primary(s: &EpsilonSlice, omega: f64) -> bool {
    s.hopf_near_frequency(omega)
        .is_some_and(|i| s.saddle_node_from(i).is_some())
}

fn curves(slices: &[EpsilonSlice], pick: impl Fn(&EpsilonSlice) -> &[BifurcationPoint]) -> Vec<Vec<(f64, f64)>> {
    let mut curves: Vec<Vec<(f64, f64)>> = Vec::new();
    for s in slices {
        for (k, p) in pick(s).iter().enumerate() {
            if curves.len() <= k {
                curves.push(Vec::new());
            }
            curves[k].push((s.epsilon, p.param));
        }
    }
    curves
}

/// Per-ε continuation of the trivial equilibrium and of the periodic branch
/// from every Hopf point found, assembled into curves in the (ε, μ) plane.
/// Failures in a slice are recorded there and leave gaps in the curves.
pub fn two_parameter_map(
    model: &NetworkModel,
    eps_grid: &[f64],
    spec: &ParamSpec,
    opts: &SweepOptions,
) -> Result<TwoParameterMap> {
    let slices: Vec<EpsilonSlice> = eps_grid
        .par_iter()
        .map(|&eps| slice(model, spec, eps, opts))
        .collect();
    let basis = modal_decompose(model).ok();
    let asymptotes = basis
        .as_ref()
        .and_then(|b| uniform_asymptotes(model, b).ok());
    let omega = basis
        .as_ref()
        .and_then(|b| dominant_mode(b, model.q).ok().map(|i| b.omegas[i]));

    let mut sn_fold = None;
    let mut order: Vec<usize> = (0..slices.len()).collect();
    order.sort_by(|&a, &b| slices[a].epsilon.total_cmp(&slices[b].epsilon));
    if let Some(omega) = omega {
        for w in order.windows(2) {
            let (a, b) = (&slices[w[0]], &slices[w[1]]);
            let clean = a.failures.is_empty() && b.failures.is_empty();
            if clean && folds_on_primary(a, omega) && !folds_on_primary(b, omega) {
                sn_fold = sn_fold_epsilon(model, spec, (a.epsilon, b.epsilon), omega, opts);
                break;
            }
        }
    }

    Ok(TwoParameterMap {
        param_label: spec.free.label(),
        hopf_curves: curves(&slices, |s| &s.hopf),
        sn_curves: curves(&slices, |s| &s.saddle_nodes),
        slices,
        asymptotes,
        sn_fold_epsilon: sn_fold,
    })
}

/// Bisects in ε between a value where the periodic branch from the Hopf
/// point with frequency nearest `omega` folds (`eps.0`) and one where it does
/// not (`eps.1`).
pub fn sn_fold_epsilon(
    model: &NetworkModel,
    spec: &ParamSpec,
    eps: (f64, f64),
    omega: f64,
    opts: &SweepOptions,
) -> Option<f64> {
    let folds = |e: f64| folds_on_primary(&slice(model, spec, e, opts), omega);
    let (mut a, mut b) = eps;
    if !folds(a) || folds(b) {
        return None;
    }
    for _ in 0..opts.fold_bisections {
        let mid = if a > 0.0 && b > 0.0 { (a * b).sqrt() } else { 0.5 * (a + b) };
        if folds(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}
