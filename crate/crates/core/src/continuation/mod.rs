//! Continuation of equilibria and periodic orbits at frozen damping.
//!
//! The damping rate laws are switched off here: one scalar `μ` sets the raw
//! damping of a chosen set of linear nodes and everything else comes from a
//! template. Equilibria are tracked by monitoring the linearization about
//! `u = 0`; periodic orbits by pseudo-arclength continuation of a shooting
//! formulation.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{linear_damping, nonlinear_damping, DampingState, NetworkModel, Regime};
use crate::ode::{rk4_step, Rk4Workspace};

mod equilibria;
mod newton;
mod periodic;
mod sweep;

pub use equilibria::{continue_equilibria, linear_spectrum, EquilibriumOptions};
pub use newton::{
    central_difference_jacobian, condition_estimate, newton_corrector, solve_linear, FnResidual,
    NewtonOptions, NewtonSolution, Residual,
};
pub use periodic::{
    continue_periodic, floquet_multipliers, seed_periodic_orbit, shooting_residual,
    PeriodicOptions, PeriodicSeed,
};
pub use sweep::{sn_fold_epsilon, two_parameter_map, EpsilonSlice, SweepOptions, TwoParameterMap};

/// Which linear nodes the continuation parameter drives.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParam {
    /// `ζ_k = μ` for every `k ≠ Q`.
    Uniform,
    /// `ζ_k = μ` for one node (0-based).
    Node(usize),
}

impl FreeParam {
    /// Parses `mu` / `uniform` or `zeta_<k>` with a 1-based node label.
    pub fn parse(spec: &str, n: usize, q: usize) -> Result<FreeParam> {
        let s = spec.trim();
        if s == "mu" || s == "uniform" {
            return Ok(FreeParam::Uniform);
        }
        let label = s
            .strip_prefix("zeta_")
            .and_then(|k| k.parse::<usize>().ok())
            .ok_or_else(|| {
                Error::config("continuation.free", format!("expected `mu` or `zeta_<k>`, got `{s}`"))
            })?;
        if label < 1 || label > n || label - 1 == q {
            return Err(Error::config(
                "continuation.free",
                format!("node {label} is not a linear node of this network"),
            ));
        }
        Ok(FreeParam::Node(label - 1))
    }

    pub fn label(&self) -> String {
        match self {
            FreeParam::Uniform => "mu".into(),
            FreeParam::Node(k) => format!("zeta_{}", k + 1),
        }
    }
}

/// Maps the scalar parameter to effective damping coefficients.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub free: FreeParam,
    pub template: DampingState,
}

impl ParamSpec {
    pub fn uniform(n: usize) -> Self {
        ParamSpec {
            free: FreeParam::Uniform,
            template: DampingState::uniform(n, 0.0, Regime::Small),
        }
    }

    pub fn node(k: usize, template: DampingState) -> Self {
        ParamSpec {
            free: FreeParam::Node(k),
            template,
        }
    }

    /// Effective damping of each linear node at parameter `mu`. The entry at
    /// Q is unused.
    pub fn damping(&self, model: &NetworkModel, mu: f64) -> Vec<f64> {
        (0..model.n)
            .map(|k| {
                let driven = match self.free {
                    FreeParam::Uniform => k != model.q,
                    FreeParam::Node(j) => j == k,
                };
                if driven {
                    mu
                } else {
                    linear_damping(self.template.zetas[k], self.template.regime, model.epsilon)
                }
            })
            .collect()
    }
}

/// Second-order network with damping frozen at given linear-node values, as
/// a first-order system in `(u, u̇)`.
#[derive(Debug, Clone)]
pub struct FrozenSystem<'a> {
    pub model: &'a NetworkModel,
    pub damping: Vec<f64>,
}

impl<'a> FrozenSystem<'a> {
    pub fn new(model: &'a NetworkModel, spec: &ParamSpec, mu: f64) -> Self {
        FrozenSystem {
            model,
            damping: spec.damping(model, mu),
        }
    }

    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let m = self.model;
        let n = m.n;
        let (u, v) = y.split_at(n);
        for k in 0..n {
            dy[k] = v[k];
        }
        for k in 0..n {
            let c = if k == m.q {
                nonlinear_damping(u[k], m.nu, m.eta)
            } else {
                self.damping[k]
            };
            let mut ku = 0.0;
            for j in 0..n {
                ku += m.stiffness[(k, j)] * u[j];
            }
            dy[n + k] = -m.epsilon * c * v[k] - ku;
        }
    }

    /// Linearization about `u = 0`.
    pub fn linear_matrix(&self) -> DMatrix<f64> {
        let m = self.model;
        let n = m.n;
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            a[(i, n + i)] = 1.0;
            for j in 0..n {
                a[(n + i, j)] = -m.stiffness[(i, j)];
            }
            let c = if i == m.q { -m.nu } else { self.damping[i] };
            a[(n + i, n + i)] = -m.epsilon * c;
        }
        a
    }

    /// Flow map over `[0, period]` with `steps` RK4 steps. Optionally tracks
    /// the largest displacement of each node along the way.
    pub fn flow(
        &self,
        x0: &[f64],
        period: f64,
        steps: usize,
        mut max_u: Option<&mut [f64]>,
    ) -> Vec<f64> {
        let n = self.model.n;
        let mut y = x0.to_vec();
        let mut ws = Rk4Workspace::new(2 * n);
        let h = period / steps as f64;
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| self.rhs(y, dy);
        if let Some(m) = max_u.as_deref_mut() {
            for k in 0..n {
                m[k] = y[k];
            }
        }
        for s in 0..steps {
            rk4_step(&mut f, s as f64 * h, &mut y, h, &mut ws);
            if let Some(m) = max_u.as_deref_mut() {
                for k in 0..n {
                    m[k] = m[k].max(y[k]);
                }
            }
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Hopf,
    SaddleNode,
}

#[derive(Debug, Clone, Serialize)]
pub struct BifurcationPoint {
    pub kind: EventKind,
    pub param: f64,
    /// Equilibrium state for Hopf points, initial orbit state for saddle-nodes.
    pub state: Vec<f64>,
    /// `|Im λ|` of the crossing pair, or `2π/T` on a periodic branch.
    pub frequency: f64,
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub param: f64,
    pub state: Vec<f64>,
    /// Largest displacement of each node over the solution.
    pub max_u: Vec<f64>,
    pub period: Option<f64>,
    pub stable: bool,
    /// Eigenvalue or Floquet-multiplier measure backing `stable`: the largest
    /// real part for equilibria, the largest nontrivial multiplier modulus for
    /// orbits.
    pub stability_measure: f64,
    /// Event detected on the step that produced this point.
    pub event: Option<EventKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchKind {
    Equilibrium,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchEnd {
    Completed,
    RangeExit,
    MaxPoints,
    FirstSaddleNode,
    AmplitudeCap,
    PeriodCap,
    Stalled { parameter: f64, min_step: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub kind: BranchKind,
    pub param_label: String,
    pub points: Vec<BranchPoint>,
    pub events: Vec<BifurcationPoint>,
    pub end: BranchEnd,
}

impl Branch {
    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &BifurcationPoint> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

pub(crate) fn complex_eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    crate::linalg::eigenvalues(a)
}
