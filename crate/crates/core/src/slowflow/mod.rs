//! Averaged amplitude and damping dynamics.
//!
//! Both damping regimes share one amplitude law once the regime-specific
//! constants are folded into `p` and the aggregation weights:
//!
//! ```text
//! A' = ½(p²ν − ζ)A + (p⁴η/8)A³ − (p⁶η/16)A⁵
//! ```
//!
//! with `p = |P_{Q,I}|` and `ζ = Σ P²_{k,I} ζ_k` for small damping, and
//! `p = 1`, `ζ̃ = Σ K_{Q,k}² ζ̃_k / K_{Q,Q}` for large damping. The per-node
//! damping law likewise reduces to a single expression in terms of the weight
//! sum `W = Σ_{k≠Q} w_k`. Everything here runs on the slow clock `εt`.
//!
//! Aggregates always use the weighted convention above. The four-node
//! reference values are quoted in plain sums instead; [`fournode`] carries the
//! conversion factors.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{dominant_mode, ModalBasis, NetworkModel, Regime};
use crate::ode::{integrate_adaptive, AdaptiveOptions, Control};

pub mod fournode;
pub mod trigger;

pub use fournode::{fournode_reference, FourNodeReference};
pub use trigger::{
    forced_amplitude_rhs, forcing_projection, required_trigger_time, trigger_threshold,
    TriggerMethod, TriggerPlan,
};

/// Scalar amplitude model plus the aggregation weights that define `ζ`.
#[derive(Debug, Clone, Serialize)]
pub struct SlowFlowModel {
    pub regime: Regime,
    /// 0-based index of the nonlinear node.
    pub q: usize,
    pub p: f64,
    pub nu: f64,
    pub eta: f64,
    pub epsilon: f64,
    /// Carrier frequency: ω_I or √K_{Q,Q}.
    pub omega: f64,
    pub weights: Vec<f64>,
    pub weight_sum: f64,
    pub k_qq: f64,
    /// Dominant mode (0-based) and its shape, small regime only.
    pub mode: Option<usize>,
    pub mode_shape: Option<Vec<f64>>,
}

pub fn make_small_damping_model(basis: &ModalBasis, model: &NetworkModel) -> Result<SlowFlowModel> {
    let i = dominant_mode(basis, model.q)?;
    let shape: Vec<f64> = basis.p.column(i).iter().copied().collect();
    let p = shape[model.q].abs();
    let weights: Vec<f64> = (0..model.n)
        .map(|k| if k == model.q { 0.0 } else { shape[k] * shape[k] })
        .collect();
    let weight_sum = weights.iter().sum();
    Ok(SlowFlowModel {
        regime: Regime::Small,
        q: model.q,
        p,
        nu: model.nu,
        eta: model.eta,
        epsilon: model.epsilon,
        omega: basis.omegas[i],
        weights,
        weight_sum,
        k_qq: model.stiffness[(model.q, model.q)],
        mode: Some(i),
        mode_shape: Some(shape),
    })
}

pub fn make_large_damping_model(model: &NetworkModel) -> SlowFlowModel {
    let q = model.q;
    let k_qq = model.stiffness[(q, q)];
    let weights: Vec<f64> = (0..model.n)
        .map(|k| {
            if k == q {
                0.0
            } else {
                model.stiffness[(q, k)] * model.stiffness[(k, q)] / k_qq
            }
        })
        .collect();
    let weight_sum = weights.iter().sum();
    SlowFlowModel {
        regime: Regime::Large,
        q,
        p: 1.0,
        nu: model.nu,
        eta: model.eta,
        epsilon: model.epsilon,
        omega: k_qq.sqrt(),
        weights,
        weight_sum,
        k_qq,
        mode: None,
        mode_shape: None,
    }
}

/// Builds the model for whichever regime is requested.
pub fn make_model(model: &NetworkModel, regime: Regime) -> Result<SlowFlowModel> {
    match regime {
        Regime::Small => {
            let basis = crate::network::modal_decompose(model)?;
            make_small_damping_model(&basis, model)
        }
        Regime::Large => Ok(make_large_damping_model(model)),
    }
}

impl SlowFlowModel {
    pub fn p2(&self) -> f64 {
        self.p * self.p
    }

    pub fn cubic(&self) -> f64 {
        self.p2().powi(2) * self.eta / 8.0
    }

    pub fn quintic(&self) -> f64 {
        self.p2().powi(3) * self.eta / 16.0
    }

    /// Weighted aggregate `ζ` (or `ζ̃`) of per-node values.
    pub fn aggregate(&self, zetas: &[f64]) -> f64 {
        self.weights.iter().zip(zetas).map(|(w, z)| w * z).sum()
    }

    /// Aggregate value at the quiescent fixed point of the damping law.
    pub fn rest_aggregate(&self, delta: f64) -> f64 {
        delta + self.p2() * self.nu
    }

    /// Per-node damping target for a given nodal amplitude estimate.
    pub fn node_target(&self, delta: f64, a_k: f64) -> f64 {
        (delta + self.p2() * self.nu + self.cubic() * a_k * a_k) / self.weight_sum
    }

    /// Per-node rest value, `(δ + p²ν)/(1 − p²)` or `K(δ + ν)/(K − 1)`.
    pub fn rest_node(&self, delta: f64) -> f64 {
        self.node_target(delta, 0.0)
    }

    /// Whether node `k` carries a slowly varying damping coefficient.
    pub fn is_active(&self, k: usize) -> bool {
        k != self.q && self.weights[k] != 0.0
    }

    pub fn carrier_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }
}

/// `A'` under the cubic–quintic amplitude law.
pub fn amplitude_rhs(sf: &SlowFlowModel, a: f64, zeta: f64) -> f64 {
    0.5 * (sf.p2() * sf.nu - zeta) * a + sf.cubic() * a.powi(3) - sf.quintic() * a.powi(5)
}

/// Nonnegative equilibria of the amplitude law at fixed aggregate damping,
/// returned in ascending order. Zero is always included.
pub fn nullcline(sf: &SlowFlowModel, zeta: f64) -> Vec<f64> {
    let p2 = sf.p2();
    let mut roots = vec![0.0];
    if sf.eta <= 0.0 {
        return roots;
    }
    let disc = (p2 * (8.0 * sf.nu + sf.eta) - 8.0 * zeta) / (p2.powi(3) * sf.eta);
    if disc < 0.0 {
        return roots;
    }
    let s = disc.sqrt();
    for a2 in [1.0 / p2 - s, 1.0 / p2 + s] {
        if a2 > 0.0 {
            let a = a2.sqrt();
            if roots.last().is_none_or(|&last| a > last) {
                roots.push(a);
            }
        }
    }
    roots
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationValues {
    pub zeta_hb: f64,
    pub zeta_sn: f64,
    pub a_sn: f64,
}

pub fn bifurcation_values(sf: &SlowFlowModel) -> BifurcationValues {
    let p2 = sf.p2();
    BifurcationValues {
        zeta_hb: p2 * sf.nu,
        zeta_sn: p2 * (8.0 * sf.nu + sf.eta) / 8.0,
        a_sn: 1.0 / sf.p,
    }
}

/// Per-node damping dynamics `ζ'_k = τ⁻¹(−ζ_k + target(A_k))`.
///
/// The entry at Q is always zero.
pub fn damping_rhs(
    sf: &SlowFlowModel,
    zetas: &[f64],
    amplitudes: &[f64],
    delta: f64,
    tau: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; zetas.len()];
    RateLaw {
        sf: sf.clone(),
        delta,
        tau,
    }
    .rates(zetas, amplitudes, &mut out);
    out
}

/// Damping rate law bundled with its parameters, for use inside the full
/// network right-hand side.
#[derive(Debug, Clone)]
pub struct RateLaw {
    pub sf: SlowFlowModel,
    pub delta: f64,
    pub tau: f64,
}

impl RateLaw {
    pub fn rates(&self, zetas: &[f64], amplitudes: &[f64], out: &mut [f64]) {
        let inv_tau = 1.0 / self.tau;
        for k in 0..zetas.len() {
            out[k] = if k == self.sf.q {
                0.0
            } else {
                let a = if self.sf.is_active(k) { amplitudes[k] } else { 0.0 };
                inv_tau * (-zetas[k] + self.sf.node_target(self.delta, a))
            };
        }
    }
}

/// Planar `(A, ζ)` vector field in slow time.
pub fn planar_rhs(sf: &SlowFlowModel, delta: f64, tau: f64, a: f64, zeta: f64) -> (f64, f64) {
    (
        amplitude_rhs(sf, a, zeta),
        (-zeta + sf.rest_aggregate(delta) + sf.cubic() * a * a) / tau,
    )
}

/// Jacobian of [`planar_rhs`] with rows `(A', ζ')` and columns `(A, ζ)`.
pub fn planar_jacobian(sf: &SlowFlowModel, tau: f64, a: f64, zeta: f64) -> DMatrix<f64> {
    let j11 = 0.5 * (sf.p2() * sf.nu - zeta) + 3.0 * sf.cubic() * a * a
        - 5.0 * sf.quintic() * a.powi(4);
    DMatrix::from_row_slice(
        2,
        2,
        &[j11, -0.5 * a, 2.0 * sf.cubic() * a / tau, -1.0 / tau],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumClass {
    Stable,
    Saddle,
    Unstable,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Equilibrium {
    pub zeta: f64,
    pub a: f64,
    pub class: EquilibriumClass,
    pub trace: f64,
    pub det: f64,
}

/// Equilibria of the planar flow: the quiescent point plus, while they exist,
/// the saddle and the upper equilibrium on the middle branch.
pub fn coupled_equilibria(sf: &SlowFlowModel, delta: f64, tau: f64) -> Vec<Equilibrium> {
    let classify = |a: f64, zeta: f64| {
        let j = planar_jacobian(sf, tau, a, zeta);
        let trace = j[(0, 0)] + j[(1, 1)];
        let det = j.determinant();
        let class = if det < 0.0 {
            EquilibriumClass::Saddle
        } else if trace < 0.0 {
            EquilibriumClass::Stable
        } else {
            EquilibriumClass::Unstable
        };
        Equilibrium {
            zeta,
            a,
            class,
            trace,
            det,
        }
    };
    let mut out = vec![classify(0.0, sf.rest_aggregate(delta))];
    let p2 = sf.p2();
    let limit = p2 * sf.eta / 32.0;
    if delta <= limit {
        let s = (1.0 - delta / limit).max(0.0).sqrt();
        for sign in [-1.0, 1.0] {
            let a2 = (1.0 + sign * s) / (2.0 * p2);
            let zeta = sf.rest_aggregate(delta) + sf.cubic() * a2;
            out.push(classify(a2.sqrt(), zeta));
        }
    }
    out
}

/// Integrates the planar flow forward in slow time from `(a0, ζ0)` and
/// samples it every `dt_sample`.
pub fn planar_trajectory(
    sf: &SlowFlowModel,
    delta: f64,
    tau: f64,
    a0: f64,
    zeta0: f64,
    duration: f64,
    dt_sample: f64,
) -> Vec<(f64, f64, f64)> {
    let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (da, dz) = planar_rhs(sf, delta, tau, y[0], y[1]);
        dy[0] = da;
        dy[1] = dz;
    };
    let opts = AdaptiveOptions {
        h_max: dt_sample,
        ..Default::default()
    };
    let mut out = Vec::new();
    let steps = (duration / dt_sample).round() as usize;
    let mut y = vec![a0, zeta0];
    out.push((0.0, a0, zeta0));
    for s in 0..steps {
        let t0 = s as f64 * dt_sample;
        let (_, y1, _) = integrate_adaptive(&mut f, t0, &y, t0 + dt_sample, &opts, |_, _| {
            Control::Continue
        });
        y = y1;
        out.push((t0 + dt_sample, y[0], y[1]));
    }
    out
}

/// One branch of the saddle's stable manifold, traced backward in time from a
/// point offset `1e-6` along the stable eigenvector (toward larger `A`).
///
/// Returns `(ζ, A)` points starting at the offset point.
pub fn stable_manifold_branch(
    sf: &SlowFlowModel,
    delta: f64,
    tau: f64,
    arc_budget: f64,
) -> Result<Vec<(f64, f64)>> {
    let saddle = coupled_equilibria(sf, delta, tau)
        .into_iter()
        .find(|e| e.class == EquilibriumClass::Saddle)
        .ok_or(Error::NoSaddle {
            delta,
            limit: sf.p2() * sf.eta / 32.0,
        })?;
    let j = planar_jacobian(sf, tau, saddle.a, saddle.zeta);
    let tr = j[(0, 0)] + j[(1, 1)];
    let det = j.determinant();
    let lambda = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
    // (J - λI) v = 0 using whichever row is better conditioned
    let mut v = if j[(0, 1)].abs() > 1e-14 {
        DVector::from_vec(vec![-j[(0, 1)], j[(0, 0)] - lambda])
    } else {
        DVector::from_vec(vec![j[(1, 1)] - lambda, -j[(1, 0)]])
    };
    v /= v.norm();
    if v[0] < 0.0 {
        v = -v;
    }
    let bif = bifurcation_values(sf);
    let (zeta_max, a_max) = (2.0 * bif.zeta_sn, 2.0 * bif.a_sn);
    let start = [saddle.a + 1e-6 * v[0], saddle.zeta + 1e-6 * v[1]];

    let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let (da, dz) = planar_rhs(sf, delta, tau, y[0], y[1]);
        dy[0] = da;
        dy[1] = dz;
    };
    let opts = AdaptiveOptions {
        atol: 1e-10,
        rtol: 1e-10,
        h_init: 1e-3,
        h_max: tau.min(1.0),
        ..Default::default()
    };
    let mut points = Vec::new();
    let mut arc = 0.0;
    let mut stalled = 0usize;
    integrate_adaptive(&mut f, 0.0, &start, -1e4 * tau, &opts, |_, y| {
        if let Some(&(z0, a0)) = points.last() {
            let ds: f64 = ((y[1] - z0) as f64).hypot(y[0] - a0);
            arc += ds;
            stalled = if ds < 1e-12 { stalled + 1 } else { 0 };
        }
        points.push((y[1], y[0]));
        let outside = y[1] < 0.0 || y[1] > zeta_max || y[0] < 0.0 || y[0] > a_max;
        if arc >= arc_budget || outside || stalled > 1000 {
            Control::Stop
        } else {
            Control::Continue
        }
    });
    Ok(points)
}

/// Intersection of the small- and large-damping Hopf asymptotes in `(ε, μ)`,
/// and the design estimate obtained by halving it.
pub fn epsilon_max_estimate(model: &NetworkModel, basis: &ModalBasis) -> Result<(f64, f64)> {
    let i = dominant_mode(basis, model.q)?;
    let p2 = basis.p[(model.q, i)].powi(2);
    let k = model.stiffness[(model.q, model.q)];
    if p2 == 0.0 || k <= 1.0 {
        return Err(Error::InvalidNetwork(format!(
            "node {} admits no ε_max estimate (p² = {p2}, K_QQ = {k})",
            model.q + 1
        )));
    }
    let rhs = ((k - 1.0) * (1.0 - p2) / (k * p2)).sqrt();
    let eps_int = rhs / (model.nu + model.eta / 8.0);
    Ok((eps_int, 0.5 * eps_int))
}

/// Hopf and saddle-node asymptotes of the uniform-damping map `ζ_k = μ`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UniformAsymptotes {
    pub mu_hb: f64,
    pub mu_sn: f64,
    /// `μ ε²` along the large-damping Hopf and saddle-node hyperbolas.
    pub large_hb_coeff: f64,
    pub large_sn_coeff: f64,
}

pub fn uniform_asymptotes(model: &NetworkModel, basis: &ModalBasis) -> Result<UniformAsymptotes> {
    let i = dominant_mode(basis, model.q)?;
    let p2 = basis.p[(model.q, i)].powi(2);
    let k = model.stiffness[(model.q, model.q)];
    let (nu, sn) = (model.nu, model.nu + model.eta / 8.0);
    Ok(UniformAsymptotes {
        mu_hb: p2 * nu / (1.0 - p2),
        mu_sn: p2 * sn / (1.0 - p2),
        large_hb_coeff: (k - 1.0) / (k * nu),
        large_sn_coeff: (k - 1.0) / (k * sn),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{fifteen_node, four_node, modal_decompose};

    fn small(q: usize) -> SlowFlowModel {
        let m = four_node(q, 0.01);
        make_small_damping_model(&modal_decompose(&m).unwrap(), &m).unwrap()
    }

    #[test]
    fn weight_sums() {
        for q in 1..=4 {
            let sf = small(q);
            assert!((sf.weight_sum - (1.0 - sf.p2())).abs() < 1e-10);
            let lf = make_large_damping_model(&four_node(q, 0.01));
            assert!((lf.weight_sum - (lf.k_qq - 1.0) / lf.k_qq).abs() < 1e-10);
        }
    }

    #[test]
    fn four_node_q1_amplitude_law() {
        let sf = small(1);
        assert!((sf.p2() - 0.5).abs() < 1e-12);
        assert!((sf.cubic() - 5.0 / 16.0).abs() < 1e-12);
        assert!((sf.quintic() - 5.0 / 64.0).abs() < 1e-12);
        // fold point in the ζ₄ = 2ζ convention
        let v = amplitude_rhs(&sf, 2f64.sqrt(), 9.0 / 8.0);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn no_nonlinearity_gives_trivial_nullcline() {
        let mut sf = small(1);
        sf.eta = 0.0;
        assert_eq!(nullcline(&sf, 0.2), vec![0.0]);
    }

    #[test]
    fn fifteen_node_hopf_value() {
        let m = fifteen_node(1, 0.01);
        let sf = make_small_damping_model(&modal_decompose(&m).unwrap(), &m).unwrap();
        assert!((sf.p2() - 0.6172).abs() < 1e-3);
        let asym = uniform_asymptotes(&m, &modal_decompose(&m).unwrap()).unwrap();
        assert!((asym.mu_hb - 1.62).abs() < 0.01);
        assert!((asym.mu_sn - 3.62).abs() < 0.02);
    }

    #[test]
    fn large_regime_carriers() {
        assert!((make_large_damping_model(&four_node(1, 0.01)).omega - 3f64.sqrt()).abs() < 1e-15);
        let q3 = make_large_damping_model(&four_node(3, 0.01));
        assert!((q3.omega - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(q3.weights.iter().filter(|w| **w != 0.0).count(), 1);
        let q5 = make_large_damping_model(&fifteen_node(5, 0.01));
        assert!((q5.omega - 6f64.sqrt()).abs() < 1e-15);
        let active: Vec<usize> = (0..15).filter(|&k| q5.is_active(k)).map(|k| k + 1).collect();
        assert_eq!(active, vec![1, 6, 7, 11, 15]);
    }

    #[test]
    fn large_regime_arithmetic() {
        let lf = make_large_damping_model(&four_node(1, 0.01));
        let expected = 0.5 * (1.0 - 1.35) * 0.5 + 1.25 * 0.125 - 0.625 * 0.03125;
        assert!((amplitude_rhs(&lf, 0.5, 1.35) - expected).abs() < 1e-15);
        assert_eq!(amplitude_rhs(&lf, 0.0, 7.0), 0.0);
    }

    #[test]
    fn past_the_fold_only_zero() {
        let sf = small(1);
        let b = bifurcation_values(&sf);
        assert_eq!(nullcline(&sf, b.zeta_sn + 1e-6), vec![0.0]);
        assert_eq!(nullcline(&sf, 0.5 * (b.zeta_hb + b.zeta_sn)).len(), 3);
    }

    #[test]
    fn window_closes_with_eta() {
        let mut sf = small(2);
        sf.eta = 1e-9;
        let b = bifurcation_values(&sf);
        assert!((b.zeta_sn - b.zeta_hb).abs() < 1e-9);
    }

    #[test]
    fn rest_point_of_damping_law() {
        let sf = small(1);
        let rest = sf.rest_node(0.1);
        let z = vec![rest; 4];
        let rates = damping_rhs(&sf, &z, &[0.0; 4], 0.1, 20.0);
        assert!(rates.iter().all(|r| *r == 0.0));
        assert!((rest - (0.1 + 0.5) / 0.5).abs() < 1e-12);
    }

    #[test]
    fn four_node_q1_rate_law_in_reference_units() {
        // ζ'₄ = τ⁻¹(−ζ₄ + 2δ + 1 + (5/8)A²)
        let sf = small(1);
        let (delta, tau, a, z4) = (0.07, 3.0, 0.8, 1.3);
        let r = damping_rhs(&sf, &[0.0, 0.0, 0.0, z4], &[0.0, 0.0, 0.0, a], delta, tau);
        let expected = (-z4 + 2.0 * delta + 1.0 + 0.625 * a * a) / tau;
        assert!((r[3] - expected).abs() < 1e-12);
    }

    #[test]
    fn coupled_equilibria_four_node() {
        let sf = small(1);
        let delta = 0.1;
        let eq = coupled_equilibria(&sf, delta, 20.0);
        assert_eq!(eq.len(), 3);
        assert_eq!(eq[0].class, EquilibriumClass::Stable);
        assert_eq!(eq[1].class, EquilibriumClass::Saddle);
        assert_eq!(eq[2].class, EquilibriumClass::Unstable);
        // ζ₄ = 2ζ = δ₄ + (13 ± √(25 − 80δ₄))/8 with δ₄ = 2δ
        let d4 = 2.0 * delta;
        let lo = d4 + (13.0 - (25.0 - 80.0 * d4).sqrt()) / 8.0;
        let hi = d4 + (13.0 + (25.0 - 80.0 * d4).sqrt()) / 8.0;
        assert!((2.0 * eq[1].zeta - lo).abs() < 1e-12);
        assert!((2.0 * eq[2].zeta - hi).abs() < 1e-12);
        assert_eq!(coupled_equilibria(&sf, delta, 1.0)[2].class, EquilibriumClass::Stable);
        // equilibria merge at δ₄ = 5/16, ζ₄ = 31/16, A = 1
        let merged = coupled_equilibria(&sf, 5.0 / 32.0, 1.0);
        // the square root near the merger amplifies rounding in p²
        assert!((merged[1].a - 1.0).abs() < 1e-7);
        assert!((2.0 * merged[1].zeta - 31.0 / 16.0).abs() < 1e-7);
        assert_eq!(coupled_equilibria(&sf, 0.2, 1.0).len(), 1);
    }

    #[test]
    fn stable_manifold_starts_at_saddle() {
        let sf = small(1);
        let branch = stable_manifold_branch(&sf, 0.05, 9.0, 5.0).unwrap();
        let saddle = coupled_equilibria(&sf, 0.05, 9.0)[1];
        let (z0, a0) = branch[0];
        assert!((z0 - saddle.zeta).hypot(a0 - saddle.a) < 1e-5);
        assert!(branch.len() > 10);
        assert!(matches!(
            stable_manifold_branch(&sf, 1.0, 9.0, 5.0),
            Err(Error::NoSaddle { .. })
        ));
    }

    #[test]
    fn stable_manifold_points_flow_to_saddle() {
        let sf = small(1);
        let (delta, tau) = (0.05, 9.0);
        let saddle = coupled_equilibria(&sf, delta, tau)[1];
        let branch = stable_manifold_branch(&sf, delta, tau, 2.0).unwrap();
        for &(z, a) in branch.iter().step_by(branch.len() / 5 + 1) {
            let traj = planar_trajectory(&sf, delta, tau, a, z, 200.0, 0.05);
            let closest = traj
                .iter()
                .map(|&(_, aa, zz)| (zz - saddle.zeta).hypot(aa - saddle.a))
                .fold(f64::INFINITY, f64::min);
            assert!(closest < 1e-3, "closest approach {closest}");
        }
    }

    #[test]
    fn epsilon_max_four_node_q2() {
        let m = four_node(2, 0.01);
        let (eps_int, eps_max) = epsilon_max_estimate(&m, &modal_decompose(&m).unwrap()).unwrap();
        assert!((eps_max - 1.0 / 9.0).abs() < 1e-14);
        assert!((eps_int - 2.0 / 9.0).abs() < 1e-14);
        let mut stiff = m.clone();
        stiff.nu = 2.0 * m.nu;
        stiff.eta = 2.0 * m.eta;
        let (halved, _) = epsilon_max_estimate(&stiff, &modal_decompose(&stiff).unwrap()).unwrap();
        assert!((halved - 0.5 * eps_int).abs() < 1e-14);
    }
}
