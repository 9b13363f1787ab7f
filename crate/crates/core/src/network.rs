//! Network topology, stiffness, modal basis and the full equations of motion.

use std::collections::BTreeSet;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;
use crate::slowflow::RateLaw;

/// Relative gap below which two natural frequencies count as repeated.
pub const DISTINCT_FREQUENCY_TOL: f64 = 1e-8;
const JACOBI_TOL: f64 = 1e-13;
const RIGID_TOL: f64 = 1e-10;

/// Which asymptotic scaling the linear-node damping follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// ζ_k = O(1); damping enters the equations as ε ζ_k.
    #[default]
    Small,
    /// ζ_k = O(1/ε²); stored as the rescaled ζ̃_k = 1/(ε² ζ_k).
    Large,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Small => "small",
            Regime::Large => "large",
        }
    }
}

/// Unit-coupled oscillator network with a single nonlinear node.
///
/// Node indices are 0-based internally. [`build_network`] accepts the 1-based
/// labels used in network files.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    pub n: usize,
    /// Undirected edges as 0-based pairs with `i < j`.
    pub edges: Vec<(usize, usize)>,
    pub adjacency: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// 0-based index of the nonlinear node.
    pub q: usize,
    pub nu: f64,
    pub eta: f64,
    pub epsilon: f64,
    /// Non-fatal remarks raised during construction, e.g. a disconnected graph.
    pub warnings: Vec<String>,
}

impl NetworkModel {
    pub fn degree(&self, k: usize) -> usize {
        self.laplacian[(k, k)].round() as usize
    }

    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.adjacency[(k, j)] != 0.0).collect()
    }

    /// Same topology with the nonlinear node moved to `q` (0-based).
    pub fn with_q(&self, q: usize) -> Result<NetworkModel> {
        if q >= self.n {
            return Err(Error::InvalidNetwork(format!(
                "Q = {} outside 1..={}",
                q + 1,
                self.n
            )));
        }
        Ok(NetworkModel { q, ..self.clone() })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> NetworkModel {
        NetworkModel {
            epsilon,
            ..self.clone()
        }
    }

    /// Relabels nodes so that old node `k` becomes node `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<NetworkModel> {
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(i, j)| (perm[i] + 1, perm[j] + 1))
            .collect();
        build_network(
            &edges,
            self.n,
            perm[self.q] + 1,
            self.nu,
            self.eta,
            self.epsilon,
        )
    }
}

/// Assembles adjacency, Laplacian and stiffness `K = I + L`.
///
/// `edges` and `q` use 1-based node labels.
pub fn build_network(
    edges: &[(usize, usize)],
    n: usize,
    q: usize,
    nu: f64,
    eta: f64,
    epsilon: f64,
) -> Result<NetworkModel> {
    if n == 0 {
        return Err(Error::InvalidNetwork("network needs at least one node".into()));
    }
    if q < 1 || q > n {
        return Err(Error::InvalidNetwork(format!("Q = {q} outside 1..={n}")));
    }
    for (name, value) in [("nu", nu), ("eta", eta), ("epsilon", epsilon)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "{name} must be positive and finite, got {value}"
            )));
        }
    }

    let mut seen = BTreeSet::new();
    let mut internal = Vec::with_capacity(edges.len());
    let mut adjacency = DMatrix::<f64>::zeros(n, n);
    for &(a, b) in edges {
        if a < 1 || a > n || b < 1 || b > n {
            return Err(Error::InvalidNetwork(format!(
                "edge ({a}, {b}) references a node outside 1..={n}"
            )));
        }
        if a == b {
            return Err(Error::InvalidNetwork(format!("self edge ({a}, {b})")));
        }
        let (i, j) = if a < b { (a - 1, b - 1) } else { (b - 1, a - 1) };
        if !seen.insert((i, j)) {
            return Err(Error::InvalidNetwork(format!("duplicate edge ({a}, {b})")));
        }
        internal.push((i, j));
        adjacency[(i, j)] = 1.0;
        adjacency[(j, i)] = 1.0;
    }

    let mut laplacian = -adjacency.clone();
    for i in 0..n {
        laplacian[(i, i)] = adjacency.row(i).sum();
    }
    let stiffness = DMatrix::identity(n, n) + &laplacian;

    let mut warnings = Vec::new();
    let components = count_components(n, &internal);
    if components > 1 {
        warnings.push(format!("graph is disconnected ({components} components)"));
    }

    Ok(NetworkModel {
        n,
        edges: internal,
        adjacency,
        laplacian,
        stiffness,
        q: q - 1,
        nu,
        eta,
        epsilon,
        warnings,
    })
}

fn count_components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

/// Orthogonal mode shapes (columns of `p`) and ascending natural frequencies.
#[derive(Debug, Clone)]
pub struct ModalBasis {
    pub p: DMatrix<f64>,
    pub omegas: DVector<f64>,
}

impl ModalBasis {
    pub fn mode(&self, i: usize) -> DVector<f64> {
        self.p.column(i).into_owned()
    }
}

/// Diagonalizes `K`, canonicalizes eigenvector signs and rejects repeated
/// frequencies.
pub fn modal_decompose(model: &NetworkModel) -> Result<ModalBasis> {
    let eig = jacobi_eigen(&model.stiffness, JACOBI_TOL);
    let n = model.n;
    let mut p = eig.vectors;
    for col in 0..n {
        let mut best = 0;
        for row in 1..n {
            if p[(row, col)].abs() > p[(best, col)].abs() {
                best = row;
            }
        }
        if p[(best, col)] < 0.0 {
            p.column_mut(col).neg_mut();
        }
    }
    if eig.values[0] <= 0.0 {
        return Err(Error::InvalidNetwork(
            "stiffness matrix is not positive definite".into(),
        ));
    }
    let omegas = eig.values.map(f64::sqrt);
    for i in 1..n {
        let gap = (omegas[i] - omegas[i - 1]) / omegas[i];
        if gap < DISTINCT_FREQUENCY_TOL {
            return Err(Error::DistinctFrequencyViolation {
                mode_a: i,
                mode_b: i + 1,
                omega_a: omegas[i - 1],
                omega_b: omegas[i],
            });
        }
    }
    Ok(ModalBasis { p, omegas })
}

/// Mode index (0-based) maximizing `P²_{q,i}`; ties go to the lowest index.
pub fn dominant_mode(basis: &ModalBasis, q: usize) -> Result<usize> {
    let n = basis.omegas.len();
    if q >= n {
        return Err(Error::InvalidNetwork(format!("Q = {} outside 1..={n}", q + 1)));
    }
    let mut best = 0;
    let mut best_val = basis.p[(q, 0)].powi(2);
    for i in 1..n {
        let v = basis.p[(q, i)].powi(2);
        // small slack so that values equal up to rounding keep the lower index
        if v > best_val * (1.0 + 1e-12) + 1e-15 {
            best = i;
            best_val = v;
        }
    }
    if (basis.omegas[best] - 1.0).abs() < RIGID_TOL {
        return Err(Error::DominantModeIsRigid {
            node: q + 1,
            mode: best + 1,
        });
    }
    Ok(best)
}

/// Damping values of the linear nodes, either raw ζ_k or rescaled ζ̃_k.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingState {
    /// One entry per node; the entry at Q is ignored.
    pub zetas: DVector<f64>,
    pub regime: Regime,
}

impl DampingState {
    pub fn uniform(n: usize, value: f64, regime: Regime) -> Self {
        DampingState {
            zetas: DVector::from_element(n, value),
            regime,
        }
    }
}

/// Damping of the nonlinear node at displacement `u_q`.
///
/// The quadratic term destabilizes and the quartic term saturates, which is
/// the form whose averaged amplitude law has the subcritical shape used
/// throughout [`crate::slowflow`].
pub fn nonlinear_damping(u_q: f64, nu: f64, eta: f64) -> f64 {
    let u2 = u_q * u_q;
    -nu - eta * u2 + eta * u2 * u2
}

/// Effective damping of a linear node for a stored value in the given regime.
pub fn linear_damping(stored: f64, regime: Regime, epsilon: f64) -> f64 {
    match regime {
        Regime::Small => stored,
        Regime::Large => 1.0 / (epsilon * epsilon * stored),
    }
}

/// Diagonal of `C(u)`.
pub fn damping_coefficients(u: &[f64], d: &DampingState, model: &NetworkModel) -> DVector<f64> {
    DVector::from_fn(model.n, |k, _| {
        if k == model.q {
            nonlinear_damping(u[k], model.nu, model.eta)
        } else {
            linear_damping(d.zetas[k], d.regime, model.epsilon)
        }
    })
}

/// Right-hand side of the closed-loop system in fast time.
///
/// The state is laid out as `[u (N), u̇ (N), ζ (N)]`. With `rate = None` the
/// damping entries are frozen, as in continuation runs. The rate laws are
/// written in slow time `εt`, so their contribution is scaled by `ε` here.
pub fn full_rhs(
    state: &[f64],
    model: &NetworkModel,
    regime: Regime,
    rate: Option<&RateLaw>,
    force: &[f64],
    amplitudes: &[f64],
    out: &mut [f64],
) {
    let n = model.n;
    let (u, rest) = state.split_at(n);
    let (v, zetas) = rest.split_at(n);
    let eps = model.epsilon;
    for k in 0..n {
        out[k] = v[k];
    }
    for k in 0..n {
        let c = if k == model.q {
            nonlinear_damping(u[k], model.nu, model.eta)
        } else {
            linear_damping(zetas[k], regime, eps)
        };
        let mut ku = 0.0;
        for j in 0..n {
            ku += model.stiffness[(k, j)] * u[j];
        }
        out[n + k] = -eps * c * v[k] - ku + force[k];
    }
    let dz = &mut out[2 * n..3 * n];
    match rate {
        Some(law) => {
            law.rates(zetas, amplitudes, dz);
            for x in dz.iter_mut() {
                *x *= eps;
            }
        }
        None => dz.fill(0.0),
    }
}

/// First-order linearization `[[0, I], [-K, -εC(0)]]` about `u = 0`.
pub fn first_order_matrix(model: &NetworkModel, d: &DampingState) -> DMatrix<f64> {
    let n = model.n;
    let c = damping_coefficients(&vec![0.0; n], d, model);
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(i, n + i)] = 1.0;
        for j in 0..n {
            a[(n + i, j)] = -model.stiffness[(i, j)];
        }
        a[(n + i, n + i)] = -model.epsilon * c[i];
    }
    a
}

/// First-order-in-ε exponential rates `±jω_i − (ε/2) C̃_ii(0)` of the
/// linearization, ordered by mode with the positive-frequency root first.
pub fn linearized_rates(
    model: &NetworkModel,
    basis: &ModalBasis,
    d: &DampingState,
) -> Result<Vec<Complex<f64>>> {
    if d.regime != Regime::Small {
        return Err(Error::UnsupportedRegime("large"));
    }
    let n = model.n;
    let mut rates = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut c_ii = -basis.p[(model.q, i)].powi(2) * model.nu;
        for k in 0..n {
            if k != model.q {
                c_ii += basis.p[(k, i)].powi(2) * d.zetas[k];
            }
        }
        let re = -0.5 * model.epsilon * c_ii;
        rates.push(Complex::new(re, basis.omegas[i]));
        rates.push(Complex::new(re, -basis.omegas[i]));
    }
    Ok(rates)
}

pub fn all_decaying(rates: &[Complex<f64>]) -> bool {
    rates.iter().all(|z| z.re < 0.0)
}

/// Edge lists of the two networks shipped with the crate.
pub mod fixtures {
    pub const FOUR_NODE_EDGES: [(usize, usize); 4] = [(1, 2), (1, 4), (2, 3), (2, 4)];

    pub const FIFTEEN_NODE_EDGES: [(usize, usize); 36] = [
        (1, 5),
        (1, 8),
        (2, 7),
        (2, 11),
        (3, 7),
        (3, 8),
        (3, 9),
        (3, 11),
        (3, 12),
        (3, 14),
        (4, 6),
        (4, 8),
        (4, 10),
        (4, 11),
        (4, 12),
        (4, 13),
        (4, 14),
        (4, 15),
        (5, 6),
        (5, 7),
        (5, 11),
        (5, 15),
        (6, 7),
        (6, 9),
        (6, 10),
        (6, 15),
        (7, 12),
        (7, 14),
        (9, 15),
        (10, 13),
        (10, 15),
        (11, 15),
        (12, 14),
        (12, 15),
        (13, 14),
        (13, 15),
    ];

    pub const FOUR_NODE_JSON: &str = include_str!("../fixtures/four_node.json");
    pub const FIFTEEN_NODE_JSON: &str = include_str!("../fixtures/fifteen_node.json");
}

/// Four-node network with the nonlinear node at `q` (1-based), ν = 1, η = 10.
pub fn four_node(q: usize, epsilon: f64) -> NetworkModel {
    build_network(&fixtures::FOUR_NODE_EDGES, 4, q, 1.0, 10.0, epsilon)
        .expect("bundled four-node network is valid")
}

/// Fifteen-node network with the nonlinear node at `q` (1-based), ν = 1, η = 10.
pub fn fifteen_node(q: usize, epsilon: f64) -> NetworkModel {
    build_network(&fixtures::FIFTEEN_NODE_EDGES, 15, q, 1.0, 10.0, epsilon)
        .expect("bundled fifteen-node network is valid")
}
