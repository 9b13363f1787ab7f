use nalgebra::{Complex, DVector};

use super::newton::{newton_corrector, FnResidual, NewtonOptions};
use super::{
    complex_eigenvalues, BifurcationPoint, Branch, BranchEnd, BranchKind, BranchPoint, EventKind,
    FrozenSystem, ParamSpec,
};
use crate::error::Result;
use crate::network::NetworkModel;

#[derive(Debug, Clone, Copy)]
pub struct EquilibriumOptions {
    /// Number of grid points across the range.
    pub points: usize,
    /// Space the grid geometrically (needs a positive range).
    pub geometric: bool,
    /// Bisection tolerance on the parameter, relative to `max(1, |μ|)`.
    pub bisect_tol: f64,
    pub newton: NewtonOptions,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            points: 200,
            geometric: false,
            bisect_tol: 1e-8,
            newton: NewtonOptions::default(),
        }
    }
}

/// Eigenvalues of the linearization about `u = 0` at parameter `mu`.
pub fn linear_spectrum(model: &NetworkModel, spec: &ParamSpec, mu: f64) -> Vec<Complex<f64>> {
    complex_eigenvalues(&FrozenSystem::new(model, spec, mu).linear_matrix())
}

fn unstable_count(model: &NetworkModel, spec: &ParamSpec, mu: f64) -> usize {
    linear_spectrum(model, spec, mu)
        .iter()
        .filter(|l| l.re > 0.0)
        .count()
}

fn grid(range: (f64, f64), points: usize, geometric: bool) -> Vec<f64> {
    let n = points.max(2);
    let (a, b) = range;
    (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            if geometric && a > 0.0 && b > 0.0 {
                a * (b / a).powf(s)
            } else {
                a + s * (b - a)
            }
        })
        .collect()
}

/// Tracks the trivial equilibrium across `range` and locates Hopf points.
pub fn continue_equilibria(
    model: &NetworkModel,
    spec: &ParamSpec,
    range: (f64, f64),
    opts: &EquilibriumOptions,
) -> Result<Branch> {
    let dim = 2 * model.n;
    let mut guess = DVector::zeros(dim);
    let mut points = Vec::new();
    let mut counts = Vec::new();
    for mu in grid(range, opts.points, opts.geometric) {
        let sys = FrozenSystem::new(model, spec, mu);
        let residual = FnResidual(|x: &DVector<f64>| {
            let mut out = DVector::zeros(dim);
            sys.rhs(x.as_slice(), out.as_mut_slice());
            out
        });
        let sol = newton_corrector(&residual, guess.clone(), &opts.newton)?;
        guess = sol.x.clone();
        let spectrum = complex_eigenvalues(&sys.linear_matrix());
        let max_re = spectrum.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        counts.push(spectrum.iter().filter(|l| l.re > 0.0).count());
        points.push(BranchPoint {
            param: mu,
            state: sol.x.iter().copied().collect(),
            max_u: sol.x.rows(0, model.n).iter().copied().collect(),
            period: None,
            stable: max_re < 0.0,
            stability_measure: max_re,
            event: None,
        });
    }

    let mut events = Vec::new();
    for w in 0..points.len().saturating_sub(1) {
        if counts[w] != counts[w + 1] {
            let before = events.len();
            locate_hopf(
                model,
                spec,
                (points[w].param, points[w + 1].param),
                (counts[w], counts[w + 1]),
                opts.bisect_tol,
                0,
                &mut events,
            );
            if events.len() > before {
                points[w + 1].event = Some(EventKind::Hopf);
            }
        }
    }

    Ok(Branch {
        kind: BranchKind::Equilibrium,
        param_label: spec.free.label(),
        points,
        events,
        end: BranchEnd::Completed,
    })
}

fn locate_hopf(
    model: &NetworkModel,
    spec: &ParamSpec,
    (mut a, mut b): (f64, f64),
    (ca, cb): (usize, usize),
    tol: f64,
    depth: usize,
    events: &mut Vec<BifurcationPoint>,
) {
    if ca.abs_diff(cb) != 2 {
        // Several crossings (or a real one) inside the bracket: split it.
        if depth >= 4 || ca.abs_diff(cb) < 2 {
            return;
        }
        let sub = grid((a, b), 9, false);
        let counts: Vec<usize> = sub.iter().map(|&m| unstable_count(model, spec, m)).collect();
        for w in 0..sub.len() - 1 {
            if counts[w] != counts[w + 1] {
                locate_hopf(
                    model,
                    spec,
                    (sub[w], sub[w + 1]),
                    (counts[w], counts[w + 1]),
                    tol,
                    depth + 1,
                    events,
                );
            }
        }
        return;
    }
    while (b - a).abs() > tol * a.abs().max(b.abs()).max(1.0) {
        let mid = 0.5 * (a + b);
        if unstable_count(model, spec, mid) == ca {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mu = 0.5 * (a + b);
    let crossing = linear_spectrum(model, spec, mu)
        .into_iter()
        .filter(|l| l.im > 0.0)
        .min_by(|x, y| x.re.abs().total_cmp(&y.re.abs()));
    if let Some(l) = crossing {
        events.push(BifurcationPoint {
            kind: EventKind::Hopf,
            param: mu,
            state: vec![0.0; 2 * model.n],
            frequency: l.im,
            period: Some(2.0 * std::f64::consts::PI / l.im),
        });
    }
}
