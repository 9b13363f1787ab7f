use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Square nonlinear system `F(x) = 0`.
pub trait Residual {
    fn eval(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Jacobian by central differences with step `h·max(1, |x_j|)`.
    fn jacobian(&self, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
        central_difference_jacobian(|y| self.eval(y), x, h)
    }
}

/// Closure adapter for [`Residual`].
pub struct FnResidual<F>(pub F);

impl<F: Fn(&DVector<f64>) -> DVector<f64>> Residual for FnResidual<F> {
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.0)(x)
    }
}

pub fn central_difference_jacobian<F: Fn(&DVector<f64>) -> DVector<f64>>(
    f: F,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut xp = x.clone();
    for j in 0..n {
        let step = h * x[j].abs().max(1.0);
        xp[j] = x[j] + step;
        let fp = f(&xp);
        xp[j] = x[j] - step;
        let fm = f(&xp);
        xp[j] = x[j];
        cols.push((fp - fm) / (2.0 * step));
    }
    DMatrix::from_columns(&cols)
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-9,
            max_iter: 25,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Solves a linear system, reporting a condition estimate when it is
/// numerically singular.
pub fn solve_linear(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = a.clone().lu();
    if let Some(x) = lu.solve(b) {
        if x.iter().all(|v| v.is_finite()) {
            let cond = condition_estimate(&a);
            if cond < 1e15 {
                return Ok(x);
            }
            return Err(Error::SingularJacobian { condition: cond });
        }
    }
    Err(Error::SingularJacobian {
        condition: condition_estimate(&a),
    })
}

/// Ratio of extreme singular values.
pub fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Newton iteration until `‖F(x)‖ ≤ tol`.
pub fn newton_corrector<R: Residual + ?Sized>(
    sys: &R,
    guess: DVector<f64>,
    opts: &NewtonOptions,
) -> Result<NewtonSolution> {
    let mut x = guess;
    let mut r = sys.eval(&x);
    let mut norm = r.norm();
    for it in 0..opts.max_iter {
        if norm <= opts.tol {
            return Ok(NewtonSolution {
                x,
                iterations: it,
                residual_norm: norm,
            });
        }
        let j = sys.jacobian(&x, opts.fd_step);
        let dx = solve_linear(j, &r)?;
        x -= dx;
        r = sys.eval(&x);
        norm = r.norm();
        if !norm.is_finite() {
            break;
        }
    }
    if norm <= opts.tol {
        return Ok(NewtonSolution {
            x,
            iterations: opts.max_iter,
            residual_norm: norm,
        });
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: norm,
    })
}
