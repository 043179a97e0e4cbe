//! Dense Levenberg-Marquardt for small box-constrained least-squares
//! problems.
//!
//! The gait planner solves for at most `k_max` pivot angles, so problem
//! sizes stay in the single digits and a dense normal-equations solve is the
//! right tool. Box constraints are handled by clamping trial points, which
//! is crude in general but exact here: the feasible optimum of a gait either
//! lies strictly inside the box or the problem is reported infeasible anyway.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the squared residual norm falls below this.
    pub cost_tol: f64,
    /// Stop when an accepted step is shorter than this.
    pub step_tol: f64,
    pub lambda_init: f64,
    /// Componentwise lower and upper bounds applied to every trial point.
    pub bounds: Option<(DVector<f64>, DVector<f64>)>,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            cost_tol: 1e-24,
            step_tol: 1e-14,
            lambda_init: 1e-3,
            bounds: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: DVector<f64>,
    /// Squared residual norm at `x`.
    pub cost: f64,
    pub iterations: usize,
}

/// Minimizes `|r(x)|^2` starting from `x0`.
///
/// `jacobian` must return the `m x n` matrix of partial derivatives of the
/// residual vector. The damping parameter multiplies the diagonal of the
/// Gauss-Newton Hessian (Marquardt scaling), so steps stay sensible when the
/// residual components have different units.
pub fn minimize<R, J>(residuals: R, jacobian: J, x0: DVector<f64>, opts: &LmOptions) -> LmOutcome
where
    R: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    let clamp = |x: &mut DVector<f64>| {
        if let Some((lo, hi)) = &opts.bounds {
            for i in 0..x.len() {
                x[i] = x[i].clamp(lo[i], hi[i]);
            }
        }
    };

    let mut x = x0;
    clamp(&mut x);
    let mut r = residuals(&x);
    let mut cost = r.norm_squared();
    let mut lambda = opts.lambda_init;
    let mut iterations = 0;

    while iterations < opts.max_iterations && cost > opts.cost_tol {
        iterations += 1;
        let j = jacobian(&x);
        let jt = j.transpose();
        let gradient = &jt * &r;
        if gradient.amax() < 1e-15 {
            break;
        }
        let hessian = &jt * &j;

        let mut accepted = false;
        let mut small_step = false;
        for _ in 0..25 {
            let mut damped = hessian.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda * (hessian[(i, i)] + 1e-12);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&gradient)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut x_try = &x + &step;
            clamp(&mut x_try);
            let r_try = residuals(&x_try);
            let cost_try = r_try.norm_squared();
            if cost_try < cost {
                small_step = (&x_try - &x).norm() < opts.step_tol;
                x = x_try;
                r = r_try;
                cost = cost_try;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if !accepted || small_step {
            break;
        }
    }

    LmOutcome {
        x,
        cost,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_small_nonlinear_fit() {
        // Find the circle point (cos t, sin t) closest in angle to (1, 1):
        // residual (cos t - x, sin t - y) has minimum at t = pi/4.
        let target = DVector::from_vec(vec![1.0, 1.0]);
        let residuals = |x: &DVector<f64>| {
            DVector::from_vec(vec![x[0].cos() - target[0], x[0].sin() - target[1]])
        };
        let jacobian =
            |x: &DVector<f64>| DMatrix::from_vec(2, 1, vec![-x[0].sin(), x[0].cos()]);
        let out = minimize(
            residuals,
            jacobian,
            DVector::from_vec(vec![0.2]),
            &LmOptions::default(),
        );
        assert!((out.x[0] - std::f64::consts::FRAC_PI_4).abs() < 1e-8);
    }

    #[test]
    fn respects_box_bounds() {
        // Unconstrained minimum at x = 3 but the box stops at 1.
        let residuals = |x: &DVector<f64>| DVector::from_vec(vec![x[0] - 3.0]);
        let jacobian = |_: &DVector<f64>| DMatrix::from_vec(1, 1, vec![1.0]);
        let opts = LmOptions {
            bounds: Some((
                DVector::from_vec(vec![-1.0]),
                DVector::from_vec(vec![1.0]),
            )),
            ..LmOptions::default()
        };
        let out = minimize(residuals, jacobian, DVector::from_vec(vec![0.0]), &opts);
        assert!((out.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_start_returns_immediately() {
        let residuals = |x: &DVector<f64>| x.clone();
        let jacobian = |_: &DVector<f64>| DMatrix::identity(2, 2);
        let out = minimize(
            residuals,
            jacobian,
            DVector::zeros(2),
            &LmOptions::default(),
        );
        assert_eq!(out.iterations, 0);
        assert_eq!(out.cost, 0.0);
    }
}
