//! Unconstrained minimizers for smooth objectives.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Limited-memory BFGS.
    Lbfgs,
    /// Steepest descent with the same backtracking line search.
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimOptions {
    pub method: Method,
    pub max_iterations: usize,
    /// Stop once the gradient's infinity norm is at most this.
    pub gradient_tolerance: f64,
    /// Number of curvature pairs kept by L-BFGS.
    pub memory: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            method: Method::Lbfgs,
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            memory: 10,
            armijo: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    IterationLimit,
    /// No step along the search direction decreased the objective.
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_inf_norm: f64,
    pub iterations: usize,
    pub stop: StopReason,
    /// Objective at the start and after every accepted step.
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// L-BFGS two-loop recursion: approximately `-H g`.
fn lbfgs_direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

/// Minimizes `f`, which returns the objective and its gradient.
///
/// Every accepted step satisfies the Armijo condition, so [`OptimReport::trace`]
/// is non-increasing.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, opts: &OptimOptions) -> Result<OptimReport>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective);
    }
    let mut trace = vec![fx];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut last_step: f64 = 1.0;
    let mut iterations = 0;
    let mut stop = StopReason::IterationLimit;

    while iterations < opts.max_iterations {
        if inf_norm(&g) <= opts.gradient_tolerance {
            stop = StopReason::Converged;
            break;
        }
        let mut d = match opts.method {
            Method::Lbfgs => lbfgs_direction(&g, &pairs),
            Method::GradientDescent => g.iter().map(|v| -v).collect(),
        };
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            pairs.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        // quasi-Newton steps are naturally scaled; steepest descent and the first
        // iteration reuse a growing multiple of the last accepted step
        let mut t = if opts.method == Method::Lbfgs && !pairs.is_empty() {
            1.0
        } else if iterations == 0 {
            (1.0 / inf_norm(&g)).min(1.0)
        } else {
            (last_step * 2.0).min(1e8)
        };
        let mut accepted = None;
        while t > 1e-20 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (fn_, gn) = f(&xn);
            if fn_.is_finite() && gn.iter().all(|v| v.is_finite()) && fn_ <= fx + opts.armijo * t * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            stop = StopReason::LineSearchFailed;
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if opts.method == Method::Lbfgs && sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if pairs.len() == opts.memory.max(1) {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        last_step = t;
        x = xn;
        fx = fn_;
        g = gn;
        trace.push(fx);
        iterations += 1;
    }
    if stop == StopReason::IterationLimit && inf_norm(&g) <= opts.gradient_tolerance {
        stop = StopReason::Converged;
    }
    Ok(OptimReport {
        gradient_inf_norm: inf_norm(&g),
        x,
        value: fx,
        iterations,
        stop,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (f, g)
    }

    #[test]
    fn lbfgs_solves_rosenbrock() {
        let r = minimize(rosenbrock, vec![-1.2, 1.0], &OptimOptions::default()).unwrap();
        assert_eq!(r.stop, StopReason::Converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gradient_descent_on_quadratic() {
        let quad = |x: &[f64]| (x[0] * x[0] + 10.0 * x[1] * x[1], vec![2.0 * x[0], 20.0 * x[1]]);
        let opts = OptimOptions {
            method: Method::GradientDescent,
            max_iterations: 5000,
            ..Default::default()
        };
        let r = minimize(quad, vec![3.0, -2.0], &opts).unwrap();
        assert_eq!(r.stop, StopReason::Converged);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn non_finite_start_is_rejected() {
        let bad = |_: &[f64]| (f64::NAN, vec![0.0]);
        assert!(matches!(
            minimize(bad, vec![0.0], &OptimOptions::default()),
            Err(Error::NonFiniteObjective)
        ));
    }
}
