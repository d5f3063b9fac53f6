//! Unconstrained smooth maximization: BFGS with a strong-Wolfe line search
//! and optional jittered restarts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::diff::num_grad;
use crate::error::{Error, Result};

/// A function to be maximized. Gradients default to central differences.
pub trait Objective {
    fn value(&self, theta: &[f64]) -> f64;

    /// `None` when the gradient cannot be evaluated (non-finite probe).
    fn gradient(&self, theta: &[f64]) -> Option<Vec<f64>> {
        num_grad(|t| self.value(t), theta).ok()
    }

    fn value_and_gradient(&self, theta: &[f64]) -> (f64, Option<Vec<f64>>) {
        let v = self.value(theta);
        if v.is_finite() {
            (v, self.gradient(theta))
        } else {
            (v, None)
        }
    }
}

impl<F: Fn(&[f64]) -> f64> Objective for F {
    fn value(&self, theta: &[f64]) -> f64 {
        self(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    /// Extra runs from jittered copies of the starting point.
    pub restarts: usize,
    /// Jitter scale, relative to `max(1, |θ_i|)`.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            step_tolerance: 1e-12,
            restarts: 0,
            jitter: 0.1,
            seed: 0,
        }
    }
}

impl OptimOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0 && self.step_tolerance > 0.0) {
            return Err(Error::Domain("optimizer tolerances must be strictly positive".into()));
        }
        if !(self.jitter >= 0.0) {
            return Err(Error::Domain("restart jitter must be non-negative".into()));
        }
        Ok(())
    }
}

/// Outcome of a single quasi-Newton run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub theta: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_gradient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub theta: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    /// One entry per run: the primary start first, then each restart.
    pub runs: Vec<RunSummary>,
}

/// Maximize `f` from `theta0`, plus `opts.restarts` jittered starts.
///
/// Exhausting the iteration budget is not an error: the best iterate is
/// returned with `converged = false`.
pub fn maximize<O: Objective + ?Sized>(f: &O, theta0: &[f64], opts: &OptimOptions) -> Result<Maximum> {
    opts.validate()?;
    let f0 = f.value(theta0);
    if !f0.is_finite() {
        return Err(Error::Domain(format!(
            "objective is not finite at the starting point ({f0})"
        )));
    }
    let mut runs = vec![bfgs(f, theta0, opts)];
    for r in 1..=opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        let start: Vec<f64> = theta0
            .iter()
            .map(|&t| {
                let z: f64 = StandardNormal.sample(&mut rng);
                t + opts.jitter * t.abs().max(1.0) * z
            })
            .collect();
        if f.value(&start).is_finite() {
            runs.push(bfgs(f, &start, opts));
        }
    }
    let best = runs
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            (a.converged, a.value)
                .partial_cmp(&(b.converged, b.value))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    let pick = runs[best].clone();
    Ok(Maximum {
        theta: pick.theta,
        value: pick.value,
        converged: pick.converged,
        iterations: pick.iterations,
        runs,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Minimization view of the objective: `φ = −f`, `∇φ = −∇f`.
struct Negated<'a, O: ?Sized>(&'a O);

impl<O: Objective + ?Sized> Negated<'_, O> {
    fn eval(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (v, g) = self.0.value_and_gradient(x);
        if !v.is_finite() {
            return None;
        }
        let g = g?;
        if g.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some((-v, g.into_iter().map(|v| -v).collect()))
    }
}

struct Step {
    alpha: f64,
    value: f64,
    grad: Vec<f64>,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

fn line_search<O: Objective + ?Sized>(
    phi: &Negated<'_, O>,
    x: &[f64],
    fx: f64,
    dir: &[f64],
    slope0: f64,
    alpha0: f64,
) -> Option<Step> {
    let point = |a: f64| -> Vec<f64> { x.iter().zip(dir).map(|(xi, di)| xi + a * di).collect() };
    let mut lo = (0.0, fx, slope0);
    let mut alpha = alpha0;
    let mut armijo_ok: Option<Step> = None;

    // (alpha, value) of the far end; value is None where the objective is not finite.
    let mut bracket: Option<((f64, f64, f64), (f64, Option<f64>))> = None;
    for i in 0..40 {
        match phi.eval(&point(alpha)) {
            None => {
                bracket = Some((lo, (alpha, None)));
                break;
            }
            Some((v, g)) => {
                let slope = dot(&g, dir);
                if v > fx + C1 * alpha * slope0 || (i > 0 && v >= lo.1) {
                    bracket = Some((lo, (alpha, Some(v))));
                    break;
                }
                if slope.abs() <= -C2 * slope0 {
                    return Some(Step { alpha, value: v, grad: g });
                }
                armijo_ok = Some(Step { alpha, value: v, grad: g });
                if slope >= 0.0 {
                    // Minimizer lies between this point and the previous one.
                    bracket = Some(((alpha, v, slope), (lo.0, Some(lo.1))));
                    break;
                }
                lo = (alpha, v, slope);
                alpha *= 2.0;
            }
        }
    }
    let (mut lo, mut hi) = bracket?;
    for _ in 0..60 {
        let (a_lo, f_lo, d_lo) = lo;
        let width = hi.0 - a_lo;
        if width.abs() < 1e-16 * a_lo.abs().max(1.0) {
            break;
        }
        // Quadratic interpolation from (f_lo, d_lo) and the far end, safeguarded.
        let mut a = a_lo + 0.5 * width;
        if let Some(f_hi) = hi.1 {
            let denom = 2.0 * (f_hi - f_lo - d_lo * width);
            if denom > 0.0 {
                let cand = a_lo - d_lo * width * width / denom;
                let (l, u) = (a_lo + 0.1 * width, hi.0 - 0.1 * width);
                if cand.is_finite() {
                    a = cand.clamp(l.min(u), l.max(u));
                }
            }
        }
        match phi.eval(&point(a)) {
            None => hi = (a, None),
            Some((v, g)) => {
                let slope = dot(&g, dir);
                if v > fx + C1 * a * slope0 || v >= f_lo {
                    hi = (a, Some(v));
                } else {
                    if slope.abs() <= -C2 * slope0 {
                        return Some(Step { alpha: a, value: v, grad: g });
                    }
                    if slope * (hi.0 - a_lo) >= 0.0 {
                        hi = (a_lo, Some(f_lo));
                    }
                    armijo_ok = Some(Step { alpha: a, value: v, grad: g.clone() });
                    lo = (a, v, slope);
                }
            }
        }
    }
    armijo_ok.filter(|s| s.value < fx)
}

fn bfgs<O: Objective + ?Sized>(f: &O, theta0: &[f64], opts: &OptimOptions) -> RunSummary {
    let phi = Negated(f);
    let d = theta0.len();
    let mut x = theta0.to_vec();
    let (mut fx, mut g) = match phi.eval(&x) {
        Some(v) => v,
        None => {
            return RunSummary {
                theta: x,
                value: f.value(theta0),
                converged: false,
                iterations: 0,
                max_gradient: f64::INFINITY,
            }
        }
    };
    let identity = |d: usize| -> Vec<f64> {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        m
    };
    // Inverse Hessian approximation, row-major.
    let mut hinv = identity(d);
    let mut fresh = true;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if max_abs(&g) <= opts.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut dir: Vec<f64> = (0..d).map(|i| -dot(&hinv[i * d..(i + 1) * d], &g)).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            hinv = identity(d);
            fresh = true;
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }
        let alpha0 = if fresh { (1.0 / max_abs(&g)).min(1.0) } else { 1.0 };
        let step = match line_search(&phi, &x, fx, &dir, slope, alpha0) {
            Some(s) => s,
            None if !fresh => {
                hinv = identity(d);
                fresh = true;
                continue;
            }
            None => break,
        };
        let s: Vec<f64> = dir.iter().map(|v| step.alpha * v).collect();
        let y: Vec<f64> = step.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        let f_prev = fx;
        for i in 0..d {
            x[i] += s[i];
        }
        fx = step.value;
        g = step.grad;

        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                let scale = sy / dot(&y, &y);
                for v in hinv.iter_mut() {
                    *v *= scale;
                }
                fresh = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..d).map(|i| dot(&hinv[i * d..(i + 1) * d], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..d {
                for j in 0..d {
                    hinv[i * d + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        let small_step = max_abs(&s) <= opts.step_tolerance * (1.0 + max_abs(&x));
        let small_change = (f_prev - fx).abs() <= 1e-15 * (1.0 + fx.abs());
        if small_step && small_change {
            converged = max_abs(&g) <= opts.gradient_tolerance;
            break;
        }
    }
    if !converged && max_abs(&g) <= opts.gradient_tolerance {
        converged = true;
    }
    RunSummary {
        theta: x,
        value: -fx,
        converged,
        iterations,
        max_gradient: max_abs(&g),
    }
}
