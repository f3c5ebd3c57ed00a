//! Orthant-wise limited-memory quasi-Newton minimization of
//! `f(x) + l1 * |x|_1` for a smooth convex `f`.
//!
//! With `l1 = 0` this is plain L-BFGS with a backtracking Armijo line
//! search.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::errors::{Error, Result};

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

/// Optimizer settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OwlqnParams {
    /// L1 coefficient.
    pub l1: f64,
    /// Number of correction pairs kept.
    pub memory: usize,
    /// Maximum number of iterations.
    pub max_iterations: usize,
    /// Stop once `|f_prev - f| / max(|f|, 1e-12)` drops below this.
    pub tolerance: f64,
}

/// Why minimization stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Reached the iteration limit.
    MaxIterations,
    /// Relative objective change fell below the tolerance.
    Converged,
    /// The pseudo-gradient vanished.
    Stationary,
    /// No acceptable step was found along the search direction.
    LineSearchFailed,
}

/// State after an accepted iteration.
#[derive(Debug, Clone, Copy)]
pub struct Iterate<'a> {
    /// 1-based iteration number.
    pub iteration: usize,
    /// Full objective including the L1 term.
    pub objective: f64,
    /// Current point.
    pub x: &'a [f64],
    /// Step length accepted by the line search.
    pub step: f64,
    /// Number of objective evaluations so far.
    pub evaluations: usize,
}

/// Result of [`minimize`].
#[derive(Debug, Clone)]
pub struct Minimum {
    /// Final point.
    pub x: Vec<f64>,
    /// Full objective at the start, then after each accepted iteration.
    pub history: Vec<f64>,
    /// Why the loop ended.
    pub reason: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn l1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| libm::fabs(*v)).sum()
}

/// Minimum-norm subgradient of `f + l1 |x|_1`.
fn pseudo_gradient(x: &[f64], g: &[f64], l1: f64, out: &mut [f64]) {
    if l1 == 0.0 {
        out.copy_from_slice(g);
        return;
    }
    for i in 0..x.len() {
        out[i] = if x[i] > 0.0 {
            g[i] + l1
        } else if x[i] < 0.0 {
            g[i] - l1
        } else if g[i] + l1 < 0.0 {
            g[i] + l1
        } else if g[i] - l1 > 0.0 {
            g[i] - l1
        } else {
            0.0
        };
    }
}

/// Minimizes `eval(x) + l1 * |x|_1` starting from `x0`.
///
/// `eval` returns the smooth objective and writes its gradient into the
/// second argument. `observe` sees every accepted iterate.
pub fn minimize<E, O>(x0: Vec<f64>, params: &OwlqnParams, mut eval: E, mut observe: O) -> Result<Minimum>
where
    E: FnMut(&[f64], &mut [f64]) -> f64,
    O: FnMut(&Iterate<'_>),
{
    let n = x0.len();
    let l1 = params.l1;
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut evaluations = 1;
    let mut fx = eval(&x, &mut g) + l1 * l1_norm(&x);
    if !fx.is_finite() {
        return Err(Error::Diverged { iteration: 0, objective: fx });
    }
    let mut history = vec![fx];
    let mut pg = vec![0.0; n];
    pseudo_gradient(&x, &g, l1, &mut pg);

    let mut s_hist: VecDeque<Vec<f64>> = VecDeque::with_capacity(params.memory);
    let mut y_hist: VecDeque<Vec<f64>> = VecDeque::with_capacity(params.memory);
    let mut rho_hist: VecDeque<f64> = VecDeque::with_capacity(params.memory);
    let mut alpha_buf = vec![0.0; params.memory];

    let mut d = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut orthant = vec![0.0; n];

    let mut reason = StopReason::MaxIterations;
    for iteration in 1..=params.max_iterations {
        let pg_norm = libm::sqrt(dot(&pg, &pg));
        if pg_norm == 0.0 || pg_norm / libm::sqrt(dot(&x, &x)).max(1.0) < 1e-12 {
            reason = StopReason::Stationary;
            break;
        }

        // Two-loop recursion on the pseudo-gradient.
        for (di, &p) in d.iter_mut().zip(&pg) {
            *di = -p;
        }
        let k = s_hist.len();
        for j in (0..k).rev() {
            let a = rho_hist[j] * dot(&s_hist[j], &d);
            alpha_buf[j] = a;
            for (di, yi) in d.iter_mut().zip(&y_hist[j]) {
                *di -= a * yi;
            }
        }
        if k > 0 {
            let gamma = dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1]);
            d.iter_mut().for_each(|di| *di *= gamma);
        }
        for j in 0..k {
            let b = rho_hist[j] * dot(&y_hist[j], &d);
            for (di, si) in d.iter_mut().zip(&s_hist[j]) {
                *di += (alpha_buf[j] - b) * si;
            }
        }
        if l1 > 0.0 {
            for (di, &p) in d.iter_mut().zip(&pg) {
                if *di * p >= 0.0 {
                    *di = 0.0;
                }
            }
        }
        if dot(&d, &pg) >= 0.0 {
            // Curvature history no longer gives a descent direction.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (di, &p) in d.iter_mut().zip(&pg) {
                *di = -p;
            }
        }

        for i in 0..n {
            orthant[i] = if x[i] != 0.0 { sign(x[i]) } else { -sign(pg[i]) };
        }

        let mut step = if iteration == 1 && s_hist.is_empty() {
            1.0 / libm::sqrt(dot(&d, &d))
        } else {
            1.0
        };
        let mut accepted = None;
        let mut last_trial = fx;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                let v = x[i] + step * d[i];
                x_new[i] = if l1 > 0.0 && sign(v) != orthant[i] { 0.0 } else { v };
            }
            evaluations += 1;
            let f_new = eval(&x_new, &mut g_new) + l1 * l1_norm(&x_new);
            last_trial = f_new;
            let decrease: f64 = (0..n).map(|i| pg[i] * (x_new[i] - x[i])).sum();
            if f_new.is_finite() && f_new <= fx + ARMIJO * decrease {
                accepted = Some(f_new);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            if !last_trial.is_finite() {
                return Err(Error::Diverged { iteration, objective: last_trial });
            }
            reason = StopReason::LineSearchFailed;
            break;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 0.0 {
            if s_hist.len() == params.memory {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(s);
            y_hist.push_back(y);
            rho_hist.push_back(1.0 / sy);
        }

        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut g, &mut g_new);
        let f_prev = fx;
        fx = f_new;
        history.push(fx);
        pseudo_gradient(&x, &g, l1, &mut pg);
        observe(&Iterate { iteration, objective: fx, x: &x, step, evaluations });

        if libm::fabs(f_prev - fx) / libm::fabs(fx).max(1e-12) < params.tolerance {
            reason = StopReason::Converged;
            break;
        }
    }
    Ok(Minimum { x, history, reason })
}
