//! Minimization of `T` on level sets `{U = λ}` by preconditioned projected
//! gradient descent with retraction, and λ-continuation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::axpy;
use crate::variational::Variational;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Bound on `‖T' - θU'‖ / (1 + ‖T'‖)`.
    pub grad_tol: f64,
    /// Bound on `|U(u) - λ| / λ`.
    pub constraint_tol: f64,
    pub step: f64,
    pub backtrack: f64,
}

impl MinimizeOptions {
    pub fn toy() -> Self {
        Self {
            max_iters: 10_000,
            grad_tol: 1e-8,
            constraint_tol: 1e-10,
            step: 0.25,
            backtrack: 0.5,
        }
    }

    pub fn pde() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-6,
            constraint_tol: 1e-10,
            step: 1.0,
            backtrack: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0 && self.constraint_tol > 0.0 && self.step > 0.0) {
            return Err(invalid(
                "minimize options: tolerances and step must be positive",
            ));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(invalid("minimize options: backtrack must lie in (0, 1)"));
        }
        if self.max_iters == 0 {
            return Err(invalid("minimize options: max_iters must be positive"));
        }
        Ok(())
    }
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self::pde()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub level: f64,
    /// `T` at the returned point, the discrete `i_λ`.
    pub i_value: f64,
    #[serde(skip)]
    pub minimizer: Vec<f64>,
    /// Least-squares `θ` in `T' ≈ θ U'`.
    pub multiplier: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    /// `|U(u) - λ| / λ` at the returned point.
    pub constraint_error: f64,
}

/// Stationarity data at a point: multiplier, normalized residual, gradients.
pub(crate) struct Stationarity {
    pub theta: f64,
    pub residual: f64,
    pub grad_t: Vec<f64>,
    pub grad_u: Vec<f64>,
}

pub(crate) fn stationarity<V: Variational + ?Sized>(problem: &V, u: &[f64]) -> Stationarity {
    let grad_t = problem.grad_t(u);
    let grad_u = problem.grad_u(u);
    let uu = problem.inner(&grad_u, &grad_u);
    let theta = if uu > 0.0 {
        problem.inner(&grad_t, &grad_u) / uu
    } else {
        0.0
    };
    let r = axpy(-theta, &grad_u, &grad_t);
    let residual = problem.norm(&r) / (1.0 + problem.norm(&grad_t));
    Stationarity {
        theta,
        residual,
        grad_t,
        grad_u,
    }
}

/// Minimizes `T` over `{U = level}` starting from the retraction of `seed`.
///
/// Every accepted iterate lies on the level set to rounding; `T` is
/// non-increasing along accepted iterates. Running out of iterations is not
/// an error: the best iterate comes back with `converged = false`.
pub fn minimize_on_level<V: Variational + ?Sized>(
    problem: &V,
    level: f64,
    seed: &[f64],
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    opts.validate()?;
    if !(level > 0.0 && level.is_finite()) {
        return Err(invalid(format!("level must be positive, got {level}")));
    }
    if seed.len() != problem.dim() {
        return Err(invalid(format!(
            "seed has {} entries, expected {}",
            seed.len(),
            problem.dim()
        )));
    }
    let mut u = problem.retract(seed, level)?;
    let mut t = problem.eval_t(&u);
    let mut step = opts.step;
    let mut iterations = 0;
    let mut stat = stationarity(problem, &u);
    let mut stalled = false;

    while iterations < opts.max_iters && stat.residual > opts.grad_tol {
        let pt = problem.precondition_for_multiplier(&stat.grad_t, stat.theta);
        let pu = problem.precondition_for_multiplier(&stat.grad_u, stat.theta);
        let alpha = problem.inner(&stat.grad_u, &pt) / problem.inner(&stat.grad_u, &pu);
        let dir = axpy(-alpha, &pu, &pt);
        let slope = problem.inner(&stat.grad_t, &dir);
        if !(slope > 0.0) {
            stalled = true;
            break;
        }

        let mut accepted = None;
        let mut trial_step = step;
        while trial_step > 1e-14 * opts.step {
            let trial = problem.retract(&axpy(-trial_step, &dir, &u), level)?;
            let t_trial = problem.eval_t(&trial);
            let armijo = t_trial <= t - 1e-4 * trial_step * slope;
            // Near convergence the decrease drops below rounding in T; accept
            // if T did not grow and stationarity improved.
            let flat = t_trial <= t + 64.0 * f64::EPSILON * t.abs();
            if armijo {
                accepted = Some((trial, t_trial, None));
                break;
            }
            if flat {
                let s = stationarity(problem, &trial);
                if s.residual < stat.residual {
                    accepted = Some((trial, t_trial, Some(s)));
                    break;
                }
            }
            trial_step *= opts.backtrack;
        }
        let Some((next, t_next, s_next)) = accepted else {
            stalled = true;
            break;
        };
        u = next;
        t = t_next;
        stat = s_next.unwrap_or_else(|| stationarity(problem, &u));
        step = (trial_step / opts.backtrack).min(opts.step);
        iterations += 1;
    }

    if stalled {
        log::debug!(
            "line search stalled at residual {:e} after {iterations} iterations",
            stat.residual
        );
    }
    let constraint_error = (problem.eval_u(&u) - level).abs() / level;
    let converged = stat.residual <= opts.grad_tol && constraint_error <= opts.constraint_tol;
    Ok(MinimizeResult {
        level,
        i_value: t,
        minimizer: u,
        multiplier: stat.theta,
        iterations,
        converged,
        residual: stat.residual,
        constraint_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    /// Seed each solve from the previous minimizer carried by the group action.
    pub warm_start: bool,
    /// Adjacent minimizers farther apart than this factor times the previous
    /// step distance are flagged as jumps.
    pub jump_factor: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            warm_start: true,
            jump_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub lambda: f64,
    pub outcome: Result<MinimizeResult>,
    /// Relative distance `‖u_k - u_{k-1}‖ / ‖u_k‖` to the previous successful minimizer.
    pub step_distance: Option<f64>,
    pub jump: bool,
}

impl SweepEntry {
    pub fn result(&self) -> Option<&MinimizeResult> {
        self.outcome.as_ref().ok()
    }
}

/// Solves at each level of an increasing sequence. With warm starts (the
/// default) each solve is seeded from the previous minimizer transported by
/// the problem's scaling action; individual failures are recorded and the
/// sweep carries on.
pub fn continuation_sweep<V: Variational + ?Sized>(
    problem: &V,
    lambdas: &[f64],
    opts: &MinimizeOptions,
    sweep: &SweepOptions,
) -> Result<Vec<SweepEntry>> {
    opts.validate()?;
    if lambdas.is_empty() {
        return Err(invalid("sweep: no levels given"));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(invalid("sweep: levels must be positive and finite"));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("sweep: levels must be strictly increasing"));
    }

    let seed = problem.seed();
    let outcomes: Vec<Result<MinimizeResult>> = if sweep.warm_start {
        let mut out = Vec::with_capacity(lambdas.len());
        let mut previous: Option<(f64, Vec<f64>)> = None;
        for &lambda in lambdas {
            let start = match &previous {
                Some((level, u)) => problem
                    .transport(u, *level, lambda)
                    .unwrap_or_else(|_| seed.clone()),
                None => seed.clone(),
            };
            let r = minimize_on_level(problem, lambda, &start, opts);
            if let Ok(res) = &r {
                previous = Some((lambda, res.minimizer.clone()));
            }
            out.push(r);
        }
        out
    } else {
        lambdas
            .par_iter()
            .map(|&lambda| minimize_on_level(problem, lambda, &seed, opts))
            .collect()
    };

    let mut entries = Vec::with_capacity(lambdas.len());
    let mut last: Option<&Vec<f64>> = None;
    let mut last_distance: Option<f64> = None;
    for (&lambda, outcome) in lambdas.iter().zip(&outcomes) {
        let mut step_distance = None;
        let mut jump = false;
        if let Ok(res) = outcome {
            if let Some(prev) = last {
                let diff = axpy(-1.0, prev, &res.minimizer);
                let d = problem.norm(&diff) / problem.norm(&res.minimizer).max(f64::MIN_POSITIVE);
                if let Some(ld) = last_distance {
                    jump = d > sweep.jump_factor * ld && d > 1e-8;
                }
                step_distance = Some(d);
                last_distance = Some(d);
            }
            last = Some(&res.minimizer);
        }
        entries.push(SweepEntry {
            lambda,
            outcome: outcome.clone(),
            step_distance,
            jump,
        });
    }
    Ok(entries)
}

/// Log-spaced levels from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && count >= 2) {
        return Err(invalid(format!(
            "log_spaced: need 0 < lo < hi and count >= 2 (got {lo}, {hi}, {count})"
        )));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|k| {
            if k == count - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// Converts a failed sweep entry into the error that stopped it, for reporting.
pub fn first_failure(entries: &[SweepEntry]) -> Option<(f64, Error)> {
    entries.iter().find_map(|e| match &e.outcome {
        Err(err) => Some((e.lambda, err.clone())),
        Ok(_) => None,
    })
}
