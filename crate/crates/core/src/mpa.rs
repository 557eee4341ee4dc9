//! Mountain-pass estimate by deforming a discrete path from `0` to a point
//! with negative energy.
//!
//! Interior nodes take a preconditioned steepest-descent step on `F`, then the
//! path is resampled at equal arc length (string method). A sweep is only
//! accepted when the estimated supremum of `F` along the piecewise-linear path
//! does not increase; otherwise the step is halved.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interp::golden_max;
use crate::linalg::axpy;
use crate::variational::Variational;

/// Smallest number of interior nodes accepted by [`init_path`].
pub const MIN_INTERIOR: usize = 16;

/// Segments searched on the actual energy when measuring the supremum.
pub const REFINED_SEGMENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpaOptions {
    /// Interior nodes of the path.
    pub k: usize,
    pub step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_sweeps: usize,
    /// Converged when the sup improved by less than `c_tol * |c|` over `window` sweeps.
    pub c_tol: f64,
    pub window: usize,
}

impl Default for MpaOptions {
    fn default() -> Self {
        Self::pde()
    }
}

impl MpaOptions {
    pub fn toy() -> Self {
        MpaOptions {
            k: 32,
            step: 0.1,
            min_step: 1e-12,
            max_step: 1.0,
            max_sweeps: 10_000,
            c_tol: 1e-6,
            window: 50,
        }
    }

    pub fn pde() -> Self {
        MpaOptions {
            k: 32,
            step: 0.5,
            min_step: 1e-10,
            max_step: 4.0,
            max_sweeps: 10_000,
            c_tol: 1e-3,
            window: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < MIN_INTERIOR {
            return Err(invalid(format!(
                "mpa: need at least {MIN_INTERIOR} interior nodes, got {}",
                self.k
            )));
        }
        if !(self.step > 0.0
            && self.min_step > 0.0
            && self.min_step <= self.step
            && self.step <= self.max_step)
        {
            return Err(invalid("mpa: need 0 < min_step <= step <= max_step"));
        }
        if self.window == 0 || self.max_sweeps == 0 {
            return Err(invalid("mpa: window and max_sweeps must be positive"));
        }
        if !(self.c_tol >= 0.0) {
            return Err(invalid("mpa: c_tol must be non-negative"));
        }
        Ok(())
    }
}

/// Nodes `u_0 = 0, ..., u_{k+1} = e` with cached energies and gradients.
#[derive(Debug, Clone, Default)]
pub struct DiscretePath {
    points: Vec<Vec<f64>>,
    energies: Vec<f64>,
    gradients: Vec<Vec<f64>>,
}

impl DiscretePath {
    pub fn from_points<V: Variational + ?Sized>(
        problem: &V,
        points: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if points.len() < 3 {
            return Err(invalid("a path needs at least one interior node"));
        }
        if points.iter().any(|p| p.len() != problem.dim()) {
            return Err(invalid("path node dimension does not match the problem"));
        }
        let (energies, gradients) = points
            .par_iter()
            .map(|u| (problem.eval_f(u), problem.grad_f(u)))
            .unzip();
        Ok(DiscretePath {
            points,
            energies,
            gradients,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Highest node and its energy.
    pub fn max_node(&self) -> (usize, f64) {
        self.energies
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, e)| {
                if e > best.1 {
                    (i, e)
                } else {
                    best
                }
            })
    }

    /// Starts at the origin and ends below zero energy.
    pub fn is_admissible<V: Variational + ?Sized>(&self, problem: &V, tol: f64) -> bool {
        problem.norm(&self.points[0]) <= tol && *self.energies.last().unwrap() < 0.0
    }

    /// Supremum of `F` along the piecewise-linear path. Segments are ranked
    /// by the cubic Hermite interpolant of node energies and slopes; the top
    /// [`REFINED_SEGMENTS`] are then searched on the actual `F` by golden
    /// section. Returns `(sup, segment, s)` with the maximizer at
    /// `(1 - s) u_j + s u_{j+1}`.
    pub fn sup_along<V: Variational + ?Sized>(&self, problem: &V) -> (f64, usize, f64) {
        let mut ranked: Vec<(f64, usize, f64)> = (0..self.len() - 1)
            .map(|j| {
                let (value, s) = self.segment_hermite_max(problem, j);
                (value, j, s)
            })
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (top, e_top) = self.max_node();
        let node_best = if top + 1 < self.len() {
            (e_top, top, 0.0)
        } else {
            (e_top, top - 1, 1.0)
        };
        ranked
            .par_iter()
            .take(REFINED_SEGMENTS)
            .map(|&(_, j, _)| {
                let (s, value) =
                    golden_max(0.0, 1.0, 1e-10, |t| problem.eval_f(&self.point_at(j, t)));
                (value, j, s)
            })
            .reduce(|| node_best, |a, b| if b.0 > a.0 { b } else { a })
    }

    fn segment_hermite_max<V: Variational + ?Sized>(&self, problem: &V, j: usize) -> (f64, f64) {
        let delta = axpy(-1.0, &self.points[j], &self.points[j + 1]);
        let f0 = self.energies[j];
        let f1 = self.energies[j + 1];
        let d0 = problem.inner(&self.gradients[j], &delta);
        let d1 = problem.inner(&self.gradients[j + 1], &delta);
        let a = 2.0 * f0 - 2.0 * f1 + d0 + d1;
        let b = -3.0 * f0 + 3.0 * f1 - 2.0 * d0 - d1;
        let h = |s: f64| ((a * s + b) * s + d0) * s + f0;
        let mut best = if f0 >= f1 { (f0, 0.0) } else { (f1, 1.0) };
        for s in quadratic_roots(3.0 * a, 2.0 * b, d0) {
            if s > 0.0 && s < 1.0 && h(s) > best.0 {
                best = (h(s), s);
            }
        }
        best
    }

    /// `(1 - s) u_j + s u_{j+1}`.
    pub fn point_at(&self, j: usize, s: f64) -> Vec<f64> {
        axpy(
            s,
            &axpy(-1.0, &self.points[j], &self.points[j + 1]),
            &self.points[j],
        )
    }

    fn length<V: Variational + ?Sized>(&self, problem: &V) -> f64 {
        self.points
            .windows(2)
            .map(|w| problem.norm(&axpy(-1.0, &w[0], &w[1])))
            .sum()
    }

    /// Levels among `levels` that no segment of the path crosses.
    pub fn uncrossed_levels<V: Variational + ?Sized>(
        &self,
        problem: &V,
        levels: &[f64],
    ) -> Vec<f64> {
        let u: Vec<f64> = self.points.iter().map(|p| problem.eval_u(p)).collect();
        levels
            .iter()
            .copied()
            .filter(|&l| !u.windows(2).any(|w| (w[0] - l) * (w[1] - l) <= 0.0))
            .collect()
    }

    /// Equal arc-length resampling in the problem's norm, endpoints fixed.
    fn resampled<V: Variational + ?Sized>(problem: &V, points: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut cum = vec![0.0];
        for w in points.windows(2) {
            let d = problem.norm(&axpy(-1.0, &w[0], &w[1]));
            cum.push(cum.last().unwrap() + d);
        }
        let total = *cum.last().unwrap();
        if !(total > 0.0) {
            return points.to_vec();
        }
        let last = points.len() - 1;
        let mut out = Vec::with_capacity(points.len());
        out.push(points[0].clone());
        let mut seg = 0;
        for i in 1..last {
            let target = total * i as f64 / last as f64;
            while seg + 1 < last && cum[seg + 1] < target {
                seg += 1;
            }
            let len = cum[seg + 1] - cum[seg];
            let s = if len > 0.0 {
                ((target - cum[seg]) / len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            out.push(axpy(
                s,
                &axpy(-1.0, &points[seg], &points[seg + 1]),
                &points[seg],
            ));
        }
        out.push(points[last].clone());
        out
    }
}

/// Real roots of `a s² + b s + c`.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() <= 1e-14 * (b.abs() + c.abs()) {
        return if b != 0.0 { vec![-c / b] } else { vec![] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots
}

/// Straight path `t e`, `t = j/(k+1)`, from the origin to `endpoint`.
pub fn init_path<V: Variational + ?Sized>(
    problem: &V,
    endpoint: &[f64],
    k: usize,
) -> Result<DiscretePath> {
    if k < MIN_INTERIOR {
        return Err(invalid(format!(
            "mpa: need at least {MIN_INTERIOR} interior nodes, got {k}"
        )));
    }
    if endpoint.len() != problem.dim() {
        return Err(invalid(
            "mpa: endpoint dimension does not match the problem",
        ));
    }
    let fe = problem.eval_f(endpoint);
    if !(fe < 0.0) {
        return Err(invalid(format!(
            "mpa: endpoint must have negative energy, F(e) = {fe}"
        )));
    }
    let mut points: Vec<Vec<f64>> = (0..=k)
        .map(|j| {
            endpoint
                .iter()
                .map(|x| x * j as f64 / (k + 1) as f64)
                .collect()
        })
        .collect();
    points.push(endpoint.to_vec());
    DiscretePath::from_points(problem, points)
}

/// Outcome of one [`deform`] sweep.
#[derive(Debug, Clone)]
pub struct Deformed {
    pub path: DiscretePath,
    /// Step that was accepted, or the last one tried when stagnant.
    pub step: f64,
    /// Supremum of `F` along `path`.
    pub sup: f64,
    /// No step down to `min_step` kept the sup from growing; `path` is the input path.
    pub stagnant: bool,
}

/// One sweep: a descent step on every interior node, resampling, and step
/// halving until the sup along the path does not increase.
pub fn deform<V: Variational + ?Sized>(
    path: &DiscretePath,
    problem: &V,
    opts: &MpaOptions,
    step: f64,
) -> Result<Deformed> {
    let (old_sup, _, _) = path.sup_along(problem);
    let last = path.len() - 1;
    // descend perpendicular to the path; sliding along it is undone by resampling
    let directions: Vec<Vec<f64>> = (1..last)
        .into_par_iter()
        .map(|j| {
            let d = problem.precondition(&path.gradients[j]);
            let tangent = axpy(-1.0, &path.points[j - 1], &path.points[j + 1]);
            let tt = problem.inner(&tangent, &tangent);
            if tt > 0.0 {
                axpy(-problem.inner(&d, &tangent) / tt, &tangent, &d)
            } else {
                d
            }
        })
        .collect();
    // no node moves farther than half the mean node spacing in one sweep
    let cap = 0.5 * path.length(problem) / last as f64;
    let slack = 1e-10 * old_sup.abs().max(1e-300);
    let mut step = step;
    while step >= opts.min_step {
        let mut moved = Vec::with_capacity(path.len());
        moved.push(path.points[0].clone());
        for (u, d) in path.points[1..last].iter().zip(&directions) {
            let len = step * problem.norm(d);
            let t = if len > cap { step * cap / len } else { step };
            moved.push(axpy(-t, d, u));
        }
        moved.push(path.points[last].clone());
        let candidate =
            DiscretePath::from_points(problem, DiscretePath::resampled(problem, &moved))?;
        let (new_sup, _, _) = candidate.sup_along(problem);
        if new_sup <= old_sup + slack {
            return Ok(Deformed {
                path: candidate,
                step,
                sup: new_sup,
                stagnant: false,
            });
        }
        step *= 0.5;
    }
    Ok(Deformed {
        path: path.clone(),
        step,
        sup: old_sup,
        stagnant: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub sweep: usize,
    pub max_energy: f64,
    pub argmax_index: usize,
}

#[derive(Debug, Clone)]
pub struct MpaEstimate {
    pub c_mpa: f64,
    pub argmax_point: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    pub path: DiscretePath,
}

impl MpaEstimate {
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sweep,max_energy,argmax_index")?;
        for row in &self.trace {
            writeln!(out, "{},{},{}", row.sweep, row.max_energy, row.argmax_index)?;
        }
        Ok(())
    }
}

/// Deforms the straight path to `endpoint` until the sup stops improving and
/// reports the refined sup along the final path.
///
/// Converges when the sup drops by at most `c_tol |c|` over `window` sweeps,
/// or when no step reduces it further and the last accepted sweep gained at
/// most that much. `Stagnated` is returned only if the first sweep already
/// fails.
pub fn estimate_c<V: Variational + ?Sized>(
    problem: &V,
    endpoint: &[f64],
    opts: &MpaOptions,
) -> Result<MpaEstimate> {
    opts.validate()?;
    let mut path = init_path(problem, endpoint, opts.k)?;
    let (sup0, _, _) = path.sup_along(problem);
    let mut history = vec![sup0];
    let mut trace = vec![TraceRow {
        sweep: 0,
        max_energy: sup0,
        argmax_index: path.max_node().0,
    }];
    let mut step = opts.step;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        let out = deform(&path, problem, opts, step)?;
        if out.stagnant {
            // Descent gains have dropped below the resampling error of the
            // string. Without a single accepted sweep nothing was learned.
            if sweeps == 0 {
                return Err(Error::Stagnated {
                    sweeps,
                    max_energy: out.sup,
                });
            }
            // Exhausted descent counts as converged when the last accepted
            // sweep already gained less than the tolerance.
            let last_gain = history[history.len() - 2] - out.sup;
            converged = last_gain <= opts.c_tol * out.sup.abs();
            break;
        }
        path = out.path;
        sweeps += 1;
        step = (out.step * 1.5).min(opts.max_step);
        let sup = out.sup;
        history.push(sup);
        trace.push(TraceRow {
            sweep: sweeps,
            max_energy: sup,
            argmax_index: path.max_node().0,
        });
        if sweeps >= opts.window && history[sweeps - opts.window] - sup <= opts.c_tol * sup.abs() {
            converged = true;
            break;
        }
    }
    let (c_mpa, j, s) = path.sup_along(problem);
    let argmax_point = path.point_at(j, s);
    Ok(MpaEstimate {
        c_mpa,
        argmax_point,
        sweeps,
        converged,
        trace,
        path,
    })
}
