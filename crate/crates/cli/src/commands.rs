//! The six commands. Each validates its context, runs the solvers, writes
//! its artifacts into the output directory and returns its summary.

use std::io::Write;

use mpass::{
    build_level_curve, closed_form_candidates, continuation_sweep, el_residual, estimate_c,
    evaluate_f_along_path, fit_power_law, log_spaced, minimize_on_level, pick_solution_scale,
    power_law_argmax, power_law_root, scaling_path, Candidate, LevelCurve, MinimizeResult,
    PowerLawFit, ProblemConfig, ProblemSpec, SweepEntry, SweepOptions, TraceRow, Variational,
    VerificationReport, REGULARIZATION_DELTA,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Context;
use crate::error::CliError;
use crate::output::OutputDir;

/// Relative agreement demanded before a closed-form `λ̄` is called a match.
pub const FORMULA_MATCH_TOL: f64 = 0.02;

/// Number of levels in `(0, λ**]` scanned for crossings of the final path.
pub const CROSSING_LEVELS: usize = 100;

/// Resolution of the toy brute-force scan.
pub const TOY_BRUTEFORCE_RESOLUTION: usize = 100_000;

/// Header shared by every JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub command: String,
    pub problem: ProblemConfig,
    pub seed: u64,
    #[serde(flatten)]
    pub body: T,
}

fn envelope<T>(ctx: &Context, command: &str, body: T) -> Envelope<T> {
    Envelope {
        command: command.to_string(),
        problem: ctx.spec.to_config(),
        seed: ctx.config.seed,
        body,
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn write_state(
    out: &OutputDir,
    name: &str,
    spec: &ProblemSpec,
    values: &[f64],
) -> Result<(), CliError> {
    match spec.as_radial() {
        Some(r) => {
            let gf = r.grid_function(values.to_vec())?;
            out.write_with(name, |w| gf.write_csv(w))
        }
        None => out.write_with(name, |w| {
            writeln!(w, "index,value")?;
            for (i, v) in values.iter().enumerate() {
                writeln!(w, "{i},{v}")?;
            }
            Ok(())
        }),
    }
}

fn write_grid(out: &OutputDir, spec: &ProblemSpec) -> Result<(), CliError> {
    if let Some(r) = spec.as_radial() {
        out.write_json("grid.json", &r.grid().record())?;
    }
    Ok(())
}

/// A positive random starting profile (radial) or a random vector (toy).
pub fn random_start(spec: &ProblemSpec, rng: &mut impl Rng) -> Vec<f64> {
    match spec.as_radial() {
        Some(r) => {
            let bumps: Vec<(f64, f64)> = (0..3)
                .map(|_| (rng.gen_range(0.5..1.5), rng.gen_range(0.3..3.0)))
                .collect();
            let radius = r.grid().radius();
            let mut v: Vec<f64> = r
                .grid()
                .nodes()
                .iter()
                .map(|&x| {
                    let s = x / radius.min(3.0);
                    bumps.iter().map(|(a, b)| a * (-b * s * s).exp()).sum()
                })
                .collect();
            if r.is_dirichlet() {
                let edge = *v.last().unwrap();
                v.iter_mut().for_each(|x| *x -= edge);
            }
            v
        }
        None => (0..spec.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

// ---------------------------------------------------------------- minimize

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeSummary {
    #[serde(flatten)]
    pub result: MinimizeResult,
    /// Whether the minimizer has decayed at the truncation radius; only for
    /// the whole-space problem.
    pub tail_ok: Option<bool>,
    /// `i_value` reached from each random start.
    pub multistart_i_values: Vec<f64>,
    /// Largest relative deviation of a random start from `i_value`.
    pub multistart_spread: Option<f64>,
}

pub fn cmd_minimize(
    ctx: &Context,
    out: &OutputDir,
    lambda: f64,
) -> Result<Envelope<MinimizeSummary>, CliError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CliError::Validation(format!(
            "--lambda must be positive, got {lambda}"
        )));
    }
    let spec = &ctx.spec;
    let result = minimize_on_level(spec, lambda, &spec.seed(), &ctx.minimize)?;
    write_grid(out, spec)?;
    write_state(out, "minimizer.csv", spec, &result.minimizer)?;

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
    let starts: Vec<Vec<f64>> = (0..ctx.config.multistart)
        .map(|_| random_start(spec, &mut rng))
        .collect();
    let multistart_i_values = starts
        .iter()
        .map(|s| Ok(minimize_on_level(spec, lambda, s, &ctx.minimize)?.i_value))
        .collect::<Result<Vec<f64>, CliError>>()?;
    let multistart_spread = multistart_i_values
        .iter()
        .map(|&i| relative(i, result.i_value))
        .reduce(f64::max);

    let tail_ok = spec
        .as_radial()
        .filter(|r| r.is_hardy())
        .map(|r| {
            r.grid_function(result.minimizer.clone())
                .map(|g| g.tail_check(1e-8))
        })
        .transpose()?;
    let converged = result.converged;
    let summary = envelope(
        ctx,
        "minimize",
        MinimizeSummary {
            result,
            tail_ok,
            multistart_i_values,
            multistart_spread,
        },
    );
    out.write_json("minimize.json", &summary)?;
    if !converged {
        return Err(CliError::Convergence(format!(
            "minimization at lambda = {lambda} stopped after {} iterations with residual {:e}",
            summary.body.result.iterations, summary.body.result.residual
        )));
    }
    Ok(summary)
}

// ---------------------------------------------------------------- sweep

/// Minimizer at level 1; every pipeline starts here.
fn level_one(ctx: &Context) -> Result<MinimizeResult, CliError> {
    let r = minimize_on_level(&ctx.spec, 1.0, &ctx.spec.seed(), &ctx.minimize)?;
    if !r.converged {
        return Err(CliError::Convergence(format!(
            "minimization at level 1 stopped after {} iterations with residual {:e}",
            r.iterations, r.residual
        )));
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub lambda: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub count: usize,
    pub warm_start: bool,
    pub converged_count: usize,
    pub failures: Vec<SweepFailure>,
    /// Levels whose solve stopped short of the tolerances (kept in the curve).
    pub unconverged: Vec<f64>,
    /// Levels whose minimizer moved much farther than at the previous step.
    pub jumps: Vec<f64>,
    pub max_step_distance: Option<f64>,
    pub fit: Option<PowerLawFit>,
    pub expected_exponent: f64,
    pub lambda_star: Option<f64>,
    pub lambda_star_star: Option<f64>,
    pub lambda_bar: Option<f64>,
    pub c_maxmin: Option<f64>,
}

struct SweepRun {
    summary: SweepSummary,
    curve: Result<LevelCurve, mpass::Error>,
    lambdas: Vec<f64>,
    i_values: Vec<f64>,
}

fn run_sweep(ctx: &Context, out: &OutputDir, root_estimate: f64) -> Result<SweepRun, CliError> {
    let (lo, hi) = ctx.config.sweep.bounds(root_estimate)?;
    let levels = log_spaced(lo, hi, ctx.config.sweep.count)?;
    let sweep_opts = SweepOptions {
        warm_start: ctx.config.sweep.warm_start,
        ..SweepOptions::default()
    };
    let entries = continuation_sweep(&ctx.spec, &levels, &ctx.minimize, &sweep_opts)?;
    out.write_with("sweep.csv", |w| write_sweep_csv(w, &entries))?;

    let ok: Vec<&MinimizeResult> = entries.iter().filter_map(SweepEntry::result).collect();
    let lambdas: Vec<f64> = ok.iter().map(|r| r.level).collect();
    let i_values: Vec<f64> = ok.iter().map(|r| r.i_value).collect();
    let curve = build_level_curve(&lambdas, &i_values);
    if let Ok(c) = &curve {
        out.write_with("level_curve.csv", |w| c.write_csv(w))?;
    }
    let fit = fit_power_law(&lambdas, &i_values).ok();
    let summary = SweepSummary {
        lambda_min: lo,
        lambda_max: hi,
        count: levels.len(),
        warm_start: sweep_opts.warm_start,
        converged_count: ok.iter().filter(|r| r.converged).count(),
        failures: entries
            .iter()
            .filter_map(|e| {
                e.outcome.as_ref().err().map(|err| SweepFailure {
                    lambda: e.lambda,
                    message: err.to_string(),
                })
            })
            .collect(),
        unconverged: ok
            .iter()
            .filter(|r| !r.converged)
            .map(|r| r.level)
            .collect(),
        jumps: entries
            .iter()
            .filter(|e| e.jump)
            .map(|e| e.lambda)
            .collect(),
        max_step_distance: entries
            .iter()
            .filter_map(|e| e.step_distance)
            .reduce(f64::max),
        fit,
        expected_exponent: ctx.spec.level_exponent(),
        lambda_star: curve.as_ref().ok().map(|c| c.lambda_star),
        lambda_star_star: curve.as_ref().ok().map(|c| c.lambda_star_star),
        lambda_bar: curve.as_ref().ok().map(|c| c.lambda_bar),
        c_maxmin: curve.as_ref().ok().map(|c| c.c_maxmin),
    };
    Ok(SweepRun {
        summary,
        curve,
        lambdas,
        i_values,
    })
}

fn write_sweep_csv<W: Write>(mut w: W, entries: &[SweepEntry]) -> std::io::Result<()> {
    writeln!(w, "lambda,i_value,multiplier,iterations,converged,residual")?;
    for e in entries {
        match e.result() {
            Some(r) => writeln!(
                w,
                "{},{},{},{},{},{}",
                e.lambda, r.i_value, r.multiplier, r.iterations, r.converged, r.residual
            )?,
            None => writeln!(w, "{},NaN,NaN,0,false,NaN", e.lambda)?,
        }
    }
    Ok(())
}

fn root_estimate(ctx: &Context, i_1: f64) -> f64 {
    power_law_root(i_1, ctx.spec.level_exponent())
}

pub fn cmd_sweep(ctx: &Context, out: &OutputDir) -> Result<Envelope<SweepSummary>, CliError> {
    let sweep = &ctx.config.sweep;
    let estimate = if sweep.lambda_min.is_some() && sweep.lambda_max.is_some() {
        1.0
    } else {
        root_estimate(ctx, level_one(ctx)?.i_value)
    };
    let run = run_sweep(ctx, out, estimate)?;
    let summary = envelope(ctx, "sweep", run.summary);
    out.write_json("sweep.json", &summary)?;
    run.curve?;
    Ok(summary)
}

// ---------------------------------------------------------------- maxmin

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxminSummary {
    pub i_1: f64,
    pub lambda_star: f64,
    pub lambda_star_star: f64,
    pub lambda_bar: f64,
    pub c_maxmin: f64,
    /// Closed-form `λ̄` as printed for the problem family (absent for toys).
    pub printed_lambda_bar: Option<f64>,
    /// Maximizer of `i_1 λ^α - λ`.
    pub derived_lambda_bar: f64,
    pub printed_formula_matches: Option<bool>,
    pub derived_formula_matches: bool,
    /// Sampled levels tying for the maximum of `I`.
    pub argmax_lambdas: Vec<f64>,
    pub single_crossing: bool,
    pub fit: PowerLawFit,
    pub expected_exponent: f64,
    /// Maximizer of the fitted `C λ^a - λ`.
    pub fitted_argmax: f64,
    /// `i_1^{1/(1-α)}`, the root predicted by the scaling law.
    pub lambda_star_star_scaling: f64,
    /// Largest `F(γ(λ))` along the scaling path over the sweep.
    pub path_max_energy: f64,
    pub sweep: SweepSummary,
}

struct MaxminRun {
    summary: MaxminSummary,
    level_one: MinimizeResult,
}

fn maxmin_pipeline(ctx: &Context, out: &OutputDir) -> Result<MaxminRun, CliError> {
    let spec = &ctx.spec;
    let v = level_one(ctx)?;
    let i_1 = v.i_value;
    let run = run_sweep(ctx, out, root_estimate(ctx, i_1))?;
    let curve = run.curve?;
    let fit = fit_power_law(&run.lambdas, &run.i_values)?;
    let bars = mpass::closed_form_lambda_bar(spec, i_1);

    let path = evaluate_f_along_path(spec, &v.minimizer, &run.lambdas)?;
    out.write_with("path_energy.csv", |w| {
        writeln!(w, "lambda,F")?;
        for (l, f) in &path {
            writeln!(w, "{l},{f}")?;
        }
        Ok(())
    })?;
    write_grid(out, spec)?;
    write_state(out, "level_one_minimizer.csv", spec, &v.minimizer)?;

    let summary = MaxminSummary {
        i_1,
        lambda_star: curve.lambda_star,
        lambda_star_star: curve.lambda_star_star,
        lambda_bar: curve.lambda_bar,
        c_maxmin: curve.c_maxmin,
        printed_lambda_bar: bars.printed_formula,
        derived_lambda_bar: bars.derived_argmax,
        printed_formula_matches: bars
            .printed_formula
            .map(|l| relative(l, curve.lambda_bar) <= FORMULA_MATCH_TOL),
        derived_formula_matches: relative(bars.derived_argmax, curve.lambda_bar)
            <= FORMULA_MATCH_TOL,
        argmax_lambdas: curve.argmax_set.iter().map(|&k| curve.lambdas[k]).collect(),
        single_crossing: curve.single_crossing(),
        fitted_argmax: power_law_argmax(fit.coefficient, fit.exponent),
        fit,
        expected_exponent: spec.level_exponent(),
        lambda_star_star_scaling: root_estimate(ctx, i_1),
        path_max_energy: path.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
        sweep: run.summary,
    };
    Ok(MaxminRun {
        summary,
        level_one: v,
    })
}

pub fn cmd_maxmin(ctx: &Context, out: &OutputDir) -> Result<Envelope<MaxminSummary>, CliError> {
    let run = maxmin_pipeline(ctx, out)?;
    let summary = envelope(ctx, "maxmin", run.summary);
    out.write_json("maxmin.json", &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- mpa

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub c_maxmin: f64,
    pub c_mpa: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpaSummary {
    pub c_mpa: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Level of the path endpoint on the scaling path, `2 λ**`.
    pub endpoint_lambda: f64,
    pub endpoint_energy: f64,
    /// Sup along the initial straight path.
    pub initial_max_energy: f64,
    /// Starts at `0`, ends below zero energy, endpoint untouched.
    pub admissible: bool,
    pub levels_checked: usize,
    /// Levels in `(0, λ**]` not crossed by the final path.
    pub uncrossed_levels: Vec<f64>,
    pub c_maxmin: f64,
    pub relative_gap: f64,
}

struct MpaRun {
    summary: MpaSummary,
    maxmin: MaxminSummary,
}

fn mpa_pipeline(ctx: &Context, out: &OutputDir) -> Result<MpaRun, CliError> {
    let spec = &ctx.spec;
    let mm = maxmin_pipeline(ctx, out)?;
    out.write_json("maxmin.json", &envelope(ctx, "maxmin", mm.summary.clone()))?;

    let lambda_ss = mm.summary.lambda_star_star;
    let endpoint_lambda = 2.0 * lambda_ss;
    let endpoint = scaling_path(spec, &mm.level_one.minimizer, endpoint_lambda)?;
    let endpoint_energy = spec.eval_f(&endpoint);
    let est = estimate_c(spec, &endpoint, &ctx.mpa)?;
    out.write_with("mpa_trace.csv", |w| est.write_trace_csv(w))?;
    write_state(out, "saddle.csv", spec, &est.argmax_point)?;

    let levels: Vec<f64> = (1..=CROSSING_LEVELS)
        .map(|k| lambda_ss * k as f64 / CROSSING_LEVELS as f64)
        .collect();
    let last = est.path.points().last().unwrap();
    let admissible = est.path.is_admissible(spec, 0.0) && last.as_slice() == endpoint.as_slice();
    let c_maxmin = mm.summary.c_maxmin;
    let summary = MpaSummary {
        c_mpa: est.c_mpa,
        sweeps: est.sweeps,
        converged: est.converged,
        endpoint_lambda,
        endpoint_energy,
        initial_max_energy: est
            .trace
            .first()
            .map(|r: &TraceRow| r.max_energy)
            .unwrap_or(f64::NAN),
        admissible,
        levels_checked: levels.len(),
        uncrossed_levels: est.path.uncrossed_levels(spec, &levels),
        c_maxmin,
        relative_gap: relative(est.c_mpa, c_maxmin),
    };
    out.write_json(
        "comparison.json",
        &Comparison {
            c_maxmin,
            c_mpa: est.c_mpa,
            relative_gap: summary.relative_gap,
        },
    )?;
    Ok(MpaRun {
        summary,
        maxmin: mm.summary,
    })
}

pub fn cmd_mpa(ctx: &Context, out: &OutputDir) -> Result<Envelope<MpaSummary>, CliError> {
    let run = mpa_pipeline(ctx, out)?;
    let summary = envelope(ctx, "mpa", run.summary);
    out.write_json("mpa.json", &summary)?;
    if !summary.body.converged {
        return Err(CliError::Convergence(format!(
            "path deformation stopped after {} sweeps without levelling off (sup {})",
            summary.body.sweeps, summary.body.c_mpa
        )));
    }
    Ok(summary)
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    #[serde(flatten)]
    pub report: VerificationReport,
    pub grad_tol: f64,
    /// `10 × grad_tol`, the bound expected at the unit-multiplier state.
    pub residual_bound: f64,
    pub residual_within_bound: bool,
    pub derived_lambda_bar: f64,
    /// Relative distance between the unit-multiplier level and `derived_lambda_bar`.
    pub unit_vs_derived: f64,
    /// Label of the candidate with the smallest residual.
    pub best_candidate: String,
}

pub fn cmd_verify(ctx: &Context, out: &OutputDir) -> Result<Envelope<VerifySummary>, CliError> {
    let spec = &ctx.spec;
    let v = level_one(ctx)?;
    let scale = pick_solution_scale(spec, &v.minimizer, &ctx.minimize)?;
    let mut candidates = closed_form_candidates(spec, &v.minimizer, v.i_value, &ctx.minimize)?;
    candidates.push(Candidate::of(spec, "unit-multiplier", &scale.state)?);
    write_grid(out, spec)?;
    write_state(out, "solution.csv", spec, &scale.state)?;

    let derived = mpass::closed_form_lambda_bar(spec, v.i_value).derived_argmax;
    let best_candidate = candidates
        .iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .map(|c| c.label.clone())
        .unwrap_or_default();
    let regularization_delta = spec
        .as_radial()
        .filter(|r| r.p() < 2.0)
        .map(|_| REGULARIZATION_DELTA);
    let residual = el_residual(spec, &scale.state);
    let bound = 10.0 * ctx.minimize.grad_tol;
    let summary = envelope(
        ctx,
        "verify",
        VerifySummary {
            report: VerificationReport {
                theta: scale.theta,
                residual,
                lambda_unit_multiplier: scale.lambda_unit_multiplier,
                candidates,
                regularization_delta,
            },
            grad_tol: ctx.minimize.grad_tol,
            residual_bound: bound,
            residual_within_bound: residual <= bound,
            derived_lambda_bar: derived,
            unit_vs_derived: relative(scale.lambda_unit_multiplier, derived),
            best_candidate,
        },
    );
    out.write_json("verify.json", &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- toy

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToySummary {
    pub q: f64,
    pub d: usize,
    pub c_closed_form: f64,
    pub lambda_bar_closed_form: f64,
    pub lambda_star_star_closed_form: f64,
    pub c_bruteforce: f64,
    pub c_maxmin: f64,
    pub lambda_bar_maxmin: f64,
    pub lambda_star_star_maxmin: f64,
    pub c_mpa: f64,
    pub mpa_converged: bool,
    pub maxmin_error: f64,
    pub mpa_error: f64,
}

pub fn cmd_toy(ctx: &Context, out: &OutputDir) -> Result<Envelope<ToySummary>, CliError> {
    let toy = *ctx
        .spec
        .as_toy()
        .ok_or_else(|| CliError::Validation("the toy command needs a toy problem block".into()))?;
    let closed = toy.closed_form();
    let c_bruteforce = toy.c_bruteforce(TOY_BRUTEFORCE_RESOLUTION)?;
    let run = mpa_pipeline(ctx, out)?;
    let summary = envelope(
        ctx,
        "toy",
        ToySummary {
            q: toy.q,
            d: toy.d,
            c_closed_form: closed.c,
            lambda_bar_closed_form: closed.lambda_bar,
            lambda_star_star_closed_form: closed.lambda_star_star,
            c_bruteforce,
            c_maxmin: run.maxmin.c_maxmin,
            lambda_bar_maxmin: run.maxmin.lambda_bar,
            lambda_star_star_maxmin: run.maxmin.lambda_star_star,
            c_mpa: run.summary.c_mpa,
            mpa_converged: run.summary.converged,
            maxmin_error: (run.maxmin.c_maxmin - closed.c).abs(),
            mpa_error: (run.summary.c_mpa - closed.c).abs(),
        },
    );
    out.write_json("toy.json", &summary)?;
    Ok(summary)
}
