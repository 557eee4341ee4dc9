//! The level curve `I_λ = i_λ - λ`, its roots `λ* <= λ**`, the argmax set and
//! the max-min value, plus the scaling path `γ(λ)` built from a minimizer at
//! `λ = 1`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interp::{golden_max, lagrange_eval, Pchip};
use crate::problem::ProblemSpec;
use crate::variational::Variational;

/// Relative tolerance deciding which samples tie for the maximum of `I`.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LevelCurve {
    pub lambdas: Vec<f64>,
    pub i_values: Vec<f64>,
    /// `i_values[k] - lambdas[k]`, computed exactly once here.
    pub big_i: Vec<f64>,
    pub lambda_star: f64,
    pub lambda_star_star: f64,
    /// Sample indices in `(0, λ**)` attaining `max I` within [`TIE_TOL`].
    pub argmax_set: Vec<usize>,
    pub lambda_bar: f64,
    pub c_maxmin: f64,
    /// Number of sign changes of `I` between `> 0` and `<= 0` across the samples.
    pub sign_changes: usize,
    interp: Pchip,
}

/// Builds the level curve from `(λ, i_λ)` samples. The samples must be
/// strictly increasing in `λ`, start in the region `I > 0` and reach `I < 0`.
pub fn build_level_curve(lambdas: &[f64], i_values: &[f64]) -> Result<LevelCurve> {
    if lambdas.len() != i_values.len() {
        return Err(invalid("level curve: lambda and i sample counts differ"));
    }
    if lambdas.len() < 3 {
        return Err(invalid("level curve: need at least three samples"));
    }
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite()))
        || i_values.iter().any(|v| !v.is_finite())
    {
        return Err(invalid(
            "level curve: samples must be finite with positive lambda",
        ));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(
            "level curve: lambda samples must be strictly increasing",
        ));
    }
    let big_i: Vec<f64> = i_values.iter().zip(lambdas).map(|(i, l)| i - l).collect();
    let no_sign_change = || Error::NoSignChange {
        lambda_min: lambdas[0],
        lambda_max: *lambdas.last().unwrap(),
    };
    if !(big_i[0] > 0.0) {
        return Err(no_sign_change());
    }
    let k_star = big_i
        .iter()
        .position(|&v| v <= 0.0)
        .ok_or_else(no_sign_change)?;
    let k_star_star = big_i
        .iter()
        .position(|&v| v < 0.0)
        .ok_or_else(no_sign_change)?;

    let x: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let interp = Pchip::new(x.clone(), big_i.clone())?;

    let lambda_star = if big_i[k_star] == 0.0 {
        lambdas[k_star]
    } else {
        boundary(&interp, x[k_star - 1], x[k_star], |v| v <= 0.0).exp()
    };
    let lambda_star_star = boundary(&interp, x[k_star_star - 1], x[k_star_star], |v| v < 0.0)
        .exp()
        .max(lambda_star);

    let sign_changes = big_i
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count();

    // argmax among samples strictly inside (0, λ**)
    let inside: Vec<usize> = (0..lambdas.len())
        .filter(|&k| lambdas[k] < lambda_star_star)
        .collect();
    let i_max = inside
        .iter()
        .map(|&k| big_i[k])
        .fold(f64::NEG_INFINITY, f64::max);
    let tie = TIE_TOL * i_max.abs();
    let argmax_set: Vec<usize> = inside
        .iter()
        .copied()
        .filter(|&k| big_i[k] >= i_max - tie)
        .collect();

    let first = argmax_set[0];
    let run_end = argmax_set
        .iter()
        .zip(first..)
        .take_while(|(k, expected)| **k == *expected)
        .last()
        .map(|(k, _)| *k)
        .unwrap();
    let (lambda_bar, c_maxmin) = if run_end > first {
        (0.5 * (lambdas[first] + lambdas[run_end]), i_max)
    } else {
        refine_peak(&x, &big_i, first, lambda_star_star.ln())
    };

    Ok(LevelCurve {
        lambdas: lambdas.to_vec(),
        i_values: i_values.to_vec(),
        big_i,
        lambda_star,
        lambda_star_star,
        argmax_set,
        lambda_bar,
        c_maxmin,
        sign_changes,
        interp,
    })
}

/// Infimum of `{x in [a, b] : pred(interp(x))}` given `pred` fails at `a` and holds at `b`.
fn boundary(interp: &Pchip, mut a: f64, mut b: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if pred(interp.eval(mid)) {
            b = mid;
        } else {
            a = mid;
        }
    }
    b
}

/// Refines an isolated discrete maximum with a four-point cubic in `log λ`.
/// The monotone interpolant flattens at sampled extrema, so it cannot be used
/// for the peak itself.
fn refine_peak(x: &[f64], y: &[f64], k: usize, x_limit: f64) -> (f64, f64) {
    let len = x.len();
    if k == 0 || k + 1 >= len {
        return (x[k].exp(), y[k]);
    }
    let fourth = if k + 2 < len && (k < 2 || y[k + 1] >= y[k - 1]) {
        k + 2
    } else if k >= 2 {
        k - 2
    } else {
        return (x[k].exp(), y[k]);
    };
    let mut idx = [k - 1, k, k + 1, fourth];
    idx.sort_unstable();
    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let hi = x[k + 1].min(x_limit);
    let (xm, ym) = golden_max(x[k - 1], hi, 1e-12, |t| lagrange_eval(&xs, &ys, t));
    if ym >= y[k] {
        (xm.exp(), ym)
    } else {
        (x[k].exp(), y[k])
    }
}

impl LevelCurve {
    /// Interpolated `I(λ)` (monotone cubic in `log λ`).
    pub fn eval(&self, lambda: f64) -> f64 {
        self.interp.eval(lambda.ln())
    }

    /// True when `I` changes sign exactly once, which is when `λ* = λ**` is expected.
    pub fn single_crossing(&self) -> bool {
        self.sign_changes == 1
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "lambda,i,I")?;
        for k in 0..self.lambdas.len() {
            writeln!(
                out,
                "{},{},{}",
                self.lambdas[k], self.i_values[k], self.big_i[k]
            )?;
        }
        Ok(())
    }

    pub fn summary(&self, candidates: Option<LambdaBarCandidates>) -> LevelSummary {
        LevelSummary {
            lambda_star: self.lambda_star,
            lambda_star_star: self.lambda_star_star,
            lambda_bar: self.lambda_bar,
            c_maxmin: self.c_maxmin,
            printed_lambda_bar: candidates.and_then(|c| c.printed_formula),
            derived_lambda_bar: candidates.map(|c| c.derived_argmax),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub lambda_star: f64,
    pub lambda_star_star: f64,
    pub lambda_bar: f64,
    pub c_maxmin: f64,
    pub printed_lambda_bar: Option<f64>,
    pub derived_lambda_bar: Option<f64>,
}

/// `γ(λ)`: the minimizer `v` at level 1 carried to level `λ` by the problem's
/// group action (dilation by `λ^{1/n}` or amplitude `λ^{1/p*}`, `λ^{1/q}` for toys).
pub fn scaling_path<V: Variational + ?Sized>(
    problem: &V,
    v: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!(
            "scaling path: lambda must be positive, got {lambda}"
        )));
    }
    problem.transport(v, 1.0, lambda)
}

/// `(λ, F(γ(λ)))` for each requested level.
pub fn evaluate_f_along_path<V: Variational + ?Sized>(
    problem: &V,
    v: &[f64],
    lambdas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    lambdas
        .par_iter()
        .map(|&l| Ok((l, problem.eval_f(&scaling_path(problem, v, l)?))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBarCandidates {
    /// The closed-form maximizer as printed for the problem family, when one exists.
    pub printed_formula: Option<f64>,
    /// The analytic maximizer of `i_1 λ^α - λ` for the family's scaling exponent.
    pub derived_argmax: f64,
}

/// Both closed-form candidates for `λ̄` given `i_1`.
pub fn closed_form_lambda_bar(spec: &ProblemSpec, i_1: f64) -> LambdaBarCandidates {
    let alpha = spec.level_exponent();
    let derived_argmax = power_law_argmax(i_1, alpha);
    let printed_formula = spec.as_radial().map(|r| {
        let (p, n, pstar) = (r.p(), r.n() as f64, r.pstar());
        if r.is_hardy() {
            i_1.powf(n / p) * ((n - p) / p).powf(n / p)
        } else {
            (i_1 * p / pstar).powf(pstar / (pstar - p))
        }
    });
    LambdaBarCandidates {
        printed_formula,
        derived_argmax,
    }
}

/// Least-squares fit of `y = C λ^α` in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub coefficient: f64,
    pub exponent: f64,
}

pub fn fit_power_law(lambdas: &[f64], values: &[f64]) -> Result<PowerLawFit> {
    if lambdas.len() != values.len() || lambdas.len() < 2 {
        return Err(invalid("power-law fit needs at least two paired samples"));
    }
    if lambdas.iter().chain(values).any(|&v| !(v > 0.0)) {
        return Err(invalid("power-law fit needs positive samples"));
    }
    let n = lambdas.len() as f64;
    let xs: Vec<f64> = lambdas.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let exponent = sxy / sxx;
    Ok(PowerLawFit {
        coefficient: (my - exponent * mx).exp(),
        exponent,
    })
}

/// Maximizer of `c λ^α - λ` for `0 < α < 1`.
pub fn power_law_argmax(c: f64, alpha: f64) -> f64 {
    (alpha * c).powf(1.0 / (1.0 - alpha))
}

/// Positive root of `c λ^α - λ`.
pub fn power_law_root(c: f64, alpha: f64) -> f64 {
    c.powf(1.0 / (1.0 - alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constrained::log_spaced;
    use crate::problem::{ProblemConfig, Variant};
    use crate::toy::ToyProblem;

    fn toy_curve(q: f64) -> LevelCurve {
        let lambdas = log_spaced(1e-3, 4.0, 200).unwrap();
        let toy = ToyProblem::new(2, q).unwrap();
        let i: Vec<f64> = lambdas.iter().map(|&l| toy.i_lambda(l).unwrap()).collect();
        build_level_curve(&lambdas, &i).unwrap()
    }

    #[test]
    fn toy_q4_curve() {
        let c = toy_curve(4.0);
        assert!((c.lambda_star - 1.0).abs() < 1e-4);
        assert!((c.lambda_star_star - 1.0).abs() < 1e-4);
        assert!((c.lambda_bar - 0.25).abs() < 1e-4);
        assert!((c.c_maxmin - 0.25).abs() < 1e-6);
        assert!(c.single_crossing());
    }

    #[test]
    fn toy_curves_match_closed_form() {
        for q in [2.5, 3.0, 4.0, 6.0] {
            let c = toy_curve(q);
            let exact = ToyProblem::new(2, q).unwrap().closed_form();
            assert!((c.c_maxmin - exact.c).abs() < 1e-6, "q = {q}");
            assert!(
                (c.lambda_bar - exact.lambda_bar).abs() < 1e-4 * exact.lambda_bar.max(1.0),
                "q = {q}"
            );
        }
    }

    #[test]
    fn defining_identity_is_exact() {
        let c = toy_curve(3.0);
        for k in 0..c.lambdas.len() {
            assert_eq!(c.big_i[k], c.i_values[k] - c.lambdas[k]);
        }
        assert!(c.lambda_star <= c.lambda_star_star);
        for k in 0..c.lambdas.len() {
            if c.lambdas[k] < c.lambda_star_star {
                assert!(c.c_maxmin >= c.big_i[k]);
            }
        }
    }

    #[test]
    fn plateau_reports_full_argmax_set() {
        let lambdas: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let big_i = [1.0, 2.0, 3.0, 3.0, 3.0, 3.0, 2.0, 1.0, -1.0, -2.0];
        let i: Vec<f64> = big_i.iter().zip(&lambdas).map(|(b, l)| b + l).collect();
        let c = build_level_curve(&lambdas, &i).unwrap();
        assert_eq!(c.argmax_set, vec![2, 3, 4, 5]);
        assert_eq!(c.lambda_bar, 4.5);
        assert_eq!(c.c_maxmin, 3.0);
    }

    #[test]
    fn zero_touching_separates_roots() {
        // I touches zero at λ = 3 and goes negative only after λ = 5
        let lambdas: Vec<f64> = (1..=7).map(|k| k as f64).collect();
        let big_i = [1.0, 0.5, 0.0, 0.4, 0.1, -0.5, -1.0];
        let i: Vec<f64> = big_i.iter().zip(&lambdas).map(|(b, l)| b + l).collect();
        let c = build_level_curve(&lambdas, &i).unwrap();
        assert_eq!(c.lambda_star, 3.0);
        assert!(c.lambda_star_star > 5.0 && c.lambda_star_star < 6.0);
        assert!(!c.single_crossing());
    }

    #[test]
    fn missing_sign_change_asks_for_wider_sweep() {
        let lambdas = log_spaced(1e-3, 0.5, 20).unwrap();
        let i: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
        let err = build_level_curve(&lambdas, &i).unwrap_err();
        assert!(matches!(err, Error::NoSignChange { .. }));
        assert!(err.to_string().contains("widen"));
    }

    #[test]
    fn rejects_non_monotone_lambdas() {
        let err = build_level_curve(&[1.0, 0.5, 2.0], &[1.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn lambda_bar_formulas() {
        let mut cfg = ProblemConfig::new(Variant::CriticalBounded);
        cfg.grid = Some(crate::problem::GridConfig {
            radius: 1.0,
            m: 40,
            stretch: 1.0,
        });
        let critical = ProblemSpec::from_config(&cfg).unwrap();
        let c = closed_form_lambda_bar(&critical, 1.0);
        assert!((c.printed_formula.unwrap() - 0.6f64.powf(2.5)).abs() < 1e-14);
        assert!((c.derived_argmax - 0.278_854_8).abs() < 1e-6);

        let mut cfg = ProblemConfig::new(Variant::HardySubcritical);
        cfg.n = Some(4);
        cfg.grid = Some(crate::problem::GridConfig {
            radius: 5.0,
            m: 40,
            stretch: 1.0,
        });
        let hardy = ProblemSpec::from_config(&cfg).unwrap();
        let c = closed_form_lambda_bar(&hardy, 1.0);
        assert!((c.printed_formula.unwrap() - 1.0).abs() < 1e-14);
        assert!((c.derived_argmax - 0.25).abs() < 1e-14);
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let lambdas = log_spaced(0.1, 10.0, 30).unwrap();
        let values: Vec<f64> = lambdas.iter().map(|l| 2.5 * l.powf(0.6)).collect();
        let fit = fit_power_law(&lambdas, &values).unwrap();
        assert!((fit.exponent - 0.6).abs() < 1e-12);
        assert!((fit.coefficient - 2.5).abs() < 1e-12);
        let lb = power_law_argmax(2.5, 0.6);
        let f = |l: f64| 2.5 * l.powf(0.6) - l;
        assert!(f(lb) > f(lb * 1.001) && f(lb) > f(lb * 0.999));
        assert!(f(power_law_root(2.5, 0.6)).abs() < 1e-12);
    }
}
