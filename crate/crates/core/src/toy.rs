//! `X = ℝ^d`, `T(u) = ‖u‖²`, `U(u) = ‖u‖^q`: every quantity of the max-min
//! picture is available in closed form, so these instances serve as exact
//! oracles for the numerical engines.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::ScalingKind;
use crate::variational::{homogeneous_amplitude, Variational};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyProblem {
    pub d: usize,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyClosedForm {
    pub lambda_star: f64,
    pub lambda_star_star: f64,
    pub lambda_bar: f64,
    pub c: f64,
}

impl ToyProblem {
    pub fn new(d: usize, q: f64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("toy: dimension must be at least 1"));
        }
        if !(q.is_finite() && q > 2.0) {
            return Err(invalid(format!("toy: exponent q must exceed 2, got {q}")));
        }
        Ok(Self { d, q })
    }

    /// `i_λ = λ^{2/q}`: the minimum of `‖u‖²` over the sphere `‖u‖ = λ^{1/q}`.
    pub fn i_lambda(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(invalid(format!(
                "toy: lambda must be non-negative, got {lambda}"
            )));
        }
        Ok(lambda.powf(2.0 / self.q))
    }

    pub fn closed_form(&self) -> ToyClosedForm {
        let q = self.q;
        let lambda_bar = (2.0 / q).powf(q / (q - 2.0));
        ToyClosedForm {
            lambda_star: 1.0,
            lambda_star_star: 1.0,
            lambda_bar,
            c: lambda_bar.powf(2.0 / q) - lambda_bar,
        }
    }

    /// Mountain-pass level by a 1-D scan of `r² - r^q` from `0` to the first
    /// radius where it turns negative. `F` depends on `‖u‖` only, so the
    /// radial segment is an optimal path and this is the definition
    /// restricted to it.
    pub fn c_bruteforce(&self, resolution: usize) -> Result<f64> {
        if resolution < 100 {
            return Err(invalid("toy: brute-force resolution must be at least 100"));
        }
        let f = |r: f64| r * r - r.powf(self.q);
        // bracket the first sign change outward, then bisect it
        let mut hi = 1e-3;
        while f(hi) >= 0.0 {
            hi *= 1.5;
        }
        let mut lo = hi / 1.5;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let r_end = hi;
        Ok((0..=resolution)
            .map(|k| f(r_end * k as f64 / resolution as f64))
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// A point of norm `r` along the first axis.
    pub fn point(&self, r: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.d];
        v[0] = r;
        v
    }
}

pub fn toy_i_lambda(problem: &ToyProblem, lambda: f64) -> Result<f64> {
    problem.i_lambda(lambda)
}

pub fn toy_closed_form(problem: &ToyProblem) -> ToyClosedForm {
    problem.closed_form()
}

pub fn toy_c_bruteforce(problem: &ToyProblem, resolution: usize) -> Result<f64> {
    problem.c_bruteforce(resolution)
}

fn norm2(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum()
}

impl Variational for ToyProblem {
    fn dim(&self) -> usize {
        self.d
    }

    fn eval_t(&self, u: &[f64]) -> f64 {
        norm2(u)
    }

    fn eval_u(&self, u: &[f64]) -> f64 {
        norm2(u).powf(0.5 * self.q)
    }

    fn grad_t(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|v| 2.0 * v).collect()
    }

    fn grad_u(&self, u: &[f64]) -> Vec<f64> {
        let k = self.q * norm2(u).powf(0.5 * self.q - 1.0);
        u.iter().map(|v| k * v).collect()
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn retract(&self, u: &[f64], level: f64) -> Result<Vec<f64>> {
        let beta =
            homogeneous_amplitude(self.eval_u(u), level, self.q).ok_or(Error::Infeasible {
                level,
                reason: "cannot rescale the origin or reach a non-positive level".into(),
            })?;
        Ok(u.iter().map(|v| beta * v).collect())
    }

    fn action(&self) -> ScalingKind {
        ScalingKind::Amplitude
    }

    fn transport(&self, v: &[f64], from: f64, to: f64) -> Result<Vec<f64>> {
        if !(from > 0.0 && to > 0.0) {
            return Err(invalid("toy: levels must be positive"));
        }
        let beta = (to / from).powf(1.0 / self.q);
        Ok(v.iter().map(|x| beta * x).collect())
    }

    fn seed(&self) -> Vec<f64> {
        let s = 1.0 / (self.d as f64).sqrt();
        vec![s; self.d]
    }

    fn level_exponent(&self) -> f64 {
        2.0 / self.q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(q: f64) -> ToyProblem {
        ToyProblem::new(2, q).unwrap()
    }

    #[test]
    fn i_lambda_values() {
        assert_eq!(toy(4.0).i_lambda(1.0).unwrap(), 1.0);
        assert!((toy(4.0).i_lambda(0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!(toy(4.0).i_lambda(1e-12).unwrap() < 1e-5);
        assert!(toy(4.0).i_lambda(-1.0).is_err());
    }

    #[test]
    fn closed_forms() {
        let c4 = toy(4.0).closed_form();
        assert_eq!(c4.lambda_star_star, 1.0);
        assert!((c4.lambda_bar - 0.25).abs() < 1e-15);
        assert!((c4.c - 0.25).abs() < 1e-15);
        let c3 = toy(3.0).closed_form();
        assert!((c3.lambda_bar - 8.0 / 27.0).abs() < 1e-15);
        assert!((c3.c - 4.0 / 27.0).abs() < 1e-15);
        let near = [2.1, 2.01].map(|q| toy(q).closed_form().c);
        assert!(near[1] < near[0] && near[0] < 0.05);
    }

    #[test]
    fn brute_force_matches_closed_form() {
        assert!((toy(4.0).c_bruteforce(100_000).unwrap() - 0.25).abs() < 1e-8);
        assert!((toy(3.0).c_bruteforce(100_000).unwrap() - 4.0 / 27.0).abs() < 1e-8);
        for q in [2.5, 3.0, 4.0, 6.0] {
            let res = 100_000;
            let diff = (toy(q).c_bruteforce(res).unwrap() - toy(q).closed_form().c).abs();
            assert!(diff < 1e-6, "q = {q}");
            assert!(diff <= 1.0 / (res as f64).powi(2), "q = {q}: {diff:e}");
        }
        assert!(toy(4.0).c_bruteforce(10).is_err());
    }

    #[test]
    fn level_curve_sign_structure() {
        let p = toy(4.0);
        let big_i = |l: f64| p.i_lambda(l).unwrap() - l;
        let mut prev = 0.0;
        for k in 1..100 {
            let l = k as f64 * 0.01;
            let i = p.i_lambda(l).unwrap();
            assert!(i > prev);
            prev = i;
            assert!(big_i(l) > 0.0);
        }
        assert_eq!(big_i(1.0), 0.0);
        assert!(big_i(1.01) < 0.0);
    }

    #[test]
    fn dimension_independent() {
        let values: Vec<_> = [1, 2, 5]
            .iter()
            .map(|&d| {
                let p = ToyProblem::new(d, 3.0).unwrap();
                (
                    p.closed_form().c,
                    p.c_bruteforce(1000).unwrap(),
                    p.eval_f(&p.point(0.5)),
                )
            })
            .collect();
        assert!(values.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ToyProblem::new(0, 3.0).is_err());
        assert!(ToyProblem::new(2, 2.0).is_err());
    }
}
