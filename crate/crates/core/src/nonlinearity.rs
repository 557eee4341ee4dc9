//! The model nonlinearity `g(s) = -m s + |s|^{q-2} s` with primitive
//! `G(s) = -m s²/2 + |s|^q / q`.

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    m: f64,
    q: f64,
    xi0: f64,
}

/// Sampled evidence that the structural conditions on `g` hold.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConditionReport {
    pub odd: bool,
    /// `max g(s)/s` over `0 < |s| <= s_small`, must be `<= -m/2`.
    pub small_ratio: f64,
    pub s_small: f64,
    /// `|g(s)| / s^{p*-1}` at `s_large`.
    pub large_ratio: f64,
    pub s_large: f64,
    pub xi0: f64,
    pub g_xi0: f64,
}

impl Nonlinearity {
    pub fn new(m: f64, q: f64) -> Result<Self> {
        if !(m.is_finite() && m > 0.0) {
            return Err(invalid(format!(
                "nonlinearity: m must be positive, got {m}"
            )));
        }
        if !(q.is_finite() && q > 2.0) {
            return Err(invalid(format!("nonlinearity: q must exceed 2, got {q}")));
        }
        let mut nl = Self {
            m,
            q,
            xi0: f64::NAN,
        };
        nl.xi0 = nl
            .scan_xi0()
            .ok_or_else(|| invalid("nonlinearity: no xi0 with G(xi0) > 0 found"))?;
        Ok(nl)
    }

    /// The default `m = 1`, `q = (p + p*)/2`.
    pub fn default_for(p: f64, pstar: f64) -> Result<Self> {
        Self::new(1.0, 0.5 * (p + pstar))
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn xi0(&self) -> f64 {
        self.xi0
    }

    pub fn g(&self, s: f64) -> f64 {
        -self.m * s + s.abs().powf(self.q - 1.0).copysign(s)
    }

    pub fn primitive(&self, s: f64) -> f64 {
        -0.5 * self.m * s * s + s.abs().powf(self.q) / self.q
    }

    fn scan_xi0(&self) -> Option<f64> {
        let mut s = 1e-3;
        while s < 1e6 {
            if self.primitive(s) > 0.0 {
                return Some(s);
            }
            s *= 1.01;
        }
        None
    }

    /// Checks oddness, the negative slope at the origin, subcritical growth
    /// against `p*`, and positivity of `G` somewhere.
    pub fn check_conditions(&self, pstar: f64) -> Result<ConditionReport> {
        let samples: Vec<f64> = (1..=200).map(|k| 1e-4 * 1.1f64.powi(k)).collect();
        let odd = samples.iter().all(|&s| self.g(-s) == -self.g(s));

        let s_small = 1e-3;
        let small_ratio = (1..=100)
            .flat_map(|k| {
                let s = s_small * k as f64 / 100.0;
                [s, -s]
            })
            .map(|s| self.g(s) / s)
            .fold(f64::NEG_INFINITY, f64::max);

        let ratio = |s: f64| self.g(s).abs() / s.powf(pstar - 1.0);
        let s_large = 1e8;
        let large_ratio = ratio(s_large);
        let decaying = (4..8).all(|k| ratio(10f64.powi(k + 1)) < ratio(10f64.powi(k)));

        let g_xi0 = self.primitive(self.xi0);
        if !odd {
            return Err(invalid("nonlinearity: g is not odd"));
        }
        if small_ratio > -0.5 * self.m {
            return Err(invalid(format!(
                "nonlinearity: g(s)/s = {small_ratio} near 0 is not bounded away from 0 below"
            )));
        }
        if !(self.q < pstar) || !decaying {
            return Err(invalid(format!(
                "nonlinearity: q = {} is not below the critical exponent {pstar}",
                self.q
            )));
        }
        if !(g_xi0 > 0.0) {
            return Err(invalid("nonlinearity: G(xi0) is not positive"));
        }
        Ok(ConditionReport {
            odd,
            small_ratio,
            s_small,
            large_ratio,
            s_large,
            xi0: self.xi0,
            g_xi0,
        })
    }
}
