//! Problem selection and its JSON configuration block.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::functionals::{critical_exponent, hardy_constant, RadialKind, RadialProblem};
use crate::grid::{build_radial_grid, ScalingKind};
use crate::nonlinearity::Nonlinearity;
use crate::toy::ToyProblem;
use crate::variational::Variational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    HardySubcritical,
    CriticalBounded,
    Toy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(rename = "R")]
    pub radius: f64,
    pub m: usize,
    #[serde(default = "unit_stretch")]
    pub stretch: f64,
}

/// Cell ratio of the default hardy-subcritical grid: cells grow from about
/// `4e-4` at the origin to `0.24` at `R = 30` over 800 nodes.
pub const DEFAULT_HARDY_STRETCH: f64 = 1.008;

fn unit_stretch() -> f64 {
    1.0
}

/// `{"variant": ..., "p": ..., "n": ..., "mu": ..., "m": ..., "q": ..., "grid": {...}}`.
///
/// Omitted fields take per-variant defaults. `mu_fraction` is an alternative
/// to `mu`: a fraction of the Hardy constant (hardy-subcritical) or of the
/// estimated `μ_p` (critical-bounded). `d` is the toy dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

impl ProblemConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            p: None,
            n: None,
            mu: None,
            mu_fraction: None,
            m: None,
            q: None,
            d: None,
            grid: None,
        }
    }

    pub fn toy(q: f64, d: usize) -> Self {
        Self {
            q: Some(q),
            d: Some(d),
            ..Self::new(Variant::Toy)
        }
    }
}

#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Radial(RadialProblem),
    Toy(ToyProblem),
}

impl ProblemSpec {
    /// Validates the configuration and builds the problem; inadmissible
    /// parameters fail here, before any solve starts.
    pub fn from_config(cfg: &ProblemConfig) -> Result<Self> {
        if cfg.mu.is_some() && cfg.mu_fraction.is_some() {
            return Err(invalid("give either mu or mu_fraction, not both"));
        }
        match cfg.variant {
            Variant::Toy => {
                if cfg.grid.is_some() || cfg.p.is_some() || cfg.mu.is_some() {
                    return Err(invalid("toy problems take only q and d"));
                }
                Ok(Self::Toy(ToyProblem::new(
                    cfg.d.unwrap_or(2),
                    cfg.q.unwrap_or(4.0),
                )?))
            }
            Variant::HardySubcritical => {
                let p = cfg.p.unwrap_or(2.0);
                let n = cfg.n.unwrap_or(5);
                let gc = cfg.grid.unwrap_or(GridConfig {
                    radius: 30.0,
                    m: 800,
                    stretch: DEFAULT_HARDY_STRETCH,
                });
                let grid = Arc::new(build_radial_grid(n, gc.radius, gc.m, gc.stretch)?);
                if !(p > 1.0 && p < n as f64) {
                    return Err(invalid(format!(
                        "hardy-subcritical needs 1 < p < n, got p = {p}, n = {n}"
                    )));
                }
                let pstar = critical_exponent(p, n);
                let nl =
                    Nonlinearity::new(cfg.m.unwrap_or(1.0), cfg.q.unwrap_or(0.5 * (p + pstar)))?;
                let mu = match (cfg.mu, cfg.mu_fraction) {
                    (Some(mu), _) => mu,
                    (None, Some(f)) => f * hardy_constant(p, n),
                    (None, None) => 0.0,
                };
                Ok(Self::Radial(RadialProblem::hardy_subcritical(
                    p, mu, nl, grid,
                )?))
            }
            Variant::CriticalBounded => {
                if cfg.m.is_some() || cfg.q.is_some() {
                    return Err(invalid(
                        "critical-bounded has no nonlinearity parameters (m, q)",
                    ));
                }
                let p = cfg.p.unwrap_or(2.0);
                let n = cfg.n.unwrap_or(5);
                let gc = cfg.grid.unwrap_or(GridConfig {
                    radius: 1.0,
                    m: 400,
                    stretch: 1.0,
                });
                let grid = Arc::new(build_radial_grid(n, gc.radius, gc.m, gc.stretch)?);
                let problem = match (cfg.mu, cfg.mu_fraction) {
                    (Some(mu), _) => RadialProblem::critical_bounded(p, mu, grid)?,
                    (None, f) => {
                        RadialProblem::critical_bounded_fraction(p, f.unwrap_or(0.3), grid)?
                    }
                };
                Ok(Self::Radial(problem))
            }
        }
    }

    /// The fully resolved configuration (defaults filled in, `mu` absolute).
    pub fn to_config(&self) -> ProblemConfig {
        match self {
            Self::Toy(t) => ProblemConfig::toy(t.q, t.d),
            Self::Radial(r) => {
                let g = r.grid();
                let grid = Some(GridConfig {
                    radius: g.radius(),
                    m: g.len(),
                    stretch: g.stretch(),
                });
                let (m, q) = match r.nonlinearity() {
                    Some(nl) => (Some(nl.m()), Some(nl.q())),
                    None => (None, None),
                };
                ProblemConfig {
                    variant: self.variant(),
                    p: Some(r.p()),
                    n: Some(r.n()),
                    mu: Some(r.mu()),
                    m,
                    q,
                    grid,
                    ..ProblemConfig::new(self.variant())
                }
            }
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            Self::Toy(_) => Variant::Toy,
            Self::Radial(r) => match r.kind() {
                RadialKind::HardySubcritical(_) => Variant::HardySubcritical,
                RadialKind::CriticalBounded { .. } => Variant::CriticalBounded,
            },
        }
    }

    pub fn as_radial(&self) -> Option<&RadialProblem> {
        match self {
            Self::Radial(r) => Some(r),
            Self::Toy(_) => None,
        }
    }

    pub fn as_toy(&self) -> Option<&ToyProblem> {
        match self {
            Self::Toy(t) => Some(t),
            Self::Radial(_) => None,
        }
    }

    fn inner_problem(&self) -> &dyn Variational {
        match self {
            Self::Radial(r) => r,
            Self::Toy(t) => t,
        }
    }
}

impl Variational for ProblemSpec {
    fn dim(&self) -> usize {
        self.inner_problem().dim()
    }

    fn eval_t(&self, u: &[f64]) -> f64 {
        self.inner_problem().eval_t(u)
    }

    fn eval_u(&self, u: &[f64]) -> f64 {
        self.inner_problem().eval_u(u)
    }

    fn grad_t(&self, u: &[f64]) -> Vec<f64> {
        self.inner_problem().grad_t(u)
    }

    fn grad_u(&self, u: &[f64]) -> Vec<f64> {
        self.inner_problem().grad_u(u)
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.inner_problem().inner(a, b)
    }

    fn precondition(&self, g: &[f64]) -> Vec<f64> {
        self.inner_problem().precondition(g)
    }

    fn precondition_for_multiplier(&self, g: &[f64], theta: f64) -> Vec<f64> {
        self.inner_problem().precondition_for_multiplier(g, theta)
    }

    fn retract(&self, u: &[f64], level: f64) -> Result<Vec<f64>> {
        self.inner_problem().retract(u, level)
    }

    fn action(&self) -> ScalingKind {
        self.inner_problem().action()
    }

    fn transport(&self, v: &[f64], from: f64, to: f64) -> Result<Vec<f64>> {
        self.inner_problem().transport(v, from, to)
    }

    fn seed(&self) -> Vec<f64> {
        self.inner_problem().seed()
    }

    fn level_exponent(&self) -> f64 {
        self.inner_problem().level_exponent()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_block() {
        let json = r#"{"variant": "hardy-subcritical", "p": 2, "n": 5, "mu": 0.5, "m": 1, "q": 2.5,
                       "grid": {"R": 20, "m": 200, "stretch": 1.0}}"#;
        let cfg: ProblemConfig = serde_json::from_str(json).unwrap();
        let spec = ProblemSpec::from_config(&cfg).unwrap();
        assert_eq!(spec.variant(), Variant::HardySubcritical);
        let back = spec.to_config();
        assert_eq!(back.mu, Some(0.5));
        assert_eq!(back.grid.unwrap().m, 200);
        let again = ProblemSpec::from_config(&back).unwrap();
        assert_eq!(again.to_config(), back);
    }

    #[test]
    fn hardy_mu_out_of_range() {
        let mut cfg = ProblemConfig::new(Variant::HardySubcritical);
        cfg.grid = Some(GridConfig {
            radius: 10.0,
            m: 50,
            stretch: 1.0,
        });
        cfg.mu = Some(2.25);
        assert!(ProblemSpec::from_config(&cfg).is_err());
        cfg.mu = Some(-0.1);
        assert!(ProblemSpec::from_config(&cfg).is_err());
        cfg.mu = None;
        cfg.mu_fraction = Some(0.5);
        let spec = ProblemSpec::from_config(&cfg).unwrap();
        assert!((spec.as_radial().unwrap().mu() - 1.125).abs() < 1e-15);
    }

    #[test]
    fn critical_needs_p_squared_below_n() {
        let mut cfg = ProblemConfig::new(Variant::CriticalBounded);
        cfg.n = Some(4);
        cfg.grid = Some(GridConfig {
            radius: 1.0,
            m: 50,
            stretch: 1.0,
        });
        assert!(ProblemSpec::from_config(&cfg).is_err());
        cfg.n = Some(5);
        assert!(ProblemSpec::from_config(&cfg).is_ok());
        cfg.mu = Some(1e6);
        assert!(ProblemSpec::from_config(&cfg).is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(
            serde_json::from_str::<ProblemConfig>(r#"{"variant": "toy", "bogus": 1}"#).is_err()
        );
    }

    #[test]
    fn toy_defaults() {
        let spec = ProblemSpec::from_config(&ProblemConfig::new(Variant::Toy)).unwrap();
        assert_eq!(spec.as_toy().unwrap().q, 4.0);
        assert_eq!(spec.dim(), 2);
    }
}
