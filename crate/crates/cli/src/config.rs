use std::path::{Path, PathBuf};

use mpass::{MinimizeOptions, MpaOptions, ProblemConfig, ProblemSpec, Variant};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_OUTPUT_DIR: &str = "mpass-out";

/// The λ grid of a sweep. Missing bounds are chosen around the power-law
/// estimate of `λ**` obtained from the minimizer at level 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub count: usize,
    pub warm_start: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lambda_min: None,
            lambda_max: None,
            count: 201,
            warm_start: true,
        }
    }
}

/// Below and above the estimated `λ**` by these factors when bounds are omitted.
pub const AUTO_RANGE_BELOW: f64 = 1e-3;
pub const AUTO_RANGE_ABOVE: f64 = 5.0;

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.count < 3 {
            return Err(CliError::Validation(format!(
                "sweep.count must be at least 3, got {}",
                self.count
            )));
        }
        for (name, v) in [
            ("lambda_min", self.lambda_min),
            ("lambda_max", self.lambda_max),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Validation(format!(
                        "sweep.{name} must be positive, got {v}"
                    )));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (self.lambda_min, self.lambda_max) {
            if !(hi > lo) {
                return Err(CliError::Validation(format!(
                    "sweep.lambda_max ({hi}) must exceed sweep.lambda_min ({lo})"
                )));
            }
        }
        Ok(())
    }

    /// Resolved bounds given an estimate of `λ**`.
    pub fn bounds(&self, root_estimate: f64) -> Result<(f64, f64), CliError> {
        let lo = self.lambda_min.unwrap_or(AUTO_RANGE_BELOW * root_estimate);
        let hi = self.lambda_max.unwrap_or(AUTO_RANGE_ABOVE * root_estimate);
        if !(hi > lo) {
            return Err(CliError::Validation(format!(
                "sweep range [{lo}, {hi}] is empty; set both sweep.lambda_min and sweep.lambda_max"
            )));
        }
        Ok((lo, hi))
    }
}

/// One JSON document describing a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    /// Defaults depend on the variant (toy or PDE).
    #[serde(default)]
    pub minimize: Option<MinimizeOptions>,
    #[serde(default)]
    pub mpa: Option<MpaOptions>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Extra random starts for the `minimize` command's consistency check.
    #[serde(default)]
    pub multistart: usize,
}

impl RunConfig {
    pub fn new(problem: ProblemConfig) -> Self {
        RunConfig {
            problem,
            sweep: SweepConfig::default(),
            minimize: None,
            mpa: None,
            output_dir: None,
            seed: 0,
            multistart: 0,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("invalid config: {e}")))
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        self.minimize.unwrap_or(match self.problem.variant {
            Variant::Toy => MinimizeOptions::toy(),
            _ => MinimizeOptions::pde(),
        })
    }

    pub fn mpa_options(&self) -> MpaOptions {
        self.mpa.unwrap_or(match self.problem.variant {
            Variant::Toy => MpaOptions::toy(),
            _ => MpaOptions::pde(),
        })
    }
}

/// A validated configuration with its problem built and the output
/// directory resolved.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub spec: ProblemSpec,
    pub minimize: MinimizeOptions,
    pub mpa: MpaOptions,
    pub output_dir: PathBuf,
}

impl Context {
    /// Validates every block before any solver runs.
    pub fn new(config: RunConfig, out_override: Option<PathBuf>) -> Result<Self, CliError> {
        let minimize = config.minimize_options();
        minimize.validate()?;
        let mpa = config.mpa_options();
        mpa.validate()?;
        config.sweep.validate()?;
        let spec = ProblemSpec::from_config(&config.problem)?;
        let output_dir = out_override
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        Ok(Context {
            config,
            spec,
            minimize,
            mpa,
            output_dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_variant_defaults() {
        let cfg = RunConfig::parse(r#"{"problem": {"variant": "toy"}}"#).unwrap();
        assert_eq!(cfg.sweep, SweepConfig::default());
        assert_eq!(cfg.minimize_options(), MinimizeOptions::toy());
        assert_eq!(cfg.mpa_options(), MpaOptions::toy());
        let ctx = Context::new(cfg, None).unwrap();
        assert_eq!(ctx.output_dir, PathBuf::from(DEFAULT_OUTPUT_DIR));
    }

    #[test]
    fn sweep_bounds() {
        let auto = SweepConfig::default();
        assert_eq!(
            auto.bounds(10.0).unwrap(),
            (AUTO_RANGE_BELOW * 10.0, AUTO_RANGE_ABOVE * 10.0)
        );
        let half = SweepConfig {
            lambda_max: Some(1e-6),
            ..auto
        };
        assert!(half.bounds(10.0).is_err());
        let bad = SweepConfig {
            lambda_min: Some(2.0),
            lambda_max: Some(1.0),
            ..auto
        };
        assert!(bad.validate().is_err());
        assert!(SweepConfig { count: 2, ..auto }.validate().is_err());
    }

    #[test]
    fn invalid_blocks_fail_before_solving() {
        let cfg = RunConfig::parse(r#"{"problem": {"variant": "toy", "q": 1.5}}"#).unwrap();
        assert_eq!(Context::new(cfg, None).unwrap_err().exit_code(), 2);
        let cfg = RunConfig::parse(r#"{"problem": {"variant": "toy"}, "mpa": {"k": 3}}"#).unwrap();
        assert_eq!(Context::new(cfg, None).unwrap_err().exit_code(), 2);
        assert!(RunConfig::parse("{").is_err());
    }
}
