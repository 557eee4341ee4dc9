//! Fixtures shared by the benchmarks.

use mpass::{
    minimize_on_level, scaling_path, MinimizeOptions, ProblemConfig, ProblemSpec, Variant,
    Variational,
};

pub fn toy() -> ProblemSpec {
    ProblemSpec::from_config(&ProblemConfig::toy(4.0, 2)).expect("toy config")
}

pub fn hardy() -> ProblemSpec {
    ProblemSpec::from_config(&ProblemConfig::new(Variant::HardySubcritical)).expect("hardy config")
}

pub fn critical() -> ProblemSpec {
    ProblemSpec::from_config(&ProblemConfig::new(Variant::CriticalBounded))
        .expect("critical config")
}

pub fn options(spec: &ProblemSpec) -> MinimizeOptions {
    if spec.as_toy().is_some() {
        MinimizeOptions::toy()
    } else {
        MinimizeOptions::pde()
    }
}

/// Level-one minimizer and `i_1`.
pub fn level_one(spec: &ProblemSpec) -> (Vec<f64>, f64) {
    let r = minimize_on_level(spec, 1.0, &spec.seed(), &options(spec)).expect("level-one solve");
    (r.minimizer, r.i_value)
}

/// Mountain-pass endpoint on the scaling path at twice the predicted root.
pub fn endpoint(spec: &ProblemSpec) -> Vec<f64> {
    let (v, i_1) = level_one(spec);
    let root = mpass::power_law_root(i_1, spec.level_exponent());
    scaling_path(spec, &v, 2.0 * root).expect("endpoint")
}
