use mpass::{
    build_level_curve, closed_form_candidates, closed_form_lambda_bar, el_residual, estimate_c,
    evaluate_f_along_path, init_path, log_spaced, minimize_on_level, multiplier_of,
    pick_solution_scale, power_law_root, scaling_path, MinimizeOptions, MpaOptions, ProblemConfig,
    ProblemSpec, Variant, Variational,
};

fn spec(cfg: ProblemConfig) -> ProblemSpec {
    ProblemSpec::from_config(&cfg).unwrap()
}

fn hardy() -> ProblemSpec {
    spec(ProblemConfig::new(Variant::HardySubcritical))
}

fn critical() -> ProblemSpec {
    spec(ProblemConfig::new(Variant::CriticalBounded))
}

fn level_one(s: &ProblemSpec, opts: &MinimizeOptions) -> (Vec<f64>, f64) {
    let r = minimize_on_level(s, 1.0, &s.seed(), opts).unwrap();
    assert!(r.converged);
    (r.minimizer, r.i_value)
}

#[test]
fn toy_level_curve_from_closed_form_samples() {
    let lambdas = log_spaced(1e-3, 4.0, 200).unwrap();
    let i: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
    let c = build_level_curve(&lambdas, &i).unwrap();
    assert!((c.lambda_star - 1.0).abs() <= 1e-4);
    assert!((c.lambda_star_star - 1.0).abs() <= 1e-4);
    assert!((c.lambda_bar - 0.25).abs() <= 1e-4);
    assert!((c.c_maxmin - 0.25).abs() <= 1e-6);
    assert!(c.single_crossing());
    for (k, &l) in lambdas.iter().enumerate() {
        assert_eq!(c.big_i[k], i[k] - l);
        if l < c.lambda_star_star {
            assert!(c.c_maxmin >= c.big_i[k]);
        }
    }
}

#[test]
fn closed_form_argmax_examples() {
    let n4 = spec(ProblemConfig {
        n: Some(4),
        ..ProblemConfig::new(Variant::HardySubcritical)
    });
    let b = closed_form_lambda_bar(&n4, 1.0);
    assert!((b.printed_formula.unwrap() - 1.0).abs() < 1e-14);
    assert!((b.derived_argmax - 0.25).abs() < 1e-14);
    let b = closed_form_lambda_bar(&critical(), 1.0);
    assert!((b.printed_formula.unwrap() - 0.6f64.powf(2.5)).abs() < 1e-14);
    assert!((b.derived_argmax - 0.6f64.powf(2.5)).abs() < 1e-14);
}

#[test]
fn critical_scaling_path_is_exact_amplitude() {
    let s = critical();
    let (v, _) = level_one(&s, &MinimizeOptions::pde());
    let w = scaling_path(&s, &v, 32.0).unwrap();
    let k = v.iter().position(|&x| x != 0.0).unwrap();
    assert!((w[k] / v[k] - 32f64.powf(0.3)).abs() < 1e-14);
    assert!((s.eval_u(&w) / s.eval_u(&v) - 32.0).abs() < 1e-12);
    assert_eq!(scaling_path(&s, &v, 1.0).unwrap(), v);
    assert!(scaling_path(&s, &v, 0.0).is_err());
}

#[test]
fn hardy_scaling_path_follows_power_law() {
    let s = hardy();
    let (v, i_1) = level_one(&s, &MinimizeOptions::pde());
    for l in [0.25, 0.5, 2.0, 4.0] {
        let t = s.eval_t(&scaling_path(&s, &v, l).unwrap());
        assert!((t / (i_1 * l.powf(0.6)) - 1.0).abs() <= 1e-3, "lambda {l}");
    }
}

#[test]
fn path_energy_agrees_with_level_curve() {
    for (s, opts, tol) in [
        (
            spec(ProblemConfig::toy(4.0, 2)),
            MinimizeOptions::toy(),
            1e-8,
        ),
        (critical(), MinimizeOptions::pde(), 1e-3),
    ] {
        let (v, i_1) = level_one(&s, &opts);
        let root = power_law_root(i_1, s.level_exponent());
        let lambdas = log_spaced(1e-4 * root, 3.0 * root, 241).unwrap();
        let curve = build_level_curve(
            &lambdas,
            &lambdas
                .iter()
                .map(|l| i_1 * l.powf(s.level_exponent()))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let path = evaluate_f_along_path(&s, &v, &lambdas).unwrap();
        for (k, (_, f)) in path.iter().enumerate() {
            assert!((f - curve.big_i[k]).abs() <= tol * curve.c_maxmin);
        }
        // sampled maximum against the refined one: sampling error only
        let max = path.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        assert!(max <= curve.c_maxmin * (1.0 + tol) && max >= curve.c_maxmin * (1.0 - 1e-3));
        let tiny =
            evaluate_f_along_path(&s, &v, &[1e-6 * root, 1e-8 * root, 1e-10 * root]).unwrap();
        assert!(tiny.windows(2).all(|w| w[1].1.abs() < w[0].1.abs()));
        assert!(tiny[2].1.abs() < 1e-3 * curve.c_maxmin);
        assert!(path.iter().filter(|p| p.0 > 1.01 * root).all(|p| p.1 < 0.0));
    }
}

#[test]
fn toy_mountain_pass_levels() {
    for (q, c) in [(4.0, 0.25), (3.0, 4.0 / 27.0)] {
        let s = spec(ProblemConfig::toy(q, 2));
        let toy = s.as_toy().unwrap();
        let e = toy.point(2.0);
        let path = init_path(&s, &e, 16).unwrap();
        assert!(path.sup_along(&s).0 >= c);
        let est = estimate_c(&s, &e, &MpaOptions::toy()).unwrap();
        assert!((est.c_mpa - c).abs() <= 1e-3);
        assert!(est
            .trace
            .windows(2)
            .all(|w| w[1].max_energy <= w[0].max_energy * (1.0 + 1e-10)));
    }
    let s = spec(ProblemConfig::toy(4.0, 2));
    assert!(init_path(&s, &[0.0, 0.0], 16).is_err());
}

#[test]
fn hardy_mountain_pass_bounds_maxmin_from_above() {
    let s = hardy();
    let opts = MinimizeOptions::pde();
    let (v, i_1) = level_one(&s, &opts);
    let alpha = s.level_exponent();
    let root = power_law_root(i_1, alpha);
    let c_maxmin =
        i_1 * mpass::power_law_argmax(i_1, alpha).powf(alpha) - mpass::power_law_argmax(i_1, alpha);
    let e = scaling_path(&s, &v, 2.0 * root).unwrap();
    assert!(s.eval_f(&e) < 0.0);
    let est = estimate_c(&s, &e, &MpaOptions::pde()).unwrap();
    assert!(est.converged);
    for row in &est.trace {
        assert!(row.max_energy >= c_maxmin * (1.0 - 1e-3));
    }
    assert!((est.c_mpa / c_maxmin - 1.0).abs() <= 0.03);
}

#[test]
fn toy_multipliers() {
    let s = spec(ProblemConfig::toy(4.0, 2));
    let toy = s.as_toy().unwrap();
    assert!((multiplier_of(&s, &toy.point(1.0)).unwrap() - 0.5).abs() < 1e-14);
    assert!((multiplier_of(&s, &toy.point(0.5f64.sqrt())).unwrap() - 1.0).abs() < 1e-14);
    assert!(el_residual(&s, &toy.point(0.5f64.sqrt())) <= 1e-10);
    assert!(multiplier_of(&s, &[0.0, 0.0]).is_err());
}

#[test]
fn trivial_state_has_zero_residual() {
    let s = hardy();
    assert_eq!(el_residual(&s, &vec![0.0; s.dim()]), 0.0);
}

#[test]
fn multiplier_is_monotone_along_scaling_path() {
    for s in [hardy(), critical()] {
        let (v, _) = level_one(&s, &MinimizeOptions::pde());
        let theta: Vec<f64> = log_spaced(0.1, 100.0, 12)
            .unwrap()
            .iter()
            .map(|&l| multiplier_of(&s, &scaling_path(&s, &v, l).unwrap()).unwrap())
            .collect();
        assert!(theta.windows(2).all(|w| w[1] < w[0]), "{theta:?}");
    }
}

#[test]
fn unit_multiplier_matches_derived_argmax() {
    for s in [hardy(), critical()] {
        let opts = MinimizeOptions::pde();
        let (v, i_1) = level_one(&s, &opts);
        let scale = pick_solution_scale(&s, &v, &opts).unwrap();
        let derived = closed_form_lambda_bar(&s, i_1).derived_argmax;
        assert!((scale.lambda_unit_multiplier / derived - 1.0).abs() <= 0.02);
        assert!(scale.residual <= 10.0 * opts.grad_tol);
    }
}

#[test]
fn critical_candidates_favour_inverse_pstar_exponent() {
    let s = critical();
    let opts = MinimizeOptions::pde();
    let (v, i_1) = level_one(&s, &opts);
    let cands = closed_form_candidates(&s, &v, i_1, &opts).unwrap();
    let best = cands
        .iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .unwrap();
    assert_eq!(best.label, "amplitude-lambda-bar-pow-inv-pstar");
}
