use amis::{
    empirical_cdf, estimate, oracle_estimate, recycle, run, Adaptation, Algorithm, FamilySpec,
    GridSpec, Integrand, NamedIntegrand, Normalization, ParticleSystem, ProposalParams, RunConfig,
    RunOutput, Schedule, make_gaussian_target, make_mixture_target,
};

fn gaussian_config(schedule: Schedule, seed: u64) -> RunConfig {
    let target = make_gaussian_target(&[1.0, -1.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
    RunConfig::new(
        target,
        FamilySpec::gaussian(2),
        ProposalParams::isotropic(&[0.0, 0.0], 5.0).unwrap(),
        schedule,
        seed,
    )
    .with_integrands(vec![
        NamedIntegrand::new("x1", Integrand::coordinate(0, 2)),
        NamedIntegrand::new("one", Integrand::Constant(1.0)),
    ])
}

fn same_output(a: &RunOutput, b: &RunOutput) {
    assert_eq!(a.thetas, b.thetas);
    assert_eq!(a.system, b.system);
    assert_eq!(a.ess_per_iter, b.ess_per_iter);
    assert_eq!(a.estimates, b.estimates);
}

#[test]
fn schemes_coincide_for_one_iteration() {
    let base = gaussian_config(Schedule::explicit(vec![300]).unwrap(), 11);
    let outs: Vec<RunOutput> = Algorithm::all()
        .into_iter()
        .map(|a| run(&base.clone().with_algorithm(a)).unwrap())
        .collect();
    same_output(&outs[0], &outs[1]);
    same_output(&outs[1], &outs[2]);
    let sys = &outs[0].system;
    assert_eq!(sys.recycled_log_w().unwrap(), sys.simple_log_w());
}

#[test]
fn frozen_proposals_give_matching_recycled_weights() {
    let base = gaussian_config(Schedule::explicit(vec![100, 200]).unwrap(), 3)
        .with_adaptation(Adaptation::Frozen);
    let m = run(&base.clone().with_algorithm(Algorithm::ModifiedAmis)).unwrap();
    let o = run(&base.with_algorithm(Algorithm::OriginalAmis)).unwrap();
    assert_eq!(m.system.recycled_log_w(), o.system.recycled_log_w());
    for (r, s) in m.system.recycled_log_w().unwrap().iter().zip(m.system.simple_log_w()) {
        assert!((r - s).abs() <= 1e-12 * s.abs().max(1.0));
    }
}

#[test]
fn naive_keeps_simple_weights() {
    let cfg = gaussian_config(Schedule::quadratic(20, 4).unwrap(), 9)
        .with_algorithm(Algorithm::NaiveRecycling);
    let out = run(&cfg).unwrap();
    assert_eq!(out.system.recycled_log_w().unwrap(), out.system.simple_log_w());
    assert_eq!(out.thetas.len(), 5);
}

#[test]
fn reruns_are_bit_identical() {
    for alg in Algorithm::all() {
        let cfg = gaussian_config(Schedule::quadratic(20, 5).unwrap(), 42).with_algorithm(alg);
        same_output(&run(&cfg).unwrap(), &run(&cfg).unwrap());
    }
}

#[test]
fn later_iterations_do_not_perturb_earlier_draws() {
    let short = run(&gaussian_config(Schedule::quadratic(20, 3).unwrap(), 5)).unwrap();
    let long = run(&gaussian_config(Schedule::quadratic(20, 6).unwrap(), 5)).unwrap();
    let n = short.system.len();
    assert_eq!(short.system.points(), &long.system.points()[..n * 2]);
    assert_eq!(short.thetas[..4], long.thetas[..4]);
}

#[test]
fn self_normalized_constant_is_exact() {
    for seed in 0..20 {
        for alg in Algorithm::all() {
            let cfg = gaussian_config(Schedule::quadratic(10, 4).unwrap(), seed)
                .with_algorithm(alg)
                .with_integrands(vec![
                    NamedIntegrand::new("one", Integrand::Constant(1.0)),
                    NamedIntegrand::new("c", Integrand::Constant(-2.75)),
                ]);
            let out = run(&cfg).unwrap();
            assert_eq!(out.estimates["one"], 1.0);
            assert_eq!(out.estimates["c"], -2.75);
        }
    }
}

#[test]
fn hand_built_recycling_matches_direct_formula() {
    // d = 1, three iterations of two particles
    let xs = [-0.5, 0.2, 1.0, 1.7, 0.3, -1.2];
    let thetas = [
        ProposalParams::isotropic(&[0.0], 1.0).unwrap(),
        ProposalParams::isotropic(&[1.0], 0.5).unwrap(),
        ProposalParams::isotropic(&[-0.5], 2.0).unwrap(),
    ];
    let log_pi = |x: f64| -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln();
    let phi = |x: f64, m: f64, v: f64| (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
    let mut sys = ParticleSystem::new(1);
    for t in 0..3 {
        let pts = vec![xs[2 * t], xs[2 * t + 1]];
        let lt: Vec<f64> = pts.iter().map(|x| log_pi(*x)).collect();
        let simple: Vec<f64> = pts
            .iter()
            .zip(&lt)
            .map(|(x, l)| l - thetas[t].gaussian_log_density(&[*x]))
            .collect();
        sys.push_iteration(pts, lt, simple).unwrap();
    }
    let sched = Schedule::explicit(vec![2, 2, 2]).unwrap();
    let r = recycle(&sys, &thetas, &sched, &FamilySpec::gaussian(1)).unwrap();
    assert_eq!(r.points(), sys.points());
    assert_eq!(r.log_target(), sys.log_target());
    for (p, x) in xs.iter().enumerate() {
        let d = (phi(*x, 0.0, 1.0) + phi(*x, 1.0, 0.5) + phi(*x, -0.5, 2.0)) / 3.0;
        let w = log_pi(*x).exp() / d;
        let got = r.recycled_log_w().unwrap()[p].exp();
        assert!((got - w).abs() <= 1e-12 * w, "{p}: {got} vs {w}");
    }
}

#[test]
fn oracle_matches_estimate_when_drawn_from_theta_star() {
    let target = make_gaussian_target(&[1.0, -1.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
    let star = target.theta_star().unwrap().clone();
    let cfg = RunConfig::new(target, FamilySpec::gaussian(2), star.clone(), Schedule::explicit(vec![500]).unwrap(), 1)
        .with_normalization(Normalization::Normalized);
    let out = run(&cfg).unwrap();
    let psi = Integrand::coordinate(0, 2);
    let a = estimate(&out.system, &psi, Normalization::Normalized).unwrap();
    let b = oracle_estimate(&out.system, &star, &FamilySpec::gaussian(2), &psi).unwrap();
    assert_eq!(a, b);
    let zero = oracle_estimate(&out.system, &star, &FamilySpec::gaussian(2), &Integrand::Constant(0.0)).unwrap();
    assert_eq!(zero, 0.0);
}

#[test]
fn unnormalized_target_runs_self_normalized() {
    let t = make_mixture_target(
        &[0.5, 0.5],
        &[
            ProposalParams::isotropic(&[-2.0], 1.0).unwrap(),
            ProposalParams::isotropic(&[2.0], 1.0).unwrap(),
        ],
    )
    .unwrap()
    .with_hidden_constant(12.0);
    let cfg = RunConfig::new(
        t,
        FamilySpec::gaussian(1),
        ProposalParams::isotropic(&[0.5], 9.0).unwrap(),
        Schedule::quadratic(50, 6).unwrap(),
        2,
    )
    .with_integrands(vec![NamedIntegrand::new("x2", Integrand::Monomial(vec![2]))]);
    let out = run(&cfg).unwrap();
    assert!((out.estimates["x2"] - 5.0).abs() < 0.5, "{}", out.estimates["x2"]);
    let grid = GridSpec::uniform(vec![-6.0], vec![6.0], 50).unwrap();
    let f = empirical_cdf(&out.system, &grid, true).unwrap();
    assert!(f.is_monotone());
}
