use bayesadapt::design::{
    eig_beta_bernoulli, eig_beta_bernoulli_exact, eig_joint_theta_delta, eig_marginal_bound, eig_nested_mc,
    AbilityDesign, JointDesign, SampleBudget,
};
use bayesadapt::inference::{BetaPosterior, Gaussian, GroupedTreatmentPosterior, MeanFieldPosterior};
use bayesadapt::model::{sigmoid, PriorSpec};
use bayesadapt::rng::seeded;

fn entropy(p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    h(p) + h(1.0 - p)
}

/// Mutual information of a binary 1PL outcome when `theta - delta ~ N(m, s)`,
/// by 4001-point quadrature on the logit.
fn logit_quadrature_eig(m: f64, s: f64) -> f64 {
    let n = 4001;
    let (lo, hi) = (-10.0, 10.0);
    let h = (hi - lo) / (n - 1) as f64;
    let (mut z, mut marginal, mut cond) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let u = lo + k as f64 * h;
        let w = (-0.5 * u * u).exp();
        let p = sigmoid(m + s * u);
        z += w;
        marginal += w * p;
        cond += w * entropy(p);
    }
    entropy(marginal / z) - cond / z
}

#[test]
fn nested_mc_matches_logit_quadrature() {
    let budget = SampleBudget {
        n_outer: 20_000,
        n_inner: 20_000,
        s_util: 1,
    };
    let mut rng = seeded(1);
    for (tm, ts, dm, ds) in [(0.0, 2.0, 0.0, 1.4), (1.5, 0.5, -0.5, 0.3), (-2.0, 1.0, 1.0, 1.0), (0.3, 0.05, 0.3, 0.05)] {
        let design = JointDesign {
            ability: Gaussian { mean: tm, sd: ts },
            difficulty: Gaussian { mean: dm, sd: ds },
        };
        let est = eig_nested_mc(&design, &budget, &mut rng).unwrap();
        let oracle = logit_quadrature_eig(tm - dm, (ts * ts + ds * ds).sqrt());
        assert!(
            (est.value - oracle).abs() < 4.0 * est.std_error + 2e-3,
            "{est:?} vs {oracle} for ({tm}, {ts}, {dm}, {ds})"
        );
    }
}

#[test]
fn theta_only_matches_quadrature_with_plug_in_difficulty() {
    let design = AbilityDesign {
        ability: Gaussian { mean: 0.5, sd: 1.2 },
        difficulty: -0.4,
    };
    let budget = SampleBudget {
        n_outer: 20_000,
        n_inner: 20_000,
        s_util: 1,
    };
    let est = eig_nested_mc(&design, &budget, &mut seeded(2)).unwrap();
    let oracle = logit_quadrature_eig(0.9, 1.2);
    assert!((est.value - oracle).abs() < 4.0 * est.std_error + 2e-3);
}

#[test]
fn prior_item_eig_exceeds_informed_item_eig() {
    let prior = PriorSpec::default();
    let mut post = MeanFieldPosterior::from_prior(&prior, 2, 1);
    post.set_theta(1, Gaussian { mean: 0.0, sd: 0.2 });
    let budget = SampleBudget::default();
    let fresh = eig_joint_theta_delta(&post, 0, 0, &budget, &mut seeded(3)).unwrap();
    let known = eig_joint_theta_delta(&post, 1, 0, &budget, &mut seeded(3)).unwrap();
    assert!(fresh.value > known.value + 0.05, "{fresh:?} {known:?}");
    assert!((fresh.marginal_success - 0.5).abs() < 0.03);
    assert!(eig_joint_theta_delta(&post, 2, 0, &budget, &mut seeded(3)).is_err());
}

#[test]
fn beta_bernoulli_estimators_agree_with_closed_form() {
    let mut gp = GroupedTreatmentPosterior::uniform(3, 1).unwrap();
    gp.set(1, 0, BetaPosterior::new(8.0, 3.0).unwrap());
    gp.set(2, 0, BetaPosterior::new(0.7, 12.0).unwrap());
    let mut rng = seeded(4);
    for j in 0..3 {
        let exact = eig_beta_bernoulli_exact(gp.get(j, 0));
        let mc = eig_beta_bernoulli(&gp, j, 0, 200_000, &mut rng).unwrap();
        assert!((mc.value - exact).abs() < 4.0 * mc.std_error + 1e-3, "{j}: {mc:?} vs {exact}");
    }
}

#[test]
fn information_shrinks_as_observations_accumulate() {
    let mut prev = f64::INFINITY;
    for n in [0.0, 2.0, 10.0, 50.0, 250.0] {
        let eig = eig_beta_bernoulli_exact(&BetaPosterior::new(1.0 + n / 2.0, 1.0 + n / 2.0).unwrap());
        assert!(eig < prev);
        prev = eig;
    }
    assert!(prev < 5e-3);
}

#[test]
fn marginal_bound_sits_above_nested_estimate() {
    let budget = SampleBudget {
        n_outer: 5000,
        n_inner: 5000,
        s_util: 1,
    };
    let design = JointDesign {
        ability: Gaussian { mean: 0.2, sd: 1.5 },
        difficulty: Gaussian { mean: 0.0, sd: 0.8 },
    };
    let mut rng = seeded(5);
    let nested = eig_nested_mc(&design, &budget, &mut rng).unwrap();
    let bound = eig_marginal_bound(&design, 300, &budget, &mut rng).unwrap();
    let se = (nested.std_error.powi(2) + bound.estimate.std_error.powi(2)).sqrt();
    assert!(bound.estimate.value >= nested.value - 3.0 * se);
    assert!((bound.q_success - nested.marginal_success).abs() < 0.05);
}
