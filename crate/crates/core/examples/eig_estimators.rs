//! Compares the EIG estimators on one Beta-Bernoulli design and one 1PL item.
//!
//! cargo run --release -p bayesadapt --example eig_estimators -- [alpha] [beta]

use bayesadapt::design::{
    eig_beta_bernoulli_exact, eig_marginal_bound, eig_nested_mc, BetaBernoulliDesign, JointDesign, SampleBudget,
};
use bayesadapt::inference::{BetaPosterior, Gaussian};
use bayesadapt::rng::seeded;

fn main() -> bayesadapt::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let post = BetaPosterior::new(*args.first().unwrap_or(&1.0), *args.get(1).unwrap_or(&1.0))?;
    let mut rng = seeded(1);

    println!("Beta({}, {}) success probability", post.alpha, post.beta);
    println!("  exact          {:.5} nats", eig_beta_bernoulli_exact(&post));
    for n in [100, 1000, 10_000] {
        let budget = SampleBudget {
            n_outer: n,
            n_inner: n,
            s_util: 1,
        };
        let est = eig_nested_mc(&BetaBernoulliDesign(post), &budget, &mut rng)?;
        println!("  nested N=M={n:<6}{:.5} ± {:.5}", est.value, est.std_error);
    }

    let item = JointDesign {
        ability: Gaussian { mean: 0.0, sd: 2.0 },
        difficulty: Gaussian { mean: 0.0, sd: 1.4 },
    };
    let budget = SampleBudget::default();
    let nested = eig_nested_mc(&item, &budget, &mut rng)?;
    let bound = eig_marginal_bound(&item, 200, &budget, &mut rng)?;
    println!("1PL item at the prior");
    println!("  nested         {:.5} ± {:.5}", nested.value, nested.std_error);
    println!(
        "  marginal bound {:.5} ± {:.5} (q = {:.3})",
        bound.estimate.value, bound.estimate.std_error, bound.q_success
    );
    Ok(())
}
