//! Fits the 1PL posterior to a small synthetic response grid and checks one
//! ability against grid quadrature with the item difficulties fixed.
//!
//! cargo run --release -p bayesadapt --example vi_fit -- [participants] [items] [seed]

use bayesadapt::inference::{fit_mean_field, ViConfig};
use bayesadapt::model::PriorSpec;
use bayesadapt::simulation::{generate_synthetic_oracle, grid_ability_posterior};

fn main() -> bayesadapt::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = *args.first().unwrap_or(&20) as usize;
    let m = *args.get(1).unwrap_or(&10) as usize;
    let seed = *args.get(2).unwrap_or(&3);

    let prior = PriorSpec::default();
    let oracle = generate_synthetic_oracle(&prior, n, m, seed)?;
    let truth = oracle.ground_truth.as_ref().expect("synthetic oracle");
    let post = fit_mean_field(&prior, oracle.records(), &ViConfig { seed, ..ViConfig::default() })?;

    println!("{:>4} {:>8} {:>8} {:>6} {:>8} {:>6}", "id", "true", "vi", "sd", "grid", "sd");
    for i in 0..n.min(8) {
        let answers: Vec<(bool, f64)> = oracle
            .participant_records(i)
            .iter()
            .map(|r| (r.success(), post.delta(r.item_id).mean))
            .collect();
        let (gm, gs) = grid_ability_posterior(&answers, &prior);
        let t = post.theta(i);
        println!("{i:>4} {:>8.3} {:>8.3} {:>6.3} {:>8.3} {:>6.3}", truth.theta[i], t.mean, t.sd, gm, gs);
    }
    let b = post.b();
    println!("shared offset b: {:.3} ± {:.3} (true {:.3})", b.mean, b.sd, truth.b);
    Ok(())
}
