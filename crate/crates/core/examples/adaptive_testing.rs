//! Replays greedy-EIG adaptive testing on a synthetic oracle and compares it
//! with the static design that administers every item.
//!
//! cargo run --release -p bayesadapt --example adaptive_testing -- [participants] [items] [seed]

use std::time::Instant;

use bayesadapt::design::SampleBudget;
use bayesadapt::inference::ViConfig;
use bayesadapt::model::PriorSpec;
use bayesadapt::policy::StoppingConfig;
use bayesadapt::simulation::{generate_synthetic_oracle, information_retention, run_adaptive_testing_sim};

fn main() -> bayesadapt::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = *args.first().unwrap_or(&200) as usize;
    let m = *args.get(1).unwrap_or(&15) as usize;
    let seed = *args.get(2).unwrap_or(&7);

    let prior = PriorSpec::default();
    let oracle = generate_synthetic_oracle(&prior, n, m, seed)?;
    let start = Instant::now();
    let report = run_adaptive_testing_sim(
        &oracle,
        &StoppingConfig::default(),
        &SampleBudget::default(),
        &ViConfig { seed, ..ViConfig::default() },
    )?;
    let truth = oracle.ground_truth.as_ref().expect("synthetic oracle");
    let (adaptive, full) = information_retention(&report, &oracle, &prior, &truth.delta)?;

    println!("participants {n}, items {m}, {:.1}s", start.elapsed().as_secs_f64());
    println!(
        "trials: adaptive {} vs static {} ({:.1}%), mean {:.2} per participant",
        report.total_trials(),
        n * m,
        100.0 * report.total_trials() as f64 / (n * m) as f64,
        report.mean_trials()
    );
    println!(
        "ability information: adaptive {:.3} vs full {:.3} nats per participant ({:.1}% retained)",
        adaptive / n as f64,
        full / n as f64,
        100.0 * adaptive / full
    );
    println!("posterior-sd information gain per participant {:.3}", report.total_information_gain / n as f64);
    println!("item  true_delta  est_delta  administered");
    for j in 0..m {
        println!("{j:>4}  {:>10.2}  {:>9.2}  {:>12}", truth.delta[j], report.difficulty_means[j], report.item_frequencies[j]);
    }
    Ok(())
}
