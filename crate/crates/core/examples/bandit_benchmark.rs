//! Paired-seed comparison of treatment-assignment policies on random
//! Beta(2, 2) bandits.
//!
//! cargo run --release -p bayesadapt --example bandit_benchmark -- [A|B] [k] [horizon] [runs]

use std::time::Instant;

use bayesadapt::simulation::{
    run_benchmark, BanditPolicy, BenchmarkSpec, EigMethod, Setup, DEFAULT_EXPLORATION_SAMPLES,
};

fn main() -> bayesadapt::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let setup: Setup = args.first().map(|s| s.parse()).transpose()?.unwrap_or(Setup::B);
    let num = |i: usize, d: usize| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let spec = BenchmarkSpec {
        setup,
        k: num(1, 10),
        horizon: num(2, 1000),
        runs: num(3, 300),
        seed: 2024,
    };
    let mut policies = vec![
        BanditPolicy::Uniform,
        BanditPolicy::Thompson,
        BanditPolicy::ExplorationSampling { samples: DEFAULT_EXPLORATION_SAMPLES },
    ];
    for gamma in [0.1, 0.2, 0.3] {
        policies.push(BanditPolicy::ActiveInference { gamma, eig: EigMethod::Exact });
    }

    println!("setup {} k={} T={} runs={}", spec.setup, spec.k, spec.horizon, spec.runs);
    println!("{:<24} {:>16} {:>16} {:>16} {:>16}", "policy", "identification", "policy regret", "average regret", "exploitation");
    for policy in &policies {
        let start = Instant::now();
        let s = run_benchmark(&spec, policy, true)?;
        let cell = |m: bayesadapt::simulation::MeanCi| format!("{:.3} ± {:.3}", m.mean, m.half_width);
        println!(
            "{:<24} {:>16} {:>16} {:>16} {:>16}   ({:.1}s)",
            s.policy,
            cell(s.identification),
            cell(s.policy_regret),
            cell(s.average_regret),
            cell(s.exploitation),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
