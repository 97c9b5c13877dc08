//! Response time saved by penalizing a slow item: item 0 takes 100 s, the
//! others 5 s.
//!
//! cargo run --release -p bayesadapt --example time_saved -- [gamma_slow]

use bayesadapt::design::{fit_duration_model, DurationPrior, SampleBudget};
use bayesadapt::inference::ViConfig;
use bayesadapt::model::{sigmoid, ResponseRecord};
use bayesadapt::rng::seeded;
use bayesadapt::simulation::{time_saved_estimate, OracleDataset};
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn main() -> bayesadapt::Result<()> {
    let gamma_slow: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1.0);

    let mut rng = seeded(11);
    let theta = Normal::new(0.0, 2.0).expect("valid sd");
    let mut records = Vec::new();
    for p in 0..30 {
        let t = theta.sample(&mut rng);
        for j in 0..5 {
            let mut r = ResponseRecord::new(p, j, (rng.random::<f64>() < sigmoid(t)) as u8);
            r.duration_s = Some(if j == 0 { 100.0 } else { 5.0 });
            records.push(r);
        }
    }
    let oracle = OracleDataset::from_records(records)?;
    let dm = fit_duration_model(&DurationPrior::default(), oracle.records(), 5, 30.0, gamma_slow, &ViConfig::default())?;
    for (j, d) in dm.items.iter().enumerate() {
        println!("item {j}: typical duration {:.1} s", d.mu.mean.exp());
    }
    let report = time_saved_estimate(&oracle, &dm, &SampleBudget::default(), 11)?;
    println!(
        "saving {:.2} ± {:.2} s per trial over {} trials, {} disagreements",
        report.summary.mean,
        report.summary.half_width,
        report.savings.len(),
        report.disagreements
    );
    Ok(())
}
