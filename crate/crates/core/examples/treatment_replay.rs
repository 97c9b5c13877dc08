//! Adaptive treatment assignment replayed on an oracle where treatment `j`
//! succeeds with rate `0.3 + 0.05 j` in group 0 and `0.3 + 0.1 j` in group
//! 1, so later treatments discriminate the groups better.
//!
//! cargo run --release -p bayesadapt --example treatment_replay -- [gamma] [participants] [treatments]

use bayesadapt::model::ResponseRecord;
use bayesadapt::rng::seeded;
use bayesadapt::simulation::{run_treatment_replay, OracleDataset, TreatmentReplayConfig, TreatmentReplayReport};
use rand::Rng;

fn main() -> bayesadapt::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let gamma = *args.first().unwrap_or(&0.1);
    let n = *args.get(1).unwrap_or(&100.0) as usize;
    let m = *args.get(2).unwrap_or(&6.0) as usize;

    let mut rng = seeded(5);
    let mut records = Vec::new();
    for p in 0..n {
        let z = (p % 2) as u8;
        for j in 0..m {
            let rate = (0.3 + j as f64 * if z == 0 { 0.05 } else { 0.1 }).min(0.95);
            let mut r = ResponseRecord::new(p, j, (rng.random::<f64>() < rate) as u8);
            r.z = Some(z);
            records.push(r);
        }
    }
    let oracle = OracleDataset::from_records(records)?;
    let cfg = TreatmentReplayConfig {
        gamma,
        trials_per_participant: 2,
        ..TreatmentReplayConfig::default()
    };
    let report = run_treatment_replay(&oracle, &cfg)?;

    println!("step participant group treatment      eig  utility      efe");
    for c in report.composition.iter().take(10) {
        println!(
            "{:>4} {:>11} {:>5} {:>9} {:>8.4} {:>8.4} {:>8.4}",
            c.step, c.participant_id, c.group, c.treatment, c.eig, c.utility, c.efe
        );
    }
    println!("frequencies: {:?}", report.frequencies);
    println!("adaptive ranking: {:?}", TreatmentReplayReport::ranking(&report.final_posterior));
    println!("oracle ranking:   {:?}", TreatmentReplayReport::ranking(&report.oracle_posterior));
    Ok(())
}
