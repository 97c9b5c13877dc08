//! Reliability diagram for a forecaster that is slightly overconfident.
//!
//! cargo run -p bayesadapt --example calibration_diagram -- [n] [sharpen]

use bayesadapt::calibration::{reliability_bins, to_csv_string, DEFAULT_BINS};
use bayesadapt::model::sigmoid;
use bayesadapt::rng::seeded;
use rand::Rng;

fn main() -> bayesadapt::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = *args.first().unwrap_or(&5000.0) as usize;
    let sharpen = *args.get(1).unwrap_or(&1.5);

    let mut rng = seeded(4);
    let preds: Vec<(f64, bool)> = (0..n)
        .map(|_| {
            let logit: f64 = rng.random_range(-3.0..3.0);
            let y = rng.random::<f64>() < sigmoid(logit);
            (sigmoid(sharpen * logit), y)
        })
        .collect();
    let bins = reliability_bins(&preds, DEFAULT_BINS)?;
    print!("{}", to_csv_string(&bins)?);
    let covered = bins.iter().filter(|b| b.contains_diagonal()).count();
    println!("# {covered} of {} bins contain the diagonal", bins.len());
    Ok(())
}
