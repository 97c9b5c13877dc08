//! Reliability diagrams: binned predicted success probabilities against
//! observed outcome rates, with uniform-prior Beta credible intervals.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub n: usize,
    /// NaN for an empty bin.
    pub mean_prediction: f64,
    /// NaN for an empty bin.
    pub empirical_rate: f64,
    pub credible_lo: f64,
    pub credible_hi: f64,
}

impl ReliabilityBin {
    pub fn contains_diagonal(&self) -> bool {
        self.n > 0 && self.credible_lo <= self.mean_prediction && self.mean_prediction <= self.credible_hi
    }
}

/// Quantile of Beta(a, b) by bisection on the regularized incomplete beta.
pub fn beta_quantile(a: f64, b: f64, prob: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Equal-width reliability bins on [0, 1]; the last bin is closed at 1.
pub fn reliability_bins(predictions: &[(f64, bool)], n_bins: usize) -> Result<Vec<ReliabilityBin>> {
    if n_bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    let mut n = vec![0usize; n_bins];
    let mut sum_q = vec![0.0; n_bins];
    let mut successes = vec![0usize; n_bins];
    for &(q, y) in predictions {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::invalid(format!("prediction {q} outside [0, 1]")));
        }
        let k = ((q * n_bins as f64) as usize).min(n_bins - 1);
        n[k] += 1;
        sum_q[k] += q;
        successes[k] += y as usize;
    }
    Ok((0..n_bins)
        .map(|k| {
            let s = successes[k] as f64;
            let f = (n[k] - successes[k]) as f64;
            let (mean_prediction, empirical_rate) = if n[k] > 0 {
                (sum_q[k] / n[k] as f64, s / n[k] as f64)
            } else {
                (f64::NAN, f64::NAN)
            };
            let (credible_lo, credible_hi) = if n[k] > 0 {
                (beta_quantile(1.0 + s, 1.0 + f, 0.025), beta_quantile(1.0 + s, 1.0 + f, 0.975))
            } else {
                (0.0, 1.0)
            };
            ReliabilityBin {
                bin_lo: k as f64 / n_bins as f64,
                bin_hi: (k + 1) as f64 / n_bins as f64,
                n: n[k],
                mean_prediction,
                empirical_rate,
                credible_lo,
                credible_hi,
            }
        })
        .collect())
}

/// CSV with header `bin_lo,bin_hi,n,mean_prediction,empirical_rate,lo,hi`.
pub fn write_csv<W: Write>(bins: &[ReliabilityBin], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_lo", "bin_hi", "n", "mean_prediction", "empirical_rate", "lo", "hi"])?;
    let fmt = |x: f64| if x.is_nan() { String::new() } else { format!("{x}") };
    for b in bins {
        w.write_record([
            fmt(b.bin_lo),
            fmt(b.bin_hi),
            b.n.to_string(),
            fmt(b.mean_prediction),
            fmt(b.empirical_rate),
            fmt(b.credible_lo),
            fmt(b.credible_hi),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(bins: &[ReliabilityBin]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(bins, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn quantile_of_uniform_is_identity() {
        assert!((beta_quantile(1.0, 1.0, 0.025) - 0.025).abs() < 1e-8);
        assert!((beta_quantile(1.0, 1.0, 0.975) - 0.975).abs() < 1e-8);
        // Beta(2, 1) has cdf x^2
        assert!((beta_quantile(2.0, 1.0, 0.25) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn perfect_calibration_point() {
        let preds: Vec<(f64, bool)> = (0..100).map(|i| (0.5, i % 2 == 0)).collect();
        let bins = reliability_bins(&preds, 10).unwrap();
        let occupied: Vec<_> = bins.iter().filter(|b| b.n > 0).collect();
        assert_eq!(occupied.len(), 1);
        let b = occupied[0];
        assert_eq!(b.empirical_rate, 0.5);
        assert!(b.credible_lo < 0.5 && b.credible_hi > 0.5);
        assert_eq!(bins.iter().map(|b| b.n).sum::<usize>(), 100);
        let empty = bins.iter().find(|b| b.n == 0).unwrap();
        assert_eq!((empty.credible_lo, empty.credible_hi), (0.0, 1.0));
    }

    #[test]
    fn miscalibration_is_visible() {
        let preds = vec![(0.2, true); 50];
        let bins = reliability_bins(&preds, 10).unwrap();
        let b = bins.iter().find(|b| b.n > 0).unwrap();
        assert!((b.mean_prediction - 0.2).abs() < 1e-12);
        assert!(b.credible_lo > 0.2);
        assert!(!b.contains_diagonal());
    }

    #[test]
    fn out_of_range_prediction_rejected() {
        assert!(reliability_bins(&[(1.2, true)], 10).is_err());
        assert!(reliability_bins(&[(-0.1, false)], 10).is_err());
        assert!(reliability_bins(&[(0.5, false)], 0).is_err());
    }

    #[test]
    fn edge_predictions_land_in_end_bins() {
        let bins = reliability_bins(&[(0.0, false), (1.0, true)], 4).unwrap();
        assert_eq!(bins[0].n, 1);
        assert_eq!(bins[3].n, 1);
    }

    #[test]
    fn intervals_shrink_with_more_data() {
        let mut rng = seeded(12);
        let mut widen = 0;
        for _ in 0..50 {
            let small: Vec<(f64, bool)> = (0..200).map(|_| (0.35, rng.random::<f64>() < 0.35)).collect();
            let mut large = small.clone();
            large.extend((0..200).map(|_| (0.35, rng.random::<f64>() < 0.35)));
            let w = |p: &[(f64, bool)]| {
                let b = reliability_bins(p, 10).unwrap()[3];
                b.credible_hi - b.credible_lo
            };
            if w(&large) > w(&small) + 1e-12 {
                widen += 1;
            }
        }
        assert_eq!(widen, 0);
    }

    #[test]
    fn csv_layout() {
        let bins = reliability_bins(&[(0.5, true)], 2).unwrap();
        let text = to_csv_string(&bins).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("bin_lo,bin_hi,n,mean_prediction,empirical_rate,lo,hi"));
        assert!(lines.next().unwrap().starts_with("0,0.5,0,,,0,1"));
        assert!(lines.next().unwrap().starts_with("0.5,1,1,0.5,1,"));
    }
}
