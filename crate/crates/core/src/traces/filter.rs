//! Moving-median smoothing and two-level classification.

use super::TelegraphTrace;
use crate::error::{Error, Result};

/// Sliding median over `[i − w/2, i − w/2 + w − 1]`, truncated at the edges.
/// Even-sized windows take the lower median.
pub fn moving_median(trace: &TelegraphTrace, window: usize) -> Result<TelegraphTrace> {
    if window == 0 {
        return Err(Error::invalid("median window must be >= 1"));
    }
    let x = &trace.samples;
    let n = x.len();
    let half = window / 2;
    let mut buf = Vec::with_capacity(window);
    let samples = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + window - half).min(n);
            buf.clear();
            buf.extend_from_slice(&x[lo..hi]);
            let k = (buf.len() - 1) / 2;
            *buf.select_nth_unstable_by(k, |a, b| a.total_cmp(b)).1
        })
        .collect();
    TelegraphTrace::new(trace.dt_s, samples, trace.origin)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub trace: TelegraphTrace,
    pub threshold: f64,
    /// Cluster means (low, high) of the automatic split.
    pub levels: Option<(f64, f64)>,
    /// Set when the two clusters are closer than twice their pooled spread.
    pub unimodal: bool,
}

/// Maps samples above the threshold to +1 and the rest to −1.
pub fn classify_parity(raw: &TelegraphTrace, threshold: Threshold) -> Result<Classification> {
    if raw.is_classified() && threshold == Threshold::Auto {
        let both = raw.samples.contains(&1.0) && raw.samples.contains(&-1.0);
        return Ok(Classification {
            trace: raw.clone(),
            threshold: 0.0,
            levels: Some((-1.0, 1.0)),
            unimodal: !both,
        });
    }
    let (thr, levels, unimodal) = match threshold {
        Threshold::Value(v) => (v, None, false),
        Threshold::Auto => {
            let split = two_cluster_split(&raw.samples);
            (split.threshold, Some((split.low_mean, split.high_mean)), split.unimodal)
        }
    };
    if unimodal {
        log::warn!("parity classification: samples look unimodal (threshold {thr:.4})");
    }
    let samples = raw.samples.iter().map(|&x| if x > thr { 1.0 } else { -1.0 }).collect();
    Ok(Classification {
        trace: TelegraphTrace::new(raw.dt_s, samples, raw.origin)?,
        threshold: thr,
        levels,
        unimodal,
    })
}

struct Split {
    threshold: f64,
    low_mean: f64,
    high_mean: f64,
    unimodal: bool,
}

/// Exact 1D two-cluster split minimizing the within-cluster sum of squares.
fn two_cluster_split(x: &[f64]) -> Split {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n < 2 || v[0] == v[n - 1] {
        return Split {
            threshold: v[0],
            low_mean: v[0],
            high_mean: v[0],
            unimodal: true,
        };
    }
    let shift = v[n / 2];
    let mut prefix = vec![(0.0, 0.0); n + 1];
    for (i, &y) in v.iter().enumerate() {
        let d = y - shift;
        prefix[i + 1] = (prefix[i].0 + d, prefix[i].1 + d * d);
    }
    let (tot, tot2) = prefix[n];
    let mut best = (f64::INFINITY, 1);
    for k in 1..n {
        if v[k] == v[k - 1] {
            continue;
        }
        let (s1, q1) = prefix[k];
        let (s2, q2) = (tot - s1, tot2 - q1);
        let sse = (q1 - s1 * s1 / k as f64) + (q2 - s2 * s2 / (n - k) as f64);
        if sse < best.0 {
            best = (sse, k);
        }
    }
    let k = best.1;
    let low_mean = shift + prefix[k].0 / k as f64;
    let high_mean = shift + (tot - prefix[k].0) / (n - k) as f64;
    let sigma = (best.0.max(0.0) / n as f64).sqrt();
    Split {
        threshold: 0.5 * (low_mean + high_mean),
        low_mean,
        high_mean,
        unimodal: high_mean - low_mean < 2.0 * sigma,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{simulate_rts, Origin};
    use super::*;
    use crate::numerics::rng::RngStream;
    use crate::traces::{inject_readout_noise, ReadoutNoise};

    fn tr(v: Vec<f64>) -> TelegraphTrace {
        TelegraphTrace::new(1.0, v, Origin::Measured).unwrap()
    }

    #[test]
    fn window_one_and_constant_are_identities() {
        let t = tr(vec![0.3, -1.2, 5.0, 2.0]);
        assert_eq!(moving_median(&t, 1).unwrap(), t);
        let c = tr(vec![0.7; 50]);
        assert_eq!(moving_median(&c, 10).unwrap(), c);
        assert!(moving_median(&t, 0).is_err());
    }

    #[test]
    fn single_outlier_removed() {
        let mut v = vec![1.0; 40];
        v[17] = -1.0;
        v[30] = 7.0;
        let m = moving_median(&tr(v), 10).unwrap();
        assert!(m.samples.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn lower_median_on_even_window() {
        let m = moving_median(&tr(vec![1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        // Window [i−1, i]; the first is truncated to one sample.
        assert_eq!(m.samples, vec![1.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn odd_window_is_idempotent_on_clean_segments() {
        let t = simulate_rts(0.5, 200.0, 0.01, 4).unwrap();
        let once = moving_median(&t, 9).unwrap();
        assert_eq!(moving_median(&once, 9).unwrap(), once);
    }

    #[test]
    fn median_recovers_clean_trace_after_noise() {
        let clean = simulate_rts(0.37, 60.0, 3e-4, 8).unwrap();
        let noisy = inject_readout_noise(&clean, &ReadoutNoise::new(0.3, 0.01), RngStream::new(8, 1)).unwrap();
        let smoothed = moving_median(&noisy, 10).unwrap();
        let cls = classify_parity(&smoothed, Threshold::Value(0.0)).unwrap();
        let mism = cls.trace.samples.iter().zip(&clean.samples).filter(|(a, b)| a != b).count();
        assert!((mism as f64) < 0.005 * clean.len() as f64, "{mism}");
    }

    #[test]
    fn classification_of_noisy_levels() {
        let clean = simulate_rts(0.37, 60.0, 3e-4, 5).unwrap();
        let noisy = inject_readout_noise(&clean, &ReadoutNoise::new(0.2, 0.0), RngStream::new(5, 1)).unwrap();
        let cls = classify_parity(&noisy, Threshold::Auto).unwrap();
        let agree = cls.trace.samples.iter().zip(&clean.samples).filter(|(a, b)| a == b).count();
        assert!(agree as f64 >= 0.99 * clean.len() as f64);
        assert!(cls.threshold.abs() < 0.05);
        assert!(!cls.unimodal);
    }

    #[test]
    fn classified_input_unchanged_and_degenerate_input_flagged() {
        let t = tr(vec![1.0, -1.0, -1.0, 1.0]);
        assert_eq!(classify_parity(&t, Threshold::Auto).unwrap().trace, t);
        assert!(classify_parity(&tr(vec![0.2; 30]), Threshold::Auto).unwrap().unimodal);
    }
}
