//! Exact simulation of the symmetric telegraph process and readout noise.

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;

use super::{Origin, TelegraphTrace};
use crate::error::{Error, Result};
use crate::numerics::rng::RngStream;

/// Largest admissible `Γ_P·dt`.
pub const MAX_RATE_DT: f64 = 0.1;

fn sample_count(duration_s: f64, dt_s: f64) -> Result<usize> {
    if !(dt_s > 0.0) || !(duration_s >= dt_s) || !duration_s.is_finite() {
        return Err(Error::invalid(format!(
            "need 0 < dt <= duration (dt={dt_s}, duration={duration_s})"
        )));
    }
    Ok((duration_s / dt_s).round() as usize)
}

/// One trace drawn from `stream`. Dwell times are exponential with rate
/// `gamma_p_hz`; the initial state is uniform over ±1.
pub fn simulate_rts_stream(gamma_p_hz: f64, duration_s: f64, dt_s: f64, stream: RngStream) -> Result<TelegraphTrace> {
    if !(gamma_p_hz >= 0.0) || !gamma_p_hz.is_finite() {
        return Err(Error::invalid(format!("switching rate must be >= 0, got {gamma_p_hz}")));
    }
    if gamma_p_hz * dt_s >= MAX_RATE_DT {
        return Err(Error::invalid(format!(
            "Γ_P·dt = {} must be below {MAX_RATE_DT} to resolve switches",
            gamma_p_hz * dt_s
        )));
    }
    let n = sample_count(duration_s, dt_s)?;
    let mut rng = stream.rng();
    let mut state = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut samples = Vec::with_capacity(n);
    if gamma_p_hz == 0.0 {
        samples.resize(n, state);
    } else {
        let exp = Exp::new(gamma_p_hz).map_err(|e| Error::invalid(e.to_string()))?;
        let mut next = exp.sample(&mut rng);
        for i in 0..n {
            let t = i as f64 * dt_s;
            while next <= t {
                state = -state;
                next += exp.sample(&mut rng);
            }
            samples.push(state);
        }
    }
    TelegraphTrace::new(dt_s, samples, Origin::Simulated)
}

/// One trace from stream 0 of `seed`.
pub fn simulate_rts(gamma_p_hz: f64, duration_s: f64, dt_s: f64, seed: u64) -> Result<TelegraphTrace> {
    simulate_rts_stream(gamma_p_hz, duration_s, dt_s, RngStream::new(seed, 0))
}

/// `n` traces, trace `i` drawn from stream `i` of `seed`.
pub fn simulate_ensemble(gamma_p_hz: f64, duration_s: f64, dt_s: f64, n: usize, seed: u64) -> Result<Vec<TelegraphTrace>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| simulate_rts_stream(gamma_p_hz, duration_s, dt_s, RngStream::new(seed, i)))
        .collect()
}

/// White Gaussian readout noise plus rare excursions to an outlier level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutNoise {
    pub sigma: f64,
    pub excitation_prob: f64,
    pub outlier_level: f64,
}

impl ReadoutNoise {
    pub fn new(sigma: f64, excitation_prob: f64) -> Self {
        Self {
            sigma,
            excitation_prob,
            outlier_level: 3.0,
        }
    }
}

pub fn inject_readout_noise(trace: &TelegraphTrace, noise: &ReadoutNoise, stream: RngStream) -> Result<TelegraphTrace> {
    if !(noise.sigma >= 0.0) {
        return Err(Error::invalid("noise sigma must be >= 0"));
    }
    if !(0.0..=0.1).contains(&noise.excitation_prob) {
        return Err(Error::invalid("excitation probability must lie in [0, 0.1]"));
    }
    if noise.sigma == 0.0 && noise.excitation_prob == 0.0 {
        return Ok(trace.clone());
    }
    let mut rng = stream.rng();
    let normal = Normal::new(0.0, noise.sigma.max(f64::MIN_POSITIVE)).map_err(|e| Error::invalid(e.to_string()))?;
    let samples = trace
        .samples
        .iter()
        .map(|&x| {
            let jitter = if noise.sigma > 0.0 { normal.sample(&mut rng) } else { 0.0 };
            let excited = noise.excitation_prob > 0.0 && rng.random::<f64>() < noise.excitation_prob;
            if excited {
                noise.outlier_level + jitter
            } else {
                x + jitter
            }
        })
        .collect();
    TelegraphTrace::new(trace.dt_s, samples, trace.origin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_constant() {
        let t = simulate_rts(0.0, 10.0, 0.01, 3).unwrap();
        assert_eq!(t.sign_changes(), 0);
        assert_eq!(t.len(), 1000);
    }

    #[test]
    fn reproducible_and_stream_dependent() {
        let a = simulate_rts(5.0, 10.0, 1e-3, 11).unwrap();
        let b = simulate_rts(5.0, 10.0, 1e-3, 11).unwrap();
        let c = simulate_rts_stream(5.0, 10.0, 1e-3, RngStream::new(11, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn precondition_on_sampling() {
        assert!(simulate_rts(200.0, 1.0, 1e-3, 0).is_err());
        assert!(simulate_rts(1.0, 1e-4, 1e-3, 0).is_err());
        assert!(simulate_rts(-1.0, 1.0, 1e-3, 0).is_err());
    }

    #[test]
    fn mean_obeys_clt_bound() {
        let g = 2.0;
        let ens = simulate_ensemble(g, 50.0, 5e-3, 40, 5).unwrap();
        let n = ens.len() as f64;
        let dur = ens[0].duration_s();
        let mean = ens.iter().map(|t| t.mean()).sum::<f64>() / n;
        assert!(mean.abs() < 3.0 / (2.0 * g * dur * n).sqrt(), "{mean}");
    }

    #[test]
    fn dwell_times_are_exponential() {
        // Kolmogorov–Smirnov against Exp(Γ) on interior dwells.
        let (g, dt) = (1.0, 2e-3);
        let t = simulate_rts(g, 11_000.0, dt, 21).unwrap();
        let mut dwells = Vec::new();
        let mut last = None;
        for (i, w) in t.samples.windows(2).enumerate() {
            if w[0] != w[1] {
                if let Some(l) = last {
                    dwells.push((i - l) as f64 * t.dt_s);
                }
                last = Some(i);
            }
        }
        assert!(dwells.len() > 10_000);
        dwells.truncate(10_000);
        dwells.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = dwells.len() as f64;
        let d = dwells
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = 1.0 - (-g * x).exp();
                ((i + 1) as f64 / n - cdf).abs().max((cdf - i as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        // Sampling moves each dwell by less than dt, shifting the CDF by < g·dt.
        assert!(d < 1.63 / n.sqrt() + 2.0 * g * dt, "KS statistic {d}");
    }

    #[test]
    fn noise_identity_and_outlier_fraction() {
        let t = simulate_rts(1.0, 100.0, 1e-3, 2).unwrap();
        assert_eq!(inject_readout_noise(&t, &ReadoutNoise::new(0.0, 0.0), RngStream::new(0, 0)).unwrap(), t);
        let noisy = inject_readout_noise(&t, &ReadoutNoise::new(0.0, 0.01), RngStream::new(9, 0)).unwrap();
        let n = t.len() as f64;
        let frac = noisy.samples.iter().filter(|&&x| x == 3.0).count() as f64 / n;
        let bound = 4.0 * (0.01 * 0.99 / n).sqrt();
        assert!((frac - 0.01).abs() < bound, "{frac}");
        assert!(inject_readout_noise(&t, &ReadoutNoise::new(0.0, 0.5), RngStream::new(9, 0)).is_err());
    }
}
