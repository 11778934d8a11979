//! Ensemble statistics feeding the three rate estimators, computed either
//! from traces in memory or streamed from a seeded simulation.

use std::sync::atomic::{AtomicUsize, Ordering};

use super::correlation::{lag_count, AcfAccumulator, Autocorrelation};
use super::filter::{classify_parity, Threshold};
use super::simulate::{inject_readout_noise, simulate_rts_stream, ReadoutNoise};
use super::spectrum::{psd_estimate, PsdAccumulator, PsdEstimate};
use super::{common_dt, count_switches_ensemble, TelegraphTrace};
use crate::error::{Error, Result};
use crate::numerics::rng::RngStream;
use crate::numerics::spectral::Window;

/// Readout-noise streams start here so they never collide with trace streams.
pub const NOISE_STREAM_OFFSET: u64 = 1 << 32;

/// A seeded ensemble; trace `i` uses stream `i`, its noise stream
/// `NOISE_STREAM_OFFSET + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub gamma_p_hz: f64,
    pub duration_s: f64,
    pub dt_s: f64,
    pub n_traces: usize,
    pub seed: u64,
    pub noise: Option<ReadoutNoise>,
    pub threshold: Threshold,
}

impl EnsembleSpec {
    pub fn new(gamma_p_hz: f64, duration_s: f64, dt_s: f64, n_traces: usize, seed: u64) -> Self {
        Self {
            gamma_p_hz,
            duration_s,
            dt_s,
            n_traces,
            seed,
            noise: None,
            threshold: Threshold::Auto,
        }
    }

    /// Raw trace `i`, with readout noise when configured.
    pub fn raw_trace(&self, i: usize) -> Result<TelegraphTrace> {
        let t = simulate_rts_stream(self.gamma_p_hz, self.duration_s, self.dt_s, RngStream::new(self.seed, i as u64))?;
        match &self.noise {
            Some(n) => inject_readout_noise(&t, n, RngStream::new(self.seed, NOISE_STREAM_OFFSET + i as u64)),
            None => Ok(t),
        }
    }

    /// Classified trace `i` and whether its level split was unimodal.
    pub fn trace(&self, i: usize) -> Result<(TelegraphTrace, bool)> {
        let c = classify_parity(&self.raw_trace(i)?, self.threshold)?;
        Ok((c.trace, c.unimodal))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub psd: PsdEstimate,
    pub acf: Autocorrelation,
    /// Pooled sign changes per second.
    pub switch_rate_hz: f64,
    pub n_traces: usize,
    pub unimodal_traces: usize,
}

/// Statistics of classified traces held in memory.
pub fn ensemble_statistics(
    traces: &[TelegraphTrace],
    concatenate: bool,
    window: Window,
    max_lag_s: Option<f64>,
) -> Result<EnsembleStats> {
    for t in traces {
        t.require_classified()?;
    }
    let psd = psd_estimate(traces, concatenate, window)?;
    let dt = common_dt(traces)?;
    let shortest = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    let mut acc = AcfAccumulator::new(dt, lag_count(dt, shortest, max_lag_s)?);
    acc.add_generated(traces.len(), |i| Ok(traces[i].clone()))?;
    Ok(EnsembleStats {
        psd,
        acf: acc.finish()?,
        switch_rate_hz: count_switches_ensemble(traces)?,
        n_traces: traces.len(),
        unimodal_traces: 0,
    })
}

/// Statistics of a simulated ensemble without holding it in memory. Traces
/// are regenerated for the autocorrelation pass; results are independent of
/// the thread count.
pub fn simulated_statistics(spec: &EnsembleSpec, window: Window, max_lag_s: Option<f64>) -> Result<EnsembleStats> {
    if spec.n_traces == 0 {
        return Err(Error::invalid("ensemble needs at least one trace"));
    }
    let first = spec.trace(0)?.0;
    let (len, dt) = (first.len(), first.dt_s);
    let changes = AtomicUsize::new(0);
    let unimodal = AtomicUsize::new(0);
    let mut psd = PsdAccumulator::new(len, dt, window)?;
    psd.add_generated(spec.n_traces, |i| {
        let (t, uni) = spec.trace(i)?;
        changes.fetch_add(t.sign_changes(), Ordering::Relaxed);
        unimodal.fetch_add(uni as usize, Ordering::Relaxed);
        Ok(t.samples)
    })?;
    let mut acf = AcfAccumulator::new(dt, lag_count(dt, len, max_lag_s)?);
    acf.add_generated(spec.n_traces, |i| Ok(spec.trace(i)?.0))?;
    let time = spec.n_traces as f64 * (len - 1) as f64 * dt;
    Ok(EnsembleStats {
        psd: psd.finish()?,
        acf: acf.finish()?,
        switch_rate_hz: changes.into_inner() as f64 / time,
        n_traces: spec.n_traces,
        unimodal_traces: unimodal.into_inner(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streamed_matches_in_memory() {
        let spec = EnsembleSpec::new(2.0, 4.0, 2e-3, 20, 3);
        let traces: Vec<TelegraphTrace> = (0..spec.n_traces).map(|i| spec.trace(i).unwrap().0).collect();
        let a = simulated_statistics(&spec, Window::Rectangular, Some(0.2)).unwrap();
        let b = ensemble_statistics(&traces, false, Window::Rectangular, Some(0.2)).unwrap();
        assert_eq!(a.psd.frequencies, b.psd.frequencies);
        for (x, y) in a.psd.power.iter().zip(&b.psd.power) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-300));
        }
        assert_eq!(a.acf.values.len(), b.acf.values.len());
        for (x, y) in a.acf.values.iter().zip(&b.acf.values) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(a.switch_rate_hz, b.switch_rate_hz);
    }

    #[test]
    fn noisy_traces_are_classified() {
        let mut spec = EnsembleSpec::new(1.0, 2.0, 1e-3, 2, 5);
        spec.noise = Some(ReadoutNoise::new(0.2, 0.0));
        let (t, _) = spec.trace(1).unwrap();
        assert!(t.is_classified());
        assert_ne!(spec.raw_trace(1).unwrap(), spec.raw_trace(0).unwrap());
    }
}
