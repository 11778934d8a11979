//! Charge-parity telegraph traces: simulation, cleaning, classification and
//! the three switching-rate estimators (switch counting, Lorentzian fit of
//! the power spectrum, exponential fit of the autocorrelation).
//!
//! `Γ_P` is the per-direction rate of a symmetric two-state chain. The
//! autocorrelation of a ±1 trace decays as `e^{−2Γ_P τ}` and the one-sided
//! spectrum is `A·4Γ_P/((2Γ_P)² + (2πf)²)`.

pub mod correlation;
pub mod ensemble;
pub mod filter;
pub mod jumps;
pub mod ramsey;
pub mod simulate;
pub mod spectrum;

pub use correlation::{autocorrelation, fit_exponential, AcfAccumulator, Autocorrelation, ExponentialFit};
pub use ensemble::{ensemble_statistics, simulated_statistics, EnsembleSpec, EnsembleStats};
pub use filter::{classify_parity, moving_median, Classification, Threshold};
pub use jumps::{detect_charge_jumps, wrap_offset, ChargeJump, JumpCatalog, DEFAULT_JUMP_THRESHOLD_E};
pub use ramsey::{ramsey_parity_map, ramsey_populations, RamseyMap};
pub use simulate::{inject_readout_noise, simulate_ensemble, simulate_rts, simulate_rts_stream, ReadoutNoise};
pub use spectrum::{fit_lorentzian, lorentzian, psd_estimate, FitBand, PsdAccumulator, PsdEstimate, RtsFit};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Simulated,
    Measured,
}

/// Uniformly sampled parity record. Classified traces hold only ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct TelegraphTrace {
    pub dt_s: f64,
    pub samples: Vec<f64>,
    pub origin: Origin,
}

impl TelegraphTrace {
    pub fn new(dt_s: f64, samples: Vec<f64>, origin: Origin) -> Result<Self> {
        if !(dt_s > 0.0) || !dt_s.is_finite() {
            return Err(Error::invalid(format!("sample interval must be > 0, got {dt_s}")));
        }
        if samples.is_empty() {
            return Err(Error::invalid("trace is empty"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("trace contains non-finite samples"));
        }
        Ok(Self { dt_s, samples, origin })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `n·dt`.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 * self.dt_s
    }

    pub fn is_classified(&self) -> bool {
        self.samples.iter().all(|&x| x == 1.0 || x == -1.0)
    }

    pub fn require_classified(&self) -> Result<()> {
        if self.is_classified() {
            Ok(())
        } else {
            Err(Error::invalid("operation requires a classified ±1 trace"))
        }
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Number of sign changes between consecutive samples.
    pub fn sign_changes(&self) -> usize {
        self.samples
            .windows(2)
            .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
            .count()
    }
}

/// Sign changes per unit time, `changes / ((n−1)·dt)`.
pub fn count_switches(trace: &TelegraphTrace) -> Result<f64> {
    trace.require_classified()?;
    if trace.len() < 2 {
        return Err(Error::invalid("switch counting needs at least two samples"));
    }
    Ok(trace.sign_changes() as f64 / ((trace.len() - 1) as f64 * trace.dt_s))
}

/// Pooled switch rate over an ensemble.
pub fn count_switches_ensemble(traces: &[TelegraphTrace]) -> Result<f64> {
    let mut changes = 0usize;
    let mut time = 0.0;
    for t in traces {
        t.require_classified()?;
        changes += t.sign_changes();
        time += (t.len().saturating_sub(1)) as f64 * t.dt_s;
    }
    if !(time > 0.0) {
        return Err(Error::invalid("ensemble has no sample intervals"));
    }
    Ok(changes as f64 / time)
}

/// Checks that all traces share one sample interval and returns it.
pub(crate) fn common_dt(traces: &[TelegraphTrace]) -> Result<f64> {
    let first = traces.first().ok_or_else(|| Error::invalid("no traces supplied"))?.dt_s;
    if traces.iter().any(|t| (t.dt_s - first).abs() > 1e-12 * first) {
        return Err(Error::invalid("traces have mixed sample intervals"));
    }
    Ok(first)
}
