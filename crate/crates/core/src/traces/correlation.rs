//! Normalized autocorrelation of classified parity traces and its
//! exponential fit.

use rayon::prelude::*;

use super::{common_dt, TelegraphTrace};
use crate::error::{Error, Result};
use crate::numerics::levmar::{levmar_fit, FitProblem, ParamSpec};
use crate::numerics::spectral::autocovariance_sums;

const CHUNK: usize = 16;

/// Autocorrelation `⟨P(0)P(τ)⟩` without mean removal. Each lag is averaged
/// over the sample pairs it spans, so it equals 1 at `τ = 0` and everywhere
/// for a constant trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocorrelation {
    pub lags_s: Vec<f64>,
    pub values: Vec<f64>,
    pub n_traces: usize,
}

/// Streaming ensemble average of lag sums; the reduction order is fixed.
pub struct AcfAccumulator {
    dt_s: f64,
    max_lag: usize,
    sums: Vec<f64>,
    pairs: Vec<f64>,
    count: usize,
}

impl AcfAccumulator {
    pub fn new(dt_s: f64, max_lag: usize) -> Self {
        Self {
            dt_s,
            max_lag,
            sums: vec![0.0; max_lag + 1],
            pairs: vec![0.0; max_lag + 1],
            count: 0,
        }
    }

    fn lag_sums(&self, samples: &[f64]) -> Vec<f64> {
        let mut s = autocovariance_sums(samples, self.max_lag);
        s.resize(self.max_lag + 1, 0.0);
        s
    }

    fn add_pairs(&mut self, n: usize) {
        for (j, p) in self.pairs.iter_mut().enumerate() {
            *p += n.saturating_sub(j) as f64;
        }
    }

    pub fn add(&mut self, trace: &TelegraphTrace) -> Result<()> {
        trace.require_classified()?;
        let sums = self.lag_sums(&trace.samples);
        for (a, s) in self.sums.iter_mut().zip(sums) {
            *a += s;
        }
        self.add_pairs(trace.len());
        self.count += 1;
        Ok(())
    }

    /// Adds the traces produced by `make(i)` for `i in 0..n`, in parallel.
    pub fn add_generated<F>(&mut self, n: usize, make: F) -> Result<()>
    where
        F: Fn(usize) -> Result<TelegraphTrace> + Sync,
    {
        let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
        let partials: Vec<(Vec<f64>, Vec<usize>)> = starts
            .par_iter()
            .map(|&s| {
                let mut acc = vec![0.0; self.max_lag + 1];
                let mut lens = Vec::with_capacity(CHUNK);
                for i in s..(s + CHUNK).min(n) {
                    let t = make(i)?;
                    t.require_classified()?;
                    for (a, v) in acc.iter_mut().zip(self.lag_sums(&t.samples)) {
                        *a += v;
                    }
                    lens.push(t.len());
                }
                Ok((acc, lens))
            })
            .collect::<Result<_>>()?;
        for (part, lens) in partials {
            for (a, v) in self.sums.iter_mut().zip(part) {
                *a += v;
            }
            for len in lens {
                self.add_pairs(len);
            }
        }
        self.count += n;
        Ok(())
    }

    pub fn finish(self) -> Result<Autocorrelation> {
        if self.count == 0 || self.sums[0] <= 0.0 {
            return Err(Error::invalid("no samples accumulated"));
        }
        let c0 = self.sums[0] / self.pairs[0];
        let values = self
            .sums
            .iter()
            .zip(&self.pairs)
            .map(|(s, p)| if *p > 0.0 { s / p / c0 } else { 0.0 })
            .collect();
        Ok(Autocorrelation {
            lags_s: (0..=self.max_lag).map(|j| j as f64 * self.dt_s).collect(),
            values,
            n_traces: self.count,
        })
    }
}

/// Lag count for `max_lag_s` (default: a tenth of `shortest` samples).
pub(crate) fn lag_count(dt: f64, shortest: usize, max_lag_s: Option<f64>) -> Result<usize> {
    if shortest < 2 {
        return Err(Error::invalid("autocorrelation needs at least two samples per trace"));
    }
    let max_lag = match max_lag_s {
        Some(l) if !(l > 0.0) => return Err(Error::invalid(format!("max lag must be > 0, got {l}"))),
        Some(l) => ((l / dt).round() as usize).clamp(1, shortest - 1),
        None => (shortest / 10).max(1),
    };
    if max_lag * 10 > shortest {
        log::warn!(
            "max lag {:.4e} s exceeds a tenth of the trace duration {:.4e} s",
            max_lag as f64 * dt,
            shortest as f64 * dt
        );
    }
    Ok(max_lag)
}

/// Ensemble autocorrelation up to `max_lag_s` (default: a tenth of the
/// shortest trace).
pub fn autocorrelation(traces: &[TelegraphTrace], max_lag_s: Option<f64>) -> Result<Autocorrelation> {
    let dt = common_dt(traces)?;
    let shortest = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    let max_lag = lag_count(dt, shortest, max_lag_s)?;
    let mut acc = AcfAccumulator::new(dt, max_lag);
    acc.add_generated(traces.len(), |i| Ok(traces[i].clone()))?;
    acc.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialFit {
    pub gamma_p_hz: f64,
    pub gamma_err_hz: f64,
    pub iterations: usize,
}

impl ExponentialFit {
    pub fn tp_s(&self) -> f64 {
        1.0 / self.gamma_p_hz
    }
}

/// Least-squares fit of `e^{−2Γ_P τ}` to the autocorrelation.
pub fn fit_exponential(acf: &Autocorrelation) -> Result<ExponentialFit> {
    if acf.values.len() < 3 {
        return Err(Error::invalid("autocorrelation fit needs at least three lags"));
    }
    let last = *acf.values.last().unwrap();
    let span = *acf.lags_s.last().unwrap();
    if acf.values.iter().all(|v| (v - 1.0).abs() < 1e-12) {
        return Err(Error::Degenerate("autocorrelation does not decay".into()));
    }
    // Initial rate from the first lag below 1/e, else from the endpoint.
    let gamma0 = acf
        .lags_s
        .iter()
        .zip(&acf.values)
        .skip(1)
        .find(|(_, v)| **v < (-1.0f64).exp())
        .map(|(t, _)| 0.5 / t)
        .unwrap_or_else(|| -0.5 * last.clamp(1e-6, 1.0 - 1e-9).ln() / span);
    let lags = &acf.lags_s;
    let values = &acf.values;
    let problem = FitProblem::new(vec![ParamSpec::positive("gamma", gamma0)], move |q: &[f64]| {
        lags.iter()
            .zip(values)
            .map(|(t, v)| (-2.0 * q[0] * t).exp() - v)
            .collect()
    });
    let fit = levmar_fit(&problem)?;
    let gamma = fit.estimates[0];
    if gamma * span < 1e-9 {
        return Err(Error::Degenerate("fitted decay rate is zero".into()));
    }
    Ok(ExponentialFit {
        gamma_p_hz: gamma,
        gamma_err_hz: fit.covariance[(0, 0)].max(0.0).sqrt(),
        iterations: fit.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{simulate_ensemble, Origin};
    use super::*;

    #[test]
    fn zero_lag_is_one() {
        let ens = simulate_ensemble(2.0, 10.0, 1e-3, 4, 1).unwrap();
        let acf = autocorrelation(&ens, None).unwrap();
        assert_eq!(acf.values[0], 1.0);
        assert_eq!(acf.lags_s.len(), 1001);
        assert!((acf.lags_s[1000] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_trace_is_rejected() {
        let t = TelegraphTrace::new(0.01, vec![1.0; 500], Origin::Measured).unwrap();
        let acf = autocorrelation(&[t], None).unwrap();
        assert!(acf.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(matches!(fit_exponential(&acf), Err(Error::Degenerate(_))));
    }

    #[test]
    fn exact_exponential_recovered() {
        let lags_s: Vec<f64> = (0..200).map(|j| j as f64 * 0.01).collect();
        let values = lags_s.iter().map(|t| (-2.0 * 0.8 * t).exp()).collect();
        let fit = fit_exponential(&Autocorrelation { lags_s, values, n_traces: 1 }).unwrap();
        assert!((fit.gamma_p_hz - 0.8).abs() < 1e-8);
    }

    #[test]
    fn raw_traces_rejected() {
        let t = TelegraphTrace::new(0.01, vec![0.2; 100], Origin::Measured).unwrap();
        assert!(autocorrelation(&[t], None).is_err());
    }

    #[test]
    fn simulated_rate_recovered() {
        let g = 4.0;
        let ens = simulate_ensemble(g, 20.0, 1e-3, 60, 5).unwrap();
        let fit = fit_exponential(&autocorrelation(&ens, None).unwrap()).unwrap();
        assert!((fit.gamma_p_hz / g - 1.0).abs() < 0.1, "{}", fit.gamma_p_hz);
    }
}
