//! Periodogram and autocorrelation primitives on uniformly sampled series.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

/// Reusable one-sided periodogram for series of a fixed length.
///
/// Bins `k = 1..=n/2` at `k/(n·dt)`. The DC bin is dropped (the mean is
/// removed first) and the Nyquist bin is not doubled, so for the rectangular
/// window `Σ P_k · df` equals the (biased) sample variance exactly.
pub struct PeriodogramPlan {
    n: usize,
    dt: f64,
    weights: Vec<f64>,
    norm: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl PeriodogramPlan {
    pub fn new(n: usize, dt: f64, window: Window) -> Self {
        assert!(n >= 2, "periodogram needs at least two samples");
        let weights = window.weights(n);
        let sum_w2: f64 = weights.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(n);
        Self {
            n,
            dt,
            weights,
            norm: dt / sum_w2,
            fft,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let df = 1.0 / (self.n as f64 * self.dt);
        (1..=self.n / 2).map(|k| k as f64 * df).collect()
    }

    pub fn compute(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "series length does not match the plan");
        let mean = x.iter().sum::<f64>() / self.n as f64;
        let mut buf: Vec<Complex64> = x
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        let half = self.n / 2;
        (1..=half)
            .map(|k| {
                let p = buf[k].norm_sqr() * self.norm;
                if self.n % 2 == 0 && k == half {
                    p
                } else {
                    2.0 * p
                }
            })
            .collect()
    }
}

/// Biased autocorrelation `c_j = (1/n) Σ x_i x_{i+j}` for `j = 0..=max_lag`,
/// without mean removal, divided by `c_0`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let raw = autocovariance_sums(x, max_lag);
    let c0 = raw[0];
    if c0 == 0.0 {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|c| c / c0).collect()
}

/// Unnormalized lag sums `Σ_i x_i x_{i+j}` for `j = 0..=max_lag`.
pub fn autocovariance_sums(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let max_lag = max_lag.min(n.saturating_sub(1));
    if n == 0 {
        return vec![];
    }
    let m = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    buf.resize(m, Complex64::new(0.0, 0.0));
    fwd.process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    (0..=max_lag).map(|j| buf[j].re / m as f64).collect()
}
