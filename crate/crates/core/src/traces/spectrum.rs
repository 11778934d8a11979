//! Averaged periodograms and the Lorentzian telegraph-spectrum fit.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{common_dt, TelegraphTrace};
use crate::error::{Error, Result};
use crate::numerics::levmar::{covariance_at, levmar_fit, Bound, FitOptions, FitProblem, ParamSpec};
use crate::numerics::spectral::{PeriodogramPlan, Window};

/// One-sided power spectral density on a uniform positive frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub n_averages: usize,
}

impl PsdEstimate {
    pub fn df(&self) -> f64 {
        if self.frequencies.len() > 1 {
            self.frequencies[1] - self.frequencies[0]
        } else {
            self.frequencies[0]
        }
    }

    /// `Σ P·df`.
    pub fn integrated_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.df()
    }
}

/// Streaming Bartlett average of equal-length traces.
///
/// Traces are accumulated in fixed-size chunks so the floating-point sum does
/// not depend on the thread count.
pub struct PsdAccumulator {
    plan: PeriodogramPlan,
    sum: Vec<f64>,
    count: usize,
}

const CHUNK: usize = 16;

impl PsdAccumulator {
    pub fn new(len: usize, dt_s: f64, window: Window) -> Result<Self> {
        if len < 16 {
            return Err(Error::invalid("traces must hold at least 16 samples for a spectrum"));
        }
        Ok(Self {
            plan: PeriodogramPlan::new(len, dt_s, window),
            sum: vec![0.0; len / 2],
            count: 0,
        })
    }

    pub fn add(&mut self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.plan.len() {
            return Err(Error::invalid("traces must share one length for Bartlett averaging"));
        }
        for (s, p) in self.sum.iter_mut().zip(self.plan.compute(samples)) {
            *s += p;
        }
        self.count += 1;
        Ok(())
    }

    /// Adds the traces produced by `make(i)` for `i in 0..n`, in parallel.
    pub fn add_generated<F>(&mut self, n: usize, make: F) -> Result<()>
    where
        F: Fn(usize) -> Result<Vec<f64>> + Sync,
    {
        let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
        let partials: Vec<Vec<f64>> = starts
            .par_iter()
            .map(|&s| {
                let mut acc = vec![0.0; self.sum.len()];
                for i in s..(s + CHUNK).min(n) {
                    let x = make(i)?;
                    if x.len() != self.plan.len() {
                        return Err(Error::invalid("traces must share one length for Bartlett averaging"));
                    }
                    for (a, p) in acc.iter_mut().zip(self.plan.compute(&x)) {
                        *a += p;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?;
        for part in partials {
            for (s, p) in self.sum.iter_mut().zip(part) {
                *s += p;
            }
        }
        self.count += n;
        Ok(())
    }

    pub fn finish(self) -> Result<PsdEstimate> {
        if self.count == 0 {
            return Err(Error::invalid("no traces accumulated"));
        }
        let c = self.count as f64;
        Ok(PsdEstimate {
            frequencies: self.plan.frequencies(),
            power: self.sum.into_iter().map(|s| s / c).collect(),
            n_averages: self.count,
        })
    }
}

/// Mean periodogram of `traces`; with `concatenate` the traces are first
/// joined into one record.
pub fn psd_estimate(traces: &[TelegraphTrace], concatenate: bool, window: Window) -> Result<PsdEstimate> {
    let dt = common_dt(traces)?;
    if concatenate {
        let joined: Vec<f64> = traces.iter().flat_map(|t| t.samples.iter().copied()).collect();
        let mut acc = PsdAccumulator::new(joined.len(), dt, window)?;
        acc.add(&joined)?;
        return acc.finish();
    }
    let len = traces[0].len();
    if traces.iter().any(|t| t.len() != len) {
        return Err(Error::invalid("traces must share one length for Bartlett averaging"));
    }
    let mut acc = PsdAccumulator::new(len, dt, window)?;
    acc.add_generated(traces.len(), |i| Ok(traces[i].samples.clone()))?;
    acc.finish()
}

/// `A·4Γ/((2Γ)² + (2πf)²) + B`.
pub fn lorentzian(f: f64, gamma: f64, amplitude: f64, offset: f64) -> f64 {
    let w = std::f64::consts::TAU * f;
    amplitude * 4.0 * gamma / (4.0 * gamma * gamma + w * w) + offset
}

/// Frequency band used by the fit, Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBand {
    pub f_min: f64,
    pub f_max: f64,
}

impl FitBand {
    /// From the lowest bin to a tenth of the Nyquist frequency.
    pub fn default_for(psd: &PsdEstimate) -> Self {
        let nyquist = *psd.frequencies.last().unwrap_or(&0.0);
        Self {
            f_min: psd.frequencies.first().copied().unwrap_or(0.0),
            f_max: 0.1 * nyquist,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtsFit {
    pub gamma_p_hz: f64,
    pub amplitude: f64,
    pub offset: f64,
    /// Covariance of (Γ_P, A, B).
    pub covariance: DMatrix<f64>,
    pub band: FitBand,
    pub n_bins: usize,
    /// False when the knee `Γ_P/π` lies outside the fitted band.
    pub knee_in_band: bool,
    /// True when Γ_P came from a profile over a fixed grid because the joint
    /// fit did not converge.
    pub profiled: bool,
    pub iterations: usize,
}

impl RtsFit {
    pub fn tp_s(&self) -> f64 {
        1.0 / self.gamma_p_hz
    }

    pub fn knee_hz(&self) -> f64 {
        self.gamma_p_hz / std::f64::consts::PI
    }

    pub fn gamma_err_hz(&self) -> f64 {
        self.covariance[(0, 0)].max(0.0).sqrt()
    }
}

/// Least-squares fit of the Lorentzian to `ln P` over `band` (default
/// [`FitBand::default_for`]).
pub fn fit_lorentzian(psd: &PsdEstimate, band: Option<FitBand>) -> Result<RtsFit> {
    let band = band.unwrap_or_else(|| FitBand::default_for(psd));
    let (f, p): (Vec<f64>, Vec<f64>) = psd
        .frequencies
        .iter()
        .zip(&psd.power)
        .filter(|(f, p)| **f >= band.f_min && **f <= band.f_max && **p > 0.0)
        .map(|(f, p)| (*f, *p))
        .unzip();
    if f.len() < 8 {
        return Err(Error::invalid(format!(
            "Lorentzian fit needs >= 8 positive bins in [{}, {}] Hz, found {}",
            band.f_min,
            band.f_max,
            f.len()
        )));
    }

    // Start from the half-power point of the low-frequency plateau.
    let m = (f.len() / 50).clamp(1, 8);
    let plateau = p[..m].iter().sum::<f64>() / m as f64;
    let floor = p[f.len() - m..].iter().sum::<f64>() / m as f64;
    let half = f
        .iter()
        .zip(&p)
        .find(|(_, v)| **v < 0.5 * plateau)
        .map(|(f, _)| *f)
        .unwrap_or(f[f.len() / 2]);
    // Γ_P is confined to knees within a decade of the band.
    let pi = std::f64::consts::PI;
    let g_lo = pi * f[0] / 10.0;
    let g_hi = pi * f[f.len() - 1] * 10.0;
    let gamma0 = (pi * half).clamp(g_lo * 1.01, g_hi / 1.01);
    let amp0 = plateau * gamma0;
    // A floor below 1e-9 of the plateau is indistinguishable from zero.
    let pmax = p.iter().copied().fold(0.0, f64::max);
    let (b_lo, b_hi) = (1e-9 * pmax, 10.0 * pmax);
    let offset0 = (0.1 * floor).clamp(b_lo * 1.01, b_hi / 1.01);

    let residuals = |q: &[f64]| -> Vec<f64> {
        f.iter()
            .zip(&p)
            .map(|(&fi, &pi)| (lorentzian(fi, q[0], q[1], q[2]) / pi).ln())
            .collect()
    };
    let opts = FitOptions {
        max_iterations: 500,
        ..FitOptions::default()
    };
    let specs = |g: f64, a: f64, b: f64| {
        vec![
            ParamSpec::new("gamma", g, Bound::LogRange(g_lo, g_hi)),
            ParamSpec::positive("amplitude", a),
            ParamSpec::new("offset", b, Bound::LogRange(b_lo, b_hi)),
        ]
    };
    let (estimates, covariance, iterations, profiled) =
        match levmar_fit(&FitProblem::new(specs(gamma0, amp0, offset0), residuals).with_options(opts)) {
            Ok(fit) => (fit.estimates, fit.covariance, fit.iterations, false),
            Err(Error::NonConvergence { iterations, cost }) => {
                // With the knee outside the band, Γ_P trades off against A and
                // B along a nearly flat valley. Profile over Γ_P instead.
                let best = profile_gamma(&f, &p, g_lo, g_hi, (b_lo, b_hi), offset0, opts);
                let knee = best.map(|e| e[0] / pi);
                match (best, knee) {
                    (Some(e), Some(k)) if k < band.f_min || k > band.f_max => {
                        let inner = |v: f64, lo: f64, hi: f64| v.clamp(lo * (1.0 + 1e-9), hi * (1.0 - 1e-9));
                        let at = specs(inner(e[0], g_lo, g_hi), e[1], inner(e[2], b_lo, b_hi));
                        let (cov, _) = covariance_at(&FitProblem::new(at, residuals).with_options(opts))?;
                        (e.to_vec(), cov, iterations, true)
                    }
                    _ => return Err(Error::NonConvergence { iterations, cost }),
                }
            }
            Err(e) => return Err(e),
        };
    let gamma = estimates[0];
    let knee = gamma / pi;
    let knee_in_band = knee >= band.f_min && knee <= band.f_max;
    if !knee_in_band {
        log::warn!("Lorentzian knee {knee:.4e} Hz lies outside the fitted band [{:.4e}, {:.4e}] Hz", band.f_min, band.f_max);
    }
    Ok(RtsFit {
        gamma_p_hz: gamma,
        amplitude: estimates[1],
        offset: estimates[2],
        covariance,
        band,
        n_bins: f.len(),
        knee_in_band,
        profiled,
        iterations,
    })
}

/// Best (Γ, A, B) over a log grid of fixed Γ values, each with A and B fitted.
fn profile_gamma(
    f: &[f64],
    p: &[f64],
    g_lo: f64,
    g_hi: f64,
    (b_lo, b_hi): (f64, f64),
    offset0: f64,
    opts: FitOptions,
) -> Option<[f64; 3]> {
    const POINTS: usize = 121;
    let w0 = std::f64::consts::TAU * f[0];
    let mut best: Option<([f64; 3], f64)> = None;
    for i in 1..POINTS - 1 {
        let g = g_lo * (g_hi / g_lo).powf(i as f64 / (POINTS - 1) as f64);
        let a0 = ((p[0] - offset0).max(0.5 * p[0]) * (4.0 * g * g + w0 * w0) / (4.0 * g)).max(f64::MIN_POSITIVE);
        let params = vec![
            ParamSpec::positive("gamma", g).fixed(),
            ParamSpec::positive("amplitude", a0),
            ParamSpec::new("offset", offset0, Bound::LogRange(b_lo, b_hi)),
        ];
        let r = |q: &[f64]| -> Vec<f64> {
            f.iter()
                .zip(p)
                .map(|(&fi, &pi)| (lorentzian(fi, q[0], q[1], q[2]) / pi).ln())
                .collect()
        };
        if let Ok(fit) = levmar_fit(&FitProblem::new(params, r).with_options(opts)) {
            if best.as_ref().map_or(true, |b| fit.cost < b.1) {
                best = Some(([g, fit.estimates[1], fit.estimates[2]], fit.cost));
            }
        }
    }
    best.map(|b| b.0)
}
