//! Relaxation and echo fits, thermal-photon dephasing and the 1/f
//! charge-noise amplitude.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::levmar::{levmar_fit, FitOptions, FitProblem, ParamSpec};
use crate::units::{BOLTZMANN, PLANCK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKind {
    Relaxation,
    Echo,
}

impl std::str::FromStr for DecayKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relaxation" | "t1" => Ok(Self::Relaxation),
            "echo" | "t2" => Ok(Self::Echo),
            other => Err(Error::invalid(format!("unknown decay kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for DecayKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Relaxation => "relaxation",
            Self::Echo => "echo",
        })
    }
}

/// Excited-state population against delay. Times are nonnegative and
/// strictly ascending; populations lie in `[−0.1, 1.1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub times_s: Vec<f64>,
    pub populations: Vec<f64>,
    pub kind: DecayKind,
}

pub const MIN_DECAY_POINTS: usize = 5;

impl DecayCurve {
    pub fn new(times_s: Vec<f64>, populations: Vec<f64>, kind: DecayKind) -> Result<Self> {
        if times_s.len() != populations.len() {
            return Err(Error::invalid("time and population columns differ in length"));
        }
        if times_s.len() < MIN_DECAY_POINTS {
            return Err(Error::invalid(format!(
                "decay curve needs >= {MIN_DECAY_POINTS} points, got {}",
                times_s.len()
            )));
        }
        if times_s.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::invalid("decay times must be finite and >= 0"));
        }
        if times_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("decay times must be strictly ascending"));
        }
        if let Some(p) = populations.iter().find(|p| !(**p >= -0.1 && **p <= 1.1)) {
            return Err(Error::invalid(format!("population {p} outside [-0.1, 1.1]")));
        }
        Ok(Self { times_s, populations, kind })
    }

    fn t_max(&self) -> f64 {
        *self.times_s.last().unwrap()
    }

    fn span(&self) -> f64 {
        let (lo, hi) = self
            .populations
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
        hi - lo
    }
}

#[derive(Debug, Clone)]
pub struct T1Fit {
    pub t1_s: f64,
    pub a: f64,
    pub b: f64,
    /// Covariance of (T₁, A, B).
    pub covariance: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub cost_history: Vec<f64>,
    pub iterations: usize,
}

impl T1Fit {
    pub fn t1_err_s(&self) -> f64 {
        self.covariance[(0, 0)].max(0.0).sqrt()
    }
}

fn fit_options() -> FitOptions {
    FitOptions {
        max_iterations: 500,
        ..FitOptions::default()
    }
}

/// Initial `T₁` from a log-linear regression of `p − min(p)` over the
/// points more than 5% of the span above the floor.
fn initial_t1(curve: &DecayCurve) -> f64 {
    let lo = curve.populations.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = curve.populations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pts: Vec<(f64, f64)> = curve
        .times_s
        .iter()
        .zip(&curve.populations)
        .filter(|(_, p)| **p - lo > 0.05 * (hi - lo))
        .map(|(t, p)| (*t, (p - lo).ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() >= 2 {
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        if sxx > 0.0 && sxy < 0.0 {
            return -sxx / sxy;
        }
    }
    0.3 * curve.t_max()
}

/// Least-squares fit of `A·e^{−t/T₁} + B`.
pub fn fit_t1(curve: &DecayCurve) -> Result<T1Fit> {
    if curve.kind != DecayKind::Relaxation {
        return Err(Error::invalid("T1 fit needs a relaxation curve"));
    }
    if curve.span() < 1e-12 {
        return Err(Error::Degenerate("constant relaxation curve leaves T1 unbounded".into()));
    }
    // Fit in units of the longest delay.
    let ts = curve.t_max();
    let t: Vec<f64> = curve.times_s.iter().map(|x| x / ts).collect();
    let y = &curve.populations;
    let first = y[0];
    let last = y[y.len() - 1];
    if first < last {
        log::warn!("relaxation curve rises with delay; fitted amplitude will be negative");
    }
    let params = vec![
        ParamSpec::positive("t1", initial_t1(curve) / ts),
        ParamSpec::free("a", first - last),
        ParamSpec::free("b", last),
    ];
    let problem = FitProblem::new(params, |q: &[f64]| {
        t.iter().zip(y).map(|(ti, yi)| q[1] * (-ti / q[0]).exp() + q[2] - yi).collect()
    })
    .with_options(fit_options());
    let fit = levmar_fit(&problem)?;
    if fit.rank_deficient {
        return Err(Error::RankDeficient("T1 fit is not identifiable from this curve".into()));
    }
    let t1 = fit.estimates[0];
    if t1 > 1e3 {
        return Err(Error::Degenerate(format!("fitted T1 is {t1:.3e} times the longest delay")));
    }
    let mut cov = fit.covariance.clone();
    for i in 0..3 {
        cov[(0, i)] *= ts;
        cov[(i, 0)] *= ts;
    }
    Ok(T1Fit {
        t1_s: t1 * ts,
        a: fit.estimates[1],
        b: fit.estimates[2],
        covariance: cov,
        residuals: fit.residuals,
        cost_history: fit.cost_history,
        iterations: fit.iterations,
    })
}

#[derive(Debug, Clone)]
pub struct EchoFit {
    /// Infinite when the Gaussian rate is not positive.
    pub tphi_s: f64,
    /// `1/T_φ²`, s⁻²; may be negative within noise.
    pub gaussian_rate_s2: f64,
    pub a: f64,
    pub b: f64,
    /// Covariance of (1/T_φ², A, B).
    pub covariance: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub cost_history: Vec<f64>,
    pub iterations: usize,
}

impl EchoFit {
    pub fn gaussian_rate_err_s2(&self) -> f64 {
        self.covariance[(0, 0)].max(0.0).sqrt()
    }

    /// Propagated from the Gaussian rate; infinite when `T_φ` is.
    pub fn tphi_err_s(&self) -> f64 {
        if self.gaussian_rate_s2 > 0.0 {
            0.5 * self.gaussian_rate_s2.powf(-1.5) * self.gaussian_rate_err_s2()
        } else {
            f64::INFINITY
        }
    }
}

/// Fit of `A·e^{−t/(2T₁) − (t/T_φ)²} + B` with `T₁` held at `t1_s`.
pub fn fit_echo(curve: &DecayCurve, t1_s: f64) -> Result<EchoFit> {
    if curve.kind != DecayKind::Echo {
        return Err(Error::invalid("echo fit needs an echo curve"));
    }
    if !(t1_s > 0.0) || !t1_s.is_finite() {
        return Err(Error::invalid(format!("T1 must be > 0, got {t1_s}")));
    }
    if curve.span() < 1e-12 {
        return Err(Error::Degenerate("constant echo curve".into()));
    }
    let ts = curve.t_max();
    let t: Vec<f64> = curve.times_s.iter().map(|x| x / ts).collect();
    let t1 = t1_s / ts;
    let y = &curve.populations;
    let first = y[0];
    let last = y[y.len() - 1];

    // Initial Gaussian rate from the half-decay time.
    let half = last + 0.5 * (first - last);
    let th = t
        .iter()
        .zip(y)
        .find(|(_, v)| (**v - half) * (first - last).signum() <= 0.0)
        .map(|(ti, _)| *ti)
        .unwrap_or(1.0);
    let g0 = ((std::f64::consts::LN_2 - th / (2.0 * t1)) / (th * th)).max(0.1);

    let params = vec![
        ParamSpec::free("gamma2", g0),
        ParamSpec::free("a", first - last),
        ParamSpec::free("b", last),
    ];
    let problem = FitProblem::new(params, |q: &[f64]| {
        t.iter()
            .zip(y)
            .map(|(ti, yi)| q[1] * (-ti / (2.0 * t1) - q[0] * ti * ti).exp() + q[2] - yi)
            .collect()
    })
    .with_options(fit_options());
    let fit = levmar_fit(&problem)?;
    if fit.rank_deficient {
        return Err(Error::RankDeficient("echo fit is not identifiable from this curve".into()));
    }
    let s2 = ts * ts;
    let rate = fit.estimates[0] / s2;
    let mut cov = fit.covariance.clone();
    for i in 0..3 {
        cov[(0, i)] /= s2;
        cov[(i, 0)] /= s2;
    }
    Ok(EchoFit {
        tphi_s: if rate > 0.0 { rate.sqrt().recip() } else { f64::INFINITY },
        gaussian_rate_s2: rate,
        a: fit.estimates[1],
        b: fit.estimates[2],
        covariance: cov,
        residuals: fit.residuals,
        cost_history: fit.cost_history,
        iterations: fit.iterations,
    })
}

/// Readout resonator rates, all as ordinary frequencies in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorParams {
    pub kappa_hz: f64,
    pub chi_hz: f64,
    pub fr_hz: f64,
}

impl ResonatorParams {
    pub fn new(kappa_hz: f64, chi_hz: f64, fr_hz: f64) -> Result<Self> {
        for (name, v) in [("kappa", kappa_hz), ("chi", chi_hz), ("fr", fr_hz)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(Self { kappa_hz, chi_hz, fr_hz })
    }

    /// `[κ²/(κ²+4χ²)]·(4χ²/κ)`, Hz.
    pub fn dephasing_prefactor_hz(&self) -> f64 {
        let k2 = self.kappa_hz * self.kappa_hz;
        let c4 = 4.0 * self.chi_hz * self.chi_hz;
        k2 / (k2 + c4) * c4 / self.kappa_hz
    }
}

/// Thermal occupation `1/(e^{h f/k_B T} − 1)`.
pub fn bose_einstein(fr_hz: f64, t_k: f64) -> Result<f64> {
    if !(fr_hz > 0.0) || !(t_k > 0.0) {
        return Err(Error::invalid(format!("need f > 0 and T > 0 (f={fr_hz}, T={t_k})")));
    }
    Ok((PLANCK * fr_hz / (BOLTZMANN * t_k)).exp_m1().recip())
}

/// Dephasing rate from thermal photons in the readout resonator, Hz.
pub fn thermal_photon_dephasing(res: &ResonatorParams, t_k: f64) -> Result<f64> {
    Ok(res.dephasing_prefactor_hz() * bose_einstein(res.fr_hz, t_k)?)
}

/// `|∂ω_ge/∂q|` in rad s⁻¹ per electron for a slope in Hz per unit `n_g`.
fn angular_slope_per_electron(slope_hz_per_ng: f64) -> f64 {
    // q = 2 n_g.
    std::f64::consts::PI * slope_hz_per_ng.abs()
}

/// 1/f charge-noise amplitude at 1 Hz, e², from the echo relation
/// `1/T_φ = √(A·ln2)·|∂ω/∂q|`.
pub fn charge_noise_amplitude(tphi_s: f64, slope_hz_per_ng: f64) -> Result<f64> {
    if !(tphi_s > 0.0) || !tphi_s.is_finite() {
        return Err(Error::invalid(format!("T_phi must be finite and > 0, got {tphi_s}")));
    }
    if slope_hz_per_ng == 0.0 || !slope_hz_per_ng.is_finite() {
        return Err(Error::Degenerate("zero charge dispersion slope (sweet spot)".into()));
    }
    let r = 1.0 / (tphi_s * angular_slope_per_electron(slope_hz_per_ng));
    Ok(r * r / std::f64::consts::LN_2)
}

/// Echo dephasing time produced by amplitude `a_e2` at the given slope.
pub fn echo_tphi_from_charge_noise(a_e2: f64, slope_hz_per_ng: f64) -> Result<f64> {
    if !(a_e2 > 0.0) {
        return Err(Error::invalid(format!("noise amplitude must be > 0, got {a_e2}")));
    }
    if slope_hz_per_ng == 0.0 || !slope_hz_per_ng.is_finite() {
        return Err(Error::Degenerate("zero charge dispersion slope (sweet spot)".into()));
    }
    Ok(1.0 / ((a_e2 * std::f64::consts::LN_2).sqrt() * angular_slope_per_electron(slope_hz_per_ng)))
}
