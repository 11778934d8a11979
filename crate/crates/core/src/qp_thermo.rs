//! Quasiparticle thermodynamics: tunnelling kernel, temperature dependence of
//! the parity-switching rate, density/chemical-potential relation, the
//! generation–trapping–recombination balance and the global thermal fit.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};

use crate::antenna::GapFrequencies;
use crate::error::{Error, Result};
use crate::numerics::bessel::bessel_k01_scaled;
use crate::numerics::levmar::{levmar_fit, Bound, FitOptions, FitProblem, ParamSpec};
use crate::numerics::rng::RngStream;
use crate::units::{self, NU0_ALUMINIUM};

/// Default recombination rate `1/(120 ns)`, s⁻¹.
pub const DEFAULT_RECOMB_RATE: f64 = 1.0 / 120e-9;
/// Volume of one bandage contact, μm³.
pub const BANDAGE_VOLUME_UM3: f64 = 4.0;

/// Validity region of the kernel approximation.
pub fn f_kernel_valid(x: f64, y: f64) -> bool {
    y <= 0.1 && x * y <= 0.08
}

/// `F(x, y) = cosh(x)[K₁(x) − x·y·K₀(x)]`.
pub fn f_kernel(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("F kernel requires x > 0, got {x}")));
    }
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::domain(format!("F kernel requires y >= 0, got {y}")));
    }
    if !f_kernel_valid(x, y) {
        log::warn!("F kernel evaluated outside its validity region (x={x:.4e}, y={y:.4e})");
    }
    let (k0e, k1e) = bessel_k01_scaled(x)?;
    // cosh(x)·e^{−x} = (1 + e^{−2x})/2
    Ok(0.5 * (1.0 + (-2.0 * x).exp()) * (k1e - x * y * k0e))
}

/// Spectral inputs of one qubit: `E_J/h` (Hz), `ε₀/h` (Hz) and `c₀²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitSpectral {
    pub ej_hz: f64,
    pub eps0_hz: f64,
    pub c0sq: f64,
}

impl QubitSpectral {
    pub fn validate(&self) -> Result<()> {
        if !(self.ej_hz > 0.0 && self.eps0_hz > 0.0) {
            return Err(Error::invalid("E_J and ε₀ must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.c0sq) {
            return Err(Error::invalid(format!("c0² = {} outside [0, 1]", self.c0sq)));
        }
        Ok(())
    }
}

/// `ln[(16 E_J/Δ) c₀² (ε₀/h) F(ε₀/2k_BT, k_BT/2Δ)]`, the common prefactor of
/// both rate formulations.
fn ln_tunnelling_prefactor(t_k: f64, q: &QubitSpectral, delta_uev: f64) -> Result<f64> {
    if !(t_k > 0.0) {
        return Err(Error::domain(format!("temperature must be > 0, got {t_k}")));
    }
    let kt = units::kt_hz(t_k);
    let delta_hz = units::uev_to_hz(delta_uev);
    let f = f_kernel(q.eps0_hz / (2.0 * kt), kt / (2.0 * delta_hz))?;
    if !(f > 0.0) {
        return Err(Error::domain(format!("F kernel non-positive ({f}) at T={t_k} K")));
    }
    Ok((16.0 * q.ej_hz / delta_hz * q.c0sq * q.eps0_hz).ln() + f.ln())
}

/// Quasiparticle tunnelling rate at temperature `t_k` and chemical potential
/// `mu_uev`, Hz.
pub fn gamma_qp(t_k: f64, ej_hz: f64, eps0_hz: f64, c0sq: f64, delta_uev: f64, mu_uev: f64) -> Result<f64> {
    if !(delta_uev > mu_uev) {
        return Err(Error::domain(format!("requires Δ > μ (Δ={delta_uev}, μ={mu_uev} μeV)")));
    }
    let q = QubitSpectral { ej_hz, eps0_hz, c0sq };
    if c0sq == 0.0 {
        return Ok(0.0);
    }
    let ln_pre = ln_tunnelling_prefactor(t_k, &q, delta_uev)?;
    let activation = units::uev_to_joule(delta_uev - mu_uev) / units::kt_joule(t_k);
    Ok((ln_pre - activation).exp())
}

/// Normalized density `x_qp = √(2πk_BT/Δ₀) e^{−(Δ₀−μ)/k_BT}`.
pub fn xqp_from_mu(t_k: f64, mu_uev: f64, delta0_uev: f64) -> Result<f64> {
    if !(t_k > 0.0) || !(delta0_uev > 0.0) {
        return Err(Error::domain("T and Δ₀ must be > 0"));
    }
    let kt = units::kt_joule(t_k);
    let d0 = units::uev_to_joule(delta0_uev);
    let mu = units::uev_to_joule(mu_uev);
    Ok((0.5 * (std::f64::consts::TAU * kt / d0).ln() - (d0 - mu) / kt).exp())
}

/// Inverse of [`xqp_from_mu`], μeV.
pub fn mu_from_xqp(t_k: f64, xqp: f64, delta0_uev: f64) -> Result<f64> {
    if !(xqp > 0.0 && xqp < 1.0) {
        return Err(Error::domain(format!("x_qp must lie in (0, 1), got {xqp}")));
    }
    if !(t_k > 0.0) || !(delta0_uev > 0.0) {
        return Err(Error::domain("T and Δ₀ must be > 0"));
    }
    let kt = units::kt_joule(t_k);
    let d0 = units::uev_to_joule(delta0_uev);
    let mu = d0 + kt * (xqp.ln() - 0.5 * (std::f64::consts::TAU * kt / d0).ln());
    Ok(units::joule_to_uev(mu))
}

/// Parameters of the temperature-dependent parity rate of one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalModelParams {
    pub gp0_hz: f64,
    pub xqp: f64,
    pub gaps: GapFrequencies,
    pub qubit: QubitSpectral,
}

impl ThermalModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gp0_hz >= 0.0) {
            return Err(Error::invalid("Γ_P(0) must be >= 0"));
        }
        if !(self.xqp >= 0.0 && self.xqp < 1e-3) {
            return Err(Error::invalid(format!("x_qp = {} outside [0, 1e-3)", self.xqp)));
        }
        self.qubit.validate()
    }
}

/// Thermal part of the parity rate: tunnelling of pad quasiparticles
/// activated over `Δ − Δ₀`.
fn thermal_term(t_k: f64, q: &QubitSpectral, xqp: f64, delta_uev: f64, delta0_uev: f64) -> Result<f64> {
    if xqp == 0.0 || q.c0sq == 0.0 {
        return Ok(0.0);
    }
    let ln_pre = ln_tunnelling_prefactor(t_k, q, delta_uev)?;
    let kt = units::kt_joule(t_k);
    let activation = units::uev_to_joule(delta_uev - delta0_uev) / kt;
    let d0 = units::uev_to_joule(delta0_uev);
    let ln_density = xqp.abs().ln() + 0.5 * (d0 / (std::f64::consts::TAU * kt)).ln();
    Ok(xqp.signum() * (ln_pre - activation + ln_density).exp())
}

/// `Γ_P(T) = Γ_P(0) + Γ_qp(T)` with the pad density held at `x_qp`.
#[allow(non_snake_case)]
pub fn gamma_p_of_T(t_k: f64, params: &ThermalModelParams) -> Result<f64> {
    params.validate()?;
    Ok(params.gp0_hz
        + thermal_term(
            t_k,
            &params.qubit,
            params.xqp,
            params.gaps.delta_junction_uev,
            params.gaps.delta_pad_uev,
        )?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalPoint {
    pub temperature_k: f64,
    pub gamma_p_hz: f64,
    pub sigma_hz: f64,
}

/// Parity rate versus temperature for one qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalSeries {
    pub qubit_id: String,
    pub chip_id: String,
    pub points: Vec<ThermalPoint>,
}

impl ThermalSeries {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::invalid(format!("series `{}` is empty", self.qubit_id)));
        }
        if self.points.iter().any(|p| !(p.temperature_k > 0.0)) {
            return Err(Error::invalid(format!("series `{}`: temperatures must be > 0", self.qubit_id)));
        }
        if self.points.windows(2).any(|w| !(w[1].temperature_k > w[0].temperature_k)) {
            return Err(Error::invalid(format!(
                "series `{}`: temperatures must be strictly increasing",
                self.qubit_id
            )));
        }
        if self.points.iter().any(|p| !(p.gamma_p_hz > 0.0) || !(p.sigma_hz > 0.0)) {
            return Err(Error::invalid(format!(
                "series `{}`: rates and uncertainties must be > 0",
                self.qubit_id
            )));
        }
        Ok(())
    }
}

/// One series plus the spectral data of its qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalFitInput {
    pub series: ThermalSeries,
    pub qubit: QubitSpectral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalFitOptions {
    pub delta0_uev: f64,
    /// Starting value of each chip gap, μeV.
    pub delta_init_uev: f64,
    /// Hold every chip gap at this value instead of fitting it, μeV.
    pub fixed_delta_uev: Option<f64>,
    pub levmar: FitOptions,
}

impl Default for ThermalFitOptions {
    fn default() -> Self {
        Self {
            delta0_uev: units::DELTA0_DEFAULT_UEV,
            delta_init_uev: 210.0,
            fixed_delta_uev: None,
            levmar: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitThermalFit {
    pub qubit_id: String,
    pub chip_id: String,
    pub gp0_hz: f64,
    pub gp0_err_hz: f64,
    pub xqp: f64,
    pub xqp_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChipGapFit {
    pub chip_id: String,
    pub delta_uev: f64,
    pub delta_err_uev: f64,
}

impl ChipGapFit {
    pub fn delta_hz(&self) -> f64 {
        units::uev_to_hz(self.delta_uev)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalFit {
    pub qubits: Vec<QubitThermalFit>,
    pub chips: Vec<ChipGapFit>,
    pub delta0_uev: f64,
    /// Weighted log residuals, series after series.
    pub residuals: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
}

impl ThermalFit {
    pub fn model_params(&self, qubit_id: &str, spectral: QubitSpectral) -> Option<ThermalModelParams> {
        let q = self.qubits.iter().find(|q| q.qubit_id == qubit_id)?;
        let chip = self.chips.iter().find(|c| c.chip_id == q.chip_id)?;
        Some(ThermalModelParams {
            gp0_hz: q.gp0_hz,
            xqp: q.xqp.max(0.0),
            gaps: GapFrequencies {
                delta_junction_uev: chip.delta_uev,
                delta_pad_uev: self.delta0_uev,
            },
            qubit: spectral,
        })
    }
}

/// Series sampled from the model at `temps_k` with relative Gaussian noise
/// `rel_noise`; each point's `sigma` is `rel_noise` times the model value.
pub fn synthetic_series(
    qubit_id: &str,
    chip_id: &str,
    params: &ThermalModelParams,
    temps_k: &[f64],
    rel_noise: f64,
    stream: RngStream,
) -> Result<ThermalSeries> {
    if !(rel_noise > 0.0 && rel_noise < 0.5) {
        return Err(Error::invalid(format!("relative noise must lie in (0, 0.5), got {rel_noise}")));
    }
    let mut rng = stream.rng();
    let points = temps_k
        .iter()
        .map(|&t| {
            let g = gamma_p_of_T(t, params)?;
            let z: f64 = StandardNormal.sample(&mut rng);
            Ok(ThermalPoint {
                temperature_k: t,
                gamma_p_hz: g * (1.0 + rel_noise * z).max(0.05),
                sigma_hz: rel_noise * g,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let series = ThermalSeries {
        qubit_id: qubit_id.into(),
        chip_id: chip_id.into(),
        points,
    };
    series.validate()?;
    Ok(series)
}

const XQP_SCALE: f64 = 1e-7;

/// Global weighted least-squares fit of `ln Γ_P(T)`: per-qubit `Γ_P(0)` and
/// `x_qp`, one gap `Δ` per chip, `Δ₀` fixed.
pub fn fit_thermal_series(inputs: &[ThermalFitInput], opts: &ThermalFitOptions) -> Result<ThermalFit> {
    if inputs.is_empty() {
        return Err(Error::invalid("no thermal series supplied"));
    }
    for inp in inputs {
        inp.series.validate()?;
        inp.qubit.validate()?;
        if inp.series.points.len() < 3 {
            return Err(Error::RankDeficient(format!(
                "series `{}` has {} temperature points; at least 3 are required",
                inp.series.qubit_id,
                inp.series.points.len()
            )));
        }
    }
    let d0 = opts.delta0_uev;
    let delta_init = opts.fixed_delta_uev.unwrap_or(opts.delta_init_uev);
    if !(delta_init > d0) {
        return Err(Error::invalid(format!("gap Δ={delta_init} μeV must exceed Δ₀={d0} μeV")));
    }

    // Parameter layout: [gp0, xqp/1e-7, Δ] per series, Δ shared per chip.
    let mut specs = Vec::with_capacity(3 * inputs.len());
    for inp in inputs {
        let pts = &inp.series.points;
        let gp0 = pts.iter().map(|p| p.gamma_p_hz).fold(f64::INFINITY, f64::min);
        let hot = pts.last().unwrap();
        let unit = thermal_term(hot.temperature_k, &inp.qubit, XQP_SCALE, delta_init, d0)?;
        let x0 = if unit > 0.0 {
            ((hot.gamma_p_hz - gp0) / unit).clamp(0.1, 1e3)
        } else {
            1.0
        };
        let id = &inp.series.qubit_id;
        specs.push(ParamSpec::positive(format!("{id}/gp0"), gp0));
        specs.push(ParamSpec::free(format!("{id}/xqp"), x0));
        let mut delta = ParamSpec::new(format!("{id}/delta"), delta_init, Bound::Lower(d0))
            .shared(format!("delta/{}", inp.series.chip_id));
        if opts.fixed_delta_uev.is_some() {
            delta = delta.fixed();
        }
        specs.push(delta);
    }

    let residuals = |p: &[f64]| -> Vec<f64> {
        let mut r = Vec::new();
        for (i, inp) in inputs.iter().enumerate() {
            let (gp0, x, delta) = (p[3 * i], p[3 * i + 1] * XQP_SCALE, p[3 * i + 2]);
            for pt in &inp.series.points {
                let model = thermal_term(pt.temperature_k, &inp.qubit, x, delta, d0)
                    .map(|t| gp0 + t)
                    .unwrap_or(f64::NAN);
                let w = pt.gamma_p_hz / pt.sigma_hz;
                r.push(if model > 0.0 {
                    w * (model / pt.gamma_p_hz).ln()
                } else {
                    f64::NAN
                });
            }
        }
        r
    };
    let problem = FitProblem::new(specs, residuals).with_options(opts.levmar);
    let fit = levmar_fit(&problem)?;
    if fit.rank_deficient {
        return Err(Error::RankDeficient(
            "thermal fit is not identifiable: too few points above the activation knee".into(),
        ));
    }

    let mut qubits = Vec::new();
    let mut chips: BTreeMap<String, ChipGapFit> = BTreeMap::new();
    for (i, inp) in inputs.iter().enumerate() {
        let err = |k: usize| fit.covariance[(k, k)].max(0.0).sqrt();
        qubits.push(QubitThermalFit {
            qubit_id: inp.series.qubit_id.clone(),
            chip_id: inp.series.chip_id.clone(),
            gp0_hz: fit.estimates[3 * i],
            gp0_err_hz: err(3 * i),
            xqp: fit.estimates[3 * i + 1] * XQP_SCALE,
            xqp_err: err(3 * i + 1) * XQP_SCALE,
        });
        chips.entry(inp.series.chip_id.clone()).or_insert(ChipGapFit {
            chip_id: inp.series.chip_id.clone(),
            delta_uev: fit.estimates[3 * i + 2],
            delta_err_uev: err(3 * i + 2),
        });
    }
    Ok(ThermalFit {
        qubits,
        chips: chips.into_values().collect(),
        delta0_uev: d0,
        residuals: fit.residuals,
        cost: fit.cost,
        iterations: fit.iterations,
    })
}

/// Generation, trapping and recombination rates of the pad density balance
/// `0 = g − s·x − r·x²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpBalance {
    pub gen_rate: f64,
    /// Background trapping `s₀`, s⁻¹.
    pub trap_background: f64,
    /// Vortex trapping `s_v`, s⁻¹.
    pub trap_vortex: f64,
    pub recomb_rate: f64,
}

impl QpBalance {
    pub fn trap_rate(&self) -> f64 {
        self.trap_background + self.trap_vortex
    }

    pub fn residual(&self, x: f64) -> f64 {
        self.gen_rate - self.trap_rate() * x - self.recomb_rate * x * x
    }
}

/// `g = Γ_P(0) / (2 ν₀ Δ₀ V)` with `V` in μm³, s⁻¹.
pub fn generation_rate(gp0_hz: f64, delta0_uev: f64, volume_um3: f64) -> Result<f64> {
    if !(volume_um3 > 0.0) || !(delta0_uev > 0.0) || !(gp0_hz >= 0.0) {
        return Err(Error::domain("generation rate needs Γ_P(0) >= 0, Δ₀ > 0 and V > 0"));
    }
    Ok(gp0_hz / (2.0 * NU0_ALUMINIUM * units::uev_to_joule(delta0_uev) * volume_um3 * 1e-18))
}

/// Nonnegative root of the balance equation.
pub fn steady_state_density(b: &QpBalance) -> Result<f64> {
    let (g, s, r) = (b.gen_rate, b.trap_rate(), b.recomb_rate);
    if [g, b.trap_background, b.trap_vortex, r].iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("balance rates must be >= 0"));
    }
    if g == 0.0 {
        return Ok(0.0);
    }
    if s == 0.0 && r == 0.0 {
        return Err(Error::domain("no loss channel: the density grows without bound"));
    }
    // Rationalized root, stable for r → 0 and for s² ≫ 4rg.
    Ok(2.0 * g / (s + (s * s + 4.0 * r * g).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::GHZ;

    fn s1q1() -> ThermalModelParams {
        ThermalModelParams {
            gp0_hz: 0.48,
            xqp: 0.22e-7,
            gaps: GapFrequencies {
                delta_junction_uev: units::hz_to_uev(50.9 * GHZ),
                delta_pad_uev: 180.0,
            },
            qubit: QubitSpectral {
                ej_hz: 4.67 * GHZ,
                eps0_hz: 0.238 * GHZ,
                c0sq: 0.775,
            },
        }
    }

    #[test]
    fn kernel_reference_values() {
        let f = f_kernel(1.0, 0.0).unwrap();
        assert!((f - 1.0f64.cosh() * 0.601_907_230_197_234_6).abs() < 1e-12);
        assert!((f - 0.9289).abs() < 1.5e-4);
        let x = 50.0;
        let asym = 0.5 * (std::f64::consts::PI / (2.0 * x)).sqrt();
        assert!((f_kernel(x, 0.0).unwrap() / asym - 1.0).abs() < 0.01);
        assert!(f_kernel(0.7, 0.05).unwrap() < f_kernel(0.7, 0.0).unwrap());
        assert!(f_kernel(0.0, 0.0).is_err());
    }

    #[test]
    fn kernel_large_argument_does_not_overflow() {
        let f = f_kernel(1e4, 0.0).unwrap();
        assert!(f.is_finite() && f > 0.0);
    }

    #[test]
    fn rate_vanishes_at_millikelvin() {
        let p = s1q1();
        let g = gamma_qp(1e-3, p.qubit.ej_hz, p.qubit.eps0_hz, p.qubit.c0sq, p.gaps.delta_junction_uev, 0.0).unwrap();
        assert!(g < 1e-30);
    }

    #[test]
    fn rate_at_mu_equal_gap_and_linearity() {
        let p = s1q1();
        let d = p.gaps.delta_junction_uev;
        let t = 0.1;
        let a = gamma_qp(t, p.qubit.ej_hz, p.qubit.eps0_hz, 0.3, d, d - 1e-9).unwrap();
        let b = gamma_qp(t, p.qubit.ej_hz, p.qubit.eps0_hz, 0.6, d, d - 1e-9).unwrap();
        assert!((b / a - 2.0).abs() < 1e-12);
        let kt = units::kt_hz(t);
        let dh = units::uev_to_hz(d);
        let direct = 16.0 * p.qubit.ej_hz / dh * 0.3 * p.qubit.eps0_hz
            * f_kernel(p.qubit.eps0_hz / (2.0 * kt), kt / (2.0 * dh)).unwrap();
        assert!((a / direct - 1.0).abs() < 1e-9);
        assert!(gamma_qp(t, 1.0, 1.0, 0.5, 200.0, 200.0).is_err());
    }

    #[test]
    fn density_chemical_potential_round_trip() {
        let x = xqp_from_mu(0.1, 0.0, 180.0).unwrap();
        assert!((x / 4.651e-10 - 1.0).abs() < 1e-3, "{x}");
        for &(t, xq) in &[(0.02, 1e-7), (0.1, 3e-8), (0.25, 1e-5)] {
            let mu = mu_from_xqp(t, xq, 180.0).unwrap();
            assert!((xqp_from_mu(t, mu, 180.0).unwrap() / xq - 1.0).abs() < 1e-12);
        }
        let mu_hot = mu_from_xqp(0.1, 1e-7, 180.0).unwrap();
        let mu_cold = mu_from_xqp(0.05, 1e-7, 180.0).unwrap();
        assert!(180.0 - mu_cold < 180.0 - mu_hot);
        assert!(mu_from_xqp(0.1, 0.0, 180.0).is_err());
    }

    #[test]
    fn two_formulations_agree() {
        let p = s1q1();
        for &t in &[0.03, 0.08, 0.15, 0.3] {
            let mu = mu_from_xqp(t, p.xqp, p.gaps.delta_pad_uev).unwrap();
            let direct = gamma_qp(t, p.qubit.ej_hz, p.qubit.eps0_hz, p.qubit.c0sq, p.gaps.delta_junction_uev, mu).unwrap();
            let composed = gamma_p_of_T(t, &p).unwrap() - p.gp0_hz;
            assert!((composed / direct - 1.0).abs() < 1e-10, "T={t}");
            let thermal = thermal_term(t, &p.qubit, p.xqp, p.gaps.delta_junction_uev, p.gaps.delta_pad_uev).unwrap();
            assert!((thermal / direct - 1.0).abs() < 1e-10, "T={t}");
        }
    }

    #[test]
    fn plateau_and_monotonicity() {
        let p = s1q1();
        assert!((gamma_p_of_T(0.01, &p).unwrap() / p.gp0_hz - 1.0).abs() < 0.01);
        let zero = ThermalModelParams { xqp: 0.0, ..p };
        assert_eq!(gamma_p_of_T(0.2, &zero).unwrap(), p.gp0_hz);
        let mut prev = 0.0;
        for i in 0..=140 {
            let g = gamma_p_of_T(0.01 + 1e-3 * i as f64, &p).unwrap();
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn generation_and_balance() {
        let g = generation_rate(0.48, 180.0, 4.0).unwrap();
        let by_hand = 0.48 / (2.0 * 0.73e47 * 180.0 * 1.602_176_634e-25 * 4e-18);
        assert!((g / by_hand - 1.0).abs() < 1e-12);
        assert!((g / 2.85e-8 - 1.0).abs() < 0.01, "{g}");
        assert_eq!(generation_rate(0.0, 180.0, 4.0).unwrap(), 0.0);

        let b = QpBalance { gen_rate: g, trap_background: 0.0, trap_vortex: 0.0, recomb_rate: DEFAULT_RECOMB_RATE };
        let x = steady_state_density(&b).unwrap();
        assert!((x / (g / DEFAULT_RECOMB_RATE).sqrt() - 1.0).abs() < 1e-12);
        let b = QpBalance { trap_background: 30.0, trap_vortex: 20.0, ..b };
        let x = steady_state_density(&b).unwrap();
        assert!(b.residual(x).abs() < 1e-12 * g);
        let trap_only = QpBalance { recomb_rate: 0.0, ..b };
        assert!((steady_state_density(&trap_only).unwrap() - g / 50.0).abs() < 1e-24);
        let none = QpBalance { trap_background: 0.0, trap_vortex: 0.0, recomb_rate: 0.0, ..b };
        assert!(steady_state_density(&none).is_err());
        assert_eq!(steady_state_density(&QpBalance { gen_rate: 0.0, ..none }).unwrap(), 0.0);
    }

    #[test]
    fn fit_requires_three_points() {
        let input = ThermalFitInput {
            series: ThermalSeries {
                qubit_id: "q".into(),
                chip_id: "c".into(),
                points: vec![ThermalPoint { temperature_k: 0.02, gamma_p_hz: 1.0, sigma_hz: 0.1 }],
            },
            qubit: s1q1().qubit,
        };
        assert!(matches!(fit_thermal_series(&[input], &ThermalFitOptions::default()), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn constant_data_gives_mean_and_null_density() {
        let noise = [0.01, -0.012, 0.004, -0.003, 0.008, -0.01, 0.002, 0.001];
        let pts: Vec<ThermalPoint> = noise
            .iter()
            .enumerate()
            .map(|(i, e)| ThermalPoint { temperature_k: 0.02 + 0.02 * i as f64, gamma_p_hz: 2.0 * (1.0 + e), sigma_hz: 0.02 })
            .collect();
        let mean = pts.iter().map(|p| p.gamma_p_hz).sum::<f64>() / pts.len() as f64;
        let input = ThermalFitInput {
            series: ThermalSeries { qubit_id: "q".into(), chip_id: "c".into(), points: pts },
            qubit: s1q1().qubit,
        };
        let opts = ThermalFitOptions { fixed_delta_uev: Some(210.0), ..Default::default() };
        let fit = fit_thermal_series(&[input], &opts).unwrap();
        let q = &fit.qubits[0];
        assert!((q.gp0_hz / mean - 1.0).abs() < 2e-3, "{} vs {mean}", q.gp0_hz);
        assert!(q.xqp.abs() <= 2.0 * q.xqp_err, "{} ± {}", q.xqp, q.xqp_err);
    }

    #[test]
    fn synthetic_round_trip_recovers_parameters() {
        let a = s1q1();
        let mut b = s1q1();
        b.gp0_hz = 3.0;
        b.xqp = 2e-7;
        let temps: Vec<f64> = (0..12).map(|i| 0.02 + 0.02 * i as f64).collect();
        let inputs: Vec<ThermalFitInput> = [("a", a), ("b", b)]
            .iter()
            .enumerate()
            .map(|(i, (id, p))| ThermalFitInput {
                series: synthetic_series(id, "c", p, &temps, 0.01, RngStream::new(4, i as u64)).unwrap(),
                qubit: p.qubit,
            })
            .collect();
        let fit = fit_thermal_series(&inputs, &ThermalFitOptions::default()).unwrap();
        let d = a.gaps.delta_junction_uev;
        assert!((fit.chips[0].delta_uev / d - 1.0).abs() < 0.01, "{}", fit.chips[0].delta_uev);
        for (q, p) in fit.qubits.iter().zip([a, b]) {
            assert!((q.xqp / p.xqp - 1.0).abs() < 0.2, "{} vs {}", q.xqp, p.xqp);
            assert!((q.gp0_hz / p.gp0_hz - 1.0).abs() < 0.05);
        }
        assert!(synthetic_series("a", "c", &a, &temps, 0.0, RngStream::new(0, 0)).is_err());
    }
}
