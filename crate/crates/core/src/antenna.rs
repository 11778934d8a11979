//! Lumped-circuit antenna model: radiation impedance, junction impedance,
//! coupling efficiency and the predicted photon-assisted parity rate.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::units::{self, ELEMENTARY_CHARGE, PLANCK, Z0_FREE_SPACE};

/// Conversion from coupling efficiency at `f*` to parity-switching rate, s⁻¹.
pub const DEFAULT_GAMMA_CONV: f64 = 3e5;

/// Series capacitor `C₀` followed by two parallel RLC sections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivCircuit {
    pub c0_f: f64,
    pub r1_ohm: f64,
    pub l1_h: f64,
    pub c1_f: f64,
    pub r2_ohm: f64,
    pub l2_h: f64,
    pub c2_f: f64,
}

impl EquivCircuit {
    /// Circuit fitted to the simulated impedance of the uncapped reference
    /// geometry.
    pub fn reference() -> Self {
        Self {
            c0_f: 15e-15,
            r1_ohm: 40.0,
            l1_h: 5.3e-12,
            c1_f: 17e-15,
            r2_ohm: 130.0,
            l2_h: 2e-12,
            c2_f: 10e-15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.c0_f, self.r1_ohm, self.l1_h, self.c1_f, self.r2_ohm, self.l2_h, self.c2_f];
        if v.iter().all(|x| *x > 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("equivalent-circuit elements must be finite and > 0"))
        }
    }

    /// Parallel-resonance frequencies of the two RLC sections, Hz.
    pub fn resonances(&self) -> (f64, f64) {
        let f = |l: f64, c: f64| 1.0 / (std::f64::consts::TAU * (l * c).sqrt());
        (f(self.l1_h, self.c1_f), f(self.l2_h, self.c2_f))
    }
}

/// Junction as `R_n` in parallel with `C_J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionParams {
    pub rn_ohm: f64,
    pub cj_f: f64,
}

impl JunctionParams {
    pub fn new(rn_ohm: f64, cj_f: f64) -> Result<Self> {
        let j = Self { rn_ohm, cj_f };
        j.validate()?;
        Ok(j)
    }

    pub fn reference() -> Self {
        Self {
            rn_ohm: 30e3,
            cj_f: 2.4e-15,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rn_ohm > 0.0 && self.cj_f > 0.0 && self.rn_ohm.is_finite() && self.cj_f.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid("junction R_n and C_J must be finite and > 0"))
        }
    }

    pub fn tau_s(&self) -> f64 {
        self.rn_ohm * self.cj_f
    }
}

/// Gap energies of the junction leads (`Δ`) and the pads (`Δ₀`), μeV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapFrequencies {
    pub delta_junction_uev: f64,
    pub delta_pad_uev: f64,
}

impl GapFrequencies {
    pub fn new(delta_junction_uev: f64, delta_pad_uev: f64) -> Result<Self> {
        if !(delta_junction_uev > delta_pad_uev && delta_pad_uev > 0.0) {
            return Err(Error::invalid(format!(
                "gaps must satisfy Δ > Δ₀ > 0 (got Δ={delta_junction_uev}, Δ₀={delta_pad_uev} μeV)"
            )));
        }
        Ok(Self {
            delta_junction_uev,
            delta_pad_uev,
        })
    }

    pub fn reference() -> Self {
        Self {
            delta_junction_uev: 217.0,
            delta_pad_uev: units::DELTA0_DEFAULT_UEV,
        }
    }

    /// `f* = 2Δ/h`.
    pub fn f_star_hz(&self) -> f64 {
        2.0 * units::uev_to_hz(self.delta_junction_uev)
    }

    /// `f₀ = 2Δ₀/h`.
    pub fn f0_hz(&self) -> f64 {
        2.0 * units::uev_to_hz(self.delta_pad_uev)
    }
}

fn check_frequency(f: f64) -> Result<f64> {
    if f > 0.0 && f.is_finite() {
        Ok(units::angular(f))
    } else {
        Err(Error::domain(format!("frequency must be finite and > 0, got {f}")))
    }
}

pub fn z_rad(circuit: &EquivCircuit, f: f64) -> Result<Complex64> {
    let w = check_frequency(f)?;
    let j = Complex64::i();
    let section = |r: f64, l: f64, c: f64| 1.0 / (1.0 / r + j * w * c + 1.0 / (j * w * l));
    Ok(1.0 / (j * w * circuit.c0_f)
        + section(circuit.r1_ohm, circuit.l1_h, circuit.c1_f)
        + section(circuit.r2_ohm, circuit.l2_h, circuit.c2_f))
}

/// `Z_J = R_n(1 − jωτ)/(1 + ω²τ²)`.
pub fn z_junction(junction: &JunctionParams, f: f64) -> Result<Complex64> {
    let w = check_frequency(f)?;
    let wt = w * junction.tau_s();
    Ok(Complex64::new(junction.rn_ohm, -junction.rn_ohm * wt) / (1.0 + wt * wt))
}

/// `e_c = 4 Re[Z_rad] Re[Z_J] / |Z_rad + Z_J|²`.
pub fn coupling_efficiency(z_rad: Complex64, z_j: Complex64) -> Result<f64> {
    if !(z_rad.re >= 0.0) || !(z_j.re >= 0.0) {
        return Err(Error::domain("coupling efficiency needs Re[Z] >= 0 on both sides"));
    }
    let denom = (z_rad + z_j).norm_sqr();
    if !(denom > 0.0) {
        return Err(Error::domain("Z_rad + Z_J vanishes"));
    }
    Ok((4.0 * z_rad.re * z_j.re / denom).min(1.0))
}

/// `f* = 2Δ/h` in Hz.
pub fn pair_breaking_frequency(gaps: &GapFrequencies) -> f64 {
    gaps.f_star_hz()
}

/// `Γ_P = γ · e_c(f*)`.
pub fn predict_parity_rate(ec_star: f64, gamma_conv: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&ec_star) {
        return Err(Error::domain(format!("coupling efficiency {ec_star} outside [0, 1]")));
    }
    if !(gamma_conv > 0.0) {
        return Err(Error::domain("conversion factor must be > 0"));
    }
    Ok(gamma_conv * ec_star)
}

/// `Z_fd = 4 Z_t Z_d / (Z_t + 2 Z_d)` for transmission-line and dipole modes.
pub fn folded_dipole_impedance(z_t: Complex64, z_d: Complex64) -> Result<Complex64> {
    let denom = z_t + 2.0 * z_d;
    if denom.norm() == 0.0 {
        return Err(Error::domain("folded-dipole pole: Z_t + 2 Z_d = 0"));
    }
    Ok(4.0 * z_t * z_d / denom)
}

/// Radiation impedance `2 Z₀²/Z_fd` of a slot antenna complementary to a
/// folded dipole.
pub fn complementary_slot_impedance(z_fd: Complex64) -> Result<Complex64> {
    if z_fd.norm() == 0.0 {
        return Err(Error::domain("complementary impedance of a short"));
    }
    Ok(2.0 * Z0_FREE_SPACE * Z0_FREE_SPACE / z_fd)
}

/// `E_C/h = e²/(2Ch)` in Hz.
pub fn charging_energy_hz(capacitance_f: f64) -> Result<f64> {
    if !(capacitance_f > 0.0) {
        return Err(Error::domain("capacitance must be > 0"));
    }
    Ok(ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * capacitance_f * PLANCK))
}

/// Coupling efficiency on an `R_n × C_J` grid; `values[i][j]` belongs to
/// `(rn[i], cj[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyMap {
    pub rn_ohm: Vec<f64>,
    pub cj_f: Vec<f64>,
    pub freq_hz: f64,
    pub values: Vec<Vec<f64>>,
}

pub fn efficiency_map(rn_grid: &[f64], cj_grid: &[f64], circuit: &EquivCircuit, f: f64) -> Result<EfficiencyMap> {
    if rn_grid.is_empty() || cj_grid.is_empty() {
        return Err(Error::invalid("efficiency map grids must be nonempty"));
    }
    if rn_grid.iter().chain(cj_grid).any(|x| !(*x > 0.0)) {
        return Err(Error::invalid("efficiency map grids must be positive"));
    }
    let zr = z_rad(circuit, f)?;
    let values = rn_grid
        .par_iter()
        .map(|&rn| {
            cj_grid
                .iter()
                .map(|&cj| coupling_efficiency(zr, z_junction(&JunctionParams { rn_ohm: rn, cj_f: cj }, f)?))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EfficiencyMap {
        rn_ohm: rn_grid.to_vec(),
        cj_f: cj_grid.to_vec(),
        freq_hz: f,
        values,
    })
}

/// Externally simulated radiation impedance sampled on increasing frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceTable {
    pub freq_hz: Vec<f64>,
    pub z_ohm: Vec<Complex64>,
}

impl ImpedanceTable {
    pub fn new(freq_hz: Vec<f64>, z_ohm: Vec<Complex64>) -> Result<Self> {
        if freq_hz.len() != z_ohm.len() || freq_hz.is_empty() {
            return Err(Error::invalid("impedance table needs equal, nonempty columns"));
        }
        if freq_hz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("impedance table frequencies must be strictly increasing"));
        }
        if z_ohm.iter().any(|z| z.re < 0.0) {
            return Err(Error::invalid("impedance table has negative resistance"));
        }
        Ok(Self { freq_hz, z_ohm })
    }

    /// Linear interpolation; outside the table range is an error.
    pub fn at(&self, f: f64) -> Result<Complex64> {
        let (first, last) = (self.freq_hz[0], self.freq_hz[self.freq_hz.len() - 1]);
        if !(f >= first && f <= last) {
            return Err(Error::domain(format!(
                "frequency {f} Hz outside impedance table range [{first}, {last}]"
            )));
        }
        let i = self.freq_hz.partition_point(|x| *x <= f);
        if i == self.freq_hz.len() {
            return Ok(self.z_ohm[i - 1]);
        }
        let i = i.max(1);
        let (f0, f1) = (self.freq_hz[i - 1], self.freq_hz[i]);
        let t = (f - f0) / (f1 - f0);
        Ok(self.z_ohm[i - 1] * (1.0 - t) + self.z_ohm[i] * t)
    }
}

/// Source of radiation impedance: the lumped circuit or a table.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiationModel {
    Circuit(EquivCircuit),
    Table(ImpedanceTable),
}

impl RadiationModel {
    pub fn impedance(&self, f: f64) -> Result<Complex64> {
        match self {
            RadiationModel::Circuit(c) => z_rad(c, f),
            RadiationModel::Table(t) => t.at(f),
        }
    }

    pub fn efficiency(&self, junction: &JunctionParams, f: f64) -> Result<f64> {
        coupling_efficiency(self.impedance(f)?, z_junction(junction, f)?)
    }
}

/// Coupling efficiency averaged over `[f_lo, f_hi]` with Boltzmann weight
/// `e^{−hf/k_B T_rad}` (composite Simpson rule, `n` even intervals).
pub fn integrated_efficiency(
    model: &RadiationModel,
    junction: &JunctionParams,
    f_lo: f64,
    f_hi: f64,
    t_rad_k: f64,
    n: usize,
) -> Result<f64> {
    if !(f_hi > f_lo && f_lo > 0.0) || !(t_rad_k > 0.0) || n < 2 {
        return Err(Error::invalid("integrated efficiency needs 0 < f_lo < f_hi, T_rad > 0, n >= 2"));
    }
    let n = n + n % 2;
    let h = (f_hi - f_lo) / n as f64;
    let kt = units::kt_hz(t_rad_k);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=n {
        let f = f_lo + h * i as f64;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        // Weight relative to f_lo so tiny Boltzmann factors cancel.
        let b = (-(f - f_lo) / kt).exp() * w;
        num += b * model.efficiency(junction, f)?;
        den += b;
    }
    Ok(num / den)
}
