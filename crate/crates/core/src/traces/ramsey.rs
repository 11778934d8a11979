//! Ramsey sequence that maps charge parity onto the qubit state.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pulse parameters for a parity-to-state map and the populations it yields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseyMap {
    pub drive_hz: f64,
    pub tau_s: f64,
    /// Azimuth of the second π/2 pulse, radians.
    pub readout_phase: f64,
    /// Excited population after the sequence for even parity.
    pub p_excited_even: f64,
    /// Excited population after the sequence for odd parity.
    pub p_excited_odd: f64,
}

impl RamseyMap {
    /// Probability that even maps to `e`.
    pub fn fidelity_even(&self) -> f64 {
        self.p_excited_even
    }

    /// Probability that odd maps to `g`.
    pub fn fidelity_odd(&self) -> f64 {
        1.0 - self.p_excited_odd
    }
}

type Mat2 = [[Complex64; 2]; 2];

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Ideal π/2 rotation about the equatorial axis at azimuth `phi`.
fn half_pi(phi: f64) -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let m = Complex64::new(0.0, -s);
    [
        [Complex64::new(s, 0.0), m * Complex64::from_polar(1.0, -phi)],
        [m * Complex64::from_polar(1.0, phi), Complex64::new(s, 0.0)],
    ]
}

/// Free precession in the drive frame for detuning `delta_hz` over `tau_s`.
fn precess(delta_hz: f64, tau_s: f64) -> Mat2 {
    let z = Complex64::new(0.0, 0.0);
    [[Complex64::new(1.0, 0.0), z], [z, Complex64::from_polar(1.0, -std::f64::consts::TAU * delta_hz * tau_s)]]
}

fn excited_population(nu_hz: f64, drive_hz: f64, tau_s: f64, readout_phase: f64) -> f64 {
    let u = mul(&half_pi(readout_phase), &mul(&precess(nu_hz - drive_hz, tau_s), &half_pi(0.0)));
    u[1][0].norm_sqr()
}

/// Excited populations `(even, odd)` after `π/2 – τ – π/2(θ)` starting in `g`.
pub fn ramsey_populations(nu_even_hz: f64, nu_odd_hz: f64, drive_hz: f64, tau_s: f64, readout_phase: f64) -> (f64, f64) {
    (
        excited_population(nu_even_hz, drive_hz, tau_s, readout_phase),
        excited_population(nu_odd_hz, drive_hz, tau_s, readout_phase),
    )
}

/// Drive at the midpoint, wait `τ = 1/(2|ν^E − ν^O|)` and choose the second
/// pulse so that even parity ends in `e` and odd parity in `g`.
pub fn ramsey_parity_map(nu_even_hz: f64, nu_odd_hz: f64) -> Result<RamseyMap> {
    if !nu_even_hz.is_finite() || !nu_odd_hz.is_finite() {
        return Err(Error::invalid("parity frequencies must be finite"));
    }
    let split = nu_even_hz - nu_odd_hz;
    if split.abs() <= 1e-12 * nu_even_hz.abs().max(nu_odd_hz.abs()).max(1.0) {
        return Err(Error::Degenerate(format!(
            "even and odd frequencies coincide ({nu_even_hz} Hz)"
        )));
    }
    let drive_hz = 0.5 * (nu_even_hz + nu_odd_hz);
    let tau_s = 0.5 / split.abs();
    let phase_even = std::f64::consts::TAU * (nu_even_hz - drive_hz) * tau_s;
    let readout_phase = -phase_even;
    let (p_excited_even, p_excited_odd) = ramsey_populations(nu_even_hz, nu_odd_hz, drive_hz, tau_s, readout_phase);
    Ok(RamseyMap {
        drive_hz,
        tau_s,
        readout_phase,
        p_excited_even,
        p_excited_odd,
    })
}
