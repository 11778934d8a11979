//! Modified Bessel functions of the second kind, orders 0 and 1.
//!
//! Power series for `x <= 2`, Steed's continued fraction (CF2, Temme's form)
//! above. Both branches produce the exponentially scaled pair `e^x K_ν(x)`;
//! unscaled values are formed last so large arguments underflow cleanly.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;
const EPS: f64 = 1e-17;
const MAX_TERMS: usize = 10_000;

/// A Bessel value with an explicit underflow marker.
///
/// `underflow` is set when the unscaled value lies below the smallest normal
/// double; `value` is then 0 or subnormal and carries no relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselK {
    pub value: f64,
    pub underflow: bool,
}

/// `(e^x K₀(x), e^x K₁(x))` for `x > 0`.
pub fn bessel_k01_scaled(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("Bessel K requires finite x > 0, got {x}")));
    }
    if x <= SERIES_LIMIT {
        let (k0, k1) = series(x);
        let ex = x.exp();
        Ok((k0 * ex, k1 * ex))
    } else {
        Ok(steed_cf2(x))
    }
}

pub fn bessel_k0_scaled(x: f64) -> Result<f64> {
    bessel_k01_scaled(x).map(|p| p.0)
}

pub fn bessel_k1_scaled(x: f64) -> Result<f64> {
    bessel_k01_scaled(x).map(|p| p.1)
}

pub fn bessel_k0(x: f64) -> Result<BesselK> {
    let (k0e, _) = bessel_k01_scaled(x)?;
    Ok(unscale(k0e, x))
}

pub fn bessel_k1(x: f64) -> Result<BesselK> {
    let (_, k1e) = bessel_k01_scaled(x)?;
    Ok(unscale(k1e, x))
}

fn unscale(scaled: f64, x: f64) -> BesselK {
    let value = if x <= SERIES_LIMIT {
        scaled * (-x).exp()
    } else {
        (scaled.ln() - x).exp()
    };
    BesselK {
        value,
        underflow: value < f64::MIN_POSITIVE,
    }
}

/// Ascending series for K₀ and K₁ built from the I₀/I₁ series and digamma sums.
fn series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let log_half = (0.5 * x).ln();

    // K₀ = −(ln(x/2) + γ) I₀ + Σ_{k≥1} q^k/(k!)² H_k
    let mut term = 1.0; // q^k / (k!)²
    let mut i0 = 1.0;
    let mut harmonic = 0.0;
    let mut tail = 0.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += term * harmonic;
        if term * harmonic.max(1.0) < EPS * i0.abs().max(tail.abs()) {
            break;
        }
    }
    let k0 = -(log_half + EULER_GAMMA) * i0 + tail;

    // K₁ = 1/x + ln(x/2) I₁ − (x/4) Σ_{k≥0} [ψ(k+1)+ψ(k+2)] q^k/(k!(k+1)!)
    let mut term = 1.0; // q^k / (k!(k+1)!)
    let mut psi_a = -EULER_GAMMA; // ψ(k+1)
    let mut psi_b = 1.0 - EULER_GAMMA; // ψ(k+2)
    let mut i1_sum = term;
    let mut dsum = term * (psi_a + psi_b);
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        psi_a += 1.0 / kf;
        psi_b += 1.0 / (kf + 1.0);
        i1_sum += term;
        let d = term * (psi_a + psi_b);
        dsum += d;
        if d.abs() < EPS * dsum.abs() && term < EPS * i1_sum {
            break;
        }
    }
    let i1 = 0.5 * x * i1_sum;
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * dsum;
    (k0, k1)
}

/// Steed's CF2 for ν = 0; returns the scaled pair.
fn steed_cf2(x: f64) -> (f64, f64) {
    let a1 = 0.25; // ¼ − ν²
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_TERMS {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0e = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
    let k1e = k0e * (x + 0.5 - h) / x;
    (k0e, k1e)
}
