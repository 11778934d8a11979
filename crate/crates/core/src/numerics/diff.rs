//! Central differences with a halved-step agreement check.

use crate::error::{Error, Result};

/// A central-difference derivative estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    /// `(f(x+h) − f(x−h)) / 2h`.
    pub value: f64,
    /// The same quotient with step `h/2`.
    pub halved: f64,
    /// `|value − halved|` relative to `max(|value|, |halved|, |f(x)|)`.
    pub relative_change: f64,
    /// False when the symmetric second difference fails to shrink with the
    /// step, i.e. `f` has a kink or jump inside `[x−h, x+h]`.
    pub smooth: bool,
}

impl Derivative {
    pub fn agrees(&self, tol: f64) -> bool {
        self.smooth && self.relative_change <= tol
    }
}

pub fn central_difference<F>(f: F, x: f64, h: f64) -> Result<Derivative>
where
    F: Fn(f64) -> f64,
{
    if !(h > 0.0) || !h.is_finite() || !x.is_finite() {
        return Err(Error::invalid(format!("central difference needs finite x and h > 0 (x={x}, h={h})")));
    }
    let eval = |t: f64| {
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(format!("non-finite function value at {t}")))
        }
    };
    let f0 = eval(x)?;
    let (fp, fm) = (eval(x + h)?, eval(x - h)?);
    let (fp2, fm2) = (eval(x + 0.5 * h)?, eval(x - 0.5 * h)?);

    let value = (fp - fm) / (2.0 * h);
    let halved = (fp2 - fm2) / h;
    let scale = value.abs().max(halved.abs()).max(f0.abs());
    let relative_change = if scale == 0.0 { 0.0 } else { (value - halved).abs() / scale };

    // Smooth f: the second difference scales as h², so asym(h/2) ≈ asym(h)/2.
    // A kink leaves it O(1).
    let asym = (fp - 2.0 * f0 + fm).abs() / h;
    let asym_half = (fp2 - 2.0 * f0 + fm2).abs() / (0.5 * h);
    let magnitude = f0.abs().max(fp.abs()).max(fm.abs());
    let noise = 16.0 * f64::EPSILON * magnitude / h;
    let smooth = asym_half <= 0.75 * asym + noise;

    Ok(Derivative {
        value,
        halved,
        relative_change,
        smooth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let d = central_difference(|x| x * x, 3.0, 1e-3).unwrap();
        assert!((d.value - 6.0).abs() < 1e-10);
        assert!(d.agrees(1e-9));
    }

    #[test]
    fn sine_at_zero() {
        let d = central_difference(f64::sin, 0.0, 1e-5).unwrap();
        assert!((d.value - 1.0).abs() < 1e-10);
        assert!(d.agrees(1e-9));
    }

    #[test]
    fn kink_fails_the_check() {
        let d = central_difference(f64::abs, 0.0, 1e-3).unwrap();
        assert!(!d.smooth);
        assert!(!d.agrees(1e-6));
    }

    #[test]
    fn jump_fails_the_check() {
        let d = central_difference(|x| if x < 0.0 { 0.0 } else { 1.0 }, 1e-4, 1e-3).unwrap();
        assert!(!d.agrees(1e-6));
    }

    #[test]
    fn non_finite_is_an_error() {
        assert!(central_difference(|x| 1.0 / x, 0.0, 1e-3).is_err());
        assert!(central_difference(|x| x.ln(), 0.0005, 1e-3).is_err());
        assert!(central_difference(|x| x, 0.0, 0.0).is_err());
    }
}
