//! Offset-charge jump detection on 1e-periodic trajectories.

use crate::error::{Error, Result};

/// Jumps smaller than this (in e) are treated as drift.
pub const DEFAULT_JUMP_THRESHOLD_E: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeJump {
    /// Time of the sample after the jump.
    pub time_s: f64,
    /// Signed wrapped step, in `[−0.5, 0.5)` e.
    pub amplitude_e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpCatalog {
    pub events: Vec<ChargeJump>,
    pub threshold_e: f64,
    /// `t_last − t_first`.
    pub duration_s: f64,
}

impl JumpCatalog {
    pub fn count(&self) -> usize {
        self.events.len()
    }

    /// Events per second; zero for an empty or instantaneous record.
    pub fn rate_hz(&self) -> f64 {
        if self.duration_s > 0.0 {
            self.events.len() as f64 / self.duration_s
        } else {
            0.0
        }
    }

    pub fn rate_mhz(&self) -> f64 {
        self.rate_hz() * 1e3
    }
}

/// Minimal-image representative of `d` modulo 1.
pub fn wrap_offset(d: f64) -> f64 {
    (d + 0.5).rem_euclid(1.0) - 0.5
}

/// Consecutive-sample offset steps whose wrapped magnitude exceeds
/// `threshold_e`.
pub fn detect_charge_jumps(time_s: &[f64], ng_e: &[f64], threshold_e: f64) -> Result<JumpCatalog> {
    if time_s.len() != ng_e.len() {
        return Err(Error::invalid(format!(
            "time and offset columns differ in length ({} vs {})",
            time_s.len(),
            ng_e.len()
        )));
    }
    if !(threshold_e > 0.0) {
        return Err(Error::invalid(format!("jump threshold must be > 0, got {threshold_e}")));
    }
    if time_s.iter().chain(ng_e).any(|v| !v.is_finite()) {
        return Err(Error::invalid("offset trajectory contains non-finite values"));
    }
    if let Some(i) = time_s.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::invalid(format!("times decrease at sample {}", i + 1)));
    }
    let events = (1..ng_e.len())
        .filter_map(|i| {
            let d = wrap_offset(ng_e[i] - ng_e[i - 1]);
            (d.abs() > threshold_e).then_some(ChargeJump {
                time_s: time_s[i],
                amplitude_e: d,
            })
        })
        .collect();
    let duration_s = match (time_s.first(), time_s.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    Ok(JumpCatalog {
        events,
        threshold_e,
        duration_s,
    })
}
