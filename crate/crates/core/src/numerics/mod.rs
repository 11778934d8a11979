//! Shared numerical kernels.

pub mod bessel;
pub mod diff;
pub mod levmar;
pub mod rng;
pub mod spectral;
pub mod tridiag;

pub use bessel::{bessel_k0, bessel_k0_scaled, bessel_k01_scaled, bessel_k1, bessel_k1_scaled, BesselK};
pub use diff::{central_difference, Derivative};
pub use levmar::{levmar_fit, Bound, FitOptions, FitProblem, FitResult, ParamSpec, StopReason};
pub use rng::{rng_streams, RngStream, RNG_ALGORITHM};
pub use spectral::{autocorrelation, PeriodogramPlan, Window};
pub use tridiag::SymTridiagonal;
