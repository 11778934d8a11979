//! Charge-parity switching in offset-charge-sensitive transmons.
//!
//! The crate covers the chain from circuit parameters to observed parity
//! lifetimes: parity-resolved spectra ([`spectrum`]), photon absorption by
//! the qubit acting as an antenna ([`antenna`]), quasiparticle tunnelling
//! and density balance ([`qp_thermo`]), telegraph-trace analysis
//! ([`traces`]), coherence fits ([`coherence`]) and the shared numerical
//! kernels ([`numerics`]). Quantities are SI unless a name says otherwise.

// `!(x > 0.0)` is the idiom for rejecting NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antenna;
pub mod coherence;
pub mod error;
pub mod io;
pub mod numerics;
#[cfg(any(test, feature = "test-oracles"))]
pub mod oracles;
pub mod qp_thermo;
pub mod spectrum;
pub mod traces;
pub mod units;

pub use antenna::{
    coupling_efficiency, pair_breaking_frequency, predict_parity_rate, z_junction, z_rad, EquivCircuit,
    GapFrequencies, ImpedanceTable, JunctionParams, RadiationModel,
};
pub use coherence::{
    bose_einstein, charge_noise_amplitude, fit_echo, fit_t1, thermal_photon_dephasing, DecayCurve, DecayKind,
    ResonatorParams,
};
pub use error::{Error, Result};
pub use io::{load_device_tables, DeviceRecord, DeviceTables, TableSource};
pub use numerics::levmar::{levmar_fit, Bound, FitOptions, FitProblem, FitResult, ParamSpec};
pub use numerics::rng::{rng_streams, RngStream};
pub use numerics::spectral::Window;
pub use qp_thermo::{fit_thermal_series, gamma_p_of_T, synthetic_series, ThermalFit, ThermalModelParams, ThermalSeries};
pub use spectrum::{CoupledSystem, Parity, QubitParams, QubitState};
pub use traces::{PsdEstimate, RtsFit, TelegraphTrace};
