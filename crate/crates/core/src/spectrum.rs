//! Parity-resolved spectrum of a Cooper-pair box.
//!
//! The Hamiltonian is built on the electron-number lattice `k`:
//! `H = E_C (k − 2n_g)² − (E_J/2)(|k⟩⟨k+2| + h.c.)`. Even parity is the
//! even-`k` sector and odd parity the odd-`k` sector; `cos(φ/2)` is half the
//! `k → k±1` hop, so it couples the two sectors directly.
//!
//! The lattice is centred on `round(2n_g)`, which makes every result exactly
//! 2e-periodic in `n_g` and turns a shift `n_g → n_g + ½` into an exact
//! exchange of the two sectors.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::diff::central_difference;
use crate::numerics::tridiag::SymTridiagonal;

pub const DEFAULT_CUTOFF: usize = 60;
pub const MIN_CUTOFF: usize = 10;
pub const MAX_CUTOFF: usize = 2048;
/// Relative level change tolerated between a cutoff and its double.
pub const CUTOFF_TOL: f64 = 1e-9;
/// Step in `n_g` used for the charge-dispersion slope.
pub const SLOPE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Even, Parity::Odd];

    pub fn flipped(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    /// The eigenvalue `P = ±1`.
    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    fn residue(self) -> i64 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

impl FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "even" | "e" | "+1" | "1" => Ok(Parity::Even),
            "odd" | "o" | "-1" => Ok(Parity::Odd),
            other => Err(Error::invalid(format!("invalid parity tag `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitState {
    Ground,
    Excited,
}

impl FromStr for QubitState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "g" | "ground" => Ok(QubitState::Ground),
            "e" | "excited" => Ok(QubitState::Excited),
            other => Err(Error::invalid(format!("invalid qubit state `{other}`"))),
        }
    }
}

/// Cooper-pair-box parameters. Energies are frequencies `E/h` in Hz; `ng` is
/// in units of 2e; `cutoff` is the half-width of the electron-number lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitParams {
    pub ej_hz: f64,
    pub ec_hz: f64,
    pub ng: f64,
    pub cutoff: usize,
}

impl QubitParams {
    pub fn new(ej_hz: f64, ec_hz: f64, ng: f64) -> Result<Self> {
        let p = Self {
            ej_hz,
            ec_hz,
            ng,
            cutoff: DEFAULT_CUTOFF,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_ng(self, ng: f64) -> Self {
        Self { ng, ..self }
    }

    pub fn with_cutoff(self, cutoff: usize) -> Self {
        Self { cutoff, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ej_hz >= 0.0) || !self.ej_hz.is_finite() {
            return Err(Error::invalid(format!("E_J must be finite and >= 0, got {}", self.ej_hz)));
        }
        if !(self.ec_hz > 0.0) || !self.ec_hz.is_finite() {
            return Err(Error::invalid(format!("E_C must be finite and > 0, got {}", self.ec_hz)));
        }
        if !self.ng.is_finite() {
            return Err(Error::invalid("n_g must be finite"));
        }
        if self.cutoff < MIN_CUTOFF || self.cutoff > MAX_CUTOFF {
            return Err(Error::invalid(format!(
                "cutoff must lie in [{MIN_CUTOFF}, {MAX_CUTOFF}], got {}",
                self.cutoff
            )));
        }
        Ok(())
    }
}

/// One parity sector at a fixed cutoff.
struct Sector {
    kmin: i64,
    matrix: SymTridiagonal,
}

impl Sector {
    fn build(p: &QubitParams, parity: Parity, cutoff: usize) -> Self {
        let x = 2.0 * p.ng;
        let kc = (x + 0.5).floor() as i64;
        let c = cutoff as i64;
        let mut kmin = kc - c;
        if (kmin - parity.residue()).rem_euclid(2) != 0 {
            kmin += 1;
        }
        let diag: Vec<f64> = (kmin..=kc + c)
            .step_by(2)
            .map(|k| p.ec_hz * (k as f64 - x).powi(2))
            .collect();
        let off = vec![-0.5 * p.ej_hz; diag.len() - 1];
        Self {
            kmin,
            matrix: SymTridiagonal { diag, off },
        }
    }

    fn amplitude(&self, v: &[f64], k: i64) -> f64 {
        let d = k - self.kmin;
        if d < 0 || d % 2 != 0 {
            return 0.0;
        }
        v.get((d / 2) as usize).copied().unwrap_or(0.0)
    }
}

fn sector_size(cutoff: usize) -> usize {
    cutoff
}

fn max_rel_change(a: &[f64], b: &[f64], ec: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(ec))
        .fold(0.0, f64::max)
}

/// Smallest cutoff ≥ `p.cutoff` at which the lowest `k` levels of both
/// sectors are stable under doubling, together with those levels.
fn converged_cutoff(p: &QubitParams, parities: &[Parity], k: usize) -> Result<(usize, Vec<Vec<f64>>)> {
    let levels_at = |c: usize| -> Vec<Vec<f64>> {
        parities
            .iter()
            .map(|&par| Sector::build(p, par, c).matrix.lowest_eigenvalues(k))
            .collect()
    };
    let mut cutoff = p.cutoff;
    let mut current = levels_at(cutoff);
    loop {
        let next_cutoff = cutoff * 2;
        let next = levels_at(next_cutoff);
        let change = current
            .iter()
            .zip(&next)
            .map(|(a, b)| max_rel_change(a, b, p.ec_hz))
            .fold(0.0, f64::max);
        if change < CUTOFF_TOL {
            return Ok((next_cutoff, next));
        }
        if next_cutoff * 2 > MAX_CUTOFF {
            return Err(Error::CutoffNotConverged {
                cutoff: next_cutoff,
                change,
            });
        }
        cutoff = next_cutoff;
        current = next;
    }
}

fn check_level_count(p: &QubitParams, k: usize) -> Result<()> {
    if k == 0 || k > sector_size(p.cutoff) {
        return Err(Error::invalid(format!(
            "level count {k} outside [1, {}] for cutoff {}",
            sector_size(p.cutoff),
            p.cutoff
        )));
    }
    Ok(())
}

/// Lowest `k` eigenvalues (Hz, ascending) of the given parity sector.
pub fn eigenlevels(params: &QubitParams, parity: Parity, k: usize) -> Result<Vec<f64>> {
    params.validate()?;
    check_level_count(params, k)?;
    let (_, mut levels) = converged_cutoff(params, &[parity], k)?;
    Ok(levels.remove(0))
}

/// Lowest levels of both parities at one offset charge.
#[derive(Debug, Clone, PartialEq)]
pub struct ParitySpectrum {
    pub even_levels: Vec<f64>,
    pub odd_levels: Vec<f64>,
    pub ng: f64,
}

impl ParitySpectrum {
    pub fn levels(&self, parity: Parity) -> &[f64] {
        match parity {
            Parity::Even => &self.even_levels,
            Parity::Odd => &self.odd_levels,
        }
    }
}

pub fn parity_spectrum(params: &QubitParams, k: usize) -> Result<ParitySpectrum> {
    params.validate()?;
    check_level_count(params, k)?;
    let (_, mut levels) = converged_cutoff(params, &Parity::BOTH, k)?;
    let odd_levels = levels.pop().unwrap_or_default();
    let even_levels = levels.pop().unwrap_or_default();
    Ok(ParitySpectrum {
        even_levels,
        odd_levels,
        ng: params.ng,
    })
}

/// g–e transition frequency of the given parity at `params.ng`.
pub fn transition_frequency(params: &QubitParams, parity: Parity) -> Result<f64> {
    let levels = eigenlevels(params, parity, 2)?;
    Ok(levels[1] - levels[0])
}

/// Splitting `|E_g^O − E_g^E|/h` of the two parity ground states.
pub fn epsilon0(params: &QubitParams) -> Result<f64> {
    let s = parity_spectrum(params, 1)?;
    Ok((s.odd_levels[0] - s.even_levels[0]).abs())
}

/// `c₀ = |⟨g^E| cos(φ/2) |g^O⟩|`.
pub fn cos_half_phi_element(params: &QubitParams) -> Result<f64> {
    params.validate()?;
    let (cutoff, levels) = converged_cutoff(params, &Parity::BOTH, 2)?;
    for (par, lv) in Parity::BOTH.iter().zip(&levels) {
        if lv[1] - lv[0] <= 1e-12 * params.ec_hz {
            return Err(Error::Degenerate(format!(
                "{par} ground state is degenerate (E_J={}, n_g={}); c0 is undefined",
                params.ej_hz, params.ng
            )));
        }
    }
    let even = Sector::build(params, Parity::Even, cutoff);
    let odd = Sector::build(params, Parity::Odd, cutoff);
    let ve = even.matrix.eigenvector(levels[0][0]);
    let vo = odd.matrix.eigenvector(levels[1][0]);
    let mut sum = 0.0;
    for (i, a) in ve.iter().enumerate() {
        let k = even.kmin + 2 * i as i64;
        sum += a * (odd.amplitude(&vo, k + 1) + odd.amplitude(&vo, k - 1));
    }
    Ok((0.5 * sum).abs().min(1.0))
}

/// `∂f_ge/∂n_g` in Hz per unit `n_g`, by central difference with step
/// [`SLOPE_STEP`].
pub fn charge_dispersion_slope(params: &QubitParams, parity: Parity) -> Result<f64> {
    params.validate()?;
    // Pin the cutoff so both stencil points use one basis.
    let (cutoff, _) = converged_cutoff(params, &[parity], 2)?;
    let pinned = params.with_cutoff(cutoff);
    let freq = |ng: f64| {
        let s = Sector::build(&pinned.with_ng(ng), parity, cutoff);
        let l = s.matrix.lowest_eigenvalues(2);
        l[1] - l[0]
    };
    let d = central_difference(freq, params.ng, SLOPE_STEP)?;
    if !d.agrees(1e-6) {
        log::warn!(
            "charge dispersion slope at n_g={} fails the halved-step check (relative change {:.2e})",
            params.ng,
            d.relative_change
        );
    }
    Ok(d.value)
}

/// Qubit coupled to a readout resonator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledSystem {
    pub qubit: QubitParams,
    /// Coupling g/2π, Hz. Zero decouples the resonator.
    pub g_hz: f64,
    pub fr_bare_hz: f64,
}

impl CoupledSystem {
    pub fn new(qubit: QubitParams, g_hz: f64, fr_bare_hz: f64) -> Result<Self> {
        if !(g_hz >= 0.0) || !g_hz.is_finite() {
            return Err(Error::invalid(format!("coupling must be finite and >= 0, got {g_hz}")));
        }
        if !(fr_bare_hz > 0.0) || !fr_bare_hz.is_finite() {
            return Err(Error::invalid(format!("resonator frequency must be > 0, got {fr_bare_hz}")));
        }
        qubit.validate()?;
        Ok(Self {
            qubit,
            g_hz,
            fr_bare_hz,
        })
    }
}

/// Resonator frequency dressed by a two-level qubit in `state` of `parity`.
pub fn dressed_resonator_frequency(sys: &CoupledSystem, parity: Parity, state: QubitState) -> Result<f64> {
    if sys.g_hz == 0.0 {
        return Ok(sys.fr_bare_hz);
    }
    let fq = transition_frequency(&sys.qubit, parity)?;
    jaynes_cummings_shift(fq, sys.fr_bare_hz, sys.g_hz, state)
}

/// Exact two-level Jaynes–Cummings resonator line for qubit frequency `fq`.
pub fn jaynes_cummings_shift(fq: f64, fr: f64, g: f64, state: QubitState) -> Result<f64> {
    let delta = fq - fr;
    if delta.abs() <= g {
        return Err(Error::Degenerate(format!(
            "qubit-resonator detuning {delta:.6e} Hz is within the coupling {g:.6e} Hz"
        )));
    }
    let s = delta.signum();
    let q = 0.25 * delta * delta;
    let one = (q + g * g).sqrt();
    Ok(match state {
        QubitState::Ground => fr - s * g * g / (one + 0.5 * delta.abs()),
        QubitState::Excited => fr + s * ((q + 2.0 * g * g).sqrt() - one),
    })
}

/// Transition frequencies `level[upper] − level[lower]` for each parity over a
/// grid of offset charges.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub ng: Vec<f64>,
    pub columns: Vec<SpectrumColumn>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumColumn {
    pub parity: Parity,
    pub lower: usize,
    pub upper: usize,
    pub values: Vec<f64>,
}

impl SpectrumColumn {
    pub fn label(&self) -> String {
        format!("{}_{}{}_hz", self.parity, self.lower, self.upper)
    }
}

pub fn spectrum_vs_ng(
    params: &QubitParams,
    grid: &[f64],
    parities: &[Parity],
    pairs: &[(usize, usize)],
) -> Result<SpectrumTable> {
    if grid.is_empty() {
        return Err(Error::invalid("n_g grid is empty"));
    }
    if parities.is_empty() || pairs.is_empty() {
        return Err(Error::invalid("at least one parity and one level pair are required"));
    }
    if let Some(&(a, b)) = pairs.iter().find(|(a, b)| a >= b) {
        return Err(Error::invalid(format!("level pair ({a}, {b}) must have lower < upper")));
    }
    let k = pairs.iter().map(|p| p.1).max().unwrap_or(1) + 1;
    params.validate()?;
    check_level_count(params, k)?;
    let rows: Vec<Vec<Vec<f64>>> = grid
        .par_iter()
        .map(|&ng| {
            let p = params.with_ng(ng);
            converged_cutoff(&p, parities, k).map(|(_, l)| l)
        })
        .collect::<Result<_>>()?;
    let mut columns = Vec::new();
    for (pi, &parity) in parities.iter().enumerate() {
        for &(lower, upper) in pairs {
            columns.push(SpectrumColumn {
                parity,
                lower,
                upper,
                values: rows.iter().map(|r| r[pi][upper] - r[pi][lower]).collect(),
            });
        }
    }
    Ok(SpectrumTable {
        ng: grid.to_vec(),
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::GHZ;

    fn qp(ej: f64, ec: f64) -> QubitParams {
        QubitParams::new(ej * GHZ, ec * GHZ, 0.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn charging_parabola_without_tunnelling() {
        let p = QubitParams::new(0.0, 1.0 * GHZ, 0.0).unwrap();
        let l = eigenlevels(&p, Parity::Even, 2).unwrap();
        assert!(l[0].abs() < 1e-6);
        assert!((l[1] - l[0] - 4.0 * GHZ).abs() < 1e-3);
    }

    #[test]
    fn table_rows_epsilon0() {
        assert!(rel(epsilon0(&qp(4.67, 1.40)).unwrap() / GHZ, 0.238) < 0.02);
        assert!(rel(epsilon0(&qp(4.27, 1.48)).unwrap() / GHZ, 0.319) < 0.01);
        let e = epsilon0(&qp(12.25, 0.44)).unwrap() / GHZ;
        assert!(e / 2.18e-5 < 1.5 && 2.18e-5 / e < 1.5, "{e}");
        let e = epsilon0(&qp(14.66, 0.37)).unwrap() / GHZ;
        assert!(e / 1.6e-6 < 1.5 && 1.6e-6 / e < 1.5, "{e}");
    }

    #[test]
    fn weak_tunnelling_limit_of_epsilon0() {
        let p = QubitParams::new(1e-4 * GHZ, 1.0 * GHZ, 0.0).unwrap();
        assert!(rel(epsilon0(&p).unwrap(), 1.0 * GHZ) < 1e-3);
    }

    #[test]
    fn table_rows_c0() {
        for (ej, ec, c0sq) in [(4.67, 1.40, 0.775), (12.25, 0.44, 0.931), (2.35, 1.29, 0.691)] {
            let c = cos_half_phi_element(&qp(ej, ec)).unwrap();
            assert!(rel(c * c, c0sq) < 0.02, "({ej},{ec}) -> {}", c * c);
        }
    }

    #[test]
    fn transition_frequencies_s1q1() {
        let p = qp(4.67, 1.40);
        assert!(rel(transition_frequency(&p, Parity::Even).unwrap(), 6.833 * GHZ) < 0.01);
        assert!(rel(transition_frequency(&p, Parity::Odd).unwrap(), 4.473 * GHZ) < 0.01);
    }

    #[test]
    fn half_shift_exchanges_parities() {
        let p = qp(4.67, 1.40).with_ng(0.13);
        let a = transition_frequency(&p.with_ng(0.63), Parity::Even).unwrap();
        let b = transition_frequency(&p, Parity::Odd).unwrap();
        assert!(rel(a, b) < 1e-12);
        let e0 = transition_frequency(&p.with_ng(0.5), Parity::Even).unwrap();
        let o0 = transition_frequency(&p.with_ng(0.0), Parity::Odd).unwrap();
        assert_eq!(e0, o0);
    }

    #[test]
    fn degenerate_odd_ground_is_rejected() {
        let p = QubitParams::new(0.0, 1.0 * GHZ, 0.0).unwrap();
        assert!(matches!(cos_half_phi_element(&p), Err(Error::Degenerate(_))));
    }

    #[test]
    fn slope_vanishes_at_sweet_spot_and_is_odd() {
        let p = qp(4.67, 1.40);
        assert!(charge_dispersion_slope(&p, Parity::Even).unwrap().abs() < 1.0);
        for ng in [0.1, 0.25, 0.37] {
            let a = charge_dispersion_slope(&p.with_ng(ng), Parity::Even).unwrap();
            let b = charge_dispersion_slope(&p.with_ng(-ng), Parity::Even).unwrap();
            assert!((a + b).abs() < 1e-7 * a.abs(), "{a} {b}");
        }
    }

    #[test]
    fn slope_matches_fine_secant() {
        let p = qp(4.67, 1.40).with_ng(0.25).with_cutoff(120);
        let f = |ng: f64| transition_frequency(&p.with_ng(ng), Parity::Even).unwrap();
        let secant = (f(0.25 + 5e-7) - f(0.25 - 5e-7)) / 1e-6;
        let slope = charge_dispersion_slope(&p, Parity::Even).unwrap();
        assert!(rel(slope, secant) < 1e-5, "{slope} vs {secant}");
    }

    #[test]
    fn dressed_frequencies_decoupled_and_ordered() {
        let q = qp(4.67, 1.40);
        let bare = CoupledSystem::new(q, 0.0, 5.556 * GHZ).unwrap();
        let coupled = CoupledSystem::new(q, 24.3e6, 5.556 * GHZ).unwrap();
        for par in Parity::BOTH {
            for st in [QubitState::Ground, QubitState::Excited] {
                assert_eq!(dressed_resonator_frequency(&bare, par, st).unwrap(), 5.556 * GHZ);
            }
        }
        let f = |par, st| dressed_resonator_frequency(&coupled, par, st).unwrap();
        let (ge, go) = (f(Parity::Even, QubitState::Ground), f(Parity::Odd, QubitState::Ground));
        let (ee, eo) = (f(Parity::Even, QubitState::Excited), f(Parity::Odd, QubitState::Excited));
        assert!(ge < go);
        assert!((go - ee).abs() < 0.2e6);
        assert!((ge - eo).abs() < 0.2e6);
    }

    #[test]
    fn vacuum_rabi_degeneracy_is_an_error() {
        assert!(jaynes_cummings_shift(5.0e9, 5.01e9, 20e6, QubitState::Ground).is_err());
    }

    #[test]
    fn spectrum_table_consistency_and_periodicity() {
        let p = qp(4.67, 1.40);
        let t = spectrum_vs_ng(&p, &[0.2], &[Parity::Even], &[(0, 1)]).unwrap();
        assert_eq!(t.columns[0].values[0], transition_frequency(&p.with_ng(0.2), Parity::Even).unwrap());
        let grid: Vec<f64> = (0..9).map(|i| -0.5 + 0.125 * i as f64).collect();
        let shifted: Vec<f64> = grid.iter().map(|x| x + 1.0).collect();
        let a = spectrum_vs_ng(&p, &grid, &Parity::BOTH, &[(0, 1), (0, 2)]).unwrap();
        let b = spectrum_vs_ng(&p, &shifted, &Parity::BOTH, &[(0, 1), (0, 2)]).unwrap();
        for (ca, cb) in a.columns.iter().zip(&b.columns) {
            for (x, y) in ca.values.iter().zip(&cb.values) {
                assert!(rel(*x, *y) < 1e-9);
            }
        }
        assert!(spectrum_vs_ng(&p, &[], &[Parity::Even], &[(0, 1)]).is_err());
    }

    #[test]
    fn even_branch_maximum_at_zero_offset() {
        let p = qp(3.0, 1.0);
        let grid: Vec<f64> = (0..=400).map(|i| -0.5 + i as f64 / 400.0).collect();
        let t = spectrum_vs_ng(&p, &grid, &[Parity::Even], &[(0, 1)]).unwrap();
        let v = &t.columns[0].values;
        let imax = (0..v.len()).max_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap()).unwrap();
        assert!(grid[imax].abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(QubitParams::new(-1.0, 1.0, 0.0).is_err());
        assert!(QubitParams::new(1.0, 0.0, 0.0).is_err());
        assert!(qp(1.0, 1.0).with_cutoff(5).validate().is_err());
        assert!(eigenlevels(&qp(1.0, 1.0), Parity::Even, 0).is_err());
        assert!(eigenlevels(&qp(1.0, 1.0), Parity::Even, 61).is_err());
        assert!("sideways".parse::<Parity>().is_err());
        assert_eq!("odd".parse::<Parity>().unwrap(), Parity::Odd);
    }
}
