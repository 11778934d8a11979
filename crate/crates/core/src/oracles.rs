//! Independent reference computations used to validate the production
//! kernels. Each oracle takes a deliberately different numerical route.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::spectrum::{Parity, QubitParams};

/// `e^x K_ν(x)` from `∫₀^∞ e^{−x(cosh t − 1)} cosh(νt) dt` by adaptive
/// Gauss–Kronrod (7/15) quadrature.
pub fn bessel_k_scaled_quadrature(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0);
    // Beyond this point the integrand is below e^{-800}.
    let upper = (1.0 + 800.0 / x).acosh();
    let f = |t: f64| (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    // Split so that the peak region near t = 0 is resolved.
    let mut edges = vec![0.0];
    let mut t = (1.0 / x).min(upper).max(1e-3);
    while t < upper {
        edges.push(t);
        t *= 2.0;
    }
    edges.push(upper);
    edges
        .windows(2)
        .map(|w| adaptive_gk15(&f, w[0], w[1], 1e-15, 400))
        .sum()
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += GK_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive GK15: bisects the interval with the largest error
/// estimate until the summed estimate meets `rel_tol` or `max_intervals`.
fn adaptive_gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, max_intervals: usize) -> f64 {
    let (v, e) = gk15(f, a, b);
    let mut parts = vec![(a, b, v, e)];
    while parts.len() < max_intervals {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs() || err < 1e-300 {
            break;
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = parts.swap_remove(i);
        let m = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, m);
        let (v2, e2) = gk15(f, m, hi);
        parts.push((lo, m, v1, e1));
        parts.push((m, hi, v2, e2));
    }
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    parts.iter().map(|p| p.2).sum()
}

/// Ground energy (Hz) of one parity sector from a dense diagonalization in
/// the Cooper-pair basis `H = 4E_C(n − n_g + (P−1)/4)² − E_J cos φ`.
pub fn pair_basis_ground(params: &QubitParams, parity: Parity, half_width: usize) -> f64 {
    let shift = match parity {
        Parity::Even => 0.0,
        Parity::Odd => -0.5,
    };
    let centre = params.ng.round() as i64;
    let n = 2 * half_width + 1;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let pairs = centre - half_width as i64 + i as i64;
        h[(i, i)] = 4.0 * params.ec_hz * (pairs as f64 - params.ng + shift).powi(2);
        if i + 1 < n {
            h[(i, i + 1)] = -0.5 * params.ej_hz;
            h[(i + 1, i)] = -0.5 * params.ej_hz;
        }
    }
    SymmetricEigen::new(h).eigenvalues.min()
}

/// Parity splitting from two independent pair-basis diagonalizations.
pub fn pair_basis_epsilon0(params: &QubitParams, half_width: usize) -> f64 {
    (pair_basis_ground(params, Parity::Odd, half_width) - pair_basis_ground(params, Parity::Even, half_width)).abs()
}

/// Minimizer of `f` over a uniform grid of `n` points on `[lo, hi]`.
pub fn grid_search_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .map(|x| (x, f(x)))
        .fold((lo, f64::INFINITY), |best, (x, v)| if v < best.1 { (x, v) } else { best })
}

/// `I_ν(x)` for integer ν by direct summation of the ascending series;
/// moderate `x` only.
pub fn bessel_i_series(nu: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = (0.5 * x).powi(nu as i32) / (1..=nu).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..500 {
        term *= q / (k as f64 * (k + nu) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}
