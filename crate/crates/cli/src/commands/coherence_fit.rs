use qparity::coherence::{bose_einstein, charge_noise_amplitude, fit_echo, fit_t1, thermal_photon_dephasing, ResonatorParams};
use qparity::io::read_decay_curve;
use qparity::spectrum::{charge_dispersion_slope, Parity};
use qparity::units::{GHZ, MHZ, MK, US};

use super::Context;
use crate::output::Report;
use crate::svg::{Chart, Scale, Series, Style};
use crate::CliError;

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    let cc = ctx.config.coherence_fit.clone();
    let mut report = Report::default();
    let mut decay = Chart::new("Decay curves", "time (μs)", "population").scales(Scale::Linear, Scale::Linear);

    let mut t1_s = cc.t1_us.map(|t| t * US);
    if let Some(path) = &cc.relaxation {
        let curve = read_decay_curve(path)?;
        let fit = fit_t1(&curve)?;
        report.num("t1_us", fit.t1_s / US);
        report.num("t1_err_us", fit.t1_err_s() / US);
        report.num("t1_a", fit.a);
        report.num("t1_b", fit.b);
        report.num("t1_iterations", fit.iterations as f64);
        let data = curve.times_s.iter().zip(&curve.populations).map(|(t, p)| (t / US, *p)).collect();
        let model = curve
            .times_s
            .iter()
            .map(|t| (t / US, fit.a * (-t / fit.t1_s).exp() + fit.b))
            .collect();
        decay.push(Series::new("relaxation", data, Style::Points));
        decay.push(Series::new("T1 fit", model, Style::Line));
        t1_s = Some(fit.t1_s);
    }

    if let Some(path) = &cc.echo {
        let curve = read_decay_curve(path)?;
        let t1 = match t1_s {
            Some(t) => t,
            None => ctx.device_record()?.t1_s.ok_or_else(|| {
                CliError::config("echo fit needs T1: supply a relaxation curve, coherence_fit.t1_us or a device with T1")
            })?,
        };
        let fit = fit_echo(&curve, t1)?;
        report.num("echo_t1_used_us", t1 / US);
        report.num("tphi_us", fit.tphi_s / US);
        report.num("tphi_err_us", fit.tphi_err_s() / US);
        report.num("gaussian_rate_s2", fit.gaussian_rate_s2);
        report.num("echo_iterations", fit.iterations as f64);
        let data = curve.times_s.iter().zip(&curve.populations).map(|(t, p)| (t / US, *p)).collect();
        let model = curve
            .times_s
            .iter()
            .map(|t| (t / US, fit.a * (-t / (2.0 * t1) - fit.gaussian_rate_s2 * t * t).exp() + fit.b))
            .collect();
        decay.push(Series::new("echo", data, Style::Points));
        decay.push(Series::new("echo fit", model, Style::Line));

        if fit.tphi_s.is_finite() {
            let slope = match cc.slope_mhz_per_ng {
                Some(s) => s * MHZ,
                None => {
                    let rec = ctx.device_record()?;
                    charge_dispersion_slope(&rec.qubit_params(cc.ng)?, Parity::Even)?
                }
            };
            report.num("slope_mhz_per_ng", slope / MHZ);
            report.num("charge_noise_e2", charge_noise_amplitude(fit.tphi_s, slope)?);
        } else {
            report.text("charge_noise_e2", "unresolved (no Gaussian dephasing)");
        }
    }
    if !decay.series.is_empty() {
        ctx.out.write_svg("decay.svg", &decay)?;
    }

    let res = ResonatorParams::new(cc.kappa_mhz * MHZ, cc.chi_mhz * MHZ, cc.fr_ghz * GHZ)?;
    report.num("kappa_mhz", cc.kappa_mhz);
    report.num("chi_mhz", cc.chi_mhz);
    report.num("fr_ghz", cc.fr_ghz);
    report.num("dephasing_prefactor_mhz", res.dephasing_prefactor_hz() / MHZ);
    ctx.out.write_report("coherence_report.tsv", &report)?;

    let mut w = ctx.out.table(&["temperature_mk", "n_th", "gamma_phi_hz"]);
    let mut pts = Vec::new();
    for &t in &cc.temperatures_mk {
        let n = bose_einstein(res.fr_hz, t * MK)?;
        let g = thermal_photon_dephasing(&res, t * MK)?;
        w.row_f64(&[t, n, g]);
        pts.push((t, g));
    }
    ctx.out.write_table("thermal_dephasing.tsv", w)?;
    let mut chart = Chart::new("Thermal-photon dephasing", "temperature (mK)", "Γ_φ (Hz)").scales(Scale::Linear, Scale::Log);
    chart.push(Series::new("Γ_φ", pts, Style::Line));
    ctx.out.write_svg("thermal_dephasing.svg", &chart)?;
    Ok(())
}
