use qparity::io::read_trace_dir;
use qparity::traces::{
    classify_parity, ensemble_statistics, fit_exponential, fit_lorentzian, lorentzian, simulated_statistics,
    EnsembleStats, FitBand, Threshold,
};
use qparity::Window;

use super::simulate_rts;
use super::Context;
use crate::output::Report;
use crate::svg::{Chart, Scale, Series, Style};
use crate::CliError;

fn parse_window(s: &str) -> Result<Window, CliError> {
    match s {
        "rectangular" => Ok(Window::Rectangular),
        "hann" => Ok(Window::Hann),
        other => Err(CliError::config(format!("unknown window `{other}` (rectangular | hann)"))),
    }
}

fn statistics(ctx: &Context, window: Window) -> Result<(EnsembleStats, &'static str), CliError> {
    let fc = &ctx.config.fit_tp;
    let threshold = fc.threshold.map_or(Threshold::Auto, Threshold::Value);
    if let Some(dir) = &fc.traces_dir {
        let mut traces = Vec::new();
        let mut unimodal = 0;
        for raw in read_trace_dir(dir)? {
            let c = classify_parity(&raw, threshold)?;
            unimodal += c.unimodal as usize;
            traces.push(c.trace);
        }
        let mut stats = ensemble_statistics(&traces, fc.concatenate, window, fc.max_lag_s)?;
        stats.unimodal_traces = unimodal;
        return Ok((stats, "files"));
    }
    let mut spec = simulate_rts::spec(&fc.simulate, ctx.seed)?;
    spec.threshold = threshold;
    if fc.concatenate {
        let mut traces = Vec::with_capacity(spec.n_traces);
        let mut unimodal = 0;
        for i in 0..spec.n_traces {
            let (t, u) = spec.trace(i)?;
            unimodal += u as usize;
            traces.push(t);
        }
        let mut stats = ensemble_statistics(&traces, true, window, fc.max_lag_s)?;
        stats.unimodal_traces = unimodal;
        return Ok((stats, "simulated"));
    }
    Ok((simulated_statistics(&spec, window, fc.max_lag_s)?, "simulated"))
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    let fc = ctx.config.fit_tp.clone();
    let window = parse_window(&fc.window)?;
    let (stats, source) = statistics(ctx, window)?;
    if stats.unimodal_traces > 0 {
        log::warn!("{} of {} traces show no bimodal level split", stats.unimodal_traces, stats.n_traces);
    }
    let psd = &stats.psd;
    let mut band = FitBand::default_for(psd);
    if let Some(lo) = fc.band_min_hz {
        band.f_min = lo;
    }
    if let Some(hi) = fc.band_max_hz {
        band.f_max = hi;
    }
    let lor = fit_lorentzian(psd, Some(band))?;

    let mut report = Report::default();
    report.text("source", source);
    report.num("n_traces", stats.n_traces as f64);
    report.num("unimodal_traces", stats.unimodal_traces as f64);
    report.text("window", &fc.window);
    report.text("concatenate", fc.concatenate);
    report.num("band_min_hz", lor.band.f_min);
    report.num("band_max_hz", lor.band.f_max);
    report.num("band_bins", lor.n_bins as f64);
    report.num("lorentzian_gamma_p_hz", lor.gamma_p_hz);
    report.num("lorentzian_gamma_p_err_hz", lor.gamma_err_hz());
    report.num("lorentzian_tp_s", lor.tp_s());
    report.num("lorentzian_amplitude", lor.amplitude);
    report.num("lorentzian_offset_per_hz", lor.offset);
    report.num("knee_hz", lor.knee_hz());
    report.text("knee_in_band", lor.knee_in_band);
    report.text("profiled", lor.profiled);
    report.num("iterations", lor.iterations as f64);
    report.num("switch_rate_hz", stats.switch_rate_hz);

    let mut diffs = vec![rel_diff(stats.switch_rate_hz, lor.gamma_p_hz)];
    let exp = fit_exponential(&stats.acf);
    match &exp {
        Ok(e) => {
            report.num("acf_gamma_p_hz", e.gamma_p_hz);
            report.num("acf_gamma_p_err_hz", e.gamma_err_hz);
            report.num("acf_tp_s", e.tp_s());
            diffs.push(rel_diff(e.gamma_p_hz, lor.gamma_p_hz));
        }
        Err(err) => {
            log::warn!("autocorrelation fit failed: {err}");
            report.text("acf_fit_error", err);
        }
    }
    let worst = diffs.iter().cloned().fold(0.0, f64::max);
    report.num("cross_check_max_rel_diff", worst);
    report.num("cross_check_tol", fc.cross_check_tol);
    let flagged = worst > fc.cross_check_tol || exp.is_err();
    report.text("cross_check_flag", flagged);
    if flagged {
        log::warn!("rate estimators disagree by {:.1}%", 100.0 * worst);
    }
    if !lor.knee_in_band {
        log::warn!("Lorentzian knee {:.4e} Hz lies outside the fit band", lor.knee_hz());
        report.text("warning", "knee outside fit band");
    }
    ctx.out.write_report("fit_tp_report.tsv", &report)?;

    let model = |f: f64| lorentzian(f, lor.gamma_p_hz, lor.amplitude, lor.offset);
    let mut w = ctx.out.table(&["freq_hz", "psd_per_hz", "model_per_hz"]);
    for (f, p) in psd.frequencies.iter().zip(&psd.power) {
        w.row_f64(&[*f, *p, model(*f)]);
    }
    ctx.out.write_table("psd.tsv", w)?;

    let acf_model = |tau: f64| match &exp {
        Ok(e) => (-2.0 * e.gamma_p_hz * tau).exp(),
        Err(_) => f64::NAN,
    };
    let mut w = ctx.out.table(&["lag_s", "acf", "model"]);
    for (t, v) in stats.acf.lags_s.iter().zip(&stats.acf.values) {
        w.row_f64(&[*t, *v, acf_model(*t)]);
    }
    ctx.out.write_table("acf.tsv", w)?;

    let mut chart = Chart::new(
        format!("Parity switching spectrum, T_P = {:.3} s", lor.tp_s()),
        "frequency (Hz)",
        "PSD (1/Hz)",
    )
    .scales(Scale::Log, Scale::Log);
    let data: Vec<(f64, f64)> = psd.frequencies.iter().cloned().zip(psd.power.iter().cloned()).collect();
    let fitted: Vec<(f64, f64)> = psd.frequencies.iter().filter(|f| **f <= lor.band.f_max).map(|f| (*f, model(*f))).collect();
    chart.push(Series::new("PSD", decimate_log(&data, 400), Style::Points));
    chart.push(Series::new("Lorentzian fit", decimate_log(&fitted, 400), Style::Line));
    ctx.out.write_svg("fit_tp.svg", &chart)?;

    let mut chart = Chart::new("Autocorrelation", "lag (s)", "C(τ)").scales(Scale::Linear, Scale::Linear);
    let pts: Vec<(f64, f64)> = stats.acf.lags_s.iter().cloned().zip(stats.acf.values.iter().cloned()).collect();
    chart.push(Series::new("data", decimate_log(&pts, 400), Style::Points));
    if exp.is_ok() {
        let m: Vec<(f64, f64)> = stats.acf.lags_s.iter().map(|t| (*t, acf_model(*t))).collect();
        chart.push(Series::new("exp(-2Γτ)", decimate_log(&m, 400), Style::Line));
    }
    ctx.out.write_svg("acf.svg", &chart)?;
    Ok(())
}

/// At most about `n` points, evenly spread in log index so both ends keep
/// their resolution.
fn decimate_log(points: &[(f64, f64)], n: usize) -> Vec<(f64, f64)> {
    if points.len() <= n {
        return points.to_vec();
    }
    let last = points.len() - 1;
    let mut idx: Vec<usize> = (0..n)
        .map(|k| ((last as f64 + 1.0).powf(k as f64 / (n - 1) as f64) - 1.0).round() as usize)
        .collect();
    idx.dedup();
    idx.into_iter().map(|i| points[i.min(last)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimation_keeps_endpoints() {
        let pts: Vec<(f64, f64)> = (0..10_000).map(|i| (i as f64, 0.0)).collect();
        let d = decimate_log(&pts, 100);
        assert!(d.len() <= 100);
        assert_eq!(d.first().unwrap().0, 0.0);
        assert_eq!(d.last().unwrap().0, 9999.0);
        assert!(d.windows(2).all(|w| w[1].0 > w[0].0));
    }

    #[test]
    fn windows_parse() {
        assert_eq!(parse_window("hann").unwrap(), Window::Hann);
        assert!(parse_window("hamming").is_err());
    }
}
