use qparity::io::read_thermal_series;
use qparity::qp_thermo::{
    fit_thermal_series, gamma_p_of_T, generation_rate, steady_state_density, synthetic_series, QpBalance,
    ThermalFitInput, ThermalFitOptions, ThermalSeries,
};
use qparity::units::{self, GHZ, MK};
use qparity::RngStream;

use super::Context;
use crate::output::Report;
use crate::svg::{Chart, Scale, Series, Style};
use crate::CliError;

/// Band half-width, as a factor, of the density-balance prediction.
pub const BALANCE_BAND: f64 = 3.0;

fn inputs(ctx: &Context) -> Result<(Vec<ThermalFitInput>, String), CliError> {
    let tc = &ctx.config.thermal_fit;
    let tables = ctx.tables()?;
    if let Some(path) = &tc.series {
        let series = read_thermal_series(path)?;
        let inputs = series
            .into_iter()
            .map(|s| {
                let q = tables.require(&s.qubit_id)?.qubit_spectral()?;
                Ok(ThermalFitInput { series: s, qubit: q })
            })
            .collect::<qparity::Result<Vec<_>>>()?;
        return Ok((inputs, path.display().to_string()));
    }
    let temps: Vec<f64> = tc.temperatures_mk.iter().map(|t| t * MK).collect();
    let mut inputs = Vec::new();
    for (i, rec) in tables.with_thermal_fit().filter(|r| r.chip_id() == tc.chip).enumerate() {
        let p = rec.thermal_params(ctx.config.constants.delta0_uev)?;
        let series = synthetic_series(&rec.device_id, &tc.chip, &p, &temps, tc.noise, RngStream::new(ctx.seed, i as u64))?;
        inputs.push(ThermalFitInput { series, qubit: p.qubit });
    }
    if inputs.is_empty() {
        return Err(CliError::config(format!("chip `{}` has no qubits with thermal parameters", tc.chip)));
    }
    Ok((inputs, format!("synthetic chip {}", tc.chip)))
}

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    let tc = ctx.config.thermal_fit.clone();
    let consts = ctx.config.constants.clone();
    let (inputs, source) = inputs(ctx)?;
    let opts = ThermalFitOptions {
        delta0_uev: consts.delta0_uev,
        delta_init_uev: tc.delta_init_uev,
        fixed_delta_uev: tc.fixed_delta_uev,
        levmar: ctx.config.fit.options(),
    };
    let fit = fit_thermal_series(&inputs, &opts)?;

    let mut w = ctx.out.table(&[
        "qubit_id", "chip_id", "gp0_hz", "gp0_err_hz", "xqp_1e7", "xqp_err_1e7", "delta_ghz", "delta_err_ghz",
    ]);
    for q in &fit.qubits {
        let chip = fit.chips.iter().find(|c| c.chip_id == q.chip_id).expect("every qubit has a chip");
        let f = qparity::io::formats::format_f64;
        w.row(&[
            q.qubit_id.clone(),
            q.chip_id.clone(),
            f(q.gp0_hz),
            f(q.gp0_err_hz),
            f(q.xqp * 1e7),
            f(q.xqp_err * 1e7),
            f(chip.delta_hz() / GHZ),
            f(units::uev_to_hz(chip.delta_err_uev) / GHZ),
        ]);
    }
    ctx.out.write_table("thermal_fit.tsv", w)?;

    let mut w = ctx.out.table(&["qubit_id", "chip_id", "temperature_mk", "gamma_p_hz", "sigma_hz", "model_hz"]);
    let mut chart = Chart::new("Parity rate versus temperature", "temperature (mK)", "Γ_P (Hz)").scales(Scale::Linear, Scale::Log);
    for inp in &inputs {
        let s: &ThermalSeries = &inp.series;
        let p = fit.model_params(&s.qubit_id, inp.qubit).expect("fitted qubit");
        let f = qparity::io::formats::format_f64;
        for pt in &s.points {
            w.row(&[
                s.qubit_id.clone(),
                s.chip_id.clone(),
                f(pt.temperature_k / MK),
                f(pt.gamma_p_hz),
                f(pt.sigma_hz),
                f(gamma_p_of_T(pt.temperature_k, &p)?),
            ]);
        }
        let pts = s.points.iter().map(|pt| (pt.temperature_k / MK, pt.gamma_p_hz)).collect();
        chart.push(Series::new(s.qubit_id.clone(), pts, Style::Points));
        let (lo, hi) = (s.points[0].temperature_k, s.points[s.points.len() - 1].temperature_k);
        let curve = (0..=100)
            .map(|k| {
                let t = lo + (hi - lo) * k as f64 / 100.0;
                gamma_p_of_T(t, &p).map(|g| (t / MK, g))
            })
            .collect::<qparity::Result<Vec<_>>>()?;
        chart.push(Series::new(format!("{} fit", s.qubit_id), curve, Style::Line));
    }
    ctx.out.write_table("thermal_series.tsv", w)?;
    ctx.out.write_svg("gamma_vs_temperature.svg", &chart)?;

    let mut report = Report::default();
    report.text("source", source);
    for c in &fit.chips {
        report.num(format!("{}/delta_ghz", c.chip_id), c.delta_hz() / GHZ);
        report.num(format!("{}/delta_uev", c.chip_id), c.delta_uev);
        report.num(format!("{}/delta_err_uev", c.chip_id), c.delta_err_uev);
    }
    report.num("delta0_uev", fit.delta0_uev);
    report.num("cost", fit.cost);
    report.num("iterations", fit.iterations as f64);

    // Density balance with trapping neglected: x = √(g/r).
    let r = 1.0 / (consts.recomb_time_ns * 1e-9);
    let mut w = ctx.out.table_with(
        &[
            ("bandage_volume_um3", consts.bandage_volume_um3.to_string()),
            ("recomb_time_ns", consts.recomb_time_ns.to_string()),
        ],
        &["source", "qubit_id", "gp0_hz", "xqp_1e7", "predicted_xqp_1e7", "ratio", "in_band"],
    );
    let mut scatter_table = Vec::new();
    let mut scatter_fit = Vec::new();
    let mut in_band = 0usize;
    let mut total = 0usize;
    let tables = ctx.tables()?;
    let rows = tables
        .with_thermal_fit()
        .map(|rec| ("table", rec.device_id.clone(), rec.gp0_hz.unwrap_or(0.0), rec.xqp.unwrap_or(0.0)))
        .chain(fit.qubits.iter().map(|q| ("fit", q.qubit_id.clone(), q.gp0_hz, q.xqp)));
    for (src, id, gp0, xqp) in rows {
        let g = generation_rate(gp0, consts.delta0_uev, consts.bandage_volume_um3)?;
        let pred = steady_state_density(&QpBalance {
            gen_rate: g,
            trap_background: 0.0,
            trap_vortex: 0.0,
            recomb_rate: r,
        })?;
        let ratio = xqp / pred;
        let ok = (1.0 / BALANCE_BAND..=BALANCE_BAND).contains(&ratio);
        let f = qparity::io::formats::format_f64;
        w.row(&[src.into(), id, f(gp0), f(xqp * 1e7), f(pred * 1e7), f(ratio), ok.to_string()]);
        if src == "table" {
            total += 1;
            in_band += ok as usize;
            scatter_table.push((gp0, xqp * 1e7));
        } else {
            scatter_fit.push((gp0, xqp * 1e7));
        }
    }
    ctx.out.write_table("density_balance.tsv", w)?;
    report.num("table_rows_in_band", in_band as f64);
    report.num("table_rows", total as f64);
    ctx.out.write_report("thermal_fit_report.tsv", &report)?;

    let mut chart = Chart::new("Pad quasiparticle density", "Γ_P(0) (Hz)", "x_qp (1e-7)").scales(Scale::Log, Scale::Log);
    let gps: Vec<f64> = scatter_table.iter().chain(&scatter_fit).map(|p| p.0).filter(|g| *g > 0.0).collect();
    let (lo, hi) = gps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), g| (a.min(*g), b.max(*g)));
    if hi > 0.0 {
        let line = |k: f64| -> qparity::Result<Vec<(f64, f64)>> {
            (0..=50)
                .map(|i| {
                    let gp = lo * 0.5 * (4.0 * hi / lo).powf(i as f64 / 50.0);
                    let g = generation_rate(gp, consts.delta0_uev, consts.bandage_volume_um3)?;
                    Ok((gp, k * (g / r).sqrt() * 1e7))
                })
                .collect()
        };
        chart.push(Series::new("√(g/r)", line(1.0)?, Style::Line));
        chart.push(Series::new("×3", line(BALANCE_BAND)?, Style::Dashed));
        chart.push(Series::new("÷3", line(1.0 / BALANCE_BAND)?, Style::Dashed));
    }
    chart.push(Series::new("table", scatter_table, Style::Points));
    chart.push(Series::new("fit", scatter_fit, Style::Points));
    ctx.out.write_svg("xqp_vs_gp0.svg", &chart)?;
    Ok(())
}
