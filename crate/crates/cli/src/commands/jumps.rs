use qparity::io::formats::format_f64;
use qparity::io::read_offset_trajectories;
use qparity::traces::detect_charge_jumps;

use super::Context;
use crate::output::Report;
use crate::svg::{Chart, Scale, Series, Style};
use crate::CliError;

const HOUR: f64 = 3600.0;

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    let jc = ctx.config.jumps.clone();
    let path = jc
        .trajectories
        .as_ref()
        .ok_or_else(|| CliError::config("jumps.trajectories is required"))?;
    let trajectories = read_offset_trajectories(path)?;
    if trajectories.is_empty() {
        return Err(CliError::config(format!("{}: no trajectories", path.display())));
    }

    let threshold = [("threshold_e", format_f64(jc.threshold_e))];
    let mut events = ctx.out.table_with(&threshold, &["qubit_id", "time_s", "amplitude_e"]);
    let mut rates = ctx.out.table_with(&threshold, &["qubit_id", "count", "duration_h", "rate_mhz"]);
    let mut report = Report::default();
    let mut chart_pts = Vec::new();
    let (mut total_events, mut total_time) = (0usize, 0.0);
    for (i, (id, traj)) in trajectories.iter().enumerate() {
        let cat = detect_charge_jumps(&traj.time_s, &traj.ng_e, jc.threshold_e)?;
        for e in &cat.events {
            events.row(&[id.clone(), format_f64(e.time_s), format_f64(e.amplitude_e)]);
        }
        rates.row(&[
            id.clone(),
            cat.count().to_string(),
            format_f64(cat.duration_s / HOUR),
            format_f64(cat.rate_mhz()),
        ]);
        report.num(format!("{id}/rate_mhz"), cat.rate_mhz());
        chart_pts.push((i as f64 + 1.0, cat.rate_mhz()));
        total_events += cat.count();
        total_time += cat.duration_s;
    }
    ctx.out.write_table("jumps.tsv", events)?;
    ctx.out.write_table("jump_rates.tsv", rates)?;
    report.num("threshold_e", jc.threshold_e);
    report.num("total_events", total_events as f64);
    report.num("total_duration_h", total_time / HOUR);
    report.num("pooled_rate_mhz", if total_time > 0.0 { 1e3 * total_events as f64 / total_time } else { 0.0 });
    ctx.out.write_report("jumps_report.tsv", &report)?;

    let mut chart = Chart::new("Offset-charge jump rates", "qubit (sorted by id)", "rate (mHz)").scales(Scale::Linear, Scale::Linear);
    chart.push(Series::new("rate", chart_pts, Style::Points));
    ctx.out.write_svg("jump_rates.svg", &chart)?;
    Ok(())
}
