use qparity::spectrum::{spectrum_vs_ng, Parity};
use qparity::units::GHZ;

use super::Context;
use crate::output::Report;
use crate::svg::{Chart, Scale, Series, Style};
use crate::CliError;

pub fn grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if points == 0 || !min.is_finite() || !max.is_finite() || max < min {
        return Err(CliError::config(format!("bad n_g grid: [{min}, {max}] with {points} points")));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let step = (max - min) / (points - 1) as f64;
    Ok((0..points).map(|i| min + step * i as f64).collect())
}

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    let rec = ctx.device_record()?;
    let sc = &ctx.config.spectrum;
    if sc.max_level == 0 {
        return Err(CliError::config("spectrum.max_level must be >= 1"));
    }
    let ng = grid(sc.ng_min, sc.ng_max, sc.points)?;
    let pairs: Vec<(usize, usize)> = (1..=sc.max_level).map(|k| (0, k)).collect();
    let table = spectrum_vs_ng(&rec.qubit_params(0.0)?, &ng, &[Parity::Even, Parity::Odd], &pairs)?;

    let labels: Vec<String> = table
        .columns
        .iter()
        .map(|c| format!("{}_{}{}_ghz", c.parity, c.lower, c.upper))
        .collect();
    let mut header = vec!["ng"];
    header.extend(labels.iter().map(String::as_str));
    let mut w = ctx.out.table_with(&[("device", rec.device_id.clone())], &header);
    for (i, x) in table.ng.iter().enumerate() {
        let mut row = vec![*x];
        row.extend(table.columns.iter().map(|c| c.values[i] / GHZ));
        w.row_f64(&row);
    }
    ctx.out.write_table("spectrum.tsv", w)?;

    let mut report = Report::default();
    report.text("device", &rec.device_id);
    for (c, label) in table.columns.iter().zip(&labels) {
        let hi = c.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = c.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let stem = label.trim_end_matches("_ghz");
        report.num(format!("{stem}_max_ghz"), hi / GHZ);
        report.num(format!("{stem}_min_ghz"), lo / GHZ);
    }
    ctx.out.write_report("spectrum_report.tsv", &report)?;

    let mut chart = Chart::new(
        format!("{}: transition frequencies", rec.device_id),
        "offset charge n_g",
        "frequency (GHz)",
    )
    .scales(Scale::Linear, Scale::Linear);
    for (c, label) in table.columns.iter().zip(&labels) {
        let style = if c.parity == Parity::Even { Style::Line } else { Style::Dashed };
        let pts = table.ng.iter().zip(&c.values).map(|(x, v)| (*x, v / GHZ)).collect();
        chart.push(Series::new(label.trim_end_matches("_ghz"), pts, style));
    }
    ctx.out.write_svg("spectrum.svg", &chart)?;
    Ok(())
}
