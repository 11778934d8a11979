use qparity::antenna::{z_junction, GapFrequencies, JunctionParams, RadiationModel};
use qparity::io::formats::format_f64;
use qparity::io::read_impedance_table;
use qparity::predict_parity_rate;
use qparity::units::GHZ;

use super::Context;
use crate::output::Report;
use crate::svg::{Chart, Marker, Scale, Series, Style};
use crate::CliError;

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    let ac = ctx.config.antenna.clone();
    let consts = ctx.config.constants.clone();
    let (model, label) = match &ac.impedance_table {
        Some(path) => (RadiationModel::Table(read_impedance_table(path)?), path.display().to_string()),
        None => {
            let c = ac.circuit.circuit();
            c.validate()?;
            (RadiationModel::Circuit(c), "equivalent circuit".to_string())
        }
    };
    let junction = JunctionParams::new(ac.rn_kohm * 1e3, ac.cj_ff * 1e-15)?;
    let gaps = GapFrequencies::new(consts.delta_uev, consts.delta0_uev)?;
    let f_star = gaps.f_star_hz();

    let (mut lo, mut hi) = (ac.f_min_ghz * GHZ, ac.f_max_ghz * GHZ);
    if let RadiationModel::Table(t) = &model {
        lo = lo.max(t.freq_hz[0]);
        hi = hi.min(t.freq_hz[t.freq_hz.len() - 1]);
    }
    if !(lo > 0.0 && hi >= lo) || ac.points == 0 {
        return Err(CliError::config(format!(
            "empty frequency grid [{} , {}] GHz with {} points",
            lo / GHZ,
            hi / GHZ,
            ac.points
        )));
    }
    let freqs: Vec<f64> = if ac.points == 1 {
        vec![lo]
    } else {
        (0..ac.points).map(|i| lo + (hi - lo) * i as f64 / (ac.points - 1) as f64).collect()
    };

    let mut w = ctx.out.table_with(
        &[("radiation_model", label.clone())],
        &["freq_ghz", "re_zrad_ohm", "im_zrad_ohm", "re_zj_ohm", "im_zj_ohm", "ec"],
    );
    let mut ec_pts = Vec::with_capacity(freqs.len());
    let mut re_pts = Vec::with_capacity(freqs.len());
    let mut im_pts = Vec::with_capacity(freqs.len());
    for &f in &freqs {
        let zr = model.impedance(f)?;
        let zj = z_junction(&junction, f)?;
        let ec = model.efficiency(&junction, f)?;
        w.row_f64(&[f / GHZ, zr.re, zr.im, zj.re, zj.im, ec]);
        ec_pts.push((f / GHZ, ec));
        re_pts.push((f / GHZ, zr.re));
        im_pts.push((f / GHZ, zr.im));
    }
    ctx.out.write_table("antenna.tsv", w)?;

    let mut report = Report::default();
    report.text("radiation_model", &label);
    report.num("rn_ohm", junction.rn_ohm);
    report.num("cj_f", junction.cj_f);
    report.num("f_star_ghz", f_star / GHZ);
    match model.efficiency(&junction, f_star) {
        Ok(ec_star) => {
            let zr = model.impedance(f_star)?;
            let zj = z_junction(&junction, f_star)?;
            report.num("re_zrad_star_ohm", zr.re);
            report.num("im_zrad_star_ohm", zr.im);
            report.num("re_zj_star_ohm", zj.re);
            report.num("im_zj_star_ohm", zj.im);
            report.num("ec_star", ec_star);
            report.num("gamma_conv_hz", consts.gamma_conv_hz);
            report.num("gamma_p_pred_hz", predict_parity_rate(ec_star, consts.gamma_conv_hz)?);
        }
        Err(e) => {
            log::warn!("f* = {} GHz is outside the impedance model: {e}", format_f64(f_star / GHZ));
            report.text("warning", format!("f* outside impedance model: {e}"));
        }
    }
    ctx.out.write_report("antenna_report.tsv", &report)?;

    let mut chart = Chart::new("Coupling efficiency", "frequency (GHz)", "e_c").scales(Scale::Linear, Scale::Linear);
    chart.push(Series::new("e_c", ec_pts, Style::Line));
    chart.markers.push(Marker {
        x: f_star / GHZ,
        label: "f*".into(),
    });
    ctx.out.write_svg("efficiency.svg", &chart)?;

    let mut chart = Chart::new("Radiation impedance", "frequency (GHz)", "Z_rad (Ω)").scales(Scale::Linear, Scale::Linear);
    chart.push(Series::new("Re Z_rad", re_pts, Style::Line));
    chart.push(Series::new("Im Z_rad", im_pts, Style::Dashed));
    chart.markers.push(Marker {
        x: f_star / GHZ,
        label: "f*".into(),
    });
    ctx.out.write_svg("impedance.svg", &chart)?;
    Ok(())
}
