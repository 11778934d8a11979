use qparity::io::formats::format_f64;
use qparity::traces::{EnsembleSpec, ReadoutNoise};

use super::Context;
use crate::config::SimulateConfig;
use crate::CliError;

/// Ensemble described by `cfg`, seeded with `seed`.
pub fn spec(cfg: &SimulateConfig, seed: u64) -> Result<EnsembleSpec, CliError> {
    if cfg.n_traces == 0 {
        return Err(CliError::config("n_traces must be >= 1"));
    }
    let mut spec = EnsembleSpec::new(cfg.gamma_p_hz, cfg.duration_s, cfg.dt_ms * 1e-3, cfg.n_traces, seed);
    if cfg.noise_sigma > 0.0 || cfg.excitation_prob > 0.0 {
        spec.noise = Some(ReadoutNoise::new(cfg.noise_sigma, cfg.excitation_prob));
    }
    Ok(spec)
}

pub fn run(ctx: &mut Context) -> Result<(), CliError> {
    let cfg = ctx.config.simulate_rts.clone();
    let spec = spec(&cfg, ctx.seed)?;
    let width = cfg.n_traces.to_string().len().max(4);
    for i in 0..spec.n_traces {
        let t = spec.raw_trace(i)?;
        let mut w = ctx.out.table_with(
            &[
                ("gamma_p_hz", format_f64(cfg.gamma_p_hz)),
                ("stream", i.to_string()),
            ],
            &["time_s", "value"],
        );
        for (k, v) in t.samples.iter().enumerate() {
            w.row_f64(&[k as f64 * t.dt_s, *v]);
        }
        ctx.out.write_table(&format!("traces/trace_{i:0width$}.tsv"), w)?;
    }
    Ok(())
}
