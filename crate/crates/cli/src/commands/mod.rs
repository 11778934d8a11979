mod antenna;
mod coherence_fit;
mod fit_tp;
mod jumps;
mod simulate_rts;
mod spectrum;
mod thermal_fit;

use qparity::io::{load_device_tables, DeviceRecord, DeviceTables, TableSource};

use crate::config::RunConfig;
use crate::output::Output;
use crate::{CliError, Command};

pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub device: Option<String>,
    pub out: Output,
}

impl Context {
    pub fn tables(&self) -> Result<DeviceTables, CliError> {
        let source = match &self.config.data_dir {
            Some(d) => TableSource::Dir(d.clone()),
            None => TableSource::from_env(),
        };
        Ok(load_device_tables(&source)?)
    }

    pub fn device_record(&self) -> Result<DeviceRecord, CliError> {
        let id = self
            .device
            .as_deref()
            .ok_or_else(|| CliError::config("no device selected (use --device or `device` in the configuration)"))?;
        Ok(self.tables()?.require(id)?.clone())
    }
}

pub fn dispatch(command: Command, ctx: &mut Context) -> Result<(), CliError> {
    match command {
        Command::Spectrum => spectrum::run(ctx),
        Command::FitTp => fit_tp::run(ctx),
        Command::SimulateRts => simulate_rts::run(ctx),
        Command::ThermalFit => thermal_fit::run(ctx),
        Command::Antenna => antenna::run(ctx),
        Command::Jumps => jumps::run(ctx),
        Command::CoherenceFit => coherence_fit::run(ctx),
    }
}
