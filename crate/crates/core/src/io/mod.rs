//! Bundled device tables and the delimited text formats read and written by
//! the command-line tool.

pub mod device;
pub mod formats;

pub use device::{builtin_table_texts, load_device_tables, DeviceRecord, DeviceTables, TableSource, DATA_DIR_ENV};
pub use formats::{
    read_decay_curve, read_impedance_table, read_offset_trajectories, read_table, read_thermal_series,
    read_trace, read_trace_dir, OffsetTrajectory, Table, TsvWriter,
};
