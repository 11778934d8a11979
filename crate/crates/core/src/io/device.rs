//! Device parameter tables.

use std::path::{Path, PathBuf};

use super::formats::{parse_table, Table};
use crate::error::{Error, Result};
use crate::antenna::GapFrequencies;
use crate::qp_thermo::{QubitSpectral, ThermalModelParams};
use crate::spectrum::{CoupledSystem, QubitParams};
use crate::units::{self, GHZ, MHZ, US};

/// Overrides the directory searched for `table1.tsv` and `table2.tsv`.
pub const DATA_DIR_ENV: &str = "QPARITY_DATA_DIR";

const TABLE1: &str = include_str!("../../data/table1.tsv");
const TABLE2: &str = include_str!("../../data/table2.tsv");

const TABLE1_COLUMNS: [&str; 18] = [
    "device_id", "L_um", "W_um", "d_um", "ej_ghz", "ec_ghz", "ej_over_ec", "omega_max_ghz", "omega_min_ghz", "g_mhz",
    "fr_ghz", "t1_us", "tphi_us", "tp_s", "holder", "cap_um", "cr110", "fig",
];
const TABLE2_COLUMNS: [&str; 13] = [
    "device_id", "L_um", "W_um", "d_um", "omega_max_ghz", "omega_min_ghz", "ej_ghz", "ec_ghz", "eps0_ghz", "c0sq",
    "gp0_hz", "delta_ghz", "xqp_1e7",
];

/// One device, SI units. Absent cells are `None` and never defaulted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviceRecord {
    pub device_id: String,
    pub l_um: Option<f64>,
    pub w_um: Option<f64>,
    pub d_um: Option<f64>,
    pub ej_hz: Option<f64>,
    pub ec_hz: Option<f64>,
    pub omega_max_hz: Option<f64>,
    pub omega_min_hz: Option<f64>,
    pub g_hz: Option<f64>,
    pub fr_hz: Option<f64>,
    pub t1_s: Option<f64>,
    pub tphi_s: Option<f64>,
    pub tp_s: Option<f64>,
    pub eps0_hz: Option<f64>,
    pub c0sq: Option<f64>,
    pub gp0_hz: Option<f64>,
    pub delta_hz: Option<f64>,
    pub xqp: Option<f64>,
    pub holder: Option<String>,
    pub cap: Option<String>,
    pub cr110: Option<String>,
    pub figures: Option<String>,
}

fn missing(id: &str, field: &str) -> Error {
    Error::invalid(format!("device {id} has no value for `{field}`"))
}

impl DeviceRecord {
    /// Chip label, the part of the id before the first `-`.
    pub fn chip_id(&self) -> &str {
        self.device_id.split('-').next().unwrap_or(&self.device_id)
    }

    pub fn require(&self, field: &str, value: Option<f64>) -> Result<f64> {
        value.ok_or_else(|| missing(&self.device_id, field))
    }

    pub fn qubit_params(&self, ng: f64) -> Result<QubitParams> {
        QubitParams::new(self.require("ej", self.ej_hz)?, self.require("ec", self.ec_hz)?, ng)
    }

    pub fn coupled_system(&self, ng: f64) -> Result<CoupledSystem> {
        CoupledSystem::new(self.qubit_params(ng)?, self.require("g", self.g_hz)?, self.require("fr", self.fr_hz)?)
    }

    /// Tabulated thermal-model parameters with pad gap `delta0_uev`.
    pub fn thermal_params(&self, delta0_uev: f64) -> Result<ThermalModelParams> {
        let delta = units::hz_to_uev(self.require("delta", self.delta_hz)?);
        Ok(ThermalModelParams {
            gp0_hz: self.require("gp0", self.gp0_hz)?,
            xqp: self.require("xqp", self.xqp)?,
            gaps: GapFrequencies::new(delta, delta0_uev)?,
            qubit: self.qubit_spectral()?,
        })
    }

    /// Tabulated spectral inputs of the thermal model.
    pub fn qubit_spectral(&self) -> Result<QubitSpectral> {
        Ok(QubitSpectral {
            ej_hz: self.require("ej", self.ej_hz)?,
            eps0_hz: self.require("eps0", self.eps0_hz)?,
            c0sq: self.require("c0sq", self.c0sq)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableSource {
    Builtin,
    /// Directory holding `table1.tsv` and `table2.tsv`.
    Dir(PathBuf),
}

impl TableSource {
    /// The directory named by [`DATA_DIR_ENV`] if set, else the bundled copy.
    pub fn from_env() -> Self {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(d) if !d.is_empty() => Self::Dir(PathBuf::from(d)),
            _ => Self::Builtin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviceTables {
    pub records: Vec<DeviceRecord>,
}

impl DeviceTables {
    pub fn get(&self, id: &str) -> Option<&DeviceRecord> {
        self.records.iter().find(|r| r.device_id == id)
    }

    pub fn require(&self, id: &str) -> Result<&DeviceRecord> {
        self.get(id).ok_or_else(|| Error::invalid(format!("unknown device `{id}`")))
    }

    /// Records carrying the fitted thermal parameters.
    pub fn with_thermal_fit(&self) -> impl Iterator<Item = &DeviceRecord> {
        self.records.iter().filter(|r| r.gp0_hz.is_some() && r.xqp.is_some() && r.delta_hz.is_some())
    }
}

/// The raw bundled table texts.
pub fn builtin_table_texts() -> [(&'static str, &'static str); 2] {
    [("table1.tsv", TABLE1), ("table2.tsv", TABLE2)]
}

fn read_text(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(|source| Error::Io { path, source })
}

/// Loads and merges both tables; rows are joined on `device_id`.
pub fn load_device_tables(source: &TableSource) -> Result<DeviceTables> {
    let (t1, t2) = match source {
        TableSource::Builtin => (TABLE1.to_string(), TABLE2.to_string()),
        TableSource::Dir(d) => (read_text(d, "table1.tsv")?, read_text(d, "table2.tsv")?),
    };
    let mut tables = parse_device_table1(&t1, "table1.tsv")?;
    merge_table2(&mut tables, &parse_table(&t2, "table2.tsv", b'\t')?)?;
    Ok(tables)
}

fn check_header(table: &Table, expected: &[&str]) -> Result<()> {
    for (i, want) in expected.iter().enumerate() {
        match table.header.get(i) {
            Some(h) if h == want => {}
            other => {
                return Err(Error::Parse {
                    source_name: table.source_name.clone(),
                    line: table.header_line,
                    column: i + 1,
                    message: format!("expected column `{want}`, found {:?}", other.map(String::as_str).unwrap_or("<none>")),
                })
            }
        }
    }
    if table.header.len() != expected.len() {
        return Err(Error::Parse {
            source_name: table.source_name.clone(),
            line: table.header_line,
            column: expected.len() + 1,
            message: format!("expected {} columns, found {}", expected.len(), table.header.len()),
        });
    }
    if table.rows.is_empty() {
        return Err(Error::Parse {
            source_name: table.source_name.clone(),
            line: table.header_line,
            column: 1,
            message: "table has no rows".into(),
        });
    }
    Ok(())
}

fn text_cell(v: &str) -> Option<String> {
    let v = v.trim();
    (!v.is_empty() && v != "--").then(|| v.to_string())
}

/// Parses Table 1 (device parameters and setup).
pub fn parse_device_table1(text: &str, source_name: &str) -> Result<DeviceTables> {
    let t = parse_table(text, source_name, b'\t')?;
    check_header(&t, &TABLE1_COLUMNS)?;
    let mut records: Vec<DeviceRecord> = Vec::with_capacity(t.rows.len());
    for row in 0..t.rows.len() {
        let id = t.cell(row, 0).trim().to_string();
        if records.iter().any(|r| r.device_id == id) {
            return Err(t.error_at(row, 0, format!("duplicate device id `{id}`")));
        }
        let num = |c: usize, scale: f64| -> Result<Option<f64>> { Ok(t.optional_f64(row, c)?.map(|v| v * scale)) };
        records.push(DeviceRecord {
            device_id: id,
            l_um: num(1, 1.0)?,
            w_um: num(2, 1.0)?,
            d_um: num(3, 1.0)?,
            ej_hz: num(4, GHZ)?,
            ec_hz: num(5, GHZ)?,
            omega_max_hz: num(7, GHZ)?,
            omega_min_hz: num(8, GHZ)?,
            g_hz: num(9, MHZ)?,
            fr_hz: num(10, GHZ)?,
            t1_s: num(11, US)?,
            tphi_s: num(12, US)?,
            tp_s: num(13, 1.0)?,
            holder: text_cell(t.cell(row, 14)),
            cap: text_cell(t.cell(row, 15)),
            cr110: text_cell(t.cell(row, 16)),
            figures: text_cell(t.cell(row, 17)),
            ..DeviceRecord::default()
        });
    }
    Ok(DeviceTables { records })
}

/// Adds Table 2 (fitted qubit parameters) to `tables`. Geometry and spectral
/// columns present in both tables must agree.
fn merge_table2(tables: &mut DeviceTables, t: &Table) -> Result<()> {
    check_header(t, &TABLE2_COLUMNS)?;
    for row in 0..t.rows.len() {
        let id = t.cell(row, 0).trim().to_string();
        let num = |c: usize, scale: f64| -> Result<Option<f64>> { Ok(t.optional_f64(row, c)?.map(|v| v * scale)) };
        let shared = [
            (1, num(1, 1.0)?),
            (2, num(2, 1.0)?),
            (3, num(3, 1.0)?),
            (4, num(4, GHZ)?),
            (5, num(5, GHZ)?),
            (6, num(6, GHZ)?),
            (7, num(7, GHZ)?),
        ];
        let pos = match tables.records.iter().position(|r| r.device_id == id) {
            Some(p) => p,
            None => {
                tables.records.push(DeviceRecord {
                    device_id: id.clone(),
                    ..DeviceRecord::default()
                });
                tables.records.len() - 1
            }
        };
        let rec = &mut tables.records[pos];
        for (col, value) in shared {
            let slot = match col {
                1 => &mut rec.l_um,
                2 => &mut rec.w_um,
                3 => &mut rec.d_um,
                4 => &mut rec.omega_max_hz,
                5 => &mut rec.omega_min_hz,
                6 => &mut rec.ej_hz,
                _ => &mut rec.ec_hz,
            };
            match (*slot, value) {
                (Some(a), Some(b)) if (a - b).abs() > 1e-9 * a.abs().max(b.abs()) => {
                    return Err(t.error_at(row, col, format!("value {b} disagrees with table 1 ({a}) for `{id}`")));
                }
                (None, Some(b)) => *slot = Some(b),
                _ => {}
            }
        }
        rec.eps0_hz = num(8, GHZ)?;
        rec.c0sq = num(9, 1.0)?;
        rec.gp0_hz = num(10, 1.0)?;
        rec.delta_hz = num(11, GHZ)?;
        rec.xqp = num(12, 1e-7)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_rows() {
        let t = load_device_tables(&TableSource::Builtin).unwrap();
        let s11 = t.require("S1-Q1").unwrap();
        assert_eq!(s11.ej_hz, Some(4.67e9));
        assert_eq!(s11.ec_hz, Some(1.40e9));
        assert_eq!(s11.tp_s, Some(1.918));
        assert_eq!(s11.chip_id(), "S1");
        let s52 = t.require("S5-Q2").unwrap();
        assert!((s52.eps0_hz.unwrap() - 0.027e9).abs() < 1e-3);
        assert_eq!(s52.c0sq, Some(0.850));
        assert!((s52.delta_hz.unwrap() - 49.50e9).abs() < 1e-3);
        assert_eq!(t.with_thermal_fit().count(), 15);
    }

    #[test]
    fn missing_cells_stay_missing() {
        let t = load_device_tables(&TableSource::Builtin).unwrap();
        let r = t.require("S1-Q1").unwrap();
        assert_eq!(r.holder, None);
        assert!(r.require("gp0", r.gp0_hz).is_ok());
        let blank = t.records.iter().find(|r| r.tp_s.is_none()).unwrap();
        assert!(blank.require("tp", blank.tp_s).is_err());
    }

    #[test]
    fn empty_and_malformed_tables() {
        assert!(matches!(parse_device_table1("", "x"), Err(Error::Parse { .. })));
        let header = TABLE1_COLUMNS.join("\t");
        assert!(matches!(parse_device_table1(&header, "x"), Err(Error::Parse { .. })));
        let bad = format!("{header}\nA\t1\t2\t3\tfoo\t1\t1\t1\t1\t1\t1\t1\t1\t1\t--\t--\t--\t--\n");
        match parse_device_table1(&bad, "x") {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(column, 5);
            }
            other => panic!("{other:?}"),
        }
    }
}
