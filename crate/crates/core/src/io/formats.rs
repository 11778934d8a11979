//! Delimited text tables (unquoted fields): a reader with line/column
//! diagnostics and a round-trip-exact TSV writer.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::antenna::ImpedanceTable;
use crate::coherence::{DecayCurve, DecayKind};
use crate::error::{Error, Result};
use crate::qp_thermo::{ThermalPoint, ThermalSeries};
use crate::traces::{Origin, TelegraphTrace};
use crate::units::{GHZ, MK};

/// A parsed table. Lines starting with `#` are comments and are kept
/// verbatim (without the marker).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub source_name: String,
    pub comments: Vec<String>,
    pub header: Vec<String>,
    /// 1-based line of the header.
    pub header_line: usize,
    pub rows: Vec<Vec<String>>,
    /// 1-based line of each row.
    pub row_lines: Vec<usize>,
}

impl Table {
    pub fn cell(&self, row: usize, col: usize) -> &str {
        self.rows[row].get(col).map(String::as_str).unwrap_or("")
    }

    pub fn error_at(&self, row: usize, col: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            source_name: self.source_name.clone(),
            line: self.row_lines[row],
            column: col + 1,
            message: message.into(),
        }
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            source_name: self.source_name.clone(),
            line: self.header_line,
            column: self.header.len() + 1,
            message: format!("missing column `{name}` (have {})", self.header.join(", ")),
        })
    }

    /// `None` for an empty or `--` cell.
    pub fn optional_f64(&self, row: usize, col: usize) -> Result<Option<f64>> {
        let v = self.cell(row, col).trim();
        if v.is_empty() || v == "--" {
            return Ok(None);
        }
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Some)
            .ok_or_else(|| self.error_at(row, col, format!("expected a number, found `{v}`")))
    }

    pub fn f64_at(&self, row: usize, col: usize) -> Result<f64> {
        self.optional_f64(row, col)?
            .ok_or_else(|| self.error_at(row, col, format!("missing value in column `{}`", self.header[col])))
    }

    pub fn f64_column(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        (0..self.rows.len()).map(|r| self.f64_at(r, c)).collect()
    }

    pub fn str_column(&self, name: &str) -> Result<Vec<String>> {
        let c = self.column(name)?;
        Ok((0..self.rows.len()).map(|r| self.cell(r, c).trim().to_string()).collect())
    }

    /// Value of a `# key: value` comment.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            let (k, v) = c.split_once(':')?;
            (k.trim() == key).then(|| v.trim())
        })
    }

    fn require_rows(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::Parse {
                source_name: self.source_name.clone(),
                line: self.header_line,
                column: 1,
                message: "table has no rows".into(),
            });
        }
        Ok(())
    }
}

fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => b',',
        _ => b'\t',
    }
}

/// Parses delimited text with a header row.
pub fn parse_table(text: &str, source_name: &str, delimiter: u8) -> Result<Table> {
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        column,
        message,
    };
    let comments = text
        .lines()
        .map(str::trim_start)
        .take_while(|l| l.starts_with('#') || l.trim().is_empty())
        .filter_map(|l| l.strip_prefix('#'))
        .map(|l| l.trim().to_string())
        .collect();
    let mut header: Option<(Vec<String>, usize)> = None;
    let mut rows = Vec::new();
    let mut row_lines = Vec::new();
    let delimiter = char::from(delimiter);
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<String> = raw.split(delimiter).map(|f| f.trim().to_string()).collect();
        match &header {
            None => header = Some((fields, line)),
            Some((h, _)) => {
                if fields.len() != h.len() {
                    return Err(parse_err(
                        line,
                        fields.len().min(h.len()) + 1,
                        format!("expected {} fields, found {}", h.len(), fields.len()),
                    ));
                }
                rows.push(fields);
                row_lines.push(line);
            }
        }
    }
    let (header, header_line) = header.ok_or_else(|| parse_err(1, 1, "missing header row".into()))?;
    Ok(Table {
        source_name: source_name.to_string(),
        comments,
        header,
        header_line,
        rows,
        row_lines,
    })
}

/// Reads a delimited file; `.csv` is comma-separated, anything else tab.
pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_table(&text, &path.display().to_string(), delimiter_for(path))
}

/// Trace file with columns `time_s` and `value` on a uniform grid.
pub fn read_trace(path: &Path) -> Result<TelegraphTrace> {
    let t = read_table(path)?;
    t.require_rows()?;
    let time = t.f64_column("time_s")?;
    let value = t.f64_column("value")?;
    let dt = if time.len() > 1 {
        (time[time.len() - 1] - time[0]) / (time.len() - 1) as f64
    } else {
        return Err(t.error_at(0, 0, "trace needs at least two samples"));
    };
    let tcol = t.column("time_s")?;
    for (i, w) in time.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt.abs() {
            return Err(t.error_at(i + 1, tcol, format!("non-uniform sampling: step {} vs mean {dt}", w[1] - w[0])));
        }
    }
    TelegraphTrace::new(dt, value, Origin::Measured)
}

/// Every trace file in `dir`, in file-name order.
pub fn read_trace_dir(dir: &Path) -> Result<Vec<TelegraphTrace>> {
    let io = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .map_err(io)?;
    files.retain(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("tsv" | "csv" | "txt")));
    files.sort();
    if files.is_empty() {
        return Err(Error::invalid(format!("no trace files in {}", dir.display())));
    }
    files.iter().map(|p| read_trace(p)).collect()
}

/// Offset-charge record of one qubit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OffsetTrajectory {
    pub time_s: Vec<f64>,
    pub ng_e: Vec<f64>,
}

/// Columns `time_s`, `ng_e`, `qubit_id`; grouped by qubit.
pub fn read_offset_trajectories(path: &Path) -> Result<BTreeMap<String, OffsetTrajectory>> {
    let t = read_table(path)?;
    let time = t.f64_column("time_s")?;
    let ng = t.f64_column("ng_e")?;
    let ids = t.str_column("qubit_id")?;
    let mut out: BTreeMap<String, OffsetTrajectory> = BTreeMap::new();
    for ((id, ti), qi) in ids.into_iter().zip(time).zip(ng) {
        let e = out.entry(id).or_default();
        e.time_s.push(ti);
        e.ng_e.push(qi);
    }
    Ok(out)
}

/// Columns `time_s`, `population`; the curve kind comes from a `# kind:`
/// comment.
pub fn read_decay_curve(path: &Path) -> Result<DecayCurve> {
    let t = read_table(path)?;
    let kind: DecayKind = t
        .comment_value("kind")
        .ok_or_else(|| Error::Parse {
            source_name: t.source_name.clone(),
            line: 1,
            column: 1,
            message: "missing `# kind: relaxation|echo` header comment".into(),
        })?
        .parse()?;
    DecayCurve::new(t.f64_column("time_s")?, t.f64_column("population")?, kind)
}

/// Columns `qubit_id`, `chip_id`, `temperature_mk`, `gamma_p_hz`, `sigma_hz`;
/// one series per qubit, sorted by temperature.
pub fn read_thermal_series(path: &Path) -> Result<Vec<ThermalSeries>> {
    let t = read_table(path)?;
    t.require_rows()?;
    let q = t.str_column("qubit_id")?;
    let c = t.str_column("chip_id")?;
    let temp = t.f64_column("temperature_mk")?;
    let g = t.f64_column("gamma_p_hz")?;
    let s = t.f64_column("sigma_hz")?;
    let mut out: Vec<ThermalSeries> = Vec::new();
    for i in 0..q.len() {
        let idx = match out.iter().position(|x| x.qubit_id == q[i]) {
            Some(k) => {
                if out[k].chip_id != c[i] {
                    return Err(t.error_at(i, t.column("chip_id")?, format!("qubit `{}` listed under two chips", q[i])));
                }
                k
            }
            None => {
                out.push(ThermalSeries {
                    qubit_id: q[i].clone(),
                    chip_id: c[i].clone(),
                    points: Vec::new(),
                });
                out.len() - 1
            }
        };
        out[idx].points.push(ThermalPoint {
            temperature_k: temp[i] * MK,
            gamma_p_hz: g[i],
            sigma_hz: s[i],
        });
    }
    for s in &mut out {
        s.points.sort_by(|a, b| a.temperature_k.total_cmp(&b.temperature_k));
        s.validate()?;
    }
    Ok(out)
}

/// Columns `freq_ghz`, `re_ohm`, `im_ohm`.
pub fn read_impedance_table(path: &Path) -> Result<ImpedanceTable> {
    let t = read_table(path)?;
    t.require_rows()?;
    let f = t.f64_column("freq_ghz")?;
    let re = t.f64_column("re_ohm")?;
    let im = t.f64_column("im_ohm")?;
    ImpedanceTable::new(
        f.iter().map(|v| v * GHZ).collect(),
        re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect(),
    )
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Tab-separated table with `# key: value` preamble lines.
#[derive(Debug, Clone, Default)]
pub struct TsvWriter {
    buf: String,
    columns: usize,
}

impl TsvWriter {
    pub fn new(meta: &[(&str, String)], header: &[&str]) -> Self {
        let mut buf = String::new();
        for (k, v) in meta {
            let _ = writeln!(buf, "# {k}: {v}");
        }
        buf.push_str(&header.join("\t"));
        buf.push('\n');
        Self {
            buf,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.columns);
        self.buf.push_str(&cells.join("\t"));
        self.buf.push('\n');
    }

    pub fn row_f64(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| format_f64(*v)).collect();
        self.row(&cells);
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writer_round_trips() {
        let vals = [0.1 + 0.2, 1e-7, -3.25e20, 0.0, 6.02214076e23, 1.0 / 3.0];
        let mut w = TsvWriter::new(&[("seed", "7".into())], &["a", "b", "c", "d", "e", "f"]);
        w.row_f64(&vals);
        let t = parse_table(&w.finish(), "mem", b'\t').unwrap();
        assert_eq!(t.comment_value("seed"), Some("7"));
        for (i, v) in vals.iter().enumerate() {
            assert_eq!(t.f64_at(0, i).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn diagnostics_locate_bad_cells() {
        let text = "# note\nx\ty\n1\t2\n3\tabc\n";
        let t = parse_table(text, "mem", b'\t').unwrap();
        assert_eq!(t.header_line, 2);
        match t.f64_column("y") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (4, 2)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_table("x\ty\n1\n", "mem", b'\t'), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_table("", "mem", b'\t'), Err(Error::Parse { .. })));
        assert!(t.column("z").is_err());
    }

    #[test]
    fn trace_and_decay_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t0.tsv");
        let mut w = TsvWriter::new(&[], &["time_s", "value"]);
        for i in 0..10 {
            w.row_f64(&[i as f64 * 0.01, if i < 5 { 1.0 } else { -1.0 }]);
        }
        std::fs::write(&p, w.finish()).unwrap();
        let tr = read_trace(&p).unwrap();
        assert!((tr.dt_s - 0.01).abs() < 1e-15);
        assert!(tr.is_classified());
        assert_eq!(read_trace_dir(dir.path()).unwrap().len(), 1);

        let d = dir.path().join("decay.txt");
        std::fs::write(&d, "# kind: echo\ntime_s\tpopulation\n0\t1\n1e-6\t0.9\n2e-6\t0.8\n3e-6\t0.7\n4e-6\t0.6\n").unwrap();
        assert_eq!(read_decay_curve(&d).unwrap().kind, DecayKind::Echo);
        std::fs::write(&d, "time_s\tpopulation\n0\t1\n").unwrap();
        assert!(read_decay_curve(&d).is_err());
    }

    #[test]
    fn thermal_series_grouping() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("th.csv");
        std::fs::write(
            &p,
            "qubit_id,chip_id,temperature_mk,gamma_p_hz,sigma_hz\nA,S1,30,1,0.1\nB,S1,20,2,0.1\nA,S1,20,0.9,0.1\n",
        )
        .unwrap();
        let s = read_thermal_series(&p).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].points.len(), 2);
        assert!(s[0].points[0].temperature_k < s[0].points[1].temperature_k);
    }
}
