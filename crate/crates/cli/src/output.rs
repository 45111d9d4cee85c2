//! series.csv and field dumps.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use grwflow::flow::MonitorRow;

use crate::error::CliError;

pub const SERIES_HEADER: [&str; 8] = ["s", "u_sup", "u_inf", "v_sup", "sup_H_err", "min_H_err", "dt", "Lambda_max"];

fn row_fields(r: &MonitorRow) -> [f64; 8] {
    [r.s, r.u_sup, r.u_inf, r.v_sup, r.sup_h_err, r.min_h_err, r.dt, r.lambda_max]
}

/// Appending writer for series.csv, flushed after every record.
pub struct SeriesWriter {
    inner: csv::Writer<File>,
}

impl SeriesWriter {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        let mut inner = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
        inner.write_record(SERIES_HEADER).map_err(|e| CliError::io(path, e))?;
        inner.flush().map_err(|e| CliError::io(path, e))?;
        Ok(Self { inner })
    }

    /// Rewrites `path` keeping only the rows with s < `s_cut`, then appends.
    pub fn truncate_at(path: &Path, s_cut: f64) -> Result<Self, CliError> {
        let kept: Vec<MonitorRow> = read_series(path)?.into_iter().filter(|r| r.s < s_cut).collect();
        let mut w = Self::create(path)?;
        for r in &kept {
            w.push(r).map_err(|e| CliError::io(path, e))?;
        }
        Ok(w)
    }

    pub fn push(&mut self, r: &MonitorRow) -> Result<(), csv::Error> {
        self.inner.write_record(row_fields(r).iter().map(|x| x.to_string()))?;
        self.inner.flush()?;
        Ok(())
    }
}

pub fn read_series(path: &Path) -> Result<Vec<MonitorRow>, CliError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::MissingData(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| CliError::MissingData(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != SERIES_HEADER {
        return Err(CliError::MissingData(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::MissingData(format!("{}: {e}", path.display())))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|x| x.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::MissingData(format!("{} row {}: {e}", path.display(), i + 1)))?;
        if vals.len() != 8 {
            return Err(CliError::MissingData(format!("{} row {}: expected 8 columns", path.display(), i + 1)));
        }
        rows.push(MonitorRow {
            s: vals[0],
            u_sup: vals[1],
            u_inf: vals[2],
            v_sup: vals[3],
            sup_h_err: vals[4],
            min_h_err: vals[5],
            dt: vals[6],
            lambda_max: vals[7],
        });
    }
    Ok(rows)
}

/// A nodal field on an n×n (or n×1) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub s: f64,
    pub step: u64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

pub fn write_field(path: &Path, dump: &FieldDump) -> Result<(), CliError> {
    let io = |e| CliError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "# s={} nx={} ny={} step={}", dump.s, dump.nx, dump.ny, dump.step).map_err(io)?;
    for j in 0..dump.ny {
        let row: Vec<String> = dump.values[j * dump.nx..(j + 1) * dump.nx].iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_field(path: &Path) -> Result<FieldDump, CliError> {
    let bad = |msg: String| CliError::MissingData(format!("{}: {msg}", path.display()));
    let file = File::open(path).map_err(|e| bad(e.to_string()))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?.map_err(|e| bad(e.to_string()))?;
    let header = header.strip_prefix('#').ok_or_else(|| bad("missing '#' header".into()))?;
    let (mut s, mut nx, mut ny, mut step) = (None, None, None, 0u64);
    for item in header.split_whitespace() {
        let (k, v) = item.split_once('=').ok_or_else(|| bad(format!("bad header item '{item}'")))?;
        let parsed = match k {
            "s" => v.parse().map(|x| s = Some(x)).is_ok(),
            "nx" => v.parse().map(|x| nx = Some(x)).is_ok(),
            "ny" => v.parse().map(|x| ny = Some(x)).is_ok(),
            "step" => v.parse().map(|x| step = x).is_ok(),
            _ => true,
        };
        if !parsed {
            return Err(bad(format!("bad header value '{item}'")));
        }
    }
    let (s, nx, ny) = match (s, nx, ny) {
        (Some(s), Some(nx), Some(ny)) => (s, nx, ny),
        _ => return Err(bad("header needs s, nx and ny".into())),
    };
    let mut values = Vec::with_capacity(nx * ny);
    for line in lines {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        for x in line.split(',') {
            values.push(x.trim().parse::<f64>().map_err(|e| bad(format!("'{x}': {e}")))?);
        }
    }
    if values.len() != nx * ny {
        return Err(bad(format!("expected {} values, found {}", nx * ny, values.len())));
    }
    Ok(FieldDump { s, step, nx, ny, values })
}
