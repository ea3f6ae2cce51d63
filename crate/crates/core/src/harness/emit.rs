use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Cell, DataConfig, ExperimentConfig, OutputFormat, RecordSet, SampleRecord, Table};
use crate::error::{Error, Result};

/// Paths written by [`emit`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmittedFiles {
    pub data: PathBuf,
    pub tables: Vec<PathBuf>,
    pub metadata: PathBuf,
}

/// Layout of the JSON data file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonOutput {
    pub config: DataConfig,
    pub records: Vec<SampleRecord>,
    pub summary: Vec<Table>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    wall_time_seconds: f64,
    files: Vec<String>,
}

/// Seventeen significant digits, enough to reproduce every `f64` exactly.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

fn cell(c: Cell) -> String {
    match c {
        Cell::Int(i) => i.to_string(),
        Cell::Real(x) => real(x),
    }
}

fn check_finite(set: &RecordSet) -> Result<()> {
    let bad_record = set
        .records
        .iter()
        .find(|r| r.reals().iter().flatten().any(|x| !x.is_finite()));
    if let Some(r) = bad_record {
        return Err(Error::invalid(format!("non-finite value in record {r:?}")));
    }
    for t in &set.summary {
        if t.rows.iter().flatten().any(|c| !c.as_f64().is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value in table {}",
                t.name
            )));
        }
    }
    Ok(())
}

fn table_path(base: &Path, name: &str) -> PathBuf {
    base.with_extension(format!("{name}.csv"))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| Error::io(path, e))
}

fn write_records_csv(path: &Path, records: &[SampleRecord]) -> Result<()> {
    let io = |e: csv::Error| Error::io(path, e);
    let mut w = csv_writer(path)?;
    w.write_record(SampleRecord::FIELDS).map_err(io)?;
    for r in records {
        let mut row = vec![
            r.sample_index.to_string(),
            r.step_index.map(|s| s.to_string()).unwrap_or_default(),
        ];
        row.extend(r.reals().into_iter().map(opt_real));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_table_csv(path: &Path, table: &Table) -> Result<()> {
    let io = |e: csv::Error| Error::io(path, e);
    let mut w = csv_writer(path)?;
    w.write_record(&table.columns).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&c| cell(c))).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T, pretty: bool) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = if pretty {
        serde_json::to_writer_pretty(&mut w, value)
    } else {
        serde_json::to_writer(&mut w, value)
    };
    res.map_err(|e| Error::io(path, e))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Write `set` in the configured format plus a `.meta.json` sidecar.
///
/// CSV output puts the records at `output_path` and each summary table in
/// `<stem>.<table>.csv` next to it; JSON output holds everything in one
/// object.
pub fn emit(set: &RecordSet, cfg: &ExperimentConfig, wall_time: Duration) -> Result<EmittedFiles> {
    check_finite(set)?;
    let data = cfg.output_path.clone();
    let mut tables = Vec::new();
    match cfg.output_format {
        OutputFormat::Csv => {
            write_records_csv(&data, &set.records)?;
            for t in &set.summary {
                let path = table_path(&data, &t.name);
                write_table_csv(&path, t)?;
                tables.push(path);
            }
        }
        OutputFormat::Json => {
            let out = JsonOutput {
                config: cfg.data_view(),
                records: set.records.clone(),
                summary: set.summary.clone(),
            };
            write_json(&data, &out, false)?;
        }
    }
    let metadata = data.with_extension("meta.json");
    let files = std::iter::once(&data)
        .chain(&tables)
        .map(|p| p.display().to_string())
        .collect();
    write_json(
        &metadata,
        &Metadata {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: cfg,
            wall_time_seconds: wall_time.as_secs_f64(),
            files,
        },
        true,
    )?;
    Ok(EmittedFiles {
        data,
        tables,
        metadata,
    })
}

pub fn read_csv_records(path: &Path) -> Result<Vec<SampleRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e))?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::io(path, e))
}

/// Read a summary table written next to a CSV data file.
pub fn read_csv_table(data_path: &Path, name: &str) -> Result<Table> {
    let path = table_path(data_path, name);
    let io = |e: csv::Error| Error::io(&path, e);
    let mut r = csv::Reader::from_path(&path).map_err(io)?;
    let columns = r.headers().map_err(io)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        let row = rec
            .iter()
            .map(|s| match s.parse::<i64>() {
                Ok(i) => Ok(Cell::Int(i)),
                Err(_) => s
                    .parse::<f64>()
                    .map(Cell::Real)
                    .map_err(|e| Error::io(&path, format!("bad number {s:?}: {e}"))),
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    Ok(Table {
        name: name.to_string(),
        columns,
        rows,
    })
}

pub fn read_json(path: &Path) -> Result<JsonOutput> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::io(path, e))
}
