//! Monthly surveillance series in CSV form.

use std::io::{Read, Write};
use std::path::Path;

use mrsa_core::model::{CompartmentState, Count, ExogenousFlows};
use mrsa_core::ObservedDataset;

use crate::artifacts::write_atomic;
use crate::error::{CliError, Result};

pub const COLUMNS: [&str; 7] = [
    "month",
    "new_col_ha",
    "new_inf_ha",
    "new_col_ca",
    "new_inf_ca",
    "admissions",
    "discharges",
];

/// Number of susceptibles at the start of the series unless overridden.
pub const DEFAULT_INITIAL_SUSCEPTIBLE: Count = 3048;

pub fn load_dataset(path: &Path) -> Result<ObservedDataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::read(path, e))?;
    parse_dataset(file).map_err(|e| match e {
        CliError::Validation(msg) => CliError::validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses the series. The initial state defaults to 3048 susceptibles,
/// the first month's new counts as the four carrier pools, and nobody removed.
pub fn parse_dataset<R: Read>(reader: R) -> Result<ObservedDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::validation(format!("unreadable header: {e}")))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(CliError::validation("no observations"));
    }
    let mut index = [0usize; 7];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::validation(format!("missing column `{name}`")))?;
    }

    let mut rows: Vec<[Count; 7]> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::validation(format!("row {line}: {e}")))?;
        let mut row = [0; 7];
        for (k, (&col, name)) in index.iter().zip(COLUMNS).enumerate() {
            let cell = record.get(col).unwrap_or("");
            row[k] = parse_count(cell).map_err(|why| {
                CliError::validation(format!("row {line}, column `{name}`: {why} (got `{cell}`)"))
            })?;
        }
        let expected = rows.len() as Count + 1;
        if row[0] != expected {
            return Err(CliError::validation(format!(
                "row {line}, column `month`: expected month {expected}, got {}",
                row[0]
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::validation("no observations"));
    }

    let first = rows[0];
    let mut data = ObservedDataset::empty(CompartmentState {
        s: DEFAULT_INITIAL_SUSCEPTIBLE,
        col_ha: first[1],
        inf_ha: first[2],
        col_ca: first[3],
        inf_ca: first[4],
        removed: 0,
    });
    for r in rows {
        data.new_col_ha.push(r[1]);
        data.new_inf_ha.push(r[2]);
        data.new_col_ca.push(r[3]);
        data.new_inf_ca.push(r[4]);
        data.flows.push(ExogenousFlows {
            admissions: r[5],
            discharges: r[6],
        });
    }
    Ok(data)
}

fn parse_count(cell: &str) -> std::result::Result<Count, &'static str> {
    if cell.is_empty() {
        return Err("empty cell");
    }
    if let Ok(v) = cell.parse::<Count>() {
        return Ok(v);
    }
    match cell.parse::<f64>() {
        Ok(v) if v < 0.0 => Err("negative count"),
        Ok(v) if v.fract() == 0.0 && v.is_finite() => Ok(v as Count),
        Ok(_) => Err("not an integer"),
        Err(_) if cell.starts_with('-') && cell[1..].chars().all(|c| c.is_ascii_digit()) => Err("negative count"),
        Err(_) => Err("not an integer"),
    }
}

pub fn write_dataset_to<W: Write>(data: &ObservedDataset, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for t in 0..data.months() {
        w.write_record([
            (t + 1).to_string(),
            data.new_col_ha[t].to_string(),
            data.new_inf_ha[t].to_string(),
            data.new_col_ca[t].to_string(),
            data.new_inf_ca[t].to_string(),
            data.flows[t].admissions.to_string(),
            data.flows[t].discharges.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(data: &ObservedDataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset_to(data, &mut buf).map_err(|e| CliError::runtime(e.to_string()))?;
    write_atomic(path, &buf)
}
