use std::io::Read;

use crate::error::{Error, Result};
use crate::store::Batch;

/// A parsed batch file: header labels and one score column per label.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchTable {
    pub labels: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let coords = || (row, column.to_string(), cell.to_string());
    let v: f64 = cell.parse().map_err(|_| {
        let (row, column, value) = coords();
        Error::NonNumeric { row, column, value }
    })?;
    if !v.is_finite() {
        let (row, column, value) = coords();
        return Err(Error::NonFinite { row, column, value });
    }
    Ok(v)
}

/// Reads a batch CSV: a header of agent labels, then `rows` lines of
/// comma-separated decimal scores. Row numbers in errors count data rows
/// from 1.
pub fn read_batch(reader: impl Read, rows: usize) -> Result<BatchTable> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let labels: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    if labels.iter().any(String::is_empty) {
        return Err(Error::Config("batch header has an empty agent label".into()));
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::DuplicateAgent(l.clone()));
        }
    }
    let mut columns = vec![Vec::with_capacity(rows); labels.len()];
    let mut count = 0;
    for record in csv.records() {
        let record = record?;
        count += 1;
        if count > rows {
            continue;
        }
        for (c, cell) in record.iter().enumerate() {
            columns[c].push(parse_cell(cell, count, &labels[c])?);
        }
    }
    if count != rows {
        return Err(Error::RowCount {
            expected: rows,
            actual: count,
        });
    }
    Ok(BatchTable { labels, columns })
}

/// Matches a parsed table to the agents of a running test. Columns of
/// agents that are no longer needed are ignored.
pub fn match_batch(table: BatchTable, agents: &[String], needed: &[bool]) -> Result<Batch> {
    let mut batch: Batch = vec![None; agents.len()];
    for (label, column) in table.labels.into_iter().zip(table.columns) {
        let Some(a) = agents.iter().position(|x| *x == label) else {
            return Err(Error::UnknownAgent(label));
        };
        if needed[a] {
            batch[a] = Some(column);
        }
    }
    for (a, need) in needed.iter().enumerate() {
        if *need && batch[a].is_none() {
            return Err(Error::MissingAgent(agents[a].clone()));
        }
    }
    Ok(batch)
}

/// [`read_batch`] followed by [`match_batch`].
pub fn ingest_batch(reader: impl Read, agents: &[String], needed: &[bool], group_size: usize) -> Result<Batch> {
    match_batch(read_batch(reader, group_size)?, agents, needed)
}
