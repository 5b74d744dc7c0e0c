//! Count data ingestion: the `year,count` CSV and plain count lists.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSeries {
    /// Empty when the input carried no years.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub year: Vec<i64>,
    pub count: Vec<u64>,
}

#[derive(Deserialize)]
struct Row {
    year: Option<i64>,
    count: u64,
}

impl CountSeries {
    pub fn len(&self) -> usize {
        self.count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count.is_empty()
    }

    /// Parse CSV with a `count` column and an optional `year` column. Years
    /// must be given on every row or on none.
    pub fn from_csv(reader: impl Read) -> Result<Self, CliError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| CliError::input("input", e.to_string()))?.clone();
        if !headers.iter().any(|h| h == "count") {
            return Err(CliError::input("input", "CSV header must contain a `count` column"));
        }
        let mut out = CountSeries {
            year: Vec::new(),
            count: Vec::new(),
        };
        let mut with_year = None;
        for (i, rec) in rdr.deserialize::<Row>().enumerate() {
            let row = rec.map_err(|e| CliError::input("input", format!("row {}: {e}", i + 2)))?;
            match (with_year, row.year) {
                (None, y) => with_year = Some(y.is_some()),
                (Some(true), None) | (Some(false), Some(_)) => {
                    return Err(CliError::input("input", format!("row {}: year given on some rows only", i + 2)))
                }
                _ => {}
            }
            if let Some(y) = row.year {
                out.year.push(y);
            }
            out.count.push(row.count);
        }
        Ok(out)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<(), CliError> {
        let mut wtr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| CliError::Write(e.into());
        if self.year.is_empty() {
            wtr.write_record(["count"]).map_err(err)?;
            for c in &self.count {
                wtr.write_record([c.to_string()]).map_err(err)?;
            }
        } else {
            wtr.write_record(["year", "count"]).map_err(err)?;
            for (y, c) in self.year.iter().zip(&self.count) {
                wtr.write_record([y.to_string(), c.to_string()]).map_err(err)?;
            }
        }
        wtr.flush().map_err(CliError::Write)
    }
}

/// Nonnegative integers separated by commas, whitespace or newlines. Lines
/// starting with `#` are skipped.
pub fn parse_counts(text: &str, field: &str) -> Result<Vec<u64>, CliError> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<u64>()
                .map_err(|_| CliError::input(field, format!("`{t}` is not a nonnegative integer")))
        })
        .collect()
}

pub fn read_file(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}
