//! CSV ingestion: header `x,y[,label][,truth]`, one observation per row.
//!
//! `label` holds the known component of semi-supervised rows (blank means
//! unlabeled). `truth` is optional and only used for scoring.

use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};
use polycwm::{CwmError, Dataset64};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct InputTable {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub labels: Vec<Option<usize>>,
    /// Reference labels, if the file has a `truth` column.
    pub truth: Option<Vec<usize>>,
}

impl InputTable {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn dataset(&self) -> Result<Dataset64, CliError> {
        Dataset64::new(self.x.clone(), self.y.clone(), self.labels.clone()).map_err(CliError::from)
    }
}

struct Columns {
    x: usize,
    y: usize,
    label: Option<usize>,
    truth: Option<usize>,
}

impl Columns {
    fn locate(header: &StringRecord) -> Result<Self, CliError> {
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h.trim().trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
        };
        let x = find("x").ok_or_else(|| CliError::MissingColumn("x".into()))?;
        let y = find("y").ok_or_else(|| CliError::MissingColumn("y".into()))?;
        Ok(Self {
            x,
            y,
            label: find("label"),
            truth: find("truth"),
        })
    }
}

pub fn load_csv(path: &Path) -> Result<Dataset64, CliError> {
    load_table(path)?.dataset()
}

pub fn load_table(path: &Path) -> Result<InputTable, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_table(&text)
}

pub fn parse_table(text: &str) -> Result<InputTable, CliError> {
    let mut reader = ReaderBuilder::new()
        .trim(Trim::All)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = match reader.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        Ok(_) => return Err(CliError::EmptyFile),
        Err(e) => {
            return Err(CliError::Parse {
                row: 0,
                column: "header".into(),
                message: e.to_string(),
            })
        }
    };
    let cols = Columns::locate(&header)?;
    let mut table = InputTable {
        x: Vec::new(),
        y: Vec::new(),
        labels: Vec::new(),
        truth: cols.truth.map(|_| Vec::new()),
    };
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::Parse {
            row,
            column: "-".into(),
            message: e.to_string(),
        })?;
        table.x.push(number(&record, cols.x, row, "x")?);
        table.y.push(number(&record, cols.y, row, "y")?);
        let label = match cols.label {
            Some(c) => match record.get(c).unwrap_or("") {
                "" => None,
                s => Some(positive_label(s, row, "label")?),
            },
            None => None,
        };
        table.labels.push(label);
        if let (Some(c), Some(truth)) = (cols.truth, table.truth.as_mut()) {
            truth.push(positive_label(record.get(c).unwrap_or(""), row, "truth")?);
        }
    }
    if table.x.is_empty() {
        return Err(CliError::EmptyFile);
    }
    Ok(table)
}

fn number(record: &StringRecord, col: usize, row: usize, name: &str) -> Result<f64, CliError> {
    let raw = record.get(col).unwrap_or("");
    let parse_err = |message: String| CliError::Parse {
        row,
        column: name.into(),
        message,
    };
    let v: f64 = raw.parse().map_err(|_| parse_err(format!("`{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(format!("`{raw}` is not finite")));
    }
    Ok(v)
}

fn positive_label(raw: &str, row: usize, column: &str) -> Result<usize, CliError> {
    match raw.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(CliError::BadLabel {
            row,
            column: column.into(),
            value: raw.into(),
        }),
    }
}

/// Writes `x,y,label,truth` rows. Unrevealed labels are left blank.
pub fn write_table(path: &Path, table: &InputTable) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::output(path, e))?;
    let mut header = vec!["x", "y", "label"];
    if table.truth.is_some() {
        header.push("truth");
    }
    w.write_record(&header).map_err(|e| CliError::output(path, e))?;
    for i in 0..table.n() {
        let mut rec = vec![
            table.x[i].to_string(),
            table.y[i].to_string(),
            table.labels[i].map(|l| l.to_string()).unwrap_or_default(),
        ];
        if let Some(t) = &table.truth {
            rec.push(t[i].to_string());
        }
        w.write_record(&rec).map_err(|e| CliError::output(path, e))?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}

impl From<CwmError> for CliError {
    fn from(e: CwmError) -> Self {
        CliError::Model(e)
    }
}
