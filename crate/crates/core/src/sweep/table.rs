//! CSV output of sweep results.

use std::path::Path;

use thiserror::Error;

use super::{Output, SweepResult, SweepRow};
use crate::gaussian::BipartitePartition;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("I/O failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("CSV failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed table: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Number(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Number(x) => format_number(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn parse(s: &str) -> Cell {
        if s.is_empty() {
            Cell::Empty
        } else if let Ok(x) = s.parse::<f64>() {
            Cell::Number(x)
        } else {
            Cell::Text(s.to_string())
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Number(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }
}

/// 12 significant digits.
fn format_number(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// The table exactly as it will be written: numbers already rounded.
    pub fn from_result(result: &SweepResult) -> Self {
        let header = header(result);
        let rows = result
            .rows
            .iter()
            .map(|r| {
                row_cells(result, r)
                    .into_iter()
                    .map(|c| Cell::parse(&c.render()))
                    .collect()
            })
            .collect();
        Self { header, rows }
    }
}

fn header(result: &SweepResult) -> Vec<String> {
    let mut h = vec![result.axis1.name.to_string()];
    if let Some(a) = &result.axis2 {
        h.push(a.name.to_string());
    }
    h.push("stability".into());
    h.push("max_real_part".into());
    for o in column_outputs(result) {
        match o {
            Output::Cs => h.push("c_s".into()),
            Output::Emc => h.push("E_mc".into()),
            Output::Eac => h.push("E_ac".into()),
            Output::Ema => h.push("E_ma".into()),
            Output::Epsilons => {
                for p in BipartitePartition::ALL {
                    h.push(format!("eps_{}", p.label()));
                }
                h.push("nu_min".into());
            }
            Output::Stability => {}
        }
    }
    h.push("error".into());
    h
}

/// Requested outputs in canonical column order.
fn column_outputs(result: &SweepResult) -> Vec<Output> {
    Output::ALL
        .into_iter()
        .filter(|o| result.outputs.contains(o))
        .collect()
}

fn row_cells(result: &SweepResult, row: &SweepRow) -> Vec<Cell> {
    let mut cells = vec![Cell::Number(row.axis1)];
    if result.axis2.is_some() {
        cells.push(row.axis2.map_or(Cell::Empty, Cell::Number));
    }
    let point = row.outcome.as_ref().ok();
    let ent = point.and_then(|p| p.entanglement.as_ref());
    cells.push(Cell::Text(
        point.map_or("error", |p| p.verdict.as_str()).to_string(),
    ));
    cells.push(point.map_or(Cell::Empty, |p| Cell::Number(p.max_real_part)));
    let neg = |k: usize, f: fn(&crate::gaussian::Negativity) -> f64| {
        ent.map_or(Cell::Empty, |e| Cell::Number(f(&e.negativities[k])))
    };
    for o in column_outputs(result) {
        match o {
            Output::Cs => cells.push(point.map_or(Cell::Empty, |p| Cell::Number(p.c_s))),
            Output::Emc => cells.push(neg(0, |n| n.log_negativity)),
            Output::Eac => cells.push(neg(1, |n| n.log_negativity)),
            Output::Ema => cells.push(neg(2, |n| n.log_negativity)),
            Output::Epsilons => {
                for k in 0..3 {
                    cells.push(neg(k, |n| n.epsilon));
                }
                cells.push(ent.map_or(Cell::Empty, |e| Cell::Number(e.nu_min)));
            }
            Output::Stability => {}
        }
    }
    cells.push(match &row.outcome {
        Err(e) => Cell::Text(e.to_string()),
        Ok(_) => Cell::Empty,
    });
    cells
}

pub fn render_csv(result: &SweepResult) -> Result<String, TableError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header(result))?;
    for row in &result.rows {
        w.write_record(row_cells(result, row).iter().map(Cell::render))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| TableError::IoFailure(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| TableError::Malformed(e.to_string()))
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<(), TableError> {
    std::fs::write(path, render_csv(result)?)?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<CsvTable, TableError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(TableError::Malformed(format!(
                "row has {} cells, header {}",
                rec.len(),
                header.len()
            )));
        }
        rows.push(rec.iter().map(Cell::parse).collect());
    }
    Ok(CsvTable { header, rows })
}
