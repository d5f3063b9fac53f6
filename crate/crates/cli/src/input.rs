//! Delimited text input with a header row.

use std::path::Path;

use hetfx::{Arm, Dataset, OutcomeKind};

use crate::config::Settings;
use crate::error::{CliError, CliResult};

/// Dataset plus the covariate column names in model order.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: Dataset,
    pub covariate_names: Vec<String>,
}

fn column_index(header: &csv::StringRecord, name: &str, path: &Path) -> CliResult<usize> {
    header.iter().position(|h| h.trim() == name).ok_or_else(|| {
        let available: Vec<&str> = header.iter().map(str::trim).collect();
        CliError::input(format!(
            "{}: column '{name}' not found in header (columns: {})",
            path.display(),
            available.join(", ")
        ))
    })
}

fn delimiter_for(path: &Path, settings: &Settings) -> u8 {
    settings.delimiter.unwrap_or_else(|| {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") => b'\t',
            _ => b',',
        }
    })
}

pub fn read_dataset(path: &Path, settings: &Settings, kind: OutcomeKind) -> CliResult<LoadedData> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_for(path, settings))
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
        .clone();

    let t_col = column_index(&header, &settings.treatment, path)?;
    let y_col = column_index(&header, &settings.outcome, path)?;
    let covariate_names: Vec<String> = match &settings.covariates {
        Some(names) => names.clone(),
        None => header
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != t_col && *i != y_col)
            .map(|(_, h)| h.trim().to_string())
            .collect(),
    };
    let x_cols = covariate_names
        .iter()
        .map(|name| column_index(&header, name, path))
        .collect::<CliResult<Vec<usize>>>()?;

    let mut data = Dataset::new(x_cols.len());
    let mut x = vec![0.0; x_cols.len()];
    for row in reader.records() {
        let row = row.map_err(|e| {
            let at = e
                .position()
                .map(|p| format!("line {}: ", p.line()))
                .unwrap_or_default();
            CliError::input(format!("{}: {at}{e}", path.display()))
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let locate = |col: usize, what: String| {
            CliError::input(format!(
                "{}: line {line}, column {} ({}): {what}",
                path.display(),
                col + 1,
                header.get(col).unwrap_or("").trim()
            ))
        };
        let field = |col: usize| -> CliResult<&str> {
            let v = row.get(col).unwrap_or("").trim();
            if v.is_empty() {
                Err(locate(col, "missing value".into()))
            } else {
                Ok(v)
            }
        };
        let number = |col: usize| -> CliResult<f64> {
            let v = field(col)?;
            match v.parse::<f64>() {
                Ok(n) if n.is_finite() => Ok(n),
                _ => Err(locate(col, format!("'{v}' is not a finite number"))),
            }
        };

        let arm = match field(t_col)? {
            "0" => Arm::Control,
            "1" => Arm::Treated,
            other => return Err(locate(t_col, format!("treatment must be 0 or 1, got '{other}'"))),
        };
        let y = match kind {
            OutcomeKind::Binary => match field(y_col)? {
                "0" => 0.0,
                "1" => 1.0,
                other => {
                    return Err(locate(y_col, format!("binary outcome must be 0 or 1, got '{other}'")))
                }
            },
            OutcomeKind::Continuous => number(y_col)?,
        };
        for (slot, &col) in x.iter_mut().zip(&x_cols) {
            *slot = number(col)?;
        }
        data.push(arm, &x, y)?;
    }
    if data.is_empty() {
        return Err(CliError::input(format!("{}: no data rows", path.display())));
    }
    Ok(LoadedData {
        data,
        covariate_names,
    })
}

/// CSV text of a dataset with columns `t, y, x1..xp`.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let p = data.covariate_dim();
    let mut out = String::from("t,y");
    for j in 1..=p {
        out.push_str(&format!(",x{j}"));
    }
    out.push('\n');
    for rec in data.records() {
        out.push_str(&format!("{},{}", rec.arm.index(), rec.outcome));
        for v in rec.covariates {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}
