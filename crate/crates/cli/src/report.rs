//! Reports: a human-readable part followed by structured records.
//!
//! Record lines look like `fit.param name=arm0.intercept estimate=0.51 se=0.03`.
//! Values escape `%`, whitespace and `=` as `%XX`, so every record parses
//! back to exactly what was written.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const RECORDS_MARKER: &str = "[records]";

/// Text form of a record value. Floats use the shortest representation
/// that parses back to the same bits.
pub trait FieldValue {
    fn render(&self) -> String;
}

impl FieldValue for f64 {
    fn render(&self) -> String {
        let a = self.abs();
        if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
            self.to_string()
        } else {
            format!("{self:e}")
        }
    }
}

macro_rules! display_value {
    ($($t:ty),*) => {$(
        impl FieldValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
display_value!(usize, u64, bool, str, String);

impl<T: FieldValue + ?Sized> FieldValue for &T {
    fn render(&self) -> String {
        (**self).render()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<(String, String)>,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            fields: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl FieldValue) -> Self {
        self.fields.push((key.to_string(), value.render()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    fn render(&self) -> String {
        let mut line = escape(&self.kind);
        for (k, v) in &self.fields {
            let _ = write!(line, " {}={}", escape(k), escape(v));
        }
        line
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '%' | '=' | ' ' | '\t' | '\n' | '\r' => {
                let _ = write!(out, "%{:02X}", ch as u32);
            }
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '%' {
            let hex: String = chars.by_ref().take(2).collect();
            let code = u8::from_str_radix(&hex, 16).map_err(|_| format!("bad escape '%{hex}'"))?;
            out.push(code as char);
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub human: String,
    pub records: Vec<Record>,
}

impl Report {
    pub fn render(&self) -> String {
        let mut out = self.human.trim_end().to_string();
        out.push_str("\n\n");
        out.push_str(RECORDS_MARKER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.render());
            out.push('\n');
        }
        out
    }
}

/// Records of a rendered report. Text before the marker line is ignored,
/// so a whole report can be passed in.
pub fn parse_records(text: &str) -> Result<Vec<Record>, String> {
    let body = match text.lines().position(|l| l.trim() == RECORDS_MARKER) {
        Some(i) => text.lines().skip(i + 1).collect::<Vec<_>>(),
        None => text.lines().collect(),
    };
    let mut out = Vec::new();
    for (i, line) in body.iter().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split(' ');
        let kind = unescape(tokens.next().unwrap_or_default())?;
        let mut rec = Record::new(&kind);
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| format!("record line {}: token '{tok}' has no '='", i + 1))?;
            rec.fields.push((unescape(k)?, unescape(v)?));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::io(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents.as_bytes()).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Left-aligned text table with columns padded to their widest cell.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip() {
        let report = Report {
            human: "Title\nsome table\n".into(),
            records: vec![
                Record::new("fit.param").with("name", "arm0.main[age group]").with("estimate", 0.1_f64 + 0.2),
                Record::new("weird").with("k=1", "50% a\tb").with("nan", f64::NAN),
            ],
        };
        let parsed = parse_records(&report.render()).unwrap();
        assert_eq!(parsed, report.records);
        assert_eq!(parsed[0].get_f64("estimate"), Some(0.1 + 0.2));
    }

    #[test]
    fn floats_round_trip_exactly() {
        for v in [0.0, -0.0, 1e-300, 3.5e-9, 0.95, 1.0 / 3.0, -2.5e20, f64::MAX, f64::MIN_POSITIVE] {
            let back: f64 = v.render().parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v}");
        }
        assert_eq!(0.95.render(), "0.95");
        assert_eq!(2.5e-80.render(), "2.5e-80");
    }

    #[test]
    fn table_pads_columns() {
        let t = table(&["a", "bb"], &[vec!["ccc".into(), "d".into()]]);
        assert_eq!(t, "a    bb\nccc  d\n");
    }
}
