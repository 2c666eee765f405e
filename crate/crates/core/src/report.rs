//! Structured text reports: key-value sections and CSV tables.
//!
//! ```text
//! [run]
//! command = infer
//!
//! [nugget_search:csv]
//! nugget,val_score
//! 0.001,0.79
//! ```
//!
//! Keys ending in `_s` hold wall-clock seconds and are the only
//! non-reproducible values.

use std::fmt::{self, Write as _};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    Values {
        name: String,
        entries: Vec<(String, String)>,
    },
    Table {
        name: String,
        header: Vec<String>,
        rows: Vec<Vec<String>>,
    },
}

impl Section {
    pub fn name(&self) -> &str {
        match self {
            Section::Values { name, .. } | Section::Table { name, .. } => name,
        }
    }
}

/// Shortest round-trip decimal form; NaN and infinities spelled out.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    sections: Vec<Section>,
}

/// Builder for a key-value section.
pub struct Values<'a> {
    entries: &'a mut Vec<(String, String)>,
}

impl Values<'_> {
    pub fn put(&mut self, key: &str, value: impl fmt::Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.entries.push((key.to_string(), fmt_f64(value)));
        self
    }
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    /// Start (or continue) a key-value section.
    pub fn values(&mut self, name: &str) -> Values<'_> {
        let pos = self
            .sections
            .iter()
            .position(|s| matches!(s, Section::Values { name: n, .. } if n == name));
        let idx = pos.unwrap_or_else(|| {
            self.sections.push(Section::Values {
                name: name.to_string(),
                entries: Vec::new(),
            });
            self.sections.len() - 1
        });
        match &mut self.sections[idx] {
            Section::Values { entries, .. } => Values { entries },
            Section::Table { .. } => unreachable!(),
        }
    }

    pub fn table(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) {
        self.sections.push(Section::Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        });
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.iter().find_map(|s| match s {
            Section::Values { name, entries } if name == section => {
                entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
            }
            _ => None,
        })
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Option<f64> {
        self.get(section, key).and_then(|v| v.parse().ok())
    }

    pub fn find_table(&self, section: &str) -> Option<(&[String], &[Vec<String>])> {
        self.sections.iter().find_map(|s| match s {
            Section::Table { name, header, rows } if name == section => Some((header.as_slice(), rows.as_slice())),
            _ => None,
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            match s {
                Section::Values { name, entries } => {
                    let _ = writeln!(out, "[{name}]");
                    for (k, v) in entries {
                        let _ = writeln!(out, "{k} = {v}");
                    }
                }
                Section::Table { name, header, rows } => {
                    let _ = writeln!(out, "[{name}:csv]");
                    let _ = writeln!(out, "{}", header.join(","));
                    for r in rows {
                        let _ = writeln!(out, "{}", r.join(","));
                    }
                }
            }
        }
        out
    }

    /// Inverse of [`render`](Self::render).
    pub fn parse(text: &str) -> Result<Self> {
        let mut report = Report::new();
        let mut current: Option<Section> = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if let Some(head) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                report.sections.extend(current.take());
                current = Some(match head.strip_suffix(":csv") {
                    Some(name) => Section::Table {
                        name: name.into(),
                        header: Vec::new(),
                        rows: Vec::new(),
                    },
                    None => Section::Values {
                        name: head.into(),
                        entries: Vec::new(),
                    },
                });
                continue;
            }
            let bad = || Error::input(format!("report line {}: unexpected {line:?}", i + 1));
            match current.as_mut().ok_or_else(bad)? {
                Section::Values { entries, .. } => {
                    let (k, v) = line.split_once(" = ").ok_or_else(bad)?;
                    entries.push((k.into(), v.into()));
                }
                Section::Table { header, rows, .. } => {
                    let cells = line.split(',').map(String::from).collect();
                    if header.is_empty() {
                        *header = cells;
                    } else {
                        rows.push(cells);
                    }
                }
            }
        }
        report.sections.extend(current);
        Ok(report)
    }

    /// Copy with every timing value (`*_s` keys) replaced by `*`.
    pub fn masked(&self) -> Report {
        let mut r = self.clone();
        for s in &mut r.sections {
            if let Section::Values { entries, .. } = s {
                for (k, v) in entries.iter_mut() {
                    if k.ends_with("_s") {
                        *v = "*".into();
                    }
                }
            }
        }
        r
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::Io(e).context(path.display().to_string()))
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_masking() {
        let mut r = Report::new();
        r.values("run").put("command", "infer").num("x", 0.1);
        r.table("t", &["a", "b"], vec![vec!["1".into(), "2".into()]]);
        r.values("timing").num("solve_s", 1.25);
        r.values("run").put("seed", 3);
        let text = r.render();
        let back = Report::parse(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.get("run", "seed"), Some("3"));
        assert_eq!(back.get_f64("run", "x"), Some(0.1));
        assert_eq!(r.masked().get("timing", "solve_s"), Some("*"));
        assert_eq!(back.find_table("t").unwrap().1.len(), 1);
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(1e-20), "1e-20");
    }
}
