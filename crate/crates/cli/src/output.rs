use std::io::{self, Write};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// What a subcommand produced: a machine document, an optional flat table
/// for `--format csv`, a human rendering and the process exit code.
pub struct Outcome {
    pub code: i32,
    pub doc: Value,
    pub csv: Option<Csv>,
    pub table: String,
}

pub struct Csv {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Outcome {
    pub fn new(code: i32, schema: &str, body: impl Serialize) -> Self {
        let mut doc = serde_json::to_value(body).expect("serializable body");
        if let Value::Object(map) = &mut doc {
            map.insert("schema".into(), Value::String(format!("aigsense/{schema}/v1")));
        }
        Outcome {
            code,
            doc,
            csv: None,
            table: String::new(),
        }
    }

    pub fn with_table(mut self, table: String) -> Self {
        self.table = table;
        self
    }

    pub fn with_csv(mut self, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        self.csv = Some(Csv { header, rows });
        self
    }

    /// Machine output on stdout, human table on stderr (or on stdout for
    /// `--format table`).
    pub fn emit(&self, format: Format, quiet: bool) -> io::Result<()> {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, &self.doc)?;
                writeln!(out)?;
            }
            Format::Csv => match &self.csv {
                Some(csv) => {
                    let mut w = csv::Writer::from_writer(&mut out);
                    w.write_record(&csv.header)?;
                    for row in &csv.rows {
                        w.write_record(row)?;
                    }
                    w.flush()?;
                }
                None => {
                    serde_json::to_writer_pretty(&mut out, &self.doc)?;
                    writeln!(out)?;
                }
            },
            Format::Table => {
                write!(out, "{}", self.table)?;
                return Ok(());
            }
        }
        if !quiet && !self.table.is_empty() {
            eprint!("{}", self.table);
        }
        Ok(())
    }
}

/// Left-aligned text table.
pub fn render(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    out.push_str(&line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(|s| s.as_str()).collect()));
    for row in rows {
        out.push_str(&line(row.iter().map(|s| s.as_str()).collect()));
    }
    out
}
