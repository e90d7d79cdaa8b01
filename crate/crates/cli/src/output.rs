//! CSV and JSON emitters.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Destination of a command's data.
pub struct Sink {
    /// `None` when not given; tables then default to CSV.
    pub format: Option<Format>,
    pub path: Option<PathBuf>,
}

impl Sink {
    fn open(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.path {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    /// Table of flat records; JSON renders it as an array.
    pub fn rows<T: Serialize>(&self, rows: &[T]) -> Result<(), CliError> {
        let mut out = self.open()?;
        match self.format.unwrap_or_default() {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut out);
                for r in rows {
                    w.serialize(r).map_err(|e| CliError::Output(e.to_string()))?;
                }
                w.flush().map_err(|e| CliError::Output(e.to_string()))?;
            }
            Format::Json => write_json(&mut out, rows)?,
        }
        out.flush().map_err(|e| CliError::Output(e.to_string()))
    }

    /// A nested document; only JSON can hold it.
    pub fn document<T: Serialize>(&self, doc: &T) -> Result<(), CliError> {
        if self.format == Some(Format::Csv) {
            return Err(CliError::Usage("this command writes JSON; pass --format json".into()));
        }
        let mut out = self.open()?;
        write_json(&mut out, doc)?;
        out.flush().map_err(|e| CliError::Output(e.to_string()))
    }

    pub fn text(&self, text: &str) -> Result<(), CliError> {
        let mut out = self.open()?;
        out.write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| CliError::Output(e.to_string()))
    }
}

fn write_json<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Output(e.to_string()))?;
    writeln!(out).map_err(|e| CliError::Output(e.to_string()))
}

/// One curve of a plotting script: the x column, the y column, and the
/// column values a row must have to belong to it.
pub struct Curve {
    pub x: &'static str,
    pub y: &'static str,
    pub select: Vec<(&'static str, String)>,
    pub title: String,
}

/// Writes a gnuplot script that plots `curves` from the CSV at `data`.
pub fn gnuplot_script(path: &Path, data: &Path, title: &str, ylabel: &str, curves: &[Curve]) -> Result<(), CliError> {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str(&format!("set title '{title}'\n"));
    s.push_str(&format!("set ylabel '{ylabel}'\n"));
    s.push_str("set grid\n");
    let plots: Vec<String> = curves
        .iter()
        .map(|c| {
            let y = if c.select.is_empty() {
                format!("(column('{}'))", c.y)
            } else {
                let cond: Vec<String> = c
                    .select
                    .iter()
                    .map(|(col, v)| format!("strcol('{col}') eq '{v}'"))
                    .collect();
                format!("({} ? column('{}') : 1/0)", cond.join(" && "), c.y)
            };
            format!(
                "'{}' using (column('{}')):{y} with linespoints title '{}'",
                data.display(),
                c.x,
                c.title
            )
        })
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    std::fs::write(path, s).map_err(|e| CliError::io(path, e))
}
