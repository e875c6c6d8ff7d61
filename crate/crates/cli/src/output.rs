//! Report export: JSON or CSV, to a directory or to stdout.

use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use infoveil_core::report::{CsvTable, Tabular};
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Writes `report` as `{name}.json` or one `{table}.csv` per table into
/// `out`, or to stdout when no directory is given. On stdout, multiple CSV
/// tables are separated by `# table` lines in report order.
pub fn emit<R: Serialize + Tabular>(report: &R, name: &str, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    match format {
        Format::Json => {
            let mut bytes = serde_json::to_vec_pretty(report).expect("reports serialize");
            bytes.push(b'\n');
            match out {
                Some(dir) => write_file(dir, &format!("{name}.json"), &bytes),
                None => write_stdout(&bytes),
            }
        }
        Format::Csv => {
            let tables = report.tables();
            match out {
                Some(dir) => tables
                    .iter()
                    .try_for_each(|t| write_file(dir, &format!("{}.csv", t.name), t.to_csv_string().as_bytes())),
                None => write_stdout(stdout_csv(&tables).as_bytes()),
            }
        }
    }
}

fn stdout_csv(tables: &[CsvTable]) -> String {
    if let [only] = tables {
        return only.to_csv_string();
    }
    tables
        .iter()
        .map(|t| format!("# {}\n{}", t.name, t.to_csv_string()))
        .collect::<Vec<_>>()
        .join("\n")
}

fn write_file(dir: &Path, file: &str, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    let path = dir.join(file);
    std::fs::write(&path, bytes).map_err(CliError::io(format!("writing {}", path.display())))
}

fn write_stdout(bytes: &[u8]) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(bytes)
        .and_then(|_| out.flush())
        .map_err(CliError::io("writing stdout"))
}
