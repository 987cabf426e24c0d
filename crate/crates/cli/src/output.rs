//! Result files. Every file carries the schema version and the resolved
//! configuration, so a run can be repeated from its output alone. Wall
//! time goes to a separate `*.timing.json` so results stay byte-stable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 9 significant digits.
pub fn format_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.8e}")
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) => format_num(*x),
        Cell::Int(i) => i.to_string(),
        // commas and quotes would break the fixed column layout
        Cell::Text(s) => {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
            } else {
                s.clone()
            }
        }
        Cell::Empty => String::new(),
    }
}

/// `#`-prefixed preamble, one header row, then the rows.
pub fn csv_text(command: &str, config: &Value, columns: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = String::new();
    writeln!(out, "# schema_version={SCHEMA_VERSION}").unwrap();
    writeln!(out, "# command={command}").unwrap();
    writeln!(out, "# config={}", serde_json::to_string(config).expect("config serializes")).unwrap();
    writeln!(out, "{}", columns.join(",")).unwrap();
    for r in rows {
        assert_eq!(r.len(), columns.len(), "row width must match the header");
        let cells: Vec<String> = r.iter().map(format_cell).collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

pub fn json_text(command: &str, config: &Value, result: &impl Serialize) -> String {
    let record = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&record).expect("record serializes");
    s.push('\n');
    s
}

pub fn write(dir: &Path, name: &str, text: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

pub fn write_timing(dir: &Path, command: &str, seconds: f64) -> std::io::Result<PathBuf> {
    let text = serde_json::to_string_pretty(&json!({ "command": command, "wall_time_s": seconds })).unwrap() + "\n";
    write(dir, &format!("{command}.timing.json"), &text)
}
