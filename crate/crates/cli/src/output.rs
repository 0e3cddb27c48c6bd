use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::args::Format;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Comment block written at the top of every CSV. `argv` is a JSON array,
/// so a run can be repeated verbatim from its own output.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub command: &'static str,
    pub argv: Vec<String>,
    pub seed: u64,
    pub config: Value,
}

impl Header {
    fn comment_lines(&self) -> String {
        let argv = serde_json::to_string(&self.argv).expect("strings serialize");
        let config = serde_json::to_string(&self.config).expect("values serialize");
        format!(
            "# persist-lab {VERSION}\n# command: {}\n# argv: {argv}\n# seed: {}\n# config: {config}\n",
            self.command, self.seed
        )
    }
}

/// A rectangular table of preformatted cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# key: value` lines after the body.
    pub footer: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, header: &Header) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            wtr.write_record(row).expect("in-memory write");
        }
        let body = String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 cells");
        let mut text = header.comment_lines();
        text.push_str(&body);
        for line in &self.footer {
            text.push_str("# ");
            text.push_str(line);
            text.push('\n');
        }
        text
    }

    pub fn to_json(&self, header: &Header) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| ((*c).to_string(), cell_value(v)))
                    .collect::<serde_json::Map<_, _>>();
                Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({
            "version": VERSION,
            "header": header,
            "rows": rows,
            "footer": self.footer,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("values serialize");
        text.push('\n');
        text
    }
}

fn cell_value(cell: &str) -> Value {
    if cell.is_empty() {
        return Value::Null;
    }
    if let Ok(i) = cell.parse::<i64>() {
        return Value::from(i);
    }
    match cell.parse::<f64>() {
        Ok(x) if x.is_finite() => Value::from(x),
        _ => Value::from(cell),
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// Writes `table` in the requested format. `svg+csv` renders the SVG from
/// the written CSV text, never from the computed values.
pub fn emit(table: &Table, header: &Header, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    match format {
        Format::Csv => write_text(out, &table.to_csv(header)),
        Format::Json => write_text(out, &table.to_json(header)),
        Format::SvgCsv => {
            let out = out.ok_or_else(|| CliError::Usage("--format svg+csv needs --out".into()))?;
            let csv_text = table.to_csv(header);
            write_text(Some(out), &csv_text)?;
            let svg = crate::plot::render_csv(&csv_text, None)?;
            write_text(Some(&out.with_extension("svg")), &svg)
        }
    }
}
