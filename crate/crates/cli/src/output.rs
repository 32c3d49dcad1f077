//! CSV emission and parsing of power records.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use probetest::experiment::record_order;
use probetest::{PowerRecord, ScenarioKind, TestLabel};

use crate::CliError;

pub const HEADER: [&str; 10] = [
    "scenario",
    "test",
    "a",
    "l",
    "lambda",
    "t",
    "sigma",
    "power",
    "se",
    "no_min_count",
];

fn float(v: f64) -> String {
    format!("{v:.8e}")
}

/// Writes `comments` (already `#`-prefixed lines), the header and one row
/// per record in output order.
pub fn write_csv(out: impl Write, records: &[PowerRecord], comments: &str) -> std::io::Result<()> {
    let mut out = out;
    out.write_all(comments.as_bytes())?;
    let mut sorted = records.to_vec();
    sorted.sort_by(record_order);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in &sorted {
        w.write_record([
            r.scenario.label().to_string(),
            r.test.name(),
            float(r.a),
            float(r.l),
            float(r.lambda),
            float(r.t),
            float(r.sigma),
            float(r.power),
            float(r.se),
            r.no_min_count.to_string(),
        ])?;
    }
    w.flush()
}

/// [`write_csv`] to a file.
pub fn emit_csv(records: &[PowerRecord], comments: &str, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut buf = BufWriter::new(file);
    write_csv(&mut buf, records, comments).map_err(|e| CliError::io(path, e))?;
    buf.flush().map_err(|e| CliError::io(path, e))
}

/// Parses records written by [`write_csv`], skipping comment lines.
pub fn parse_csv(text: &str) -> Result<Vec<PowerRecord>, String> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(HEADER) {
        return Err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| e.to_string())?;
        let bad = |field: &str| format!("row {}: invalid {field}", i + 1);
        let num = |j: usize| row[j].parse::<f64>().map_err(|_| bad(HEADER[j]));
        out.push(PowerRecord {
            scenario: row[0].parse::<ScenarioKind>().map_err(|_| bad("scenario"))?,
            test: row[1].parse::<TestLabel>().map_err(|_| bad("test"))?,
            a: num(2)?,
            l: num(3)?,
            lambda: num(4)?,
            t: num(5)?,
            sigma: num(6)?,
            power: num(7)?,
            se: num(8)?,
            no_min_count: row[9].parse().map_err(|_| bad("no_min_count"))?,
        });
    }
    Ok(out)
}

/// Reads a CSV file written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<PowerRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_csv(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
