//! CSV ingestion and JSON/CSV emission.

use std::fs;
use std::io::Write;
use std::path::Path;

use fracfit::least_squares::DataSet;
use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};

use crate::error::{CliError, CliResult};

/// Scientific notation with 17 significant digits; round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Compact JSON whose floats carry 17 significant digits.
struct PreciseFormatter;

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        CompactFormatter.write_f64(writer, f64::from(value))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, PreciseFormatter);
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| CliError::io(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_cell(raw: &str, line: u64, column: &str) -> CliResult<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("row {line}, column {column}: cannot parse {raw:?} as a number")))?;
    if !v.is_finite() {
        return Err(CliError::Input(format!("row {line}, column {column}: value {raw:?} is not finite")));
    }
    Ok(v)
}

fn open_csv(path: &Path, headers: bool) -> CliResult<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Reads `x,y[,w]` data with a header row; rows are numbered as in the file.
pub fn read_data(path: &Path) -> CliResult<DataSet> {
    let mut reader = open_csv(path, true)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let weighted = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["x", "y"] => false,
        ["x", "y", "w"] => true,
        [] | [""] => return Err(CliError::Input(format!("{}: empty file, expected header x,y[,w]", path.display()))),
        other => {
            return Err(CliError::Input(format!(
                "{}: header must be x,y or x,y,w, got {}",
                path.display(),
                other.join(",")
            )))
        }
    };
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(CliError::Input(format!(
                "row {line}: expected {} columns, found {}",
                headers.len(),
                record.len()
            )));
        }
        let x = parse_cell(&record[0], line, "x")?;
        if x < 0.0 {
            return Err(CliError::Input(format!("row {line}, column x: abscissa {x} is negative")));
        }
        xs.push(x);
        ys.push(parse_cell(&record[1], line, "y")?);
        if weighted {
            let w = parse_cell(&record[2], line, "w")?;
            if w <= 0.0 {
                return Err(CliError::Input(format!("row {line}, column w: weight {w} must be positive")));
            }
            ws.push(w);
        }
    }
    if xs.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    let data = if weighted { DataSet::with_weights(xs, ys, ws) } else { DataSet::new(xs, ys) };
    data.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads a points file: one abscissa per line, optionally followed by `,weight`.
pub fn read_points(path: &Path) -> CliResult<(Vec<f64>, Option<Vec<f64>>)> {
    let mut reader = open_csv(path, false)?;
    let (mut xs, mut ws) = (Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        match record.len() {
            1 | 2 => {}
            n => return Err(CliError::Input(format!("row {line}: expected 1 or 2 columns, found {n}"))),
        }
        let x = parse_cell(&record[0], line, "x")?;
        if x < 0.0 {
            return Err(CliError::Input(format!("row {line}, column x: abscissa {x} is negative")));
        }
        xs.push(x);
        if record.len() == 2 {
            ws.push(parse_cell(&record[1], line, "w")?);
        }
    }
    if xs.is_empty() {
        return Err(CliError::Input(format!("{}: no points", path.display())));
    }
    match ws.len() {
        0 => Ok((xs, None)),
        n if n == xs.len() => Ok((xs, Some(ws))),
        _ => Err(CliError::Input(format!("{}: weights given on some lines only", path.display()))),
    }
}

/// Writes a CSV with the given header and rows of floats.
pub fn write_table(path: Option<&Path>, header: &[String], rows: &[Vec<f64>]) -> CliResult<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Input(format!("writing CSV: {e}"));
    writer.write_record(header).map_err(fail)?;
    for row in rows {
        writer.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(fail)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Input(format!("writing CSV: {e}")))?;
    let text = String::from_utf8(bytes).expect("CSV of formatted floats is UTF-8");
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_data(path: Option<&Path>, data: &DataSet) -> CliResult<()> {
    let (header, rows): (Vec<String>, Vec<Vec<f64>>) = match data.weights() {
        Some(w) => (
            vec!["x".into(), "y".into(), "w".into()],
            (0..data.len()).map(|k| vec![data.xs()[k], data.ys()[k], w[k]]).collect(),
        ),
        None => (
            vec!["x".into(), "y".into()],
            (0..data.len()).map(|k| vec![data.xs()[k], data.ys()[k]]).collect(),
        ),
    };
    write_table(path, &header, &rows)
}
