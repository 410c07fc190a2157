//! CSV and JSON records. Numbers are written in scientific notation with 17
//! significant digits and a `.` decimal separator; an unbounded QCRB is
//! written as `inf`.

use std::collections::BTreeMap;
use std::io::Write;

use clap::ValueEnum;
use serde_json::{json, Map, Value};

use crate::error::CliResult;

pub const CSV_HEADER: [&str; 5] = ["param", "qfi", "qcrb", "model", "method"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    Um,
    Nm,
    Arb,
}

impl Unit {
    pub fn label(&self) -> &'static str {
        match self {
            Unit::Um => "um",
            Unit::Nm => "nm",
            Unit::Arb => "arb",
        }
    }
}

impl std::str::FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub param: f64,
    pub qfi: f64,
    /// `f64::INFINITY` when the QFI vanishes.
    pub qcrb: f64,
    pub model: String,
    pub method: String,
    pub diagnostics: BTreeMap<String, f64>,
}

pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn json_number(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(format_number(x))
    }
}

impl Record {
    pub fn csv_fields(&self) -> [String; 5] {
        [
            format_number(self.param),
            format_number(self.qfi),
            format_number(self.qcrb),
            self.model.clone(),
            self.method.clone(),
        ]
    }

    pub fn to_json(&self, unit: Unit) -> Value {
        let diagnostics: Map<String, Value> = self
            .diagnostics
            .iter()
            .map(|(k, v)| (k.clone(), json_number(*v)))
            .collect();
        json!({
            "param": json_number(self.param),
            "qfi": json_number(self.qfi),
            "qcrb": json_number(self.qcrb),
            "model": self.model,
            "method": self.method,
            "unit": unit.label(),
            "diagnostics": diagnostics,
        })
    }
}

pub fn write_csv<W: Write>(out: W, records: &[Record]) -> CliResult<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in records {
        writer.write_record(r.csv_fields())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(mut out: W, value: &Value) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// A single record as CSV, or as one JSON object.
pub fn write_single<W: Write>(
    out: W,
    record: &Record,
    format: Format,
    unit: Unit,
) -> CliResult<()> {
    match format {
        Format::Csv => write_csv(out, std::slice::from_ref(record)),
        Format::Json => write_json(out, &record.to_json(unit)),
    }
}

/// Records as CSV, or as a JSON object holding one array per model (in order
/// of first appearance).
pub fn write_table<W: Write>(
    out: W,
    records: &[Record],
    format: Format,
    unit: Unit,
    variable: &str,
) -> CliResult<()> {
    match format {
        Format::Csv => write_csv(out, records),
        Format::Json => {
            let mut order: Vec<&str> = Vec::new();
            let mut groups: BTreeMap<&str, Vec<Value>> = BTreeMap::new();
            for r in records {
                if !groups.contains_key(r.model.as_str()) {
                    order.push(&r.model);
                }
                groups.entry(&r.model).or_default().push(r.to_json(unit));
            }
            let mut models = Map::new();
            for name in order {
                models.insert(
                    name.to_string(),
                    Value::Array(groups.remove(name).unwrap_or_default()),
                );
            }
            write_json(
                out,
                &json!({ "variable": variable, "unit": unit.label(), "models": models }),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(qcrb: f64) -> Record {
        Record {
            param: 15.0,
            qfi: 2000.0 / 9.0,
            qcrb,
            model: "spe".into(),
            method: "spe-closed-form".into(),
            diagnostics: BTreeMap::new(),
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(format_number(2000.0 / 9.0), "2.2222222222222223e2");
        assert_eq!(format_number(0.0), "0.0000000000000000e0");
        assert_eq!(format_number(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[record(f64::INFINITY)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "param,qfi,qcrb,model,method\n1.5000000000000000e1,2.2222222222222223e2,inf,spe,spe-closed-form\n"
        );
    }

    #[test]
    fn json_infinite_as_string() {
        let v = record(f64::INFINITY).to_json(Unit::Um);
        assert_eq!(v["qcrb"], "inf");
        assert_eq!(v["unit"], "um");
    }
}
