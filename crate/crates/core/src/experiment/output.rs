use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 11] =
    ["scheme", "axis", "value", "seed", "rate_bps_hz", "iters", "converged", "res_power", "res_amp", "res_gamma", "ms"];

/// Marks aggregate rows in the `seed` column.
pub const AGGREGATE_SEED: &str = "aggregate";

/// One trial of one scheme at one axis value, or the aggregate over trials.
///
/// Aggregate rows have `seed = None`, the mean rate in `rate`, the number of
/// successful trials in `iters`, `converged` set when every trial converged,
/// the largest residuals, and the standard error of the mean rate in `ms`.
/// Failed trials carry NaN rate and residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: String,
    pub axis: String,
    pub value: f64,
    pub seed: Option<u64>,
    #[serde(rename = "rate_bps_hz", with = "nan_as_null")]
    pub rate: f64,
    pub iters: usize,
    pub converged: bool,
    #[serde(with = "nan_as_null")]
    pub res_power: f64,
    #[serde(with = "nan_as_null")]
    pub res_amp: f64,
    #[serde(with = "nan_as_null")]
    pub res_gamma: f64,
    /// Wall time of the trial (0 unless timing is recorded); standard error for aggregates.
    #[serde(with = "nan_as_null")]
    pub ms: f64,
}

impl ResultRow {
    pub fn is_aggregate(&self) -> bool {
        self.seed.is_none()
    }

    pub fn failed(&self) -> bool {
        !self.is_aggregate() && self.rate.is_nan()
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros removed.
pub fn format_g12(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn csv_record(row: &ResultRow) -> [String; 11] {
    [
        row.scheme.clone(),
        row.axis.clone(),
        format_g12(row.value),
        row.seed.map_or_else(|| AGGREGATE_SEED.to_string(), |s| s.to_string()),
        format_g12(row.rate),
        row.iters.to_string(),
        row.converged.to_string(),
        format_g12(row.res_power),
        format_g12(row.res_amp),
        format_g12(row.res_gamma),
        format_g12(row.ms),
    ]
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(csv_record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Invariant(format!("non-UTF-8 CSV: {e}")))
}

/// Parses CSV written by [`write_csv`]. Floats come back at 12 significant digits.
pub fn read_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Config(format!("bad number `{s}`"))) };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let seed = if &rec[3] == AGGREGATE_SEED {
            None
        } else {
            Some(rec[3].parse().map_err(|_| Error::Config(format!("bad seed `{}`", &rec[3])))?)
        };
        rows.push(ResultRow {
            scheme: rec[0].to_string(),
            axis: rec[1].to_string(),
            value: num(&rec[2])?,
            seed,
            rate: num(&rec[4])?,
            iters: rec[5].parse().map_err(|_| Error::Config(format!("bad iters `{}`", &rec[5])))?,
            converged: rec[6].parse().map_err(|_| Error::Config(format!("bad flag `{}`", &rec[6])))?,
            res_power: num(&rec[7])?,
            res_amp: num(&rec[8])?,
            res_gamma: num(&rec[9])?,
            ms: num(&rec[10])?,
        });
    }
    Ok(rows)
}

/// JSON document: the rows plus the resolved settings that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub metadata: serde_json::Value,
    pub results: Vec<ResultRow>,
}

pub fn to_json_string(doc: &ResultDocument) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

pub fn read_json(text: &str) -> Result<ResultDocument> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

/// Writes `doc` to `path` in `format`.
pub fn emit_results(doc: &ResultDocument, path: impl AsRef<Path>, format: OutputFormat) -> Result<()> {
    if doc.results.is_empty() {
        return Err(Error::Invariant("result table is empty".into()));
    }
    let text = match format {
        OutputFormat::Csv => to_csv_string(&doc.results)?,
        OutputFormat::Json => to_json_string(doc)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}
