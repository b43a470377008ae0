//! Touchstone v1 (`.sNp`) reader and writer for S-parameter blocks.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

const TARGET_HZ: f64 = 2.4e9;
const MAX_REL_OFFSET: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TouchstoneFormat {
    Ri,
    Ma,
    Db,
}

impl TouchstoneFormat {
    fn keyword(self) -> &'static str {
        match self {
            Self::Ri => "RI",
            Self::Ma => "MA",
            Self::Db => "DB",
        }
    }

    fn decode(self, x: f64, y: f64) -> Complex64 {
        match self {
            Self::Ri => Complex64::new(x, y),
            Self::Ma => Complex64::from_polar(x, y.to_radians()),
            Self::Db => Complex64::from_polar(10f64.powf(x / 20.0), y.to_radians()),
        }
    }

    fn encode(self, z: Complex64) -> (f64, f64) {
        match self {
            Self::Ri => (z.re, z.im),
            Self::Ma => (z.norm(), z.arg().to_degrees()),
            Self::Db => (20.0 * z.norm().log10(), z.arg().to_degrees()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TouchstoneData {
    pub matrix: CMatrix,
    pub z0: f64,
    pub frequency_hz: f64,
    pub format: TouchstoneFormat,
}

fn port_count(path: &Path) -> Result<usize> {
    let ext = path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).unwrap_or_default();
    ext.strip_prefix('s')
        .and_then(|r| r.strip_suffix('p'))
        .and_then(|n| n.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Touchstone {
            line: 0,
            message: format!("cannot infer port count from extension of {}", path.display()),
        })
}

pub fn load_touchstone(path: impl AsRef<Path>) -> Result<TouchstoneData> {
    let path = path.as_ref();
    let ports = port_count(path)?;
    let text = std::fs::read_to_string(path)?;
    parse_touchstone(&text, ports)
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Touchstone { line, message: message.into() }
}

/// Parses Touchstone v1 text for an `ports`-port network and returns the matrix at
/// the frequency point nearest 2.4 GHz.
pub fn parse_touchstone(text: &str, ports: usize) -> Result<TouchstoneData> {
    let mut freq_scale = 1e9;
    let mut format = TouchstoneFormat::Ma;
    let mut z0 = 50.0;
    let mut seen_option = false;
    // (line number, token, first token on its line)
    let mut tokens: Vec<(usize, f64, bool)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if seen_option {
                return Err(parse_error(lineno, "duplicate option line"));
            }
            seen_option = true;
            let words: Vec<String> = rest.split_whitespace().map(|w| w.to_ascii_uppercase()).collect();
            let mut i = 0;
            while i < words.len() {
                match words[i].as_str() {
                    "HZ" => freq_scale = 1.0,
                    "KHZ" => freq_scale = 1e3,
                    "MHZ" => freq_scale = 1e6,
                    "GHZ" => freq_scale = 1e9,
                    "S" => {}
                    "Y" | "Z" | "H" | "G" => {
                        return Err(parse_error(lineno, format!("only S parameters are supported, got {}", words[i])))
                    }
                    "RI" => format = TouchstoneFormat::Ri,
                    "MA" => format = TouchstoneFormat::Ma,
                    "DB" => format = TouchstoneFormat::Db,
                    "R" => {
                        i += 1;
                        z0 = words
                            .get(i)
                            .and_then(|w| w.parse::<f64>().ok())
                            .filter(|v| *v > 0.0)
                            .ok_or_else(|| parse_error(lineno, "option R needs a positive reference impedance"))?;
                    }
                    other => return Err(parse_error(lineno, format!("unknown option `{other}`"))),
                }
                i += 1;
            }
            continue;
        }
        for (k, tok) in line.split_whitespace().enumerate() {
            let v = tok.parse::<f64>().map_err(|_| parse_error(lineno, format!("invalid number `{tok}`")))?;
            tokens.push((lineno, v, k == 0));
        }
    }

    let record = 1 + 2 * ports * ports;
    if tokens.is_empty() {
        return Err(parse_error(text.lines().count(), "no data records"));
    }
    let mut best: Option<(f64, usize, &[(usize, f64, bool)])> = None;
    for chunk in tokens.chunks(record) {
        let (lineno, f, first) = chunk[0];
        if chunk.len() != record {
            return Err(parse_error(
                lineno,
                format!("record has {} values, expected {record} for {ports} ports", chunk.len()),
            ));
        }
        if !first {
            return Err(parse_error(lineno, "record does not start on a new line"));
        }
        if ports <= 2 {
            if let Some(stray) = chunk.iter().find(|t| t.0 != lineno) {
                return Err(parse_error(stray.0, "record of a 1- or 2-port file spans several lines"));
            }
        }
        let hz = f * freq_scale;
        let offset = (hz - TARGET_HZ).abs();
        if best.map_or(true, |(o, _, _)| offset < o) {
            best = Some((offset, lineno, chunk));
        }
    }
    let (offset, lineno, chunk) = best.expect("at least one record");
    if offset > MAX_REL_OFFSET * TARGET_HZ {
        return Err(parse_error(
            lineno,
            format!("nearest frequency {} Hz is more than 10% away from 2.4 GHz", chunk[0].1 * freq_scale),
        ));
    }
    let mut matrix = CMatrix::zeros(ports, ports);
    for k in 0..ports * ports {
        let (i, j) = if ports == 2 { (k % 2, k / 2) } else { (k / ports, k % ports) };
        matrix[(i, j)] = format.decode(chunk[1 + 2 * k].1, chunk[2 + 2 * k].1);
    }
    Ok(TouchstoneData { matrix, z0, frequency_hz: chunk[0].1 * freq_scale, format })
}

/// Writes a single-frequency Touchstone v1 file with 17 significant digits.
pub fn write_touchstone(
    path: impl AsRef<Path>,
    matrix: &CMatrix,
    z0: f64,
    frequency_hz: f64,
    format: TouchstoneFormat,
) -> Result<()> {
    let n = matrix.nrows();
    if matrix.ncols() != n || n == 0 {
        return Err(Error::Dimension(format!("touchstone matrix must be square, got {:?}", matrix.shape())));
    }
    let mut out = String::new();
    let _ = writeln!(out, "! {n}-port S-parameters");
    let _ = writeln!(out, "# GHz S {} R {z0}", format.keyword());
    let _ = write!(out, "{:.16e}", frequency_hz / 1e9);
    for k in 0..n * n {
        let (i, j) = if n == 2 { (k % 2, k / 2) } else { (k / n, k % n) };
        let (x, y) = format.encode(matrix[(i, j)]);
        if n >= 3 && k > 0 && k % 4 == 0 {
            out.push('\n');
        }
        let _ = write!(out, " {x:.16e} {y:.16e}");
    }
    out.push('\n');
    std::fs::write(path, out)?;
    Ok(())
}
