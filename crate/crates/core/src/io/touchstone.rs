//! Two-port Touchstone v1 (`.s2p`) reading and writing.

use super::IoError;
use crate::resonator::SParamRecord;
use crate::spin::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Format {
    Ri,
    Ma,
    Db,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OptionLine {
    /// Multiplier from file units to MHz.
    to_mhz: f64,
    format: Format,
    z0: f64,
}

fn parse_option_line(line: &str, line_no: usize) -> Result<OptionLine, IoError> {
    let bad = || IoError::BadOptionLine(line_no);
    // defaults per the v1 format: GHz S MA R 50
    let mut opt = OptionLine {
        to_mhz: 1e3,
        format: Format::Ma,
        z0: 50.0,
    };
    let mut tokens = line.trim_start_matches('#').split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => opt.to_mhz = 1e-6,
            "KHZ" => opt.to_mhz = 1e-3,
            "MHZ" => opt.to_mhz = 1.0,
            "GHZ" => opt.to_mhz = 1e3,
            "S" => {}
            "Y" | "Z" | "H" | "G" => return Err(bad()),
            "RI" => opt.format = Format::Ri,
            "MA" => opt.format = Format::Ma,
            "DB" => opt.format = Format::Db,
            "R" => {
                opt.z0 = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
                if !(opt.z0 > 0.0) {
                    return Err(bad());
                }
            }
            _ => return Err(bad()),
        }
    }
    Ok(opt)
}

fn to_complex(a: f64, b: f64, format: Format) -> C64 {
    match format {
        Format::Ri => C64::new(a, b),
        Format::Ma => C64::from_polar(a, b.to_radians()),
        Format::Db => C64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
    }
}

/// Parse two-port Touchstone v1 text into an [`SParamRecord`] in MHz with
/// complex linear S-parameters.
pub fn parse_touchstone(text: &str) -> Result<SParamRecord, IoError> {
    let mut opt: Option<OptionLine> = None;
    let mut freqs = Vec::new();
    let mut s = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            return Err(IoError::Unsupported(format!(
                "line {line_no}: keyword `{line}` (only Touchstone v1 is supported)"
            )));
        }
        if line.starts_with('#') {
            if opt.is_some() || !freqs.is_empty() {
                return Err(IoError::BadOptionLine(line_no));
            }
            opt = Some(parse_option_line(line, line_no)?);
            continue;
        }
        let o = opt.ok_or(IoError::BadOptionLine(line_no))?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| IoError::BadRow(line_no))?;
        if vals.len() != 9 || vals.iter().any(|v| !v.is_finite()) {
            return Err(IoError::BadRow(line_no));
        }
        let f = vals[0] * o.to_mhz;
        if freqs.last().is_some_and(|&last| !(f > last)) {
            return Err(IoError::NonMonotoneGrid(line_no));
        }
        freqs.push(f);
        // column order: S11 S21 S12 S22
        for (k, col) in s.iter_mut().enumerate() {
            col.push(to_complex(vals[1 + 2 * k], vals[2 + 2 * k], o.format));
        }
    }
    let o = opt.ok_or(IoError::BadOptionLine(1))?;
    let [s11, s21, s12, s22] = s;
    let mut rec = SParamRecord::new(freqs, s21, "touchstone");
    rec.s11 = Some(s11);
    rec.s12 = Some(s12);
    rec.s22 = Some(s22);
    rec.z0 = o.z0;
    Ok(rec)
}

/// Emit `rec` as `# MHz S RI R <z0>`. Missing parameters are written as 0.
/// Numbers use the shortest exact representation, so parsing the output
/// reproduces the record bit for bit.
pub fn write_touchstone(rec: &SParamRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!("! {}\n", rec.source.replace('\n', " ")));
    out.push_str(&format!("# MHz S RI R {}\n", rec.z0));
    let zero = C64::new(0.0, 0.0);
    let get = |v: &Option<Vec<C64>>, i: usize| v.as_ref().map_or(zero, |v| v[i]);
    for (i, f) in rec.freqs.iter().enumerate() {
        let cols = [get(&rec.s11, i), rec.s21[i], get(&rec.s12, i), get(&rec.s22, i)];
        out.push_str(&format!("{f:e}"));
        for c in cols {
            out.push_str(&format!(" {:e} {:e}", c.re, c.im));
        }
        out.push('\n');
    }
    out
}
