//! CSV and JSON writers. CSV uses commas, LF line endings, a header row and
//! nine significant digits; JSON is pretty-printed in struct field order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

/// Format like C's `%.9g`.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Render a table with a header row.
pub fn csv_table<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (k, v) in row.as_ref().iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&sig9(*v));
        }
        out.push('\n');
    }
    out
}

/// Density grid with idler wavelengths across the top and signal
/// wavelengths down the first column, both in nm.
pub fn csv_grid(corner: &str, columns: &[f64], rows: &[f64], values: &[f64]) -> String {
    let n = columns.len();
    let mut out = String::with_capacity(rows.len() * n * 16);
    out.push_str(corner);
    for c in columns {
        let _ = write!(out, ",{}", sig9(*c));
    }
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&sig9(*r));
        for v in &values[i * n..(i + 1) * n] {
            let _ = write!(out, ",{}", sig9(*v));
        }
        out.push('\n');
    }
    out
}

pub fn json_document<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    fs::write(path, text.as_bytes())
}
