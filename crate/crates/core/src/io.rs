//! Deterministic text output: fixed scientific float format and CSV tables.

use std::io::Write;

/// C-style `%.12e`, e.g. `1.500000000000e+00`. Non-finite values print as `inf`, `-inf`, `nan`.
pub fn fmt_e12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Writes a header row and data rows with comma separators and LF line endings.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
