//! JSON output with every float written to 17 significant digits, so
//! doubles round-trip losslessly and repeated runs are byte-identical.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

use crate::error::Result;

/// `{:.16e}` rendering, e.g. `1.0000000000000000e0`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Compact layout; only float rendering differs from serde_json's default.
struct Float17;

impl Formatter for Float17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = Serializer::with_formatter(&mut out, Float17);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}
