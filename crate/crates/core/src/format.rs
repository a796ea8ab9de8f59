//! 17-significant-digit float formatting shared by every text and JSON output.

use serde::Serializer;
use serde_json::value::RawValue;

/// Formats a float with 17 significant digits, which round-trips any `f64`.
///
/// Non-finite values are written as `NaN`, `inf` and `-inf`; callers that
/// emit JSON must reject them first.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Serializes an `f64` as a 17-significant-digit JSON number literal.
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::{Error, Serialize};
    if !x.is_finite() {
        return Err(S::Error::custom(format!("non-finite value {x}")));
    }
    let raw = RawValue::from_string(fmt17(*x)).map_err(S::Error::custom)?;
    raw.serialize(s)
}

/// Serializes a float sequence with [`ser_f64`].
pub fn ser_f64_seq<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|&x| Dec17(x)))
}

/// Wrapper that serializes through [`ser_f64`] and deserializes as a plain
/// number.
#[derive(Clone, Copy, Debug, PartialEq, serde::Deserialize)]
#[serde(transparent)]
pub struct Dec17(pub f64);

impl serde::Serialize for Dec17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_f64(&self.0, s)
    }
}
