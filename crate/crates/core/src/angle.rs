//! Angle inputs: bare numbers are radians; strings may carry an explicit
//! `deg` or `rad` suffix ("90deg", "1.5708rad").

use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};

pub fn parse(text: &str) -> Result<f64> {
    let t = text.trim();
    let (body, scale) = if let Some(b) = t.strip_suffix("deg") {
        (b, std::f64::consts::PI / 180.0)
    } else if let Some(b) = t.strip_suffix("rad") {
        (b, 1.0)
    } else {
        (t, 1.0)
    };
    let v: f64 = body
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse angle {text:?}")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("angle {text:?} is not finite")));
    }
    Ok(v * scale)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawAngle {
    Number(f64),
    Text(String),
}

/// `deserialize_with` helper accepting either a number (radians) or a suffixed string.
pub fn de<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    match RawAngle::deserialize(d)? {
        RawAngle::Number(v) => Ok(v),
        RawAngle::Text(s) => parse(&s).map_err(serde::de::Error::custom),
    }
}

pub fn de_opt<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    match Option::<RawAngle>::deserialize(d)? {
        None => Ok(None),
        Some(RawAngle::Number(v)) => Ok(Some(v)),
        Some(RawAngle::Text(s)) => parse(&s).map(Some).map_err(serde::de::Error::custom),
    }
}
