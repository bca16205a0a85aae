//! Bound reports and deterministic JSON emission.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "reldom-report/1";

/// Absolute floor under which measured distances are treated as rounding noise.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Multiplicative slack for inequality checks.
pub const SLACK: f64 = 1.0 + 1e-6;

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `measured ≤ bound`.
    Upper,
    /// `measured ≥ bound`.
    Lower,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BoundReport {
    pub label: String,
    pub direction: Direction,
    pub bound: f64,
    pub measured: f64,
    pub margin: f64,
    pub skipped: bool,
    pub reason: Option<String>,
}

impl BoundReport {
    pub fn upper(label: &str, measured: f64, bound: f64) -> Self {
        BoundReport {
            label: label.to_string(),
            direction: Direction::Upper,
            bound,
            measured,
            margin: bound - measured,
            skipped: false,
            reason: None,
        }
    }

    pub fn lower(label: &str, measured: f64, bound: f64) -> Self {
        BoundReport {
            label: label.to_string(),
            direction: Direction::Lower,
            bound,
            measured,
            margin: measured - bound,
            skipped: false,
            reason: None,
        }
    }

    pub fn skip(label: &str, reason: impl Into<String>) -> Self {
        BoundReport {
            label: label.to_string(),
            direction: Direction::Upper,
            bound: f64::NAN,
            measured: f64::NAN,
            margin: f64::NAN,
            skipped: true,
            reason: Some(reason.into()),
        }
    }

    /// Skipped reports count as holding.
    pub fn holds(&self, slack: f64) -> bool {
        if self.skipped {
            return true;
        }
        match self.direction {
            Direction::Upper => self.measured <= self.bound * slack + NOISE_FLOOR,
            Direction::Lower => self.measured * slack + NOISE_FLOOR >= self.bound,
        }
    }

    pub fn violated(&self, slack: f64) -> bool {
        !self.holds(slack)
    }
}

/// Writes finite floats with 17 significant digits and non-finite ones as `null`.
struct Formatter17 {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

pub fn format_f64(value: f64) -> String {
    if !value.is_finite() {
        return "null".to_string();
    }
    if value == 0.0 {
        return if value.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    let exp = value.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(1) as usize;
        format!("{value:.decimals$}")
    } else {
        format!("{value:.16e}")
    }
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for Formatter17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        w.write_all(format_f64(value as f64).as_bytes())
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

/// Pretty JSON with a schema version field prepended.
pub fn to_json<T: Serialize>(kind: &str, value: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        schema_version: &'a str,
        kind: &'a str,
        crate_version: &'a str,
        report: &'a T,
    }
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        kind,
        crate_version: env!("CARGO_PKG_VERSION"),
        report: value,
    };
    let mut buf = Vec::new();
    let fmt = Formatter17 { inner: serde_json::ser::PrettyFormatter::with_indent(b"  ") };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    env.serialize(&mut ser).map_err(|e| Error::Invalid(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn emit<T: Serialize>(kind: &str, value: &T, path: Option<&Path>) -> Result<()> {
    let text = to_json(kind, value)?;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Input(format!("{}: {e}", p.display()))),
        None => {
            io::stdout().write_all(text.as_bytes()).map_err(|e| Error::Input(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, 1e-300, -2.5, 123456.789, 4f64.ln()] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_f64(0.1), "0.10000000000000001");
        assert_eq!(format_f64(f64::NAN), "null");
    }

    #[test]
    fn envelope_has_schema_and_parses() {
        let r = BoundReport::upper("x", 0.5, 1.0);
        let text = to_json("bound", &r).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["report"]["margin"].as_f64().unwrap(), 0.5);
    }

    #[test]
    fn bound_directions() {
        assert!(BoundReport::upper("u", 1.0, 1.0).holds(SLACK));
        assert!(BoundReport::upper("u", 1.1, 1.0).violated(SLACK));
        assert!(BoundReport::lower("l", 0.9, 1.0).violated(SLACK));
        assert!(BoundReport::skip("s", "why").holds(SLACK));
    }
}
