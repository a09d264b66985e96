//! Flat key-value configuration files.
//!
//! A config file is a TOML table whose keys are parameter names. Values are
//! either bare numbers (SI, angular frequencies in rad/s) or strings carrying
//! a unit suffix:
//!
//! ```toml
//! cavity_length = "1 mm"
//! wavelength = "1000 nm"
//! power = "50 mW"
//! mirror_freq = "10 MHz"     # ×2π → rad/s
//! mirror_damping = "100 Hz"
//! temperature = "100 mK"
//! finesse = 1.07e4
//! zeta_mc = 300              # rad/s
//! sign_convention = "paper"
//! ```

use std::path::Path;

use thiserror::Error;

use crate::constants::TWO_PI;
use crate::params::{
    Dimension, ModelOptions, ParamName, ParamsError, SignConvention, SystemParams,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("key `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error(transparent)]
    Params(#[from] ParamsError),
}

/// Parsed config contents before validation into [`SystemParams`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignments {
    pub values: Vec<(ParamName, f64)>,
    pub sign_convention: Option<SignConvention>,
}

impl Assignments {
    pub fn push(&mut self, name: ParamName, value: f64) {
        self.values.retain(|(n, _)| *n != name);
        self.values.push((name, value));
    }

    /// Later assignments win over earlier ones.
    pub fn merge(&mut self, other: Assignments) {
        for (n, v) in other.values {
            self.push(n, v);
        }
        if other.sign_convention.is_some() {
            self.sign_convention = other.sign_convention;
        }
    }

    pub fn into_params(self) -> Result<SystemParams, ParamsError> {
        let model = ModelOptions {
            sign_convention: self.sign_convention.unwrap_or_default(),
            ..ModelOptions::default()
        };
        SystemParams::from_assignments(self.values, model)
    }
}

pub fn load(path: &Path) -> Result<Assignments, ConfigError> {
    parse_str(&std::fs::read_to_string(path)?)
}

pub fn parse_str(text: &str) -> Result<Assignments, ConfigError> {
    let table: toml::Table = text.parse()?;
    let mut out = Assignments::default();
    for (key, value) in table {
        match key.as_str() {
            "sign_convention" => {
                let s = value
                    .as_str()
                    .ok_or_else(|| bad(&key, "expected \"paper\" or \"derived\""))?;
                out.sign_convention = Some(s.parse()?);
            }
            "paper_sign_convention" => {
                let b = value
                    .as_bool()
                    .ok_or_else(|| bad(&key, "expected a boolean"))?;
                out.sign_convention = Some(if b {
                    SignConvention::Paper
                } else {
                    SignConvention::Derived
                });
            }
            _ => {
                let name: ParamName = key.parse()?;
                let v = match &value {
                    toml::Value::Float(f) => *f,
                    toml::Value::Integer(i) => *i as f64,
                    toml::Value::String(s) => {
                        parse_quantity(s, name.dimension()).map_err(|m| bad(&key, &m))?
                    }
                    _ => return Err(bad(&key, "expected a number or a string with unit")),
                };
                out.push(name, v);
            }
        }
    }
    Ok(out)
}

fn bad(key: &str, msg: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        msg: msg.to_string(),
    }
}

/// Parse `"<number> [unit]"` into SI units (angular frequencies in rad/s).
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| c.is_alphabetic() && !is_exponent(text, i) || c == 'μ' || c == 'µ')
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse number `{}`", num.trim()))?;
    let unit = unit.trim();
    if unit.is_empty() {
        return Ok(value);
    }
    let factor =
        unit_factor(unit, dim).ok_or_else(|| format!("unit `{unit}` not valid for {dim:?}"))?;
    Ok(value * factor)
}

// `1e-3` style exponents: an `e`/`E` directly after a digit or '.' and followed by a digit or sign.
fn is_exponent(text: &str, i: usize) -> bool {
    let bytes = text.as_bytes();
    if !(bytes[i] == b'e' || bytes[i] == b'E') || i == 0 {
        return false;
    }
    let prev = bytes[i - 1];
    let next = bytes.get(i + 1).copied();
    (prev.is_ascii_digit() || prev == b'.') && matches!(next, Some(b'0'..=b'9' | b'+' | b'-'))
}

fn unit_factor(unit: &str, dim: Dimension) -> Option<f64> {
    let unit = unit.replace('µ', "u").replace('μ', "u");
    let f = match (dim, unit.as_str()) {
        (Dimension::AngularFrequency, "rad/s") => 1.0,
        (Dimension::AngularFrequency, "Hz") => TWO_PI,
        (Dimension::AngularFrequency, "kHz") => TWO_PI * 1e3,
        (Dimension::AngularFrequency, "MHz") => TWO_PI * 1e6,
        (Dimension::AngularFrequency, "GHz") => TWO_PI * 1e9,
        (Dimension::Length, "m") => 1.0,
        (Dimension::Length, "mm") => 1e-3,
        (Dimension::Length, "um") => 1e-6,
        (Dimension::Length, "nm") => 1e-9,
        (Dimension::Power, "W") => 1.0,
        (Dimension::Power, "mW") => 1e-3,
        (Dimension::Power, "uW") => 1e-6,
        (Dimension::Mass, "kg") => 1.0,
        (Dimension::Mass, "g") => 1e-3,
        (Dimension::Mass, "mg") => 1e-6,
        (Dimension::Mass, "ug") => 1e-9,
        (Dimension::Mass, "ng") => 1e-12,
        (Dimension::Mass, "pg") => 1e-15,
        (Dimension::Temperature, "K") => 1.0,
        (Dimension::Temperature, "mK") => 1e-3,
        (Dimension::Temperature, "uK") => 1e-6,
        (Dimension::Temperature, "nK") => 1e-9,
        _ => return None,
    };
    Some(f)
}
