//! Run configuration: a strict JSON document whose every field has a
//! default, so `{}` reproduces the reference source.

use std::fmt;
use std::path::PathBuf;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::dispersion::SellmeierSet;
use crate::jsa::{PhaseMatchModel, PumpSpec};
use crate::phasematch::{AxisAssignment, ConversionType, QpmSign};
use crate::shg::CavitySpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("malformed JSON at byte {offset} (line {line}, column {column}): {message}")]
    Malformed {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    fn invalid(path: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

/// Crystal temperature: a fixed value or the solved degenerate point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TemperatureSetting {
    #[default]
    Degenerate,
    Celsius(f64),
}

impl Serialize for TemperatureSetting {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Degenerate => s.serialize_str("degenerate"),
            Self::Celsius(t) => s.serialize_f64(*t),
        }
    }
}

impl<'de> Deserialize<'de> for TemperatureSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = TemperatureSetting;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a temperature in degrees Celsius or \"degenerate\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                if v == "degenerate" {
                    Ok(TemperatureSetting::Degenerate)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(TemperatureSetting::Celsius(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(TemperatureSetting::Celsius(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(TemperatureSetting::Celsius(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum QpmChoice {
    #[default]
    #[serde(rename = "auto")]
    Auto,
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl QpmChoice {
    pub fn fixed(self) -> Option<QpmSign> {
        match self {
            Self::Auto => None,
            Self::Plus => Some(QpmSign::Plus),
            Self::Minus => Some(QpmSign::Minus),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrystalConfig {
    pub length_mm: f64,
    pub poling_period_um: f64,
    pub temperature_c: TemperatureSetting,
    pub qpm_sign: QpmChoice,
    pub conversion: ConversionType,
    /// Defaults to the standard assignment for `conversion`.
    pub axes: Option<AxisAssignment>,
    pub pm_model: PhaseMatchModel,
}

impl Default for CrystalConfig {
    fn default() -> Self {
        Self {
            length_mm: 10.0,
            poling_period_um: 46.146,
            temperature_c: TemperatureSetting::Degenerate,
            qpm_sign: QpmChoice::Auto,
            conversion: ConversionType::TypeII,
            axes: None,
            pm_model: PhaseMatchModel::Exact,
        }
    }
}

impl CrystalConfig {
    pub fn axes(&self) -> AxisAssignment {
        self.axes.unwrap_or(match self.conversion {
            ConversionType::TypeII => AxisAssignment::TYPE_II,
            ConversionType::TypeI => AxisAssignment::TYPE_I,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityConfig {
    pub r1: f64,
    pub t1: f64,
    pub r2: f64,
    pub t2: f64,
    pub t2sh: f64,
    pub delta: f64,
    /// 1/W; `null` calibrates against (`input_power_w`, `pump.power_w`).
    pub gamma_sh: Option<f64>,
    pub input_power_w: f64,
    pub curve_max_w: f64,
    pub curve_points: usize,
}

impl Default for CavityConfig {
    fn default() -> Self {
        let c = CavitySpec::default();
        Self {
            r1: c.r1,
            t1: c.t1,
            r2: c.r2,
            t2: c.t2,
            t2sh: c.t2sh,
            delta: c.delta,
            gamma_sh: None,
            input_power_w: 1.41,
            curve_max_w: 1.5,
            curve_points: 151,
        }
    }
}

impl CavityConfig {
    /// Cavity with `gamma_sh` set to zero when it is to be calibrated.
    pub fn spec(&self) -> CavitySpec {
        CavitySpec {
            r1: self.r1,
            t1: self.t1,
            r2: self.r2,
            t2: self.t2,
            t2sh: self.t2sh,
            delta: self.delta,
            gamma_sh: self.gamma_sh.unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Distance from the degenerate wavelength to the blue grid edge.
    pub half_span_nm: f64,
    pub points_per_axis: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_span_nm: 6.0,
            points_per_axis: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomConfig {
    pub delay_span_ps: f64,
    pub points: usize,
}

impl Default for HomConfig {
    fn default() -> Self {
        Self {
            delay_span_ps: 10.0,
            points: 2001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstrumentConfig {
    /// `null` fits the bandwidth to `measured_marginal_fwhm_nm`.
    pub rbw_nm: Option<f64>,
    pub measured_marginal_fwhm_nm: f64,
    pub measured_coincidence_nm: f64,
}

impl Default for InstrumentConfig {
    fn default() -> Self {
        Self {
            rbw_nm: None,
            measured_marginal_fwhm_nm: 3.22,
            measured_coincidence_nm: 0.52,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub crystal: CrystalConfig,
    pub pump: PumpSpec,
    pub cavity: CavityConfig,
    pub grid: GridConfig,
    pub hom: HomConfig,
    pub instrument: InstrumentConfig,
    pub output_dir: PathBuf,
    /// Inline coefficient set replacing the embedded one.
    pub sellmeier: Option<SellmeierSet>,
    /// Path to a coefficient set document.
    pub sellmeier_file: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            crystal: CrystalConfig::default(),
            pump: PumpSpec::default(),
            cavity: CavityConfig::default(),
            grid: GridConfig::default(),
            hom: HomConfig::default(),
            instrument: InstrumentConfig::default(),
            output_dir: PathBuf::from("out"),
            sellmeier: None,
            sellmeier_file: None,
        }
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (start + column.saturating_sub(1)).min(text.len())
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    if let Err(e) = serde_json::from_str::<serde_json::Value>(text) {
        return Err(ConfigError::Malformed {
            offset: byte_offset(text, e.line(), e.column()),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        });
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let mut message = inner.to_string();
        // Drop serde_json's position suffix; the path locates the problem.
        if let Some(cut) = message.rfind(" at line ") {
            message.truncate(cut);
        }
        ConfigError::Invalid {
            path: if path == "." { "(root)".into() } else { path },
            message,
        }
    })?;
    config.validate()?;
    Ok(config)
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(path, format!("must be > 0, got {v}")))
    }
}

fn fraction(path: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::invalid(
            path,
            format!("must lie in [0, 1], got {v}"),
        ))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.crystal;
        positive("crystal.length_mm", c.length_mm)?;
        positive("crystal.poling_period_um", c.poling_period_um)?;
        if let TemperatureSetting::Celsius(t) = c.temperature_c {
            if !t.is_finite() {
                return Err(ConfigError::invalid(
                    "crystal.temperature_c",
                    "must be finite",
                ));
            }
        }
        let axes = c.axes();
        let consistent = match c.conversion {
            ConversionType::TypeII => axes.signal != axes.idler,
            ConversionType::TypeI => axes.signal == axes.idler,
        };
        if !consistent {
            return Err(ConfigError::invalid(
                "crystal.axes",
                "signal/idler axes do not match the conversion type",
            ));
        }

        let p = &self.pump;
        positive("pump.center_wavelength_nm", p.center_wavelength_nm)?;
        positive("pump.bandwidth_3db_nm", p.bandwidth_3db_nm)?;
        if p.bandwidth_3db_nm >= p.center_wavelength_nm {
            return Err(ConfigError::invalid(
                "pump.bandwidth_3db_nm",
                "must be smaller than the center wavelength",
            ));
        }
        if !(p.power_w.is_finite() && p.power_w >= 0.0) {
            return Err(ConfigError::invalid(
                "pump.power_w",
                format!("must be >= 0, got {}", p.power_w),
            ));
        }

        let k = &self.cavity;
        fraction("cavity.r1", k.r1)?;
        fraction("cavity.t1", k.t1)?;
        fraction("cavity.r2", k.r2)?;
        fraction("cavity.t2", k.t2)?;
        fraction("cavity.t2sh", k.t2sh)?;
        if k.r1 + k.t1 > 1.0 + 1e-12 {
            return Err(ConfigError::invalid(
                "cavity.r1",
                "r1 + t1 must not exceed 1",
            ));
        }
        if k.r2 + k.t2 > 1.0 + 1e-12 {
            return Err(ConfigError::invalid(
                "cavity.r2",
                "r2 + t2 must not exceed 1",
            ));
        }
        if !(0.0..1.0).contains(&k.delta) {
            return Err(ConfigError::invalid(
                "cavity.delta",
                format!("must lie in [0, 1), got {}", k.delta),
            ));
        }
        if let Some(g) = k.gamma_sh {
            if !(g.is_finite() && g >= 0.0) {
                return Err(ConfigError::invalid(
                    "cavity.gamma_sh",
                    format!("must be >= 0, got {g}"),
                ));
            }
        }
        positive("cavity.input_power_w", k.input_power_w)?;
        positive("cavity.curve_max_w", k.curve_max_w)?;
        if k.curve_points < 2 {
            return Err(ConfigError::invalid("cavity.curve_points", "must be >= 2"));
        }

        let g = &self.grid;
        if g.points_per_axis < 64 || !g.points_per_axis.is_multiple_of(2) {
            return Err(ConfigError::invalid(
                "grid.points_per_axis",
                format!("must be even and >= 64, got {}", g.points_per_axis),
            ));
        }
        positive("grid.half_span_nm", g.half_span_nm)?;
        if g.half_span_nm >= 2.0 * p.center_wavelength_nm {
            return Err(ConfigError::invalid(
                "grid.half_span_nm",
                "must be smaller than the degenerate wavelength",
            ));
        }

        positive("hom.delay_span_ps", self.hom.delay_span_ps)?;
        if self.hom.points < 5 || self.hom.points.is_multiple_of(2) {
            return Err(ConfigError::invalid(
                "hom.points",
                format!("must be odd and >= 5, got {}", self.hom.points),
            ));
        }

        let i = &self.instrument;
        if let Some(r) = i.rbw_nm {
            if !(r.is_finite() && r >= 0.0) {
                return Err(ConfigError::invalid(
                    "instrument.rbw_nm",
                    format!("must be >= 0, got {r}"),
                ));
            }
        }
        positive(
            "instrument.measured_marginal_fwhm_nm",
            i.measured_marginal_fwhm_nm,
        )?;
        positive(
            "instrument.measured_coincidence_nm",
            i.measured_coincidence_nm,
        )?;

        if self.output_dir.as_os_str().is_empty() {
            return Err(ConfigError::invalid("output_dir", "must be non-empty"));
        }
        if self.sellmeier.is_some() && self.sellmeier_file.is_some() {
            return Err(ConfigError::invalid(
                "sellmeier_file",
                "cannot be combined with an inline `sellmeier` set",
            ));
        }
        if let Some(set) = &self.sellmeier {
            set.validate()
                .map_err(|e| ConfigError::invalid("sellmeier", e.to_string()))?;
        }
        Ok(())
    }

    /// The coefficient set in effect, loading `sellmeier_file` if given.
    pub fn sellmeier_set(&self) -> Result<SellmeierSet, ConfigError> {
        if let Some(set) = &self.sellmeier {
            return Ok(set.clone());
        }
        if let Some(path) = &self.sellmeier_file {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            return SellmeierSet::from_json_str(&text)
                .map_err(|e| ConfigError::invalid("sellmeier_file", e.to_string()));
        }
        Ok(SellmeierSet::ktp())
    }

    pub fn defaults_json() -> String {
        let mut s = serde_json::to_string_pretty(&Self::default()).expect("config serializes");
        s.push('\n');
        s
    }
}
