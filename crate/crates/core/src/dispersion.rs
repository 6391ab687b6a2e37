//! Temperature-dependent refractive indices of KTP along its Y and Z axes.
//!
//! The room-temperature index follows a generalized Sellmeier form
//!
//! ```text
//! n²(λ) = A + Σ_k B_k / (1 − C_k / λ²) − D·λ²        (λ in μm)
//! ```
//!
//! and the thermo-optic correction is a quadratic in `T − T_ref` whose
//! coefficients are each a cubic in `1/λ`:
//!
//! ```text
//! Δn(λ, T) = n₁(λ)·(T − T_ref) + n₂(λ)·(T − T_ref)²,   n_i(λ) = Σ_m a_{i,m} / λ^m
//! ```
//!
//! The embedded coefficient set can be swapped for any other set of the same
//! shape through [`SellmeierSet::from_json_str`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{wavelength_um_from_omega, SPEED_OF_LIGHT};

/// Default central-difference step on ω for [`Dispersion::group_derivative`], rad/ps.
pub const DEFAULT_DERIVATIVE_STEP: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error("{parameter} {value} is outside the validity window [{min}, {max}]")]
    OutOfRange {
        parameter: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("invalid coefficient set: {0}")]
    InvalidSet(String),
    #[error("coefficient file rejected at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

/// Principal dielectric axis of the crystal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpticalAxis {
    Y,
    Z,
}

impl fmt::Display for OpticalAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpticalAxis::Y => write!(f, "Y"),
            OpticalAxis::Z => write!(f, "Z"),
        }
    }
}

impl FromStr for OpticalAxis {
    type Err = DispersionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Y" | "y" => Ok(OpticalAxis::Y),
            "Z" | "z" => Ok(OpticalAxis::Z),
            other => Err(DispersionError::InvalidSet(format!(
                "unknown optical axis `{other}` (expected Y or Z)"
            ))),
        }
    }
}

/// One resonance term `strength / (1 − resonance_um2 / λ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierPole {
    pub strength: f64,
    pub resonance_um2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierTerms {
    pub constant: f64,
    pub poles: Vec<SellmeierPole>,
    /// Coefficient of the `−D·λ²` infrared correction, μm⁻².
    pub infrared: f64,
}

impl SellmeierTerms {
    fn index(&self, wavelength_um: f64) -> f64 {
        let l2 = wavelength_um * wavelength_um;
        let poles: f64 = self
            .poles
            .iter()
            .map(|p| p.strength / (1.0 - p.resonance_um2 / l2))
            .sum();
        (self.constant + poles - self.infrared * l2).sqrt()
    }
}

/// Coefficients `a_m` of `Σ_m a_m / λ^m` for the linear and quadratic
/// temperature terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoOptic {
    pub linear: Vec<f64>,
    pub quadratic: Vec<f64>,
}

fn inverse_power_series(coeffs: &[f64], wavelength_um: f64) -> f64 {
    let inv = 1.0 / wavelength_um;
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * inv + a)
}

impl ThermoOptic {
    fn correction(&self, wavelength_um: f64, dt: f64) -> f64 {
        inverse_power_series(&self.linear, wavelength_um) * dt
            + inverse_power_series(&self.quadratic, wavelength_um) * dt * dt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisCoefficients {
    pub sellmeier: SellmeierTerms,
    pub thermo_optic: ThermoOptic,
}

/// A complete, versioned coefficient set for the Y and Z axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SellmeierSet {
    pub provenance: String,
    /// Temperature at which the thermo-optic correction vanishes, °C.
    pub reference_temperature_c: f64,
    pub wavelength_range_um: [f64; 2],
    pub temperature_range_c: [f64; 2],
    pub y: AxisCoefficients,
    pub z: AxisCoefficients,
}

impl SellmeierSet {
    /// Embedded KTP set.
    ///
    /// n_y: König & Wong, Appl. Phys. Lett. 84, 1644 (2004).
    /// n_z: Fradkin et al., Appl. Phys. Lett. 74, 914 (1999).
    /// Thermo-optic: Emanueli & Arie, Appl. Opt. 42, 6661 (2003), T_ref = 25 °C.
    pub fn ktp() -> Self {
        Self {
            provenance: "KTP v1: n_y König & Wong APL 84 1644 (2004); \
                         n_z Fradkin et al. APL 74 914 (1999); \
                         dn/dT Emanueli & Arie Appl. Opt. 42 6661 (2003)"
                .to_string(),
            reference_temperature_c: 25.0,
            wavelength_range_um: [0.4, 3.5],
            temperature_range_c: [10.0, 200.0],
            y: AxisCoefficients {
                sellmeier: SellmeierTerms {
                    constant: 2.09930,
                    poles: vec![SellmeierPole {
                        strength: 0.922683,
                        resonance_um2: 0.0467695,
                    }],
                    infrared: 0.0138408,
                },
                thermo_optic: ThermoOptic {
                    linear: vec![6.2897e-6, 6.3061e-6, -6.0629e-6, 2.6486e-6],
                    quadratic: vec![-0.14445e-8, 2.2244e-8, -3.5770e-8, 1.3470e-8],
                },
            },
            z: AxisCoefficients {
                sellmeier: SellmeierTerms {
                    constant: 2.12725,
                    poles: vec![
                        SellmeierPole {
                            strength: 1.18431,
                            resonance_um2: 5.14852e-2,
                        },
                        SellmeierPole {
                            strength: 0.6603,
                            resonance_um2: 100.00507,
                        },
                    ],
                    infrared: 9.68956e-3,
                },
                thermo_optic: ThermoOptic {
                    linear: vec![9.9587e-6, 9.9228e-6, -8.9603e-6, 4.1010e-6],
                    quadratic: vec![-1.1882e-8, 10.459e-8, -9.8136e-8, 3.1481e-8],
                },
            },
        }
    }

    /// Parse and validate a coefficient override document.
    pub fn from_json_str(text: &str) -> Result<Self, DispersionError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let set: SellmeierSet = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            DispersionError::Parse {
                line: inner.line(),
                column: inner.column(),
                message: if path.is_empty() || path == "." {
                    inner.to_string()
                } else {
                    format!("field `{path}`: {inner}")
                },
            }
        })?;
        set.validate()?;
        Ok(set)
    }

    pub fn axis(&self, axis: OpticalAxis) -> &AxisCoefficients {
        match axis {
            OpticalAxis::Y => &self.y,
            OpticalAxis::Z => &self.z,
        }
    }

    /// Check the structural invariants and sample every axis across the
    /// validity window to make sure the index stays inside (1.0, 2.5).
    pub fn validate(&self) -> Result<(), DispersionError> {
        let invalid = |m: String| Err(DispersionError::InvalidSet(m));
        if self.provenance.trim().is_empty() {
            return invalid("provenance must be non-empty".into());
        }
        let [l0, l1] = self.wavelength_range_um;
        let [t0, t1] = self.temperature_range_c;
        if !(l0.is_finite() && l1.is_finite() && 0.0 < l0 && l0 < l1) {
            return invalid(format!("bad wavelength_range_um [{l0}, {l1}]"));
        }
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return invalid(format!("bad temperature_range_c [{t0}, {t1}]"));
        }
        if !self.reference_temperature_c.is_finite() {
            return invalid("reference_temperature_c must be finite".into());
        }
        const NL: usize = 64;
        const NT: usize = 16;
        for axis in [OpticalAxis::Y, OpticalAxis::Z] {
            for a in 0..=NL {
                let l = l0 + (l1 - l0) * a as f64 / NL as f64;
                for b in 0..=NT {
                    let t = t0 + (t1 - t0) * b as f64 / NT as f64;
                    let n = self.index_unchecked(axis, l, t);
                    if !(n.is_finite() && n > 1.0 && n < 2.5) {
                        return invalid(format!(
                            "axis {axis}: index {n} at {l} um, {t} C is outside (1.0, 2.5)"
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Thermo-optic correction Δn alone.
    pub fn thermo_optic_correction(
        &self,
        axis: OpticalAxis,
        wavelength_um: f64,
        temperature_c: f64,
    ) -> f64 {
        self.axis(axis)
            .thermo_optic
            .correction(wavelength_um, temperature_c - self.reference_temperature_c)
    }

    fn index_unchecked(&self, axis: OpticalAxis, wavelength_um: f64, temperature_c: f64) -> f64 {
        self.axis(axis).sellmeier.index(wavelength_um)
            + self.thermo_optic_correction(axis, wavelength_um, temperature_c)
    }
}

impl Default for SellmeierSet {
    fn default() -> Self {
        Self::ktp()
    }
}

/// A source of refractive indices. Angular frequencies are rad/ps.
pub trait Dispersion: Send + Sync {
    /// Index at a wavelength in μm.
    fn index_um(
        &self,
        axis: OpticalAxis,
        wavelength_um: f64,
        temperature_c: f64,
    ) -> Result<f64, DispersionError>;

    fn refractive_index(
        &self,
        axis: OpticalAxis,
        wavelength_nm: f64,
        temperature_c: f64,
    ) -> Result<f64, DispersionError> {
        self.index_um(axis, wavelength_nm * 1e-3, temperature_c)
    }

    /// k = n·ω/c in rad/μm.
    fn propagation_constant(
        &self,
        axis: OpticalAxis,
        omega: f64,
        temperature_c: f64,
    ) -> Result<f64, DispersionError> {
        let n = self.index_um(axis, wavelength_um_from_omega(omega), temperature_c)?;
        Ok(n * omega / SPEED_OF_LIGHT)
    }

    /// dk/dω in ps/μm by central difference with the default step.
    fn group_derivative(
        &self,
        axis: OpticalAxis,
        omega: f64,
        temperature_c: f64,
    ) -> Result<f64, DispersionError> {
        self.group_derivative_with_step(axis, omega, temperature_c, DEFAULT_DERIVATIVE_STEP)
    }

    fn group_derivative_with_step(
        &self,
        axis: OpticalAxis,
        omega: f64,
        temperature_c: f64,
        step: f64,
    ) -> Result<f64, DispersionError> {
        let k = |w: f64| {
            self.propagation_constant(axis, w, temperature_c)
                .map_err(|e| match e {
                    DispersionError::OutOfRange {
                        value, min, max, ..
                    } => DispersionError::OutOfRange {
                        parameter: "wavelength (derivative stencil)",
                        value,
                        min,
                        max,
                    },
                    other => other,
                })
        };
        Ok((k(omega + step)? - k(omega - step)?) / (2.0 * step))
    }
}

impl Dispersion for SellmeierSet {
    fn index_um(
        &self,
        axis: OpticalAxis,
        wavelength_um: f64,
        temperature_c: f64,
    ) -> Result<f64, DispersionError> {
        let [l0, l1] = self.wavelength_range_um;
        if !(wavelength_um >= l0 && wavelength_um <= l1) {
            return Err(DispersionError::OutOfRange {
                parameter: "wavelength [um]",
                value: wavelength_um,
                min: l0,
                max: l1,
            });
        }
        let [t0, t1] = self.temperature_range_c;
        if !(temperature_c >= t0 && temperature_c <= t1) {
            return Err(DispersionError::OutOfRange {
                parameter: "temperature [C]",
                value: temperature_c,
                min: t0,
                max: t1,
            });
        }
        Ok(self.index_unchecked(axis, wavelength_um, temperature_c))
    }
}

/// Dispersionless medium with a fixed index per axis. Test fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantIndex {
    pub y: f64,
    pub z: f64,
}

impl ConstantIndex {
    pub fn uniform(n: f64) -> Self {
        Self { y: n, z: n }
    }
}

impl Dispersion for ConstantIndex {
    fn index_um(
        &self,
        axis: OpticalAxis,
        _wavelength_um: f64,
        _temperature_c: f64,
    ) -> Result<f64, DispersionError> {
        Ok(match axis {
            OpticalAxis::Y => self.y,
            OpticalAxis::Z => self.z,
        })
    }
}
