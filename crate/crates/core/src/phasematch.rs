//! Quasi-phase-matched wavevector mismatch, its first-order expansion about
//! degeneracy, and the degenerate phase-matching temperature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{Dispersion, DispersionError, OpticalAxis};

/// Default temperature search bracket, °C.
pub const DEFAULT_TEMPERATURE_BRACKET: (f64, f64) = (15.0, 150.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseMatchError {
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error("invalid crystal: {0}")]
    InvalidCrystal(String),
    #[error(
        "no phase-matching temperature in range: dk0({t_low} C) = {dk_low} rad/um, \
         dk0({t_high} C) = {dk_high} rad/um"
    )]
    NoRoot {
        t_low: f64,
        t_high: f64,
        dk_low: f64,
        dk_high: f64,
    },
    #[error("neither grating sign phase-matches inside [{t_low}, {t_high}] C")]
    NoQpmSign { t_low: f64, t_high: f64 },
}

/// Sign of the grating vector term `± 2π/Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QpmSign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl QpmSign {
    pub fn value(self) -> f64 {
        match self {
            QpmSign::Plus => 1.0,
            QpmSign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConversionType {
    /// Signal and idler share a polarization.
    #[serde(rename = "type-I")]
    TypeI,
    /// Signal and idler are orthogonally polarized.
    #[serde(rename = "type-II")]
    TypeII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisAssignment {
    pub pump: OpticalAxis,
    pub signal: OpticalAxis,
    pub idler: OpticalAxis,
}

impl AxisAssignment {
    /// Type-II SPDC: pump Y → signal Y + idler Z.
    pub const TYPE_II: Self = Self {
        pump: OpticalAxis::Y,
        signal: OpticalAxis::Y,
        idler: OpticalAxis::Z,
    };
    /// Type-I frequency doubling, all fields on Z.
    pub const TYPE_I: Self = Self {
        pump: OpticalAxis::Z,
        signal: OpticalAxis::Z,
        idler: OpticalAxis::Z,
    };

    pub fn swapped(self) -> Self {
        Self {
            pump: self.pump,
            signal: self.idler,
            idler: self.signal,
        }
    }
}

/// A poled crystal at a fixed temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrystalSpec {
    pub length_mm: f64,
    pub poling_period_um: f64,
    pub temperature_c: f64,
    pub qpm_sign: QpmSign,
    pub conversion: ConversionType,
    pub axes: AxisAssignment,
}

impl CrystalSpec {
    /// The 10 mm, Λ = 46.146 μm type-II PPKTP used for down-conversion.
    pub fn spdc_ppktp(temperature_c: f64) -> Self {
        Self {
            length_mm: 10.0,
            poling_period_um: 46.146,
            temperature_c,
            qpm_sign: QpmSign::Plus,
            conversion: ConversionType::TypeII,
            axes: AxisAssignment::TYPE_II,
        }
    }

    pub fn length_um(&self) -> f64 {
        self.length_mm * 1e3
    }

    pub fn grating_wavenumber(&self) -> f64 {
        self.qpm_sign.value() * 2.0 * PI / self.poling_period_um
    }

    pub fn with_temperature(mut self, temperature_c: f64) -> Self {
        self.temperature_c = temperature_c;
        self
    }

    pub fn validate(&self) -> Result<(), PhaseMatchError> {
        let bad = |m: String| Err(PhaseMatchError::InvalidCrystal(m));
        if !(self.length_mm.is_finite() && self.length_mm > 0.0) {
            return bad(format!("length must be > 0, got {} mm", self.length_mm));
        }
        if !(self.poling_period_um.is_finite() && self.poling_period_um > 0.0) {
            return bad(format!(
                "poling period must be > 0, got {} um",
                self.poling_period_um
            ));
        }
        if !self.temperature_c.is_finite() {
            return bad("temperature must be finite".into());
        }
        match self.conversion {
            ConversionType::TypeII if self.axes.signal == self.axes.idler => {
                bad("type-II requires distinct signal and idler axes".into())
            }
            ConversionType::TypeI if self.axes.signal != self.axes.idler => {
                bad("type-I requires identical signal and idler axes".into())
            }
            _ => Ok(()),
        }
    }
}

/// First-order expansion of Δk about the degenerate point ω_p⁰/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorCoefficients {
    /// k_p′(ω_p⁰) − k_s′(ω_p⁰/2), ps/μm.
    pub tau_s: f64,
    /// k_p′(ω_p⁰) − k_i′(ω_p⁰/2), ps/μm.
    pub tau_i: f64,
    /// k_p⁰ − k_s⁰ − k_i⁰ ± 2π/Λ, rad/μm.
    pub dk0: f64,
    pub pump_center: f64,
}

/// Exact mismatch Δk = k_p(ωs+ωi) − k_s(ωs) − k_i(ωi) ± 2π/Λ, rad/μm.
pub fn delta_k<D: Dispersion + ?Sized>(
    dispersion: &D,
    ws: f64,
    wi: f64,
    crystal: &CrystalSpec,
) -> Result<f64, PhaseMatchError> {
    let t = crystal.temperature_c;
    let ax = crystal.axes;
    let kp = dispersion.propagation_constant(ax.pump, ws + wi, t)?;
    let ks = dispersion.propagation_constant(ax.signal, ws, t)?;
    let ki = dispersion.propagation_constant(ax.idler, wi, t)?;
    Ok(kp - ks - ki + crystal.grating_wavenumber())
}

/// Linearized mismatch `dk0 + tau_s·Ωs + tau_i·Ωi`.
pub fn taylor_delta_k(ws: f64, wi: f64, coeffs: &TaylorCoefficients) -> f64 {
    let half = 0.5 * coeffs.pump_center;
    coeffs.dk0 + coeffs.tau_s * (ws - half) + coeffs.tau_i * (wi - half)
}

pub fn taylor_coefficients<D: Dispersion + ?Sized>(
    dispersion: &D,
    crystal: &CrystalSpec,
    pump_center: f64,
) -> Result<TaylorCoefficients, PhaseMatchError> {
    let t = crystal.temperature_c;
    let ax = crystal.axes;
    let half = 0.5 * pump_center;
    let kp1 = dispersion.group_derivative(ax.pump, pump_center, t)?;
    let ks1 = dispersion.group_derivative(ax.signal, half, t)?;
    let ki1 = dispersion.group_derivative(ax.idler, half, t)?;
    Ok(TaylorCoefficients {
        tau_s: kp1 - ks1,
        tau_i: kp1 - ki1,
        dk0: delta_k(dispersion, half, half, crystal)?,
        pump_center,
    })
}

/// Constant term of the expansion at temperature `t`.
pub fn degenerate_mismatch<D: Dispersion + ?Sized>(
    dispersion: &D,
    crystal: &CrystalSpec,
    pump_center: f64,
    temperature_c: f64,
) -> Result<f64, PhaseMatchError> {
    let half = 0.5 * pump_center;
    delta_k(
        dispersion,
        half,
        half,
        &crystal.with_temperature(temperature_c),
    )
}

/// Temperature at which the degenerate mismatch vanishes, searched on the
/// default bracket. The crystal's own temperature is ignored.
pub fn degenerate_temperature<D: Dispersion + ?Sized>(
    dispersion: &D,
    crystal: &CrystalSpec,
    pump_center: f64,
) -> Result<f64, PhaseMatchError> {
    degenerate_temperature_in(
        dispersion,
        crystal,
        pump_center,
        DEFAULT_TEMPERATURE_BRACKET,
    )
}

/// Bisection for dk0(T) = 0 on `bracket`, refined until the bracket is
/// narrower than 1e-9 °C.
pub fn degenerate_temperature_in<D: Dispersion + ?Sized>(
    dispersion: &D,
    crystal: &CrystalSpec,
    pump_center: f64,
    bracket: (f64, f64),
) -> Result<f64, PhaseMatchError> {
    let f = |t: f64| degenerate_mismatch(dispersion, crystal, pump_center, t);
    let (mut lo, mut hi) = bracket;
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(PhaseMatchError::NoRoot {
            t_low: lo,
            t_high: hi,
            dk_low: f_lo,
            dk_high: f_hi,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-9 || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Pick the grating sign for which dk0(T) changes sign on `bracket`.
pub fn select_qpm_sign<D: Dispersion + ?Sized>(
    dispersion: &D,
    crystal: &CrystalSpec,
    pump_center: f64,
    bracket: (f64, f64),
) -> Result<QpmSign, PhaseMatchError> {
    for sign in [QpmSign::Plus, QpmSign::Minus] {
        let c = CrystalSpec {
            qpm_sign: sign,
            ..*crystal
        };
        let a = degenerate_mismatch(dispersion, &c, pump_center, bracket.0)?;
        let b = degenerate_mismatch(dispersion, &c, pump_center, bracket.1)?;
        if a.signum() != b.signum() || a == 0.0 || b == 0.0 {
            return Ok(sign);
        }
    }
    Err(PhaseMatchError::NoQpmSign {
        t_low: bracket.0,
        t_high: bracket.1,
    })
}
