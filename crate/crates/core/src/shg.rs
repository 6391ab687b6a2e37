//! Singly-resonant external-cavity frequency doubler.
//!
//! The fundamental circulates between an incoupler (r1, t1) and an
//! outcoupler (r2, t2) that transmits the second harmonic (t2sh). Per round
//! trip the fundamental suffers the linear loss `t = 1 − δ` twice and the
//! conversion depletion `1 − γ·Pc`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAX_ITERATIONS: usize = 10_000;
const RESIDUAL_TOLERANCE: f64 = 1e-12;
const GAMMA_BRACKET: (f64, f64) = (1e-8, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShgError {
    #[error("invalid cavity: {0}")]
    InvalidCavity(String),
    #[error("invalid fundamental power {0} W")]
    InvalidPower(f64),
    #[error("over-conversion: model outside validity (gamma*Pc = {gamma_pc})")]
    OverConversion { gamma_pc: f64 },
    #[error("fixed point did not converge after {iterations} iterations (residual {residual} W)")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error(
        "calibration target {target_w} W unreachable on gamma in [{gamma_low}, {gamma_high}] 1/W \
         (outputs {p2_low} W .. {p2_high} W)"
    )]
    Unreachable {
        target_w: f64,
        gamma_low: f64,
        gamma_high: f64,
        p2_low: f64,
        p2_high: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySpec {
    pub r1: f64,
    pub t1: f64,
    pub r2: f64,
    pub t2: f64,
    pub t2sh: f64,
    /// Single-pass intracavity loss, `t = 1 − delta`.
    pub delta: f64,
    /// 1/W
    pub gamma_sh: f64,
}

impl Default for CavitySpec {
    fn default() -> Self {
        Self {
            r1: 0.95,
            t1: 0.05,
            r2: 0.999,
            t2: 0.001,
            t2sh: 0.952,
            delta: 0.01,
            gamma_sh: 0.0,
        }
    }
}

impl CavitySpec {
    pub fn with_gamma(mut self, gamma_sh: f64) -> Self {
        self.gamma_sh = gamma_sh;
        self
    }

    pub fn single_pass_transmission(&self) -> f64 {
        1.0 - self.delta
    }

    pub fn validate(&self) -> Result<(), ShgError> {
        for (name, v) in [
            ("r1", self.r1),
            ("t1", self.t1),
            ("r2", self.r2),
            ("t2", self.t2),
            ("t2sh", self.t2sh),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ShgError::InvalidCavity(format!(
                    "{name} = {v} is outside [0, 1]"
                )));
            }
        }
        if self.r1 + self.t1 > 1.0 + 1e-12 {
            return Err(ShgError::InvalidCavity(format!(
                "r1 + t1 = {} exceeds 1",
                self.r1 + self.t1
            )));
        }
        if self.r2 + self.t2 > 1.0 + 1e-12 {
            return Err(ShgError::InvalidCavity(format!(
                "r2 + t2 = {} exceeds 1",
                self.r2 + self.t2
            )));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(ShgError::InvalidCavity(format!(
                "delta = {} is outside [0, 1)",
                self.delta
            )));
        }
        if !(self.gamma_sh.is_finite() && self.gamma_sh >= 0.0) {
            return Err(ShgError::InvalidCavity(format!(
                "gamma_sh = {} must be >= 0",
                self.gamma_sh
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShgOperatingPoint {
    /// Fundamental input, W.
    pub p1: f64,
    /// Circulating fundamental, W.
    pub pc: f64,
    /// Second-harmonic output, W.
    pub p2: f64,
    pub rm: f64,
    /// `|Pc − rhs(Pc)|`, W.
    pub residual: f64,
}

/// `rm = t²·(1 − γ·Pc)²·r2`.
pub fn round_trip_efficiency(pc: f64, cavity: &CavitySpec) -> Result<f64, ShgError> {
    let g = cavity.gamma_sh * pc;
    if g >= 1.0 {
        return Err(ShgError::OverConversion { gamma_pc: g });
    }
    let t = cavity.single_pass_transmission();
    Ok(t * t * (1.0 - g).powi(2) * cavity.r2)
}

/// Right-hand side of the enhancement relation, `t1·P1 / (1 − √(r1·rm))²`.
pub fn enhancement_rhs(pc: f64, p1: f64, cavity: &CavitySpec) -> Result<f64, ShgError> {
    let rm = round_trip_efficiency(pc, cavity)?;
    Ok(cavity.t1 * p1 / (1.0 - (cavity.r1 * rm).sqrt()).powi(2))
}

/// Solve for the circulating power by damped fixed-point iteration.
///
/// The damping starts at ½ and is halved whenever a step fails to reduce
/// the residual, which keeps the iteration stable when strong conversion
/// makes the right-hand side steep.
pub fn circulating_power(p1: f64, cavity: &CavitySpec) -> Result<ShgOperatingPoint, ShgError> {
    cavity.validate()?;
    if !(p1.is_finite() && p1 >= 0.0) {
        return Err(ShgError::InvalidPower(p1));
    }
    let gamma = cavity.gamma_sh;
    let ceiling = if gamma > 0.0 {
        1.0 / gamma
    } else {
        f64::INFINITY
    };

    let linear = enhancement_rhs(0.0, p1, cavity)?;
    let mut x = if linear < ceiling {
        linear
    } else {
        0.5 * ceiling
    };
    let mut fx = enhancement_rhs(x, p1, cavity)?;
    let mut residual = (x - fx).abs();
    let mut theta = 0.5;
    for _ in 0..MAX_ITERATIONS {
        if residual <= RESIDUAL_TOLERANCE * x.max(1.0) {
            return operating_point(p1, x, cavity);
        }
        let mut candidate = x + theta * (fx - x);
        // Stay inside the domain where the depletion factor is positive.
        if candidate >= ceiling {
            candidate = 0.5 * (x + ceiling);
        }
        let fc = enhancement_rhs(candidate, p1, cavity)?;
        let rc = (candidate - fc).abs();
        if rc < residual {
            x = candidate;
            fx = fc;
            residual = rc;
        } else {
            theta *= 0.5;
            if theta < 1e-300 {
                break;
            }
        }
    }
    Err(ShgError::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

fn operating_point(p1: f64, pc: f64, cavity: &CavitySpec) -> Result<ShgOperatingPoint, ShgError> {
    let rm = round_trip_efficiency(pc, cavity)?;
    let residual = (pc - enhancement_rhs(pc, p1, cavity)?).abs();
    Ok(ShgOperatingPoint {
        p1,
        pc,
        p2: 2.0 * cavity.gamma_sh * pc * pc * cavity.t2sh,
        rm,
        residual,
    })
}

/// `P2 = 2·γ·Pc²·t2sh` at the converged circulating power.
pub fn sh_output_power(p1: f64, cavity: &CavitySpec) -> Result<f64, ShgError> {
    Ok(circulating_power(p1, cavity)?.p2)
}

fn p2_at(p1: f64, cavity: &CavitySpec, gamma: f64) -> Result<f64, ShgError> {
    sh_output_power(p1, &cavity.with_gamma(gamma))
}

/// γ at which `P2(γ)` peaks for fixed `p1`, by golden-section search in
/// log γ over the calibration bracket.
///
/// Beyond the peak the conversion loss spoils the cavity enhancement faster
/// than it adds conversion, so `P2(γ)` is not monotone over the full bracket.
pub fn gamma_at_peak(p1: f64, cavity: &CavitySpec) -> Result<f64, ShgError> {
    let f = |lg: f64| p2_at(p1, cavity, lg.exp());
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (GAMMA_BRACKET.0.ln(), GAMMA_BRACKET.1.ln());
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// One-point inversion of `P2(p1_ref; γ) = p2_ref` for γ, in 1/W.
///
/// The root is taken on the rising branch `[1e-8, γ_peak]`, where `P2` is
/// monotone in γ; bisection runs in log γ until `P2` is within 1e-9 W.
pub fn calibrate_gamma(p1_ref: f64, p2_ref: f64, cavity: &CavitySpec) -> Result<f64, ShgError> {
    cavity.validate()?;
    if !(p1_ref.is_finite() && p1_ref > 0.0) {
        return Err(ShgError::InvalidPower(p1_ref));
    }
    if !(p2_ref.is_finite() && p2_ref > 0.0) {
        return Err(ShgError::InvalidPower(p2_ref));
    }
    let peak = gamma_at_peak(p1_ref, cavity)?;
    let lo_out = p2_at(p1_ref, cavity, GAMMA_BRACKET.0)?;
    let hi_out = p2_at(p1_ref, cavity, peak)?;
    if !(lo_out <= p2_ref && p2_ref <= hi_out) {
        return Err(ShgError::Unreachable {
            target_w: p2_ref,
            gamma_low: GAMMA_BRACKET.0,
            gamma_high: GAMMA_BRACKET.1,
            p2_low: lo_out,
            p2_high: p2_at(p1_ref, cavity, GAMMA_BRACKET.1)?.max(hi_out),
        });
    }
    let (mut a, mut b) = (GAMMA_BRACKET.0.ln(), peak.ln());
    for _ in 0..400 {
        let m = 0.5 * (a + b);
        let p2 = p2_at(p1_ref, cavity, m.exp())?;
        if (p2 - p2_ref).abs() <= 1e-9 || b - a < 1e-15 {
            return Ok(m.exp());
        }
        if p2 < p2_ref {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Solve every input power independently; failures are kept in place.
pub fn power_curve(
    p1_values: &[f64],
    cavity: &CavitySpec,
) -> Vec<Result<ShgOperatingPoint, ShgError>> {
    p1_values
        .iter()
        .map(|&p1| circulating_power(p1, cavity))
        .collect()
}

/// `points` evenly spaced input powers on `[0, max_w]`.
pub fn linear_powers(max_w: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![0.0; points];
    }
    (0..points)
        .map(|k| max_w * k as f64 / (points - 1) as f64)
        .collect()
}
