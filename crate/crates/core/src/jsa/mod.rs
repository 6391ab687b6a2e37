//! Joint spectral amplitude of the down-converted pair and its analysis.
//!
//! The amplitude is the product of the Gaussian pump envelope and the sinc
//! phase-matching function, sampled on a square frequency grid shared by the
//! signal and idler axes. All integrals over the grid use trapezoid weights,
//! so normalization, marginals, Schmidt weights and overlaps agree with each
//! other exactly.

mod schmidt;
mod spectra;

pub use schmidt::{schmidt_number, SchmidtDecomposition};
pub use spectra::{
    coincidence_spectrum, convolve_instrument, entanglement_parameter, fit_instrument_rbw,
    fwhm_3db, half_max_crossings, marginal_spectrum, spectral_report, CoincidenceSpectrum,
    EntanglementParameter, HalfMaximum, Photon, SpectralReport, Spectrum,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::Dispersion;
use crate::phasematch::{
    taylor_coefficients, taylor_delta_k, CrystalSpec, PhaseMatchError, TaylorCoefficients,
};
use crate::units::{
    omega_from_wavelength_nm, omega_width_from_wavelength, wavelength_nm_from_omega,
};

/// Half-width of the sinc² main lobe, `x` such that `sinc²(x) = ½`.
pub(crate) const SINC2_HALF_WIDTH: f64 = 1.391_557_377_9;

/// Minimum samples across any spectral feature before a warning is raised.
pub const MIN_SAMPLES_PER_FWHM: f64 = 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JsaError {
    #[error(transparent)]
    PhaseMatch(#[from] PhaseMatchError),
    #[error("invalid pump: {0}")]
    InvalidPump(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite amplitude at signal index {signal}, idler index {idler}")]
    NonFinite { signal: usize, idler: usize },
    #[error("amplitude vanishes on the whole grid")]
    ZeroAmplitude,
    #[error("spectrum clipped: half-maximum crossing lies outside the grid")]
    Clipped,
    #[error("spectral peak sits on the grid edge")]
    PeakAtEdge,
    #[error("instrument kernel ({rbw_nm} nm) exceeds the grid span ({span_nm} nm)")]
    KernelExceedsGrid { rbw_nm: f64, span_nm: f64 },
    #[error("invalid instrument bandwidth {0} nm")]
    InvalidBandwidth(f64),
    #[error("target width {target_nm} nm is unreachable (unconvolved width {width_nm} nm)")]
    UnreachableWidth { target_nm: f64, width_nm: f64 },
    #[error("SVD did not converge on a {points}x{points} grid")]
    SvdFailed { points: usize },
}

/// How the pump's 3-dB bandwidth maps onto `B_p` in `exp[−Ω²/(4B_p²)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BandwidthConvention {
    /// `B_p` is the 3-dB bandwidth converted to angular frequency.
    #[default]
    #[serde(rename = "amplitude-parameter")]
    AmplitudeParameter,
    /// The 3-dB bandwidth is the FWHM of `|α|²`, so `B_p = FWHM / (2√(2 ln 2))`.
    #[serde(rename = "intensity-fwhm")]
    IntensityFwhm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpSpec {
    pub center_wavelength_nm: f64,
    pub bandwidth_3db_nm: f64,
    /// Second-harmonic power, W. Only the cavity model reads it.
    pub power_w: f64,
    pub bandwidth_convention: BandwidthConvention,
}

impl Default for PumpSpec {
    fn default() -> Self {
        Self {
            center_wavelength_nm: 780.0,
            bandwidth_3db_nm: 0.05,
            power_w: 0.742,
            bandwidth_convention: BandwidthConvention::AmplitudeParameter,
        }
    }
}

impl PumpSpec {
    pub fn center_omega(&self) -> f64 {
        omega_from_wavelength_nm(self.center_wavelength_nm)
    }

    /// `B_p` in rad/ps.
    pub fn amplitude_width(&self) -> f64 {
        let w = omega_width_from_wavelength(self.center_wavelength_nm, self.bandwidth_3db_nm);
        match self.bandwidth_convention {
            BandwidthConvention::AmplitudeParameter => w,
            BandwidthConvention::IntensityFwhm => w / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt()),
        }
    }

    pub fn validate(&self) -> Result<(), JsaError> {
        if !(self.center_wavelength_nm.is_finite() && self.center_wavelength_nm > 0.0) {
            return Err(JsaError::InvalidPump(format!(
                "center wavelength must be > 0, got {}",
                self.center_wavelength_nm
            )));
        }
        if !(self.bandwidth_3db_nm.is_finite()
            && self.bandwidth_3db_nm > 0.0
            && self.bandwidth_3db_nm < self.center_wavelength_nm)
        {
            return Err(JsaError::InvalidPump(format!(
                "3-dB bandwidth must be > 0, got {}",
                self.bandwidth_3db_nm
            )));
        }
        if !(self.power_w.is_finite() && self.power_w >= 0.0) {
            return Err(JsaError::InvalidPump(format!(
                "power must be >= 0, got {}",
                self.power_w
            )));
        }
        Ok(())
    }
}

/// Pump spectral amplitude `exp[−(ωs + ωi − ωp⁰)²/(4B_p²)]`.
pub fn pump_envelope(ws: f64, wi: f64, pump: &PumpSpec) -> f64 {
    let b = pump.amplitude_width();
    let d = ws + wi - pump.center_omega();
    (-d * d / (4.0 * b * b)).exp()
}

/// `sin(Δk·L/2)/(Δk/2)` in μm; returns `L` exactly near Δk = 0.
pub fn sinc_amplitude(delta_k: f64, length_um: f64) -> f64 {
    let x = 0.5 * delta_k * length_um;
    if x.abs() < 1e-8 {
        length_um
    } else {
        x.sin() / (0.5 * delta_k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PhaseMatchModel {
    #[default]
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "taylor")]
    Taylor,
}

pub fn phase_matching_amplitude<D: Dispersion + ?Sized>(
    dispersion: &D,
    ws: f64,
    wi: f64,
    crystal: &CrystalSpec,
    model: PhaseMatchModel,
    pump_center: f64,
) -> Result<f64, PhaseMatchError> {
    let dk = match model {
        PhaseMatchModel::Exact => crate::phasematch::delta_k(dispersion, ws, wi, crystal)?,
        PhaseMatchModel::Taylor => {
            let c = taylor_coefficients(dispersion, crystal, pump_center)?;
            taylor_delta_k(ws, wi, &c)
        }
    };
    Ok(sinc_amplitude(dk, crystal.length_um()))
}

/// Uniform frequency axis `center + (k − N/2)·step`, `k = 0..N`, so that the
/// center is itself a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    /// rad/ps
    pub center: f64,
    /// rad/ps
    pub half_span: f64,
    pub points_per_axis: usize,
}

impl FrequencyGrid {
    pub fn new(center: f64, half_span: f64, points_per_axis: usize) -> Result<Self, JsaError> {
        let g = Self {
            center,
            half_span,
            points_per_axis,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid centred on the degenerate frequency whose blue edge sits
    /// `half_span_nm` below the degenerate wavelength.
    pub fn around_degeneracy(
        pump: &PumpSpec,
        half_span_nm: f64,
        points_per_axis: usize,
    ) -> Result<Self, JsaError> {
        let lambda0 = 2.0 * pump.center_wavelength_nm;
        let center = 0.5 * pump.center_omega();
        let half_span = omega_from_wavelength_nm(lambda0 - half_span_nm) - center;
        Self::new(center, half_span, points_per_axis)
    }

    pub fn validate(&self) -> Result<(), JsaError> {
        if self.points_per_axis < 64 || !self.points_per_axis.is_multiple_of(2) {
            return Err(JsaError::InvalidGrid(format!(
                "points_per_axis must be even and >= 64, got {}",
                self.points_per_axis
            )));
        }
        if !(self.half_span.is_finite() && self.half_span > 0.0) {
            return Err(JsaError::InvalidGrid(format!(
                "half_span must be > 0, got {}",
                self.half_span
            )));
        }
        if !(self.center.is_finite() && self.center > self.half_span) {
            return Err(JsaError::InvalidGrid(format!(
                "center {} must exceed half_span {}",
                self.center, self.half_span
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_span / self.points_per_axis as f64
    }

    pub fn omega(&self, k: usize) -> f64 {
        let half = (self.points_per_axis / 2) as f64;
        self.center + (k as f64 - half) * self.step()
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.points_per_axis).map(|k| self.omega(k)).collect()
    }

    /// Trapezoid quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.points_per_axis;
        let h = self.step();
        (0..n)
            .map(|k| if k == 0 || k == n - 1 { 0.5 * h } else { h })
            .collect()
    }

    /// Index of the sample closest to `omega` and its offset from it.
    pub fn nearest(&self, omega: f64) -> (usize, f64) {
        let half = (self.points_per_axis / 2) as f64;
        let k = ((omega - self.center) / self.step() + half)
            .round()
            .clamp(0.0, (self.points_per_axis - 1) as f64) as usize;
        (k, omega - self.omega(k))
    }
}

/// Normalized, real joint spectral amplitude on a square grid. Row index is
/// the signal frequency, column index the idler frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct JsaGrid {
    grid: FrequencyGrid,
    omega: Vec<f64>,
    weights: Vec<f64>,
    amplitude: Vec<f64>,
    normalization: f64,
    pump_center: f64,
    warnings: Vec<String>,
}

impl JsaGrid {
    /// Normalize a raw row-major amplitude.
    pub fn from_raw(
        grid: FrequencyGrid,
        pump_center: f64,
        mut amplitude: Vec<f64>,
        warnings: Vec<String>,
    ) -> Result<Self, JsaError> {
        grid.validate()?;
        let n = grid.points_per_axis;
        if amplitude.len() != n * n {
            return Err(JsaError::InvalidGrid(format!(
                "expected {} samples, got {}",
                n * n,
                amplitude.len()
            )));
        }
        if let Some(pos) = amplitude.iter().position(|a| !a.is_finite()) {
            return Err(JsaError::NonFinite {
                signal: pos / n,
                idler: pos % n,
            });
        }
        let weights = grid.weights();
        let mut total = 0.0;
        for i in 0..n {
            let row = &amplitude[i * n..(i + 1) * n];
            let s: f64 = row.iter().zip(&weights).map(|(a, w)| a * a * w).sum();
            total += s * weights[i];
        }
        if total <= 0.0 || !total.is_finite() {
            return Err(JsaError::ZeroAmplitude);
        }
        let normalization = 1.0 / total.sqrt();
        amplitude.iter_mut().for_each(|a| *a *= normalization);
        Ok(Self {
            omega: grid.omegas(),
            grid,
            weights,
            amplitude,
            normalization,
            pump_center,
            warnings,
        })
    }

    /// Sample `f(ωs, ωi)` on the grid and normalize. Used for fixtures.
    pub fn from_fn(
        grid: FrequencyGrid,
        pump_center: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, JsaError> {
        let w = grid.omegas();
        let mut a = Vec::with_capacity(w.len() * w.len());
        for &ws in &w {
            for &wi in &w {
                a.push(f(ws, wi));
            }
        }
        Self::from_raw(grid, pump_center, a, Vec::new())
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn points(&self) -> usize {
        self.grid.points_per_axis
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn wavelengths_nm(&self) -> Vec<f64> {
        self.omega
            .iter()
            .map(|&w| wavelength_nm_from_omega(w))
            .collect()
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.amplitude
    }

    #[inline]
    pub fn at(&self, signal: usize, idler: usize) -> f64 {
        self.amplitude[signal * self.grid.points_per_axis + idler]
    }

    pub fn row(&self, signal: usize) -> &[f64] {
        let n = self.grid.points_per_axis;
        &self.amplitude[signal * n..(signal + 1) * n]
    }

    /// Factor applied to the raw amplitude during normalization.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn pump_center(&self) -> f64 {
        self.pump_center
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Trapezoid integral of |A|² over the grid.
    pub fn total_density(&self) -> f64 {
        let n = self.points();
        (0..n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(&self.weights)
                    .map(|(a, w)| a * a * w)
                    .sum::<f64>()
                    * self.weights[i]
            })
            .sum()
    }
}

/// Sample pump envelope × phase matching on `grid` and normalize.
///
/// The propagation constants are tabulated once per axis (and once per
/// diagonal for the pump), so the exact model costs O(N) dispersion
/// evaluations.
pub fn build_jsa<D: Dispersion + ?Sized>(
    dispersion: &D,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    grid: &FrequencyGrid,
    model: PhaseMatchModel,
) -> Result<JsaGrid, JsaError> {
    pump.validate()?;
    crystal.validate()?;
    grid.validate()?;
    let n = grid.points_per_axis;
    let wp = pump.center_omega();
    let bp = pump.amplitude_width();
    let len = crystal.length_um();
    let t = crystal.temperature_c;
    let w = grid.omegas();
    let coeffs = taylor_coefficients(dispersion, crystal, wp)?;

    // Diagonal index m = i + j; ωs + ωi = 2·center + (m − N)·step.
    let sum_omega = |m: usize| 2.0 * grid.center + (m as f64 - n as f64) * grid.step();
    let envelope: Vec<f64> = (0..2 * n - 1)
        .map(|m| {
            let d = sum_omega(m) - wp;
            (-d * d / (4.0 * bp * bp)).exp()
        })
        .collect();

    let dk: Box<dyn Fn(usize, usize) -> f64> = match model {
        PhaseMatchModel::Exact => {
            let ax = crystal.axes;
            let kp = (0..2 * n - 1)
                .map(|m| dispersion.propagation_constant(ax.pump, sum_omega(m), t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(PhaseMatchError::from)?;
            let ks = w
                .iter()
                .map(|&x| dispersion.propagation_constant(ax.signal, x, t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(PhaseMatchError::from)?;
            let ki = w
                .iter()
                .map(|&x| dispersion.propagation_constant(ax.idler, x, t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(PhaseMatchError::from)?;
            let g = crystal.grating_wavenumber();
            Box::new(move |i, j| kp[i + j] - ks[i] - ki[j] + g)
        }
        PhaseMatchModel::Taylor => {
            let w = w.clone();
            Box::new(move |i, j| taylor_delta_k(w[i], w[j], &coeffs))
        }
    };

    let mut amplitude = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            amplitude.push(envelope[i + j] * sinc_amplitude(dk(i, j), len));
        }
    }
    let warnings = resolution_warnings(grid, bp, &coeffs, len);
    JsaGrid::from_raw(*grid, wp, amplitude, warnings)
}

fn resolution_warnings(
    grid: &FrequencyGrid,
    bp: f64,
    coeffs: &TaylorCoefficients,
    length_um: f64,
) -> Vec<String> {
    let step = grid.step();
    let mut out = Vec::new();
    let mut check = |label: &str, fwhm: f64| {
        if !fwhm.is_finite() {
            return;
        }
        let samples = fwhm / step;
        if samples < MIN_SAMPLES_PER_FWHM {
            out.push(format!(
                "under-resolved grid: {label} FWHM {fwhm:.4e} rad/ps spans {samples:.1} samples (< {MIN_SAMPLES_PER_FWHM})"
            ));
        }
        if fwhm > grid.half_span {
            out.push(format!(
                "grid span may clip the {label}: FWHM {fwhm:.4e} rad/ps exceeds half span {:.4e}",
                grid.half_span
            ));
        }
    };
    check(
        "pump envelope",
        2.0 * (2.0 * std::f64::consts::LN_2).sqrt() * bp,
    );
    let sinc = |tau: f64| 4.0 * SINC2_HALF_WIDTH / (tau.abs() * length_um);
    check(
        "anti-diagonal phase matching",
        sinc(coeffs.tau_s - coeffs.tau_i),
    );
    check("signal-axis phase matching", sinc(coeffs.tau_s));
    out
}
