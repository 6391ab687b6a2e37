use serde::{Deserialize, Serialize};

use super::{schmidt_number, JsaError, JsaGrid};
use crate::units::wavelength_nm_from_omega;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Photon {
    Signal,
    Idler,
}

/// A sampled 1-D spectrum on the JSA frequency axis (ascending ω, so the
/// wavelength axis is descending).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub wavelength_nm: Vec<f64>,
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn from_omega(omega: Vec<f64>, values: Vec<f64>) -> Self {
        let wavelength_nm = omega.iter().map(|&w| wavelength_nm_from_omega(w)).collect();
        Self {
            omega,
            wavelength_nm,
            values,
        }
    }

    /// Trapezoid integral over ω.
    pub fn integral_omega(&self) -> f64 {
        trapezoid(&self.omega, &self.values)
    }

    /// Trapezoid integral over λ.
    pub fn integral_wavelength(&self) -> f64 {
        trapezoid(&self.wavelength_nm, &self.values).abs()
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `S_s(ωs) = ∫ dωi |A|²` (or the idler counterpart), integrating to one.
pub fn marginal_spectrum(jsa: &JsaGrid, which: Photon) -> Spectrum {
    let n = jsa.points();
    let w = jsa.weights();
    let values = match which {
        Photon::Signal => (0..n)
            .map(|i| jsa.row(i).iter().zip(w).map(|(a, wj)| a * a * wj).sum())
            .collect(),
        Photon::Idler => {
            let mut acc = vec![0.0; n];
            for i in 0..n {
                for (j, a) in jsa.row(i).iter().enumerate() {
                    acc[j] += a * a * w[i];
                }
            }
            acc
        }
    };
    Spectrum::from_omega(jsa.omega().to_vec(), values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceSpectrum {
    pub spectrum: Spectrum,
    pub idler_index: usize,
    /// ω_p⁰/2 minus the idler frequency of the slice actually used, rad/ps.
    pub idler_offset: f64,
}

/// `|A(ωs, ωi = ω_p⁰/2)|²` on the nearest grid column, scaled to unit peak.
pub fn coincidence_spectrum(jsa: &JsaGrid) -> CoincidenceSpectrum {
    let (j, offset) = jsa.grid().nearest(0.5 * jsa.pump_center());
    let n = jsa.points();
    let mut values: Vec<f64> = (0..n).map(|i| jsa.at(i, j).powi(2)).collect();
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        values.iter_mut().for_each(|v| *v /= peak);
    }
    CoincidenceSpectrum {
        spectrum: Spectrum::from_omega(jsa.omega().to_vec(), values),
        idler_index: j,
        idler_offset: offset,
    }
}

/// Half-maximum crossing positions on either side of the global maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfMaximum {
    pub peak_index: usize,
    /// Crossing on the low-index side, in abscissa units.
    pub lower: f64,
    /// Crossing on the high-index side.
    pub upper: f64,
}

impl HalfMaximum {
    pub fn width(&self) -> f64 {
        (self.upper - self.lower).abs()
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.upper + self.lower)
    }
}

/// Locate the half-maximum crossings of `y(x)` around its global maximum by
/// linear interpolation between the bracketing samples.
pub fn half_max_crossings(x: &[f64], y: &[f64]) -> Result<HalfMaximum, JsaError> {
    assert_eq!(x.len(), y.len());
    let n = y.len();
    if n < 3 {
        return Err(JsaError::Clipped);
    }
    let mut peak = 0;
    for k in 1..n {
        if y[k] > y[peak] {
            peak = k;
        }
    }
    if peak == 0 || peak == n - 1 {
        return Err(JsaError::PeakAtEdge);
    }
    let half = 0.5 * y[peak];
    let interp = |a: usize, b: usize| x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);

    let mut k = peak;
    while y[k] > half {
        if k == 0 {
            return Err(JsaError::Clipped);
        }
        k -= 1;
    }
    let lower = interp(k, k + 1);

    let mut k = peak;
    while y[k] > half {
        k += 1;
        if k == n {
            return Err(JsaError::Clipped);
        }
    }
    let upper = interp(k - 1, k);
    Ok(HalfMaximum {
        peak_index: peak,
        lower,
        upper,
    })
}

/// 3-dB width of a spectrum in nm.
pub fn fwhm_3db(spectrum: &Spectrum) -> Result<f64, JsaError> {
    Ok(half_max_crossings(&spectrum.wavelength_nm, &spectrum.values)?.width())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementParameter {
    /// Δλs / δλc
    pub r: f64,
    /// Δωs / δωc
    pub r_omega: f64,
    pub marginal_fwhm_nm: f64,
    pub coincidence_fwhm_nm: f64,
}

/// Ratio of the signal marginal width to the coincidence width.
pub fn entanglement_parameter(jsa: &JsaGrid) -> Result<EntanglementParameter, JsaError> {
    let marginal = marginal_spectrum(jsa, Photon::Signal);
    let coinc = coincidence_spectrum(jsa).spectrum;
    let m_nm = fwhm_3db(&marginal)?;
    let c_nm = fwhm_3db(&coinc)?;
    let m_w = half_max_crossings(&marginal.omega, &marginal.values)?.width();
    let c_w = half_max_crossings(&coinc.omega, &coinc.values)?.width();
    Ok(EntanglementParameter {
        r: m_nm / c_nm,
        r_omega: m_w / c_w,
        marginal_fwhm_nm: m_nm,
        coincidence_fwhm_nm: c_nm,
    })
}

/// Convolve with a unit-area Gaussian of FWHM `rbw_nm` on the wavelength
/// axis. Each source sample's weight is redistributed with a kernel
/// renormalized over the grid, so the λ-integral is preserved.
pub fn convolve_instrument(spectrum: &Spectrum, rbw_nm: f64) -> Result<Spectrum, JsaError> {
    if !(rbw_nm.is_finite() && rbw_nm >= 0.0) {
        return Err(JsaError::InvalidBandwidth(rbw_nm));
    }
    if rbw_nm == 0.0 {
        return Ok(spectrum.clone());
    }
    let x = &spectrum.wavelength_nm;
    let n = x.len();
    let span = (x[n - 1] - x[0]).abs();
    if rbw_nm > span {
        return Err(JsaError::KernelExceedsGrid {
            rbw_nm,
            span_nm: span,
        });
    }
    let weights: Vec<f64> = (0..n)
        .map(|k| {
            let lo = if k == 0 {
                x[0]
            } else {
                0.5 * (x[k - 1] + x[k])
            };
            let hi = if k == n - 1 {
                x[n - 1]
            } else {
                0.5 * (x[k] + x[k + 1])
            };
            (hi - lo).abs()
        })
        .collect();
    let sigma = rbw_nm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let kernel = |d: f64| (-0.5 * (d / sigma).powi(2)).exp();
    let mut out = vec![0.0; n];
    let mut column = vec![0.0; n];
    for m in 0..n {
        let mass = spectrum.values[m] * weights[m];
        if mass == 0.0 {
            continue;
        }
        let mut z = 0.0;
        for k in 0..n {
            column[k] = kernel(x[k] - x[m]);
            z += column[k] * weights[k];
        }
        for k in 0..n {
            out[k] += mass * column[k] / z;
        }
    }
    Ok(Spectrum {
        omega: spectrum.omega.clone(),
        wavelength_nm: spectrum.wavelength_nm.clone(),
        values: out,
    })
}

/// Instrument bandwidth that broadens `spectrum` to `target_nm`, by
/// bisection on the convolved width starting from the quadrature-sum guess.
pub fn fit_instrument_rbw(spectrum: &Spectrum, target_nm: f64) -> Result<f64, JsaError> {
    let width = fwhm_3db(spectrum)?;
    if !(target_nm > width) {
        return Err(JsaError::UnreachableWidth {
            target_nm,
            width_nm: width,
        });
    }
    let guess = (target_nm * target_nm - width * width).sqrt();
    let f = |rbw: f64| -> Result<f64, JsaError> {
        Ok(fwhm_3db(&convolve_instrument(spectrum, rbw)?)? - target_nm)
    };
    let span = (spectrum.wavelength_nm[0]
        - spectrum.wavelength_nm[spectrum.wavelength_nm.len() - 1])
        .abs();
    let mut lo = 0.5 * guess;
    let mut hi = (2.0 * guess).min(span);
    while f(lo)? > 0.0 {
        lo *= 0.5;
    }
    if f(hi)? < 0.0 {
        return Err(JsaError::UnreachableWidth {
            target_nm,
            width_nm: width,
        });
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Figures of merit extracted from a JSA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub signal_center_nm: f64,
    pub idler_center_nm: f64,
    pub signal_fwhm_nm: f64,
    pub idler_fwhm_nm: f64,
    pub coincidence_width_nm: f64,
    /// Offset of the coincidence slice from ω_p⁰/2, rad/ps.
    pub coincidence_idler_offset: f64,
    pub r: f64,
    pub r_omega: f64,
    pub schmidt_k: f64,
    pub warnings: Vec<String>,
}

pub fn spectral_report(jsa: &JsaGrid) -> Result<SpectralReport, JsaError> {
    let sig = marginal_spectrum(jsa, Photon::Signal);
    let idl = marginal_spectrum(jsa, Photon::Idler);
    let hs = half_max_crossings(&sig.wavelength_nm, &sig.values)?;
    let hi = half_max_crossings(&idl.wavelength_nm, &idl.values)?;
    let coinc = coincidence_spectrum(jsa);
    let r = entanglement_parameter(jsa)?;
    let schmidt = schmidt_number(jsa)?;
    Ok(SpectralReport {
        signal_center_nm: hs.center(),
        idler_center_nm: hi.center(),
        signal_fwhm_nm: hs.width(),
        idler_fwhm_nm: hi.width(),
        coincidence_width_nm: r.coincidence_fwhm_nm,
        coincidence_idler_offset: coinc.idler_offset,
        r: r.r,
        r_omega: r.r_omega,
        schmidt_k: schmidt.k,
        warnings: jsa.warnings().to_vec(),
    })
}
