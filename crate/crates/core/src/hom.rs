//! Hong–Ou–Mandel interference of the signal and idler photons.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::Dispersion;
use crate::jsa::{half_max_crossings, JsaError, JsaGrid};
use crate::phasematch::{taylor_coefficients, CrystalSpec, PhaseMatchError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomError {
    #[error("span too small: delay span ±{span_ps} ps does not contain the dip")]
    SpanTooSmall { span_ps: f64 },
    #[error("invalid delay grid: {0}")]
    InvalidDelays(String),
    #[error(transparent)]
    PhaseMatch(#[from] PhaseMatchError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomCurve {
    /// ps, uniform and symmetric about zero
    pub delays: Vec<f64>,
    /// Coincidence probability normalized to the far-delay baseline.
    pub coincidence: Vec<f64>,
    pub visibility: f64,
    /// ps
    pub dip_center: f64,
    /// ps
    pub dip_fwhm: f64,
}

/// Sums of `w_i w_j A_ij A_ji` over the diagonals `j − i = m`, indexed by
/// `m + N − 1`, together with `Σ w_i w_j A_ij²`.
fn exchange_diagonals(jsa: &JsaGrid) -> (Vec<f64>, f64) {
    let n = jsa.points();
    let w = jsa.weights();
    let mut d = vec![0.0; 2 * n - 1];
    for i in 0..n {
        for j in 0..n {
            d[j + n - 1 - i] += w[i] * w[j] * jsa.at(i, j) * jsa.at(j, i);
        }
    }
    (d, jsa.total_density())
}

/// `ΣΣ |A(ωs,ωi)·A(ωi,ωs)| / ΣΣ |A|²`.
pub fn overlap_visibility(jsa: &JsaGrid) -> f64 {
    let n = jsa.points();
    let w = jsa.weights();
    let mut num = 0.0;
    for i in 0..n {
        for j in 0..n {
            num += w[i] * w[j] * (jsa.at(i, j) * jsa.at(j, i)).abs();
        }
    }
    num / jsa.total_density()
}

/// Same sum as [`overlap_visibility`] without the magnitude, i.e. the depth
/// of the physical dip.
pub fn signed_overlap(jsa: &JsaGrid) -> f64 {
    let (d, norm) = exchange_diagonals(jsa);
    d.iter().sum::<f64>() / norm
}

/// Coincidence probability versus the delay between the two arms,
/// `C(τ) = 1 − Σ A(ωs,ωi)A(ωi,ωs) cos((ωi−ωs)τ) / Σ|A|²`, on `points`
/// delays spanning `±delay_span_ps`.
pub fn dip_curve(jsa: &JsaGrid, delay_span_ps: f64, points: usize) -> Result<HomCurve, HomError> {
    if !(delay_span_ps.is_finite() && delay_span_ps > 0.0) {
        return Err(HomError::InvalidDelays(format!(
            "delay span must be > 0, got {delay_span_ps}"
        )));
    }
    if points < 5 || points.is_multiple_of(2) {
        return Err(HomError::InvalidDelays(format!(
            "points must be odd and >= 5, got {points}"
        )));
    }
    let n = jsa.points() as isize;
    let step = jsa.grid().step();
    let (d, norm) = exchange_diagonals(jsa);
    let dt = 2.0 * delay_span_ps / (points - 1) as f64;
    let delays: Vec<f64> = (0..points)
        .map(|k| (k as isize - (points / 2) as isize) as f64 * dt)
        .collect();
    let coincidence: Vec<f64> = delays
        .iter()
        .map(|&tau| {
            let s: f64 = d
                .iter()
                .enumerate()
                .map(|(k, v)| v * ((k as isize - (n - 1)) as f64 * step * tau).cos())
                .sum();
            1.0 - s / norm
        })
        .collect();

    let depth: Vec<f64> = coincidence.iter().map(|c| 1.0 - c).collect();
    let half = half_max_crossings(&delays, &depth).map_err(|e| match e {
        JsaError::PeakAtEdge | JsaError::Clipped => HomError::SpanTooSmall {
            span_ps: delay_span_ps,
        },
        other => HomError::InvalidDelays(other.to_string()),
    })?;
    Ok(HomCurve {
        visibility: depth[half.peak_index],
        dip_center: delays[half.peak_index],
        dip_fwhm: half.width(),
        delays,
        coincidence,
    })
}

/// `|τs − τi|·L`, the full base width of the triangular cw dip, in ps.
pub fn dip_fwhm_vs_group_delay<D: Dispersion + ?Sized>(
    dispersion: &D,
    crystal: &CrystalSpec,
    pump_center: f64,
) -> Result<f64, HomError> {
    let c = taylor_coefficients(dispersion, crystal, pump_center)?;
    Ok((c.tau_s - c.tau_i).abs() * crystal.length_um())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::SellmeierSet;
    use crate::jsa::{FrequencyGrid, PumpSpec};
    use crate::phasematch::{degenerate_temperature, AxisAssignment, ConversionType};

    fn grid(points: usize) -> FrequencyGrid {
        FrequencyGrid::new(1207.7, 6.0, points).unwrap()
    }

    fn gauss(x: f64, c: f64, s: f64) -> f64 {
        (-(x - c).powi(2) / (4.0 * s * s)).exp()
    }

    /// Correlated Gaussian, symmetric under exchange.
    fn symmetric_fixture(points: usize) -> JsaGrid {
        let c = 1207.7;
        JsaGrid::from_fn(grid(points), 2.0 * c, |ws, wi| {
            gauss(ws + wi, 2.0 * c, 0.2) * gauss(ws - wi, 0.0, 1.0)
        })
        .unwrap()
    }

    fn type_ii_jsa(points: usize) -> JsaGrid {
        crate::jsa::tests::reference_jsa(points)
    }

    #[test]
    fn symmetric_state_has_full_visibility() {
        let jsa = symmetric_fixture(256);
        assert!((overlap_visibility(&jsa) - 1.0).abs() < 1e-9);
        assert!((signed_overlap(&jsa) - overlap_visibility(&jsa)).abs() < 1e-12);
        let curve = dip_curve(&jsa, 20.0, 801).unwrap();
        let min = curve
            .coincidence
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(min.abs() < 1e-9, "{min}");
        assert!(curve.coincidence.iter().all(|&c| c <= 1.0 + 1e-6));
    }

    #[test]
    fn disjoint_spectra_do_not_interfere() {
        let jsa = JsaGrid::from_fn(grid(256), 2415.4, |ws, wi| {
            gauss(ws, 1205.0, 0.2) * gauss(wi, 1210.4, 0.2)
        })
        .unwrap();
        assert!(overlap_visibility(&jsa) < 1e-6);
    }

    #[test]
    fn flipped_side_lobe_lowers_signed_overlap() {
        // Symmetric sinc-shaped state with the sign of one side lobe (but
        // not its mirror image) flipped.
        let c = 1207.7;
        let sinc = |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x };
        let jsa = JsaGrid::from_fn(grid(256), 2.0 * c, |ws, wi| {
            let a = gauss(ws + wi, 2.0 * c, 0.2) * sinc(2.0 * (ws - wi));
            let x = 2.0 * (ws - wi);
            if x > std::f64::consts::PI && x < 2.0 * std::f64::consts::PI {
                -a
            } else {
                a
            }
        })
        .unwrap();
        let v = overlap_visibility(&jsa);
        let s = signed_overlap(&jsa);
        assert!(s < v - 1e-6, "{s} vs {v}");
        assert!(v <= 1.0 + 1e-12 && v >= s.abs());
    }

    #[test]
    fn reference_state_visibility() {
        let jsa = type_ii_jsa(512);
        let v = overlap_visibility(&jsa);
        let s = signed_overlap(&jsa);
        assert!((0.99..=1.0 + 1e-12).contains(&v), "{v}");
        assert!((v - s).abs() < 1e-2);
    }

    #[test]
    fn curve_properties() {
        let jsa = type_ii_jsa(512);
        let curve = dip_curve(&jsa, 10.0, 2001).unwrap();
        let n = curve.delays.len();
        assert_eq!(curve.delays[n / 2], 0.0);
        for k in 0..n {
            assert!((curve.coincidence[k] - curve.coincidence[n - 1 - k]).abs() < 1e-6);
            // The sinc tails cut off at the grid edge leave a small ripple
            // above the baseline on the dip shoulders.
            assert!(curve.coincidence[k] >= -1e-12 && curve.coincidence[k] <= 1.01);
        }
        assert_eq!(curve.dip_center, 0.0);
        let min = curve
            .coincidence
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!((min - (1.0 - signed_overlap(&jsa))).abs() < 1e-6);
        assert!((curve.visibility - (1.0 - min)).abs() < 1e-15);
    }

    #[test]
    fn far_delay_baseline() {
        let jsa = type_ii_jsa(1024);
        let curve = dip_curve(&jsa, 50.0, 5).unwrap();
        assert!((curve.coincidence[0] - 1.0).abs() < 1e-3);
        assert!((curve.coincidence[4] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn delay_refinement_is_stable() {
        let jsa = type_ii_jsa(512);
        let a = dip_curve(&jsa, 10.0, 2001).unwrap();
        let b = dip_curve(&jsa, 10.0, 4001).unwrap();
        assert!((a.visibility / b.visibility - 1.0).abs() < 1e-3);
        assert!(
            (a.dip_fwhm / b.dip_fwhm - 1.0).abs() < 1e-3,
            "{} {}",
            a.dip_fwhm,
            b.dip_fwhm
        );
    }

    #[test]
    fn narrow_span_is_rejected() {
        let jsa = type_ii_jsa(256);
        assert!(matches!(
            dip_curve(&jsa, 0.3, 21),
            Err(HomError::SpanTooSmall { .. })
        ));
        assert!(dip_curve(&jsa, 10.0, 100).is_err());
        assert!(dip_curve(&jsa, -1.0, 101).is_err());
    }

    #[test]
    fn group_delay_estimate() {
        let set = SellmeierSet::ktp();
        let pump = PumpSpec::default();
        let wp = pump.center_omega();
        let c = CrystalSpec::spdc_ppktp(0.0);
        let t = degenerate_temperature(&set, &c, wp).unwrap();
        let c = c.with_temperature(t);
        let est = dip_fwhm_vs_group_delay(&set, &c, wp).unwrap();
        let measured = dip_curve(&type_ii_jsa(512), 10.0, 2001).unwrap().dip_fwhm;
        assert!(
            est / measured > 0.5 && est / measured < 2.0,
            "{est} vs {measured}"
        );

        let mut long = c;
        long.length_mm *= 2.0;
        let est2 = dip_fwhm_vs_group_delay(&set, &long, wp).unwrap();
        assert!((est2 / est - 2.0).abs() < 1e-12);

        let type_i = CrystalSpec {
            conversion: ConversionType::TypeI,
            axes: AxisAssignment::TYPE_I,
            ..c
        };
        assert_eq!(dip_fwhm_vs_group_delay(&set, &type_i, wp).unwrap(), 0.0);
    }
}
