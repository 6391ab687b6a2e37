//! Acceptance suite. Every criterion writes one `PASS`/`FAIL` line to the
//! real stdout (bypassing the test harness capture) and then asserts.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use serde_json::Value;

use biphoton::cli::{instrument_comparison, Setup};
use biphoton::config::RunConfig;
use biphoton::hom::{dip_curve, overlap_visibility};
use biphoton::jsa::{
    entanglement_parameter, fwhm_3db, marginal_spectrum, schmidt_number, FrequencyGrid, JsaGrid,
    Photon,
};
use biphoton::shg::{circulating_power, enhancement_rhs, linear_powers, power_curve, CavitySpec};
use common::run_cli;

fn report_line(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "ACCEPTANCE {criterion} {verdict}: {detail}");
    let _ = out.flush();
}

fn within_rel(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

/// Default `report` output and its wall-clock time.
fn default_report() -> &'static (Value, Duration) {
    static CELL: OnceLock<(Value, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let start = Instant::now();
        let out = run_cli(&["report", "--out", "out"], dir.path());
        let elapsed = start.elapsed();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        (
            common::read_json(&dir.path().join("out/report.json")),
            elapsed,
        )
    })
}

fn f(v: &Value, path: &str) -> f64 {
    let mut cur = v;
    for key in path.split('.') {
        cur = &cur[key];
    }
    cur.as_f64()
        .unwrap_or_else(|| panic!("{path} is not a number: {cur}"))
}

#[test]
fn criterion_1_marginal_spectra() {
    let (r, elapsed) = default_report();
    let sc = f(r, "spectral.signal_center_nm");
    let ic = f(r, "spectral.idler_center_nm");
    let sw = f(r, "spectral.signal_fwhm_nm");
    let iw = f(r, "spectral.idler_fwhm_nm");
    let pass = (sc - 1560.0).abs() <= 0.2
        && (ic - 1559.9).abs() <= 0.2
        && within_rel(sw, 2.4, 0.10)
        && within_rel(iw, 2.4, 0.10)
        && elapsed.as_secs_f64() < 10.0;
    report_line(
        1,
        pass,
        &format!(
            "centers {sc:.3}/{ic:.3} nm (1560.0/1559.9 ± 0.2), widths {sw:.4}/{iw:.4} nm (2.4 ± 10 %), report runtime {:.2} s (< 10 s)",
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_2_coincidence_width() {
    let (r, _) = default_report();
    let c = f(r, "spectral.coincidence_width_nm");
    let pass = within_rel(c, 0.43, 0.10);
    report_line(
        2,
        pass,
        &format!("coincidence width {c:.4} nm (0.43 ± 10 %)"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_entanglement_parameter() {
    let (r, _) = default_report();
    let value = f(r, "spectral.r");
    let pass = within_rel(value, 5.58, 0.10);
    report_line(3, pass, &format!("R = {value:.4} (5.58 ± 10 %)"));
    assert!(pass);
}

#[test]
fn criterion_4_hom() {
    let (r, _) = default_report();
    let v = f(r, "hom.visibility");
    let w = f(r, "hom.dip_fwhm_ps");
    let pass = v >= 0.99 && within_rel(w, 1.48, 0.10);
    report_line(
        4,
        pass,
        &format!("visibility {v:.6} (>= 0.99), dip FWHM {w:.4} ps (1.48 ± 10 %)"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_shg() {
    let (r, _) = default_report();
    let p2 = f(r, "shg.p2_at_ref_w");
    let eff = f(r, "shg.efficiency_at_ref");

    let cavity: CavitySpec = serde_json::from_value(r["shg"]["cavity"].clone()).unwrap();
    let (x1, x2) = (1e-4, 1e-3);
    let p_1 = circulating_power(x1, &cavity).unwrap().p2;
    let p_2 = circulating_power(x2, &cavity).unwrap().p2;
    let slope = (p_2 / p_1).ln() / (x2 / x1).ln();

    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&["shg-curve", "--out", "out"], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/shg_curve.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    let monotone = rows.windows(2).all(|w| w[1][2] > w[0][2]);
    let covers = rows.first().unwrap()[0] == 0.0 && rows.last().unwrap()[0] == 1.5;

    let pass = (p2 - 0.742).abs() <= 1e-6
        && (eff - 0.526).abs() <= 1e-3
        && (slope - 2.0).abs() <= 0.02
        && monotone
        && covers;
    report_line(
        5,
        pass,
        &format!(
            "p2(1.41 W) = {p2:.9} W (0.742 ± 1e-6), efficiency {:.3} % (52.6 ± 0.1), low-power slope {slope:.4} (2.00 ± 0.02), curve on [0, 1.5] W monotone: {monotone}",
            100.0 * eff
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_phase_matching() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&["pm-temp", "--out", "out"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let pm = common::read_json(&dir.path().join("out/pm_temp.json"));
    let t = f(&pm, "degenerate_temperature_c");
    let dk0 = f(&pm, "dk0_at_degenerate_rad_per_um");
    let in_band = (t - 64.0).abs() <= 10.0;
    let root = dk0.abs() < 1e-9;
    let pass = in_band && root;
    report_line(
        6,
        pass,
        &format!(
            "T_deg = {t:.3} C (64 ± 10: {}), |dk0(T_deg)| = {:.2e} rad/um (< 1e-9: {}); Sellmeier set: {}",
            if in_band { "ok" } else { "out of band" },
            dk0.abs(),
            if root { "ok" } else { "no" },
            pm["sellmeier_provenance"].as_str().unwrap_or("?")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_instrument_comparison() {
    let (r, _) = default_report();
    let m = f(r, "instrument.convolved_marginal_fwhm_nm");
    let c0 = f(r, "instrument.theory_coincidence_nm");
    let c1 = f(r, "instrument.convolved_coincidence_nm");
    let rbw = f(r, "instrument.rbw_nm");
    let toward = r["instrument"]["coincidence_moves_toward_measured"]
        .as_bool()
        .unwrap();
    let documented = r["measured"]["hom_visibility"].as_f64() == Some(0.95)
        && r["measured"]["hom_dip_fwhm_ps"].as_f64() == Some(1.28);
    let pass = (m - 3.22).abs() <= 0.05 && toward && (c1 - c0) > 0.0 && documented;
    report_line(
        7,
        pass,
        &format!(
            "fitted RBW {rbw:.4} nm, convolved marginal {m:.4} nm (3.22 ± 0.05), coincidence {c0:.4} -> {c1:.4} nm (shift {:+.4} nm toward 0.52, overshoot {:+.4} nm), measured V/dip listed as non-targets: {documented}",
            c1 - c0,
            c1 - 0.52
        ),
    );
    assert!(pass);
}

fn separable_symmetric(points: usize) -> JsaGrid {
    let g = FrequencyGrid::new(1207.5, 6.0, points).unwrap();
    let c = g.center;
    let h = |x: f64| (-(x - c).powi(2) / (4.0 * 0.6 * 0.6)).exp();
    JsaGrid::from_fn(g, 2.0 * c, |ws, wi| h(ws) * h(wi)).unwrap()
}

#[test]
fn criterion_8_property_suite() {
    let mut checks: Vec<(String, bool)> = Vec::new();
    let mut check = |name: String, ok: bool| checks.push((name, ok));

    let config = RunConfig::default();
    let setup = Setup::new(&config).unwrap();
    let jsa = setup.build_jsa().unwrap();
    let norm = jsa.total_density();
    check(
        format!("normalization {norm:.12}"),
        (norm - 1.0).abs() < 1e-9,
    );

    let sep = separable_symmetric(256);
    let r = entanglement_parameter(&sep).unwrap().r;
    check(format!("separable R {r:.6}"), (r - 1.0).abs() < 0.01);
    let schmidt = schmidt_number(&sep).unwrap();
    check(
        format!("separable K {:.9}", schmidt.k),
        (schmidt.k - 1.0).abs() < 1e-6,
    );
    let v = overlap_visibility(&sep);
    check(format!("separable V {v:.12}"), (v - 1.0).abs() < 1e-9);
    let curve = dip_curve(&sep, 20.0, 801).unwrap();
    let min = curve
        .coincidence
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    check(format!("separable dip minimum {min:.2e}"), min.abs() < 1e-9);

    let k_default = schmidt_number(&jsa).unwrap();
    let sum: f64 = k_default.weights.iter().sum();
    check(
        format!("Schmidt weights sum {sum:.12}"),
        (sum - 1.0).abs() < 1e-9,
    );

    let base = CavitySpec::default();
    let gamma = biphoton::shg::calibrate_gamma(1.41, 0.742, &base).unwrap();
    let cavity = base.with_gamma(gamma);
    let worst = power_curve(&linear_powers(1.5, 151), &cavity)
        .into_iter()
        .map(|p| {
            let p = p.unwrap();
            p.residual / p.pc.max(1.0)
        })
        .fold(0.0, f64::max);
    check(format!("fixed-point residual {worst:.2e}"), worst < 1e-9);
    let closed = enhancement_rhs(0.0, 1.41, &base).unwrap();
    let solved = circulating_power(1.41, &base).unwrap().pc;
    let dev = (solved - closed).abs() / closed.max(1.0);
    check(format!("gamma=0 closed form {dev:.2e}"), dev < 1e-12);

    let mut coarse_config = config.clone();
    coarse_config.grid.points_per_axis = 512;
    let coarse = Setup::new(&coarse_config).unwrap().build_jsa().unwrap();
    let w1 = fwhm_3db(&marginal_spectrum(&coarse, Photon::Signal)).unwrap();
    let w2 = fwhm_3db(&marginal_spectrum(&jsa, Photon::Signal)).unwrap();
    let drift = (w1 / w2 - 1.0).abs();
    check(
        format!("marginal width 512->1024 drift {drift:.2e}"),
        drift < 1e-3,
    );
    let k1 = schmidt_number(&coarse).unwrap().k;
    let kd = (k1 / k_default.k - 1.0).abs();
    check(format!("K 512->1024 drift {kd:.2e}"), kd < 0.02);
    let h1 = dip_curve(&jsa, 10.0, 2001).unwrap();
    let h2 = dip_curve(&jsa, 10.0, 4001).unwrap();
    let hd = (h1.dip_fwhm / h2.dip_fwhm - 1.0)
        .abs()
        .max((h1.visibility / h2.visibility - 1.0).abs());
    check(format!("HOM delay refinement drift {hd:.2e}"), hd < 1e-3);
    let inst = instrument_comparison(&jsa, &config).unwrap();
    check(
        format!("instrument fit {:.6} nm", inst.convolved_marginal_fwhm_nm),
        (inst.convolved_marginal_fwhm_nm - 3.22).abs() < 1e-4,
    );

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut identical = true;
    for cmd in ["jsa", "marginals", "hom", "shg-curve", "pm-temp", "report"] {
        for d in [&a, &b] {
            assert!(run_cli(&[cmd, "--out", "out"], d.path()).status.success());
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    for name in &names {
        let x = std::fs::read(a.path().join("out").join(name)).unwrap();
        let y = std::fs::read(b.path().join("out").join(name)).unwrap();
        identical &= x == y;
    }
    check(
        format!("byte-identical outputs ({} files)", names.len()),
        identical && names.len() == 10,
    );

    let failed: Vec<_> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(n, _)| n.clone())
        .collect();
    let pass = failed.is_empty();
    let detail = if pass {
        format!("{} properties hold", checks.len())
    } else {
        format!("failed: {}", failed.join("; "))
    };
    report_line(8, pass, &detail);
    for (name, ok) in &checks {
        println!("  [{}] {name}", if *ok { "ok" } else { "FAILED" });
    }
    assert!(pass);
}
