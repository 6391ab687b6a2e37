//! Command-line front end: configuration loading, subcommand dispatch and
//! artifact emission.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_config, ConfigError, RunConfig, TemperatureSetting};
use crate::dispersion::SellmeierSet;
use crate::export::{csv_grid, csv_table, json_document, write_text};
use crate::hom::{dip_curve, dip_fwhm_vs_group_delay, overlap_visibility, signed_overlap};
use crate::jsa::{
    build_jsa, coincidence_spectrum, convolve_instrument, fit_instrument_rbw, fwhm_3db,
    marginal_spectrum, spectral_report, FrequencyGrid, JsaGrid, PhaseMatchModel, Photon, PumpSpec,
    SpectralReport,
};
use crate::phasematch::{
    degenerate_mismatch, degenerate_temperature_in, select_qpm_sign, taylor_coefficients,
    CrystalSpec, PhaseMatchError, QpmSign, DEFAULT_TEMPERATURE_BRACKET,
};
use crate::shg::{calibrate_gamma, circulating_power, linear_powers, power_curve, CavitySpec};
use crate::Error;

/// Measured values from the reference experiment. They are reported next
/// to the simulation for comparison and are not fitted.
const MEASURED_VISIBILITY: f64 = 0.95;
const MEASURED_VISIBILITY_UNCERTAINTY: f64 = 0.03;
const MEASURED_DIP_FWHM_PS: f64 = 1.28;

#[derive(Debug, Parser)]
#[command(
    name = "biphoton",
    version,
    about = "Frequency anti-correlated photon-pair source simulator"
)]
struct Cli {
    /// JSON run configuration (defaults apply to every omitted field).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,
    /// Reserved. The simulation is deterministic and draws no random numbers.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Joint spectral density grid.
    Jsa,
    /// Signal/idler marginals and the coincidence slice.
    Marginals,
    /// Hong–Ou–Mandel dip curve.
    Hom,
    /// Second-harmonic output versus fundamental input.
    ShgCurve,
    /// Degenerate phase-matching temperature and mismatch diagnostics.
    PmTemp,
    /// All figures of merit in one JSON document.
    Report,
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    if cli.seedless {
        let _ = writeln!(
            stderr,
            "error: --seedless is reserved; the simulation uses no random numbers"
        );
        return 1;
    }
    if cli.print_defaults {
        let _ = write!(stdout, "{}", RunConfig::defaults_json());
        return 0;
    }
    let Some(command) = cli.command else {
        let _ = writeln!(
            stderr,
            "error: a subcommand is required\n\n{}",
            <Cli as clap::CommandFactory>::command().render_usage()
        );
        return 1;
    };
    let result = load_config(cli.config.as_deref()).and_then(|mut config| {
        if let Some(out) = cli.out {
            config.output_dir = out;
        }
        execute(command, &config, stdout, stderr)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Read a configuration file; a relative `sellmeier_file` is taken relative
/// to the configuration's directory.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut config = parse_config(&text)?;
    if let (Some(file), Some(dir)) = (&config.sellmeier_file, path.parent()) {
        if file.is_relative() {
            config.sellmeier_file = Some(dir.join(file));
        }
    }
    Ok(config)
}

/// Physical inputs derived from a configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub set: SellmeierSet,
    pub pump: PumpSpec,
    /// Crystal at its operating temperature with the grating sign resolved.
    pub crystal: CrystalSpec,
    pub model: PhaseMatchModel,
    pub grid: FrequencyGrid,
    pub degenerate_temperature: Result<f64, PhaseMatchError>,
    pub temperature_source: &'static str,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self, Error> {
        let set = config.sellmeier_set()?;
        let pump = config.pump;
        let wp = pump.center_omega();
        let c = &config.crystal;
        let base = CrystalSpec {
            length_mm: c.length_mm,
            poling_period_um: c.poling_period_um,
            temperature_c: set.reference_temperature_c,
            qpm_sign: QpmSign::Plus,
            conversion: c.conversion,
            axes: c.axes(),
        };
        let qpm_sign = match c.qpm_sign.fixed() {
            Some(s) => s,
            None => select_qpm_sign(&set, &base, wp, DEFAULT_TEMPERATURE_BRACKET)?,
        };
        let base = CrystalSpec { qpm_sign, ..base };
        let degenerate = degenerate_temperature_in(&set, &base, wp, DEFAULT_TEMPERATURE_BRACKET);
        let (temperature, source) = match c.temperature_c {
            TemperatureSetting::Degenerate => (degenerate.clone()?, "degenerate"),
            TemperatureSetting::Celsius(t) => (t, "config"),
        };
        let grid = FrequencyGrid::around_degeneracy(
            &pump,
            config.grid.half_span_nm,
            config.grid.points_per_axis,
        )?;
        Ok(Self {
            set,
            pump,
            crystal: base.with_temperature(temperature),
            model: c.pm_model,
            grid,
            degenerate_temperature: degenerate,
            temperature_source: source,
        })
    }

    pub fn build_jsa(&self) -> Result<JsaGrid, Error> {
        Ok(build_jsa(
            &self.set,
            &self.pump,
            &self.crystal,
            &self.grid,
            self.model,
        )?)
    }
}

fn write_file(dir: &Path, name: &str, text: &str, stdout: &mut dyn Write) -> Result<(), Error> {
    let path = dir.join(name);
    write_text(&path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let _ = writeln!(stdout, "{}", path.display());
    Ok(())
}

fn warn_all(warnings: &[String], stderr: &mut dyn Write) {
    for w in warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
}

/// Run one subcommand against a validated configuration.
pub fn execute(
    command: Command,
    config: &RunConfig,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Error> {
    let dir = config.output_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    match command {
        Command::Jsa => {
            let setup = Setup::new(config)?;
            let jsa = setup.build_jsa()?;
            warn_all(jsa.warnings(), stderr);
            let lambda = jsa.wavelengths_nm();
            let density: Vec<f64> = jsa.amplitude().iter().map(|a| a * a).collect();
            let csv = csv_grid("signal_nm\\idler_nm", &lambda, &lambda, &density);
            write_file(dir, "jsa.csv", &csv, stdout)?;
            write_file(
                dir,
                "jsa.json",
                &json_document(&JsaMetadata::new(&setup, &jsa)),
                stdout,
            )?;
        }
        Command::Marginals => {
            let setup = Setup::new(config)?;
            let jsa = setup.build_jsa()?;
            warn_all(jsa.warnings(), stderr);
            let sig = marginal_spectrum(&jsa, Photon::Signal);
            let idl = marginal_spectrum(&jsa, Photon::Idler);
            let coinc = coincidence_spectrum(&jsa);
            let rows = (0..jsa.points()).map(|k| {
                [
                    sig.wavelength_nm[k],
                    sig.omega[k],
                    sig.values[k],
                    idl.values[k],
                    coinc.spectrum.values[k],
                ]
            });
            let csv = csv_table(
                &[
                    "wavelength_nm",
                    "omega_rad_per_ps",
                    "signal",
                    "idler",
                    "coincidence",
                ],
                rows,
            );
            write_file(dir, "marginals.csv", &csv, stdout)?;
            let report = spectral_report(&jsa)?;
            write_file(dir, "marginals.json", &json_document(&report), stdout)?;
        }
        Command::Hom => {
            let setup = Setup::new(config)?;
            let jsa = setup.build_jsa()?;
            warn_all(jsa.warnings(), stderr);
            let (summary, curve) = hom_summary(&setup, &jsa, config)?;
            let rows = curve
                .delays
                .iter()
                .zip(&curve.coincidence)
                .map(|(d, c)| [*d, *c]);
            write_file(
                dir,
                "hom.csv",
                &csv_table(&["delay_ps", "coincidence"], rows),
                stdout,
            )?;
            write_file(dir, "hom.json", &json_document(&summary), stdout)?;
        }
        Command::ShgCurve => {
            let (summary, cavity) = shg_summary(config)?;
            let p1 = linear_powers(config.cavity.curve_max_w, config.cavity.curve_points);
            let mut rows = Vec::with_capacity(p1.len());
            let mut failures = Vec::new();
            for (p, r) in p1.iter().zip(power_curve(&p1, &cavity)) {
                match r {
                    Ok(op) => rows.push([op.p1, op.pc, op.p2, op.rm, op.residual]),
                    Err(e) => {
                        rows.push([*p, f64::NAN, f64::NAN, f64::NAN, f64::NAN]);
                        failures.push(CurveFailure {
                            p1_w: *p,
                            error: e.to_string(),
                        });
                    }
                }
            }
            let csv = csv_table(&["p1_W", "pc_W", "p2_W", "rm", "residual"], rows);
            write_file(dir, "shg_curve.csv", &csv, stdout)?;
            let doc = ShgCurveDocument {
                summary,
                curve_max_w: config.cavity.curve_max_w,
                curve_points: config.cavity.curve_points,
                failures,
            };
            write_file(dir, "shg_curve.json", &json_document(&doc), stdout)?;
        }
        Command::PmTemp => {
            let setup = Setup::new(config)?;
            let t = setup.degenerate_temperature.clone()?;
            let pm = phase_match_summary(&setup)?;
            let _ = writeln!(stdout, "degenerate temperature: {t:.4} C");
            let _ = writeln!(
                stdout,
                "dk0 at degenerate temperature: {:.3e} rad/um",
                pm.dk0_at_degenerate_rad_per_um.unwrap_or(f64::NAN)
            );
            let _ = writeln!(
                stdout,
                "operating temperature: {:.4} C ({}), dk0 {:.3e} rad/um",
                pm.operating_temperature_c, pm.temperature_source, pm.dk0_at_operating_rad_per_um
            );
            let _ = writeln!(
                stdout,
                "qpm sign: {:+}, tau_s {:.6e} ps/um, tau_i {:.6e} ps/um",
                pm.qpm_sign.value(),
                pm.tau_s_ps_per_um,
                pm.tau_i_ps_per_um
            );
            write_file(dir, "pm_temp.json", &json_document(&pm), stdout)?;
        }
        Command::Report => {
            let setup = Setup::new(config)?;
            let report = full_report(&setup, config)?;
            warn_all(&report.spectral.warnings, stderr);
            write_file(dir, "report.json", &json_document(&report), stdout)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct GridMetadata {
    center_rad_per_ps: f64,
    half_span_rad_per_ps: f64,
    step_rad_per_ps: f64,
    points_per_axis: usize,
    signal_min_nm: f64,
    signal_max_nm: f64,
}

#[derive(Debug, Serialize)]
struct JsaMetadata {
    layout: &'static str,
    grid: GridMetadata,
    crystal: CrystalSpec,
    pump: PumpSpec,
    qpm_sign: QpmSign,
    pm_model: PhaseMatchModel,
    temperature_source: &'static str,
    sellmeier_provenance: String,
    normalization: f64,
    warnings: Vec<String>,
}

impl JsaMetadata {
    fn new(setup: &Setup, jsa: &JsaGrid) -> Self {
        let g = jsa.grid();
        let l = jsa.wavelengths_nm();
        Self {
            layout: "rows: signal wavelength (nm), columns: idler wavelength (nm), values: |A|^2 in (ps/rad)^2",
            grid: GridMetadata {
                center_rad_per_ps: g.center,
                half_span_rad_per_ps: g.half_span,
                step_rad_per_ps: g.step(),
                points_per_axis: g.points_per_axis,
                signal_min_nm: l[l.len() - 1],
                signal_max_nm: l[0],
            },
            crystal: setup.crystal,
            pump: setup.pump,
            qpm_sign: setup.crystal.qpm_sign,
            pm_model: setup.model,
            temperature_source: setup.temperature_source,
            sellmeier_provenance: setup.set.provenance.clone(),
            normalization: jsa.normalization(),
            warnings: jsa.warnings().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HomSummary {
    /// 1 − min C from the dip curve.
    pub visibility: f64,
    /// Magnitude overlap `Σ|A·Aᵀ|/Σ|A|²`.
    pub overlap_visibility: f64,
    pub signed_overlap: f64,
    pub dip_center_ps: f64,
    pub dip_fwhm_ps: f64,
    /// `|τs − τi|·L`, the full base of the triangular dip.
    pub group_delay_estimate_ps: f64,
    pub delay_span_ps: f64,
    pub points: usize,
}

fn hom_summary(
    setup: &Setup,
    jsa: &JsaGrid,
    config: &RunConfig,
) -> Result<(HomSummary, crate::hom::HomCurve), Error> {
    let curve = dip_curve(jsa, config.hom.delay_span_ps, config.hom.points)?;
    let estimate = dip_fwhm_vs_group_delay(&setup.set, &setup.crystal, setup.pump.center_omega())?;
    Ok((
        HomSummary {
            visibility: curve.visibility,
            overlap_visibility: overlap_visibility(jsa),
            signed_overlap: signed_overlap(jsa),
            dip_center_ps: curve.dip_center,
            dip_fwhm_ps: curve.dip_fwhm,
            group_delay_estimate_ps: estimate,
            delay_span_ps: config.hom.delay_span_ps,
            points: config.hom.points,
        },
        curve,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct ShgSummary {
    pub cavity: CavitySpec,
    /// "calibrated" or "config".
    pub gamma_source: &'static str,
    pub p1_ref_w: f64,
    pub p2_target_w: f64,
    pub p2_at_ref_w: f64,
    pub efficiency_at_ref: f64,
    pub pc_at_ref_w: f64,
    pub rm_at_ref: f64,
    pub residual_at_ref_w: f64,
}

fn shg_summary(config: &RunConfig) -> Result<(ShgSummary, CavitySpec), Error> {
    let k = &config.cavity;
    let base = k.spec();
    let p1 = k.input_power_w;
    let target = config.pump.power_w;
    let (cavity, source) = match k.gamma_sh {
        Some(_) => (base, "config"),
        None => (
            base.with_gamma(calibrate_gamma(p1, target, &base)?),
            "calibrated",
        ),
    };
    let op = circulating_power(p1, &cavity)?;
    Ok((
        ShgSummary {
            cavity,
            gamma_source: source,
            p1_ref_w: p1,
            p2_target_w: target,
            p2_at_ref_w: op.p2,
            efficiency_at_ref: op.p2 / p1,
            pc_at_ref_w: op.pc,
            rm_at_ref: op.rm,
            residual_at_ref_w: op.residual,
        },
        cavity,
    ))
}

#[derive(Debug, Serialize)]
struct CurveFailure {
    p1_w: f64,
    error: String,
}

#[derive(Debug, Serialize)]
struct ShgCurveDocument {
    #[serde(flatten)]
    summary: ShgSummary,
    curve_max_w: f64,
    curve_points: usize,
    failures: Vec<CurveFailure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseMatchSummary {
    pub sellmeier_provenance: String,
    pub poling_period_um: f64,
    pub pump_wavelength_nm: f64,
    pub qpm_sign: QpmSign,
    pub search_bracket_c: [f64; 2],
    /// `null` when no root lies in the bracket.
    pub degenerate_temperature_c: Option<f64>,
    pub dk0_at_degenerate_rad_per_um: Option<f64>,
    pub operating_temperature_c: f64,
    pub temperature_source: &'static str,
    pub dk0_at_operating_rad_per_um: f64,
    pub tau_s_ps_per_um: f64,
    pub tau_i_ps_per_um: f64,
    pub degenerate_solve_error: Option<String>,
}

pub fn phase_match_summary(setup: &Setup) -> Result<PhaseMatchSummary, Error> {
    let wp = setup.pump.center_omega();
    let c = &setup.crystal;
    let t_deg = setup.degenerate_temperature.as_ref().ok().copied();
    let dk_deg = t_deg
        .map(|t| degenerate_mismatch(&setup.set, c, wp, t))
        .transpose()?;
    let taylor = taylor_coefficients(&setup.set, c, wp)?;
    Ok(PhaseMatchSummary {
        sellmeier_provenance: setup.set.provenance.clone(),
        poling_period_um: c.poling_period_um,
        pump_wavelength_nm: setup.pump.center_wavelength_nm,
        qpm_sign: c.qpm_sign,
        search_bracket_c: [DEFAULT_TEMPERATURE_BRACKET.0, DEFAULT_TEMPERATURE_BRACKET.1],
        degenerate_temperature_c: t_deg,
        dk0_at_degenerate_rad_per_um: dk_deg,
        operating_temperature_c: c.temperature_c,
        temperature_source: setup.temperature_source,
        dk0_at_operating_rad_per_um: degenerate_mismatch(&setup.set, c, wp, c.temperature_c)?,
        tau_s_ps_per_um: taylor.tau_s,
        tau_i_ps_per_um: taylor.tau_i,
        degenerate_solve_error: setup
            .degenerate_temperature
            .as_ref()
            .err()
            .map(|e| e.to_string()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InstrumentComparison {
    pub rbw_nm: f64,
    /// "fitted" or "config".
    pub rbw_source: &'static str,
    pub theory_marginal_fwhm_nm: f64,
    pub convolved_marginal_fwhm_nm: f64,
    pub measured_marginal_fwhm_nm: f64,
    pub theory_coincidence_nm: f64,
    pub convolved_coincidence_nm: f64,
    pub measured_coincidence_nm: f64,
    /// Convolved minus theory coincidence width.
    pub coincidence_shift_nm: f64,
    pub coincidence_moves_toward_measured: bool,
    /// Convolved minus measured coincidence width.
    pub coincidence_residual_nm: f64,
    pub convolved_r: f64,
}

pub fn instrument_comparison(
    jsa: &JsaGrid,
    config: &RunConfig,
) -> Result<InstrumentComparison, Error> {
    let inst = &config.instrument;
    let marginal = marginal_spectrum(jsa, Photon::Signal);
    let coinc = coincidence_spectrum(jsa).spectrum;
    let (rbw, source) = match inst.rbw_nm {
        Some(r) => (r, "config"),
        None => (
            fit_instrument_rbw(&marginal, inst.measured_marginal_fwhm_nm)?,
            "fitted",
        ),
    };
    let m0 = fwhm_3db(&marginal)?;
    let c0 = fwhm_3db(&coinc)?;
    let m1 = fwhm_3db(&convolve_instrument(&marginal, rbw)?)?;
    let c1 = fwhm_3db(&convolve_instrument(&coinc, rbw)?)?;
    let target = inst.measured_coincidence_nm;
    Ok(InstrumentComparison {
        rbw_nm: rbw,
        rbw_source: source,
        theory_marginal_fwhm_nm: m0,
        convolved_marginal_fwhm_nm: m1,
        measured_marginal_fwhm_nm: inst.measured_marginal_fwhm_nm,
        theory_coincidence_nm: c0,
        convolved_coincidence_nm: c1,
        measured_coincidence_nm: target,
        coincidence_shift_nm: c1 - c0,
        coincidence_moves_toward_measured: (c1 - c0).signum() == (target - c0).signum(),
        coincidence_residual_nm: c1 - target,
        convolved_r: m1 / c1,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasuredValues {
    pub note: &'static str,
    pub hom_visibility: f64,
    pub hom_visibility_uncertainty: f64,
    pub hom_dip_fwhm_ps: f64,
    pub marginal_fwhm_nm: f64,
    pub coincidence_width_nm: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub spectral: SpectralReport,
    pub hom: HomSummary,
    pub shg: ShgSummary,
    pub phase_matching: PhaseMatchSummary,
    pub instrument: InstrumentComparison,
    pub measured: MeasuredValues,
}

pub fn full_report(setup: &Setup, config: &RunConfig) -> Result<Report, Error> {
    let jsa = setup.build_jsa()?;
    let spectral = spectral_report(&jsa)?;
    let (hom, _) = hom_summary(setup, &jsa, config)?;
    let (shg, _) = shg_summary(config)?;
    let inst = &config.instrument;
    Ok(Report {
        spectral,
        hom,
        shg,
        phase_matching: phase_match_summary(setup)?,
        instrument: instrument_comparison(&jsa, config)?,
        measured: MeasuredValues {
            note: "experimental values, listed for comparison only",
            hom_visibility: MEASURED_VISIBILITY,
            hom_visibility_uncertainty: MEASURED_VISIBILITY_UNCERTAINTY,
            hom_dip_fwhm_ps: MEASURED_DIP_FWHM_PS,
            marginal_fwhm_nm: inst.measured_marginal_fwhm_nm,
            coincidence_width_nm: inst.measured_coincidence_nm,
            r: inst.measured_marginal_fwhm_nm / inst.measured_coincidence_nm,
        },
    })
}
