use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use oamspec_core::deviation::{average_fractional_overlap, fit_waist, overlap_percentage, DeviationConfig};
use oamspec_core::interferometer::{simulate_trace, InterferometerConfig, PolarizationCurve};
use oamspec_core::reconstruct::{
    difference_trace, fit_phase_calibration, four_shot_spectrum_with, polarization_correct, two_shot_spectrum_with,
    ReconstructOptions, ReconstructionResult,
};
use oamspec_core::smf::{smf_spectrum_response, SmfConfig};
use oamspec_core::states::Spectrum;
use oamspec_core::trace::IntensityTrace;
use serde::{Deserialize, Serialize};

use crate::config::{read_polarization, read_spectrum, LoadedConfig, ProtocolChoice};
use crate::error::{CliError, CliResult};
use crate::output::{open, read_to_string, OutDir};
use crate::plot::{bar_chart, line_chart, Series};

/// Stem of each shot's files and its nominal phase, in four-shot order.
pub const SHOTS: [(&str, f64); 4] = [
    ("trace_d0", 0.0),
    ("trace_dpi", PI),
    ("trace_d3pi2", 1.5 * PI),
    ("trace_dpi2", 0.5 * PI),
];

pub const INPUT_SPECTRUM: &str = "input_spectrum.json";
pub const RESULT_JSON: &str = "reconstruction.json";
pub const BARS_CSV: &str = "spectrum_bars.csv";

fn shot_count(protocol: ProtocolChoice) -> usize {
    match protocol {
        ProtocolChoice::TwoShot => 2,
        ProtocolChoice::FourShot => 4,
    }
}

/// Traces for every shot of `protocol`; shot `k` is sweep `k` of the
/// acquisition and draws its own noise.
pub fn simulate_shots(
    spectrum: &Spectrum,
    cfg: &InterferometerConfig,
    thetas: &[f64],
    protocol: ProtocolChoice,
) -> CliResult<Vec<IntensityTrace>> {
    SHOTS[..shot_count(protocol)]
        .iter()
        .enumerate()
        .map(|(k, &(_, delta))| {
            let shot = InterferometerConfig {
                noise: cfg.noise.for_sweep(k as u32),
                ..cfg.clone()
            };
            Ok(simulate_trace(spectrum, &shot, thetas, delta)?)
        })
        .collect()
}

/// Spectrum recovery from shots ordered as in [`SHOTS`].
pub fn reconstruct_shots(
    traces: &[IntensityTrace],
    protocol: ProtocolChoice,
    curve: &PolarizationCurve,
    n: usize,
    enforce_nyquist: bool,
) -> CliResult<ReconstructionResult> {
    let opts = ReconstructOptions {
        enforce_nyquist,
        ..ReconstructOptions::default()
    };
    if traces.len() < shot_count(protocol) {
        return Err(CliError::config(format!(
            "{:?} needs {} traces, got {}",
            protocol,
            shot_count(protocol),
            traces.len()
        )));
    }
    Ok(match protocol {
        ProtocolChoice::TwoShot => {
            let diff = polarization_correct(&difference_trace(&traces[0], &traces[1])?, curve)?;
            two_shot_spectrum_with(&diff, n, opts)?
        }
        ProtocolChoice::FourShot => {
            four_shot_spectrum_with([&traces[0], &traces[1], &traces[2], &traces[3]], curve, n, opts)?
        }
    })
}

pub struct SimulateArgs<'a> {
    pub config: &'a Path,
    pub out_dir: &'a Path,
    pub seed: Option<u64>,
    pub protocol: Option<ProtocolChoice>,
}

pub fn cmd_simulate(args: SimulateArgs) -> CliResult<Vec<PathBuf>> {
    let loaded = LoadedConfig::load(args.config)?;
    let state = loaded.state()?;
    let spectrum = state.spectrum();
    let cfg = loaded.interferometer(args.seed)?;
    let thetas = loaded.thetas(state.n())?;
    let protocol = args.protocol.unwrap_or(loaded.run.protocol);
    let traces = simulate_shots(&spectrum, &cfg, &thetas, protocol)?;

    let out = OutDir::create(args.out_dir)?;
    let mut written = Vec::new();
    for (trace, (stem, _)) in traces.iter().zip(SHOTS) {
        written.push(out.write_with(&format!("{stem}.csv"), |w| Ok(trace.write_csv(w)?))?);
        written.push(out.write_with(&format!("{stem}.json"), |w| {
            trace.write_sidecar(&mut *w)?;
            w.write_all(b"\n").map_err(|e| CliError::io(Path::new(stem), e))
        })?);
    }
    written.push(out.write_json(INPUT_SPECTRUM, &spectrum)?);
    Ok(written)
}

pub fn load_trace(dir: &Path, stem: &str) -> CliResult<IntensityTrace> {
    let meta = IntensityTrace::read_sidecar(open(&dir.join(format!("{stem}.json")))?)?;
    Ok(IntensityTrace::read_csv(open(&dir.join(format!("{stem}.csv")))?, meta)?)
}

pub struct ReconstructArgs<'a> {
    pub config: Option<&'a Path>,
    pub traces_dir: &'a Path,
    pub out_dir: &'a Path,
    pub protocol: Option<ProtocolChoice>,
    pub n: Option<usize>,
    pub polarization: Option<&'a Path>,
    pub reference: Option<&'a Path>,
    pub allow_undersampled: bool,
    pub plot: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub n: usize,
    pub traces: Vec<String>,
    pub config_hashes: Vec<String>,
    #[serde(flatten)]
    pub result: ReconstructionResult,
}

#[derive(Serialize)]
struct BarRow {
    l: i32,
    #[serde(rename = "S_in")]
    s_in: Option<f64>,
    #[serde(rename = "S_ob")]
    s_ob: f64,
}

pub fn cmd_reconstruct(args: ReconstructArgs) -> CliResult<Vec<PathBuf>> {
    let loaded = args.config.map(LoadedConfig::load).transpose()?;
    let protocol = args
        .protocol
        .or(loaded.as_ref().map(|c| c.run.protocol))
        .unwrap_or_default();
    let stems: Vec<&str> = SHOTS[..shot_count(protocol)].iter().map(|s| s.0).collect();
    let traces = stems
        .iter()
        .map(|stem| load_trace(args.traces_dir, stem))
        .collect::<CliResult<Vec<_>>>()?;

    let reference_path = args
        .reference
        .map(Path::to_path_buf)
        .or_else(|| Some(args.traces_dir.join(INPUT_SPECTRUM)).filter(|p| p.exists()));
    let reference = reference_path.as_deref().map(read_spectrum).transpose()?;

    let curve = match (args.polarization, &loaded) {
        (Some(p), _) => read_polarization(p)?,
        (None, Some(c)) => c.polarization()?,
        (None, None) => PolarizationCurve::Ideal,
    };
    let n = args
        .n
        .or(loaded.as_ref().and_then(|c| c.run.n))
        .or(reference.as_ref().map(Spectrum::n))
        .unwrap_or_else(|| (traces[0].len().saturating_sub(1) / 2).max(1));
    if n == 0 {
        return Err(CliError::config("n must be at least 1"));
    }
    let allow = args.allow_undersampled || loaded.as_ref().is_some_and(|c| c.run.allow_undersampled);
    let mut result = reconstruct_shots(&traces, protocol, &curve, n, !allow)?;
    if let Some(r) = &reference {
        result = result.with_reference(r);
    }

    let out = OutDir::create(args.out_dir)?;
    let report = ReconstructionReport {
        n,
        traces: stems.iter().map(|s| format!("{s}.csv")).collect(),
        config_hashes: traces.iter().map(|t| t.meta.config_hash.clone()).collect(),
        result,
    };
    let mut written = vec![out.write_json(RESULT_JSON, &report)?];
    let spectrum = &report.result.spectrum;
    written.push(out.write_with(BARS_CSV, |w| {
        let mut csv = csv_writer(w);
        for (l, s) in spectrum.iter() {
            csv.serialize(BarRow {
                l,
                s_in: reference.as_ref().map(|r| r.get(l)),
                s_ob: s,
            })
            .map_err(oamspec_core::Error::from)?;
        }
        csv.flush().map_err(|e| CliError::io(Path::new(BARS_CSV), e))
    })?);
    if args.plot {
        let mut series = Vec::new();
        if let Some(r) = &reference {
            series.push(Series {
                label: "input",
                color: "#888888",
                points: r.iter().map(|(l, s)| (f64::from(l), s)).collect(),
            });
        }
        series.push(Series {
            label: "reconstructed",
            color: "#1f77b4",
            points: spectrum.iter().map(|(l, s)| (f64::from(l), s)).collect(),
        });
        written.push(out.write_text("spectrum.svg", &bar_chart("OAM spectrum", "l", "S_l", &series))?);
    }
    Ok(written)
}

fn csv_writer(w: &mut dyn std::io::Write) -> csv::Writer<&mut dyn std::io::Write> {
    csv::Writer::from_writer(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmfCompareConfig {
    #[serde(default)]
    pub smf: SmfConfig,
    /// Radial weights `p -> w_p`; defaults to `p = 0` only.
    #[serde(default)]
    pub radial_weights: BTreeMap<u32, f64>,
}

pub struct SmfCompareArgs<'a> {
    pub spectrum: &'a Path,
    pub config: Option<&'a Path>,
    pub out_dir: &'a Path,
    pub sigma_over_w0: Option<f64>,
    pub kappa: Option<f64>,
    pub diffraction_efficiency: Option<f64>,
    pub plot: bool,
}

#[derive(Serialize)]
struct OverlayRow {
    l: i32,
    #[serde(rename = "S_in")]
    s_in: f64,
    apparent_value: f64,
}

/// Spectrum JSON, either a bare `[{l, s}]` array or an object with a
/// `spectrum` field such as a reconstruction report.
pub fn read_spectrum_any(path: &Path) -> CliResult<Spectrum> {
    let value: serde_json::Value = serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let inner = match value {
        serde_json::Value::Object(mut m) => m
            .remove("spectrum")
            .ok_or_else(|| CliError::config(format!("{}: no spectrum field", path.display())))?,
        other => other,
    };
    serde_json::from_value(inner).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn cmd_smf_compare(args: SmfCompareArgs) -> CliResult<Vec<PathBuf>> {
    let mut cfg = match args.config {
        Some(p) => serde_json::from_str::<SmfCompareConfig>(&read_to_string(p)?)
            .map_err(|e| CliError::config(format!("{}: {e}", p.display())))?,
        None => SmfCompareConfig {
            smf: SmfConfig::default(),
            radial_weights: BTreeMap::new(),
        },
    };
    if let Some(v) = args.sigma_over_w0 {
        cfg.smf.sigma_over_w0 = v;
    }
    if let Some(v) = args.kappa {
        cfg.smf.kappa = v;
    }
    if let Some(v) = args.diffraction_efficiency {
        cfg.smf.diffraction_efficiency = v;
    }
    if cfg.radial_weights.is_empty() {
        cfg.radial_weights.insert(0, 1.0);
    }
    cfg.smf.validate()?;
    let input = read_spectrum_any(args.spectrum)?;
    let apparent = smf_spectrum_response(&input, &cfg.radial_weights, &cfg.smf)?;

    let out = OutDir::create(args.out_dir)?;
    let mut written = vec![out.write_with("smf_overlay.csv", |w| {
        let mut csv = csv_writer(w);
        for e in &apparent.entries {
            csv.serialize(OverlayRow {
                l: e.l,
                s_in: input.get(e.l),
                apparent_value: e.apparent_value,
            })
            .map_err(oamspec_core::Error::from)?;
        }
        csv.flush().map_err(|e| CliError::io(Path::new("smf_overlay.csv"), e))
    })?];
    written.push(out.write_json("smf_config.json", &cfg)?);
    if args.plot {
        let series = [
            Series {
                label: "input",
                color: "#1f77b4",
                points: input.iter().map(|(l, s)| (f64::from(l), s)).collect(),
            },
            Series {
                label: "SMF apparent",
                color: "#d62728",
                points: apparent
                    .entries
                    .iter()
                    .map(|e| (f64::from(e.l), e.apparent_value))
                    .collect(),
            },
        ];
        written.push(out.write_text(
            "smf_overlay.svg",
            &bar_chart("SMF baseline", "l", "probability", &series),
        )?);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaistFit {
    pub omega0_urad: f64,
    pub target_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaSweep {
    pub max_omega0_urad: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviationScanConfig {
    pub z_mm: f64,
    pub waist_mm: f64,
    /// When present, the waist is fitted to this reference point instead.
    pub fit: Option<WaistFit>,
    /// Deviation values for which `A(theta)` curves are written.
    pub curves_omega0_urad: Vec<f64>,
    pub theta_step_deg: f64,
    pub sweep: OmegaSweep,
}

impl Default for DeviationScanConfig {
    fn default() -> Self {
        Self {
            z_mm: 250.0,
            waist_mm: 0.4,
            fit: None,
            curves_omega0_urad: vec![30.0, 1000.0, 3000.0, 5000.0, 10000.0],
            theta_step_deg: 0.5,
            sweep: OmegaSweep {
                max_omega0_urad: 10000.0,
                points: 20,
            },
        }
    }
}

#[derive(Debug, Serialize)]
struct DeviationSummary {
    z_mm: f64,
    waist_mm: f64,
    waist_fitted: bool,
    curves: Vec<CurveSummary>,
}

#[derive(Debug, Serialize)]
struct CurveSummary {
    omega0_urad: f64,
    file: String,
    fractional_overlap: f64,
}

#[derive(Serialize)]
struct OverlapRow {
    theta_deg: f64,
    overlap_percent: f64,
}

#[derive(Serialize)]
struct FractionRow {
    omega0_urad: f64,
    #[serde(rename = "F")]
    f: f64,
}

pub fn cmd_deviation_scan(config: Option<&Path>, out_dir: &Path, plot: bool) -> CliResult<Vec<PathBuf>> {
    let cfg: DeviationScanConfig = match config {
        Some(p) => {
            serde_json::from_str(&read_to_string(p)?).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
        }
        None => DeviationScanConfig::default(),
    };
    if !(cfg.theta_step_deg > 0.0 && cfg.theta_step_deg <= 90.0) {
        return Err(CliError::config(format!(
            "theta step {} deg must lie in (0, 90]",
            cfg.theta_step_deg
        )));
    }
    if cfg.sweep.points < 2 || cfg.sweep.max_omega0_urad.is_nan() || cfg.sweep.max_omega0_urad <= 0.0 {
        return Err(CliError::config("sweep needs at least 2 points and a positive maximum"));
    }
    let waist = match &cfg.fit {
        Some(f) => fit_waist(f.omega0_urad * 1e-6, cfg.z_mm, f.target_f)?,
        None => cfg.waist_mm,
    };
    let base = DeviationConfig::new(0.0, cfg.z_mm, waist)?;
    let out = OutDir::create(out_dir)?;
    let mut written = Vec::new();

    let steps = (180.0 / cfg.theta_step_deg).round() as usize;
    let thetas_deg: Vec<f64> = (0..=steps).map(|k| -90.0 + k as f64 * 180.0 / steps as f64).collect();
    let mut curves = Vec::new();
    let mut plotted = Vec::new();
    for &omega in &cfg.curves_omega0_urad {
        let dev = base.with_omega0(omega * 1e-6);
        dev.validate()?;
        let name = format!("overlap_{omega}urad.csv");
        let rows: Vec<OverlapRow> = thetas_deg
            .iter()
            .map(|&t| OverlapRow {
                theta_deg: t,
                overlap_percent: overlap_percentage(t.to_radians(), &dev),
            })
            .collect();
        written.push(out.write_with(&name, |w| {
            let mut csv = csv_writer(w);
            for r in &rows {
                csv.serialize(r).map_err(oamspec_core::Error::from)?;
            }
            csv.flush().map_err(|e| CliError::io(Path::new(&name), e))
        })?);
        curves.push(CurveSummary {
            omega0_urad: omega,
            file: name,
            fractional_overlap: average_fractional_overlap(&dev)?,
        });
        plotted.push(
            rows.iter()
                .map(|r| (r.theta_deg, r.overlap_percent))
                .collect::<Vec<_>>(),
        );
    }

    let sweep: Vec<FractionRow> = (0..cfg.sweep.points)
        .map(|k| {
            let omega = cfg.sweep.max_omega0_urad * k as f64 / (cfg.sweep.points - 1) as f64;
            Ok(FractionRow {
                omega0_urad: omega,
                f: average_fractional_overlap(&base.with_omega0(omega * 1e-6))?,
            })
        })
        .collect::<CliResult<_>>()?;
    written.push(out.write_with("fractional_overlap.csv", |w| {
        let mut csv = csv_writer(w);
        for r in &sweep {
            csv.serialize(r).map_err(oamspec_core::Error::from)?;
        }
        csv.flush()
            .map_err(|e| CliError::io(Path::new("fractional_overlap.csv"), e))
    })?);
    written.push(out.write_json(
        "deviation_summary.json",
        &DeviationSummary {
            z_mm: cfg.z_mm,
            waist_mm: waist,
            waist_fitted: cfg.fit.is_some(),
            curves,
        },
    )?);
    if plot {
        const COLORS: [&str; 6] = ["#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#d62728", "#8c564b"];
        let labels: Vec<String> = cfg.curves_omega0_urad.iter().map(|o| format!("{o} urad")).collect();
        let series: Vec<Series> = plotted
            .into_iter()
            .zip(&labels)
            .enumerate()
            .map(|(i, (points, label))| Series {
                label,
                color: COLORS[i % COLORS.len()],
                points,
            })
            .collect();
        written.push(out.write_text(
            "overlap.svg",
            &line_chart("Beam overlap", "theta (deg)", "A (%)", &series),
        )?);
        let f_series = [Series {
            label: "F",
            color: "#1f77b4",
            points: sweep.iter().map(|r| (r.omega0_urad, r.f)).collect(),
        }];
        written.push(out.write_text(
            "fractional_overlap.svg",
            &line_chart("Average fractional overlap", "omega0 (urad)", "F", &f_series),
        )?);
    }
    Ok(written)
}

#[derive(Deserialize)]
struct CalibrationRow {
    beta_deg: f64,
    intensity: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub a: f64,
    pub b: f64,
    pub c_deg: f64,
    pub beta_constructive_deg: f64,
    pub beta_destructive_deg: f64,
    pub residual_rms: f64,
    pub measurements: usize,
}

pub fn cmd_calibrate(measurements: &Path, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut reader = csv::Reader::from_reader(open(measurements)?);
    let rows = reader
        .deserialize::<CalibrationRow>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::config(format!("{}: {e}", measurements.display())))?;
    let data: Vec<(f64, f64)> = rows.iter().map(|r| (r.beta_deg.to_radians(), r.intensity)).collect();
    let fit = fit_phase_calibration(&data)?;
    let report = CalibrationReport {
        a: fit.a,
        b: fit.b,
        c_deg: fit.c.to_degrees(),
        beta_constructive_deg: fit.beta_constructive().to_degrees(),
        beta_destructive_deg: fit.beta_destructive.to_degrees(),
        residual_rms: fit.residual_rms,
        measurements: rows.len(),
    };
    let out = OutDir::create(out_dir)?;
    Ok(vec![out.write_json("calibration.json", &report)?])
}
