use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use colorblend::analysis::ClassifierConfig;
use colorblend::colorspace::{xyz_to_luv, ChromaticityXY, LuvColor, WhitePoint};
use colorblend::dataset::{
    aggregate_cells, palette, parse_readings, simulate_testbed, write_readings, Background, LightingCondition,
    SimulatorConfig, DEFAULT_SIMULATOR_CONFIG,
};
use colorblend::display::{display_to_xyz, fmt_num, verify_calibration, BackgroundLight, DisplayModel};
use colorblend::plot::export_small_multiples;
use colorblend::solver::{achievable_gamut, correct_color};

use crate::failure::{CmdResult, Failure, ResultExt};
use crate::manifest::RunManifest;
use crate::output::{ensure_free, write_files_atomic, StagedDir};

pub const CORRECTION_HEADER: &str = "target_L,target_u,target_v,r,g,b,off,residual,exact";

/// Tolerance the shipped display model must meet against the sRGB corners.
const CALIBRATION_TOLERANCE: f64 = 1e-3;

fn read_config(path: &Path, what: &str) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {what} '{}': {e}", path.display())))
}

fn load_sim_config(path: Option<&Path>) -> CmdResult<(SimulatorConfig, String)> {
    let text = match path {
        Some(p) => read_config(p, "simulator config")?,
        None => DEFAULT_SIMULATOR_CONFIG.to_string(),
    };
    let cfg = SimulatorConfig::from_text(&text).map_err(|e| match path {
        Some(p) => Failure::usage(format!("{}: {e}", p.display())),
        None => Failure::usage(e),
    })?;
    Ok((cfg, text))
}

fn load_model(path: Option<&Path>) -> CmdResult<(DisplayModel, String)> {
    match path {
        Some(p) => {
            let text = read_config(p, "display model")?;
            let m = DisplayModel::from_text(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            Ok((m, text))
        }
        None => {
            let m = DisplayModel::srgb(100.0, colorblend::display::DEFAULT_GAMMA).runtime()?;
            let text = m.to_text();
            Ok((m, text))
        }
    }
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Writes one output file plus its manifest, refusing to overwrite either
/// without `force`.
fn write_with_manifest(output: &Path, bytes: &[u8], manifest: &mut RunManifest, force: bool) -> CmdResult<()> {
    let mpath = manifest_path(output);
    let name = output.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    manifest.output(&name, bytes);
    let json = manifest.to_json();
    ensure_free(output, force)?;
    ensure_free(&mpath, force)?;
    write_files_atomic(&[(output, bytes), (&mpath, json.as_bytes())])
}

pub fn palette_table(model: Option<&Path>) -> CmdResult<String> {
    let (m, _) = load_model(model)?;
    let mut out = String::from("name,r,g,b,off,X,Y,Z\n");
    for e in palette().entries() {
        let [r, g, b] = e.color.channels();
        let xyz = display_to_xyz(e.color, &m);
        let _ = writeln!(
            out,
            "{},{r},{g},{b},{},{},{},{}",
            e.name,
            e.color.is_off(),
            fmt_num(xyz.x),
            fmt_num(xyz.y),
            fmt_num(xyz.z)
        );
    }
    Ok(out)
}

pub struct ModelArgs {
    pub output: PathBuf,
    pub white_luminance: f64,
    pub gamma: f64,
    pub force: bool,
    pub timestamp: u64,
}

/// Writes an sRGB-cornered model and returns the calibration report.
pub fn model(args: ModelArgs) -> CmdResult<String> {
    let m = DisplayModel::srgb(args.white_luminance, args.gamma).usage()?;
    let mut report = String::from("check,expected_u,expected_v,measured_u,measured_v,distance,passed\n");
    for c in verify_calibration(&m, CALIBRATION_TOLERANCE) {
        let _ = writeln!(
            report,
            "{},{},{},{},{},{},{}",
            c.name,
            fmt_num(c.expected.u),
            fmt_num(c.expected.v),
            fmt_num(c.measured.u),
            fmt_num(c.measured.v),
            fmt_num(c.distance),
            c.passed
        );
    }
    let mut manifest = RunManifest::new("model", args.timestamp);
    manifest.parameter("white_luminance", fmt_num(args.white_luminance)).parameter("gamma", fmt_num(args.gamma));
    write_with_manifest(&args.output, m.to_text().as_bytes(), &mut manifest, args.force)?;
    Ok(report)
}

pub struct SimulateArgs {
    pub config: Option<PathBuf>,
    pub output: PathBuf,
    pub seed: Option<u64>,
    pub force: bool,
    pub timestamp: u64,
}

pub fn simulate(args: SimulateArgs) -> CmdResult<usize> {
    let (mut cfg, text) = load_sim_config(args.config.as_deref())?;
    ensure_free(&args.output, args.force)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let records = simulate_testbed(&cfg).runtime()?;
    let mut csv = Vec::new();
    write_readings(&records, &mut csv).runtime()?;

    let mut manifest = RunManifest::new("simulate", args.timestamp);
    manifest.seed = Some(cfg.seed);
    manifest.config("simulator", text.as_bytes());
    write_with_manifest(&args.output, &csv, &mut manifest, args.force)?;
    Ok(records.len())
}

pub struct AnalyzeArgs {
    pub readings: PathBuf,
    pub output: PathBuf,
    pub classifier: Option<PathBuf>,
    pub force: bool,
    pub timestamp: u64,
}

pub struct AnalyzeSummary {
    pub cells: usize,
    pub pairs: usize,
    pub warnings: Vec<String>,
}

pub fn analyze(args: AnalyzeArgs) -> CmdResult<AnalyzeSummary> {
    let classifier = match &args.classifier {
        Some(p) => {
            let text = read_config(p, "classifier config")?;
            ClassifierConfig::from_text(&text).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
        }
        None => ClassifierConfig::default(),
    };
    ensure_free(&args.output, args.force)?;
    let raw = fs::read(&args.readings)
        .map_err(|e| Failure::runtime(anyhow!("cannot read readings '{}': {e}", args.readings.display())))?;
    let records = parse_readings(raw.as_slice()).runtime()?;
    let ds = aggregate_cells(&records).runtime()?;
    let sm = export_small_multiples(&ds, &classifier).runtime()?;

    let mut dir = StagedDir::new(&args.output)?;
    let mut cells = Vec::new();
    ds.write_cells(&mut cells).runtime()?;
    dir.write("cells.csv", &cells)?;
    dir.write("shifts.csv", sm.shifts_csv.as_bytes())?;
    dir.write("categories.csv", sm.categories_csv.as_bytes())?;
    dir.write("report.txt", sm.report.as_bytes())?;
    dir.write("index.html", sm.index_html.as_bytes())?;
    for panel in &sm.panels {
        dir.write(&format!("panels/{}", panel.file_name), panel.svg.as_bytes())?;
    }

    let mut manifest = RunManifest::new("analyze", args.timestamp);
    manifest.input("readings", &raw);
    manifest.config("classifier", classifier.to_text().as_bytes());
    manifest.outputs = dir.digests().clone();
    dir.write("manifest.json", manifest.to_json().as_bytes())?;
    dir.commit()?;
    Ok(AnalyzeSummary { cells: ds.len(), pairs: sm.pairs.len(), warnings: ds.warnings().to_vec() })
}

fn parse_numbers<const N: usize>(s: &str) -> Option<[f64; N]> {
    let parts: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().ok()?;
    let arr: [f64; N] = parts.try_into().ok()?;
    arr.iter().all(|v| v.is_finite()).then_some(arr)
}

/// `none`, a background id looked up in the simulator config, or
/// `xyY:x,y,Y`.
pub fn parse_background(spec: &str, cfg: &SimulatorConfig) -> CmdResult<BackgroundLight> {
    if spec == "none" {
        return Ok(BackgroundLight::NONE);
    }
    if let Some(rest) = spec.strip_prefix("xyY:") {
        let [x, y, l] = parse_numbers::<3>(rest)
            .ok_or_else(|| Failure::usage(format!("malformed background '{spec}': expected xyY:x,y,Y")))?;
        return ChromaticityXY::new(x, y, l)
            .and_then(BackgroundLight::from_xyy)
            .map_err(|e| Failure::usage(format!("background '{spec}': {e}")));
    }
    let bg: Background = spec.parse().map_err(|_| {
        Failure::usage(format!("unknown background '{spec}': expected none, a background id or xyY:x,y,Y"))
    })?;
    Ok(cfg.background_light(bg))
}

/// A palette name (its display-only appearance) or `luv:L,u,v`.
pub fn parse_target(spec: &str, m: &DisplayModel) -> CmdResult<LuvColor> {
    if let Some(rest) = spec.strip_prefix("luv:") {
        let [l, u, v] = parse_numbers::<3>(rest)
            .ok_or_else(|| Failure::usage(format!("malformed target '{spec}': expected luv:L,u,v")))?;
        if l < 0.0 {
            return Err(Failure::usage(format!("target '{spec}': L* must be nonnegative")));
        }
        return Ok(LuvColor::new(l, u, v));
    }
    let color = palette()
        .by_name(spec)
        .ok_or_else(|| Failure::usage(format!("unknown target '{spec}': expected a palette name or luv:L,u,v")))?;
    let wp = WhitePoint::new(m.white(), LightingCondition::DisplayOnly).runtime()?;
    xyz_to_luv(display_to_xyz(color, m), &wp).runtime()
}

pub struct CorrectArgs {
    pub model: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub background: String,
    pub targets: Vec<String>,
    pub tolerance: f64,
    pub output: Option<PathBuf>,
    pub force: bool,
    pub timestamp: u64,
}

/// Returns the correction CSV; also writes it when an output path is given.
pub fn correct(args: CorrectArgs) -> CmdResult<String> {
    if !(args.tolerance > 0.0) {
        return Err(Failure::usage(format!("tolerance must be positive, got {}", args.tolerance)));
    }
    let (m, model_text) = load_model(args.model.as_deref())?;
    let (cfg, cfg_text) = load_sim_config(args.config.as_deref())?;
    let bg = parse_background(&args.background, &cfg)?;
    let targets: Vec<LuvColor> = args.targets.iter().map(|t| parse_target(t, &m)).collect::<CmdResult<_>>()?;
    if let Some(out) = &args.output {
        ensure_free(out, args.force)?;
    }
    // targets are matched as seen with the display and background together
    let wp = WhitePoint::new(m.white() + bg.xyz, LightingCondition::Both).runtime()?;

    let mut csv = format!("{CORRECTION_HEADER}\n");
    for t in targets {
        let r = correct_color(t, &bg, &m, &wp, args.tolerance).runtime()?;
        let [cr, cg, cb] = r.best_command.channels();
        let _ = writeln!(
            csv,
            "{},{},{},{cr},{cg},{cb},{},{},{}",
            fmt_num(t.l),
            fmt_num(t.u),
            fmt_num(t.v),
            r.best_command.is_off(),
            fmt_num(r.residual),
            r.exact
        );
    }
    if let Some(out) = &args.output {
        let mut manifest = RunManifest::new("correct", args.timestamp);
        manifest.config("display_model", model_text.as_bytes());
        if args.config.is_some() {
            manifest.config("simulator", cfg_text.as_bytes());
        }
        manifest.parameter("background", &args.background).parameter("tolerance", fmt_num(args.tolerance));
        manifest.parameter("targets", args.targets.join(";"));
        write_with_manifest(out, csv.as_bytes(), &mut manifest, args.force)?;
    }
    Ok(csv)
}

pub struct GamutArgs {
    pub model: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub background: String,
    pub samples: usize,
    pub cloud: Option<PathBuf>,
    pub force: bool,
    pub timestamp: u64,
}

/// Returns a summary with the hull vertices; optionally writes the cloud.
pub fn gamut(args: GamutArgs) -> CmdResult<String> {
    if args.samples < 2 || args.samples > 256 {
        return Err(Failure::usage(format!("samples must lie in 2..=256, got {}", args.samples)));
    }
    let (m, model_text) = load_model(args.model.as_deref())?;
    let (cfg, cfg_text) = load_sim_config(args.config.as_deref())?;
    let bg = parse_background(&args.background, &cfg)?;
    if let Some(out) = &args.cloud {
        ensure_free(out, args.force)?;
    }
    let wp = WhitePoint::new(m.white() + bg.xyz, LightingCondition::Both).runtime()?;
    let g = achievable_gamut(&bg, &m, &wp, args.samples).runtime()?;
    let dark_wp = WhitePoint::new(m.white(), LightingCondition::DisplayOnly).runtime()?;
    let dark = achievable_gamut(&BackgroundLight::NONE, &m, &dark_wp, args.samples).runtime()?;

    let mut out = String::new();
    let _ = writeln!(out, "samples_per_axis = {}", args.samples);
    let _ = writeln!(out, "points = {}", g.points.len());
    let _ = writeln!(out, "hull_area = {}", fmt_num(g.hull_area));
    let _ = writeln!(out, "hull_area_ratio = {}", fmt_num(g.hull_area / dark.hull_area));
    out.push_str("hull_u,hull_v\n");
    for p in &g.hull {
        let _ = writeln!(out, "{},{}", fmt_num(p.u), fmt_num(p.v));
    }

    if let Some(path) = &args.cloud {
        let mut csv = String::from("r,g,b,L,u,v\n");
        for (c, p) in g.commands.iter().zip(&g.points) {
            let [r, gg, b] = c.channels();
            let _ = writeln!(csv, "{r},{gg},{b},{},{},{}", fmt_num(p.l), fmt_num(p.u), fmt_num(p.v));
        }
        let mut manifest = RunManifest::new("gamut", args.timestamp);
        manifest.config("display_model", model_text.as_bytes());
        if args.config.is_some() {
            manifest.config("simulator", cfg_text.as_bytes());
        }
        manifest.parameter("background", &args.background).parameter("samples", args.samples);
        write_with_manifest(path, csv.as_bytes(), &mut manifest, args.force)?;
    }
    Ok(out)
}
