//! The measurement grid: palette, backgrounds, lighting conditions,
//! colorimeter-reading ingestion, per-cell median aggregation, white-point
//! extraction and a synthetic testbed that produces readings.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::colorspace::{xyz_to_xyy, ChromaticityXY, TristimulusXYZ, WhitePoint};
use crate::display::{blend, display_to_xyz, fmt_num, BackgroundLight, DisplayColor, DisplayModel};
use crate::error::{Error, Result};
use crate::kv;

/// Header of the reading CSV.
pub const READINGS_HEADER: [&str; 7] = ["timestamp", "background", "color_name", "condition", "x", "y", "Y"];

/// Header of the cell-summary CSV.
pub const CELLS_HEADER: [&str; 8] = ["timestamp", "background", "color_name", "condition", "x", "y", "Y", "n_readings"];

/// Per-background reading counts outside this range draw a warning.
pub const EXPECTED_READINGS_PER_BACKGROUND: (usize, usize) = (1459, 7595);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LightingCondition {
    /// Display lit, background lights off.
    DisplayOnly,
    /// Display off, background lit.
    BackgroundOnly,
    Both,
}

impl LightingCondition {
    pub const ALL: [LightingCondition; 3] = [Self::DisplayOnly, Self::BackgroundOnly, Self::Both];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DisplayOnly => "display_only",
            Self::BackgroundOnly => "background_only",
            Self::Both => "both",
        }
    }
}

impl fmt::Display for LightingCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LightingCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| Error::Domain(format!("unknown condition '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BackgroundKind {
    Real,
    Poster,
    WhitePoster,
    NoLights,
}

/// The eleven backgrounds of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Background {
    BrickReal,
    BrickPoster,
    BrownFoliageReal,
    GreenFoliageReal,
    GreenFoliagePoster,
    PavementReal,
    PavementPoster,
    SandReal,
    SidewalkPoster,
    WhitePoster,
    NoLights,
}

impl Background {
    pub const ALL: [Background; 11] = [
        Self::BrickReal,
        Self::BrickPoster,
        Self::BrownFoliageReal,
        Self::GreenFoliageReal,
        Self::GreenFoliagePoster,
        Self::PavementReal,
        Self::PavementPoster,
        Self::SandReal,
        Self::SidewalkPoster,
        Self::WhitePoster,
        Self::NoLights,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::BrickReal => "brick-real",
            Self::BrickPoster => "brick-poster",
            Self::BrownFoliageReal => "brown-foliage-real",
            Self::GreenFoliageReal => "green-foliage-real",
            Self::GreenFoliagePoster => "green-foliage-poster",
            Self::PavementReal => "pavement-real",
            Self::PavementPoster => "pavement-poster",
            Self::SandReal => "sand-real",
            Self::SidewalkPoster => "sidewalk-poster",
            Self::WhitePoster => "white-poster",
            Self::NoLights => "no-lights",
        }
    }

    /// Short panel label.
    pub fn label(&self) -> &'static str {
        match self {
            Self::BrickReal => "BrkR",
            Self::BrickPoster => "BrkP",
            Self::BrownFoliageReal => "BrnFgR",
            Self::GreenFoliageReal => "GrnFgR",
            Self::GreenFoliagePoster => "GrnFgP",
            Self::PavementReal => "PvmtR",
            Self::PavementPoster => "PvmtP",
            Self::SandReal => "SandR",
            Self::SidewalkPoster => "SdwlkP",
            Self::WhitePoster => "White",
            Self::NoLights => "NL",
        }
    }

    pub fn kind(&self) -> BackgroundKind {
        match self {
            Self::BrickReal | Self::BrownFoliageReal | Self::GreenFoliageReal | Self::PavementReal | Self::SandReal => {
                BackgroundKind::Real
            }
            Self::BrickPoster | Self::GreenFoliagePoster | Self::PavementPoster | Self::SidewalkPoster => {
                BackgroundKind::Poster
            }
            Self::WhitePoster => BackgroundKind::WhitePoster,
            Self::NoLights => BackgroundKind::NoLights,
        }
    }

    /// Material name without the kind suffix (`brick` for both brick ids).
    pub fn material(&self) -> &'static str {
        let n = self.name();
        n.strip_suffix("-real").or_else(|| n.strip_suffix("-poster")).unwrap_or(n)
    }

    pub fn is_illuminated(&self) -> bool {
        *self != Self::NoLights
    }

    pub fn illuminated() -> impl Iterator<Item = Background> {
        Self::ALL.into_iter().filter(Background::is_illuminated)
    }
}

impl fmt::Display for Background {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Background {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|b| b.name() == s).ok_or_else(|| Error::Domain(format!("unknown background '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PaletteEntry {
    pub name: &'static str,
    pub color: DisplayColor,
}

/// The 27 display colors: every combination of the channel levels
/// 0, 128 and 255, with black shown by switching the display off.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    entries: Vec<PaletteEntry>,
}

const PALETTE_TABLE: [(&str, [u8; 3]); 26] = [
    ("maroon", [128, 0, 0]),
    ("olive", [128, 128, 0]),
    ("green", [0, 128, 0]),
    ("teal", [0, 128, 128]),
    ("navy", [0, 0, 128]),
    ("purple", [128, 0, 128]),
    ("gray", [128, 128, 128]),
    ("red", [255, 0, 0]),
    ("orange", [255, 128, 0]),
    ("yellow", [255, 255, 0]),
    ("chartreuse", [128, 255, 0]),
    ("lime", [0, 255, 0]),
    ("spring", [0, 255, 128]),
    ("cyan", [0, 255, 255]),
    ("azure", [0, 128, 255]),
    ("blue", [0, 0, 255]),
    ("violet", [128, 0, 255]),
    ("magenta", [255, 0, 255]),
    ("rose", [255, 0, 128]),
    ("salmon", [255, 128, 128]),
    ("maize", [255, 255, 128]),
    ("mint", [128, 255, 128]),
    ("aqua", [128, 255, 255]),
    ("periwinkle", [128, 128, 255]),
    ("pink", [255, 128, 255]),
    ("white", [255, 255, 255]),
];

pub fn palette() -> Palette {
    let mut entries = vec![PaletteEntry { name: "black", color: DisplayColor::OFF }];
    entries.extend(
        PALETTE_TABLE.iter().map(|&(name, [r, g, b])| PaletteEntry { name, color: DisplayColor::rgb(r, g, b) }),
    );
    Palette { entries }
}

impl Palette {
    pub fn entries(&self) -> &[PaletteEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn by_name(&self, name: &str) -> Option<DisplayColor> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.color)
    }

    pub fn name_of(&self, color: DisplayColor) -> Option<&'static str> {
        self.entries.iter().find(|e| e.color == color).map(|e| e.name)
    }

    /// Position in palette order; non-palette colors sort last.
    pub fn index_of(&self, color: DisplayColor) -> usize {
        self.entries.iter().position(|e| e.color == color).unwrap_or(usize::MAX)
    }
}

/// One colorimeter reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    /// Seconds.
    pub timestamp: f64,
    pub background: Background,
    pub color: DisplayColor,
    pub condition: LightingCondition,
    pub reading: ChromaticityXY,
}

impl MeasurementRecord {
    /// Condition must agree with what was lit: display-only readings are
    /// taken with the lights off, background-only readings with the display off.
    pub fn validate(&self) -> Result<()> {
        self.reading.validate()?;
        check_condition(self.background, self.color, self.condition)
    }
}

fn check_condition(bg: Background, color: DisplayColor, cond: LightingCondition) -> Result<()> {
    match cond {
        LightingCondition::DisplayOnly if bg.is_illuminated() => {
            Err(Error::Domain(format!("display_only reading against illuminated background '{bg}'")))
        }
        LightingCondition::DisplayOnly if color.is_off() => {
            Err(Error::Domain("display_only reading with the display off".into()))
        }
        LightingCondition::BackgroundOnly if !color.is_off() => {
            Err(Error::Domain(format!("background_only reading with display color {color}")))
        }
        LightingCondition::BackgroundOnly if !bg.is_illuminated() => {
            Err(Error::Domain("background_only reading with the lights off".into()))
        }
        _ => Ok(()),
    }
}

/// Parses the reading CSV. Rows come back in file order. An input with no
/// header at all (an empty file) holds no records.
pub fn parse_readings<R: Read>(source: R) -> Result<Vec<MeasurementRecord>> {
    let pal = palette();
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let header = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    if header.is_empty() {
        return Ok(Vec::new());
    }
    if header.iter().ne(READINGS_HEADER.iter().copied()) {
        return Err(Error::Parse { line: 1, message: format!("expected header '{}'", READINGS_HEADER.join(",")) });
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(e, 0))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |message: String| Error::Parse { line, message };
        let num = |i: usize| -> Result<f64> {
            let s = &row[i];
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(format!("field '{}' is not a number: '{s}'", READINGS_HEADER[i])))
        };
        let timestamp = num(0)?;
        let background: Background = row[1].parse().map_err(|e: Error| parse_err(e.to_string()))?;
        let color = pal.by_name(&row[2]).ok_or_else(|| parse_err(format!("unknown color name '{}'", &row[2])))?;
        let condition: LightingCondition = row[3].parse().map_err(|e: Error| parse_err(e.to_string()))?;
        let reading = ChromaticityXY { x: num(4)?, y: num(5)?, luminance: num(6)? };
        let rec = MeasurementRecord { timestamp, background, color, condition, reading };
        rec.validate().map_err(|e| match e {
            Error::Domain(m) => Error::Domain(format!("line {line}: {m}")),
            other => other,
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(fallback_line);
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => Error::Parse { line, message: e.to_string() },
    }
}

pub fn write_readings<W: Write>(records: &[MeasurementRecord], mut out: W) -> Result<()> {
    let pal = palette();
    writeln!(out, "{}", READINGS_HEADER.join(","))?;
    for r in records {
        let name =
            pal.name_of(r.color).ok_or_else(|| Error::Domain(format!("color {} is not in the palette", r.color)))?;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_num(r.timestamp),
            r.background,
            name,
            r.condition,
            fmt_num(r.reading.x),
            fmt_num(r.reading.y),
            fmt_num(r.reading.luminance)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub background: Background,
    pub color: DisplayColor,
    pub condition: LightingCondition,
}

impl CellKey {
    pub fn new(background: Background, color: DisplayColor, condition: LightingCondition) -> Self {
        Self { background, color, condition }
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = palette().name_of(self.color).map(str::to_string).unwrap_or_else(|| self.color.to_string());
        write!(f, "({}, {}, {})", self.background, name, self.condition)
    }
}

/// The median reading of one (background, color, condition) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSummary {
    pub key: CellKey,
    pub median_xyy: ChromaticityXY,
    /// Median of the reading timestamps.
    pub timestamp: f64,
    pub n_readings: usize,
}

/// The three normalization references, one per lighting condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitePoints {
    /// Display white with the lights off.
    pub display_only: WhitePoint,
    /// White poster with the display off.
    pub background_only: WhitePoint,
    /// Display white against the lit white poster.
    pub both: WhitePoint,
}

impl WhitePoints {
    pub fn for_condition(&self, condition: LightingCondition) -> &WhitePoint {
        white_point_for(condition, self)
    }
}

/// Display-only readings use the display white, background-only readings
/// the lit white poster, and combined readings the display white against
/// the lit poster.
pub fn white_point_for(condition: LightingCondition, wps: &WhitePoints) -> &WhitePoint {
    match condition {
        LightingCondition::DisplayOnly => &wps.display_only,
        LightingCondition::BackgroundOnly => &wps.background_only,
        LightingCondition::Both => &wps.both,
    }
}

/// The cells that define the three white points, in condition order.
pub fn white_point_cells() -> [CellKey; 3] {
    let white = DisplayColor::rgb(255, 255, 255);
    [
        CellKey::new(Background::NoLights, white, LightingCondition::DisplayOnly),
        CellKey::new(Background::WhitePoster, DisplayColor::OFF, LightingCondition::BackgroundOnly),
        CellKey::new(Background::WhitePoster, white, LightingCondition::Both),
    ]
}

pub fn extract_white_points(cells: &BTreeMap<CellKey, CellSummary>) -> Result<WhitePoints> {
    let [k1, k2, k3] = white_point_cells();
    let get = |k: CellKey, which: &str| -> Result<WhitePoint> {
        let cell = cells.get(&k).ok_or_else(|| Error::MissingCell(format!("white point {which} needs cell {k}")))?;
        WhitePoint::from_xyy(cell.median_xyy, k.condition)
    };
    Ok(WhitePoints { display_only: get(k1, "(1)")?, background_only: get(k2, "(2)")?, both: get(k3, "(3)")? })
}

/// Aggregated cells plus the white points derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    cells: BTreeMap<CellKey, CellSummary>,
    white_points: WhitePoints,
    warnings: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from already-aggregated cells.
    pub fn from_cells(cells: impl IntoIterator<Item = CellSummary>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for c in cells {
            if c.n_readings == 0 {
                return Err(Error::Domain(format!("cell {} has no readings", c.key)));
            }
            check_condition(c.key.background, c.key.color, c.key.condition)?;
            if map.insert(c.key, c).is_some() {
                return Err(Error::Domain(format!("duplicate cell {}", c.key)));
            }
        }
        let white_points = extract_white_points(&map)?;
        Ok(Self { cells: map, white_points, warnings: Vec::new() })
    }

    pub fn cell(
        &self,
        background: Background,
        color: DisplayColor,
        condition: LightingCondition,
    ) -> Option<&CellSummary> {
        self.cells.get(&CellKey::new(background, color, condition))
    }

    pub fn cells(&self) -> impl Iterator<Item = &CellSummary> {
        self.cells.values()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn count_condition(&self, condition: LightingCondition) -> usize {
        self.cells.keys().filter(|k| k.condition == condition).count()
    }

    pub fn white_points(&self) -> &WhitePoints {
        &self.white_points
    }

    /// Backgrounds that have at least one cell, in canonical order.
    pub fn backgrounds(&self) -> Vec<Background> {
        Background::ALL.into_iter().filter(|b| self.cells.keys().any(|k| k.background == *b)).collect()
    }

    /// Non-fatal observations made while aggregating.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Cell-summary CSV: the reading columns with `n_readings` appended.
    pub fn write_cells<W: Write>(&self, mut out: W) -> Result<()> {
        let pal = palette();
        writeln!(out, "{}", CELLS_HEADER.join(","))?;
        for c in self.cells.values() {
            let name = pal.name_of(c.key.color).unwrap_or("?");
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_num(c.timestamp),
                c.key.background,
                name,
                c.key.condition,
                fmt_num(c.median_xyy.x),
                fmt_num(c.median_xyy.y),
                fmt_num(c.median_xyy.luminance),
                c.n_readings
            )?;
        }
        Ok(())
    }
}

/// Median; even-length inputs average the two middle values.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 })
}

/// Reduces readings to one componentwise-median xyY per cell and extracts
/// the white points.
pub fn aggregate_cells(records: &[MeasurementRecord]) -> Result<Dataset> {
    if records.is_empty() {
        return Err(Error::Empty("no records".into()));
    }
    let mut groups: BTreeMap<CellKey, Vec<&MeasurementRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(CellKey::new(r.background, r.color, r.condition)).or_default().push(r);
    }
    let mut cells = Vec::with_capacity(groups.len());
    for (key, rs) in &groups {
        let comp = |f: fn(&MeasurementRecord) -> f64| {
            let mut v: Vec<f64> = rs.iter().map(|r| f(r)).collect();
            median(&mut v).expect("groups are nonempty")
        };
        let median_xyy = ChromaticityXY {
            x: comp(|r| r.reading.x),
            y: comp(|r| r.reading.y),
            luminance: comp(|r| r.reading.luminance),
        };
        let timestamp = comp(|r| r.timestamp);
        cells.push(CellSummary { key: *key, median_xyy, timestamp, n_readings: rs.len() });
    }
    let mut ds = Dataset::from_cells(cells)?;

    let (lo, hi) = EXPECTED_READINGS_PER_BACKGROUND;
    for bg in Background::ALL {
        let n = records.iter().filter(|r| r.background == bg).count();
        if n > 0 && !(lo..=hi).contains(&n) {
            let msg = format!("background {bg}: {n} readings, outside the expected {lo}..={hi}");
            log::warn!("{msg}");
            ds.warnings.push(msg);
        }
    }
    Ok(ds)
}

/// Every cell of the full grid, in the order the simulator emits them.
///
/// Illuminated backgrounds get all 27 colors in the combined condition plus
/// a display-off background-only cell. No-lights gets the 26 lit colors,
/// both as display-only and as combined cells; its display-off cell carries
/// no light and is skipped.
pub fn grid_cells() -> Vec<CellKey> {
    let pal = palette();
    let mut keys = Vec::new();
    for bg in Background::ALL {
        if bg.is_illuminated() {
            for e in pal.entries() {
                keys.push(CellKey::new(bg, e.color, LightingCondition::Both));
            }
            keys.push(CellKey::new(bg, DisplayColor::OFF, LightingCondition::BackgroundOnly));
        } else {
            for cond in [LightingCondition::DisplayOnly, LightingCondition::Both] {
                for e in pal.entries().iter().filter(|e| !e.color.is_off()) {
                    keys.push(CellKey::new(bg, e.color, cond));
                }
            }
        }
    }
    keys
}

const SIM_FORMAT: &str = "colorblend-sim/1";

/// Settings for the synthetic testbed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatorConfig {
    pub model: DisplayModel,
    /// Light for every illuminated background; no-lights is always dark.
    pub backgrounds: BTreeMap<Background, BackgroundLight>,
    pub readings_per_cell: usize,
    /// Relative standard deviation of the multiplicative noise on X, Y, Z.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Seconds between consecutive readings.
    pub sample_interval: f64,
}

/// The shipped simulator configuration.
///
/// Background values are invented stand-ins, chosen only to be plausible
/// for the materials under D65 lighting.
pub const DEFAULT_SIMULATOR_CONFIG: &str = "\
# colorblend synthetic testbed configuration
# Background values are invented placeholders, not measurements.
format = colorblend-sim/1
seed = 20120501
readings_per_cell = 60
noise_sigma = 0.005
sample_interval = 0.5

# sRGB corners balanced to D65 at this full-white luminance
display.white_luminance = 100
display.gamma = 2.2

# background.<id> = x y Y  (light through the optics, display off)
background.brick-real = 0.4050 0.3600 14
background.brick-poster = 0.4000 0.3560 15
background.brown-foliage-real = 0.3850 0.3750 12
background.green-foliage-real = 0.3250 0.4250 13
background.green-foliage-poster = 0.3350 0.4150 14
background.pavement-real = 0.3230 0.3400 16
background.pavement-poster = 0.3250 0.3420 15.5
background.sand-real = 0.3550 0.3650 45
background.sidewalk-poster = 0.3400 0.3550 40
background.white-poster = 0.3160 0.3320 220
";

impl SimulatorConfig {
    pub fn default_config() -> Self {
        Self::from_text(DEFAULT_SIMULATOR_CONFIG).expect("shipped simulator config parses")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let kv = kv::parse(text)?;
        match kv.get("format") {
            Some(SIM_FORMAT) => {}
            Some(f) => return Err(Error::Config(format!("unsupported simulator format '{f}'"))),
            None => return Err(Error::Config("simulator config is missing 'format'".into())),
        }
        let known = ["format", "seed", "readings_per_cell", "noise_sigma", "sample_interval"];
        let display_keys = ["display.white_luminance", "display.gamma", "display.red", "display.green", "display.blue"];
        for key in kv.keys() {
            let ok = known.contains(&key)
                || display_keys.contains(&key)
                || key.strip_prefix("background.").is_some_and(|id| id.parse::<Background>().is_ok());
            if !ok {
                return Err(Error::Config(format!("unknown key '{key}'")));
            }
        }

        let gamma = kv.get_f64_or("display.gamma", crate::display::DEFAULT_GAMMA)?;
        let corner_keys = ["display.red", "display.green", "display.blue"];
        let model = if corner_keys.iter().any(|k| kv.get(k).is_some()) {
            let mut corners = Vec::new();
            for k in corner_keys {
                let [x, y, l] = kv.get_triplet(k)?;
                let c = ChromaticityXY::new(x, y, l).map_err(|e| Error::Config(format!("'{k}': {e}")))?;
                corners.push(c.to_xyz()?);
            }
            crate::display::fit_display_model(corners[0], corners[1], corners[2], gamma)
        } else {
            DisplayModel::srgb(kv.get_f64_or("display.white_luminance", 100.0)?, gamma)
        }
        .map_err(|e| Error::Config(e.to_string()))?;

        let mut backgrounds = BTreeMap::new();
        for bg in Background::illuminated() {
            let key = format!("background.{bg}");
            let [x, y, l] = kv.get_triplet(&key)?;
            let light = ChromaticityXY::new(x, y, l)
                .and_then(BackgroundLight::from_xyy)
                .map_err(|e| Error::Config(format!("'{key}': {e}")))?;
            backgrounds.insert(bg, light);
        }

        let cfg = Self {
            model,
            backgrounds,
            readings_per_cell: kv.get_u64("readings_per_cell")? as usize,
            noise_sigma: kv.get_f64("noise_sigma")?,
            seed: kv.get_u64("seed")?,
            sample_interval: kv.get_f64_or("sample_interval", 0.5)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.readings_per_cell == 0 {
            return Err(Error::Config("readings_per_cell must be >= 1".into()));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::Config(format!("noise_sigma must be >= 0, got {}", self.noise_sigma)));
        }
        if !(self.sample_interval > 0.0) || !self.sample_interval.is_finite() {
            return Err(Error::Config(format!("sample_interval must be > 0, got {}", self.sample_interval)));
        }
        for bg in Background::illuminated() {
            if !self.backgrounds.contains_key(&bg) {
                return Err(Error::Config(format!("no light given for background '{bg}'")));
            }
        }
        if self.backgrounds.contains_key(&Background::NoLights) {
            return Err(Error::Config("no-lights cannot carry background light".into()));
        }
        Ok(())
    }

    pub fn background_light(&self, bg: Background) -> BackgroundLight {
        self.backgrounds.get(&bg).copied().unwrap_or(BackgroundLight::NONE)
    }

    /// Noise-free tristimulus the colorimeter would see in a cell.
    pub fn analytic_xyz(&self, key: CellKey) -> TristimulusXYZ {
        let display = match key.condition {
            LightingCondition::BackgroundOnly => TristimulusXYZ::ZERO,
            _ => display_to_xyz(key.color, &self.model),
        };
        let bg = match key.condition {
            LightingCondition::DisplayOnly => BackgroundLight::NONE,
            _ => self.background_light(key.background),
        };
        blend(display, &bg)
    }
}

/// Emits `readings_per_cell` noisy readings for every grid cell.
///
/// Each reading multiplies X, Y and Z by independent `1 + σ·N(0, 1)` factors
/// (clamped at zero) before converting to xyY. Output is a pure function of
/// the config, seed included.
pub fn simulate_testbed(config: &SimulatorConfig) -> Result<Vec<MeasurementRecord>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let keys = grid_cells();
    let mut out = Vec::with_capacity(keys.len() * config.readings_per_cell);
    let mut tick: u64 = 0;
    for key in keys {
        let clean = config.analytic_xyz(key);
        for _ in 0..config.readings_per_cell {
            let xyz = if config.noise_sigma == 0.0 {
                clean
            } else {
                let mut factor = || {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    (1.0 + config.noise_sigma * n).max(0.0)
                };
                TristimulusXYZ { x: clean.x * factor(), y: clean.y * factor(), z: clean.z * factor() }
            };
            let reading = xyz_to_xyy(xyz).map_err(|e| Error::Domain(format!("cell {key}: {e}")))?;
            out.push(MeasurementRecord {
                timestamp: tick as f64 * config.sample_interval,
                background: key.background,
                color: key.color,
                condition: key.condition,
                reading,
            });
            tick += 1;
        }
    }
    Ok(out)
}
