//! Forward model of an additive see-through display.
//!
//! A command `(r, g, b)` is linearized with a single power law and mapped
//! through a 3×3 matrix whose columns are the measured full-intensity
//! red, green and blue emissions. The eye receives that light plus whatever
//! background light passes through the optics.

use std::cmp::Ordering;
use std::fmt;

use crate::colorspace::{xyy_to_xyz, xyz_to_uv, ChromaticityXY, TristimulusXYZ, UvPrime, D65_XY};
use crate::error::{Error, Result};

pub const DEFAULT_GAMMA: f64 = 2.2;

/// sRGB red, green and blue primary chromaticities.
pub const SRGB_PRIMARIES_XY: [(f64, f64); 3] = [(0.64, 0.33), (0.30, 0.60), (0.15, 0.06)];

const MODEL_FORMAT: &str = "colorblend-display/1";

/// An 8-bit RGB command, or the display switched off.
///
/// An "off" color always stores zero channels, so two off colors compare
/// equal. Ordering puts off first, then `(r, g, b)` lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DisplayColor {
    r: u8,
    g: u8,
    b: u8,
    off: bool,
}

impl DisplayColor {
    pub const OFF: Self = Self { r: 0, g: 0, b: 0, off: true };

    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b, off: false }
    }

    pub fn channels(&self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    pub fn is_off(&self) -> bool {
        self.off
    }
}

impl Ord for DisplayColor {
    fn cmp(&self, other: &Self) -> Ordering {
        (!self.off, self.r, self.g, self.b).cmp(&(!other.off, other.r, other.g, other.b))
    }
}

impl PartialOrd for DisplayColor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DisplayColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.off {
            write!(f, "off")
        } else {
            write!(f, "({}, {}, {})", self.r, self.g, self.b)
        }
    }
}

/// Environment light reaching the eye through the optics with the display off.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BackgroundLight {
    pub xyz: TristimulusXYZ,
}

impl BackgroundLight {
    pub const NONE: Self = Self { xyz: TristimulusXYZ::ZERO };

    pub fn new(xyz: TristimulusXYZ) -> Result<Self> {
        Ok(Self { xyz: TristimulusXYZ::new(xyz.x, xyz.y, xyz.z)? })
    }

    pub fn from_xyy(c: ChromaticityXY) -> Result<Self> {
        c.validate()?;
        Self::new(xyy_to_xyz(c)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplayModel {
    /// Row-major; column `j` is the full-intensity emission of channel `j`.
    primaries: [[f64; 3]; 3],
    gamma: f64,
}

impl DisplayModel {
    pub fn primaries(&self) -> [[f64; 3]; 3] {
        self.primaries
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Full-intensity emission of channel 0 (red), 1 (green) or 2 (blue).
    pub fn corner(&self, channel: usize) -> TristimulusXYZ {
        let m = &self.primaries;
        TristimulusXYZ { x: m[0][channel], y: m[1][channel], z: m[2][channel] }
    }

    pub fn white(&self) -> TristimulusXYZ {
        self.corner(0) + self.corner(1) + self.corner(2)
    }

    /// A display whose corners are the sRGB primaries, balanced so that full
    /// white is D65 at the given luminance.
    pub fn srgb(white_luminance: f64, gamma: f64) -> Result<Self> {
        if !(white_luminance > 0.0) {
            return Err(Error::Config(format!("white luminance must be > 0, got {white_luminance}")));
        }
        let unit: Vec<TristimulusXYZ> = SRGB_PRIMARIES_XY
            .iter()
            .map(|&(x, y)| xyy_to_xyz(ChromaticityXY { x, y, luminance: 1.0 }))
            .collect::<Result<_>>()?;
        let white = xyy_to_xyz(ChromaticityXY { x: D65_XY.0, y: D65_XY.1, luminance: white_luminance })?;
        let m =
            [[unit[0].x, unit[1].x, unit[2].x], [unit[0].y, unit[1].y, unit[2].y], [unit[0].z, unit[1].z, unit[2].z]];
        let s = solve3(&m, white.to_array()).ok_or_else(|| Error::Domain("sRGB primaries are singular".into()))?;
        fit_display_model(unit[0].scale(s[0]), unit[1].scale(s[1]), unit[2].scale(s[2]), gamma)
    }

    /// Text form: a format line, three matrix rows and the exponent, every
    /// number in its shortest lossless form.
    pub fn to_text(&self) -> String {
        let mut out = format!("format = {MODEL_FORMAT}\n");
        for (i, row) in self.primaries.iter().enumerate() {
            out.push_str(&format!("row{i} = {} {} {}\n", fmt_num(row[0]), fmt_num(row[1]), fmt_num(row[2])));
        }
        out.push_str(&format!("gamma = {}\n", fmt_num(self.gamma)));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let kv = crate::kv::parse(text)?;
        match kv.get("format") {
            Some(f) if f == MODEL_FORMAT => {}
            Some(f) => return Err(Error::Config(format!("unsupported display model format '{f}'"))),
            None => return Err(Error::Config("display model is missing 'format'".into())),
        }
        let mut primaries = [[0.0; 3]; 3];
        for (i, row) in primaries.iter_mut().enumerate() {
            *row = kv.get_triplet(&format!("row{i}"))?;
        }
        let gamma = kv.get_f64("gamma")?;
        let corners: Vec<TristimulusXYZ> =
            (0..3).map(|j| TristimulusXYZ { x: primaries[0][j], y: primaries[1][j], z: primaries[2][j] }).collect();
        fit_display_model(corners[0], corners[1], corners[2], gamma)
    }
}

/// Builds a model that reproduces each corner exactly at full command.
pub fn fit_display_model(
    red_corner: TristimulusXYZ,
    green_corner: TristimulusXYZ,
    blue_corner: TristimulusXYZ,
    gamma: f64,
) -> Result<DisplayModel> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("tone gamma must be > 0, got {gamma}")));
    }
    let corners = [red_corner, green_corner, blue_corner];
    for (name, c) in ["red", "green", "blue"].iter().zip(&corners) {
        TristimulusXYZ::new(c.x, c.y, c.z)?;
        if !(c.y > 0.0) {
            return Err(Error::Domain(format!("{name} corner has zero luminance")));
        }
    }
    let primaries = [
        [red_corner.x, green_corner.x, blue_corner.x],
        [red_corner.y, green_corner.y, blue_corner.y],
        [red_corner.z, green_corner.z, blue_corner.z],
    ];
    Ok(DisplayModel { primaries, gamma })
}

/// Linear intensity of a channel command under a power-law tone curve.
pub fn channel_intensity(command: u8, gamma: f64) -> f64 {
    match command {
        0 => 0.0,
        255 => 1.0,
        c => (c as f64 / 255.0).powf(gamma),
    }
}

pub fn display_to_xyz(c: DisplayColor, m: &DisplayModel) -> TristimulusXYZ {
    if c.off {
        return TristimulusXYZ::ZERO;
    }
    let lin = c.channels().map(|ch| channel_intensity(ch, m.gamma));
    mix(&m.primaries, lin)
}

/// Matrix × linear intensities.
pub(crate) fn mix(primaries: &[[f64; 3]; 3], lin: [f64; 3]) -> TristimulusXYZ {
    let row = |i: usize| primaries[i][0] * lin[0] + primaries[i][1] * lin[1] + primaries[i][2] * lin[2];
    TristimulusXYZ { x: row(0), y: row(1), z: row(2) }
}

/// Optical combination is light addition.
pub fn blend(display_xyz: TristimulusXYZ, bg: &BackgroundLight) -> TristimulusXYZ {
    display_xyz + bg.xyz
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCheck {
    pub name: &'static str,
    pub expected: UvPrime,
    pub measured: UvPrime,
    /// Euclidean distance in u′v′.
    pub distance: f64,
    pub passed: bool,
}

/// Compares each full-intensity corner against the sRGB primary and full
/// white against D65, all in u′v′. Failures are reported, not raised.
pub fn verify_calibration(model: &DisplayModel, tolerance: f64) -> Vec<CalibrationCheck> {
    let reference = |(x, y): (f64, f64)| {
        xyy_to_xyz(ChromaticityXY { x, y, luminance: 1.0 })
            .and_then(xyz_to_uv)
            .expect("reference chromaticities are valid")
    };
    let names = ["red", "green", "blue"];
    let mut checks: Vec<(&'static str, UvPrime, TristimulusXYZ)> =
        (0..3).map(|j| (names[j], reference(SRGB_PRIMARIES_XY[j]), model.corner(j))).collect();
    checks.push(("white", reference(D65_XY), model.white()));
    checks
        .into_iter()
        .map(|(name, expected, xyz)| {
            // corners are validated to Y > 0 at construction
            let measured = xyz_to_uv(xyz).expect("corner has positive luminance");
            let distance = expected.distance(&measured);
            CalibrationCheck { name, expected, measured, distance, passed: distance <= tolerance }
        })
        .collect()
}

/// Shortest scientific notation that parses back to exactly `v`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:e}")
}

pub(crate) fn solve3(m: &[[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |a: &[[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut a = *m;
        for i in 0..3 {
            a[i][k] = b[i];
        }
        *slot = det(&a) / d;
    }
    Some(out)
}
