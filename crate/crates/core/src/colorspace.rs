//! CIE 1931 xyY / XYZ, CIE 1976 u′v′ and L*u*v* conversions.
//!
//! Luminance is carried in whatever unit the colorimeter reports. Only the
//! ratio Y/Yn enters the lightness formula, so the unit cancels.

use crate::dataset::LightingCondition;
use crate::error::{Error, Result};

/// Y/Yn at or below which lightness uses the linear segment.
pub const LINEAR_BRANCH_CUTOFF: f64 = 0.01;

/// Slope of the low-luminance linear lightness segment.
pub const LINEAR_BRANCH_SLOPE: f64 = 903.3;

/// D65 chromaticity.
pub const D65_XY: (f64, f64) = (0.3127, 0.3290);

/// u′v′ window outside of which a value is logged as suspicious.
const UV_SANITY_MAX: f64 = 0.7;

/// CIE 1931 chromaticity plus luminance, as reported by the colorimeter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChromaticityXY {
    pub x: f64,
    pub y: f64,
    /// Luminance Y.
    pub luminance: f64,
}

impl ChromaticityXY {
    pub fn new(x: f64, y: f64, luminance: f64) -> Result<Self> {
        let c = Self { x, y, luminance };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { x, y, luminance } = *self;
        if !(x.is_finite() && y.is_finite() && luminance.is_finite()) {
            return Err(Error::Domain(format!("non-finite xyY ({x}, {y}, {luminance})")));
        }
        if y <= 0.0 {
            return Err(Error::Domain(format!("chromaticity y must be > 0, got {y}")));
        }
        if x < 0.0 || x + y > 1.0 {
            return Err(Error::Domain(format!("chromaticity ({x}, {y}) outside x >= 0, x + y <= 1")));
        }
        if luminance < 0.0 {
            return Err(Error::Domain(format!("luminance must be >= 0, got {luminance}")));
        }
        Ok(())
    }

    pub fn to_xyz(&self) -> Result<TristimulusXYZ> {
        xyy_to_xyz(*self)
    }
}

/// CIE 1931 tristimulus values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TristimulusXYZ {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl TristimulusXYZ {
    pub const ZERO: Self = Self { x: 0.0, y: 0.0, z: 0.0 };

    /// Validating constructor: components must be finite and nonnegative.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) || x < 0.0 || y < 0.0 || z < 0.0 {
            return Err(Error::Domain(format!("tristimulus components must be finite and >= 0, got ({x}, {y}, {z})")));
        }
        Ok(Self { x, y, z })
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { x: self.x * k, y: self.y * k, z: self.z * k }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn to_xyy(&self) -> Result<ChromaticityXY> {
        xyz_to_xyy(*self)
    }

    pub fn to_uv(&self) -> Result<UvPrime> {
        xyz_to_uv(*self)
    }
}

impl std::ops::Add for TristimulusXYZ {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self { x: self.x + rhs.x, y: self.y + rhs.y, z: self.z + rhs.z }
    }
}

/// CIE 1976 u′v′ chromaticity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UvPrime {
    pub u: f64,
    pub v: f64,
}

impl UvPrime {
    pub fn distance(&self, other: &UvPrime) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// CIE 1976 L*u*v*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuvColor {
    pub l: f64,
    pub u: f64,
    pub v: f64,
}

impl LuvColor {
    pub fn new(l: f64, u: f64, v: f64) -> Self {
        Self { l, u, v }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.l, self.u, self.v]
    }
}

/// A normalization reference for L*u*v*, tagged with the lighting
/// condition it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhitePoint {
    xyz: TristimulusXYZ,
    uvn: UvPrime,
    label: LightingCondition,
}

impl WhitePoint {
    pub fn new(xyz: TristimulusXYZ, label: LightingCondition) -> Result<Self> {
        if !(xyz.y > 0.0) {
            return Err(Error::Domain(format!("white point luminance must be > 0, got {}", xyz.y)));
        }
        let uvn = whitepoint_uv(xyz)?;
        Ok(Self { xyz, uvn, label })
    }

    pub fn from_xyy(c: ChromaticityXY, label: LightingCondition) -> Result<Self> {
        Self::new(xyy_to_xyz(c)?, label)
    }

    pub fn xyz(&self) -> TristimulusXYZ {
        self.xyz
    }

    pub fn uvn(&self) -> UvPrime {
        self.uvn
    }

    pub fn label(&self) -> LightingCondition {
        self.label
    }
}

/// X = (x/y)·Y, Z = ((1−x−y)/y)·Y.
pub fn xyy_to_xyz(c: ChromaticityXY) -> Result<TristimulusXYZ> {
    if !(c.y > 0.0) {
        return Err(Error::Domain(format!("xyY -> XYZ undefined for y = {}", c.y)));
    }
    if !(c.luminance >= 0.0) {
        return Err(Error::Domain(format!("xyY -> XYZ needs Y >= 0, got {}", c.luminance)));
    }
    let x = c.x / c.y * c.luminance;
    let z = (1.0 - c.x - c.y) / c.y * c.luminance;
    Ok(TristimulusXYZ { x, y: c.luminance, z })
}

pub fn xyz_to_xyy(t: TristimulusXYZ) -> Result<ChromaticityXY> {
    let sum = t.x + t.y + t.z;
    if !(sum > 0.0) {
        return Err(Error::Domain("zero-energy color has no chromaticity".into()));
    }
    Ok(ChromaticityXY { x: t.x / sum, y: t.y / sum, luminance: t.y })
}

/// u′ = 4X/(X+15Y+3Z), v′ = 9Y/(X+15Y+3Z).
pub fn xyz_to_uv(t: TristimulusXYZ) -> Result<UvPrime> {
    let denom = t.x + 15.0 * t.y + 3.0 * t.z;
    if !(denom > 0.0) {
        return Err(Error::Domain("u'v' undefined: X + 15Y + 3Z = 0".into()));
    }
    let uv = UvPrime { u: 4.0 * t.x / denom, v: 9.0 * t.y / denom };
    if !(0.0..=UV_SANITY_MAX).contains(&uv.u) || !(0.0..=UV_SANITY_MAX).contains(&uv.v) {
        log::warn!("u'v' ({}, {}) outside [0, {UV_SANITY_MAX}]", uv.u, uv.v);
    }
    Ok(uv)
}

/// u′n, v′n for a white point; same formula as [`xyz_to_uv`].
pub fn whitepoint_uv(wp_xyz: TristimulusXYZ) -> Result<UvPrime> {
    xyz_to_uv(wp_xyz)
}

/// L* from the luminance ratio Y/Yn.
pub fn lightness(ratio: f64) -> f64 {
    if ratio > LINEAR_BRANCH_CUTOFF {
        116.0 * ratio.cbrt() - 16.0
    } else {
        LINEAR_BRANCH_SLOPE * ratio
    }
}

/// Inverse of [`lightness`]. Lightness values between the two branch
/// endpoints at the cutoff resolve through the cube-root branch.
pub fn lightness_inverse(l: f64) -> f64 {
    let cube_at_cutoff = 116.0 * LINEAR_BRANCH_CUTOFF.cbrt() - 16.0;
    if l > cube_at_cutoff {
        let f = (l + 16.0) / 116.0;
        f * f * f
    } else {
        l / LINEAR_BRANCH_SLOPE
    }
}

pub fn xyz_to_luv(t: TristimulusXYZ, wp: &WhitePoint) -> Result<LuvColor> {
    let l = lightness(t.y / wp.xyz.y);
    let denom = t.x + 15.0 * t.y + 3.0 * t.z;
    if !(denom > 0.0) {
        if t.y > 0.0 {
            return Err(Error::Domain("u'v' undefined for a color with Y > 0".into()));
        }
        // zero energy: black sits at the origin
        return Ok(LuvColor { l, u: 0.0, v: 0.0 });
    }
    let uv = xyz_to_uv(t)?;
    let uvn = wp.uvn;
    Ok(LuvColor { l, u: 13.0 * l * (uv.u - uvn.u), v: 13.0 * l * (uv.v - uvn.v) })
}

pub fn luv_to_xyz(c: LuvColor, wp: &WhitePoint) -> Result<TristimulusXYZ> {
    if !(c.l >= 0.0) || !c.u.is_finite() || !c.v.is_finite() {
        return Err(Error::Domain(format!("L*u*v* ({}, {}, {}) outside L >= 0", c.l, c.u, c.v)));
    }
    if c.l == 0.0 {
        if c.u != 0.0 || c.v != 0.0 {
            return Err(Error::Domain("L* = 0 with nonzero u*v* has no tristimulus".into()));
        }
        return Ok(TristimulusXYZ::ZERO);
    }
    let y = wp.xyz.y * lightness_inverse(c.l);
    let u = c.u / (13.0 * c.l) + wp.uvn.u;
    let v = c.v / (13.0 * c.l) + wp.uvn.v;
    if !(v > 0.0) {
        return Err(Error::Domain(format!("v' = {v} has no tristimulus")));
    }
    let x = y * 9.0 * u / (4.0 * v);
    let z = y * (12.0 - 3.0 * u - 20.0 * v) / (4.0 * v);
    // rounding can leave tiny negatives on the spectrum-locus boundary
    let clamp = |c: f64| if c < 0.0 && c > -1e-12 * y.max(1.0) { 0.0 } else { c };
    TristimulusXYZ::new(clamp(x), y, clamp(z))
}

/// Euclidean distance in L*u*v*.
pub fn delta_e(a: &LuvColor, b: &LuvColor) -> f64 {
    let dl = a.l - b.l;
    let du = a.u - b.u;
    let dv = a.v - b.v;
    (dl * dl + du * du + dv * dv).sqrt()
}
