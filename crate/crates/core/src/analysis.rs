//! Pairwise background comparison.
//!
//! For a pair of backgrounds `(a, b)` every palette color measured against
//! `a` is compared with the same color measured against `b`. The shift is
//! read two ways: as a vector between u′v′ endpoints (the scatterplot view)
//! and as an L*u*v* difference whose length splits into a lightness part
//! and a chromaticity part (the stacked-bar view).

use std::fmt;
use std::str::FromStr;

use crate::colorspace::{xyz_to_luv, xyz_to_uv, UvPrime};
use crate::dataset::{palette, Background, BackgroundKind, Dataset, LightingCondition};
use crate::display::DisplayColor;
use crate::error::{Error, Result};
use crate::hull::hull_area;
use crate::kv;

/// How one display color moves between two backgrounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorShift {
    pub color: DisplayColor,
    pub from_uv: UvPrime,
    pub to_uv: UvPrime,
    /// (ΔL*, Δu*, Δv*), `to − from`.
    pub delta_luv: [f64; 3],
    pub total: f64,
    pub lum_component: f64,
    pub chroma_component: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    WashoutChromaticity,
    WashoutLuminance,
    WashoutBoth,
    LinearShift,
}

impl Category {
    pub const ALL: [Category; 4] =
        [Self::WashoutChromaticity, Self::WashoutLuminance, Self::WashoutBoth, Self::LinearShift];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::WashoutChromaticity => "washout-chromaticity",
            Self::WashoutLuminance => "washout-luminance",
            Self::WashoutBoth => "washout-both",
            Self::LinearShift => "linear-shift",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| Error::Domain(format!("unknown category '{s}'")))
    }
}

/// Shape statistics of a pair's u′v′ shift vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternStats {
    /// avg_lum / avg_total.
    pub lum_fraction: f64,
    /// Mean resultant length of the unit shift directions: near 1 when all
    /// colors move the same way, near 0 for a radial (star) pattern.
    pub coherence: f64,
    /// RMS spread of the `to` endpoints over that of the `from` endpoints.
    pub dispersion_ratio: f64,
    /// Shifts long enough to carry a direction.
    pub directional_shifts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairAnalysis {
    pub background_a: Background,
    pub background_b: Background,
    pub shifts: Vec<ColorShift>,
    pub avg_total: f64,
    pub avg_lum: f64,
    pub avg_chroma: f64,
    pub category: Category,
    pub pattern_stats: PatternStats,
}

impl PairAnalysis {
    /// Same material, one real and one poster.
    pub fn is_poster_vs_real(&self) -> bool {
        let (a, b) = (self.background_a, self.background_b);
        let kinds = [a.kind(), b.kind()];
        a.material() == b.material() && kinds.contains(&BackgroundKind::Real) && kinds.contains(&BackgroundKind::Poster)
    }
}

/// Thresholds for [`classify_pair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    /// Coherence at or above which a pair is a linear shift.
    pub coherence_min: f64,
    /// Luminance fraction at or below which a washout is chromatic.
    pub lum_fraction_low: f64,
    /// Luminance fraction at or above which a washout is luminance-driven.
    pub lum_fraction_high: f64,
    /// Average totals below this are treated as no change at all.
    pub min_total: f64,
    /// u′v′ shifts shorter than this carry no direction.
    pub min_shift_uv: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            coherence_min: 0.8,
            lum_fraction_low: 0.33,
            lum_fraction_high: 0.67,
            min_total: 1e-9,
            min_shift_uv: 1e-9,
        }
    }
}

impl ClassifierConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let kv = kv::parse(text)?;
        let d = Self::default();
        for key in kv.keys() {
            if !Self::KEYS.contains(&key) {
                return Err(Error::Config(format!("unknown classifier key '{key}'")));
            }
        }
        let cfg = Self {
            coherence_min: kv.get_f64_or("coherence_min", d.coherence_min)?,
            lum_fraction_low: kv.get_f64_or("lum_fraction_low", d.lum_fraction_low)?,
            lum_fraction_high: kv.get_f64_or("lum_fraction_high", d.lum_fraction_high)?,
            min_total: kv.get_f64_or("min_total", d.min_total)?,
            min_shift_uv: kv.get_f64_or("min_shift_uv", d.min_shift_uv)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    const KEYS: [&'static str; 5] =
        ["coherence_min", "lum_fraction_low", "lum_fraction_high", "min_total", "min_shift_uv"];

    pub fn to_text(&self) -> String {
        format!(
            "coherence_min = {}\nlum_fraction_low = {}\nlum_fraction_high = {}\nmin_total = {}\nmin_shift_uv = {}\n",
            self.coherence_min, self.lum_fraction_low, self.lum_fraction_high, self.min_total, self.min_shift_uv
        )
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.coherence_min) || !unit(self.lum_fraction_low) || !unit(self.lum_fraction_high) {
            return Err(Error::Config("classifier thresholds must lie in [0, 1]".into()));
        }
        if self.lum_fraction_low > self.lum_fraction_high {
            return Err(Error::Config("lum_fraction_low must not exceed lum_fraction_high".into()));
        }
        if !(self.min_total > 0.0) || !(self.min_shift_uv >= 0.0) {
            return Err(Error::Config("min_total must be > 0 and min_shift_uv >= 0".into()));
        }
        Ok(())
    }
}

/// The condition a background's cells are read from: no-lights uses its
/// display-only cells, lit backgrounds their combined cells.
pub fn condition_for(bg: Background) -> LightingCondition {
    if bg.is_illuminated() {
        LightingCondition::Both
    } else {
        LightingCondition::DisplayOnly
    }
}

/// Splits an L*u*v* difference into the length of its L* projection and
/// the remainder. The two parts always sum to the full length.
pub fn decompose(delta: [f64; 3]) -> (f64, f64) {
    let total = (delta[0] * delta[0] + delta[1] * delta[1] + delta[2] * delta[2]).sqrt();
    if total == 0.0 {
        return (0.0, 0.0);
    }
    let lum = (delta[0] * delta[0] / total).min(total);
    (lum, total - lum)
}

/// Shifts of every palette color from background `a` to background `b`,
/// each endpoint normalized with its own condition's white point. Black is
/// left out whenever no-lights is involved.
pub fn pair_shifts(ds: &Dataset, a: Background, b: Background) -> Result<Vec<ColorShift>> {
    let pal = palette();
    let (cond_a, cond_b) = (condition_for(a), condition_for(b));
    let (wp_a, wp_b) = (ds.white_points().for_condition(cond_a), ds.white_points().for_condition(cond_b));
    let skip_black = !a.is_illuminated() || !b.is_illuminated();
    let mut out = Vec::with_capacity(pal.len());
    for entry in pal.entries() {
        if skip_black && entry.color.is_off() {
            continue;
        }
        let endpoint = |bg: Background, cond: LightingCondition| {
            let cell = ds.cell(bg, entry.color, cond).ok_or_else(|| {
                Error::MissingCell(format!("({bg}, {}, {cond}) needed for pair analysis", entry.name))
            })?;
            cell.median_xyy.to_xyz()
        };
        let (xyz_a, xyz_b) = (endpoint(a, cond_a)?, endpoint(b, cond_b)?);
        let (luv_a, luv_b) = (xyz_to_luv(xyz_a, wp_a)?, xyz_to_luv(xyz_b, wp_b)?);
        let delta_luv = [luv_b.l - luv_a.l, luv_b.u - luv_a.u, luv_b.v - luv_a.v];
        let (lum_component, chroma_component) = decompose(delta_luv);
        out.push(ColorShift {
            color: entry.color,
            from_uv: xyz_to_uv(xyz_a)?,
            to_uv: xyz_to_uv(xyz_b)?,
            delta_luv,
            total: lum_component + chroma_component,
            lum_component,
            chroma_component,
        });
    }
    Ok(out)
}

/// Means of the per-color totals and components.
pub fn pair_summary(shifts: &[ColorShift]) -> Result<(f64, f64, f64)> {
    if shifts.is_empty() {
        return Err(Error::Empty("no shifts to summarize".into()));
    }
    let n = shifts.len() as f64;
    let avg_lum = shifts.iter().map(|s| s.lum_component).sum::<f64>() / n;
    let avg_chroma = shifts.iter().map(|s| s.chroma_component).sum::<f64>() / n;
    // the components sum to the total exactly, so derive the total from them
    Ok((avg_lum + avg_chroma, avg_lum, avg_chroma))
}

pub fn pattern_stats(shifts: &[ColorShift], avg_total: f64, avg_lum: f64, cfg: &ClassifierConfig) -> PatternStats {
    let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
    for s in shifts {
        let (du, dv) = (s.to_uv.u - s.from_uv.u, s.to_uv.v - s.from_uv.v);
        let len = du.hypot(dv);
        if len > cfg.min_shift_uv {
            su += du / len;
            sv += dv / len;
            n += 1;
        }
    }
    let coherence = if n == 0 { 0.0 } else { su.hypot(sv) / n as f64 };
    let spread = |pts: &mut dyn Iterator<Item = UvPrime>| {
        let pts: Vec<UvPrime> = pts.collect();
        let k = pts.len().max(1) as f64;
        let cu = pts.iter().map(|p| p.u).sum::<f64>() / k;
        let cv = pts.iter().map(|p| p.v).sum::<f64>() / k;
        (pts.iter().map(|p| (p.u - cu).powi(2) + (p.v - cv).powi(2)).sum::<f64>() / k).sqrt()
    };
    let from = spread(&mut shifts.iter().map(|s| s.from_uv));
    let to = spread(&mut shifts.iter().map(|s| s.to_uv));
    let dispersion_ratio = if from > 0.0 {
        to / from
    } else if to > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let lum_fraction = if avg_total > 0.0 { avg_lum / avg_total } else { 0.0 };
    PatternStats { lum_fraction, coherence, dispersion_ratio, directional_shifts: n }
}

fn classify(avg_total: f64, stats: &PatternStats, cfg: &ClassifierConfig) -> Result<Category> {
    if !(avg_total >= cfg.min_total) {
        return Err(Error::Degenerate(format!(
            "average shift {avg_total} is below {}; the backgrounds look identical",
            cfg.min_total
        )));
    }
    Ok(if stats.coherence >= cfg.coherence_min {
        Category::LinearShift
    } else if stats.lum_fraction <= cfg.lum_fraction_low {
        Category::WashoutChromaticity
    } else if stats.lum_fraction >= cfg.lum_fraction_high {
        Category::WashoutLuminance
    } else {
        Category::WashoutBoth
    })
}

/// Category from the pair's statistics: a linear shift when the shift
/// directions agree, otherwise a washout split by luminance fraction.
pub fn classify_pair(p: &PairAnalysis, cfg: &ClassifierConfig) -> Result<Category> {
    classify(p.avg_total, &p.pattern_stats, cfg)
}

/// Shifts, averages, statistics and category for one pair.
pub fn analyze_pair(ds: &Dataset, a: Background, b: Background, cfg: &ClassifierConfig) -> Result<PairAnalysis> {
    let shifts = pair_shifts(ds, a, b)?;
    let (avg_total, avg_lum, avg_chroma) = pair_summary(&shifts)?;
    let pattern_stats = pattern_stats(&shifts, avg_total, avg_lum, cfg);
    let category = classify(avg_total, &pattern_stats, cfg)?;
    Ok(PairAnalysis {
        background_a: a,
        background_b: b,
        shifts,
        avg_total,
        avg_lum,
        avg_chroma,
        category,
        pattern_stats,
    })
}

/// Row order of the comparison grid: the dark and bright references first,
/// then the two brighter surfaces, then the rest by name.
pub fn row_order() -> Vec<Background> {
    let lead = [Background::NoLights, Background::WhitePoster, Background::SandReal, Background::SidewalkPoster];
    let mut rest: Vec<Background> = Background::ALL.into_iter().filter(|b| !lead.contains(b)).collect();
    rest.sort_by_key(|b| b.name());
    lead.into_iter().chain(rest).collect()
}

/// Every unordered pair of the given backgrounds, rows by first background
/// in [`row_order`], columns by second background name.
pub fn panel_pairs(backgrounds: &[Background]) -> Vec<(Background, Background)> {
    let order: Vec<Background> = row_order().into_iter().filter(|b| backgrounds.contains(b)).collect();
    let mut pairs = Vec::new();
    for (i, &first) in order.iter().enumerate() {
        let mut seconds: Vec<Background> = order[i + 1..].to_vec();
        seconds.sort_by_key(|b| b.name());
        pairs.extend(seconds.into_iter().map(|s| (first, s)));
    }
    pairs
}

/// All pairs of the dataset's backgrounds, in panel order.
pub fn analyze_all(ds: &Dataset, cfg: &ClassifierConfig) -> Result<Vec<PairAnalysis>> {
    panel_pairs(&ds.backgrounds()).into_iter().map(|(a, b)| analyze_pair(ds, a, b, cfg)).collect()
}

/// u′v′ of the 26 lit palette colors against a background.
fn lit_uv(ds: &Dataset, bg: Background) -> Result<Vec<UvPrime>> {
    let cond = condition_for(bg);
    palette()
        .entries()
        .iter()
        .filter(|e| !e.color.is_off())
        .map(|e| {
            let cell = ds
                .cell(bg, e.color, cond)
                .ok_or_else(|| Error::MissingCell(format!("({bg}, {}, {cond}) needed for gamut", e.name)))?;
            xyz_to_uv(cell.median_xyy.to_xyz()?)
        })
        .collect()
}

/// Hull area of the lit colors' u′v′ against `background`, relative to the
/// same hull with the lights off.
pub fn gamut_compression(ds: &Dataset, background: Background) -> Result<f64> {
    let reference = hull_area(&lit_uv(ds, Background::NoLights)?);
    let area = hull_area(&lit_uv(ds, background)?);
    const MIN_AREA: f64 = 1e-15;
    if reference < MIN_AREA {
        return Err(Error::Degenerate("no-lights colors are collinear in u'v'".into()));
    }
    if area < MIN_AREA {
        return Err(Error::Degenerate(format!("colors against {background} are collinear in u'v'")));
    }
    Ok(area / reference)
}
