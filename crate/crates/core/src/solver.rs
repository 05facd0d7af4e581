//! Inverse color correction: pick the display command whose blend with a
//! known background lands closest (ΔE in L*u*v*) to an intended color.
//!
//! The command space is small and the objective cheap, so the search works
//! on integer commands directly: a coarse lattice scan, then a pattern
//! search from the best local minima of that scan and from the command the
//! analytic inverse points at, halving its step down to single lattice steps
//! and stopping when no neighbor improves.
//!
//! Ties are broken by command order (off first, then lexicographic r, g, b),
//! so results are deterministic.

use std::cmp::Ordering;

use crate::colorspace::{delta_e, luv_to_xyz, xyz_to_luv, xyz_to_uv, LuvColor, UvPrime, WhitePoint};
use crate::dataset::palette;
use crate::display::{blend, display_to_xyz, solve3, BackgroundLight, DisplayColor, DisplayModel};
use crate::error::{Error, Result};
use crate::hull::{convex_hull, polygon_area};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionResult {
    pub target: LuvColor,
    pub best_command: DisplayColor,
    pub achieved: LuvColor,
    pub residual: f64,
    /// Objective evaluations spent.
    pub iterations: usize,
    /// `residual <= tolerance`.
    pub exact: bool,
}

/// Per-channel command levels the solver may use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandLattice {
    levels: Vec<u8>,
}

impl CommandLattice {
    /// Every 8-bit level.
    pub fn full() -> Self {
        Self { levels: (0..=255).collect() }
    }

    /// `n` evenly spaced levels from 0 to 255 inclusive.
    pub fn uniform(n: usize) -> Result<Self> {
        if !(2..=256).contains(&n) {
            return Err(Error::Domain(format!("lattice needs 2..=256 levels, got {n}")));
        }
        let levels = (0..n).map(|i| (i as f64 * 255.0 / (n - 1) as f64).round() as u8).collect();
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Index of the level closest to `value`.
    fn nearest(&self, value: f64) -> usize {
        let i = self.levels.partition_point(|&l| (l as f64) < value);
        match i {
            0 => 0,
            i if i == self.levels.len() => i - 1,
            i if value - self.levels[i - 1] as f64 <= self.levels[i] as f64 - value => i - 1,
            i => i,
        }
    }

    fn command(&self, idx: [usize; 3]) -> DisplayColor {
        DisplayColor::rgb(self.levels[idx[0]], self.levels[idx[1]], self.levels[idx[2]])
    }

    /// All commands on the lattice plus off, in tie-break order.
    pub fn commands(&self) -> impl Iterator<Item = DisplayColor> + '_ {
        let l = &self.levels;
        std::iter::once(DisplayColor::OFF).chain(
            l.iter()
                .flat_map(move |&r| l.iter().flat_map(move |&g| l.iter().map(move |&b| DisplayColor::rgb(r, g, b)))),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub lattice: CommandLattice,
    /// Coarse scan points per axis.
    pub coarse_points: usize,
    /// Descents started, from the best coarse-scan local minima.
    pub starts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { lattice: CommandLattice::full(), coarse_points: 9, starts: 4 }
    }
}

impl SolverOptions {
    pub fn on_lattice(lattice: CommandLattice) -> Self {
        Self { lattice, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lattice.len() < 2 {
            return Err(Error::Config("lattice needs at least two levels".into()));
        }
        if self.coarse_points < 2 {
            return Err(Error::Config("coarse_points must be at least 2".into()));
        }
        if self.starts == 0 {
            return Err(Error::Config("starts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Perceived color of a command against a background.
pub fn perceived(c: DisplayColor, bg: &BackgroundLight, m: &DisplayModel, wp: &WhitePoint) -> Result<LuvColor> {
    xyz_to_luv(blend(display_to_xyz(c, m), bg), wp)
}

struct Objective<'a> {
    target: LuvColor,
    bg: &'a BackgroundLight,
    model: &'a DisplayModel,
    wp: &'a WhitePoint,
    evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    command: DisplayColor,
    achieved: LuvColor,
    residual: f64,
}

impl Candidate {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.residual.total_cmp(&other.residual).then(self.command.cmp(&other.command))
    }
}

impl Objective<'_> {
    fn eval(&mut self, command: DisplayColor) -> Result<Candidate> {
        self.evaluations += 1;
        let achieved = perceived(command, self.bg, self.model, self.wp)?;
        Ok(Candidate { command, achieved, residual: delta_e(&self.target, &achieved) })
    }
}

fn best(a: Candidate, b: Candidate) -> Candidate {
    if b.cmp_key(&a) == Ordering::Less {
        b
    } else {
        a
    }
}

/// Coarse scan indices into a lattice of `n` levels.
fn coarse_indices(n: usize, points: usize) -> Vec<usize> {
    let points = points.min(n);
    let mut v: Vec<usize> =
        (0..points).map(|i| ((i * (n - 1)) as f64 / (points - 1) as f64).round() as usize).collect();
    v.dedup();
    v
}

/// Descent moves up to this many steps per axis (a 5³−1 neighborhood). The
/// plain 26-neighborhood stalls in valleys that run off the lattice
/// diagonals; this one is a superset, so its fixed points are also
/// 26-neighborhood optima.
const DESCENT_REACH: isize = 2;

/// In-bounds points at offsets of `step` in each of the 26 directions.
fn neighbors(p: [usize; 3], n: usize, step: usize) -> impl Iterator<Item = [usize; 3]> {
    let (n, step) = (n as isize, step as isize);
    (0..27).filter(|&d| d != 13).filter_map(move |d| {
        let off = [d / 9 - 1, (d / 3) % 3 - 1, d % 3 - 1];
        let q = [0, 1, 2].map(|i| p[i] as isize + off[i] * step);
        q.iter().all(|&x| (0..n).contains(&x)).then(|| q.map(|x| x as usize))
    })
}

fn descend(
    obj: &mut Objective,
    lattice: &CommandLattice,
    start: [usize; 3],
    start_val: Candidate,
    step0: usize,
) -> Result<Candidate> {
    let n = lattice.len() as isize;
    let mut pos = start;
    let mut cur = start_val;
    let mut step = step0.max(1) as isize;
    loop {
        let mut moved = false;
        let mut best_here = cur;
        let mut best_pos = pos;
        for dr in -DESCENT_REACH..=DESCENT_REACH {
            for dg in -DESCENT_REACH..=DESCENT_REACH {
                for db in -DESCENT_REACH..=DESCENT_REACH {
                    if dr == 0 && dg == 0 && db == 0 {
                        continue;
                    }
                    let next = [pos[0] as isize + dr * step, pos[1] as isize + dg * step, pos[2] as isize + db * step];
                    if next.iter().any(|&i| i < 0 || i >= n) {
                        continue;
                    }
                    let idx = next.map(|i| i as usize);
                    let cand = obj.eval(lattice.command(idx))?;
                    if cand.cmp_key(&best_here) == Ordering::Less {
                        best_here = cand;
                        best_pos = idx;
                        moved = true;
                    }
                }
            }
        }
        if moved {
            cur = best_here;
            pos = best_pos;
        } else if step > 1 {
            step /= 2;
        } else {
            return Ok(cur);
        }
    }
}

/// Lattice point nearest the command that would reproduce `target` if it
/// were inside the display's reach: invert L*u*v*, remove the background,
/// invert the primaries and the tone curve, clamping to the command range.
/// `None` when the target has no physical tristimulus.
fn analytic_seed(
    target: LuvColor,
    bg: &BackgroundLight,
    m: &DisplayModel,
    wp: &WhitePoint,
    lattice: &CommandLattice,
) -> Option<[usize; 3]> {
    let xyz = luv_to_xyz(target, wp).ok()?;
    let own = [xyz.x - bg.xyz.x, xyz.y - bg.xyz.y, xyz.z - bg.xyz.z];
    let lin = solve3(&m.primaries(), own)?;
    Some(lin.map(|i| lattice.nearest(255.0 * i.clamp(0.0, 1.0).powf(1.0 / m.gamma()))))
}

/// Best command for `target` with the default search options.
pub fn correct_color(
    target: LuvColor,
    bg: &BackgroundLight,
    m: &DisplayModel,
    wp: &WhitePoint,
    tolerance: f64,
) -> Result<CorrectionResult> {
    correct_color_with(target, bg, m, wp, tolerance, &SolverOptions::default())
}

pub fn correct_color_with(
    target: LuvColor,
    bg: &BackgroundLight,
    m: &DisplayModel,
    wp: &WhitePoint,
    tolerance: f64,
    opts: &SolverOptions,
) -> Result<CorrectionResult> {
    if !(tolerance > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tolerance}")));
    }
    if ![target.l, target.u, target.v].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("target must be finite".into()));
    }
    opts.validate()?;
    let lattice = &opts.lattice;
    let mut obj = Objective { target, bg, model: m, wp, evaluations: 0 };

    let mut overall = obj.eval(DisplayColor::OFF)?;
    let axis = coarse_indices(lattice.len(), opts.coarse_points);
    let a = axis.len();
    let mut grid: Vec<Candidate> = Vec::with_capacity(a * a * a);
    for &i in &axis {
        for &j in &axis {
            for &k in &axis {
                grid.push(obj.eval(lattice.command([i, j, k]))?);
            }
        }
    }
    let at = |p: [usize; 3]| grid[(p[0] * a + p[1]) * a + p[2]];
    // descents start from coarse-grid local minima, best first
    let mut seeds: Vec<([usize; 3], Candidate)> = Vec::new();
    for i in 0..a {
        for j in 0..a {
            for k in 0..a {
                let here = at([i, j, k]);
                let is_min = neighbors([i, j, k], a, 1).all(|q| at(q).cmp_key(&here) == Ordering::Greater);
                if is_min {
                    seeds.push(([axis[i], axis[j], axis[k]], here));
                }
            }
        }
    }
    seeds.sort_by(|x, y| x.1.cmp_key(&y.1));
    seeds.truncate(opts.starts);
    if let Some(idx) = analytic_seed(target, bg, m, wp, lattice) {
        let cand = obj.eval(lattice.command(idx))?;
        seeds.push((idx, cand));
    }
    let step = (lattice.len() - 1).div_ceil(a - 1);
    for &(idx, cand) in &seeds {
        let local = descend(&mut obj, lattice, idx, cand, step)?;
        overall = best(overall, local);
    }
    Ok(CorrectionResult {
        target,
        best_command: overall.command,
        achieved: overall.achieved,
        residual: overall.residual,
        iterations: obj.evaluations,
        exact: overall.residual <= tolerance,
    })
}

/// Exhaustive minimum over a lattice (plus off), same tie-break as the solver.
pub fn exhaustive_search(
    target: LuvColor,
    bg: &BackgroundLight,
    m: &DisplayModel,
    wp: &WhitePoint,
    lattice: &CommandLattice,
) -> Result<(DisplayColor, f64)> {
    let mut obj = Objective { target, bg, model: m, wp, evaluations: 0 };
    let mut overall: Option<Candidate> = None;
    for c in lattice.commands() {
        let cand = obj.eval(c)?;
        overall = Some(match overall {
            None => cand,
            Some(o) => best(o, cand),
        });
    }
    let o = overall.expect("lattice is never empty");
    Ok((o.command, o.residual))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GamutCloud {
    pub commands: Vec<DisplayColor>,
    pub points: Vec<LuvColor>,
    /// u′v′ of every point with nonzero light.
    pub uv: Vec<UvPrime>,
    /// Counter-clockwise hull of `uv`.
    pub hull: Vec<UvPrime>,
    pub hull_area: f64,
}

/// Perceived colors over a `samples_per_axis`³ command lattice.
pub fn achievable_gamut(
    bg: &BackgroundLight,
    m: &DisplayModel,
    wp: &WhitePoint,
    samples_per_axis: usize,
) -> Result<GamutCloud> {
    if samples_per_axis < 2 {
        return Err(Error::Domain(format!("samples_per_axis must be at least 2, got {samples_per_axis}")));
    }
    let lattice = CommandLattice::uniform(samples_per_axis.min(256))?;
    let mut cloud =
        GamutCloud { commands: Vec::new(), points: Vec::new(), uv: Vec::new(), hull: Vec::new(), hull_area: 0.0 };
    for c in lattice.commands().skip(1) {
        let xyz = blend(display_to_xyz(c, m), bg);
        cloud.commands.push(c);
        cloud.points.push(xyz_to_luv(xyz, wp)?);
        if xyz.x + 15.0 * xyz.y + 3.0 * xyz.z > 0.0 {
            cloud.uv.push(xyz_to_uv(xyz)?);
        }
    }
    cloud.hull = convex_hull(&cloud.uv);
    cloud.hull_area = polygon_area(&cloud.hull);
    Ok(cloud)
}

/// Greedy pass over the palette in order, keeping each color whose perceived
/// ΔE to every color kept so far exceeds `min_separation`.
pub fn rank_distinguishable_colors(
    bg: &BackgroundLight,
    m: &DisplayModel,
    wp: &WhitePoint,
    min_separation: f64,
) -> Result<Vec<DisplayColor>> {
    if min_separation.is_nan() || min_separation < 0.0 {
        return Err(Error::Domain(format!("min_separation must be nonnegative, got {min_separation}")));
    }
    let mut kept: Vec<(DisplayColor, LuvColor)> = Vec::new();
    for entry in palette().entries() {
        let luv = perceived(entry.color, bg, m, wp)?;
        if kept.iter().all(|(_, k)| delta_e(k, &luv) > min_separation) {
            kept.push((entry.color, luv));
        }
    }
    Ok(kept.into_iter().map(|(c, _)| c).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colorspace::{ChromaticityXY, TristimulusXYZ};
    use crate::dataset::LightingCondition;

    fn setup(bg_y: f64) -> (DisplayModel, BackgroundLight, WhitePoint) {
        let m = DisplayModel::srgb(100.0, 2.2).unwrap();
        let bg = if bg_y == 0.0 {
            BackgroundLight::NONE
        } else {
            BackgroundLight::from_xyy(ChromaticityXY::new(0.33, 0.34, bg_y).unwrap()).unwrap()
        };
        let wp = WhitePoint::new(m.white() + bg.xyz, LightingCondition::Both).unwrap();
        (m, bg, wp)
    }

    #[test]
    fn uniform_lattice_levels() {
        let l = CommandLattice::uniform(17).unwrap();
        assert_eq!(l.levels()[0], 0);
        assert_eq!(l.levels()[16], 255);
        assert_eq!(l.levels()[8], 128);
        assert_eq!(l.commands().count(), 17 * 17 * 17 + 1);
        assert!(CommandLattice::uniform(1).is_err());
        assert_eq!(coarse_indices(17, 9), vec![0, 2, 4, 6, 8, 10, 12, 14, 16]);
        assert_eq!(coarse_indices(3, 9), vec![0, 1, 2]);
        assert_eq!(l.nearest(-3.0), 0);
        assert_eq!(l.nearest(300.0), 16);
        // ties go to the lower level, like the command tie-break
        assert_eq!(l.nearest(8.0), 0);
        assert_eq!(l.nearest(8.1), 1);
        assert_eq!(CommandLattice::full().nearest(127.4), 127);
    }

    #[test]
    fn analytic_seed_lands_on_reachable_command() {
        let (m, bg, wp) = setup(80.0);
        let c = DisplayColor::rgb(35, 122, 196);
        let target = perceived(c, &bg, &m, &wp).unwrap();
        assert_eq!(analytic_seed(target, &bg, &m, &wp, &CommandLattice::full()), Some([35, 122, 196]));
        let r = correct_color(target, &bg, &m, &wp, 1e-6).unwrap();
        assert_eq!(r.best_command, c);
    }

    #[test]
    fn reachable_target_is_recovered() {
        let (m, bg, wp) = setup(0.0);
        let c = DisplayColor::rgb(200, 50, 120);
        let target = perceived(c, &bg, &m, &wp).unwrap();
        let r = correct_color(target, &bg, &m, &wp, 1e-6).unwrap();
        assert_eq!(r.best_command, c);
        assert_eq!(r.residual, 0.0);
        assert!(r.exact);
    }

    #[test]
    fn background_color_maps_to_off() {
        let (m, bg, wp) = setup(150.0);
        let target = perceived(DisplayColor::OFF, &bg, &m, &wp).unwrap();
        let r = correct_color(target, &bg, &m, &wp, 1e-6).unwrap();
        assert_eq!(r.best_command, DisplayColor::OFF);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn never_worse_than_off() {
        let (m, bg, wp) = setup(60.0);
        let target = LuvColor::new(10.0, -40.0, 30.0);
        let r = correct_color(target, &bg, &m, &wp, 0.5).unwrap();
        let off = delta_e(&target, &perceived(DisplayColor::OFF, &bg, &m, &wp).unwrap());
        assert!(r.residual <= off);
        assert!(!r.exact);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let (m, bg, wp) = setup(0.0);
        let t = LuvColor::new(50.0, 0.0, 0.0);
        assert!(correct_color(t, &bg, &m, &wp, 0.0).is_err());
        assert!(correct_color(t, &bg, &m, &wp, f64::NAN).is_err());
    }

    #[test]
    fn two_sample_gamut_is_primary_triangle() {
        let (m, bg, wp) = setup(0.0);
        let g = achievable_gamut(&bg, &m, &wp, 2).unwrap();
        assert_eq!(g.points.len(), 8);
        assert_eq!(g.uv.len(), 7);
        assert_eq!(g.hull.len(), 3);
        let tri: Vec<UvPrime> = (0..3).map(|j| m.corner(j).to_uv().unwrap()).collect();
        assert!((g.hull_area - polygon_area(&convex_hull(&tri))).abs() < 1e-15);
        assert!(achievable_gamut(&bg, &m, &wp, 1).is_err());
    }

    #[test]
    fn cloud_never_darker_than_background() {
        let (m, bg, wp) = setup(40.0);
        let floor = perceived(DisplayColor::OFF, &bg, &m, &wp).unwrap().l;
        let g = achievable_gamut(&bg, &m, &wp, 5).unwrap();
        assert!(g.points.iter().all(|p| p.l >= floor));
    }

    #[test]
    fn distinguishable_extremes() {
        let (m, bg, wp) = setup(0.0);
        assert_eq!(rank_distinguishable_colors(&bg, &m, &wp, 0.0).unwrap().len(), 27);
        let one = rank_distinguishable_colors(&bg, &m, &wp, f64::INFINITY).unwrap();
        assert_eq!(one, vec![DisplayColor::OFF]);
        assert!(rank_distinguishable_colors(&bg, &m, &wp, -1.0).is_err());
    }

    #[test]
    fn bright_background_admits_fewer_colors() {
        let (m, dark, wp_dark) = setup(0.0);
        let (_, bright, wp_bright) = setup(220.0);
        let n_dark = rank_distinguishable_colors(&dark, &m, &wp_dark, 10.0).unwrap().len();
        let n_bright = rank_distinguishable_colors(&bright, &m, &wp_bright, 10.0).unwrap().len();
        assert!(n_bright < n_dark, "{n_bright} vs {n_dark}");
    }

    #[test]
    fn zero_background_xyz_is_identity() {
        let (m, bg, _) = setup(0.0);
        let c = DisplayColor::rgb(10, 20, 30);
        assert_eq!(blend(display_to_xyz(c, &m), &bg), display_to_xyz(c, &m));
        assert_eq!(bg.xyz, TristimulusXYZ::ZERO);
    }
}
