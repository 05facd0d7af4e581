//! Small-multiples export: one SVG panel per background pair, an index page
//! laying them out in a grid, and the numbers behind them as CSV.

use std::fmt::Write as _;

use crate::analysis::{analyze_all, row_order, Category, ClassifierConfig, PairAnalysis};
use crate::colorspace::UvPrime;
use crate::dataset::{palette, Background, Dataset};
use crate::display::fmt_num;
use crate::error::{Error, Result};

pub const SHIFTS_HEADER: &str = "bg_a,bg_b,color_name,u_from,v_from,u_to,v_to,dL,du,dv,total,lum,chroma";
pub const CATEGORIES_HEADER: &str =
    "bg_a,bg_b,category,avg_total,avg_lum,avg_chroma,lum_fraction,coherence,dispersion_ratio,bar_fraction";

const PANEL_W: f64 = 220.0;
const PANEL_H: f64 = 268.0;
const PLOT_X: f64 = 30.0;
const PLOT_Y: f64 = 28.0;
const PLOT_SIZE: f64 = 180.0;
/// u′ and v′ both span [0, UV_MAX] on the panel axes.
const UV_MAX: f64 = 0.6;
const BAR_Y: f64 = 232.0;
const BAR_H: f64 = 12.0;

const LUM_FILL: &str = "#f29ab8";
const CHROMA_FILL: &str = "#5b8fd6";

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub background_a: Background,
    pub background_b: Background,
    pub file_name: String,
    /// Bar length relative to the pair with the largest average change.
    pub bar_fraction: f64,
    pub svg: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallMultiples {
    pub pairs: Vec<PairAnalysis>,
    pub panels: Vec<Panel>,
    pub index_html: String,
    /// One row per color per pair.
    pub shifts_csv: String,
    /// One row per pair.
    pub categories_csv: String,
    /// Plain-text category report with the poster-vs-real section.
    pub report: String,
}

pub fn category_color(c: Category) -> &'static str {
    match c {
        Category::WashoutChromaticity => "#d62728",
        Category::WashoutLuminance => "#ff7f0e",
        Category::WashoutBoth => "#2ca02c",
        Category::LinearShift => "#1f77b4",
    }
}

pub fn export_small_multiples(ds: &Dataset, cfg: &ClassifierConfig) -> Result<SmallMultiples> {
    let pairs = analyze_all(ds, cfg)?;
    if pairs.is_empty() {
        return Err(Error::Empty("dataset holds fewer than two backgrounds".into()));
    }
    let max_total = pairs.iter().map(|p| p.avg_total).fold(0.0, f64::max);
    let panels: Vec<Panel> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let bar_fraction = p.avg_total / max_total;
            Panel {
                background_a: p.background_a,
                background_b: p.background_b,
                file_name: format!("{:02}_{}__{}.svg", i + 1, p.background_a, p.background_b),
                bar_fraction,
                svg: render_panel(p, bar_fraction),
            }
        })
        .collect();
    Ok(SmallMultiples {
        index_html: render_index(&pairs, &panels),
        shifts_csv: shifts_csv(&pairs),
        categories_csv: categories_csv(&pairs, &panels),
        report: report(&pairs, max_total),
        pairs,
        panels,
    })
}

fn to_px(p: UvPrime) -> (f64, f64) {
    (PLOT_X + p.u / UV_MAX * PLOT_SIZE, PLOT_Y + PLOT_SIZE - p.v / UV_MAX * PLOT_SIZE)
}

pub fn render_panel(p: &PairAnalysis, bar_fraction: f64) -> String {
    let mut s = String::new();
    let border = category_color(p.category);
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{PANEL_H}" viewBox="0 0 {PANEL_W} {PANEL_H}" font-family="sans-serif">"##
    );
    let _ = writeln!(
        s,
        r##"<rect x="0.5" y="0.5" width="{}" height="{}" fill="#fafafa" stroke="{border}" stroke-width="2"/>"##,
        PANEL_W - 1.0,
        PANEL_H - 1.0
    );
    let _ = writeln!(
        s,
        r##"<rect x="1" y="1" width="{}" height="18" fill="#e6e6e6"/><text x="{}" y="14" font-size="11" text-anchor="middle">{} → {}</text>"##,
        PANEL_W - 2.0,
        PANEL_W / 2.0,
        p.background_a.label(),
        p.background_b.label()
    );

    // axes and grid
    let _ =
        writeln!(s, r##"<rect x="{PLOT_X}" y="{PLOT_Y}" width="{PLOT_SIZE}" height="{PLOT_SIZE}" fill="#3a3a3a"/>"##);
    for k in 1..6 {
        let t = k as f64 * 0.1;
        let (x, _) = to_px(UvPrime { u: t, v: 0.0 });
        let (_, y) = to_px(UvPrime { u: 0.0, v: t });
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{PLOT_Y}" x2="{x:.2}" y2="{:.2}" stroke="#555" stroke-width="0.5"/><line x1="{PLOT_X}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#555" stroke-width="0.5"/>"##,
            PLOT_Y + PLOT_SIZE,
            PLOT_X + PLOT_SIZE
        );
        let _ = writeln!(
            s,
            r##"<text x="{x:.2}" y="{:.2}" font-size="7" text-anchor="middle">{t:.1}</text><text x="{:.2}" y="{:.2}" font-size="7" text-anchor="end">{t:.1}</text>"##,
            PLOT_Y + PLOT_SIZE + 9.0,
            PLOT_X - 3.0,
            y + 2.5
        );
    }
    let _ = writeln!(
        s,
        r##"<text x="{:.2}" y="{:.2}" font-size="8" text-anchor="middle">u′</text><text x="8" y="{:.2}" font-size="8">v′</text>"##,
        PLOT_X + PLOT_SIZE / 2.0,
        PLOT_Y + PLOT_SIZE + 19.0,
        PLOT_Y + PLOT_SIZE / 2.0
    );

    for sh in &p.shifts {
        let (x1, y1) = to_px(sh.from_uv);
        let (x2, y2) = to_px(sh.to_uv);
        let _ = writeln!(
            s,
            r##"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="#bbb" stroke-width="0.8"/>"##
        );
    }
    for sh in &p.shifts {
        for (pt, fill) in [(sh.from_uv, "#ffffff"), (sh.to_uv, "#9a9a9a")] {
            let (x, y) = to_px(pt);
            if sh.color.is_off() {
                // display off: the background itself
                let _ = writeln!(
                    s,
                    r##"<rect x="{:.3}" y="{:.3}" width="5" height="5" fill="#00e5ff" stroke="#000" stroke-width="0.4"/>"##,
                    x - 2.5,
                    y - 2.5
                );
            } else {
                let _ = writeln!(
                    s,
                    r##"<circle cx="{x:.3}" cy="{y:.3}" r="2" fill="{fill}" stroke="#000" stroke-width="0.4"/>"##
                );
            }
        }
    }

    // stacked bar: luminance then chromaticity, scaled to the largest pair
    let full = PLOT_SIZE * bar_fraction;
    let lum_w = if p.avg_total > 0.0 { full * p.avg_lum / p.avg_total } else { 0.0 };
    let _ = writeln!(
        s,
        r##"<rect x="{PLOT_X}" y="{BAR_Y}" width="{PLOT_SIZE}" height="{BAR_H}" fill="none" stroke="#ccc" stroke-width="0.5"/>"##
    );
    let _ = writeln!(
        s,
        r##"<rect x="{PLOT_X}" y="{BAR_Y}" width="{lum_w:.3}" height="{BAR_H}" fill="{LUM_FILL}"/><rect x="{:.3}" y="{BAR_Y}" width="{:.3}" height="{BAR_H}" fill="{CHROMA_FILL}"/>"##,
        PLOT_X + lum_w,
        full - lum_w
    );
    let _ = writeln!(
        s,
        r##"<text x="{PLOT_X}" y="{:.1}" font-size="8">ΔE {:.1} (L {:.1} / uv {:.1}) · {}</text>"##,
        BAR_Y + BAR_H + 10.0,
        p.avg_total,
        p.avg_lum,
        p.avg_chroma,
        p.category
    );
    s.push_str("</svg>\n");
    s
}

fn render_index(pairs: &[PairAnalysis], panels: &[Panel]) -> String {
    let mut s = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Pairwise background comparison</title>\n\
         <style>body{font-family:sans-serif} .row{display:flex;flex-wrap:nowrap;gap:4px;margin-bottom:4px} img{display:block}</style>\n\
         </head><body>\n<h1>Pairwise background comparison</h1>\n<p>",
    );
    for c in Category::ALL {
        let _ =
            write!(s, "<span style=\"border:3px solid {};padding:2px;margin-right:6px\">{c}</span>", category_color(c));
    }
    s.push_str("</p>\n");
    for first in row_order() {
        let row: Vec<&Panel> = panels.iter().filter(|p| p.background_a == first).collect();
        if row.is_empty() {
            continue;
        }
        let _ = writeln!(s, "<div class=\"row\" title=\"{first}\">");
        for panel in row {
            let _ = writeln!(
                s,
                "  <a href=\"panels/{0}\"><img src=\"panels/{0}\" alt=\"{1} vs {2}\" width=\"{3}\" height=\"{4}\"></a>",
                panel.file_name, panel.background_a, panel.background_b, PANEL_W, PANEL_H
            );
        }
        s.push_str("</div>\n");
    }
    let _ = writeln!(s, "<p>{} pairs.</p>\n</body></html>", pairs.len());
    s
}

fn shifts_csv(pairs: &[PairAnalysis]) -> String {
    let pal = palette();
    let mut s = format!("{SHIFTS_HEADER}\n");
    for p in pairs {
        for sh in &p.shifts {
            let name = pal.name_of(sh.color).unwrap_or("?");
            let nums = [
                sh.from_uv.u,
                sh.from_uv.v,
                sh.to_uv.u,
                sh.to_uv.v,
                sh.delta_luv[0],
                sh.delta_luv[1],
                sh.delta_luv[2],
                sh.total,
                sh.lum_component,
                sh.chroma_component,
            ];
            let nums: Vec<String> = nums.iter().map(|v| fmt_num(*v)).collect();
            let _ = writeln!(s, "{},{},{},{}", p.background_a, p.background_b, name, nums.join(","));
        }
    }
    s
}

fn categories_csv(pairs: &[PairAnalysis], panels: &[Panel]) -> String {
    let mut s = format!("{CATEGORIES_HEADER}\n");
    for (p, panel) in pairs.iter().zip(panels) {
        let st = &p.pattern_stats;
        let nums: Vec<String> = [
            p.avg_total,
            p.avg_lum,
            p.avg_chroma,
            st.lum_fraction,
            st.coherence,
            st.dispersion_ratio,
            panel.bar_fraction,
        ]
        .iter()
        .map(|v| fmt_num(*v))
        .collect();
        let _ = writeln!(s, "{},{},{},{}", p.background_a, p.background_b, p.category, nums.join(","));
    }
    s
}

fn report(pairs: &[PairAnalysis], max_total: f64) -> String {
    let mut s = String::from("Pairwise background comparison\n\n");
    let line = |s: &mut String, p: &PairAnalysis| {
        let _ = writeln!(
            s,
            "{:<20} {:<20} {:<21} {:>8.3} {:>8.3} {:>8.3} {:>6.3} {:>6.3}",
            p.background_a.name(),
            p.background_b.name(),
            p.category.as_str(),
            p.avg_total,
            p.avg_lum,
            p.avg_chroma,
            p.pattern_stats.lum_fraction,
            p.pattern_stats.coherence
        );
    };
    let header = format!(
        "{:<20} {:<20} {:<21} {:>8} {:>8} {:>8} {:>6} {:>6}\n",
        "bg_a", "bg_b", "category", "avg_tot", "avg_lum", "avg_chr", "f_lum", "R"
    );
    s.push_str(&header);
    for p in pairs {
        line(&mut s, p);
    }
    s.push_str("\nCategory counts\n");
    for c in Category::ALL {
        let _ = writeln!(s, "  {:<21} {}", c.as_str(), pairs.iter().filter(|p| p.category == c).count());
    }
    if let Some(top) = pairs.iter().find(|p| p.avg_total == max_total) {
        let _ = writeln!(s, "\nLargest average change: {} / {} = {:.3}", top.background_a, top.background_b, max_total);
    }
    s.push_str("\nPoster vs real\n");
    s.push_str(&header);
    for p in pairs.iter().filter(|p| p.is_poster_vs_real()) {
        line(&mut s, p);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{aggregate_cells, simulate_testbed, SimulatorConfig};

    fn export() -> SmallMultiples {
        let cfg = SimulatorConfig { noise_sigma: 0.0, readings_per_cell: 1, ..SimulatorConfig::default_config() };
        let ds = aggregate_cells(&simulate_testbed(&cfg).unwrap()).unwrap();
        export_small_multiples(&ds, &ClassifierConfig::default()).unwrap()
    }

    #[test]
    fn panel_and_row_counts() {
        let sm = export();
        assert_eq!(sm.panels.len(), 55);
        let rows = sm.shifts_csv.lines().count() - 1;
        let expected: usize = sm
            .pairs
            .iter()
            .map(|p| if p.background_a.is_illuminated() && p.background_b.is_illuminated() { 27 } else { 26 })
            .sum();
        assert_eq!(expected, 10 * 26 + 45 * 27);
        assert_eq!(rows, expected);
        assert_eq!(sm.categories_csv.lines().count(), 56);
        assert!(sm.shifts_csv.starts_with(SHIFTS_HEADER));
    }

    #[test]
    fn bars_scale_to_largest_pair() {
        let sm = export();
        let max = sm.panels.iter().map(|p| p.bar_fraction).fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        assert!(sm.panels.iter().all(|p| p.bar_fraction > 0.0 && p.bar_fraction <= 1.0));
        let top = sm.panels.iter().find(|p| p.bar_fraction == 1.0).unwrap();
        assert!(top.svg.contains(&format!(r#"width="{PLOT_SIZE}" height="{BAR_H}" fill="none""#)));
    }

    #[test]
    fn svgs_are_self_contained() {
        let sm = export();
        for p in &sm.panels {
            assert!(p.svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
            assert!(p.svg.trim_end().ends_with("</svg>"));
            assert!(sm.index_html.contains(&p.file_name));
        }
        assert!(sm.report.contains("Poster vs real"));
    }
}
