//! Static SVG figures: pairwise scatter panels and GD / IGD box plots.
//!
//! Output depends only on the input values; numbers are printed with fixed
//! precision so identical inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::experiment::{Method, TrialRow};
use crate::stats::quantile;

const PANEL: f64 = 220.0;
const MARGIN: f64 = 36.0;
const COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

/// A named point cloud drawn in one color.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: &'a [Vec<f64>],
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" \
         viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// One panel per objective pair `(i, j)`, `i < j`, laid out in rows of at
/// most five.
pub fn pairwise_scatter(series: &[Series], dim: usize) -> String {
    let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|i| (i + 1..dim).map(move |j| (i, j))).collect();
    let cols = pairs.len().clamp(1, 5);
    let rows = pairs.len().div_ceil(cols).max(1);
    let cell = PANEL + 2.0 * MARGIN;
    let legend = 24.0;
    let mut svg = header(cols as f64 * cell, rows as f64 * cell + legend);

    for (k, s) in series.iter().enumerate() {
        let x = 10.0 + 140.0 * k as f64;
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.1}\" cy=\"12\" r=\"4\" fill=\"{}\"/><text x=\"{:.1}\" y=\"16\">{}</text>",
            x,
            COLORS[k % COLORS.len()],
            x + 8.0,
            s.name
        );
    }

    for (p, &(i, j)) in pairs.iter().enumerate() {
        let ox = (p % cols) as f64 * cell + MARGIN;
        let oy = (p / cols) as f64 * cell + MARGIN + legend;
        let all = || series.iter().flat_map(|s| s.points.iter());
        let (x0, x1) = range(all().map(|q| q[i]));
        let (y0, y1) = range(all().map(|q| q[j]));
        let _ = writeln!(
            svg,
            "<g class=\"panel\"><rect x=\"{ox:.1}\" y=\"{oy:.1}\" width=\"{PANEL:.0}\" height=\"{PANEL:.0}\" \
             fill=\"none\" stroke=\"#444\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">f{}</text>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 {:.1} {:.1})\">f{}</text>",
            ox + PANEL / 2.0,
            oy + PANEL + 24.0,
            i + 1,
            ox - 22.0,
            oy + PANEL / 2.0,
            ox - 22.0,
            oy + PANEL / 2.0,
            j + 1
        );
        let _ = writeln!(
            svg,
            "<text x=\"{ox:.1}\" y=\"{:.1}\" font-size=\"9\">{x0:.3}</text>\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\" text-anchor=\"end\">{x1:.3}</text>",
            oy + PANEL + 11.0,
            ox + PANEL,
            oy + PANEL + 11.0
        );
        for (k, s) in series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            for q in s.points {
                let cx = ox + (q[i] - x0) / (x1 - x0) * PANEL;
                let cy = oy + PANEL - (q[j] - y0) / (y1 - y0) * PANEL;
                let _ = writeln!(svg, "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"1.6\" fill=\"{color}\"/>");
            }
        }
        svg += "</g>\n";
    }
    svg += "</svg>\n";
    svg
}

struct BoxStats {
    lo: f64,
    q1: f64,
    med: f64,
    q3: f64,
    hi: f64,
    outliers: Vec<f64>,
}

fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (q1, med, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    let fence = 1.5 * (q3 - q1);
    let inside: Vec<f64> = v.iter().copied().filter(|&x| x >= q1 - fence && x <= q3 + fence).collect();
    Some(BoxStats {
        lo: inside.first().copied().unwrap_or(q1),
        q1,
        med,
        q3,
        hi: inside.last().copied().unwrap_or(q3),
        outliers: v.into_iter().filter(|&x| x < q1 - fence || x > q3 + fence).collect(),
    })
}

/// GD and IGD box plots per sweep point (x axis) and method (color), on a
/// log10 axis.
pub fn metric_boxplots(rows: &[TrialRow]) -> String {
    let mut sizes: Vec<(Vec<usize>, String)> = rows
        .iter()
        .map(|r| (r.sizes.split('-').filter_map(|s| s.parse().ok()).collect(), r.sizes.clone()))
        .collect();
    sizes.sort();
    sizes.dedup();
    let mut methods: Vec<Method> = rows.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();

    let width = (sizes.len() as f64 * 24.0 * methods.len() as f64 + 40.0).max(PANEL * 1.6);
    let height = 260.0;
    let legend = 24.0;
    let mut svg = header(2.0 * (width + 2.0 * MARGIN) + MARGIN, height + 2.0 * MARGIN + legend + 20.0);
    for (k, m) in methods.iter().enumerate() {
        let x = 10.0 + 150.0 * k as f64;
        let _ = writeln!(
            svg,
            "<rect x=\"{:.1}\" y=\"6\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{:.1}\" y=\"16\">{}</text>",
            x,
            COLORS[k % COLORS.len()],
            x + 14.0,
            m
        );
    }

    for (panel, (name, get)) in [
        ("GD", (|r: &TrialRow| r.gd) as fn(&TrialRow) -> Option<f64>),
        ("IGD", |r: &TrialRow| r.igd),
    ]
    .into_iter()
    .enumerate()
    {
        let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        for r in rows {
            let s = sizes.iter().position(|(_, l)| *l == r.sizes).unwrap_or(0);
            let m = methods.iter().position(|&m| m == r.method).unwrap_or(0);
            if let Some(v) = get(r).filter(|v| *v > 0.0) {
                groups.entry((s, m)).or_default().push(v.log10());
            }
        }
        let (y0, y1) = range(groups.values().flatten().copied());
        let ox = MARGIN + panel as f64 * (width + 2.0 * MARGIN) + 20.0;
        let oy = MARGIN + legend;
        let ypos = |v: f64| oy + height - (v - y0) / (y1 - y0) * height;
        let _ = writeln!(
            svg,
            "<g class=\"panel\"><rect x=\"{ox:.1}\" y=\"{oy:.1}\" width=\"{width:.1}\" height=\"{height:.1}\" \
             fill=\"none\" stroke=\"#444\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{name} (log10)</text>",
            ox + width / 2.0,
            oy - 6.0
        );
        for tick in (y0.ceil() as i64)..=(y1.floor() as i64) {
            let y = ypos(tick as f64);
            let _ = writeln!(
                svg,
                "<line x1=\"{ox:.1}\" x2=\"{:.1}\" y1=\"{y:.2}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>\
                 <text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"9\">1e{tick}</text>",
                ox + width,
                ox - 3.0,
                y + 3.0
            );
        }
        let slot = width / sizes.len().max(1) as f64;
        let bw = (slot / (methods.len() as f64 + 1.0)).min(18.0);
        for (s, (_, label)) in sizes.iter().enumerate() {
            let cx0 = ox + slot * (s as f64 + 0.5);
            let _ = writeln!(
                svg,
                "<text x=\"{cx0:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"9\">{label}</text>",
                oy + height + 12.0
            );
            for m in 0..methods.len() {
                let Some(b) = groups.get(&(s, m)).and_then(|v| box_stats(v)) else {
                    continue;
                };
                let color = COLORS[m % COLORS.len()];
                let cx = cx0 + (m as f64 - (methods.len() as f64 - 1.0) / 2.0) * bw;
                let _ = writeln!(
                    svg,
                    "<line x1=\"{cx:.2}\" x2=\"{cx:.2}\" y1=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\"/>\
                     <rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" fill-opacity=\"0.3\" stroke=\"{color}\"/>\
                     <line x1=\"{:.2}\" x2=\"{:.2}\" y1=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                    ypos(b.lo),
                    ypos(b.hi),
                    cx - bw * 0.4,
                    ypos(b.q3),
                    bw * 0.8,
                    (ypos(b.q1) - ypos(b.q3)).max(0.5),
                    cx - bw * 0.4,
                    cx + bw * 0.4,
                    ypos(b.med),
                    ypos(b.med)
                );
                for o in b.outliers {
                    let _ = writeln!(
                        svg,
                        "<circle cx=\"{cx:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"none\" stroke=\"{color}\"/>",
                        ypos(o)
                    );
                }
            }
        }
        svg += "</g>\n";
    }
    svg += "</svg>\n";
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panel_counts() {
        let pts3 = vec![vec![0.0, 0.5, 1.0], vec![1.0, 0.2, 0.0]];
        let svg = pairwise_scatter(&[Series { name: "validation", points: &pts3 }], 3);
        assert_eq!(svg.matches("class=\"panel\"").count(), 3);
        let pts5 = vec![vec![0.1; 5], vec![0.9; 5]];
        let svg = pairwise_scatter(&[Series { name: "v", points: &pts5 }], 5);
        assert_eq!(svg.matches("class=\"panel\"").count(), 10);
        assert_eq!(svg, pairwise_scatter(&[Series { name: "v", points: &pts5 }], 5));
    }

    #[test]
    fn box_stats_quartiles() {
        let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 5.0, 100.0]).unwrap();
        assert_eq!(b.med, 3.5);
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.hi, 5.0);
    }
}
