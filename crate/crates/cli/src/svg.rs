//! Minimal SVG line and bar charts for quick visual checks.

use crate::output::{pit_counts, PIT_BINS};
use std::fmt::Write;
use tvssv::draws::{quantile_sorted, PosteriorDraws};
use tvssv::forecast::PredictiveDensity;
use tvssv::scoring::{ScoreReport, SCORE_NAMES};

const W: f64 = 640.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d68910", "#555555"];

pub struct Line {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    pub color: &'static str,
}

fn extent(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn frame(title: &str, y_lo: f64, y_hi: f64) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y_hi:.3}</text>", PAD - 4.0, PAD + 4.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y_lo:.3}</text>", PAD - 4.0, H - PAD);
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_chart(title: &str, lines: &[Line]) -> String {
    let (x_lo, x_hi) = extent(lines.iter().flat_map(|l| l.points.iter().map(|p| p.0)));
    let (y_lo, y_hi) = extent(lines.iter().flat_map(|l| l.points.iter().map(|p| p.1)));
    let sx = |x: f64| PAD + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y_lo) / (y_hi - y_lo) * (H - 2.0 * PAD);
    let mut s = frame(title, y_lo, y_hi);
    if y_lo < 0.0 && y_hi > 0.0 {
        let _ = writeln!(s, "<line x1=\"{PAD}\" x2=\"{}\" y1=\"{y0:.1}\" y2=\"{y0:.1}\" stroke=\"#ccc\"/>", W - PAD, y0 = sy(0.0));
    }
    for (i, l) in lines.iter().enumerate() {
        let pts: Vec<String> =
            l.points.iter().filter(|p| p.1.is_finite()).map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let dash = if l.dashed { " stroke-dasharray=\"5,4\"" } else { "" };
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
            l.color,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>",
            PAD + 6.0,
            PAD + 14.0 * (i + 1) as f64,
            l.color,
            escape(&l.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn bar_chart(title: &str, groups: &[(String, Vec<f64>)]) -> String {
    let (_, y_hi) = extent(groups.iter().flat_map(|g| g.1.iter().copied()).chain([0.0]));
    let mut s = frame(title, 0.0, y_hi);
    let n_bars = groups.iter().map(|g| g.1.len()).max().unwrap_or(1).max(1);
    let slot = (W - 2.0 * PAD) / n_bars as f64;
    let bw = slot / (groups.len() as f64 + 1.0);
    for (gi, (label, vals)) in groups.iter().enumerate() {
        let color = COLORS[gi % COLORS.len()];
        for (b, &v) in vals.iter().enumerate() {
            let h = v / y_hi * (H - 2.0 * PAD);
            let _ = writeln!(
                s,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{bw:.1}\" height=\"{h:.1}\" fill=\"{color}\"/>",
                PAD + b as f64 * slot + gi as f64 * bw,
                H - PAD - h
            );
        }
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>", PAD + 6.0, PAD + 14.0 * (gi + 1) as f64, escape(label));
    }
    s.push_str("</svg>\n");
    s
}

fn band(vals: &mut [f64]) -> [f64; 3] {
    vals.sort_by(f64::total_cmp);
    [0.15, 0.5, 0.85].map(|p| quantile_sorted(vals, p))
}

/// Median and 15/85 % bands of h_t and λ_t for the first equation.
pub fn latent_paths(draws: &PosteriorDraws) -> String {
    let len = draws.draws.first().map_or(0, |d| d.equations[0].paths.len());
    let bands = |get: fn(&tvssv::states::LatentPaths) -> &Vec<f64>| {
        let rows: Vec<[f64; 3]> = (0..len)
            .map(|t| band(&mut draws.draws.iter().map(|d| get(&d.equations[0].paths)[t]).collect::<Vec<_>>()))
            .collect();
        (0..3)
            .map(|k| Line {
                label: ["q15", "median", "q85"][k].into(),
                points: rows.iter().enumerate().map(|(t, r)| (t as f64, r[k])).collect(),
                dashed: k != 1,
                color: COLORS[0],
            })
            .collect::<Vec<_>>()
    };
    let mut h = line_chart("volatility h_t", &bands(|p| &p.h));
    let lam = line_chart("shape lambda_t", &bands(|p| &p.lambda));
    // Stack the two charts vertically.
    h = h.replacen(&format!("height=\"{H}\""), &format!("height=\"{}\"", 2.0 * H), 1);
    h.truncate(h.len() - "</svg>\n".len());
    format!("{h}{}</svg>\n", lam.replacen("<svg", &format!("<svg y=\"{H}\""), 1))
}

/// Quantiles 5/50/95 % of `target` across horizons.
pub fn fan_chart(pds: &[PredictiveDensity], target: &str) -> String {
    let mut sel: Vec<&PredictiveDensity> = pds.iter().filter(|p| p.variable == target).collect();
    sel.sort_by_key(|p| p.horizon);
    let lines: Vec<Line> = [0.05, 0.5, 0.95]
        .iter()
        .enumerate()
        .map(|(k, &q)| Line {
            label: format!("q{:02}", (q * 100.0) as u32),
            points: sel.iter().map(|p| (p.horizon as f64, p.gar_quantile(q))).collect(),
            dashed: k != 1,
            color: COLORS[0],
        })
        .collect();
    line_chart(&format!("predictive quantiles of {target} by horizon"), &lines)
}

pub fn pit_histograms(report: &ScoreReport) -> String {
    let groups: Vec<(String, Vec<f64>)> = report
        .scores
        .iter()
        .map(|(m, rows)| (m.clone(), pit_counts(rows.iter().map(|r| r.pit)).iter().map(|&c| c as f64).collect()))
        .collect();
    bar_chart(&format!("PIT histogram ({PIT_BINS} bins)"), &groups)
}

/// One score by origin for every model.
pub fn score_paths(report: &ScoreReport, score: &str) -> String {
    let j = SCORE_NAMES.iter().position(|s| *s == score).unwrap_or(1);
    let lines: Vec<Line> = report
        .scores
        .iter()
        .enumerate()
        .map(|(i, (m, rows))| Line {
            label: m.clone(),
            points: rows.iter().enumerate().map(|(t, r)| (t as f64, r.losses()[j])).collect(),
            dashed: false,
            color: COLORS[i % COLORS.len()],
        })
        .collect();
    line_chart(&format!("{score} by origin"), &lines)
}
