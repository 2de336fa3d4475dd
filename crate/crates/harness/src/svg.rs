//! Log-log plots of value against `n`, one per check, with the fitted slope
//! of every series in the legend.

use crate::config::CheckId;
use crate::report::Record;
use logkant::analysis::rate_fit;
use std::collections::BTreeMap;
use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 250.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// A plottable series: positive finite values at two or more distinct `n`.
pub struct Series {
    pub label: String,
    pub points: Vec<(u64, f64)>,
}

impl Series {
    /// `"slope ± max(stderr, 0.01)"`, or `None` with fewer than 3 points.
    pub fn slope_annotation(&self) -> Option<String> {
        let ns: Vec<u64> = self.points.iter().map(|p| p.0).collect();
        let vs: Vec<f64> = self.points.iter().map(|p| p.1).collect();
        let fit = rate_fit(&ns, &vs).ok()?;
        Some(format!("{:.2} ± {:.2}", fit.exponent, fit.stderr.max(0.01)))
    }
}

/// Groups the records of `check` by (family, function, metric).
pub fn series(records: &[Record], check: CheckId) -> Vec<Series> {
    let mut groups: BTreeMap<(String, String, String), BTreeMap<u64, f64>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in records.iter().filter(|r| r.check == check) {
        let (Some(n), Some(v)) = (r.n, r.value) else { continue };
        if !(v > 0.0 && v.is_finite()) {
            continue;
        }
        let key = (
            r.family.map(|f| f.name().to_string()).unwrap_or_default(),
            r.function.clone().unwrap_or_default(),
            r.metric.clone(),
        );
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().insert(n, v);
    }
    let families: std::collections::HashSet<_> = order.iter().map(|k| k.0.clone()).collect();
    order
        .into_iter()
        .filter_map(|key| {
            let pts: Vec<(u64, f64)> = groups[&key].iter().map(|(&n, &v)| (n, v)).collect();
            if pts.len() < 2 {
                return None;
            }
            let mut parts = Vec::new();
            if families.len() > 1 && !key.0.is_empty() {
                parts.push(key.0.clone());
            }
            if !key.1.is_empty() {
                parts.push(key.1.clone());
            }
            parts.push(key.2.clone());
            Some(Series { label: parts.join(" / "), points: pts })
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Rounded outward to whole decades.
fn decades(lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (lo.log10().floor(), hi.log10().ceil());
    if a == b {
        (a - 1.0, b + 1.0)
    } else {
        (a, b)
    }
}

pub fn render(records: &[Record], check: CheckId) -> String {
    let all = series(records, check);
    // Tall enough for one legend entry per series.
    let height = HEIGHT.max(TOP + 30.0 * all.len() as f64 + 20.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-size="15">{}</text>"#, LEFT, escape(check.name()));
    let (pw, ph) = (WIDTH - LEFT - RIGHT, height - TOP - BOTTOM);
    if all.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="{}">no plottable series</text>"#, LEFT, TOP + ph / 2.0);
        s.push_str("</svg>\n");
        return s;
    }
    let pts = all.iter().flat_map(|r| r.points.iter());
    let (nmin, nmax) = pts.clone().fold((u64::MAX, 0), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (vmin, vmax) = pts.fold((f64::INFINITY, 0.0_f64), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (x0, x1) = ((nmin as f64).log2() - 0.25, (nmax as f64).log2() + 0.25);
    let (y0, y1) = decades(vmin, vmax);
    let px = |n: f64| LEFT + (n.log2() - x0) / (x1 - x0) * pw;
    let py = |v: f64| TOP + (y1 - v.log10()) / (y1 - y0) * ph;

    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let mut e = y0 as i32;
    while e as f64 <= y1 {
        let y = py(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">1e{e}</text>"#, LEFT - 6.0, y + 4.0);
        e += 1;
    }
    let mut ticks: Vec<u64> = all.iter().flat_map(|r| r.points.iter().map(|p| p.0)).collect();
    ticks.sort_unstable();
    ticks.dedup();
    let stride = ticks.len().div_ceil(10).max(1);
    for n in ticks.iter().step_by(stride) {
        let x = px(*n as f64);
        let _ = writeln!(s, r##"<line x1="{x:.1}" y1="{TOP}" x2="{x:.1}" y2="{:.1}" stroke="#eee"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{n}</text>"#, TOP + ph + 16.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">n</text>"#, LEFT + pw / 2.0, height - 10.0);

    for (i, r) in all.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let dash = if i >= PALETTE.len() { r#" stroke-dasharray="5,3""# } else { "" };
        let path: Vec<String> = r.points.iter().map(|&(n, v)| format!("{:.1},{:.1}", px(n as f64), py(v))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}"{dash} stroke-width="1.5" points="{}"/>"#, path.join(" "));
        for &(n, v) in &r.points {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{colour}"/>"#, px(n as f64), py(v));
        }
        let ly = TOP + 8.0 + 30.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let slope = r.slope_annotation().map_or("slope n/a".to_string(), |a| format!("slope {a}"));
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}"{dash} stroke-width="2"/>"#, lx + 16.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 22.0, ly + 4.0, escape(&r.label));
        let _ = writeln!(s, r##"<text x="{}" y="{}" fill="#444">{}</text>"##, lx + 22.0, ly + 18.0, escape(&slope));
    }
    s.push_str("</svg>\n");
    s
}
