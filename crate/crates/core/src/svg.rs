//! Minimal deterministic SVG rendering for report tables.

use std::fmt::Write;

const W: f64 = 480.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Axis mapping from data range to pixel range.
struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn header(out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 15.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
}

fn ticks(out: &mut String, x: &Axis, y: &Axis) {
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x.lo + f * (x.hi - x.lo);
        let yv = y.lo + f * (y.hi - y.lo);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, x.map(xv), H - MARGIN + 15.0, fmt_tick(xv));
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, MARGIN - 5.0, y.map(yv) + 4.0, fmt_tick(yv));
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() < 1e-2 || v.abs() >= 1e4 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter of labelled `(x, y)` points against a dashed `y = x` diagonal,
/// both axes sharing one range.
pub fn scatter_with_diagonal(title: &str, xlabel: &str, ylabel: &str, points: &[(String, f64, f64)]) -> String {
    let mut out = String::new();
    header(&mut out, title, xlabel, ylabel);
    let hi = points.iter().flat_map(|p| [p.1, p.2]).fold(0.0f64, f64::max) * 1.1;
    let hi = if hi > 0.0 { hi } else { 1.0 };
    let x = Axis::new(0.0, hi, MARGIN, W - MARGIN);
    let y = Axis::new(0.0, hi, H - MARGIN, MARGIN);
    ticks(&mut out, &x, &y);
    let _ = writeln!(
        out,
        r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#888" stroke-dasharray="6 4"/>"##,
        x.map(0.0),
        y.map(0.0),
        x.map(hi),
        y.map(hi)
    );
    for (i, (name, px, py)) in points.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let (cx, cy) = (x.map(*px), y.map(*py));
        let _ = writeln!(out, r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="5" fill="{c}"/>"#);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, cx + 7.0, cy - 7.0, escape(name));
    }
    out.push_str("</svg>\n");
    out
}

/// One polyline with markers per series; y range fixed to `[0, 1]`.
pub fn accuracy_lines(title: &str, xlabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut out = String::new();
    header(&mut out, title, xlabel, "accuracy");
    let xs: Vec<f64> = series.iter().flat_map(|s| s.1.iter().map(|p| p.0)).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    let x = Axis::new(lo - pad, hi + pad, MARGIN, W - MARGIN);
    let y = Axis::new(0.0, 1.0, H - MARGIN, MARGIN);
    ticks(&mut out, &x, &y);
    for (i, (name, pts)) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|(a, b)| format!("{:.1},{:.1}", x.map(*a), y.map(*b))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{c}"/>"#, path.join(" "));
        for (a, b) in pts {
            let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="3.5" fill="{c}"/>"#, x.map(*a), y.map(*b));
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" fill="{c}">{}</text>"#,
            W - MARGIN + 5.0 - 110.0,
            MARGIN + 15.0 + 14.0 * i as f64,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_is_deterministic_and_has_diagonal() {
        let pts = vec![("a".to_string(), 1.0, 2.0), ("b<".to_string(), 0.5, 0.5)];
        let s = scatter_with_diagonal("t", "x", "y", &pts);
        assert_eq!(s, scatter_with_diagonal("t", "x", "y", &pts));
        assert!(s.contains("stroke-dasharray"));
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("b&lt;"));
    }

    #[test]
    fn lines_handle_single_point() {
        let s = accuracy_lines("t", "T", &[("d".into(), vec![(3.0, 0.9)])]);
        assert_eq!(s.matches("<circle").count(), 1);
        assert!(!s.contains("NaN"));
    }
}
