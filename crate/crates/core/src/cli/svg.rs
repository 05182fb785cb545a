//! Minimal deterministic SVG charts.

use std::fmt::Write as _;

const W: f64 = 720.0;
const BAR_H: f64 = 18.0;
const MARGIN_L: f64 = 170.0;
const MARGIN_R: f64 = 30.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, w: f64, h: f64, comment: &[String], title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#
    );
    for c in comment {
        let _ = writeln!(out, "<!-- {} -->", c.replace("--", "- -"));
    }
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
}

/// Horizontal bar chart of `(label, value)` in the given order.
pub fn bar_chart(title: &str, bars: &[(String, f64)], comment: &[String]) -> String {
    let h = 50.0 + BAR_H * bars.len() as f64 + 30.0;
    let mut out = String::new();
    header(&mut out, W, h, comment, title);
    let max = bars.iter().map(|b| b.1).fold(0.0_f64, f64::max);
    let span = W - MARGIN_L - MARGIN_R - 60.0;
    for (i, (label, v)) in bars.iter().enumerate() {
        let y = 40.0 + BAR_H * i as f64;
        let len = if max > 0.0 { span * v / max } else { 0.0 };
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN_L - 6.0,
            y + BAR_H * 0.7,
            escape(label)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{MARGIN_L:.1}" y="{:.1}" width="{len:.2}" height="{:.1}" fill="#3b6ea5"/>"##,
            y + 2.0,
            BAR_H - 4.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{v:.4}</text>"#,
            MARGIN_L + len + 4.0,
            y + BAR_H * 0.7
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter plot of `(x, y)` points with a zero line on the y axis.
pub fn scatter(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)], comment: &[String]) -> String {
    let (w, h) = (W, 420.0);
    let (l, r, t, b) = (70.0, 20.0, 40.0, 50.0);
    let mut out = String::new();
    header(&mut out, w, h, comment, title);
    let bounds = |vals: &mut dyn Iterator<Item = f64>| {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in vals {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let (x0, x1) = bounds(&mut points.iter().map(|p| p.0));
    let (y0, y1) = bounds(&mut points.iter().map(|p| p.1).chain([0.0]));
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let py = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        w - l - r,
        h - t - b
    );
    let _ = writeln!(
        out,
        r##"<line x1="{l}" y1="{0:.2}" x2="{1:.1}" y2="{0:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
        py(0.0),
        w - r
    );
    for (x, y) in points {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#c0392b" fill-opacity="0.6"/>"##,
            px(*x),
            py(*y)
        );
    }
    let _ = writeln!(out, r#"<text x="{l}" y="{:.1}">{x0:.4}</text>"#, h - b + 16.0);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{x1:.4}</text>"#,
        w - r,
        h - b + 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y1:.4}</text>"#,
        l - 4.0,
        t + 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y0:.4}</text>"#,
        l - 4.0,
        h - b
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (l + w - r) / 2.0,
        h - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (t + h - b) / 2.0,
        (t + h - b) / 2.0,
        escape(y_label)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let c = vec!["config_hash=abc seed=1".to_string()];
        let s = bar_chart("t<1>", &[("a".into(), 0.5), ("b".into(), 0.25)], &c);
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("<!-- config_hash=abc seed=1 -->"));
        assert!(s.contains("t&lt;1&gt;"));
        assert_eq!(s.matches("<rect").count(), 3);
        let p = scatter("x", "v", "shap", &[(0.0, 1.0), (1.0, -1.0)], &c);
        assert_eq!(p.matches("<circle").count(), 2);
        assert_eq!(scatter("e", "v", "s", &[], &c).matches("<circle").count(), 0);
    }
}
