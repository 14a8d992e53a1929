//! Minimal hand-written SVG charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 320.0;
const PAD: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{PAD}" y="20" font-size="13">{}</text>"#, escape(title));
}

fn axes(out: &mut String, y_max: f64) {
    let _ = writeln!(
        out,
        r#"<polyline points="{PAD},{PAD} {PAD},{b} {r},{b}" fill="none" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(out, r#"<text x="4" y="{}">{y_max:.2}</text>"#, PAD + 4.0);
    let _ = writeln!(out, r#"<text x="4" y="{}">0</text>"#, H - PAD);
}

/// Line chart of `values` against their index.
pub fn line_chart(values: &[f64], title: &str) -> String {
    let mut out = String::new();
    open(&mut out, W, H, title);
    let y_max = values.iter().cloned().fold(0.0, f64::max).max(1.0);
    axes(&mut out, y_max);
    let n = values.len().max(2) - 1;
    let pts: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = PAD + (W - 2.0 * PAD) * i as f64 / n as f64;
            let y = H - PAD - (H - 2.0 * PAD) * v / y_max;
            format!("{x:.1},{y:.1}")
        })
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1"/>"#,
        pts.join(" ")
    );
    out.push_str("</svg>\n");
    out
}

/// Bar chart of `(label, count)` pairs.
pub fn bar_chart(bars: &[(usize, usize)], title: &str) -> String {
    let mut out = String::new();
    open(&mut out, W, H, title);
    let y_max = bars.iter().map(|b| b.1).max().unwrap_or(1).max(1) as f64;
    axes(&mut out, y_max);
    let slot = (W - 2.0 * PAD) / bars.len().max(1) as f64;
    for (i, &(label, count)) in bars.iter().enumerate() {
        let h = (H - 2.0 * PAD) * count as f64 / y_max;
        let x = PAD + slot * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="steelblue"/>"#,
            x + 1.0,
            H - PAD - h,
            (slot - 2.0).max(1.0)
        );
        let _ = writeln!(out, r#"<text x="{:.1}" y="{}">{label}</text>"#, x + 2.0, H - PAD + 14.0);
    }
    out.push_str("</svg>\n");
    out
}

/// Heatmap with one row per label; `marks[r]` outlines a cell in row `r`.
pub fn heatmap(rows: &[(String, Vec<f64>)], columns: &[String], marks: &[Option<usize>], title: &str) -> String {
    let cell_w = 56.0;
    let cell_h = 28.0;
    let left = 110.0;
    let top = 50.0;
    let width = left + cell_w * columns.len() as f64 + PAD;
    let height = top + cell_h * rows.len() as f64 + PAD;
    let (lo, hi) = rows
        .iter()
        .flat_map(|r| r.1.iter().cloned())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = String::new();
    open(&mut out, width, height, title);
    for (j, col) in columns.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}">{}</text>"#,
            left + cell_w * j as f64 + 4.0,
            top - 6.0,
            escape(col)
        );
    }
    for (i, (label, values)) in rows.iter().enumerate() {
        let y = top + cell_h * i as f64;
        let _ = writeln!(out, r#"<text x="4" y="{:.1}">{}</text>"#, y + 18.0, escape(label));
        for (j, &v) in values.iter().enumerate() {
            let x = left + cell_w * j as f64;
            let shade = 235.0 - 175.0 * (v - lo) / span;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.1}" y="{y:.1}" width="{cell_w}" height="{cell_h}" fill="rgb({s},{s},255)"/>"#,
                s = shade.round() as u8
            );
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{v:.3}</text>"#, x + 6.0, y + 18.0);
        }
        if let Some(j) = marks.get(i).copied().flatten() {
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{y:.1}" width="{cell_w}" height="{cell_h}" fill="none" stroke="crimson" stroke-width="3"/>"#,
                left + cell_w * j as f64
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_closed_svg() {
        for svg in [
            line_chart(&[1.0, 3.0, 2.0], "steps"),
            bar_chart(&[(1, 4), (2, 9)], "runs"),
            heatmap(
                &[("a<b".into(), vec![1.0, 2.0])],
                &["1".into(), "2".into()],
                &[Some(1)],
                "grid",
            ),
        ] {
            assert!(svg.starts_with("<svg"));
            assert!(svg.trim_end().ends_with("</svg>"));
            assert!(!svg.contains("a<b"));
        }
        assert_eq!(
            heatmap(&[("r".into(), vec![1.0])], &["g".into()], &[Some(0)], "t")
                .matches("crimson")
                .count(),
            1
        );
    }
}
