//! Minimal SVG line charts. Plots are drawn from CSV files only.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::output::{read_curve, read_table};

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

#[derive(Debug, Clone, Default)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Optional `(low, high)` band at the same x values.
    pub band: Option<Vec<(f64, f64)>>,
}

fn extent(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = xs
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// One chart as a standalone SVG document.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x0, x1) = extent(xs);
    let ys = series.iter().flat_map(|s| {
        let band = s.band.iter().flatten().flat_map(|&(a, b)| [a, b]);
        s.points.iter().map(|p| p.1).chain(band)
    });
    let (y0, y1) = extent(ys);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (bx, by) = (LEFT, H - BOTTOM);
    let _ = writeln!(
        s,
        r#"<path d="M{bx},{TOP} L{bx},{by} L{},{by}" stroke="black" fill="none"/>"#,
        W - RIGHT
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            px(xv),
            by + 18.0,
            fmt_tick(xv)
        );
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{:.1}" text-anchor="end">{}</text><path d="M{bx},{:.1} L{},{:.1}" stroke="#ddd"/>"##,
            bx - 6.0,
            py(yv) + 4.0,
            fmt_tick(yv),
            py(yv),
            W - RIGHT,
            py(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if let Some(band) = &ser.band {
            let mut d = String::new();
            for (i, (p, b)) in ser.points.iter().zip(band).enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, px(p.0), py(b.1));
            }
            for (p, b) in ser.points.iter().zip(band).rev() {
                let _ = write!(d, "L{:.2},{:.2} ", px(p.0), py(b.0));
            }
            let _ = writeln!(s, r#"<path d="{d}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#);
        }
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            LEFT + 10.0,
            TOP + 14.0 + 16.0 * k as f64,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn write_svg(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg).map_err(HarnessError::io(path))
}

/// Mean curve with a ±1 std band from a `step,mean,std` CSV.
pub fn plot_curve(csv: &Path, svg: &Path, title: &str) -> Result<()> {
    let curve = read_curve(csv)?;
    let series = Series {
        name: "mean eval return (±1 std)".into(),
        points: curve.points.iter().map(|p| (p.step as f64, p.mean)).collect(),
        band: Some(
            curve
                .points
                .iter()
                .map(|p| (p.mean - p.std, p.mean + p.std))
                .collect(),
        ),
    };
    write_svg(svg, &line_chart(title, "environment steps", "return", &[series]))
}

/// Return and fast-activation rate against threshold, from a sweep CSV.
pub fn plot_sweep(csv: &Path, out: &Path) -> Result<()> {
    let (header, rows) = read_table(csv)?;
    let col = |name: &str| -> Result<Vec<f64>> {
        let i = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::config(format!("{}: no column {name}", csv.display())))?;
        rows.iter()
            .map(|r| {
                r[i].parse()
                    .map_err(|_| HarnessError::config(format!("bad number `{}`", r[i])))
            })
            .collect()
    };
    let t = col("thresh")?;
    let ret = col("return_mean")?;
    let std = col("return_std")?;
    let act = col("activation_rate")?;
    let top = line_chart(
        "Threshold sweep: return",
        "threshold",
        "return",
        &[Series {
            name: "mean eval return (±1 std)".into(),
            points: t.iter().copied().zip(ret.iter().copied()).collect(),
            band: Some(ret.iter().zip(&std).map(|(m, s)| (m - s, m + s)).collect()),
        }],
    );
    let bottom = line_chart(
        "Threshold sweep: fast activations",
        "threshold",
        "fraction of steps",
        &[Series {
            name: "fast-activation rate".into(),
            points: t.iter().copied().zip(act).collect(),
            band: None,
        }],
    );
    let inner = |doc: &str| {
        doc.lines()
            .skip(1)
            .filter(|l| *l != "</svg>")
            .collect::<Vec<_>>()
            .join("\n")
    };
    let svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"12\">\n<g>\n{}\n</g>\n<g transform=\"translate(0,{H})\">\n{}\n</g>\n</svg>\n",
        2.0 * H,
        inner(&top),
        inner(&bottom)
    );
    write_svg(out, &svg)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_contains_series_and_band() {
        let s = Series {
            name: "a<b".into(),
            points: vec![(0.0, 1.0), (1.0, 2.0)],
            band: Some(vec![(0.5, 1.5), (1.5, 2.5)]),
        };
        let svg = line_chart("t", "x", "y", &[s]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("fill-opacity"));
        assert!(svg.contains("a&lt;b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn flat_and_empty_series_do_not_divide_by_zero() {
        let flat = Series {
            name: "flat".into(),
            points: vec![(0.0, 3.0), (5.0, 3.0)],
            band: None,
        };
        assert!(!line_chart("t", "x", "y", &[flat]).contains("NaN"));
        assert!(!line_chart("t", "x", "y", &[]).contains("NaN"));
    }
}
