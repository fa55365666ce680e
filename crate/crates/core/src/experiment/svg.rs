//! Minimal SVG line plots of seminorm tables against `sqrt(-log r)`.

use std::fmt::Write as _;

use crate::regularity::{LogFit, SeminormTable};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub table: &'a SeminormTable,
    pub fit: Option<&'a LogFit>,
    pub color: &'a str,
}

/// Markers for each series, its fitted line, and a dashed reference line of
/// slope `target_slope` through the centroid of the first series.
pub fn seminorm_plot(title: &str, series: &[Series<'_>], target_slope: Option<f64>) -> String {
    let points: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.table.rows().iter().map(|r| ((-r.scale.ln()).sqrt(), r.value)))
        .collect();
    let (mut x0, mut x1) = bounds(points.iter().map(|p| p.0));
    let (mut y0, mut y1) = bounds(points.iter().map(|p| p.1));
    pad(&mut x0, &mut x1);
    pad(&mut y0, &mut y1);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {t} L{m} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#,
            px(fx),
            HEIGHT - MARGIN + 18.0,
            fx
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3e}</text>"#,
            MARGIN - 6.0,
            py(fy) + 4.0,
            fy
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">sqrt(-log r)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">M(r)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    let line = |s: &mut String, slope: f64, intercept: f64, color: &str, dash: &str| {
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-dasharray="{dash}"/>"#,
            px(x0),
            py(slope * x0 + intercept),
            px(x1),
            py(slope * x1 + intercept)
        );
    };
    let mut legend_y = MARGIN;
    let mut legend = |s: &mut String, text: &str, color: &str| {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
            MARGIN + 10.0,
            legend_y,
            escape(text)
        );
        legend_y += 16.0;
    };
    let _ = writeln!(s, r#"<g>"#);
    for ser in series {
        for r in ser.table.rows() {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{}"/>"#,
                px((-r.scale.ln()).sqrt()),
                py(r.value),
                ser.color
            );
        }
        match ser.fit {
            Some(f) => {
                line(&mut s, f.slope, f.intercept, ser.color, "none");
                legend(&mut s, &format!("{}: slope {:.4}, R2 {:.4}", ser.label, f.slope, f.r2), ser.color);
            }
            None => legend(&mut s, ser.label, ser.color),
        }
    }
    if let (Some(t), Some(first)) = (target_slope, series.first()) {
        let rows = first.table.rows();
        if !rows.is_empty() {
            let n = rows.len() as f64;
            let mx = rows.iter().map(|r| (-r.scale.ln()).sqrt()).sum::<f64>() / n;
            let my = rows.iter().map(|r| r.value).sum::<f64>() / n;
            line(&mut s, t, my - t * mx, "gray", "6 4");
            legend(&mut s, &format!("target slope {t:.4}"), "gray");
        }
    }
    let _ = writeln!(s, "</g>\n</svg>");
    s
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

fn pad(lo: &mut f64, hi: &mut f64) {
    if !lo.is_finite() || !hi.is_finite() {
        *lo = 0.0;
        *hi = 1.0;
        return;
    }
    let span = (*hi - *lo).max(1e-12 * hi.abs().max(1.0));
    *lo -= 0.05 * span;
    *hi += 0.05 * span;
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularity::{fit_sqrt_log, SeminormRow};

    #[test]
    fn plot_contains_every_row_and_lines() {
        let rows = (3..=9)
            .map(|j| {
                let r = 0.5f64.powi(j);
                SeminormRow {
                    scale: r,
                    value: 0.02 * (-r.ln()).sqrt(),
                    pairs: 1,
                }
            })
            .collect();
        let t = SeminormTable::new(rows).unwrap();
        let fit = fit_sqrt_log(&t).unwrap();
        let svg = seminorm_plot(
            "a < b",
            &[Series {
                label: "M",
                table: &t,
                fit: Some(&fit),
                color: "steelblue",
            }],
            Some(0.02),
        );
        assert_eq!(svg.matches("<circle").count(), 7);
        assert_eq!(svg.matches("<line").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
