//! Minimal SVG scatter/line plots for the report command.

use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub color: String,
    /// Data points (x, y).
    pub points: Vec<(f64, f64)>,
    /// Optional fitted line sampled at (x, y).
    pub line: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 440.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 36.0;
const MB: f64 = 52.0;

impl Plot {
    pub fn render(&self) -> String {
        let ys = |y: f64| if self.log_y { y.log10() } else { y };
        let mut xmin = f64::INFINITY;
        let mut xmax = f64::NEG_INFINITY;
        let mut ymin = f64::INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        for s in &self.series {
            for &(x, y) in s.points.iter().chain(&s.line) {
                if self.log_y && y <= 0.0 {
                    continue;
                }
                xmin = xmin.min(x);
                xmax = xmax.max(x);
                ymin = ymin.min(ys(y));
                ymax = ymax.max(ys(y));
            }
        }
        if !xmin.is_finite() {
            (xmin, xmax, ymin, ymax) = (0.0, 1.0, 0.0, 1.0);
        }
        if (xmax - xmin).abs() < 1e-12 {
            xmax = xmin + 1.0;
        }
        if (ymax - ymin).abs() < 1e-12 {
            ymax = ymin + 1.0;
        }
        let px = |x: f64| ML + (x - xmin) / (xmax - xmin) * (W - ML - MR);
        let py = |y: f64| H - MB - (ys(y) - ymin) / (ymax - ymin) * (H - MT - MB);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14" font-family="sans-serif">{}</text>"#,
            W / 2.0,
            xml_escape(&self.title)
        );
        // Axes.
        let _ = writeln!(
            svg,
            r#"<line x1="{ML}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            H - MB,
            W - MR,
            H - MB
        );
        let _ = writeln!(svg, r#"<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{}" stroke="black"/>"#, H - MB);
        // Ticks: 5 on each axis.
        for t in 0..=4 {
            let x = xmin + (xmax - xmin) * t as f64 / 4.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle" font-size="11" font-family="sans-serif">{4}</text>"#,
                px(x),
                H - MB,
                H - MB + 5.0,
                H - MB + 18.0,
                format_tick(x)
            );
            let yv = ymin + (ymax - ymin) * t as f64 / 4.0;
            let y_label = if self.log_y { format!("1e{:.1}", yv) } else { format_tick(yv) };
            let ypix = H - MB - (yv - ymin) / (ymax - ymin) * (H - MT - MB);
            let _ = writeln!(
                svg,
                r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" text-anchor="end" font-size="11" font-family="sans-serif">{5}</text>"#,
                ML - 5.0,
                ypix,
                ML,
                ML - 8.0,
                ypix + 4.0,
                y_label
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12" font-family="sans-serif">{}</text>"#,
            (W + ML - MR) / 2.0,
            H - 12.0,
            xml_escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 16 {})">{}</text>"#,
            (H + MT - MB) / 2.0,
            (H + MT - MB) / 2.0,
            xml_escape(&self.y_label)
        );
        // Series.
        for (si, s) in self.series.iter().enumerate() {
            if s.line.len() >= 2 {
                let mut path = String::new();
                for (i, &(x, y)) in s.line.iter().enumerate() {
                    if self.log_y && y <= 0.0 {
                        continue;
                    }
                    let _ = write!(path, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, px(x), py(y));
                }
                let _ = writeln!(svg, r#"<path d="{path}" fill="none" stroke="{}" stroke-width="1.5"/>"#, s.color);
            }
            for &(x, y) in &s.points {
                if self.log_y && y <= 0.0 {
                    continue;
                }
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}"/>"#,
                    px(x),
                    py(y),
                    s.color
                );
            }
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="11" font-family="sans-serif" fill="{}">{}</text>"#,
                W - MR - 150.0,
                MT + 16.0 * si as f64 + 4.0,
                s.color,
                xml_escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn format_tick(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() >= 1000.0 || x.abs() < 0.01 {
        format!("{x:.1e}")
    } else if (x - x.round()).abs() < 1e-9 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x:.2}")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_svg() {
        let plot = Plot {
            title: "fidelity".into(),
            x_label: "rounds".into(),
            y_label: "F_L".into(),
            log_y: true,
            series: vec![Series {
                label: "mwpm".into(),
                color: "#1f77b4".into(),
                points: vec![(10.0, 0.9), (30.0, 0.7), (50.0, 0.55)],
                line: vec![(10.0, 0.9), (50.0, 0.56)],
            }],
        };
        let svg = plot.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("circle"));
        assert!(svg.contains("mwpm"));
    }
}
