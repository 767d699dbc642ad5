//! Minimal line charts for yearly series.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

/// A single polyline over `(year, value)` points with labelled axis ranges.
pub fn line_chart(title: &str, points: &[(i32, f64)]) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    s.push_str(&format!(
        "<polyline points=\"{x0},{y1} {x0},{y0} {x1},{y0}\" fill=\"none\" stroke=\"black\"/>\n"
    ));

    if let (Some(first), Some(last)) = (points.first(), points.last()) {
        let lo = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let span_y = if hi > lo { hi - lo } else { 1.0 };
        let span_x = (last.0 - first.0).max(1) as f64;
        let px = |year: i32| x0 + (year - first.0) as f64 / span_x * (x1 - x0);
        let py = |v: f64| y0 - (v - lo) / span_y * (y0 - y1);
        let coords: Vec<String> = points
            .iter()
            .map(|&(yr, v)| format!("{:.2},{:.2}", px(yr), py(v)))
            .collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n",
            coords.join(" ")
        ));
        let label = |x: f64, y: f64, anchor: &str, text: String| {
            format!(
                "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"11\">{text}</text>\n"
            )
        };
        s.push_str(&label(x0 - 4.0, y0, "end", format!("{lo:.3}")));
        s.push_str(&label(x0 - 4.0, y1 + 8.0, "end", format!("{hi:.3}")));
        s.push_str(&label(x0, y0 + 16.0, "middle", first.0.to_string()));
        s.push_str(&label(x1, y0 + 16.0, "middle", last.0.to_string()));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_contains_series() {
        let svg = line_chart("Density", &[(1980, 0.1), (1981, 0.3), (1982, 0.2)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("Density"));
        assert!(svg.contains("48.00,312.00"));
        assert!(svg.contains(">1982<"));
    }

    #[test]
    fn flat_and_empty_series() {
        assert!(line_chart("x", &[(2000, 1.0)]).contains("steelblue"));
        assert!(!line_chart("x", &[]).contains("steelblue"));
    }
}
