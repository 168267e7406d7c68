//! Minimal self-contained SVG charts for the report generators: bar
//! charts, line charts, and heat-map grids. Hand-rolled so the output is
//! deterministic byte-for-byte.

fn fmt(v: f64) -> String {
    // Fixed two-decimal coordinates keep files small and stable.
    format!("{v:.2}")
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const MARGIN_LEFT: f64 = 60.0;
const MARGIN_BOTTOM: f64 = 70.0;
const MARGIN_TOP: f64 = 30.0;

/// Vertical bar chart of labeled values.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64], y_label: &str) -> String {
    assert_eq!(labels.len(), values.len());
    let width = 900.0;
    let height = 420.0;
    let plot_w = width - MARGIN_LEFT - 20.0;
    let plot_h = height - MARGIN_TOP - MARGIN_BOTTOM;
    let max = values.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
    let n = labels.len().max(1) as f64;
    let step = plot_w / n;
    let bar_w = (step * 0.8).max(1.0);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        fmt(width / 2.0),
        esc(title)
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        fmt(MARGIN_TOP + plot_h / 2.0),
        fmt(MARGIN_TOP + plot_h / 2.0),
        esc(y_label)
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = fmt(MARGIN_LEFT),
        t = fmt(MARGIN_TOP),
        b = fmt(MARGIN_TOP + plot_h),
        r = fmt(MARGIN_LEFT + plot_w),
    ));
    for (i, (label, value)) in labels.iter().zip(values).enumerate() {
        let h = plot_h * value / max;
        let x = MARGIN_LEFT + step * i as f64 + (step - bar_w) / 2.0;
        let y = MARGIN_TOP + plot_h - h;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#4878a8\"/>\n",
            fmt(x),
            fmt(y),
            fmt(bar_w),
            fmt(h)
        ));
        let cx = x + bar_w / 2.0;
        let ty = MARGIN_TOP + plot_h + 12.0;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"end\" transform=\"rotate(-60 {} {})\">{}</text>\n",
            fmt(cx),
            fmt(ty),
            fmt(cx),
            fmt(ty),
            esc(label)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
        fmt(MARGIN_LEFT - 4.0),
        fmt(MARGIN_TOP + 4.0),
        fmt(max)
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Line chart of one or more named series over shared x labels.
pub fn line_chart(
    title: &str,
    x_labels: &[String],
    series: &[(String, Vec<f64>)],
    y_max: f64,
) -> String {
    let width = 900.0;
    let height = 420.0;
    let plot_w = width - MARGIN_LEFT - 120.0;
    let plot_h = height - MARGIN_TOP - MARGIN_BOTTOM;
    let n = x_labels.len().max(2) as f64;
    let step = plot_w / (n - 1.0);
    let max = y_max.max(1e-12);
    let colors = ["#4878a8", "#a85448", "#48a878", "#a8a448"];

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        fmt(width / 2.0),
        esc(title)
    ));
    svg.push_str(&format!(
        "<line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = fmt(MARGIN_LEFT),
        t = fmt(MARGIN_TOP),
        b = fmt(MARGIN_TOP + plot_h),
        r = fmt(MARGIN_LEFT + plot_w),
    ));
    for (s, (name, values)) in series.iter().enumerate() {
        let color = colors[s % colors.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                format!(
                    "{},{}",
                    fmt(MARGIN_LEFT + step * i as f64),
                    fmt(MARGIN_TOP + plot_h * (1.0 - v / max))
                )
            })
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            points.join(" "),
            color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{}\">{}</text>\n",
            fmt(MARGIN_LEFT + plot_w + 8.0),
            fmt(MARGIN_TOP + 14.0 * (s as f64 + 1.0)),
            color,
            esc(name)
        ));
    }
    for (i, label) in x_labels.iter().enumerate() {
        let cx = MARGIN_LEFT + step * i as f64;
        let ty = MARGIN_TOP + plot_h + 12.0;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"end\" transform=\"rotate(-60 {} {})\">{}</text>\n",
            fmt(cx),
            fmt(ty),
            fmt(cx),
            fmt(ty),
            esc(label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Heat-map grid: cell values in [0, 100], deeper green for higher values.
/// An optional block boundary draws a double rule after the given row and
/// column index (used for the STEM/HASS partition).
pub fn heatmap(
    title: &str,
    row_labels: &[String],
    col_labels: &[String],
    cells: &[Vec<f64>],
    block_boundary: Option<(usize, usize)>,
) -> String {
    let cell = 22.0;
    let left = 80.0;
    let top = 90.0;
    let width = left + cell * col_labels.len() as f64 + 20.0;
    let height = top + cell * row_labels.len() as f64 + 20.0;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        fmt(width / 2.0),
        esc(title)
    ));
    for (r, row) in cells.iter().enumerate() {
        for (c, value) in row.iter().enumerate() {
            // 0 -> white, 100 -> saturated green.
            let intensity = (value / 100.0).clamp(0.0, 1.0);
            let red = (255.0 - 185.0 * intensity) as u8;
            let green = (255.0 - 95.0 * intensity) as u8;
            let blue = (255.0 - 185.0 * intensity) as u8;
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb({red},{green},{blue})\" stroke=\"#ccc\" stroke-width=\"0.5\"/>\n",
                fmt(left + cell * c as f64),
                fmt(top + cell * r as f64),
                fmt(cell),
                fmt(cell)
            ));
        }
    }
    for (r, label) in row_labels.iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
            fmt(left - 4.0),
            fmt(top + cell * r as f64 + cell * 0.7),
            esc(label)
        ));
    }
    for (c, label) in col_labels.iter().enumerate() {
        let cx = left + cell * c as f64 + cell * 0.7;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"start\" transform=\"rotate(-60 {} {})\">{}</text>\n",
            fmt(cx),
            fmt(top - 6.0),
            fmt(cx),
            fmt(top - 6.0),
            esc(label)
        ));
    }
    if let Some((row_split, col_split)) = block_boundary {
        let y = top + cell * row_split as f64;
        let x = left + cell * col_split as f64;
        let right = left + cell * col_labels.len() as f64;
        let bottom = top + cell * row_labels.len() as f64;
        for offset in [0.0, 2.5] {
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"red\" stroke-width=\"1\"/>\n",
                fmt(left),
                fmt(y + offset),
                fmt(right),
                fmt(y + offset)
            ));
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"red\" stroke-width=\"1\"/>\n",
                fmt(x + offset),
                fmt(top),
                fmt(x + offset),
                fmt(bottom)
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_deterministic_and_well_formed() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let bar = bar_chart("t", &labels, &[1.0, 2.0], "count");
        assert_eq!(bar, bar_chart("t", &labels, &[1.0, 2.0], "count"));
        assert!(bar.starts_with("<svg"));
        assert!(bar.ends_with("</svg>\n"));

        let line = line_chart(
            "t",
            &labels,
            &[("s".to_string(), vec![0.5, 0.7])],
            1.0,
        );
        assert!(line.contains("polyline"));

        let heat = heatmap(
            "t",
            &labels,
            &labels,
            &[vec![100.0, 0.0], vec![50.0, 50.0]],
            Some((1, 1)),
        );
        assert!(heat.contains("rect"));
        assert!(heat.contains("stroke=\"red\""));
    }

    #[test]
    fn labels_are_escaped() {
        let labels = vec!["a<b&c".to_string()];
        let bar = bar_chart("x<y", &labels, &[1.0], "n");
        assert!(!bar.contains("a<b"));
        assert!(bar.contains("a&lt;b&amp;c"));
    }
}
