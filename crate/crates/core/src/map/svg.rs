use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{MapDataset, MapKind, MapPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleConfig {
    pub width: u32,
    pub height: u32,
    pub margin: u32,
    pub safe_fill: String,
    pub forbidden_fill: String,
    pub region_opacity: f64,
    pub line_color: String,
    pub ideal_path_color: String,
    pub singularity_color: String,
    pub point_color: String,
    pub point_radius: f64,
    pub font_family: String,
    pub font_size: u32,
    pub title: Option<String>,
    pub show_labels: bool,
}

impl Default for StyleConfig {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            margin: 56,
            safe_fill: "#2e7d32".into(),
            forbidden_fill: "#c62828".into(),
            region_opacity: 0.25,
            line_color: "#212121".into(),
            ideal_path_color: "#1565c0".into(),
            singularity_color: "#d50000".into(),
            point_color: "#212121".into(),
            point_radius: 4.0,
            font_family: "sans-serif".into(),
            font_size: 12,
            title: None,
            show_labels: true,
        }
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.x_min) / (self.x_max - self.x_min) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.y_min) / (self.y_max - self.y_min) * self.h
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Tick positions at a step from {0.25, 0.5, 1, 2, 5, ...} giving at most
/// ~8 ticks.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let mut step = 0.25;
    let mut k = 0;
    while span / step > 8.0 {
        step *= if k % 2 == 0 { 2.0 } else { 2.5 };
        k += 1;
    }
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// Renders `dataset` as a standalone SVG 1.1 document. Output depends only
/// on the inputs.
pub fn render_svg(dataset: &MapDataset, style: &StyleConfig) -> String {
    let g = &dataset.geometry;
    let m = style.margin as f64;
    let f = Frame {
        x0: m,
        y0: m * 0.75,
        w: style.width as f64 - 1.5 * m,
        h: style.height as f64 - 1.75 * m,
        x_min: g.bounds.x_min,
        x_max: g.bounds.x_max,
        y_min: g.bounds.y_min,
        y_max: g.bounds.y_max,
    };
    let title = style.title.clone().unwrap_or_else(|| match dataset.kind {
        MapKind::Left => "Safe-zone map: power regimes".into(),
        MapKind::Right => "Safe-zone map: bounded vs. unbounded".into(),
    });

    let mut s = String::new();
    // write! into a String cannot fail
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="{font}" font-size="{fs}">"#,
        w = style.width,
        h = style.height,
        font = escape(&style.font_family),
        fs = style.font_size,
    );
    let _ = writeln!(s, "<title>{}</title>", escape(&title));
    let _ = writeln!(s, r##"<rect class="background" x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##, style.width, style.height);

    for (class, poly, fill) in [
        ("safe", &g.safe_region, &style.safe_fill),
        ("forbidden", &g.forbidden_region, &style.forbidden_fill),
    ] {
        let pts: Vec<String> = poly
            .iter()
            .map(|&[x, y]| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon class="region {class}" points="{}" fill="{}" fill-opacity="{:.2}" stroke="none"/>"#,
            pts.join(" "),
            escape(fill),
            style.region_opacity,
        );
    }

    // axes and ticks
    let _ = writeln!(s, r#"<g class="axes" stroke="{}" stroke-width="1">"#, escape(&style.line_color));
    let _ = writeln!(
        s,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none"/>"#,
        f.x0, f.y0, f.w, f.h
    );
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks" text-anchor="middle">"#);
    for x in ticks(f.x_min, f.x_max) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            f.px(x),
            f.y0 + f.h + style.font_size as f64 + 4.0,
            x
        );
    }
    for y in ticks(f.y_min, f.y_max) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            f.x0 - 6.0,
            f.py(y) + style.font_size as f64 / 3.0,
            y
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">power ratio E[X̂²]/E[X²]</text>"#,
        f.x0 + f.w / 2.0,
        style.height as f64 - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-label" transform="translate(14,{:.2}) rotate(-90)" text-anchor="middle">coupling E[X̂·e]/MSE</text>"#,
        f.y0 + f.h / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text class="title" x="{:.2}" y="{:.2}" text-anchor="middle" font-weight="bold">{}</text>"#,
        style.width as f64 / 2.0,
        m * 0.45,
        escape(&title)
    );

    let line = |s: &mut String, class: &str, x1: f64, y1: f64, x2: f64, y2: f64, color: &str, dash: bool| {
        let _ = writeln!(
            s,
            r#"<line class="{class}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="1.5"{}/>"#,
            f.px(x1),
            f.py(y1),
            f.px(x2),
            f.py(y2),
            escape(color),
            if dash { r#" stroke-dasharray="6 4""# } else { "" }
        );
    };
    line(&mut s, "balance-line", g.balance_line, f.y_min, g.balance_line, f.y_max, &style.line_color, true);
    if dataset.kind == MapKind::Right {
        line(&mut s, "penalty-line", f.x_min, g.penalty_line, f.x_max, g.penalty_line, &style.line_color, true);
        let [[ax, ay], [bx, by]] = g.ideal_path;
        line(&mut s, "ideal-path", ax, ay, bx, by, &style.ideal_path_color, false);
        let _ = writeln!(
            s,
            r#"<circle class="singularity" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{}"/>"#,
            f.px(g.singularity[0]),
            f.py(g.singularity[1]),
            style.point_radius * 1.5,
            escape(&style.singularity_color)
        );
    }

    let _ = writeln!(s, r#"<g class="points">"#);
    for p in &dataset.points {
        point(&mut s, &f, p, style);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    s
}

fn point(s: &mut String, f: &Frame, p: &MapPoint, style: &StyleConfig) {
    let (cx, cy) = (f.px(p.power_ratio.min(f.x_max)), f.py(p.plot_y().clamp(f.y_min, f.y_max)));
    let fill = if p.coupling_norm.is_some() { escape(&style.point_color) } else { "none".into() };
    let _ = writeln!(
        s,
        r#"<circle class="point" data-regime="{}" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{}" stroke="{}"><title>{}</title></circle>"#,
        p.regime,
        cx,
        cy,
        style.point_radius,
        fill,
        escape(&style.point_color),
        escape(&p.label)
    );
    if style.show_labels {
        let _ = writeln!(
            s,
            r#"<text class="point-label" x="{:.2}" y="{:.2}">{}</text>"#,
            cx + style.point_radius + 2.0,
            cy - style.point_radius - 2.0,
            escape(&p.label)
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{build_left_map, build_right_map, map_point_scaled};
    use crate::scaling::ScalingProblem;

    fn dataset(kind: MapKind) -> MapDataset {
        let p = ScalingProblem::new(1.0, 2.0, 1.0).unwrap();
        let pts: Vec<_> = [("zero", 0.0), ("opt", 0.5), ("amp <2>", 2.0)]
            .iter()
            .map(|&(l, t)| map_point_scaled(l, &p, t).unwrap())
            .collect();
        match kind {
            MapKind::Left => build_left_map(&pts).unwrap(),
            MapKind::Right => build_right_map(&pts).unwrap().with_optimum(0.5),
        }
    }

    #[test]
    fn well_formed_with_two_regions() {
        for kind in [MapKind::Left, MapKind::Right] {
            let svg = render_svg(&dataset(kind), &StyleConfig::default());
            let doc = roxmltree::Document::parse(&svg).expect("parseable svg");
            let regions = doc
                .descendants()
                .filter(|n| n.attribute("class").is_some_and(|c| c.starts_with("region ")))
                .count();
            assert_eq!(regions, 2);
            let points = doc.descendants().filter(|n| n.attribute("class") == Some("point")).count();
            assert_eq!(points, 3);
        }
    }

    #[test]
    fn right_map_marks_singularity_and_path() {
        let svg = render_svg(&dataset(MapKind::Right), &StyleConfig::default());
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let dot = doc.descendants().find(|n| n.attribute("class") == Some("singularity")).unwrap();
        assert_eq!(dot.attribute("fill"), Some("#d50000"));
        let path = doc.descendants().find(|n| n.attribute("class") == Some("ideal-path")).unwrap();
        assert_eq!(path.attribute("stroke"), Some("#1565c0"));
        assert!(svg.contains("amp &lt;2&gt;"));
    }

    #[test]
    fn deterministic_bytes() {
        let a = render_svg(&dataset(MapKind::Right), &StyleConfig::default());
        let b = render_svg(&dataset(MapKind::Right), &StyleConfig::default());
        assert_eq!(a, b);
    }

    #[test]
    fn tick_steps() {
        assert_eq!(ticks(0.0, 2.0), vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]);
        assert_eq!(ticks(-0.5, 1.5), vec![-0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5]);
        assert!(ticks(0.0, 40.0).len() <= 9);
    }
}
