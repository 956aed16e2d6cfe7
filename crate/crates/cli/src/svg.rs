//! Minimal line-and-dot plots of p(t).

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 5] = ["#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// `curve` is drawn as a polyline, every entry of `dots` as circles.
pub fn plot(title: &str, t_max: f64, curve: Option<&Series>, dots: &[Series]) -> String {
    let sx = |t: f64| MARGIN + t / t_max * (WIDTH - 2.0 * MARGIN);
    let sy = |p: f64| HEIGHT - MARGIN - p * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, WIDTH / 2.0);

    // axes and ticks
    let (x0, y0, x1, y1) = (sx(0.0), sy(0.0), sx(t_max), sy(1.0));
    let _ = writeln!(s, r#"<path d="M{x0:.1},{y1:.1} V{y0:.1} H{x1:.1}" stroke="black" fill="none"/>"#);
    let n_ticks = t_max.floor() as usize;
    for k in 0..=n_ticks {
        let x = sx(k as f64);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{k}</text>"#, y0 + 18.0);
    }
    for k in 0..=4 {
        let p = k as f64 / 4.0;
        let y = sy(p);
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{p}</text>"#, x0 - 8.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">t</text>"#, (x0 + x1) / 2.0, HEIGHT - 12.0);
    let _ = writeln!(s, r#"<text x="14" y="{:.1}" text-anchor="middle">p</text>"#, (y0 + y1) / 2.0);

    let mut legend = Vec::new();
    if let Some(c) = curve {
        let pts: Vec<String> = c.points.iter().map(|&(t, p)| format!("{:.2},{:.2}", sx(t), sy(p))).collect();
        let _ = writeln!(s, r##"<polyline points="{}" stroke="#1f77b4" stroke-width="1.5" fill="none"/>"##, pts.join(" "));
        legend.push((c.label, "#1f77b4"));
    }
    for (i, d) in dots.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(s, r#"<g fill="{color}">"#);
        for &(t, p) in &d.points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.8"/>"#, sx(t), sy(p));
        }
        let _ = writeln!(s, "</g>");
        legend.push((d.label, color));
    }
    for (i, (label, color)) in legend.iter().enumerate() {
        let y = MARGIN + 14.0 * i as f64;
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}"/>"#, x1 - 150.0, y - 4.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{y:.1}">{label}</text>"#, x1 - 140.0);
    }
    s.push_str("</svg>\n");
    s
}
