//! Minimal static SVG plots of output tables.

use std::fmt::Write as _;

use crate::output::{fmt_num, Plot, Table};

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Option<Self> {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            it.fold(None, |acc: Option<(f64, f64)>, v| Some(acc.map_or((v, v), |(a, b)| (a.min(v), b.max(v)))))
                .map(|(a, b)| if a == b { (a - 0.5, b + 0.5) } else { (a, b) })
        };
        Some(Self { x: span(&mut xs.clone())?, y: span(&mut ys.clone())? })
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }
}

fn frame(out: &mut String, axes: &Axes, title: &str, xlabel: &str, ylabel: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>
<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>
"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN,
        W / 2.0,
        escape(title),
        W / 2.0,
        H - 12.0,
        escape(xlabel),
        H / 2.0,
        H / 2.0,
        escape(ylabel),
    );
    for (v, anchor, x, y) in [
        (axes.x.0, "start", MARGIN, H - MARGIN + 16.0),
        (axes.x.1, "end", W - MARGIN, H - MARGIN + 16.0),
        (axes.y.0, "end", MARGIN - 4.0, H - MARGIN),
        (axes.y.1, "end", MARGIN - 4.0, MARGIN + 10.0),
    ] {
        let _ = writeln!(out, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#, short(v));
    }
}

fn short(v: f64) -> String {
    let s = fmt_num((v * 1e4).round() / 1e4);
    if s == "-0" { "0".into() } else { s }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn lines(t: &Table, title: &str, x: usize, ys: &[usize]) -> Option<String> {
    let xs = t.column(x);
    let series: Vec<(usize, Vec<Option<f64>>)> = ys.iter().map(|&c| (c, t.column(c))).collect();
    let all_y = series.iter().flat_map(|(_, v)| v.iter().flatten().copied()).filter(|v| v.is_finite());
    let all_x = xs.iter().flatten().copied().filter(|v| v.is_finite());
    let axes = Axes::fit(all_x, all_y)?;
    let ylabel = if ys.len() == 1 { t.header[ys[0]].as_str() } else { "" };
    let mut out = String::new();
    frame(&mut out, &axes, title, &t.header[x], ylabel);
    for (n, (c, col)) in series.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        // missing or non-finite values break the line
        let mut segment: Vec<(f64, f64)> = Vec::new();
        let flush = |seg: &mut Vec<(f64, f64)>, out: &mut String| {
            match seg.as_slice() {
                [] => {}
                [(a, b)] => {
                    let _ = writeln!(out, r#"<circle cx="{a:.2}" cy="{b:.2}" r="2" fill="{color}"/>"#);
                }
                _ => {
                    let pts: Vec<String> = seg.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
                    let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
                }
            }
            seg.clear();
        };
        for (xv, yv) in xs.iter().zip(col) {
            match (xv, yv) {
                (Some(a), Some(b)) if a.is_finite() && b.is_finite() => segment.push((axes.px(*a), axes.py(*b))),
                _ => flush(&mut segment, &mut out),
            }
        }
        flush(&mut segment, &mut out);
        if ys.len() > 1 {
            let ly = MARGIN + 14.0 + 14.0 * n as f64;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{ly}" fill="{color}" text-anchor="end">{}</text>"#,
                W - MARGIN - 6.0,
                escape(&t.header[*c])
            );
        }
    }
    out.push_str("</svg>\n");
    Some(out)
}

fn loglog(t: &Table, title: &str, x: usize, y: usize) -> Option<String> {
    let pts: Vec<(f64, f64)> = t
        .column(x)
        .into_iter()
        .zip(t.column(y))
        .filter_map(|(a, b)| Some((a?.ln(), b?.ln())))
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .collect();
    let axes = Axes::fit(pts.iter().map(|p| p.0), pts.iter().map(|p| p.1))?;
    let mut out = String::new();
    frame(&mut out, &axes, title, &format!("ln {}", t.header[x]), &format!("ln {}", t.header[y]));
    for (a, b) in &pts {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#, axes.px(*a), axes.py(*b), COLORS[0]);
    }
    out.push_str("</svg>\n");
    Some(out)
}

fn heatmap(t: &Table, title: &str, x: usize, y: usize, z: usize) -> Option<String> {
    let pts: Vec<(f64, f64, f64)> = t
        .rows
        .iter()
        .filter_map(|r| Some((r[x].as_f64()?, r[y].as_f64()?, r[z].as_f64()?)))
        .collect();
    let axes = Axes::fit(pts.iter().map(|p| p.0 - 0.5).chain(pts.iter().map(|p| p.0 + 0.5)), pts.iter().map(|p| p.1 - 0.5).chain(pts.iter().map(|p| p.1 + 0.5)))?;
    let zmax = pts.iter().map(|p| p.2).fold(0.0_f64, f64::max);
    let mut out = String::new();
    frame(&mut out, &axes, title, &t.header[x], &t.header[y]);
    let cw = axes.px(1.0) - axes.px(0.0);
    let ch = axes.py(0.0) - axes.py(1.0);
    for (a, b, v) in &pts {
        let level = if zmax > 0.0 { (v / zmax).clamp(0.0, 1.0) } else { 0.0 };
        let shade = (255.0 * (1.0 - level)).round() as u8;
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({shade},{shade},255)"/>"#,
            axes.px(a - 0.5),
            axes.py(b + 0.5),
            cw,
            ch
        );
    }
    out.push_str("</svg>\n");
    Some(out)
}

/// SVG for a table, or `None` when it has no plot or nothing finite to draw.
pub fn render(t: &Table, title: &str) -> Option<String> {
    match &t.plot {
        Plot::Lines { x, ys } => lines(t, title, *x, ys),
        Plot::LogLog { x, y } => loglog(t, title, *x, *y),
        Plot::Heatmap { x, y, z } => heatmap(t, title, *x, *y, *z),
        Plot::None => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::Cell;

    #[test]
    fn renders_lines_with_gaps() {
        let mut t = Table::new(&["x", "y"]).with_plot(Plot::Lines { x: 0, ys: vec![1] });
        for i in 0..5 {
            let y = if i == 2 { Cell::Missing } else { Cell::Num(i as f64) };
            t.push(vec![Cell::Num(i as f64), y]);
        }
        let doc = render(&t, "test").unwrap();
        assert!(doc.starts_with("<svg"));
        assert_eq!(doc.matches("<polyline").count(), 2);
    }

    #[test]
    fn empty_table_has_no_plot() {
        let t = Table::new(&["x", "y"]).with_plot(Plot::Lines { x: 0, ys: vec![1] });
        assert!(render(&t, "empty").is_none());
    }
}
