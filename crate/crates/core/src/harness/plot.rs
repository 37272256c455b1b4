//! SVG rendering of profiles: line plots for single axes, heatmaps for pairs.

use std::fmt::Write;

use super::GeneralizationProfile;

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 240.0;
const MARGIN: f64 = 36.0;
const PER_ROW: usize = 3;

/// One subplot: an observed profile and an optional baseline on the same grid.
#[derive(Debug, Clone)]
pub struct PlotPanel<'a> {
    pub title: String,
    pub profile: &'a GeneralizationProfile,
    pub baseline: Option<&'a GeneralizationProfile>,
}

impl<'a> PlotPanel<'a> {
    pub fn new(profile: &'a GeneralizationProfile) -> Self {
        PlotPanel {
            title: format!("{}-axis", profile.axes),
            profile,
            baseline: None,
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Lays panels out in rows of three.
pub fn plot(title: &str, panels: &[PlotPanel]) -> String {
    let rows = panels.len().div_ceil(PER_ROW).max(1);
    let cols = panels.len().clamp(1, PER_ROW);
    let width = cols as f64 * PANEL_W;
    let height = rows as f64 * PANEL_H + 24.0;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="10">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="8" y="16" font-size="13">{}</text>"#,
        esc(title)
    )
    .unwrap();
    for (i, panel) in panels.iter().enumerate() {
        let ox = (i % PER_ROW) as f64 * PANEL_W;
        let oy = 24.0 + (i / PER_ROW) as f64 * PANEL_H;
        writeln!(s, r#"<g transform="translate({ox:.0},{oy:.0})">"#).unwrap();
        if panel.profile.axes.is_dual() {
            heatmap(&mut s, panel);
        } else {
            line_plot(&mut s, panel);
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

fn frame(s: &mut String, title: &str, x_label: &str, y_label: &str) -> (f64, f64) {
    let (pw, ph) = (PANEL_W - 2.0 * MARGIN, PANEL_H - 2.0 * MARGIN);
    writeln!(
        s,
        r#"<text x="{MARGIN}" y="{:.0}">{}</text>"#,
        MARGIN - 8.0,
        esc(title)
    )
    .unwrap();
    writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw:.0}" height="{ph:.0}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.0}" y="{:.0}" text-anchor="middle">{x_label}</text>"#,
        MARGIN + pw / 2.0,
        PANEL_H - 8.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="10" y="{:.0}" transform="rotate(-90 10 {:.0})" text-anchor="middle">{y_label}</text>"#,
        MARGIN + ph / 2.0,
        MARGIN + ph / 2.0
    )
    .unwrap();
    (pw, ph)
}

fn line_plot(s: &mut String, panel: &PlotPanel) {
    let p = panel.profile;
    let (pw, ph) = frame(s, &panel.title, "rotation (deg)", "accuracy");
    let x = |deg: f64| MARGIN + deg / 360.0 * pw;
    let y = |acc: f64| MARGIN + (1.0 - acc) * ph;
    for t in [0.0, 90.0, 180.0, 270.0, 360.0] {
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.0}" text-anchor="middle">{t:.0}</text>"#,
            x(t),
            MARGIN + ph + 12.0
        )
        .unwrap();
    }
    for a in [0.0, 0.5, 1.0] {
        writeln!(
            s,
            r#"<text x="{:.0}" y="{:.2}" text-anchor="end">{a:.1}</text>"#,
            MARGIN - 3.0,
            y(a) + 3.0
        )
        .unwrap();
    }
    let pts = |vals: &[f64]| -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = vals
            .iter()
            .enumerate()
            .map(|(i, &a)| (x(i as f64 * p.stride), y(a)))
            .collect();
        // close the circle at 360
        v.push((x(360.0), y(vals[0])));
        v
    };
    let path = |v: &[(f64, f64)]| {
        v.iter()
            .map(|(a, b)| format!("{a:.2},{b:.2}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    if let Some(b) = panel.baseline {
        let upper: Vec<f64> = p
            .accuracy
            .iter()
            .zip(&b.accuracy)
            .map(|(o, q)| o.max(*q))
            .collect();
        let mut poly = pts(&upper);
        poly.extend(pts(&b.accuracy).into_iter().rev());
        writeln!(
            s,
            r##"<polygon points="{}" fill="#f5a623" fill-opacity="0.35" stroke="none"/>"##,
            path(&poly)
        )
        .unwrap();
        writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#888888" stroke-width="1.5"/>"##,
            path(&pts(&b.accuracy))
        )
        .unwrap();
    }
    if p.classes > 0 {
        let c = y(1.0 / p.classes as f64);
        writeln!(
            s,
            r##"<line x1="{MARGIN}" y1="{c:.2}" x2="{:.2}" y2="{c:.2}" stroke="#444444" stroke-dasharray="4 3"/>"##,
            MARGIN + pw
        )
        .unwrap();
    }
    for (i, _) in p.training.iter().enumerate().filter(|(_, &t)| t) {
        let tx = x(i as f64 * p.stride);
        writeln!(
            s,
            r##"<line x1="{tx:.2}" y1="{MARGIN}" x2="{tx:.2}" y2="{:.2}" stroke="#1f4e9c" stroke-dasharray="2 2"/>"##,
            MARGIN + ph
        )
        .unwrap();
    }
    writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#d0021b" stroke-width="1.5"/>"##,
        path(&pts(&p.accuracy))
    )
    .unwrap();
}

/// White (0) to dark red (1).
fn heat(a: f64) -> String {
    let a = a.clamp(0.0, 1.0);
    let r = 255.0 - 75.0 * a;
    let gb = 255.0 * (1.0 - a);
    format!(
        "#{:02x}{:02x}{:02x}",
        r.round() as u8,
        gb.round() as u8,
        gb.round() as u8
    )
}

fn heatmap(s: &mut String, panel: &PlotPanel) {
    let p = panel.profile;
    let comps = p.axes.name();
    let (first, second) = (&comps[..1], &comps[1..]);
    let (pw, ph) = frame(
        s,
        &panel.title,
        &format!("{second} (deg)"),
        &format!("{first} (deg)"),
    );
    let side = p.side();
    let (cw, ch) = (pw / side as f64, ph / side as f64);
    for bin in 0..p.len() {
        let (r, c) = (bin / side, bin % side);
        writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            MARGIN + c as f64 * cw,
            MARGIN + r as f64 * ch,
            cw,
            ch,
            heat(p.accuracy[bin])
        )
        .unwrap();
    }
    for bin in (0..p.len()).filter(|&b| p.training[b]) {
        let (r, c) = (bin / side, bin % side);
        writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#1f4e9c"/>"##,
            MARGIN + (c as f64 + 0.5) * cw,
            MARGIN + (r as f64 + 0.5) * ch,
            cw.min(ch) * 0.3
        )
        .unwrap();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Axes;

    fn profile(axes: Axes) -> GeneralizationProfile {
        let mut p =
            GeneralizationProfile::zeros(axes, crate::harness::default_stride(axes), 10).unwrap();
        for (i, a) in p.accuracy.iter_mut().enumerate() {
            *a = (i % 11) as f64 / 10.0;
        }
        p
    }

    #[test]
    fn no_markers_without_training_views() {
        let p = profile(Axes::Y);
        let svg = plot("t", &[PlotPanel::new(&p)]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("#1f4e9c"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn heatmap_has_one_cell_per_bin() {
        let mut p = profile(Axes::Yz);
        p.training[40] = true;
        let svg = plot("t", &[PlotPanel::new(&p)]);
        // one frame rect, one background rect, 36 x 36 cells
        assert_eq!(svg.matches("<rect").count(), 2 + 36 * 36);
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn baseline_and_gap_drawn_deterministically() {
        let p = profile(Axes::Y);
        let mut b = p.clone();
        b.accuracy.iter_mut().for_each(|a| *a *= 0.5);
        b.training[0] = true;
        let mut panel = PlotPanel::new(&p);
        panel.baseline = Some(&b);
        let one = plot(
            "gap <&>",
            &[panel.clone(), PlotPanel::new(&profile(Axes::Xz))],
        );
        let two = plot("gap <&>", &[panel, PlotPanel::new(&profile(Axes::Xz))]);
        assert_eq!(one, two);
        assert!(one.contains("<polygon"));
        assert!(one.contains("gap &lt;&amp;&gt;"));
        assert!(one.contains("#888888"));
    }
}
