//! SVG stereonet of transformed poles.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hdbscan::NOISE;
use crate::orientation::orientation_to_pole2d;
use crate::planes::SetStatistics;

use super::kde::Contour;

const SIZE: f64 = 640.0;
const CENTRE: f64 = 300.0;
const RADIUS: f64 = 260.0;
const NOISE_COLOUR: &str = "#a0a0a0";

/// What to draw.
#[derive(Debug, Clone, Copy)]
pub struct Stereonet<'a> {
    pub poles: &'a [[f64; 2]],
    /// Set id per pole, `-1` for noise. May be empty (everything grey).
    pub labels: &'a [i32],
    pub sets: &'a [SetStatistics],
    pub contours: Option<&'a [Contour]>,
    pub title: Option<&'a str>,
}

/// Distinct, deterministic colour for set `id`.
pub fn set_colour(id: usize) -> String {
    let hue = (id as f64 * 137.507_764) % 360.0;
    let lightness = if id % 2 == 0 { 42 } else { 55 };
    format!("hsl({hue:.1},70%,{lightness}%)")
}

/// Screen position of a pole: north up, east right.
pub fn to_screen(p: [f64; 2]) -> (f64, f64) {
    (CENTRE + RADIUS * p[0], CENTRE - RADIUS * p[1])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn stereonet_svg(net: &Stereonet<'_>) -> Result<String> {
    if !net.labels.is_empty() && net.labels.len() != net.poles.len() {
        return Err(Error::InvalidParameter(format!(
            "{} labels for {} poles",
            net.labels.len(),
            net.poles.len()
        )));
    }
    if let Some(p) = net.poles.iter().find(|p| p[0].hypot(p[1]) > 1.0 + 1e-9) {
        return Err(Error::PoleOutsideDisk {
            radius: p[0].hypot(p[1]),
        });
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{SIZE}" viewBox="0 0 {w} {SIZE}" font-family="sans-serif" font-size="12">"#,
        w = SIZE + 200.0
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(t) = net.title {
        let _ = writeln!(s, r#"<text x="{CENTRE}" y="18" text-anchor="middle">{}</text>"#, escape(t));
    }
    let _ = writeln!(s, r##"<g class="grid" fill="none" stroke="#d0d0d0" stroke-width="0.8">"##);
    for dip in (15..=75).step_by(15) {
        let r = RADIUS * (dip as f64 / 2.0).to_radians().tan();
        let _ = writeln!(s, r#"<circle class="dip-circle" data-dip="{dip}" cx="{CENTRE}" cy="{CENTRE}" r="{r:.4}"/>"#);
    }
    for k in 0..12 {
        let a = (k as f64 * 30.0).to_radians();
        let (x, y) = to_screen([a.sin(), a.cos()]);
        let _ = writeln!(s, r#"<line x1="{CENTRE}" y1="{CENTRE}" x2="{x:.3}" y2="{y:.3}"/>"#);
    }
    let _ = writeln!(s, "</g>");

    if let Some(contours) = net.contours {
        let _ = writeln!(s, r##"<g class="contours" fill="none" stroke="#303030" stroke-width="0.7">"##);
        for c in contours {
            if c.segments.is_empty() {
                continue;
            }
            let mut d = String::new();
            for seg in &c.segments {
                let (x0, y0) = to_screen(seg[0]);
                let (x1, y1) = to_screen(seg[1]);
                let _ = write!(d, "M{x0:.2} {y0:.2}L{x1:.2} {y1:.2}");
            }
            let _ = writeln!(s, r#"<path class="contour" data-level="{:e}" d="{d}"/>"#, c.level);
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, r#"<g class="poles" stroke="none">"#);
    for (i, p) in net.poles.iter().enumerate() {
        let label = net.labels.get(i).copied().unwrap_or(NOISE);
        let fill = if label == NOISE { NOISE_COLOUR.to_string() } else { set_colour(label as usize) };
        let (x, y) = to_screen(*p);
        let _ = writeln!(s, r#"<circle class="pole" data-set="{label}" cx="{x:.3}" cy="{y:.3}" r="2.2" fill="{fill}"/>"#);
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g class="set-means" stroke="black" stroke-width="1.2">"#);
    for set in net.sets {
        let (x, y) = to_screen(orientation_to_pole2d(&set.mean_orientation()).as_array());
        let _ = writeln!(
            s,
            r#"<circle class="set-mean" data-set="{}" cx="{x:.3}" cy="{y:.3}" r="5" fill="{}"/>"#,
            set.set_id,
            set_colour(set.set_id)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r#"<circle class="primitive" cx="{CENTRE}" cy="{CENTRE}" r="{RADIUS}" fill="none" stroke="black" stroke-width="1.5"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="north-tick" x1="{CENTRE}" y1="{a}" x2="{CENTRE}" y2="{b}" stroke="black" stroke-width="1.5"/>"#,
        a = CENTRE - RADIUS,
        b = CENTRE - RADIUS - 12.0
    );
    let _ = writeln!(s, r#"<text x="{CENTRE}" y="{}" text-anchor="middle">N</text>"#, CENTRE - RADIUS - 16.0);

    let _ = writeln!(s, r#"<g class="legend">"#);
    let x0 = 2.0 * CENTRE + 10.0;
    for (k, set) in net.sets.iter().enumerate() {
        let y = 40.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry" data-set="{id}"><rect x="{x0}" y="{ry}" width="10" height="10" fill="{c}"/><text x="{tx}" y="{y}">D{n}: {dip:.1}° / {dd:.1}°</text></g>"#,
            id = set.set_id,
            ry = y - 9.0,
            c = set_colour(set.set_id),
            tx = x0 + 16.0,
            n = set.set_id + 1,
            dip = set.mean_dip,
            dd = set.mean_dipdir,
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_stereonet_svg(net: &Stereonet<'_>, path: &Path) -> Result<()> {
    let svg = stereonet_svg(net)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
