//! Static SVG scatter plots.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("cannot write plot: {0}")]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Draw `y = x` across the visible range.
    pub reference_line: bool,
    pub width: u32,
    pub height: u32,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            title: String::new(),
            x_label: "x".into(),
            y_label: "y".into(),
            reference_line: false,
            width: 640,
            height: 480,
        }
    }
}

const MARGIN: f64 = 60.0;
const TICKS: usize = 5;

#[derive(Copy, Clone, Debug)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Range {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        if lo > hi {
            return Range { lo: -1.0, hi: 1.0 };
        }
        if lo == hi {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            return Range {
                lo: lo - pad,
                hi: hi + pad,
            };
        }
        let pad = (hi - lo) * 0.05;
        Range {
            lo: lo - pad,
            hi: hi + pad,
        }
    }
}

struct Frame {
    x: Range,
    y: Range,
    width: f64,
    height: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.lo) / (self.x.hi - self.x.lo) * (self.width - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        self.height
            - MARGIN
            - (y - self.y.lo) / (self.y.hi - self.y.lo) * (self.height - 2.0 * MARGIN)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the scatter as an SVG document.
pub fn render_svg_scatter(points: &[(f64, f64)], spec: &PlotSpec) -> Result<String, PlotError> {
    if let Some(index) = points
        .iter()
        .position(|(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(PlotError::NonFinite { index });
    }
    let frame = Frame {
        x: Range::of(points.iter().map(|p| p.0)),
        y: Range::of(points.iter().map(|p| p.1)),
        width: f64::from(spec.width.max(200)),
        height: f64::from(spec.height.max(200)),
    };
    let (left, right) = (MARGIN, frame.width - MARGIN);
    let (top, bottom) = (MARGIN, frame.height - MARGIN);

    let mut svg = String::new();
    // write! into a String cannot fail
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = frame.width,
        h = frame.height
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect class="frame" x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );

    // zero axes
    if frame.x.lo < 0.0 && frame.x.hi > 0.0 {
        let x0 = frame.px(0.0);
        let _ = writeln!(
            svg,
            r##"<line class="axis" x1="{x0:.3}" y1="{top}" x2="{x0:.3}" y2="{bottom}" stroke="#999"/>"##
        );
    }
    if frame.y.lo < 0.0 && frame.y.hi > 0.0 {
        let y0 = frame.py(0.0);
        let _ = writeln!(
            svg,
            r##"<line class="axis" x1="{left}" y1="{y0:.3}" x2="{right}" y2="{y0:.3}" stroke="#999"/>"##
        );
    }

    for k in 0..TICKS {
        let t = k as f64 / (TICKS - 1) as f64;
        let xv = frame.x.lo + t * (frame.x.hi - frame.x.lo);
        let yv = frame.y.lo + t * (frame.y.hi - frame.y.lo);
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{:.3}" y="{}" font-size="10" text-anchor="middle">{:.3}</text>"#,
            frame.px(xv),
            bottom + 15.0,
            xv
        );
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{}" y="{:.3}" font-size="10" text-anchor="end">{:.3}</text>"#,
            left - 5.0,
            frame.py(yv) + 3.0,
            yv
        );
    }

    let _ = writeln!(
        svg,
        r#"<text class="label" x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        frame.width / 2.0,
        frame.height - 15.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text class="label" x="15" y="{y}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {y})">{}</text>"#,
        escape(&spec.y_label),
        y = frame.height / 2.0
    );
    if !spec.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text class="title" x="{}" y="30" font-size="14" text-anchor="middle">{}</text>"#,
            frame.width / 2.0,
            escape(&spec.title)
        );
    }

    if spec.reference_line {
        let t0 = frame.x.lo.max(frame.y.lo);
        let t1 = frame.x.hi.min(frame.y.hi);
        if t0 < t1 {
            let _ = writeln!(
                svg,
                r#"<line class="reference" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="red" stroke-dasharray="4 3"/>"#,
                frame.px(t0),
                frame.py(t0),
                frame.px(t1),
                frame.py(t1)
            );
        }
    }

    for &(x, y) in points {
        let _ = writeln!(
            svg,
            r#"<circle class="point" cx="{:.3}" cy="{:.3}" r="2.5" fill="steelblue" fill-opacity="0.7"/>"#,
            frame.px(x),
            frame.py(y)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_svg_scatter(
    points: &[(f64, f64)],
    spec: &PlotSpec,
    path: &Path,
) -> Result<(), PlotError> {
    let svg = render_svg_scatter(points, spec)?;
    fs::write(path, svg)?;
    Ok(())
}
