//! A small retained drawing model rendered to either SVG or PNG.

use std::fmt::Write as _;
use std::io::Cursor;

use image::{Rgb, RgbImage};
use imageproc::drawing::{draw_filled_circle_mut, draw_filled_rect_mut, draw_hollow_rect_mut, draw_line_segment_mut, draw_polygon_mut};
use imageproc::point::Point;
use imageproc::rect::Rect;

use crate::error::Result;
use crate::spec::ImageFormat;

pub type Color = [u8; 3];

pub const WHITE: Color = [255, 255, 255];
pub const BLACK: Color = [0, 0, 0];
pub const GREY: Color = [110, 110, 110];
pub const BLUE: Color = [31, 119, 180];
pub const ORANGE: Color = [255, 127, 14];
pub const GREEN: Color = [44, 160, 44];

/// Mix `color` toward white; `amount` 0 keeps it, 1 gives white.
pub fn tint(color: Color, amount: f64) -> Color {
    let mix = |c: u8| (c as f64 + (255.0 - c as f64) * amount).round().clamp(0.0, 255.0) as u8;
    [mix(color[0]), mix(color[1]), mix(color[2])]
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Line { points: Vec<(f64, f64)>, color: Color },
    /// Filled region; `class` tags the SVG element.
    Fill { points: Vec<(f64, f64)>, color: Color, class: &'static str },
    Dot { at: (f64, f64), radius: f64, color: Color },
    Frame { x: f64, y: f64, w: f64, h: f64 },
    Swatch { x: f64, y: f64, size: f64, color: Color },
    /// Only drawn in SVG output.
    Label { at: (f64, f64), text: String },
}

/// Affine map from data coordinates into a plotting rectangle.
#[derive(Debug, Clone, Copy)]
pub struct Viewport {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl Viewport {
    pub fn new(canvas: (u32, u32), margin: f64, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi - lo > 1e-12 {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            } else {
                (lo - 1.0, hi + 1.0)
            }
        };
        Self {
            left: margin,
            top: margin,
            width: canvas.0 as f64 - 2.0 * margin,
            height: canvas.1 as f64 - 2.0 * margin,
            x_range: widen(x_range),
            y_range: widen(y_range),
        }
    }

    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let u = (x - self.x_range.0) / (self.x_range.1 - self.x_range.0);
        let v = (y - self.y_range.0) / (self.y_range.1 - self.y_range.0);
        (self.left + u * self.width, self.top + (1.0 - v) * self.height)
    }

    pub fn frame(&self) -> Shape {
        Shape::Frame { x: self.left, y: self.top, w: self.width, h: self.height }
    }
}

/// Finite `(min, max)` of an iterator, or `(0, 1)` when empty.
pub fn extent(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub width: u32,
    pub height: u32,
    pub shapes: Vec<Shape>,
}

impl Scene {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, shapes: Vec::new() }
    }

    pub fn push(&mut self, shape: Shape) {
        self.shapes.push(shape);
    }

    pub fn count(&self, class: &str) -> usize {
        self.shapes
            .iter()
            .filter(|s| matches!(s, Shape::Fill { class: c, .. } if *c == class))
            .count()
    }

    pub fn render(&self, format: ImageFormat) -> Result<Vec<u8>> {
        match format {
            ImageFormat::Svg => Ok(self.to_svg().into_bytes()),
            ImageFormat::Png => self.to_png(),
        }
    }

    pub fn to_svg(&self) -> String {
        let hex = |c: Color| format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2]);
        let pts = |p: &[(f64, f64)]| {
            p.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ")
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            w = self.width,
            h = self.height
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="{}"/>"#, hex(WHITE));
        for shape in &self.shapes {
            let _ = match shape {
                Shape::Line { points, color } => writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    pts(points),
                    hex(*color)
                ),
                Shape::Fill { points, color, class } => writeln!(
                    out,
                    r#"<polygon class="{class}" points="{}" fill="{}" stroke="none"/>"#,
                    pts(points),
                    hex(*color)
                ),
                Shape::Dot { at, radius, color } => writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="{radius}" fill="{}"/>"#,
                    at.0,
                    at.1,
                    hex(*color)
                ),
                Shape::Frame { x, y, w, h } => writeln!(
                    out,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="{}"/>"#,
                    hex(GREY)
                ),
                Shape::Swatch { x, y, size, color } => writeln!(
                    out,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{size}" height="{size}" fill="{}"/>"#,
                    hex(*color)
                ),
                Shape::Label { at, text } => writeln!(
                    out,
                    r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
                    at.0,
                    at.1,
                    escape(text)
                ),
            };
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut img = RgbImage::from_pixel(self.width, self.height, Rgb(WHITE));
        for shape in &self.shapes {
            match shape {
                Shape::Line { points, color } => {
                    for w in points.windows(2) {
                        let (a, b) = ((w[0].0 as f32, w[0].1 as f32), (w[1].0 as f32, w[1].1 as f32));
                        draw_line_segment_mut(&mut img, a, b, Rgb(*color));
                        draw_line_segment_mut(&mut img, (a.0, a.1 + 1.0), (b.0, b.1 + 1.0), Rgb(*color));
                    }
                }
                Shape::Fill { points, color, .. } => {
                    let mut poly: Vec<Point<i32>> = Vec::with_capacity(points.len());
                    for &(x, y) in points {
                        let p = Point::new(x.round() as i32, y.round() as i32);
                        if poly.last() != Some(&p) {
                            poly.push(p);
                        }
                    }
                    while poly.len() > 1 && poly.first() == poly.last() {
                        poly.pop();
                    }
                    if poly.len() >= 3 {
                        draw_polygon_mut(&mut img, &poly, Rgb(*color));
                    }
                }
                Shape::Dot { at, radius, color } => {
                    draw_filled_circle_mut(
                        &mut img,
                        (at.0.round() as i32, at.1.round() as i32),
                        radius.round().max(1.0) as i32,
                        Rgb(*color),
                    );
                }
                Shape::Frame { x, y, w, h } => {
                    let rect = Rect::at(x.round() as i32, y.round() as i32)
                        .of_size(w.round().max(1.0) as u32, h.round().max(1.0) as u32);
                    draw_hollow_rect_mut(&mut img, rect, Rgb(GREY));
                }
                Shape::Swatch { x, y, size, color } => {
                    let s = size.round().max(1.0) as u32;
                    draw_filled_rect_mut(&mut img, Rect::at(x.round() as i32, y.round() as i32).of_size(s, s), Rgb(*color));
                }
                Shape::Label { .. } => {}
            }
        }
        let mut bytes = Vec::new();
        img.write_to(&mut Cursor::new(&mut bytes), image::ImageFormat::Png)?;
        Ok(bytes)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Legend entries stacked in the top-right corner.
pub fn legend(scene: &mut Scene, entries: &[(&str, Color)]) {
    let x = scene.width as f64 - 110.0;
    for (i, (name, color)) in entries.iter().enumerate() {
        let y = 12.0 + 18.0 * i as f64;
        scene.push(Shape::Swatch { x, y, size: 10.0, color: *color });
        scene.push(Shape::Label { at: (x + 16.0, y + 10.0), text: name.to_string() });
    }
}
