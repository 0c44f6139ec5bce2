//! Minimal SVG canvas over a 2-D data box.

use std::fmt::Write as _;

pub const CLASS0: &str = "#3b6fb6";
pub const CLASS1: &str = "#d9822b";

pub type Point = (f64, f64);

pub struct Canvas {
    lo: Point,
    hi: Point,
    size: f64,
    pad: f64,
    body: String,
}

impl Canvas {
    pub fn new(lo: Point, hi: Point, size: f64) -> Self {
        Canvas {
            lo,
            hi,
            size,
            pad: 28.0,
            body: String::new(),
        }
    }

    fn px(&self, p: Point) -> Point {
        let sx = (p.0 - self.lo.0) / (self.hi.0 - self.lo.0);
        let sy = (p.1 - self.lo.1) / (self.hi.1 - self.lo.1);
        (self.pad + sx * self.size, self.pad + (1.0 - sy) * self.size)
    }

    pub fn cell(&mut self, a: Point, b: Point, fill: &str) {
        let (x0, y0) = self.px((a.0, b.1));
        let (x1, y1) = self.px((b.0, a.1));
        // slight overlap hides hairline seams between cells
        let _ = writeln!(
            self.body,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            x1 - x0 + 0.3,
            y1 - y0 + 0.3
        );
    }

    pub fn line(&mut self, a: Point, b: Point, stroke: &str, width: f64, dash: Option<&str>) {
        let (x0, y0) = self.px(a);
        let (x1, y1) = self.px(b);
        let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="{stroke}" stroke-width="{width}"{dash}/>"#
        );
    }

    pub fn segments(&mut self, segs: &[(Point, Point)], stroke: &str, width: f64, dash: Option<&str>) {
        for &(a, b) in segs {
            self.line(a, b, stroke, width, dash);
        }
    }

    pub fn dot(&mut self, p: Point, r: f64, fill: &str, stroke: &str, class: &str) {
        let (x, y) = self.px(p);
        let _ = writeln!(
            self.body,
            r#"<circle class="{class}" cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}" stroke="{stroke}" stroke-width="1.2"/>"#
        );
    }

    pub fn finish(self) -> String {
        let full = self.size + 2.0 * self.pad;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}" font-family="sans-serif" font-size="10">"#
        );
        out.push_str(&self.body);
        let _ = writeln!(
            out,
            r##"<rect x="{p}" y="{p}" width="{s}" height="{s}" fill="none" stroke="#333"/>"##,
            p = self.pad,
            s = self.size
        );
        for (v, anchor) in [(self.lo, "start"), (self.hi, "end")] {
            let (x, _) = self.px((v.0, self.lo.1));
            let _ = writeln!(
                out,
                r#"<text x="{x:.1}" y="{:.1}" text-anchor="{anchor}">{}</text>"#,
                self.pad + self.size + 14.0,
                v.0
            );
        }
        for v in [self.lo.1, self.hi.1] {
            let (_, y) = self.px((self.lo.0, v));
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v}</text>"#,
                self.pad - 4.0,
                y + 3.0
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Fills the box with an `n × n` grid coloured by `fill` at each cell centre,
/// merging horizontal runs of the same colour into one rectangle.
pub fn shade(canvas: &mut Canvas, n: usize, mut fill: impl FnMut(Point) -> String) {
    let (lo, hi) = (canvas.lo, canvas.hi);
    let dx = (hi.0 - lo.0) / n as f64;
    let dy = (hi.1 - lo.1) / n as f64;
    for j in 0..n {
        let y0 = lo.1 + j as f64 * dy;
        let mut start = 0;
        let mut current = fill((lo.0 + 0.5 * dx, y0 + 0.5 * dy));
        for i in 1..=n {
            let next = (i < n).then(|| fill((lo.0 + (i as f64 + 0.5) * dx, y0 + 0.5 * dy)));
            if next.as_ref() != Some(&current) {
                canvas.cell(
                    (lo.0 + start as f64 * dx, y0),
                    (lo.0 + i as f64 * dx, y0 + dy),
                    &current,
                );
                if let Some(c) = next {
                    current = c;
                    start = i;
                }
            }
        }
    }
}

/// Marching-squares level set of `f` on an `n × n` grid, as line segments.
pub fn contour(lo: Point, hi: Point, n: usize, level: f64, f: impl Fn(Point) -> f64) -> Vec<(Point, Point)> {
    let dx = (hi.0 - lo.0) / n as f64;
    let dy = (hi.1 - lo.1) / n as f64;
    let at = |i: usize, j: usize| (lo.0 + i as f64 * dx, lo.1 + j as f64 * dy);
    let vals: Vec<f64> = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| (i, j)))
        .map(|(i, j)| f(at(i, j)) - level)
        .collect();
    let v = |i: usize, j: usize| vals[j * (n + 1) + i];
    let cross = |p: Point, q: Point, a: f64, b: f64| {
        let t = a / (a - b);
        (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
    };
    let mut segs = Vec::new();
    for j in 0..n {
        for i in 0..n {
            // corners counter-clockwise from bottom-left
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let z = [v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)];
            let mut hits = Vec::with_capacity(4);
            for k in 0..4 {
                let (a, b) = (z[k], z[(k + 1) % 4]);
                if (a < 0.0) != (b < 0.0) {
                    hits.push(cross(c[k], c[(k + 1) % 4], a, b));
                }
            }
            match hits.len() {
                2 => segs.push((hits[0], hits[1])),
                4 => {
                    segs.push((hits[0], hits[1]));
                    segs.push((hits[2], hits[3]));
                }
                _ => {}
            }
        }
    }
    segs
}

/// Blue → white → orange for a probability of class 1, in 20 steps.
pub fn ramp(p: f64) -> String {
    let p = (p.clamp(0.0, 1.0) * 20.0).round() / 20.0;
    let mix = |a: [f64; 3], t: f64| {
        let c: Vec<u8> = a.iter().map(|&v| (255.0 + (v - 255.0) * t).round() as u8).collect();
        format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
    };
    if p < 0.5 {
        mix([59.0, 111.0, 182.0], (0.5 - p) * 1.6)
    } else {
        mix([217.0, 130.0, 43.0], (p - 0.5) * 1.6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contour_of_a_plane_lies_on_the_line() {
        let segs = contour((0.0, 0.0), (6.0, 6.0), 30, 6.0, |(x, y)| x + y);
        assert!(!segs.is_empty());
        for (a, b) in segs {
            assert!((a.0 + a.1 - 6.0).abs() < 1e-9);
            assert!((b.0 + b.1 - 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn contour_misses_a_level_outside_the_range() {
        assert!(contour((0.0, 0.0), (1.0, 1.0), 10, 5.0, |(x, y)| x * y).is_empty());
    }

    #[test]
    fn ramp_ends() {
        assert_eq!(ramp(0.5), "#ffffff");
        assert_eq!(ramp(0.0), "#628cc5");
        assert_eq!(ramp(1.0), "#e19b55");
        assert_eq!(ramp(0.51), ramp(0.5));
    }

    #[test]
    fn shade_merges_runs() {
        let mut c = Canvas::new((0.0, 0.0), (4.0, 2.0), 100.0);
        shade(&mut c, 4, |(x, _)| if x < 1.5 { "a".into() } else { "b".into() });
        let svg = c.finish();
        // two runs per row
        assert_eq!(svg.matches(r#"fill="a""#).count(), 4);
        assert_eq!(svg.matches(r#"fill="b""#).count(), 4);
    }

    #[test]
    fn canvas_flips_y() {
        let c = Canvas::new((0.0, 0.0), (1.0, 1.0), 100.0);
        assert_eq!(c.px((0.0, 0.0)), (28.0, 128.0));
        assert_eq!(c.px((1.0, 1.0)), (128.0, 28.0));
    }
}
