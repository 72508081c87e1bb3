//! Continuous canvas geometry.
//!
//! Canvas coordinates are real-valued with the origin at the top-left corner
//! of the image; pixel `(i, j)` covers `[i, i+1) x [j, j+1)` and its center is
//! `(i + 0.5, j + 0.5)`.

use serde::{Deserialize, Serialize};

use crate::image::Pixel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[inline]
pub fn pixel_center(p: Pixel) -> Point {
    Point::new(p.0 as f64 + 0.5, p.1 as f64 + 0.5)
}

/// Rectangle given by an axis through `origin` with unit direction `dir`.
///
/// A point belongs to the rectangle when its signed position along the axis
/// lies in `[start, start + length)` and its signed offset across the axis
/// lies in `[-width/2, width/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    pub origin: Point,
    pub dir: (f64, f64),
    pub start: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedRect {
    /// Rectangle centered on `center` with the given orientation angle.
    pub fn centered(center: Point, angle: f64, length: f64, width: f64) -> Self {
        Self {
            origin: center,
            dir: (angle.cos(), angle.sin()),
            start: -0.5 * length,
            length,
            width,
        }
    }

    /// Rectangle whose axis runs from the center of `a` towards the center of
    /// `b`, starting `start` pixels from `a`.
    pub fn through(a: Pixel, b: Pixel, start: f64, length: f64, width: f64) -> Self {
        let o = pixel_center(a);
        let dx = b.0 as f64 - a.0 as f64;
        let dy = b.1 as f64 - a.1 as f64;
        let d = dx.hypot(dy);
        Self {
            origin: o,
            dir: (dx / d, dy / d),
            start,
            length,
            width,
        }
    }

    /// Position along and offset across the axis.
    #[inline]
    pub fn project(&self, p: Point) -> (f64, f64) {
        let dx = p.x - self.origin.x;
        let dy = p.y - self.origin.y;
        let along = dx * self.dir.0 + dy * self.dir.1;
        let across = dy * self.dir.0 - dx * self.dir.1;
        (along, across)
    }

    #[inline]
    pub fn contains_across(&self, across: f64) -> bool {
        let half = 0.5 * self.width;
        -half <= across && across < half
    }

    #[inline]
    pub fn contains_along(&self, along: f64) -> bool {
        self.start <= along && along < self.start + self.length
    }

    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        let (along, across) = self.project(p);
        self.contains_along(along) && self.contains_across(across)
    }

    pub fn angle(&self) -> f64 {
        self.dir.1.atan2(self.dir.0).rem_euclid(std::f64::consts::TAU)
    }

    pub fn point_at(&self, along: f64) -> Point {
        Point::new(
            self.origin.x + along * self.dir.0,
            self.origin.y + along * self.dir.1,
        )
    }

    /// The two ends of the axis segment.
    pub fn axis_endpoints(&self) -> (Point, Point) {
        (self.point_at(self.start), self.point_at(self.start + self.length))
    }

    pub fn center(&self) -> Point {
        self.point_at(self.start + 0.5 * self.length)
    }

    pub fn corners(&self) -> [Point; 4] {
        let (a, b) = self.axis_endpoints();
        let nx = -self.dir.1 * 0.5 * self.width;
        let ny = self.dir.0 * 0.5 * self.width;
        [
            Point::new(a.x + nx, a.y + ny),
            Point::new(a.x - nx, a.y - ny),
            Point::new(b.x + nx, b.y + ny),
            Point::new(b.x - nx, b.y - ny),
        ]
    }

    /// Inclusive pixel index bounds of the rectangle clipped to the image,
    /// or `None` when the rectangle misses the image entirely.
    pub fn pixel_bounds(&self, width: usize, height: usize) -> Option<(usize, usize, usize, usize)> {
        let c = self.corners();
        let min_x = c.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let max_x = c.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let min_y = c.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let max_y = c.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        // One pixel of margin so boundary centers are always visited.
        let x0 = (min_x - 1.5).floor().max(0.0);
        let y0 = (min_y - 1.5).floor().max(0.0);
        let x1 = (max_x + 0.5).ceil().min(width as f64 - 1.0);
        let y1 = (max_y + 0.5).ceil().min(height as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            return None;
        }
        Some((x0 as usize, y0 as usize, x1 as usize, y1 as usize))
    }

    /// Pixels of a `width x height` image whose centers lie in the rectangle.
    pub fn pixels(&self, width: usize, height: usize) -> Vec<Pixel> {
        let mut out = Vec::new();
        if let Some((x0, y0, x1, y1)) = self.pixel_bounds(width, height) {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = (x as u32, y as u32);
                    if self.contains(pixel_center(p)) {
                        out.push(p);
                    }
                }
            }
        }
        out
    }
}

/// Angle between two undirected lines, in `[0, pi/2]`.
pub fn undirected_angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn axis_aligned_rect_membership_is_half_open() {
        let r = OrientedRect::centered(Point::new(5.0, 5.0), 0.0, 4.0, 2.0);
        assert!(r.contains(Point::new(3.0, 4.0)));
        assert!(!r.contains(Point::new(7.0, 5.0)));
        assert!(!r.contains(Point::new(5.0, 6.0)));
        assert_eq!(r.pixels(20, 20).len(), 8);
    }

    #[test]
    fn undirected_angles() {
        assert!(undirected_angle_difference(0.0, PI).abs() < 1e-12);
        assert!((undirected_angle_difference(0.0, FRAC_PI_2) - FRAC_PI_2).abs() < 1e-12);
        assert!((undirected_angle_difference(0.05, PI - 0.05) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn pixel_bounds_clip_to_image() {
        let r = OrientedRect::centered(Point::new(-50.0, -50.0), 0.3, 10.0, 2.0);
        assert!(r.pixel_bounds(10, 10).is_none());
    }
}
