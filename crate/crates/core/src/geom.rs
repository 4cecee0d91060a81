//! Planar geometry helpers. All coordinates are meters.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist2(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point2) -> f64 {
        self.dist2(other).sqrt()
    }

    /// Point at `radius` from `self` in direction `angle` (radians).
    pub fn polar(self, radius: f64, angle: f64) -> Point2 {
        Point2::new(self.x + radius * angle.cos(), self.y + radius * angle.sin())
    }

    /// Lexicographic `(x, y)` ordering, used as the deterministic tie-break
    /// between equally good centers.
    pub fn lex_less(self, other: Point2) -> bool {
        (self.x, self.y) < (other.x, other.y)
    }
}

/// Closed disk in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Point2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point2, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.dist2(self.center) <= self.radius * self.radius
    }

    /// Nearest point of the disk to `p`.
    pub fn project(&self, p: Point2) -> Point2 {
        let d = p.dist(self.center);
        if d <= self.radius {
            return p;
        }
        let s = self.radius / d;
        Point2::new(
            self.center.x + (p.x - self.center.x) * s,
            self.center.y + (p.y - self.center.y) * s,
        )
    }
}
