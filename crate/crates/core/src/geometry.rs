//! Planar geometry primitives shared by the road network and the radio model.
//!
//! All coordinates are meters in an arbitrary planar frame. There is no
//! geodesy anywhere in the crate: synthetic networks are authored directly
//! in meters, which keeps contact-window arithmetic exact.

use serde::{Deserialize, Serialize};

/// A point in the planar meter frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0);
    let proj = Point::new(a.x + t * abx, a.y + t * aby);
    p.distance(&proj)
}

/// An ordered open polyline of at least two points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    points: Vec<Point>,
}

impl Polyline {
    /// Builds a polyline; requires >= 2 points with no repeated consecutive point.
    pub fn new(points: Vec<Point>) -> Result<Self, PolylineError> {
        if points.len() < 2 {
            return Err(PolylineError::TooFewPoints(points.len()));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[0].distance(&w[1]) == 0.0 {
                return Err(PolylineError::RepeatedPoint(i));
            }
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(PolylineError::NonFinite);
        }
        Ok(Polyline { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn start(&self) -> Point {
        self.points[0]
    }

    pub fn end(&self) -> Point {
        *self.points.last().unwrap()
    }

    /// Total length: sum of the edge lengths.
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }

    /// Point at arc-length `s` from the start, clamped to `[0, length]`.
    pub fn point_at(&self, s: f64) -> Point {
        let mut remaining = s.max(0.0);
        for w in self.points.windows(2) {
            let edge = w[0].distance(&w[1]);
            if remaining <= edge {
                let t = remaining / edge;
                return Point::new(
                    w[0].x + t * (w[1].x - w[0].x),
                    w[0].y + t * (w[1].y - w[0].y),
                );
            }
            remaining -= edge;
        }
        self.end()
    }

    /// Unit travel direction at arc-length `s` (direction of the containing edge).
    pub fn direction_at(&self, s: f64) -> Point {
        let mut remaining = s.max(0.0);
        for w in self.points.windows(2) {
            let edge = w[0].distance(&w[1]);
            if remaining <= edge {
                return Point::new((w[1].x - w[0].x) / edge, (w[1].y - w[0].y) / edge);
            }
            remaining -= edge;
        }
        let w = &self.points[self.points.len() - 2..];
        let edge = w[0].distance(&w[1]);
        Point::new((w[1].x - w[0].x) / edge, (w[1].y - w[0].y) / edge)
    }

    /// Minimum distance from `p` to any edge of the polyline.
    pub fn distance_to(&self, p: &Point) -> f64 {
        self.points
            .windows(2)
            .map(|w| point_segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Arc-length of the point on the polyline closest to `p`.
    pub fn offset_of_closest(&self, p: &Point) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let mut walked = 0.0;
        for w in self.points.windows(2) {
            let abx = w[1].x - w[0].x;
            let aby = w[1].y - w[0].y;
            let len = w[0].distance(&w[1]);
            let t = (((p.x - w[0].x) * abx + (p.y - w[0].y) * aby) / (len * len)).clamp(0.0, 1.0);
            let proj = Point::new(w[0].x + t * abx, w[0].y + t * aby);
            let d = p.distance(&proj);
            if d < best.0 {
                best = (d, walked + t * len);
            }
            walked += len;
        }
        best.1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolylineError {
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("polyline point {0} coincides with its successor")]
    RepeatedPoint(usize),
    #[error("polyline contains a non-finite coordinate")]
    NonFinite,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_segment_distance_axis_aligned() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(100.0, 0.0);
        assert_eq!(
            point_segment_distance(&Point::new(50.0, 10.0), &a, &b),
            10.0
        );
        assert_eq!(
            point_segment_distance(&Point::new(-30.0, 40.0), &a, &b),
            50.0
        );
        assert_eq!(point_segment_distance(&Point::new(25.0, 0.0), &a, &b), 0.0);
    }

    #[test]
    fn polyline_length_and_interpolation() {
        let pl = Polyline::new(vec![
            Point::new(0.0, 0.0),
            Point::new(100.0, 0.0),
            Point::new(100.0, 50.0),
        ])
        .unwrap();
        assert_eq!(pl.length(), 150.0);
        let mid = pl.point_at(120.0);
        assert_eq!((mid.x, mid.y), (100.0, 20.0));
        assert_eq!(pl.point_at(0.0), pl.start());
        assert_eq!(pl.point_at(1e9), pl.end());
        let d = pl.direction_at(120.0);
        assert_eq!((d.x, d.y), (0.0, 1.0));
    }

    #[test]
    fn polyline_rejects_degenerate_input() {
        assert_eq!(
            Polyline::new(vec![Point::new(0.0, 0.0)]).unwrap_err(),
            PolylineError::TooFewPoints(1)
        );
        assert!(matches!(
            Polyline::new(vec![Point::new(1.0, 1.0), Point::new(1.0, 1.0)]),
            Err(PolylineError::RepeatedPoint(0))
        ));
    }

    #[test]
    fn offset_of_closest_projects_onto_edges() {
        let pl = Polyline::new(vec![
            Point::new(0.0, 0.0),
            Point::new(100.0, 0.0),
            Point::new(100.0, 100.0),
        ])
        .unwrap();
        assert_eq!(pl.offset_of_closest(&Point::new(30.0, 5.0)), 30.0);
        assert_eq!(pl.offset_of_closest(&Point::new(110.0, 60.0)), 160.0);
    }
}
