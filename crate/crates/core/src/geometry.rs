//! Planar geometry used by the relocation rules.
//!
//! Coordinates are meters in `f64`. Geometric assertions use [`EPS_GEOM`].

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

/// Tolerance for geometric equality, in meters.
pub const EPS_GEOM: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite coordinate ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("invalid distance {0}: must be finite and non-negative")]
    InvalidDistance(f64),
    #[error("invalid radius {0}: must be finite and positive")]
    InvalidRadius(f64),
    #[error("cannot move from a point coincident with its target: direction undefined")]
    DegenerateDirection,
    #[error("circles share the same center: infinitely many intersections")]
    CoincidentCenters,
    #[error("no candidate points")]
    EmptyCandidates,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Builds a position, rejecting NaN and infinite coordinates.
    pub fn checked(x: f64, y: f64) -> Result<Self, GeometryError> {
        let p = Self { x, y };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.x.is_finite() && self.y.is_finite() {
            Ok(())
        } else {
            Err(GeometryError::NonFinite {
                x: self.x,
                y: self.y,
            })
        }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        distance(*self, *other)
    }

    /// Lexicographic (x, then y) total order.
    pub fn lex_cmp(&self, other: &Position) -> Ordering {
        self.x
            .total_cmp(&other.x)
            .then_with(|| self.y.total_cmp(&other.y))
    }
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Euclidean distance.
pub fn distance(a: Position, b: Position) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Moves `from` along the segment toward `target`, stopping exactly
/// `stop_dist` away from it. A point already within `stop_dist` stays put.
pub fn approach(from: Position, target: Position, stop_dist: f64) -> Result<Position, GeometryError> {
    if !stop_dist.is_finite() || stop_dist < 0.0 {
        return Err(GeometryError::InvalidDistance(stop_dist));
    }
    from.validate()?;
    target.validate()?;

    let d = distance(from, target);
    if d <= stop_dist {
        return Ok(from);
    }
    if d == 0.0 {
        // Unreachable for valid stop_dist, kept for the contract.
        return Err(GeometryError::DegenerateDirection);
    }
    let scale = stop_dist / d;
    Ok(Position::new(
        target.x + (from.x - target.x) * scale,
        target.y + (from.y - target.y) * scale,
    ))
}

/// Intersection points of two circles that share `radius`.
///
/// Returns zero, one (tangency within [`EPS_GEOM`]) or two points. Two points
/// come back in lexicographic order.
pub fn circle_intersections(
    center_a: Position,
    center_b: Position,
    radius: f64,
) -> Result<Vec<Position>, GeometryError> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(GeometryError::InvalidRadius(radius));
    }
    center_a.validate()?;
    center_b.validate()?;

    let dx = center_b.x - center_a.x;
    let dy = center_b.y - center_a.y;
    let d = dx.hypot(dy);
    if d == 0.0 {
        return Err(GeometryError::CoincidentCenters);
    }
    let mid = Position::new(center_a.x + dx / 2.0, center_a.y + dy / 2.0);
    if (d - 2.0 * radius).abs() <= EPS_GEOM {
        return Ok(vec![mid]);
    }
    if d > 2.0 * radius {
        return Ok(Vec::new());
    }

    let half = d / 2.0;
    let h = ((radius - half) * (radius + half)).sqrt();
    // unit normal to the center line
    let (nx, ny) = (-dy / d, dx / d);
    let mut pts = vec![
        Position::new(mid.x + h * nx, mid.y + h * ny),
        Position::new(mid.x - h * nx, mid.y - h * ny),
    ];
    pts.sort_by(|a, b| a.lex_cmp(b));
    Ok(pts)
}

/// The candidate nearest to `reference`; equidistant candidates resolve
/// lexicographically.
pub fn closest_point(candidates: &[Position], reference: Position) -> Result<Position, GeometryError> {
    candidates
        .iter()
        .copied()
        .min_by(|a, b| {
            distance(*a, reference)
                .total_cmp(&distance(*b, reference))
                .then_with(|| a.lex_cmp(b))
        })
        .ok_or(GeometryError::EmptyCandidates)
}

/// Closest point to `from` that lies within `radius` of every anchor.
///
/// The nearest point of an intersection of disks is either `from` itself,
/// the projection of `from` onto one boundary circle, or a crossing point of
/// two boundary circles, so only those candidates are examined. Returns
/// `None` when the disks have no common point.
pub fn closest_point_within_all(from: Position, anchors: &[Position], radius: f64) -> Option<Position> {
    let feasible = |p: &Position| anchors.iter().all(|a| distance(*p, *a) <= radius + EPS_GEOM);
    if feasible(&from) {
        return Some(from);
    }

    let mut candidates = Vec::new();
    for a in anchors {
        if let Ok(p) = approach(from, *a, radius) {
            candidates.push(p);
        }
    }
    for (i, a) in anchors.iter().enumerate() {
        for b in &anchors[i + 1..] {
            if let Ok(pts) = circle_intersections(*a, *b, radius) {
                candidates.extend(pts);
            }
        }
    }
    candidates.retain(feasible);
    closest_point(&candidates, from).ok()
}
