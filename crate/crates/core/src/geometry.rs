//! Oriented rectangles and the separating-axis overlap test.

use std::f64::consts::PI;

use nalgebra::Vector2;

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub position: Vec2,
    heading: f64,
}

impl Pose2 {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Self {
            position,
            heading: normalize_angle(heading),
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    /// Unit vector along the heading.
    pub fn forward(&self) -> Vec2 {
        Vec2::new(self.heading.cos(), self.heading.sin())
    }

    /// Unit vector 90 degrees counterclockwise of the heading.
    pub fn left(&self) -> Vec2 {
        Vec2::new(-self.heading.sin(), self.heading.cos())
    }

    pub fn to_local(&self, p: Vec2) -> Vec2 {
        let d = p - self.position;
        Vec2::new(d.dot(&self.forward()), d.dot(&self.left()))
    }

    pub fn to_world(&self, p: Vec2) -> Vec2 {
        self.position + self.forward() * p.x + self.left() * p.y
    }
}

/// Heading-aligned rectangular vehicle footprint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub pose: Pose2,
    length: f64,
    width: f64,
}

impl OrientedRect {
    pub fn new(pose: Pose2, length: f64, width: f64) -> Result<Self> {
        if !(length > 0.0 && width > 0.0 && length.is_finite() && width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rectangle dimensions must be positive, got {length} x {width}"
            )));
        }
        Ok(Self {
            pose,
            length,
            width,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn center(&self) -> Vec2 {
        self.pose.position
    }

    /// Counterclockwise corners starting front-left.
    pub fn corners(&self) -> [Vec2; 4] {
        let hl = 0.5 * self.length;
        let hw = 0.5 * self.width;
        [
            self.pose.to_world(Vec2::new(hl, hw)),
            self.pose.to_world(Vec2::new(-hl, hw)),
            self.pose.to_world(Vec2::new(-hl, -hw)),
            self.pose.to_world(Vec2::new(hl, -hw)),
        ]
    }

    pub fn world_to_local(&self, p: Vec2) -> Vec2 {
        self.pose.to_local(p)
    }

    pub fn local_to_world(&self, p: Vec2) -> Vec2 {
        self.pose.to_world(p)
    }

    /// Closed-set containment.
    pub fn contains(&self, p: Vec2) -> bool {
        let q = self.world_to_local(p);
        q.x.abs() <= 0.5 * self.length && q.y.abs() <= 0.5 * self.width
    }

    /// Half-extent of the projection onto unit axis `n`.
    fn projected_radius(&self, n: &Vec2) -> f64 {
        0.5 * self.length * self.pose.forward().dot(n).abs()
            + 0.5 * self.width * self.pose.left().dot(n).abs()
    }
}

pub fn rect_corners(rect: &OrientedRect) -> [Vec2; 4] {
    rect.corners()
}

pub fn world_to_local(rect: &OrientedRect, p: Vec2) -> Vec2 {
    rect.world_to_local(p)
}

/// Closed rectangles overlap (touching counts). Separating-axis test over
/// the two edge normals of each rectangle.
pub fn rects_intersect(a: &OrientedRect, b: &OrientedRect) -> bool {
    let d = b.center() - a.center();
    let axes = [
        a.pose.forward(),
        a.pose.left(),
        b.pose.forward(),
        b.pose.left(),
    ];
    axes.iter()
        .all(|n| d.dot(n).abs() <= a.projected_radius(n) + b.projected_radius(n))
}
