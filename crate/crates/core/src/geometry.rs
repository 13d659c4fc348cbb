//! Points, antenna array layouts, vertical wall planes and first-order
//! image (mirror) sources.
//!
//! World frame is right-handed with z pointing up; all lengths are meters.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point (or displacement) in world coordinates. Serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Point3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Point3 { x, y, z }
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);
    pub const X: Point3 = Point3::new(1.0, 0.0, 0.0);
    pub const Y: Point3 = Point3::new(0.0, 1.0, 0.0);
    pub const Z: Point3 = Point3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Unit vector in the same direction, or an error for zero/non-finite input.
    pub fn normalized(self, what: &'static str) -> Result<Point3> {
        let n = self.norm();
        if !n.is_finite() || n <= f64::EPSILON {
            return Err(Error::DegenerateDirection(what));
        }
        Ok(self * (1.0 / n))
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Ordered antenna element positions. The order defines the element index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub label: String,
    pub elements: Vec<Point3>,
}

impl ArrayLayout {
    pub fn new(label: impl Into<String>, elements: Vec<Point3>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyArray);
        }
        if elements.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("array element"));
        }
        Ok(ArrayLayout {
            label: label.into(),
            elements,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn centroid(&self) -> Point3 {
        let sum = self.elements.iter().fold(Point3::ORIGIN, |acc, &p| acc + p);
        sum * (1.0 / self.elements.len() as f64)
    }
}

/// Uniform linear array of `n` elements centered on `center`, indexed along `axis`.
pub fn ula_layout(n: usize, spacing: f64, center: Point3, axis: Point3) -> Result<ArrayLayout> {
    if n == 0 {
        return Err(Error::EmptyArray);
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidParameter("spacing must be positive"));
    }
    let axis = axis.normalized("ula axis")?;
    let mid = (n as f64 - 1.0) / 2.0;
    let elements = (0..n)
        .map(|i| center + axis * ((i as f64 - mid) * spacing))
        .collect();
    ArrayLayout::new(format!("ULA{n}"), elements)
}

/// In-plane basis `(u, v)` for a plane with the given normal.
///
/// For `normal = +z` this is `(+x, +y)`.
pub fn plane_basis(normal: Point3) -> Result<(Point3, Point3)> {
    let n = normal.normalized("plane normal")?;
    let reference = if n.x.abs() > 0.9 {
        Point3::Y
    } else {
        Point3::X
    };
    let v = n.cross(reference).normalized("plane normal")?;
    let u = v.cross(n);
    Ok((u, v))
}

/// Uniform rectangular array, row-major: rows step along `v`, columns along `u`
/// of [`plane_basis`].
pub fn ura_layout(
    rows: usize,
    cols: usize,
    spacing: f64,
    center: Point3,
    normal: Point3,
) -> Result<ArrayLayout> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyArray);
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidParameter("spacing must be positive"));
    }
    let (u, v) = plane_basis(normal)?;
    let rmid = (rows as f64 - 1.0) / 2.0;
    let cmid = (cols as f64 - 1.0) / 2.0;
    let mut elements = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let du = (c as f64 - cmid) * spacing;
            let dv = (r as f64 - rmid) * spacing;
            elements.push(center + u * du + v * dv);
        }
    }
    ArrayLayout::new(format!("URA{rows}x{cols}"), elements)
}

/// A flat vertical reflecting wall.
///
/// Mirroring treats the wall as the infinite vertical plane through `a` and `b`;
/// the endpoints only record the detected extent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallSegment {
    pub a: Point3,
    pub b: Point3,
    /// Vertical extent above the endpoints; `None` means unbounded.
    pub height_m: Option<f64>,
    pub reflection_coeff: Complex64,
}

impl WallSegment {
    pub fn new(a: Point3, b: Point3) -> Result<Self> {
        Self::with_reflection(a, b, None, Complex64::new(1.0, 0.0))
    }

    pub fn with_reflection(
        a: Point3,
        b: Point3,
        height_m: Option<f64>,
        reflection_coeff: Complex64,
    ) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite("wall endpoint"));
        }
        if a.z != b.z {
            return Err(Error::InvalidWall("endpoints must share the same z"));
        }
        if a.distance(b) <= f64::EPSILON {
            return Err(Error::InvalidWall("endpoints coincide"));
        }
        if !reflection_coeff.re.is_finite()
            || !reflection_coeff.im.is_finite()
            || reflection_coeff.norm() > 1.0 + 1e-12
        {
            return Err(Error::InvalidWall("|reflection_coeff| must be <= 1"));
        }
        if let Some(h) = height_m {
            if !(h > 0.0) {
                return Err(Error::InvalidWall("height must be positive"));
            }
        }
        Ok(WallSegment {
            a,
            b,
            height_m,
            reflection_coeff,
        })
    }

    /// Horizontal unit normal of the wall plane.
    pub fn normal(&self) -> Point3 {
        let d = self.b - self.a;
        // d has zero z, so d x z is horizontal and nonzero.
        let n = Point3::new(d.y, -d.x, 0.0);
        n * (1.0 / n.norm())
    }

    /// Signed distance from the wall plane.
    pub fn signed_distance(&self, p: Point3) -> f64 {
        (p - self.a).dot(self.normal())
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// Orientation of the wall direction in the horizontal plane, radians in [0, π).
    pub fn azimuth(&self) -> f64 {
        let d = self.b - self.a;
        d.y.atan2(d.x).rem_euclid(std::f64::consts::PI)
    }

    /// Whether the specular point of the path `source → wall → target` lies
    /// within the recorded segment (and height, if bounded).
    pub fn specular_point_within(&self, source: Point3, target: Point3) -> bool {
        let ds = self.signed_distance(source);
        let dt = self.signed_distance(target);
        // source and target must face the same side of the wall
        if ds * dt <= 0.0 {
            return false;
        }
        let image = mirror_point(source, self);
        let di = -ds;
        let t = di / (di - dt);
        let q = image + (target - image) * t;
        let dir = self.b - self.a;
        let s = (q - self.a).dot(dir) / dir.dot(dir);
        if !(0.0..=1.0).contains(&s) {
            return false;
        }
        match self.height_m {
            Some(h) => q.z >= self.a.z && q.z <= self.a.z + h,
            None => true,
        }
    }
}

/// Reflection of `p` across the infinite vertical plane of `wall`.
pub fn mirror_point(p: Point3, wall: &WallSegment) -> Point3 {
    let n = wall.normal();
    p - n * (2.0 * (p - wall.a).dot(n))
}

/// Element-wise [`mirror_point`], index order preserved.
pub fn mirror_layout(layout: &ArrayLayout, wall: &WallSegment) -> ArrayLayout {
    ArrayLayout {
        label: format!("{}'", layout.label),
        elements: layout
            .elements
            .iter()
            .map(|&p| mirror_point(p, wall))
            .collect(),
    }
}

/// An image of the transmit array producing one specular multipath component.
/// `k = 1` is line of sight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorSource {
    pub k: usize,
    pub layout: ArrayLayout,
    pub reflection_coeff: Complex64,
    /// Wall that produced this image; `None` for line of sight.
    pub wall: Option<WallSegment>,
}

impl MirrorSource {
    pub fn line_of_sight(layout: &ArrayLayout) -> Self {
        MirrorSource {
            k: 1,
            layout: layout.clone(),
            reflection_coeff: Complex64::new(1.0, 0.0),
            wall: None,
        }
    }
}

/// Line of sight followed by one first-order image per wall, in wall order.
pub fn mirror_sources(layout: &ArrayLayout, walls: &[WallSegment]) -> Vec<MirrorSource> {
    let mut out = Vec::with_capacity(walls.len() + 1);
    out.push(MirrorSource::line_of_sight(layout));
    out.extend(walls.iter().enumerate().map(|(i, w)| MirrorSource {
        k: i + 2,
        layout: mirror_layout(layout, w),
        reflection_coeff: w.reflection_coeff,
        wall: Some(w.clone()),
    }));
    out
}
