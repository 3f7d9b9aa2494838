//! Coordinate frames, polygon math and camera-footprint geometry.
//!
//! Conventions used throughout the crate:
//! - world frame: `x` meters east, `y` meters north;
//! - headings and bearings: degrees clockwise from north, normalized to `[0, 360)`;
//! - raster frame: `col` grows east, `row` grows south, origin at `(x_min, y_max)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Ground sample distance per meter of altitude (m/px per m).
pub const GSD_PER_METER: f64 = 2.08e-3;

const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid map bounds: {0}")]
    InvalidBounds(String),
    #[error("pixel ({col}, {row}) outside {width}x{height} raster")]
    PixelOutOfRaster {
        col: i64,
        row: i64,
        width: i64,
        height: i64,
    },
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon is self-intersecting (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("altitude must be positive, got {0}")]
    NonPositiveAltitude(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &WorldPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &WorldPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn translate(&self, dx: f64, dy: f64) -> WorldPoint {
        WorldPoint::new(self.x + dx, self.y + dy)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for WorldPoint {
    fn from(v: [f64; 2]) -> Self {
        WorldPoint::new(v[0], v[1])
    }
}

impl From<WorldPoint> for [f64; 2] {
    fn from(p: WorldPoint) -> Self {
        [p.x, p.y]
    }
}

/// A point expressed in the camera frame (meters, before yaw rotation).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct CameraPoint {
    pub x: f64,
    pub y: f64,
}

impl CameraPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl From<[f64; 2]> for CameraPoint {
    fn from(v: [f64; 2]) -> Self {
        CameraPoint::new(v[0], v[1])
    }
}

impl From<CameraPoint> for [f64; 2] {
    fn from(p: CameraPoint) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelCoord {
    pub col: i64,
    pub row: i64,
}

/// Result of projecting a world point into the raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelProjection {
    pub pixel: PixelCoord,
    /// The point fell outside the raster and was clamped to its border.
    pub clamped: bool,
}

/// Axis-aligned world rectangle, serialized as `[xmin, ymin, xmax, ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl From<[f64; 4]> for Rect {
    fn from(v: [f64; 4]) -> Self {
        Rect::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Rect> for [f64; 4] {
    fn from(r: Rect) -> Self {
        [r.min_x, r.min_y, r.max_x, r.max_y]
    }
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x,
            min_y,
            max_x,
            max_y,
        }
    }

    pub fn centered(center: WorldPoint, width: f64, height: f64) -> Self {
        Rect::new(
            center.x - width / 2.0,
            center.y - height / 2.0,
            center.x + width / 2.0,
            center.y + height / 2.0,
        )
    }

    pub fn envelope<'a>(points: impl IntoIterator<Item = &'a WorldPoint>) -> Option<Rect> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut r = Rect::new(first.x, first.y, first.x, first.y);
        for p in it {
            r.min_x = r.min_x.min(p.x);
            r.min_y = r.min_y.min(p.y);
            r.max_x = r.max_x.max(p.x);
            r.max_y = r.max_y.max(p.y);
        }
        Some(r)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> WorldPoint {
        WorldPoint::new(
            (self.min_x + self.max_x) / 2.0,
            (self.min_y + self.max_y) / 2.0,
        )
    }

    pub fn is_empty(&self) -> bool {
        !(self.min_x <= self.max_x && self.min_y <= self.max_y)
    }

    /// Closed containment.
    pub fn contains(&self, p: &WorldPoint) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }

    /// Closed intersection test.
    pub fn intersects(&self, other: &Rect) -> bool {
        !self.is_empty()
            && !other.is_empty()
            && self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    pub fn expanded(&self, margin: f64) -> Rect {
        Rect::new(
            self.min_x - margin,
            self.min_y - margin,
            self.max_x + margin,
            self.max_y + margin,
        )
    }

    pub fn intersection(&self, other: &Rect) -> Rect {
        Rect::new(
            self.min_x.max(other.min_x),
            self.min_y.max(other.min_y),
            self.max_x.min(other.max_x),
            self.max_y.min(other.max_y),
        )
    }

    /// Euclidean distance from `p` to the closed rectangle (0 inside).
    pub fn distance_to(&self, p: &WorldPoint) -> f64 {
        let dx = (self.min_x - p.x).max(0.0).max(p.x - self.max_x);
        let dy = (self.min_y - p.y).max(0.0).max(p.y - self.max_y);
        dx.hypot(dy)
    }

    pub fn clamp_point(&self, p: &WorldPoint) -> WorldPoint {
        WorldPoint::new(
            p.x.clamp(self.min_x, self.max_x),
            p.y.clamp(self.min_y, self.max_y),
        )
    }

    pub fn corners(&self) -> [WorldPoint; 4] {
        [
            WorldPoint::new(self.min_x, self.min_y),
            WorldPoint::new(self.max_x, self.min_y),
            WorldPoint::new(self.max_x, self.max_y),
            WorldPoint::new(self.min_x, self.max_y),
        ]
    }
}

/// Map extent plus raster scale `scale` (pixels per meter).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapBounds {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub scale: f64,
}

impl MapBounds {
    pub fn new(
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        scale: f64,
    ) -> Result<Self, GeometryError> {
        let b = Self {
            x_min,
            y_min,
            x_max,
            y_max,
            scale,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let vals = [self.x_min, self.y_min, self.x_max, self.y_max, self.scale];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if self.x_min >= self.x_max {
            return Err(GeometryError::InvalidBounds(format!(
                "x_min {} >= x_max {}",
                self.x_min, self.x_max
            )));
        }
        if self.y_min >= self.y_max {
            return Err(GeometryError::InvalidBounds(format!(
                "y_min {} >= y_max {}",
                self.y_min, self.y_max
            )));
        }
        if self.scale <= 0.0 {
            return Err(GeometryError::InvalidBounds(format!(
                "scale {} must be positive",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x_min, self.y_min, self.x_max, self.y_max)
    }

    pub fn width_m(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height_m(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Raster width in pixels; the far border `x_max` maps onto the last column.
    pub fn raster_width(&self) -> i64 {
        (self.width_m() * self.scale).round() as i64 + 1
    }

    pub fn raster_height(&self) -> i64 {
        (self.height_m() * self.scale).round() as i64 + 1
    }

    pub fn with_scale(&self, scale: f64) -> MapBounds {
        MapBounds { scale, ..*self }
    }

    /// Same extent, scale chosen so the larger side spans `canvas_px` pixels.
    pub fn fitted_to(&self, canvas_px: u32) -> MapBounds {
        let longest = self.width_m().max(self.height_m());
        self.with_scale((canvas_px.max(2) - 1) as f64 / longest)
    }
}

pub fn world_to_pixel(p: &WorldPoint, b: &MapBounds) -> PixelProjection {
    let col = ((p.x - b.x_min) * b.scale).round() as i64;
    let row = ((b.y_max - p.y) * b.scale).round() as i64;
    let cc = col.clamp(0, b.raster_width() - 1);
    let rc = row.clamp(0, b.raster_height() - 1);
    PixelProjection {
        pixel: PixelCoord { col: cc, row: rc },
        clamped: cc != col || rc != row,
    }
}

pub fn pixel_to_world(px: &PixelCoord, b: &MapBounds) -> Result<WorldPoint, GeometryError> {
    let (w, h) = (b.raster_width(), b.raster_height());
    if px.col < 0 || px.row < 0 || px.col >= w || px.row >= h {
        return Err(GeometryError::PixelOutOfRaster {
            col: px.col,
            row: px.row,
            width: w,
            height: h,
        });
    }
    Ok(WorldPoint::new(
        b.x_min + px.col as f64 / b.scale,
        b.y_max - px.row as f64 / b.scale,
    ))
}

pub fn normalize_degrees(theta: f64) -> f64 {
    let t = theta.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if t >= 360.0 {
        0.0
    } else {
        t + 0.0
    }
}

/// Agent pose: planar position, altitude and heading (degrees clockwise from north).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            z,
            theta: normalize_degrees(theta),
        }
    }

    pub fn position(&self) -> WorldPoint {
        WorldPoint::new(self.x, self.y)
    }
}

/// Sign convention for the camera-to-world transform.
///
/// `Printed` keeps the leading negation `-R(theta)` of the published transform;
/// `Unnegated` uses `+R(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    #[default]
    Printed,
    Unnegated,
}

impl SignConvention {
    fn factor(self) -> f64 {
        match self {
            SignConvention::Printed => -1.0,
            SignConvention::Unnegated => 1.0,
        }
    }
}

/// `(x_w, y_w) = s * R(theta) (x_c, y_c) + (x_p, y_p)` with `s = -1` under the printed convention.
pub fn camera_to_world(pc: &CameraPoint, pose: &Pose, convention: SignConvention) -> WorldPoint {
    let (sin, cos) = pose.theta.to_radians().sin_cos();
    let s = convention.factor();
    WorldPoint::new(
        s * (cos * pc.x - sin * pc.y) + pose.x,
        s * (sin * pc.x + cos * pc.y) + pose.y,
    )
}

/// Exact inverse of [`camera_to_world`].
pub fn world_to_camera(p: &WorldPoint, pose: &Pose, convention: SignConvention) -> CameraPoint {
    let (sin, cos) = pose.theta.to_radians().sin_cos();
    let s = convention.factor();
    let dx = (p.x - pose.x) * s;
    let dy = (p.y - pose.y) * s;
    // R(theta)^T
    CameraPoint::new(cos * dx + sin * dy, -sin * dx + cos * dy)
}

/// Simple polygon, implicitly closed. Construction validates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<WorldPoint>", into = "Vec<WorldPoint>")]
pub struct Polygon {
    vertices: Vec<WorldPoint>,
}

impl TryFrom<Vec<WorldPoint>> for Polygon {
    type Error = GeometryError;
    fn try_from(v: Vec<WorldPoint>) -> Result<Self, Self::Error> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<WorldPoint> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

fn orient(a: &WorldPoint, b: &WorldPoint, c: &WorldPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: &WorldPoint, b: &WorldPoint, p: &WorldPoint) -> bool {
    p.x >= a.x.min(b.x) - BOUNDARY_EPS
        && p.x <= a.x.max(b.x) + BOUNDARY_EPS
        && p.y >= a.y.min(b.y) - BOUNDARY_EPS
        && p.y <= a.y.max(b.y) + BOUNDARY_EPS
}

fn segments_intersect(a: &WorldPoint, b: &WorldPoint, c: &WorldPoint, d: &WorldPoint) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Distance from `p` to segment `ab`.
pub fn segment_distance(p: &WorldPoint, a: &WorldPoint, b: &WorldPoint) -> f64 {
    let (vx, vy) = (b.x - a.x, b.y - a.y);
    let len_sq = vx * vx + vy * vy;
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * vx + (p.y - a.y) * vy) / len_sq).clamp(0.0, 1.0);
    p.distance(&WorldPoint::new(a.x + t * vx, a.y + t * vy))
}

impl Polygon {
    pub fn new(vertices: Vec<WorldPoint>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let poly = Polygon { vertices };
        let n = poly.vertices.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // skip edges sharing a vertex
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = poly.edge(i);
                let (c, d) = poly.edge(j);
                if segments_intersect(a, b, c, d) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        if poly.signed_area().abs() < 1e-12 {
            return Err(GeometryError::ZeroArea);
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle polygon.
    pub fn rectangle(r: &Rect) -> Result<Self, GeometryError> {
        Polygon::new(r.corners().to_vec())
    }

    pub fn vertices(&self) -> &[WorldPoint] {
        &self.vertices
    }

    fn edge(&self, i: usize) -> (&WorldPoint, &WorldPoint) {
        let n = self.vertices.len();
        (&self.vertices[i], &self.vertices[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (&WorldPoint, &WorldPoint)> {
        (0..self.vertices.len()).map(move |i| self.edge(i))
    }

    /// Shoelace signed area (positive for counter-clockwise vertex order).
    pub fn signed_area(&self) -> f64 {
        self.edges()
            .map(|(a, b)| a.x * b.y - b.x * a.y)
            .sum::<f64>()
            / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Area-weighted centroid.
    pub fn centroid(&self) -> WorldPoint {
        // shift to the first vertex to limit cancellation on far-from-origin polygons
        let o = self.vertices[0];
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for (a, b) in self.edges() {
            let (ax, ay) = (a.x - o.x, a.y - o.y);
            let (bx, by) = (b.x - o.x, b.y - o.y);
            let cross = ax * by - bx * ay;
            a2 += cross;
            cx += (ax + bx) * cross;
            cy += (ay + by) * cross;
        }
        WorldPoint::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
    }

    pub fn envelope(&self) -> Rect {
        Rect::envelope(&self.vertices).expect("polygon has vertices")
    }

    /// Ray casting; points on the boundary count as inside.
    pub fn contains(&self, p: &WorldPoint) -> bool {
        if self.boundary_distance(p) <= BOUNDARY_EPS {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, p: &WorldPoint) -> f64 {
        self.edges()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// 0 inside, boundary distance outside.
    pub fn distance_to(&self, p: &WorldPoint) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }

    pub fn nearest_vertex_distance(&self, p: &WorldPoint) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|v| v.translate(dx, dy)).collect(),
        }
    }
}

pub fn polygon_centroid(poly: &Polygon) -> WorldPoint {
    poly.centroid()
}

pub fn point_in_polygon(p: &WorldPoint, poly: &Polygon) -> bool {
    poly.contains(p)
}

/// Euclidean distance and compass bearing (degrees clockwise from north) from `from` to `to`.
/// Coincident points give bearing 0.
pub fn bearing_and_distance(from: &WorldPoint, to: &WorldPoint) -> (f64, f64) {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let dist = dx.hypot(dy);
    if dist == 0.0 {
        return (0.0, 0.0);
    }
    (dist, normalize_degrees(dx.atan2(dy).to_degrees()))
}

/// Eight-way compass sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compass {
    North,
    Northeast,
    East,
    Southeast,
    South,
    Southwest,
    West,
    Northwest,
}

impl Compass {
    pub const ALL: [Compass; 8] = [
        Compass::North,
        Compass::Northeast,
        Compass::East,
        Compass::Southeast,
        Compass::South,
        Compass::Southwest,
        Compass::West,
        Compass::Northwest,
    ];

    /// 45-degree sectors centered on the compass points. Sector boundaries
    /// (22.5 + 45k) belong to the diagonal sector.
    pub fn from_bearing(bearing: f64) -> Compass {
        let b = normalize_degrees(bearing);
        let k = ((b + 22.5) / 45.0).floor() as usize % 8;
        let c = Compass::ALL[k];
        let lower = (k as f64) * 45.0 - 22.5;
        // exact lower boundary of a cardinal sector goes to the diagonal before it
        if k % 2 == 0 && (b - normalize_degrees(lower)).abs() == 0.0 {
            return Compass::ALL[(k + 7) % 8];
        }
        c
    }

    pub fn bearing(self) -> f64 {
        Compass::ALL.iter().position(|c| *c == self).unwrap() as f64 * 45.0
    }

    pub fn name(self) -> &'static str {
        match self {
            Compass::North => "North",
            Compass::Northeast => "Northeast",
            Compass::East => "East",
            Compass::Southeast => "Southeast",
            Compass::South => "South",
            Compass::Southwest => "Southwest",
            Compass::West => "West",
            Compass::Northwest => "Northwest",
        }
    }

    pub fn parse(s: &str) -> Option<Compass> {
        let t = s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
        Some(match t.as_str() {
            "n" | "north" => Compass::North,
            "ne" | "northeast" => Compass::Northeast,
            "e" | "east" => Compass::East,
            "se" | "southeast" => Compass::Southeast,
            "s" | "south" => Compass::South,
            "sw" | "southwest" => Compass::Southwest,
            "w" | "west" => Compass::West,
            "nw" | "northwest" => Compass::Northwest,
            _ => return None,
        })
    }

    /// Unit displacement (east, north) for this direction.
    pub fn unit(self) -> (f64, f64) {
        let d = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Compass::North => (0.0, 1.0),
            Compass::Northeast => (d, d),
            Compass::East => (1.0, 0.0),
            Compass::Southeast => (d, -d),
            Compass::South => (0.0, -1.0),
            Compass::Southwest => (-d, -d),
            Compass::West => (-1.0, 0.0),
            Compass::Northwest => (-d, d),
        }
    }
}

pub fn gsd(altitude: f64) -> Result<f64, GeometryError> {
    if !(altitude > 0.0) || !altitude.is_finite() {
        return Err(GeometryError::NonPositiveAltitude(altitude));
    }
    Ok(GSD_PER_METER * altitude)
}

/// Camera image size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

impl Default for ImageDims {
    fn default() -> Self {
        ImageDims {
            width: 1000,
            height: 1000,
        }
    }
}

/// Ground rectangle seen by the nadir camera: the `dims * gsd(z)` camera
/// rectangle rotated by the heading, then bounded by its axis-aligned envelope.
pub fn footprint(pose: &Pose, dims: ImageDims) -> Rect {
    let g = GSD_PER_METER * pose.z.max(f64::MIN_POSITIVE);
    let hw = dims.width as f64 * g / 2.0;
    let hh = dims.height as f64 * g / 2.0;
    let (sin, cos) = pose.theta.to_radians().sin_cos();
    let ex = (hw * cos).abs() + (hh * sin).abs();
    let ey = (hw * sin).abs() + (hh * cos).abs();
    Rect::new(pose.x - ex, pose.y - ey, pose.x + ex, pose.y + ey)
}
