//! Schematic cognitive map: landmark priors, fused object observations and
//! the flown trajectory on one top-down canvas, plus the text rationales and
//! search-coverage bookkeeping built on it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    bearing_and_distance, footprint, world_to_pixel, Compass, ImageDims, MapBounds, PixelCoord,
    Pose, Rect, WorldPoint,
};
use crate::perception::{PerceivedObject, CONFIDENCE_THRESHOLD};
use crate::vocab::{Color, ObjectClass};
use crate::world::LandmarkPrior;

/// Same-class observations closer than this are one map object.
pub const MAP_MERGE_RADIUS: f64 = 3.0;
pub const COVERAGE_CELL: f64 = 10.0;
/// Search region = anchor contour envelope dilated by this margin.
pub const SEARCH_MARGIN: f64 = 50.0;
pub const DEFAULT_CANVAS: u32 = 1024;

#[derive(Debug, Error, PartialEq)]
pub enum ScmError {
    #[error("landmark `{0}` extends outside the map bounds")]
    OutOfBounds(String),
    #[error("png encoding failed: {0}")]
    Encode(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapObject {
    pub position: WorldPoint,
    pub object_type: ObjectClass,
    pub color: Option<Color>,
    pub confidence: f64,
    pub first_seen_step: usize,
    /// Sum of merged confidences.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub pose: Pose,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub position: WorldPoint,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CognitiveMap {
    pub bounds: MapBounds,
    pub landmark_layer: Vec<LandmarkPrior>,
    pub object_layer: Vec<MapObject>,
    pub trajectory_layer: Vec<TrajectoryPoint>,
    pub annotations: Vec<Annotation>,
}

impl CognitiveMap {
    pub fn new(priors: &[LandmarkPrior], bounds: &MapBounds) -> Result<Self, ScmError> {
        let rect = bounds.rect();
        for p in priors {
            if !p.contour.vertices().iter().all(|v| rect.contains(v)) {
                return Err(ScmError::OutOfBounds(p.name.clone()));
            }
        }
        Ok(CognitiveMap {
            bounds: *bounds,
            landmark_layer: priors.to_vec(),
            object_layer: Vec::new(),
            trajectory_layer: Vec::new(),
            annotations: Vec::new(),
        })
    }

    /// Appends the pose and folds the increment into the object layer.
    pub fn update(&mut self, increment: &[PerceivedObject], pose: &Pose, step: usize) {
        self.trajectory_layer
            .push(TrajectoryPoint { pose: *pose, step });
        for obs in increment {
            let nearest = self
                .object_layer
                .iter()
                .enumerate()
                .filter(|(_, o)| o.object_type == obs.object_type)
                .map(|(i, o)| (i, o.position.distance(&obs.position)))
                .filter(|(_, d)| *d <= MAP_MERGE_RADIUS)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match nearest {
                Some((i, _)) => {
                    let o = &mut self.object_layer[i];
                    let w = o.weight + obs.confidence;
                    o.position = WorldPoint::new(
                        (o.weight * o.position.x + obs.confidence * obs.position.x) / w,
                        (o.weight * o.position.y + obs.confidence * obs.position.y) / w,
                    );
                    o.weight = w;
                    o.confidence = o.confidence.max(obs.confidence);
                }
                None => self.object_layer.push(MapObject {
                    position: obs.position,
                    object_type: obs.object_type,
                    color: obs.color,
                    confidence: obs.confidence.max(CONFIDENCE_THRESHOLD),
                    first_seen_step: step,
                    weight: obs.confidence,
                }),
            }
        }
    }

    pub fn annotate(&mut self, position: WorldPoint, text: impl Into<String>) {
        self.annotations.push(Annotation {
            position,
            text: text.into(),
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }

    /// Pixel centers of the landmark labels on a `canvas`-sized render.
    pub fn label_anchors(&self, canvas: u32) -> Vec<PixelCoord> {
        let b = self.bounds.fitted_to(canvas);
        self.landmark_layer
            .iter()
            .map(|l| world_to_pixel(&l.contour.centroid(), &b).pixel)
            .collect()
    }

    pub fn render(&self, pose: &Pose) -> Rendered {
        self.render_sized(pose, DEFAULT_CANVAS)
    }

    pub fn render_sized(&self, pose: &Pose, canvas: u32) -> Rendered {
        let b = self.bounds.fitted_to(canvas);
        let mut r = Raster::new(
            b.raster_width() as u32,
            b.raster_height() as u32,
            BACKGROUND,
        );
        let px = |p: &WorldPoint| world_to_pixel(p, &b).pixel;

        // 100 m grid
        let step = 100.0;
        let mut x = (self.bounds.x_min / step).ceil() * step;
        while x <= self.bounds.x_max {
            let a = px(&WorldPoint::new(x, self.bounds.y_min));
            let c = px(&WorldPoint::new(x, self.bounds.y_max));
            r.line(a, c, GRID);
            x += step;
        }
        let mut y = (self.bounds.y_min / step).ceil() * step;
        while y <= self.bounds.y_max {
            let a = px(&WorldPoint::new(self.bounds.x_min, y));
            let c = px(&WorldPoint::new(self.bounds.x_max, y));
            r.line(a, c, GRID);
            y += step;
        }

        for lm in &self.landmark_layer {
            let v = lm.contour.vertices();
            for i in 0..v.len() {
                r.line(px(&v[i]), px(&v[(i + 1) % v.len()]), LANDMARK);
            }
        }
        for (i, anchor) in self.label_anchors(canvas).iter().enumerate() {
            r.text_centered(*anchor, &(i + 1).to_string(), LABEL);
        }
        for o in &self.object_layer {
            r.fill_square(px(&o.position), 3, class_rgb(o.object_type));
        }
        for w in self.trajectory_layer.windows(2) {
            r.line(
                px(&w[0].pose.position()),
                px(&w[1].pose.position()),
                TRAJECTORY,
            );
        }
        let here = px(&pose.position());
        r.fill_square(here, 4, POSE);
        let (s, c) = pose.theta.to_radians().sin_cos();
        let tip = PixelCoord {
            col: here.col + (16.0 * s).round() as i64,
            row: here.row - (16.0 * c).round() as i64,
        };
        r.line(here, tip, POSE);

        Rendered {
            raster: r,
            legend: self.legend(pose),
        }
    }

    fn legend(&self, pose: &Pose) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "pose ({:.1}, {:.1}) alt {:.0} m heading {:.0} deg",
            pose.x, pose.y, pose.z, pose.theta
        );
        for (i, l) in self.landmark_layer.iter().enumerate() {
            let _ = writeln!(s, "{}: {}", i + 1, l.name);
        }
        for class in ObjectClass::ALL {
            let n = self
                .object_layer
                .iter()
                .filter(|o| o.object_type == *class)
                .count();
            if n > 0 {
                let [r, g, b] = class_rgb(*class);
                let _ = writeln!(s, "{class} #{r:02x}{g:02x}{b:02x} x{n}");
            }
        }
        s
    }
}

const BACKGROUND: [u8; 3] = [245, 244, 238];
const GRID: [u8; 3] = [215, 215, 210];
const LANDMARK: [u8; 3] = [30, 60, 150];
const LABEL: [u8; 3] = [20, 20, 20];
const TRAJECTORY: [u8; 3] = [220, 40, 40];
const POSE: [u8; 3] = [200, 0, 160];

fn class_rgb(c: ObjectClass) -> [u8; 3] {
    match c {
        ObjectClass::Vehicle => [230, 120, 0],
        ObjectClass::Road => [90, 90, 90],
        ObjectClass::Building => [120, 70, 40],
        ObjectClass::ParkingLot => [70, 110, 170],
        ObjectClass::GreenSpace => [60, 170, 70],
        ObjectClass::Tree => [20, 110, 30],
        ObjectClass::SportsField => [170, 200, 60],
    }
}

/// 3x5 bitmap digits, rows top to bottom, 3 low bits per row.
const DIGITS: [[u8; 5]; 10] = [
    [7, 5, 5, 5, 7],
    [2, 6, 2, 2, 7],
    [7, 1, 7, 4, 7],
    [7, 1, 7, 1, 7],
    [5, 5, 7, 1, 1],
    [7, 4, 7, 1, 7],
    [7, 4, 7, 5, 7],
    [7, 1, 1, 1, 1],
    [7, 5, 7, 5, 7],
    [7, 5, 7, 1, 7],
];

/// Render output: raster plus the UTF-8 legend sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub raster: Raster,
    pub legend: String,
}

/// 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub rgb: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, fill: [u8; 3]) -> Self {
        let mut rgb = Vec::with_capacity((width * height * 3) as usize);
        for _ in 0..width * height {
            rgb.extend_from_slice(&fill);
        }
        Raster { width, height, rgb }
    }

    pub fn get(&self, col: u32, row: u32) -> [u8; 3] {
        let i = ((row * self.width + col) * 3) as usize;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    fn put(&mut self, col: i64, row: i64, c: [u8; 3]) {
        if col < 0 || row < 0 || col >= self.width as i64 || row >= self.height as i64 {
            return;
        }
        let i = ((row as u32 * self.width + col as u32) * 3) as usize;
        self.rgb[i..i + 3].copy_from_slice(&c);
    }

    fn line(&mut self, a: PixelCoord, b: PixelCoord, c: [u8; 3]) {
        // Bresenham
        let (mut x, mut y) = (a.col, a.row);
        let dx = (b.col - a.col).abs();
        let dy = -(b.row - a.row).abs();
        let sx = if a.col < b.col { 1 } else { -1 };
        let sy = if a.row < b.row { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.put(x, y, c);
            if x == b.col && y == b.row {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn fill_square(&mut self, center: PixelCoord, half: i64, c: [u8; 3]) {
        for dy in -half..=half {
            for dx in -half..=half {
                self.put(center.col + dx, center.row + dy, c);
            }
        }
    }

    /// Digits at 2x scale, centered on `center`.
    fn text_centered(&mut self, center: PixelCoord, text: &str, c: [u8; 3]) {
        let digits: Vec<usize> = text
            .chars()
            .filter_map(|ch| ch.to_digit(10).map(|d| d as usize))
            .collect();
        let w = digits.len() as i64 * 8 - 2;
        let left = center.col - w / 2;
        let top = center.row - 5;
        for (k, d) in digits.iter().enumerate() {
            for (ry, bits) in DIGITS[*d].iter().enumerate() {
                for rx in 0..3 {
                    if bits & (4 >> rx) != 0 {
                        let x0 = left + k as i64 * 8 + rx * 2;
                        let y0 = top + ry as i64 * 2;
                        for (ox, oy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                            self.put(x0 + ox, y0 + oy, c);
                        }
                    }
                }
            }
        }
    }

    pub fn to_png(&self) -> Result<Vec<u8>, ScmError> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width, self.height);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc
                .write_header()
                .map_err(|e| ScmError::Encode(e.to_string()))?;
            w.write_image_data(&self.rgb)
                .map_err(|e| ScmError::Encode(e.to_string()))?;
        }
        Ok(out)
    }
}

/// Distance/bearing/sector text toward a landmark centroid.
pub fn nav_rationale(pose: &Pose, landmark: &LandmarkPrior) -> String {
    let c = landmark.contour.centroid();
    let (d, bearing) = bearing_and_distance(&pose.position(), &c);
    if d == 0.0 {
        return format!("{}: 0.0 m, here", landmark.name);
    }
    let deg = (bearing.round() as i64).rem_euclid(360);
    format!(
        "{}: {:.1} m, bearing {}°, {}",
        landmark.name,
        d,
        deg,
        Compass::from_bearing(bearing).name()
    )
}

/// Exploration hint: pose, visual field, explored share and where to go next.
pub fn search_rationale(pose: &Pose, coverage: &CoverageGrid, dims: ImageDims) -> String {
    let fp = footprint(pose, dims);
    let pct = (coverage.coverage() * 100.0 + 1e-9).floor() as i64;
    let mut s = format!(
        "pose ({:.1}, {:.1}) heading {:.0}°; view ({:.1}, {:.1})-({:.1}, {:.1}); {}% explored; ",
        pose.x, pose.y, pose.theta, fp.min_x, fp.min_y, fp.max_x, fp.max_y, pct
    );
    match coverage.suggested_sector(&pose.position()) {
        Some(c) => {
            let _ = write!(s, "largest unexplored area to the {}", c.name());
        }
        None => s.push_str("stop-search"),
    }
    s
}

/// 10 m cells over the search region; a cell is covered once its center has
/// fallen inside some footprint. Cells are numbered row-major from the
/// north-west corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub region: Rect,
    pub cell: f64,
    pub cols: usize,
    pub rows: usize,
    pub covered: Vec<bool>,
}

impl CoverageGrid {
    pub fn new(region: Rect, cell: f64) -> Self {
        let cols = ((region.width() / cell).ceil() as usize).max(1);
        let rows = ((region.height() / cell).ceil() as usize).max(1);
        CoverageGrid {
            region,
            cell,
            cols,
            rows,
            covered: vec![false; cols * rows],
        }
    }

    /// Anchor envelope dilated by [`SEARCH_MARGIN`], clipped to the map.
    pub fn for_anchor(anchor: &LandmarkPrior, bounds: &MapBounds) -> Self {
        let region = anchor
            .contour
            .envelope()
            .expanded(SEARCH_MARGIN)
            .intersection(&bounds.rect());
        CoverageGrid::new(region, COVERAGE_CELL)
    }

    pub fn len(&self) -> usize {
        self.covered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covered.is_empty()
    }

    /// Center of cell `i`; cells on the south/east edge may overhang the region.
    pub fn cell_center(&self, i: usize) -> WorldPoint {
        let (r, c) = (i / self.cols, i % self.cols);
        WorldPoint::new(
            self.region.min_x + (c as f64 + 0.5) * self.cell,
            self.region.max_y - (r as f64 + 0.5) * self.cell,
        )
    }

    pub fn mark(&mut self, fp: &Rect) -> usize {
        let mut newly = 0;
        for i in 0..self.covered.len() {
            if !self.covered[i] && fp.contains(&self.cell_center(i)) {
                self.covered[i] = true;
                newly += 1;
            }
        }
        newly
    }

    /// Cell holding `p`, if inside the grid.
    pub fn cell_at(&self, p: &WorldPoint) -> Option<usize> {
        let c = ((p.x - self.region.min_x) / self.cell).floor();
        let r = ((self.region.max_y - p.y) / self.cell).floor();
        if c < 0.0 || r < 0.0 || c >= self.cols as f64 || r >= self.rows as f64 {
            return None;
        }
        Some(r as usize * self.cols + c as usize)
    }

    /// Whether the cell holding `p` is covered; points off the grid count as covered.
    pub fn is_covered_at(&self, p: &WorldPoint) -> bool {
        self.cell_at(p).is_none_or(|i| self.covered[i])
    }

    pub fn coverage(&self) -> f64 {
        self.covered.iter().filter(|c| **c).count() as f64 / self.covered.len() as f64
    }

    pub fn uncovered(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.covered.len()).filter(|i| !self.covered[*i])
    }

    /// Uncovered cell whose center is nearest to `p`; ties go to the lower
    /// row-major index.
    pub fn nearest_uncovered(&self, p: &WorldPoint) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for i in self.uncovered() {
            let d = self.cell_center(i).distance_sq(p);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }

    /// Sector from `p` toward the centroid of the uncovered cells; none when
    /// everything is covered.
    pub fn suggested_sector(&self, p: &WorldPoint) -> Option<Compass> {
        let cells: Vec<WorldPoint> = self.uncovered().map(|i| self.cell_center(i)).collect();
        if cells.is_empty() {
            return None;
        }
        let n = cells.len() as f64;
        let c = WorldPoint::new(
            cells.iter().map(|q| q.x).sum::<f64>() / n,
            cells.iter().map(|q| q.y).sum::<f64>() / n,
        );
        let (_, bearing) = bearing_and_distance(p, &c);
        Some(Compass::from_bearing(bearing))
    }
}
