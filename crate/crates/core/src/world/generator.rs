use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    exact_goal_matches, GoalSpec, LandmarkPrior, RelationConstraint, Scenario, SceneObject,
    WorldError,
};
use crate::exec::{map_ordered, ExecMode};
use crate::geometry::{MapBounds, Polygon, Pose, Rect, WorldPoint};
use crate::hsg::{landmark_edge, LANDMARK_EDGE_RADIUS};
use crate::vocab::{Color, ObjectClass, Relation};

const ROAD_NAMES: &[&str] = &[
    "Davey Road",
    "Bragg Road",
    "Main Street",
    "Elm Street",
    "Harbor Lane",
    "Mill Road",
    "Station Road",
    "King Street",
    "Oak Avenue",
    "Bridge Street",
    "Quarry Lane",
    "Park Road",
];

const AREA_NAMES: &[&str] = &[
    "Main Plaza",
    "Riverside Park",
    "Central Market",
    "North Yard",
    "Elm Park",
    "Union Square",
    "Civic Center",
    "Cedar Court",
    "West Depot",
    "Grand Hall",
    "Lakeside Green",
    "Old Mill",
    "Fairview Campus",
    "Harbor Terminal",
];

/// Minimum spacing between any two objects.
const OBJECT_SPACING: f64 = 5.0;
/// Objects sharing class and color are kept further apart than the merge window.
const TWIN_SPACING: f64 = 35.0;
const LANDMARK_GAP: f64 = 60.0;
const START_ALTITUDE: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    /// Start-to-target distance band in meters, `[lo, hi)`.
    pub fn band(self) -> (f64, f64) {
        match self {
            Difficulty::Easy => (80.0, 150.0),
            Difficulty::Medium => (150.0, 300.0),
            Difficulty::Hard => (300.0, 450.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Difficulty {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            other => Err(format!(
                "unknown difficulty `{other}`, allowed: easy, medium, hard"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub difficulty: Difficulty,
    /// Side of the square map in meters.
    pub map_size: f64,
    /// Pixels per meter for the scenario raster.
    pub scale: f64,
    pub landmarks: usize,
    /// Objects scattered near each landmark.
    pub objects_per_landmark: usize,
    /// Objects scattered uniformly over the map.
    pub scattered_objects: usize,
    /// Same-class, different-color objects placed next to the target.
    pub near_duplicates: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            difficulty: Difficulty::Easy,
            map_size: 1000.0,
            scale: 1.0,
            landmarks: 12,
            objects_per_landmark: 3,
            scattered_objects: 40,
            near_duplicates: 2,
        }
    }
}

impl GeneratorConfig {
    pub fn with_difficulty(difficulty: Difficulty) -> Self {
        GeneratorConfig {
            difficulty,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let (_, hi) = self.difficulty.band();
        if !(self.map_size.is_finite() && self.map_size >= 2.0 * hi) {
            return Err(WorldError::invalid(
                "map_size",
                format!("map must be at least {} m for this difficulty", 2.0 * hi),
            ));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(WorldError::invalid("scale", "scale must be positive"));
        }
        if self.landmarks == 0 {
            return Err(WorldError::invalid(
                "landmarks",
                "need at least one landmark",
            ));
        }
        // each landmark reserves roughly a (45 + gap)^2 cell
        let landmark_cell = (45.0 + LANDMARK_GAP).powi(2);
        let usable = (self.map_size - 200.0).max(0.0).powi(2);
        if self.landmarks as f64 * landmark_cell > 0.5 * usable {
            return Err(WorldError::Unsatisfiable(format!(
                "{} landmarks do not fit in a {} m map",
                self.landmarks, self.map_size
            )));
        }
        let objects = self.landmarks * self.objects_per_landmark
            + self.scattered_objects
            + self.near_duplicates
            + 2;
        let object_cell = std::f64::consts::PI * OBJECT_SPACING * OBJECT_SPACING;
        if objects as f64 * object_cell > 0.25 * self.map_size * self.map_size {
            return Err(WorldError::Unsatisfiable(format!(
                "{objects} objects do not fit in a {} m map",
                self.map_size
            )));
        }
        if self.near_duplicates >= Color::ALL.len() {
            return Err(WorldError::Unsatisfiable(
                "more near-duplicates than distinct colors".into(),
            ));
        }
        Ok(())
    }
}

struct Builder {
    rng: ChaCha8Rng,
    bounds: MapBounds,
    landmarks: Vec<LandmarkPrior>,
    objects: Vec<SceneObject>,
}

impl Builder {
    fn inner_rect(&self, margin: f64) -> Rect {
        self.bounds.rect().expanded(-margin)
    }

    fn uniform_point(&mut self, r: &Rect) -> WorldPoint {
        WorldPoint::new(
            self.rng.random_range(r.min_x..=r.max_x),
            self.rng.random_range(r.min_y..=r.max_y),
        )
    }

    fn road(&mut self, center: WorldPoint) -> Polygon {
        let len = self.rng.random_range(40.0..60.0);
        let wid = self.rng.random_range(8.0..10.0);
        let angle = (self.rng.random_range(0..12) as f64 * 15.0).to_radians();
        let (s, c) = angle.sin_cos();
        let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        let v = corners
            .iter()
            .map(|(a, b)| {
                let (dx, dy) = (a * len / 2.0, b * wid / 2.0);
                WorldPoint::new(center.x + dx * c - dy * s, center.y + dx * s + dy * c)
            })
            .collect();
        Polygon::new(v).expect("rectangle is valid")
    }

    fn area(&mut self, center: WorldPoint) -> Polygon {
        let n = self.rng.random_range(4..=7);
        let radius = self.rng.random_range(9.0..20.0);
        let phase = self.rng.random_range(0.0..std::f64::consts::TAU);
        let v = (0..n)
            .map(|i| {
                let a = phase + std::f64::consts::TAU * i as f64 / n as f64;
                let r = radius * self.rng.random_range(0.85..1.15);
                WorldPoint::new(center.x + r * a.sin(), center.y + r * a.cos())
            })
            .collect();
        Polygon::new(v).expect("angle-sorted star polygon is simple")
    }

    fn place_landmarks(&mut self, count: usize) -> Result<(), WorldError> {
        let mut roads: Vec<&str> = ROAD_NAMES.to_vec();
        let mut areas: Vec<&str> = AREA_NAMES.to_vec();
        roads.shuffle(&mut self.rng);
        areas.shuffle(&mut self.rng);
        let region = self.inner_rect(120.0);
        for _ in 0..count {
            let is_road = self.rng.random_bool(0.4);
            let name = match (is_road, roads.is_empty(), areas.is_empty()) {
                (true, false, _) | (false, false, true) => roads.pop().unwrap().to_string(),
                (_, _, false) => areas.pop().unwrap().to_string(),
                _ => format!("Landmark {}", self.landmarks.len() + 1),
            };
            let road_name = ROAD_NAMES.contains(&name.as_str());
            let mut placed = false;
            for _ in 0..400 {
                let c = self.uniform_point(&region);
                let contour = if road_name {
                    self.road(c)
                } else {
                    self.area(c)
                };
                let env = contour.envelope().expanded(LANDMARK_GAP);
                if self
                    .landmarks
                    .iter()
                    .any(|l| l.contour.envelope().intersects(&env))
                {
                    continue;
                }
                self.landmarks.push(LandmarkPrior {
                    name: name.clone(),
                    contour,
                });
                placed = true;
                break;
            }
            if !placed {
                return Err(WorldError::Unsatisfiable(format!(
                    "could not place landmark {} without overlap",
                    self.landmarks.len() + 1
                )));
            }
        }
        Ok(())
    }

    fn spacing_ok(&self, p: &WorldPoint, class: ObjectClass, color: Option<Color>) -> bool {
        self.bounds.rect().expanded(-5.0).contains(p)
            && self.objects.iter().all(|o| {
                let d = o.position.distance(p);
                d >= OBJECT_SPACING
                    && !(o.object_type == class && o.color == color && d < TWIN_SPACING)
            })
    }

    fn random_extent(&mut self, class: ObjectClass) -> [f64; 2] {
        let [w, h] = class.typical_extent();
        let k = self.rng.random_range(0.85..1.15);
        [w * k, h * k]
    }

    fn push_object(&mut self, class: ObjectClass, color: Option<Color>, p: WorldPoint) -> usize {
        let extent = self.random_extent(class);
        let id = format!("o{:03}", self.objects.len());
        self.objects.push(SceneObject {
            id,
            object_type: class,
            color,
            position: p,
            extent,
        });
        self.objects.len() - 1
    }

    fn random_attrs(&mut self) -> (ObjectClass, Option<Color>) {
        let class = *ObjectClass::ALL.choose(&mut self.rng).unwrap();
        let color = if self.rng.random_bool(0.9) {
            Some(*Color::ALL.choose(&mut self.rng).unwrap())
        } else {
            None
        };
        (class, color)
    }

    fn scatter_near(&mut self, lm: usize) {
        let region = self.landmarks[lm]
            .contour
            .envelope()
            .expanded(LANDMARK_EDGE_RADIUS);
        for _ in 0..50 {
            let p = self.uniform_point(&region);
            let (class, color) = self.random_attrs();
            if self.spacing_ok(&p, class, color) {
                self.push_object(class, color, p);
                return;
            }
        }
    }

    fn scatter(&mut self) {
        let region = self.inner_rect(10.0);
        for _ in 0..50 {
            let p = self.uniform_point(&region);
            let (class, color) = self.random_attrs();
            if self.spacing_ok(&p, class, color) {
                self.push_object(class, color, p);
                return;
            }
        }
    }

    fn sample_relation(&mut self) -> Relation {
        let u: f64 = self.rng.random();
        if u < 0.35 {
            Relation::Contains
        } else if u < 0.5 {
            Relation::AdjacentTo
        } else if u < 0.62 {
            Relation::NearCorner
        } else {
            *Relation::ALL[3..].choose(&mut self.rng).unwrap()
        }
    }

    /// Point whose relation to landmark `lm` is exactly `rel`.
    fn point_with_relation(&mut self, lm: usize, rel: Relation) -> Option<WorldPoint> {
        let contour = self.landmarks[lm].contour.clone();
        let region = if rel == Relation::Contains {
            contour.envelope()
        } else {
            contour.envelope().expanded(25.0)
        };
        for _ in 0..2000 {
            let p = self.uniform_point(&region);
            if landmark_edge(&p, &contour) == Some(rel) {
                return Some(p);
            }
        }
        None
    }
}

/// Deterministic scenario for a fixed `(config, seed)`.
pub fn generate_scenario(config: &GeneratorConfig, seed: u64) -> Result<Scenario, WorldError> {
    config.validate()?;
    let bounds = MapBounds::new(0.0, 0.0, config.map_size, config.map_size, config.scale)
        .map_err(|e| WorldError::invalid("bounds", e.to_string()))?;
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(seed),
        bounds,
        landmarks: Vec::new(),
        objects: Vec::new(),
    };
    b.place_landmarks(config.landmarks)?;

    // target first, so the anchor neighborhood is shaped around it
    let (lo, hi) = config.difficulty.band();
    let mut chosen = None;
    for _ in 0..200 {
        let anchor = b.rng.random_range(0..b.landmarks.len());
        let rel = b.sample_relation();
        let Some(target) = b.point_with_relation(anchor, rel) else {
            continue;
        };
        let dist = b.rng.random_range(lo..hi);
        if let Some(start) = place_start(&mut b, anchor, target, dist) {
            chosen = Some((anchor, rel, target, start));
            break;
        }
    }
    let (anchor, rel, target_pos, start) = chosen.ok_or_else(|| {
        WorldError::Unsatisfiable("no anchor admits a start inside the difficulty band".into())
    })?;

    let (target_class, _) = b.random_attrs();
    let target_color = *Color::ALL.choose(&mut b.rng).unwrap();
    let target_idx = b.push_object(target_class, Some(target_color), target_pos);

    // same class, other colors, a few meters away
    let mut colors: Vec<Color> = Color::ALL
        .iter()
        .copied()
        .filter(|c| *c != target_color)
        .collect();
    colors.shuffle(&mut b.rng);
    for color in colors.into_iter().take(config.near_duplicates) {
        for _ in 0..50 {
            let a = b.rng.random_range(0.0..std::f64::consts::TAU);
            let r = b.rng.random_range(6.0..9.0);
            let p = target_pos.translate(r * a.sin(), r * a.cos());
            if b.spacing_ok(&p, target_class, Some(color)) {
                b.push_object(target_class, Some(color), p);
                break;
            }
        }
    }
    // same class and color near another landmark, so the relation matters
    if b.landmarks.len() > 1 {
        let other = (anchor + b.rng.random_range(1..b.landmarks.len())) % b.landmarks.len();
        let region = b.landmarks[other]
            .contour
            .envelope()
            .expanded(LANDMARK_EDGE_RADIUS / 2.0);
        for _ in 0..100 {
            let p = b.uniform_point(&region);
            if b.spacing_ok(&p, target_class, Some(target_color)) {
                b.push_object(target_class, Some(target_color), p);
                break;
            }
        }
    }
    for lm in 0..b.landmarks.len() {
        for _ in 0..config.objects_per_landmark {
            b.scatter_near(lm);
        }
    }
    for _ in 0..config.scattered_objects {
        b.scatter();
    }

    let mut attributes = BTreeMap::new();
    attributes.insert("color".to_string(), target_color.as_str().to_string());
    let target_size = b.objects[target_idx].size_class();
    if b.rng.random_bool(0.2) {
        attributes.insert("size".to_string(), target_size.as_str().to_string());
    }
    let target_id = b.objects[target_idx].id.clone();
    let goal = GoalSpec {
        target_class,
        target_attributes: attributes,
        anchor_landmark: Some(b.landmarks[anchor].name.clone()),
        relation_chain: vec![RelationConstraint::anchored(rel)],
        target_object_id: Some(target_id.clone()),
    };

    // drop any other object that also satisfies the goal
    let clashes: Vec<String> = exact_goal_matches(&goal, &b.landmarks, &b.objects)
        .into_iter()
        .filter(|o| o.id != target_id)
        .map(|o| o.id.clone())
        .collect();
    b.objects.retain(|o| !clashes.contains(&o.id));

    let theta = b.rng.random_range(0..12) as f64 * 30.0;
    let scenario = Scenario {
        bounds,
        landmarks: b.landmarks,
        objects: b.objects,
        goal,
        start: Pose::new(start.x, start.y, START_ALTITUDE, theta),
        seed,
    };
    scenario.validate()?;
    debug_assert_eq!(scenario.exact_matches().len(), 1);
    Ok(scenario)
}

/// Start on the far side of the anchor, looking from the target, so the
/// approach crosses the anchor neighborhood.
fn place_start(
    b: &mut Builder,
    anchor: usize,
    target: WorldPoint,
    dist: f64,
) -> Option<WorldPoint> {
    let c = b.landmarks[anchor].contour.centroid();
    let away = if c.distance(&target) > 1.0 {
        (c.x - target.x).atan2(c.y - target.y)
    } else {
        b.rng.random_range(0.0..std::f64::consts::TAU)
    };
    let inner = b.inner_rect(10.0);
    for k in 0..24 {
        let spread = (10.0 + 5.0 * k as f64).min(180.0).to_radians();
        let a = away + b.rng.random_range(-spread..=spread);
        let p = target.translate(dist * a.sin(), dist * a.cos());
        if inner.contains(&p) {
            return Some(p);
        }
    }
    None
}

/// One scenario per seed, in seed order.
pub fn generate_batch(
    config: &GeneratorConfig,
    seeds: &[u64],
    mode: ExecMode,
) -> Vec<Result<Scenario, WorldError>> {
    map_ordered(seeds, mode, 0, |s| generate_scenario(config, *s))
}
