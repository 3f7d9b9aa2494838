//! Simulated top-down detector. Detections come from ground truth through a
//! configurable noise model and are projected back to world coordinates.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::geometry::{
    camera_to_world, footprint, world_to_camera, CameraPoint, ImageDims, Pose, Rect,
    SignConvention, WorldPoint,
};
use crate::vocab::{Color, ObjectClass};
use crate::world::Scenario;

/// Detections below this confidence are dropped.
pub const CONFIDENCE_THRESHOLD: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub p_detect: f64,
    pub sigma_pos: f64,
    /// Expected false positives per frame.
    pub fp_rate: f64,
    pub attr_confusion: f64,
    pub confidence_floor: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            p_detect: 0.9,
            sigma_pos: 2.0,
            fp_rate: 0.5,
            attr_confusion: 0.05,
            confidence_floor: 0.1,
        }
    }
}

impl NoiseModel {
    /// Every in-footprint object, exact position and attributes, nothing else.
    pub fn noiseless() -> Self {
        NoiseModel {
            p_detect: 1.0,
            sigma_pos: 0.0,
            fp_rate: 0.0,
            attr_confusion: 0.0,
            confidence_floor: CONFIDENCE_THRESHOLD,
        }
    }

    /// `k` times the default error: miss rate, jitter, false positives and
    /// confusion all scale by `k`.
    pub fn scaled(k: f64) -> Self {
        let d = NoiseModel::default();
        NoiseModel {
            p_detect: (1.0 - k * (1.0 - d.p_detect)).clamp(0.0, 1.0),
            sigma_pos: d.sigma_pos * k,
            fp_rate: d.fp_rate * k,
            attr_confusion: (d.attr_confusion * k).clamp(0.0, 1.0),
            confidence_floor: d.confidence_floor,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("p_detect", self.p_detect),
            ("attr_confusion", self.attr_confusion),
            ("confidence_floor", self.confidence_floor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if !(self.sigma_pos >= 0.0 && self.sigma_pos.is_finite()) {
            return Err(format!("sigma_pos must be >= 0, got {}", self.sigma_pos));
        }
        if !(self.fp_rate >= 0.0 && self.fp_rate.is_finite()) {
            return Err(format!("fp_rate must be >= 0, got {}", self.fp_rate));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub camera_offset: CameraPoint,
    pub object_type: ObjectClass,
    pub color: Option<Color>,
    pub confidence: f64,
    /// Camera-frame box around the offset.
    pub bbox: Rect,
    /// Ground-truth id, for debugging only.
    #[serde(skip)]
    pub source_id: Option<String>,
    /// Jitter pushed the detection outside the footprint and it was clamped back.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationFrame {
    pub pose: Pose,
    pub detections: Vec<Detection>,
    pub footprint: Rect,
    pub convention: SignConvention,
}

/// One world-frame increment produced by the detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivedObject {
    pub position: WorldPoint,
    pub object_type: ObjectClass,
    pub color: Option<Color>,
    pub confidence: f64,
    pub extent: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sensor {
    pub noise: NoiseModel,
    pub dims: ImageDims,
    pub convention: SignConvention,
}

impl Sensor {
    pub fn new(noise: NoiseModel) -> Self {
        Sensor {
            noise,
            ..Default::default()
        }
    }

    pub fn observe(&self, scenario: &Scenario, pose: &Pose, seed: u64) -> ObservationFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fp = footprint(pose, self.dims);
        let noise = &self.noise;
        let jitter = Normal::new(0.0, noise.sigma_pos.max(0.0)).expect("finite sigma");
        // true detections: floor + (1 - floor) * Beta(8, 2)
        let true_conf = Beta::new(8.0, 2.0).expect("valid beta");
        // false positives are weaker: floor + (1 - floor) * Beta(2, 5)
        let false_conf = Beta::new(2.0, 5.0).expect("valid beta");
        let floor = noise.confidence_floor;
        let mut detections = Vec::new();

        for obj in &scenario.objects {
            if !fp.contains(&obj.position) {
                continue;
            }
            if rng.random::<f64>() >= noise.p_detect {
                continue;
            }
            let mut offset = world_to_camera(&obj.position, pose, self.convention);
            if noise.sigma_pos > 0.0 {
                offset.x += jitter.sample(&mut rng);
                offset.y += jitter.sample(&mut rng);
            }
            let mut clamped = false;
            let world = camera_to_world(&offset, pose, self.convention);
            if !fp.contains(&world) {
                offset = world_to_camera(&fp.clamp_point(&world), pose, self.convention);
                clamped = true;
            }
            let object_type = confuse(
                &mut rng,
                obj.object_type,
                ObjectClass::ALL,
                noise.attr_confusion,
            );
            let color = obj
                .color
                .map(|c| confuse(&mut rng, c, Color::ALL, noise.attr_confusion));
            let confidence = floor + (1.0 - floor) * true_conf.sample(&mut rng);
            if confidence < CONFIDENCE_THRESHOLD {
                continue;
            }
            detections.push(Detection {
                camera_offset: offset,
                object_type,
                color,
                confidence,
                bbox: Rect::centered(
                    WorldPoint::new(offset.x, offset.y),
                    obj.extent[0],
                    obj.extent[1],
                ),
                source_id: Some(obj.id.clone()),
                clamped,
            });
        }

        if noise.fp_rate > 0.0 {
            let n = Poisson::new(noise.fp_rate)
                .expect("positive rate")
                .sample(&mut rng) as usize;
            for _ in 0..n {
                let p = WorldPoint::new(
                    rng.random_range(fp.min_x..=fp.max_x),
                    rng.random_range(fp.min_y..=fp.max_y),
                );
                let object_type = *ObjectClass::ALL.choose(&mut rng).unwrap();
                let color = Some(*Color::ALL.choose(&mut rng).unwrap());
                let confidence = floor + (1.0 - floor) * false_conf.sample(&mut rng);
                if confidence < CONFIDENCE_THRESHOLD {
                    continue;
                }
                let offset = world_to_camera(&p, pose, self.convention);
                let [w, h] = object_type.typical_extent();
                detections.push(Detection {
                    camera_offset: offset,
                    object_type,
                    color,
                    confidence,
                    bbox: Rect::centered(WorldPoint::new(offset.x, offset.y), w, h),
                    source_id: None,
                    clamped: false,
                });
            }
        }

        ObservationFrame {
            pose: *pose,
            detections,
            footprint: fp,
            convention: self.convention,
        }
    }
}

fn confuse<T: Copy + PartialEq, R: Rng>(rng: &mut R, value: T, all: &[T], p: f64) -> T {
    if p <= 0.0 || rng.random::<f64>() >= p {
        return value;
    }
    let others: Vec<T> = all.iter().copied().filter(|v| *v != value).collect();
    *others.choose(rng).unwrap_or(&value)
}

/// Default sensor (1000x1000 image, printed sign convention).
pub fn observe(
    scenario: &Scenario,
    pose: &Pose,
    noise: &NoiseModel,
    seed: u64,
) -> ObservationFrame {
    Sensor::new(*noise).observe(scenario, pose, seed)
}

/// Camera-frame detections mapped into the world frame.
pub fn project_detections(frame: &ObservationFrame) -> Vec<PerceivedObject> {
    frame
        .detections
        .iter()
        .map(|d| PerceivedObject {
            position: camera_to_world(&d.camera_offset, &frame.pose, frame.convention),
            object_type: d.object_type,
            color: d.color,
            confidence: d.confidence,
            extent: [d.bbox.width(), d.bbox.height()],
        })
        .collect()
}
