//! Seeded synthetic scenes standing in for recorded egocentric clips.
//!
//! A chest-mounted pinhole camera walks over a ground plane with a smoothly
//! varying yaw rate and forward speed. One pedestrian per clip moves according
//! to its direction class. Boxes come from projecting an upright person
//! rectangle; pose keypoints are a BODY_25 template placed inside the box with
//! a gait swing; the IMU reports the camera's own body-frame motion.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::types::*;
use crate::error::{Error, Result};

const GRAVITY: f64 = 9.81;
const CAMERA_HEIGHT: f64 = 1.3;
const MIN_DEPTH: f64 = 0.5;

/// Clip counts per direction class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassCounts {
    pub toward: usize,
    pub away: usize,
    pub across: usize,
    pub still: usize,
}

impl ClassCounts {
    pub fn get(&self, d: Direction) -> usize {
        match d {
            Direction::Toward => self.toward,
            Direction::Away => self.away,
            Direction::Across => self.across,
            Direction::Still => self.still,
        }
    }

    pub fn get_mut(&mut self, d: Direction) -> &mut usize {
        match d {
            Direction::Toward => &mut self.toward,
            Direction::Away => &mut self.away,
            Direction::Across => &mut self.across,
            Direction::Still => &mut self.still,
        }
    }

    pub fn total(&self) -> usize {
        self.toward + self.away + self.across + self.still
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraMotion {
    /// Mean forward walking speed range, m/s.
    pub forward_speed: [f64; 2],
    /// Amplitude of the sinusoidal speed variation, m/s.
    pub speed_wobble: f64,
    /// Peak yaw rate, rad/s. Each clip draws its amplitude from `[0, yaw_rate_max]`.
    pub yaw_rate_max: f64,
    /// Yaw oscillation period range, seconds.
    pub yaw_period: [f64; 2],
}

impl Default for CameraMotion {
    fn default() -> Self {
        Self {
            forward_speed: [0.0, 1.4],
            speed_wobble: 0.2,
            yaw_rate_max: 0.5,
            yaw_period: [3.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersonMotion {
    /// Walking speed range for moving classes, m/s.
    pub speed: [f64; 2],
    /// Ornstein-Uhlenbeck velocity perturbation, m/s/sqrt(s).
    pub velocity_jitter: f64,
    pub height: [f64; 2],
    pub width: [f64; 2],
}

impl Default for PersonMotion {
    fn default() -> Self {
        Self {
            speed: [0.6, 1.6],
            velocity_jitter: 0.3,
            height: [1.55, 1.9],
            width: [0.45, 0.6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseLevels {
    /// Std-dev of per-frame box translation jitter, px.
    pub box_px: f64,
    pub keypoint_px: f64,
    /// Accelerometer noise, m/s^2.
    pub accel: f64,
    /// Gyroscope noise, rad/s.
    pub gyro: f64,
}

impl Default for NoiseLevels {
    fn default() -> Self {
        Self {
            box_px: 1.5,
            keypoint_px: 1.0,
            accel: 0.05,
            gyro: 0.01,
        }
    }
}

/// Declarative description of a synthetic dataset (TOML on disk).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub seed: u64,
    pub counts: ClassCounts,
    /// Range of simulated track lengths before truncation, frames.
    pub clip_frames: [usize; 2],
    pub focal_length: f64,
    pub camera: CameraMotion,
    pub person: PersonMotion,
    pub noise: NoiseLevels,
    /// Prefix for generated clip ids.
    pub clip_prefix: String,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            counts: ClassCounts::default(),
            clip_frames: [20, 45],
            focal_length: 230.0,
            camera: CameraMotion::default(),
            person: PersonMotion::default(),
            noise: NoiseLevels::default(),
            clip_prefix: String::new(),
        }
    }
}

impl SceneSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: SceneSpec =
            toml::from_str(text).map_err(|e| Error::config(format!("scene spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scene spec serializes")
    }

    /// Camera and person held perfectly still, no noise.
    pub fn static_world() -> Self {
        Self {
            camera: CameraMotion {
                forward_speed: [0.0, 0.0],
                speed_wobble: 0.0,
                yaw_rate_max: 0.0,
                yaw_period: [3.0, 8.0],
            },
            person: PersonMotion {
                velocity_jitter: 0.0,
                ..PersonMotion::default()
            },
            noise: NoiseLevels {
                box_px: 0.0,
                keypoint_px: 0.0,
                accel: 0.0,
                gyro: 0.0,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let range_ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        let bad = |what: &str| Err(Error::config(format!("scene spec: invalid {what}")));
        if self.clip_frames[0] < WINDOW_LEN || self.clip_frames[0] > self.clip_frames[1] {
            return bad("clip_frames (need WINDOW_LEN <= min <= max)");
        }
        if !(self.focal_length > 0.0) {
            return bad("focal_length");
        }
        if !range_ok(self.camera.forward_speed) || self.camera.forward_speed[0] < 0.0 {
            return bad("camera.forward_speed");
        }
        if !range_ok(self.camera.yaw_period) || self.camera.yaw_period[0] <= 0.0 {
            return bad("camera.yaw_period");
        }
        if !(self.camera.yaw_rate_max >= 0.0) || !(self.camera.speed_wobble >= 0.0) {
            return bad("camera yaw/speed amplitude");
        }
        if !range_ok(self.person.speed) || self.person.speed[0] < 0.0 {
            return bad("person.speed");
        }
        if !range_ok(self.person.height) || self.person.height[0] <= 0.0 {
            return bad("person.height");
        }
        if !range_ok(self.person.width) || self.person.width[0] <= 0.0 {
            return bad("person.width");
        }
        let n = &self.noise;
        if [n.box_px, n.keypoint_px, n.accel, n.gyro, self.person.velocity_jitter]
            .iter()
            .any(|v| !(*v >= 0.0))
        {
            return bad("noise level");
        }
        Ok(())
    }
}

/// A generated clip plus the per-frame camera-frame depth of the person.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthClip {
    pub clip: Clip,
    pub depths: Vec<f64>,
}

/// Generates `spec.counts` clips per class; deterministic in `spec.seed`.
pub fn synth_generate(spec: &SceneSpec) -> Result<Vec<Clip>> {
    Ok(synth_generate_traced(spec)?
        .into_iter()
        .map(|c| c.clip)
        .collect())
}

pub fn synth_generate_traced(spec: &SceneSpec) -> Result<Vec<SynthClip>> {
    spec.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.counts.total());
    for direction in Direction::ALL {
        let wanted = spec.counts.get(direction);
        let max_attempts = 200 * wanted.max(1);
        let mut made = 0;
        let mut attempts = 0;
        while made < wanted {
            if attempts == max_attempts {
                return Err(Error::config(format!(
                    "could not produce {wanted} `{direction}` tracks of at least {WINDOW_LEN} frames \
                     after {attempts} attempts; relax the camera or person ranges"
                )));
            }
            attempts += 1;
            let clip_seed: u64 = master.gen();
            let clip_id = format!("{}{}_{:05}", spec.clip_prefix, direction, made);
            if let Some(clip) = simulate_clip(spec, direction, clip_id, clip_seed) {
                out.push(clip);
                made += 1;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct Vec2 {
    x: f64,
    z: f64,
}

impl Vec2 {
    fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.z + o.z)
    }
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.z - o.z)
    }
    fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.z * k)
    }
    fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.z * o.z
    }
    fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Heading is measured counter-clockwise, so a positive yaw rate turns left.
fn forward(heading: f64) -> Vec2 {
    Vec2::new(-heading.sin(), heading.cos())
}

fn right(heading: f64) -> Vec2 {
    Vec2::new(heading.cos(), heading.sin())
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..r[1])
    }
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    }
}

/// BODY_25 keypoints as fractions of box width and height.
const POSE_TEMPLATE: [(f64, f64); NUM_KEYPOINTS] = [
    (0.50, 0.06), // nose
    (0.50, 0.17), // neck
    (0.30, 0.19), // right shoulder
    (0.25, 0.33),
    (0.22, 0.46),
    (0.70, 0.19), // left shoulder
    (0.75, 0.33),
    (0.78, 0.46),
    (0.50, 0.50), // mid hip
    (0.40, 0.50), // right hip
    (0.40, 0.72),
    (0.40, 0.93),
    (0.60, 0.50), // left hip
    (0.60, 0.72),
    (0.60, 0.93),
    (0.46, 0.05), // eyes, ears
    (0.54, 0.05),
    (0.42, 0.06),
    (0.58, 0.06),
    (0.63, 0.98), // left foot
    (0.66, 0.97),
    (0.58, 0.96),
    (0.37, 0.98), // right foot
    (0.34, 0.97),
    (0.42, 0.96),
];

/// +1 for right-side limbs, -1 for left, scaled for arms vs legs; 0 for torso and head.
fn swing_weight(k: usize) -> f64 {
    match k {
        3 | 4 => -0.5,
        6 | 7 => 0.5,
        10 | 11 | 22 | 23 | 24 => 1.0,
        13 | 14 | 19 | 20 | 21 => -1.0,
        _ => 0.0,
    }
}

fn is_head(k: usize) -> bool {
    matches!(k, 0 | 15 | 16 | 17 | 18)
}

fn simulate_clip(spec: &SceneSpec, direction: Direction, clip_id: String, seed: u64) -> Option<SynthClip> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1.0 / FPS;
    let f = spec.focal_length;
    let (cx0, cy0) = (FRAME_WIDTH / 2.0, FRAME_HEIGHT / 2.0);

    let len = rng.gen_range(spec.clip_frames[0]..=spec.clip_frames[1]);

    let cam = &spec.camera;
    let base_speed = uniform(&mut rng, cam.forward_speed);
    let wobble = if cam.speed_wobble > 0.0 && base_speed > 0.0 {
        rng.gen_range(0.0..cam.speed_wobble)
    } else {
        0.0
    };
    let wobble_period = rng.gen_range(2.0..6.0);
    let wobble_phase = rng.gen_range(0.0..2.0 * PI);
    let yaw_amp = if cam.yaw_rate_max > 0.0 {
        rng.gen_range(0.0..cam.yaw_rate_max)
    } else {
        0.0
    };
    let yaw_period = uniform(&mut rng, cam.yaw_period);
    let yaw_phase = rng.gen_range(0.0..2.0 * PI);
    let step_phase = rng.gen_range(0.0..2.0 * PI);

    let cam_speed = |t: f64| {
        (base_speed + wobble * (2.0 * PI * t / wobble_period + wobble_phase).sin()).max(0.0)
    };
    let cam_accel = |t: f64| {
        if base_speed + wobble * (2.0 * PI * t / wobble_period + wobble_phase).sin() <= 0.0 {
            0.0
        } else {
            wobble * 2.0 * PI / wobble_period * (2.0 * PI * t / wobble_period + wobble_phase).cos()
        }
    };
    let yaw_rate = |t: f64| yaw_amp * (2.0 * PI * t / yaw_period + yaw_phase).sin();

    let pm = &spec.person;
    let height = uniform(&mut rng, pm.height);
    let width = uniform(&mut rng, pm.width);
    let speed = uniform(&mut rng, pm.speed);

    // Person placement in the initial camera frame (camera at origin, heading 0).
    let (start, mut vel) = match direction {
        Direction::Toward => {
            let z = rng.gen_range(7.0..12.0);
            let x = rng.gen_range(-1.5..1.5);
            let aim = Vec2::new(rng.gen_range(-0.8..0.8), 0.0);
            let p = Vec2::new(x, z);
            let to_cam = aim.sub(p);
            (p, to_cam.scale(speed / to_cam.norm()))
        }
        Direction::Away => {
            let z = rng.gen_range(3.0..7.0);
            let x = rng.gen_range(-1.5..1.5);
            let lateral = rng.gen_range(-0.15..0.15);
            (Vec2::new(x, z), Vec2::new(lateral, 1.0).scale(speed))
        }
        Direction::Across => {
            let z = rng.gen_range(3.0..8.0);
            let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let x = -side * z * rng.gen_range(0.2..0.7);
            let drift = rng.gen_range(-0.2..0.2);
            (Vec2::new(x, z), Vec2::new(side, drift).scale(speed))
        }
        Direction::Still => {
            let z = rng.gen_range(2.5..9.0);
            let x = z * rng.gen_range(-0.6..0.6);
            (Vec2::new(x, z), Vec2::new(0.0, 0.0))
        }
    };
    let nominal_vel = vel;
    let conf: [f64; NUM_KEYPOINTS] = std::array::from_fn(|_| rng.gen_range(0.55..0.95));
    // Visible lateral swing: full for side views, small when facing the camera.
    let swing_view = if direction == Direction::Across { 1.0 } else { 0.3 };
    let facing = if direction == Direction::Across {
        nominal_vel.x.signum()
    } else {
        0.0
    };

    let mut cam_pos = Vec2::new(0.0, 0.0);
    let mut heading = 0.0f64;
    let mut person = start;
    let mut gait_phase = rng.gen_range(0.0..2.0 * PI);
    let ou_theta = 1.0;

    let mut frames = Vec::with_capacity(len);
    let mut depths = Vec::with_capacity(len);
    for k in 0..len {
        let t = k as f64 * dt;
        if k > 0 {
            // Advance the world by one frame.
            let omega = yaw_rate(t - dt);
            heading += omega * dt;
            cam_pos = cam_pos.add(forward(heading).scale(cam_speed(t - dt) * dt));
            if direction != Direction::Still && pm.velocity_jitter > 0.0 {
                let noise = Vec2::new(gaussian(&mut rng, 1.0), gaussian(&mut rng, 1.0));
                vel = vel
                    .add(nominal_vel.sub(vel).scale(ou_theta * dt))
                    .add(noise.scale(pm.velocity_jitter * dt.sqrt()));
            }
            person = person.add(vel.scale(dt));
            gait_phase += 2.0 * PI * 1.8 * (vel.norm() / 1.2).min(1.5) * dt;
        }

        let rel = person.sub(cam_pos);
        let xc = rel.dot(right(heading));
        let zc = rel.dot(forward(heading));
        if zc < MIN_DEPTH {
            break;
        }
        if direction == Direction::Toward && depths.last().is_some_and(|&prev| zc >= prev) {
            break;
        }

        let jitter_x = gaussian(&mut rng, spec.noise.box_px);
        let jitter_y = gaussian(&mut rng, spec.noise.box_px);
        let u = cx0 + f * xc / zc + jitter_x;
        let half_w = 0.5 * f * width / zc;
        let top = cy0 + f * (CAMERA_HEIGHT - height) / zc + jitter_y;
        let bottom = cy0 + f * CAMERA_HEIGHT / zc + jitter_y;
        let bbox = BoundingBox::new(u - half_w, top, u + half_w, bottom);
        if bbox.x1 < 0.0 || bbox.y1 < 0.0 || bbox.x2 > FRAME_WIDTH || bbox.y2 > FRAME_HEIGHT {
            break;
        }

        let moving = vel.norm();
        let swing = 0.12 * (moving / 1.2).min(1.5) * gait_phase.sin() * swing_view;
        let mut pose = [Keypoint::MISSING; NUM_KEYPOINTS];
        for (kp, (idx, &(fu, fv))) in pose.iter_mut().zip(POSE_TEMPLATE.iter().enumerate()) {
            let mut du = fu + swing * swing_weight(idx);
            if is_head(idx) {
                du += 0.08 * facing;
            }
            let px = bbox.x1 + du * bbox.width() + gaussian(&mut rng, spec.noise.keypoint_px);
            let py = bbox.y1 + fv * bbox.height() + gaussian(&mut rng, spec.noise.keypoint_px);
            *kp = Keypoint {
                x: px.clamp(0.0, FRAME_WIDTH),
                y: py.clamp(0.0, FRAME_HEIGHT),
                confidence: conf[idx],
            };
        }

        let v = cam_speed(t);
        let omega = yaw_rate(t);
        let bob = v / 1.4;
        let step = 2.0 * PI * 2.0 * t + step_phase;
        let n = &spec.noise;
        let imu = [
            -v * omega + gaussian(&mut rng, n.accel),
            cam_accel(t) + gaussian(&mut rng, n.accel),
            GRAVITY + 1.0 * bob * step.sin() + gaussian(&mut rng, n.accel),
            0.15 * bob * step.cos() + gaussian(&mut rng, n.gyro),
            0.08 * bob * (0.5 * step).sin() + gaussian(&mut rng, n.gyro),
            omega + gaussian(&mut rng, n.gyro),
        ];

        frames.push(FrameObservation {
            frame_index: k as u64,
            bbox,
            pose,
            imu,
        });
        depths.push(zc);
    }

    if frames.len() < WINDOW_LEN {
        return None;
    }
    Some(SynthClip {
        clip: Clip {
            clip_id,
            tracks: vec![Track {
                person_id: 0,
                direction,
                frames,
            }],
        },
        depths,
    })
}
