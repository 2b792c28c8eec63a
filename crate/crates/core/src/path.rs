//! Local path planning between consecutive route nodes.
//!
//! Candidate paths are clamped uniform cubic B-splines through a small set of
//! interior control points confined to a planning window around the two
//! waypoints. A sampled path is expanded into kinematic states under the
//! current field, timed at constant cruise speed, and scored as
//! `path_time + sum(weight * violation)` over the vehicle's surge, sway,
//! pitch-rate, and yaw-rate limits. The firefly optimizer then places the
//! interior control points.

use crate::current::CurrentField;
use crate::foa::{self, FoaError, FoaParams, OptimizeResult};
use crate::units::wrap_angle;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const INIT_SEED_SALT: u64 = 0xD1B5_4A32_D192_ED03;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("control polygon needs at least 2 points, got {0}")]
    TooFewControlPoints(usize),
    #[error("waypoints coincide; the planning window is degenerate")]
    DegenerateWindow,
    #[error("kinematic limits invalid: {0}")]
    BadLimits(String),
    #[error("cruise speed must be positive, got {0}")]
    BadCruiseSpeed(f64),
    #[error(transparent)]
    Foa(#[from] FoaError),
}

/// Vehicle kinematic limits and the penalty weight of each violation.
///
/// Rates are radians per second internally; use [`KinematicLimits::reference_vehicle`]
/// for the reference vehicle given in knots and deg/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    /// Max surge velocity, m/s.
    pub surge_max: f64,
    /// Sway velocity bounds, m/s (ordered).
    pub sway_min: f64,
    pub sway_max: f64,
    /// Max pitch rate, rad/s.
    pub pitch_rate_max: f64,
    /// Yaw rate bounds, rad/s (ordered).
    pub yaw_rate_min: f64,
    pub yaw_rate_max: f64,
    /// Penalty weights per unit violation (seconds per unit).
    pub weight_surge: f64,
    pub weight_sway: f64,
    pub weight_pitch: f64,
    pub weight_yaw: f64,
}

impl KinematicLimits {
    /// Reference vehicle: surge 5.25 kt, sway +-0.97 kt, pitch rate
    /// 20 deg/s, yaw rate +-17 deg/s.
    pub fn reference_vehicle() -> Self {
        Self {
            surge_max: crate::units::knots_to_mps(5.25),
            sway_min: -crate::units::knots_to_mps(0.97),
            sway_max: crate::units::knots_to_mps(0.97),
            pitch_rate_max: 20f64.to_radians(),
            yaw_rate_min: -17f64.to_radians(),
            yaw_rate_max: 17f64.to_radians(),
            weight_surge: 100.0,
            weight_sway: 100.0,
            weight_pitch: 100.0,
            weight_yaw: 100.0,
        }
    }

    pub fn with_weights(mut self, weight: f64) -> Self {
        self.weight_surge = weight;
        self.weight_sway = weight;
        self.weight_pitch = weight;
        self.weight_yaw = weight;
        self
    }

    pub fn validate(&self) -> Result<(), PathError> {
        if !(self.surge_max > 0.0) {
            return Err(PathError::BadLimits(format!("surge_max {} <= 0", self.surge_max)));
        }
        if self.sway_min > self.sway_max {
            return Err(PathError::BadLimits("sway bounds out of order".into()));
        }
        if self.yaw_rate_min > self.yaw_rate_max {
            return Err(PathError::BadLimits("yaw rate bounds out of order".into()));
        }
        for (name, w) in [
            ("weight_surge", self.weight_surge),
            ("weight_sway", self.weight_sway),
            ("weight_pitch", self.weight_pitch),
            ("weight_yaw", self.weight_yaw),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(PathError::BadLimits(format!("{name} = {w}")));
            }
        }
        Ok(())
    }
}

/// Whether the pitch/yaw penalties apply to angular rates (per-segment angle
/// differences over segment times, matching the deg/s limit units) or to the
/// raw angles themselves, with the limits reinterpreted as radians.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AnglePenalty {
    #[default]
    Rate,
    Angle,
}

/// B-spline control polygon; the first and last points are the waypoints
/// being connected.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPolygon {
    points: Vec<[f64; 3]>,
}

impl ControlPolygon {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self, PathError> {
        if points.len() < 2 {
            return Err(PathError::TooFewControlPoints(points.len()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn start(&self) -> [f64; 3] {
        self.points[0]
    }

    pub fn end(&self) -> [f64; 3] {
        *self.points.last().expect("non-empty")
    }
}

/// Evaluate a clamped uniform cubic B-spline through the polygon at
/// `n_samples` parameters uniform on [0, 1].
///
/// Interpolates both endpoints exactly; every sample lies in the convex hull
/// of the control points. Polygons with fewer than four points are padded by
/// endpoint repetition.
pub fn evaluate_spline(
    polygon: &ControlPolygon,
    n_samples: usize,
) -> Result<Vec<[f64; 3]>, PathError> {
    if n_samples < 2 {
        return Err(PathError::TooFewSamples(n_samples));
    }
    let mut ctrl = polygon.points.clone();
    while ctrl.len() < 4 {
        if ctrl.len().is_multiple_of(2) {
            ctrl.insert(0, ctrl[0]);
        } else {
            ctrl.push(*ctrl.last().expect("non-empty"));
        }
    }

    const DEGREE: usize = 3;
    let n = ctrl.len();
    let knots = clamped_uniform_knots(n, DEGREE);
    Ok((0..n_samples)
        .map(|s| {
            let u = s as f64 / (n_samples - 1) as f64;
            de_boor(&ctrl, &knots, DEGREE, u)
        })
        .collect())
}

fn clamped_uniform_knots(n_ctrl: usize, degree: usize) -> Vec<f64> {
    let spans = n_ctrl - degree;
    let mut knots = vec![0.0; degree + 1];
    knots.extend((1..spans).map(|i| i as f64 / spans as f64));
    knots.extend(std::iter::repeat_n(1.0, degree + 1));
    knots
}

fn de_boor(ctrl: &[[f64; 3]], knots: &[f64], degree: usize, u: f64) -> [f64; 3] {
    let n = ctrl.len();
    // Knot span containing u; the final span is closed at u = 1.
    let span = if u >= knots[n] {
        n - 1
    } else {
        let mut k = degree;
        while !(knots[k] <= u && u < knots[k + 1]) {
            k += 1;
        }
        k
    };

    let mut work: Vec<[f64; 3]> = (0..=degree).map(|j| ctrl[j + span - degree]).collect();
    for r in 1..=degree {
        for j in (r..=degree).rev() {
            let i = j + span - degree;
            let denom = knots[i + degree - r + 1] - knots[i];
            let alpha = if denom == 0.0 { 0.0 } else { (u - knots[i]) / denom };
            for axis in 0..3 {
                work[j][axis] = (1.0 - alpha) * work[j - 1][axis] + alpha * work[j][axis];
            }
        }
    }
    work[degree]
}

/// One sampled vehicle state along a local path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Heading angle of travel, radians.
    pub yaw: f64,
    /// Elevation angle of travel, radians.
    pub pitch: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

impl PathState {
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Per-limit violation sums of a sampled path.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Violations {
    pub surge: f64,
    pub sway: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Violations {
    pub fn all_zero(&self) -> bool {
        self.surge == 0.0 && self.sway == 0.0 && self.pitch == 0.0 && self.yaw == 0.0
    }
}

/// A sampled local path with its time and penalized cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPath {
    pub samples: Vec<PathState>,
    /// Geometric traversal time at cruise speed, seconds.
    pub path_time: f64,
    /// `path_time` plus weighted violations.
    pub cost: f64,
    pub violations: Violations,
}

/// Expand sampled positions into kinematic states under the current field.
///
/// Per segment: pitch is `atan(-|dz| / sqrt(dx^2 + dy^2))`, yaw the
/// four-quadrant heading of `(dy, dx)`, and the current is sampled at the
/// segment midpoint. The final sample repeats the last segment's kinematics
/// so states align one-to-one with positions.
pub fn kinematic_states(
    positions: &[[f64; 3]],
    cruise_speed: f64,
    field: &CurrentField,
) -> Result<Vec<PathState>, PathError> {
    if positions.len() < 2 {
        return Err(PathError::TooFewSamples(positions.len()));
    }
    if !(cruise_speed > 0.0) {
        return Err(PathError::BadCruiseSpeed(cruise_speed));
    }

    let mut states = Vec::with_capacity(positions.len());
    for (i, pair) in positions.windows(2).enumerate() {
        let [a, b] = [pair[0], pair[1]];
        let (dx, dy, dz) = (b[0] - a[0], b[1] - a[1], b[2] - a[2]);
        let horizontal = (dx * dx + dy * dy).sqrt();
        let pitch = if horizontal == 0.0 && dz == 0.0 {
            0.0
        } else {
            (-dz.abs() / horizontal).atan()
        };
        let yaw = dy.atan2(dx);
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let current = field.sample(mid[0], mid[1]);
        let vx = cruise_speed * pitch.cos() * yaw.cos() + current.vx;
        let vy = cruise_speed * pitch.cos() * yaw.sin() + current.vy;
        let vz = cruise_speed * pitch.sin();
        states.push(PathState { x: a[0], y: a[1], z: a[2], yaw, pitch, vx, vy, vz });
        if i == positions.len() - 2 {
            states.push(PathState {
                x: b[0],
                y: b[1],
                z: b[2],
                yaw,
                pitch,
                vx,
                vy,
                vz,
            });
        }
    }
    Ok(states)
}

/// Score a sampled path: time plus weighted violation sums.
pub fn path_cost(
    states: &[PathState],
    limits: &KinematicLimits,
    cruise_speed: f64,
    angle_penalty: AnglePenalty,
) -> Result<(f64, f64, Violations), PathError> {
    if states.len() < 2 {
        return Err(PathError::TooFewSamples(states.len()));
    }
    if !(cruise_speed > 0.0) {
        return Err(PathError::BadCruiseSpeed(cruise_speed));
    }
    limits.validate()?;

    let segment_times: Vec<f64> = states
        .windows(2)
        .map(|w| {
            let (dx, dy, dz) = (w[1].x - w[0].x, w[1].y - w[0].y, w[1].z - w[0].z);
            (dx * dx + dy * dy + dz * dz).sqrt() / cruise_speed
        })
        .collect();
    let path_time: f64 = segment_times.iter().sum();

    let mut violations = Violations::default();
    for state in states {
        violations.surge += (state.vx - limits.surge_max).max(0.0);
        violations.sway += (state.vy.abs() - limits.sway_max).max(0.0);
        if angle_penalty == AnglePenalty::Angle {
            violations.pitch += (state.pitch - limits.pitch_rate_max).max(0.0);
            violations.yaw += (state.yaw.abs() - limits.yaw_rate_max).max(0.0);
        }
    }
    if angle_penalty == AnglePenalty::Rate {
        for (w, dt) in states.windows(2).zip(&segment_times) {
            if *dt > 0.0 {
                let pitch_rate = (w[1].pitch - w[0].pitch) / dt;
                let yaw_rate = wrap_angle(w[1].yaw - w[0].yaw) / dt;
                violations.pitch += (pitch_rate - limits.pitch_rate_max).max(0.0);
                violations.yaw += (yaw_rate.abs() - limits.yaw_rate_max).max(0.0);
            }
        }
    }

    let cost = path_time
        + limits.weight_surge * violations.surge
        + limits.weight_sway * violations.sway
        + limits.weight_pitch * violations.pitch
        + limits.weight_yaw * violations.yaw;
    Ok((path_time, cost, violations))
}

/// Knobs for [`plan_path`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathOptions {
    /// Interior control points placed by the optimizer.
    pub interior_points: usize,
    /// Samples per evaluated path.
    pub samples: usize,
    /// Window inflation around the waypoint bounding box, as a fraction of
    /// the chord length.
    pub window_margin_frac: f64,
    /// Optional volume to clip the planning window against.
    pub volume_clip: Option<([f64; 3], [f64; 3])>,
    pub angle_penalty: AnglePenalty,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            interior_points: 5,
            samples: 50,
            window_margin_frac: 0.25,
            volume_clip: None,
            angle_penalty: AnglePenalty::Rate,
        }
    }
}

/// Plan a local path between two waypoints with the firefly optimizer.
///
/// The initial population holds the straight-line control polygon and
/// perturbations of it; optimizing then trades path time against violation
/// penalties. The same seed reproduces the identical path.
pub fn plan_path(
    start: [f64; 3],
    end: [f64; 3],
    field: &CurrentField,
    limits: &KinematicLimits,
    cruise_speed: f64,
    params: &FoaParams,
    options: &PathOptions,
) -> Result<(LocalPath, OptimizeResult), PathError> {
    let chord = distance(start, end);
    if chord == 0.0 {
        return Err(PathError::DegenerateWindow);
    }
    if !(cruise_speed > 0.0) {
        return Err(PathError::BadCruiseSpeed(cruise_speed));
    }
    limits.validate()?;
    params.validate()?;

    let margin = options.window_margin_frac * chord;
    let mut window_lo = [0.0f64; 3];
    let mut window_hi = [0.0f64; 3];
    for axis in 0..3 {
        window_lo[axis] = start[axis].min(end[axis]) - margin;
        window_hi[axis] = start[axis].max(end[axis]) + margin;
        if let Some((clip_lo, clip_hi)) = options.volume_clip {
            window_lo[axis] = window_lo[axis].max(clip_lo[axis]);
            window_hi[axis] = window_hi[axis].min(clip_hi[axis]);
            // Keep the waypoints themselves inside the window even when they
            // brush the volume boundary.
            window_lo[axis] = window_lo[axis].min(start[axis]).min(end[axis]);
            window_hi[axis] = window_hi[axis].max(start[axis]).max(end[axis]);
        }
    }

    let k = options.interior_points.max(1);
    let straight: Vec<[f64; 3]> = (1..=k)
        .map(|i| {
            let f = i as f64 / (k + 1) as f64;
            [
                start[0] + f * (end[0] - start[0]),
                start[1] + f * (end[1] - start[1]),
                start[2] + f * (end[2] - start[2]),
            ]
        })
        .collect();
    let flatten = |points: &[[f64; 3]]| -> Vec<f64> {
        points.iter().flat_map(|p| p.iter().copied()).collect()
    };

    let mut init_rng = ChaCha8Rng::seed_from_u64(params.rng_seed ^ INIT_SEED_SALT);
    let mut init_population = vec![flatten(&straight)];
    for _ in 1..params.population_size {
        let perturbed: Vec<[f64; 3]> = straight
            .iter()
            .map(|p| {
                let mut q = *p;
                for axis in 0..3 {
                    let span = window_hi[axis] - window_lo[axis];
                    q[axis] = (q[axis] + init_rng.gen_range(-0.5..=0.5) * 0.5 * span)
                        .clamp(window_lo[axis], window_hi[axis]);
                }
                q
            })
            .collect();
        init_population.push(flatten(&perturbed));
    }

    let bounds: Vec<(f64, f64)> = (0..3 * k)
        .map(|d| (window_lo[d % 3], window_hi[d % 3]))
        .collect();

    let build = |flat: &[f64]| -> Result<(Vec<PathState>, f64, f64, Violations), PathError> {
        let mut points = Vec::with_capacity(k + 2);
        points.push(start);
        for chunk in flat.chunks_exact(3) {
            points.push([chunk[0], chunk[1], chunk[2]]);
        }
        points.push(end);
        let polygon = ControlPolygon::new(points)?;
        let positions = evaluate_spline(&polygon, options.samples)?;
        let states = kinematic_states(&positions, cruise_speed, field)?;
        let (time, cost, violations) =
            path_cost(&states, limits, cruise_speed, options.angle_penalty)?;
        Ok((states, time, cost, violations))
    };

    let result = foa::optimize_bounded(
        |flat| match build(flat) {
            Ok((_, _, cost, _)) => cost,
            Err(_) => f64::NAN, // surfaces as a NonFiniteCost error
        },
        &init_population,
        Some(&bounds),
        params,
    )?;

    let (samples, path_time, cost, violations) = build(&result.best.position)?;
    Ok((LocalPath { samples, path_time, cost, violations }, result))
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (dx, dy, dz) = (b[0] - a[0], b[1] - a[1], b[2] - a[2]);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Arc length of a sampled position sequence.
pub fn polyline_length(positions: &[[f64; 3]]) -> f64 {
    positions.windows(2).map(|w| distance(w[0], w[1])).sum()
}
