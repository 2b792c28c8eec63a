//! Experiment configuration: a single JSON document with environment
//! overrides (`PLANNER_<SECTION>_<KEY>`) and command-line flags on top.
//!
//! All numeric I/O is SI; speed-like fields also accept strings with an
//! explicit `kt` suffix ("5.5 kt"). Angular rates are given in deg/s at the
//! config boundary and converted to rad/s internally.

use anyhow::{anyhow, bail, Context, Result};
use auv_mission::foa::FoaParams;
use auv_mission::mission::{ComputeTimeMode, MissionConfig};
use auv_mission::path::{AnglePenalty, KinematicLimits, PathOptions};
use auv_mission::units::knots_to_mps;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A speed that is either SI meters per second (number) or knots with an
/// explicit suffix ("5.5 kt").
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Speed {
    MetersPerSecond(f64),
    WithUnit(String),
}

impl Speed {
    pub fn mps(&self) -> Result<f64> {
        match self {
            Speed::MetersPerSecond(v) => Ok(*v),
            Speed::WithUnit(s) => {
                let trimmed = s.trim();
                if let Some(knots) = trimmed.strip_suffix("kt") {
                    Ok(knots_to_mps(
                        knots
                            .trim()
                            .parse::<f64>()
                            .with_context(|| format!("bad speed {s:?}"))?,
                    ))
                } else {
                    trimmed
                        .parse::<f64>()
                        .map_err(|_| anyhow!("bad speed {s:?}: expected a number or \"<n> kt\""))
                }
            }
        }
    }
}

impl Serialize for Speed {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Speed::MetersPerSecond(v) => serializer.serialize_f64(*v),
            Speed::WithUnit(s) => serializer.serialize_str(s),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub nodes: usize,
    pub neighbors: usize,
    pub bounds: [f64; 3],
    pub seed: u64,
    /// Start node id; defaults to the node nearest the minimum corner.
    pub start: Option<usize>,
    /// Target node id; defaults to the node nearest the maximum corner.
    pub target: Option<usize>,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            nodes: 30,
            neighbors: 4,
            bounds: [10_000.0, 10_000.0, 100.0],
            seed: 11,
            start: None,
            target: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub vortices: usize,
    pub grid: [usize; 2],
    pub extent: [f64; 2],
    pub strength: [f64; 2],
    pub core: [f64; 2],
    pub seed: u64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            vortices: 11,
            grid: [100, 100],
            extent: [10_000.0, 10_000.0],
            strength: [50.0, 500.0],
            core: [200.0, 800.0],
            seed: 12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitsConfig {
    pub surge_max: Speed,
    pub sway_min: Speed,
    pub sway_max: Speed,
    pub pitch_rate_max_deg_s: f64,
    pub yaw_rate_min_deg_s: f64,
    pub yaw_rate_max_deg_s: f64,
    pub weight_surge: f64,
    pub weight_sway: f64,
    pub weight_pitch: f64,
    pub weight_yaw: f64,
}

impl Default for LimitsConfig {
    fn default() -> Self {
        Self {
            surge_max: Speed::WithUnit("5.25 kt".into()),
            sway_min: Speed::WithUnit("-0.97 kt".into()),
            sway_max: Speed::WithUnit("0.97 kt".into()),
            pitch_rate_max_deg_s: 20.0,
            yaw_rate_min_deg_s: -17.0,
            yaw_rate_max_deg_s: 17.0,
            // Violations are unavoidable on legs with a large north/south
            // component (the sway bound sits far below cruise speed), and
            // heavier weights reward time-wasting detours over chords.
            weight_surge: 2.0,
            weight_sway: 2.0,
            weight_pitch: 2.0,
            weight_yaw: 2.0,
        }
    }
}

impl LimitsConfig {
    pub fn resolve(&self) -> Result<KinematicLimits> {
        Ok(KinematicLimits {
            surge_max: self.surge_max.mps()?,
            sway_min: self.sway_min.mps()?,
            sway_max: self.sway_max.mps()?,
            pitch_rate_max: self.pitch_rate_max_deg_s.to_radians(),
            yaw_rate_min: self.yaw_rate_min_deg_s.to_radians(),
            yaw_rate_max: self.yaw_rate_max_deg_s.to_radians(),
            weight_surge: self.weight_surge,
            weight_sway: self.weight_sway,
            weight_pitch: self.weight_pitch,
            weight_yaw: self.weight_yaw,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathPlanConfig {
    pub interior_points: usize,
    pub samples: usize,
    pub window_margin_frac: f64,
    pub angle_penalty: AnglePenaltyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnglePenaltyConfig {
    Rate,
    Angle,
}

impl Default for PathPlanConfig {
    fn default() -> Self {
        Self {
            interior_points: 5,
            samples: 50,
            window_margin_frac: 0.25,
            angle_penalty: AnglePenaltyConfig::Rate,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionSection {
    pub battery_s: f64,
    pub cruise_speed: Speed,
    pub seed: u64,
    /// Fixed seconds charged per re-plan; `null` measures wall-clock.
    pub synthetic_compute_s: Option<f64>,
    pub plan_margin_frac: f64,
    pub plan_margin_floor_s: f64,
    pub budget_fallback: bool,
    /// Sensitivity switch: re-plan compute time also drains the battery.
    pub compute_drains_battery: bool,
    pub limits: LimitsConfig,
    pub path: PathPlanConfig,
}

impl Default for MissionSection {
    fn default() -> Self {
        Self {
            battery_s: 7200.0,
            cruise_speed: Speed::WithUnit("5.5 kt".into()),
            seed: 13,
            synthetic_compute_s: None,
            plan_margin_frac: 0.03,
            plan_margin_floor_s: 60.0,
            budget_fallback: true,
            compute_drains_battery: false,
            limits: LimitsConfig::default(),
            path: PathPlanConfig::default(),
        }
    }
}

/// Optimizer settings for the route planner: the search space is the unit
/// box of priority keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouteFoaConfig {
    pub population: usize,
    pub iterations: usize,
    pub attraction_base: f64,
    pub light_absorption: f64,
    pub randomness_init: f64,
    pub damping: f64,
}

impl Default for RouteFoaConfig {
    fn default() -> Self {
        Self {
            population: 24,
            iterations: 60,
            attraction_base: 1.0,
            light_absorption: 0.5,
            randomness_init: 0.3,
            damping: 0.96,
        }
    }
}

impl RouteFoaConfig {
    pub fn to_params(&self, seed: u64) -> FoaParams {
        FoaParams {
            population_size: self.population,
            iterations: self.iterations,
            attraction_base: self.attraction_base,
            light_absorption: self.light_absorption,
            randomness_init: self.randomness_init,
            damping: self.damping,
            rng_seed: seed,
        }
    }
}

/// Optimizer settings for the path planner: control points live in
/// meter-scale space, so the randomness is meters and the absorption tiny
/// enough that attraction survives hundred-meter distances.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathFoaConfig {
    pub population: usize,
    pub iterations: usize,
    pub attraction_base: f64,
    pub light_absorption: f64,
    pub randomness_init: f64,
    pub damping: f64,
}

impl Default for PathFoaConfig {
    fn default() -> Self {
        Self {
            population: 16,
            iterations: 100,
            attraction_base: 1.0,
            light_absorption: 1e-6,
            randomness_init: 200.0,
            damping: 0.95,
        }
    }
}

impl PathFoaConfig {
    pub fn to_params(&self, seed: u64) -> FoaParams {
        FoaParams {
            population_size: self.population,
            iterations: self.iterations,
            attraction_base: self.attraction_base,
            light_absorption: self.light_absorption,
            randomness_init: self.randomness_init,
            damping: self.damping,
            rng_seed: seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    pub trials: usize,
    pub seed_stride: u64,
    /// Regenerate the world per trial instead of sharing one across trials.
    pub fresh_world: bool,
    /// Worker threads for the trial pool; 0 uses the rayon default.
    pub workers: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self { trials: 25, seed_stride: 1, fresh_world: false, workers: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { format: OutputFormat::Csv }
    }
}

/// The whole experiment configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub field: FieldConfig,
    pub mission: MissionSection,
    pub foa_route: RouteFoaConfig,
    pub foa_path: PathFoaConfig,
    pub batch: BatchConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Load from an optional JSON file, then apply `PLANNER_*` environment
    /// overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => serde_json::json!({}),
        };
        apply_env_overrides(&mut value, std::env::vars())?;
        let config: ExperimentConfig =
            serde_json::from_value(value).context("invalid configuration")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch.trials < 1 {
            bail!("batch.trials must be at least 1");
        }
        if self.world.nodes < 2 {
            bail!("world.nodes must be at least 2");
        }
        if !(self.mission.battery_s > 0.0) {
            bail!("mission.battery_s must be positive");
        }
        self.mission.limits.resolve()?.validate().map_err(|e| anyhow!(e))?;
        let _ = self.mission.cruise_speed.mps()?;
        Ok(())
    }

    pub fn mission_config(&self) -> Result<MissionConfig> {
        let compute = match self.mission.synthetic_compute_s {
            Some(c) => ComputeTimeMode::Synthetic(c),
            None => ComputeTimeMode::Measured,
        };
        Ok(MissionConfig {
            battery_lifetime: self.mission.battery_s,
            cruise_speed: self.mission.cruise_speed.mps()?,
            limits: self.mission.limits.resolve()?,
            route_foa: self.foa_route.to_params(self.mission.seed),
            path_foa: self.foa_path.to_params(self.mission.seed),
            path_options: self.path_options(),
            compute_time_mode: compute,
            rng_seed: self.mission.seed,
            budget_fallback: self.mission.budget_fallback,
            plan_margin_frac: self.mission.plan_margin_frac,
            plan_margin_floor: self.mission.plan_margin_floor_s,
            compute_drains_battery: self.mission.compute_drains_battery,
        })
    }

    pub fn path_options(&self) -> PathOptions {
        PathOptions {
            interior_points: self.mission.path.interior_points,
            samples: self.mission.path.samples,
            window_margin_frac: self.mission.path.window_margin_frac,
            volume_clip: None,
            angle_penalty: match self.mission.path.angle_penalty {
                AnglePenaltyConfig::Rate => AnglePenalty::Rate,
                AnglePenaltyConfig::Angle => AnglePenalty::Angle,
            },
        }
    }

    /// Spread a master seed across the sections.
    pub fn apply_master_seed(&mut self, seed: u64) {
        self.world.seed = seed;
        self.field.seed = seed.wrapping_add(1);
        self.mission.seed = seed.wrapping_add(2);
    }

    /// Resolved config as a JSON value, embedded in every output file.
    pub fn resolved_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

const SECTIONS: [&str; 7] =
    ["world", "field", "mission", "foa_route", "foa_path", "batch", "output"];

/// Apply `PLANNER_<SECTION>_<KEY>` overrides onto the raw config tree.
/// Nested keys use double underscores: `PLANNER_MISSION_LIMITS__WEIGHT_SWAY`.
fn apply_env_overrides(
    value: &mut serde_json::Value,
    vars: impl Iterator<Item = (String, String)>,
) -> Result<()> {
    if !value.is_object() {
        bail!("config root must be a JSON object");
    }
    let mut overrides: Vec<(String, String)> = vars
        .filter(|(k, _)| k.starts_with("PLANNER_"))
        .collect();
    overrides.sort(); // deterministic application order
    for (name, raw) in overrides {
        let lower = name["PLANNER_".len()..].to_ascii_lowercase();
        let section = SECTIONS
            .iter()
            .filter(|s| {
                lower.starts_with(&format!("{s}_")) || lower == **s
            })
            .max_by_key(|s| s.len())
            .ok_or_else(|| anyhow!("{name}: unknown config section"))?;
        let key_path = lower
            .strip_prefix(&format!("{section}_"))
            .ok_or_else(|| anyhow!("{name}: missing key after section"))?;
        let parsed: serde_json::Value = serde_json::from_str(&raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.clone()));
        let mut node = value
            .as_object_mut()
            .expect("checked above")
            .entry(section.to_string())
            .or_insert_with(|| serde_json::json!({}));
        let parts: Vec<&str> = key_path.split("__").collect();
        for part in &parts[..parts.len() - 1] {
            node = node
                .as_object_mut()
                .ok_or_else(|| anyhow!("{name}: {part} is not an object"))?
                .entry(part.to_string())
                .or_insert_with(|| serde_json::json!({}));
        }
        node.as_object_mut()
            .ok_or_else(|| anyhow!("{name}: cannot set key on non-object"))?
            .insert(parts[parts.len() - 1].to_string(), parsed);
    }
    Ok(())
}
