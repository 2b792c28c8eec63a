//! Mission execution: traverse the planned route edge by edge, re-route when
//! a local path overruns its expected edge time, and account the total
//! mission cost against the battery lifetime.
//!
//! The controller keeps an inverse battery countdown. After each traversed
//! edge the remaining time drops by the realized path time. An overrun
//! (realized strictly above expected, beyond float accumulation noise)
//! triggers a re-plan: visited edges are removed from the working graph, the
//! current node becomes the new start, and the route planner re-fits the
//! remaining budget. Re-plan compute time enters the mission cost but does
//! not drain the battery.

use crate::current::CurrentField;
use crate::foa::FoaParams;
use crate::graph::{EdgeKey, OperationGraph};
use crate::path::{self, KinematicLimits, PathOptions};
use crate::route::{
    self, Route, RouteBudget, RouteError, RouteObjective, RoutePlanOptions,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::time::Instant;
use thiserror::Error;

/// Relative slack treated as "equal" when comparing a realized path time to
/// the expected edge time: an exactly-straight local path reproduces the edge
/// time only up to floating-point accumulation.
const TIME_EQUALITY_REL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MissionError {
    #[error("battery lifetime must be positive, got {0}")]
    BadBattery(f64),
    #[error("node id {0} does not exist")]
    InvalidNode(usize),
    #[error("start and target must differ")]
    StartEqualsTarget,
    #[error("initial route planning failed: {0}")]
    InitialPlan(#[from] RouteError),
    #[error("local path planning failed: {0}")]
    Path(#[from] path::PathError),
}

/// How re-plan compute time is accounted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ComputeTimeMode {
    /// Wall-clock around each re-plan; honest but not reproducible.
    Measured,
    /// Fixed seconds per re-plan; deterministic for tests.
    Synthetic(f64),
}

/// Full mission setup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MissionConfig {
    /// Battery lifetime, seconds.
    pub battery_lifetime: f64,
    /// Cruise speed, m/s.
    pub cruise_speed: f64,
    pub limits: KinematicLimits,
    pub route_foa: FoaParams,
    pub path_foa: FoaParams,
    pub path_options: PathOptions,
    pub compute_time_mode: ComputeTimeMode,
    /// Base seed; per-plan seeds are derived from it so sequential plans use
    /// independent streams.
    pub rng_seed: u64,
    /// When the next edge's expected time exceeds the remaining budget,
    /// re-plan once with a shortest-time objective before pressing on.
    pub budget_fallback: bool,
    /// Fraction of the remaining budget withheld from the route planner's
    /// target. Realized local paths are never shorter than their chords, so
    /// a route that fills the budget exactly overruns it almost surely; the
    /// margin keeps the mission on the non-overstepping side.
    pub plan_margin_frac: f64,
    /// Absolute floor on that margin, seconds. Near budget exhaustion the
    /// relative margin shrinks below the per-edge overrun scale; the floor
    /// keeps the final legs covered.
    pub plan_margin_floor: f64,
    /// Sensitivity switch: also drain the battery by re-plan compute time.
    /// Off by default; compute time always enters the mission cost.
    pub compute_drains_battery: bool,
}

/// Trace of one traversed edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: usize,
    pub to: usize,
    pub edge: EdgeKey,
    /// Expected traversal time, seconds.
    pub expected_time: f64,
    /// Realized local path time, seconds.
    pub realized_time: f64,
    /// Penalized local path cost.
    pub path_cost: f64,
    /// Realized delay `max(0, realized - expected)`, seconds.
    pub delay: f64,
    /// Whether this overrun actually triggered a re-plan.
    pub replan_triggered: bool,
    /// Best-cost-per-iteration trace of the local path optimization.
    pub path_convergence: Vec<f64>,
}

/// One route adopted during the mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedRoute {
    pub nodes: Vec<usize>,
    pub expected_total: f64,
    pub cost: f64,
    pub objective: RouteObjective,
    /// Number of edges already traversed when this route was adopted.
    pub adopted_at_edge: usize,
    /// Edge count at which it was abandoned, if it was.
    pub abandoned_at_edge: Option<usize>,
    /// Best-cost-per-iteration trace of the route optimization.
    pub convergence: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MissionStatus {
    /// Target reached with battery to spare.
    Completed,
    /// Battery exhausted before reaching the target.
    TimedOut,
    /// A re-plan found no feasible route.
    Stranded { detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionTotals {
    /// Sum of realized edge times, seconds.
    pub route_time: f64,
    /// Battery time left at mission end (negative when timed out).
    pub time_remaining: f64,
    /// Number of executed overrun re-plans.
    pub replans: usize,
    /// Shortest-time fallback plans near budget exhaustion.
    pub budget_fallbacks: usize,
    /// Accounted re-plan compute time, seconds.
    pub compute_time_total: f64,
    /// Total mission cost.
    pub mission_cost: f64,
}

/// Complete trace of one mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionLog {
    pub status: MissionStatus,
    pub start: usize,
    pub target: usize,
    pub battery_lifetime: f64,
    pub edges: Vec<EdgeRecord>,
    pub routes: Vec<PlannedRoute>,
    pub totals: MissionTotals,
}

/// Wall-clock timings, kept out of [`MissionLog`] so deterministic runs stay
/// byte-identical.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MissionTiming {
    pub route_plan_wall: Vec<f64>,
    pub path_plan_wall: Vec<f64>,
}

/// Total mission cost: the realized-route budget cost plus re-plan compute
/// time. Realized per-edge costs (path cost plus delay) stand in for the
/// expected times.
pub fn mission_cost(log: &MissionLog) -> f64 {
    let realized: f64 = log.edges.iter().map(|e| e.path_cost + e.delay).sum();
    let route_term = if log.edges.is_empty() {
        0.0
    } else {
        route::route_cost(realized, log.battery_lifetime).expect("positive lifetime")
    };
    route_term + log.totals.compute_time_total
}

/// Derive an independent seed for plan number `index` of a given kind.
fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    // splitmix64 over the combined words
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Planner<'a> {
    graph: &'a OperationGraph,
    cfg: &'a MissionConfig,
    per_edge_times: std::collections::HashMap<EdgeKey, f64>,
    plan_count: u64,
}

impl<'a> Planner<'a> {
    /// Margin-reduced planning target for a remaining budget.
    fn plan_target(&self, remaining: f64) -> f64 {
        let margin = (self.cfg.plan_margin_frac.clamp(0.0, 0.5) * remaining)
            .max(self.cfg.plan_margin_floor.max(0.0))
            .min(0.5 * remaining);
        remaining - margin
    }

    /// Route score under the capped budget-fit objective: within the cap the
    /// plain budget cost applies; above it every within-cap route dominates.
    fn capped_score(&self, total_time: f64, remaining: f64) -> f64 {
        let target = self.plan_target(remaining);
        if total_time > target {
            2.0 * target + (total_time - target)
        } else {
            route::route_cost(total_time, target.max(f64::MIN_POSITIVE))
                .expect("positive target")
        }
    }

    fn plan(
        &mut self,
        visited: &BTreeSet<EdgeKey>,
        from: usize,
        target: usize,
        remaining: f64,
        objective: RouteObjective,
    ) -> (Result<(Route, Vec<f64>), RouteError>, f64) {
        let masked = self.graph.without_edges(visited);
        let mut params = self.cfg.route_foa.clone();
        params.rng_seed = derive_seed(self.cfg.rng_seed, 1, self.plan_count);
        self.plan_count += 1;
        let target_time = match objective {
            RouteObjective::BudgetFit => self.plan_target(remaining),
            RouteObjective::ShortestTime => remaining,
        };
        let budget = RouteBudget {
            battery_lifetime: self.cfg.battery_lifetime,
            remaining: target_time.max(f64::MIN_POSITIVE),
        };
        // Capping at the margin-reduced target keeps whole-plan expectations
        // a reserve short of the battery, covering realized-over-expected
        // noise on the final legs.
        let budget_cap = match objective {
            RouteObjective::BudgetFit => Some(target_time),
            RouteObjective::ShortestTime => None,
        };
        let started = Instant::now();
        let outcome = route::plan_route_with(
            &masked,
            from,
            target,
            budget,
            &self.per_edge_times,
            &params,
            RoutePlanOptions { objective, budget_cap, ..Default::default() },
        );
        let wall = started.elapsed().as_secs_f64();
        (outcome.map(|(r, opt)| (r, opt.best_cost_history)), wall)
    }
}

/// Execute a mission. Budget exhaustion and stranding are reported in the
/// log's status, not as errors.
pub fn run_mission(
    graph: &OperationGraph,
    field: &CurrentField,
    start: usize,
    target: usize,
    cfg: &MissionConfig,
) -> Result<(MissionLog, MissionTiming), MissionError> {
    if !(cfg.battery_lifetime > 0.0) {
        return Err(MissionError::BadBattery(cfg.battery_lifetime));
    }
    let node_count = graph.nodes().len();
    if start >= node_count {
        return Err(MissionError::InvalidNode(start));
    }
    if target >= node_count {
        return Err(MissionError::InvalidNode(target));
    }
    if start == target {
        return Err(MissionError::StartEqualsTarget);
    }

    let mut planner = Planner {
        graph,
        cfg,
        per_edge_times: graph.expected_time_map(),
        plan_count: 0,
    };
    let mut timing = MissionTiming::default();
    let mut visited: BTreeSet<EdgeKey> = BTreeSet::new();
    let mut edges: Vec<EdgeRecord> = Vec::new();
    let mut routes: Vec<PlannedRoute> = Vec::new();
    let mut remaining = cfg.battery_lifetime;
    let mut current = start;
    let mut replans = 0usize;
    let mut budget_fallbacks = 0usize;
    let mut compute_time_total = 0.0f64;
    let mut path_plan_count = 0u64;
    // One fallback per adopted route; reset whenever a new route is adopted.
    let mut fallback_armed = cfg.budget_fallback;

    let (initial, wall) =
        planner.plan(&visited, current, target, remaining, RouteObjective::BudgetFit);
    timing.route_plan_wall.push(wall);
    let (mut active_route, convergence) = initial?;
    let mut route_pos = 0usize; // index into the active route's edges
    routes.push(PlannedRoute {
        nodes: active_route.node_sequence.clone(),
        expected_total: active_route.total_time,
        cost: active_route.cost,
        objective: RouteObjective::BudgetFit,
        adopted_at_edge: 0,
        abandoned_at_edge: None,
        convergence,
    });

    let status = loop {
        if current == target {
            break MissionStatus::Completed;
        }
        let next_node = active_route.node_sequence[route_pos + 1];
        let edge = active_route.edge_sequence[route_pos];
        let expected_time = planner.per_edge_times[&edge];

        // Near budget exhaustion, try once to swap in a quicker remaining
        // route before committing to an edge that is expected to overrun
        // what is left of the battery.
        if fallback_armed && expected_time > remaining {
            fallback_armed = false;
            budget_fallbacks += 1;
            let (outcome, wall) = planner.plan(
                &visited,
                current,
                target,
                remaining.max(f64::MIN_POSITIVE),
                RouteObjective::ShortestTime,
            );
            timing.route_plan_wall.push(wall);
            if let Ok((fallback_route, convergence)) = outcome {
                if fallback_route.total_time < expected_time {
                    routes.last_mut().expect("route adopted").abandoned_at_edge =
                        Some(edges.len());
                    routes.push(PlannedRoute {
                        nodes: fallback_route.node_sequence.clone(),
                        expected_total: fallback_route.total_time,
                        cost: fallback_route.cost,
                        objective: RouteObjective::ShortestTime,
                        adopted_at_edge: edges.len(),
                        abandoned_at_edge: None,
                        convergence,
                    });
                    active_route = fallback_route;
                    route_pos = 0;
                    continue;
                }
            }
        }

        let mut path_params = cfg.path_foa.clone();
        path_params.rng_seed = derive_seed(cfg.rng_seed, 2, path_plan_count);
        path_plan_count += 1;
        let from_pos = graph.node(current).expect("valid id").position;
        let to_pos = graph.node(next_node).expect("valid id").position;
        let mut options = cfg.path_options;
        options.volume_clip = Some(([0.0; 3], graph.bounds()));
        let path_started = Instant::now();
        let (local_path, path_result) = path::plan_path(
            from_pos,
            to_pos,
            field,
            &cfg.limits,
            cfg.cruise_speed,
            &path_params,
            &options,
        )?;
        timing.path_plan_wall.push(path_started.elapsed().as_secs_f64());

        // Traverse the edge.
        let realized_time = local_path.path_time;
        visited.insert(edge);
        remaining -= realized_time;
        current = next_node;
        route_pos += 1;
        edges.push(EdgeRecord {
            from: active_route.node_sequence[route_pos - 1],
            to: next_node,
            edge,
            expected_time,
            realized_time,
            path_cost: local_path.cost,
            delay: (realized_time - expected_time).max(0.0),
            replan_triggered: false,
            path_convergence: path_result.best_cost_history,
        });

        if current == target {
            break if remaining >= 0.0 {
                MissionStatus::Completed
            } else {
                MissionStatus::TimedOut
            };
        }
        if remaining <= 0.0 {
            break MissionStatus::TimedOut;
        }

        let overrun = realized_time
            > expected_time + TIME_EQUALITY_REL * expected_time.max(1.0);
        if overrun {
            // Re-plan from the node just reached over the unvisited edges.
            replans += 1;
            edges.last_mut().expect("just pushed").replan_triggered = true;
            let (outcome, wall) =
                planner.plan(&visited, current, target, remaining, RouteObjective::BudgetFit);
            timing.route_plan_wall.push(wall);
            let plan_cost = match cfg.compute_time_mode {
                ComputeTimeMode::Synthetic(c) => c,
                ComputeTimeMode::Measured => wall,
            };
            compute_time_total += plan_cost;
            if cfg.compute_drains_battery {
                remaining -= plan_cost;
                if remaining <= 0.0 {
                    break MissionStatus::TimedOut;
                }
            }
            match outcome {
                Ok((new_route, convergence)) => {
                    // The incumbent route's tail is still feasible (its edges
                    // are unvisited); adopt the re-plan only if it scores at
                    // least as well under the capped budget objective.
                    let tail_time: f64 = active_route.edge_sequence[route_pos..]
                        .iter()
                        .map(|e| planner.per_edge_times[e])
                        .sum();
                    let keep_tail = planner.capped_score(tail_time, remaining)
                        < planner.capped_score(new_route.total_time, remaining);
                    if !keep_tail {
                        routes.last_mut().expect("route adopted").abandoned_at_edge =
                            Some(edges.len());
                        routes.push(PlannedRoute {
                            nodes: new_route.node_sequence.clone(),
                            expected_total: new_route.total_time,
                            cost: new_route.cost,
                            objective: RouteObjective::BudgetFit,
                            adopted_at_edge: edges.len(),
                            abandoned_at_edge: None,
                            convergence,
                        });
                        active_route = new_route;
                        route_pos = 0;
                    }
                    fallback_armed = cfg.budget_fallback;
                }
                Err(err) => {
                    break MissionStatus::Stranded { detail: err.to_string() };
                }
            }
        }
    };

    let route_time: f64 = edges.iter().map(|e| e.realized_time).sum();
    let mut log = MissionLog {
        status,
        start,
        target,
        battery_lifetime: cfg.battery_lifetime,
        edges,
        routes,
        totals: MissionTotals {
            route_time,
            time_remaining: remaining,
            replans,
            budget_fallbacks,
            compute_time_total,
            mission_cost: 0.0,
        },
    };
    log.totals.mission_cost = mission_cost(&log);
    Ok((log, timing))
}
