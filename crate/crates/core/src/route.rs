//! Global route planning under a battery-time budget.
//!
//! Candidate routes are encoded as fixed-length priority-key vectors (one key
//! per graph node, each in [0, 1]) so the firefly optimizer's vector
//! arithmetic stays well-defined. Decoding walks greedily: from the current
//! node, take the unused incident edge whose far endpoint carries the highest
//! key, stopping on the target. The walk never repeats an edge; node revisits
//! through distinct edges are allowed.
//!
//! A route's cost against a budget `t_budget` is
//! `|total_time - t_budget| * max(0, total_time / t_budget)`, which is zero
//! exactly on budget and penalizes overtime harder than equal undertime.

use crate::foa::{self, FoaError, FoaParams, OptimizeResult};
use crate::graph::{edge_key, EdgeKey, OperationGraph};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Salt that separates the init-population RNG stream from the optimizer's.
const INIT_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Infeasible decodes cost this multiple of the battery lifetime: finite, so
/// the population can move through infeasible regions, but far above any
/// route cost of interest.
const INFEASIBLE_PENALTY_FACTOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("node id {0} does not exist")]
    InvalidNode(usize),
    #[error("start and target must differ")]
    StartEqualsTarget,
    #[error("keys length {0} does not match node count {1}")]
    BadKeyLength(usize, usize),
    #[error("no time entry for edge ({0}, {1})")]
    MissingEdgeTime(usize, usize),
    #[error("budget must be positive, got {0}")]
    NonPositiveBudget(f64),
    #[error("route time must be nonnegative, got {0}")]
    NegativeRouteTime(f64),
    #[error(
        "no feasible route found: population {population_size}, iterations {iterations}, \
         infeasible decode fraction {infeasible_fraction:.3}"
    )]
    NoFeasibleRoute {
        population_size: usize,
        iterations: usize,
        infeasible_fraction: f64,
    },
    #[error(transparent)]
    Foa(#[from] FoaError),
}

/// Fixed-length priority vector over graph nodes; components clamp to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityKeys {
    keys: Vec<f64>,
}

impl PriorityKeys {
    pub fn new(keys: Vec<f64>) -> Self {
        Self { keys: keys.into_iter().map(|k| k.clamp(0.0, 1.0)).collect() }
    }

    pub fn keys(&self) -> &[f64] {
        &self.keys
    }
}

/// Battery budget: full lifetime and the remaining share.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteBudget {
    pub battery_lifetime: f64,
    pub remaining: f64,
}

impl RouteBudget {
    pub fn full(battery_lifetime: f64) -> Self {
        Self { battery_lifetime, remaining: battery_lifetime }
    }
}

/// An edge walk from start to target with no repeated edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    /// Visited nodes in order; first is the start, last the target.
    pub node_sequence: Vec<usize>,
    /// Traversed edges in order, as canonical endpoint pairs.
    pub edge_sequence: Vec<EdgeKey>,
    /// Sum of per-edge times in sequence order, seconds.
    pub total_time: f64,
    /// Budget cost of the route.
    pub cost: f64,
}

impl Route {
    pub fn len(&self) -> usize {
        self.edge_sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_sequence.is_empty()
    }
}

/// Why a priority vector failed to decode into a route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Infeasible {
    /// The walk ran out of unused incident edges at the given node.
    Stuck { at_node: usize, steps: usize },
    /// The walk used every edge without reaching the target.
    StepLimit,
}

/// Decode outcome: a structurally valid route or the reason there is none.
pub type Decoded = Result<DecodedRoute, Infeasible>;

/// Node and edge sequence produced by the greedy decode (times not yet
/// attached).
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedRoute {
    pub node_sequence: Vec<usize>,
    pub edge_sequence: Vec<EdgeKey>,
}

/// Greedy priority-key decode. Pure: the same keys and graph always produce
/// the same walk. Ties on keys break toward the lowest node id.
pub fn decode_route(
    keys: &PriorityKeys,
    graph: &OperationGraph,
    start: usize,
    target: usize,
) -> Result<Decoded, RouteError> {
    let k = graph.nodes().len();
    if start >= k {
        return Err(RouteError::InvalidNode(start));
    }
    if target >= k {
        return Err(RouteError::InvalidNode(target));
    }
    if start == target {
        return Err(RouteError::StartEqualsTarget);
    }
    if keys.keys().len() != k {
        return Err(RouteError::BadKeyLength(keys.keys().len(), k));
    }

    let mut used = vec![false; graph.edges().len()];
    let mut node_sequence = vec![start];
    let mut edge_sequence = Vec::new();
    let mut current = start;
    for step in 0..graph.edges().len() {
        let mut choice: Option<(usize, usize)> = None; // (edge index, far node)
        for &e in graph.incident_edges(current) {
            if used[e] {
                continue;
            }
            let far = graph.edges()[e].other(current);
            let better = match choice {
                None => true,
                Some((_, best_far)) => {
                    let (key, best_key) = (keys.keys()[far], keys.keys()[best_far]);
                    key > best_key || (key == best_key && far < best_far)
                }
            };
            if better {
                choice = Some((e, far));
            }
        }
        let Some((e, far)) = choice else {
            return Ok(Err(Infeasible::Stuck { at_node: current, steps: step }));
        };
        used[e] = true;
        edge_sequence.push(graph.edges()[e].key());
        node_sequence.push(far);
        current = far;
        if current == target {
            return Ok(Ok(DecodedRoute { node_sequence, edge_sequence }));
        }
    }
    Ok(Err(Infeasible::StepLimit))
}

/// Sum the mapped times of a route's edges in sequence order.
pub fn route_time(
    edge_sequence: &[EdgeKey],
    per_edge_times: &HashMap<EdgeKey, f64>,
) -> Result<f64, RouteError> {
    let mut total = 0.0;
    for &(i, j) in edge_sequence {
        let t = per_edge_times
            .get(&edge_key(i, j))
            .ok_or(RouteError::MissingEdgeTime(i, j))?;
        total += t;
    }
    Ok(total)
}

/// How route times are scored against the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CostVariant {
    /// `|t - budget| * max(0, t / budget)`: zero on budget, overtime costs
    /// more than equal undertime.
    #[default]
    Literal,
    /// Penalty only on overtime: `|t - budget| * max(0, (t - budget) / budget)`.
    OvertimeOnly,
}

/// Budget cost of a route time.
pub fn route_cost(total_time: f64, budget: f64) -> Result<f64, RouteError> {
    route_cost_variant(total_time, budget, CostVariant::Literal)
}

pub fn route_cost_variant(
    total_time: f64,
    budget: f64,
    variant: CostVariant,
) -> Result<f64, RouteError> {
    if !(budget > 0.0) {
        return Err(RouteError::NonPositiveBudget(budget));
    }
    if total_time < 0.0 {
        return Err(RouteError::NegativeRouteTime(total_time));
    }
    let deficit = (total_time - budget).abs();
    let multiplier = match variant {
        CostVariant::Literal => (total_time / budget).max(0.0),
        CostVariant::OvertimeOnly => ((total_time - budget) / budget).max(0.0),
    };
    Ok(deficit * multiplier)
}

/// What the planner optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RouteObjective {
    /// Fit the remaining budget via the route cost function.
    #[default]
    BudgetFit,
    /// Minimize total route time outright (re-planner fallback near budget
    /// exhaustion).
    ShortestTime,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RoutePlanOptions {
    pub cost_variant: CostVariant,
    pub objective: RouteObjective,
    /// Hard budget: decodes whose total time exceeds this are dominated by
    /// every decode within it (routes should approach the budget but not
    /// overstep it). `None` scores purely by the cost function.
    pub budget_cap: Option<f64>,
}

/// Plan a route with the firefly optimizer over priority-key space.
///
/// Infeasible decodes receive a large finite penalty so the population can
/// cross infeasible regions. Fails with diagnostics if not a single feasible
/// decode was seen in the entire run.
pub fn plan_route(
    graph: &OperationGraph,
    start: usize,
    target: usize,
    budget: RouteBudget,
    per_edge_times: &HashMap<EdgeKey, f64>,
    params: &FoaParams,
) -> Result<(Route, OptimizeResult), RouteError> {
    plan_route_with(graph, start, target, budget, per_edge_times, params, RoutePlanOptions::default())
}

pub fn plan_route_with(
    graph: &OperationGraph,
    start: usize,
    target: usize,
    budget: RouteBudget,
    per_edge_times: &HashMap<EdgeKey, f64>,
    params: &FoaParams,
    options: RoutePlanOptions,
) -> Result<(Route, OptimizeResult), RouteError> {
    if !(budget.remaining > 0.0) {
        return Err(RouteError::NonPositiveBudget(budget.remaining));
    }
    params.validate()?;
    // Fail fast on bad ids; decode re-checks on every call.
    let _ = decode_route(&PriorityKeys::new(vec![0.5; graph.nodes().len()]), graph, start, target)?;

    let dim = graph.nodes().len();
    let mut init_rng = ChaCha8Rng::seed_from_u64(params.rng_seed ^ INIT_SEED_SALT);
    let init_population: Vec<Vec<f64>> = (0..params.population_size)
        .map(|_| (0..dim).map(|_| init_rng.gen_range(0.0..=1.0)).collect())
        .collect();
    let bounds = vec![(0.0, 1.0); dim];

    let penalty = match options.budget_cap {
        // Infeasible must still rank below any over-cap walk.
        Some(cap) => {
            let total_all: f64 = per_edge_times.values().sum();
            (INFEASIBLE_PENALTY_FACTOR * budget.battery_lifetime).max(3.0 * cap + total_all)
        }
        None => INFEASIBLE_PENALTY_FACTOR * budget.battery_lifetime,
    };
    let mut decodes = 0u64;
    let mut infeasible = 0u64;
    let score = |position: &[f64], decodes: &mut u64, infeasible: &mut u64| -> f64 {
        *decodes += 1;
        let keys = PriorityKeys::new(position.to_vec());
        match decode_route(&keys, graph, start, target).expect("ids validated above") {
            Ok(decoded) => {
                let time = route_time(&decoded.edge_sequence, per_edge_times)
                    .expect("graph edges all carry times");
                if let Some(cap) = options.budget_cap {
                    if time > cap {
                        // Above every within-cap cost, below the infeasible
                        // penalty, and still decreasing toward the cap.
                        return 2.0 * cap + (time - cap);
                    }
                }
                match options.objective {
                    RouteObjective::BudgetFit => {
                        route_cost_variant(time, budget.remaining, options.cost_variant)
                            .expect("positive budget")
                    }
                    RouteObjective::ShortestTime => time,
                }
            }
            Err(_) => {
                *infeasible += 1;
                penalty
            }
        }
    };

    let result = foa::optimize_bounded(
        |x| score(x, &mut decodes, &mut infeasible),
        &init_population,
        Some(&bounds),
        params,
    )?;

    let best_keys = PriorityKeys::new(result.best.position.clone());
    match decode_route(&best_keys, graph, start, target)? {
        Ok(decoded) => {
            let total_time = route_time(&decoded.edge_sequence, per_edge_times)?;
            let cost = route_cost_variant(total_time, budget.remaining, options.cost_variant)?;
            Ok((
                Route {
                    node_sequence: decoded.node_sequence,
                    edge_sequence: decoded.edge_sequence,
                    total_time,
                    cost,
                },
                result,
            ))
        }
        Err(_) => Err(RouteError::NoFeasibleRoute {
            population_size: params.population_size,
            iterations: params.iterations,
            infeasible_fraction: infeasible as f64 / decodes.max(1) as f64,
        }),
    }
}
