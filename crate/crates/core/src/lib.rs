//! Battery-aware AUV mission simulation.
//!
//! The crate connects three planning layers:
//!
//! - [`foa`] — a generic firefly optimizer over fixed-length real vectors,
//!   shared by both planners below.
//! - [`route`] — global routing over a waypoint graph ([`graph`]) under a
//!   battery-time budget, with candidate routes encoded as priority-key
//!   vectors.
//! - [`path`] — local B-spline path planning between consecutive route
//!   nodes through a vortex current field ([`current`]), penalizing
//!   kinematic-limit violations.
//!
//! [`mission`] executes a full mission: it traverses the planned route edge
//! by edge, re-routes whenever a local path overruns its expected edge time,
//! and accounts the total mission cost against the battery lifetime.
//!
//! All randomness is seeded; identical seeds and inputs reproduce identical
//! results bit for bit.

// Validation guards use `!(x > 0.0)` on purpose: it rejects NaN along with
// nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Per-axis numeric kernels read better with explicit axis indices.
#![allow(clippy::needless_range_loop)]

pub mod current;
pub mod foa;
pub mod graph;
pub mod mission;
pub mod path;
pub mod route;
pub mod units;

pub use current::{CurrentField, CurrentSample, Vortex};
pub use foa::{FoaParams, Firefly, OptimizeResult};
pub use graph::{Edge, Node, OperationGraph};
pub use mission::{MissionConfig, MissionLog, MissionStatus, MissionTiming};
pub use path::{KinematicLimits, LocalPath, PathOptions};
pub use route::{PriorityKeys, Route, RouteBudget};
