//! Generic firefly optimizer over fixed-length real vectors.
//!
//! Fireflies carry a position and a cost; lower cost means brighter. Each
//! iteration sweeps all ordered pairs `(i, j)` with `j` earlier in the
//! population and moves the dimmer firefly toward the brighter one:
//!
//! ```text
//! x_i <- x_i + beta0 * exp(-gamma * d_ij^2) * (x_j - x_i) + alpha_t * noise
//! alpha_t = alpha0 * kappa^t
//! ```
//!
//! Updates are applied in place during the pair sweep (Gauss–Seidel style),
//! a moved firefly is re-evaluated immediately, and the best solution ever
//! seen is recorded per iteration, so the best-cost history is non-increasing.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FoaError {
    #[error("population size must be at least 2, got {0}")]
    PopulationTooSmall(usize),
    #[error("iteration count must be at least 1, got {0}")]
    NoIterations(usize),
    #[error("damping factor must lie strictly in (0, 1), got {0}")]
    DampingOutOfRange(f64),
    #[error("parameter {name} must be a finite nonnegative real, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("initial population is empty")]
    EmptyPopulation,
    #[error("population member has zero dimension")]
    ZeroDimension,
    #[error("bounds length {0} does not match problem dimension {1}")]
    BadBounds(usize, usize),
    #[error("cost function returned non-finite value {cost} at {position:?}")]
    NonFiniteCost { position: Vec<f64>, cost: f64 },
}

/// Optimizer parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoaParams {
    /// Population size (`i_max`), at least 2.
    pub population_size: usize,
    /// Iteration count (`t_max`), at least 1.
    pub iterations: usize,
    /// Attraction factor at zero distance (`beta0`).
    pub attraction_base: f64,
    /// Light absorption coefficient (`gamma`). Zero makes the attraction
    /// constant regardless of distance.
    pub light_absorption: f64,
    /// Initial randomness scaling (`alpha0`), in solution-space units.
    pub randomness_init: f64,
    /// Per-iteration damping of the randomness, strictly in (0, 1).
    pub damping: f64,
    /// Seed for the optimizer's private RNG stream.
    pub rng_seed: u64,
}

impl FoaParams {
    pub fn validate(&self) -> Result<(), FoaError> {
        if self.population_size < 2 {
            return Err(FoaError::PopulationTooSmall(self.population_size));
        }
        if self.iterations < 1 {
            return Err(FoaError::NoIterations(self.iterations));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(FoaError::DampingOutOfRange(self.damping));
        }
        for (name, value) in [
            ("attraction_base", self.attraction_base),
            ("light_absorption", self.light_absorption),
            ("randomness_init", self.randomness_init),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(FoaError::BadParameter { name, value });
            }
        }
        Ok(())
    }
}

/// One candidate solution: a position in the search space and its cost.
/// Lower cost means brighter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Firefly {
    pub position: Vec<f64>,
    pub cost: f64,
}

/// Outcome of an optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    /// Best solution ever evaluated.
    pub best: Firefly,
    /// Best-so-far cost after each iteration; non-increasing by construction.
    pub best_cost_history: Vec<f64>,
    /// Total number of cost-function evaluations.
    pub evaluations: usize,
}

/// Euclidean distance between two positions of equal dimension.
pub fn firefly_distance(a: &[f64], b: &[f64]) -> Result<f64, FoaError> {
    if a.len() != b.len() {
        return Err(FoaError::DimensionMismatch(a.len(), b.len()));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Randomness scaling at iteration `t`: `alpha0 * kappa^t`.
pub fn anneal_alpha(params: &FoaParams, t: usize) -> f64 {
    params.randomness_init * params.damping.powi(t as i32)
}

/// Move firefly `i` toward the at-least-as-bright firefly `j`.
///
/// Returns the new position of `i`; `noise` must have the problem dimension
/// and is scaled by the annealed randomness for iteration `t`.
pub fn attraction_step(
    i: &Firefly,
    j: &Firefly,
    params: &FoaParams,
    t: usize,
    noise: &[f64],
) -> Result<Vec<f64>, FoaError> {
    if i.position.len() != j.position.len() {
        return Err(FoaError::DimensionMismatch(i.position.len(), j.position.len()));
    }
    if noise.len() != i.position.len() {
        return Err(FoaError::DimensionMismatch(noise.len(), i.position.len()));
    }
    debug_assert!(j.cost <= i.cost, "target firefly must be at least as bright");
    let dist = firefly_distance(&i.position, &j.position)?;
    let beta = params.attraction_base * (-params.light_absorption * dist * dist).exp();
    let alpha = anneal_alpha(params, t);
    Ok(i.position
        .iter()
        .zip(&j.position)
        .zip(noise)
        .map(|((xi, xj), z)| xi + beta * (xj - xi) + alpha * z)
        .collect())
}

/// Run the optimizer without box constraints.
pub fn optimize<F>(
    cost_fn: F,
    init_population: &[Vec<f64>],
    params: &FoaParams,
) -> Result<OptimizeResult, FoaError>
where
    F: FnMut(&[f64]) -> f64,
{
    optimize_bounded(cost_fn, init_population, None, params)
}

/// Run the optimizer, clamping every coordinate to `bounds` after each move.
///
/// The initial population must be non-empty with uniform dimension. The cost
/// function must be deterministic and finite; a non-finite cost aborts the
/// run with the offending position.
pub fn optimize_bounded<F>(
    mut cost_fn: F,
    init_population: &[Vec<f64>],
    bounds: Option<&[(f64, f64)]>,
    params: &FoaParams,
) -> Result<OptimizeResult, FoaError>
where
    F: FnMut(&[f64]) -> f64,
{
    params.validate()?;
    if init_population.is_empty() {
        return Err(FoaError::EmptyPopulation);
    }
    let dim = init_population[0].len();
    if dim == 0 {
        return Err(FoaError::ZeroDimension);
    }
    for member in init_population {
        if member.len() != dim {
            return Err(FoaError::DimensionMismatch(member.len(), dim));
        }
    }
    if let Some(b) = bounds {
        if b.len() != dim {
            return Err(FoaError::BadBounds(b.len(), dim));
        }
    }

    let clamp = |position: &mut [f64]| {
        if let Some(b) = bounds {
            for (x, (lo, hi)) in position.iter_mut().zip(b) {
                *x = x.clamp(*lo, *hi);
            }
        }
    };
    let mut evaluations = 0usize;
    let mut eval = |position: &[f64], evaluations: &mut usize| -> Result<f64, FoaError> {
        let cost = cost_fn(position);
        *evaluations += 1;
        if !cost.is_finite() {
            return Err(FoaError::NonFiniteCost { position: position.to_vec(), cost });
        }
        Ok(cost)
    };

    let mut swarm: Vec<Firefly> = Vec::with_capacity(init_population.len());
    for member in init_population {
        let mut position = member.clone();
        clamp(&mut position);
        let cost = eval(&position, &mut evaluations)?;
        swarm.push(Firefly { position, cost });
    }

    // Elitist record: the best firefly ever evaluated is never lost.
    let mut best = swarm
        .iter()
        .min_by(|a, b| a.cost.partial_cmp(&b.cost).expect("finite costs"))
        .expect("non-empty swarm")
        .clone();

    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut history = Vec::with_capacity(params.iterations);
    let n = swarm.len();

    for t in 0..params.iterations {
        for i in 0..n {
            for j in 0..i {
                // Ties move i toward j, so seeded runs stay deterministic.
                let (mover, target) = if swarm[j].cost <= swarm[i].cost { (i, j) } else { (j, i) };
                let noise: Vec<f64> =
                    (0..dim).map(|_| rng.gen_range(-0.5..=0.5)).collect();
                let mut position =
                    attraction_step(&swarm[mover], &swarm[target], params, t, &noise)?;
                clamp(&mut position);
                let cost = eval(&position, &mut evaluations)?;
                swarm[mover] = Firefly { position, cost };
                if cost < best.cost {
                    best = swarm[mover].clone();
                }
            }
        }
        history.push(best.cost);
    }

    Ok(OptimizeResult { best, best_cost_history: history, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn base_params() -> FoaParams {
        FoaParams {
            population_size: 3,
            iterations: 1,
            attraction_base: 1.0,
            light_absorption: 1.0,
            randomness_init: 0.0,
            damping: 0.5,
            rng_seed: 7,
        }
    }

    #[test]
    fn distance_of_identical_points_is_zero() {
        assert_eq!(firefly_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn distance_matches_three_four_five_triangle() {
        assert_eq!(firefly_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn distance_matches_hand_evaluation_in_three_dims() {
        // sqrt(1 + 4 + 4) = 3
        let d = firefly_distance(&[1.0, 1.0, 1.0], &[2.0, 3.0, 3.0]).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn distance_rejects_dimension_mismatch() {
        assert!(matches!(
            firefly_distance(&[1.0], &[1.0, 2.0]),
            Err(FoaError::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn anneal_alpha_hand_values() {
        let mut p = base_params();
        p.randomness_init = 1.0;
        assert_eq!(anneal_alpha(&p, 0), 1.0);
        assert_eq!(anneal_alpha(&p, 3), 0.125);
        p.randomness_init = 0.0;
        assert_eq!(anneal_alpha(&p, 11), 0.0);
    }

    #[test]
    fn attraction_at_zero_distance_uses_full_base() {
        // d = 0 means the attraction factor is exactly beta0; with beta0 = 1
        // and no noise the mover lands on the target.
        let p = base_params();
        let a = Firefly { position: vec![2.0], cost: 5.0 };
        let b = Firefly { position: vec![2.0], cost: 1.0 };
        let moved = attraction_step(&a, &b, &p, 0, &[0.0]).unwrap();
        assert_eq!(moved, vec![2.0]);
    }

    #[test]
    fn update_freezes_when_all_terms_vanish() {
        let mut p = base_params();
        p.attraction_base = 0.0;
        p.randomness_init = 0.0;
        let a = Firefly { position: vec![1.5, -2.0], cost: 5.0 };
        let b = Firefly { position: vec![0.0, 0.0], cost: 1.0 };
        let moved = attraction_step(&a, &b, &p, 0, &[0.3, 0.3]).unwrap();
        assert_eq!(moved, vec![1.5, -2.0]);
    }

    #[test]
    fn full_pull_at_constant_attraction() {
        // gamma = 0 keeps beta = beta0 regardless of distance, so the mover
        // is pulled all the way onto the target.
        let mut p = base_params();
        p.light_absorption = 0.0;
        let a = Firefly { position: vec![0.0], cost: 9.0 };
        let b = Firefly { position: vec![1.0], cost: 1.0 };
        let moved = attraction_step(&a, &b, &p, 0, &[0.0]).unwrap();
        assert_eq!(moved, vec![1.0]);
    }

    #[test]
    fn pure_random_walk_when_attraction_base_is_zero() {
        let mut p = base_params();
        p.attraction_base = 0.0;
        p.randomness_init = 0.4;
        let a = Firefly { position: vec![1.0, 2.0], cost: 5.0 };
        let b = Firefly { position: vec![-3.0, 0.5], cost: 1.0 };
        let noise = [0.25, -0.5];
        let moved = attraction_step(&a, &b, &p, 2, &noise).unwrap();
        let alpha = 0.4 * 0.5f64.powi(2);
        assert_eq!(moved, vec![1.0 + alpha * 0.25, 2.0 - alpha * 0.5]);
    }

    #[test]
    fn optimize_rejects_empty_population() {
        assert!(matches!(
            optimize(|_| 0.0, &[], &base_params()),
            Err(FoaError::EmptyPopulation)
        ));
    }

    #[test]
    fn optimize_reports_non_finite_cost_with_position() {
        let init = vec![vec![1.0], vec![2.0]];
        let err = optimize(
            |x| if x[0] > 1.5 { f64::NAN } else { 0.0 },
            &init,
            &base_params(),
        )
        .unwrap_err();
        match err {
            FoaError::NonFiniteCost { position, .. } => assert_eq!(position, vec![2.0]),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn frozen_dynamics_keep_population_and_pick_cheaper_input() {
        let mut p = base_params();
        p.population_size = 2;
        p.iterations = 1;
        p.attraction_base = 0.0;
        p.randomness_init = 0.0;
        let init = vec![vec![3.0], vec![-1.0]];
        let result = optimize(|x| x[0].abs(), &init, &p).unwrap();
        assert_eq!(result.best.position, vec![-1.0]);
        assert_eq!(result.best.cost, 1.0);
    }

    #[test]
    fn identical_members_only_drift_by_noise() {
        let mut p = base_params();
        p.population_size = 2;
        p.iterations = 1;
        p.randomness_init = 0.0;
        let init = vec![vec![2.0, 2.0], vec![2.0, 2.0]];
        let result = optimize(|x| x.iter().sum(), &init, &p).unwrap();
        // Zero distance between identical members plus zero noise: no motion.
        assert_eq!(result.best.position, vec![2.0, 2.0]);
    }

    #[test]
    fn converges_to_origin_on_quadratic_bowl() {
        // Analytic optimum at x = 0; check convergence across seeds.
        let init = vec![vec![-2.0], vec![3.0], vec![0.5]];
        let mut hits = 0;
        for seed in 0..10 {
            let p = FoaParams {
                population_size: 3,
                iterations: 200,
                attraction_base: 1.0,
                light_absorption: 1.0,
                randomness_init: 0.3,
                damping: 0.97,
                rng_seed: seed,
            };
            let result = optimize(|x| x[0] * x[0], &init, &p).unwrap();
            if result.best.position[0].abs() <= 0.1 {
                hits += 1;
            }
        }
        assert!(hits >= 9, "only {hits}/10 seeds converged near the origin");
    }

    #[test]
    fn evaluation_count_matches_pair_sweep() {
        let mut p = base_params();
        p.population_size = 4;
        p.iterations = 5;
        p.randomness_init = 0.1;
        let init = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let result = optimize(|x| x[0].abs(), &init, &p).unwrap();
        // n initial evaluations plus one re-evaluation per pair update.
        assert_eq!(result.evaluations, 4 + 5 * (4 * 3) / 2);
        assert_eq!(result.best_cost_history.len(), 5);
    }

    #[test]
    fn same_seed_reproduces_bit_identical_result() {
        let init = vec![vec![-2.0, 1.0], vec![3.0, -1.0], vec![0.5, 0.5]];
        let mut p = base_params();
        p.iterations = 30;
        p.randomness_init = 0.2;
        let run = || optimize(|x| x.iter().map(|v| v * v).sum(), &init, &p).unwrap();
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    #[test]
    fn bounded_run_respects_box() {
        let init = vec![vec![0.9], vec![0.1], vec![0.4]];
        let mut p = base_params();
        p.iterations = 40;
        p.randomness_init = 0.5;
        let result = optimize_bounded(
            |x| (x[0] - 2.0).abs(),
            &init,
            Some(&[(0.0, 1.0)]),
            &p,
        )
        .unwrap();
        assert!(result.best.position[0] >= 0.0 && result.best.position[0] <= 1.0);
        // The unconstrained optimum (2.0) lies outside; clamping should pin
        // the best near the upper bound.
        assert!(result.best.position[0] > 0.95);
    }

    #[test]
    fn rejects_bad_damping() {
        let mut p = base_params();
        p.damping = 1.0;
        assert!(matches!(p.validate(), Err(FoaError::DampingOutOfRange(_))));
        p.damping = 0.0;
        assert!(matches!(p.validate(), Err(FoaError::DampingOutOfRange(_))));
    }

    proptest! {
        #[test]
        fn best_cost_history_is_non_increasing(seed in 0u64..500) {
            let p = FoaParams {
                population_size: 4,
                iterations: 25,
                attraction_base: 1.0,
                light_absorption: 0.5,
                randomness_init: 0.4,
                damping: 0.9,
                rng_seed: seed,
            };
            let init = vec![vec![-2.0, 2.0], vec![3.0, 1.0], vec![0.5, -4.0], vec![1.0, 1.0]];
            let result = optimize(|x| x.iter().map(|v| v * v).sum(), &init, &p).unwrap();
            for w in result.best_cost_history.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
        }

        #[test]
        fn attraction_factor_is_positive_bounded_and_decreasing(
            d1 in 0.0f64..10.0,
            extra in 0.001f64..10.0,
            gamma in 0.0f64..2.0,
        ) {
            let beta0 = 1.7;
            let factor = |d: f64| beta0 * (-gamma * d * d).exp();
            let near = factor(d1);
            let far = factor(d1 + extra);
            prop_assert!(near > 0.0 && near <= beta0);
            prop_assert!(far <= near);
        }
    }
}
