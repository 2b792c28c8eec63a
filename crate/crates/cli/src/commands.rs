//! Command implementations. Every output file embeds the fully resolved
//! configuration (seeds included) so any result can be reproduced from the
//! file alone: JSON outputs carry a `config` field, CSV outputs a leading
//! `# config: ...` comment line.

use crate::config::{ExperimentConfig, OutputFormat};
use anyhow::{bail, Context, Result};
use auv_mission::current::CurrentField;
use auv_mission::graph::OperationGraph;
use auv_mission::mission::{self, MissionLog, MissionStatus, MissionTiming};
use auv_mission::path::{self, LocalPath};
use auv_mission::route::{self, RouteBudget};
use auv_mission::OptimizeResult;
use serde::Serialize;
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Process exit codes. Zero is success; config errors, stranded missions,
/// and timed-out missions get distinct codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STRANDED: i32 = 3;
pub const EXIT_TIMED_OUT: i32 = 4;

pub struct World {
    pub graph: OperationGraph,
    pub field: CurrentField,
}

/// Build the world from config, or load it from previously generated files.
pub fn load_or_generate_world(
    cfg: &ExperimentConfig,
    graph_file: Option<&Path>,
    field_json: Option<&Path>,
    field_csv: Option<&Path>,
) -> Result<World> {
    let graph = match graph_file {
        Some(p) => OperationGraph::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => generate_graph(cfg)?,
    };
    let field = match (field_json, field_csv) {
        (Some(j), Some(c)) => CurrentField::load(j, c).context("loading field files")?,
        (None, None) => generate_field(cfg)?,
        _ => bail!("field files come in pairs: pass both --field-json and --field-csv"),
    };
    Ok(World { graph, field })
}

pub fn generate_graph(cfg: &ExperimentConfig) -> Result<OperationGraph> {
    Ok(OperationGraph::generate(
        cfg.world.nodes,
        cfg.world.bounds,
        cfg.world.neighbors,
        cfg.mission.cruise_speed.mps()?,
        cfg.world.seed,
    )?)
}

pub fn generate_field(cfg: &ExperimentConfig) -> Result<CurrentField> {
    Ok(CurrentField::generate(
        cfg.field.vortices,
        (cfg.field.grid[0], cfg.field.grid[1]),
        (cfg.field.extent[0], cfg.field.extent[1]),
        (cfg.field.strength[0], cfg.field.strength[1]),
        (cfg.field.core[0], cfg.field.core[1]),
        cfg.field.seed,
    )?)
}

pub fn endpoints(cfg: &ExperimentConfig, graph: &OperationGraph) -> Result<(usize, usize)> {
    let start = cfg.world.start.unwrap_or_else(|| graph.node_nearest_min_corner());
    let target = cfg.world.target.unwrap_or_else(|| graph.node_nearest_max_corner());
    if start >= graph.nodes().len() || target >= graph.nodes().len() {
        bail!("start/target node id out of range");
    }
    if start == target {
        bail!("start and target must differ");
    }
    Ok((start, target))
}

fn config_comment(cfg: &ExperimentConfig) -> String {
    format!("# config: {}\n", serde_json::to_string(&cfg.resolved_json()).expect("serializes"))
}

/// CSV writer with the resolved config embedded as a comment header.
fn csv_writer(path: &Path, cfg: &ExperimentConfig) -> Result<csv::Writer<std::fs::File>> {
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    file.write_all(config_comment(cfg).as_bytes())?;
    Ok(csv::Writer::from_writer(file))
}

fn write_json<T: Serialize>(path: &Path, payload: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(payload).context("serializing output")?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_convergence_csv(
    path: &Path,
    cfg: &ExperimentConfig,
    traces: &[(usize, &[f64])],
) -> Result<()> {
    let mut writer = csv_writer(path, cfg)?;
    writer.write_record(["plan", "iteration", "best_cost"])?;
    for (plan, history) in traces {
        for (iteration, cost) in history.iter().enumerate() {
            writer.write_record(&[plan.to_string(), iteration.to_string(), format!("{cost:?}")])?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub struct WorldFiles {
    pub graph: PathBuf,
    pub field_json: PathBuf,
    pub field_csv: PathBuf,
}

/// `gen-world`: write replayable graph and field files.
pub fn cmd_gen_world(cfg: &ExperimentConfig, out: &Path) -> Result<WorldFiles> {
    std::fs::create_dir_all(out)?;
    let graph = generate_graph(cfg)?;
    let field = generate_field(cfg)?;
    let files = WorldFiles {
        graph: out.join("graph.json"),
        field_json: out.join("field.json"),
        field_csv: out.join("field.csv"),
    };
    graph.save(&files.graph)?;
    field.save(&files.field_json, &files.field_csv)?;
    // Wrap the graph file with the config for one-command reproduction.
    let wrapped = json!({
        "config": cfg.resolved_json(),
        "graph": serde_json::to_value(graph.to_file())?,
    });
    write_json(&files.graph, &wrapped)?;
    Ok(files)
}

/// Load a graph saved by `cmd_gen_world` (config wrapper) or a bare
/// `GraphFile` document.
pub fn load_graph(path: &Path) -> Result<OperationGraph> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let graph_value = value.get("graph").cloned().unwrap_or(value);
    let file: auv_mission::graph::GraphFile = serde_json::from_value(graph_value)?;
    let nodes = file
        .positions
        .iter()
        .enumerate()
        .map(|(id, &position)| auv_mission::graph::Node { id, position })
        .collect();
    let pairs: Vec<(usize, usize)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
    Ok(OperationGraph::from_parts(nodes, &pairs, file.bounds, file.cruise_speed, file.seed)?)
}

pub struct MissionOutcome {
    pub log: MissionLog,
    pub exit_code: i32,
}

/// `run-mission`: execute one mission and write its full trace.
pub fn cmd_run_mission(cfg: &ExperimentConfig, world: &World, out: &Path) -> Result<MissionOutcome> {
    std::fs::create_dir_all(out)?;
    let (start, target) = endpoints(cfg, &world.graph)?;
    let mission_cfg = cfg.mission_config()?;
    let (log, timing) = mission::run_mission(&world.graph, &world.field, start, target, &mission_cfg)?;

    write_json(out.join("mission.json").as_path(), &json!({
        "config": cfg.resolved_json(),
        "log": serde_json::to_value(&log)?,
    }))?;
    write_json(out.join("mission_timing.json").as_path(), &json!({
        "route_plan_wall_s": timing.route_plan_wall,
        "path_plan_wall_s": timing.path_plan_wall,
    }))?;
    write_mission_edges_csv(out.join("mission_edges.csv").as_path(), cfg, &log, None)?;

    let route_traces: Vec<(usize, &[f64])> = log
        .routes
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.convergence.as_slice()))
        .collect();
    write_convergence_csv(out.join("route_convergence.csv").as_path(), cfg, &route_traces)?;
    let path_traces: Vec<(usize, &[f64])> = log
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| (i, e.path_convergence.as_slice()))
        .collect();
    write_convergence_csv(out.join("path_convergence.csv").as_path(), cfg, &path_traces)?;

    let exit_code = match log.status {
        MissionStatus::Completed => EXIT_OK,
        MissionStatus::Stranded { .. } => EXIT_STRANDED,
        MissionStatus::TimedOut => EXIT_TIMED_OUT,
    };
    Ok(MissionOutcome { log, exit_code })
}

fn write_mission_edges_csv(
    path: &Path,
    cfg: &ExperimentConfig,
    log: &MissionLog,
    trial: Option<usize>,
) -> Result<()> {
    let mut writer = csv_writer(path, cfg)?;
    write_edge_header(&mut writer, trial.is_some())?;
    write_edge_rows(&mut writer, log, trial)?;
    writer.flush()?;
    Ok(())
}

fn write_edge_header<W: std::io::Write>(writer: &mut csv::Writer<W>, with_trial: bool) -> Result<()> {
    let mut header = vec![
        "edge_index",
        "from",
        "to",
        "expected_s",
        "realized_s",
        "path_cost",
        "delay_s",
        "replan_triggered",
    ];
    if with_trial {
        header.insert(0, "trial");
    }
    writer.write_record(&header)?;
    Ok(())
}

fn write_edge_rows<W: std::io::Write>(
    writer: &mut csv::Writer<W>,
    log: &MissionLog,
    trial: Option<usize>,
) -> Result<()> {
    for (i, e) in log.edges.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            e.from.to_string(),
            e.to.to_string(),
            format!("{:?}", e.expected_time),
            format!("{:?}", e.realized_time),
            format!("{:?}", e.path_cost),
            format!("{:?}", e.delay),
            e.replan_triggered.to_string(),
        ];
        if let Some(t) = trial {
            row.insert(0, t.to_string());
        }
        writer.write_record(&row)?;
    }
    Ok(())
}

/// `plan-route`: run the global route planner standalone.
pub fn cmd_plan_route(cfg: &ExperimentConfig, world: &World, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let (start, target) = endpoints(cfg, &world.graph)?;
    let times = world.graph.expected_time_map();
    let params = cfg.foa_route.to_params(cfg.mission.seed);
    let (best, result) = route::plan_route(
        &world.graph,
        start,
        target,
        RouteBudget::full(cfg.mission.battery_s),
        &times,
        &params,
    )?;
    let per_edge_times: Vec<f64> =
        best.edge_sequence.iter().map(|e| times[e]).collect();
    write_json(out.join("route.json").as_path(), &json!({
        "config": cfg.resolved_json(),
        "route": {
            "node_sequence": best.node_sequence,
            "edge_sequence": best.edge_sequence,
            "per_edge_expected_s": per_edge_times,
            "total_time_s": best.total_time,
            "cost": best.cost,
        },
        "evaluations": result.evaluations,
    }))?;
    write_convergence_csv(
        out.join("route_convergence.csv").as_path(),
        cfg,
        &[(0, result.best_cost_history.as_slice())],
    )?;
    Ok(())
}

/// `plan-path`: run the local path planner standalone between two points.
pub fn cmd_plan_path(
    cfg: &ExperimentConfig,
    field: &CurrentField,
    from: [f64; 3],
    to: [f64; 3],
    out: &Path,
) -> Result<(LocalPath, OptimizeResult)> {
    std::fs::create_dir_all(out)?;
    let params = cfg.foa_path.to_params(cfg.mission.seed);
    let (best, result) = path::plan_path(
        from,
        to,
        field,
        &cfg.mission.limits.resolve()?,
        cfg.mission.cruise_speed.mps()?,
        &params,
        &cfg.path_options(),
    )?;

    let mut writer = csv_writer(out.join("path.csv").as_path(), cfg)?;
    writer.write_record(["sample", "x", "y", "z", "yaw", "pitch", "vx", "vy", "vz"])?;
    for (i, s) in best.samples.iter().enumerate() {
        writer.write_record(&[
            i.to_string(),
            format!("{:?}", s.x),
            format!("{:?}", s.y),
            format!("{:?}", s.z),
            format!("{:?}", s.yaw),
            format!("{:?}", s.pitch),
            format!("{:?}", s.vx),
            format!("{:?}", s.vy),
            format!("{:?}", s.vz),
        ])?;
    }
    writer.flush()?;

    write_json(out.join("path.json").as_path(), &json!({
        "config": cfg.resolved_json(),
        "path_time_s": best.path_time,
        "cost": best.cost,
        "violations": serde_json::to_value(best.violations)?,
        "evaluations": result.evaluations,
    }))?;
    write_convergence_csv(
        out.join("path_convergence.csv").as_path(),
        cfg,
        &[(0, result.best_cost_history.as_slice())],
    )?;
    Ok((best, result))
}

/// One row of a batch summary.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub status: String,
    pub route_time_s: f64,
    pub time_remaining_s: f64,
    pub replans: usize,
    pub budget_fallbacks: usize,
    pub compute_time_s: f64,
    pub mission_cost: f64,
    pub edges_traversed: usize,
    /// Mean relative deviation `|realized - expected| / expected` per edge.
    pub mean_rel_time_dev: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub stddev: f64,
}

impl ColumnStats {
    pub fn over(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            stddev: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchSummary {
    pub trials: Vec<TrialRow>,
    pub completed: usize,
    pub stranded_trials: Vec<usize>,
    pub timed_out_trials: Vec<usize>,
    pub aggregates: std::collections::BTreeMap<String, ColumnStats>,
}

impl BatchSummary {
    pub fn exit_code(&self) -> i32 {
        if !self.stranded_trials.is_empty() {
            EXIT_STRANDED
        } else if !self.timed_out_trials.is_empty() {
            EXIT_TIMED_OUT
        } else {
            EXIT_OK
        }
    }
}

fn trial_row(trial: usize, log: &MissionLog) -> TrialRow {
    let status = match &log.status {
        MissionStatus::Completed => "completed".to_string(),
        MissionStatus::TimedOut => "timed_out".to_string(),
        MissionStatus::Stranded { .. } => "stranded".to_string(),
    };
    let mean_rel = if log.edges.is_empty() {
        0.0
    } else {
        log.edges
            .iter()
            .map(|e| (e.realized_time - e.expected_time).abs() / e.expected_time)
            .sum::<f64>()
            / log.edges.len() as f64
    };
    TrialRow {
        trial,
        status,
        route_time_s: log.totals.route_time,
        time_remaining_s: log.totals.time_remaining,
        replans: log.totals.replans,
        budget_fallbacks: log.totals.budget_fallbacks,
        compute_time_s: log.totals.compute_time_total,
        mission_cost: log.totals.mission_cost,
        edges_traversed: log.edges.len(),
        mean_rel_time_dev: mean_rel,
    }
}

type ColumnGetter = fn(&TrialRow) -> f64;

pub fn summarize(trials: Vec<TrialRow>) -> BatchSummary {
    let completed = trials.iter().filter(|t| t.status == "completed").count();
    let stranded_trials: Vec<usize> =
        trials.iter().filter(|t| t.status == "stranded").map(|t| t.trial).collect();
    let timed_out_trials: Vec<usize> =
        trials.iter().filter(|t| t.status == "timed_out").map(|t| t.trial).collect();
    let mut aggregates = std::collections::BTreeMap::new();
    let columns: [(&str, ColumnGetter); 7] = [
        ("route_time_s", |t| t.route_time_s),
        ("time_remaining_s", |t| t.time_remaining_s),
        ("replans", |t| t.replans as f64),
        ("compute_time_s", |t| t.compute_time_s),
        ("mission_cost", |t| t.mission_cost),
        ("edges_traversed", |t| t.edges_traversed as f64),
        ("mean_rel_time_dev", |t| t.mean_rel_time_dev),
    ];
    for (name, getter) in columns {
        let values: Vec<f64> = trials.iter().map(getter).collect();
        aggregates.insert(name.to_string(), ColumnStats::over(&values));
    }
    BatchSummary { trials, completed, stranded_trials, timed_out_trials, aggregates }
}

/// Per-trial wall-clock timings; written separately so the data files stay
/// byte-reproducible.
#[derive(Debug, Clone, Serialize)]
pub struct TrialTiming {
    pub trial: usize,
    pub route_plan_wall_s: f64,
    pub mean_path_plan_wall_s: f64,
    pub trial_wall_s: f64,
}

/// `run-batch`: execute strided-seed trials in a worker pool.
pub fn cmd_run_batch(cfg: &ExperimentConfig, out: &Path) -> Result<BatchSummary> {
    std::fs::create_dir_all(out)?;
    let shared_world = if cfg.batch.fresh_world {
        None
    } else {
        Some(World { graph: generate_graph(cfg)?, field: generate_field(cfg)? })
    };

    let run_trial = |trial: usize| -> Result<(MissionLog, MissionTiming, f64)> {
        let mut trial_cfg = cfg.clone();
        let stride = cfg.batch.seed_stride.max(1);
        trial_cfg.mission.seed =
            cfg.mission.seed.wrapping_add(trial as u64 * stride);
        if cfg.batch.fresh_world {
            trial_cfg.world.seed = cfg.world.seed.wrapping_add(trial as u64 * stride);
            trial_cfg.field.seed = cfg.field.seed.wrapping_add(trial as u64 * stride);
        }
        let local_world;
        let world = match &shared_world {
            Some(w) => w,
            None => {
                local_world = World {
                    graph: generate_graph(&trial_cfg)?,
                    field: generate_field(&trial_cfg)?,
                };
                &local_world
            }
        };
        let (start, target) = endpoints(&trial_cfg, &world.graph)?;
        let mission_cfg = trial_cfg.mission_config()?;
        let started = std::time::Instant::now();
        let (log, timing) =
            mission::run_mission(&world.graph, &world.field, start, target, &mission_cfg)?;
        Ok((log, timing, started.elapsed().as_secs_f64()))
    };

    let results: Vec<Result<(MissionLog, MissionTiming, f64)>> = {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.batch.workers)
            .build()
            .context("building worker pool")?;
        use rayon::prelude::*;
        pool.install(|| (0..cfg.batch.trials).into_par_iter().map(run_trial).collect())
    };

    let mut rows = Vec::with_capacity(results.len());
    let mut timings = Vec::with_capacity(results.len());
    let mut logs = Vec::with_capacity(results.len());
    for (trial, result) in results.into_iter().enumerate() {
        let (log, timing, wall) = result.with_context(|| format!("trial {trial}"))?;
        rows.push(trial_row(trial, &log));
        let path_count = timing.path_plan_wall.len().max(1) as f64;
        timings.push(TrialTiming {
            trial,
            route_plan_wall_s: timing.route_plan_wall.iter().sum(),
            mean_path_plan_wall_s: timing.path_plan_wall.iter().sum::<f64>() / path_count,
            trial_wall_s: wall,
        });
        logs.push(log);
    }
    let summary = summarize(rows);

    write_trials(cfg, out, &summary)?;
    write_batch_edges(cfg, out, &logs)?;
    write_json(out.join("summary.json").as_path(), &json!({
        "config": cfg.resolved_json(),
        "trials": summary.trials.len(),
        "completed": summary.completed,
        "stranded_trials": summary.stranded_trials,
        "timed_out_trials": summary.timed_out_trials,
        "aggregates": serde_json::to_value(&summary.aggregates)?,
    }))?;
    let mut timing_writer = csv_writer(out.join("timings.csv").as_path(), cfg)?;
    timing_writer.write_record([
        "trial",
        "route_plan_wall_s",
        "mean_path_plan_wall_s",
        "trial_wall_s",
    ])?;
    for t in &timings {
        timing_writer.write_record(&[
            t.trial.to_string(),
            format!("{:?}", t.route_plan_wall_s),
            format!("{:?}", t.mean_path_plan_wall_s),
            format!("{:?}", t.trial_wall_s),
        ])?;
    }
    timing_writer.flush()?;
    Ok(summary)
}

fn write_trials(cfg: &ExperimentConfig, out: &Path, summary: &BatchSummary) -> Result<()> {
    match cfg.output.format {
        OutputFormat::Csv => {
            let mut writer = csv_writer(out.join("trials.csv").as_path(), cfg)?;
            writer.write_record([
                "trial",
                "status",
                "route_time_s",
                "time_remaining_s",
                "replans",
                "budget_fallbacks",
                "compute_time_s",
                "mission_cost",
                "edges_traversed",
                "mean_rel_time_dev",
            ])?;
            for t in &summary.trials {
                writer.write_record(&[
                    t.trial.to_string(),
                    t.status.clone(),
                    format!("{:?}", t.route_time_s),
                    format!("{:?}", t.time_remaining_s),
                    t.replans.to_string(),
                    t.budget_fallbacks.to_string(),
                    format!("{:?}", t.compute_time_s),
                    format!("{:?}", t.mission_cost),
                    t.edges_traversed.to_string(),
                    format!("{:?}", t.mean_rel_time_dev),
                ])?;
            }
            writer.flush()?;
        }
        OutputFormat::Json => {
            write_json(out.join("trials.json").as_path(), &json!({
                "config": cfg.resolved_json(),
                "trials": serde_json::to_value(&summary.trials)?,
            }))?;
        }
    }
    Ok(())
}

fn write_batch_edges(cfg: &ExperimentConfig, out: &Path, logs: &[MissionLog]) -> Result<()> {
    let mut writer = csv_writer(out.join("edges.csv").as_path(), cfg)?;
    write_edge_header(&mut writer, true)?;
    for (trial, log) in logs.iter().enumerate() {
        write_edge_rows(&mut writer, log, Some(trial))?;
    }
    writer.flush()?;
    Ok(())
}
