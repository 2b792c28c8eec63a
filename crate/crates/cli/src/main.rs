use anyhow::{anyhow, Result};
use auv_mission_cli::commands::{self, EXIT_CONFIG};
use auv_mission_cli::config::ExperimentConfig;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "auv-mission",
    about = "AUV mission simulator: firefly-optimized routing and current-aware local paths",
    version
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed: sets world, field, and mission seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Table output format.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// Charge a fixed number of seconds per re-plan instead of wall-clock.
    #[arg(long, global = true, value_name = "SECONDS")]
    synthetic_compute: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a replayable world: graph.json, field.json, field.csv.
    GenWorld,
    /// Run one mission and write its full trace.
    RunMission {
        /// Previously generated graph file (otherwise generated from config).
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Previously generated field header (pairs with --field-csv).
        #[arg(long)]
        field_json: Option<PathBuf>,
        /// Previously generated field grid (pairs with --field-json).
        #[arg(long)]
        field_csv: Option<PathBuf>,
    },
    /// Run a batch of strided-seed missions.
    RunBatch {
        /// Number of trials (overrides config).
        #[arg(long)]
        trials: Option<usize>,
        /// Generate a fresh world per trial instead of sharing one.
        #[arg(long)]
        fresh_world: bool,
    },
    /// Run the global route planner standalone.
    PlanRoute,
    /// Run the local path planner standalone between two points.
    PlanPath {
        /// Start position as x,y,z meters.
        #[arg(long, value_name = "X,Y,Z")]
        from: String,
        /// End position as x,y,z meters.
        #[arg(long, value_name = "X,Y,Z")]
        to: String,
    },
}

fn parse_point(text: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow!("bad point {text:?}: expected x,y,z"))?;
    if parts.len() != 3 {
        return Err(anyhow!("bad point {text:?}: expected three components"));
    }
    Ok([parts[0], parts[1], parts[2]])
}

fn resolve_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.apply_master_seed(seed);
    }
    if let Some(fmt) = &common.format {
        cfg.output.format = match fmt.as_str() {
            "json" => auv_mission_cli::config::OutputFormat::Json,
            _ => auv_mission_cli::config::OutputFormat::Csv,
        };
    }
    if let Some(seconds) = common.synthetic_compute {
        cfg.mission.synthetic_compute_s = Some(seconds);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32> {
    let mut cfg = resolve_config(&cli.common)?;
    let out = cli.common.out.clone();
    match cli.command {
        Command::GenWorld => {
            let files = commands::cmd_gen_world(&cfg, &out)?;
            eprintln!(
                "wrote {}, {}, {}",
                files.graph.display(),
                files.field_json.display(),
                files.field_csv.display()
            );
            Ok(commands::EXIT_OK)
        }
        Command::RunMission { graph, field_json, field_csv } => {
            let world = match &graph {
                Some(p) => auv_mission_cli::commands::World {
                    graph: commands::load_graph(p)?,
                    field: match (&field_json, &field_csv) {
                        (Some(j), Some(c)) => auv_mission::current::CurrentField::load(j, c)?,
                        (None, None) => commands::generate_field(&cfg)?,
                        _ => {
                            return Err(anyhow!(
                                "field files come in pairs: pass both --field-json and --field-csv"
                            ))
                        }
                    },
                },
                None => commands::load_or_generate_world(
                    &cfg,
                    None,
                    field_json.as_deref(),
                    field_csv.as_deref(),
                )?,
            };
            let outcome = commands::cmd_run_mission(&cfg, &world, &out)?;
            eprintln!(
                "mission {:?}: {:.1} s used, {:.1} s remaining, {} replans",
                outcome.log.status,
                outcome.log.totals.route_time,
                outcome.log.totals.time_remaining,
                outcome.log.totals.replans
            );
            Ok(outcome.exit_code)
        }
        Command::RunBatch { trials, fresh_world } => {
            if let Some(t) = trials {
                cfg.batch.trials = t;
            }
            if fresh_world {
                cfg.batch.fresh_world = true;
            }
            cfg.validate()?;
            let summary = commands::cmd_run_batch(&cfg, &out)?;
            eprintln!(
                "batch: {}/{} completed, {} stranded, {} timed out",
                summary.completed,
                summary.trials.len(),
                summary.stranded_trials.len(),
                summary.timed_out_trials.len()
            );
            if !summary.stranded_trials.is_empty() {
                eprintln!("stranded trials: {:?}", summary.stranded_trials);
            }
            if !summary.timed_out_trials.is_empty() {
                eprintln!("timed-out trials: {:?}", summary.timed_out_trials);
            }
            Ok(summary.exit_code())
        }
        Command::PlanRoute => {
            let world = commands::load_or_generate_world(&cfg, None, None, None)?;
            commands::cmd_plan_route(&cfg, &world, &out)?;
            Ok(commands::EXIT_OK)
        }
        Command::PlanPath { from, to } => {
            let field = commands::generate_field(&cfg)?;
            let (path, _) =
                commands::cmd_plan_path(&cfg, &field, parse_point(&from)?, parse_point(&to)?, &out)?;
            eprintln!(
                "path time {:.1} s, cost {:.1}, violations {:?}",
                path.path_time, path.cost, path.violations
            );
            Ok(commands::EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
