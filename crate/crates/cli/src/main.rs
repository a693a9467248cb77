use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compute_rl::agents::smdp_value_iteration;
use compute_rl::envs::{ChainConfig, EnvConfig, LineTrackConfig, StickyConfig, WaveCollectConfig};
use compute_rl::experiments::{
    calibrate_cost, default_out_root, emit_report, rerun_from_manifest, run_cost_sweep, run_training, CostSpec,
    ExperimentConfig, Variant,
};
use compute_rl::primitives::{ComputeCostModel, DurationSet, OptionSet};
use compute_rl::{Error, Result};

#[derive(Parser)]
#[command(name = "computerl", version, about = "Train agents that pay for every decision")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent per seed for a fixed number of decisions.
    Train(RunArgs),
    /// Train the fixed-rate baseline and print the derived decision cost.
    Calibrate(RunArgs),
    /// Train compute agents at every cost multiplier and seed.
    Sweep(RunArgs),
    /// Repeat the run recorded in a manifest.
    Rerun {
        /// Directory holding manifest.json.
        from: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render SVG plots from a run directory.
    Report {
        dir: PathBuf,
    },
    /// Solve an enumerable environment exactly and print the option values as JSON.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML (or .json) experiment config. Flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// line_track, wave_collect or chain; replaces the config's environment with defaults.
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    budget: Option<u64>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Explicit per-decision cost; skips calibration.
    #[arg(long)]
    cost: Option<f64>,
    /// Calibrate the cost, clamping it to at least this value.
    #[arg(long, conflicts_with = "cost")]
    min_cost: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    multipliers: Option<Vec<f64>>,
    /// compute or baseline.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long, value_delimiter = ',')]
    durations: Option<Vec<u32>>,
    #[arg(long)]
    sticky: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    checkpoint_interval: Option<u64>,
    #[arg(long)]
    calibration_budget: Option<u64>,
    #[arg(long)]
    tick_cap: Option<u64>,
    #[arg(long)]
    ema_beta: Option<f64>,
    #[arg(long)]
    greedy_eval_episodes: Option<usize>,
    #[arg(long)]
    trace_episodes: Option<usize>,
    #[arg(long)]
    no_checkpoints: bool,
    /// Any other key, as `dotted.path=toml-value`, e.g. `agent.batch_size=64`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory; defaults to `$COMPUTERL_OUT/<name>-<hash>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value = "chain")]
    env: String,
    #[arg(long, default_value_t = 6)]
    length: usize,
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    #[arg(long, default_value_t = 0.0)]
    cost: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    durations: Vec<u32>,
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
}

fn env_by_name(name: &str) -> Result<EnvConfig> {
    Ok(match name {
        "line_track" => EnvConfig::LineTrack(LineTrackConfig::default()),
        "wave_collect" => EnvConfig::WaveCollect(WaveCollectConfig::default()),
        "chain" => EnvConfig::Chain(ChainConfig::default()),
        other => return Err(Error::usage(format!("unknown environment `{other}`"))),
    })
}

fn set_path(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| Error::usage("empty --set key"))?;
    let mut table = root;
    for p in parts {
        table = table
            .entry(p)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::usage(format!("`{p}` in `{key}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    // Bare words that are not valid TOML values are taken as strings.
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_sets(cfg: ExperimentConfig, sets: &[String]) -> Result<ExperimentConfig> {
    if sets.is_empty() {
        return Ok(cfg);
    }
    let text = toml::to_string(&cfg).map_err(|e| Error::config(e.to_string()))?;
    let mut table: toml::Table = toml::from_str(&text)?;
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Error::usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        set_path(&mut table, k.trim(), parse_value(v.trim()))?;
    }
    let text = toml::to_string(&table).map_err(|e| Error::config(e.to_string()))?;
    ExperimentConfig::from_toml_str(&text)
}

fn build_config(a: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&a.config, &a.env) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(env)) => ExperimentConfig::new(env_by_name(env)?, 200_000, (0..10).collect()),
        (None, None) => return Err(Error::usage("pass --config or --env")),
    };
    if let (Some(_), Some(env)) = (&a.config, &a.env) {
        cfg.env = env_by_name(env)?;
    }
    if let Some(v) = &a.name {
        cfg.name = v.clone();
    }
    if let Some(v) = a.budget {
        cfg.budget = v;
    }
    if let Some(v) = &a.seeds {
        cfg.seeds = v.clone();
    }
    if let Some(v) = a.cost {
        cfg.cost = CostSpec::Explicit { value: v };
    }
    if let Some(v) = a.min_cost {
        cfg.cost = CostSpec::Calibrate { min_cost: v };
    }
    if let Some(v) = &a.multipliers {
        cfg.multipliers = v.clone();
    }
    if let Some(v) = &a.variant {
        cfg.variant = match v.as_str() {
            "compute" => Variant::Compute,
            "baseline" => Variant::Baseline,
            other => return Err(Error::usage(format!("unknown variant `{other}`"))),
        };
    }
    if let Some(v) = &a.durations {
        cfg.durations = DurationSet::new(v)?;
    }
    if let Some(v) = a.sticky {
        cfg.sticky = StickyConfig {
            repeat_probability: v,
        };
    }
    if let Some(v) = a.gamma {
        cfg.agent.gamma = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.agent.learning_rate = v;
    }
    if a.checkpoint_interval.is_some() {
        cfg.checkpoint_interval = a.checkpoint_interval;
    }
    if a.calibration_budget.is_some() {
        cfg.calibration_budget = a.calibration_budget;
    }
    if let Some(v) = a.tick_cap {
        cfg.tick_cap = v;
    }
    if let Some(v) = a.ema_beta {
        cfg.ema_beta = v;
    }
    if let Some(v) = a.greedy_eval_episodes {
        cfg.greedy_eval_episodes = v;
    }
    if let Some(v) = a.trace_episodes {
        cfg.trace_episodes = v;
    }
    if a.no_checkpoints {
        cfg.save_checkpoints = false;
    }
    let mut cfg = apply_sets(cfg, &a.sets)?;
    if a.out.is_some() {
        cfg.out_dir = a.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, kind: &str) -> PathBuf {
    cfg.out_dir
        .clone()
        .unwrap_or_else(|| default_out_root().join(format!("{}-{kind}-{}", cfg.name, &cfg.hash()[..12])))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn announce(dir: &Path, warning: Option<&String>) {
    if let Some(w) = warning {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", dir.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let cfg = build_config(&a)?;
            let dir = out_dir(&cfg, "train");
            let r = run_training(&cfg, &dir)?;
            announce(&dir, r.calibration.as_ref().and_then(|c| c.warning.as_ref()));
            for run in &r.runs {
                let s = &run.summary;
                let f = s.final_score;
                println!(
                    "seed {}: decisions {} ticks {} hz_100 {} task_return_100 {}",
                    s.seed,
                    s.training.decisions(),
                    s.total_ticks,
                    f.map_or("-".into(), |f| format!("{:.3}", f.hz_100)),
                    f.map_or("-".into(), |f| format!("{:.3}", f.task_return_100)),
                );
            }
        }
        Command::Calibrate(a) => {
            let mut cfg = build_config(&a)?;
            if matches!(cfg.cost, CostSpec::Explicit { .. }) {
                cfg.cost = CostSpec::default();
            }
            let cal = calibrate_cost(&cfg)?;
            if let Some(w) = &cal.warning {
                eprintln!("warning: {w}");
            }
            print_json(&serde_json::json!({
                "config_hash": cfg.hash(),
                "cost": cal.cost,
                "raw_cost": cal.raw_cost,
                "task_sum": cal.task_sum,
                "tick_sum": cal.tick_sum,
                "clamped": cal.clamped,
                "baseline_task_return_100": cal.baseline.task_return_100,
                "baseline_hz_100": cal.baseline.hz_100,
            }))?;
        }
        Command::Sweep(a) => {
            let cfg = build_config(&a)?;
            let dir = out_dir(&cfg, "sweep");
            let r = run_cost_sweep(&cfg, &dir)?;
            announce(&dir, r.calibration.as_ref().and_then(|c| c.warning.as_ref()));
            println!("c = {}", r.base_cost);
            for m in &r.per_multiplier {
                println!(
                    "{}c: hz_100 {:.3} task_return_100 {:.3} net_return_100 {:.3}",
                    m.multiplier, m.scores.hz_100, m.scores.task_return_100, m.scores.net_return_100
                );
            }
            if let Some(rho) = r.spearman {
                println!("rank correlation of log cost with hz: {rho:.3}");
            }
        }
        Command::Rerun { from, out } => {
            rerun_from_manifest(&from, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Report { dir } => {
            for p in emit_report(&dir)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Oracle(a) => {
            let env = match a.env.as_str() {
                "chain" => EnvConfig::Chain(ChainConfig { length: a.length }),
                other => env_by_name(other)?,
            }
            .build(StickyConfig::off())?;
            let options = OptionSet::new(env.descriptor().num_actions(), DurationSet::new(&a.durations)?)?;
            let q = smdp_value_iteration(&*env, &options, a.gamma, ComputeCostModel::new(a.cost)?, a.tolerance)?;
            let options_json: Vec<_> = options
                .iter()
                .map(|o| serde_json::json!({"action": o.action, "duration": o.duration.ticks()}))
                .collect();
            let rows: Vec<&[f64]> = (0..q.num_states()).map(|s| q.row(s)).collect();
            print_json(&serde_json::json!({
                "env": env.descriptor().name,
                "gamma": a.gamma,
                "cost": a.cost,
                "options": options_json,
                "q": rows,
            }))?;
        }
    }
    Ok(())
}

fn error_line(kind: &str, msg: &str) -> String {
    let msg = msg.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
    format!("error: kind={kind} msg=\"{}\"", msg.trim())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.kind().as_str().map(str::to_string).unwrap_or_else(|| e.to_string());
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            let msg = if first.is_empty() { text } else { first.trim_start_matches("error: ").to_string() };
            eprintln!("{}", error_line("usage", &msg));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
