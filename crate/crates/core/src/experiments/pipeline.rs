//! Calibration, training, sweeps and the artifacts they leave on disk.
//!
//! Everything is computed in memory first and written at the end, so a run that fails
//! leaves no partial output. Nothing written depends on wall-clock time; the same config
//! produces the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CostSpec, ExperimentConfig, Variant};
use super::run::{random_policy_score, train_run, EpisodeLog, RunOutput, RunSpec, RunSummary};
use crate::error::{Error, Result};
use crate::exec::ExecutionTrace;
use crate::metrics::{normalized_score, spearman, ScoreSummary, SCORE_WINDOW};

/// Episodes used to score the uniformly random policy.
pub const RANDOM_SCORE_EPISODES: usize = 100;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `<crate version>+<revision>`, the revision taken from `COMPUTERL_GIT_REV` at build time.
pub fn version_stamp() -> String {
    format!("{VERSION}+{}", option_env!("COMPUTERL_GIT_REV").unwrap_or("unknown"))
}

/// Result of running the fixed-rate baseline to derive the decision cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// Cost actually used, after clamping.
    pub cost: f64,
    /// Task return per tick before clamping.
    pub raw_cost: f64,
    pub task_sum: f64,
    pub tick_sum: u64,
    pub clamped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub budget: u64,
    pub baseline: ScoreSummary,
    /// One per seed, in seed order.
    pub runs: Vec<RunSummary>,
}

/// Trains the fixed-rate baseline on every seed and divides its accumulated task return by
/// the ticks it took, both taken over each seed's final scoring window and pooled.
pub fn calibrate_cost(config: &ExperimentConfig) -> Result<Calibration> {
    config.validate()?;
    let min_cost = match config.cost {
        CostSpec::Calibrate { min_cost } => min_cost,
        CostSpec::Explicit { .. } => 0.0,
    };
    let budget = config.calibration_budget();
    let outputs: Vec<RunOutput> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let mut spec = RunSpec::new(config, Variant::Baseline, 0.0, seed);
            spec.budget = budget;
            let mut cfg = spec.config.clone();
            cfg.trace_episodes = 0;
            cfg.greedy_eval_episodes = 0;
            spec.config = cfg;
            train_run(&spec)
        })
        .collect::<Result<_>>()?;

    let mut task_sum = 0.0;
    let mut tick_sum = 0u64;
    for out in &outputs {
        let start = out.episodes.len().saturating_sub(SCORE_WINDOW);
        for e in &out.episodes[start..] {
            task_sum += e.task_return;
            tick_sum += e.ticks;
        }
    }
    let raw_cost = if tick_sum == 0 { 0.0 } else { task_sum / tick_sum as f64 };
    let (cost, clamped, warning) = if raw_cost.is_nan() || raw_cost <= min_cost {
        let warning = if raw_cost > 0.0 {
            format!("calibrated cost {raw_cost} is below the minimum; using {min_cost}")
        } else {
            format!("baseline return per tick is {raw_cost}, not positive; using the minimum cost {min_cost}")
        };
        (min_cost, true, Some(warning))
    } else {
        (raw_cost, false, None)
    };
    let per_seed = outputs
        .iter()
        .map(|o| {
            o.summary
                .final_score
                .ok_or_else(|| Error::usage(format!("seed {} finished no episode", o.summary.seed)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Calibration {
        cost,
        raw_cost,
        task_sum,
        tick_sum,
        clamped,
        warning,
        budget,
        baseline: ScoreSummary::pool(per_seed)?,
        runs: outputs.into_iter().map(|o| o.summary).collect(),
    })
}

/// Explicit costs are taken as given; otherwise the baseline is trained to derive one.
pub fn resolve_cost(config: &ExperimentConfig) -> Result<(f64, Option<Calibration>)> {
    match config.cost {
        CostSpec::Explicit { value } => Ok((value, None)),
        CostSpec::Calibrate { .. } => {
            let cal = calibrate_cost(config)?;
            Ok((cal.cost, Some(cal)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Train,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Curves,
    Sweep,
    Frontier,
    Episodes,
    Trace,
    EvalTrace,
    Checkpoint,
}

/// One file written by a run, relative to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub kind: ArtifactKind,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    /// Cost charged at multiplier one.
    pub base: f64,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub raw_cost: f64,
    pub task_sum: f64,
    pub tick_sum: u64,
    pub clamped: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub budget: u64,
}

impl CostRecord {
    fn new(base: f64, calibration: Option<&Calibration>) -> Self {
        CostRecord {
            base,
            source: if calibration.is_some() { "calibrated" } else { "explicit" }.to_string(),
            calibration: calibration.map(|c| CalibrationRecord {
                raw_cost: c.raw_cost,
                task_sum: c.task_sum,
                tick_sum: c.tick_sum,
                clamped: c.clamped,
                warning: c.warning.clone(),
                budget: c.budget,
            }),
        }
    }
}

/// How every random number in a run is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngRecord {
    pub generator: String,
    pub derivation: String,
    pub streams: BTreeMap<String, u64>,
}

impl Default for RngRecord {
    fn default() -> Self {
        let streams = [
            ("exploration", 1),
            ("replay", 2),
            ("init", 3),
            ("episode_seeds", 4),
            ("greedy_eval", 5),
            ("random_policy_episodes", 6),
            ("random_policy_actions", 7),
        ];
        RngRecord {
            generator: "chacha8".to_string(),
            derivation: "ChaCha8 seeded with the run seed, stream set to the id below".to_string(),
            streams: streams.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: RunKind,
    pub version: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub cost: CostRecord,
    pub random_score: f64,
    /// Pooled final task return of the fixed-rate baseline, when calibration produced one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spearman_log_multiplier_hz: Option<f64>,
    pub rng: RngRecord,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub const FILE: &'static str = "manifest.json";

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE);
        if !path.exists() {
            return Err(Error::MissingArtifact(path));
        }
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }

    /// Fails on the first listed artifact that is not on disk.
    pub fn check_artifacts(&self, dir: &Path) -> Result<()> {
        for a in &self.artifacts {
            let p = dir.join(&a.path);
            if !p.is_file() {
                return Err(Error::MissingArtifact(p));
            }
        }
        Ok(())
    }
}

/// One row of `curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub config_hash: String,
    pub env: String,
    pub agent: String,
    pub multiplier: Option<f64>,
    pub cost: f64,
    pub seed: u64,
    pub decisions: u64,
    pub ticks: u64,
    pub hz: f64,
    pub hz_100: Option<f64>,
    pub task_return_100: Option<f64>,
    pub net_return_100: Option<f64>,
    pub normalized_score: Option<f64>,
}

/// One row of `sweep.csv`: a (multiplier, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_hash: String,
    pub env: String,
    pub multiplier: f64,
    pub cost: f64,
    pub seed: u64,
    pub episodes: u64,
    pub decisions: u64,
    pub total_ticks: u64,
    pub hz_100: Option<f64>,
    pub task_return_100: Option<f64>,
    pub net_return_100: Option<f64>,
    pub normalized_score: Option<f64>,
}

/// One row of `frontier.csv`: means over seeds at one multiplier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub config_hash: String,
    pub env: String,
    pub multiplier: f64,
    pub cost: f64,
    pub seeds: usize,
    pub mean_hz_100: f64,
    pub mean_task_return_100: f64,
    pub mean_net_return_100: f64,
    pub mean_normalized_score: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct EpisodeLine<'a> {
    config_hash: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    multiplier: Option<f64>,
    #[serde(flatten)]
    log: &'a EpisodeLog,
}

/// Files staged in memory before anything touches the disk.
#[derive(Default)]
struct Staged {
    files: Vec<(String, Vec<u8>)>,
    artifacts: Vec<Artifact>,
}

impl Staged {
    fn add(&mut self, path: String, bytes: Vec<u8>, kind: ArtifactKind, hash: &str) -> &mut Artifact {
        self.files.push((path.clone(), bytes));
        self.artifacts.push(Artifact {
            path,
            kind,
            config_hash: hash.to_string(),
            seed: None,
            multiplier: None,
            episode: None,
        });
        self.artifacts.last_mut().expect("just pushed")
    }

    fn flush(self, dir: &Path, manifest: &Manifest) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (rel, bytes) in &self.files {
            write_file(&dir.join(rel), bytes)?;
        }
        let mut json = serde_json::to_vec_pretty(manifest)?;
        json.push(b'\n');
        write_file(&dir.join(Manifest::FILE), &json)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

fn trace_bytes(trace: &ExecutionTrace) -> Vec<u8> {
    let mut buf = Vec::new();
    trace.write_jsonl(&mut buf).expect("writing to memory");
    buf
}

fn normalized(task: Option<f64>, random: f64, baseline: Option<f64>) -> Option<f64> {
    normalized_score(task?, random, baseline?).ok()
}

fn multiplier_tag(m: f64) -> String {
    format!("m{m}")
}

fn curve_rows(
    hash: &str,
    config: &ExperimentConfig,
    summary: &RunSummary,
    multiplier: Option<f64>,
    random: f64,
    baseline: Option<f64>,
) -> Vec<CurveRow> {
    summary
        .curve
        .iter()
        .map(|p| CurveRow {
            config_hash: hash.to_string(),
            env: config.env.name().to_string(),
            agent: summary.variant.name().to_string(),
            multiplier,
            cost: summary.cost,
            seed: summary.seed,
            decisions: p.decisions,
            ticks: p.ticks,
            hz: p.hz,
            hz_100: p.hz_100,
            task_return_100: p.task_return_100,
            net_return_100: p.net_return_100,
            normalized_score: normalized(p.task_return_100, random, baseline),
        })
        .collect()
}

fn stage_run_files(
    staged: &mut Staged,
    hash: &str,
    config: &ExperimentConfig,
    out: &RunOutput,
    multiplier: Option<f64>,
) -> Result<()> {
    let seed = out.summary.seed;
    let prefix = multiplier.map(|m| format!("{}-", multiplier_tag(m))).unwrap_or_default();
    for (episode, trace) in &out.traces {
        let a = staged.add(
            format!("traces/{prefix}seed-{seed}-episode-{episode}.jsonl"),
            trace_bytes(trace),
            ArtifactKind::Trace,
            hash,
        );
        a.seed = Some(seed);
        a.multiplier = multiplier;
        a.episode = Some(*episode);
    }
    for (log, trace) in &out.eval {
        let a = staged.add(
            format!("eval/{prefix}seed-{seed}-episode-{}.jsonl", log.episode),
            trace_bytes(trace),
            ArtifactKind::EvalTrace,
            hash,
        );
        a.seed = Some(seed);
        a.multiplier = multiplier;
        a.episode = Some(log.episode);
    }
    if config.save_checkpoints {
        let mut buf = Vec::new();
        out.agent.save_checkpoint(&mut buf)?;
        let a = staged.add(
            format!("checkpoints/{prefix}seed-{seed}.json"),
            buf,
            ArtifactKind::Checkpoint,
            hash,
        );
        a.seed = Some(seed);
        a.multiplier = multiplier;
    }
    Ok(())
}

fn episodes_bytes<'a>(hash: &str, runs: impl Iterator<Item = (Option<f64>, &'a RunOutput)>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for (multiplier, out) in runs {
        for log in &out.episodes {
            serde_json::to_writer(
                &mut buf,
                &EpisodeLine {
                    config_hash: hash,
                    multiplier,
                    log,
                },
            )?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

fn canonical(config: &ExperimentConfig) -> ExperimentConfig {
    let mut c = config.clone();
    c.out_dir = None;
    c
}

/// Outcome of `run_training`: one run per seed.
#[derive(Debug, Clone)]
pub struct TrainingResult {
    pub manifest: Manifest,
    pub cost: f64,
    pub calibration: Option<Calibration>,
    pub runs: Vec<RunOutput>,
}

/// Trains `config.variant` on every seed for exactly `config.budget` decisions.
pub fn run_training(config: &ExperimentConfig, out_dir: &Path) -> Result<TrainingResult> {
    config.validate()?;
    let hash = config.hash();
    let (cost, calibration) = resolve_cost(config)?;
    let random = random_policy_score(config, RANDOM_SCORE_EPISODES)?;
    let baseline = calibration.as_ref().map(|c| c.baseline.task_return_100);
    let runs: Vec<RunOutput> = config
        .seeds
        .par_iter()
        .map(|&seed| train_run(&RunSpec::new(config, config.variant, cost, seed)))
        .collect::<Result<_>>()?;

    let mut staged = Staged::default();
    let rows: Vec<CurveRow> = runs
        .iter()
        .flat_map(|r| curve_rows(&hash, config, &r.summary, None, random, baseline))
        .collect();
    staged.add("curves.csv".into(), csv_bytes(&rows)?, ArtifactKind::Curves, &hash);
    staged.add(
        "episodes.jsonl".into(),
        episodes_bytes(&hash, runs.iter().map(|r| (None, r)))?,
        ArtifactKind::Episodes,
        &hash,
    );
    for r in &runs {
        stage_run_files(&mut staged, &hash, config, r, None)?;
    }
    let manifest = Manifest {
        kind: RunKind::Train,
        version: version_stamp(),
        config_hash: hash,
        config: canonical(config),
        seeds: config.seeds.clone(),
        cost: CostRecord::new(cost, calibration.as_ref()),
        random_score: random,
        baseline_score: baseline,
        spearman_log_multiplier_hz: None,
        rng: RngRecord::default(),
        artifacts: staged.artifacts.clone(),
    };
    staged.flush(out_dir, &manifest)?;
    Ok(TrainingResult {
        manifest,
        cost,
        calibration,
        runs,
    })
}

/// One (multiplier, seed) cell of a sweep. The trained agent itself is not kept.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub multiplier: f64,
    pub summary: RunSummary,
    pub traces: Vec<(u64, ExecutionTrace)>,
    pub eval: Vec<(EpisodeLog, ExecutionTrace)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSummary {
    pub multiplier: f64,
    pub cost: f64,
    pub scores: ScoreSummary,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub manifest: Manifest,
    pub base_cost: f64,
    pub calibration: Option<Calibration>,
    /// Multiplier-major, in config order, seeds in config order within each multiplier.
    pub cells: Vec<SweepCell>,
    pub per_multiplier: Vec<MultiplierSummary>,
    /// Rank correlation between log multiplier and mean Hz over the final window.
    pub spearman: Option<f64>,
}

impl SweepResult {
    pub fn cells_at(&self, multiplier: f64) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(move |c| c.multiplier == multiplier)
    }

    pub fn mean_hz(&self, multiplier: f64) -> Option<f64> {
        self.per_multiplier
            .iter()
            .find(|m| m.multiplier == multiplier)
            .map(|m| m.scores.hz_100)
    }
}

/// Trains one compute agent per (multiplier, seed) at `multiplier × c`.
pub fn run_cost_sweep(config: &ExperimentConfig, out_dir: &Path) -> Result<SweepResult> {
    config.validate()?;
    let hash = config.hash();
    let (base_cost, calibration) = resolve_cost(config)?;
    let random = random_policy_score(config, RANDOM_SCORE_EPISODES)?;
    let baseline = calibration.as_ref().map(|c| c.baseline.task_return_100);

    let grid: Vec<(f64, u64)> = config
        .multipliers
        .iter()
        .flat_map(|&m| config.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let outputs: Vec<(f64, RunOutput)> = grid
        .par_iter()
        .map(|&(m, seed)| train_run(&RunSpec::new(config, Variant::Compute, m * base_cost, seed)).map(|o| (m, o)))
        .collect::<Result<_>>()?;

    let env = config.env.name().to_string();
    let mut per_multiplier = Vec::with_capacity(config.multipliers.len());
    let mut frontier = Vec::with_capacity(config.multipliers.len());
    for &m in &config.multipliers {
        let scores = outputs
            .iter()
            .filter(|(mm, _)| *mm == m)
            .map(|(_, o)| {
                o.summary.final_score.ok_or_else(|| {
                    Error::usage(format!("multiplier {m} seed {} finished no episode", o.summary.seed))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scores = ScoreSummary::pool(scores)?;
        frontier.push(FrontierRow {
            config_hash: hash.clone(),
            env: env.clone(),
            multiplier: m,
            cost: m * base_cost,
            seeds: scores.per_seed.len(),
            mean_hz_100: scores.hz_100,
            mean_task_return_100: scores.task_return_100,
            mean_net_return_100: scores.net_return_100,
            mean_normalized_score: normalized(Some(scores.task_return_100), random, baseline),
        });
        per_multiplier.push(MultiplierSummary {
            multiplier: m,
            cost: m * base_cost,
            scores,
        });
    }
    let log_m: Vec<f64> = per_multiplier.iter().map(|p| p.multiplier.ln()).collect();
    let hz: Vec<f64> = per_multiplier.iter().map(|p| p.scores.hz_100).collect();
    let rho = if log_m.len() > 1 { spearman(&log_m, &hz) } else { None };

    let mut staged = Staged::default();
    let sweep_rows: Vec<SweepRow> = outputs
        .iter()
        .map(|(m, o)| {
            let s = &o.summary;
            let f = s.final_score;
            SweepRow {
                config_hash: hash.clone(),
                env: env.clone(),
                multiplier: *m,
                cost: s.cost,
                seed: s.seed,
                episodes: s.episodes,
                decisions: s.training.decisions(),
                total_ticks: s.total_ticks,
                hz_100: f.map(|f| f.hz_100),
                task_return_100: f.map(|f| f.task_return_100),
                net_return_100: f.map(|f| f.net_return_100),
                normalized_score: normalized(f.map(|f| f.task_return_100), random, baseline),
            }
        })
        .collect();
    staged.add("sweep.csv".into(), csv_bytes(&sweep_rows)?, ArtifactKind::Sweep, &hash);
    staged.add("frontier.csv".into(), csv_bytes(&frontier)?, ArtifactKind::Frontier, &hash);
    let rows: Vec<CurveRow> = outputs
        .iter()
        .flat_map(|(m, o)| curve_rows(&hash, config, &o.summary, Some(*m), random, baseline))
        .collect();
    staged.add("curves.csv".into(), csv_bytes(&rows)?, ArtifactKind::Curves, &hash);
    staged.add(
        "episodes.jsonl".into(),
        episodes_bytes(&hash, outputs.iter().map(|(m, o)| (Some(*m), o)))?,
        ArtifactKind::Episodes,
        &hash,
    );
    for (m, o) in &outputs {
        stage_run_files(&mut staged, &hash, config, o, Some(*m))?;
    }
    let manifest = Manifest {
        kind: RunKind::Sweep,
        version: version_stamp(),
        config_hash: hash,
        config: canonical(config),
        seeds: config.seeds.clone(),
        cost: CostRecord::new(base_cost, calibration.as_ref()),
        random_score: random,
        baseline_score: baseline,
        spearman_log_multiplier_hz: rho,
        rng: RngRecord::default(),
        artifacts: staged.artifacts.clone(),
    };
    staged.flush(out_dir, &manifest)?;

    Ok(SweepResult {
        manifest,
        base_cost,
        calibration,
        cells: outputs
            .into_iter()
            .map(|(multiplier, o)| SweepCell {
                multiplier,
                summary: o.summary,
                traces: o.traces,
                eval: o.eval,
            })
            .collect(),
        per_multiplier,
        spearman: rho,
    })
}

/// Repeats the run recorded in `dir/manifest.json`, writing into `out_dir`.
pub fn rerun_from_manifest(dir: &Path, out_dir: &Path) -> Result<Manifest> {
    let manifest = Manifest::read(dir)?;
    if manifest.config.hash() != manifest.config_hash {
        return Err(Error::config(format!(
            "manifest config hashes to {} but records {}",
            manifest.config.hash(),
            manifest.config_hash
        )));
    }
    Ok(match manifest.kind {
        RunKind::Train => run_training(&manifest.config, out_dir)?.manifest,
        RunKind::Sweep => run_cost_sweep(&manifest.config, out_dir)?.manifest,
    })
}

/// Directory the CLI writes into when no explicit output directory is given.
pub fn default_out_root() -> PathBuf {
    std::env::var_os("COMPUTERL_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}
