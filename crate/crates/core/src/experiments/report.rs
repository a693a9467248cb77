//! SVG plots rendered from a run directory.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use super::pipeline::{ArtifactKind, CurveRow, Manifest, RunKind, SweepRow};
use super::svg::{progress_color, Chart, Series, Style, PALETTE};
use crate::error::{Error, Result};
use crate::exec::ExecutionTrace;
use crate::metrics::{default_rate_bins, ema_rate_trace, rate_histogram};

/// EMA traces drawn per plot.
const MAX_EMA_TRACES: usize = 4;

fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::MissingArtifact(path.to_path_buf()),
        _ => Error::Csv(e),
    })?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

fn read_trace(path: &Path) -> Result<ExecutionTrace> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ExecutionTrace::read_jsonl(BufReader::new(f))
}

fn group_label(row: &CurveRow) -> String {
    match row.multiplier {
        Some(m) => format!("{m}c"),
        None => format!("seed {}", row.seed),
    }
}

/// Curves averaged over seeds within each group, keyed by checkpoint.
fn grouped_curves(rows: &[CurveRow], kind: RunKind) -> Vec<(String, Vec<(u64, f64, f64)>)> {
    // For sweeps, seeds within a multiplier share the checkpoint grid and are averaged.
    let mut groups: Vec<(String, BTreeMap<u64, (f64, f64, usize)>)> = Vec::new();
    for r in rows {
        let (Some(task), Some(hz)) = (r.task_return_100, r.hz_100) else {
            continue;
        };
        let label = match kind {
            RunKind::Sweep => group_label(r),
            RunKind::Train => format!("seed {}", r.seed),
        };
        let idx = match groups.iter().position(|(l, _)| *l == label) {
            Some(i) => i,
            None => {
                groups.push((label, BTreeMap::new()));
                groups.len() - 1
            }
        };
        let e = groups[idx].1.entry(r.decisions).or_insert((0.0, 0.0, 0));
        e.0 += task;
        e.1 += hz;
        e.2 += 1;
    }
    groups
        .into_iter()
        .map(|(l, m)| {
            let pts = m
                .into_iter()
                .map(|(d, (t, h, n))| (d, t / n as f64, h / n as f64))
                .collect();
            (l, pts)
        })
        .collect()
}

fn hash_note(manifest: &Manifest) -> String {
    format!("config {}", &manifest.config_hash[..12.min(manifest.config_hash.len())])
}

fn learning_charts(manifest: &Manifest, rows: &[CurveRow]) -> (Chart, Chart) {
    let env = manifest.config.env.name();
    let budget = manifest.config.budget as f64;
    let mut by_decisions = Chart::new(
        format!("{env}: task return during training"),
        "decisions",
        "task return (last 100 episodes)",
    );
    let mut by_hz = Chart::new(
        format!("{env}: task return vs decision rate"),
        "decisions per second (last 100 episodes)",
        "task return (last 100 episodes)",
    );
    for (i, (label, pts)) in grouped_curves(rows, manifest.kind).into_iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let progress: Vec<String> = pts.iter().map(|(d, _, _)| progress_color(*d as f64 / budget)).collect();
        by_decisions.series.push(Series::new(
            label.clone(),
            color,
            Style::Line,
            pts.iter().map(|&(d, t, _)| (d as f64, t)).collect(),
        ));
        let mut s = Series::new(label, color, Style::LineAndMarkers, pts.iter().map(|&(_, t, h)| (h, t)).collect());
        s.point_colors = Some(progress);
        by_hz.series.push(s);
    }
    by_hz.notes.push("markers: blue early, red late".into());
    by_hz.notes.push(hash_note(manifest));
    by_decisions.notes.push(hash_note(manifest));
    (by_decisions, by_hz)
}

fn trace_groups(manifest: &Manifest, dir: &Path) -> Result<Vec<(String, Vec<ExecutionTrace>)>> {
    // Prefer the greedy evaluation traces when there are any.
    let kind = if manifest.artifacts.iter().any(|a| a.kind == ArtifactKind::EvalTrace) {
        ArtifactKind::EvalTrace
    } else {
        ArtifactKind::Trace
    };
    let mut groups: Vec<(String, Vec<ExecutionTrace>)> = Vec::new();
    for a in manifest.artifacts.iter().filter(|a| a.kind == kind) {
        let label = match a.multiplier {
            Some(m) => format!("{m}c"),
            None => "all seeds".to_string(),
        };
        let trace = read_trace(&dir.join(&a.path))?;
        match groups.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(trace),
            None => groups.push((label, vec![trace])),
        }
    }
    Ok(groups)
}

fn histogram_chart(manifest: &Manifest, groups: &[(String, Vec<ExecutionTrace>)]) -> Result<Chart> {
    let cfg = &manifest.config;
    let window = cfg.histogram_window;
    let edges = default_rate_bins(window, cfg.tick_rate);
    let mut chart = Chart::new(
        format!("{}: decision rate within episodes", cfg.env.name()),
        "decisions per second",
        "fraction of windows",
    );
    for (i, (label, traces)) in groups.iter().enumerate() {
        let indicators: Vec<Vec<bool>> = traces.iter().map(|t| t.decision_indicators()).collect();
        let h = rate_histogram(&indicators, window, &edges, cfg.tick_rate)?;
        let total = h.total().max(1) as f64;
        let pts = (0..h.counts.len())
            .map(|b| (h.bin_center(b), h.counts[b] as f64 / total))
            .collect();
        chart
            .series
            .push(Series::new(label.clone(), PALETTE[i % PALETTE.len()], Style::LineAndMarkers, pts));
    }
    chart.notes.push(format!("window {window} ticks"));
    chart.notes.push(hash_note(manifest));
    Ok(chart)
}

fn ema_chart(manifest: &Manifest, groups: &[(String, Vec<ExecutionTrace>)]) -> Result<Chart> {
    let cfg = &manifest.config;
    let mut chart = Chart::new(
        format!("{}: smoothed decision rate", cfg.env.name()),
        "seconds into episode",
        "decisions per second",
    );
    let picked = groups
        .iter()
        .flat_map(|(label, ts)| ts.iter().map(move |t| (label, t)))
        .take(MAX_EMA_TRACES);
    for (i, (label, trace)) in picked.enumerate() {
        let ema = ema_rate_trace(&trace.decision_indicators(), cfg.ema_beta, cfg.tick_rate)?;
        let pts = ema
            .values
            .iter()
            .enumerate()
            .map(|(t, &y)| (t as f64 / cfg.tick_rate, y))
            .collect();
        chart
            .series
            .push(Series::new(format!("{label} #{}", i + 1), PALETTE[i % PALETTE.len()], Style::Line, pts));
        if trace.records.iter().any(|r| r.idle) {
            let idle = trace
                .records
                .iter()
                .enumerate()
                .filter(|(_, r)| r.idle)
                .map(|(t, _)| (t as f64 / cfg.tick_rate, 0.0))
                .collect();
            chart.series.push(Series::new(
                format!("idle #{}", i + 1),
                PALETTE[i % PALETTE.len()],
                Style::Markers,
                idle,
            ));
        }
    }
    chart.notes.push(format!("beta = {}", cfg.ema_beta));
    chart.notes.push(hash_note(manifest));
    Ok(chart)
}

fn frontier_chart(manifest: &Manifest, rows: &[SweepRow]) -> Chart {
    let env = manifest.config.env.name();
    let mut chart = Chart::new(
        format!("{env}: cost sweep"),
        "decisions per second (last 100 episodes)",
        "task return (last 100 episodes)",
    );
    let mut means = Vec::new();
    for (i, &m) in manifest.config.multipliers.iter().enumerate() {
        let cells: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.multiplier == m)
            .filter_map(|r| Some((r.hz_100?, r.task_return_100?)))
            .collect();
        if cells.is_empty() {
            continue;
        }
        let n = cells.len() as f64;
        means.push((
            cells.iter().map(|c| c.0).sum::<f64>() / n,
            cells.iter().map(|c| c.1).sum::<f64>() / n,
        ));
        chart
            .series
            .push(Series::new(format!("{m}c"), PALETTE[i % PALETTE.len()], Style::Markers, cells));
    }
    chart
        .series
        .push(Series::new("mean per cost", "#000000", Style::LineAndMarkers, means));
    chart.notes.push(format!("c = {:.5}", manifest.cost.base));
    if let Some(rho) = manifest.spearman_log_multiplier_hz {
        chart.notes.push(format!("rank corr(log cost, Hz) = {rho:.2}"));
    }
    chart.notes.push(hash_note(manifest));
    chart
}

/// Renders the plots for the run in `dir` and returns the files written.
pub fn emit_report(dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest = Manifest::read(dir)?;
    manifest.check_artifacts(dir)?;
    let mut charts: Vec<(String, Chart)> = Vec::new();

    let curves_path = dir.join("curves.csv");
    let rows: Vec<CurveRow> = read_csv(&curves_path)?;
    let (by_decisions, by_hz) = learning_charts(&manifest, &rows);
    charts.push(("learning_curve.svg".into(), by_decisions));
    charts.push(("return_vs_hz.svg".into(), by_hz));

    let groups = trace_groups(&manifest, dir)?;
    if !groups.is_empty() {
        charts.push(("rate_histogram.svg".into(), histogram_chart(&manifest, &groups)?));
        charts.push(("ema_traces.svg".into(), ema_chart(&manifest, &groups)?));
    }

    if manifest.kind == RunKind::Sweep {
        let sweep: Vec<SweepRow> = read_csv(&dir.join("sweep.csv"))?;
        charts.push((
            format!("frontier-{}.svg", manifest.config.env.name()),
            frontier_chart(&manifest, &sweep),
        ));
    }

    let mut written = Vec::with_capacity(charts.len());
    for (name, chart) in charts {
        let path = dir.join(name);
        fs::write(&path, chart.render()).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
