//! Experiment runner: repeats presets in the simulator or against real
//! segment files, then aggregates medians.
//!
//! Detail rows are CSV with this exact header:
//!
//! ```text
//! experiment,variant,repetition,phase,wall_time_s,throughput_bytes_per_s,total_bytes,fragments
//! ```
//!
//! Summaries are TOML: top-level `mode`, `indicative_only` and `warnings`,
//! then one `[[summary]]` table per (experiment, variant, phase) in the order
//! the rows were produced.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::Command;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use anyhow::{anyhow, bail, ensure, Context};
use serde::{Deserialize, Serialize};

use dynstripe_core::presets::{lookup, Scale};
use dynstripe_core::sim::simulate;
use dynstripe_core::workloads::{gen_netflow_trace, WorkloadSpec};
use dynstripe_core::{ClusterModel, CompositeLayout, IoKind, IoTrace};

use crate::netflow_io::write_data;
use crate::store::LogicalFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sim,
    File,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Sim => "sim",
            Mode::File => "file",
        }
    }
}

impl FromStr for Mode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sim" => Ok(Mode::Sim),
            "file" => Ok(Mode::File),
            _ => bail!("unknown mode `{s}`, expected sim or file"),
        }
    }
}

/// A named preset or an explicit layout plus workloads.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Preset(String),
    Inline { name: String, layout: CompositeLayout, workloads: Vec<WorkloadSpec>, nodes: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiments: Vec<Experiment>,
    pub mode: Mode,
    pub repetitions: u32,
    pub seed: u64,
    pub scale: Scale,
    /// SIM mode only. The client count is replaced by each preset's node count.
    pub cluster: ClusterModel,
    /// FILE mode: directory holding the segment files.
    pub root: Option<PathBuf>,
    /// FILE mode: shell command run before each repetition to drop caches.
    pub cache_drop_hook: Option<String>,
    /// FILE mode: threads executing one phase.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiments: Vec::new(),
            mode: Mode::Sim,
            repetitions: 1,
            seed: 0,
            scale: Scale::Desk,
            cluster: ClusterModel::default(),
            root: None,
            cache_drop_hook: None,
            workers: 8,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(self.repetitions >= 1, "repetitions must be at least 1");
        ensure!(!self.experiments.is_empty(), "no experiments given");
        ensure!(self.mode != Mode::File || self.root.is_some(), "file mode needs a root directory");
        ensure!(self.workers >= 1, "workers must be at least 1");
        self.cluster.validate()?;
        for e in &self.experiments {
            if let Experiment::Preset(name) = e {
                lookup(name)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub variant: String,
    pub repetition: u32,
    pub phase: String,
    pub wall_time_s: f64,
    pub throughput_bytes_per_s: f64,
    pub total_bytes: u64,
    pub fragments: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub variant: String,
    pub phase: String,
    pub repetitions: u32,
    pub median_wall_time_s: f64,
    pub median_throughput_bytes_per_s: f64,
    pub total_bytes: u64,
    pub fragments: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub mode: String,
    /// FILE-mode timings reflect the local filesystem, not a parallel one.
    pub indicative_only: bool,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

impl RunOutput {
    pub fn summary_toml(&self) -> String {
        toml::to_string(self).expect("summary is plain data")
    }
}

/// Median of `xs`; the mean of the two middle values for even counts.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

fn row(experiment: &str, variant: &str, repetition: u32, phase: &str, wall: f64, bytes: u64, fragments: u64) -> ResultRow {
    ResultRow {
        experiment: experiment.to_string(),
        variant: variant.to_string(),
        repetition,
        phase: phase.to_string(),
        wall_time_s: wall,
        throughput_bytes_per_s: if wall > 0.0 { bytes as f64 / wall } else { 0.0 },
        total_bytes: bytes,
        fragments,
    }
}

/// Groups rows by (experiment, variant, phase), keeping first-seen order.
fn group(rows: &[ResultRow]) -> Vec<Vec<&ResultRow>> {
    let mut groups: Vec<Vec<&ResultRow>> = Vec::new();
    for r in rows {
        let same = |g: &&mut Vec<&ResultRow>| {
            let h = g[0];
            h.experiment == r.experiment && h.variant == r.variant && h.phase == r.phase
        };
        match groups.iter_mut().find(|g| same(g)) {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    groups
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    group(rows)
        .into_iter()
        .map(|g| {
            let walls: Vec<f64> = g.iter().map(|r| r.wall_time_s).collect();
            let tputs: Vec<f64> = g.iter().map(|r| r.throughput_bytes_per_s).collect();
            SummaryRow {
                experiment: g[0].experiment.clone(),
                variant: g[0].variant.clone(),
                phase: g[0].phase.clone(),
                repetitions: g.len() as u32,
                median_wall_time_s: median(&walls).unwrap(),
                median_throughput_bytes_per_s: median(&tputs).unwrap(),
                total_bytes: g[0].total_bytes,
                fragments: g[0].fragments,
            }
        })
        .collect()
}

struct Resolved {
    name: String,
    layout: CompositeLayout,
    nodes: u32,
    workloads: Vec<WorkloadSpec>,
}

fn resolve(e: &Experiment, scale: Scale, seed: u64) -> anyhow::Result<Resolved> {
    Ok(match e {
        Experiment::Preset(name) => {
            let p = lookup(name)?;
            Resolved { name: p.name.to_string(), layout: p.layout(scale), nodes: p.nodes(), workloads: p.workloads(scale, seed) }
        }
        Experiment::Inline { name, layout, workloads, nodes } => {
            Resolved { name: name.clone(), layout: layout.clone(), nodes: *nodes, workloads: workloads.clone() }
        }
    })
}

pub fn run(config: &ExperimentConfig) -> anyhow::Result<RunOutput> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for e in &config.experiments {
        let r = resolve(e, config.scale, config.seed)?;
        match config.mode {
            Mode::Sim => run_sim(config, &r, &mut rows)?,
            Mode::File => run_file(config, &r, &mut rows, &mut warnings)?,
        }
    }
    Ok(RunOutput {
        mode: config.mode.name().to_string(),
        indicative_only: config.mode == Mode::File,
        warnings,
        summary: summarize(&rows),
        rows,
    })
}

fn run_sim(config: &ExperimentConfig, r: &Resolved, rows: &mut Vec<ResultRow>) -> anyhow::Result<()> {
    let cluster = config.cluster.with_clients(r.nodes);
    let pool = cluster.pool()?;
    for w in &r.workloads {
        let trace = w.trace()?;
        for rep in 0..config.repetitions {
            let res = simulate(&cluster, &pool, &r.layout, &trace, config.seed.wrapping_add(u64::from(rep)))
                .with_context(|| format!("simulating {}", r.name))?;
            for p in &res.phases {
                rows.push(row(&r.name, w.variant(), rep, &p.label, p.wall_time, p.bytes, p.fragments));
            }
        }
    }
    Ok(())
}

fn run_file(config: &ExperimentConfig, r: &Resolved, rows: &mut Vec<ResultRow>, warnings: &mut Vec<String>) -> anyhow::Result<()> {
    let root = config.root.as_deref().expect("validated");
    for (i, w) in r.workloads.iter().enumerate() {
        let name = format!("{}-{}-{i}", r.name, w.variant());
        if crate::store::manifest_path(root, &name).exists() {
            LogicalFile::remove(root, &name)?;
        }
        let file = LogicalFile::create(root, &name, &r.layout)?;
        let trace = prepare(&file, w)?;
        let fragments: Vec<u64> = trace.phases.iter().map(|p| count_fragments(&r.layout, p.ops())).collect();
        for rep in 0..config.repetitions {
            if let Some(hook) = &config.cache_drop_hook {
                if let Err(msg) = run_hook(hook) {
                    let msg = format!("{name} repetition {rep}: cache-drop hook failed: {msg}");
                    eprintln!("warning: {msg}");
                    warnings.push(msg);
                }
            }
            for (p, &frags) in trace.phases.iter().zip(&fragments) {
                let wall = execute_phase(&file, p, config.workers).with_context(|| format!("{name} phase {}", p.label))?;
                rows.push(row(&r.name, w.variant(), rep, &p.label, wall, p.bytes(), frags));
            }
        }
        file.sync()?;
        drop(file);
        LogicalFile::remove(root, &name)?;
    }
    Ok(())
}

fn run_hook(hook: &str) -> Result<(), String> {
    match Command::new("sh").arg("-c").arg(hook).status() {
        Ok(s) if s.success() => Ok(()),
        Ok(s) => Err(s.to_string()),
        Err(e) => Err(e.to_string()),
    }
}

fn count_fragments<'a>(layout: &CompositeLayout, ops: impl Iterator<Item = &'a dynstripe_core::IoOp>) -> u64 {
    let mut n = 0;
    for op in ops {
        layout.for_each_fragment(op.offset, op.length, |_| n += 1);
    }
    n
}

/// Writes whatever data the workload reads before it writes it, and returns
/// the trace to execute.
fn prepare(file: &LogicalFile, w: &WorkloadSpec) -> anyhow::Result<IoTrace> {
    if let WorkloadSpec::Netflow(spec) = w {
        let index = write_data(spec, LogicalWriter { file, pos: 0 })?;
        return Ok(gen_netflow_trace(spec, &index)?);
    }
    let trace = w.trace()?;
    let first_write = trace.phases.iter().position(|p| p.ops().any(|o| o.kind == IoKind::Write));
    let read_before_write = trace.phases[..first_write.unwrap_or(trace.phases.len())]
        .iter()
        .flat_map(|p| p.ops())
        .map(|o| o.offset + o.length)
        .max();
    if let Some(end) = read_before_write {
        let chunk = vec![0x5au8; 1 << 20];
        let mut pos = 0;
        while pos < end {
            let n = (end - pos).min(chunk.len() as u64) as usize;
            file.write_at(pos, &chunk[..n])?;
            pos += n as u64;
        }
    }
    Ok(trace)
}

struct LogicalWriter<'a> {
    file: &'a LogicalFile,
    pos: u64,
}

impl Write for LogicalWriter<'_> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.file.write_at(self.pos, buf).map_err(std::io::Error::other)?;
        self.pos += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// Runs one phase with up to `workers` threads and returns its wall time.
/// Each thread takes whole streams (or queue units) and issues their ops in
/// order, which satisfies every `after` dependency.
fn execute_phase(file: &LogicalFile, phase: &dynstripe_core::Phase, workers: usize) -> anyhow::Result<f64> {
    let next = AtomicUsize::new(0);
    let start = Instant::now();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers.min(phase.streams.len()))
            .map(|_| {
                s.spawn(|| -> anyhow::Result<()> {
                    let mut buf = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(stream) = phase.streams.get(i) else { return Ok(()) };
                        for op in stream {
                            match op.kind {
                                IoKind::Read => {
                                    file.read_at(op.offset, op.length)?;
                                }
                                IoKind::Write => {
                                    buf.resize(op.length as usize, op.task_id as u8);
                                    file.write_at(op.offset, &buf)?;
                                }
                            }
                        }
                    }
                })
            })
            .collect();
        handles.into_iter().try_for_each(|h| h.join().map_err(|_| anyhow!("worker panicked"))?)
    })?;
    Ok(start.elapsed().as_secs_f64())
}

pub fn write_rows_csv<W: Write>(rows: &[ResultRow], sink: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const CSV_HEADER: [&str; 8] =
    ["experiment", "variant", "repetition", "phase", "wall_time_s", "throughput_bytes_per_s", "total_bytes", "fragments"];

pub fn read_rows_csv<R: Read>(source: R) -> anyhow::Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(source);
    ensure!(r.headers()?.iter().eq(CSV_HEADER), "unexpected CSV header");
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub variant: String,
    pub phase: String,
    pub runs: u32,
    pub median_wall_time_s: f64,
    pub median_throughput_bytes_per_s: f64,
    /// Baseline median wall time over this median wall time, for the same
    /// variant and phase.
    pub speedup: Option<f64>,
}

pub fn report(rows: &[ResultRow], baseline: Option<&str>) -> anyhow::Result<Vec<ReportRow>> {
    ensure!(!rows.is_empty(), "no result rows");
    let summary = summarize(rows);
    if let Some(b) = baseline {
        ensure!(summary.iter().any(|s| s.experiment == b), "baseline experiment `{b}` not in results");
    }
    Ok(summary
        .iter()
        .map(|s| {
            let speedup = baseline.and_then(|b| {
                summary
                    .iter()
                    .find(|t| t.experiment == b && t.variant == s.variant && t.phase == s.phase)
                    .map(|t| t.median_wall_time_s / s.median_wall_time_s)
            });
            ReportRow {
                experiment: s.experiment.clone(),
                variant: s.variant.clone(),
                phase: s.phase.clone(),
                runs: s.repetitions,
                median_wall_time_s: s.median_wall_time_s,
                median_throughput_bytes_per_s: s.median_throughput_bytes_per_s,
                speedup,
            }
        })
        .collect())
}

pub fn write_report_csv<W: Write>(rows: &[ReportRow], sink: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width text table, one line per report row.
pub fn render_report(rows: &[ReportRow]) -> String {
    let mut out = format!(
        "{:<12} {:<8} {:<8} {:>4} {:>14} {:>14} {:>8}\n",
        "experiment", "variant", "phase", "runs", "wall_s", "MB/s", "speedup"
    );
    for r in rows {
        let speedup = r.speedup.map_or_else(|| "-".to_string(), |s| format!("{s:.3}"));
        out.push_str(&format!(
            "{:<12} {:<8} {:<8} {:>4} {:>14.6} {:>14.1} {:>8}\n",
            r.experiment,
            r.variant,
            r.phase,
            r.runs,
            r.median_wall_time_s,
            r.median_throughput_bytes_per_s / 1e6,
            speedup
        ));
    }
    out
}
