//! Fluid cost model of a striped storage cluster.
//!
//! Every op of a trace is expanded into stripe-unit fragments. A fragment is
//! a transfer that crosses four shared resources: the issuing client's link,
//! the aggregate fabric, the OSS that owns the target OST, and the OST itself.
//! All transfers in flight share those resources max-min fairly; simulated
//! time jumps from one transfer completion (or fragment arrival) to the next.
//!
//! Before its transfer begins, each fragment waits `per_op_latency`, plus
//! `seek_penalty` when it does not continue exactly where the previous
//! fragment issued to the same OST left off. Waiting fragments hold no
//! bandwidth.
//!
//! There is no cache model: every byte is served by an OST.

mod fair;

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use fair::max_min_rates;

use crate::composite::CompositeLayout;
use crate::layout::OstPool;
use crate::trace::{Dispatch, IoTrace, Phase};
use crate::{Error, Result};

/// Cluster topology and rates. Bandwidths are bytes per second, latencies
/// seconds.
///
/// The [`Default`] values describe a small 8-server, 64-OST disk cluster.
/// They are illustrative, not measurements.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ClusterModel {
    pub num_clients: u32,
    pub client_link_bw: f64,
    pub num_oss: u32,
    pub oss_bw_cap: f64,
    pub osts_per_oss: u32,
    pub ost_bw: f64,
    pub per_op_latency: f64,
    pub seek_penalty: f64,
    pub aggregate_fabric_bw: f64,
    /// Each worker starts a phase after a delay drawn uniformly from
    /// `[0, launch_jitter)` with the simulation seed. Zero disables it.
    #[cfg_attr(feature = "serde", serde(default))]
    pub launch_jitter: f64,
}

impl Default for ClusterModel {
    fn default() -> Self {
        ClusterModel {
            num_clients: 16,
            client_link_bw: 6.0e9,
            num_oss: 8,
            oss_bw_cap: 3.2e9,
            osts_per_oss: 8,
            ost_bw: 3.0e8,
            per_op_latency: 2.0e-4,
            seek_penalty: 4.0e-3,
            aggregate_fabric_bw: 3.6e10,
            launch_jitter: 0.0,
        }
    }
}

impl ClusterModel {
    pub fn num_osts(&self) -> u32 {
        self.num_oss * self.osts_per_oss
    }

    /// Same cluster seen by a different number of client nodes.
    pub fn with_clients(&self, num_clients: u32) -> Self {
        ClusterModel { num_clients, ..self.clone() }
    }

    /// All OSTs of the cluster, alternating between servers.
    pub fn pool(&self) -> Result<OstPool> {
        self.validate()?;
        OstPool::interleaved(self.num_oss, self.osts_per_oss)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidCluster(alloc::format!("{what} must be positive")));
        if self.num_clients == 0 {
            return bad("num_clients");
        }
        if self.num_oss == 0 {
            return bad("num_oss");
        }
        if self.osts_per_oss == 0 {
            return bad("osts_per_oss");
        }
        for (name, v) in [
            ("client_link_bw", self.client_link_bw),
            ("oss_bw_cap", self.oss_bw_cap),
            ("ost_bw", self.ost_bw),
            ("aggregate_fabric_bw", self.aggregate_fabric_bw),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name);
            }
        }
        for (name, v) in
            [("per_op_latency", self.per_op_latency), ("seek_penalty", self.seek_penalty), ("launch_jitter", self.launch_jitter)]
        {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidCluster(alloc::format!("{name} must be non-negative")));
            }
        }
        Ok(())
    }

    /// Upper bound on aggregate throughput when `active_osts` OSTs serve data.
    pub fn bottleneck_bound(&self, active_osts: u32) -> f64 {
        (f64::from(self.num_clients) * self.client_link_bw)
            .min(f64::from(active_osts) * self.ost_bw)
            .min(f64::from(self.num_oss) * self.oss_bw_cap)
            .min(self.aggregate_fabric_bw)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult {
    pub label: String,
    /// First op issued to last op completed.
    pub wall_time: f64,
    pub bytes: u64,
    /// `bytes / wall_time`, zero for an empty phase.
    pub throughput: f64,
    pub fragments: u64,
    pub active_osts: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub phases: Vec<PhaseResult>,
    /// Indexed by OST id.
    pub ost_bytes: Vec<u64>,
    /// Seconds during which each OST had at least one transfer in progress.
    pub ost_busy: Vec<f64>,
    pub total_fragments: u64,
}

impl SimResult {
    pub fn phase(&self, label: &str) -> Option<&PhaseResult> {
        self.phases.iter().find(|p| p.label == label)
    }

    pub fn total_wall_time(&self) -> f64 {
        self.phases.iter().map(|p| p.wall_time).sum()
    }
}

/// Runs `trace` against `layout` on `cluster`. Identical inputs and seed give
/// bit-identical results.
pub fn simulate(
    cluster: &ClusterModel,
    pool: &OstPool,
    layout: &CompositeLayout,
    trace: &IoTrace,
    seed: u64,
) -> Result<SimResult> {
    cluster.validate()?;
    let n_osts = cluster.num_osts();
    if pool.len() != n_osts as usize {
        return Err(Error::ClusterMismatch(alloc::format!(
            "pool has {} OSTs, cluster has {} x {}",
            pool.len(),
            cluster.num_oss,
            cluster.osts_per_oss
        )));
    }
    if let Some(id) = pool.ids().iter().find(|&&id| id >= n_osts) {
        return Err(Error::ClusterMismatch(alloc::format!("OST id {id} out of range")));
    }
    layout.check_pool(pool)?;
    trace.validate()?;

    let mut engine = Engine::new(cluster, pool, layout, seed);
    let phases = trace.phases.iter().map(|p| engine.run_phase(p)).collect();
    Ok(SimResult {
        phases,
        total_fragments: engine.total_fragments,
        ost_bytes: engine.ost_bytes,
        ost_busy: engine.ost_busy,
    })
}

const RESOURCES_PER_FRAGMENT: usize = 4;

struct Fragment {
    op: usize,
    resources: [u32; RESOURCES_PER_FRAGMENT],
    ost: u32,
    length: f64,
}

struct Transfer {
    frag: usize,
    remaining: f64,
}

struct OpState {
    worker: usize,
    index: usize,
    pending_frags: u32,
}

struct Worker {
    client: u32,
    stream: Option<usize>,
    next: usize,
    done: Vec<bool>,
    outstanding: usize,
}

#[derive(Clone, Copy)]
enum EventKind {
    Arrive(usize),
    Start(usize),
}

struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

struct Engine<'a> {
    cluster: &'a ClusterModel,
    pool: &'a OstPool,
    layout: &'a CompositeLayout,
    caps: Vec<f64>,
    rng: ChaCha8Rng,
    clock: f64,
    /// `(segment, object end)` of the last fragment issued to each OST.
    ost_head: Vec<Option<(usize, u64)>>,
    ost_bytes: Vec<u64>,
    ost_busy: Vec<f64>,
    total_fragments: u64,
}

impl<'a> Engine<'a> {
    fn new(cluster: &'a ClusterModel, pool: &'a OstPool, layout: &'a CompositeLayout, seed: u64) -> Self {
        let n_osts = cluster.num_osts() as usize;
        let mut caps = Vec::with_capacity(cluster.num_clients as usize + 1 + cluster.num_oss as usize + n_osts);
        caps.extend((0..cluster.num_clients).map(|_| cluster.client_link_bw));
        caps.push(cluster.aggregate_fabric_bw);
        caps.extend((0..cluster.num_oss).map(|_| cluster.oss_bw_cap));
        caps.extend((0..n_osts).map(|_| cluster.ost_bw));
        Engine {
            cluster,
            pool,
            layout,
            caps,
            rng: ChaCha8Rng::seed_from_u64(seed),
            clock: 0.0,
            ost_head: vec![None; n_osts],
            ost_bytes: vec![0; n_osts],
            ost_busy: vec![0.0; n_osts],
            total_fragments: 0,
        }
    }

    fn resources(&self, client: u32, ost: u32) -> [u32; RESOURCES_PER_FRAGMENT] {
        let c = self.cluster.num_clients;
        let oss = ost / self.cluster.osts_per_oss;
        [client, c, c + 1 + oss, c + 1 + self.cluster.num_oss + ost]
    }

    fn run_phase(&mut self, phase: &Phase) -> PhaseResult {
        let mut run = PhaseRun::new(self, phase);
        run.execute(self, phase);
        let wall_time = match run.first_issue {
            Some(first) => run.last_done - first,
            None => 0.0,
        };
        self.clock = self.clock.max(run.last_done);
        let bytes = phase.bytes();
        let active_osts = run.touched_osts.iter().filter(|&&t| t).count() as u32;
        PhaseResult {
            label: phase.label.clone(),
            wall_time,
            bytes,
            throughput: if wall_time > 0.0 { bytes as f64 / wall_time } else { 0.0 },
            fragments: run.frags.len() as u64,
            active_osts,
        }
    }
}

/// Mutable state of one phase.
struct PhaseRun {
    workers: Vec<Worker>,
    next_unit: usize,
    ops: Vec<OpState>,
    frags: Vec<Fragment>,
    active: Vec<Transfer>,
    events: BinaryHeap<Reverse<Event>>,
    seq: u64,
    now: f64,
    first_issue: Option<f64>,
    last_done: f64,
    touched_osts: Vec<bool>,
}

impl PhaseRun {
    fn new(engine: &mut Engine<'_>, phase: &Phase) -> Self {
        let n_workers = phase.workers();
        let workers = (0..n_workers)
            .map(|w| Worker {
                client: (w % engine.cluster.num_clients as usize) as u32,
                stream: None,
                next: 0,
                done: Vec::new(),
                outstanding: 0,
            })
            .collect();
        let mut run = PhaseRun {
            workers,
            next_unit: 0,
            ops: Vec::new(),
            frags: Vec::new(),
            active: Vec::new(),
            events: BinaryHeap::new(),
            seq: 0,
            now: engine.clock,
            first_issue: None,
            last_done: engine.clock,
            touched_osts: vec![false; engine.cluster.num_osts() as usize],
        };
        for w in 0..n_workers {
            let delay = if engine.cluster.launch_jitter > 0.0 {
                engine.rng.gen_range(0.0..engine.cluster.launch_jitter)
            } else {
                0.0
            };
            run.push(engine.clock + delay, EventKind::Start(w));
        }
        run
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        self.events.push(Reverse(Event { time, seq: self.seq, kind }));
        self.seq += 1;
    }

    fn execute(&mut self, engine: &mut Engine<'_>, phase: &Phase) {
        let mut scratch = fair::Scratch::default();
        let mut rates: Vec<f64> = Vec::new();
        let mut flows: Vec<[u32; RESOURCES_PER_FRAGMENT]> = Vec::new();
        let mut dirty = true;
        let mut finished: Vec<usize> = Vec::new();
        let mut busy_osts: Vec<u32> = Vec::new();

        loop {
            if dirty {
                flows.clear();
                flows.extend(self.active.iter().map(|t| self.frags[t.frag].resources));
                fair::allocate(&engine.caps, &flows, &mut rates, &mut scratch);
                dirty = false;
            }

            let mut next_done: Option<(usize, f64)> = None;
            for (i, t) in self.active.iter().enumerate() {
                let dt = t.remaining / rates[i];
                if next_done.is_none_or(|(_, b)| dt < b) {
                    next_done = Some((i, dt));
                }
            }
            let next_event = self.events.peek().map(|Reverse(e)| e.time);
            let (dt, target) = match (next_done, next_event) {
                (None, None) => break,
                (Some((_, d)), None) => (d, self.now + d),
                (None, Some(te)) => (te - self.now, te),
                (Some((_, d)), Some(te)) => {
                    if self.now + d < te {
                        (d, self.now + d)
                    } else {
                        (te - self.now, te)
                    }
                }
            };
            let dt = dt.max(0.0);

            if dt > 0.0 {
                busy_osts.clear();
                for (i, t) in self.active.iter_mut().enumerate() {
                    t.remaining -= rates[i] * dt;
                    busy_osts.push(self.frags[t.frag].ost);
                }
                busy_osts.sort_unstable();
                busy_osts.dedup();
                for &ost in &busy_osts {
                    engine.ost_busy[ost as usize] += dt;
                }
            }
            if let Some((i, d)) = next_done {
                if self.now + d <= target {
                    self.active[i].remaining = 0.0;
                }
            }
            self.now = target;

            finished.clear();
            let frags = &self.frags;
            self.active.retain(|t| {
                let done = t.remaining <= frags[t.frag].length * 1e-12;
                if done {
                    finished.push(t.frag);
                }
                !done
            });
            if !finished.is_empty() {
                dirty = true;
                for &frag in &finished {
                    self.complete_fragment(engine, phase, frag);
                }
            }

            while let Some(Reverse(e)) = self.events.peek() {
                if e.time > self.now {
                    break;
                }
                let Reverse(e) = self.events.pop().unwrap();
                match e.kind {
                    EventKind::Arrive(f) => {
                        let length = self.frags[f].length;
                        self.active.push(Transfer { frag: f, remaining: length });
                        dirty = true;
                    }
                    EventKind::Start(w) => self.assign_next(engine, phase, w),
                }
            }
        }
    }

    fn complete_fragment(&mut self, engine: &mut Engine<'_>, phase: &Phase, frag: usize) {
        let op = self.frags[frag].op;
        self.ops[op].pending_frags -= 1;
        if self.ops[op].pending_frags > 0 {
            return;
        }
        self.last_done = self.now;
        let (w, idx) = (self.ops[op].worker, self.ops[op].index);
        let worker = &mut self.workers[w];
        worker.done[idx] = true;
        worker.outstanding -= 1;
        self.issue_ready(engine, phase, w);
    }

    /// Gives worker `w` its next stream, if any is left.
    fn assign_next(&mut self, engine: &mut Engine<'_>, phase: &Phase, w: usize) {
        let stream = match phase.dispatch {
            Dispatch::Static => {
                if self.workers[w].stream.is_some() {
                    return;
                }
                w
            }
            Dispatch::Queue { .. } => {
                if self.next_unit >= phase.streams.len() {
                    self.workers[w].stream = None;
                    return;
                }
                self.next_unit += 1;
                self.next_unit - 1
            }
        };
        let worker = &mut self.workers[w];
        worker.stream = Some(stream);
        worker.next = 0;
        worker.done.clear();
        worker.done.resize(phase.streams[stream].len(), false);
        worker.outstanding = 0;
        self.issue_ready(engine, phase, w);
    }

    /// Issues ops of worker `w` in order until one is blocked on its
    /// dependency; moves to the next work unit once the stream is drained.
    fn issue_ready(&mut self, engine: &mut Engine<'_>, phase: &Phase, w: usize) {
        let Some(stream_idx) = self.workers[w].stream else { return };
        let stream = &phase.streams[stream_idx];
        loop {
            let worker = &self.workers[w];
            if worker.next >= stream.len() {
                if worker.outstanding == 0 && matches!(phase.dispatch, Dispatch::Queue { .. }) {
                    self.assign_next(engine, phase, w);
                }
                return;
            }
            let op = &stream[worker.next];
            if op.after.is_some_and(|a| !worker.done[a as usize]) {
                return;
            }
            let index = worker.next;
            let client = worker.client;
            self.workers[w].next += 1;
            self.workers[w].outstanding += 1;
            self.issue_op(engine, w, index, client, op.offset, op.length);
        }
    }

    fn issue_op(&mut self, engine: &mut Engine<'_>, w: usize, index: usize, client: u32, offset: u64, length: u64) {
        self.first_issue.get_or_insert(self.now);
        let op = self.ops.len();
        self.ops.push(OpState { worker: w, index, pending_frags: 0 });
        let mut count = 0;
        let now = self.now;
        engine.layout.for_each_fragment(offset, length, |f| {
            let ost = engine.layout.ost_id(engine.pool, f.segment, f.chunk.ost_ordinal);
            let head = &mut engine.ost_head[ost as usize];
            let contiguous = head.is_none_or(|h| h == (f.segment, f.chunk.object_offset));
            *head = Some((f.segment, f.chunk.object_offset + f.chunk.length));
            let mut delay = engine.cluster.per_op_latency;
            if !contiguous {
                delay += engine.cluster.seek_penalty;
            }
            engine.ost_bytes[ost as usize] += f.chunk.length;
            engine.total_fragments += 1;
            self.touched_osts[ost as usize] = true;
            let fid = self.frags.len();
            self.frags.push(Fragment {
                op,
                resources: engine.resources(client, ost),
                ost,
                length: f.chunk.length as f64,
            });
            self.events.push(Reverse(Event { time: now + delay, seq: self.seq, kind: EventKind::Arrive(fid) }));
            self.seq += 1;
            count += 1;
        });
        self.ops[op].pending_frags = count;
    }
}
