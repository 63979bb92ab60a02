//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fail.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dynstripe::bench::{self, Experiment, ExperimentConfig, Mode};
use dynstripe::LogicalFile;
use dynstripe_core::presets::{experiment_presets, sweep, Scale, SweepEntry};
use dynstripe_core::sim::simulate;
use dynstripe_core::size::{GIB, MIB, TIB};
use dynstripe_core::trace::sequential_stream;
use dynstripe_core::{
    ClusterModel, CompositeLayout, Dispatch, DirectoryType, IoKind, IoTrace, Phase, StripingConfig, Watermark,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed < Duration::from_secs(limit_s), || format!("took {elapsed:.2?}, limit {limit_s}s"))
}

// Per-byte striping oracle: steps through the file one byte at a time and
// tracks which object and object offset the current byte lands on, without
// any division.
struct Walker {
    width: u64,
    count: u32,
    pos: u64,
    in_unit: u64,
    ordinal: u32,
    row: u64,
}

impl Walker {
    fn new(c: StripingConfig) -> Walker {
        Walker { width: c.stripe_width(), count: c.stripe_count(), pos: 0, in_unit: 0, ordinal: 0, row: 0 }
    }

    fn at(&self) -> (u32, u64) {
        (self.ordinal, self.row * self.width + self.in_unit)
    }

    fn step(&mut self) {
        self.pos += 1;
        self.in_unit += 1;
        if self.in_unit == self.width {
            self.in_unit = 0;
            self.ordinal += 1;
            if self.ordinal == self.count {
                self.ordinal = 0;
                self.row += 1;
            }
        }
    }
}

fn criterion_1() -> Check {
    let t = Instant::now();
    let span = 64 * MIB;
    let mut checked = 0usize;
    for d in DirectoryType::ALL {
        let c = d.config();
        let w = c.stripe_width();
        let mut samples: Vec<u64> = (0..span).step_by(4093).collect();
        for k in 0..=span / w {
            samples.extend([k * w, k * w + 1].into_iter().chain((k * w).checked_sub(1)).filter(|&o| o < span));
        }
        samples.sort_unstable();
        samples.dedup();
        // (logical offset, claimed ordinal, claimed object offset)
        let mut claims: Vec<(u64, u32, u64)> = Vec::new();
        for (i, &o) in samples.iter().enumerate() {
            let (ord, obj) = c.map_offset(o);
            claims.push((o, ord, obj));
            let len = 1 + (i as u64 * 7919) % (2 * w + 3);
            let frags = c.decompose_extent(o, len);
            let mut next = o;
            for f in &frags {
                if f.logical_offset != next || f.chunk.length == 0 {
                    return Err(format!("{d}: extent ({o}, {len}) does not tile at {next}"));
                }
                claims.push((f.logical_offset, f.chunk.ost_ordinal, f.chunk.object_offset));
                let last = f.chunk.length - 1;
                claims.push((f.logical_offset + last, f.chunk.ost_ordinal, f.chunk.object_offset + last));
                next += f.chunk.length;
            }
            if next != o + len {
                return Err(format!("{d}: extent ({o}, {len}) covers up to {next}"));
            }
        }
        claims.sort_unstable();
        let mut walker = Walker::new(c);
        for (o, ord, obj) in claims {
            while walker.pos < o {
                walker.step();
            }
            if walker.at() != (ord, obj) {
                return Err(format!("{d}: offset {o} claimed ({ord}, {obj}), oracle {:?}", walker.at()));
            }
            checked += 1;
        }
    }
    within(t.elapsed(), 10)?;
    Ok(format!("{checked} mapped bytes match the per-byte oracle across 10 directory types in {:.2?}", t.elapsed()))
}

fn three_tier_desk() -> CompositeLayout {
    CompositeLayout::build(
        &[Watermark(MIB), Watermark(10 * MIB)],
        &[StripingConfig::mib(4, 1), StripingConfig::mib(8, 2), StripingConfig::mib(16, 4)],
    )
    .unwrap()
}

fn criterion_2() -> Check {
    let subs = three_tier_desk().split_range(0, 14 * MIB);
    let got: Vec<(usize, u64, u64)> = subs.iter().map(|s| (s.segment, s.offset_within, s.length)).collect();
    let want = vec![(0, 0, MIB), (1, 0, 9 * MIB), (2, 0, 4 * MIB)];
    ensure(got == want, || format!("got {got:?}"))?;
    Ok("14 MiB splits into 1, 9 and 4 MiB".into())
}

fn sha256_file(p: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(p).unwrap()))
}

fn criterion_3() -> Check {
    let t = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let layout = three_tier_desk();
    let f = LogicalFile::create(dir.path(), "random", &layout).map_err(|e| e.to_string())?;
    let mut shadow: Vec<u8> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let off = rng.gen_range(0..14 * MIB);
        let n = rng.gen_range(1..=256 * 1024usize);
        let data: Vec<u8> = (0..n).map(|_| rng.gen()).collect();
        f.write_at(off, &data).map_err(|e| e.to_string())?;
        let end = off as usize + n;
        if shadow.len() < end {
            shadow.resize(end, 0);
        }
        shadow[off as usize..end].copy_from_slice(&data);
    }
    let back = f.read_at(0, u64::MAX).map_err(|e| e.to_string())?.unwrap_or_default();
    ensure(back == shadow, || "read-back differs from the shadow file".into())?;

    let wm = MIB;
    for size in [0, 1, wm - 1, wm, wm + 1, 10 * wm] {
        let src = dir.path().join(format!("src-{size}"));
        let data: Vec<u8> = (0..size).map(|_| rng.gen()).collect();
        fs::write(&src, &data).unwrap();
        let name = format!("split-{size}");
        let file = LogicalFile::import_split(&src, dir.path(), &name, &layout).map_err(|e| e.to_string())?;
        let dest = dir.path().join(format!("dest-{size}"));
        file.export_merge(&dest).map_err(|e| e.to_string())?;
        ensure(sha256_file(&src) == sha256_file(&dest), || format!("checksum differs for {size} bytes"))?;
    }
    within(t.elapsed(), 60)?;
    Ok(format!("1000 random writes match the shadow file; 6 split/merge sizes checksum-identical in {:.2?}", t.elapsed()))
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs()
}

fn read_trace(streams: Vec<Vec<dynstripe_core::IoOp>>) -> IoTrace {
    IoTrace {
        workload: "closed-form".into(),
        variant: "default".into(),
        phases: vec![Phase { label: "read".into(), dispatch: Dispatch::Static, streams }],
    }
}

fn criterion_4() -> Check {
    let base = ClusterModel {
        num_clients: 2,
        client_link_bw: 400e6,
        num_oss: 1,
        oss_bw_cap: 1e9,
        osts_per_oss: 1,
        ost_bw: 250e6,
        per_op_latency: 0.0,
        seek_penalty: 0.0,
        aggregate_fabric_bw: 1e12,
        launch_jitter: 0.0,
    };
    let layout = CompositeLayout::single(StripingConfig::mib(1, 1));
    let bytes = 50 * MIB + 7;
    let mut cases = 0;
    for client_bw in [400e6, 100e6] {
        let c = ClusterModel { client_link_bw: client_bw, ..base.clone() };
        let pool = c.pool().unwrap();
        let one = read_trace(vec![sequential_stream(0, 0, IoKind::Read, 0, bytes, MIB, 1)]);
        let two = read_trace(vec![
            sequential_stream(0, 0, IoKind::Read, 0, bytes, MIB, 1),
            sequential_stream(1, 0, IoKind::Read, bytes, bytes, MIB, 1),
        ]);
        let w1 = simulate(&c, &pool, &layout, &one, 0).map_err(|e| e.to_string())?.phases[0].wall_time;
        let w2 = simulate(&c, &pool, &layout, &two, 0).map_err(|e| e.to_string())?.phases[0].wall_time;
        let e1 = bytes as f64 / client_bw.min(c.ost_bw).min(c.oss_bw_cap);
        let e2 = bytes as f64 / client_bw.min(c.ost_bw / 2.0).min(c.oss_bw_cap / 2.0);
        ensure(rel_eq(w1, e1), || format!("one client: {w1} vs {e1}"))?;
        ensure(rel_eq(w2, e2), || format!("two clients: {w2} vs {e2}"))?;
        cases += 2;
    }
    Ok(format!("{cases} closed-form wall times within 1e-9 relative"))
}

fn trace_bytes(e: &SweepEntry) -> u64 {
    let p = dynstripe_core::presets::lookup(&e.experiment).unwrap();
    let w = p.workloads(Scale::Desk, SEED).into_iter().find(|w| w.variant() == e.variant).unwrap();
    w.trace().unwrap().total_bytes()
}

const SEED: u64 = 1;

fn criterion_5(cluster: &ClusterModel, entries: &[SweepEntry]) -> Check {
    for e in entries {
        let sum: u64 = e.result.ost_bytes.iter().sum();
        let want = trace_bytes(e);
        ensure(sum == want, || format!("{} {}: OST bytes {sum} != trace bytes {want}", e.experiment, e.variant))?;
        let p = dynstripe_core::presets::lookup(&e.experiment).unwrap();
        let c = cluster.with_clients(p.nodes());
        for ph in &e.result.phases {
            let bound = c.bottleneck_bound(ph.active_osts);
            ensure(ph.throughput <= bound, || {
                format!("{} {} {}: {} exceeds bound {bound}", e.experiment, e.variant, ph.label, ph.throughput)
            })?;
        }
    }
    Ok(format!("{} preset runs conserve bytes and respect the bottleneck bound", entries.len()))
}

fn throughput(entries: &[SweepEntry], exp: &str, variant: &str, phase: &str) -> f64 {
    entries
        .iter()
        .find(|e| e.experiment == exp && e.variant == variant)
        .and_then(|e| e.result.phase(phase))
        .unwrap_or_else(|| panic!("{exp} {variant} {phase} missing"))
        .throughput
}

fn criterion_6(entries: &[SweepEntry], elapsed: Duration) -> Check {
    let base = throughput(entries, "IOR.1", "default", "read");
    let mut parts = Vec::new();
    for exp in ["IOR.4", "IOR.5", "IOR.6"] {
        let t = throughput(entries, exp, "default", "read");
        ensure(t > base, || format!("{exp} read {t:.4e} not above IOR.1 {base:.4e}"))?;
        parts.push(format!("{exp} {:.2}x", t / base));
    }
    within(elapsed, 60)?;
    Ok(format!("reads over IOR.1: {}", parts.join(", ")))
}

fn criterion_7(entries: &[SweepEntry]) -> Check {
    let mut parts = Vec::new();
    for (dynamic, fixed) in [("IOR.4", "IOR.1"), ("IOR.5", "IOR.2"), ("IOR.6", "IOR.3")] {
        let d = throughput(entries, dynamic, "default", "write");
        let s = throughput(entries, fixed, "default", "write");
        ensure(d >= s * 0.99, || format!("{dynamic} write {d:.4e} below {fixed} {s:.4e}"))?;
        parts.push(format!("{dynamic}/{fixed} {:.3}", d / s));
    }
    Ok(format!("write ratios {}", parts.join(", ")))
}

fn criterion_8(entries: &[SweepEntry]) -> Check {
    let mut parts = Vec::new();
    for variant in ["sync", "async"] {
        let t: Vec<f64> =
            (1..=6).map(|i| throughput(entries, &format!("netflow.{i}"), variant, "phase2")).collect();
        let med = bench::median(&t).unwrap();
        let worst = t.iter().map(|x| (x / med - 1.0).abs()).fold(0.0, f64::max);
        ensure(worst <= 0.25, || format!("{variant}: phase 2 spread {:.1}% around median", worst * 100.0))?;
        parts.push(format!("{variant} max {:.2}%", worst * 100.0));
    }
    Ok(format!("netflow phase 2 deviation from median: {}", parts.join(", ")))
}

fn run_to_files(dir: &Path, tag: &str) -> Result<(Vec<u8>, Vec<u8>), String> {
    let config = ExperimentConfig {
        experiments: experiment_presets().iter().map(|p| Experiment::Preset(p.name.to_string())).collect(),
        mode: Mode::Sim,
        repetitions: 2,
        seed: SEED,
        scale: Scale::Desk,
        ..ExperimentConfig::default()
    };
    let out = bench::run(&config).map_err(|e| e.to_string())?;
    let csv = dir.join(format!("{tag}.csv"));
    let summary = dir.join(format!("{tag}.summary.toml"));
    bench::write_rows_csv(&out.rows, fs::File::create(&csv).unwrap()).map_err(|e| e.to_string())?;
    fs::write(&summary, out.summary_toml()).unwrap();
    Ok((fs::read(csv).unwrap(), fs::read(summary).unwrap()))
}

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (csv_a, sum_a) = run_to_files(dir.path(), "a")?;
    let (csv_b, sum_b) = run_to_files(dir.path(), "b")?;
    ensure(csv_a == csv_b, || "detail CSV differs between runs".into())?;
    ensure(sum_a == sum_b, || "summary differs between runs".into())?;
    Ok(format!("all 30 presets: {} CSV bytes and {} summary bytes identical", csv_a.len(), sum_a.len()))
}

// Transcribed from the experiment tables; sizes are decimal-prefixed in the
// source and read here as binary units.
const FIXTURE: &str = "\
IOR.1 | Entire file in A
IOR.2 | Entire file in B
IOR.3 | Entire file in C
IOR.4 | 0-1 TB in A, remainder in B
IOR.5 | 0-1 TB in A, remainder in C
IOR.6 | 0-1 TB in A, 1-2 TB in B, remainder in C
netflow.1 | Entire file in A
netflow.2 | Entire file in B
netflow.3 | Entire file in C
netflow.4 | 0-10 GB in A, remainder in B
netflow.5 | 0-10 GB in A, remainder in C
netflow.6 | 0-10 GB in A, 10-20 GB in B, remainder in C
blast.1 | Entire file in A
blast.2 | Entire file in C
blast.3 | Entire file in D
blast.4 | Entire file in E
blast.5 | Entire file in F
blast.6 | Entire file in G
blast.7 | Entire file in H
blast.8 | Entire file in I
blast.9 | Entire file in J
blast.10 | 0-26 GB in A, 26-52 GB in E, remainder in H
blast.11 | 0-26 GB in C, 26-52 GB in F, remainder in I
blast.12 | 0-26 GB in D, 26-52 GB in G, remainder in J
blast.13 | 0-26 GB in A, 26-52 GB in C, remainder in D
blast.14 | 0-26 GB in E, 26-52 GB in F, remainder in G
blast.15 | 0-26 GB in H, 26-52 GB in I, remainder in J
blast.16 | 0-26 GB in A, 26-52 GB in F, remainder in J
blast.17 | 0-20 GB in A, 20-40 GB in F, remainder in J
blast.18 | 0-8 GB in A, 8-28 GB in F, remainder in J
";

// Directory type letter, stripe count, stripe width in MiB.
const DIRECTORY_TYPES: [(char, u32, u64); 10] =
    [('A', 4, 1), ('B', 8, 1), ('C', 16, 1), ('D', 64, 1), ('E', 4, 2), ('F', 16, 2), ('G', 64, 2), ('H', 4, 4), ('I', 16, 4), ('J', 64, 4)];

fn parse_fixture_line(line: &str) -> (String, Vec<char>, Vec<u64>) {
    let (name, pattern) = line.split_once(" | ").unwrap();
    if let Some(l) = pattern.strip_prefix("Entire file in ") {
        return (name.into(), vec![l.chars().next().unwrap()], vec![]);
    }
    let mut letters = Vec::new();
    let mut marks = Vec::new();
    for part in pattern.split(", ") {
        let letter = part.chars().last().unwrap();
        letters.push(letter);
        if let Some(range) = part.strip_suffix(&format!(" in {letter}")).filter(|r| *r != "remainder") {
            let (range, unit) = range.split_once(' ').unwrap();
            let hi: u64 = range.split_once('-').unwrap().1.parse().unwrap();
            marks.push(hi * if unit == "TB" { TIB } else { GIB });
        }
    }
    (name.into(), letters, marks)
}

fn criterion_10() -> Check {
    for (letter, count, width) in DIRECTORY_TYPES {
        let d = DirectoryType::from_letter(letter).ok_or(format!("no directory type {letter}"))?;
        ensure(d.config() == StripingConfig::mib(count, width), || format!("type {letter} is {:?}", d.config()))?;
    }
    let presets = experiment_presets();
    let lines: Vec<&str> = FIXTURE.lines().collect();
    ensure(presets.len() == lines.len(), || format!("{} presets, fixture has {}", presets.len(), lines.len()))?;
    for (p, line) in presets.iter().zip(lines) {
        let (name, letters, marks) = parse_fixture_line(line);
        ensure(p.name == name, || format!("expected {name}, found {}", p.name))?;
        let got: Vec<char> = p.letters.iter().map(|d| d.letter()).collect();
        ensure(got == letters, || format!("{name}: letters {got:?} vs {letters:?}"))?;
        ensure(p.watermarks == marks.as_slice(), || format!("{name}: watermarks {:?} vs {marks:?}", p.watermarks))?;
        let desk: Vec<Watermark> = marks.iter().map(|m| Watermark(m / 1024)).collect();
        ensure(p.watermarks(Scale::Desk) == desk, || format!("{name}: desk watermarks"))?;
        let layout = p.layout(Scale::Paper);
        let want: Vec<StripingConfig> = letters.iter().map(|&l| DirectoryType::from_letter(l).unwrap().config()).collect();
        ensure(layout.configs() == want, || format!("{name}: layout configs"))?;
    }
    Ok("30 presets and 10 directory types match the reference fixture".into())
}

fn main() -> ExitCode {
    let cluster = ClusterModel::default();
    let pool = cluster.pool().unwrap();
    let names: Vec<&str> = experiment_presets().iter().map(|p| p.name).collect();
    let t = Instant::now();
    let entries = sweep(&cluster, &pool, &names[..6], Scale::Desk, SEED).expect("IOR sweep");
    let ior_elapsed = t.elapsed();
    let mut all = entries.clone();
    all.extend(sweep(&cluster, &pool, &names[6..], Scale::Desk, SEED).expect("sweep"));

    let results: Vec<(u32, &str, Check)> = vec![
        (1, "mapping oracle", criterion_1()),
        (2, "composite split", criterion_2()),
        (3, "segment store round-trip", criterion_3()),
        (4, "simulator closed forms", criterion_4()),
        (5, "conservation and bounds", criterion_5(&cluster, &all)),
        (6, "sequential read trend", criterion_6(&entries, ior_elapsed)),
        (7, "write trend", criterion_7(&entries)),
        (8, "random read trend", criterion_8(&all)),
        (9, "determinism", criterion_9()),
        (10, "preset fidelity", criterion_10()),
    ];
    let mut failed = 0;
    for (n, label, r) in &results {
        match r {
            Ok(detail) => println!("PASS {n:>2} {label}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {label}: {why}");
            }
        }
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
