use std::fs::{self, File};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use dynstripe::bench::{self, Experiment, ExperimentConfig, Mode};
use dynstripe::config::{load_cluster, parse_layout};
use dynstripe::{LogicalFile, StripeHook};
use dynstripe_core::presets::{experiment_presets, lookup, Scale};
use dynstripe_core::{ClusterModel, CompositeLayout};

#[derive(Parser)]
#[command(name = "dynstripe", version, about = "Dynamic striping experiments: segment files, simulator and benchmark runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Paper,
    Desk,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Scale {
        match s {
            ScaleArg::Paper => Scale::Paper,
            ScaleArg::Desk => Scale::Desk,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sim,
    File,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the 30 named experiments and their layouts.
    ListPresets {
        #[arg(long, value_enum, default_value = "desk")]
        scale: ScaleArg,
    },
    /// Run presets and write per-repetition rows plus a median summary.
    Run(RunArgs),
    /// Summarize result CSVs, optionally with speedup over a baseline.
    Report {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        #[arg(long)]
        baseline: Option<String>,
        /// Also write the report as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split an ordinary file into segment files.
    ImportSplit {
        source: PathBuf,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        layout: LayoutArgs,
        /// Command run on each new segment directory; {dir}, {count} and
        /// {width} are substituted.
        #[arg(long)]
        hook: Option<String>,
    },
    /// Concatenate segment files back into one file.
    ExportMerge {
        #[command(flatten)]
        target: Target,
        dest: PathBuf,
    },
    /// Check a logical file and print its SHA-256; with a source file, fail
    /// unless both hash the same.
    Verify {
        #[command(flatten)]
        target: Target,
        source: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Target {
    /// Store directory.
    #[arg(long)]
    root: PathBuf,
    /// Logical file name.
    #[arg(long)]
    name: String,
}

#[derive(Args)]
struct LayoutArgs {
    /// Use this preset's layout.
    #[arg(long, conflicts_with = "layout", required_unless_present = "layout")]
    preset: Option<String>,
    /// Explicit layout, e.g. `4x1M,1G,8x2M,10G,16x4M` or `A,1T,B`.
    #[arg(long)]
    layout: Option<String>,
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleArg,
}

impl LayoutArgs {
    fn resolve(&self) -> anyhow::Result<CompositeLayout> {
        match (&self.preset, &self.layout) {
            (Some(p), _) => Ok(lookup(p)?.layout(self.scale.into())),
            (None, Some(l)) => parse_layout(l),
            (None, None) => bail!("give --preset or --layout"),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Preset name; repeat for several, or `all`.
    #[arg(long, required = true)]
    preset: Vec<String>,
    #[arg(long, value_enum, default_value = "sim")]
    mode: ModeArg,
    #[arg(long, default_value_t = 5)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "desk")]
    scale: ScaleArg,
    /// Cluster TOML for sim mode; built-in illustrative values otherwise.
    #[arg(long)]
    cluster: Option<PathBuf>,
    /// Store directory for file mode.
    #[arg(long)]
    root: Option<PathBuf>,
    /// File mode: command run before each repetition to drop caches.
    #[arg(long)]
    hook: Option<String>,
    /// File mode: worker threads per phase.
    #[arg(long, default_value_t = 8)]
    workers: usize,
    /// Detail CSV path; the summary goes next to it as `<out>.summary.toml`.
    /// Without it the CSV goes to stdout and the summary to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.cmd {
        Cmd::ListPresets { scale } => {
            let scale: Scale = scale.into();
            println!("{:<10} {:>5}  layout ({} scale)", "preset", "nodes", scale.name());
            for p in experiment_presets() {
                println!("{:<10} {:>5}  {}", p.name, p.nodes(), p.layout(scale));
            }
        }
        Cmd::Run(args) => run(args)?,
        Cmd::Report { results, baseline, out } => {
            let mut rows = Vec::new();
            for path in &results {
                let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
                rows.extend(bench::read_rows_csv(f).with_context(|| format!("reading {}", path.display()))?);
            }
            let report = bench::report(&rows, baseline.as_deref())?;
            print!("{}", bench::render_report(&report));
            if let Some(out) = out {
                bench::write_report_csv(&report, create(&out)?)?;
            }
        }
        Cmd::ImportSplit { source, target, layout, hook } => {
            let layout = layout.resolve()?;
            let hook = hook.map(StripeHook);
            let f = LogicalFile::import_split_with_hook(&source, &target.root, &target.name, &layout, hook.as_ref())?;
            println!("{} bytes into {} segments", f.logical_size(), layout.len());
            for (seg, path) in layout.segments().iter().zip(f.segment_paths()) {
                if path.exists() {
                    println!("  {} [{}]", path.display(), seg.config.dir_label());
                }
            }
        }
        Cmd::ExportMerge { target, dest } => {
            let f = LogicalFile::open(&target.root, &target.name)?;
            f.export_merge(&dest)?;
            println!("{} bytes to {}", f.logical_size(), dest.display());
        }
        Cmd::Verify { target, source } => return verify(&target, source.as_deref()),
    }
    Ok(ExitCode::SUCCESS)
}

fn create(path: &Path) -> anyhow::Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let experiments = if args.preset.iter().any(|p| p.eq_ignore_ascii_case("all")) {
        experiment_presets().iter().map(|p| Experiment::Preset(p.name.to_string())).collect()
    } else {
        args.preset.into_iter().map(Experiment::Preset).collect()
    };
    let cluster = match &args.cluster {
        Some(path) => load_cluster(path)?,
        None => ClusterModel::default(),
    };
    let config = ExperimentConfig {
        experiments,
        mode: match args.mode {
            ModeArg::Sim => Mode::Sim,
            ModeArg::File => Mode::File,
        },
        repetitions: args.reps,
        seed: args.seed,
        scale: args.scale.into(),
        cluster,
        root: args.root,
        cache_drop_hook: args.hook,
        workers: args.workers,
    };
    if let Some(root) = &config.root {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    }
    let output = bench::run(&config)?;
    if config.mode == Mode::File {
        eprintln!("note: file-mode throughput reflects the local filesystem and is indicative only");
    }
    match &args.out {
        Some(out) => {
            bench::write_rows_csv(&output.rows, create(out)?)?;
            let mut summary_path = out.clone().into_os_string();
            summary_path.push(".summary.toml");
            fs::write(&summary_path, output.summary_toml())
                .with_context(|| format!("writing {}", Path::new(&summary_path).display()))?;
        }
        None => {
            bench::write_rows_csv(&output.rows, io::stdout().lock())?;
            eprint!("{}", output.summary_toml());
        }
    }
    Ok(())
}

fn sha256_of(mut r: impl Read) -> io::Result<String> {
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = r.read(&mut buf)?;
        if n == 0 {
            return Ok(hex::encode(h.finalize()));
        }
        h.update(&buf[..n]);
    }
}

/// Streams the logical file through `sink` in 1 MiB reads.
fn stream_logical(f: &LogicalFile, mut sink: impl Write) -> anyhow::Result<()> {
    let mut off = 0;
    while let Some(chunk) = f.read_at(off, 1 << 20)? {
        sink.write_all(&chunk)?;
        off += chunk.len() as u64;
    }
    Ok(())
}

struct HashWriter(Sha256);

impl Write for HashWriter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.update(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

fn verify(target: &Target, source: Option<&Path>) -> anyhow::Result<ExitCode> {
    let f = LogicalFile::open(&target.root, &target.name)?;
    let size = f.logical_size();
    for (seg, path) in f.layout().segments().iter().zip(f.segment_paths()) {
        if seg.start < size && !path.exists() {
            bail!("segment {} is missing", path.display());
        }
        if let (Some(end), Ok(meta)) = (seg.end, fs::metadata(path)) {
            if meta.len() > end - seg.start {
                bail!("segment {} is longer than its range", path.display());
            }
        }
    }
    let mut h = HashWriter(Sha256::new());
    stream_logical(&f, &mut h)?;
    let logical = hex::encode(h.0.finalize());
    println!("{logical}  {} ({} bytes)", target.name, size);
    let Some(source) = source else { return Ok(ExitCode::SUCCESS) };
    let expected = sha256_of(File::open(source).with_context(|| format!("opening {}", source.display()))?)?;
    println!("{expected}  {}", source.display());
    if expected == logical {
        println!("OK");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("MISMATCH");
        Ok(ExitCode::FAILURE)
    }
}
