//! `hedseg`: segment images by hedonic coalition formation on pixel graphs,
//! score segmentations against masks, and run resolution sweeps over a dataset.

mod config;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hedseg::harness::{
    evaluate_prepared, load_dataset, partition_outcomes, per_gt_csv, records_to_csv, run_protocol,
    score_partition, write_run_artifacts, PreparedImage, ResolutionSpec, Scored, DEFAULT_C_GRID,
};
use hedseg::hedonic::{run_to_equilibrium, Partition};
use hedseg::pixelgraph::{graph_density, image_to_graph, load_image};
use hedseg::projection::{f1_union_threshold_tallies, join_labels, BinaryMask, Tallies};
use hedseg::selftest::{run_selftest, Subject};

use config::{Common, Settings};

#[derive(Parser)]
#[command(name = "hedseg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one image; writes labels.png, preview.png, partition.txt, meta.txt.
    Segment(SegmentArgs),
    /// Segment (or take injected labels) and score against masks.
    Evaluate(EvaluateArgs),
    /// Sweep the resolution over a dataset.
    Sweep(SweepArgs),
    /// Evaluate a dataset at one resolution.
    Dataset(DatasetArgs),
    /// Run the built-in verification suite.
    Selftest,
}

#[derive(Args)]
struct SegmentArgs {
    image: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EvaluateArgs {
    image: PathBuf,
    /// Ground-truth mask; repeat for several annotators.
    #[arg(long = "gt", required = true)]
    gts: Vec<PathBuf>,
    /// Score this labeling instead of running the dynamics: a single-channel
    /// label PNG or a `node community` dump.
    #[arg(long)]
    inject_labels: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    /// Dataset root; may also come from the config key `dataset`.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Comma-separated c values; defaults to the standard grid.
    #[arg(long, conflicts_with = "gamma_grid")]
    grid: Option<String>,
    /// Comma-separated gamma values.
    #[arg(long)]
    gamma_grid: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

/// Process outcome beyond plain success; input errors exit with 1.
enum Status {
    Ok,
    NotConverged,
    SelftestFailed,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        match s {
            Status::Ok => ExitCode::SUCCESS,
            Status::NotConverged => ExitCode::from(2),
            Status::SelftestFailed => ExitCode::from(3),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(a) => segment(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Dataset(a) => dataset(a),
        Command::Selftest => selftest(),
    };
    match result {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write_file(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn segment(args: SegmentArgs) -> Result<Status> {
    let s = Settings::resolve(&args.common)?;
    let init = s.single_init()?;
    let img = load_image(&args.image)?;
    let g = image_to_graph(&img, &s.eval.params)?;
    let res = s.resolution.resolve(&g)?;
    let run = run_to_equilibrium(&g, res, init, s.eval.max_sweeps)?;
    let part = run.partition.compacted();
    let (w, h) = (img.width(), img.height());
    let k = part.community_count();

    create_out(&s.out)?;
    let labels = part.assignment();
    let png_ok = k <= output::MAX_PNG_LABELS;
    if png_ok {
        output::write_label_png(&s.out.join("labels.png"), w, h, labels)?;
    } else {
        eprintln!("warning: K = {k} exceeds the 16-bit label image; only partition.txt is written");
    }
    output::write_preview_png(&s.out.join("preview.png"), w, h, labels)?;
    write_file(&s.out.join("partition.txt"), part.to_dump())?;

    let mut meta = String::new();
    writeln!(meta, "image={}", args.image.display())?;
    writeln!(meta, "width={w}\nheight={h}")?;
    writeln!(meta, "nodes={}\nedges={}", g.node_count(), g.edge_count())?;
    writeln!(meta, "density={:.6e}", graph_density(&g)?)?;
    writeln!(meta, "gamma={:.6e}", res.gamma())?;
    writeln!(meta, "c={}", s.resolution.c().map(|c| format!("{c:.6e}")).unwrap_or_default())?;
    writeln!(meta, "init={init}")?;
    writeln!(meta, "K={k}")?;
    writeln!(meta, "sweeps={}\nmoves={}", run.sweeps, run.moves)?;
    writeln!(meta, "converged={}", run.converged)?;
    writeln!(meta, "label_png={png_ok}")?;
    write_file(&s.out.join("meta.txt"), meta)?;

    println!("K={k} sweeps={} converged={}", run.sweeps, run.converged);
    Ok(if run.converged {
        Status::Ok
    } else {
        eprintln!("warning: no equilibrium after {} sweeps; outputs are partial", run.sweeps);
        Status::NotConverged
    })
}

fn read_injected(path: &Path, w: usize, h: usize) -> Result<Partition> {
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let labels = if is_png {
        let (lw, lh, labels) = output::read_label_png(path)?;
        if (lw, lh) != (w, h) {
            bail!("label image is {lw}x{lh}, image is {w}x{h}");
        }
        labels
    } else {
        let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let p = Partition::read_dump(std::io::BufReader::new(file))
            .with_context(|| format!("reading {}", path.display()))?;
        if p.node_count() != w * h {
            bail!("dump has {} nodes, image has {}", p.node_count(), w * h);
        }
        return Ok(p);
    };
    Ok(Partition::from_labels(&labels)?)
}

fn evaluate(args: EvaluateArgs) -> Result<Status> {
    let s = Settings::resolve(&args.common)?;
    let img = load_image(&args.image)?;
    let (w, h) = (img.width(), img.height());
    let gts = args
        .gts
        .iter()
        .map(|p| BinaryMask::load(p).with_context(|| format!("mask {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    for (p, gt) in args.gts.iter().zip(&gts) {
        if gt.dims() != (w, h) {
            bail!("mask {} is {:?}, image is {w}x{h}", p.display(), gt.dims());
        }
    }
    let id = args
        .image
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    let scored: Scored = match &args.inject_labels {
        Some(path) => {
            let part = read_injected(path, w, h)?;
            score_partition(&id, &part, &gts, s.eval.l_max)?
        }
        None => {
            let init = s.single_init()?;
            let prepared = PreparedImage::new(&id, &img, gts.clone(), &s.eval.params)?;
            evaluate_prepared(&prepared, s.resolution, init, &s.eval)?
        }
    };
    let r = &scored.record;
    let gt = &gts[r.gt_id];
    let part = &scored.partition;
    let tallies = Tallies::from_partition(part, gt)?;
    let threshold = f1_union_threshold_tallies(&tallies, s.tau);

    create_out(&s.out)?;
    write_file(&s.out.join("record.csv"), records_to_csv(std::slice::from_ref(r)))?;
    write_file(&s.out.join("per_gt.csv"), per_gt_csv(std::slice::from_ref(r)))?;
    BinaryMask::from_labels(w, h, part.assignment(), &[scored.single_label])
        .save_png(&s.out.join("single_mask.png"))?;
    BinaryMask::from_labels(w, h, part.assignment(), &scored.union.labels)
        .save_png(&s.out.join("union_mask.png"))?;

    println!(
        "gt={} K={} f1_single={:.6} f1_union={:.6} gap={:.6} labels={} threshold_union={:.6}",
        r.gt_id,
        r.k,
        r.f1_single,
        r.f1_union,
        r.gap,
        join_labels(&r.labels),
        threshold.score
    );
    Ok(if r.converged { Status::Ok } else { Status::NotConverged })
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad grid value `{v}`")))
        .collect()
}

fn run_dataset(
    s: &Settings,
    root: Option<PathBuf>,
    specs: &[ResolutionSpec],
) -> Result<Status> {
    let Some(root) = root.or_else(|| s.dataset.clone()) else {
        bail!("no dataset root; pass --dataset or set `dataset` in the config");
    };
    let index = load_dataset(&root, &s.layout)?;
    for w in &index.warnings {
        eprintln!("warning: {w}");
    }
    let outcomes = run_protocol(&index, specs, &s.init.modes(), &s.eval, s.jobs)?;
    let (records, errors) = partition_outcomes(outcomes);
    for e in &errors {
        eprintln!("warning: {}: {}", e.image_id, e.message);
    }
    if records.is_empty() {
        bail!("every image failed; see the warnings above");
    }
    let summary = write_run_artifacts(&s.out, &records, &errors, &s.thresholds)?;
    println!(
        "{} records over {} images, {} errors; mean f1_single {:.4}, mean f1_union {:.4}, mean gap {:.4}",
        summary.count,
        index.entries.len(),
        errors.len(),
        summary.mean_single,
        summary.mean_union,
        summary.mean_gap
    );
    println!("wrote {}", s.out.display());
    Ok(if summary.non_converged > 0 {
        eprintln!("warning: {} runs did not converge", summary.non_converged);
        Status::NotConverged
    } else {
        Status::Ok
    })
}

fn sweep(args: SweepArgs) -> Result<Status> {
    let s = Settings::resolve(&args.common)?;
    let specs: Vec<ResolutionSpec> = match (&args.gamma_grid, args.grid.as_ref().or(s.grid.as_ref())) {
        (Some(g), _) => parse_list(g)?.into_iter().map(ResolutionSpec::Gamma).collect(),
        (None, Some(c)) => parse_list(c)?.into_iter().map(ResolutionSpec::C).collect(),
        (None, None) => DEFAULT_C_GRID.iter().map(|&c| ResolutionSpec::C(c)).collect(),
    };
    if specs.is_empty() {
        bail!("empty grid");
    }
    run_dataset(&s, args.dataset, &specs)
}

fn dataset(args: DatasetArgs) -> Result<Status> {
    let s = Settings::resolve(&args.common)?;
    run_dataset(&s, args.dataset, &[s.resolution])
}

fn selftest() -> Result<Status> {
    let report = run_selftest(&Subject::default());
    println!("{report}");
    Ok(if report.passed() {
        Status::Ok
    } else {
        Status::SelftestFailed
    })
}
