use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use super::dataset::{DatasetEntry, DatasetIndex};
use crate::error::{Error, Result};
use crate::hedonic::{
    resolution_from_density, run_to_equilibrium, InitMode, Partition, Resolution,
    DEFAULT_MAX_SWEEPS,
};
use crate::pixelgraph::{image_to_graph, load_image, GraphParams, RgbImage, WeightedGraph};
use crate::projection::{f1_single_tallies, f1_union_greedy_tallies, BinaryMask, Tallies, UnionSelection};

/// How the resolution of one run is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResolutionSpec {
    /// `gamma = density / c`.
    C(f64),
    Gamma(f64),
}

impl ResolutionSpec {
    pub fn c(&self) -> Option<f64> {
        match *self {
            ResolutionSpec::C(c) => Some(c),
            ResolutionSpec::Gamma(_) => None,
        }
    }

    pub fn resolve(&self, g: &WeightedGraph) -> Result<Resolution> {
        match *self {
            ResolutionSpec::C(c) => resolution_from_density(g, c),
            ResolutionSpec::Gamma(gamma) => Resolution::new(gamma),
        }
    }
}

impl fmt::Display for ResolutionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolutionSpec::C(c) => write!(f, "c={c}"),
            ResolutionSpec::Gamma(g) => write!(f, "gamma={g}"),
        }
    }
}

/// The default sweep grid over `c`, from the smallest to the largest `gamma`.
pub const DEFAULT_C_GRID: [f64; 9] = [9e4, 3e4, 9e3, 3e3, 900.0, 300.0, 90.0, 30.0, 9.0];

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub params: GraphParams,
    pub max_sweeps: usize,
    /// Cap on the number of labels in the greedy union.
    pub l_max: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            params: GraphParams::default(),
            max_sweeps: DEFAULT_MAX_SWEEPS,
            l_max: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GtScore {
    pub gt_id: usize,
    pub f1_single: f64,
    pub f1_union: f64,
}

/// One (image, resolution, init) evaluation scored against its best mask.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub image_id: String,
    pub gt_id: usize,
    /// `None` when labels were injected rather than optimized.
    pub gamma: Option<f64>,
    pub c: Option<f64>,
    pub init: Option<InitMode>,
    pub k: usize,
    pub f1_single: f64,
    pub f1_union: f64,
    pub gap: f64,
    /// Union labels, in compacted ids, in selection order.
    pub labels: Vec<usize>,
    pub sweeps: usize,
    pub converged: bool,
    pub ms: u64,
    /// Scores against every mask, for auditing the mask choice.
    pub per_gt: Vec<GtScore>,
}

/// A run that could not produce a record.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRecord {
    pub image_id: String,
    pub resolution: Option<ResolutionSpec>,
    pub init: Option<InitMode>,
    pub message: String,
}

pub type Outcome = std::result::Result<EvalRecord, ErrorRecord>;

/// A record plus the artifacts needed to render projections.
#[derive(Clone, Debug)]
pub struct Scored {
    pub record: EvalRecord,
    /// Compacted partition the record refers to.
    pub partition: Partition,
    pub single_label: usize,
    pub union: UnionSelection,
}

/// An image with its graph built once, shared across resolutions and inits.
#[derive(Clone, Debug)]
pub struct PreparedImage {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub graph: WeightedGraph,
    pub gts: Vec<BinaryMask>,
}

impl PreparedImage {
    pub fn new(id: &str, image: &RgbImage, gts: Vec<BinaryMask>, params: &GraphParams) -> Result<Self> {
        if gts.is_empty() {
            return Err(Error::InvalidParameter(format!("{id}: no ground-truth masks")));
        }
        for gt in &gts {
            let dims = (image.width(), image.height());
            if gt.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: gt.dims(),
                });
            }
        }
        Ok(Self {
            id: id.to_string(),
            width: image.width(),
            height: image.height(),
            graph: image_to_graph(image, params)?,
            gts,
        })
    }

    pub fn load(entry: &DatasetEntry, params: &GraphParams) -> Result<Self> {
        let image = load_image(&entry.image)?;
        let gts = entry
            .gts
            .iter()
            .map(|p| BinaryMask::load(p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&entry.id, &image, gts, params)
    }
}

/// Scores `part` against every mask and keeps the mask with the highest
/// union F1 (smallest index on ties).
pub fn score_partition(
    image_id: &str,
    part: &Partition,
    gts: &[BinaryMask],
    l_max: Option<usize>,
) -> Result<Scored> {
    let part = part.compacted();
    let mut best: Option<(usize, usize, crate::projection::F1Report, UnionSelection)> = None;
    let mut per_gt = Vec::with_capacity(gts.len());
    for (gt_id, gt) in gts.iter().enumerate() {
        let tallies = Tallies::from_partition(&part, gt)?;
        let (label, single) = f1_single_tallies(&tallies)?;
        let union = f1_union_greedy_tallies(&tallies, l_max)?;
        per_gt.push(GtScore {
            gt_id,
            f1_single: single.f1,
            f1_union: union.score,
        });
        if best.as_ref().is_none_or(|b| union.score > b.3.score) {
            best = Some((gt_id, label, single, union));
        }
    }
    let (gt_id, single_label, single, union) =
        best.ok_or_else(|| Error::InvalidParameter(format!("{image_id}: no ground-truth masks")))?;
    let record = EvalRecord {
        image_id: image_id.to_string(),
        gt_id,
        gamma: None,
        c: None,
        init: None,
        k: part.community_count(),
        f1_single: single.f1,
        f1_union: union.score,
        gap: union.score - single.f1,
        labels: union.labels.clone(),
        sweeps: 0,
        converged: true,
        ms: 0,
        per_gt,
    };
    Ok(Scored {
        record,
        partition: part,
        single_label,
        union,
    })
}

/// Runs the dynamics on a prepared image and scores the result.
pub fn evaluate_prepared(
    img: &PreparedImage,
    spec: ResolutionSpec,
    init: InitMode,
    opts: &EvalOptions,
) -> Result<Scored> {
    let start = Instant::now();
    let res = spec.resolve(&img.graph)?;
    let run = run_to_equilibrium(&img.graph, res, init, opts.max_sweeps)?;
    let mut scored = score_partition(&img.id, &run.partition, &img.gts, opts.l_max)?;
    let r = &mut scored.record;
    r.gamma = Some(res.gamma());
    r.c = spec.c();
    r.init = Some(init);
    r.sweeps = run.sweeps;
    r.converged = run.converged;
    r.ms = start.elapsed().as_millis() as u64;
    Ok(scored)
}

fn failure(id: &str, spec: Option<ResolutionSpec>, init: Option<InitMode>, e: &Error) -> ErrorRecord {
    let mut message = e.to_string();
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        message.push_str(": ");
        message.push_str(&s.to_string());
        source = s.source();
    }
    ErrorRecord {
        image_id: id.to_string(),
        resolution: spec,
        init,
        message,
    }
}

/// One record, or an error record if anything along the way failed.
pub fn evaluate_image(
    entry: &DatasetEntry,
    spec: ResolutionSpec,
    init: InitMode,
    opts: &EvalOptions,
) -> Outcome {
    let img = PreparedImage::load(entry, &opts.params)
        .map_err(|e| failure(&entry.id, Some(spec), Some(init), &e))?;
    evaluate_prepared(&img, spec, init, opts)
        .map(|s| s.record)
        .map_err(|e| failure(&entry.id, Some(spec), Some(init), &e))
}

/// Every resolution on one prepared image, ordered by increasing `gamma`.
pub fn sweep_prepared(
    img: &PreparedImage,
    specs: &[ResolutionSpec],
    init: InitMode,
    opts: &EvalOptions,
) -> Vec<Outcome> {
    let mut out: Vec<Outcome> = specs
        .iter()
        .map(|&spec| {
            evaluate_prepared(img, spec, init, opts)
                .map(|s| s.record)
                .map_err(|e| failure(&img.id, Some(spec), Some(init), &e))
        })
        .collect();
    out.sort_by(|a, b| outcome_key(a).total_cmp(&outcome_key(b)));
    out
}

fn outcome_key(o: &Outcome) -> f64 {
    match o {
        Ok(r) => r.gamma.unwrap_or(f64::NAN),
        Err(_) => f64::INFINITY,
    }
}

pub fn sweep_gamma(
    entry: &DatasetEntry,
    specs: &[ResolutionSpec],
    init: InitMode,
    opts: &EvalOptions,
) -> Vec<Outcome> {
    match PreparedImage::load(entry, &opts.params) {
        Ok(img) => sweep_prepared(&img, specs, init, opts),
        Err(e) => vec![Err(failure(&entry.id, None, Some(init), &e))],
    }
}

/// Source of prepared images for a protocol run.
pub trait ImageSource: Sync {
    fn ids(&self) -> Vec<String>;
    fn prepare(&self, index: usize, params: &GraphParams) -> Result<PreparedImage>;
}

impl ImageSource for DatasetIndex {
    fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.id.clone()).collect()
    }

    fn prepare(&self, index: usize, params: &GraphParams) -> Result<PreparedImage> {
        PreparedImage::load(&self.entries[index], params)
    }
}

impl ImageSource for [PreparedImage] {
    fn ids(&self) -> Vec<String> {
        self.iter().map(|p| p.id.clone()).collect()
    }

    fn prepare(&self, index: usize, _: &GraphParams) -> Result<PreparedImage> {
        Ok(self[index].clone())
    }
}

/// Sorting key for protocol output: image id, init, then `gamma`.
fn order(a: &Outcome, b: &Outcome) -> std::cmp::Ordering {
    let key = |o: &Outcome| match o {
        Ok(r) => (r.image_id.clone(), r.init, r.gamma.unwrap_or(f64::NAN)),
        Err(e) => (e.image_id.clone(), e.init, f64::INFINITY),
    };
    let (ia, na, ga) = key(a);
    let (ib, nb, gb) = key(b);
    ia.cmp(&ib).then(na.cmp(&nb)).then(ga.total_cmp(&gb))
}

/// Evaluates every image at every resolution and init, `jobs` images at a
/// time. Output order does not depend on scheduling.
pub fn run_protocol<S: ImageSource + ?Sized>(
    source: &S,
    specs: &[ResolutionSpec],
    inits: &[InitMode],
    opts: &EvalOptions,
    jobs: Option<usize>,
) -> Result<Vec<Outcome>> {
    let ids = source.ids();
    let work = || -> Vec<Outcome> {
        let mut out: Vec<Outcome> = (0..ids.len())
            .into_par_iter()
            .flat_map_iter(|i| match source.prepare(i, &opts.params) {
                Ok(img) => inits
                    .iter()
                    .flat_map(|&init| sweep_prepared(&img, specs, init, opts))
                    .collect::<Vec<_>>(),
                Err(e) => vec![Err(failure(&ids[i], None, None, &e))],
            })
            .collect();
        out.sort_by(order);
        out
    };
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}
