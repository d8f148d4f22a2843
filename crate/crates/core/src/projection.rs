//! Binary projections of a multi-community partition scored against a
//! foreground mask: the best single community, a greedy forward union of
//! communities, a threshold union, and an exhaustive union search for tests.
//!
//! All scores reduce to per-community tallies `(|C_k|, |C_k ∩ Y|)` and `|Y|`,
//! so `F1 = 2 tp / (2 tp + fp + fn) = 2 |C ∩ Y| / (|C| + |Y|)` is computed from
//! integer counts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hedonic::Partition;
use crate::pixelgraph::decode;

/// Row-major foreground mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "mask has {} bits, expected {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    /// Mask of pixels whose label is in `selected`.
    pub fn from_labels(width: usize, height: usize, labels: &[usize], selected: &[usize]) -> Self {
        assert_eq!(labels.len(), width * height);
        let max = selected.iter().copied().max().map_or(0, |m| m + 1);
        let mut pick = vec![false; max];
        for &s in selected {
            pick[s] = true;
        }
        let bits = labels
            .iter()
            .map(|&l| l < max && pick[l])
            .collect();
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Reads a mask image; any nonzero channel marks foreground.
    pub fn load(path: &Path) -> Result<Self> {
        let img = decode(path)?.to_rgba8();
        let (w, h) = img.dimensions();
        let bits = img
            .pixels()
            .map(|p| p.0[..3].iter().any(|&c| c != 0))
            .collect();
        Self::new(w as usize, h as usize, bits)
    }

    /// 8-bit grayscale PNG, foreground 255.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let buf = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        image::GrayImage::from_raw(self.width as u32, self.height as u32, buf)
            .expect("buffer length matches dimensions")
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Encode {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F1Report {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl F1Report {
    /// From `|B ∩ Y|`, `|B|` and `|Y|`. Empty denominators give 0.
    pub fn from_counts(overlap: usize, predicted: usize, truth: usize) -> Self {
        debug_assert!(overlap <= predicted && overlap <= truth);
        let tp = overlap;
        let fp = predicted - overlap;
        let fn_ = truth - overlap;
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Self {
            tp,
            fp,
            fn_,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
        }
    }
}

pub fn f1(pred: &BinaryMask, gt: &BinaryMask) -> Result<F1Report> {
    if pred.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            actual: pred.dims(),
        });
    }
    let mut tp = 0;
    let mut predicted = 0;
    let mut truth = 0;
    for (&p, &t) in pred.bits.iter().zip(&gt.bits) {
        predicted += p as usize;
        truth += t as usize;
        tp += (p && t) as usize;
    }
    Ok(F1Report::from_counts(tp, predicted, truth))
}

/// Size and foreground overlap of one community.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tally {
    pub label: usize,
    pub size: usize,
    pub overlap: usize,
}

/// Per-community tallies against one ground truth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tallies {
    /// Sorted by label.
    pub communities: Vec<Tally>,
    pub truth: usize,
}

impl Tallies {
    pub fn new(mut communities: Vec<Tally>, truth: usize) -> Self {
        communities.sort_by_key(|t| t.label);
        Self { communities, truth }
    }

    /// One pass over the label image.
    pub fn from_labels(labels: &[usize], gt: &BinaryMask) -> Result<Self> {
        if labels.len() != gt.bits.len() {
            return Err(Error::InvalidParameter(format!(
                "label image has {} pixels, mask has {}",
                labels.len(),
                gt.bits.len()
            )));
        }
        let cap = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut size = vec![0usize; cap];
        let mut overlap = vec![0usize; cap];
        for (&l, &t) in labels.iter().zip(&gt.bits) {
            size[l] += 1;
            overlap[l] += t as usize;
        }
        let communities = (0..cap)
            .filter(|&l| size[l] > 0)
            .map(|l| Tally {
                label: l,
                size: size[l],
                overlap: overlap[l],
            })
            .collect();
        Ok(Self {
            communities,
            truth: gt.count(),
        })
    }

    pub fn from_partition(part: &Partition, gt: &BinaryMask) -> Result<Self> {
        Self::from_labels(part.assignment(), gt)
    }

    pub fn report(&self, t: &Tally) -> F1Report {
        F1Report::from_counts(t.overlap, t.size, self.truth)
    }

    /// Report for the union of `labels`, recomputed from the tallies.
    pub fn union_report(&self, labels: &[usize]) -> F1Report {
        let (mut size, mut overlap) = (0, 0);
        for t in &self.communities {
            if labels.contains(&t.label) {
                size += t.size;
                overlap += t.overlap;
            }
        }
        F1Report::from_counts(overlap, size, self.truth)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnionSelection {
    /// Labels in the order they were selected.
    pub labels: Vec<usize>,
    pub score: f64,
    /// Set when a label cap stopped the scan early.
    pub capped: bool,
}

impl UnionSelection {
    /// `labels;joined,score,capped`.
    pub fn to_csv_row(&self) -> String {
        let mut row = join_labels(&self.labels);
        write!(row, ",{:.6},{}", self.score, self.capped).unwrap();
        row
    }
}

pub fn join_labels(labels: &[usize]) -> String {
    labels
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Best single community; smallest label on ties.
pub fn f1_single_tallies(t: &Tallies) -> Result<(usize, F1Report)> {
    let mut best: Option<(usize, F1Report)> = None;
    for c in &t.communities {
        let r = t.report(c);
        if best.as_ref().is_none_or(|(_, b)| r.f1 > b.f1) {
            best = Some((c.label, r));
        }
    }
    best.ok_or(Error::EmptyPartition)
}

pub fn f1_single(part: &Partition, gt: &BinaryMask) -> Result<(usize, F1Report)> {
    f1_single_tallies(&Tallies::from_partition(part, gt)?)
}

/// Greedy forward union: start from the best single community, scan the rest
/// once in decreasing individual F1 (smallest label on ties) and keep each
/// label whose addition strictly raises the union F1. With a cap, the scan
/// stops as soon as `|S| = l_max`.
pub fn f1_union_greedy_tallies(t: &Tallies, l_max: Option<usize>) -> Result<UnionSelection> {
    if l_max == Some(0) {
        return Err(Error::InvalidParameter("l_max must be positive".into()));
    }
    let (seed, seed_report) = f1_single_tallies(t)?;
    let mut order: Vec<(f64, &Tally)> = t
        .communities
        .iter()
        .filter(|c| c.label != seed)
        .map(|c| (t.report(c).f1, c))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.label.cmp(&b.1.label)));

    let seed_tally = t
        .communities
        .iter()
        .find(|c| c.label == seed)
        .expect("seed is a community");
    let mut labels = vec![seed];
    let (mut size, mut overlap) = (seed_tally.size, seed_tally.overlap);
    let mut score = seed_report.f1;
    let mut capped = false;
    for (_, c) in order {
        if l_max.is_some_and(|cap| labels.len() >= cap) {
            capped = true;
            break;
        }
        let candidate = F1Report::from_counts(overlap + c.overlap, size + c.size, t.truth).f1;
        if candidate > score {
            labels.push(c.label);
            size += c.size;
            overlap += c.overlap;
            score = candidate;
        }
    }
    Ok(UnionSelection {
        labels,
        score,
        capped,
    })
}

pub fn f1_union_greedy(
    part: &Partition,
    gt: &BinaryMask,
    l_max: Option<usize>,
) -> Result<UnionSelection> {
    let sel = f1_union_greedy_tallies(&Tallies::from_partition(part, gt)?, l_max)?;
    debug_assert_eq!(
        sel.score,
        f1(&union_mask(part, gt.dims(), &sel.labels), gt)?.f1
    );
    Ok(sel)
}

/// Every label whose individual F1 strictly exceeds `tau`. May select nothing,
/// in which case the score is 0.
pub fn f1_union_threshold_tallies(t: &Tallies, tau: f64) -> UnionSelection {
    let labels: Vec<usize> = t
        .communities
        .iter()
        .filter(|c| t.report(c).f1 > tau)
        .map(|c| c.label)
        .collect();
    let score = t.union_report(&labels).f1;
    UnionSelection {
        labels,
        score,
        capped: false,
    }
}

pub fn f1_union_threshold(part: &Partition, gt: &BinaryMask, tau: f64) -> Result<UnionSelection> {
    Ok(f1_union_threshold_tallies(
        &Tallies::from_partition(part, gt)?,
        tau,
    ))
}

pub const ORACLE_MAX_COMMUNITIES: usize = 20;

/// Exact maximizer over all non-empty label subsets. Ties go to the subset
/// enumerated first (lowest bitmask over labels in ascending order).
pub fn union_oracle_tallies(t: &Tallies) -> Result<UnionSelection> {
    let k = t.communities.len();
    if k == 0 {
        return Err(Error::EmptyPartition);
    }
    if k > ORACLE_MAX_COMMUNITIES {
        return Err(Error::TooManyCommunities {
            got: k,
            max: ORACLE_MAX_COMMUNITIES,
        });
    }
    let mut best = (f64::NEG_INFINITY, 0u32);
    for mask in 1u32..(1 << k) {
        let (mut size, mut overlap) = (0, 0);
        for (i, c) in t.communities.iter().enumerate() {
            if mask & (1 << i) != 0 {
                size += c.size;
                overlap += c.overlap;
            }
        }
        let s = F1Report::from_counts(overlap, size, t.truth).f1;
        if s > best.0 {
            best = (s, mask);
        }
    }
    let labels = t
        .communities
        .iter()
        .enumerate()
        .filter(|(i, _)| best.1 & (1 << i) != 0)
        .map(|(_, c)| c.label)
        .collect();
    Ok(UnionSelection {
        labels,
        score: best.0,
        capped: false,
    })
}

pub fn union_oracle(part: &Partition, gt: &BinaryMask) -> Result<UnionSelection> {
    union_oracle_tallies(&Tallies::from_partition(part, gt)?)
}

pub fn union_mask(part: &Partition, dims: (usize, usize), labels: &[usize]) -> BinaryMask {
    BinaryMask::from_labels(dims.0, dims.1, part.assignment(), labels)
}

/// A foreground split evenly over `m` pure communities plus one background
/// community of equal size. Laid out on a `foreground x 2` grid: the top row
/// is foreground cut into `m` runs, the bottom row is background (label `m`).
pub fn pathological_instance(m: usize, foreground: usize) -> Result<(Partition, BinaryMask)> {
    if m == 0 || foreground == 0 {
        return Err(Error::InvalidParameter(
            "m and foreground must be positive".into(),
        ));
    }
    if !foreground.is_multiple_of(m) {
        return Err(Error::InvalidParameter(format!(
            "foreground {foreground} is not divisible by m = {m}"
        )));
    }
    let run = foreground / m;
    let width = foreground;
    let mut labels = Vec::with_capacity(2 * width);
    labels.extend((0..width).map(|x| x / run));
    labels.extend(std::iter::repeat_n(m, width));
    let gt = BinaryMask::from_fn(width, 2, |_, y| y == 0);
    Ok((Partition::from_labels(&labels)?, gt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The three-community example: |Y| = 100, |C1| = 40 / 30, |C2| = 35 / 25,
    /// |C3| = 50 / 10.
    fn toy() -> Tallies {
        Tallies::new(
            vec![
                Tally { label: 1, size: 40, overlap: 30 },
                Tally { label: 2, size: 35, overlap: 25 },
                Tally { label: 3, size: 50, overlap: 10 },
            ],
            100,
        )
    }

    #[test]
    fn f1_identity_and_disjoint() {
        let a = BinaryMask::from_fn(4, 3, |x, y| x + y < 3);
        assert_eq!(f1(&a, &a).unwrap().f1, 1.0);
        let b = BinaryMask::from_fn(4, 3, |x, y| x + y >= 3);
        let r = f1(&b, &a).unwrap();
        assert_eq!((r.tp, r.f1), (0, 0.0));
        let empty = BinaryMask::empty(4, 3);
        assert_eq!(f1(&empty, &empty).unwrap().f1, 0.0);
        assert_eq!(f1(&empty, &a).unwrap().f1, 0.0);
        assert!(f1(&BinaryMask::empty(3, 4), &a).is_err());
    }

    #[test]
    fn toy_counts() {
        let r = F1Report::from_counts(30, 40, 100);
        assert_eq!(r.f1, 60.0 / 140.0);
        assert_eq!((r.tp, r.fp, r.fn_), (30, 10, 70));
        assert_eq!(r.precision, 0.75);
        assert_eq!(r.recall, 0.3);
        assert!((r.f1 - 0.43).abs() < 0.005);
    }

    #[test]
    fn toy_single_greedy_threshold_oracle() {
        let t = toy();
        let (label, r) = f1_single_tallies(&t).unwrap();
        assert_eq!(label, 1);
        assert_eq!(r.f1, 60.0 / 140.0);

        let g = f1_union_greedy_tallies(&t, None).unwrap();
        assert_eq!(g.labels, vec![1, 2]);
        assert_eq!(g.score, 110.0 / 175.0);
        assert!((g.score - 0.63).abs() < 0.005);
        assert!(!g.capped);

        let capped = f1_union_greedy_tallies(&t, Some(1)).unwrap();
        assert_eq!(capped.labels, vec![1]);
        assert!(capped.capped);

        let th = f1_union_threshold_tallies(&t, 0.4);
        assert_eq!(th.labels, vec![1]);
        assert_eq!(th.score, 60.0 / 140.0);
        let none = f1_union_threshold_tallies(&t, 1.0);
        assert!(none.labels.is_empty());
        assert_eq!(none.score, 0.0);

        let o = union_oracle_tallies(&t).unwrap();
        assert_eq!(o.labels, vec![1, 2]);
        assert_eq!(o.score, g.score);
    }

    #[test]
    fn perfect_community_is_selected_alone() {
        let gt = BinaryMask::from_fn(4, 4, |x, _| x < 2);
        let labels: Vec<usize> = (0..16).map(|i| if i % 4 < 2 { 5 } else { i % 4 }).collect();
        let p = Partition::from_labels(&labels).unwrap();
        let (l, r) = f1_single(&p, &gt).unwrap();
        assert_eq!((l, r.f1), (5, 1.0));
        let g = f1_union_greedy(&p, &gt, None).unwrap();
        assert_eq!((g.labels, g.score), (vec![5], 1.0));
    }

    #[test]
    fn threshold_zero_takes_all_overlapping() {
        let gt = BinaryMask::from_fn(4, 2, |x, _| x % 2 == 0);
        let p = Partition::from_labels(&[0, 0, 1, 1, 2, 2, 3, 3]).unwrap();
        let sel = f1_union_threshold(&p, &gt, 0.0).unwrap();
        assert_eq!(sel.labels, vec![0, 1, 2, 3]);
        let union = union_mask(&p, gt.dims(), &sel.labels);
        assert!(gt.bits().iter().zip(union.bits()).all(|(&t, &u)| !t || u));
    }

    #[test]
    fn oracle_edge_cases() {
        let p = Partition::one_coalition(6);
        let gt = BinaryMask::from_fn(3, 2, |x, _| x == 0);
        let o = union_oracle(&p, &gt).unwrap();
        assert_eq!(o.labels, vec![0]);
        let many = Partition::singletons(21);
        let gt = BinaryMask::from_fn(21, 1, |x, _| x < 3);
        assert!(matches!(
            union_oracle(&many, &gt),
            Err(Error::TooManyCommunities { .. })
        ));
    }

    #[test]
    fn greedy_can_stop_short_of_the_oracle() {
        // A joins B's low-precision bulk first because B ranks higher on
        // individual F1; the best union is {A, C}.
        let t = Tallies::new(
            vec![
                Tally { label: 0, size: 12, overlap: 3 },
                Tally { label: 1, size: 2, overlap: 2 },
                Tally { label: 2, size: 6, overlap: 2 },
            ],
            7,
        );
        let g = f1_union_greedy_tallies(&t, None).unwrap();
        assert_eq!(g.labels, vec![1, 0, 2]);
        assert_eq!(g.score, 14.0 / 27.0);
        let o = union_oracle_tallies(&t).unwrap();
        assert_eq!(o.labels, vec![1, 2]);
        assert_eq!(o.score, 8.0 / 15.0);
        assert!(o.score > g.score);
    }

    #[test]
    fn jointly_useful_pair_is_never_individually_useless() {
        // Adding a set X to S raises the union F1 iff precision(X) > F1(S) / 2,
        // and the precision of a pair lies between the two individual
        // precisions, so two individually rejected labels are rejected jointly.
        let t = Tallies::new(
            vec![
                Tally { label: 0, size: 50, overlap: 50 },
                Tally { label: 1, size: 100, overlap: 25 },
                Tally { label: 2, size: 100, overlap: 25 },
            ],
            140,
        );
        let base = t.union_report(&[0]).f1;
        assert!(t.union_report(&[0, 1]).f1 <= base);
        assert!(t.union_report(&[0, 2]).f1 <= base);
        assert!(t.union_report(&[0, 1, 2]).f1 <= base);
    }

    #[test]
    fn pathological_instances() {
        let (p, gt) = pathological_instance(1, 4).unwrap();
        assert_eq!(f1_single(&p, &gt).unwrap().1.f1, 1.0);
        assert_eq!(f1_union_greedy(&p, &gt, None).unwrap().score, 1.0);

        let (p, gt) = pathological_instance(9, 90).unwrap();
        assert!((f1_single(&p, &gt).unwrap().1.f1 - 0.2).abs() < 1e-12);
        assert_eq!(p.community_count(), 10);

        let (p, gt) = pathological_instance(99, 99).unwrap();
        let single = f1_single(&p, &gt).unwrap().1.f1;
        let union = f1_union_greedy(&p, &gt, None).unwrap().score;
        assert!(((union - single) - 0.98).abs() < 1e-12);

        assert!(pathological_instance(3, 10).is_err());
        assert!(pathological_instance(0, 10).is_err());
    }

    #[test]
    fn csv_row_format() {
        let sel = UnionSelection {
            labels: vec![3, 0, 7],
            score: 2.0 / 3.0,
            capped: true,
        };
        assert_eq!(sel.to_csv_row(), "3;0;7,0.666667,true");
    }

    #[test]
    fn mask_png_round_trip_nonzero_is_foreground() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let m = BinaryMask::from_fn(5, 3, |x, y| (x + y) % 2 == 0);
        m.save_png(&path).unwrap();
        assert_eq!(BinaryMask::load(&path).unwrap(), m);

        let rgb = dir.path().join("rgb.png");
        image::RgbImage::from_raw(2, 1, vec![0, 0, 0, 200, 0, 0])
            .unwrap()
            .save(&rgb)
            .unwrap();
        assert_eq!(BinaryMask::load(&rgb).unwrap().bits(), &[false, true]);
    }

    fn arb_tallies() -> impl Strategy<Value = Tallies> {
        proptest::collection::vec((1usize..40, 0.0f64..=1.0), 1..9).prop_map(|cs| {
            let communities: Vec<Tally> = cs
                .into_iter()
                .enumerate()
                .map(|(i, (size, frac))| Tally {
                    label: i,
                    size,
                    overlap: (frac * size as f64).round() as usize,
                })
                .collect();
            let truth = communities.iter().map(|c| c.overlap).sum::<usize>();
            Tallies::new(communities, truth)
        })
    }

    proptest! {
        #[test]
        fn greedy_sits_between_single_and_oracle(t in arb_tallies()) {
            let single = f1_single_tallies(&t).unwrap().1.f1;
            let greedy = f1_union_greedy_tallies(&t, None).unwrap();
            let oracle = union_oracle_tallies(&t).unwrap();
            prop_assert!(greedy.score >= single);
            prop_assert!(greedy.score <= oracle.score);
            prop_assert_eq!(greedy.score, t.union_report(&greedy.labels).f1);
        }

        #[test]
        fn cap_is_monotone(t in arb_tallies()) {
            let mut prev = 0.0;
            for cap in 1..=t.communities.len() {
                let s = f1_union_greedy_tallies(&t, Some(cap)).unwrap().score;
                prop_assert!(s >= prev);
                prev = s;
            }
            prop_assert_eq!(prev, f1_union_greedy_tallies(&t, None).unwrap().score);
        }

        #[test]
        fn relabeling_preserves_scores(t in arb_tallies(), shift in 1usize..50) {
            let k = t.communities.len();
            let relabeled = Tallies::new(
                t.communities
                    .iter()
                    .map(|c| Tally { label: (k - 1 - c.label) * 3 + shift, ..*c })
                    .collect(),
                t.truth,
            );
            prop_assert_eq!(f1_single_tallies(&t).unwrap().1.f1, f1_single_tallies(&relabeled).unwrap().1.f1);
            prop_assert_eq!(union_oracle_tallies(&t).unwrap().score, union_oracle_tallies(&relabeled).unwrap().score);
            prop_assert_eq!(
                f1_union_threshold_tallies(&t, 0.2).score,
                f1_union_threshold_tallies(&relabeled, 0.2).score
            );
            // greedy order depends on labels only through tie-breaking
            let mut scores: Vec<f64> = t.communities.iter().map(|c| t.report(c).f1).collect();
            scores.sort_by(f64::total_cmp);
            if scores.windows(2).all(|w| w[0] != w[1]) {
                prop_assert_eq!(
                    f1_union_greedy_tallies(&t, None).unwrap().score,
                    f1_union_greedy_tallies(&relabeled, None).unwrap().score
                );
            }
        }

        #[test]
        fn set_identity(overlap in 0usize..500, extra_p in 0usize..500, extra_t in 0usize..500) {
            let r = F1Report::from_counts(overlap, overlap + extra_p, overlap + extra_t);
            let den = 2 * overlap + extra_p + extra_t;
            let expected = if den == 0 { 0.0 } else { (2 * overlap) as f64 / den as f64 };
            prop_assert_eq!(r.f1, expected);
        }
    }
}
