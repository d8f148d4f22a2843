use std::collections::BTreeMap;
use std::fmt;

use super::eval::EvalRecord;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegimeLabel {
    Cohesive,
    FragmentedRecoverable,
    IntrinsicFailure,
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeLabel::Cohesive => "cohesive",
            RegimeLabel::FragmentedRecoverable => "fragmented_recoverable",
            RegimeLabel::IntrinsicFailure => "intrinsic_failure",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeThresholds {
    pub single_min: f64,
    pub gap_max: f64,
    pub union_min: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            single_min: 0.7,
            gap_max: 0.2,
            union_min: 0.5,
        }
    }
}

pub fn classify(f1_single: f64, f1_union: f64, t: &RegimeThresholds) -> RegimeLabel {
    let gap = f1_union - f1_single;
    if f1_single >= t.single_min && gap < t.gap_max {
        RegimeLabel::Cohesive
    } else if f1_union < t.union_min {
        RegimeLabel::IntrinsicFailure
    } else {
        RegimeLabel::FragmentedRecoverable
    }
}

pub fn classify_regime(r: &EvalRecord, t: &RegimeThresholds) -> RegimeLabel {
    classify(r.f1_single, r.f1_union, t)
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a)?, mean(b)?);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Spearman rank correlation; `None` for fewer than two points or a
/// constant input.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean_single: f64,
    pub median_single: f64,
    pub mean_union: f64,
    pub median_union: f64,
    pub mean_gap: f64,
    pub k_histogram: BTreeMap<usize, usize>,
    pub regimes: BTreeMap<RegimeLabel, usize>,
    pub non_converged: usize,
}

pub fn aggregate(records: &[EvalRecord], t: &RegimeThresholds) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let single: Vec<f64> = records.iter().map(|r| r.f1_single).collect();
    let union: Vec<f64> = records.iter().map(|r| r.f1_union).collect();
    let gap: Vec<f64> = records.iter().map(|r| r.gap).collect();
    let mut k_histogram = BTreeMap::new();
    let mut regimes = BTreeMap::new();
    for r in records {
        *k_histogram.entry(r.k).or_insert(0) += 1;
        *regimes.entry(classify_regime(r, t)).or_insert(0) += 1;
    }
    Ok(Summary {
        count: records.len(),
        mean_single: mean(&single).unwrap(),
        median_single: median(&single).unwrap(),
        mean_union: mean(&union).unwrap(),
        median_union: median(&union).unwrap(),
        mean_gap: mean(&gap).unwrap(),
        k_histogram,
        regimes,
        non_converged: records.iter().filter(|r| !r.converged).count(),
    })
}

/// Means over all images at one grid point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub c: Option<f64>,
    pub mean_gamma: f64,
    pub mean_single: f64,
    pub mean_union: f64,
    pub mean_gap: f64,
    pub mean_k: f64,
    pub count: usize,
}

/// Groups records by grid point (`c`, or `gamma` when no `c` is set) and
/// returns the points in order of increasing mean `gamma`.
pub fn sweep_curve(records: &[EvalRecord]) -> Vec<CurvePoint> {
    let mut groups: Vec<(Option<f64>, f64, Vec<&EvalRecord>)> = Vec::new();
    for r in records {
        let key = r.c.or(r.gamma).unwrap_or(f64::NAN);
        match groups.iter_mut().find(|g| g.1.total_cmp(&key).is_eq()) {
            Some(g) => g.2.push(r),
            None => groups.push((r.c, key, vec![r])),
        }
    }
    let mut points: Vec<CurvePoint> = groups
        .into_iter()
        .map(|(c, _, rs)| {
            let m = |f: &dyn Fn(&EvalRecord) -> f64| mean(&rs.iter().map(|r| f(r)).collect::<Vec<_>>()).unwrap();
            CurvePoint {
                c,
                mean_gamma: m(&|r| r.gamma.unwrap_or(f64::NAN)),
                mean_single: m(&|r| r.f1_single),
                mean_union: m(&|r| r.f1_union),
                mean_gap: m(&|r| r.gap),
                mean_k: m(&|r| r.k as f64),
                count: rs.len(),
            }
        })
        .collect();
    points.sort_by(|a, b| a.mean_gamma.total_cmp(&b.mean_gamma));
    points
}
