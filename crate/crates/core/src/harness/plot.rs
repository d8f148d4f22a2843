//! Static SVG diagnostics for a sweep or dataset run.

use std::path::Path;

use plotters::prelude::*;

use super::eval::EvalRecord;
use super::summary::CurvePoint;
use crate::error::{Error, Result};

const SIZE: (u32, u32) = (640, 420);

type Series<'a, T> = (&'a str, RGBColor, fn(&T) -> f64);

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Encode {
        path: Default::default(),
        message: e.to_string(),
    }
}

fn log_range(xs: impl Iterator<Item = f64>) -> std::ops::Range<f64> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in xs.filter(|x| *x > 0.0 && x.is_finite()) {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !lo.is_finite() {
        return 1e-6..1.0;
    }
    if lo == hi {
        return lo / 2.0..hi * 2.0;
    }
    lo / 1.5..hi * 1.5
}

/// Mean F1-single, F1-union and gap against mean `gamma`.
pub fn f1_vs_gamma(curve: &[CurvePoint]) -> Result<String> {
    let mut s = String::new();
    {
        let root = SVGBackend::with_string(&mut s, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("mean F1 vs gamma", ("sans-serif", 18))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(log_range(curve.iter().map(|p| p.mean_gamma)).log_scale(), 0f64..1.0)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("gamma")
            .y_desc("F1")
            .draw()
            .map_err(plot_err)?;
        let series: [Series<CurvePoint>; 3] = [
            ("F1 single", BLUE, |p| p.mean_single),
            ("F1 union", RED, |p| p.mean_union),
            ("gap", BLACK, |p| p.mean_gap),
        ];
        for (name, color, f) in series {
            let pts: Vec<(f64, f64)> = curve.iter().map(|p| (p.mean_gamma, f(p))).collect();
            chart
                .draw_series(LineSeries::new(pts.clone(), color))
                .map_err(plot_err)?
                .label(name)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
            chart
                .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))
                .map_err(plot_err)?;
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(s)
}

/// Overlaid 20-bin histograms of F1-single and F1-union.
pub fn f1_histograms(records: &[EvalRecord]) -> Result<String> {
    const BINS: usize = 20;
    let bin = |x: f64| ((x * BINS as f64) as usize).min(BINS - 1);
    let mut single = [0usize; BINS];
    let mut union = [0usize; BINS];
    for r in records {
        single[bin(r.f1_single)] += 1;
        union[bin(r.f1_union)] += 1;
    }
    let top = single.iter().chain(&union).copied().max().unwrap_or(0).max(1);
    let mut s = String::new();
    {
        let root = SVGBackend::with_string(&mut s, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("F1 histograms", ("sans-serif", 18))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(0f64..1.0, 0usize..top + 1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("F1")
            .y_desc("records")
            .draw()
            .map_err(plot_err)?;
        let w = 1.0 / BINS as f64;
        for (name, counts, color) in [("F1 single", &single, BLUE), ("F1 union", &union, RED)] {
            chart
                .draw_series(counts.iter().enumerate().map(|(i, &n)| {
                    let x0 = i as f64 * w;
                    Rectangle::new([(x0, 0), (x0 + w, n)], color.mix(0.4).filled())
                }))
                .map_err(plot_err)?
                .label(name)
                .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 12, y + 5)], color.mix(0.4).filled()));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(s)
}

/// Per-record K against `gamma`, both on log axes.
pub fn k_vs_gamma(records: &[EvalRecord]) -> Result<String> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.gamma?, r.k as f64)))
        .collect();
    scatter(
        "K vs gamma",
        "gamma",
        "K",
        &pts,
        log_range(pts.iter().map(|p| p.0)),
        log_range(pts.iter().map(|p| p.1)),
    )
}

/// F1-single and F1-union against K.
pub fn f1_vs_k(records: &[EvalRecord]) -> Result<String> {
    let mut s = String::new();
    {
        let root = SVGBackend::with_string(&mut s, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("F1 vs K", ("sans-serif", 18))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(log_range(records.iter().map(|r| r.k as f64)).log_scale(), 0f64..1.0)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("K")
            .y_desc("F1")
            .draw()
            .map_err(plot_err)?;
        let series: [Series<EvalRecord>; 2] =
            [("F1 single", BLUE, |r| r.f1_single), ("F1 union", RED, |r| r.f1_union)];
        for (name, color, f) in series {
            chart
                .draw_series(records.iter().map(|r| Circle::new((r.k as f64, f(r)), 3, color.mix(0.6).filled())))
                .map_err(plot_err)?
                .label(name)
                .legend(move |(x, y)| Circle::new((x + 6, y), 3, color.filled()));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(s)
}

/// Unit-width histogram of K.
pub fn k_histogram(records: &[EvalRecord]) -> Result<String> {
    let mut counts = std::collections::BTreeMap::new();
    for r in records {
        *counts.entry(r.k).or_insert(0usize) += 1;
    }
    let max_k = counts.keys().copied().max().unwrap_or(1);
    let top = counts.values().copied().max().unwrap_or(1);
    let mut s = String::new();
    {
        let root = SVGBackend::with_string(&mut s, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("K histogram", ("sans-serif", 18))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(0usize..max_k + 2, 0usize..top + 1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("K")
            .y_desc("records")
            .draw()
            .map_err(plot_err)?;
        chart
            .draw_series(
                counts
                    .iter()
                    .map(|(&k, &n)| Rectangle::new([(k, 0), (k + 1, n)], BLUE.mix(0.6).filled())),
            )
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(s)
}

fn scatter(
    title: &str,
    x_desc: &str,
    y_desc: &str,
    pts: &[(f64, f64)],
    xr: std::ops::Range<f64>,
    yr: std::ops::Range<f64>,
) -> Result<String> {
    let mut s = String::new();
    {
        let root = SVGBackend::with_string(&mut s, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 18))
            .margin(10)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(xr.log_scale(), yr.log_scale())
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc(x_desc)
            .y_desc(y_desc)
            .draw()
            .map_err(plot_err)?;
        chart
            .draw_series(pts.iter().map(|&p| Circle::new(p, 3, BLUE.mix(0.6).filled())))
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(s)
}

/// File names used by [`write_all`].
pub const PLOT_FILES: [&str; 5] = [
    "f1_vs_gamma.svg",
    "f1_histograms.svg",
    "k_vs_gamma.svg",
    "f1_vs_k.svg",
    "k_histogram.svg",
];

pub fn write_all(dir: &Path, records: &[EvalRecord], curve: &[CurvePoint]) -> Result<()> {
    let plots = [
        f1_vs_gamma(curve)?,
        f1_histograms(records)?,
        k_vs_gamma(records)?,
        f1_vs_k(records)?,
        k_histogram(records)?,
    ];
    for (name, svg) in PLOT_FILES.iter().zip(plots) {
        let path = dir.join(name);
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
