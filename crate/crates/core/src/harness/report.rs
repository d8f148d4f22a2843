use std::fmt::Write as _;
use std::io::{Read, Write};

use super::eval::{ErrorRecord, EvalRecord, GtScore};
use super::summary::{CurvePoint, Summary};
use crate::error::{Error, Result};
use crate::hedonic::InitMode;
use crate::projection::join_labels;

pub const RECORD_HEADER: [&str; 13] = [
    "image_id", "gt_id", "gamma", "c", "init", "K", "f1_single", "f1_union", "gap", "labels",
    "sweeps", "converged", "ms",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Encode {
        path: Default::default(),
        message: e.to_string(),
    }
}

fn sci(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6e}")).unwrap_or_default()
}

fn init_str(i: Option<InitMode>) -> String {
    i.map(|m| m.to_string()).unwrap_or_default()
}

fn record_row(r: &EvalRecord) -> [String; 13] {
    [
        r.image_id.clone(),
        r.gt_id.to_string(),
        sci(r.gamma),
        sci(r.c),
        init_str(r.init),
        r.k.to_string(),
        format!("{:.6}", r.f1_single),
        format!("{:.6}", r.f1_union),
        format!("{:.6}", r.gap),
        join_labels(&r.labels),
        r.sweeps.to_string(),
        r.converged.to_string(),
        r.ms.to_string(),
    ]
}

pub fn write_records(out: impl Write, records: &[EvalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record(record_row(r)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

pub fn records_to_csv(records: &[EvalRecord]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// Scores against every mask: `image_id,init,gamma,gt_id,f1_single,f1_union`.
pub fn per_gt_csv(records: &[EvalRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["image_id", "init", "gamma", "gt_id", "f1_single", "f1_union"])
        .expect("in-memory write");
    for r in records {
        for GtScore { gt_id, f1_single, f1_union } in &r.per_gt {
            w.write_record([
                r.image_id.clone(),
                init_str(r.init),
                sci(r.gamma),
                gt_id.to_string(),
                format!("{f1_single:.6}"),
                format!("{f1_union:.6}"),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn errors_csv(errors: &[ErrorRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["image_id", "resolution", "init", "message"])
        .expect("in-memory write");
    for e in errors {
        w.write_record([
            e.image_id.clone(),
            e.resolution.map(|r| r.to_string()).unwrap_or_default(),
            init_str(e.init),
            e.message.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    row.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("bad {} field `{}`", RECORD_HEADER[i], row.get(i).unwrap_or("")),
        })
}

fn parse_opt(row: &csv::StringRecord, i: usize, line: usize) -> Result<Option<f64>> {
    match row.get(i) {
        Some("") => Ok(None),
        _ => parse_field(row, i, line).map(Some),
    }
}

/// Reads a report back. Floats come back at printed precision and the
/// per-mask scores are not part of the report.
pub fn read_records(input: impl Read) -> Result<Vec<EvalRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(RECORD_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: "unexpected report header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(csv_err)?;
        let init = match row.get(4) {
            Some("") | None => None,
            Some(s) => Some(s.parse::<InitMode>().map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?),
        };
        let labels = match row.get(9) {
            Some("") | None => Vec::new(),
            Some(s) => s
                .split(';')
                .map(|l| l.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })?,
        };
        out.push(EvalRecord {
            image_id: row.get(0).unwrap_or_default().to_string(),
            gt_id: parse_field(&row, 1, line)?,
            gamma: parse_opt(&row, 2, line)?,
            c: parse_opt(&row, 3, line)?,
            init,
            k: parse_field(&row, 5, line)?,
            f1_single: parse_field(&row, 6, line)?,
            f1_union: parse_field(&row, 7, line)?,
            gap: parse_field(&row, 8, line)?,
            labels,
            sweeps: parse_field(&row, 10, line)?,
            converged: parse_field(&row, 11, line)?,
            ms: parse_field(&row, 12, line)?,
            per_gt: Vec::new(),
        });
    }
    Ok(out)
}

pub fn summary_text(s: &Summary, curve: &[CurvePoint]) -> String {
    let mut out = String::new();
    writeln!(out, "records            {}", s.count).unwrap();
    writeln!(out, "non-converged      {}", s.non_converged).unwrap();
    writeln!(out, "f1_single mean     {:.6}", s.mean_single).unwrap();
    writeln!(out, "f1_single median   {:.6}", s.median_single).unwrap();
    writeln!(out, "f1_union mean      {:.6}", s.mean_union).unwrap();
    writeln!(out, "f1_union median    {:.6}", s.median_union).unwrap();
    writeln!(out, "gap mean           {:.6}", s.mean_gap).unwrap();
    writeln!(out, "\nregimes").unwrap();
    for (label, n) in &s.regimes {
        writeln!(out, "  {label:<24}{n}").unwrap();
    }
    writeln!(out, "\nK histogram").unwrap();
    for (k, n) in &s.k_histogram {
        writeln!(out, "  {k:>8}  {n}").unwrap();
    }
    if curve.len() > 1 {
        writeln!(out, "\nsweep (by increasing gamma)").unwrap();
        writeln!(out, "  {:>12}  {:>12}  {:>9}  {:>9}  {:>9}  {:>9}", "c", "gamma", "single", "union", "gap", "K").unwrap();
        for p in curve {
            writeln!(
                out,
                "  {:>12}  {:>12.4e}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.2}",
                p.c.map(|c| format!("{c}")).unwrap_or_else(|| "-".into()),
                p.mean_gamma,
                p.mean_single,
                p.mean_union,
                p.mean_gap,
                p.mean_k
            )
            .unwrap();
        }
    }
    out
}
