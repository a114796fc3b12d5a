//! Aggregation of metrics files into a method × reduction-factor table.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quality::MetricReport;

use super::experiment::Method;

/// Mean metrics of one method at one reduction factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub psnr: f64,
    pub ssim: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportTable {
    /// Reduction factors in increasing order.
    pub reductions: Vec<f64>,
    /// `(method label, cells per reduction, mean seconds per image)`
    pub rows: Vec<(String, Vec<Option<Cell>>, f64)>,
}

fn method_rank(label: &str) -> (usize, String) {
    let rank = label
        .parse::<Method>()
        .map(|m| Method::ALL.iter().position(|&x| x == m).unwrap_or(usize::MAX))
        .unwrap_or(usize::MAX);
    (rank, label.to_string())
}

/// Average reports per `(method, R)`. An infinite PSNR makes its cell infinite.
pub fn aggregate_reports(reports: &[MetricReport]) -> ReportTable {
    let reductions: BTreeSet<u64> = reports.iter().map(|r| r.reduction.to_bits()).collect();
    let mut reductions: Vec<f64> = reductions.into_iter().map(f64::from_bits).collect();
    reductions.sort_by(|a, b| a.total_cmp(b));

    let mut groups: BTreeMap<(usize, String), Vec<&MetricReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(method_rank(&r.method)).or_default().push(r);
    }
    let rows = groups
        .into_iter()
        .map(|((_, label), runs)| {
            let cells = reductions
                .iter()
                .map(|&red| {
                    let at: Vec<_> = runs.iter().filter(|r| r.reduction == red).collect();
                    (!at.is_empty()).then(|| Cell {
                        psnr: at.iter().map(|r| r.psnr()).sum::<f64>() / at.len() as f64,
                        ssim: at.iter().map(|r| r.ssim).sum::<f64>() / at.len() as f64,
                        runs: at.len(),
                    })
                })
                .collect();
            let secs = runs.iter().map(|r| r.wall_seconds).sum::<f64>() / runs.len() as f64;
            (label, cells, secs)
        })
        .collect();
    ReportTable { reductions, rows }
}

fn fmt_r(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// `method,R=2 PSNR,R=2 SSIM,...,s/img`
pub fn write_report_csv<W: Write>(table: &ReportTable, mut out: W) -> Result<()> {
    let mut header = vec!["method".to_string()];
    for &r in &table.reductions {
        header.push(format!("R={} PSNR", fmt_r(r)));
        header.push(format!("R={} SSIM", fmt_r(r)));
    }
    header.push("s/img".into());
    writeln!(out, "{}", header.join(","))?;
    for (label, cells, secs) in &table.rows {
        let mut line = vec![label.clone()];
        for cell in cells {
            match cell {
                Some(c) => {
                    line.push(if c.psnr.is_infinite() { "inf".into() } else { format!("{:.2}", c.psnr) });
                    line.push(format!("{:.3}", c.ssim));
                }
                None => line.extend([String::new(), String::new()]),
            }
        }
        line.push(format!("{secs:.1}"));
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Read every `*.json` metrics file under `dir`, recursively, in path order.
pub fn collect_reports(dir: impl AsRef<Path>) -> Result<Vec<MetricReport>> {
    let mut files = Vec::new();
    let mut stack = vec![dir.as_ref().to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "json") {
                files.push(path);
            }
        }
    }
    files.sort();
    files
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        })
        .collect()
}
