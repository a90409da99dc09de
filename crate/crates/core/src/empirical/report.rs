//! CSV output of an [`EvalReport`]: summary tables, DM grids and plot data.

use std::fs;
use std::path::{Path, PathBuf};

use super::evaluate::{DmCell, EvalReport, SummaryStats};
use super::forecast::Method;
use crate::error::Result;

/// Horizons shown in the plot-data files.
pub const FIGURE_HORIZONS: [usize; 4] = [2, 4, 6, 8];

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

const SUMMARY_HEADER: [&str; 12] =
    ["panel", "horizon", "mean", "median", "std", "ac1", "ac2", "ac3", "ac4", "adf", "adf_stars", "adf_lags"];

fn summary_row(panel: &str, horizon: &str, s: &SummaryStats) -> Vec<String> {
    let mut row = vec![panel.to_string(), horizon.to_string(), num(s.mean), num(s.median), num(s.std)];
    row.extend(s.ac.iter().map(|a| opt(*a)));
    row.push(opt(s.adf));
    row.push(s.adf_stars.to_string());
    row.push(s.adf_lags.map(|l| l.to_string()).unwrap_or_default());
    row
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut wr = csv::Writer::from_path(path)?;
    wr.write_record(header)?;
    for r in rows {
        wr.write_record(r)?;
    }
    wr.flush()?;
    Ok(())
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Summary rows for errors or losses; the constant benchmark collapses to
/// a single `1-8` row when it is horizon-invariant.
fn method_summaries(report: &EvalReport, losses: bool) -> Vec<Vec<String>> {
    let collapse = report.constant_panel_horizon_invariant();
    let hs = &report.config.horizons;
    let span = match (hs.first(), hs.last()) {
        (Some(a), Some(b)) if a != b => format!("{a}-{b}"),
        (Some(a), _) => a.to_string(),
        _ => String::new(),
    };
    let mut rows = Vec::new();
    for m in report.config.methods() {
        for s in report.summaries.iter().filter(|s| s.method == m) {
            let stats = if losses { &s.losses } else { &s.errors };
            if collapse && matches!(m, Method::Constant(_)) {
                rows.push(summary_row(&m.name(), &span, stats));
                break;
            }
            rows.push(summary_row(&m.name(), &s.horizon.to_string(), stats));
        }
    }
    rows
}

fn dm_rows(report: &EvalReport, pick: impl Fn(&super::evaluate::PairEvaluation) -> &Vec<DmCell>) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = strings(&["benchmark", "rule", "bandwidth"]);
    for h in &report.config.horizons {
        header.push(format!("h{h}"));
        header.push(format!("h{h}_stars"));
    }
    let mut rows = Vec::new();
    for bench in &report.config.methods()[1..] {
        let comps: Vec<_> = report.comparisons.iter().filter(|c| c.benchmark == *bench).collect();
        let Some(first) = comps.first() else { continue };
        for (i, cell) in pick(first).iter().enumerate() {
            let mut row = vec![bench.name(), cell.rule.to_string(), cell.bandwidth.to_string()];
            for c in &comps {
                let cell = &pick(c)[i];
                row.push(match cell.statistic {
                    Some(s) => num(s),
                    None => cell.note.clone().unwrap_or_default(),
                });
                row.push(cell.stars.to_string());
            }
            rows.push(row);
        }
    }
    (header, rows)
}

/// Writes all report files into `dir` (created if needed) and returns
/// their paths in a fixed order.
pub fn write_report(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    let mut emit = |name: &str, header: Vec<String>, rows: Vec<Vec<String>>| -> Result<()> {
        let p = dir.join(name);
        write_csv(&p, &header, &rows)?;
        out.push(p);
        Ok(())
    };

    let infl = report
        .inflation
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![report.inflation.quarter(i).to_string(), num(*v)])
        .collect();
    emit("inflation.csv", strings(&["quarter", "inflation"]), infl)?;

    let mut fc = Vec::new();
    for p in &report.panels {
        let flagged = |q| p.explosive_origins.contains(&q);
        for r in &p.rows {
            fc.push(vec![
                p.spec.method.name(),
                p.spec.horizon.to_string(),
                r.origin.to_string(),
                r.target.to_string(),
                num(r.forecast),
                num(r.realized),
                num(r.error),
                opt(r.slope),
                u8::from(flagged(r.origin)).to_string(),
            ]);
        }
    }
    emit(
        "forecasts.csv",
        strings(&["method", "horizon", "origin", "target", "forecast", "realized", "error", "ar1_slope", "explosive"]),
        fc,
    )?;

    emit("summary_errors.csv", strings(&SUMMARY_HEADER), method_summaries(report, false))?;
    emit("summary_losses.csv", strings(&SUMMARY_HEADER), method_summaries(report, true))?;
    let ld = report
        .comparisons
        .iter()
        .map(|c| summary_row(&c.benchmark.name(), &c.horizon.to_string(), &c.summary))
        .collect();
    emit("summary_loss_diff.csv", strings(&SUMMARY_HEADER), ld)?;

    let (h, r) = dm_rows(report, |c| &c.dm_a);
    emit("dm_autocov.csv", h, r)?;
    let (h, r) = dm_rows(report, |c| &c.dm_p);
    emit("dm_periodogram.csv", h, r)?;

    let methods = report.config.methods();
    let hs: Vec<usize> = FIGURE_HORIZONS.into_iter().filter(|h| report.config.horizons.contains(h)).collect();
    let mut head = strings(&["horizon", "target", "realized"]);
    head.extend(methods.iter().map(Method::name));
    let mut fig1 = Vec::new();
    let mut fig2 = Vec::new();
    let mut fig3 = Vec::new();
    for &h in &hs {
        let panels: Vec<_> = methods.iter().filter_map(|m| report.panel(*m, h)).collect();
        for (k, row) in panels[0].rows.iter().enumerate() {
            let base = vec![h.to_string(), row.target.to_string()];
            let mut r1 = base.clone();
            r1.push(num(row.realized));
            r1.extend(panels.iter().map(|p| num(p.rows[k].forecast)));
            fig1.push(r1);
            let mut r2 = base.clone();
            r2.extend(panels.iter().map(|p| num(p.rows[k].error)));
            fig2.push(r2);
            let mut r3 = base;
            r3.extend(panels.iter().map(|p| num(p.rows[k].error * p.rows[k].error)));
            fig3.push(r3);
        }
    }
    emit("figure1_forecasts.csv", head.clone(), fig1)?;
    let mut head2 = strings(&["horizon", "target"]);
    head2.extend(methods.iter().map(Method::name));
    emit("figure2_errors.csv", head2.clone(), fig2)?;
    emit("figure3_losses.csv", head2, fig3)?;

    let mut head4 = strings(&["horizon", "target"]);
    head4.extend(methods[1..].iter().map(Method::name));
    let mut fig4 = Vec::new();
    for &h in &hs {
        let comps: Vec<_> = methods[1..].iter().filter_map(|m| report.comparison(*m, h)).collect();
        for (k, q) in comps[0].targets.iter().enumerate() {
            let mut r = vec![h.to_string(), q.to_string()];
            r.extend(comps.iter().map(|c| num(c.loss_diff[k])));
            fig4.push(r);
        }
    }
    emit("figure4_loss_diff.csv", head4, fig4)?;
    Ok(out)
}
