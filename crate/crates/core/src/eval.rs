//! Retrieval metrics: precision at k, AP(k), mAP and interpolated PR curves.

use std::path::Path;

use crate::binio::write_file;
use crate::error::{Error, Result};
use crate::graphcons::GraphLabel;
use crate::index::RetrievalResult;

/// Relevance flags of ranked results, one row per query.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelevanceTable {
    pub rows: Vec<Vec<u8>>,
}

impl RelevanceTable {
    pub fn new(rows: Vec<Vec<u8>>) -> Self {
        RelevanceTable { rows }
    }

    /// A result is relevant when its label equals the query's.
    pub fn from_results(results: &[RetrievalResult], query_labels: &[GraphLabel]) -> Result<Self> {
        if results.len() != query_labels.len() {
            return Err(Error::Shape(format!(
                "{} results but {} query labels",
                results.len(),
                query_labels.len()
            )));
        }
        let rows = results
            .iter()
            .zip(query_labels)
            .map(|(r, &label)| r.ranked.iter().map(|h| (h.label == label) as u8).collect())
            .collect();
        Ok(RelevanceTable { rows })
    }

    pub fn num_queries(&self) -> usize {
        self.rows.len()
    }
}

/// `p_i(k)`: fraction of relevant results among the first `k`.
pub fn precision_at_k(row: &[u8], k: usize) -> Result<f64> {
    if k == 0 || k > row.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} outside 1..={}",
            row.len()
        )));
    }
    let hits: usize = row[..k].iter().map(|&r| r as usize).sum();
    Ok(hits as f64 / k as f64)
}

/// `AP(k)`: mean of `p_i(k)` over all queries.
pub fn average_precision_at_k(table: &RelevanceTable, k: usize) -> Result<f64> {
    if table.rows.is_empty() {
        return Err(Error::InvalidArgument("no queries".into()));
    }
    let mut sum = 0.0;
    for row in &table.rows {
        sum += precision_at_k(row, k)?;
    }
    Ok(sum / table.rows.len() as f64)
}

fn average_precision(row: &[u8]) -> Option<f64> {
    let relevant: usize = row.iter().map(|&r| r as usize).sum();
    if relevant == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut acc = 0.0;
    for (k, &r) in row.iter().enumerate() {
        if r == 1 {
            hits += 1;
            acc += hits as f64 / (k + 1) as f64;
        }
    }
    Some(acc / relevant as f64)
}

/// Mean over queries of `Σ_k p_i(k) r_ik / Σ_k r_ik`.
///
/// Queries without any relevant item are skipped with a warning; if none
/// remain this is an error.
pub fn mean_average_precision(table: &RelevanceTable) -> Result<f64> {
    let mut sum = 0.0;
    let mut used = 0usize;
    for (i, row) in table.rows.iter().enumerate() {
        match average_precision(row) {
            Some(ap) => {
                sum += ap;
                used += 1;
            }
            None => log::warn!("query {i} has no relevant database item; skipped in mAP"),
        }
    }
    if used == 0 {
        return Err(Error::InvalidArgument(
            "no query has a relevant database item".into(),
        ));
    }
    Ok(sum / used as f64)
}

pub const PR_GRID_STEPS: usize = 20;

/// Interpolated precision on the recall grid `0, 0.05, …, 1`.
///
/// For each query the precision at recall `r` is the largest precision
/// reached at any recall `≥ r`; the curve is the mean over queries that have
/// at least one relevant item.
pub fn interpolated_pr_curve(table: &RelevanceTable) -> Result<Vec<(f64, f64)>> {
    let grid: Vec<f64> = (0..=PR_GRID_STEPS)
        .map(|i| i as f64 / PR_GRID_STEPS as f64)
        .collect();
    let mut acc = vec![0.0; grid.len()];
    let mut used = 0usize;
    for row in &table.rows {
        let relevant: usize = row.iter().map(|&r| r as usize).sum();
        if relevant == 0 {
            continue;
        }
        used += 1;
        let mut points = Vec::with_capacity(row.len());
        let mut hits = 0usize;
        for (k, &r) in row.iter().enumerate() {
            hits += r as usize;
            points.push((hits as f64 / relevant as f64, hits as f64 / (k + 1) as f64));
        }
        for (g, slot) in grid.iter().zip(acc.iter_mut()) {
            let p = points
                .iter()
                .filter(|&&(r, _)| r >= *g)
                .fold(0.0f64, |m, &(_, p)| m.max(p));
            *slot += p;
        }
    }
    if used == 0 {
        return Err(Error::InvalidArgument(
            "no query has a relevant database item".into(),
        ));
    }
    Ok(grid
        .into_iter()
        .zip(acc)
        .map(|(r, s)| (r, s / used as f64))
        .collect())
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub n_bar: usize,
    pub ap_at_50: f64,
    pub map: f64,
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut text = String::from("n_bar,AP50,mAP\n");
    for r in rows {
        text.push_str(&format!("{},{},{}\n", r.n_bar, r.ap_at_50, r.map));
    }
    write_file(path, text.as_bytes())
}

pub fn write_pr_curve_csv(path: &Path, curve: &[(f64, f64)]) -> Result<()> {
    let mut text = String::from("recall,precision\n");
    for (r, p) in curve {
        text.push_str(&format!("{r},{p}\n"));
    }
    write_file(path, text.as_bytes())
}
