use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::analytics::DecayFit;
use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::fmt::csv_f64;
use crate::stats::{quantile_sorted, OnlineStats};

/// Per-replica results as named scalars. Keys are identical across the rows
/// of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaRow {
    pub replica_id: u64,
    pub values: BTreeMap<String, f64>,
}

/// A replica excluded from the aggregates (population cap).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRecord {
    pub replica_id: u64,
    pub message: String,
}

/// Streaming moments plus order statistics of one per-replica column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatSummary {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

impl StatSummary {
    /// Canonical fold over values already ordered by ascending replica id.
    pub fn from_ordered_values(values: &[f64]) -> Self {
        let mut acc = OnlineStats::default();
        for &v in values {
            acc.add(v);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in aggregates"));
        StatSummary {
            count: acc.count,
            mean: acc.mean,
            variance: acc.variance(),
            std_error: acc.std_error(),
            min: acc.min,
            max: acc.max,
            p5: quantile_sorted(&sorted, 0.05),
            p25: quantile_sorted(&sorted, 0.25),
            p50: quantile_sorted(&sorted, 0.50),
            p75: quantile_sorted(&sorted, 0.75),
            p95: quantile_sorted(&sorted, 0.95),
        }
    }
}

/// Full result of one experiment: raw rows, canonical aggregates, derived
/// scalar metrics and failure accounting, with seed provenance.
///
/// Aggregates are always recomputable from the rows: they are produced by a
/// fold in ascending replica order, which also makes `merge` of split runs
/// bit-identical to the corresponding single run. Wall-clock time is kept
/// out of the canonical serialization so reports stay byte-comparable.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub rows: Vec<ReplicaRow>,
    pub aggregates: BTreeMap<String, StatSummary>,
    pub metrics: BTreeMap<String, f64>,
    pub decay_fit: Option<DecayFit>,
    pub failures: Vec<FailureRecord>,
    pub seed: u64,
    pub wallclock_ms: f64,
}

impl AggregateReport {
    /// Recompute the aggregate block from the rows (canonical order).
    pub fn aggregate_rows(rows: &[ReplicaRow]) -> BTreeMap<String, StatSummary> {
        let mut columns: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for row in rows {
            for (k, &v) in &row.values {
                columns.entry(k).or_default().push(v);
            }
        }
        columns
            .into_iter()
            .map(|(k, vals)| (k.to_string(), StatSummary::from_ordered_values(&vals)))
            .collect()
    }

    /// Canonical JSON document. When `rows_sidecar` is set the rows move to
    /// the named CSV sidecar and only the reference stays inline.
    pub fn to_json(&self, rows_sidecar: Option<&str>) -> serde_json::Value {
        let rows = match rows_sidecar {
            Some(name) => serde_json::json!({ "sidecar": name }),
            None => serde_json::to_value(&self.rows).expect("rows serialize"),
        };
        serde_json::json!({
            "experiment": self.experiment,
            "config": self.config,
            "rows": rows,
            "aggregates": serde_json::to_value(&self.aggregates).expect("aggregates serialize"),
            "metrics": self.metrics,
            "decay_fit": self.decay_fit,
            "failures": self.failures,
            "seed": self.seed,
        })
    }

    /// Rows as CSV: `replica_id` plus one column per value key, sorted.
    pub fn write_rows_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let keys: Vec<&String> = self
            .rows
            .first()
            .map(|r| r.values.keys().collect())
            .unwrap_or_default();
        write!(out, "replica_id")?;
        for k in &keys {
            write!(out, ",{k}")?;
        }
        writeln!(out)?;
        for row in &self.rows {
            write!(out, "{}", row.replica_id)?;
            for k in &keys {
                match row.values.get(*k) {
                    Some(&v) => write!(out, ",{}", csv_f64(v))?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Merge reports of the same experiment run over disjoint, contiguous
/// replica ranges. The merge is order-canonicalized (ascending replica id)
/// and reproduces the single-run report of the concatenated range bitwise.
pub fn merge(reports: &[AggregateReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::Merge("nothing to merge".into()));
    }
    if reports.len() == 1 {
        return Ok(reports[0].clone());
    }

    let reference = &reports[0];
    let strip = |cfg: &BTreeMap<String, String>| {
        let mut c = cfg.clone();
        c.remove("replicas");
        c.remove("replica_start");
        c
    };
    for r in &reports[1..] {
        if r.experiment != reference.experiment {
            return Err(Error::Merge(format!(
                "experiments differ: {} vs {}",
                reference.experiment, r.experiment
            )));
        }
        if strip(&r.config) != strip(&reference.config) {
            return Err(Error::Merge(
                "configs differ beyond the replica range".into(),
            ));
        }
    }

    let mut ranges: Vec<(u64, u64)> = reports
        .iter()
        .map(|r| {
            let start: u64 = r.config["replica_start"].parse().map_err(|_| {
                Error::Merge("report config lacks a numeric replica_start".into())
            })?;
            let count: u64 = r.config["replicas"]
                .parse()
                .map_err(|_| Error::Merge("report config lacks a numeric replicas".into()))?;
            Ok((start, count))
        })
        .collect::<Result<_>>()?;
    ranges.sort_unstable();
    for pair in ranges.windows(2) {
        let (s0, n0) = pair[0];
        let (s1, _) = pair[1];
        if s0 + n0 > s1 {
            return Err(Error::Merge(format!(
                "replica ranges overlap: [{s0}, {}) and [{s1}, ..)",
                s0 + n0
            )));
        }
        if s0 + n0 < s1 {
            return Err(Error::Merge(format!(
                "replica ranges leave a gap between {} and {s1}",
                s0 + n0
            )));
        }
    }
    let merged_start = ranges[0].0;
    let merged_count: u64 = ranges.iter().map(|&(_, n)| n).sum();

    let mut rows: Vec<ReplicaRow> = reports.iter().flat_map(|r| r.rows.clone()).collect();
    rows.sort_by_key(|r| r.replica_id);
    for pair in rows.windows(2) {
        if pair[0].replica_id == pair[1].replica_id {
            return Err(Error::Merge(format!(
                "duplicate replica id {}",
                pair[0].replica_id
            )));
        }
    }
    let mut failures: Vec<FailureRecord> =
        reports.iter().flat_map(|r| r.failures.clone()).collect();
    failures.sort_by_key(|f| f.replica_id);

    let mut config = reference.config.clone();
    config.insert("replica_start".into(), merged_start.to_string());
    config.insert("replicas".into(), merged_count.to_string());

    // Re-finalize through the experiment's own pipeline so the merged
    // report is the single-run report of the concatenation, bit for bit.
    let cfg = ExperimentConfig::from_echo(&config)?;
    let wallclock_ms = reports.iter().map(|r| r.wallclock_ms).sum();
    crate::experiments::finalize(&cfg, rows, failures, wallclock_ms)
}
