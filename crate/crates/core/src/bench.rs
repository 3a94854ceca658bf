//! Corpus benchmark: every requested strategy plus bounds, the naive plan
//! and, for small instances, the exhaustive optimum.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bounds, naive_footprint};
use crate::model::{InputDocument, TensorUsageRecord};
use crate::oracle::{optimal_offsets, optimal_shared};
use crate::plan::{Mode, Strategy};
use crate::published;
use crate::shared::SuitabilityIndex;

pub const CSV_HEADER: &str = "instance,strategy,mode,footprint,lower_bound,naive,time_us";
pub const CSV_ORACLE_COLUMNS: &str = ",optimum,gap";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub records: Vec<TensorUsageRecord>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub strategies: Vec<Strategy>,
    pub jobs: usize,
    /// Run the exhaustive solvers on instances with at most this many records.
    pub oracle_cap: Option<usize>,
    /// Record wall time per strategy. Off by default so output is
    /// reproducible byte for byte.
    pub timing: bool,
    pub index: SuitabilityIndex,
}

impl Default for BenchConfig {
    fn default() -> Self {
        let mut strategies = Strategy::GREEDY.to_vec();
        strategies.push(Strategy::Naive);
        BenchConfig {
            strategies,
            jobs: 1,
            oracle_cap: None,
            timing: false,
            index: SuitabilityIndex::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: String,
    pub mode: Mode,
    pub footprint: u64,
    pub time_us: u64,
    pub valid: bool,
    /// `Some` when the instance had a published reference row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_published_range: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub records: usize,
    pub shared_lower_bound: u64,
    pub offset_lower_bound: u64,
    pub naive: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shared_optimum: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offsets_optimum: Option<u64>,
    pub results: Vec<StrategyResult>,
}

impl BenchRow {
    pub fn lower_bound(&self, mode: Mode) -> u64 {
        match mode {
            Mode::Shared => self.shared_lower_bound,
            Mode::Offsets => self.offset_lower_bound,
        }
    }

    pub fn optimum(&self, mode: Mode) -> Option<u64> {
        match mode {
            Mode::Shared => self.shared_optimum,
            Mode::Offsets => self.offsets_optimum,
        }
    }

    pub fn best(&self, mode: Mode) -> Option<u64> {
        self.results
            .iter()
            .filter(|r| r.mode == mode)
            .map(|r| r.footprint)
            .min()
    }

    /// Human-readable descriptions of every broken row invariant.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.shared_lower_bound < self.offset_lower_bound {
            out.push(format!(
                "{}: shared bound {} below offset bound {}",
                self.instance, self.shared_lower_bound, self.offset_lower_bound
            ));
        }
        for r in &self.results {
            let lb = self.lower_bound(r.mode);
            if !r.valid {
                out.push(format!(
                    "{}: {} produced an invalid plan",
                    self.instance, r.strategy
                ));
            }
            if r.footprint < lb {
                out.push(format!(
                    "{}: {} footprint {} below lower bound {lb}",
                    self.instance, r.strategy, r.footprint
                ));
            }
            if r.footprint > self.naive {
                out.push(format!(
                    "{}: {} footprint {} above naive {}",
                    self.instance, r.strategy, r.footprint, self.naive
                ));
            }
            if let Some(opt) = self.optimum(r.mode) {
                if r.footprint < opt {
                    out.push(format!(
                        "{}: {} footprint {} below optimum {opt}",
                        self.instance, r.strategy, r.footprint
                    ));
                }
            }
            if r.within_published_range == Some(false) {
                out.push(format!(
                    "{}: {} footprint {} outside the published range",
                    self.instance, r.strategy, r.footprint
                ));
            }
        }
        if let (Some(o), Some(s)) = (self.best(Mode::Offsets), self.best(Mode::Shared)) {
            if o > s {
                out.push(format!(
                    "{}: best offsets footprint {o} above best shared footprint {s}",
                    self.instance
                ));
            }
        }
        out
    }
}

pub fn run_instance(instance: &Instance, cfg: &BenchConfig) -> BenchRow {
    let recs = &instance.records;
    let b = bounds(recs);
    let reference = published::lookup(&instance.name);
    let results = cfg
        .strategies
        .iter()
        .map(|&s| {
            let start = Instant::now();
            let plan = s.run(recs, cfg.index);
            let elapsed = start.elapsed().as_micros() as u64;
            let footprint = plan.footprint();
            StrategyResult {
                strategy: s.name(),
                mode: s.mode(),
                footprint,
                time_us: if cfg.timing { elapsed } else { 0 },
                valid: plan.validate(recs).ok,
                within_published_range: reference.map(|r| r.within_range(s.mode(), footprint)),
            }
        })
        .collect();
    let small = cfg.oracle_cap.filter(|&cap| recs.len() <= cap);
    BenchRow {
        instance: instance.name.clone(),
        records: recs.len(),
        shared_lower_bound: b.shared_lower_bound,
        offset_lower_bound: b.offset_lower_bound,
        naive: naive_footprint(recs),
        shared_optimum: small.and_then(|cap| optimal_shared(recs, cap).ok().map(|r| r.optimum)),
        offsets_optimum: small.and_then(|cap| optimal_offsets(recs, cap).ok().map(|r| r.optimum)),
        results,
    }
}

/// Runs every instance, in parallel when `cfg.jobs > 1`. Rows come back
/// sorted by instance name regardless of completion order.
pub fn run_bench(instances: &[Instance], cfg: &BenchConfig) -> Vec<BenchRow> {
    let mut rows: Vec<BenchRow> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .expect("thread pool");
        pool.install(|| instances.par_iter().map(|i| run_instance(i, cfg)).collect())
    } else {
        instances.iter().map(|i| run_instance(i, cfg)).collect()
    };
    rows.sort_by(|a, b| a.instance.cmp(&b.instance));
    rows
}

pub fn to_csv(rows: &[BenchRow], with_oracle: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    if with_oracle {
        out.push_str(CSV_ORACLE_COLUMNS);
    }
    out.push('\n');
    for row in rows {
        for r in &row.results {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                row.instance,
                r.strategy,
                r.mode,
                r.footprint,
                row.lower_bound(r.mode),
                row.naive,
                r.time_us
            );
            if with_oracle {
                match row.optimum(r.mode) {
                    Some(opt) => {
                        let _ = write!(out, ",{opt},{}", r.footprint as i128 - opt as i128);
                    }
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
    }
    out
}

pub fn to_json(rows: &[BenchRow]) -> String {
    serde_json::to_string_pretty(rows).expect("bench rows always serialize")
}

/// Loads every `*.json` file in `dir`, sorted by file name. Files that fail
/// to read or parse are skipped and reported in the second return value.
pub fn load_corpus(dir: &Path, alignment: u64) -> std::io::Result<(Vec<Instance>, Vec<String>)> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut instances = Vec::new();
    let mut skipped = Vec::new();
    for path in paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let parsed = fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|text| InputDocument::from_json(&text).map_err(|e| e.to_string()))
            .and_then(|doc| doc.into_records(alignment).map_err(|e| e.to_string()));
        match parsed {
            Ok(records) if !records.is_empty() => instances.push(Instance { name, records }),
            Ok(_) => skipped.push(format!("{}: no intermediate tensors", path.display())),
            Err(e) => skipped.push(format!("{}: {e}", path.display())),
        }
    }
    Ok((instances, skipped))
}
