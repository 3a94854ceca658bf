//! Exhaustive solvers for small instances.
//!
//! # Shared objects
//!
//! Records are taken largest first and each is either appended to an
//! existing conflict-free group or opens a new group (a restricted-growth
//! enumeration of set partitions). Because sizes are non-increasing, a group
//! costs the size of the record that opened it, so partial cost only grows
//! and any branch at or above the incumbent is cut.
//!
//! # Offsets
//!
//! Candidate offsets for a record are 0 and the end of every already placed
//! record whose interval intersects it. This loses nothing: take an optimal
//! layout and visit its blocks by ascending offset, dropping each one down
//! until it touches offset 0 or the top of a time-overlapping block below
//! it. Blocks only move down, so the footprint does not grow, and blocks
//! already visited stay put, so no new collisions appear. In the result every
//! block rests on 0 or on a conflicting block with a smaller offset. The
//! search therefore places records in non-decreasing offset order (equal
//! offsets in ascending record position), each at one of those candidates,
//! and prunes on the incumbent and on the max-breadth lower bound.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::offset_lower_bound;
use crate::model::TensorUsageRecord;
use crate::offsets::OffsetPlan;
use crate::shared::{SharedObject, SharedObjectPlan};

pub const DEFAULT_SHARED_CAP: usize = 10;
pub const DEFAULT_OFFSETS_CAP: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for oracle: {records} records exceeds cap {cap}")]
    TooLarge { records: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult<P> {
    pub optimum: u64,
    pub witness_plan: P,
    pub explored: u64,
}

fn check_cap(records: &[TensorUsageRecord], cap: usize) -> Result<(), OracleError> {
    if records.len() > cap {
        Err(OracleError::TooLarge {
            records: records.len(),
            cap,
        })
    } else {
        Ok(())
    }
}

struct SharedSearch<'a> {
    recs: &'a [TensorUsageRecord],
    conflict: Vec<u64>,
    groups: Vec<u64>,
    choice: Vec<usize>,
    best: u64,
    best_choice: Vec<usize>,
    explored: u64,
}

impl SharedSearch<'_> {
    fn run(&mut self, i: usize, cost: u64) {
        self.explored += 1;
        if cost >= self.best {
            return;
        }
        if i == self.recs.len() {
            self.best = cost;
            self.best_choice = self.choice.clone();
            return;
        }
        for g in 0..self.groups.len() {
            if self.groups[g] & self.conflict[i] == 0 {
                self.groups[g] |= 1 << i;
                self.choice[i] = g;
                self.run(i + 1, cost);
                self.groups[g] &= !(1 << i);
            }
        }
        self.groups.push(1 << i);
        self.choice[i] = self.groups.len() - 1;
        self.run(i + 1, cost + self.recs[i].size);
        self.groups.pop();
    }
}

pub fn optimal_shared(
    records: &[TensorUsageRecord],
    cap: usize,
) -> Result<OracleResult<SharedObjectPlan>, OracleError> {
    check_cap(records, cap)?;
    let mut recs = records.to_vec();
    recs.sort_by(|a, b| b.size.cmp(&a.size).then(a.tensor_id.cmp(&b.tensor_id)));
    let conflict = conflict_masks(&recs);
    let mut search = SharedSearch {
        recs: &recs,
        conflict,
        groups: Vec::new(),
        choice: vec![0; recs.len()],
        best: recs.iter().map(|r| r.size).sum::<u64>() + 1,
        best_choice: Vec::new(),
        explored: 0,
    };
    search.run(0, 0);
    let (optimum, choice, explored) = (search.best, search.best_choice, search.explored);
    if recs.is_empty() {
        return Ok(OracleResult {
            optimum: 0,
            witness_plan: SharedObjectPlan::default(),
            explored,
        });
    }

    let mut sizes: BTreeMap<usize, u64> = BTreeMap::new();
    let mut assignment = BTreeMap::new();
    for (r, &g) in recs.iter().zip(&choice) {
        let s = sizes.entry(g).or_insert(0);
        *s = (*s).max(r.size);
        assignment.insert(r.tensor_id, g);
    }
    let witness_plan = SharedObjectPlan {
        objects: sizes
            .into_iter()
            .map(|(id, size)| SharedObject { id, size })
            .collect(),
        assignment,
    };
    Ok(OracleResult {
        optimum,
        witness_plan,
        explored,
    })
}

fn conflict_masks(recs: &[TensorUsageRecord]) -> Vec<u64> {
    recs.iter()
        .map(|a| {
            recs.iter()
                .enumerate()
                .filter(|(_, b)| a.intersects(b))
                .fold(0u64, |m, (j, _)| m | (1 << j))
        })
        .collect()
}

struct OffsetSearch<'a> {
    recs: &'a [TensorUsageRecord],
    conflict: Vec<u64>,
    lower_bound: u64,
    offset: Vec<u64>,
    best: u64,
    best_offset: Vec<u64>,
    explored: u64,
}

impl OffsetSearch<'_> {
    /// `placed` is a bitmask; `floor` and `floor_idx` are the offset and
    /// position of the last placed record.
    fn run(&mut self, placed: u64, floor: u64, floor_idx: usize, height: u64) {
        self.explored += 1;
        if height.max(self.lower_bound) >= self.best {
            return;
        }
        let n = self.recs.len();
        if placed.count_ones() as usize == n {
            self.best = height;
            self.best_offset = self.offset.clone();
            return;
        }
        for i in (0..n).filter(|i| placed & (1 << i) == 0) {
            let size = self.recs[i].size;
            let neighbours = self.conflict[i] & placed;
            let mut candidates: Vec<u64> = std::iter::once(0)
                .chain(
                    (0..n)
                        .filter(|j| neighbours & (1 << j) != 0)
                        .map(|j| self.offset[j] + self.recs[j].size),
                )
                .filter(|&c| c > floor || (c == floor && i > floor_idx) || placed == 0)
                .collect();
            candidates.sort_unstable();
            candidates.dedup();
            for c in candidates {
                let fits = (0..n).filter(|j| neighbours & (1 << j) != 0).all(|j| {
                    let o = self.offset[j];
                    c + size <= o || o + self.recs[j].size <= c
                });
                if !fits {
                    continue;
                }
                self.offset[i] = c;
                self.run(placed | (1 << i), c, i, height.max(c + size));
                if self.best == self.lower_bound {
                    return;
                }
            }
        }
    }
}

pub fn optimal_offsets(
    records: &[TensorUsageRecord],
    cap: usize,
) -> Result<OracleResult<OffsetPlan>, OracleError> {
    check_cap(records, cap)?;
    let recs = records.to_vec();
    if recs.is_empty() {
        return Ok(OracleResult {
            optimum: 0,
            witness_plan: OffsetPlan::default(),
            explored: 0,
        });
    }
    let mut search = OffsetSearch {
        recs: &recs,
        conflict: conflict_masks(&recs),
        lower_bound: offset_lower_bound(&recs),
        offset: vec![0; recs.len()],
        best: recs.iter().map(|r| r.size).sum::<u64>() + 1,
        best_offset: Vec::new(),
        explored: 0,
    };
    search.run(0, 0, 0, 0);
    let witness_plan = OffsetPlan {
        assignment: recs
            .iter()
            .zip(&search.best_offset)
            .map(|(r, &o)| (r.tensor_id, o))
            .collect(),
        footprint: search.best,
    };
    Ok(OracleResult {
        optimum: search.best,
        witness_plan,
        explored: search.explored,
    })
}
