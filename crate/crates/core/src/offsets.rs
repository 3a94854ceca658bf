//! Offset planning: every tensor gets a byte offset inside one arena, and
//! tensors whose usage intervals intersect occupy disjoint byte ranges.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{TensorId, TensorUsageRecord};
use crate::profile::operator_profiles;
use crate::shared::{breadth_order, size_order, SharedObjectPlan};
use crate::verify::{validate_shared, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OffsetPlan {
    pub assignment: BTreeMap<TensorId, u64>,
    pub footprint: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConversionError {
    #[error("shared plan failed validation: {0:?}")]
    InvalidSharedPlan(Vec<Violation>),
}

#[derive(Debug, Clone, Copy)]
struct Placed {
    offset: u64,
    record: TensorUsageRecord,
}

/// Arena under construction. Placed tensors are kept sorted by offset, then
/// tensor id.
#[derive(Debug, Default)]
struct Arena {
    placed: Vec<Placed>,
    total: u64,
}

impl Arena {
    /// Sweeps the placed tensors that conflict with `t` in ascending offset
    /// order and returns the start of the smallest gap that holds `t`. A gap
    /// is the distance from the running maximum end to the next conflicting
    /// offset; the first smallest fitting gap wins. Without one, `t` goes
    /// right after the highest conflicting end.
    fn best_offset(&self, t: &TensorUsageRecord) -> u64 {
        let mut prev_end = 0u64;
        let mut best: Option<u64> = None;
        let mut smallest_gap = u64::MAX;
        for x in &self.placed {
            if !x.record.intersects(t) {
                continue;
            }
            if x.offset >= prev_end {
                let gap = x.offset - prev_end;
                if gap >= t.size && gap < smallest_gap {
                    smallest_gap = gap;
                    best = Some(prev_end);
                }
            }
            prev_end = prev_end.max(x.offset + x.record.size);
        }
        best.unwrap_or(prev_end)
    }

    fn place(&mut self, t: TensorUsageRecord) {
        let offset = self.best_offset(&t);
        self.total = self.total.max(offset + t.size);
        let key = (offset, t.tensor_id);
        let pos = self
            .placed
            .partition_point(|p| (p.offset, p.record.tensor_id) < key);
        self.placed.insert(pos, Placed { offset, record: t });
    }

    fn finish(self) -> OffsetPlan {
        OffsetPlan {
            assignment: self
                .placed
                .iter()
                .map(|p| (p.record.tensor_id, p.offset))
                .collect(),
            footprint: self.total,
        }
    }
}

/// Largest tensors first, each into the smallest fitting gap among the
/// tensors it is live alongside.
pub fn greedy_by_size_offsets(records: &[TensorUsageRecord]) -> OffsetPlan {
    let mut arena = Arena::default();
    for t in size_order(records) {
        arena.place(t);
    }
    arena.finish()
}

/// Operators from the widest down; within each profile the still-unplaced
/// tensors largest first, using the same smallest-gap placement.
pub fn greedy_by_breadth_offsets(records: &[TensorUsageRecord]) -> OffsetPlan {
    let profiles = operator_profiles(records);
    let mut arena = Arena::default();
    let mut done: HashSet<TensorId> = HashSet::new();
    for op in breadth_order(&profiles) {
        for t in &profiles[op].records {
            if done.insert(t.tensor_id) {
                arena.place(*t);
            }
        }
    }
    arena.finish()
}

/// Lays the objects out back to back in ascending id order; every tensor
/// sits at its object's base.
pub fn offsets_from_shared(
    plan: &SharedObjectPlan,
    records: &[TensorUsageRecord],
) -> Result<OffsetPlan, ConversionError> {
    let report = validate_shared(plan, records);
    if !report.ok {
        return Err(ConversionError::InvalidSharedPlan(report.violations));
    }
    let mut objects = plan.objects.clone();
    objects.sort_by_key(|o| o.id);
    let mut base = BTreeMap::new();
    let mut next = 0u64;
    for o in &objects {
        base.insert(o.id, next);
        next += o.size;
    }
    Ok(OffsetPlan {
        assignment: plan.assignment.iter().map(|(&t, o)| (t, base[o])).collect(),
        footprint: next,
    })
}

/// Every tensor in its own region, in record order.
pub fn naive_plan(records: &[TensorUsageRecord]) -> OffsetPlan {
    let mut assignment = BTreeMap::new();
    let mut next = 0u64;
    for r in records {
        assignment.insert(r.tensor_id, next);
        next += r.size;
    }
    OffsetPlan {
        assignment,
        footprint: next,
    }
}
