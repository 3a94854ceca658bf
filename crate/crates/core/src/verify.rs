//! Plan validation and footprint recomputation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bounds::offset_lower_bound;
use crate::model::{TensorId, TensorUsageRecord};
use crate::offsets::OffsetPlan;
use crate::shared::SharedObjectPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Two interval-intersecting tensors bound to one shared object.
    OverlapInObject,
    /// Two interval-intersecting tensors with overlapping byte ranges.
    OverlapInMemory,
    Unassigned,
    /// Object size differs from the largest tensor bound to it.
    SizeMismatch,
    /// Assignment names an object the plan does not define.
    UnknownObject,
    /// Claimed footprint differs from the recomputed one.
    FootprintMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub tensor_a: Option<TensorId>,
    pub tensor_b: Option<TensorId>,
}

impl Violation {
    fn pair(kind: ViolationKind, a: TensorId, b: TensorId) -> Self {
        Violation {
            kind,
            tensor_a: Some(a.min(b)),
            tensor_b: Some(a.max(b)),
        }
    }

    fn single(kind: ViolationKind, t: Option<TensorId>) -> Self {
        Violation {
            kind,
            tensor_a: t,
            tensor_b: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ValidationReport {
    fn from_violations(mut violations: Vec<Violation>, warnings: Vec<String>) -> Self {
        violations.sort();
        violations.dedup();
        ValidationReport {
            ok: violations.is_empty(),
            violations,
            warnings,
        }
    }
}

/// Every pair of interval-intersecting records, as (a, b) with a's first use
/// not after b's. Sweeps records in order of first use.
fn conflicting_pairs(records: &[TensorUsageRecord]) -> Vec<(TensorUsageRecord, TensorUsageRecord)> {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| (r.first_op, r.tensor_id));
    let mut out = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if b.first_op > a.last_op {
                break;
            }
            out.push((*a, *b));
        }
    }
    out
}

pub fn validate_shared(plan: &SharedObjectPlan, records: &[TensorUsageRecord]) -> ValidationReport {
    let mut violations = Vec::new();
    let mut object_size: BTreeMap<usize, u64> = BTreeMap::new();
    for o in &plan.objects {
        object_size.insert(o.id, o.size);
    }

    let mut largest: BTreeMap<usize, u64> = BTreeMap::new();
    for r in records {
        match plan.assignment.get(&r.tensor_id) {
            None => violations.push(Violation::single(
                ViolationKind::Unassigned,
                Some(r.tensor_id),
            )),
            Some(o) if !object_size.contains_key(o) => violations.push(Violation::single(
                ViolationKind::UnknownObject,
                Some(r.tensor_id),
            )),
            Some(&o) => {
                let m = largest.entry(o).or_insert(0);
                *m = (*m).max(r.size);
            }
        }
    }
    for (&o, &size) in &object_size {
        let want = largest.get(&o).copied().unwrap_or(0);
        if size != want {
            violations.push(Violation::single(ViolationKind::SizeMismatch, None));
        }
    }

    for (a, b) in conflicting_pairs(records) {
        let (oa, ob) = (
            plan.assignment.get(&a.tensor_id),
            plan.assignment.get(&b.tensor_id),
        );
        if oa.is_some() && oa == ob {
            violations.push(Violation::pair(
                ViolationKind::OverlapInObject,
                a.tensor_id,
                b.tensor_id,
            ));
        }
    }
    ValidationReport::from_violations(violations, Vec::new())
}

/// Checks an offset plan, including that its stated footprint matches the
/// recomputed one. A footprint below the offset lower bound is reported as a
/// warning.
pub fn validate_offsets(plan: &OffsetPlan, records: &[TensorUsageRecord]) -> ValidationReport {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    for r in records {
        if !plan.assignment.contains_key(&r.tensor_id) {
            violations.push(Violation::single(
                ViolationKind::Unassigned,
                Some(r.tensor_id),
            ));
        }
    }
    for (a, b) in conflicting_pairs(records) {
        let (Some(&oa), Some(&ob)) = (
            plan.assignment.get(&a.tensor_id),
            plan.assignment.get(&b.tensor_id),
        ) else {
            continue;
        };
        if oa.max(ob) < (oa + a.size).min(ob + b.size) {
            violations.push(Violation::pair(
                ViolationKind::OverlapInMemory,
                a.tensor_id,
                b.tensor_id,
            ));
        }
    }
    let recomputed = offsets_footprint(plan, records);
    if recomputed != plan.footprint {
        violations.push(Violation::single(ViolationKind::FootprintMismatch, None));
    }
    if violations.is_empty() && !records.is_empty() {
        let lb = offset_lower_bound(records);
        if plan.footprint < lb {
            warnings.push(format!(
                "footprint {} is below the offset lower bound {lb}; planner bug",
                plan.footprint
            ));
        }
    }
    ValidationReport::from_violations(violations, warnings)
}

/// Validates a shared plan together with the footprint it claims.
pub fn validate_shared_claim(
    plan: &SharedObjectPlan,
    claimed_footprint: u64,
    records: &[TensorUsageRecord],
) -> ValidationReport {
    let mut report = validate_shared(plan, records);
    if plan.footprint() != claimed_footprint {
        report
            .violations
            .push(Violation::single(ViolationKind::FootprintMismatch, None));
        report.violations.sort();
        report.ok = false;
    }
    report
}

pub fn shared_footprint(plan: &SharedObjectPlan) -> u64 {
    plan.footprint()
}

/// Highest `offset + size` over the records the plan assigns.
pub fn offsets_footprint(plan: &OffsetPlan, records: &[TensorUsageRecord]) -> u64 {
    records
        .iter()
        .filter_map(|r| plan.assignment.get(&r.tensor_id).map(|o| o + r.size))
        .max()
        .unwrap_or(0)
}
