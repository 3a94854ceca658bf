//! Shared-object planning: every tensor is bound to one reusable buffer, and
//! tensors whose usage intervals intersect never share a buffer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::interval_tree::{Interval, IntervalTree};
use crate::model::{TensorId, TensorUsageRecord};
use crate::profile::{operator_profiles, positional_maximums};

pub type ObjectId = usize;

/// Above this many records the interval-tree suitability index is used when
/// the caller asks for [`SuitabilityIndex::Auto`].
pub const TREE_THRESHOLD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SharedObject {
    pub id: ObjectId,
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SharedObjectPlan {
    pub objects: Vec<SharedObject>,
    pub assignment: BTreeMap<TensorId, ObjectId>,
}

impl SharedObjectPlan {
    /// Sum of object sizes.
    pub fn footprint(&self) -> u64 {
        self.objects.iter().map(|o| o.size).sum()
    }

    pub fn object(&self, id: ObjectId) -> Option<&SharedObject> {
        self.objects.iter().find(|o| o.id == id)
    }
}

/// How per-object occupancy is searched when testing suitability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SuitabilityIndex {
    #[default]
    Auto,
    Linear,
    Tree,
}

impl SuitabilityIndex {
    fn resolve(self, n_records: usize) -> SuitabilityIndex {
        match self {
            SuitabilityIndex::Auto if n_records > TREE_THRESHOLD => SuitabilityIndex::Tree,
            SuitabilityIndex::Auto => SuitabilityIndex::Linear,
            other => other,
        }
    }
}

#[derive(Debug, Clone)]
enum Occupancy {
    Linear(Vec<Interval>),
    Tree(IntervalTree),
}

impl Occupancy {
    fn new(index: SuitabilityIndex) -> Self {
        match index {
            SuitabilityIndex::Tree => Occupancy::Tree(IntervalTree::new()),
            _ => Occupancy::Linear(Vec::new()),
        }
    }

    fn insert(&mut self, iv: Interval) {
        match self {
            Occupancy::Linear(v) => v.push(iv),
            Occupancy::Tree(t) => t.insert(iv),
        }
    }

    fn overlaps(&self, q: Interval) -> bool {
        match self {
            Occupancy::Linear(v) => v.iter().any(|iv| iv.intersects(&q)),
            Occupancy::Tree(t) => t.overlaps(q),
        }
    }

    fn gap(&self, q: Interval) -> Option<usize> {
        match self {
            Occupancy::Linear(v) => v
                .iter()
                .map(|iv| {
                    if iv.hi < q.lo {
                        q.lo - iv.hi
                    } else {
                        iv.lo.saturating_sub(q.hi)
                    }
                })
                .min(),
            Occupancy::Tree(t) => t.gap(q),
        }
    }
}

#[derive(Debug, Clone)]
struct Slot {
    size: u64,
    occupancy: Occupancy,
}

/// A shared-object plan under construction.
#[derive(Debug, Clone)]
pub struct PlanBuilder {
    index: SuitabilityIndex,
    slots: Vec<Slot>,
    assignment: BTreeMap<TensorId, ObjectId>,
}

impl PlanBuilder {
    /// `index` is resolved against `n_records` when it is `Auto`.
    pub fn new(index: SuitabilityIndex, n_records: usize) -> Self {
        PlanBuilder {
            index: index.resolve(n_records),
            slots: Vec::new(),
            assignment: BTreeMap::new(),
        }
    }

    pub fn index(&self) -> SuitabilityIndex {
        self.index
    }

    pub fn object_count(&self) -> usize {
        self.slots.len()
    }

    pub fn object_size(&self, object: ObjectId) -> u64 {
        self.slots[object].size
    }

    pub fn is_assigned(&self, tensor: TensorId) -> bool {
        self.assignment.contains_key(&tensor)
    }

    pub fn create_object(&mut self, size: u64) -> ObjectId {
        self.slots.push(Slot {
            size,
            occupancy: Occupancy::new(self.index),
        });
        self.slots.len() - 1
    }

    /// Binds `record` to `object`, growing the object if needed.
    pub fn assign(&mut self, object: ObjectId, record: &TensorUsageRecord) {
        let slot = &mut self.slots[object];
        slot.size = slot.size.max(record.size);
        slot.occupancy.insert(interval(record));
        self.assignment.insert(record.tensor_id, object);
    }

    pub fn is_suitable(&self, object: ObjectId, record: &TensorUsageRecord) -> bool {
        !self.slots[object].occupancy.overlaps(interval(record))
    }

    /// Operator-index distance between `record` and the closest interval
    /// already bound to `object`. Only meaningful when the object is suitable.
    pub fn gap(&self, object: ObjectId, record: &TensorUsageRecord) -> Option<usize> {
        self.slots[object].occupancy.gap(interval(record))
    }

    pub fn finish(self) -> SharedObjectPlan {
        SharedObjectPlan {
            objects: self
                .slots
                .iter()
                .enumerate()
                .map(|(id, s)| SharedObject { id, size: s.size })
                .collect(),
            assignment: self.assignment,
        }
    }
}

fn interval(r: &TensorUsageRecord) -> Interval {
    Interval::new(r.first_op, r.last_op)
}

/// True iff no record already bound to `object` has an interval intersecting
/// `record`'s.
pub fn is_suitable(builder: &PlanBuilder, object: ObjectId, record: &TensorUsageRecord) -> bool {
    builder.is_suitable(object, record)
}

/// Size non-increasing, then earlier first use, then smaller tensor id.
pub(crate) fn size_order(records: &[TensorUsageRecord]) -> Vec<TensorUsageRecord> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| {
        b.size
            .cmp(&a.size)
            .then(a.first_op.cmp(&b.first_op))
            .then(a.tensor_id.cmp(&b.tensor_id))
    });
    sorted
}

/// Operator indices by non-increasing breadth, ties by index.
pub(crate) fn breadth_order(profiles: &[crate::profile::OperatorProfile]) -> Vec<usize> {
    let mut ops: Vec<usize> = (0..profiles.len()).collect();
    ops.sort_by(|&a, &b| {
        profiles[b]
            .breadth
            .cmp(&profiles[a].breadth)
            .then(a.cmp(&b))
    });
    ops
}

pub fn greedy_by_breadth(records: &[TensorUsageRecord]) -> SharedObjectPlan {
    greedy_by_breadth_with(records, SuitabilityIndex::Auto)
}

/// Visits operators from the widest down and, within each profile, binds
/// still-unassigned tensors largest first. A tensor takes the smallest
/// suitable object that already fits it; failing that the largest suitable
/// object, grown to fit; failing that a new object.
pub fn greedy_by_breadth_with(
    records: &[TensorUsageRecord],
    index: SuitabilityIndex,
) -> SharedObjectPlan {
    let profiles = operator_profiles(records);
    let mut b = PlanBuilder::new(index, records.len());
    for op in breadth_order(&profiles) {
        for t in &profiles[op].records {
            if b.is_assigned(t.tensor_id) {
                continue;
            }
            let mut best: Option<ObjectId> = None;
            for obj in 0..b.object_count() {
                let obj_size = b.object_size(obj);
                let is_better = match best {
                    None => true,
                    Some(cur) => {
                        let cur_size = b.object_size(cur);
                        if cur_size < t.size {
                            obj_size > cur_size
                        } else {
                            obj_size < cur_size && obj_size >= t.size
                        }
                    }
                };
                if is_better && b.is_suitable(obj, t) {
                    best = Some(obj);
                }
            }
            let obj = best.unwrap_or_else(|| b.create_object(t.size));
            b.assign(obj, t);
        }
    }
    b.finish()
}

pub fn greedy_by_size(records: &[TensorUsageRecord]) -> SharedObjectPlan {
    greedy_by_size_with(records, SuitabilityIndex::Auto)
}

/// Largest tensors first, each into the smallest suitable object. Objects are
/// created in non-increasing size order and never grow.
pub fn greedy_by_size_with(
    records: &[TensorUsageRecord],
    index: SuitabilityIndex,
) -> SharedObjectPlan {
    let mut b = PlanBuilder::new(index, records.len());
    for t in size_order(records) {
        let mut best: Option<ObjectId> = None;
        for obj in 0..b.object_count() {
            if best.is_some_and(|cur| b.object_size(obj) >= b.object_size(cur)) {
                continue;
            }
            if b.is_suitable(obj, &t) {
                best = Some(obj);
            }
        }
        let obj = best.unwrap_or_else(|| b.create_object(t.size));
        b.assign(obj, &t);
    }
    b.finish()
}

/// Splits records into stages keyed by the distinct positional maximums
/// `d0 > d1 > ...`: sizes equal to `d0`, then strictly between `d0` and
/// `d1`, then equal to `d1`, and so on, with a final stage for anything
/// below the smallest maximum. Empty stages are dropped.
pub fn improved_stages(records: &[TensorUsageRecord]) -> Vec<Vec<TensorUsageRecord>> {
    let thresholds = positional_maximums(records).distinct();
    if thresholds.is_empty() {
        return Vec::new();
    }
    let mut stages: Vec<Vec<TensorUsageRecord>> = vec![Vec::new(); 2 * thresholds.len()];
    for r in size_order(records) {
        // thresholds is strictly decreasing; count those above r.size.
        let above = thresholds.partition_point(|&d| d > r.size);
        let stage = if above < thresholds.len() && thresholds[above] == r.size {
            2 * above
        } else {
            2 * above - 1
        };
        stages[stage].push(r);
    }
    stages.retain(|s| !s.is_empty());
    stages
}

pub fn greedy_by_size_improved(records: &[TensorUsageRecord]) -> SharedObjectPlan {
    greedy_by_size_improved_with(records, SuitabilityIndex::Auto)
}

/// Greedy by size, processed stage by stage (see [`improved_stages`]).
/// Within a stage the (tensor, suitable object) pair with the smallest idle
/// gap on the object is bound first; ties go to the smaller object id, then
/// the smaller tensor id. When no remaining tensor of the stage fits any
/// object, the largest one opens a new object and the search resumes.
pub fn greedy_by_size_improved_with(
    records: &[TensorUsageRecord],
    index: SuitabilityIndex,
) -> SharedObjectPlan {
    let mut b = PlanBuilder::new(index, records.len());
    for stage in improved_stages(records) {
        let mut remaining = stage;
        while !remaining.is_empty() {
            let mut best: Option<(usize, ObjectId, TensorId, usize)> = None;
            for (pos, t) in remaining.iter().enumerate() {
                for obj in 0..b.object_count() {
                    if !b.is_suitable(obj, t) {
                        continue;
                    }
                    let gap = b.gap(obj, t).unwrap_or(usize::MAX);
                    let key = (gap, obj, t.tensor_id, pos);
                    if best.is_none_or(|cur| key < cur) {
                        best = Some(key);
                    }
                }
            }
            match best {
                Some((_, obj, _, pos)) => {
                    let t = remaining.remove(pos);
                    b.assign(obj, &t);
                }
                None => {
                    let t = remaining.remove(0);
                    let obj = b.create_object(t.size);
                    b.assign(obj, &t);
                }
            }
        }
    }
    b.finish()
}

/// Set of tensors bound to each object, for diagnostics and rendering.
pub fn members(plan: &SharedObjectPlan) -> BTreeMap<ObjectId, Vec<TensorId>> {
    let mut out: BTreeMap<ObjectId, Vec<TensorId>> = BTreeMap::new();
    for (&t, &o) in &plan.assignment {
        out.entry(o).or_default().push(t);
    }
    out
}
