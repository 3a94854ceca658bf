//! Lower bounds on the footprint of any valid plan.

use serde::{Deserialize, Serialize};

use crate::model::TensorUsageRecord;
use crate::profile::{operator_breadths, operator_profiles, positional_maximums};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub shared_lower_bound: u64,
    pub offset_lower_bound: u64,
    pub max_profile_cardinality: usize,
}

/// Sum of all positional maximums. The i-th largest shared object can be no
/// smaller than the i-th positional maximum.
pub fn shared_objects_lower_bound(records: &[TensorUsageRecord]) -> u64 {
    positional_maximums(records).sum()
}

/// Largest operator breadth: every tensor of that profile is resident at once.
pub fn offset_lower_bound(records: &[TensorUsageRecord]) -> u64 {
    operator_breadths(records).into_iter().max().unwrap_or(0)
}

pub fn naive_footprint(records: &[TensorUsageRecord]) -> u64 {
    records.iter().map(|r| r.size).sum()
}

pub fn bounds(records: &[TensorUsageRecord]) -> BoundsReport {
    BoundsReport {
        shared_lower_bound: shared_objects_lower_bound(records),
        offset_lower_bound: offset_lower_bound(records),
        max_profile_cardinality: operator_profiles(records)
            .iter()
            .map(|p| p.len())
            .max()
            .unwrap_or(0),
    }
}
