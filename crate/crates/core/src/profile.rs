//! Operator profiles, breadths and positional maximums.

use crate::model::{operator_count, TensorUsageRecord};

/// All records live at one operator, largest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorProfile {
    pub op_index: usize,
    pub records: Vec<TensorUsageRecord>,
    pub breadth: u64,
}

impl OperatorProfile {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Size non-increasing, then tensor id ascending.
pub(crate) fn by_size_desc(a: &TensorUsageRecord, b: &TensorUsageRecord) -> std::cmp::Ordering {
    b.size.cmp(&a.size).then(a.tensor_id.cmp(&b.tensor_id))
}

pub fn operator_profile(records: &[TensorUsageRecord], op_index: usize) -> OperatorProfile {
    let mut members: Vec<TensorUsageRecord> = records
        .iter()
        .filter(|r| r.covers(op_index))
        .copied()
        .collect();
    members.sort_by(by_size_desc);
    let breadth = members.iter().map(|r| r.size).sum();
    OperatorProfile {
        op_index,
        records: members,
        breadth,
    }
}

/// Profiles of every operator index spanned by `records`, built in one sweep.
pub fn operator_profiles(records: &[TensorUsageRecord]) -> Vec<OperatorProfile> {
    let n_ops = operator_count(records);
    let mut buckets: Vec<Vec<TensorUsageRecord>> = vec![Vec::new(); n_ops];
    for r in records {
        for bucket in &mut buckets[r.first_op..=r.last_op] {
            bucket.push(*r);
        }
    }
    buckets
        .into_iter()
        .enumerate()
        .map(|(op_index, mut members)| {
            members.sort_by(by_size_desc);
            let breadth = members.iter().map(|r| r.size).sum();
            OperatorProfile {
                op_index,
                records: members,
                breadth,
            }
        })
        .collect()
}

/// Breadth of every operator index, via a difference array.
pub fn operator_breadths(records: &[TensorUsageRecord]) -> Vec<u64> {
    let n_ops = operator_count(records);
    let mut delta = vec![0i128; n_ops + 1];
    for r in records {
        delta[r.first_op] += r.size as i128;
        delta[r.last_op + 1] -= r.size as i128;
    }
    let mut running = 0i128;
    delta[..n_ops]
        .iter()
        .map(|d| {
            running += d;
            running as u64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PositionalMaximums {
    pub values: Vec<u64>,
}

impl PositionalMaximums {
    pub fn sum(&self) -> u64 {
        self.values.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Distinct values, largest first.
    pub fn distinct(&self) -> Vec<u64> {
        let mut v = self.values.clone();
        v.dedup();
        v
    }
}

pub fn positional_maximums(records: &[TensorUsageRecord]) -> PositionalMaximums {
    let mut values: Vec<u64> = Vec::new();
    for profile in operator_profiles(records) {
        for (i, r) in profile.records.iter().enumerate() {
            match values.get_mut(i) {
                Some(v) => *v = (*v).max(r.size),
                None => values.push(r.size),
            }
        }
    }
    PositionalMaximums { values }
}
