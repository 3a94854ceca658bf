//! Seeded synthetic graphs and record lists.
//!
//! Graphs are built as a spine of operators, each consuming the previous
//! operator's main output, plus optional side tensors between neighbours and
//! optional long-range (residual) consumers. Every edge points forward, so
//! the result is acyclic by construction.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelDocument, OperatorSpec, TensorSpec, TensorUsageRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub seed: u64,
    pub n_ops: usize,
    /// Intermediate tensors; at least `n_ops - 1` to form the spine.
    pub n_tensors: usize,
    pub max_size: u64,
    pub residual_prob: f64,
}

pub fn generate_model(p: &GenParams) -> Result<ModelDocument, GenerateError> {
    if p.n_ops < 2 {
        return Err(GenerateError::Infeasible(
            "need at least 2 operators".into(),
        ));
    }
    if p.n_tensors < p.n_ops - 1 {
        return Err(GenerateError::Infeasible(format!(
            "{} operators need at least {} intermediate tensors",
            p.n_ops,
            p.n_ops - 1
        )));
    }
    if p.max_size == 0 {
        return Err(GenerateError::Infeasible(
            "max size must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p.residual_prob) {
        return Err(GenerateError::Infeasible(
            "residual probability outside [0, 1]".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let input_id = 0u64;
    let output_id = p.n_tensors as u64 + 1;
    let mut inputs: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); p.n_ops];
    let mut outputs: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); p.n_ops];
    inputs[0].insert(input_id);
    outputs[p.n_ops - 1].insert(output_id);

    let mut producer = Vec::with_capacity(p.n_tensors);
    for t in 1..=p.n_tensors as u64 {
        let prod = if (t as usize) < p.n_ops {
            t as usize - 1
        } else {
            rng.gen_range(0..p.n_ops - 1)
        };
        outputs[prod].insert(t);
        inputs[prod + 1].insert(t);
        producer.push(prod);
    }
    for (i, &prod) in producer.iter().enumerate() {
        if prod + 2 < p.n_ops && rng.gen_bool(p.residual_prob) {
            let far = rng.gen_range(prod + 2..p.n_ops);
            inputs[far].insert(i as u64 + 1);
        }
    }

    let mut tensors = Vec::with_capacity(p.n_tensors + 2);
    tensors.push(TensorSpec {
        id: input_id,
        size: rng.gen_range(1..=p.max_size) as i64,
        boundary: true,
    });
    for t in 1..=p.n_tensors as u64 {
        tensors.push(TensorSpec {
            id: t,
            size: rng.gen_range(1..=p.max_size) as i64,
            boundary: false,
        });
    }
    tensors.push(TensorSpec {
        id: output_id,
        size: rng.gen_range(1..=p.max_size) as i64,
        boundary: true,
    });

    let operators = (0..p.n_ops)
        .map(|i| OperatorSpec {
            id: i as u64,
            inputs: inputs[i].iter().copied().collect(),
            outputs: outputs[i].iter().copied().collect(),
        })
        .collect();
    Ok(ModelDocument { tensors, operators })
}

/// Instance `seed` of the standard corpus: up to 64 intermediate tensors with
/// residual edges.
pub fn standard_params(seed: u64) -> GenParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let n_ops = rng.gen_range(4..=40);
    let n_tensors = rng.gen_range(n_ops - 1..=64);
    GenParams {
        seed,
        n_ops,
        n_tensors,
        max_size: 1 << 16,
        residual_prob: 0.3,
    }
}

/// Instance `seed` of the small corpus: at most 8 intermediate tensors, small
/// enough for the exhaustive solvers.
pub fn small_params(seed: u64) -> GenParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0005_3a11);
    let n_ops = rng.gen_range(3..=7);
    let n_tensors = rng.gen_range(n_ops - 1..=8);
    GenParams {
        seed,
        n_ops,
        n_tensors,
        max_size: 1 << 12,
        residual_prob: 0.4,
    }
}

pub fn instance_name(prefix: &str, seed: u64) -> String {
    format!("{prefix}-{seed:04}")
}

/// `depth` tensors of equal size, each live across two neighbouring
/// operators: t_i spans [i, i+1].
pub fn chain_records(depth: usize, size: u64) -> Vec<TensorUsageRecord> {
    (0..depth)
        .map(|i| TensorUsageRecord::new(i as u64, i, i + 1, size))
        .collect()
}

/// Graph document of a pure chain with `depth` intermediate tensors.
pub fn chain_model(depth: usize, size: u64) -> ModelDocument {
    let tensors = (0..=depth as u64 + 1)
        .map(|id| TensorSpec {
            id,
            size: size as i64,
            boundary: id == 0 || id == depth as u64 + 1,
        })
        .collect();
    let operators = (0..=depth as u64)
        .map(|i| OperatorSpec {
            id: i,
            inputs: vec![i],
            outputs: vec![i + 1],
        })
        .collect();
    ModelDocument { tensors, operators }
}

/// `n` records with random intervals inside `n_ops` operators and sizes in
/// `1..=max_size`.
pub fn random_records(seed: u64, n: usize, n_ops: usize, max_size: u64) -> Vec<TensorUsageRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_ops = n_ops.max(1);
    (0..n as u64)
        .map(|id| {
            let first = rng.gen_range(0..n_ops);
            let span = rng.gen_range(0..=n_ops / 3);
            let last = (first + span).min(n_ops - 1);
            TensorUsageRecord::new(id, first, last, rng.gen_range(1..=max_size))
        })
        .collect()
}
