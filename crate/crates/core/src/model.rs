//! Computation graphs, their fixed execution order and the tensor usage
//! records derived from it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type TensorId = u64;
pub type OpId = u64;

/// Alignment applied to tensor sizes derived from a graph document.
pub const DEFAULT_ALIGNMENT: u64 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("cycle detected among operators {0:?}")]
    Cycle(Vec<OpId>),
    #[error("dangling tensor reference: operator {op} uses unknown tensor {tensor}")]
    DanglingTensor { op: OpId, tensor: TensorId },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u64 },
    #[error("non-positive size {size} for tensor {tensor}")]
    NonPositiveSize { tensor: TensorId, size: i64 },
    #[error("multiple producers for tensor {tensor}: operators {first} and {second}")]
    MultipleProducers {
        tensor: TensorId,
        first: OpId,
        second: OpId,
    },
    #[error("intermediate tensor {0} has no producing operator")]
    MissingProducer(TensorId),
    #[error("invalid usage interval for tensor {tensor}: first {first} > last {last}")]
    InvalidInterval {
        tensor: TensorId,
        first: usize,
        last: usize,
    },
    #[error("alignment must be positive")]
    ZeroAlignment,
    #[error("malformed document: {0}")]
    Malformed(String),
}

/// The inclusive range of execution-order indices during which a tensor is
/// resident, plus its aligned size in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TensorUsageRecord {
    #[serde(rename = "id")]
    pub tensor_id: TensorId,
    #[serde(rename = "first")]
    pub first_op: usize,
    #[serde(rename = "last")]
    pub last_op: usize,
    pub size: u64,
}

impl TensorUsageRecord {
    pub fn new(tensor_id: TensorId, first_op: usize, last_op: usize, size: u64) -> Self {
        TensorUsageRecord {
            tensor_id,
            first_op,
            last_op,
            size,
        }
    }

    /// Inclusive interval intersection; touching at one operator counts.
    #[inline]
    pub fn intersects(&self, other: &TensorUsageRecord) -> bool {
        self.first_op.max(other.first_op) <= self.last_op.min(other.last_op)
    }

    #[inline]
    pub fn covers(&self, op_index: usize) -> bool {
        self.first_op <= op_index && op_index <= self.last_op
    }
}

impl fmt::Display for TensorUsageRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t{}[{}..={}]:{}",
            self.tensor_id, self.first_op, self.last_op, self.size
        )
    }
}

/// Number of operator slots spanned by a record list.
pub fn operator_count(records: &[TensorUsageRecord]) -> usize {
    records.iter().map(|r| r.last_op + 1).max().unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub id: TensorId,
    pub size: i64,
    #[serde(default)]
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub id: OpId,
    #[serde(default)]
    pub inputs: Vec<TensorId>,
    #[serde(default)]
    pub outputs: Vec<TensorId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub tensors: Vec<TensorSpec>,
    pub operators: Vec<OperatorSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordsDocument {
    pub records: Vec<TensorUsageRecord>,
}

/// Either a full graph or a pre-computed list of usage records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputDocument {
    Records(RecordsDocument),
    Model(ModelDocument),
}

impl InputDocument {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))
    }

    /// Resolves the document into a validated, sorted record list. Graph
    /// documents get sizes rounded up to `alignment`; raw records are taken
    /// as already aligned.
    pub fn into_records(self, alignment: u64) -> Result<Vec<TensorUsageRecord>, ModelError> {
        match self {
            InputDocument::Records(doc) => validate_records(doc.records),
            InputDocument::Model(doc) => {
                let model = parse_model(doc)?;
                let order = execution_order(&model);
                usage_records(&model, &order, alignment)
            }
        }
    }
}

/// Checks raw records and returns them sorted by tensor id.
pub fn validate_records(
    mut records: Vec<TensorUsageRecord>,
) -> Result<Vec<TensorUsageRecord>, ModelError> {
    let mut seen = BTreeSet::new();
    for r in &records {
        if !seen.insert(r.tensor_id) {
            return Err(ModelError::DuplicateId {
                kind: "tensor",
                id: r.tensor_id,
            });
        }
        if r.size == 0 {
            return Err(ModelError::NonPositiveSize {
                tensor: r.tensor_id,
                size: 0,
            });
        }
        if r.first_op > r.last_op {
            return Err(ModelError::InvalidInterval {
                tensor: r.tensor_id,
                first: r.first_op,
                last: r.last_op,
            });
        }
    }
    records.sort_by_key(|r| r.tensor_id);
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tensor {
    pub id: TensorId,
    pub size: u64,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operator {
    pub id: OpId,
    pub inputs: Vec<TensorId>,
    pub outputs: Vec<TensorId>,
}

/// A validated operator DAG. Operators and tensors are kept sorted by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkModel {
    operators: Vec<Operator>,
    tensors: BTreeMap<TensorId, Tensor>,
    producer: BTreeMap<TensorId, usize>,
}

impl NetworkModel {
    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn tensor(&self, id: TensorId) -> Option<&Tensor> {
        self.tensors.get(&id)
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor> {
        self.tensors.values()
    }

    pub fn intermediate_count(&self) -> usize {
        self.tensors.values().filter(|t| !t.boundary).count()
    }

    /// Operator positions (into `operators()`) that consume some output of
    /// the operator at `pos`, sorted and deduplicated.
    fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![BTreeSet::new(); self.operators.len()];
        for (pos, op) in self.operators.iter().enumerate() {
            for t in &op.inputs {
                if let Some(&p) = self.producer.get(t) {
                    if p != pos {
                        succ[p].insert(pos);
                    }
                }
            }
        }
        succ.into_iter().map(|s| s.into_iter().collect()).collect()
    }
}

pub fn parse_model(doc: ModelDocument) -> Result<NetworkModel, ModelError> {
    let mut tensors = BTreeMap::new();
    for t in &doc.tensors {
        if t.size <= 0 {
            return Err(ModelError::NonPositiveSize {
                tensor: t.id,
                size: t.size,
            });
        }
        let tensor = Tensor {
            id: t.id,
            size: t.size as u64,
            boundary: t.boundary,
        };
        if tensors.insert(t.id, tensor).is_some() {
            return Err(ModelError::DuplicateId {
                kind: "tensor",
                id: t.id,
            });
        }
    }

    let mut operators: Vec<Operator> = doc
        .operators
        .into_iter()
        .map(|o| Operator {
            id: o.id,
            inputs: o.inputs,
            outputs: o.outputs,
        })
        .collect();
    operators.sort_by_key(|o| o.id);
    for pair in operators.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(ModelError::DuplicateId {
                kind: "operator",
                id: pair[0].id,
            });
        }
    }

    let mut producer: BTreeMap<TensorId, usize> = BTreeMap::new();
    for (pos, op) in operators.iter().enumerate() {
        for &t in op.inputs.iter().chain(&op.outputs) {
            if !tensors.contains_key(&t) {
                return Err(ModelError::DanglingTensor {
                    op: op.id,
                    tensor: t,
                });
            }
        }
        let mut outs = BTreeSet::new();
        for &t in &op.outputs {
            if !outs.insert(t) {
                continue;
            }
            if let Some(&prev) = producer.get(&t) {
                return Err(ModelError::MultipleProducers {
                    tensor: t,
                    first: operators[prev].id,
                    second: op.id,
                });
            }
            producer.insert(t, pos);
        }
    }
    for t in tensors.values() {
        if !t.boundary && !producer.contains_key(&t.id) {
            return Err(ModelError::MissingProducer(t.id));
        }
    }

    let model = NetworkModel {
        operators,
        tensors,
        producer,
    };
    let order = kahn_order(&model);
    if order.len() != model.operators.len() {
        let placed: BTreeSet<usize> = order.into_iter().collect();
        let stuck = (0..model.operators.len())
            .filter(|p| !placed.contains(p))
            .map(|p| model.operators[p].id)
            .collect();
        return Err(ModelError::Cycle(stuck));
    }
    Ok(model)
}

/// Kahn's algorithm with the smallest ready operator id first. Returns
/// positions into `model.operators`; shorter than the operator list iff the
/// graph has a cycle.
fn kahn_order(model: &NetworkModel) -> Vec<usize> {
    let succ = model.successors();
    let mut indegree = vec![0usize; succ.len()];
    for s in &succ {
        for &v in s {
            indegree[v] += 1;
        }
    }
    // Operators are sorted by id, so the smallest position is the smallest id.
    let mut ready: BTreeSet<usize> = (0..succ.len()).filter(|&p| indegree[p] == 0).collect();
    let mut order = Vec::with_capacity(succ.len());
    while let Some(pos) = ready.pop_first() {
        order.push(pos);
        for &v in &succ[pos] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                ready.insert(v);
            }
        }
    }
    order
}

/// The fixed execution order used by every downstream computation.
pub fn execution_order(model: &NetworkModel) -> Vec<OpId> {
    kahn_order(model)
        .into_iter()
        .map(|p| model.operators[p].id)
        .collect()
}

pub fn align_size(size: u64, alignment: u64) -> u64 {
    size.div_ceil(alignment) * alignment
}

/// One record per intermediate tensor, sorted by tensor id.
pub fn usage_records(
    model: &NetworkModel,
    order: &[OpId],
    alignment: u64,
) -> Result<Vec<TensorUsageRecord>, ModelError> {
    if alignment == 0 {
        return Err(ModelError::ZeroAlignment);
    }
    let by_id: HashMap<OpId, &Operator> = model.operators.iter().map(|o| (o.id, o)).collect();
    let mut span: BTreeMap<TensorId, (usize, usize)> = BTreeMap::new();
    let mut consumed: BTreeSet<TensorId> = BTreeSet::new();
    for (index, op_id) in order.iter().enumerate() {
        let op = by_id[op_id];
        for &t in op.inputs.iter().chain(&op.outputs) {
            let entry = span.entry(t).or_insert((index, index));
            entry.0 = entry.0.min(index);
            entry.1 = entry.1.max(index);
        }
        consumed.extend(op.inputs.iter().copied());
    }

    let mut records = Vec::new();
    for tensor in model.tensors.values().filter(|t| !t.boundary) {
        let Some(&(first, last)) = span.get(&tensor.id) else {
            continue;
        };
        if !consumed.contains(&tensor.id) {
            log::warn!(
                "tensor {} is produced but never consumed; kept alive at its producer only",
                tensor.id
            );
        }
        records.push(TensorUsageRecord::new(
            tensor.id,
            first,
            last,
            align_size(tensor.size, alignment),
        ));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor(id: TensorId, size: i64, boundary: bool) -> TensorSpec {
        TensorSpec { id, size, boundary }
    }

    fn op(id: OpId, inputs: &[TensorId], outputs: &[TensorId]) -> OperatorSpec {
        OperatorSpec {
            id,
            inputs: inputs.to_vec(),
            outputs: outputs.to_vec(),
        }
    }

    fn chain3() -> ModelDocument {
        ModelDocument {
            tensors: vec![
                tensor(0, 10, true),
                tensor(1, 10, false),
                tensor(2, 10, false),
                tensor(3, 10, true),
            ],
            operators: vec![op(0, &[0], &[1]), op(1, &[1], &[2]), op(2, &[2], &[3])],
        }
    }

    #[test]
    fn two_op_chain_has_one_intermediate() {
        let doc = ModelDocument {
            tensors: vec![tensor(0, 4, true), tensor(1, 4, false), tensor(2, 4, true)],
            operators: vec![op(0, &[0], &[1]), op(1, &[1], &[2])],
        };
        let model = parse_model(doc).unwrap();
        assert_eq!(model.intermediate_count(), 1);
    }

    #[test]
    fn rejects_zero_size() {
        let mut doc = chain3();
        doc.tensors[1].size = 0;
        let err = parse_model(doc).unwrap_err();
        assert!(matches!(
            err,
            ModelError::NonPositiveSize { tensor: 1, size: 0 }
        ));
        assert!(err.to_string().contains("non-positive size"));
    }

    #[test]
    fn rejects_two_cycle() {
        let doc = ModelDocument {
            tensors: vec![tensor(1, 4, false), tensor(2, 4, false)],
            operators: vec![op(0, &[2], &[1]), op(1, &[1], &[2])],
        };
        let err = parse_model(doc).unwrap_err();
        assert_eq!(err, ModelError::Cycle(vec![0, 1]));
        assert!(err.to_string().contains("cycle detected"));
    }

    #[test]
    fn rejects_structural_errors() {
        let mut doc = chain3();
        doc.operators[1].inputs.push(42);
        assert!(matches!(
            parse_model(doc).unwrap_err(),
            ModelError::DanglingTensor { op: 1, tensor: 42 }
        ));

        let mut doc = chain3();
        doc.tensors.push(tensor(2, 5, false));
        assert!(matches!(
            parse_model(doc).unwrap_err(),
            ModelError::DuplicateId {
                kind: "tensor",
                id: 2
            }
        ));

        let mut doc = chain3();
        doc.operators.push(op(1, &[], &[]));
        assert!(matches!(
            parse_model(doc).unwrap_err(),
            ModelError::DuplicateId {
                kind: "operator",
                id: 1
            }
        ));

        let mut doc = chain3();
        doc.operators[2].outputs.push(1);
        assert!(matches!(
            parse_model(doc).unwrap_err(),
            ModelError::MultipleProducers {
                tensor: 1,
                first: 0,
                second: 2
            }
        ));

        let mut doc = chain3();
        doc.tensors.push(tensor(9, 5, false));
        assert_eq!(
            parse_model(doc).unwrap_err(),
            ModelError::MissingProducer(9)
        );
    }

    #[test]
    fn chain_order_is_forced() {
        let model = parse_model(chain3()).unwrap();
        assert_eq!(execution_order(&model), vec![0, 1, 2]);
    }

    #[test]
    fn diamond_ties_break_by_smallest_id() {
        let doc = ModelDocument {
            tensors: [0, 1, 2, 4, 5]
                .iter()
                .map(|&i| tensor(i, 8, i == 0 || i == 5))
                .collect(),
            operators: vec![
                op(3, &[2, 4], &[5]),
                op(2, &[1], &[4]),
                op(1, &[1], &[2]),
                op(0, &[0], &[1]),
            ],
        };
        let model = parse_model(doc).unwrap();
        assert_eq!(execution_order(&model), vec![0, 1, 2, 3]);
    }

    #[test]
    fn fork_with_reversed_ids_schedules_smaller_first() {
        let doc = ModelDocument {
            tensors: (0..4).map(|i| tensor(i, 8, i == 0)).collect(),
            operators: vec![op(9, &[0], &[1]), op(5, &[1], &[2]), op(2, &[1], &[3])],
        };
        let model = parse_model(doc).unwrap();
        assert_eq!(execution_order(&model), vec![9, 2, 5]);
    }

    #[test]
    fn chain_records() {
        let model = parse_model(chain3()).unwrap();
        let order = execution_order(&model);
        let records = usage_records(&model, &order, 1).unwrap();
        assert_eq!(
            records,
            vec![
                TensorUsageRecord::new(1, 0, 1, 10),
                TensorUsageRecord::new(2, 1, 2, 10)
            ]
        );
        let aligned = usage_records(&model, &order, 64).unwrap();
        assert!(aligned.iter().all(|r| r.size == 64));
    }

    #[test]
    fn residual_extends_to_last_consumer() {
        let doc = ModelDocument {
            tensors: (0..5).map(|i| tensor(i, 8, i == 0 || i == 4)).collect(),
            operators: vec![
                op(0, &[0], &[1]),
                op(1, &[1], &[2]),
                op(2, &[2], &[3]),
                op(3, &[1, 3], &[4]),
            ],
        };
        let model = parse_model(doc).unwrap();
        let records = usage_records(&model, &execution_order(&model), 1).unwrap();
        let t1 = records.iter().find(|r| r.tensor_id == 1).unwrap();
        assert_eq!((t1.first_op, t1.last_op), (0, 3));
    }

    #[test]
    fn unused_output_lives_at_producer_only() {
        let doc = ModelDocument {
            tensors: (0..4).map(|i| tensor(i, 8, i == 0 || i == 3)).collect(),
            operators: vec![op(0, &[0], &[1, 2]), op(1, &[1], &[3])],
        };
        let model = parse_model(doc).unwrap();
        let records = usage_records(&model, &execution_order(&model), 1).unwrap();
        let t2 = records.iter().find(|r| r.tensor_id == 2).unwrap();
        assert_eq!((t2.first_op, t2.last_op), (0, 0));
    }

    #[test]
    fn in_place_tensor_gets_normal_interval() {
        let doc = ModelDocument {
            tensors: (0..3).map(|i| tensor(i, 8, i != 1)).collect(),
            operators: vec![op(0, &[0, 1], &[1]), op(1, &[1], &[2])],
        };
        let model = parse_model(doc).unwrap();
        assert_eq!(execution_order(&model), vec![0, 1]);
        let records = usage_records(&model, &[0, 1], 1).unwrap();
        assert_eq!(records, vec![TensorUsageRecord::new(1, 0, 1, 8)]);
    }

    #[test]
    fn document_forms() {
        let raw = r#"{"records":[{"id":3,"first":2,"last":4,"size":7},{"id":1,"first":0,"last":1,"size":5}]}"#;
        let recs = InputDocument::from_json(raw)
            .unwrap()
            .into_records(64)
            .unwrap();
        assert_eq!(recs[0], TensorUsageRecord::new(1, 0, 1, 5));
        assert_eq!(recs[1].size, 7);

        let bad = r#"{"records":[{"id":3,"first":5,"last":4,"size":7}]}"#;
        assert!(matches!(
            InputDocument::from_json(bad).unwrap().into_records(1),
            Err(ModelError::InvalidInterval { .. })
        ));

        let graph = r#"{"tensors":[{"id":0,"size":3,"boundary":true},{"id":1,"size":3}],
                        "operators":[{"id":0,"inputs":[0],"outputs":[1]},{"id":1,"inputs":[1],"outputs":[]}]}"#;
        let recs = InputDocument::from_json(graph)
            .unwrap()
            .into_records(4)
            .unwrap();
        assert_eq!(recs, vec![TensorUsageRecord::new(1, 0, 1, 4)]);
    }

    #[test]
    fn alignment_rounds_up() {
        assert_eq!(align_size(1, 64), 64);
        assert_eq!(align_size(64, 64), 64);
        assert_eq!(align_size(65, 64), 128);
        assert_eq!(align_size(7, 1), 7);
    }
}
