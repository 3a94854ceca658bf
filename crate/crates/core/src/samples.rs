//! A small bundled network used in docs, tests and rendering goldens.
//!
//! Nine operators and eight intermediate tensors. Operator 3 holds tensors of
//! sizes 36, 28 and 16 (breadth 80), and the third-largest sizes of the
//! operators that hold at least three tensors are 16, 16, 16 and 10.

use crate::model::{ModelDocument, RecordsDocument, TensorUsageRecord};

pub const SAMPLE_NETWORK_RECORDS_JSON: &str = include_str!("../data/sample_network_records.json");
pub const SAMPLE_NETWORK_MODEL_JSON: &str = include_str!("../data/sample_network_model.json");

pub fn sample_network() -> Vec<TensorUsageRecord> {
    let doc: RecordsDocument =
        serde_json::from_str(SAMPLE_NETWORK_RECORDS_JSON).expect("bundled records parse");
    doc.records
}

pub fn sample_network_model() -> ModelDocument {
    serde_json::from_str(SAMPLE_NETWORK_MODEL_JSON).expect("bundled model parses")
}
