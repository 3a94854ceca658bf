//! Static memory planning for neural-net inference graphs.
//!
//! Intermediate tensors are reduced to usage records (first and last
//! operator index in a fixed execution order, plus an aligned size). From
//! those records this crate computes lower bounds, assigns tensors either to
//! reusable shared objects or to offsets in a single arena, validates the
//! result and, for small instances, finds the exact optimum.
//!
//! ```
//! use memplan::{generate::chain_records, offsets::greedy_by_size_offsets, bounds};
//!
//! let records = chain_records(5, 64);
//! let plan = greedy_by_size_offsets(&records);
//! assert_eq!(plan.footprint, 128);
//! assert_eq!(bounds::offset_lower_bound(&records), 128);
//! ```

pub mod bench;
pub mod bounds;
pub mod generate;
pub mod interval_tree;
pub mod model;
pub mod offsets;
pub mod oracle;
pub mod plan;
pub mod profile;
pub mod published;
pub mod render;
pub mod samples;
pub mod shared;
pub mod verify;

pub use bounds::BoundsReport;
pub use model::{InputDocument, NetworkModel, TensorUsageRecord};
pub use offsets::OffsetPlan;
pub use plan::{Mode, Plan, PlanDocument, Strategy};
pub use shared::{SharedObjectPlan, SuitabilityIndex};
pub use verify::ValidationReport;
