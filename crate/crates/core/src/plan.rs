//! Strategy selection and the JSON plan document.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{TensorId, TensorUsageRecord};
use crate::offsets::{
    greedy_by_breadth_offsets, greedy_by_size_offsets, naive_plan, offsets_from_shared, OffsetPlan,
};
use crate::shared::{
    greedy_by_breadth_with, greedy_by_size_improved_with, greedy_by_size_with, ObjectId,
    SharedObject, SharedObjectPlan, SuitabilityIndex,
};
use crate::verify::{validate_offsets, validate_shared_claim, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Shared,
    Offsets,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Shared => "shared",
            Mode::Offsets => "offsets",
        })
    }
}

impl FromStr for Mode {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shared" => Ok(Mode::Shared),
            "offsets" => Ok(Mode::Offsets),
            other => Err(PlanError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("unknown mode '{0}' (expected shared or offsets)")]
    UnknownMode(String),
    #[error("unknown strategy '{0}'")]
    UnknownStrategy(String),
    #[error("strategy '{strategy}' is not available in {mode} mode")]
    ModeMismatch { strategy: String, mode: Mode },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SharedStrategy {
    GreedyByBreadth,
    GreedyBySize,
    GreedyBySizeImproved,
}

impl SharedStrategy {
    pub const ALL: [SharedStrategy; 3] = [
        SharedStrategy::GreedyByBreadth,
        SharedStrategy::GreedyBySize,
        SharedStrategy::GreedyBySizeImproved,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SharedStrategy::GreedyByBreadth => "greedy-by-breadth",
            SharedStrategy::GreedyBySize => "greedy-by-size",
            SharedStrategy::GreedyBySizeImproved => "greedy-by-size-improved",
        }
    }

    pub fn run(self, records: &[TensorUsageRecord], index: SuitabilityIndex) -> SharedObjectPlan {
        match self {
            SharedStrategy::GreedyByBreadth => greedy_by_breadth_with(records, index),
            SharedStrategy::GreedyBySize => greedy_by_size_with(records, index),
            SharedStrategy::GreedyBySizeImproved => greedy_by_size_improved_with(records, index),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|st| st.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Shared(SharedStrategy),
    GreedyBySizeOffsets,
    GreedyByBreadthOffsets,
    Naive,
    /// A shared-object strategy laid out contiguously.
    Converted(SharedStrategy),
}

impl Strategy {
    /// The five planning strategies, shared first.
    pub const GREEDY: [Strategy; 5] = [
        Strategy::Shared(SharedStrategy::GreedyByBreadth),
        Strategy::Shared(SharedStrategy::GreedyBySize),
        Strategy::Shared(SharedStrategy::GreedyBySizeImproved),
        Strategy::GreedyBySizeOffsets,
        Strategy::GreedyByBreadthOffsets,
    ];

    pub fn mode(self) -> Mode {
        match self {
            Strategy::Shared(_) => Mode::Shared,
            _ => Mode::Offsets,
        }
    }

    pub fn name(self) -> String {
        match self {
            Strategy::Shared(s) => s.name().to_string(),
            Strategy::GreedyBySizeOffsets => "greedy-by-size-offsets".into(),
            Strategy::GreedyByBreadthOffsets => "greedy-by-breadth-offsets".into(),
            Strategy::Naive => "naive".into(),
            Strategy::Converted(s) => format!("shared:{}", s.name()),
        }
    }

    /// Parses a strategy name in the context of `mode`. In offsets mode the
    /// bare names `greedy-by-size` and `greedy-by-breadth` select the offset
    /// variants.
    pub fn parse(name: &str, mode: Mode) -> Result<Strategy, PlanError> {
        let mismatch = || PlanError::ModeMismatch {
            strategy: name.to_string(),
            mode,
        };
        let offsets_only = match name {
            "greedy-by-size-offsets" => Some(Strategy::GreedyBySizeOffsets),
            "greedy-by-breadth-offsets" => Some(Strategy::GreedyByBreadthOffsets),
            "naive" => Some(Strategy::Naive),
            _ => match name.strip_prefix("shared:") {
                Some(inner) => Some(Strategy::Converted(
                    SharedStrategy::parse(inner)
                        .ok_or_else(|| PlanError::UnknownStrategy(name.to_string()))?,
                )),
                None => None,
            },
        };
        match (mode, offsets_only, SharedStrategy::parse(name)) {
            (Mode::Offsets, Some(s), _) => Ok(s),
            (Mode::Shared, Some(_), _) => Err(mismatch()),
            (Mode::Shared, None, Some(s)) => Ok(Strategy::Shared(s)),
            (Mode::Offsets, None, Some(SharedStrategy::GreedyBySize)) => {
                Ok(Strategy::GreedyBySizeOffsets)
            }
            (Mode::Offsets, None, Some(SharedStrategy::GreedyByBreadth)) => {
                Ok(Strategy::GreedyByBreadthOffsets)
            }
            (Mode::Offsets, None, Some(_)) => Err(mismatch()),
            (_, None, None) => Err(PlanError::UnknownStrategy(name.to_string())),
        }
    }

    pub fn run(self, records: &[TensorUsageRecord], index: SuitabilityIndex) -> Plan {
        match self {
            Strategy::Shared(s) => Plan::Shared(s.run(records, index)),
            Strategy::GreedyBySizeOffsets => Plan::Offsets(greedy_by_size_offsets(records)),
            Strategy::GreedyByBreadthOffsets => Plan::Offsets(greedy_by_breadth_offsets(records)),
            Strategy::Naive => Plan::Offsets(naive_plan(records)),
            Strategy::Converted(s) => {
                let shared = s.run(records, index);
                // Planner output always validates; a failure here is a bug
                // the caller's validation will report.
                Plan::Offsets(offsets_from_shared(&shared, records).unwrap_or_default())
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Plan {
    Shared(SharedObjectPlan),
    Offsets(OffsetPlan),
}

impl Plan {
    pub fn mode(&self) -> Mode {
        match self {
            Plan::Shared(_) => Mode::Shared,
            Plan::Offsets(_) => Mode::Offsets,
        }
    }

    pub fn footprint(&self) -> u64 {
        match self {
            Plan::Shared(p) => p.footprint(),
            Plan::Offsets(p) => p.footprint,
        }
    }

    pub fn validate(&self, records: &[TensorUsageRecord]) -> ValidationReport {
        match self {
            Plan::Shared(p) => validate_shared_claim(p, p.footprint(), records),
            Plan::Offsets(p) => validate_offsets(p, records),
        }
    }

    pub fn to_document(&self) -> PlanDocument {
        match self {
            Plan::Shared(p) => PlanDocument::Shared {
                objects: p.objects.clone(),
                assignment: p.assignment.clone(),
                footprint: p.footprint(),
            },
            Plan::Offsets(p) => PlanDocument::Offsets {
                assignment: p.assignment.clone(),
                footprint: p.footprint,
            },
        }
    }
}

/// Wire form of a plan. The footprint is whatever the document claims; see
/// [`PlanDocument::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PlanDocument {
    Shared {
        objects: Vec<SharedObject>,
        assignment: BTreeMap<TensorId, ObjectId>,
        footprint: u64,
    },
    Offsets {
        assignment: BTreeMap<TensorId, u64>,
        footprint: u64,
    },
}

impl PlanDocument {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        // Internally tagged enums buffer their content and lose integer map
        // keys on the way, so dispatch on the tag by hand.
        #[derive(Deserialize)]
        struct Tag {
            mode: Mode,
        }
        #[derive(Deserialize)]
        struct SharedBody {
            objects: Vec<SharedObject>,
            assignment: BTreeMap<TensorId, ObjectId>,
            footprint: u64,
        }
        #[derive(Deserialize)]
        struct OffsetsBody {
            assignment: BTreeMap<TensorId, u64>,
            footprint: u64,
        }
        let Tag { mode } = serde_json::from_str(text)?;
        Ok(match mode {
            Mode::Shared => {
                let b: SharedBody = serde_json::from_str(text)?;
                PlanDocument::Shared {
                    objects: b.objects,
                    assignment: b.assignment,
                    footprint: b.footprint,
                }
            }
            Mode::Offsets => {
                let b: OffsetsBody = serde_json::from_str(text)?;
                PlanDocument::Offsets {
                    assignment: b.assignment,
                    footprint: b.footprint,
                }
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan documents always serialize")
    }

    pub fn mode(&self) -> Mode {
        match self {
            PlanDocument::Shared { .. } => Mode::Shared,
            PlanDocument::Offsets { .. } => Mode::Offsets,
        }
    }

    pub fn claimed_footprint(&self) -> u64 {
        match self {
            PlanDocument::Shared { footprint, .. } | PlanDocument::Offsets { footprint, .. } => {
                *footprint
            }
        }
    }

    pub fn to_plan(&self) -> Plan {
        match self {
            PlanDocument::Shared {
                objects,
                assignment,
                ..
            } => Plan::Shared(SharedObjectPlan {
                objects: objects.clone(),
                assignment: assignment.clone(),
            }),
            PlanDocument::Offsets {
                assignment,
                footprint,
            } => Plan::Offsets(OffsetPlan {
                assignment: assignment.clone(),
                footprint: *footprint,
            }),
        }
    }

    /// Validates the plan including its claimed footprint.
    pub fn validate(&self, records: &[TensorUsageRecord]) -> ValidationReport {
        match self.to_plan() {
            Plan::Shared(p) => validate_shared_claim(&p, self.claimed_footprint(), records),
            Plan::Offsets(p) => validate_offsets(&p, records),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::chain_records;

    #[test]
    fn strategy_names_resolve_by_mode() {
        assert_eq!(
            Strategy::parse("greedy-by-size", Mode::Offsets).unwrap(),
            Strategy::GreedyBySizeOffsets
        );
        assert_eq!(
            Strategy::parse("greedy-by-size", Mode::Shared).unwrap(),
            Strategy::Shared(SharedStrategy::GreedyBySize)
        );
        assert!(matches!(
            Strategy::parse("greedy-by-breadth-offsets", Mode::Shared),
            Err(PlanError::ModeMismatch { .. })
        ));
        assert!(matches!(
            Strategy::parse("greedy-by-size-improved", Mode::Offsets),
            Err(PlanError::ModeMismatch { .. })
        ));
        assert!(matches!(
            Strategy::parse("best-fit", Mode::Offsets),
            Err(PlanError::UnknownStrategy(_))
        ));
        assert_eq!(
            Strategy::parse("shared:greedy-by-size-improved", Mode::Offsets).unwrap(),
            Strategy::Converted(SharedStrategy::GreedyBySizeImproved)
        );
        for s in Strategy::GREEDY {
            assert_eq!(Strategy::parse(&s.name(), s.mode()).unwrap(), s);
        }
    }

    #[test]
    fn document_wire_format() {
        let recs = chain_records(3, 16);
        let plan = Strategy::GreedyBySizeOffsets.run(&recs, SuitabilityIndex::Auto);
        let doc = plan.to_document();
        let json: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(json["mode"], "offsets");
        assert_eq!(json["footprint"], 32);
        assert_eq!(json["assignment"]["0"], 0);
        assert_eq!(PlanDocument::from_json(&doc.to_json()).unwrap(), doc);

        let shared = Strategy::Shared(SharedStrategy::GreedyBySize)
            .run(&recs, SuitabilityIndex::Auto)
            .to_document();
        let json: serde_json::Value = serde_json::from_str(&shared.to_json()).unwrap();
        assert_eq!(json["mode"], "shared");
        assert_eq!(json["objects"][0]["size"], 16);
        assert_eq!(json["assignment"]["1"], 1);
        assert!(shared.validate(&recs).ok);

        let PlanDocument::Shared {
            objects,
            assignment,
            ..
        } = shared
        else {
            unreachable!()
        };
        let lying = PlanDocument::Shared {
            objects,
            assignment,
            footprint: 1,
        };
        assert!(!lying.validate(&recs).ok);
    }
}
