//! Published reference footprints (MB, 2^20 bytes, three decimals) for six
//! real networks, used to sanity-check plans computed from externally
//! extracted usage records.

use crate::plan::Mode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub network: &'static str,
    pub shared_lower_bound_mb: f64,
    pub offsets_lower_bound_mb: f64,
    pub naive_mb: f64,
}

pub const REFERENCE: [ReferenceRow; 6] = [
    ReferenceRow {
        network: "mobilenet_v1",
        shared_lower_bound_mb: 4.594,
        offsets_lower_bound_mb: 4.594,
        naive_mb: 19.248,
    },
    ReferenceRow {
        network: "mobilenet_v2",
        shared_lower_bound_mb: 6.604,
        offsets_lower_bound_mb: 5.742,
        naive_mb: 26.313,
    },
    ReferenceRow {
        network: "deeplab_v3",
        shared_lower_bound_mb: 6.105,
        offsets_lower_bound_mb: 4.320,
        naive_mb: 48.642,
    },
    ReferenceRow {
        network: "inception_v3",
        shared_lower_bound_mb: 8.955,
        offsets_lower_bound_mb: 7.914,
        naive_mb: 54.010,
    },
    ReferenceRow {
        network: "posenet",
        shared_lower_bound_mb: 6.347,
        offsets_lower_bound_mb: 6.271,
        naive_mb: 28.556,
    },
    ReferenceRow {
        network: "blazeface",
        shared_lower_bound_mb: 0.518,
        offsets_lower_bound_mb: 0.492,
        naive_mb: 2.698,
    },
];

fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Looks up a network by instance name, ignoring case and punctuation, so
/// `MobileNet-v1`, `mobilenet_v1` and `mobilenetv1` all match.
pub fn lookup(instance: &str) -> Option<&'static ReferenceRow> {
    let key = normalize(instance);
    REFERENCE.iter().find(|r| normalize(r.network) == key)
}

pub fn to_mb(bytes: u64) -> f64 {
    bytes as f64 / (1u64 << 20) as f64
}

/// MB rounded to three decimals, the precision of the reference table.
fn table_precision(bytes: u64) -> f64 {
    (to_mb(bytes) * 1000.0).round() / 1000.0
}

impl ReferenceRow {
    pub fn lower_bound_mb(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Shared => self.shared_lower_bound_mb,
            Mode::Offsets => self.offsets_lower_bound_mb,
        }
    }

    /// True iff `footprint` lies between the lower-bound row and the naive
    /// row, compared at table precision.
    pub fn within_range(&self, mode: Mode, footprint: u64) -> bool {
        let mb = table_precision(footprint);
        mb >= self.lower_bound_mb(mode) - 1e-9 && mb <= self.naive_mb + 1e-9
    }
}
