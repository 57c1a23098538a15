//! Tunable parameters. Every report embeds the configuration it ran with.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ClassifierConfig {
    /// Largest window tried when identifying the local case.
    pub c_star: f64,
    /// Number of window halvings before giving up.
    pub halvings: u32,
    /// x-slices per sampled set.
    pub slices: usize,
    /// y-samples per slice.
    pub samples: usize,
    /// Longest stretch of a boundary curve considered near the anchor.
    pub curve_window: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            c_star: 0.5,
            halvings: 20,
            slices: 64,
            samples: 64,
            curve_window: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PeanoConfig {
    /// Field bound used when no boundary slope supplies one.
    pub tau_default: f64,
    /// Grid points per axis for bounding |f|.
    pub grid: usize,
    /// Sample count for the containment check of a triangle.
    pub containment: usize,
}

impl Default for PeanoConfig {
    fn default() -> Self {
        PeanoConfig {
            tau_default: 1.0,
            grid: 129,
            containment: 256,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct EnvelopeConfig {
    pub eps: f64,
    /// Number of biased members per family.
    pub k: usize,
    /// Largest bias. Raised when needed so the smallest bias stays at least
    /// `4 * eps`.
    pub eta0: f64,
    /// Gap below `gap_rel * (1 + scale)` counts as coincidence of the envelopes.
    pub gap_rel: f64,
    /// Separation threshold for branching detection.
    pub branch_rel: f64,
    /// Residual allowed for an attained envelope, relative to `1 + M`.
    pub attain_rel: f64,
    /// Number of dyadic windows for touch-sequence detection.
    pub depth: u32,
    /// Integration span; the Peano length when absent.
    pub span: Option<f64>,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig {
            eps: 1e-3,
            k: 6,
            eta0: 0.1,
            gap_rel: 1e-3,
            branch_rel: 1e-6,
            attain_rel: 1e-2,
            depth: 8,
            span: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct UniquenessConfig {
    /// Window half-widths tried, as fractions of the bounding-box scale.
    pub windows: Vec<f64>,
    pub coarse: (usize, usize),
    pub fine: (usize, usize),
    /// Fine/coarse ratio at or above which a quotient bound counts as
    /// unbounded.
    pub growth: f64,
    /// Run the extension probe when the problem carries one.
    pub probe: bool,
}

impl Default for UniquenessConfig {
    fn default() -> Self {
        UniquenessConfig {
            windows: vec![0.5, 0.25, 0.1, 0.05],
            coarse: (16, 64),
            fine: (128, 512),
            growth: 2.0,
            probe: true,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct Config {
    pub classifier: ClassifierConfig,
    pub peano: PeanoConfig,
    pub envelope: EnvelopeConfig,
    pub uniqueness: UniquenessConfig,
}
