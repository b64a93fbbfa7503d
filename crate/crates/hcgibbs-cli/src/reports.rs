//! Serializable command outputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use hcgibbs_core::{KernelKind, OffZeroRow, StationaryDist, TransitionKernel};

/// One boundary law rendered over a finite index range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LawReport {
    /// Parity class the law is attached to (`even`/`odd`), or `ti`.
    pub role: String,
    /// The sum parameter the components are built from.
    pub built_from: f64,
    /// Realized component sum with its certified tail bound.
    pub sum: f64,
    pub sum_tail_bound: f64,
    pub normalisable: bool,
    pub consistency_residual: f64,
    /// Components over the requested range, keyed by spin index.
    pub values: BTreeMap<i64, f64>,
}

/// Output of `boundary-law`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub k: u32,
    pub measure: String,
    pub lambda: f64,
    pub laws: Vec<LawReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_note: Option<String>,
}

/// Output of `chain`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainReport {
    pub k: u32,
    pub measure: String,
    pub kind: String,
    pub truncation: u64,
    pub s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_tilde: Option<f64>,
    /// Spins of the window in storage order (applies to the row vectors).
    pub spins: Vec<i64>,
    pub row_zero: Vec<f64>,
    /// Shared row for the nonzero states; `null` means "point mass at 0".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub off_zero_row: Option<Vec<f64>>,
    pub stationary: Vec<f64>,
    pub stationarity_residual: f64,
    pub row_sum_error: f64,
}

impl ChainReport {
    pub fn build(
        k: u32,
        measure: String,
        kernel: &TransitionKernel,
        dist: &StationaryDist,
    ) -> ChainReport {
        let residual = hcgibbs_core::stationarity_residual(dist, kernel);
        let row_sum_error = (hcgibbs_core::row_sum(kernel.row_zero()) - 1.0).abs();
        let off = match kernel.off_zero_row() {
            OffZeroRow::PointMassAtZero => None,
            OffZeroRow::Dense(row) => Some(row.clone()),
        };
        ChainReport {
            k,
            measure,
            kind: match kernel.kind() {
                KernelKind::TranslationInvariant => "translation_invariant".into(),
                KernelKind::PeriodicProduct => "periodic_product".into(),
            },
            truncation: kernel.truncation(),
            s: kernel.s(),
            s_tilde: kernel.s_tilde(),
            spins: kernel.spins().collect(),
            row_zero: kernel.row_zero().to_vec(),
            off_zero_row: off,
            stationary: dist.window(kernel.truncation()),
            stationarity_residual: residual,
            row_sum_error,
        }
    }
}

/// Parity-resolved occupation statistics (`simulate`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParityStats {
    pub parity: String,
    pub freq: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateReport {
    pub k: u32,
    pub measure: String,
    pub depth: u32,
    pub samples: u64,
    pub seed: u64,
    pub vertices_per_sample: u64,
    pub all_admissible: bool,
    pub stats: Vec<ParityStats>,
}
