//! Inductive conformal prediction with a k-NN nonconformity measure over
//! the embedding space.

mod calibration;
mod index;
mod sets;

pub use calibration::{
    calibrate, p_values, CalibrationArtifact, CalibrationRecord, PValues,
    CALIBRATION_FORMAT_VERSION, CALIBRATION_MAGIC,
};
pub use index::{TrainingIndex, DEFAULT_NEIGHBORS};
pub use sets::{check_epsilon, prediction_set, select_epsilon, PredictionSet};

use crate::error::Result;

/// A training index paired with the calibration scores computed against it.
#[derive(Debug, Clone)]
pub struct ConformalClassifier {
    index: TrainingIndex,
    record: CalibrationRecord,
}

impl ConformalClassifier {
    pub fn new(index: TrainingIndex, record: CalibrationRecord) -> Result<Self> {
        if record.k() != index.k() {
            return Err(crate::Error::InvalidConfig(format!(
                "calibration k = {} but index k = {}",
                record.k(),
                index.k()
            )));
        }
        if record.index_digest() != index.digest() {
            return Err(crate::Error::DigestMismatch {
                expected: record.index_digest().to_owned(),
                actual: index.digest(),
            });
        }
        Ok(Self { index, record })
    }

    pub fn index(&self) -> &TrainingIndex {
        &self.index
    }

    pub fn record(&self) -> &CalibrationRecord {
        &self.record
    }

    pub fn classes(&self) -> usize {
        self.index.classes()
    }

    pub fn p_values(&self, v: &[f64]) -> Result<PValues> {
        p_values(&self.record, &self.index, v)
    }

    pub fn predict(&self, v: &[f64], epsilon: f64) -> Result<PredictionSet> {
        Ok(prediction_set(&self.p_values(v)?, epsilon))
    }
}
