use std::path::Path;

use serde::{Deserialize, Serialize};

use super::index::TrainingIndex;
use crate::data::Label;
use crate::error::{Error, Result};

pub const CALIBRATION_MAGIC: &str = "tricp-calibration";
pub const CALIBRATION_FORMAT_VERSION: u32 = 1;

/// Nonconformity scores of the calibration set.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRecord {
    k: usize,
    /// Sorted ascending.
    scores: Vec<usize>,
    /// `at_least[s]` = number of scores `>= s`, for `s` in `0..=k + 1`.
    at_least: Vec<usize>,
    index_digest: String,
}

impl CalibrationRecord {
    pub fn from_scores(k: usize, mut scores: Vec<usize>, index_digest: String) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyCalibration);
        }
        if let Some(&bad) = scores.iter().find(|&&s| s > k) {
            return Err(Error::Format(format!("calibration score {bad} exceeds k = {k}")));
        }
        scores.sort_unstable();
        let mut at_least = vec![0; k + 2];
        for &s in &scores {
            at_least[s] += 1;
        }
        for s in (0..=k).rev() {
            at_least[s] += at_least[s + 1];
        }
        Ok(Self {
            k,
            scores,
            at_least,
            index_digest,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The score multiset, sorted ascending.
    pub fn scores(&self) -> &[usize] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn index_digest(&self) -> &str {
        &self.index_digest
    }

    /// Number of calibration scores greater than or equal to `score`.
    pub fn count_at_least(&self, score: usize) -> usize {
        self.at_least.get(score).copied().unwrap_or(0)
    }
}

/// Scores each calibration embedding against its true label.
pub fn calibrate<V: AsRef<[f64]>>(
    index: &TrainingIndex,
    embeddings: &[V],
    labels: &[Label],
) -> Result<CalibrationRecord> {
    if embeddings.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    if embeddings.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: embeddings.len(),
            actual: labels.len(),
        });
    }
    let scores = embeddings
        .iter()
        .zip(labels)
        .map(|(v, &y)| index.nonconformity(v.as_ref(), y))
        .collect::<Result<Vec<_>>>()?;
    CalibrationRecord::from_scores(index.k(), scores, index.digest())
}

/// Empirical p-values for every label, held as exact fractions
/// `count / total` with `total = |A|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PValues {
    counts: Vec<usize>,
    total: usize,
}

impl PValues {
    pub fn from_counts(counts: Vec<usize>, total: usize) -> Self {
        debug_assert!(total > 0 && counts.iter().all(|&c| c <= total));
        Self { counts, total }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Numerators of the p-values.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Common denominator `|A|`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn get(&self, label: Label) -> f64 {
        self.counts[label] as f64 / self.total as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|j| self.get(j)).collect()
    }
}

/// `p_j = |{a in A : a >= nonconformity(v, j)}| / |A|` for every label `j`.
pub fn p_values(record: &CalibrationRecord, index: &TrainingIndex, v: &[f64]) -> Result<PValues> {
    if record.k() != index.k() {
        return Err(Error::InvalidConfig(format!(
            "calibration k = {} but index k = {}",
            record.k(),
            index.k()
        )));
    }
    let counts = index
        .neighbor_label_counts(v)?
        .into_iter()
        .map(|agree| record.count_at_least(index.k() - agree))
        .collect();
    Ok(PValues::from_counts(counts, record.len()))
}

#[derive(Serialize, Deserialize)]
struct CalibrationFile {
    magic: String,
    version: u32,
    k: usize,
    index_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selected_epsilon: Option<f64>,
    scores: Vec<usize>,
}

/// A calibration record together with the significance level selected on
/// the validation set, as persisted on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationArtifact {
    pub record: CalibrationRecord,
    pub selected_epsilon: Option<f64>,
}

impl CalibrationArtifact {
    pub fn to_text(&self) -> String {
        let file = CalibrationFile {
            magic: CALIBRATION_MAGIC.to_owned(),
            version: CALIBRATION_FORMAT_VERSION,
            k: self.record.k,
            index_digest: self.record.index_digest.clone(),
            selected_epsilon: self.selected_epsilon,
            scores: self.record.scores.clone(),
        };
        let mut text = serde_json::to_string(&file).expect("artifact serializes");
        text.push('\n');
        text
    }

    /// Parses an artifact and verifies it was built against `index`.
    pub fn from_text(text: &str, index: &TrainingIndex) -> Result<Self> {
        let file: CalibrationFile = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("calibration file: {e}")))?;
        if file.magic != CALIBRATION_MAGIC {
            return Err(Error::Format(format!(
                "bad magic '{}', expected '{CALIBRATION_MAGIC}'",
                file.magic
            )));
        }
        if file.version != CALIBRATION_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported calibration format version {}, expected {CALIBRATION_FORMAT_VERSION}",
                file.version
            )));
        }
        let actual = index.digest();
        if file.index_digest != actual {
            return Err(Error::DigestMismatch {
                expected: file.index_digest,
                actual,
            });
        }
        if file.k != index.k() {
            return Err(Error::InvalidConfig(format!(
                "calibration k = {} but index k = {}",
                file.k,
                index.k()
            )));
        }
        if let Some(eps) = file.selected_epsilon {
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::Format(format!("selected epsilon {eps} outside [0, 1]")));
            }
        }
        Ok(Self {
            record: CalibrationRecord::from_scores(file.k, file.scores, file.index_digest)?,
            selected_epsilon: file.selected_epsilon,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, index: &TrainingIndex) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, index).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}
