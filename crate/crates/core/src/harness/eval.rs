//! Replaying datasets through a trained pipeline and tabulating results.

use std::path::Path;

use serde::Serialize;

use super::synth::SequenceDataset;
use crate::data::{validate_examples, Label, LabeledExample};
use crate::decision::{decide_p_values, ConsensusConfig, SequenceOutcome};
use crate::embedding::{train, Embedder, EmbedderModel, TrainingConfig};
use crate::error::{Error, Result};
use crate::icp::{
    calibrate, check_epsilon, prediction_set, select_epsilon, ConformalClassifier, PValues,
    TrainingIndex,
};

/// An embedder plus the conformal classifier built on its embedding space.
#[derive(Debug, Clone)]
pub struct Pipeline<E> {
    pub embedder: E,
    pub classifier: ConformalClassifier,
}

fn embed_all<E: Embedder>(embedder: &E, examples: &[LabeledExample]) -> Result<Vec<Vec<f64>>> {
    examples.iter().map(|e| embedder.embed(&e.features)).collect()
}

impl<E: Embedder> Pipeline<E> {
    /// Indexes the proper-training embeddings and calibrates on held-out data.
    pub fn build(
        embedder: E,
        train: &[LabeledExample],
        calibration: &[LabeledExample],
        k: usize,
        classes: usize,
    ) -> Result<Self> {
        validate_examples(train, classes)?;
        validate_examples(calibration, classes)?;
        let train_emb = embed_all(&embedder, train)?;
        let labels: Vec<Label> = train.iter().map(|e| e.label).collect();
        let index = TrainingIndex::new(&train_emb, &labels, k, classes)?;
        let calib_emb = embed_all(&embedder, calibration)?;
        let calib_labels: Vec<Label> = calibration.iter().map(|e| e.label).collect();
        let record = calibrate(&index, &calib_emb, &calib_labels)?;
        let classifier = ConformalClassifier::new(index, record)?;
        Ok(Self {
            embedder,
            classifier,
        })
    }

    pub fn p_values(&self, features: &[f64]) -> Result<PValues> {
        self.classifier.p_values(&self.embedder.embed(features)?)
    }

    pub fn p_values_all(&self, examples: &[LabeledExample]) -> Result<Vec<PValues>> {
        examples.iter().map(|e| self.p_values(&e.features)).collect()
    }

    /// Significance chosen on a labeled validation set.
    pub fn select_epsilon(&self, validation: &[LabeledExample]) -> Result<f64> {
        select_epsilon(&self.p_values_all(validation)?)
    }

    /// Per-frame p-values for every sequence.
    pub fn sequence_p_values(&self, data: &SequenceDataset) -> Result<Vec<SequencePValues>> {
        data.sequences
            .iter()
            .map(|s| {
                Ok(SequencePValues {
                    label: s.label,
                    frames: s
                        .frames
                        .iter()
                        .map(|f| self.p_values(f))
                        .collect::<Result<_>>()?,
                })
            })
            .collect()
    }
}

impl Pipeline<EmbedderModel> {
    /// Trains the embedder on `train`, then builds the conformal layer.
    pub fn fit(
        train_set: &[LabeledExample],
        calibration: &[LabeledExample],
        config: &TrainingConfig,
        k: usize,
        classes: usize,
    ) -> Result<Self> {
        let model = train(train_set, config)?;
        Self::build(model, train_set, calibration, k, classes)
    }
}

/// p-values of every frame of one sequence, with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SequencePValues {
    pub label: Label,
    pub frames: Vec<PValues>,
}

/// Counts of single-input prediction-set outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SetStats {
    pub total: usize,
    /// True label outside the set.
    pub errors: usize,
    /// Sets with more than one label.
    pub multiples: usize,
    pub empty: usize,
}

impl SetStats {
    pub fn from_p_values<'a>(
        items: impl IntoIterator<Item = (&'a PValues, Label)>,
        epsilon: f64,
    ) -> Self {
        let mut stats = SetStats::default();
        for (p, label) in items {
            let set = prediction_set(p, epsilon);
            stats.total += 1;
            stats.errors += usize::from(!set.contains(label));
            stats.multiples += usize::from(set.len() > 1);
            stats.empty += usize::from(set.is_empty());
        }
        stats
    }

    fn rate(&self, n: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            n as f64 / self.total as f64
        }
    }

    pub fn error_rate(&self) -> f64 {
        self.rate(self.errors)
    }

    pub fn multiple_rate(&self) -> f64 {
        self.rate(self.multiples)
    }
}

/// Error rate at frame index `t`: the fraction of sequences having a frame
/// `t` whose set at `epsilon` misses the true label.
pub fn per_frame_error_from_p_values(sequences: &[SequencePValues], epsilon: f64) -> Vec<f64> {
    let longest = sequences.iter().map(|s| s.frames.len()).max().unwrap_or(0);
    (0..longest)
        .map(|t| {
            let stats = SetStats::from_p_values(
                sequences
                    .iter()
                    .filter_map(|s| s.frames.get(t).map(|p| (p, s.label))),
                epsilon,
            );
            stats.error_rate()
        })
        .collect()
}

pub fn per_frame_error<E: Embedder>(
    data: &SequenceDataset,
    pipeline: &Pipeline<E>,
    epsilon: f64,
) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    Ok(per_frame_error_from_p_values(&pipeline.sequence_p_values(data)?, epsilon))
}

/// Feedback-loop outcome counts for one (epsilon, k) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub epsilon: f64,
    pub k: usize,
    pub sequences: usize,
    pub decided_correct: usize,
    pub decided_wrong: usize,
    pub undecided: usize,
    /// Frames consumed summed over all sequences; an undecided sequence
    /// consumes all of its frames.
    pub frames_consumed: usize,
}

impl SweepCell {
    pub fn decided(&self) -> usize {
        self.decided_correct + self.decided_wrong
    }

    /// Wrong decisions among decided sequences (0 when none decided).
    pub fn error_rate(&self) -> f64 {
        if self.decided() == 0 {
            0.0
        } else {
            self.decided_wrong as f64 / self.decided() as f64
        }
    }

    pub fn undecided_rate(&self) -> f64 {
        if self.sequences == 0 {
            0.0
        } else {
            self.undecided as f64 / self.sequences as f64
        }
    }

    /// Mean frames consumed per sequence.
    pub fn mean_frames(&self) -> f64 {
        if self.sequences == 0 {
            0.0
        } else {
            self.frames_consumed as f64 / self.sequences as f64
        }
    }
}

/// Cells ordered by (epsilon, k).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, epsilon: f64, k: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.epsilon == epsilon && c.k == k)
    }
}

fn sorted_grid(epsilons: &[f64], ks: &[usize]) -> Result<(Vec<f64>, Vec<usize>)> {
    if epsilons.is_empty() || ks.is_empty() {
        return Err(Error::InvalidConfig("sweep grids must be nonempty".into()));
    }
    let mut eps = epsilons
        .iter()
        .map(|&e| check_epsilon(e))
        .collect::<Result<Vec<_>>>()?;
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    Ok((eps, ks))
}

/// Runs the feedback loop for every (epsilon, k) pair over precomputed
/// per-frame p-values.
pub fn sweep_p_values(
    sequences: &[SequencePValues],
    epsilons: &[f64],
    ks: &[usize],
) -> Result<SweepResult> {
    let (epsilons, ks) = sorted_grid(epsilons, ks)?;
    let mut cells = Vec::with_capacity(epsilons.len() * ks.len());
    for &epsilon in &epsilons {
        for &k in &ks {
            let cfg = ConsensusConfig::new(k, epsilon)?;
            let mut cell = SweepCell {
                epsilon,
                k,
                sequences: sequences.len(),
                decided_correct: 0,
                decided_wrong: 0,
                undecided: 0,
                frames_consumed: 0,
            };
            for seq in sequences {
                let result = decide_p_values(seq.frames.iter().cloned().map(Ok), &cfg, |_| {})?;
                cell.frames_consumed += result.frames_consumed;
                match result.outcome {
                    SequenceOutcome::Decided { label, .. } if label == seq.label => {
                        cell.decided_correct += 1
                    }
                    SequenceOutcome::Decided { .. } => cell.decided_wrong += 1,
                    SequenceOutcome::Undecided => cell.undecided += 1,
                }
            }
            cells.push(cell);
        }
    }
    Ok(SweepResult { cells })
}

pub fn sweep<E: Embedder>(
    data: &SequenceDataset,
    epsilons: &[f64],
    ks: &[usize],
    pipeline: &Pipeline<E>,
) -> Result<SweepResult> {
    sorted_grid(epsilons, ks)?;
    sweep_p_values(&pipeline.sequence_p_values(data)?, epsilons, ks)
}

/// Writes `epsilon,k,error_rate,undecided_rate,mean_frames`.
pub fn emit_metrics(result: &SweepResult, path: &Path) -> Result<()> {
    let io_err = |e: std::io::Error| Error::io(path, e);
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
    w.write_record(["epsilon", "k", "error_rate", "undecided_rate", "mean_frames"])
        .map_err(csv_err)?;
    let mut cells = result.cells.clone();
    cells.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon).then(a.k.cmp(&b.k)));
    for c in &cells {
        w.write_record([
            c.epsilon.to_string(),
            c.k.to_string(),
            c.error_rate().to_string(),
            c.undecided_rate().to_string(),
            c.mean_frames().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}
