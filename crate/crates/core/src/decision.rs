//! Sensor-query feedback loop.
//!
//! Per-frame prediction sets are consumed in order. A frame whose set is not
//! a singleton clears the running candidate and asks for another input. A
//! decision is committed once `k_consecutive` consecutive frames produce the
//! same singleton label.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::icp::{check_epsilon, prediction_set, ConformalClassifier, PValues, PredictionSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusConfig {
    pub k_consecutive: usize,
    pub epsilon: f64,
}

impl ConsensusConfig {
    pub fn new(k_consecutive: usize, epsilon: f64) -> Result<Self> {
        if k_consecutive == 0 {
            return Err(Error::InvalidConfig("k_consecutive must be at least 1".into()));
        }
        check_epsilon(epsilon)?;
        Ok(Self {
            k_consecutive,
            epsilon,
        })
    }
}

/// Running candidate and streak of one input track.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConsensusState {
    candidate: Option<Label>,
    streak: usize,
}

impl ConsensusState {
    pub fn candidate(&self) -> Option<Label> {
        self.candidate
    }

    pub fn streak(&self) -> usize {
        self.streak
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepOutcome {
    QueryMore,
    Decided(Label),
}

/// Advances the consensus state by one prediction set. A decision returns
/// the state to its empty initial value.
pub fn step(
    state: ConsensusState,
    set: &PredictionSet,
    cfg: &ConsensusConfig,
) -> (ConsensusState, StepOutcome) {
    let Some(label) = set.singleton() else {
        return (ConsensusState::default(), StepOutcome::QueryMore);
    };
    let streak = if state.candidate == Some(label) {
        state.streak + 1
    } else {
        1
    };
    if streak >= cfg.k_consecutive {
        (ConsensusState::default(), StepOutcome::Decided(label))
    } else {
        (
            ConsensusState {
                candidate: Some(label),
                streak,
            },
            StepOutcome::QueryMore,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SequenceOutcome {
    /// `frame_index` is zero-based.
    Decided { label: Label, frame_index: usize },
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub outcome: SequenceOutcome,
    pub frames_consumed: usize,
}

impl SequenceResult {
    pub fn decided_label(&self) -> Option<Label> {
        match self.outcome {
            SequenceOutcome::Decided { label, .. } => Some(label),
            SequenceOutcome::Undecided => None,
        }
    }
}

/// One audit line per processed frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub frame: usize,
    pub p_values: Vec<f64>,
    pub set: Vec<Label>,
    /// Streak length after this frame (equals `k_consecutive` on decision).
    pub streak: usize,
    pub outcome: StepOutcome,
}

/// Drives the consensus rule over per-frame p-values, stopping at the first
/// decision. `observe` sees every processed frame.
pub fn decide_p_values<I>(
    p_values: I,
    cfg: &ConsensusConfig,
    mut observe: impl FnMut(TraceRecord),
) -> Result<SequenceResult>
where
    I: IntoIterator<Item = Result<PValues>>,
{
    let mut state = ConsensusState::default();
    let mut consumed = 0;
    for (frame, p) in p_values.into_iter().enumerate() {
        let p = p?;
        let set = prediction_set(&p, cfg.epsilon);
        let (next, outcome) = step(state, &set, cfg);
        consumed = frame + 1;
        let streak = match outcome {
            StepOutcome::Decided(_) => cfg.k_consecutive,
            StepOutcome::QueryMore => next.streak,
        };
        observe(TraceRecord {
            frame,
            p_values: p.values(),
            set: set.labels,
            streak,
            outcome,
        });
        if let StepOutcome::Decided(label) = outcome {
            return Ok(SequenceResult {
                outcome: SequenceOutcome::Decided {
                    label,
                    frame_index: frame,
                },
                frames_consumed: consumed,
            });
        }
        state = next;
    }
    Ok(SequenceResult {
        outcome: SequenceOutcome::Undecided,
        frames_consumed: consumed,
    })
}

/// Runs the feedback loop over a sequence of frame embeddings.
pub fn run_sequence<V: AsRef<[f64]>>(
    frames: &[V],
    classifier: &ConformalClassifier,
    cfg: &ConsensusConfig,
) -> Result<SequenceResult> {
    run_sequence_traced(frames, classifier, cfg, |_| {})
}

pub fn run_sequence_traced<V: AsRef<[f64]>>(
    frames: &[V],
    classifier: &ConformalClassifier,
    cfg: &ConsensusConfig,
    observe: impl FnMut(TraceRecord),
) -> Result<SequenceResult> {
    if frames.is_empty() {
        return Err(Error::InvalidConfig("sequence has no frames".into()));
    }
    decide_p_values(
        frames.iter().map(|f| classifier.p_values(f.as_ref())),
        cfg,
        observe,
    )
}

/// Writes records as newline-delimited JSON.
pub fn write_trace<W: Write>(mut out: W, records: &[TraceRecord]) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(labels: &[Label]) -> PredictionSet {
        PredictionSet {
            labels: labels.to_vec(),
            epsilon: 0.1,
        }
    }

    fn replay(stream: &[&[Label]], k: usize) -> Vec<StepOutcome> {
        let cfg = ConsensusConfig::new(k, 0.1).unwrap();
        let mut state = ConsensusState::default();
        stream
            .iter()
            .map(|s| {
                let (next, out) = step(state, &set(s), &cfg);
                state = next;
                out
            })
            .collect()
    }

    #[test]
    fn two_in_a_row_decides() {
        assert_eq!(
            replay(&[&[0], &[0]], 2),
            vec![StepOutcome::QueryMore, StepOutcome::Decided(0)]
        );
    }

    #[test]
    fn multi_label_set_resets_the_streak() {
        let out = replay(&[&[0], &[0, 1], &[0], &[0]], 2);
        assert_eq!(out[..3], [StepOutcome::QueryMore; 3]);
        assert_eq!(out[3], StepOutcome::Decided(0));
    }

    #[test]
    fn k_one_decides_on_first_singleton() {
        assert_eq!(replay(&[&[1]], 1), vec![StepOutcome::Decided(1)]);
        assert_eq!(
            replay(&[&[], &[0, 2], &[2]], 1),
            vec![StepOutcome::QueryMore, StepOutcome::QueryMore, StepOutcome::Decided(2)]
        );
    }

    #[test]
    fn changed_singleton_restarts_at_one() {
        let cfg = ConsensusConfig::new(3, 0.1).unwrap();
        let (s, _) = step(ConsensusState::default(), &set(&[0]), &cfg);
        let (s, _) = step(s, &set(&[0]), &cfg);
        assert_eq!((s.candidate(), s.streak()), (Some(0), 2));
        let (s, out) = step(s, &set(&[1]), &cfg);
        assert_eq!((s.candidate(), s.streak(), out), (Some(1), 1, StepOutcome::QueryMore));
        let (s, _) = step(s, &set(&[]), &cfg);
        assert_eq!((s.candidate(), s.streak()), (None, 0));
    }

    #[test]
    fn empty_sets_never_decide() {
        let cfg = ConsensusConfig::new(1, 0.5).unwrap();
        let frames = (0..5).map(|_| Ok(PValues::from_counts(vec![1, 2], 4)));
        let result = decide_p_values(frames, &cfg, |_| {}).unwrap();
        assert_eq!(result.outcome, SequenceOutcome::Undecided);
        assert_eq!(result.frames_consumed, 5);
    }

    #[test]
    fn trace_records_every_processed_frame() {
        let cfg = ConsensusConfig::new(2, 0.5).unwrap();
        let frames = vec![
            Ok(PValues::from_counts(vec![4, 4], 4)),
            Ok(PValues::from_counts(vec![4, 0], 4)),
            Ok(PValues::from_counts(vec![4, 1], 4)),
            Ok(PValues::from_counts(vec![4, 0], 4)),
        ];
        let mut trace = Vec::new();
        let result = decide_p_values(frames, &cfg, |r| trace.push(r)).unwrap();
        assert_eq!(
            result.outcome,
            SequenceOutcome::Decided {
                label: 0,
                frame_index: 2
            }
        );
        assert_eq!(result.frames_consumed, 3);
        let streaks: Vec<_> = trace.iter().map(|r| r.streak).collect();
        assert_eq!(streaks, vec![0, 1, 2]);
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        let first: TraceRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first, trace[0]);
    }

    #[test]
    fn invalid_config() {
        assert!(ConsensusConfig::new(0, 0.1).is_err());
        assert!(ConsensusConfig::new(1, -0.1).is_err());
    }
}
