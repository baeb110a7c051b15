//! Synthetic data, dataset files and evaluation sweeps.

mod eval;
mod io;
mod synth;

pub use eval::{
    emit_metrics, per_frame_error, per_frame_error_from_p_values, sweep, sweep_p_values, Pipeline,
    SequencePValues, SetStats, SweepCell, SweepResult,
};
pub use io::{read_examples, read_sequences, write_examples, write_sequences};
pub use synth::{generate, Sequence, SequenceDataset, SyntheticConfig, SyntheticData};
