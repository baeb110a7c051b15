use tricp_core::decision::{run_sequence, run_sequence_traced, ConsensusConfig, SequenceOutcome};
use tricp_core::embedding::{Embedder, PrecomputedEmbedder};
use tricp_core::harness::{
    generate, per_frame_error, sweep, Pipeline, SequenceDataset, Sequence, SyntheticConfig,
};
use tricp_core::icp::prediction_set;

fn small(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        classes: 4,
        dim: 6,
        separation: 3.0,
        instance_spread: 0.4,
        sigma_start: 2.0,
        sigma_end: 0.3,
        train: 300,
        calibration: 150,
        validation: 50,
        iid_test: 50,
        sequences: 40,
        seed,
        ..Default::default()
    }
}

fn raw_pipeline(config: &SyntheticConfig) -> (tricp_core::harness::SyntheticData, Pipeline<PrecomputedEmbedder>) {
    let data = generate(config).unwrap();
    let pipeline = Pipeline::build(
        PrecomputedEmbedder { dim: config.dim },
        &data.train,
        &data.calibration,
        7,
        config.classes,
    )
    .unwrap();
    (data, pipeline)
}

#[test]
fn run_sequence_matches_straight_line_replay() {
    let config = small(11);
    let (data, pipeline) = raw_pipeline(&config);
    for k in [1, 2, 4] {
        let cfg = ConsensusConfig::new(k, 0.05).unwrap();
        for seq in &data.sequences.sequences {
            let emb: Vec<Vec<f64>> = seq.frames.iter().map(|f| pipeline.embedder.embed(f).unwrap()).collect();
            let got = run_sequence(&emb, &pipeline.classifier, &cfg).unwrap();

            // Oracle: p-values -> set -> hand-written streak counter.
            let mut expected = (SequenceOutcome::Undecided, emb.len());
            let (mut candidate, mut streak) = (None, 0);
            for (t, v) in emb.iter().enumerate() {
                let p = pipeline.classifier.p_values(v).unwrap();
                let set = prediction_set(&p, 0.05);
                if set.labels.len() == 1 {
                    if candidate == Some(set.labels[0]) {
                        streak += 1;
                    } else {
                        candidate = Some(set.labels[0]);
                        streak = 1;
                    }
                } else {
                    candidate = None;
                    streak = 0;
                }
                if streak == k {
                    expected = (
                        SequenceOutcome::Decided { label: set.labels[0], frame_index: t },
                        t + 1,
                    );
                    break;
                }
            }
            assert_eq!((got.outcome, got.frames_consumed), expected);
        }
    }
}

#[test]
fn identical_singletons_decide_after_k_frames() {
    let config = SyntheticConfig {
        instance_spread: 0.0,
        sigma_start: 0.0,
        sigma_end: 0.0,
        ..small(1)
    };
    let (data, pipeline) = raw_pipeline(&config);
    let seq = &data.sequences.sequences[0];
    let cfg = ConsensusConfig::new(3, 0.05).unwrap();
    let mut trace = Vec::new();
    let result = run_sequence_traced(&seq.frames, &pipeline.classifier, &cfg, |r| trace.push(r)).unwrap();
    assert_eq!(
        result.outcome,
        SequenceOutcome::Decided { label: seq.label, frame_index: 2 }
    );
    assert_eq!(result.frames_consumed, 3);
    assert_eq!(trace.len(), 3);
    assert_eq!(trace.iter().map(|r| r.streak).collect::<Vec<_>>(), vec![1, 2, 3]);
}

#[test]
fn empty_sets_leave_the_sequence_undecided() {
    let (data, pipeline) = raw_pipeline(&small(2));
    let seq = &data.sequences.sequences[0];
    // No p-value exceeds 1.
    let cfg = ConsensusConfig::new(1, 1.0).unwrap();
    let result = run_sequence(&seq.frames, &pipeline.classifier, &cfg).unwrap();
    assert_eq!(result.outcome, SequenceOutcome::Undecided);
    assert_eq!(result.frames_consumed, seq.frames.len());
    let none: [Vec<f64>; 0] = [];
    assert!(run_sequence(&none, &pipeline.classifier, &cfg).is_err());
}

#[test]
fn noiseless_sequences_have_no_frame_errors_and_decide_immediately() {
    let config = SyntheticConfig {
        instance_spread: 0.0,
        sigma_start: 0.0,
        sigma_end: 0.0,
        ..small(3)
    };
    let (data, pipeline) = raw_pipeline(&config);
    let errors = per_frame_error(&data.sequences, &pipeline, 0.01).unwrap();
    assert_eq!(errors.len(), config.frames);
    assert!(errors.iter().all(|&e| e == 0.0));
    let result = sweep(&data.sequences, &[0.01, 0.05], &[1], &pipeline).unwrap();
    assert!(result.cells.iter().all(|c| c.mean_frames() == 1.0 && c.error_rate() == 0.0));
}

#[test]
fn early_frames_err_more_than_late_frames_across_seeds() {
    let (mut first, mut last) = (0.0, 0.0);
    for seed in 0..20 {
        let (data, pipeline) = raw_pipeline(&small(seed));
        let errors = per_frame_error(&data.sequences, &pipeline, 0.05).unwrap();
        first += errors[0];
        last += errors[errors.len() - 1];
    }
    assert!(first > last, "frame 0 {first} vs last {last}");
}

#[test]
fn consensus_lowers_decided_error_across_seeds() {
    let (mut wrong, mut decided) = ([0usize; 2], [0usize; 2]);
    for seed in 0..20 {
        let (data, pipeline) = raw_pipeline(&small(seed));
        let result = sweep(&data.sequences, &[0.05], &[1, 3], &pipeline).unwrap();
        for (slot, k) in [(0, 1), (1, 3)] {
            let cell = result.cell(0.05, k).unwrap();
            wrong[slot] += cell.decided_wrong;
            decided[slot] += cell.decided();
            assert_eq!(cell.decided() + cell.undecided, cell.sequences);
        }
        let (c1, c3) = (result.cell(0.05, 1).unwrap(), result.cell(0.05, 3).unwrap());
        assert!(c3.mean_frames() >= c1.mean_frames());
    }
    let rate = |i: usize| wrong[i] as f64 / decided[i] as f64;
    assert!(rate(1) <= rate(0), "k=3 {} vs k=1 {}", rate(1), rate(0));
}

#[test]
fn sweep_frames_are_monotone_for_hand_built_sequences() {
    let (_, pipeline) = raw_pipeline(&small(4));
    let proto = |c: usize| {
        let mut v = vec![0.0; 6];
        v[c] = 3.0 / std::f64::consts::SQRT_2;
        v
    };
    // Alternating labels, then a stable run.
    let frames = [0, 1, 0, 1, 2, 2, 2, 2, 2].iter().map(|&c| proto(c)).collect();
    let data = SequenceDataset { sequences: vec![Sequence { label: 2, frames }] };
    let result = sweep(&data, &[0.05], &[1, 2, 3, 4, 5, 6], &pipeline).unwrap();
    let frames: Vec<f64> = result.cells.iter().map(|c| c.mean_frames()).collect();
    assert!(frames.windows(2).all(|w| w[0] <= w[1]), "{frames:?}");
    assert_eq!(frames[0], 1.0);
    assert_eq!(result.cell(0.05, 6).unwrap().undecided, 1);
}
