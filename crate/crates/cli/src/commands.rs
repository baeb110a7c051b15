use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::Serialize;
use tricp_core::decision::{run_sequence_traced, ConsensusConfig, SequenceOutcome, TraceRecord};
use tricp_core::embedding::{train_with_history, Embedder, EmbedderModel};
use tricp_core::harness::{
    emit_metrics, generate, per_frame_error_from_p_values, read_examples, read_sequences,
    sweep_p_values, write_examples, write_sequences, Pipeline, SetStats,
};
use tricp_core::icp::{
    calibrate, prediction_set, select_epsilon, CalibrationArtifact, ConformalClassifier,
    TrainingIndex,
};
use tricp_core::{Label, LabeledExample};

use crate::config::RunConfig;
use crate::output::Outputs;

fn classes_of(train: &[LabeledExample]) -> usize {
    tricp_core::data::class_count(train)
}

fn embed_all(model: &EmbedderModel, examples: &[LabeledExample]) -> Result<Vec<Vec<f64>>> {
    examples
        .iter()
        .map(|e| model.embed(&e.features).map_err(Into::into))
        .collect()
}

fn load_index(config: &RunConfig) -> Result<(EmbedderModel, TrainingIndex)> {
    let model = EmbedderModel::load(&config.resolve(&config.paths.model))?;
    let train = read_examples(&config.resolve(&config.paths.train))?;
    let labels: Vec<Label> = train.iter().map(|e| e.label).collect();
    let index = TrainingIndex::new(&embed_all(&model, &train)?, &labels, config.neighbors, classes_of(&train))?;
    Ok((model, index))
}

struct Loaded {
    pipeline: Pipeline<EmbedderModel>,
    selected_epsilon: Option<f64>,
}

fn load_pipeline(config: &RunConfig) -> Result<Loaded> {
    let (model, index) = load_index(config)?;
    let artifact_path = config.resolve(&config.paths.calibration_artifact);
    let artifact = CalibrationArtifact::load(&artifact_path, &index)
        .with_context(|| format!("loading {}", artifact_path.display()))?;
    Ok(Loaded {
        pipeline: Pipeline {
            embedder: model,
            classifier: ConformalClassifier::new(index, artifact.record)?,
        },
        selected_epsilon: artifact.selected_epsilon,
    })
}

fn epsilon_for(config: &RunConfig, loaded: &Loaded) -> Result<f64> {
    config.epsilon.or(loaded.selected_epsilon).ok_or_else(|| {
        anyhow!("no significance level: set `epsilon` or run `calibrate` with a validation set")
    })
}

pub fn gen_data(config: &RunConfig) -> Result<Vec<std::path::PathBuf>> {
    let data = generate(&config.synthetic)?;
    let mut out = Outputs::new();
    let p = &config.paths;
    for (path, split) in [
        (&p.train, &data.train),
        (&p.calibration, &data.calibration),
        (&p.validation, &data.validation),
        (&p.iid_test, &data.iid_test),
    ] {
        out.write(&config.resolve(path), |tmp| Ok(write_examples(tmp, split)?))?;
    }
    out.write(&config.resolve(&p.sequences), |tmp| Ok(write_sequences(tmp, &data.sequences)?))?;
    Ok(out.commit())
}

pub fn train(config: &RunConfig) -> Result<Vec<std::path::PathBuf>> {
    let data = read_examples(&config.resolve(&config.paths.train))?;
    let (model, history) = train_with_history(&data, &config.training)?;
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        println!(
            "trained {} epochs on {} examples: mean mined-triplet loss {:.4} -> {:.4}",
            history.len(),
            data.len(),
            first.mean_loss,
            last.mean_loss
        );
    }
    let mut out = Outputs::new();
    out.write(&config.resolve(&config.paths.model), |tmp| Ok(model.save(tmp)?))?;
    Ok(out.commit())
}

pub fn calibrate_cmd(config: &RunConfig) -> Result<Vec<std::path::PathBuf>> {
    let (model, index) = load_index(config)?;
    let calib = read_examples(&config.resolve(&config.paths.calibration))?;
    let calib_labels: Vec<Label> = calib.iter().map(|e| e.label).collect();
    let record = calibrate(&index, &embed_all(&model, &calib)?, &calib_labels)?;

    let validation = read_examples(&config.resolve(&config.paths.validation))?;
    let classifier = ConformalClassifier::new(index, record)?;
    let p = embed_all(&model, &validation)?
        .iter()
        .map(|v| classifier.p_values(v))
        .collect::<tricp_core::Result<Vec<_>>>()?;
    let epsilon = select_epsilon(&p)?;
    let artifact = CalibrationArtifact {
        record: classifier.record().clone(),
        selected_epsilon: Some(epsilon),
    };
    let mut out = Outputs::new();
    out.write(&config.resolve(&config.paths.calibration_artifact), |tmp| Ok(artifact.save(tmp)?))?;
    println!("calibration scores: {}", artifact.record.len());
    println!("epsilon* = {epsilon}");
    Ok(out.commit())
}

pub fn predict(config: &RunConfig, input: &Path) -> Result<Vec<std::path::PathBuf>> {
    let loaded = load_pipeline(config)?;
    let epsilon = epsilon_for(config, &loaded)?;
    let examples = read_examples(input)?;
    let p = loaded.pipeline.p_values_all(&examples)?;
    let classes = loaded.pipeline.classifier.classes();

    let mut out = Outputs::new();
    out.write(&config.out_dir.join("predictions.csv"), |tmp| {
        let mut w = csv::Writer::from_path(tmp)?;
        let header: Vec<String> = ["row".to_owned(), "label".to_owned()]
            .into_iter()
            .chain((0..classes).map(|j| format!("p_{j}")))
            .chain(["set".to_owned()])
            .collect();
        w.write_record(&header)?;
        for (row, (pv, e)) in p.iter().zip(&examples).enumerate() {
            let set = prediction_set(pv, epsilon);
            let labels: Vec<String> = set.labels.iter().map(ToString::to_string).collect();
            let record: Vec<String> = [row.to_string(), e.label.to_string()]
                .into_iter()
                .chain(pv.values().iter().map(ToString::to_string))
                .chain([labels.join(" ")])
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    })?;
    let stats = SetStats::from_p_values(p.iter().zip(examples.iter().map(|e| e.label)), epsilon);
    println!(
        "epsilon {epsilon}: {} inputs, error rate {:.4}, multiple-label rate {:.4}, empty sets {}",
        stats.total,
        stats.error_rate(),
        stats.multiple_rate(),
        stats.empty
    );
    Ok(out.commit())
}

#[derive(Serialize)]
struct SequenceTrace<'a> {
    sequence: usize,
    #[serde(flatten)]
    record: &'a TraceRecord,
}

pub fn simulate(config: &RunConfig) -> Result<Vec<std::path::PathBuf>> {
    let loaded = load_pipeline(config)?;
    let epsilon = epsilon_for(config, &loaded)?;
    let cfg = ConsensusConfig::new(config.k_consecutive, epsilon)?;
    let data = read_sequences(&config.resolve(&config.paths.sequences))?;

    let mut results = Vec::with_capacity(data.len());
    let mut traces = Vec::new();
    for (id, seq) in data.sequences.iter().enumerate() {
        let emb = seq
            .frames
            .iter()
            .map(|f| loaded.pipeline.embedder.embed(f))
            .collect::<tricp_core::Result<Vec<_>>>()?;
        let result = run_sequence_traced(&emb, &loaded.pipeline.classifier, &cfg, |r| traces.push((id, r)))
            .with_context(|| format!("sequence {id}"))?;
        results.push(result);
    }

    let mut out = Outputs::new();
    out.write(&config.out_dir.join("decisions.csv"), |tmp| {
        let mut w = csv::Writer::from_path(tmp)?;
        w.write_record(["sequence", "label", "outcome", "decided_label", "frame_index", "frames_consumed"])?;
        for (id, (seq, r)) in data.sequences.iter().zip(&results).enumerate() {
            let (outcome, label, frame) = match r.outcome {
                SequenceOutcome::Decided { label, frame_index } => {
                    ("decided", label.to_string(), frame_index.to_string())
                }
                SequenceOutcome::Undecided => ("undecided", String::new(), String::new()),
            };
            w.write_record([
                id.to_string(),
                seq.label.to_string(),
                outcome.to_owned(),
                label,
                frame,
                r.frames_consumed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.write(&config.out_dir.join("trace.ndjson"), |tmp| {
        let mut w = BufWriter::new(File::create(tmp)?);
        for (sequence, record) in &traces {
            serde_json::to_writer(&mut w, &SequenceTrace { sequence: *sequence, record })?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    })?;

    let decided: Vec<_> = results
        .iter()
        .zip(&data.sequences)
        .filter_map(|(r, s)| r.decided_label().map(|l| l == s.label))
        .collect();
    let wrong = decided.iter().filter(|ok| !**ok).count();
    println!(
        "epsilon {epsilon}, k_consecutive {}: {} sequences, {} decided ({} wrong), {} undecided",
        cfg.k_consecutive,
        results.len(),
        decided.len(),
        wrong,
        results.len() - decided.len()
    );
    Ok(out.commit())
}

pub fn sweep(config: &RunConfig) -> Result<Vec<std::path::PathBuf>> {
    let loaded = load_pipeline(config)?;
    let data = read_sequences(&config.resolve(&config.paths.sequences))?;
    let sequences = loaded.pipeline.sequence_p_values(&data)?;
    let result = sweep_p_values(&sequences, &config.epsilons, &config.k_list)?;

    let mut out = Outputs::new();
    out.write(&config.out_dir.join("metrics.csv"), |tmp| Ok(emit_metrics(&result, tmp)?))?;
    if let Ok(epsilon) = epsilon_for(config, &loaded) {
        let curve = per_frame_error_from_p_values(&sequences, epsilon);
        out.write(&config.out_dir.join("per_frame_error.csv"), |tmp| {
            let mut w = csv::Writer::from_path(tmp)?;
            w.write_record(["frame", "epsilon", "error_rate"])?;
            for (t, e) in curve.iter().enumerate() {
                w.write_record([t.to_string(), epsilon.to_string(), e.to_string()])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    println!("{} cells over {} sequences", result.cells.len(), data.len());
    Ok(out.commit())
}
