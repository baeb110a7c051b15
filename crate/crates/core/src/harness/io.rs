//! Comma-separated dataset files with a one-line header.
//!
//! Example files: `f0,...,f{d-1},label`. Sequence files prepend
//! `sequence,frame` columns; rows of one sequence are contiguous and frame
//! indices run `0, 1, 2, ...`.

use std::fs::File;
use std::path::Path;

use super::synth::{Sequence, SequenceDataset};
use crate::data::{Label, LabeledExample};
use crate::error::{Error, Result};

fn record_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Record {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => record_error(path, line, format!("{other:?}")),
    }
}

fn feature_header(dim: usize) -> impl Iterator<Item = String> {
    (0..dim).map(|i| format!("f{i}"))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn parse_row(path: &Path, line: u64, fields: &[&str], features: usize) -> Result<LabeledExample> {
    let parse = |i: usize| -> Result<f64> {
        let v: f64 = fields[i]
            .parse()
            .map_err(|_| record_error(path, line, format!("bad feature value '{}'", fields[i])))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(record_error(path, line, "non-finite feature value"))
        }
    };
    let values = (0..features).map(parse).collect::<Result<Vec<_>>>()?;
    let label: Label = fields[features]
        .parse()
        .map_err(|_| record_error(path, line, format!("bad label '{}'", fields[features])))?;
    Ok(LabeledExample::new(values, label))
}

pub fn write_examples(path: &Path, examples: &[LabeledExample]) -> Result<()> {
    let dim = examples.first().map_or(0, |e| e.features.len());
    let mut w = writer(path)?;
    let header: Vec<String> = feature_header(dim).chain(["label".to_owned()]).collect();
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for e in examples {
        let row: Vec<String> = e
            .features
            .iter()
            .map(f64::to_string)
            .chain([e.label.to_string()])
            .collect();
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_examples(path: &Path) -> Result<Vec<LabeledExample>> {
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().last() != Some("label") || header.len() < 2 {
        return Err(record_error(path, 1, "header must list feature columns then 'label'"));
    }
    let features = header.len() - 1;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = record.iter().collect();
        out.push(parse_row(path, line, &fields, features)?);
    }
    Ok(out)
}

pub fn write_sequences(path: &Path, data: &SequenceDataset) -> Result<()> {
    let dim = data
        .sequences
        .first()
        .and_then(|s| s.frames.first())
        .map_or(0, Vec::len);
    let mut w = writer(path)?;
    let header: Vec<String> = ["sequence".to_owned(), "frame".to_owned()]
        .into_iter()
        .chain(feature_header(dim))
        .chain(["label".to_owned()])
        .collect();
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (id, seq) in data.sequences.iter().enumerate() {
        for (t, frame) in seq.frames.iter().enumerate() {
            let row: Vec<String> = [id.to_string(), t.to_string()]
                .into_iter()
                .chain(frame.iter().map(f64::to_string))
                .chain([seq.label.to_string()])
                .collect();
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_sequences(path: &Path) -> Result<SequenceDataset> {
    let mut r = reader(path)?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 4
        || header.get(0) != Some("sequence")
        || header.get(1) != Some("frame")
        || header.iter().last() != Some("label")
    {
        return Err(record_error(
            path,
            1,
            "header must be 'sequence,frame', feature columns, then 'label'",
        ));
    }
    let features = header.len() - 3;
    let mut sequences: Vec<Sequence> = Vec::new();
    let mut current_id: Option<String> = None;
    for record in r.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = record.iter().collect();
        let frame: usize = fields[1]
            .parse()
            .map_err(|_| record_error(path, line, format!("bad frame index '{}'", fields[1])))?;
        let example = parse_row(path, line, &fields[2..], features)?;
        if current_id.as_deref() != Some(fields[0]) {
            current_id = Some(fields[0].to_owned());
            sequences.push(Sequence {
                label: example.label,
                frames: Vec::new(),
            });
        }
        let seq = sequences.last_mut().expect("pushed above");
        if frame != seq.frames.len() {
            return Err(record_error(
                path,
                line,
                format!("expected frame {} of sequence {}, found {frame}", seq.frames.len(), fields[0]),
            ));
        }
        if example.label != seq.label {
            return Err(record_error(path, line, "label changes within a sequence"));
        }
        seq.frames.push(example.features);
    }
    Ok(SequenceDataset { sequences })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_roundtrip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.csv");
        let data = vec![
            LabeledExample::new(vec![0.1, -2.5e-17, 1.0 / 3.0], 2),
            LabeledExample::new(vec![3.0, 4.0, 5.0], 0),
        ];
        write_examples(&path, &data).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("f0,f1,f2,label\n"));
        assert_eq!(read_examples(&path).unwrap(), data);
    }

    #[test]
    fn sequences_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seq.csv");
        let data = SequenceDataset {
            sequences: vec![
                Sequence { label: 1, frames: vec![vec![0.0, 1.0], vec![0.5, 0.25]] },
                Sequence { label: 0, frames: vec![vec![9.0, 9.5]] },
            ],
        };
        write_sequences(&path, &data).unwrap();
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("sequence,frame,f0,f1,label\n"));
        assert_eq!(read_sequences(&path).unwrap(), data);
    }

    #[test]
    fn malformed_records_name_path_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "f0,label\n1.0,0\nabc,1\n").unwrap();
        let err = read_examples(&path).unwrap_err().to_string();
        assert!(err.contains("bad.csv:3"), "{err}");

        std::fs::write(&path, "f0,f1,label\n1.0,2.0,0\n1.0,1\n").unwrap();
        let err = read_examples(&path).unwrap_err().to_string();
        assert!(err.contains("bad.csv:3"), "{err}");

        std::fs::write(&path, "sequence,frame,f0,label\n0,0,1.0,1\n0,2,1.0,1\n").unwrap();
        let err = read_sequences(&path).unwrap_err().to_string();
        assert!(err.contains("bad.csv:3") && err.contains("expected frame 1"), "{err}");
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_examples(Path::new("/nonexistent/x.csv")).unwrap_err().to_string();
        assert!(err.contains("/nonexistent/x.csv"));
    }
}
