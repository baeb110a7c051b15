use std::cmp::Ordering;

use sha2::{Digest, Sha256};

use crate::data::{squared_distance, Label};
use crate::error::{Error, Result};

/// Default number of neighbors for the k-NN nonconformity measure.
pub const DEFAULT_NEIGHBORS: usize = 15;

/// Exact k-NN index over the proper-training embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingIndex {
    dim: usize,
    classes: usize,
    k: usize,
    embeddings: Vec<f64>,
    labels: Vec<Label>,
}

impl TrainingIndex {
    pub fn new<V: AsRef<[f64]>>(
        embeddings: &[V],
        labels: &[Label],
        k: usize,
        classes: usize,
    ) -> Result<Self> {
        if embeddings.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: embeddings.len(),
                actual: labels.len(),
            });
        }
        if k == 0 {
            return Err(Error::InvalidConfig("neighbor count k must be positive".into()));
        }
        if k > embeddings.len() {
            return Err(Error::NeighborCount {
                k,
                size: embeddings.len(),
            });
        }
        let dim = embeddings[0].as_ref().len();
        let mut flat = Vec::with_capacity(dim * embeddings.len());
        for v in embeddings {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("training embeddings"));
            }
            flat.extend_from_slice(v);
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        Ok(Self {
            dim,
            classes,
            k,
            embeddings: flat,
            labels: labels.to_vec(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn embedding(&self, i: usize) -> &[f64] {
        &self.embeddings[i * self.dim..(i + 1) * self.dim]
    }

    fn check_query(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("query embedding"));
        }
        Ok(())
    }

    /// Positions of the `k` nearest stored embeddings, nearest first; equal
    /// distances are ordered by ascending storage position.
    pub fn neighbors(&self, v: &[f64]) -> Result<Vec<usize>> {
        self.check_query(v)?;
        let mut candidates: Vec<(f64, usize)> = self
            .embeddings
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, e)| (squared_distance(e, v), i))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        if self.k < candidates.len() {
            candidates.select_nth_unstable_by(self.k - 1, order);
            candidates.truncate(self.k);
        }
        candidates.sort_unstable_by(order);
        Ok(candidates.into_iter().map(|(_, i)| i).collect())
    }

    /// Label histogram of the `k` nearest neighbors.
    pub fn neighbor_label_counts(&self, v: &[f64]) -> Result<Vec<usize>> {
        let mut counts = vec![0; self.classes];
        for i in self.neighbors(v)? {
            counts[self.labels[i]] += 1;
        }
        Ok(counts)
    }

    /// k-NN nonconformity: how many of the `k` nearest neighbors carry a
    /// label other than `y`.
    pub fn nonconformity(&self, v: &[f64], y: Label) -> Result<usize> {
        if y >= self.classes {
            return Err(Error::LabelOutOfRange {
                label: y,
                classes: self.classes,
            });
        }
        Ok(self.k - self.neighbor_label_counts(v)?[y])
    }

    /// SHA-256 over the dimension, class count, labels and embedding bits.
    /// `k` is excluded; calibration artifacts record it separately.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.dim as u64).to_le_bytes());
        hasher.update((self.classes as u64).to_le_bytes());
        hasher.update((self.labels.len() as u64).to_le_bytes());
        for &label in &self.labels {
            hasher.update((label as u64).to_le_bytes());
        }
        for x in &self.embeddings {
            hasher.update(x.to_bits().to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_index(k: usize) -> TrainingIndex {
        // Points on a line with labels A A B C C.
        let emb = [[0.0], [1.0], [2.0], [3.0], [4.0]];
        TrainingIndex::new(&emb, &[0, 0, 1, 2, 2], k, 3).unwrap()
    }

    #[test]
    fn self_match_with_one_neighbor() {
        let index = line_index(1);
        assert_eq!(index.nonconformity(&[2.0], 1).unwrap(), 0);
        assert_eq!(index.nonconformity(&[2.0], 0).unwrap(), 1);
    }

    #[test]
    fn counts_disagreeing_neighbors() {
        // Nearest three to 0.9 are 1.0, 0.0, 2.0 -> {A, A, B}.
        let index = line_index(3);
        assert_eq!(index.nonconformity(&[0.9], 0).unwrap(), 1);
        assert_eq!(index.nonconformity(&[0.9], 1).unwrap(), 2);
        assert_eq!(index.nonconformity(&[0.9], 2).unwrap(), 3);
    }

    #[test]
    fn ties_prefer_lower_storage_position() {
        // 1.5 is equidistant from 1.0 (pos 1) and 2.0 (pos 2).
        let index = line_index(1);
        assert_eq!(index.neighbors(&[1.5]).unwrap(), vec![1]);
        let dup = TrainingIndex::new(&[[1.0], [1.0], [1.0]], &[2, 0, 1], 2, 3).unwrap();
        assert_eq!(dup.neighbors(&[1.0]).unwrap(), vec![0, 1]);
    }

    #[test]
    fn configuration_errors() {
        let emb = [[0.0], [1.0]];
        assert!(matches!(
            TrainingIndex::new(&emb, &[0, 1], 3, 2),
            Err(Error::NeighborCount { k: 3, size: 2 })
        ));
        assert!(TrainingIndex::new(&emb, &[0, 5], 1, 2).is_err());
        assert!(TrainingIndex::new(&emb, &[0, 1], 0, 2).is_err());
        let index = TrainingIndex::new(&emb, &[0, 1], 1, 2).unwrap();
        assert!(index.nonconformity(&[0.0, 1.0], 0).is_err());
        assert!(index.nonconformity(&[f64::NAN], 0).is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = line_index(1);
        let mut b = line_index(3);
        assert_eq!(a.digest(), b.digest());
        b.embeddings[0] = 1e-300;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
