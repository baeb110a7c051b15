use serde::{Deserialize, Serialize};

use crate::data::{distance, Label};
use crate::error::{Error, Result};

/// Indices of one (anchor, positive, negative) triple within a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Batch-hard mining.
///
/// Every element with at least one same-label partner acts as an anchor. Its
/// positive is the farthest same-label element (lowest index on ties). One
/// triplet is emitted per differently labeled element strictly closer to the
/// anchor than that positive. Output is ordered by anchor, then negative.
/// A batch with a single class yields no triplets.
pub fn mine_triplets<V: AsRef<[f64]>>(embeddings: &[V], labels: &[Label]) -> Result<Vec<Triplet>> {
    if embeddings.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: embeddings.len(),
            actual: labels.len(),
        });
    }
    let n = embeddings.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance(embeddings[i].as_ref(), embeddings[j].as_ref());
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut triplets = Vec::new();
    for anchor in 0..n {
        let row = &dist[anchor * n..(anchor + 1) * n];
        let hardest = (0..n)
            .filter(|&j| j != anchor && labels[j] == labels[anchor])
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if row[b] >= row[j] => Some(b),
                _ => Some(j),
            });
        let Some(positive) = hardest else { continue };
        triplets.extend(
            (0..n)
                .filter(|&j| labels[j] != labels[anchor] && row[j] < row[positive])
                .map(|negative| Triplet {
                    anchor,
                    positive,
                    negative,
                }),
        );
    }
    Ok(triplets)
}
