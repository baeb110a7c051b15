use serde::{Deserialize, Serialize};

use super::calibration::PValues;
use crate::data::Label;
use crate::error::{Error, Result};

/// Candidate labels for one input at significance `epsilon`, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub labels: Vec<Label>,
    pub epsilon: f64,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: Label) -> bool {
        self.labels.binary_search(&label).is_ok()
    }

    /// The label when the set has exactly one member.
    pub fn singleton(&self) -> Option<Label> {
        match self.labels.as_slice() {
            [only] => Some(*only),
            _ => None,
        }
    }
}

/// Labels whose p-value strictly exceeds `epsilon`.
pub fn prediction_set(p: &PValues, epsilon: f64) -> PredictionSet {
    PredictionSet {
        labels: (0..p.len()).filter(|&j| p.get(j) > epsilon).collect(),
        epsilon,
    }
}

/// Smallest significance at which no validation input gets more than one
/// candidate label: the largest second-highest p-value across inputs
/// (zero when every input has at most one positive p-value).
pub fn select_epsilon(validation: &[PValues]) -> Result<f64> {
    if validation.is_empty() {
        return Err(Error::EmptyValidation);
    }
    let mut worst = 0.0f64;
    for p in validation {
        let (mut first, mut second) = (0.0f64, 0.0f64);
        for j in 0..p.len() {
            let v = p.get(j);
            if v > first {
                second = first;
                first = v;
            } else if v > second {
                second = v;
            }
        }
        worst = worst.max(second);
    }
    Ok(worst)
}

/// Validates a significance level.
pub fn check_epsilon(epsilon: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(epsilon)
    } else {
        Err(Error::InvalidConfig(format!("significance {epsilon} outside [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(counts: &[usize], total: usize) -> PValues {
        PValues::from_counts(counts.to_vec(), total)
    }

    #[test]
    fn strict_threshold() {
        let p = pv(&[50, 1], 100);
        assert_eq!(prediction_set(&p, 0.1).labels, vec![0]);
        // p == epsilon is excluded.
        assert_eq!(prediction_set(&p, 0.5).labels, Vec::<Label>::new());
    }

    #[test]
    fn epsilon_boundaries() {
        let p = pv(&[4, 0, 2, 4], 4);
        assert!(prediction_set(&p, 1.0).is_empty());
        assert_eq!(prediction_set(&p, 0.0).labels, vec![0, 2, 3]);
    }

    #[test]
    fn one_positive_p_value_everywhere_selects_zero() {
        let v = vec![pv(&[10, 0, 0], 10), pv(&[0, 0, 3], 10)];
        assert_eq!(select_epsilon(&v).unwrap(), 0.0);
    }

    #[test]
    fn takes_max_of_second_largest() {
        let v = vec![pv(&[90, 30, 10], 100), pv(&[80, 5, 0], 100)];
        assert_eq!(select_epsilon(&v).unwrap(), 0.3);
        // Tied maxima: the second-largest equals the largest.
        assert_eq!(select_epsilon(&[pv(&[7, 7], 10)]).unwrap(), 0.7);
    }

    #[test]
    fn empty_validation_is_an_error() {
        assert!(select_epsilon(&[]).is_err());
    }

    #[test]
    fn singleton_accessor() {
        let p = pv(&[0, 3], 3);
        assert_eq!(prediction_set(&p, 0.5).singleton(), Some(1));
        assert_eq!(prediction_set(&p, 1.0).singleton(), None);
        assert!(check_epsilon(1.5).is_err());
    }
}
