//! Active-set and tripartition prediction from interior iterates.

use crate::linalg::Vector;
use crate::model::{IndexSet, Tripartition};
use crate::{Error, Result};

/// Default prediction threshold `C`.
pub const DEFAULT_THRESHOLD: f64 = 1e-5;

/// One-shot threshold sets at a point.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredictedSets {
    /// `A_C = {x_i < C}`
    pub active: IndexSet,
    /// `S_C = {s_i ≥ C}`
    pub dual_inactive: IndexSet,
    /// `I_C = {x_i ≥ C}`
    pub inactive: IndexSet,
    /// Complement of `S_C ∪ I_C`.
    pub undetermined: IndexSet,
}

impl PredictedSets {
    pub fn tripartition(&self) -> Tripartition {
        Tripartition {
            s: self.dual_inactive.clone(),
            i: self.inactive.clone(),
            t: self.undetermined.clone(),
        }
    }
}

fn check_threshold(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "threshold {c} must be positive"
        )))
    }
}

fn check_pair(x: &Vector, s: &Vector) -> Result<()> {
    if x.len() == s.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: "prediction s",
            expected: x.len(),
            found: s.len(),
        })
    }
}

pub fn predicted_sets(x: &Vector, s: &Vector, c: f64) -> Result<PredictedSets> {
    check_threshold(c)?;
    check_pair(x, s)?;
    let mut out = PredictedSets::default();
    for k in 0..x.len() {
        if x[k] < c {
            out.active.insert(k);
        } else {
            out.inactive.insert(k);
        }
        if s[k] >= c {
            out.dual_inactive.insert(k);
        }
        if x[k] < c && s[k] < c {
            out.undetermined.insert(k);
        }
    }
    Ok(out)
}

/// Three-set predictor. An undetermined index becomes active after the test
/// `x_i < C and s_i > C` holds at two consecutive iterations, and inactive as
/// soon as it fails. Active or inactive indices whose test result flips go
/// back to undetermined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionState {
    pub active: IndexSet,
    pub inactive: IndexSet,
    pub undetermined: IndexSet,
    pub last_test: Vec<bool>,
}

impl PredictionState {
    /// Everything undetermined, no test history.
    pub fn new(n: usize) -> Self {
        Self {
            active: IndexSet::new(),
            inactive: IndexSet::new(),
            undetermined: (0..n).collect(),
            last_test: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.last_test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.last_test.is_empty()
    }

    pub fn is_cover(&self) -> bool {
        let n = self.len();
        self.active.is_disjoint(&self.inactive)
            && self.active.is_disjoint(&self.undetermined)
            && self.inactive.is_disjoint(&self.undetermined)
            && self.active.len() + self.inactive.len() + self.undetermined.len() == n
            && self
                .active
                .iter()
                .chain(&self.inactive)
                .chain(&self.undetermined)
                .all(|&k| k < n)
    }

    pub fn update(&self, x: &Vector, s: &Vector, c: f64) -> Result<Self> {
        check_threshold(c)?;
        check_pair(x, s)?;
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch {
                context: "prediction state",
                expected: self.len(),
                found: x.len(),
            });
        }
        let mut next = Self {
            active: IndexSet::new(),
            inactive: IndexSet::new(),
            undetermined: IndexSet::new(),
            last_test: Vec::with_capacity(self.len()),
        };
        for k in 0..self.len() {
            let test = x[k] < c && s[k] > c;
            let target = if self.active.contains(&k) {
                if test {
                    &mut next.active
                } else {
                    &mut next.undetermined
                }
            } else if self.inactive.contains(&k) {
                if test {
                    &mut next.undetermined
                } else {
                    &mut next.inactive
                }
            } else if !test {
                &mut next.inactive
            } else if self.last_test[k] {
                &mut next.active
            } else {
                &mut next.undetermined
            };
            target.insert(k);
            next.last_test.push(test);
        }
        Ok(next)
    }
}

/// False, missed and correct fractions of `predicted ∪ actual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRatios {
    pub false_prediction: f64,
    pub missed_prediction: f64,
    pub correction: f64,
}

/// `|P \ A|`, `|A \ P|` and `|P ∩ A|` over `|P ∪ A|`; `(0, 0, 1)` when both
/// sets are empty.
pub fn prediction_ratios(predicted: &IndexSet, actual: &IndexSet) -> PredictionRatios {
    let union = predicted.union(actual).count();
    if union == 0 {
        return PredictionRatios {
            false_prediction: 0.0,
            missed_prediction: 0.0,
            correction: 1.0,
        };
    }
    let u = union as f64;
    PredictionRatios {
        false_prediction: predicted.difference(actual).count() as f64 / u,
        missed_prediction: actual.difference(predicted).count() as f64 / u,
        correction: predicted.intersection(actual).count() as f64 / u,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::optimal_partition;
    use crate::model::tests::v;

    fn set(ix: &[usize]) -> IndexSet {
        ix.iter().copied().collect()
    }

    #[test]
    fn threshold_set_examples() {
        let p = predicted_sets(&v(&[1e-7, 0.3]), &v(&[0.4, 1e-7]), 1e-5).unwrap();
        assert_eq!(p.active, set(&[0]));
        assert_eq!(p.dual_inactive, set(&[0]));
        assert_eq!(p.inactive, set(&[1]));
        assert!(p.undetermined.is_empty());

        let p = predicted_sets(&v(&[1e-7, 1e-7]), &v(&[1e-7, 1e-7]), 1e-5).unwrap();
        assert_eq!(p.active, set(&[0, 1]));
        assert!(p.dual_inactive.is_empty() && p.inactive.is_empty());
        assert_eq!(p.undetermined, set(&[0, 1]));

        let p = predicted_sets(&v(&[1.0, 1e-8]), &v(&[1e-8, 1e-8]), 1e-5).unwrap();
        let truth = optimal_partition(&v(&[1.0, 0.0]), &v(&[0.0, 0.0]), 1e-8).unwrap();
        assert_eq!(p.tripartition(), truth);

        assert!(predicted_sets(&v(&[1.0]), &v(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn two_consecutive_tests_promote() {
        let c = 1e-5;
        let (x, s) = (v(&[1e-7]), v(&[1.0]));
        let st = PredictionState::new(1).update(&x, &s, c).unwrap();
        assert_eq!(st.undetermined, set(&[0]));
        let st = st.update(&x, &s, c).unwrap();
        assert_eq!(st.active, set(&[0]));
        let st = st.update(&v(&[1.0]), &v(&[1e-7]), c).unwrap();
        assert_eq!(st.undetermined, set(&[0]));
    }

    #[test]
    fn failing_test_sends_undetermined_to_inactive() {
        let st = PredictionState::new(2)
            .update(&v(&[1.0, 1e-7]), &v(&[1e-7, 1.0]), 1e-5)
            .unwrap();
        assert_eq!(st.inactive, set(&[0]));
        assert_eq!(st.undetermined, set(&[1]));
        let st = st.update(&v(&[1e-7, 1e-7]), &v(&[1.0, 1.0]), 1e-5).unwrap();
        // Index 0 leaves I on a passing test; index 1 passes twice.
        assert_eq!(st.undetermined, set(&[0]));
        assert_eq!(st.active, set(&[1]));
        assert!(st.is_cover());
    }

    #[test]
    fn ratio_examples() {
        let r = prediction_ratios(&set(&[1, 2]), &set(&[2, 3]));
        assert_eq!(
            (r.false_prediction, r.missed_prediction, r.correction),
            (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
        );
        let r = prediction_ratios(&set(&[0, 1, 2]), &set(&[0, 1, 2]));
        assert_eq!(
            (r.false_prediction, r.missed_prediction, r.correction),
            (0.0, 0.0, 1.0)
        );
        let r = prediction_ratios(&set(&[]), &set(&[]));
        assert_eq!(
            (r.false_prediction, r.missed_prediction, r.correction),
            (0.0, 0.0, 1.0)
        );
    }
}
