//! Contrastive negative log-likelihood over one positive and a set of
//! negatives, as a value computation only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of a training-example file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub qid: String,
    pub pos: String,
    pub negs: Vec<String>,
}

impl TrainingExample {
    pub fn validate(&self) -> Result<()> {
        if self.negs.contains(&self.pos) {
            return Err(Error::InvalidArgument(format!(
                "positive `{}` listed among negatives of `{}`",
                self.pos, self.qid
            )));
        }
        Ok(())
    }
}

/// `-log(exp(pos) / (exp(pos) + Σ exp(neg)))`, computed after subtracting
/// the maximum score. Zero when there are no negatives.
pub fn nll_loss(pos: f64, negs: &[f64]) -> Result<f64> {
    if !pos.is_finite() || negs.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    if negs.is_empty() {
        return Ok(0.0);
    }
    // log-sum-exp as max + ln(1 + Σ exp(s − max)) over all but one maximal
    // score, which keeps tiny losses from rounding to zero.
    let scores = || std::iter::once(pos).chain(negs.iter().copied());
    let (argmax, max) = scores().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |best, (i, s)| if s > best.1 { (i, s) } else { best },
    );
    let rest: f64 = scores()
        .enumerate()
        .filter(|&(i, _)| i != argmax)
        .map(|(_, s)| (s - max).exp())
        .sum();
    Ok(rest.ln_1p() - (pos - max))
}

/// Scores of every query in a batch against every document in the batch.
///
/// Documents are grouped per query: group `j` is query `j`'s positive
/// followed by its own negatives. Query `i` treats column `i · group_size`
/// as its positive and every other column (its own hard negatives plus all
/// documents of the other queries) as negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchScores {
    pub group_size: usize,
    pub rows: Vec<Vec<f64>>,
}

/// Mean of the per-query losses under in-batch negatives.
pub fn batch_loss(batch: &BatchScores) -> Result<f64> {
    if batch.rows.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if batch.group_size == 0 {
        return Err(Error::InvalidArgument("group size must be ≥ 1".into()));
    }
    let width = batch.rows.len() * batch.group_size;
    let mut total = 0.0;
    for (i, row) in batch.rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::dim(format!("batch row {i}"), width, row.len()));
        }
        let pos_col = i * batch.group_size;
        let negs: Vec<f64> = row
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != pos_col)
            .map(|(_, &s)| s)
            .collect();
        total += nll_loss(row[pos_col], &negs)?;
    }
    Ok(total / batch.rows.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn equal_scores_give_log_of_count() {
        let got = nll_loss(0.7, &[0.7, 0.7, 0.7]).unwrap();
        assert!((got - 4f64.ln()).abs() < 1e-12);
        assert!((got - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn no_negatives_is_certain() {
        assert_eq!(nll_loss(3.0, &[]).unwrap(), 0.0);
    }

    #[test]
    fn direct_evaluation() {
        let e = std::f64::consts::E;
        let want = -((e * e) / (e * e + 1.0 + e)).ln();
        let got = nll_loss(2.0, &[0.0, 1.0]).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 0.40761).abs() < 1e-5);
    }

    #[test]
    fn large_scores_do_not_overflow() {
        let got = nll_loss(1e4, &[1e4, -1e4]).unwrap();
        assert!((got - 2f64.ln()).abs() < 1e-12);
        assert!(nll_loss(-1e4, &[1e4]).unwrap().is_finite());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(nll_loss(f64::NAN, &[]).is_err());
        assert!(nll_loss(0.0, &[f64::INFINITY]).is_err());
    }

    #[test]
    fn single_query_batch_reduces_to_nll() {
        let b = BatchScores {
            group_size: 3,
            rows: vec![vec![1.0, 0.5, -0.25]],
        };
        assert_eq!(batch_loss(&b).unwrap(), nll_loss(1.0, &[0.5, -0.25]).unwrap());
    }

    #[test]
    fn equal_batch_of_two() {
        let b = BatchScores {
            group_size: 8,
            rows: vec![vec![0.3; 16], vec![0.3; 16]],
        };
        assert!((batch_loss(&b).unwrap() - 16f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn batch_errors() {
        assert!(batch_loss(&BatchScores {
            group_size: 2,
            rows: vec![]
        })
        .is_err());
        let ragged = BatchScores {
            group_size: 2,
            rows: vec![vec![0.0; 4], vec![0.0; 3]],
        };
        assert!(matches!(batch_loss(&ragged), Err(Error::Dimension { .. })));
    }

    #[test]
    fn training_example_validation() {
        let ok = TrainingExample {
            qid: "q".into(),
            pos: "a".into(),
            negs: vec!["b".into()],
        };
        ok.validate().unwrap();
        let bad = TrainingExample {
            negs: vec!["a".into()],
            ..ok
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn positive_and_monotone(pos in -10.0f64..10.0, negs in prop::collection::vec(-10.0f64..10.0, 1..10), bump in 0.01f64..5.0) {
            let base = nll_loss(pos, &negs).unwrap();
            prop_assert!(base > 0.0);
            prop_assert!(nll_loss(pos + bump, &negs).unwrap() < base);
            let mut raised = negs.clone();
            raised[0] += bump;
            prop_assert!(nll_loss(pos, &raised).unwrap() > base);
        }

        #[test]
        fn shift_invariant(pos in -100.0f64..100.0, negs in prop::collection::vec(-100.0f64..100.0, 0..10), c in -1e3f64..1e3) {
            let shifted: Vec<f64> = negs.iter().map(|s| s + c).collect();
            let a = nll_loss(pos, &negs).unwrap();
            let b = nll_loss(pos + c, &shifted).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }
}
