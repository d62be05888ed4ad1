//! Ranking metrics for scored binary data.
//!
//! ROC-AUC is the Mann-Whitney statistic with half credit for ties. Average
//! precision and R-precision walk a fixed total order: score descending, then
//! original index ascending.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub r_precision: f64,
}

/// Scores paired with ground-truth labels.
#[derive(Debug, Clone, Copy)]
pub struct ScoredTruth<'a> {
    scores: &'a [f64],
    truth: &'a [Label],
}

impl<'a> ScoredTruth<'a> {
    pub fn new(scores: &'a [f64], truth: &'a [Label]) -> Result<Self> {
        if scores.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                found: scores.len(),
            });
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::OutOfRange("NaN score".into()));
        }
        Ok(ScoredTruth { scores, truth })
    }

    pub fn scores(&self) -> &[f64] {
        self.scores
    }

    pub fn truth(&self) -> &[Label] {
        self.truth
    }

    pub fn n_positive(&self) -> usize {
        self.truth.iter().filter(|l| l.is_positive()).count()
    }

    fn require_positive(&self) -> Result<usize> {
        match self.n_positive() {
            0 => Err(Error::Empty("positives")),
            k => Ok(k),
        }
    }

    fn require_both(&self) -> Result<(usize, usize)> {
        let n_pos = self.require_positive()?;
        let n_neg = self.truth.len() - n_pos;
        if n_neg == 0 {
            return Err(Error::SingleClass);
        }
        Ok((n_pos, n_neg))
    }

    /// Indices in (score desc, index asc) order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        order
    }
}

/// Probability that a random positive outscores a random negative.
pub fn roc_auc(st: &ScoredTruth) -> Result<f64> {
    let (n_pos, n_neg) = st.require_both()?;
    let mut order: Vec<usize> = (0..st.scores.len()).collect();
    order.sort_by(|&a, &b| st.scores[a].total_cmp(&st.scores[b]));
    // Sum of mid-ranks (1-based) of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && st.scores[order[j + 1]] == st.scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| st.truth[k].is_positive()).count();
        rank_sum += mid_rank * pos_in_group as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Average precision: mean of precision at the rank of each positive.
pub fn pr_auc(st: &ScoredTruth) -> Result<f64> {
    let n_pos = st.require_positive()?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in st.ranking().iter().enumerate() {
        if st.truth[i].is_positive() {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / n_pos as f64)
}

/// Precision among the top `k` ranked examples, `k` = number of positives.
pub fn r_precision(st: &ScoredTruth) -> Result<f64> {
    let k = st.require_positive()?;
    let hits = st
        .ranking()
        .iter()
        .take(k)
        .filter(|&&i| st.truth[i].is_positive())
        .count();
    Ok(hits as f64 / k as f64)
}

pub fn evaluate(scores: &[f64], truth: &[Label]) -> Result<Metrics> {
    let st = ScoredTruth::new(scores, truth)?;
    Ok(Metrics {
        roc_auc: roc_auc(&st)?,
        pr_auc: pr_auc(&st)?,
        r_precision: r_precision(&st)?,
    })
}

/// Brute-force reference implementations, quadratic in `n`.
pub mod oracle {
    use super::*;

    pub const MAX_N: usize = 1000;

    /// Exhaustive pair counting, ties worth one half.
    pub fn roc_auc_pairs(st: &ScoredTruth) -> Result<f64> {
        let (n_pos, n_neg) = st.require_both()?;
        let mut wins = 0.0;
        for (i, &si) in st.scores.iter().enumerate() {
            if !st.truth[i].is_positive() {
                continue;
            }
            for (j, &sj) in st.scores.iter().enumerate() {
                if st.truth[j].is_positive() {
                    continue;
                }
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
        Ok(wins / (n_pos * n_neg) as f64)
    }

    /// Position (1-based) of every example under the documented order,
    /// counted pairwise.
    fn ranks(st: &ScoredTruth) -> Vec<usize> {
        (0..st.scores.len())
            .map(|i| {
                (0..st.scores.len())
                    .filter(|&j| st.scores[j] > st.scores[i] || (st.scores[j] == st.scores[i] && j <= i))
                    .count()
            })
            .collect()
    }

    /// Average precision from explicit ranks: for each positive, the fraction
    /// of positives among examples ranked at or above it.
    pub fn pr_auc_walk(st: &ScoredTruth) -> Result<f64> {
        let n_pos = st.require_positive()?;
        let rank = ranks(st);
        let positives: Vec<usize> = (0..st.scores.len()).filter(|&i| st.truth[i].is_positive()).collect();
        let mut total = 0.0;
        for &i in &positives {
            let pos_above = positives.iter().filter(|&&j| rank[j] <= rank[i]).count();
            total += pos_above as f64 / rank[i] as f64;
        }
        Ok(total / n_pos as f64)
    }

    pub fn r_precision_topk(st: &ScoredTruth) -> Result<f64> {
        let k = st.require_positive()?;
        let rank = ranks(st);
        let hits = (0..st.scores.len())
            .filter(|&i| st.truth[i].is_positive() && rank[i] <= k)
            .count();
        Ok(hits as f64 / k as f64)
    }

    pub fn metric_oracle(st: &ScoredTruth) -> Result<(f64, f64, f64)> {
        if st.scores.len() > MAX_N {
            return Err(Error::OutOfRange(format!("oracle limited to n <= {MAX_N}")));
        }
        Ok((roc_auc_pairs(st)?, pr_auc_walk(st)?, r_precision_topk(st)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: Label = Label::Positive;
    const N: Label = Label::Negative;

    fn st<'a>(s: &'a [f64], t: &'a [Label]) -> ScoredTruth<'a> {
        ScoredTruth::new(s, t).unwrap()
    }

    #[test]
    fn roc_examples() {
        assert_eq!(roc_auc(&st(&[0.9, 0.8, 0.1], &[P, P, N])).unwrap(), 1.0);
        assert_eq!(roc_auc(&st(&[0.5; 4], &[P, N, P, N])).unwrap(), 0.5);
        assert_eq!(roc_auc(&st(&[1.0, 2.0, 3.0, 4.0], &[N, P, N, P])).unwrap(), 0.75);
        assert_eq!(roc_auc(&st(&[1.0, 2.0], &[P, N])).unwrap(), 0.0);
        assert_eq!(roc_auc(&st(&[0.3, 0.3], &[P, N])).unwrap(), 0.5);
        assert!(roc_auc(&st(&[1.0, 2.0], &[P, P])).is_err());
    }

    #[test]
    fn pr_examples() {
        assert_eq!(pr_auc(&st(&[0.1, 0.4, 0.2], &[P, P, P])).unwrap(), 1.0);
        assert_eq!(pr_auc(&st(&[0.1, 0.4, 0.3, 0.2], &[P, N, N, N])).unwrap(), 0.25);
        let ap = pr_auc(&st(&[0.9, 0.8, 0.7, 0.6], &[P, N, P, N])).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
        assert!(pr_auc(&st(&[0.1, 0.2], &[N, N])).is_err());
    }

    #[test]
    fn r_precision_examples() {
        assert_eq!(r_precision(&st(&[0.9, 0.8, 0.1], &[P, P, N])).unwrap(), 1.0);
        assert_eq!(r_precision(&st(&[0.1, 0.2, 0.8, 0.9], &[P, P, N, N])).unwrap(), 0.0);
        assert_eq!(r_precision(&st(&[5.0, 4.0, 3.0, 2.0], &[P, N, P, N])).unwrap(), 0.5);
    }

    #[test]
    fn tie_order_is_index_ascending() {
        // Positive at index 1 ties with a negative at index 0: it ranks second.
        assert_eq!(pr_auc(&st(&[0.5, 0.5], &[N, P])).unwrap(), 0.5);
        assert_eq!(pr_auc(&st(&[0.5, 0.5], &[P, N])).unwrap(), 1.0);
    }

    #[test]
    fn input_validation() {
        assert!(ScoredTruth::new(&[0.1], &[P, N]).is_err());
        assert!(ScoredTruth::new(&[f64::NAN, 0.1], &[P, N]).is_err());
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<Label>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec((0u8..6).prop_map(|k| k as f64 / 5.0), n),
                prop::collection::vec(any::<bool>().prop_map(|b| if b { P } else { N }), n),
            )
        })
    }

    proptest! {
        #[test]
        fn agrees_with_oracle((s, t) in instance()) {
            let x = st(&s, &t);
            let has_pos = x.n_positive() > 0;
            let has_neg = x.n_positive() < t.len();
            prop_assume!(has_pos && has_neg);
            let (roc, pr, rp) = oracle::metric_oracle(&x).unwrap();
            prop_assert!((roc_auc(&x).unwrap() - roc).abs() <= 1e-12);
            prop_assert!((pr_auc(&x).unwrap() - pr).abs() <= 1e-12);
            prop_assert!((r_precision(&x).unwrap() - rp).abs() <= 1e-12);
        }

        #[test]
        fn invariant_under_increasing_maps((s, t) in instance()) {
            let x = st(&s, &t);
            prop_assume!(x.n_positive() > 0 && x.n_positive() < t.len());
            let mapped: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            let y = st(&mapped, &t);
            prop_assert!((roc_auc(&x).unwrap() - roc_auc(&y).unwrap()).abs() <= 1e-12);
            prop_assert!((pr_auc(&x).unwrap() - pr_auc(&y).unwrap()).abs() <= 1e-12);
            prop_assert!((r_precision(&x).unwrap() - r_precision(&y).unwrap()).abs() <= 1e-12);
        }

        #[test]
        fn complement_symmetry(s in prop::collection::hash_set(-1000i32..1000, 2..30), flags in prop::collection::vec(any::<bool>(), 30)) {
            let s: Vec<f64> = s.into_iter().map(f64::from).collect();
            let t: Vec<Label> = flags[..s.len()].iter().map(|&b| if b { P } else { N }).collect();
            let x = st(&s, &t);
            prop_assume!(x.n_positive() > 0 && x.n_positive() < t.len());
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            let a = roc_auc(&x).unwrap();
            let b = roc_auc(&st(&neg, &t)).unwrap();
            prop_assert!((a + b - 1.0).abs() <= 1e-12);
        }
    }
}
