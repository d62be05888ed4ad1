//! SCAR and SAR labeling mechanisms.
//!
//! Both select exactly `round(ratio * n_P)` positives for the labeled set;
//! every other row (remaining positives and all negatives) is unlabeled.

use ndarray::{Array2, ArrayView1};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Label, LabeledDataset, Mechanism, PuView, Standardizer};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceSpace {
    Raw,
    Standardized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SarOptions {
    /// Labeling weight is `distance ^ exponent`.
    pub exponent: f64,
    pub distance_space: DistanceSpace,
}

impl Default for SarOptions {
    fn default() -> Self {
        SarOptions {
            exponent: 1.0,
            distance_space: DistanceSpace::Standardized,
        }
    }
}

fn labeled_count(n_pos: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::OutOfRange(format!("labeled ratio {ratio} not in (0, 1]")));
    }
    let k = (ratio * n_pos as f64).round() as usize;
    if k == 0 {
        return Err(Error::NoLabeledPositives);
    }
    Ok(k.min(n_pos))
}

fn build_view(ds: &LabeledDataset, mut labeled: Vec<usize>) -> Result<PuView> {
    labeled.sort_unstable();
    let mut flag = vec![false; ds.n()];
    for &i in &labeled {
        flag[i] = true;
    }
    let unlabeled = (0..ds.n()).filter(|&i| !flag[i]).collect();
    PuView::new(ds.clone(), labeled, unlabeled)
}

fn scar_pick(positives: &[usize], k: usize, rng: &mut Rng) -> Vec<usize> {
    rand::seq::index::sample(rng, positives.len(), k)
        .into_iter()
        .map(|j| positives[j])
        .collect()
}

/// Label `round(ratio * n_P)` positives chosen uniformly without replacement.
pub fn scar_label(ds: &LabeledDataset, ratio: f64, seed: u64) -> Result<PuView> {
    let positives = ds.indices_of(Label::Positive);
    let k = labeled_count(positives.len(), ratio)?;
    let mut rng = seed::rng(seed);
    build_view(ds, scar_pick(&positives, k, &mut rng))
}

/// Mean Euclidean distance from each positive to all negatives, in the order
/// of `ds.indices_of(Label::Positive)`.
pub fn mean_distance_to_negatives(features: &Array2<f64>, ds: &LabeledDataset) -> Vec<f64> {
    let negatives = ds.indices_of(Label::Negative);
    let dist = |a: ArrayView1<f64>, b: ArrayView1<f64>| {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    ds.indices_of(Label::Positive)
        .into_iter()
        .map(|p| {
            let row = features.row(p);
            negatives.iter().map(|&q| dist(row, features.row(q))).sum::<f64>() / negatives.len() as f64
        })
        .collect()
}

/// Successive weighted draws without replacement; weights renormalize after
/// every draw. Zero-weight items are drawn uniformly once positive mass runs out.
fn weighted_pick(weights: &[f64], k: usize, rng: &mut Rng) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let slot = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut slot = remaining.len() - 1;
            for (s, &i) in remaining.iter().enumerate() {
                if weights[i] <= 0.0 {
                    continue;
                }
                if u < weights[i] {
                    slot = s;
                    break;
                }
                u -= weights[i];
                slot = s;
            }
            slot
        } else {
            rng.random_range(0..remaining.len())
        };
        picked.push(remaining.swap_remove(slot));
    }
    picked
}

/// Label `round(ratio * n_P)` positives by weighted sampling without
/// replacement, weight `d_i ^ exponent` where `d_i` is the mean distance of
/// positive `i` to the negatives. Positives close to negatives are therefore
/// more likely to stay unlabeled.
pub fn sar_label(ds: &LabeledDataset, ratio: f64, seed: u64, opts: &SarOptions) -> Result<PuView> {
    let positives = ds.indices_of(Label::Positive);
    let k = labeled_count(positives.len(), ratio)?;
    let features = match opts.distance_space {
        DistanceSpace::Raw => ds.features().clone(),
        DistanceSpace::Standardized => Standardizer::fit(ds.features()).transform(ds.features())?,
    };
    let weights: Vec<f64> = mean_distance_to_negatives(&features, ds)
        .into_iter()
        .map(|d| d.powf(opts.exponent))
        .collect();
    let mut rng = seed::rng(seed);
    if weights.iter().all(|&w| w <= 0.0) {
        log::warn!("{}: every positive coincides with the negatives; SAR falls back to SCAR", ds.name());
        return build_view(ds, scar_pick(&positives, k, &mut rng));
    }
    let picked = weighted_pick(&weights, k, &mut rng)
        .into_iter()
        .map(|j| positives[j])
        .collect();
    build_view(ds, picked)
}

pub fn label(ds: &LabeledDataset, mechanism: Mechanism, ratio: f64, seed: u64, sar: &SarOptions) -> Result<PuView> {
    match mechanism {
        Mechanism::Scar => scar_label(ds, ratio, seed),
        Mechanism::Sar => sar_label(ds, ratio, seed, sar),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line(n_pos: usize, n_neg: usize) -> LabeledDataset {
        let n = n_pos + n_neg;
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let y = (0..n)
            .map(|i| if i < n_pos { Label::Positive } else { Label::Negative })
            .collect();
        LabeledDataset::new("line", x, y).unwrap()
    }

    #[test]
    fn scar_exact_counts() {
        let ds = line(10, 5);
        let v = scar_label(&ds, 0.5, 1).unwrap();
        assert_eq!(v.labeled().len(), 5);
        assert_eq!(v.labeled().len() + v.unlabeled().len(), 15);
        let full = scar_label(&ds, 1.0, 1).unwrap();
        assert_eq!(full.labeled(), &(0..10).collect::<Vec<_>>()[..]);
        assert_eq!(full.unlabeled(), &(10..15).collect::<Vec<_>>()[..]);
        assert!(matches!(scar_label(&ds, 0.01, 1), Err(Error::NoLabeledPositives)));
        assert_eq!(scar_label(&ds, 0.5, 9).unwrap().labeled(), scar_label(&ds, 0.5, 9).unwrap().labeled());
    }

    #[test]
    fn sar_prefers_positives_far_from_negatives() {
        let x = array![[0.0, 0.0], [10.0, 10.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]];
        let y = vec![Label::Positive, Label::Positive, Label::Negative, Label::Negative, Label::Negative];
        let ds = LabeledDataset::new("two", x, y).unwrap();
        let opts = SarOptions {
            distance_space: DistanceSpace::Raw,
            ..SarOptions::default()
        };
        let far = (0..1000)
            .filter(|&s| sar_label(&ds, 0.5, s, &opts).unwrap().labeled() == [1])
            .count();
        assert!(far > 950, "far positive labeled {far}/1000 times");
        let all = sar_label(&ds, 1.0, 3, &opts).unwrap();
        assert_eq!(all.labeled(), &[0, 1]);
    }

    #[test]
    fn sar_falls_back_when_all_distances_vanish() {
        let x = Array2::zeros((4, 2));
        let y = vec![Label::Positive, Label::Positive, Label::Negative, Label::Negative];
        let ds = LabeledDataset::new("flat", x, y).unwrap();
        let v = sar_label(&ds, 0.5, 0, &SarOptions::default()).unwrap();
        assert_eq!(v.labeled().len(), 1);
    }

    #[test]
    fn weighted_pick_is_a_permutation_prefix() {
        let mut rng = seed::rng(5);
        let mut p = weighted_pick(&[1.0, 0.0, 2.0, 3.0], 4, &mut rng);
        p.sort_unstable();
        assert_eq!(p, vec![0, 1, 2, 3]);
    }
}
