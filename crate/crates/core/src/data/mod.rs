//! Datasets, splitting, standardization and PU labeling simulation.

mod catalog;
mod csv;
mod labeling;
mod synth;

use std::fmt;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use self::catalog::{Catalog, CatalogEntry, CheckEntry, ValidationReport};
pub use self::csv::{load_csv, read_csv, CsvSchema};
pub use self::labeling::{
    label, mean_distance_to_negatives, sar_label, scar_label, DistanceSpace, SarOptions,
};
pub use self::synth::{synth_gaussian, GaussianMixture};

/// Binary class label, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Label> {
        match sign {
            1 => Some(Label::Positive),
            -1 => Some(Label::Negative),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

/// Fully labeled PN data: the ground truth of every simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    name: String,
    features: Array2<f64>,
    labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, features: Array2<f64>, labels: Vec<Label>) -> Result<Self> {
        let (n, d) = features.dim();
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        if n < 2 {
            return Err(Error::TooSmall(format!("{n} rows, need at least 2")));
        }
        if d == 0 {
            return Err(Error::Empty("feature columns"));
        }
        if let Some(((row, col), _)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "non-finite feature at row {row}, column {col}"
            )));
        }
        let n_pos = labels.iter().filter(|l| l.is_positive()).count();
        if n_pos == 0 || n_pos == n {
            return Err(Error::SingleClass);
        }
        Ok(LabeledDataset {
            name: name.into(),
            features,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    pub fn n_negative(&self) -> usize {
        self.n() - self.n_positive()
    }

    pub fn positive_ratio(&self) -> f64 {
        self.n_positive() as f64 / self.n() as f64
    }

    pub fn prior(&self) -> ClassPrior {
        ClassPrior::new(self.positive_ratio()).expect("both classes present")
    }

    pub fn indices_of(&self, label: Label) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i] == label).collect()
    }

    /// Rows `idx` (in the given order) as a new dataset. Fails if the
    /// selection is not itself a valid dataset.
    pub fn select(&self, idx: &[usize]) -> Result<LabeledDataset> {
        LabeledDataset::new(
            self.name.clone(),
            self.features.select(Axis(0), idx),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    fn with_features(&self, features: Array2<f64>) -> LabeledDataset {
        LabeledDataset {
            name: self.name.clone(),
            features,
            labels: self.labels.clone(),
        }
    }
}

/// Positive class prior `pi_p`, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassPrior(f64);

impl ClassPrior {
    pub fn new(pi_p: f64) -> Result<Self> {
        if pi_p > 0.0 && pi_p < 1.0 {
            Ok(ClassPrior(pi_p))
        } else {
            Err(Error::OutOfRange(format!("class prior {pi_p} not in (0, 1)")))
        }
    }

    /// `multiplier * pi_p`, clipped to `[eps, 1 - eps]`.
    pub fn scaled(self, multiplier: f64, eps: f64) -> Self {
        ClassPrior((self.0 * multiplier).clamp(eps, 1.0 - eps))
    }

    pub fn positive(self) -> f64 {
        self.0
    }

    pub fn negative(self) -> f64 {
        1.0 - self.0
    }
}

/// How labeled positives are selected from the true positives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mechanism {
    /// Selected completely at random.
    #[serde(rename = "SCAR")]
    Scar,
    /// Selected at random with a distance-to-negatives bias.
    #[serde(rename = "SAR")]
    Sar,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::Scar => "SCAR",
            Mechanism::Sar => "SAR",
        })
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scar" => Ok(Mechanism::Scar),
            "sar" => Ok(Mechanism::Sar),
            other => Err(Error::Config(format!("unknown labeling mechanism `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub labeled_ratio: f64,
    pub mechanism: Mechanism,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            labeled_ratio: 0.5,
            mechanism: Mechanism::Scar,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::OutOfRange(format!(
                "train fraction {} not in (0, 1)",
                self.train_fraction
            )));
        }
        if !(self.labeled_ratio > 0.0 && self.labeled_ratio <= 1.0) {
            return Err(Error::OutOfRange(format!(
                "labeled ratio {} not in (0, 1]",
                self.labeled_ratio
            )));
        }
        Ok(())
    }
}

/// A dataset split into labeled positives `L` and unlabeled examples `U`.
///
/// The true labels stay attached for evaluation. Training code must only go
/// through [`PuView::labeled_features`] and [`PuView::unlabeled_features`].
#[derive(Debug, Clone)]
pub struct PuView {
    base: LabeledDataset,
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
}

impl PuView {
    pub fn new(base: LabeledDataset, labeled: Vec<usize>, unlabeled: Vec<usize>) -> Result<Self> {
        let n = base.n();
        if labeled.is_empty() {
            return Err(Error::NoLabeledPositives);
        }
        if unlabeled.is_empty() {
            return Err(Error::Empty("unlabeled set"));
        }
        let mut seen = vec![false; n];
        for &i in labeled.iter().chain(&unlabeled) {
            if i >= n {
                return Err(Error::OutOfRange(format!("index {i} >= {n}")));
            }
            if seen[i] {
                return Err(Error::Config(format!("index {i} appears twice")));
            }
            seen[i] = true;
        }
        if labeled.len() + unlabeled.len() != n {
            return Err(Error::Config("labeled and unlabeled sets do not cover the data".into()));
        }
        if let Some(&i) = labeled.iter().find(|&&i| !base.labels[i].is_positive()) {
            return Err(Error::Config(format!("labeled index {i} is a negative")));
        }
        Ok(PuView {
            base,
            labeled,
            unlabeled,
        })
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn features(&self) -> &Array2<f64> {
        self.base.features()
    }

    pub fn labeled_features(&self) -> Array2<f64> {
        self.base.features.select(Axis(0), &self.labeled)
    }

    pub fn unlabeled_features(&self) -> Array2<f64> {
        self.base.features.select(Axis(0), &self.unlabeled)
    }

    /// Per-row flag, `true` for labeled positives.
    pub fn is_labeled(&self) -> Vec<bool> {
        let mut flags = vec![false; self.n()];
        for &i in &self.labeled {
            flags[i] = true;
        }
        flags
    }

    /// Evaluation only. Ground-truth labels of every row.
    pub fn hidden_truth(&self) -> &[Label] {
        self.base.labels()
    }

    /// Evaluation only. The underlying fully labeled dataset.
    pub fn base(&self) -> &LabeledDataset {
        &self.base
    }

    /// Replace the ground truth of unlabeled rows; labeled rows must stay positive.
    pub fn with_hidden_truth(&self, truth: Vec<Label>) -> Result<PuView> {
        let base = LabeledDataset::new(self.base.name.clone(), self.base.features.clone(), truth)?;
        PuView::new(base, self.labeled.clone(), self.unlabeled.clone())
    }
}

/// Affine map fitted on a training set: `(x - mean) / scale`, with
/// zero-variance features sent to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Array2<f64>) -> Standardizer {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean.push(m);
            // Treat sub-rounding spread as constant.
            scale.push(if sd > 1e-12 * m.abs().max(1.0) { sd } else { 0.0 });
        }
        Standardizer { mean, scale }
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: x.ncols(),
            });
        }
        let mut out = x.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.mean[j], self.scale[j]);
            col.mapv_inplace(|v| if s > 0.0 { (v - m) / s } else { 0.0 });
        }
        Ok(out)
    }
}

/// Standardize both sets with statistics of `train` only.
pub fn standardize(
    train: &LabeledDataset,
    test: &LabeledDataset,
) -> Result<(LabeledDataset, LabeledDataset, Standardizer)> {
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            found: test.dim(),
        });
    }
    let stats = Standardizer::fit(train.features());
    let tr = train.with_features(stats.transform(train.features())?);
    let te = test.with_features(stats.transform(test.features())?);
    Ok((tr, te, stats))
}

/// Per-class train counts: largest-remainder rounding of
/// `fraction * class_size` towards a total of `round(fraction * n)`, then
/// clamped so every class keeps at least one row on each side.
fn stratified_train_counts(class_sizes: &[usize], fraction: f64) -> Result<Vec<usize>> {
    let n: usize = class_sizes.iter().sum();
    let target = (fraction * n as f64).round() as usize;
    let quotas: Vec<f64> = class_sizes.iter().map(|&c| fraction * c as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let assigned: usize = counts.iter().sum();
    for &c in order.iter().cycle().take(target.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    for (c, &size) in class_sizes.iter().enumerate() {
        if size < 2 {
            return Err(Error::TooSmall(format!(
                "class {c} has {size} rows; need one on each side of the split"
            )));
        }
        counts[c] = counts[c].clamp(1, size - 1);
    }
    Ok(counts)
}

/// Stratified random split into `(train, test)`. Row order within each side
/// follows the original order.
pub fn train_test_split(
    ds: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let classes = [ds.indices_of(Label::Positive), ds.indices_of(Label::Negative)];
    let counts = stratified_train_counts(&[classes[0].len(), classes[1].len()], spec.train_fraction)?;
    let mut rng = seed::rng(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (mut idx, k) in classes.into_iter().zip(counts) {
        idx.shuffle(&mut rng);
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.select(&train)?, ds.select(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy(n_pos: usize, n_neg: usize) -> LabeledDataset {
        let n = n_pos + n_neg;
        let x = Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f64);
        let y = (0..n)
            .map(|i| if i < n_pos { Label::Positive } else { Label::Negative })
            .collect();
        LabeledDataset::new("toy", x, y).unwrap()
    }

    #[test]
    fn dataset_invariants() {
        let x = array![[1.0], [2.0]];
        assert!(LabeledDataset::new("a", x.clone(), vec![Label::Positive, Label::Negative]).is_ok());
        assert!(matches!(
            LabeledDataset::new("a", x.clone(), vec![Label::Positive, Label::Positive]),
            Err(Error::SingleClass)
        ));
        assert!(LabeledDataset::new("a", array![[1.0]], vec![Label::Positive]).is_err());
        assert!(LabeledDataset::new("a", array![[f64::NAN], [1.0]], vec![Label::Positive, Label::Negative]).is_err());
    }

    #[test]
    fn standardize_population_std() {
        let train = LabeledDataset::new(
            "t",
            array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]],
            vec![Label::Positive, Label::Negative, Label::Negative],
        )
        .unwrap();
        let test = LabeledDataset::new(
            "t",
            array![[2.0, 7.0], [4.0, 5.0]],
            vec![Label::Positive, Label::Negative],
        )
        .unwrap();
        let (tr, te, stats) = standardize(&train, &test).unwrap();
        let z = 1.5f64.sqrt(); // 1 / sqrt(2/3)
        let col: Vec<f64> = tr.features().column(0).to_vec();
        for (a, b) in col.iter().zip([-z, 0.0, z]) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(tr.features().column(1).iter().all(|&v| v == 0.0));
        assert_eq!(te.features()[[0, 0]], 0.0);
        assert_eq!(te.features()[[0, 1]], 0.0);
        assert_eq!(stats.scale[1], 0.0);
        let bad = LabeledDataset::new("t", array![[1.0], [2.0]], vec![Label::Positive, Label::Negative]).unwrap();
        assert!(matches!(standardize(&train, &bad), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn standardized_train_has_unit_moments_and_is_idempotent() {
        let ds = synth_gaussian(&GaussianMixture::new(200, 4, 0.2), 3).unwrap();
        let (tr, _, _) = standardize(&ds, &ds).unwrap();
        for col in tr.features().columns() {
            let m = col.sum() / 200.0;
            let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 200.0;
            assert!(m.abs() < 1e-9 && (v - 1.0).abs() < 1e-9);
        }
        let (again, _, _) = standardize(&tr, &tr).unwrap();
        let diff = (&again.features - &tr.features).mapv(f64::abs);
        assert!(diff.iter().all(|&d| d <= 1e-9));
    }

    #[test]
    fn stratified_largest_remainder_counts() {
        // 0.7 * 3 = 2.1 and 0.7 * 7 = 4.9; one leftover row goes to the larger remainder.
        assert_eq!(stratified_train_counts(&[3, 7], 0.7).unwrap(), vec![2, 5]);
        let ds = toy(3, 7);
        let spec = SplitSpec {
            seed: 11,
            ..SplitSpec::default()
        };
        let (tr, te) = train_test_split(&ds, &spec).unwrap();
        assert_eq!((tr.n(), tr.n_positive()), (7, 2));
        assert_eq!((te.n(), te.n_positive()), (3, 1));
        let (tr2, te2) = train_test_split(&ds, &spec).unwrap();
        assert_eq!(tr, tr2);
        assert_eq!(te, te2);
    }

    #[test]
    fn split_is_a_partition() {
        let ds = toy(5, 40);
        let (tr, te) = train_test_split(&ds, &SplitSpec { seed: 4, ..SplitSpec::default() }).unwrap();
        let mut rows: Vec<Vec<u64>> = tr
            .features()
            .rows()
            .into_iter()
            .chain(te.features().rows())
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        rows.sort();
        rows.dedup();
        assert_eq!(rows.len(), 45);
        assert!(tr.n_positive() >= 1 && te.n_positive() >= 1);
    }

    #[test]
    fn split_rejects_unstratifiable() {
        let ds = toy(1, 1);
        let spec = SplitSpec {
            train_fraction: 0.5,
            ..SplitSpec::default()
        };
        assert!(matches!(train_test_split(&ds, &spec), Err(Error::TooSmall(_))));
    }

    #[test]
    fn prior_scaling_clips() {
        let p = ClassPrior::new(0.3).unwrap();
        assert_eq!(p.scaled(4.0, 1e-3).positive(), 1.0 - 1e-3);
        assert!((p.scaled(0.5, 1e-3).positive() - 0.15).abs() < 1e-15);
        assert!(ClassPrior::new(1.0).is_err());
        assert!(ClassPrior::new(0.0).is_err());
    }

    #[test]
    fn pu_view_rejects_bad_partitions() {
        let ds = toy(2, 2);
        assert!(PuView::new(ds.clone(), vec![0], vec![1, 2, 3]).is_ok());
        assert!(PuView::new(ds.clone(), vec![2], vec![0, 1, 3]).is_err());
        assert!(PuView::new(ds.clone(), vec![0], vec![1, 2]).is_err());
        assert!(PuView::new(ds.clone(), vec![0], vec![0, 1, 2, 3]).is_err());
        assert!(PuView::new(ds, vec![], vec![0, 1, 2, 3]).is_err());
    }
}
