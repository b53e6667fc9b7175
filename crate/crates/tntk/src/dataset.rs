//! Dataset container, preprocessing, and the cross-validation benchmark
//! protocol.
//!
//! Preprocessing standardizes each feature, appends a constant bias
//! coordinate, and scales every sample to unit L2 norm — the input
//! condition under which the limiting kernel is positive definite.
//! The evaluation protocol is 4-fold cross validation with a
//! class-balanced inner train/validation split per fold for
//! hyperparameter selection.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::regression;
use crate::rng::CounterRng;

/// N samples of F features, one column per sample (samples are stored
/// contiguously), with integer class labels in `[0, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputMatrix {
    data: Vec<f64>,
    feature_count: usize,
    labels: Vec<usize>,
    names: Option<Vec<String>>,
}

impl InputMatrix {
    /// Builds from per-sample feature vectors. All samples must share a
    /// dimension; `labels` may be empty for unlabeled data.
    pub fn from_samples(samples: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientSamples { need: 1, have: 0 });
        }
        let feature_count = samples[0].len();
        if feature_count == 0 {
            return Err(Error::InvalidArgument("samples must have at least one feature"));
        }
        if !labels.is_empty() && labels.len() != samples.len() {
            return Err(Error::DimensionMismatch { expected: samples.len(), found: labels.len() });
        }
        let mut data = Vec::with_capacity(samples.len() * feature_count);
        for s in samples {
            if s.len() != feature_count {
                return Err(Error::DimensionMismatch { expected: feature_count, found: s.len() });
            }
            data.extend_from_slice(s);
        }
        Ok(InputMatrix { data, feature_count, labels, names: None })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        self.names = Some(names);
        self
    }

    /// Number of samples (N).
    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.feature_count).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of features (F).
    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    #[inline]
    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.feature_count..(i + 1) * self.feature_count]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.feature_count)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Number of classes (max label + 1); 0 for unlabeled data.
    pub fn class_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Extracts the samples at `indices`, preserving order.
    pub fn subset(&self, indices: &[usize]) -> InputMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.feature_count);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.sample(i));
            if !self.labels.is_empty() {
                labels.push(self.labels[i]);
            }
        }
        InputMatrix { data, feature_count: self.feature_count, labels, names: None }
    }
}

/// Non-fatal observations made during preprocessing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreprocessReport {
    /// Zero-variance feature indices that were dropped.
    pub dropped_features: Vec<usize>,
    /// Pairs of identical samples after normalization. Duplicates break
    /// the distinctness condition for a positive definite kernel; the
    /// ridge jitter keeps the solve well-posed, so this is a warning,
    /// not an error.
    pub duplicate_pairs: usize,
}

/// How raw features are scaled before the bias coordinate is appended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureScaling {
    /// Per-feature standardization to zero mean and unit variance;
    /// zero-variance features are dropped with a warning.
    Standardize,
    /// Per-sample scaling to unit L2 norm. Matches the treatment of
    /// corpus files whose features are already distribution-scaled;
    /// re-standardizing such data distorts the feature scales the
    /// published benchmark accuracies depend on.
    UnitNorm,
    /// Leave raw features untouched.
    None,
}

/// Settings for [`preprocess_with`].
#[derive(Debug, Clone, Copy)]
pub struct PreprocessOptions {
    pub scaling: FeatureScaling,
    /// Constant coordinate appended after scaling so the split weights
    /// carry an implicit bias. Any nonzero value works at unit-variance
    /// initialization; 1.0 is the default.
    pub bias_value: f64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions { scaling: FeatureScaling::Standardize, bias_value: 1.0 }
    }
}

/// Standardizes each feature to zero mean and unit variance, drops
/// zero-variance features, appends a constant `bias_value` coordinate,
/// and normalizes every sample to unit L2 norm.
pub fn preprocess(raw: &InputMatrix, bias_value: f64) -> Result<(InputMatrix, PreprocessReport)> {
    preprocess_with(raw, PreprocessOptions { scaling: FeatureScaling::Standardize, bias_value })
}

/// [`preprocess`] with a configurable feature-scaling stage. Every chain
/// ends the same way: the bias coordinate is appended and each sample is
/// scaled to unit L2 norm, the input condition for a positive definite
/// limiting kernel.
pub fn preprocess_with(
    raw: &InputMatrix,
    options: PreprocessOptions,
) -> Result<(InputMatrix, PreprocessReport)> {
    if options.bias_value == 0.0 {
        return Err(Error::InvalidArgument("bias value must be nonzero"));
    }
    let n = raw.len();
    if n == 0 {
        return Err(Error::InsufficientSamples { need: 1, have: 0 });
    }
    let f = raw.feature_count();
    let mut report = PreprocessReport::default();

    let mut scaled: Vec<Vec<f64>> = Vec::with_capacity(n);
    match options.scaling {
        FeatureScaling::Standardize => {
            let mut mean = vec![0.0; f];
            for s in raw.samples() {
                for (m, v) in mean.iter_mut().zip(s) {
                    *m += v;
                }
            }
            for m in mean.iter_mut() {
                *m /= n as f64;
            }
            let mut var = vec![0.0; f];
            for s in raw.samples() {
                for ((v, x), m) in var.iter_mut().zip(s).zip(&mean) {
                    let d = x - m;
                    *v += d * d;
                }
            }
            for v in var.iter_mut() {
                *v /= n as f64;
            }
            let kept: Vec<usize> = (0..f)
                .filter(|&j| {
                    if var[j] > 0.0 {
                        true
                    } else {
                        report.dropped_features.push(j);
                        false
                    }
                })
                .collect();
            for s in raw.samples() {
                scaled.push(
                    kept.iter().map(|&j| (s[j] - mean[j]) / libm::sqrt(var[j])).collect(),
                );
            }
        }
        FeatureScaling::UnitNorm => {
            for s in raw.samples() {
                let norm = libm::sqrt(s.iter().map(|x| x * x).sum::<f64>());
                let inv = if norm > 0.0 { 1.0 / norm } else { 1.0 };
                scaled.push(s.iter().map(|x| x * inv).collect());
            }
        }
        FeatureScaling::None => {
            for s in raw.samples() {
                scaled.push(s.to_vec());
            }
        }
    }

    let out_f = scaled[0].len() + 1;
    let mut data = Vec::with_capacity(n * out_f);
    for s in &scaled {
        let start = data.len();
        data.extend_from_slice(s);
        data.push(options.bias_value);
        let norm = libm::sqrt(data[start..].iter().map(|x| x * x).sum::<f64>());
        for x in &mut data[start..] {
            *x /= norm;
        }
    }

    let out = InputMatrix {
        data,
        feature_count: out_f,
        labels: raw.labels.clone(),
        names: raw.names.clone(),
    };
    for i in 0..n {
        for j in i + 1..n {
            if out.sample(i) == out.sample(j) {
                report.duplicate_pairs += 1;
            }
        }
    }
    Ok((out, report))
}

/// Number of outer cross-validation folds in the benchmark protocol.
pub const CV_FOLDS: usize = 4;

/// Inner train/validation split of one outer fold's training pool.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Deterministic 4-fold plan with one class-balanced inner split per fold.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPlan {
    pub folds: Vec<Vec<usize>>,
    pub inner: Vec<InnerSplit>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

/// Randomly partitions the samples into 4 outer folds (sizes differing by
/// at most one) and, for each fold, splits the remaining pool into inner
/// train/validation sets with equal per-class counts (the odd member of a
/// class goes to the train side).
pub fn make_cv_plan(x: &InputMatrix, seed: u64) -> Result<CvPlan> {
    let n = x.len();
    if n < CV_FOLDS {
        return Err(Error::InsufficientSamples { need: CV_FOLDS, have: n });
    }
    let mut warnings = Vec::new();
    let mut rng = CounterRng::new(seed);

    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); CV_FOLDS];
    for (pos, idx) in order.iter().enumerate() {
        folds[pos % CV_FOLDS].push(*idx);
    }

    let class_count = x.class_count();
    for c in 0..class_count {
        let members = x.labels().iter().filter(|&&l| l == c).count();
        if members < CV_FOLDS {
            warnings.push(format!(
                "class {c} has only {members} members; folds cannot all contain it"
            ));
        }
    }

    let mut inner = Vec::with_capacity(CV_FOLDS);
    for fold in 0..CV_FOLDS {
        let pool: Vec<usize> =
            (0..n).filter(|i| !folds[fold].contains(i)).collect();
        let mut split_rng = rng.split(fold as u64);
        let mut train = Vec::new();
        let mut validation = Vec::new();
        if class_count == 0 {
            // Unlabeled data: plain half/half split.
            let mut pool = pool;
            split_rng.shuffle(&mut pool);
            let half = pool.len() / 2;
            validation.extend_from_slice(&pool[..half]);
            train.extend_from_slice(&pool[half..]);
        } else {
            for c in 0..class_count {
                let mut members: Vec<usize> =
                    pool.iter().copied().filter(|&i| x.labels()[i] == c).collect();
                split_rng.shuffle(&mut members);
                let half = members.len() / 2;
                validation.extend_from_slice(&members[..half]);
                train.extend_from_slice(&members[half..]);
            }
        }
        train.sort_unstable();
        validation.sort_unstable();
        inner.push(InnerSplit { train, validation });
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    Ok(CvPlan { folds, inner, seed, warnings })
}

/// Options for [`tune_and_evaluate`].
#[derive(Debug, Clone, Copy)]
pub struct TuneOptions {
    /// Ridge regularization; fixed at 1e-8 in the benchmark protocol.
    pub lambda: f64,
    /// Encode one-hot targets as {-1, +1} instead of {0, 1}.
    pub signed_targets: bool,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions { lambda: 1e-8, signed_targets: false }
    }
}

/// Outcome of one outer fold.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    /// Index into the kernel grid of the spec selected on validation;
    /// ties break toward the first spec in grid order.
    pub selected: usize,
    /// Validation accuracy for every grid spec (NaN where the solver
    /// failed and the spec was skipped).
    pub validation_accuracy: Vec<f64>,
    /// Test accuracy of the selected spec refit on the full fold-train set.
    pub test_accuracy: f64,
}

/// Result of the tuned 4-fold evaluation of a kernel grid.
#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub per_fold: Vec<FoldOutcome>,
    /// Mean test accuracy over folds, as a percentage.
    pub mean_accuracy_pct: f64,
    pub warnings: Vec<String>,
}

/// Runs the tuned benchmark protocol: per outer fold, every grid spec is
/// fit on the inner-train set and scored on the inner-validation set; the
/// best spec (first in grid order on ties) is refit on the whole
/// fold-train pool and scored on the held-out fold. Specs whose solve
/// fails are skipped with a warning.
pub fn tune_and_evaluate(
    x: &InputMatrix,
    grid: &[KernelSpec],
    plan: &CvPlan,
    options: TuneOptions,
) -> Result<TuneOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("kernel grid must be non-empty"));
    }
    if x.labels().is_empty() {
        return Err(Error::InvalidArgument("tuning requires labeled data"));
    }
    let classes = x.class_count();
    let mut warnings = Vec::new();
    let mut per_fold = Vec::with_capacity(plan.folds.len());
    let mut accuracy_sum = 0.0;

    for (fold_idx, fold) in plan.folds.iter().enumerate() {
        let split = &plan.inner[fold_idx];
        let inner_train = x.subset(&split.train);
        let inner_val = x.subset(&split.validation);

        let mut validation_accuracy = vec![f64::NAN; grid.len()];
        let mut best: Option<(usize, f64)> = None;
        for (gi, spec) in grid.iter().enumerate() {
            match fit_and_score(spec, &inner_train, &inner_val, classes, options) {
                Ok(acc) => {
                    validation_accuracy[gi] = acc;
                    let better = match best {
                        None => true,
                        Some((_, best_acc)) => acc > best_acc,
                    };
                    if better {
                        best = Some((gi, acc));
                    }
                }
                Err(err) => {
                    warnings.push(format!(
                        "fold {fold_idx}: spec {gi} skipped during tuning: {err}"
                    ));
                }
            }
        }
        let (selected, _) = best.ok_or(Error::InvalidArgument(
            "every kernel spec failed to fit on the inner split",
        ))?;

        let pool: Vec<usize> = (0..x.len()).filter(|i| !fold.contains(i)).collect();
        let fold_train = x.subset(&pool);
        let fold_test = x.subset(fold);
        let test_accuracy =
            fit_and_score(&grid[selected], &fold_train, &fold_test, classes, options)?;
        accuracy_sum += test_accuracy;
        per_fold.push(FoldOutcome { selected, validation_accuracy, test_accuracy });
    }

    Ok(TuneOutcome {
        mean_accuracy_pct: 100.0 * accuracy_sum / plan.folds.len() as f64,
        per_fold,
        warnings,
    })
}

fn fit_and_score(
    spec: &KernelSpec,
    train: &InputMatrix,
    test: &InputMatrix,
    classes: usize,
    options: TuneOptions,
) -> Result<f64> {
    let targets = regression::one_hot(train.labels(), classes, options.signed_targets);
    let model = regression::krr_fit(spec.clone(), train.clone(), &targets, options.lambda)?;
    let predicted = regression::classify(&model, test)?;
    let hits = predicted.iter().zip(test.labels()).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / test.len() as f64)
}
