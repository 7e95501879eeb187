//! Nearest-neighbor classification and its accuracy scores.
//!
//! Reconstruction quality is also judged by how well downstream
//! analysis survives it: label a set of test spectra by their nearest
//! training spectrum, then score the predictions against ground truth
//! with overall accuracy, average (per-class) accuracy, and Cohen's
//! kappa.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Classification accuracy summary. All three headline scores live in
/// `[0, 1]` (multiply by 100 to report percentages); `per_class` holds
/// the recall of each ground-truth class, ordered by ascending class
/// id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    /// Fraction of test samples labeled correctly.
    pub oa: f64,
    /// Mean of the per-class recalls.
    pub aa: f64,
    /// Chance-corrected agreement, clamped at zero: a predictor worse
    /// than the marginal-chance baseline reports 0 rather than a
    /// negative score.
    pub kappa: f64,
    pub per_class: Vec<f64>,
}

/// Labels every test spectrum with the class of its Euclidean-nearest
/// training spectrum. Distance ties break toward the lowest training
/// column index.
pub fn nn_classify(
    train_specs: &Matrix,
    train_labels: &[u32],
    test_specs: &Matrix,
) -> Result<Vec<u32>> {
    if train_specs.cols() == 0 {
        return Err(Error::validation("classify: empty training set"));
    }
    if train_specs.cols() != train_labels.len() {
        return Err(Error::Shape(format!(
            "classify: {} training spectra but {} labels",
            train_specs.cols(),
            train_labels.len()
        )));
    }
    if train_specs.rows() != test_specs.rows() {
        return Err(Error::Shape(format!(
            "classify: training spectra have {} bands, test spectra {}",
            train_specs.rows(),
            test_specs.rows()
        )));
    }
    // Pixel vectors as contiguous rows for the distance scans.
    let train_t = train_specs.transpose();
    let test_t = test_specs.transpose();
    let mut labels = Vec::with_capacity(test_specs.cols());
    for j in 0..test_specs.cols() {
        let query = test_t.row(j);
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for i in 0..train_specs.cols() {
            let d: f64 = train_t
                .row(i)
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        labels.push(train_labels[best]);
    }
    Ok(labels)
}

/// Scores predicted labels against ground truth.
///
/// Overall accuracy is the plain fraction correct; average accuracy is
/// the mean recall over the classes present in the truth; kappa is
/// `(OA − p_e)/(1 − p_e)` with the chance agreement `p_e` taken from
/// the confusion-matrix marginals, clamped into `[0, 1]`.
pub fn classification_scores(predicted: &[u32], truth: &[u32]) -> Result<ClassReport> {
    if truth.is_empty() {
        return Err(Error::validation("classify: empty test set"));
    }
    if predicted.len() != truth.len() {
        return Err(Error::Shape(format!(
            "classify: {} predictions for {} truth labels",
            predicted.len(),
            truth.len()
        )));
    }
    let n = truth.len() as f64;

    // Class universe: everything either side mentions, in sorted order.
    let mut classes: Vec<u32> = truth.iter().chain(predicted).copied().collect();
    classes.sort_unstable();
    classes.dedup();
    let index_of = |c: u32| classes.binary_search(&c).unwrap();

    let k = classes.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&p, &t) in predicted.iter().zip(truth) {
        confusion[index_of(t)][index_of(p)] += 1;
    }

    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    let oa = correct as f64 / n;

    // Recall per class actually present in the truth.
    let mut per_class = Vec::new();
    for (i, _) in classes.iter().enumerate() {
        let count: usize = confusion[i].iter().sum();
        if count > 0 {
            per_class.push(confusion[i][i] as f64 / count as f64);
        }
    }
    let aa = per_class.iter().sum::<f64>() / per_class.len() as f64;

    // Chance agreement from the marginals.
    let mut p_e = 0.0;
    for i in 0..k {
        let row: usize = confusion[i].iter().sum();
        let col: usize = (0..k).map(|r| confusion[r][i]).sum();
        p_e += (row as f64 / n) * (col as f64 / n);
    }
    let kappa = if p_e < 1.0 {
        ((oa - p_e) / (1.0 - p_e)).clamp(0.0, 1.0)
    } else {
        // Both sides constant: total agreement or total disagreement.
        if oa == 1.0 {
            1.0
        } else {
            0.0
        }
    };

    Ok(ClassReport {
        oa,
        aa,
        kappa,
        per_class,
    })
}
