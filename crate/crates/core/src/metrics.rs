//! ROC analysis and subset-based uncertainty.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

fn check(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(shape_err(alloc::format!("{} labels", scores.len()), alloc::format!("{}", labels.len())));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Domain(alloc::format!("NaN score at position {i}")));
    }
    Ok((pos, neg))
}

/// Ranks starting at 1, ties receive the average of their positions.
fn average_ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Area under the ROC curve via the Mann-Whitney U statistic; label 1 is
/// the positive class.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum();
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// ROC points for every distinct threshold, from `(0, 0)` at `+∞` down to
/// `(1, 1)`. A sample counts as positive when `score >= threshold`.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<RocPoint>> {
    let (pos, neg) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = vec![RocPoint { threshold: f64::INFINITY, tpr: 0.0, fpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push(RocPoint { threshold: t, tpr: tp as f64 / pos as f64, fpr: fp as f64 / neg as f64 });
    }
    Ok(out)
}

/// Trapezoidal area under a ROC curve.
pub fn roc_area(points: &[RocPoint]) -> f64 {
    points.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum()
}

/// Index sets of `k` disjoint subsets. Each class is dealt round-robin in
/// its original order, so every subset keeps the class ratio.
pub fn stratified_subsets(labels: &[u8], k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::InvalidConfig("subset count must be positive".into()));
    }
    let mut out = vec![Vec::new(); k];
    for class in [1u8, 0u8] {
        for (n, i) in labels.iter().enumerate().filter(|(_, &l)| l == class).map(|(i, _)| i).enumerate() {
            out[n % k].push(i);
        }
    }
    for s in out.iter_mut() {
        s.sort_unstable();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetAuc {
    pub mean: f64,
    /// Population standard deviation across subsets.
    pub std: f64,
    pub per_subset: Vec<f64>,
}

/// AUC on each of `k` stratified subsets with mean and spread.
pub fn subset_uncertainty(scores: &[f64], labels: &[u8], k: usize) -> Result<SubsetAuc> {
    check(scores, labels)?;
    let mut per_subset = Vec::with_capacity(k);
    for idx in stratified_subsets(labels, k)? {
        let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
        let l: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
        per_subset.push(auc(&s, &l)?);
    }
    let (mean, std) = mean_std(&per_subset);
    Ok(SubsetAuc { mean, std, per_subset })
}

/// Unweighted mean and population standard deviation; `(NaN, NaN)` when empty.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(auc(&[0.5; 4], &[0, 1, 0, 1]).unwrap(), 0.5);
        assert_eq!(auc(&[3.0, 1.0], &[1, 0]).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::DegenerateLabels));
    }

    #[test]
    fn curve_area_matches_rank_statistic() {
        let s = [0.1, 0.4, 0.35, 0.8, 0.4, 0.2];
        let l = [0, 0, 1, 1, 1, 0];
        let roc = roc_curve(&s, &l).unwrap();
        assert_eq!(roc.last().unwrap().tpr, 1.0);
        assert!((roc_area(&roc) - auc(&s, &l).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mean_and_population_std() {
        let (m, s) = mean_std(&[0.7, 0.8, 0.7, 0.8, 0.75]);
        assert!((m - 0.75).abs() < 1e-12);
        // sqrt((4 · 0.05² + 0) / 5) = sqrt(0.002)
        assert!((s - 0.002f64.sqrt()).abs() < 1e-12);
        assert!((s - 0.0447).abs() < 1e-4);
    }

    #[test]
    fn subsets_are_disjoint_and_stratified() {
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i % 3 == 0)).collect();
        let sets = stratified_subsets(&labels, 5).unwrap();
        let mut all: Vec<usize> = sets.concat();
        all.sort_unstable();
        assert_eq!(all, (0..30).collect::<Vec<_>>());
        for s in &sets {
            assert_eq!(s.iter().filter(|&&i| labels[i] == 1).count(), 2);
        }
    }
}
