use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, SIGNAL};
use crate::rng::{self, streams};

/// Requested split sizes. Every split is class-balanced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSizes {
    /// Fractions of the total sample count; must sum to 1.
    Fractions { train: f64, val: f64, test: f64 },
    /// Absolute sample counts per split (half signal, half background).
    Counts { train: usize, val: usize, test: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub sizes: SplitSizes,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: FeatureMatrix,
    pub val: FeatureMatrix,
    pub test: FeatureMatrix,
    /// Row indices into the source matrix, per split.
    pub indices: [Vec<usize>; 3],
}

impl SplitSpec {
    /// Per-class counts for `(train, val, test)` given `total` rows.
    fn per_class(&self, total: usize) -> Result<[usize; 3]> {
        match self.sizes {
            SplitSizes::Fractions { train, val, test } => {
                let fr = [train, val, test];
                if fr.iter().any(|&f| !(0.0..=1.0).contains(&f)) || libm::fabs(train + val + test - 1.0) > 1e-9 {
                    return Err(Error::InvalidConfig(format!(
                        "split fractions must lie in [0,1] and sum to 1, got {fr:?}"
                    )));
                }
                Ok(fr.map(|f| (libm::round(f * total as f64) as usize) / 2))
            }
            SplitSizes::Counts { train, val, test } => Ok([train / 2, val / 2, test / 2]),
        }
    }
}

/// Deterministic class-balanced train/validation/test split.
pub fn split_dataset(x: &FeatureMatrix, spec: &SplitSpec) -> Result<Splits> {
    let per_class = spec.per_class(x.rows())?;
    let need: usize = per_class.iter().sum();
    let mut signal: Vec<usize> = Vec::new();
    let mut background: Vec<usize> = Vec::new();
    for (i, &l) in x.labels().iter().enumerate() {
        if l == SIGNAL {
            signal.push(i);
        } else {
            background.push(i);
        }
    }
    if signal.len() < need || background.len() < need {
        return Err(Error::InsufficientData(format!(
            "balanced split needs {need} samples per class, have {} signal / {} background",
            signal.len(),
            background.len()
        )));
    }
    let sig_perm = rng::permutation(&mut rng::stream(spec.seed, streams::SPLIT_SIGNAL), signal.len());
    let bkg_perm = rng::permutation(&mut rng::stream(spec.seed, streams::SPLIT_BACKGROUND), background.len());
    let mut shuffle = rng::stream(spec.seed, streams::SPLIT_SHUFFLE);

    let mut offset = 0;
    let mut out: [Vec<usize>; 3] = Default::default();
    for (k, &n) in per_class.iter().enumerate() {
        let mut idx: Vec<usize> = sig_perm[offset..offset + n]
            .iter()
            .map(|&p| signal[p])
            .chain(bkg_perm[offset..offset + n].iter().map(|&p| background[p]))
            .collect();
        let order = rng::permutation(&mut shuffle, idx.len());
        idx = order.into_iter().map(|o| idx[o]).collect();
        out[k] = idx;
        offset += n;
    }
    Ok(Splits {
        train: x.select_rows(&out[0]),
        val: x.select_rows(&out[1]),
        test: x.select_rows(&out[2]),
        indices: out,
    })
}

/// Pick `n` rows (half per class) from `pool`, skipping indices in `exclude`.
pub fn balanced_pick(labels: &[u8], pool: &[usize], n: usize, exclude: &[usize]) -> Result<Vec<usize>> {
    let half = n / 2;
    let mut sig = Vec::with_capacity(half);
    let mut bkg = Vec::with_capacity(half);
    for &i in pool {
        if exclude.contains(&i) {
            continue;
        }
        if labels[i] == SIGNAL {
            if sig.len() < half {
                sig.push(i);
            }
        } else if bkg.len() < half {
            bkg.push(i);
        }
    }
    if sig.len() < half || bkg.len() < half {
        return Err(Error::InsufficientData(format!("cannot pick {half} samples per class")));
    }
    // Interleave so that any prefix stays roughly balanced.
    Ok(sig.into_iter().zip(bkg).flat_map(|(s, b)| [s, b]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn data(sig: usize, bkg: usize) -> FeatureMatrix {
        let n = sig + bkg;
        let labels = (0..n).map(|i| u8::from(i < sig)).collect();
        FeatureMatrix::unnamed(DMatrix::from_fn(n, 2, |i, j| (i * 2 + j) as f64), labels).unwrap()
    }

    #[test]
    fn fractions_are_balanced_and_deterministic() {
        let x = data(500, 500);
        let spec = SplitSpec { sizes: SplitSizes::Fractions { train: 0.8, val: 0.1, test: 0.1 }, seed: 7 };
        let s = split_dataset(&x, &spec).unwrap();
        assert_eq!((s.train.rows(), s.val.rows(), s.test.rows()), (800, 100, 100));
        for m in [&s.train, &s.val, &s.test] {
            let (a, b) = m.class_counts();
            assert_eq!(a, b);
        }
        let again = split_dataset(&x, &spec).unwrap();
        assert_eq!(s.indices, again.indices);
        let mut all: Vec<usize> = s.indices.concat();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 1000);
    }

    #[test]
    fn insufficient_minority_class() {
        let x = data(10, 1000);
        let spec = SplitSpec { sizes: SplitSizes::Counts { train: 100, val: 100, test: 0 }, seed: 1 };
        assert!(matches!(split_dataset(&x, &spec), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let x = data(10, 10);
        let spec = SplitSpec { sizes: SplitSizes::Fractions { train: 0.8, val: 0.1, test: 0.2 }, seed: 1 };
        assert!(matches!(split_dataset(&x, &spec), Err(Error::InvalidConfig(_))));
    }
}
