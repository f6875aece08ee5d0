use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::curate::CuratedDataset;
use super::record::Split;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidConfig(format!("split ratios must be non-negative: {self:?}")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("split ratios must sum to 1: {self:?}")));
        }
        Ok(())
    }

    /// (validation, test) record counts for a stratum of `n`.
    fn counts(&self, n: usize) -> (usize, usize) {
        let val = ((n as f64) * self.validation).round() as usize;
        let test = (((n as f64) * self.test).round() as usize).min(n - val.min(n));
        (val.min(n), test)
    }
}

/// Stratified, seeded train/validation/test assignment.
///
/// Each label stratum is shuffled independently; strata with fewer records
/// than there are splits go entirely to train.
pub fn assign_splits(dataset: &mut CuratedDataset, ratios: &SplitRatios, seed: u64) -> Result<()> {
    ratios.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut strata: BTreeMap<_, Vec<usize>> = BTreeMap::new();
    for (i, e) in dataset.entries.iter().enumerate() {
        strata.entry(e.label).or_default().push(i);
    }
    let mut warnings = Vec::new();
    for (stream, (label, mut members)) in strata.into_iter().enumerate() {
        members.sort_by(|&a, &b| dataset.entries[a].record.id.cmp(&dataset.entries[b].record.id));
        let n = members.len();
        let (n_val, n_test) = if n < Split::ALL.len() {
            if ratios.train < 1.0 {
                warnings.push(format!(
                    "stratum {} has {n} records; all assigned to train",
                    label.to_class()
                ));
            }
            (0, 0)
        } else {
            ratios.counts(n)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        members.shuffle(&mut rng);
        for (k, idx) in members.into_iter().enumerate() {
            let split = if k < n_val {
                Split::Validation
            } else if k < n_val + n_test {
                Split::Test
            } else {
                Split::Train
            };
            dataset.entries[idx].split = Some(split);
        }
    }
    for w in &warnings {
        log::warn!("{}: {w}", dataset.task);
    }
    dataset.warnings.extend(warnings);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::curate::{CuratedEntry, CurationConfig};
    use crate::corpus::record::{Label, SongRecord, Task};

    fn dataset(labels: &[(bool, usize)]) -> CuratedDataset {
        let mut entries = Vec::new();
        for &(label, n) in labels {
            for i in 0..n {
                entries.push(CuratedEntry {
                    record: SongRecord {
                        id: format!("{label}-{i:05}"),
                        title: String::new(),
                        artist: String::new(),
                        genre: "pop".into(),
                        year: 2000,
                        views: 0,
                        lyrics: "x".into(),
                        language: "en".into(),
                    },
                    label: Label::Success(label),
                    split: None,
                });
            }
        }
        CuratedDataset {
            task: Task::Success,
            entries,
            config: CurationConfig::default(),
            seed: 0,
            warnings: Vec::new(),
            created_at: String::new(),
        }
    }

    fn per_class(ds: &CuratedDataset) -> BTreeMap<(String, Split), usize> {
        let mut m = BTreeMap::new();
        for e in &ds.entries {
            *m.entry((e.label.to_class(), e.split.unwrap())).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn stratified_counts() {
        let mut ds = dataset(&[(true, 5000), (false, 5000)]);
        assign_splits(&mut ds, &SplitRatios::default(), 11).unwrap();
        let m = per_class(&ds);
        for class in ["success", "fail"] {
            assert_eq!(m[&(class.to_string(), Split::Train)], 4000);
            assert_eq!(m[&(class.to_string(), Split::Validation)], 500);
            assert_eq!(m[&(class.to_string(), Split::Test)], 500);
        }
    }

    #[test]
    fn all_train_ratio() {
        let mut ds = dataset(&[(true, 10), (false, 7)]);
        let ratios = SplitRatios {
            train: 1.0,
            validation: 0.0,
            test: 0.0,
        };
        assign_splits(&mut ds, &ratios, 1).unwrap();
        assert!(ds.entries.iter().all(|e| e.split == Some(Split::Train)));
        assert!(ds.warnings.is_empty());
    }

    #[test]
    fn tiny_stratum_goes_to_train_with_warning() {
        let mut ds = dataset(&[(true, 2), (false, 10)]);
        assign_splits(&mut ds, &SplitRatios::default(), 1).unwrap();
        assert!(ds
            .entries
            .iter()
            .filter(|e| e.label == Label::Success(true))
            .all(|e| e.split == Some(Split::Train)));
        assert_eq!(ds.warnings.len(), 1);
    }

    #[test]
    fn deterministic_under_seed() {
        let mut a = dataset(&[(true, 50), (false, 50)]);
        let mut b = a.clone();
        assign_splits(&mut a, &SplitRatios::default(), 9).unwrap();
        assign_splits(&mut b, &SplitRatios::default(), 9).unwrap();
        assert_eq!(a.entries, b.entries);
        let mut c = dataset(&[(true, 50), (false, 50)]);
        assign_splits(&mut c, &SplitRatios::default(), 10).unwrap();
        assert_ne!(a.entries, c.entries);
    }

    #[test]
    fn rejects_bad_ratios_and_empty() {
        let mut ds = dataset(&[(true, 5)]);
        let bad = SplitRatios {
            train: 0.5,
            validation: 0.1,
            test: 0.1,
        };
        assert!(assign_splits(&mut ds, &bad, 0).is_err());
        let mut empty = dataset(&[]);
        assert!(assign_splits(&mut empty, &SplitRatios::default(), 0).is_err());
    }
}
