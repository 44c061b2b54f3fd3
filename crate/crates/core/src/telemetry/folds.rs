use std::ops::Range;

use crate::simplant::SensorRecord;
use crate::units::day_of;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FoldError {
    #[error("need {needed} days for the requested folds, data spans {available}")]
    InsufficientData { needed: u64, available: u64 },
    #[error("fold count and days per fold must be positive")]
    Invalid,
}

/// `k` blocks of consecutive whole days, in chronological order.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldSplit {
    pub folds: Vec<Range<u64>>,
}

impl FoldSplit {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Fold index holding `day`, if any.
    pub fn fold_of_day(&self, day: u64) -> Option<usize> {
        self.folds.iter().position(|f| f.contains(&day))
    }

    /// `(train, test)` record indices for holding out fold `i`. Records on
    /// days outside every fold land in neither.
    pub fn split(&self, records: &[SensorRecord], i: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (idx, r) in records.iter().enumerate() {
            match self.fold_of_day(day_of(r.ts)) {
                Some(f) if f == i => test.push(idx),
                Some(_) => train.push(idx),
                None => {}
            }
        }
        (train, test)
    }
}

pub fn kfold_by_days(records: &[SensorRecord], k: usize, days_per_fold: u64) -> Result<FoldSplit, FoldError> {
    if k == 0 || days_per_fold == 0 {
        return Err(FoldError::Invalid);
    }
    let needed = k as u64 * days_per_fold;
    let (first, last) = match (records.first(), records.last()) {
        (Some(a), Some(b)) => (day_of(a.ts), day_of(b.ts)),
        _ => return Err(FoldError::InsufficientData { needed, available: 0 }),
    };
    let available = last - first + 1;
    if available < needed {
        return Err(FoldError::InsufficientData { needed, available });
    }
    let folds = (0..k as u64)
        .map(|i| first + i * days_per_fold..first + (i + 1) * days_per_fold)
        .collect();
    Ok(FoldSplit { folds })
}
