use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// How neighbour binding masks are combined into a kept-set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnRule {
    /// Keep a side if any neighbour had it binding.
    #[default]
    Union,
    /// Keep a side if more than half of the neighbours had it binding.
    Majority,
}

/// Kept bound-sides for `query` from its `k` nearest training loads.
///
/// Distances are Euclidean; ties go to the lower sample index.
pub fn knn_screen(dataset: &Dataset, query: &[f64], k: usize, rule: KnnRule) -> Result<Vec<bool>> {
    if k == 0 || dataset.len() < k {
        return Err(Error::InsufficientData {
            needed: k.max(1),
            have: dataset.len(),
        });
    }
    let dim = dataset.samples[0].load.len();
    if query.len() != dim {
        return Err(Error::Dimension {
            what: "knn query",
            expected: dim,
            got: query.len(),
        });
    }
    let mut dist: Vec<(f64, usize)> = dataset
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let d2: f64 = s
                .load
                .as_slice()
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d2, i)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let width = dataset.samples[0].binding.len();
    let mut votes = vec![0usize; width];
    for &(_, i) in &dist[..k] {
        for (v, &b) in votes.iter_mut().zip(&dataset.samples[i].binding) {
            *v += b as usize;
        }
    }
    Ok(votes
        .into_iter()
        .map(|v| match rule {
            KnnRule::Union => v > 0,
            KnnRule::Majority => 2 * v > k,
        })
        .collect())
}
