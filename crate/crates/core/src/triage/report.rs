//! Verdict distribution and seeded audit sampling.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Category, TriageVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Share {
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TriageDistribution {
    pub total: usize,
    pub categories: BTreeMap<Category, Share>,
    /// Keyed by `Category.Subtag`.
    pub subtags: BTreeMap<String, Share>,
}

impl TriageDistribution {
    pub fn share(&self, c: Category) -> Share {
        self.categories.get(&c).copied().unwrap_or(Share {
            count: 0,
            fraction: 0.0,
        })
    }
}

pub fn triage_report(verdicts: &[TriageVerdict]) -> TriageDistribution {
    let total = verdicts.len();
    let mut categories: BTreeMap<Category, usize> = BTreeMap::new();
    let mut subtags: BTreeMap<String, usize> = BTreeMap::new();
    for v in verdicts {
        *categories.entry(v.category).or_default() += 1;
        *subtags.entry(v.label()).or_default() += 1;
    }
    let share = |count: usize| Share {
        count,
        fraction: count as f64 / total as f64,
    };
    TriageDistribution {
        total,
        categories: categories.into_iter().map(|(k, c)| (k, share(c))).collect(),
        subtags: subtags.into_iter().map(|(k, c)| (k, share(c))).collect(),
    }
}

/// Draws `n` items (all of them if fewer) without replacement, returned in
/// their original order. The same seed always yields the same sample.
pub fn sample_for_audit<T: Clone>(items: &[T], n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amount = n.min(items.len());
    let mut picked = rand::seq::index::sample(&mut rng, items.len(), amount).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}
