use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::Corpus;
use crate::error::{Error, Result};
use crate::rng;

/// One train/test split at document granularity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub repeat: usize,
    pub fold: usize,
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

/// Repeated grouped k-fold. For each repeat the document ids are shuffled
/// with the `"folds"` substream of `seed` and dealt round-robin into `k`
/// buckets; bucket `f` is the test side of fold `f`.
pub fn grouped_kfold(corpus: &Corpus, k: usize, repeats: usize, seed: u64) -> Result<Vec<Split>> {
    if k < 2 {
        return Err(Error::invalid("k", "must be at least 2"));
    }
    if repeats < 1 {
        return Err(Error::invalid("repeats", "must be at least 1"));
    }
    let n = corpus.documents.len();
    if k > n {
        return Err(Error::invalid(
            "k",
            format!("{k} folds requested but the corpus has only {n} documents"),
        ));
    }

    let ids: Vec<&String> = corpus.documents.iter().map(|d| &d.id).collect();
    let mut splits = Vec::with_capacity(k * repeats);
    for repeat in 0..repeats {
        let mut order = ids.clone();
        order.shuffle(&mut rng::substream(seed, "folds", repeat as u64));
        let mut buckets = vec![BTreeSet::new(); k];
        for (i, id) in order.into_iter().enumerate() {
            buckets[i % k].insert(id.clone());
        }
        for fold in 0..k {
            let train = buckets
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != fold)
                .flat_map(|(_, ids)| ids.iter().cloned())
                .collect();
            splits.push(Split {
                repeat,
                fold,
                train,
                test: buckets[fold].clone(),
            });
        }
    }
    Ok(splits)
}
