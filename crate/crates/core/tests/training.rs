use std::collections::HashSet;

use acdrl::corpus::{generate_synthetic, Clause, Corpus, Document, LabelSet, SynthConfig};
use acdrl::eval::{crossval, ha_grid_search, ExperimentConfig, GridSpec, Method};
use acdrl::features::{fnv1a64, FeatureConfig, HaConfig};
use acdrl::inference::annotate_corpus;
use acdrl::lspi::{train, LspiConfig};

const HASH_DIM: usize = 32;

/// Two documents of ten clauses. Each clause is one word, and no two words
/// share a hash bucket, so every clause owns a private feature coordinate.
fn unique_word_corpus() -> Corpus {
    let labels = LabelSet::new(["a", "b", "c"]).unwrap();
    let mut used = HashSet::new();
    let mut words = (0..).map(|i| format!("w{i}")).filter(|w| used.insert(fnv1a64(w.as_bytes()) % HASH_DIM as u64));
    let documents = (0..2)
        .map(|d| {
            let clauses = (0..10)
                .map(|i| Clause::new(words.next().unwrap(), Some((d * 7 + i * 5) % 3)))
                .collect();
            Document::new(format!("d{d}"), clauses).unwrap()
        })
        .collect();
    Corpus::new(labels, documents).unwrap()
}

#[test]
fn gamma_zero_fits_training_labels() {
    let corpus = unique_word_corpus();
    let features = FeatureConfig {
        hash_dim: HASH_DIM,
        marker_lexicon: vec![],
        token_count_cap: 50,
    };
    let cfg = LspiConfig {
        gamma: 0.0,
        episodes: 60,
        seed: 4,
        ..LspiConfig::default()
    };
    let policy = train(&corpus, &cfg, &features, &HaConfig::new(0, 0)).unwrap();
    let results = annotate_corpus(&policy, &corpus, 10).unwrap();
    for (doc, r) in corpus.documents.iter().zip(&results) {
        let gold: Vec<usize> = doc.gold_labels().into_iter().map(Option::unwrap).collect();
        assert_eq!(r.annotations, gold, "document {}", doc.id);
    }
}

#[test]
fn grid_cell_matches_standalone_crossval() {
    let corpus = generate_synthetic(
        &SynthConfig {
            num_documents: 8,
            clauses_per_doc: (3, 6),
            ..SynthConfig::default()
        },
        9,
    )
    .unwrap();
    let cfg = ExperimentConfig {
        features: FeatureConfig {
            hash_dim: 8,
            marker_lexicon: vec![],
            token_count_cap: 50,
        },
        lspi: LspiConfig {
            episodes: 2,
            ..LspiConfig::default()
        },
        folds: 2,
        repeats: 2,
        seed: 9,
        ..ExperimentConfig::default()
    };
    for method in [Method::Rl, Method::Baseline] {
        let grid = ha_grid_search(&corpus, &GridSpec::new(0..=1, 0..=1), method, &cfg).unwrap();
        assert_eq!(grid.cells.len(), 4);
        let alone = crossval(&corpus, method, &HaConfig::new(1, 1), &cfg).unwrap();
        let from_grid = grid.cell(1, 1).unwrap();
        assert_eq!(from_grid.accuracies(), alone.iter().map(|f| f.metrics.accuracy).collect::<Vec<_>>());
    }
}
