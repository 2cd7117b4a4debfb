//! Clause featurization and historical-annotation (HA) slots.
//!
//! A state vector is the concatenation of
//!
//! * `N_a = 8 + D + |lexicon|` base features: structural features, hashed
//!   unigram/bigram counts and discourse-marker flags;
//! * `n_l` type-L slots: last-round labels in a window around the clause;
//! * `n_c` type-C slots: current-round labels of the preceding clauses.
//!
//! Every slot is `E` wide: `|A| + 1` in one-hot mode, `1` in scalar mode.

use std::collections::HashSet;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::corpus::{Clause, Document};
use crate::error::{Error, Result};

pub const STRUCTURAL_FEATURES: usize = 8;

pub const DEFAULT_MARKERS: [&str; 12] = [
    "because", "since", "therefore", "however", "but", "so", "think", "believe", "reason", "should",
    "recommend", "overall",
];

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub hash_dim: usize,
    pub marker_lexicon: Vec<String>,
    pub token_count_cap: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            hash_dim: 256,
            marker_lexicon: DEFAULT_MARKERS.iter().map(|s| s.to_string()).collect(),
            token_count_cap: 50,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hash_dim == 0 {
            return Err(Error::invalid("hash_dim", "must be at least 1"));
        }
        if self.token_count_cap == 0 {
            return Err(Error::invalid("token_count_cap", "must be at least 1"));
        }
        let mut seen = HashSet::new();
        for marker in &self.marker_lexicon {
            if marker.is_empty() || *marker != marker.to_lowercase() {
                return Err(Error::invalid(
                    "marker_lexicon",
                    format!("\"{marker}\" must be non-empty lowercase"),
                ));
            }
            if !seen.insert(marker) {
                return Err(Error::invalid("marker_lexicon", format!("duplicate \"{marker}\"")));
            }
        }
        Ok(())
    }

    pub fn base_dim(&self) -> usize {
        STRUCTURAL_FEATURES + self.hash_dim + self.marker_lexicon.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum HaEncoding {
    #[default]
    #[serde(rename = "one-hot")]
    OneHot,
    #[serde(rename = "scalar")]
    Scalar,
}

impl std::str::FromStr for HaEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-hot" | "onehot" => Ok(HaEncoding::OneHot),
            "scalar" => Ok(HaEncoding::Scalar),
            _ => Err(Error::invalid("encoding", format!("unknown encoding \"{s}\""))),
        }
    }
}

/// Window sizes written `(n_l, n_c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct HaConfig {
    pub n_l: usize,
    pub n_c: usize,
    #[serde(default)]
    pub encoding: HaEncoding,
}

impl HaConfig {
    pub fn new(n_l: usize, n_c: usize) -> Self {
        HaConfig {
            n_l,
            n_c,
            encoding: HaEncoding::OneHot,
        }
    }

    pub fn scalar(n_l: usize, n_c: usize) -> Self {
        HaConfig {
            n_l,
            n_c,
            encoding: HaEncoding::Scalar,
        }
    }

    pub fn slot_width(&self, num_labels: usize) -> usize {
        match self.encoding {
            HaEncoding::OneHot => num_labels + 1,
            HaEncoding::Scalar => 1,
        }
    }

    pub fn dim(&self, num_labels: usize) -> usize {
        (self.n_l + self.n_c) * self.slot_width(num_labels)
    }

    /// Offsets of the type-L window relative to the target clause. Even
    /// windows give the extra slot to the preceding side.
    pub fn type_l_offsets(&self) -> std::ops::Range<isize> {
        let n = self.n_l as isize;
        if n == 0 {
            0..0
        } else if n % 2 == 1 {
            -(n - 1) / 2..(n - 1) / 2 + 1
        } else {
            -n / 2..n / 2
        }
    }

    pub fn type_c_offsets(&self) -> std::ops::Range<isize> {
        -(self.n_c as isize)..0
    }
}

impl std::fmt::Display for HaConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.n_l, self.n_c)
    }
}

/// Labels available to the HA slots of one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationHistory {
    /// One entry per clause; `None` where the previous round gave no label.
    pub last_round: Vec<Option<usize>>,
    /// Labels already assigned in this round, one per clause before the cursor.
    pub current_round: Vec<usize>,
}

impl AnnotationHistory {
    pub fn first_round(doc_len: usize) -> Self {
        AnnotationHistory {
            last_round: vec![None; doc_len],
            current_round: Vec::new(),
        }
    }

    pub fn with_last_round(last_round: Vec<Option<usize>>) -> Self {
        AnnotationHistory {
            last_round,
            current_round: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        StateVector(values)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(values: Vec<f64>) -> Self {
        StateVector(values)
    }
}

/// Base (HA-free) features of the clause at `position` in `doc`.
pub fn base_features(clause: &Clause, position: usize, doc: &Document, cfg: &FeatureConfig) -> Vec<f64> {
    let len = doc.clauses.len();
    let tokens = &clause.tokens;
    let n_tok = tokens.len();
    let mut out = Vec::with_capacity(cfg.base_dim());

    let norm_position = if len > 1 {
        position as f64 / (len - 1) as f64
    } else {
        0.0
    };
    let total_chars: usize = doc.clauses.iter().map(|c| c.text.chars().count()).sum();
    let chars_before: usize = doc.clauses[..position].iter().map(|c| c.text.chars().count()).sum();
    let char_offset = if total_chars > 0 {
        chars_before as f64 / total_chars as f64
    } else {
        0.0
    };
    let commas = tokens.iter().filter(|t| *t == ",").count();

    out.push(norm_position);
    out.push(flag(position == 0));
    out.push(flag(position + 1 == len));
    out.push(n_tok.min(cfg.token_count_cap) as f64 / cfg.token_count_cap as f64);
    out.push(char_offset);
    out.push(flag(clause.text.contains('?')));
    out.push(flag(clause.text.contains('!')));
    out.push(if n_tok > 0 { commas as f64 / n_tok as f64 } else { 0.0 });

    let lexical_start = out.len();
    out.resize(lexical_start + cfg.hash_dim, 0.0);
    if n_tok > 0 {
        let bump = 1.0 / n_tok as f64;
        let d = cfg.hash_dim as u64;
        for tok in tokens {
            out[lexical_start + (fnv1a64(tok.as_bytes()) % d) as usize] += bump;
        }
        for pair in tokens.windows(2) {
            let bigram = format!("{} {}", pair[0], pair[1]);
            out[lexical_start + (fnv1a64(bigram.as_bytes()) % d) as usize] += bump;
        }
    }

    for marker in &cfg.marker_lexicon {
        out.push(flag(contains_marker(tokens, marker)));
    }
    out
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn contains_marker(tokens: &[String], marker: &str) -> bool {
    let parts: Vec<&str> = marker.split_whitespace().collect();
    match parts.len() {
        0 => false,
        1 => tokens.iter().any(|t| t == parts[0]),
        n => tokens
            .windows(n)
            .any(|w| w.iter().zip(&parts).all(|(t, p)| t == p)),
    }
}

/// HA block for the clause at `position`. The document length is taken from
/// `history.last_round`.
pub fn ha_slots(position: usize, history: &AnnotationHistory, ha: &HaConfig, num_labels: usize) -> Vec<f64> {
    let width = ha.slot_width(num_labels);
    let mut out = vec![0.0; ha.dim(num_labels)];
    let doc_len = history.last_round.len() as isize;
    let pos = position as isize;

    let last = ha.type_l_offsets().map(|off| {
        let i = pos + off;
        if (0..doc_len).contains(&i) {
            history.last_round[i as usize]
        } else {
            None
        }
    });
    let current = ha.type_c_offsets().map(|off| {
        let i = pos + off;
        if i >= 0 {
            history.current_round.get(i as usize).copied()
        } else {
            None
        }
    });

    for (slot, label) in last.chain(current).enumerate() {
        let Some(label) = label else { continue };
        debug_assert!(label < num_labels);
        match ha.encoding {
            HaEncoding::OneHot => out[slot * width + label] = 1.0,
            HaEncoding::Scalar => out[slot] = (label + 1) as f64 / num_labels as f64,
        }
    }
    out
}

pub fn assemble_state(base: &[f64], ha_block: &[f64]) -> StateVector {
    let mut values = Vec::with_capacity(base.len() + ha_block.len());
    values.extend_from_slice(base);
    values.extend_from_slice(ha_block);
    StateVector(values)
}

/// Block basis: the state copied into block `action` of an `N·|A|` vector.
pub fn state_action_vector(state: &[f64], action: usize, num_labels: usize) -> Vec<f64> {
    assert!(action < num_labels, "action {action} out of range for {num_labels} labels");
    let n = state.len();
    let mut out = vec![0.0; n * num_labels];
    out[action * n..(action + 1) * n].copy_from_slice(state);
    out
}

/// Featurization pipeline bound to one pair of configs and a label count.
#[derive(Debug, Clone, PartialEq)]
pub struct Featurizer {
    pub features: FeatureConfig,
    pub ha: HaConfig,
    pub num_labels: usize,
}

/// Cached base features for every clause of a document.
#[derive(Debug, Clone)]
pub struct DocumentFeatures {
    pub base: Vec<Vec<f64>>,
}

impl Featurizer {
    pub fn new(features: FeatureConfig, ha: HaConfig, num_labels: usize) -> Result<Self> {
        features.validate()?;
        if num_labels == 0 {
            return Err(Error::invalid("labels", "need at least one label"));
        }
        Ok(Featurizer {
            features,
            ha,
            num_labels,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.features.base_dim()
    }

    pub fn state_dim(&self) -> usize {
        self.base_dim() + self.ha.dim(self.num_labels)
    }

    pub fn document(&self, doc: &Document) -> DocumentFeatures {
        DocumentFeatures {
            base: doc
                .clauses
                .iter()
                .enumerate()
                .map(|(i, c)| base_features(c, i, doc, &self.features))
                .collect(),
        }
    }

    pub fn state(&self, doc: &DocumentFeatures, position: usize, history: &AnnotationHistory) -> StateVector {
        let ha = ha_slots(position, history, &self.ha, self.num_labels);
        assemble_state(&doc.base[position], &ha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(texts: &[&str]) -> Document {
        Document::new("d", texts.iter().map(|t| Clause::new(*t, None)).collect()).unwrap()
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn single_clause_structure() {
        let d = doc(&["Is it clean?"]);
        let cfg = FeatureConfig::default();
        let f = base_features(&d.clauses[0], 0, &d, &cfg);
        assert_eq!(f.len(), 8 + 256 + 12);
        assert_eq!(&f[..3], &[0.0, 1.0, 1.0]);
        assert_eq!(f[3], 4.0 / 50.0);
        assert_eq!(f[4], 0.0);
        assert_eq!(f[5], 1.0);
        assert_eq!(f[6], 0.0);
        let lexical: f64 = f[8..8 + 256].iter().sum();
        // 4 unigrams + 3 bigrams, each weighted 1/4.
        assert!((lexical - 7.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn positions_and_offsets() {
        let d = doc(&["ab", "cd, ef", "gh!"]);
        let cfg = FeatureConfig::default();
        let mid = base_features(&d.clauses[1], 1, &d, &cfg);
        assert_eq!(mid[0], 0.5);
        assert_eq!(&mid[1..3], &[0.0, 0.0]);
        assert_eq!(mid[4], 2.0 / 11.0);
        assert_eq!(mid[7], 1.0 / 3.0);
        let last = base_features(&d.clauses[2], 2, &d, &cfg);
        assert_eq!(&last[..3], &[1.0, 0.0, 1.0]);
        assert_eq!(last[6], 1.0);
    }

    #[test]
    fn deterministic_and_marker_flags() {
        let d = doc(&["but the room was small"]);
        let cfg = FeatureConfig::default();
        let a = base_features(&d.clauses[0], 0, &d, &cfg);
        let b = base_features(&d.clauses[0], 0, &d, &cfg);
        assert_eq!(a, b);
        let markers = &a[8 + 256..];
        for (m, v) in cfg.marker_lexicon.iter().zip(markers) {
            assert_eq!(*v, if m == "but" { 1.0 } else { 0.0 }, "marker {m}");
        }
    }

    #[test]
    fn multiword_marker() {
        let cfg = FeatureConfig {
            hash_dim: 4,
            marker_lexicon: vec!["in my opinion".into()],
            token_count_cap: 10,
        };
        let d = doc(&["In my opinion, no", "my opinion in"]);
        assert_eq!(base_features(&d.clauses[0], 0, &d, &cfg)[12], 1.0);
        assert_eq!(base_features(&d.clauses[1], 1, &d, &cfg)[12], 0.0);
    }

    #[test]
    fn empty_clause_is_not_an_error() {
        let d = doc(&["", "x"]);
        let cfg = FeatureConfig::default();
        let f = base_features(&d.clauses[0], 0, &d, &cfg);
        assert_eq!(f[3], 0.0);
        assert_eq!(f[7], 0.0);
        assert!(f[8..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = FeatureConfig::default();
        cfg.hash_dim = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = FeatureConfig::default();
        cfg.marker_lexicon.push("but".into());
        assert!(cfg.validate().is_err());
        let mut cfg = FeatureConfig::default();
        cfg.marker_lexicon.push("But".into());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn window_offsets() {
        assert_eq!(HaConfig::new(3, 2).type_l_offsets(), -1..2);
        assert_eq!(HaConfig::new(4, 0).type_l_offsets(), -2..2);
        assert_eq!(HaConfig::new(9, 0).type_l_offsets(), -4..5);
        assert_eq!(HaConfig::new(1, 0).type_l_offsets(), 0..1);
        assert_eq!(HaConfig::new(0, 5).type_c_offsets(), -5..0);
    }

    #[test]
    fn type_c_empty_at_start() {
        let ha = HaConfig::new(0, 2);
        let h = AnnotationHistory::first_round(4);
        assert_eq!(ha_slots(0, &h, &ha, 3), vec![0.0; 8]);
    }

    #[test]
    fn interior_windows_three_and_two() {
        // last round: [0, 1, 2, 1, 0], current round so far: [2, 2, 0]
        let h = AnnotationHistory {
            last_round: vec![Some(0), Some(1), Some(2), Some(1), Some(0)],
            current_round: vec![2, 2, 0],
        };
        let ha = HaConfig::new(3, 2);
        let slots = ha_slots(3, &h, &ha, 3);
        let blocks: Vec<&[f64]> = slots.chunks(4).collect();
        // type-L offsets -1, 0, +1 -> last-round labels 2, 1, 0
        assert_eq!(blocks[0], &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(blocks[1], &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(blocks[2], &[1.0, 0.0, 0.0, 0.0]);
        // type-C offsets -2, -1 -> current labels 2, 0
        assert_eq!(blocks[3], &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(blocks[4], &[1.0, 0.0, 0.0, 0.0]);

        let scalar = ha_slots(3, &h, &HaConfig::scalar(3, 2), 3);
        assert_eq!(scalar, vec![1.0, 2.0 / 3.0, 1.0 / 3.0, 1.0, 1.0 / 3.0]);
    }

    #[test]
    fn boundary_slots_are_sentinels() {
        let h = AnnotationHistory {
            last_round: vec![Some(1), None],
            current_round: vec![1],
        };
        let slots = ha_slots(1, &h, &HaConfig::new(3, 2), 2);
        let blocks: Vec<&[f64]> = slots.chunks(3).collect();
        assert_eq!(blocks[0], &[0.0, 1.0, 0.0]);
        assert_eq!(blocks[1], &[0.0, 0.0, 0.0]); // unannotated
        assert_eq!(blocks[2], &[0.0, 0.0, 0.0]); // past the end
        assert_eq!(blocks[3], &[0.0, 0.0, 0.0]); // before the start
        assert_eq!(blocks[4], &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn ha_free_is_empty() {
        let h = AnnotationHistory::first_round(3);
        assert!(ha_slots(1, &h, &HaConfig::new(0, 0), 4).is_empty());
    }

    #[test]
    fn assembled_lengths() {
        let base = vec![0.5; 266];
        assert_eq!(assemble_state(&base, &[]).len(), 266);
        let ha = HaConfig::new(7, 5);
        let h = AnnotationHistory::first_round(10);
        assert_eq!(assemble_state(&base, &ha_slots(4, &h, &ha, 4)).len(), 326);
        let ha = HaConfig::scalar(7, 5);
        assert_eq!(assemble_state(&base, &ha_slots(4, &h, &ha, 4)).len(), 278);
        let s = assemble_state(&[1.0, 2.0], &[3.0]);
        assert_eq!(&*s, &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn block_placement() {
        assert_eq!(
            state_action_vector(&[1.0, 2.0, 3.0], 1, 2),
            vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0]
        );
        assert_eq!(
            state_action_vector(&[1.0, 2.0, 3.0], 0, 2),
            vec![1.0, 2.0, 3.0, 0.0, 0.0, 0.0]
        );
    }

    proptest! {
        #[test]
        fn block_dot_identity(state in proptest::collection::vec(-5.0f64..5.0, 1..6),
                              labels in 1usize..5, action_seed in 0usize..100,
                              seed in proptest::collection::vec(-5.0f64..5.0, 30)) {
            let action = action_seed % labels;
            let n = state.len();
            let w: Vec<f64> = (0..n * labels).map(|i| seed[i % seed.len()] + i as f64 * 0.01).collect();
            let phi = state_action_vector(&state, action, labels);
            let lhs: f64 = phi.iter().zip(&w).map(|(a, b)| a * b).sum();
            let rhs: f64 = state.iter().zip(&w[action * n..(action + 1) * n]).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() < 1e-9);
            for other in 0..labels {
                if other != action {
                    let psi = state_action_vector(&state, other, labels);
                    prop_assert!(phi.iter().zip(&psi).all(|(a, b)| *a == 0.0 || *b == 0.0));
                }
            }
        }

        #[test]
        fn one_hot_blocks_sum_to_zero_or_one(
            labels in 1usize..5,
            n_l in 0usize..6,
            n_c in 0usize..4,
            raw in proptest::collection::vec(0usize..10, 1..12),
            pos_seed in 0usize..100,
        ) {
            let len = raw.len();
            let position = pos_seed % len;
            let last: Vec<Option<usize>> = raw.iter().map(|&r| if r >= labels * 2 { None } else { Some(r % labels) }).collect();
            let current: Vec<usize> = raw[..position].iter().map(|&r| r % labels).collect();
            let h = AnnotationHistory { last_round: last, current_round: current };
            let ha = HaConfig::new(n_l, n_c);
            let slots = ha_slots(position, &h, &ha, labels);
            prop_assert_eq!(slots.len(), (n_l + n_c) * (labels + 1));
            for block in slots.chunks(labels + 1) {
                let s: f64 = block.iter().sum();
                prop_assert!(s == 0.0 || s == 1.0);
                prop_assert_eq!(block[labels], 0.0);
            }
        }

        #[test]
        fn translation_consistent(
            labels in 1usize..4,
            raw in proptest::collection::vec(0usize..4, 3..10),
            shift in 1usize..4,
            pos_seed in 0usize..100,
        ) {
            // Prepending `shift` unannotated clauses moves every window by `shift`.
            let len = raw.len();
            let position = pos_seed % len;
            let last: Vec<Option<usize>> = raw.iter().map(|&r| Some(r % labels)).collect();
            let current: Vec<usize> = raw[..position].iter().map(|&r| (r + 1) % labels).collect();
            let ha = HaConfig::new(3, 2);
            let h = AnnotationHistory { last_round: last.clone(), current_round: current.clone() };
            let mut shifted_last = vec![None; shift];
            shifted_last.extend(last);
            let mut shifted_current = vec![0; shift];
            shifted_current.extend(current);
            let hs = AnnotationHistory { last_round: shifted_last, current_round: shifted_current };
            let a = ha_slots(position, &h, &ha, labels);
            let b = ha_slots(position + shift, &hs, &ha, labels);
            // Away from the left boundary the outputs coincide.
            if position >= 2 {
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn same_tokens_same_lexical_block(words in proptest::collection::vec("[a-c]{1,2}", 1..6)) {
            // Case and spacing differences vanish in tokenization.
            let plain = words.join(" ");
            let shouty = words.iter().map(|w| w.to_uppercase()).collect::<Vec<_>>().join("   ");
            let cfg = FeatureConfig { hash_dim: 16, marker_lexicon: vec![], token_count_cap: 50 };
            let a_doc = doc(&[&plain]);
            let b_doc = doc(&[&shouty]);
            let a = base_features(&a_doc.clauses[0], 0, &a_doc, &cfg);
            let b = base_features(&b_doc.clauses[0], 0, &b_doc, &cfg);
            prop_assert_eq!(&a[8..], &b[8..]);
        }
    }
}
