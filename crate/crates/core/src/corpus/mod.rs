//! Corpus data model and the line-delimited corpus file format.
//!
//! The first line of a corpus file is a header object declaring the label
//! set; every following line is one document:
//!
//! ```text
//! {"labels":["claim","premise"]}
//! {"id":"d1","clauses":[{"text":"The room was awful.","label":"claim"},{"text":"no hot water"}]}
//! ```
//!
//! [`Corpus::to_canonical_string`] writes the same shape with fixed key order
//! and no extraneous whitespace.

mod folds;
mod kappa;
mod synth;

pub use folds::{grouped_kfold, Split};
pub use kappa::{fleiss_kappa, RatingMatrix};
pub use synth::{generate_synthetic, SynthConfig};

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercases `text`, splits on whitespace and detaches every punctuation
/// character as its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
        } else if is_punctuation(ch) {
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            tokens.extend(ch.to_lowercase().map(String::from).take(1));
        } else {
            word.extend(ch.to_lowercase());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

fn is_punctuation(ch: char) -> bool {
    !ch.is_alphanumeric() && !ch.is_whitespace()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub text: String,
    pub tokens: Vec<String>,
    pub gold_label: Option<usize>,
}

impl Clause {
    pub fn new(text: impl Into<String>, gold_label: Option<usize>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        Clause {
            text,
            tokens,
            gold_label,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub clauses: Vec<Clause>,
}

impl Document {
    pub fn new(id: impl Into<String>, clauses: Vec<Clause>) -> Result<Self> {
        let id = id.into();
        if clauses.is_empty() {
            return Err(Error::EmptyDocument(id));
        }
        Ok(Document { id, clauses })
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn gold_labels(&self) -> Vec<Option<usize>> {
        self.clauses.iter().map(|c| c.gold_label).collect()
    }
}

/// Ordered label names; a label's index is its position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::invalid("labels", "label set is empty"));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid("labels", format!("duplicate label \"{name}\"")));
            }
        }
        Ok(LabelSet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl TryFrom<Vec<String>> for LabelSet {
    type Error = Error;

    fn try_from(names: Vec<String>) -> Result<Self> {
        LabelSet::new(names)
    }
}

impl From<LabelSet> for Vec<String> {
    fn from(labels: LabelSet) -> Self {
        labels.names
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub label_set: LabelSet,
    pub documents: Vec<Document>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClauseRecord {
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentRecord {
    id: String,
    clauses: Vec<ClauseRecord>,
}

impl Corpus {
    /// Builds a corpus, checking id uniqueness and label bounds.
    pub fn new(label_set: LabelSet, documents: Vec<Document>) -> Result<Self> {
        let mut ids = HashSet::new();
        for (i, doc) in documents.iter().enumerate() {
            if doc.clauses.is_empty() {
                return Err(Error::EmptyDocument(doc.id.clone()));
            }
            if !ids.insert(doc.id.as_str()) {
                return Err(Error::DuplicateDocument {
                    line: i + 2,
                    id: doc.id.clone(),
                });
            }
            for clause in &doc.clauses {
                if let Some(label) = clause.gold_label {
                    if label >= label_set.len() {
                        return Err(Error::invalid(
                            "label",
                            format!("label index {label} out of range in document \"{}\"", doc.id),
                        ));
                    }
                }
            }
        }
        Ok(Corpus {
            label_set,
            documents,
        })
    }

    pub fn num_labels(&self) -> usize {
        self.label_set.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// Parses the line-delimited corpus format. Blank lines are skipped.
    pub fn parse<R: BufRead>(source: R) -> Result<Self> {
        let mut label_set: Option<LabelSet> = None;
        let mut documents = Vec::new();
        let mut ids = HashSet::new();

        for (i, line) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let Some(labels) = &label_set else {
                let header: HeaderRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad header: {e}"),
                })?;
                label_set = Some(LabelSet::new(header.labels).map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })?);
                continue;
            };

            let record: DocumentRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad document: {e}"),
            })?;
            if !ids.insert(record.id.clone()) {
                return Err(Error::DuplicateDocument {
                    line: line_no,
                    id: record.id,
                });
            }
            if record.clauses.is_empty() {
                return Err(Error::EmptyDocument(record.id));
            }
            let mut clauses = Vec::with_capacity(record.clauses.len());
            for c in record.clauses {
                let gold = match c.label {
                    None => None,
                    Some(name) => match labels.index_of(&name) {
                        Some(index) => Some(index),
                        None => {
                            return Err(Error::UnknownLabel {
                                line: line_no,
                                label: name,
                            })
                        }
                    },
                };
                clauses.push(Clause::new(c.text, gold));
            }
            documents.push(Document {
                id: record.id,
                clauses,
            });
        }

        let label_set = label_set.ok_or(Error::Parse {
            line: 1,
            message: "missing header line".into(),
        })?;
        Ok(Corpus {
            label_set,
            documents,
        })
    }

    pub fn parse_str(source: &str) -> Result<Self> {
        Corpus::parse(source.as_bytes())
    }

    pub fn write_canonical<W: Write>(&self, mut out: W) -> Result<()> {
        let header = HeaderRecord {
            labels: self.label_set.names().to_vec(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for doc in &self.documents {
            let record = DocumentRecord {
                id: doc.id.clone(),
                clauses: doc
                    .clauses
                    .iter()
                    .map(|c| ClauseRecord {
                        text: c.text.clone(),
                        label: c.gold_label.map(|l| self.label_set.name(l).to_string()),
                    })
                    .collect(),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_canonical_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_canonical(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Copy of the corpus restricted to the given document ids, in corpus order.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a String>) -> Corpus {
        let wanted: HashSet<&str> = ids.into_iter().map(String::as_str).collect();
        Corpus {
            label_set: self.label_set.clone(),
            documents: self
                .documents
                .iter()
                .filter(|d| wanted.contains(d.id.as_str()))
                .cloned()
                .collect(),
        }
    }

    /// Same documents with every clause's gold label replaced by `labels[doc][clause]`.
    pub fn with_labels(&self, labels: &[Vec<usize>]) -> Result<Corpus> {
        if labels.len() != self.documents.len() {
            return Err(Error::invalid("labels", "one label list per document required"));
        }
        let mut documents = self.documents.clone();
        for (doc, doc_labels) in documents.iter_mut().zip(labels) {
            if doc_labels.len() != doc.clauses.len() {
                return Err(Error::invalid(
                    "labels",
                    format!("document \"{}\" label count mismatch", doc.id),
                ));
            }
            for (clause, &label) in doc.clauses.iter_mut().zip(doc_labels) {
                clause.gold_label = Some(label);
            }
        }
        Corpus::new(self.label_set.clone(), documents)
    }
}
