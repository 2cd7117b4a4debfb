use std::ops::RangeInclusive;

use rayon::prelude::*;

use super::crossval::{crossval, ExperimentConfig, FoldResult, Method};
use super::metrics::AggregateMetrics;
use super::stats::{paired_t_test, ComparisonResult};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::features::{HaConfig, HaEncoding};

/// Inclusive `n_l` and `n_c` ranges, written `lo..hi` on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub n_l: RangeInclusive<usize>,
    pub n_c: RangeInclusive<usize>,
    pub encoding: HaEncoding,
}

/// Parses `"lo..hi"` (inclusive) or a single number.
pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>> {
    let bad = || Error::invalid("grid", format!("\"{s}\" is not a range like 0..9"));
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo.trim(), hi.trim().trim_start_matches('=')),
        None => (s.trim(), s.trim()),
    };
    let lo: usize = lo.parse().map_err(|_| bad())?;
    let hi: usize = hi.parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(Error::invalid("grid", format!("empty range \"{s}\"")));
    }
    Ok(lo..=hi)
}

impl GridSpec {
    pub fn new(n_l: RangeInclusive<usize>, n_c: RangeInclusive<usize>) -> Self {
        GridSpec {
            n_l,
            n_c,
            encoding: HaEncoding::OneHot,
        }
    }

    /// Cells in row-major order: `n_l` outer, `n_c` inner.
    pub fn cells(&self) -> Vec<HaConfig> {
        self.n_l
            .clone()
            .flat_map(|l| {
                self.n_c.clone().map(move |c| HaConfig {
                    n_l: l,
                    n_c: c,
                    encoding: self.encoding,
                })
            })
            .collect()
    }

    /// The distinct corners (lo,lo), (hi,lo), (lo,hi), (hi,hi).
    pub fn corners(&self) -> Vec<HaConfig> {
        let (l0, l1) = (*self.n_l.start(), *self.n_l.end());
        let (c0, c1) = (*self.n_c.start(), *self.n_c.end());
        let mut out: Vec<HaConfig> = Vec::new();
        for (l, c) in [(l0, c0), (l1, c0), (l0, c1), (l1, c1)] {
            let h = HaConfig {
                n_l: l,
                n_c: c,
                encoding: self.encoding,
            };
            if !out.contains(&h) {
                out.push(h);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub ha: HaConfig,
    pub folds: Vec<FoldResult>,
    pub aggregate: AggregateMetrics,
}

impl GridCell {
    pub fn accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.metrics.accuracy).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CornerComparison {
    pub a: HaConfig,
    pub b: HaConfig,
    pub accuracy: ComparisonResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub method: Method,
    pub cells: Vec<GridCell>,
    pub corners: Vec<CornerComparison>,
}

impl GridResult {
    pub fn cell(&self, n_l: usize, n_c: usize) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.ha.n_l == n_l && c.ha.n_c == n_c)
    }
}

/// Cross-validates every cell of the grid with the same folds and seeds, then
/// compares every pair of corners with a paired t-test on fold accuracies.
pub fn ha_grid_search(corpus: &Corpus, spec: &GridSpec, method: Method, cfg: &ExperimentConfig) -> Result<GridResult> {
    let cells: Vec<GridCell> = spec
        .cells()
        .par_iter()
        .map(|ha| {
            let folds = crossval(corpus, method, ha, cfg)?;
            let aggregate =
                AggregateMetrics::from_folds(folds.iter().map(|f| &f.metrics)).expect("crossval yields at least one fold");
            Ok(GridCell { ha: *ha, folds, aggregate })
        })
        .collect::<Result<_>>()?;

    let find = |ha: &HaConfig| cells.iter().find(|c| c.ha == *ha).expect("corner lies in the grid");
    let corners = spec.corners();
    let mut comparisons = Vec::new();
    for (i, a) in corners.iter().enumerate() {
        for b in &corners[i + 1..] {
            comparisons.push(CornerComparison {
                a: *a,
                b: *b,
                accuracy: paired_t_test(&find(a).accuracies(), &find(b).accuracies(), cfg.alpha)?,
            });
        }
    }
    Ok(GridResult {
        method,
        cells,
        corners: comparisons,
    })
}
