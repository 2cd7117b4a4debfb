use crate::error::{Error, Result};

/// Items × categories count matrix; every row holds the votes of the same
/// number of raters.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    counts: Vec<Vec<u64>>,
    raters_per_item: u64,
}

impl RatingMatrix {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::invalid("ratings", "at least 2 items required"));
        }
        let categories = counts[0].len();
        if categories < 2 {
            return Err(Error::invalid("ratings", "at least 2 categories required"));
        }
        let n: u64 = counts[0].iter().sum();
        if n < 2 {
            return Err(Error::invalid("ratings", "at least 2 raters per item required"));
        }
        for (i, row) in counts.iter().enumerate() {
            if row.len() != categories {
                return Err(Error::invalid(
                    "ratings",
                    format!("row {i} has {} categories, expected {categories}", row.len()),
                ));
            }
            let sum: u64 = row.iter().sum();
            if sum != n {
                return Err(Error::invalid(
                    "ratings",
                    format!("row {i} sums to {sum}, expected {n}"),
                ));
            }
        }
        Ok(RatingMatrix {
            counts,
            raters_per_item: n,
        })
    }

    pub fn items(&self) -> usize {
        self.counts.len()
    }

    pub fn categories(&self) -> usize {
        self.counts[0].len()
    }

    pub fn raters_per_item(&self) -> u64 {
        self.raters_per_item
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }
}

/// Fleiss' kappa. Perfect observed agreement returns exactly 1, which also
/// covers the degenerate chance-agreement case `P̄ₑ = 1`.
pub fn fleiss_kappa(ratings: &RatingMatrix) -> f64 {
    let n = ratings.raters_per_item as f64;
    let items = ratings.items() as f64;

    let mut category_totals = vec![0u64; ratings.categories()];
    let mut agreement_sum = 0.0;
    for row in &ratings.counts {
        let squares: u64 = row.iter().map(|&c| c * c).sum();
        agreement_sum += (squares as f64 - n) / (n * (n - 1.0));
        for (total, &c) in category_totals.iter_mut().zip(row) {
            *total += c;
        }
    }
    let unanimous = ratings
        .counts
        .iter()
        .all(|row| row.iter().any(|&c| c == ratings.raters_per_item));
    if unanimous {
        return 1.0;
    }
    let p_bar = agreement_sum / items;

    let all = items * n;
    let p_e: f64 = category_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / all;
            p * p
        })
        .sum();
    if p_e >= 1.0 {
        return 1.0;
    }
    (p_bar - p_e) / (1.0 - p_e)
}
