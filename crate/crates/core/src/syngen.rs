//! Seeded synthetic corpora with heavy-tailed citation counts.
//!
//! Each journal gets an attractiveness `u^(-skew)` with `u` uniform on
//! `(0, 1]`, i.e. a Pareto weight with tail index `1 / skew`; larger
//! `skew_exponent` means a heavier tail. Every (citing journal, citing year)
//! emits a Poisson number of citations with mean `mean_out_citations`; each
//! citation picks its target in proportion to attractiveness and a
//! publication year between the start of the range and the citing year, at
//! most ten years back.
//!
//! Randomness comes from ChaCha8 seeded with `seed`, which is specified to
//! produce the same stream on every platform.

use std::ops::RangeInclusive;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Edge, Journal, JournalId, Year};

const MAX_LOOKBACK: i32 = 10;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("n_journals must be at least 1")]
    NoJournals,
    #[error("year range {0}..={1} is empty")]
    EmptyYears(Year, Year),
    #[error("skew_exponent must be positive and finite, got {0}")]
    InvalidSkew(f64),
    #[error("mean_out_citations must be positive and finite, got {0}")]
    InvalidMeanOut(f64),
    #[error("attractiveness weights overflowed; lower skew_exponent")]
    WeightOverflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSettings {
    pub n_journals: usize,
    pub years: RangeInclusive<Year>,
    pub skew_exponent: f64,
    pub mean_out_citations: f64,
    pub seed: u64,
}

impl Default for GenSettings {
    fn default() -> Self {
        GenSettings {
            n_journals: 50,
            years: 2001..=2006,
            skew_exponent: 1.0,
            mean_out_citations: 20.0,
            seed: 0,
        }
    }
}

impl GenSettings {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.n_journals == 0 {
            return Err(GenError::NoJournals);
        }
        if self.years.is_empty() {
            return Err(GenError::EmptyYears(*self.years.start(), *self.years.end()));
        }
        if !(self.skew_exponent > 0.0 && self.skew_exponent.is_finite()) {
            return Err(GenError::InvalidSkew(self.skew_exponent));
        }
        if !(self.mean_out_citations > 0.0 && self.mean_out_citations.is_finite()) {
            return Err(GenError::InvalidMeanOut(self.mean_out_citations));
        }
        Ok(())
    }
}

/// Journal ids zero-padded so lexical order matches generation order.
fn journal_id(i: usize, n: usize) -> JournalId {
    let width = n.to_string().len();
    JournalId::new(format!("J{:0width$}", i + 1))
}

/// Draws the attractiveness weights only; shares the stream prefix with
/// [`generate`].
pub fn attractiveness(settings: &GenSettings) -> Result<Vec<f64>, GenError> {
    settings.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    draw_weights(&mut rng, settings)
}

fn draw_weights(rng: &mut ChaCha8Rng, settings: &GenSettings) -> Result<Vec<f64>, GenError> {
    let weights: Vec<f64> = (0..settings.n_journals)
        .map(|_| {
            let u = 1.0 - rng.random::<f64>();
            u.powf(-settings.skew_exponent)
        })
        .collect();
    if weights.iter().any(|w| !w.is_finite()) || !weights.iter().sum::<f64>().is_finite() {
        return Err(GenError::WeightOverflow);
    }
    Ok(weights)
}

pub fn generate(settings: &GenSettings) -> Result<Corpus, GenError> {
    settings.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let n = settings.n_journals;
    let (first, last) = (*settings.years.start(), *settings.years.end());

    let weights = draw_weights(&mut rng, settings)?;
    let target = WeightedIndex::new(&weights).map_err(|_| GenError::WeightOverflow)?;

    let mut journals = Vec::with_capacity(n);
    for i in 0..n {
        let base: u64 = rng.random_range(10..=200);
        let mut j = Journal::new(journal_id(i, n), format!("Synthetic Journal {}", i + 1));
        for year in first..=last {
            j.articles_by_year
                .insert(year, base + rng.random_range(0..=base / 5));
        }
        journals.push(j);
    }

    let out = Poisson::new(settings.mean_out_citations).expect("validated mean");
    let mut edges = Vec::new();
    for citing in 0..n {
        for year in first..=last {
            let k = out.sample(&mut rng) as u64;
            let lookback = (year - first).min(MAX_LOOKBACK);
            for _ in 0..k {
                let cited = target.sample(&mut rng);
                let back = rng.random_range(0..=lookback);
                edges.push(Edge {
                    citing: citing as u32,
                    cited: cited as u32,
                    citing_year: year,
                    cited_year: year - back,
                    count: 1,
                });
            }
        }
    }
    Ok(Corpus::from_sorted_parts(journals, edges).expect("generated records are valid"))
}
