//! Iteratively weighted journal scores.
//!
//! A citation from journal `j` carries weight in proportion to how much
//! weight `j` itself receives. The fixed point is found by damped power
//! iteration on the column-stochastic cross-citation matrix `H`:
//!
//! ```text
//! p' = alpha * (H p + (dangling mass of p) * a) + (1 - alpha) * a
//! ```
//!
//! where `a` is each journal's share of the articles published in the
//! citation window. Columns of journals that cite nothing in the window are
//! "dangling"; their mass is redistributed along `a` as well.
//!
//! The reported score is the share of weighted citation flow each journal
//! receives, `H p + (dangling mass) * a`, scaled to sum to 100. Teleportation
//! is not counted in that final step.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CitationWindow, Corpus, JournalId};
use crate::metrics::{MetricName, MetricVector, Provenance};

/// Matrices at least this large use the parallel row product.
const PARALLEL_MIN_ORDER: usize = 4096;

/// Largest order the dense oracle accepts.
pub const DENSE_ORACLE_MAX_ORDER: usize = 64;

const DENSE_ORACLE_ITERATIONS: usize = 10_000;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("corpus has no journals")]
    EmptyCorpus,
    #[error("no journal has articles in the window; cannot form the article vector")]
    NoArticles,
    #[error("damping factor must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("max_iterations must be at least 1")]
    InvalidMaxIterations,
    #[error("matrix and article vector index different journal sets")]
    IndexMismatch,
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("dense oracle supports at most {max} journals, got {order}")]
    OrderTooLarge { order: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSettings {
    pub alpha: f64,
    /// Bound on the L1 change between successive iterates.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub exclude_self: bool,
}

impl Default for EigenSettings {
    fn default() -> Self {
        EigenSettings {
            alpha: 0.85,
            tolerance: 1e-12,
            max_iterations: 1000,
            exclude_self: true,
        }
    }
}

impl EigenSettings {
    pub fn validate(&self) -> Result<(), EigenError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(EigenError::InvalidAlpha(self.alpha));
        }
        if !(self.tolerance > 0.0) {
            return Err(EigenError::InvalidTolerance(self.tolerance));
        }
        if self.max_iterations == 0 {
            return Err(EigenError::InvalidMaxIterations);
        }
        Ok(())
    }
}

/// Column-normalized journal-by-journal citation matrix in CSR layout.
///
/// Entry `(i, j)` is the fraction of journal `j`'s in-window citations that
/// went to journal `i`. Rows are cited journals, columns citing journals.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCitationMatrix {
    ids: Vec<JournalId>,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
    dangling: Vec<bool>,
}

impl CrossCitationMatrix {
    /// Builds a matrix from raw `(cited, citing, weight)` triples over `ids`.
    /// Duplicate positions are summed; non-positive weights are ignored.
    pub fn from_weights(ids: Vec<JournalId>, weights: &[(usize, usize, f64)]) -> Self {
        let n = ids.len();
        let mut triples: Vec<(usize, usize, f64)> = weights
            .iter()
            .copied()
            .filter(|&(i, j, w)| i < n && j < n && w > 0.0)
            .collect();
        triples.sort_by_key(|&(i, j, _)| (i, j));

        let mut col_sum = vec![0.0f64; n];
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx: Vec<u32> = Vec::with_capacity(triples.len());
        let mut values: Vec<f64> = Vec::with_capacity(triples.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, w) in triples {
            col_sum[j] += w;
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += w;
            } else {
                row_ptr[i + 1] += 1;
                col_idx.push(j as u32);
                values.push(w);
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        for (v, &j) in values.iter_mut().zip(&col_idx) {
            *v /= col_sum[j as usize];
        }
        let dangling = col_sum.iter().map(|&s| s == 0.0).collect();
        CrossCitationMatrix {
            ids,
            row_ptr,
            col_idx,
            values,
            dangling,
        }
    }

    pub fn order(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[JournalId] {
        &self.ids
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry at (cited row `i`, citing column `j`).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[row.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.values[row.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn is_dangling(&self, j: usize) -> bool {
        self.dangling[j]
    }

    pub fn dangling_columns(&self) -> Vec<usize> {
        (0..self.order()).filter(|&j| self.dangling[j]).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.order()];
        for (v, &j) in self.values.iter().zip(&self.col_idx) {
            sums[j as usize] += v;
        }
        sums
    }

    /// Non-zero entries as `(row, column, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.order()).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |k| (i, self.col_idx[k] as usize, self.values[k]))
        })
    }

    fn row_dot(&self, i: usize, p: &[f64]) -> f64 {
        let row = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[row.clone()]
            .iter()
            .zip(&self.values[row])
            .map(|(&j, &v)| v * p[j as usize])
            .sum()
    }

    /// `out = H p`. Every row is reduced sequentially in column order, so the
    /// parallel and serial paths give bit-identical results.
    pub fn mul_into(&self, p: &[f64], out: &mut [f64]) {
        if self.order() >= PARALLEL_MIN_ORDER {
            out.par_iter_mut()
                .enumerate()
                .for_each(|(i, y)| *y = self.row_dot(i, p));
        } else {
            for (i, y) in out.iter_mut().enumerate() {
                *y = self.row_dot(i, p);
            }
        }
    }

    fn dangling_mass(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(&self.dangling)
            .filter(|(_, &d)| d)
            .map(|(x, _)| x)
            .sum()
    }
}

/// Each journal's share of the articles published in the window.
#[derive(Debug, Clone, PartialEq)]
pub struct ArticleVector {
    ids: Vec<JournalId>,
    weights: Vec<f64>,
}

impl ArticleVector {
    /// Normalizes raw article counts over `ids`.
    pub fn from_counts(ids: Vec<JournalId>, counts: &[f64]) -> Result<Self, EigenError> {
        assert_eq!(ids.len(), counts.len(), "one count per journal");
        let total: f64 = counts.iter().filter(|c| **c > 0.0).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(EigenError::NoArticles);
        }
        let weights = counts.iter().map(|&c| c.max(0.0) / total).collect();
        Ok(ArticleVector { ids, weights })
    }

    pub fn ids(&self) -> &[JournalId] {
        &self.ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Builds the normalized cross-citation matrix and the article vector for
/// the citations and publication years selected by `window`.
pub fn build_matrix(
    corpus: &Corpus,
    window: CitationWindow,
    exclude_self: bool,
) -> Result<(CrossCitationMatrix, ArticleVector), EigenError> {
    if corpus.is_empty() {
        return Err(EigenError::EmptyCorpus);
    }
    let ids: Vec<JournalId> = corpus.journals().iter().map(|j| j.id.clone()).collect();

    let years = window.publication_years();
    let counts: Vec<f64> = corpus
        .journals()
        .iter()
        .map(|j| j.articles_in(years.clone()) as f64)
        .collect();
    let articles = ArticleVector::from_counts(ids.clone(), &counts)?;

    // Integer sums first so merged year buckets do not accumulate rounding.
    let mut pairs: Vec<(u32, u32, u64)> = corpus
        .edges()
        .iter()
        .filter(|e| !(exclude_self && e.is_self_citation()))
        .filter(|e| window.includes(e.citing_year, e.cited_year))
        .map(|e| (e.cited, e.citing, e.count))
        .collect();
    pairs.sort_unstable_by_key(|&(i, j, _)| (i, j));
    let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(pairs.len());
    let mut acc: Option<(u32, u32, u64)> = None;
    for (i, j, c) in pairs {
        match acc.as_mut() {
            Some((ai, aj, ac)) if *ai == i && *aj == j => *ac += c,
            _ => {
                if let Some((ai, aj, ac)) = acc {
                    merged.push((ai as usize, aj as usize, ac as f64));
                }
                acc = Some((i, j, c));
            }
        }
    }
    if let Some((ai, aj, ac)) = acc {
        merged.push((ai as usize, aj as usize, ac as f64));
    }

    Ok((CrossCitationMatrix::from_weights(ids, &merged), articles))
}

/// Scores together with the iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenRun {
    pub scores: MetricVector,
    pub iterations: usize,
    pub residual: f64,
}

fn final_scores(
    matrix: &CrossCitationMatrix,
    articles: &[f64],
    p: &[f64],
    description: String,
) -> MetricVector {
    let mut flow = vec![0.0; p.len()];
    matrix.mul_into(p, &mut flow);
    let dm = matrix.dangling_mass(p);
    for (f, a) in flow.iter_mut().zip(articles) {
        *f += dm * a;
    }
    let total: f64 = flow.iter().sum();
    let scores: BTreeMap<JournalId, f64> = matrix
        .ids
        .iter()
        .zip(&flow)
        .map(|(id, f)| (id.clone(), 100.0 * f / total))
        .collect();
    MetricVector::new(
        MetricName::Eigenfactor,
        scores,
        Provenance {
            description,
            omitted: Vec::new(),
        },
    )
    .expect("flow shares are finite and non-negative")
}

/// Damped power iteration from the article vector until the L1 change drops
/// below `settings.tolerance`.
pub fn eigen_scores(
    matrix: &CrossCitationMatrix,
    articles: &ArticleVector,
    settings: &EigenSettings,
) -> Result<EigenRun, EigenError> {
    settings.validate()?;
    if matrix.ids != articles.ids {
        return Err(EigenError::IndexMismatch);
    }
    let a = &articles.weights;
    let alpha = settings.alpha;
    let n = matrix.order();

    let mut p = a.clone();
    let mut hp = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < settings.max_iterations {
        iterations += 1;
        matrix.mul_into(&p, &mut hp);
        let dm = matrix.dangling_mass(&p);
        residual = 0.0;
        for i in 0..n {
            next[i] = alpha * (hp[i] + dm * a[i]) + (1.0 - alpha) * a[i];
            residual += (next[i] - p[i]).abs();
        }
        std::mem::swap(&mut p, &mut next);
        if residual < settings.tolerance {
            let description = format!(
                "alpha {}; tolerance {:e}; converged in {} iterations (residual {:e})",
                alpha, settings.tolerance, iterations, residual
            );
            return Ok(EigenRun {
                scores: final_scores(matrix, a, &p, description),
                iterations,
                residual,
            });
        }
    }
    Err(EigenError::NotConverged {
        iterations,
        residual,
    })
}

/// Reference scores from the explicit dense damped transition matrix,
/// multiplied 10,000 times from the uniform vector. Only for small orders.
pub fn dense_oracle_scores(
    matrix: &CrossCitationMatrix,
    articles: &ArticleVector,
    settings: &EigenSettings,
) -> Result<MetricVector, EigenError> {
    settings.validate()?;
    if matrix.ids != articles.ids {
        return Err(EigenError::IndexMismatch);
    }
    let n = matrix.order();
    if n > DENSE_ORACLE_MAX_ORDER {
        return Err(EigenError::OrderTooLarge {
            order: n,
            max: DENSE_ORACLE_MAX_ORDER,
        });
    }
    if n == 0 {
        return Err(EigenError::EmptyCorpus);
    }
    let a = &articles.weights;
    let alpha = settings.alpha;

    // Citation matrix with dangling columns replaced by the article vector.
    let mut s = vec![vec![0.0f64; n]; n];
    for (i, row) in s.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = if matrix.is_dangling(j) {
                a[i]
            } else {
                matrix.get(i, j)
            };
        }
    }
    let g: Vec<Vec<f64>> = s
        .iter()
        .enumerate()
        .map(|(i, row)| row.iter().map(|&x| alpha * x + (1.0 - alpha) * a[i]).collect())
        .collect();

    let mut p = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..DENSE_ORACLE_ITERATIONS {
        for (i, row) in g.iter().enumerate() {
            next[i] = row.iter().zip(&p).map(|(x, y)| x * y).sum();
        }
        std::mem::swap(&mut p, &mut next);
    }

    let flow: Vec<f64> = s
        .iter()
        .map(|row| row.iter().zip(&p).map(|(x, y)| x * y).sum())
        .collect();
    let total: f64 = flow.iter().sum();
    let scores = matrix
        .ids
        .iter()
        .zip(&flow)
        .map(|(id, f)| (id.clone(), 100.0 * f / total))
        .collect();
    Ok(MetricVector::new(
        MetricName::Eigenfactor,
        scores,
        Provenance {
            description: format!("dense oracle; alpha {alpha}"),
            omitted: Vec::new(),
        },
    )
    .expect("flow shares are finite and non-negative"))
}
