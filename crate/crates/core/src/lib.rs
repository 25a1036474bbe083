//! Journal citation-network ranking.
//!
//! The crate ingests a journal-level citation network, computes the two
//! unweighted scores bibliometricians usually report (total citations and the
//! two-year Impact Factor), computes an iteratively weighted score by damped
//! power iteration over the cross-citation matrix, and compares the resulting
//! rankings with rank and log-scale correlations, concentration shares and
//! bivariate density ellipses.
//!
//! Module layout:
//!
//! - [`corpus`]: data model, CSV ingestion/serialization, filtering.
//! - [`metrics`]: total citations, Impact Factor, metric vector files.
//! - [`eigenrank`]: cross-citation matrix, sparse power iteration, dense oracle.
//! - [`compare`]: ranking, correlations, concentration, rank gaps, ellipses.
//! - [`syngen`]: seeded synthetic corpora with skewed citation counts.
//! - [`cli`]: the `citerank` command-line front end.

pub mod cli;
pub mod compare;
pub mod corpus;
pub mod eigenrank;
pub mod metrics;
pub mod syngen;

pub use compare::{
    concentration, density_ellipse, pearson_log, rank, rank_gaps, spearman, ComparisonReport,
    Correlation, EllipseParams, RankTable, TiePolicy,
};
pub use corpus::{
    filter_to_scored, parse_corpus, write_corpus, CitationRecord, CitationWindow, Corpus,
    CorpusError, Journal, JournalId, Year,
};
pub use eigenrank::{
    build_matrix, dense_oracle_scores, eigen_scores, ArticleVector, CrossCitationMatrix,
    EigenError, EigenRun, EigenSettings,
};
pub use metrics::{impact_factor, total_citations, MetricError, MetricName, MetricVector};
pub use syngen::{generate, GenSettings};
