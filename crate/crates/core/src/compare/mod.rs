//! Ranking and paired-metric comparison.
//!
//! Correlations pair journals by id and use only journals present in both
//! vectors; everything else is reported as omitted. The log-scale statistics
//! (`pearson_log`, `density_ellipse`) use base-10 logarithms and further drop
//! pairs with a non-positive value.

mod ellipse;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::JournalId;
use crate::metrics::{MetricName, MetricVector};

pub use ellipse::{density_ellipse, EllipseParams};

/// Minimum number of usable pairs for any correlation or ellipse fit.
pub const MIN_PAIRS: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("metric vector is empty")]
    EmptyVector,
    #[error("need at least {MIN_PAIRS} journals present in both metrics, found {found}")]
    TooFewPairs { found: usize },
    #[error("need at least 2 journals to compute rank gaps, found {found}")]
    TooFewJournals { found: usize },
    #[error("`{metric}` has zero variance over the paired journals")]
    ZeroVariance { metric: MetricName },
    #[error("total score is zero; shares are undefined")]
    ZeroTotal,
    #[error("coverage must lie in (0, 1), got {0}")]
    InvalidCoverage(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    /// Tied journals share the mean of the positions they occupy.
    #[default]
    Average,
    /// Tied journals all take the first position of their group.
    Min,
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TiePolicy::Average => "average",
            TiePolicy::Min => "min",
        })
    }
}

impl FromStr for TiePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "average" => Ok(TiePolicy::Average),
            "min" => Ok(TiePolicy::Min),
            other => Err(format!("unknown tie policy `{other}` (expected average or min)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub id: JournalId,
    pub score: f64,
    pub rank: f64,
}

/// Journals ordered by descending score, ties displayed by ascending id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub metric: MetricName,
    pub tie_policy: TiePolicy,
    pub rows: Vec<RankRow>,
}

impl RankTable {
    pub fn rank_of(&self, id: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.id.as_str() == id).map(|r| r.rank)
    }

    pub fn ids(&self) -> impl Iterator<Item = &JournalId> {
        self.rows.iter().map(|r| &r.id)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let to_io = |e: csv::Error| std::io::Error::other(e.to_string());
        w.write_record(["rank", "id", "score"]).map_err(to_io)?;
        for r in &self.rows {
            w.write_record([r.rank.to_string(), r.id.to_string(), r.score.to_string()])
                .map_err(to_io)?;
        }
        w.flush()
    }
}

fn descending(a: f64, b: f64) -> Ordering {
    b.total_cmp(&a)
}

/// Ranks `scores` with rank 1 for the largest score.
pub fn rank(scores: &MetricVector, tie_policy: TiePolicy) -> Result<RankTable, CompareError> {
    if scores.is_empty() {
        return Err(CompareError::EmptyVector);
    }
    // BTreeMap iteration is already id-ascending; a stable sort keeps that
    // order inside tied groups.
    let mut rows: Vec<RankRow> = scores
        .iter()
        .map(|(id, score)| RankRow {
            id: id.clone(),
            score,
            rank: 0.0,
        })
        .collect();
    rows.sort_by(|a, b| descending(a.score, b.score));
    assign_ranks(&mut rows, |r| r.score, |r, v| r.rank = v, tie_policy);
    Ok(RankTable {
        metric: scores.name().clone(),
        tie_policy,
        rows,
    })
}

/// Assigns ranks to items already sorted by descending key.
fn assign_ranks<T>(
    items: &mut [T],
    key: impl Fn(&T) -> f64,
    mut set: impl FnMut(&mut T, f64),
    tie_policy: TiePolicy,
) {
    let mut start = 0;
    while start < items.len() {
        let k = key(&items[start]);
        let end = start + items[start..].iter().take_while(|t| key(t) == k).count();
        let value = match tie_policy {
            TiePolicy::Min => (start + 1) as f64,
            // mean of positions start+1 ..= end
            TiePolicy::Average => (start + 1 + end) as f64 / 2.0,
        };
        for item in &mut items[start..end] {
            set(item, value);
        }
        start = end;
    }
}

/// Average ranks of `values` (rank 1 = largest), in input order.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<(usize, f64, f64)> = values.iter().enumerate().map(|(i, &v)| (i, v, 0.0)).collect();
    order.sort_by(|a, b| descending(a.1, b.1).then(a.0.cmp(&b.0)));
    assign_ranks(&mut order, |t| t.1, |t, r| t.2 = r, TiePolicy::Average);
    let mut ranks = vec![0.0; values.len()];
    for (i, _, r) in order {
        ranks[i] = r;
    }
    ranks
}

/// Pearson correlation; the error names the side with zero variance.
fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, Side> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Side::X);
    }
    if syy == 0.0 {
        return Err(Side::Y);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

enum Side {
    X,
    Y,
}

/// A correlation coefficient with the sample it was computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub rho: f64,
    pub n: usize,
    /// Journals in either input that did not enter the computation.
    pub omitted: Vec<JournalId>,
}

pub(crate) struct Paired {
    pub ids: Vec<JournalId>,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub omitted: Vec<JournalId>,
}

/// Pairs journals present in both vectors (and accepted by `usable`).
pub(crate) fn pair(x: &MetricVector, y: &MetricVector, usable: impl Fn(f64) -> bool) -> Paired {
    let mut paired = Paired {
        ids: Vec::new(),
        xs: Vec::new(),
        ys: Vec::new(),
        omitted: Vec::new(),
    };
    for (id, vx) in x.iter() {
        match y.get(id.as_str()) {
            Some(vy) if usable(vx) && usable(vy) => {
                paired.ids.push(id.clone());
                paired.xs.push(vx);
                paired.ys.push(vy);
            }
            _ => paired.omitted.push(id.clone()),
        }
    }
    for (id, _) in y.iter() {
        if x.get(id.as_str()).is_none() {
            paired.omitted.push(id.clone());
        }
    }
    paired.omitted.sort();
    paired
}

fn correlate(
    x: &MetricVector,
    y: &MetricVector,
    xs: &[f64],
    ys: &[f64],
    n: usize,
    omitted: Vec<JournalId>,
) -> Result<Correlation, CompareError> {
    if n < MIN_PAIRS {
        return Err(CompareError::TooFewPairs { found: n });
    }
    match pearson(xs, ys) {
        Ok(rho) => Ok(Correlation { rho, n, omitted }),
        Err(Side::X) => Err(CompareError::ZeroVariance {
            metric: x.name().clone(),
        }),
        Err(Side::Y) => Err(CompareError::ZeroVariance {
            metric: y.name().clone(),
        }),
    }
}

/// Spearman's rho: Pearson correlation of average-policy ranks.
pub fn spearman(x: &MetricVector, y: &MetricVector) -> Result<Correlation, CompareError> {
    let p = pair(x, y, |_| true);
    let rx = average_ranks(&p.xs);
    let ry = average_ranks(&p.ys);
    correlate(x, y, &rx, &ry, p.ids.len(), p.omitted)
}

/// Pearson correlation of `(log10 x, log10 y)` over strictly positive pairs.
pub fn pearson_log(x: &MetricVector, y: &MetricVector) -> Result<Correlation, CompareError> {
    let p = pair(x, y, |v| v > 0.0);
    let lx: Vec<f64> = p.xs.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = p.ys.iter().map(|v| v.log10()).collect();
    correlate(x, y, &lx, &ly, p.ids.len(), p.omitted)
}

/// Share of the total held by the top `k` journals, for each `k` in `ks`.
/// `k` larger than the vector is treated as the whole vector.
pub fn concentration(scores: &MetricVector, ks: &[usize]) -> Result<Vec<(usize, f64)>, CompareError> {
    let mut values: Vec<f64> = scores.scores().values().copied().collect();
    values.sort_by(|a, b| descending(*a, *b));
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in &values {
        acc += v;
        prefix.push(acc);
    }
    let total = acc;
    if !(total > 0.0) {
        return Err(CompareError::ZeroTotal);
    }
    Ok(ks
        .iter()
        .map(|&k| (k, prefix[k.min(values.len())] / total))
        .collect())
}

/// Differences between consecutively ranked scores, largest first.
pub fn rank_gaps(scores: &MetricVector) -> Result<Vec<f64>, CompareError> {
    if scores.len() < 2 {
        return Err(CompareError::TooFewJournals { found: scores.len() });
    }
    let mut values: Vec<f64> = scores.scores().values().copied().collect();
    values.sort_by(|a, b| descending(*a, *b));
    Ok(values.windows(2).map(|w| w[0] - w[1]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricShares {
    pub metric: MetricName,
    pub shares: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGaps {
    pub metric: MetricName,
    pub gaps: Vec<f64>,
}

/// Everything computed for one metric pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub x_metric: MetricName,
    pub y_metric: MetricName,
    pub pearson_log: Correlation,
    pub spearman: Correlation,
    /// Top-k shares of each metric over its full vector.
    pub concentration: Vec<MetricShares>,
    pub rank_gaps: Vec<MetricGaps>,
    pub ellipse: EllipseParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub coverage: f64,
    pub ks: Vec<usize>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            coverage: 0.95,
            ks: vec![1, 5, 10],
        }
    }
}

pub fn compare(
    x: &MetricVector,
    y: &MetricVector,
    options: &CompareOptions,
) -> Result<ComparisonReport, CompareError> {
    let spearman = spearman(x, y)?;
    let pearson_log = pearson_log(x, y)?;
    let ellipse = density_ellipse(x, y, options.coverage)?;
    let mut shares = Vec::new();
    let mut gaps = Vec::new();
    for m in [x, y] {
        shares.push(MetricShares {
            metric: m.name().clone(),
            shares: concentration(m, &options.ks)?,
        });
        gaps.push(MetricGaps {
            metric: m.name().clone(),
            gaps: rank_gaps(m)?,
        });
    }
    Ok(ComparisonReport {
        x_metric: x.name().clone(),
        y_metric: y.name().clone(),
        pearson_log,
        spearman,
        concentration: shares,
        rank_gaps: gaps,
        ellipse,
    })
}

/// `(id, log10 x, log10 y)` for every strictly positive pair.
pub fn log_scatter(x: &MetricVector, y: &MetricVector) -> Vec<(JournalId, f64, f64)> {
    let p = pair(x, y, |v| v > 0.0);
    p.ids
        .into_iter()
        .zip(p.xs.iter().zip(&p.ys))
        .map(|(id, (a, b))| (id, a.log10(), b.log10()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mv(pairs: &[(&str, f64)]) -> MetricVector {
        MetricVector::from_pairs(MetricName::Custom("m".into()), pairs.iter().map(|&(k, v)| (k, v))).unwrap()
    }

    fn ranks(t: &RankTable) -> Vec<(&str, f64)> {
        t.rows.iter().map(|r| (r.id.as_str(), r.rank)).collect()
    }

    #[test]
    fn rank_orders_descending() {
        let t = rank(&mv(&[("A", 3.0), ("B", 1.0), ("C", 2.0)]), TiePolicy::Min).unwrap();
        assert_eq!(ranks(&t), vec![("A", 1.0), ("C", 2.0), ("B", 3.0)]);
    }

    #[test]
    fn rank_ties() {
        let v = mv(&[("B", 5.0), ("A", 5.0), ("C", 1.0)]);
        let t = rank(&v, TiePolicy::Average).unwrap();
        assert_eq!(ranks(&t), vec![("A", 1.5), ("B", 1.5), ("C", 3.0)]);
        let t = rank(&v, TiePolicy::Min).unwrap();
        assert_eq!(ranks(&t), vec![("A", 1.0), ("B", 1.0), ("C", 3.0)]);
        let t = rank(&mv(&[("A", 1.0), ("B", 1.0), ("C", 1.0), ("D", 0.0)]), TiePolicy::Average).unwrap();
        assert_eq!(t.rank_of("C"), Some(2.0));
        assert_eq!(t.rank_of("D"), Some(4.0));
    }

    #[test]
    fn rank_empty_is_error() {
        assert_eq!(rank(&mv(&[]), TiePolicy::Min), Err(CompareError::EmptyVector));
    }

    #[test]
    fn spearman_extremes() {
        let x = mv(&[("A", 1.0), ("B", 2.0), ("C", 3.0), ("D", 4.0)]);
        let same = mv(&[("A", 10.0), ("B", 20.0), ("C", 300.0), ("D", 4000.0)]);
        let rev = mv(&[("A", 4.0), ("B", 3.0), ("C", 2.0), ("D", 1.0)]);
        assert_eq!(spearman(&x, &same).unwrap().rho, 1.0);
        assert_eq!(spearman(&x, &rev).unwrap().rho, -1.0);
    }

    #[test]
    fn spearman_reports_omissions_and_preconditions() {
        let x = mv(&[("A", 1.0), ("B", 2.0), ("C", 3.0), ("X", 4.0)]);
        let y = mv(&[("A", 1.0), ("B", 2.0), ("C", 3.0), ("Y", 4.0)]);
        let c = spearman(&x, &y).unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(c.omitted, vec![JournalId::from("X"), JournalId::from("Y")]);

        let y = mv(&[("A", 1.0), ("B", 2.0)]);
        assert_eq!(spearman(&x, &y), Err(CompareError::TooFewPairs { found: 2 }));
        let flat = mv(&[("A", 1.0), ("B", 1.0), ("C", 1.0)]);
        assert!(matches!(spearman(&x, &flat), Err(CompareError::ZeroVariance { .. })));
    }

    #[test]
    fn pearson_log_power_laws() {
        let xs = [0.5, 2.0, 3.0, 17.0, 1000.0];
        let x = mv(&xs.iter().enumerate().map(|(i, &v)| (["a", "b", "c", "d", "e"][i], v)).collect::<Vec<_>>());
        let up = x.map_scores(|v| 3.0 * v.powf(1.7)).unwrap();
        let down = x.map_scores(|v| 2.0 * v.powf(-0.6)).unwrap();
        assert!((pearson_log(&x, &up).unwrap().rho - 1.0).abs() < 1e-12);
        assert!((pearson_log(&x, &down).unwrap().rho + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_log_drops_non_positive() {
        let x = mv(&[("A", 1.0), ("B", 2.0), ("C", 3.0), ("D", 0.0)]);
        let y = mv(&[("A", 1.0), ("B", 4.0), ("C", 9.0), ("D", 5.0)]);
        let c = pearson_log(&x, &y).unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(c.omitted, vec![JournalId::from("D")]);
    }

    #[test]
    fn concentration_cases() {
        let ten = mv(&(0..10).map(|i| (["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"][i], 2.0)).collect::<Vec<_>>());
        assert_eq!(concentration(&ten, &[1, 10, 11]).unwrap(), vec![(1, 0.1), (10, 1.0), (11, 1.0)]);
        let v = mv(&[("A", 0.7), ("B", 0.2), ("C", 0.1)]);
        let s = concentration(&v, &[0, 1, 2, 3]).unwrap();
        assert_eq!(s[0].1, 0.0);
        assert!((s[1].1 - 0.7).abs() < 1e-15);
        assert_eq!(s[3].1, 1.0);
        assert_eq!(concentration(&mv(&[("A", 0.0)]), &[1]), Err(CompareError::ZeroTotal));
    }

    #[test]
    fn gaps() {
        let g = rank_gaps(&mv(&[("A", 0.7), ("B", 0.5), ("C", 0.45)])).unwrap();
        assert_eq!(g.len(), 2);
        assert!((g[0] - 0.2).abs() < 1e-15 && (g[1] - 0.05).abs() < 1e-15);
        assert_eq!(rank_gaps(&mv(&[("A", 1.0), ("B", 1.0), ("C", 1.0)])).unwrap(), vec![0.0, 0.0]);
        assert_eq!(rank_gaps(&mv(&[("A", 1.0)])), Err(CompareError::TooFewJournals { found: 1 }));
    }

    #[test]
    fn full_comparison_of_identical_metrics() {
        let x = mv(&[("A", 1.0), ("B", 5.0), ("C", 3.0), ("D", 8.0)]);
        let r = compare(&x, &x, &CompareOptions::default()).unwrap();
        assert_eq!(r.spearman.rho, 1.0);
        assert!((r.pearson_log.rho - 1.0).abs() < 1e-15);
        assert!(r.ellipse.degenerate);
        assert_eq!(r.concentration.len(), 2);
    }

    #[test]
    fn scatter_is_log10() {
        let x = mv(&[("A", 10.0), ("B", 100.0), ("C", 0.0)]);
        let y = mv(&[("A", 1000.0), ("B", 1.0), ("C", 5.0)]);
        let s = log_scatter(&x, &y);
        assert_eq!(s, vec![(JournalId::from("A"), 1.0, 3.0), (JournalId::from("B"), 2.0, 0.0)]);
    }
}
