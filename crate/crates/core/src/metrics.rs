//! Unweighted journal scores and the metric-vector file format.
//!
//! A metric file is CSV with a `id,score` header, optionally preceded by
//! `# key: value` metadata lines:
//!
//! ```text
//! # metric: impact_factor
//! # provenance: citations in 2006 to items published 2004-2005
//! # omitted: J0007;J0042
//! id,score
//! J0001,2.5
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CitationWindow, Corpus, JournalId, Year};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("score for `{id}` must be finite and non-negative, got {value}")]
    InvalidScore { id: JournalId, value: f64 },
    #[error("census year {census_year} is outside the corpus years {first}-{last}")]
    CensusYearOutOfRange {
        census_year: Year,
        first: Year,
        last: Year,
    },
    #[error("corpus has no dated data")]
    NoYears,
    #[error("metric file line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("metric file line {line}: duplicate id `{id}`")]
    DuplicateId { line: u64, id: JournalId },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum MetricName {
    TotalCitations,
    ImpactFactor,
    Eigenfactor,
    Custom(String),
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricName::TotalCitations => "total_citations",
            MetricName::ImpactFactor => "impact_factor",
            MetricName::Eigenfactor => "eigenfactor",
            MetricName::Custom(s) => s,
        })
    }
}

impl From<&str> for MetricName {
    fn from(s: &str) -> Self {
        match s {
            "total_citations" => MetricName::TotalCitations,
            "impact_factor" => MetricName::ImpactFactor,
            "eigenfactor" => MetricName::Eigenfactor,
            other => MetricName::Custom(other.to_owned()),
        }
    }
}

impl From<String> for MetricName {
    fn from(s: String) -> Self {
        MetricName::from(s.as_str())
    }
}

impl From<MetricName> for String {
    fn from(m: MetricName) -> Self {
        m.to_string()
    }
}

impl FromStr for MetricName {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(MetricName::from(s))
    }
}

/// How a metric vector was produced and which journals it left out.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub description: String,
    pub omitted: Vec<JournalId>,
}

/// A named, finite, non-negative score per journal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    name: MetricName,
    scores: BTreeMap<JournalId, f64>,
    provenance: Provenance,
}

impl MetricVector {
    pub fn new(
        name: MetricName,
        scores: BTreeMap<JournalId, f64>,
        provenance: Provenance,
    ) -> Result<Self, MetricError> {
        if let Some((id, &value)) = scores.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(MetricError::InvalidScore {
                id: id.clone(),
                value,
            });
        }
        Ok(MetricVector {
            name,
            scores,
            provenance,
        })
    }

    /// Convenience constructor for literal data.
    pub fn from_pairs<I, K>(name: MetricName, pairs: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = (K, f64)>,
        K: Into<JournalId>,
    {
        let scores = pairs.into_iter().map(|(k, v)| (k.into(), v)).collect();
        Self::new(name, scores, Provenance::default())
    }

    pub fn name(&self) -> &MetricName {
        &self.name
    }

    pub fn scores(&self) -> &BTreeMap<JournalId, f64> {
        &self.scores
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.scores.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&JournalId, f64)> {
        self.scores.iter().map(|(k, &v)| (k, v))
    }

    pub fn sum(&self) -> f64 {
        self.scores.values().sum()
    }

    /// Applies `f` to every score, keeping name and provenance.
    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> Result<Self, MetricError> {
        let scores = self.scores.iter().map(|(k, &v)| (k.clone(), f(v))).collect();
        Self::new(self.name.clone(), scores, self.provenance.clone())
    }

    pub fn with_name(mut self, name: MetricName) -> Self {
        self.name = name;
        self
    }

    pub fn read_from<R: BufRead>(mut reader: R, default_name: MetricName) -> Result<Self, MetricError> {
        let mut name = default_name;
        let mut provenance = Provenance::default();
        let mut text = String::new();
        reader.read_to_string(&mut text)?;

        // Leading `# key: value` lines carry metadata; the rest is CSV.
        let mut body_start = 0;
        let mut meta_lines = 0u64;
        for line in text.split_inclusive('\n') {
            let Some(meta) = line.trim_end().strip_prefix('#') else {
                break;
            };
            if let Some((key, value)) = meta.split_once(':') {
                let value = value.trim();
                match key.trim() {
                    "metric" => name = MetricName::from(value),
                    "provenance" => provenance.description = value.to_owned(),
                    "omitted" => {
                        provenance.omitted = value
                            .split(';')
                            .filter(|s| !s.is_empty())
                            .map(JournalId::from)
                            .collect()
                    }
                    _ => {}
                }
            }
            body_start += line.len();
            meta_lines += 1;
        }

        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(text[body_start..].as_bytes());
        let malformed = |err: csv::Error| {
            let line = err.position().map(|p| p.line()).unwrap_or(0) + meta_lines;
            MetricError::Malformed {
                line,
                message: err.to_string(),
            }
        };
        let header = csv_reader.headers().map_err(malformed)?;
        if header.iter().ne(["id", "score"]) {
            return Err(MetricError::Malformed {
                line: meta_lines + 1,
                message: "expected header `id,score`".into(),
            });
        }
        let mut scores = BTreeMap::new();
        for record in csv_reader.records() {
            let record = record.map_err(malformed)?;
            let line = record.position().map(|p| p.line()).unwrap_or(0) + meta_lines;
            let id = JournalId::from(&record[0]);
            let value: f64 = record[1].trim().parse().map_err(|_| MetricError::Malformed {
                line,
                message: format!("invalid score `{}`", &record[1]),
            })?;
            if scores.insert(id.clone(), value).is_some() {
                return Err(MetricError::DuplicateId { line, id });
            }
        }
        Self::new(name, scores, provenance)
    }

    /// Reads a metric file; the file stem names the metric unless the file
    /// carries a `# metric:` line.
    pub fn load(path: &Path) -> Result<Self, MetricError> {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file), MetricName::Custom(stem))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), MetricError> {
        writeln!(w, "# metric: {}", self.name)?;
        if !self.provenance.description.is_empty() {
            writeln!(w, "# provenance: {}", self.provenance.description.replace('\n', " "))?;
        }
        if !self.provenance.omitted.is_empty() {
            let ids: Vec<&str> = self.provenance.omitted.iter().map(|i| i.as_str()).collect();
            writeln!(w, "# omitted: {}", ids.join(";"))?;
        }
        writeln!(w, "id,score")?;
        let mut csv_w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(&mut w);
        for (id, v) in &self.scores {
            csv_w
                .write_record([id.as_str(), &v.to_string()])
                .map_err(|e| std::io::Error::other(e.to_string()))?;
        }
        csv_w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), MetricError> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Unweighted citations received by each journal within `window`.
pub fn total_citations(corpus: &Corpus, window: CitationWindow, include_self: bool) -> MetricVector {
    let mut counts = vec![0u64; corpus.len()];
    for e in corpus.edges() {
        if (!include_self && e.is_self_citation()) || !window.includes(e.citing_year, e.cited_year) {
            continue;
        }
        counts[e.cited as usize] += e.count;
    }
    let scores = corpus
        .journals()
        .iter()
        .zip(counts)
        .map(|(j, c)| (j.id.clone(), c as f64))
        .collect();
    let description = format!(
        "{window}; self-citations {}",
        if include_self { "included" } else { "excluded" }
    );
    MetricVector {
        name: MetricName::TotalCitations,
        scores,
        provenance: Provenance {
            description,
            omitted: Vec::new(),
        },
    }
}

/// Two-year Impact Factor for `census_year`: citations made in the census
/// year to items from the two preceding years, over the articles published
/// in those years. Journals with no articles in the two years are omitted
/// and listed in the provenance.
pub fn impact_factor(corpus: &Corpus, census_year: Year) -> Result<MetricVector, MetricError> {
    let (first, last) = corpus.year_span().ok_or(MetricError::NoYears)?;
    if census_year < first || census_year > last {
        return Err(MetricError::CensusYearOutOfRange {
            census_year,
            first,
            last,
        });
    }
    let window = CitationWindow::CitedWindow {
        census_year,
        span: 2,
    };
    let mut numerators = vec![0u64; corpus.len()];
    for e in corpus.edges() {
        if window.includes(e.citing_year, e.cited_year) {
            numerators[e.cited as usize] += e.count;
        }
    }
    let mut scores = BTreeMap::new();
    let mut omitted = Vec::new();
    for (j, cites) in corpus.journals().iter().zip(numerators) {
        let articles = j.articles_in(window.publication_years());
        if articles == 0 {
            omitted.push(j.id.clone());
        } else {
            scores.insert(j.id.clone(), cites as f64 / articles as f64);
        }
    }
    Ok(MetricVector {
        name: MetricName::ImpactFactor,
        scores,
        provenance: Provenance {
            description: format!("{window}; self-citations included"),
            omitted,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CitationRecord, Journal};

    fn corpus(journals: Vec<Journal>, records: Vec<CitationRecord>) -> Corpus {
        Corpus::new(journals, records).unwrap()
    }

    #[test]
    fn single_record_total() {
        let c = corpus(
            vec![Journal::new("A", ""), Journal::new("B", "")],
            vec![CitationRecord::new("A", "B", 2006, 2005, 5)],
        );
        let m = total_citations(&c, CitationWindow::AllYears, true);
        assert_eq!(m.get("A"), Some(0.0));
        assert_eq!(m.get("B"), Some(5.0));
    }

    #[test]
    fn self_loops_excluded_on_request() {
        let c = corpus(
            vec![Journal::new("A", ""), Journal::new("B", "")],
            vec![CitationRecord::new("A", "A", 2006, 2005, 9)],
        );
        let m = total_citations(&c, CitationWindow::AllYears, false);
        assert!(m.iter().all(|(_, v)| v == 0.0));
        let m = total_citations(&c, CitationWindow::AllYears, true);
        assert_eq!(m.get("A"), Some(9.0));
    }

    #[test]
    fn windowed_total() {
        let c = corpus(
            vec![Journal::new("A", ""), Journal::new("B", "")],
            vec![
                CitationRecord::new("A", "B", 2006, 2005, 1),
                CitationRecord::new("A", "B", 2006, 2001, 2),
                CitationRecord::new("A", "B", 2005, 2004, 4),
            ],
        );
        let w = CitationWindow::cited_window(2006, 5).unwrap();
        assert_eq!(total_citations(&c, w, true).get("B"), Some(3.0));
        let w = CitationWindow::cited_window(2006, 2).unwrap();
        assert_eq!(total_citations(&c, w, true).get("B"), Some(1.0));
    }

    fn if_corpus(scale: u64) -> Corpus {
        corpus(
            vec![
                Journal::new("A", "")
                    .with_articles(2004, 2 * scale)
                    .with_articles(2005, 3 * scale),
                Journal::new("B", "").with_articles(2004, 8 * scale),
                Journal::new("C", "").with_articles(2006, 4 * scale),
            ],
            vec![
                CitationRecord::new("B", "A", 2006, 2005, 6 * scale),
                CitationRecord::new("C", "A", 2006, 2004, 4 * scale),
                // outside the two-year window or census year
                CitationRecord::new("C", "A", 2006, 2003, 50 * scale),
                CitationRecord::new("C", "A", 2005, 2004, 50 * scale),
                CitationRecord::new("C", "A", 2006, 2006, 50 * scale),
            ],
        )
    }

    #[test]
    fn impact_factor_quotients() {
        let m = impact_factor(&if_corpus(1), 2006).unwrap();
        assert_eq!(m.get("A"), Some(2.0));
        assert_eq!(m.get("B"), Some(0.0));
        assert_eq!(m.get("C"), None);
        assert_eq!(m.provenance().omitted, vec![JournalId::from("C")]);
    }

    #[test]
    fn impact_factor_scale_invariant() {
        let base = impact_factor(&if_corpus(1), 2006).unwrap();
        for k in [2, 3, 17] {
            let scaled = impact_factor(&if_corpus(k), 2006).unwrap();
            assert_eq!(base.scores(), scaled.scores());
        }
    }

    #[test]
    fn impact_factor_out_of_range() {
        assert!(matches!(
            impact_factor(&if_corpus(1), 2030),
            Err(MetricError::CensusYearOutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_bad_scores() {
        for v in [-1.0, f64::NAN, f64::INFINITY] {
            assert!(MetricVector::from_pairs(MetricName::Eigenfactor, [("A", v)]).is_err());
        }
    }

    #[test]
    fn metric_file_round_trip() {
        let mut m = MetricVector::from_pairs(
            MetricName::ImpactFactor,
            [("A", 0.1), ("B, Inc", 1.0 / 3.0), ("C", 25.8)],
        )
        .unwrap();
        m.provenance = Provenance {
            description: "test data".into(),
            omitted: vec!["D".into(), "E".into()],
        };
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = MetricVector::read_from(&buf[..], MetricName::Custom("x".into())).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn metric_file_errors() {
        let r = MetricVector::read_from("id,score\nA,1\nA,2\n".as_bytes(), "x".into());
        assert!(matches!(r, Err(MetricError::DuplicateId { line: 3, .. })));
        let r = MetricVector::read_from("id,score\nA,abc\n".as_bytes(), "x".into());
        assert!(matches!(r, Err(MetricError::Malformed { line: 2, .. })));
        let r = MetricVector::read_from("name,value\n".as_bytes(), "x".into());
        assert!(matches!(r, Err(MetricError::Malformed { line: 1, .. })));
        let r = MetricVector::read_from("id,score\nA,-2\n".as_bytes(), "x".into());
        assert!(matches!(r, Err(MetricError::InvalidScore { .. })));
    }
}
