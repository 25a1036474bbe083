//! Citation-network data model and its CSV file formats.
//!
//! A [`Corpus`] is a set of journals plus aggregated citation records. Each
//! record counts the citations one journal made in a given year to items
//! another journal published in a given year. Records sharing the same
//! `(citing, cited, citing_year, cited_year)` key are merged by summing their
//! counts, so a corpus is always in canonical form.
//!
//! File formats (UTF-8, comma-separated, header row, standard double-quote
//! quoting):
//!
//! ```text
//! id,name,year,articles
//! NEJM,New England Journal of Medicine,2005,820
//! ```
//!
//! ```text
//! citing,cited,citing_year,cited_year,count
//! LANCET,NEJM,2006,2005,311
//! ```
//!
//! A journal with no article data is written as a single row with empty
//! `year` and `articles` fields.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricVector;

/// Calendar year.
pub type Year = i32;

const JOURNALS_HEADER: [&str; 4] = ["id", "name", "year", "articles"];
const CITATIONS_HEADER: [&str; 5] = ["citing", "cited", "citing_year", "cited_year", "count"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate journal id `{id}`")]
    DuplicateJournal { id: JournalId },
    #[error("journals line {line}: duplicate row for journal `{id}` year {year}")]
    DuplicateJournalYear { line: u64, id: JournalId, year: Year },
    #[error("journals line {line}: journal `{id}` already named `{previous}`")]
    ConflictingName {
        line: u64,
        id: JournalId,
        previous: String,
    },
    #[error("{}unknown journal id `{id}`", at_line(*.line))]
    UnknownJournal { line: Option<u64>, id: JournalId },
    #[error("{}citation count must be a positive integer, got {count}", at_line(*.line))]
    InvalidCount { line: Option<u64>, count: i64 },
    #[error("{}cited year {cited_year} is after citing year {citing_year}", at_line(*.line))]
    CitedAfterCiting {
        line: Option<u64>,
        citing_year: Year,
        cited_year: Year,
    },
    #[error("citation count overflow for {citing} -> {cited}")]
    CountOverflow { citing: JournalId, cited: JournalId },
    #[error("{file} line {line}: {message}")]
    Malformed {
        file: &'static str,
        line: u64,
        message: String,
    },
    #[error("citation window span must be >= 1")]
    InvalidWindow,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn at_line(line: Option<u64>) -> String {
    match line {
        Some(l) => format!("citations line {l}: "),
        None => String::new(),
    }
}

/// Opaque journal identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JournalId(String);

impl JournalId {
    pub fn new(id: impl Into<String>) -> Self {
        JournalId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for JournalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for JournalId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for JournalId {
    fn from(s: &str) -> Self {
        JournalId(s.to_owned())
    }
}

impl From<String> for JournalId {
    fn from(s: String) -> Self {
        JournalId(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Journal {
    pub id: JournalId,
    pub name: String,
    pub articles_by_year: BTreeMap<Year, u64>,
}

impl Journal {
    pub fn new(id: impl Into<JournalId>, name: impl Into<String>) -> Self {
        Journal {
            id: id.into(),
            name: name.into(),
            articles_by_year: BTreeMap::new(),
        }
    }

    pub fn with_articles(mut self, year: Year, articles: u64) -> Self {
        self.articles_by_year.insert(year, articles);
        self
    }

    /// Articles published in `years`; absent years count as zero.
    pub fn articles_in(&self, years: RangeInclusive<Year>) -> u64 {
        self.articles_by_year.range(years).map(|(_, n)| n).sum()
    }

    pub fn articles(&self, year: Year) -> u64 {
        self.articles_by_year.get(&year).copied().unwrap_or(0)
    }

    pub fn total_articles(&self) -> u64 {
        self.articles_by_year.values().sum()
    }
}

/// One aggregated citation edge, addressed by journal id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationRecord {
    pub citing: JournalId,
    pub cited: JournalId,
    pub citing_year: Year,
    pub cited_year: Year,
    pub count: u64,
}

impl CitationRecord {
    pub fn new(
        citing: impl Into<JournalId>,
        cited: impl Into<JournalId>,
        citing_year: Year,
        cited_year: Year,
        count: u64,
    ) -> Self {
        CitationRecord {
            citing: citing.into(),
            cited: cited.into(),
            citing_year,
            cited_year,
            count,
        }
    }
}

/// A citation edge addressed by journal position in the owning [`Corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub citing: u32,
    pub cited: u32,
    pub citing_year: Year,
    pub cited_year: Year,
    pub count: u64,
}

impl Edge {
    fn key(&self) -> (u32, u32, Year, Year) {
        (self.citing, self.cited, self.citing_year, self.cited_year)
    }

    pub fn is_self_citation(&self) -> bool {
        self.citing == self.cited
    }
}

/// Which citation records a count or matrix draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CitationWindow {
    /// Every record, regardless of year.
    AllYears,
    /// Citations made in `census_year` to items published in the `span`
    /// preceding years, `[census_year - span, census_year - 1]`.
    CitedWindow { census_year: Year, span: u32 },
    /// Citations made in `census_year` to items of any publication year.
    CensusYear { census_year: Year },
}

impl CitationWindow {
    pub fn cited_window(census_year: Year, span: u32) -> Result<Self, CorpusError> {
        if span == 0 {
            return Err(CorpusError::InvalidWindow);
        }
        Ok(CitationWindow::CitedWindow { census_year, span })
    }

    pub fn includes(&self, citing_year: Year, cited_year: Year) -> bool {
        match *self {
            CitationWindow::AllYears => true,
            CitationWindow::CitedWindow { census_year, span } => {
                citing_year == census_year
                    && cited_year < census_year
                    && i64::from(cited_year) >= i64::from(census_year) - i64::from(span)
            }
            CitationWindow::CensusYear { census_year } => citing_year == census_year,
        }
    }

    /// Publication years whose articles belong to this window.
    pub fn publication_years(&self) -> RangeInclusive<Year> {
        match *self {
            CitationWindow::AllYears => Year::MIN..=Year::MAX,
            CitationWindow::CitedWindow { census_year, span } => {
                let start = i64::from(census_year) - i64::from(span);
                (start.max(i64::from(Year::MIN)) as Year)..=(census_year - 1)
            }
            CitationWindow::CensusYear { census_year } => Year::MIN..=census_year,
        }
    }
}

impl fmt::Display for CitationWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CitationWindow::AllYears => f.write_str("all years"),
            CitationWindow::CitedWindow { census_year, span } => write!(
                f,
                "citations in {census_year} to items published {}-{}",
                i64::from(census_year) - i64::from(span),
                census_year - 1
            ),
            CitationWindow::CensusYear { census_year } => {
                write!(f, "citations in {census_year} to items of any year")
            }
        }
    }
}

/// Journals plus merged citation records. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    journals: Vec<Journal>,
    index: HashMap<JournalId, u32>,
    edges: Vec<Edge>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.journals == other.journals && self.edges == other.edges
    }
}

impl Eq for Corpus {}

impl Corpus {
    /// Builds a validated corpus. Records with identical keys are merged.
    pub fn new(
        journals: Vec<Journal>,
        records: impl IntoIterator<Item = CitationRecord>,
    ) -> Result<Self, CorpusError> {
        let (journals, index) = index_journals(journals)?;
        let mut edges = Vec::new();
        for r in records {
            let citing = lookup(&index, r.citing.as_str(), None)?;
            let cited = lookup(&index, r.cited.as_str(), None)?;
            check_record(r.citing_year, r.cited_year, r.count as i64, None)?;
            edges.push(Edge {
                citing,
                cited,
                citing_year: r.citing_year,
                cited_year: r.cited_year,
                count: r.count,
            });
        }
        let edges = merge_edges(edges, &journals)?;
        Ok(Corpus {
            journals,
            index,
            edges,
        })
    }

    /// Builds a corpus from journals already sorted by id and edges already
    /// validated against them. Edges are merged.
    pub(crate) fn from_sorted_parts(
        journals: Vec<Journal>,
        edges: Vec<Edge>,
    ) -> Result<Self, CorpusError> {
        debug_assert!(journals.windows(2).all(|w| w[0].id < w[1].id));
        let index = journals
            .iter()
            .enumerate()
            .map(|(i, j)| (j.id.clone(), i as u32))
            .collect();
        let edges = merge_edges(edges, &journals)?;
        Ok(Corpus {
            journals,
            index,
            edges,
        })
    }

    /// Journals sorted by id. A journal's position is its index everywhere
    /// else in the crate.
    pub fn journals(&self) -> &[Journal] {
        &self.journals
    }

    pub fn journal(&self, id: &str) -> Option<&Journal> {
        self.position(id).map(|i| &self.journals[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| i as usize)
    }

    /// Merged edges sorted by `(citing, cited, citing_year, cited_year)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn records(&self) -> impl Iterator<Item = CitationRecord> + '_ {
        self.edges.iter().map(|e| CitationRecord {
            citing: self.journals[e.citing as usize].id.clone(),
            cited: self.journals[e.cited as usize].id.clone(),
            citing_year: e.citing_year,
            cited_year: e.cited_year,
            count: e.count,
        })
    }

    pub fn len(&self) -> usize {
        self.journals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.journals.is_empty()
    }

    pub fn total_count(&self) -> u64 {
        self.edges.iter().map(|e| e.count).sum()
    }

    /// Smallest and largest year mentioned by any article count or citation.
    pub fn year_span(&self) -> Option<(Year, Year)> {
        let article_years = self
            .journals
            .iter()
            .flat_map(|j| j.articles_by_year.keys().copied());
        let citation_years = self.edges.iter().flat_map(|e| [e.citing_year, e.cited_year]);
        article_years
            .chain(citation_years)
            .fold(None, |acc, y| match acc {
                None => Some((y, y)),
                Some((lo, hi)) => Some((lo.min(y), hi.max(y))),
            })
    }

    pub fn latest_citing_year(&self) -> Option<Year> {
        self.edges.iter().map(|e| e.citing_year).max()
    }

    /// Keeps journals for which `keep` holds; citations touching a removed
    /// journal are dropped. Returns the new corpus and the removed ids.
    pub fn retain_journals(&self, mut keep: impl FnMut(&Journal) -> bool) -> (Corpus, Vec<JournalId>) {
        let mut remap = vec![u32::MAX; self.journals.len()];
        let mut journals = Vec::new();
        let mut removed = Vec::new();
        for (old, j) in self.journals.iter().enumerate() {
            if keep(j) {
                remap[old] = journals.len() as u32;
                journals.push(j.clone());
            } else {
                removed.push(j.id.clone());
            }
        }
        // Relative order of kept journals is unchanged, so edges stay sorted.
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .filter_map(|e| {
                let citing = remap[e.citing as usize];
                let cited = remap[e.cited as usize];
                (citing != u32::MAX && cited != u32::MAX).then_some(Edge {
                    citing,
                    cited,
                    ..*e
                })
            })
            .collect();
        let index = journals
            .iter()
            .enumerate()
            .map(|(i, j)| (j.id.clone(), i as u32))
            .collect();
        (
            Corpus {
                journals,
                index,
                edges,
            },
            removed,
        )
    }
}

fn index_journals(
    mut journals: Vec<Journal>,
) -> Result<(Vec<Journal>, HashMap<JournalId, u32>), CorpusError> {
    journals.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = journals.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(CorpusError::DuplicateJournal {
            id: w[0].id.clone(),
        });
    }
    if journals.len() > u32::MAX as usize {
        return Err(CorpusError::Malformed {
            file: "journals",
            line: 0,
            message: "too many journals".into(),
        });
    }
    let index = journals
        .iter()
        .enumerate()
        .map(|(i, j)| (j.id.clone(), i as u32))
        .collect();
    Ok((journals, index))
}

fn lookup(index: &HashMap<JournalId, u32>, id: &str, line: Option<u64>) -> Result<u32, CorpusError> {
    index
        .get(id)
        .copied()
        .ok_or_else(|| CorpusError::UnknownJournal {
            line,
            id: JournalId::from(id),
        })
}

fn check_record(
    citing_year: Year,
    cited_year: Year,
    count: i64,
    line: Option<u64>,
) -> Result<(), CorpusError> {
    if count < 1 {
        return Err(CorpusError::InvalidCount { line, count });
    }
    if cited_year > citing_year {
        return Err(CorpusError::CitedAfterCiting {
            line,
            citing_year,
            cited_year,
        });
    }
    Ok(())
}

fn merge_edges(mut edges: Vec<Edge>, journals: &[Journal]) -> Result<Vec<Edge>, CorpusError> {
    edges.sort_unstable_by_key(Edge::key);
    let mut merged: Vec<Edge> = Vec::with_capacity(edges.len());
    for e in edges {
        match merged.last_mut() {
            Some(last) if last.key() == e.key() => {
                last.count =
                    last.count
                        .checked_add(e.count)
                        .ok_or_else(|| CorpusError::CountOverflow {
                            citing: journals[e.citing as usize].id.clone(),
                            cited: journals[e.cited as usize].id.clone(),
                        })?;
            }
            _ => merged.push(e),
        }
    }
    Ok(merged)
}

/// Drops every journal without a score in `required`, along with the
/// citations to and from it.
pub fn filter_to_scored(corpus: &Corpus, required: &MetricVector) -> (Corpus, Vec<JournalId>) {
    corpus.retain_journals(|j| required.get(j.id.as_str()).is_some())
}

fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source)
}

fn malformed(file: &'static str, line: u64, message: impl Into<String>) -> CorpusError {
    CorpusError::Malformed {
        file,
        line,
        message: message.into(),
    }
}

fn csv_error(file: &'static str, err: csv::Error) -> CorpusError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => CorpusError::Io(e),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => malformed(
            file,
            line,
            format!("expected {expected_len} fields, found {len}"),
        ),
        csv::ErrorKind::Utf8 { err, .. } => malformed(file, line, err.to_string()),
        other => malformed(file, line, format!("{other:?}")),
    }
}

fn check_header<R: Read>(
    reader: &mut csv::Reader<R>,
    file: &'static str,
    expected: &[&str],
) -> Result<(), CorpusError> {
    let header = reader.headers().map_err(|e| csv_error(file, e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(malformed(
            file,
            1,
            format!("expected header `{}`", expected.join(",")),
        ));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    file: &'static str,
    line: u64,
    name: &str,
    value: &str,
) -> Result<T, CorpusError> {
    value
        .parse()
        .map_err(|_| malformed(file, line, format!("invalid {name} `{value}`")))
}

/// Parses the journals and citations files into a validated corpus.
pub fn parse_corpus<J: Read, C: Read>(journals_src: J, citations_src: C) -> Result<Corpus, CorpusError> {
    const JF: &str = "journals";
    const CF: &str = "citations";

    let mut reader = csv_reader(journals_src);
    check_header(&mut reader, JF, &JOURNALS_HEADER)?;
    let mut by_id: BTreeMap<JournalId, Journal> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(|e| csv_error(JF, e))? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let id = &record[0];
        if id.is_empty() {
            return Err(malformed(JF, line, "empty journal id"));
        }
        let name = &record[1];
        let journal = by_id
            .entry(JournalId::from(id))
            .or_insert_with(|| Journal::new(id, name));
        if journal.name != name {
            return Err(CorpusError::ConflictingName {
                line,
                id: journal.id.clone(),
                previous: journal.name.clone(),
            });
        }
        match (&record[2], &record[3]) {
            ("", "") => {}
            ("", _) | (_, "") => {
                return Err(malformed(JF, line, "year and articles must both be set or both empty"))
            }
            (year, articles) => {
                let year: Year = parse_field(JF, line, "year", year)?;
                let articles: u64 = parse_field(JF, line, "article count", articles)?;
                if journal.articles_by_year.insert(year, articles).is_some() {
                    return Err(CorpusError::DuplicateJournalYear {
                        line,
                        id: journal.id.clone(),
                        year,
                    });
                }
            }
        }
    }
    let journals: Vec<Journal> = by_id.into_values().collect();
    let (journals, index) = index_journals(journals)?;

    let mut reader = csv_reader(citations_src);
    check_header(&mut reader, CF, &CITATIONS_HEADER)?;
    let mut edges = Vec::new();
    while reader.read_record(&mut record).map_err(|e| csv_error(CF, e))? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let citing = lookup(&index, &record[0], Some(line))?;
        let cited = lookup(&index, &record[1], Some(line))?;
        let citing_year: Year = parse_field(CF, line, "citing_year", &record[2])?;
        let cited_year: Year = parse_field(CF, line, "cited_year", &record[3])?;
        let count: i64 = parse_field(CF, line, "count", &record[4])?;
        check_record(citing_year, cited_year, count, Some(line))?;
        edges.push(Edge {
            citing,
            cited,
            citing_year,
            cited_year,
            count: count as u64,
        });
    }
    let edges = merge_edges(edges, &journals)?;
    Ok(Corpus {
        journals,
        index,
        edges,
    })
}

pub fn read_corpus(journals: &Path, citations: &Path) -> Result<Corpus, CorpusError> {
    let j = std::fs::File::open(journals)?;
    let c = std::fs::File::open(citations)?;
    parse_corpus(std::io::BufReader::new(j), std::io::BufReader::new(c))
}

/// Writes the corpus in canonical order: journals by id then year, citations
/// by `(citing, cited, citing_year, cited_year)`.
pub fn write_corpus<J: Write, C: Write>(
    corpus: &Corpus,
    journals_sink: J,
    citations_sink: C,
) -> Result<(), CorpusError> {
    let into_io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => CorpusError::Io(e),
        other => CorpusError::Io(std::io::Error::other(format!("{other:?}"))),
    };

    let mut w = csv::Writer::from_writer(journals_sink);
    w.write_record(JOURNALS_HEADER).map_err(into_io)?;
    for j in &corpus.journals {
        if j.articles_by_year.is_empty() {
            w.write_record([j.id.as_str(), j.name.as_str(), "", ""])
                .map_err(into_io)?;
        }
        for (year, n) in &j.articles_by_year {
            w.write_record([j.id.as_str(), j.name.as_str(), &year.to_string(), &n.to_string()])
                .map_err(into_io)?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(citations_sink);
    w.write_record(CITATIONS_HEADER).map_err(into_io)?;
    for e in &corpus.edges {
        w.write_record([
            corpus.journals[e.citing as usize].id.as_str(),
            corpus.journals[e.cited as usize].id.as_str(),
            &e.citing_year.to_string(),
            &e.cited_year.to_string(),
            &e.count.to_string(),
        ])
        .map_err(into_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, journals: &Path, citations: &Path) -> Result<(), CorpusError> {
    let j = std::io::BufWriter::new(std::fs::File::create(journals)?);
    let c = std::io::BufWriter::new(std::fs::File::create(citations)?);
    write_corpus(corpus, j, c)
}
