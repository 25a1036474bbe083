#![allow(dead_code)]

use std::path::PathBuf;

use citerank::{CitationRecord, Corpus, Journal, MetricName, MetricVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random valid corpus: `n` journals over 2000..=2006, sparse citations,
/// some journals citing nothing and some without articles in early years.
pub fn random_corpus(seed: u64, n: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let journals: Vec<Journal> = (0..n)
        .map(|i| {
            let mut j = Journal::new(format!("J{i:03}"), format!("Journal \"{i}\", vol. {}", i % 3));
            for y in 2000..=2006 {
                if rng.random_bool(0.8) {
                    j = j.with_articles(y, rng.random_range(1..=50));
                }
            }
            j
        })
        .collect();
    let mut records = Vec::new();
    for citing in 0..n {
        if rng.random_bool(0.15) {
            continue;
        }
        for _ in 0..rng.random_range(0..12) {
            let cited = rng.random_range(0..n);
            let citing_year = rng.random_range(2001..=2006);
            let cited_year = citing_year - rng.random_range(0..=(citing_year - 2000));
            records.push(CitationRecord::new(
                format!("J{citing:03}"),
                format!("J{cited:03}"),
                citing_year,
                cited_year,
                rng.random_range(1..=20),
            ));
        }
    }
    Corpus::new(journals, records).expect("generated corpus is valid")
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn table1(name: &str) -> MetricVector {
    MetricVector::load(&data_dir().join("table1").join(name)).expect("bundled table")
}

/// Published rank columns: (id, eigen rank, citation rank, impact factor rank).
pub fn published_ranks() -> Vec<(String, u32, u32, u32)> {
    let text = std::fs::read_to_string(data_dir().join("table1/published_ranks.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect()
}

pub fn vector(name: &str, pairs: &[(String, f64)]) -> MetricVector {
    MetricVector::from_pairs(MetricName::Custom(name.into()), pairs.iter().cloned()).unwrap()
}

/// Ranks by counting: 1 + #greater + (#equal - 1) / 2. Quadratic, no sorting.
pub fn brute_average_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let greater = v.iter().filter(|&&y| y > x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            1.0 + greater + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn brute_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va.sqrt() * vb.sqrt())
}

/// Spearman via the rank-difference shortcut; valid only without ties.
pub fn shortcut_spearman(a: &[f64], b: &[f64]) -> f64 {
    let ra = brute_average_ranks(a);
    let rb = brute_average_ranks(b);
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}
