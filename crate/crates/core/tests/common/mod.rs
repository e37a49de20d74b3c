//! Reference implementations used as oracles by the integration tests.
//! They are written from the definitions, independently of the library.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

/// Textbook Wagner–Fischer table.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

/// O(n²) neighbour counts for a deduplicated lexicon.
pub fn brute_force_pnd(words: &[String]) -> Vec<usize> {
    let lens: Vec<usize> = words.iter().map(|w| w.chars().count()).collect();
    let mut counts = vec![0; words.len()];
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            if lens[i].abs_diff(lens[j]) > 1 {
                continue;
            }
            if edit_distance(&words[i], &words[j]) <= 1 {
                counts[i] += 1;
                counts[j] += 1;
            }
        }
    }
    counts
}

/// Random deduplicated lexicon of `n` words, lengths 3..=10, over a small
/// alphabet so that near neighbours are common.
pub fn random_lexicon(rng: &mut ChaCha8Rng, n: usize, alphabet: &[char]) -> Vec<String> {
    let mut set = std::collections::BTreeSet::new();
    while set.len() < n {
        let len = rng.random_range(3..=10);
        let w: String = (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
        set.insert(w);
    }
    set.into_iter().collect()
}

/// Rank of each value: 1 + number of smaller values + half the number of
/// other equal values.
pub fn ranks_by_counting(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson_two_pass(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    pearson_two_pass(&ranks_by_counting(x), &ranks_by_counting(y))
}

/// Exhaustive two-group split of an ascending slice: every boundary between
/// distinct values, direct sum of squares, first minimum. Returns the index
/// of the first high element.
pub fn exhaustive_split(sorted: &[f64]) -> Option<usize> {
    let sse = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>()
    };
    let mut best: Option<(usize, f64)> = None;
    for k in 1..sorted.len() {
        if sorted[k - 1] == sorted[k] {
            continue;
        }
        let s = sse(&sorted[..k]) + sse(&sorted[k..]);
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((k, s));
        }
    }
    best.map(|(k, _)| k)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
