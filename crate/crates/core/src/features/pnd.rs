//! Orthographic neighbourhood density: the number of lexicon words within
//! Levenshtein distance 1.
//!
//! Every word is indexed under itself and each of its single-character
//! deletions. Two words at distance ≤ 1 always share a key (a substitution
//! shares the deletion at that position, an insertion maps the longer word
//! onto the shorter), so candidates are the words sharing any key and each is
//! confirmed with a linear scan.

use std::collections::HashMap;

use rayon::prelude::*;

/// Full dynamic-programming edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `levenshtein(a, b) <= 1` in one pass.
pub fn within_one(a: &[char], b: &[char]) -> bool {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    match long.len() - short.len() {
        0 => short.iter().zip(long).filter(|(x, y)| x != y).take(2).count() <= 1,
        1 => {
            let prefix = short.iter().zip(long).take_while(|(x, y)| x == y).count();
            short[prefix..] == long[prefix + 1..]
        }
        _ => false,
    }
}

fn keys(word: &[char]) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(word.len() + 1);
    out.push(word.iter().collect());
    for skip in 0..word.len() {
        let k: String = word.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, c)| c).collect();
        out.push(k);
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Clone)]
pub struct PndIndex {
    words: Vec<String>,
    chars: Vec<Vec<char>>,
    lookup: HashMap<String, u32>,
    buckets: HashMap<String, Vec<u32>>,
}

impl PndIndex {
    /// Builds the index over a lexicon; duplicates are dropped and words are
    /// kept in sorted order.
    pub fn build<S: AsRef<str>>(lexicon: &[S]) -> PndIndex {
        let mut words: Vec<String> = lexicon.iter().map(|w| w.as_ref().to_string()).collect();
        words.sort_unstable();
        words.dedup();
        let chars: Vec<Vec<char>> = words.iter().map(|w| w.chars().collect()).collect();
        let lookup = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        let mut buckets: HashMap<String, Vec<u32>> = HashMap::new();
        for (i, c) in chars.iter().enumerate() {
            for k in keys(c) {
                buckets.entry(k).or_default().push(i as u32);
            }
        }
        PndIndex { words, chars, lookup, buckets }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lookup.contains_key(word)
    }

    fn neighbor_ids(&self, i: u32) -> Vec<u32> {
        let me = &self.chars[i as usize];
        let mut found: Vec<u32> = keys(me)
            .iter()
            .filter_map(|k| self.buckets.get(k))
            .flatten()
            .copied()
            .filter(|&j| j != i)
            .collect();
        found.sort_unstable();
        found.dedup();
        found.retain(|&j| within_one(me, &self.chars[j as usize]));
        found
    }

    /// Sorted neighbours of a lexicon word; `None` if the word is not indexed.
    pub fn neighbors(&self, word: &str) -> Option<Vec<&str>> {
        let &i = self.lookup.get(word)?;
        Some(self.neighbor_ids(i).into_iter().map(|j| self.words[j as usize].as_str()).collect())
    }

    pub fn count(&self, word: &str) -> Option<usize> {
        self.lookup.get(word).map(|&i| self.neighbor_ids(i).len())
    }

    /// Neighbour counts for every indexed word, aligned with [`Self::words`].
    pub fn all_counts(&self) -> Vec<usize> {
        (0..self.words.len() as u32).into_par_iter().map(|i| self.neighbor_ids(i).len()).collect()
    }
}
