//! Character n-gram subwords.
//!
//! A word is wrapped as `<word>` and every substring of `min_n..=max_n`
//! characters is an n-gram; the wrapped word itself is excluded.

use std::collections::HashMap;

pub const BOW: char = '<';
pub const EOW: char = '>';

/// Distinct n-grams of `word` in order of first occurrence.
pub fn ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let chars: Vec<char> = std::iter::once(BOW).chain(word.chars()).chain(std::iter::once(EOW)).collect();
    let mut out: Vec<String> = Vec::new();
    for start in 0..chars.len() {
        for n in min_n..=max_n {
            let end = start + n;
            if end > chars.len() || (start == 0 && end == chars.len()) {
                continue;
            }
            let g: String = chars[start..end].iter().collect();
            if !out.contains(&g) {
                out.push(g);
            }
        }
    }
    out
}

/// Vectors for character n-grams, used to compose words.
#[derive(Debug, Clone, PartialEq)]
pub struct SubwordTable {
    min_n: usize,
    max_n: usize,
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
}

impl SubwordTable {
    pub fn new(min_n: usize, max_n: usize, dim: usize) -> Self {
        assert!(min_n >= 1 && min_n <= max_n, "invalid n-gram range {min_n}..={max_n}");
        SubwordTable { min_n, max_n, dim, index: HashMap::new(), data: Vec::new() }
    }

    pub fn insert(&mut self, gram: &str, vector: &[f32]) {
        assert_eq!(vector.len(), self.dim);
        match self.index.get(gram) {
            Some(&i) => self.data[i * self.dim..(i + 1) * self.dim].copy_from_slice(vector),
            None => {
                self.index.insert(gram.to_string(), self.index.len());
                self.data.extend_from_slice(vector);
            }
        }
    }

    pub fn range(&self) -> (usize, usize) {
        (self.min_n, self.max_n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, gram: &str) -> Option<&[f32]> {
        self.index.get(gram).map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    fn sum_known(&self, word: &str, acc: &mut [f64]) -> usize {
        let mut count = 0;
        for g in ngrams(word, self.min_n, self.max_n) {
            if let Some(v) = self.get(&g) {
                for (a, &x) in acc.iter_mut().zip(v) {
                    *a += x as f64;
                }
                count += 1;
            }
        }
        count
    }

    /// `(word_vector + sum of known n-gram vectors) / (1 + known n-grams)`.
    pub fn compose(&self, word: &str, word_vector: &[f32]) -> Vec<f32> {
        let mut acc: Vec<f64> = word_vector.iter().map(|&x| x as f64).collect();
        let count = self.sum_known(word, &mut acc);
        let scale = 1.0 / (1 + count) as f64;
        acc.iter().map(|&a| (a * scale) as f32).collect()
    }

    /// Mean of the word's known n-gram vectors; `None` when none are known.
    pub fn compose_oov(&self, word: &str) -> Option<Vec<f32>> {
        let mut acc = vec![0.0f64; self.dim];
        let count = self.sum_known(word, &mut acc);
        if count == 0 {
            return None;
        }
        let scale = 1.0 / count as f64;
        Some(acc.iter().map(|&a| (a * scale) as f32).collect())
    }
}
