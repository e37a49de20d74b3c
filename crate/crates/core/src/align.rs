//! Hybrid embeddings: map the text space onto the KB space with an orthogonal
//! transform fitted on the shared vocabulary, then average unit-normalized
//! counterparts.
//!
//! Both spaces go through the same preprocessing before fitting: unit
//! length, mean centering over the whole vocabulary, unit length again.

use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::embedding::EmbeddingSpace;

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("dimension mismatch: text space is {text}-d, KB space is {kb}-d")]
    DimensionMismatch { text: usize, kb: usize },
    #[error("the two vocabularies do not intersect")]
    EmptyIntersection,
    #[error("seed word {0:?} is missing from one of the spaces")]
    UnknownSeed(String),
    #[error("seed cross-covariance has rank 0")]
    DegenerateCovariance,
    #[error("combination weights must be non-negative and not both zero")]
    InvalidWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    /// Orthogonal `dim × dim` matrix; text rows map as `x · W`.
    pub transform: DMatrix<f64>,
    pub seed_vocabulary: Vec<String>,
    /// Mean squared mapping error over the seeds, on preprocessed vectors.
    pub residual: f64,
}

impl AlignmentResult {
    pub fn dim(&self) -> usize {
        self.transform.nrows()
    }

    /// Applies the transform to a row vector.
    pub fn map_vector(&self, v: &[f32]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (i, &x) in v.iter().enumerate() {
            let x = x as f64;
            for (j, o) in out.iter_mut().enumerate() {
                *o += x * self.transform[(i, j)];
            }
        }
        out
    }

    /// `‖WᵀW − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.dim();
        (self.transform.transpose() * &self.transform - DMatrix::<f64>::identity(d, d)).norm()
    }

    /// Sidecar: `dim`, one `row` line per transform row, `residual`, `seeds`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "dim\t{}", self.dim())?;
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim()).map(|j| format!("{:e}", self.transform[(i, j)])).collect();
            writeln!(out, "row\t{}", row.join("\t"))?;
        }
        writeln!(out, "residual\t{:e}", self.residual)?;
        writeln!(out, "seeds\t{}", self.seed_vocabulary.len())?;
        out.flush()
    }
}

/// Sorted vocabulary intersection.
pub fn seed_dictionary(text: &EmbeddingSpace, kb: &EmbeddingSpace) -> Result<Vec<String>, AlignError> {
    if text.dim() != kb.dim() {
        return Err(AlignError::DimensionMismatch { text: text.dim(), kb: kb.dim() });
    }
    let mut seeds: Vec<String> = text.words().iter().filter(|w| kb.contains(w)).cloned().collect();
    if seeds.is_empty() {
        return Err(AlignError::EmptyIntersection);
    }
    seeds.sort_unstable();
    Ok(seeds)
}

/// A space after unit-normalize / center / unit-normalize, as f64 rows in
/// the space's word order.
pub struct Preprocessed {
    dim: usize,
    rows: Vec<f64>,
}

impl Preprocessed {
    pub fn new(space: &EmbeddingSpace) -> Self {
        let dim = space.dim();
        let mut rows: Vec<f64> = space.iter().flat_map(|(_, v)| v.iter().map(|&x| x as f64)).collect();
        rows.par_chunks_mut(dim).for_each(normalize_in_place);
        let n = space.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for row in rows.chunks(dim) {
            for (m, x) in mean.iter_mut().zip(row) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        rows.par_chunks_mut(dim).for_each(|row| {
            for (x, m) in row.iter_mut().zip(&mean) {
                *x -= m;
            }
            normalize_in_place(row);
        });
        Preprocessed { dim, rows }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }
}

fn normalize_in_place(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn word_index(space: &EmbeddingSpace) -> std::collections::HashMap<&str, usize> {
    space.words().iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect()
}

/// Orthogonal Procrustes: `W = U Vᵀ` from the SVD `XᵀY = U Σ Vᵀ` of the seed
/// cross-covariance, which minimizes `Σ ‖x W − y‖²` over orthogonal `W`.
pub fn fit_orthogonal_map(
    text: &EmbeddingSpace,
    kb: &EmbeddingSpace,
    seeds: &[String],
) -> Result<AlignmentResult, AlignError> {
    if text.dim() != kb.dim() {
        return Err(AlignError::DimensionMismatch { text: text.dim(), kb: kb.dim() });
    }
    if seeds.is_empty() {
        return Err(AlignError::EmptyIntersection);
    }
    let dim = text.dim();
    if seeds.len() < dim {
        log::warn!("only {} seed words for a {dim}-d mapping; the transform is underdetermined", seeds.len());
    }
    let (tp, kp) = (Preprocessed::new(text), Preprocessed::new(kb));
    let (ti, ki) = (word_index(text), word_index(kb));
    let mut pairs = Vec::with_capacity(seeds.len());
    for w in seeds {
        match (ti.get(w.as_str()), ki.get(w.as_str())) {
            (Some(&a), Some(&b)) => pairs.push((a, b)),
            _ => return Err(AlignError::UnknownSeed(w.clone())),
        }
    }

    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for &(a, b) in &pairs {
        let (x, y) = (tp.row(a), kp.row(b));
        for i in 0..dim {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                cov[(i, j)] += x[i] * y[j];
            }
        }
    }
    if cov.norm() < 1e-12 {
        return Err(AlignError::DegenerateCovariance);
    }
    let svd = cov.svd(true, true);
    let transform = svd.u.expect("svd computed with u") * svd.v_t.expect("svd computed with v_t");

    let residual = pairs
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (tp.row(a), kp.row(b));
            (0..dim)
                .map(|j| {
                    let mapped: f64 = (0..dim).map(|i| x[i] * transform[(i, j)]).sum();
                    (mapped - y[j]).powi(2)
                })
                .sum::<f64>()
        })
        .sum::<f64>()
        / pairs.len() as f64;

    Ok(AlignmentResult { transform, seed_vocabulary: seeds.to_vec(), residual })
}

/// Relative weights of the text and KB sides in the hybrid average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridWeights {
    pub text: f64,
    pub kb: f64,
}

impl Default for HybridWeights {
    fn default() -> Self {
        HybridWeights { text: 0.5, kb: 0.5 }
    }
}

/// Union vocabulary (text order, then KB-only words in KB order) of unit
/// vectors: `normalize(w_t·t' + w_k·k')` when both sides exist, otherwise the
/// one available side. When the weighted sum cancels exactly, the KB side is
/// kept.
pub fn build_hybrid(
    text: &EmbeddingSpace,
    kb: &EmbeddingSpace,
    alignment: &AlignmentResult,
    weights: HybridWeights,
) -> Result<EmbeddingSpace, AlignError> {
    if text.dim() != kb.dim() || alignment.dim() != text.dim() {
        return Err(AlignError::DimensionMismatch { text: text.dim(), kb: kb.dim() });
    }
    if !(weights.text >= 0.0 && weights.kb >= 0.0 && weights.text + weights.kb > 0.0) {
        return Err(AlignError::InvalidWeights);
    }
    let dim = text.dim();
    let (tp, kp) = (Preprocessed::new(text), Preprocessed::new(kb));
    let (ti, ki) = (word_index(text), word_index(kb));
    let w = &alignment.transform;

    let mut words: Vec<&str> = text.words().iter().map(String::as_str).collect();
    words.extend(kb.words().iter().map(String::as_str).filter(|w| !ti.contains_key(w)));

    let vectors: Vec<Vec<f32>> = words
        .par_iter()
        .map(|word| {
            let t = ti.get(word).map(|&i| {
                let x = tp.row(i);
                let mut mapped: Vec<f64> = (0..dim).map(|j| (0..dim).map(|k| x[k] * w[(k, j)]).sum()).collect();
                normalize_in_place(&mut mapped);
                mapped
            });
            let k = ki.get(word).map(|&i| kp.row(i).to_vec());
            let combined = match (t, k) {
                (Some(t), Some(k)) => {
                    let mut h: Vec<f64> = t.iter().zip(&k).map(|(a, b)| weights.text * a + weights.kb * b).collect();
                    if h.iter().all(|x| x.abs() < 1e-12) {
                        k
                    } else {
                        normalize_in_place(&mut h);
                        h
                    }
                }
                (Some(t), None) => t,
                (None, Some(k)) => k,
                (None, None) => unreachable!("word comes from one of the vocabularies"),
            };
            combined.into_iter().map(|x| x as f32).collect()
        })
        .collect();

    let mut space = EmbeddingSpace::with_capacity(dim, words.len());
    for (word, v) in words.iter().zip(&vectors) {
        space.insert(word, v).expect("union vocabulary has unique words");
    }
    Ok(space)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(dim: usize, rows: &[(&str, Vec<f32>)]) -> EmbeddingSpace {
        let mut s = EmbeddingSpace::new(dim);
        for (w, v) in rows {
            s.insert(w, v).unwrap();
        }
        s
    }

    #[test]
    fn seed_dictionary_intersects() {
        let a = space(1, &[("c", vec![1.0]), ("a", vec![1.0]), ("b", vec![1.0])]);
        let b = space(1, &[("b", vec![1.0]), ("d", vec![1.0]), ("c", vec![1.0])]);
        assert_eq!(seed_dictionary(&a, &b).unwrap(), vec!["b", "c"]);
        let d = space(1, &[("z", vec![1.0])]);
        assert!(matches!(seed_dictionary(&a, &d), Err(AlignError::EmptyIntersection)));
        let e = space(2, &[("a", vec![1.0, 0.0])]);
        assert!(matches!(seed_dictionary(&a, &e), Err(AlignError::DimensionMismatch { .. })));
    }

    #[test]
    fn one_dimensional_sign_flip() {
        let text = space(1, &[("a", vec![1.0]), ("b", vec![-2.0]), ("c", vec![3.0])]);
        let kb = space(1, &[("a", vec![-1.0]), ("b", vec![2.0]), ("c", vec![-3.0])]);
        let seeds = seed_dictionary(&text, &kb).unwrap();
        let fit = fit_orthogonal_map(&text, &kb, &seeds).unwrap();
        assert!((fit.transform[(0, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_covariance() {
        // every vector identical: centering leaves all zeros
        let text = space(2, &[("a", vec![1.0, 1.0]), ("b", vec![1.0, 1.0])]);
        let kb = space(2, &[("a", vec![0.0, 2.0]), ("b", vec![0.0, 2.0])]);
        let err = fit_orthogonal_map(&text, &kb, &seed_dictionary(&text, &kb).unwrap()).unwrap_err();
        assert!(matches!(err, AlignError::DegenerateCovariance));
    }

    fn identity(dim: usize, seeds: &[&str]) -> AlignmentResult {
        AlignmentResult {
            transform: DMatrix::identity(dim, dim),
            seed_vocabulary: seeds.iter().map(|s| s.to_string()).collect(),
            residual: 0.0,
        }
    }

    #[test]
    fn hybrid_single_side_and_equal_sides() {
        // preprocessing centers on the mean, so build spaces whose mean is zero
        let text = space(2, &[("a", vec![1.0, 0.0]), ("b", vec![-1.0, 0.0])]);
        let kb = space(
            2,
            &[("a", vec![1.0, 0.0]), ("b", vec![-1.0, 0.0]), ("k", vec![0.0, 3.0]), ("m", vec![0.0, -3.0])],
        );
        let h = build_hybrid(&text, &kb, &identity(2, &["a", "b"]), HybridWeights::default()).unwrap();
        assert_eq!(h.words(), &["a", "b", "k", "m"]);
        assert_eq!(h.vector("a").unwrap(), &[1.0, 0.0]);
        assert_eq!(h.vector("b").unwrap(), &[-1.0, 0.0]);
        assert_eq!(h.vector("k").unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn opposing_kb_vectors_give_orthogonal_hybrids() {
        // t'_a = t'_b = e1, k'_a = e2, k'_b = -e2
        // hybrids (e1 + e2)/√2 and (e1 − e2)/√2 have cosine 0.
        let text = space(2, &[("a", vec![1.0, 0.0]), ("b", vec![1.0, 0.0]), ("z", vec![-1.0, 0.0])]);
        let kb = space(2, &[("a", vec![0.0, 1.0]), ("b", vec![0.0, -1.0])]);
        // text mean is (1/3, 0); centering keeps a and b on +e1 after renormalization
        let fit = identity(2, &["a", "b"]);
        let h = build_hybrid(&text, &kb, &fit, HybridWeights::default()).unwrap();
        assert!(h.cosine("a", "b").unwrap().abs() < 1e-6);
    }

    #[test]
    fn sidecar_format() {
        let fit = identity(2, &["a"]);
        let mut out = Vec::new();
        fit.write_tsv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "dim\t2\nrow\t1e0\t0e0\nrow\t0e0\t1e0\nresidual\t0e0\nseeds\t1\n"
        );
    }
}
