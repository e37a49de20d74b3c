use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sgns::score_coefficient;
use super::subword::{ngrams, SubwordTable};
use super::{EmbeddingError, EmbeddingSpace};

/// Trainer settings. Defaults follow the common fastText setup for 300-d
/// vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: u64,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub subsample: f64,
    /// Character n-gram length range, `None` for plain skip-gram.
    pub ngrams: Option<(usize, usize)>,
    /// Initial learning rate, decayed linearly to zero.
    pub learning_rate: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 300,
            window: 5,
            negatives: 10,
            epochs: 5,
            min_count: 5,
            subsample: 1e-4,
            ngrams: Some((3, 6)),
            learning_rate: 0.05,
            seed: 0,
            workers: 1,
        }
    }
}

impl TrainConfig {
    /// Pseudo-corpus lemmas are rare but all meaningful, so keep everything.
    pub fn for_pseudo_corpus() -> Self {
        TrainConfig { min_count: 1, ..TrainConfig::default() }
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: String| Err(EmbeddingError::InvalidConfig(m));
        if self.dim == 0 || self.window == 0 || self.epochs == 0 || self.min_count == 0 {
            return bad("dim, window, epochs and min_count must be positive".into());
        }
        if self.workers == 0 {
            return bad("workers must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.subsample >= 0.0 && self.subsample.is_finite()) {
            return bad(format!("subsample must be non-negative, got {}", self.subsample));
        }
        if let Some((lo, hi)) = self.ngrams {
            if lo == 0 || lo > hi {
                return bad(format!("invalid n-gram range {lo}..={hi}"));
            }
        }
        Ok(())
    }
}

/// Trains on a file of whitespace-separated tokens, one context per line.
pub fn train_file(path: &Path, cfg: &TrainConfig) -> Result<EmbeddingSpace, EmbeddingError> {
    let text = std::fs::read_to_string(path)?;
    train(text.lines(), cfg)
}

pub fn train<I, S>(lines: I, cfg: &TrainConfig) -> Result<EmbeddingSpace, EmbeddingError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    cfg.validate()?;
    let lines: Vec<S> = lines.into_iter().collect();

    let mut counts: HashMap<&str, u64> = HashMap::new();
    for line in &lines {
        for t in line.as_ref().split_whitespace() {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let mut vocab: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= cfg.min_count).collect();
    if vocab.is_empty() {
        return Err(EmbeddingError::VocabularyEmpty(cfg.min_count as usize));
    }
    vocab.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let word_id: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, (w, _))| (*w, i as u32)).collect();

    let mut tokens: Vec<u32> = Vec::new();
    let mut line_ends: Vec<usize> = Vec::new();
    for line in &lines {
        let before = tokens.len();
        tokens.extend(line.as_ref().split_whitespace().filter_map(|t| word_id.get(t).copied()));
        if tokens.len() > before {
            line_ends.push(tokens.len());
        }
    }
    let n_words = vocab.len();

    // Input rows: words first, then n-grams.
    let mut gram_id: HashMap<String, u32> = HashMap::new();
    let mut grams: Vec<String> = Vec::new();
    let word_inputs: Vec<Vec<u32>> = vocab
        .iter()
        .enumerate()
        .map(|(w, (word, _))| {
            let mut rows = vec![w as u32];
            if let Some((lo, hi)) = cfg.ngrams {
                for g in ngrams(word, lo, hi) {
                    let id = *gram_id.entry(g.clone()).or_insert_with(|| {
                        grams.push(g);
                        (n_words + grams.len() - 1) as u32
                    });
                    rows.push(id);
                }
            }
            rows
        })
        .collect();

    let dim = cfg.dim;
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_rng.set_stream(0);
    let bound = 1.0 / dim as f32;
    let input = SharedMatrix::from_fn(n_words + grams.len(), dim, || init_rng.random_range(-bound..bound));
    let output = SharedMatrix::from_fn(n_words, dim, || 0.0);

    let total_in_vocab: u64 = vocab.iter().map(|(_, c)| c).sum();
    let keep: Vec<f64> = vocab
        .iter()
        .map(|&(_, c)| {
            if cfg.subsample <= 0.0 {
                return 1.0;
            }
            let ratio = cfg.subsample / (c as f64 / total_in_vocab as f64);
            (ratio.sqrt() + ratio).min(1.0)
        })
        .collect();
    let sampler = NegativeSampler::new(vocab.iter().map(|&(_, c)| c));

    let state = Shared {
        cfg,
        tokens: &tokens,
        word_inputs: &word_inputs,
        keep: &keep,
        sampler: &sampler,
        input: &input,
        output: &output,
        processed: AtomicU64::new(0),
        total_work: (tokens.len() * cfg.epochs) as u64,
    };

    let shards = shard_lines(&line_ends, cfg.workers);
    if shards.len() == 1 {
        state.run_worker(0, &shards[0]);
    } else {
        std::thread::scope(|scope| {
            for (w, shard) in shards.iter().enumerate() {
                let state = &state;
                scope.spawn(move || state.run_worker(w, shard));
            }
        });
    }

    let mut space = EmbeddingSpace::with_capacity(dim, n_words);
    let mut row = vec![0.0f32; dim];
    let mut acc = vec![0.0f64; dim];
    for (w, (word, _)) in vocab.iter().enumerate() {
        acc.fill(0.0);
        for &r in &word_inputs[w] {
            input.load(r as usize, &mut row);
            for (a, &x) in acc.iter_mut().zip(&row) {
                *a += x as f64;
            }
        }
        let scale = 1.0 / word_inputs[w].len() as f64;
        let composed: Vec<f32> = acc.iter().map(|&a| (a * scale) as f32).collect();
        space.insert(word, &composed)?;
    }
    if let Some((lo, hi)) = cfg.ngrams {
        let mut table = SubwordTable::new(lo, hi, dim);
        for (i, g) in grams.iter().enumerate() {
            input.load(n_words + i, &mut row);
            table.insert(g, &row);
        }
        space.set_subwords(Some(table));
    }
    Ok(space)
}

/// Splits lines (given by their end offsets) into at most `workers`
/// contiguous token ranges of similar size.
fn shard_lines(line_ends: &[usize], workers: usize) -> Vec<Vec<(usize, usize)>> {
    let total = line_ends.last().copied().unwrap_or(0);
    let workers = workers.clamp(1, line_ends.len().max(1));
    let mut shards: Vec<Vec<(usize, usize)>> = vec![Vec::new(); workers];
    let mut start = 0;
    for &end in line_ends {
        let shard = (start * workers / total.max(1)).min(workers - 1);
        shards[shard].push((start, end));
        start = end;
    }
    shards.retain(|s| !s.is_empty());
    if shards.is_empty() {
        shards.push(Vec::new());
    }
    shards
}

/// Row-major f32 matrix shared between training threads. Updates are
/// unsynchronized relaxed load/store pairs, so concurrent writers may lose
/// updates but never tear a value.
struct SharedMatrix {
    cols: usize,
    data: Vec<AtomicU32>,
}

impl SharedMatrix {
    fn from_fn(rows: usize, cols: usize, mut f: impl FnMut() -> f32) -> Self {
        let data = (0..rows * cols).map(|_| AtomicU32::new(f().to_bits())).collect();
        SharedMatrix { cols, data }
    }

    #[inline]
    fn load(&self, row: usize, out: &mut [f32]) {
        let cells = &self.data[row * self.cols..(row + 1) * self.cols];
        for (o, c) in out.iter_mut().zip(cells) {
            *o = f32::from_bits(c.load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn store(&self, row: usize, values: &[f32]) {
        let cells = &self.data[row * self.cols..(row + 1) * self.cols];
        for (c, v) in cells.iter().zip(values) {
            c.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    #[inline]
    fn add(&self, row: usize, delta: &[f32]) {
        let cells = &self.data[row * self.cols..(row + 1) * self.cols];
        for (c, d) in cells.iter().zip(delta) {
            let v = f32::from_bits(c.load(Ordering::Relaxed)) + d;
            c.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

/// Draws word ids with probability proportional to count^0.75.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(counts: impl Iterator<Item = u64>) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .map(|c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> u32 {
        let total = *self.cumulative.last().unwrap();
        let x = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1) as u32
    }
}

struct Shared<'a> {
    cfg: &'a TrainConfig,
    tokens: &'a [u32],
    word_inputs: &'a [Vec<u32>],
    keep: &'a [f64],
    sampler: &'a NegativeSampler,
    input: &'a SharedMatrix,
    output: &'a SharedMatrix,
    processed: AtomicU64,
    total_work: u64,
}

const LR_UPDATE_TOKENS: u64 = 10_000;

struct Scratch {
    hidden: Vec<f32>,
    grad: Vec<f32>,
    out_row: Vec<f32>,
    in_row: Vec<f32>,
    acc: Vec<f64>,
}

impl Shared<'_> {
    fn run_worker(&self, worker: usize, lines: &[(usize, usize)]) {
        let cfg = self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(worker as u64 + 1);
        let dim = cfg.dim;
        let mut scratch = Scratch {
            hidden: vec![0.0; dim],
            grad: vec![0.0; dim],
            out_row: vec![0.0; dim],
            in_row: vec![0.0; dim],
            acc: vec![0.0; dim],
        };
        let mut kept: Vec<u32> = Vec::new();
        let mut local = 0u64;
        let mut lr = cfg.learning_rate;
        for _ in 0..cfg.epochs {
            for &(start, end) in lines {
                kept.clear();
                for &w in &self.tokens[start..end] {
                    if self.keep[w as usize] >= 1.0 || rng.random::<f64>() < self.keep[w as usize] {
                        kept.push(w);
                    }
                }
                for i in 0..kept.len() {
                    let span = rng.random_range(1..=cfg.window);
                    let lo = i.saturating_sub(span);
                    let hi = (i + span).min(kept.len() - 1);
                    let inputs = &self.word_inputs[kept[i] as usize];
                    for (j, &context) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                        if j != i {
                            self.update(inputs, context, lr as f32, &mut rng, &mut scratch);
                        }
                    }
                }
                local += (end - start) as u64;
                if local >= LR_UPDATE_TOKENS {
                    let done = self.processed.fetch_add(local, Ordering::Relaxed) + local;
                    local = 0;
                    let progress = (done as f64 / self.total_work as f64).min(1.0);
                    lr = cfg.learning_rate * (1.0 - progress).max(1e-4);
                }
            }
        }
    }

    fn update(&self, inputs: &[u32], target: u32, lr: f32, rng: &mut ChaCha8Rng, s: &mut Scratch) {
        s.acc.fill(0.0);
        for &r in inputs {
            self.input.load(r as usize, &mut s.in_row);
            for (a, &x) in s.acc.iter_mut().zip(&s.in_row) {
                *a += x as f64;
            }
        }
        let scale = 1.0 / inputs.len() as f64;
        for (h, &a) in s.hidden.iter_mut().zip(&s.acc) {
            *h = (a * scale) as f32;
        }
        s.grad.fill(0.0);

        self.step_output(target, 1.0, lr, s);
        if self.sampler.cumulative.len() > 1 {
            for _ in 0..self.cfg.negatives {
                let mut neg = self.sampler.sample(rng);
                let mut tries = 0;
                while neg == target && tries < 8 {
                    neg = self.sampler.sample(rng);
                    tries += 1;
                }
                if neg != target {
                    self.step_output(neg, 0.0, lr, s);
                }
            }
        }
        // fastText convention: every input row receives the full hidden
        // gradient rather than its 1/k share.
        for &r in inputs {
            self.input.add(r as usize, &s.grad);
        }
    }

    #[inline]
    fn step_output(&self, row: u32, label: f64, lr: f32, s: &mut Scratch) {
        self.output.load(row as usize, &mut s.out_row);
        let score: f64 = s.out_row.iter().zip(&s.hidden).map(|(&u, &h)| u as f64 * h as f64).sum();
        let g = lr * score_coefficient(score, label) as f32;
        for ((gr, u), &h) in s.grad.iter_mut().zip(s.out_row.iter_mut()).zip(&s.hidden) {
            *gr += g * *u;
            *u += g * h;
        }
        self.output.store(row as usize, &s.out_row);
    }
}
