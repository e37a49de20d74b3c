//! Feature normalization and clustering, the feature-matched noun-pair
//! matrix, and the similarity distribution report.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::embedding::{cosine, EmbeddingSpace};
use crate::features::{FeatureDictionary, FeatureEntry, FeatureKind};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("need at least {needed} values, found {found}")]
    TooFewValues { needed: usize, found: usize },
    #[error("every value is zero")]
    AllZero,
    #[error("clustering needs at least two distinct values")]
    DegenerateInput,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("expected the {expected} dictionary, got {found}")]
    WrongKind { expected: FeatureKind, found: FeatureKind },
    #[error("dataset line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Values = BTreeMap<String, f64>;

/// Sample quantile by linear interpolation between order statistics
/// (`h = (n-1)p`). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Keeps the values inside `[Q1 - k·IQR, Q3 + k·IQR]`.
pub fn iqr_filter(values: &Values, k: f64) -> Result<Values, DatasetError> {
    if values.len() < 4 {
        return Err(DatasetError::TooFewValues { needed: 4, found: values.len() });
    }
    let mut sorted: Vec<f64> = values.values().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let (q1, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
    let (lo, hi) = (q1 - k * (q3 - q1), q3 + k * (q3 - q1));
    Ok(values.iter().filter(|(_, &v)| lo <= v && v <= hi).map(|(n, &v)| (n.clone(), v)).collect())
}

pub fn l2_normalize(values: &Values) -> Result<Values, DatasetError> {
    let norm = values.values().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(DatasetError::AllZero);
    }
    Ok(values.iter().map(|(n, &v)| (n.clone(), v / norm)).collect())
}

/// Exact two-means in one dimension. Labels 0 (low) and 1 (high); the split
/// minimizes the within-cluster sum of squares over every boundary between
/// distinct sorted values, the earliest boundary winning ties.
pub fn two_cluster(values: &Values) -> Result<BTreeMap<String, i8>, DatasetError> {
    let mut sorted: Vec<(&str, f64)> = values.iter().map(|(n, &v)| (n.as_str(), v)).collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(b.0)));
    let k = best_split(&sorted.iter().map(|p| p.1).collect::<Vec<_>>()).ok_or(DatasetError::DegenerateInput)?;
    Ok(sorted.iter().enumerate().map(|(i, (n, _))| (n.to_string(), i8::from(i >= k))).collect())
}

/// Index of the first element of the high cluster in an ascending slice.
fn best_split(sorted: &[f64]) -> Option<usize> {
    let n = sorted.len();
    if n < 2 {
        return None;
    }
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = sorted.iter().map(|v| v - mean).collect();
    let total: f64 = c.iter().sum();
    let mut left = 0.0;
    let mut best: Option<(usize, f64)> = None;
    for k in 1..n {
        left += c[k - 1];
        if sorted[k - 1] >= sorted[k] {
            continue;
        }
        let right = total - left;
        // SSE = Σc² - left²/k - right²/(n-k); maximize the subtracted part
        let gain = left * left / k as f64 + right * right / (n - k) as f64;
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((k, gain));
        }
    }
    best.map(|(k, _)| k)
}

/// Zero values form the -1 subgroup; the nonzero ones are L2-normalized and
/// split with [`two_cluster`]. Returns `(normalized, label)` per noun, zero
/// nouns normalizing to 0.
pub fn pnd_cluster(values: &Values) -> Result<BTreeMap<String, (f64, i8)>, DatasetError> {
    let nonzero: Values = values.iter().filter(|(_, &v)| v != 0.0).map(|(n, &v)| (n.clone(), v)).collect();
    let mut out: BTreeMap<String, (f64, i8)> =
        values.iter().filter(|(_, &v)| v == 0.0).map(|(n, _)| (n.clone(), (0.0, -1))).collect();
    if nonzero.is_empty() {
        return Ok(out);
    }
    let normalized = l2_normalize(&nonzero)?;
    let labels = two_cluster(&normalized)?;
    for (n, v) in normalized {
        let label = labels[&n];
        out.insert(n, (v, label));
    }
    Ok(out)
}

/// Raw values → IQR filter → L2 normalization → two clusters. For PND the
/// zero subgroup bypasses the IQR filter.
pub fn cluster_dictionary(dict: &FeatureDictionary, k: f64) -> Result<FeatureDictionary, DatasetError> {
    let raw = dict.raw_values();
    let mut out = FeatureDictionary::new(dict.kind);
    let entry = |raw: f64, norm: f64, c: i8| FeatureEntry { raw, normalized: Some(norm), cluster: Some(c) };
    if dict.kind == FeatureKind::Pnd {
        let (zero, nonzero): (Values, Values) = raw.into_iter().partition(|(_, v)| *v == 0.0);
        let mut kept = if nonzero.is_empty() { nonzero } else { iqr_filter(&nonzero, k)? };
        kept.extend(zero);
        for (n, (norm, c)) in pnd_cluster(&kept)? {
            out.entries.insert(n.clone(), entry(kept[&n], norm, c));
        }
    } else {
        let kept = iqr_filter(&raw, k)?;
        let normalized = l2_normalize(&kept)?;
        let labels = two_cluster(&normalized)?;
        for (n, norm) in normalized {
            out.entries.insert(n.clone(), entry(kept[&n], norm, labels[&n]));
        }
    }
    Ok(out)
}

/// Cluster labels in CNC, FRQ, SND, PND order.
pub type Signature = [i8; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct NounPairRecord {
    pub noun_a: String,
    pub noun_b: String,
    /// CNC, FRQ, SND, PND normalized values for noun_a.
    pub features_a: [f64; 4],
    pub features_b: [f64; 4],
    pub clusters: Signature,
    /// Text, KB, hybrid cosines.
    pub sims: [f64; 3],
}

pub const DATASET_HEADER: &str = "#noun_a\tnoun_b\tcnc_a\tcnc_b\tfrq_a\tfrq_b\tsnd_a\tsnd_b\tpnd_a\tpnd_b\tcluster_cnc\tcluster_frq\tcluster_snd\tcluster_pnd\tsim_txt\tsim_kb\tsim_hyb";

impl fmt::Display for NounPairRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.noun_a, self.noun_b)?;
        for i in 0..4 {
            write!(f, "\t{:.6}\t{:.6}", self.features_a[i], self.features_b[i])?;
        }
        for c in self.clusters {
            write!(f, "\t{c}")?;
        }
        for s in self.sims {
            write!(f, "\t{:.6}", s)?;
        }
        Ok(())
    }
}

impl NounPairRecord {
    pub fn parse(line: &str, lineno: usize) -> Result<NounPairRecord, DatasetError> {
        let bad = |reason: String| DatasetError::Malformed { line: lineno, reason };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 17 {
            return Err(bad(format!("expected 17 columns, found {}", f.len())));
        }
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
        let mut rec = NounPairRecord {
            noun_a: f[0].to_string(),
            noun_b: f[1].to_string(),
            features_a: [0.0; 4],
            features_b: [0.0; 4],
            clusters: [0; 4],
            sims: [0.0; 3],
        };
        for i in 0..4 {
            rec.features_a[i] = real(f[2 + 2 * i])?;
            rec.features_b[i] = real(f[3 + 2 * i])?;
            rec.clusters[i] = f[10 + i].parse().map_err(|_| bad(format!("bad cluster {:?}", f[10 + i])))?;
        }
        for i in 0..3 {
            rec.sims[i] = real(f[14 + i])?;
        }
        Ok(rec)
    }
}

pub fn read_dataset<R: Read>(input: R) -> Result<Vec<NounPairRecord>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(NounPairRecord::parse(&line, i + 1)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCaps {
    pub max_pairs_per_signature: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairStats {
    pub eligible_nouns: usize,
    pub groups: usize,
    pub pairs: u64,
}

struct Noun<'a> {
    word: &'a str,
    features: [f64; 4],
    vectors: [&'a [f32]; 3],
}

/// Eligible nouns grouped by cluster signature, ready to stream pairs.
pub struct PairPlan<'a> {
    groups: Vec<(Signature, Vec<Noun<'a>>)>,
    caps: Option<PairCaps>,
}

/// Target number of pairs formatted per parallel work unit.
const PAIRS_PER_UNIT: u64 = 1 << 15;

impl<'a> PairPlan<'a> {
    /// `dicts` in CNC, FRQ, SND, PND order, each clustered; `spaces` text,
    /// KB, hybrid. A noun is eligible when it has a cluster in all four
    /// dictionaries and a vector in all three spaces.
    pub fn new(
        dicts: [&'a FeatureDictionary; 4],
        spaces: [&'a EmbeddingSpace; 3],
        caps: Option<PairCaps>,
    ) -> Result<PairPlan<'a>, DatasetError> {
        for (d, expected) in dicts.iter().zip(FeatureKind::ALL) {
            if d.kind != expected {
                return Err(DatasetError::WrongKind { expected, found: d.kind });
            }
        }
        let mut groups: BTreeMap<Signature, Vec<Noun<'a>>> = BTreeMap::new();
        'nouns: for (word, first) in &dicts[0].entries {
            let mut sig = [0i8; 4];
            let mut features = [0.0; 4];
            for (i, d) in dicts.iter().enumerate() {
                let e = if i == 0 { Some(first) } else { d.entries.get(word) };
                match e {
                    Some(FeatureEntry { normalized: Some(v), cluster: Some(c), .. }) => {
                        sig[i] = *c;
                        features[i] = *v;
                    }
                    _ => continue 'nouns,
                }
            }
            let mut vectors: [&[f32]; 3] = [&[]; 3];
            for (slot, space) in vectors.iter_mut().zip(spaces) {
                match space.vector(word) {
                    Some(v) => *slot = v,
                    None => continue 'nouns,
                }
            }
            groups.entry(sig).or_default().push(Noun { word, features, vectors });
        }
        Ok(PairPlan { groups: groups.into_iter().collect(), caps })
    }

    pub fn eligible_nouns(&self) -> usize {
        self.groups.iter().map(|(_, g)| g.len()).sum()
    }

    /// Signatures and their group sizes, in emission order.
    pub fn group_sizes(&self) -> Vec<(Signature, usize)> {
        self.groups.iter().map(|(s, g)| (*s, g.len())).collect()
    }

    fn record(&self, g: usize, a: usize, b: usize) -> NounPairRecord {
        let (sig, nouns) = &self.groups[g];
        let (x, y) = (&nouns[a], &nouns[b]);
        NounPairRecord {
            noun_a: x.word.to_string(),
            noun_b: y.word.to_string(),
            features_a: x.features,
            features_b: y.features,
            clusters: *sig,
            sims: [0, 1, 2].map(|i| cosine(x.vectors[i], y.vectors[i])),
        }
    }

    /// Pair indices `(a, b)` selected in group `g`, ascending. Without a cap
    /// (or when the group has no more pairs than the cap) every pair is kept;
    /// otherwise a uniform sample seeded by the cap seed and the group index.
    fn selection(&self, g: usize) -> Selection {
        let n = self.groups[g].1.len() as u64;
        let total = n * n.saturating_sub(1) / 2;
        match self.caps {
            Some(caps) if total > caps.max_pairs_per_signature => {
                let mut rng = ChaCha8Rng::seed_from_u64(caps.seed);
                rng.set_stream(g as u64);
                let mut picked: Vec<u64> = index::sample(&mut rng, total as usize, caps.max_pairs_per_signature as usize)
                    .into_iter()
                    .map(|i| i as u64)
                    .collect();
                picked.sort_unstable();
                Selection::Sampled(decode_pairs(n as usize, &picked))
            }
            _ => Selection::All(n as usize),
        }
    }

    /// Streams every record: groups by signature, pairs in canonical order.
    pub fn write<W: Write>(&self, mut out: W) -> Result<PairStats, DatasetError> {
        writeln!(out, "{DATASET_HEADER}")?;
        let mut stats = PairStats { eligible_nouns: self.eligible_nouns(), groups: self.groups.len(), pairs: 0 };
        for g in 0..self.groups.len() {
            let selection = self.selection(g);
            let units = selection.units();
            let batch = rayon::current_num_threads().max(1) * 4;
            for chunk in units.chunks(batch) {
                let texts: Vec<(String, u64)> = chunk
                    .par_iter()
                    .map(|unit| {
                        let mut s = String::new();
                        let mut count = 0;
                        unit.for_each(|a, b| {
                            use fmt::Write as _;
                            writeln!(s, "{}", self.record(g, a, b)).expect("writing to a String");
                            count += 1;
                        });
                        (s, count)
                    })
                    .collect();
                for (s, count) in texts {
                    out.write_all(s.as_bytes())?;
                    stats.pairs += count;
                }
            }
        }
        out.flush()?;
        Ok(stats)
    }

    /// All records in emission order.
    pub fn records(&self) -> Vec<NounPairRecord> {
        let mut out = Vec::new();
        for g in 0..self.groups.len() {
            for unit in self.selection(g).units() {
                unit.for_each(|a, b| out.push(self.record(g, a, b)));
            }
        }
        out
    }
}

enum Selection {
    All(usize),
    Sampled(Vec<(u32, u32)>),
}

enum Unit<'s> {
    Rows { n: usize, rows: std::ops::Range<usize> },
    Pairs(&'s [(u32, u32)]),
}

impl Selection {
    fn units(&self) -> Vec<Unit<'_>> {
        match self {
            Selection::All(n) => {
                let n = *n;
                let mut units = Vec::new();
                let mut start = 0;
                let mut acc = 0u64;
                for a in 0..n {
                    acc += (n - 1 - a) as u64;
                    if acc >= PAIRS_PER_UNIT || a + 1 == n {
                        units.push(Unit::Rows { n, rows: start..a + 1 });
                        start = a + 1;
                        acc = 0;
                    }
                }
                units
            }
            Selection::Sampled(pairs) => pairs.chunks(PAIRS_PER_UNIT as usize).map(Unit::Pairs).collect(),
        }
    }
}

impl Unit<'_> {
    fn for_each(&self, mut f: impl FnMut(usize, usize)) {
        match self {
            Unit::Rows { n, rows } => {
                for a in rows.clone() {
                    for b in a + 1..*n {
                        f(a, b);
                    }
                }
            }
            Unit::Pairs(pairs) => {
                for &(a, b) in *pairs {
                    f(a as usize, b as usize);
                }
            }
        }
    }
}

/// Maps ascending linear indices over the row-major upper triangle of an
/// `n × n` matrix back to `(a, b)` with `a < b`.
fn decode_pairs(n: usize, sorted: &[u64]) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(sorted.len());
    let (mut a, mut row_start) = (0usize, 0u64);
    for &i in sorted {
        while i >= row_start + (n - 1 - a) as u64 {
            row_start += (n - 1 - a) as u64;
            a += 1;
        }
        let b = a + 1 + (i - row_start) as usize;
        out.push((a as u32, b as u32));
    }
    out
}

pub const REPORT_BINS: [&str; 6] = ["<0", "0.0-0.2", "0.2-0.4", "0.4-0.6", "0.6-0.8", "0.8-1.0"];

fn bin_of(v: f64) -> usize {
    if v < 0.0 {
        0
    } else {
        1 + [0.2, 0.4, 0.6, 0.8].iter().take_while(|&&t| v >= t).count()
    }
}

/// Histogram of the three similarity columns over [`REPORT_BINS`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimilarityReport {
    /// `counts[column][bin]`, columns text, KB, hybrid.
    pub counts: [[u64; 6]; 3],
    pub total: u64,
}

impl SimilarityReport {
    pub fn add(&mut self, sims: [f64; 3]) {
        for (col, s) in sims.into_iter().enumerate() {
            self.counts[col][bin_of(s)] += 1;
        }
        self.total += 1;
    }

    pub fn from_records<'r, I: IntoIterator<Item = &'r NounPairRecord>>(records: I) -> Result<Self, DatasetError> {
        let mut r = SimilarityReport::default();
        for rec in records {
            r.add(rec.sims);
        }
        r.check()
    }

    /// Builds the report from a dataset file without holding it in memory.
    pub fn from_reader<R: Read>(input: R) -> Result<Self, DatasetError> {
        let mut r = SimilarityReport::default();
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            r.add(NounPairRecord::parse(&line, i + 1)?.sims);
        }
        r.check()
    }

    fn check(self) -> Result<Self, DatasetError> {
        if self.total == 0 {
            Err(DatasetError::EmptyDataset)
        } else {
            Ok(self)
        }
    }

    /// Percentages `[column][bin]`.
    pub fn percentages(&self) -> [[f64; 6]; 3] {
        self.counts.map(|col| col.map(|c| 100.0 * c as f64 / self.total as f64))
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let pct = self.percentages();
        writeln!(out, "# pairs={}", self.total)?;
        writeln!(out, "#bin\tsim_txt\tsim_kb\tsim_hyb")?;
        for (b, name) in REPORT_BINS.iter().enumerate() {
            writeln!(out, "{name}\t{:.4}\t{:.4}\t{:.4}", pct[0][b], pct[1][b], pct[2][b])?;
        }
        out.flush()
    }
}
