//! Stage orchestration over an output directory, with manifest-based
//! skipping of stages whose inputs, parameters and outputs are unchanged.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::align::{self, AlignError};
use crate::config::{ConfigError, RunConfig};
use crate::corpus::{CorpusError, TokenCounts, Tokenizer};
use crate::dataset::{self, DatasetError, PairPlan, SimilarityReport};
use crate::embedding::{self, EmbeddingError, EmbeddingSpace};
use crate::eval::{self, EvalError};
use crate::features::{self, FeatureDictionary, FeatureError, FeatureKind};
use crate::kb::{self, KbError, KbGraph};
use crate::manifest::{hash_bytes, hash_file, Manifest, StageRecord};
use crate::walker::{self, WalkError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("stage {stage}: missing input {path}")]
    StageInputMissing { stage: Stage, path: PathBuf },
    #[error("stage {stage}: {path} changed since the manifest recorded it; rerun with --force to overwrite")]
    ManifestConflict { stage: Stage, path: PathBuf },
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

impl PipelineError {
    /// 1 for invalid configuration or missing inputs, 2 for bad data, 3 for
    /// internal and I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::StageInputMissing { .. } => 1,
            PipelineError::Walk(WalkError::InvalidConfig(_)) => 1,
            PipelineError::Embedding(EmbeddingError::InvalidConfig(_)) => 1,
            PipelineError::Io { .. } | PipelineError::Pool(_) => 3,
            PipelineError::Walk(WalkError::Io(_)) | PipelineError::Embedding(EmbeddingError::Io(_)) => 3,
            PipelineError::Corpus(CorpusError::Io(_)) | PipelineError::Dataset(DatasetError::Io(_)) => 3,
            PipelineError::Feature(FeatureError::Io(_)) => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    ImportKb,
    Walk,
    Count,
    TrainText,
    TrainKb,
    Align,
    Features,
    Cluster,
    Pairs,
    Report,
    Eval,
}

impl Stage {
    /// Dependency order.
    pub const ALL: [Stage; 11] = [
        Stage::ImportKb,
        Stage::Walk,
        Stage::Count,
        Stage::TrainText,
        Stage::TrainKb,
        Stage::Align,
        Stage::Features,
        Stage::Cluster,
        Stage::Pairs,
        Stage::Report,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::ImportKb => "import-kb",
            Stage::Walk => "walk",
            Stage::Count => "count",
            Stage::TrainText => "train-text",
            Stage::TrainKb => "train-kb",
            Stage::Align => "align",
            Stage::Features => "features",
            Stage::Cluster => "cluster",
            Stage::Pairs => "pairs",
            Stage::Report => "report",
            Stage::Eval => "eval",
        }
    }

    pub fn parse(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Artifact paths relative to the output directory.
pub mod artifacts {
    pub const KB_DIR: &str = "kb";
    pub const PSEUDO_CORPUS: &str = "pseudo_corpus.txt";
    pub const WALK_STATS: &str = "walk_stats.json";
    pub const CORPUS_TOKENS: &str = "corpus.tok";
    pub const COUNTS: &str = "counts.tsv";
    pub const TEXT_VECTORS: &str = "text.vec";
    pub const KB_VECTORS: &str = "kb.vec";
    pub const ALIGNMENT: &str = "alignment.tsv";
    pub const HYBRID_VECTORS: &str = "hybrid.vec";
    pub const FEATURES_DIR: &str = "features";
    pub const DATASET: &str = "dataset.tsv";
    pub const REPORT: &str = "report.tsv";
    pub const EVAL: &str = "eval.tsv";

    pub fn raw_feature(kind: &str) -> String {
        format!("{FEATURES_DIR}/{kind}.raw.tsv")
    }

    pub fn clustered_feature(kind: &str) -> String {
        format!("{FEATURES_DIR}/{kind}.tsv")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    Skipped,
}

struct StageSpec {
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
    params: String,
    seed: u64,
}

pub struct Pipeline {
    cfg: RunConfig,
    out: PathBuf,
    manifest: Manifest,
    force: bool,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    /// Validates the configuration and opens (creating if needed) the
    /// output directory.
    pub fn new(cfg: RunConfig) -> Result<Pipeline> {
        cfg.validate()?;
        let out = cfg.paths.output.clone();
        fs::create_dir_all(&out).map_err(io_at(&out))?;
        let manifest = Manifest::load(&out).map_err(io_at(&out))?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| PipelineError::Pool(e.to_string()))?;
        Ok(Pipeline { cfg, out, manifest, force: false, pool })
    }

    /// Re-runs stages even when the manifest says they are current, and
    /// overwrites artifacts changed by hand.
    pub fn force(mut self, force: bool) -> Self {
        self.force = force;
        self
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn artifact(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn kb_files(&self, dir: &Path) -> Vec<PathBuf> {
        [kb::SYNSETS_FILE, kb::RELATIONS_FILE, kb::LEXICON_FILE].iter().map(|f| dir.join(f)).collect()
    }

    fn kb_artifacts() -> Vec<String> {
        [kb::SYNSETS_FILE, kb::RELATIONS_FILE, kb::LEXICON_FILE]
            .iter()
            .map(|f| format!("{}/{f}", artifacts::KB_DIR))
            .collect()
    }

    fn spec(&self, stage: Stage) -> StageSpec {
        use artifacts as a;
        let cfg = &self.cfg;
        let o = |rel: &str| self.out.join(rel);
        let kb_in: Vec<PathBuf> = Self::kb_artifacts().iter().map(|r| o(r)).collect();
        let dicts = |f: fn(&str) -> String| FeatureKind::ALL.iter().map(|k| f(k.name())).collect::<Vec<_>>();
        match stage {
            Stage::ImportKb => StageSpec {
                inputs: self.kb_files(&cfg.paths.kb_dir),
                outputs: Self::kb_artifacts(),
                params: String::new(),
                seed: 0,
            },
            Stage::Walk => {
                let w = cfg.walk_config();
                StageSpec {
                    inputs: kb_in,
                    outputs: vec![a::PSEUDO_CORPUS.into(), a::WALK_STATS.into()],
                    params: format!("{w:?}"),
                    seed: w.seed,
                }
            }
            Stage::Count => StageSpec {
                inputs: cfg.paths.corpus.clone(),
                outputs: vec![a::CORPUS_TOKENS.into(), a::COUNTS.into()],
                params: format!("lowercase={}", cfg.corpus.lowercase),
                seed: 0,
            },
            Stage::TrainText => {
                let t = cfg.text_train_config();
                StageSpec {
                    inputs: vec![o(a::CORPUS_TOKENS)],
                    outputs: vec![a::TEXT_VECTORS.into()],
                    params: format!("{t:?}"),
                    seed: t.seed,
                }
            }
            Stage::TrainKb => {
                let t = cfg.kb_train_config();
                StageSpec {
                    inputs: vec![o(a::PSEUDO_CORPUS)],
                    outputs: vec![a::KB_VECTORS.into()],
                    params: format!("{t:?}"),
                    seed: t.seed,
                }
            }
            Stage::Align => StageSpec {
                inputs: vec![o(a::TEXT_VECTORS), o(a::KB_VECTORS)],
                outputs: vec![a::ALIGNMENT.into(), a::HYBRID_VECTORS.into()],
                params: format!("{:?}", cfg.hybrid_weights()),
                seed: 0,
            },
            Stage::Features => {
                let mut inputs = kb_in;
                inputs.push(o(a::COUNTS));
                StageSpec {
                    inputs,
                    outputs: dicts(a::raw_feature),
                    params: format!("{:?}", cfg.feature_options().ok()),
                    seed: 0,
                }
            }
            Stage::Cluster => StageSpec {
                inputs: dicts(a::raw_feature).iter().map(|r| o(r)).collect(),
                outputs: dicts(a::clustered_feature),
                params: format!("iqr_k={}", cfg.features.iqr_k),
                seed: 0,
            },
            Stage::Pairs => {
                let mut inputs: Vec<PathBuf> = dicts(a::clustered_feature).iter().map(|r| o(r)).collect();
                inputs.extend([o(a::TEXT_VECTORS), o(a::KB_VECTORS), o(a::HYBRID_VECTORS)]);
                let caps = cfg.pair_caps();
                StageSpec {
                    inputs,
                    outputs: vec![a::DATASET.into()],
                    params: format!("{caps:?}"),
                    seed: caps.map_or(0, |c| c.seed),
                }
            }
            Stage::Report => StageSpec {
                inputs: vec![o(a::DATASET)],
                outputs: vec![a::REPORT.into()],
                params: String::new(),
                seed: 0,
            },
            Stage::Eval => {
                let mut inputs = vec![o(a::TEXT_VECTORS), o(a::KB_VECTORS), o(a::HYBRID_VECTORS)];
                inputs.extend(cfg.paths.gold.iter().cloned());
                StageSpec { inputs, outputs: vec![a::EVAL.into()], params: String::new(), seed: 0 }
            }
        }
    }

    /// Runs every stage in dependency order.
    pub fn run_all(&mut self) -> Result<Vec<(Stage, StageOutcome)>> {
        let mut done = Vec::new();
        for stage in Stage::ALL {
            done.push((stage, self.run(stage)?));
        }
        Ok(done)
    }

    /// Runs one stage unless the manifest shows it current.
    pub fn run(&mut self, stage: Stage) -> Result<StageOutcome> {
        let spec = self.spec(stage);
        if stage == Stage::Count && spec.inputs.is_empty() {
            return Err(PipelineError::StageInputMissing { stage, path: PathBuf::from("<paths.corpus>") });
        }
        for p in &spec.inputs {
            if !p.is_file() {
                return Err(PipelineError::StageInputMissing { stage, path: p.clone() });
            }
        }
        let mut inputs = Vec::with_capacity(spec.inputs.len() + 1);
        for p in &spec.inputs {
            inputs.push((self.display_name(p), hash_file(p).map_err(io_at(p))?));
        }
        inputs.push(("@params".to_string(), hash_bytes(spec.params.as_bytes())));

        if let Some(rec) = self.manifest.get(stage.name()) {
            if !self.force && rec.inputs == inputs {
                let mut current = true;
                for (rel, recorded) in &rec.outputs {
                    let path = self.out.join(rel);
                    if !path.is_file() {
                        current = false;
                        continue;
                    }
                    if &hash_file(&path).map_err(io_at(&path))? != recorded {
                        return Err(PipelineError::ManifestConflict { stage, path });
                    }
                }
                if current && rec.outputs.len() == spec.outputs.len() {
                    log::info!("{stage}: up to date, skipped");
                    return Ok(StageOutcome::Skipped);
                }
            }
        }

        log::info!("{stage}: running");
        let start = Instant::now();
        self.pool.install(|| self.execute(stage))?;
        let duration_ms = start.elapsed().as_millis() as u64;

        let mut outputs = Vec::with_capacity(spec.outputs.len());
        for rel in &spec.outputs {
            let path = self.out.join(rel);
            outputs.push((rel.clone(), hash_file(&path).map_err(io_at(&path))?));
        }
        self.manifest.record(StageRecord { stage: stage.name().into(), seed: spec.seed, duration_ms, inputs, outputs });
        self.manifest.save(&self.out).map_err(io_at(&self.out))?;
        log::info!("{stage}: done in {duration_ms} ms");
        Ok(StageOutcome::Ran)
    }

    fn display_name(&self, p: &Path) -> String {
        p.strip_prefix(&self.out).unwrap_or(p).to_string_lossy().into_owned()
    }

    fn execute(&self, stage: Stage) -> Result<()> {
        use artifacts as a;
        let cfg = &self.cfg;
        match stage {
            Stage::ImportKb => {
                let kb = KbGraph::load_dir(&cfg.paths.kb_dir)?;
                log::info!(
                    "{} synsets, {} relations, {} lemmas",
                    kb.synset_count(),
                    kb.relation_count(),
                    kb.lemma_count()
                );
                let dir = self.artifact(a::KB_DIR);
                fs::create_dir_all(&dir).map_err(io_at(&dir))?;
                kb.save_dir(&dir).map_err(io_at(&dir))?;
            }
            Stage::Walk => {
                let kb = self.load_kb()?;
                let mut stats = None;
                write_atomic(&self.artifact(a::PSEUDO_CORPUS), |w| {
                    stats = Some(walker::generate_pseudo_corpus(&kb, &cfg.walk_config(), w)?);
                    Ok(())
                })?;
                let line = stats.expect("walk ran").to_json_line();
                log::info!("walk stats: {line}");
                write_atomic(&self.artifact(a::WALK_STATS), |w| {
                    writeln!(w, "{line}").map_err(io_at(Path::new(a::WALK_STATS)))
                })?;
            }
            Stage::Count => {
                let tokenizer = Tokenizer::new(cfg.corpus.lowercase);
                let tok_path = self.artifact(a::CORPUS_TOKENS);
                write_atomic(&tok_path, |mut w| {
                    let mut total = 0;
                    for p in &cfg.paths.corpus {
                        let f = File::open(p).map_err(io_at(p))?;
                        total += tokenizer.preprocess(f, &mut w).map_err(|e| match e {
                            CorpusError::Io(source) => PipelineError::Io { path: p.clone(), source },
                            other => other.into(),
                        })?;
                    }
                    log::info!("{total} tokens");
                    Ok(())
                })?;
                let counts = TokenCounts::count_file(&tok_path)?;
                write_atomic(&self.artifact(a::COUNTS), |w| {
                    counts.write_tsv(w).map_err(io_at(Path::new(a::COUNTS)))
                })?;
            }
            Stage::TrainText | Stage::TrainKb => {
                let (input, output, tc) = if stage == Stage::TrainText {
                    (a::CORPUS_TOKENS, a::TEXT_VECTORS, cfg.text_train_config())
                } else {
                    (a::PSEUDO_CORPUS, a::KB_VECTORS, cfg.kb_train_config())
                };
                let space = embedding::train_file(&self.artifact(input), &tc)?;
                log::info!("{} vectors of dimension {}", space.len(), space.dim());
                write_atomic(&self.artifact(output), |w| space.write_text(w).map_err(io_at(Path::new(output))))?;
            }
            Stage::Align => {
                let text = EmbeddingSpace::load_text(&self.artifact(a::TEXT_VECTORS))?;
                let kbs = EmbeddingSpace::load_text(&self.artifact(a::KB_VECTORS))?;
                let seeds = align::seed_dictionary(&text, &kbs)?;
                let fit = align::fit_orthogonal_map(&text, &kbs, &seeds)?;
                log::info!("{} seed words, residual {:.6}", seeds.len(), fit.residual);
                let hybrid = align::build_hybrid(&text, &kbs, &fit, cfg.hybrid_weights())?;
                write_atomic(&self.artifact(a::ALIGNMENT), |w| fit.write_tsv(w).map_err(io_at(Path::new(a::ALIGNMENT))))?;
                write_atomic(&self.artifact(a::HYBRID_VECTORS), |w| {
                    hybrid.write_text(w).map_err(io_at(Path::new(a::HYBRID_VECTORS)))
                })?;
            }
            Stage::Features => {
                let kb = self.load_kb()?;
                let counts_path = self.artifact(a::COUNTS);
                let counts = TokenCounts::read_tsv(File::open(&counts_path).map_err(io_at(&counts_path))?)?;
                let opts = cfg.feature_options()?;
                let dir = self.artifact(a::FEATURES_DIR);
                fs::create_dir_all(&dir).map_err(io_at(&dir))?;
                for d in features::compute_all(&kb, &counts, &opts) {
                    log::info!("{}: {} nouns", d.kind, d.len());
                    let rel = a::raw_feature(d.kind.name());
                    write_atomic(&self.artifact(&rel), |w| d.write_tsv(w).map_err(io_at(Path::new(&rel))))?;
                }
            }
            Stage::Cluster => {
                for kind in FeatureKind::ALL {
                    let raw = self.read_dictionary(&a::raw_feature(kind.name()))?;
                    let clustered = dataset::cluster_dictionary(&raw, cfg.features.iqr_k)?;
                    log::info!("{kind}: {} of {} nouns kept", clustered.len(), raw.len());
                    let rel = a::clustered_feature(kind.name());
                    write_atomic(&self.artifact(&rel), |w| clustered.write_tsv(w).map_err(io_at(Path::new(&rel))))?;
                }
            }
            Stage::Pairs => {
                let dicts: Vec<FeatureDictionary> = FeatureKind::ALL
                    .iter()
                    .map(|k| self.read_dictionary(&a::clustered_feature(k.name())))
                    .collect::<Result<_>>()?;
                let spaces = self.load_spaces()?;
                let plan = PairPlan::new(
                    [&dicts[0], &dicts[1], &dicts[2], &dicts[3]],
                    [&spaces[0], &spaces[1], &spaces[2]],
                    cfg.pair_caps(),
                )?;
                let mut stats = None;
                write_atomic(&self.artifact(a::DATASET), |w| {
                    stats = Some(plan.write(w)?);
                    Ok(())
                })?;
                let s = stats.expect("pairs ran");
                log::info!("{} eligible nouns in {} signature groups, {} pairs", s.eligible_nouns, s.groups, s.pairs);
            }
            Stage::Report => {
                let path = self.artifact(a::DATASET);
                let report = SimilarityReport::from_reader(File::open(&path).map_err(io_at(&path))?)?;
                write_atomic(&self.artifact(a::REPORT), |w| report.write_tsv(w).map_err(io_at(Path::new(a::REPORT))))?;
            }
            Stage::Eval => {
                let spaces = self.load_spaces()?;
                let mut golds = Vec::new();
                for p in &cfg.paths.gold {
                    golds.push(eval::load_gold(p)?);
                }
                write_atomic(&self.artifact(a::EVAL), |w| {
                    let err = io_at(Path::new(a::EVAL));
                    let mut lines = format!("{}\n", eval::RESULTS_HEADER);
                    for g in &golds {
                        for (name, space) in ["txt", "kb", "hyb"].iter().zip(&spaces) {
                            match eval::spearman_eval(space, g) {
                                Ok(r) => {
                                    let mut buf = Vec::new();
                                    eval::write_result(&mut buf, &g.name, name, &r).expect("in-memory write");
                                    lines.push_str(&String::from_utf8(buf).expect("utf-8"));
                                    if !r.skipped.is_empty() {
                                        log::info!("{}/{name}: skipped {:?}", g.name, r.skipped);
                                    }
                                }
                                Err(e) => {
                                    log::warn!("{}/{name}: {e}", g.name);
                                    lines.push_str(&format!("{}\t{name}\tNA\tNA\n", g.name));
                                }
                            }
                        }
                    }
                    w.write_all(lines.as_bytes()).map_err(err)
                })?;
            }
        }
        Ok(())
    }

    fn load_kb(&self) -> Result<KbGraph> {
        Ok(KbGraph::load_dir(&self.artifact(artifacts::KB_DIR))?)
    }

    fn read_dictionary(&self, rel: &str) -> Result<FeatureDictionary> {
        let path = self.artifact(rel);
        Ok(FeatureDictionary::read_tsv(File::open(&path).map_err(io_at(&path))?)?)
    }

    /// Text, KB and hybrid spaces.
    fn load_spaces(&self) -> Result<[EmbeddingSpace; 3]> {
        use artifacts as a;
        Ok([
            EmbeddingSpace::load_text(&self.artifact(a::TEXT_VECTORS))?,
            EmbeddingSpace::load_text(&self.artifact(a::KB_VECTORS))?,
            EmbeddingSpace::load_text(&self.artifact(a::HYBRID_VECTORS))?,
        ])
    }
}

/// Writes through a buffered temp file renamed over `path` on success, so an
/// interrupted stage never leaves a truncated artifact behind.
fn write_atomic<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let tmp = path.with_extension(match path.extension() {
        Some(e) => format!("{}.tmp", e.to_string_lossy()),
        None => "tmp".into(),
    });
    let mut w = BufWriter::new(File::create(&tmp).map_err(io_at(&tmp))?);
    let result = f(&mut w).and_then(|_| w.flush().map_err(io_at(&tmp)));
    drop(w);
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, path).map_err(io_at(path))
}
