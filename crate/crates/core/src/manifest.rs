//! Per-stage run records: input and output content hashes, seed and
//! duration, one line per stage in `manifest.tsv`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.tsv";

pub fn hash_file(path: &Path) -> io::Result<String> {
    let mut f = File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize().as_slice()))
}

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes).as_slice())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageRecord {
    pub stage: String,
    pub seed: u64,
    pub duration_ms: u64,
    /// `(name, sha256)`; names are paths or `@params`.
    pub inputs: Vec<(String, String)>,
    /// `(path relative to the output directory, sha256)`.
    pub outputs: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    records: Vec<StageRecord>,
}

impl Manifest {
    /// Reads `manifest.tsv` from `dir`; a missing file is an empty manifest.
    /// Unparseable lines are dropped, which only costs a re-run.
    pub fn load(dir: &Path) -> io::Result<Manifest> {
        let path = dir.join(MANIFEST_FILE);
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Manifest::default()),
            Err(e) => return Err(e),
        };
        let mut records = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match parse_line(&line) {
                Some(r) => records.push(r),
                None => log::warn!("ignoring unreadable manifest line: {line}"),
            }
        }
        Ok(Manifest { records })
    }

    pub fn save(&self, dir: &Path) -> io::Result<()> {
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        let mut out = io::BufWriter::new(File::create(&tmp)?);
        writeln!(out, "#stage\tseed\tduration_ms\tin:<name>=<sha256>...\tout:<path>=<sha256>...")?;
        for r in &self.records {
            write!(out, "{}\t{}\t{}", r.stage, r.seed, r.duration_ms)?;
            for (name, h) in &r.inputs {
                write!(out, "\tin:{name}={h}")?;
            }
            for (name, h) in &r.outputs {
                write!(out, "\tout:{name}={h}")?;
            }
            writeln!(out)?;
        }
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(tmp, dir.join(MANIFEST_FILE))
    }

    pub fn get(&self, stage: &str) -> Option<&StageRecord> {
        self.records.iter().find(|r| r.stage == stage)
    }

    pub fn records(&self) -> &[StageRecord] {
        &self.records
    }

    /// Replaces the stage's record, keeping its position when it had one.
    pub fn record(&mut self, rec: StageRecord) {
        match self.records.iter_mut().find(|r| r.stage == rec.stage) {
            Some(slot) => *slot = rec,
            None => self.records.push(rec),
        }
    }
}

fn parse_line(line: &str) -> Option<StageRecord> {
    let mut f = line.split('\t');
    let stage = f.next()?.to_string();
    let seed = f.next()?.parse().ok()?;
    let duration_ms = f.next()?.parse().ok()?;
    let (mut inputs, mut outputs) = (Vec::new(), Vec::new());
    for item in f {
        let (name, h) = item.rsplit_once('=')?;
        if let Some(n) = name.strip_prefix("in:") {
            inputs.push((n.to_string(), h.to_string()));
        } else {
            outputs.push((name.strip_prefix("out:")?.to_string(), h.to_string()));
        }
    }
    Some(StageRecord { stage, seed, duration_ms, inputs, outputs })
}
