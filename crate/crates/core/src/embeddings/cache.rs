//! Append-only on-disk embedding cache.
//!
//! One line per entry: `key \t dim \t hex(f64 bits...) \t checksum`. Values
//! are stored as raw IEEE-754 bits, so a get after a put returns the exact
//! vector. Lines that fail to parse or checksum are skipped with a warning.
//! Later lines for the same key win.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use log::warn;
use sha2::{Digest, Sha256};

use super::EmbeddingVector;

/// Content hash of `(model_name, text)`.
pub fn cache_key(model_name: &str, text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update((model_name.len() as u64).to_le_bytes());
    hasher.update(model_name.as_bytes());
    hasher.update(text.as_bytes());
    hex::encode(hasher.finalize())
}

pub struct EmbeddingCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, EmbeddingVector>>,
    file: Mutex<Option<File>>,
}

impl EmbeddingCache {
    /// A cache that lives only as long as the process.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            entries: RwLock::new(HashMap::new()),
            file: Mutex::new(None),
        }
    }

    /// Opens (or creates) the cache file at `path`, loading existing entries.
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line?;
                if line.is_empty() {
                    continue;
                }
                match decode_line(&line) {
                    Some((key, v)) => {
                        entries.insert(key, v);
                    }
                    None => warn!(
                        "{}:{}: corrupt embedding cache entry ignored",
                        path.display(),
                        lineno + 1
                    ),
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path: Some(path),
            entries: RwLock::new(entries),
            file: Mutex::new(Some(file)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<EmbeddingVector> {
        self.entries.read().unwrap().get(key).cloned()
    }

    pub fn put(&self, key: &str, v: &EmbeddingVector) -> std::io::Result<()> {
        if let Some(file) = self.file.lock().unwrap().as_mut() {
            file.write_all(encode_line(key, v).as_bytes())?;
        }
        self.entries
            .write()
            .unwrap()
            .insert(key.to_string(), v.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn checksum(body: &str) -> String {
    hex::encode(&Sha256::digest(body.as_bytes())[..8])
}

fn encode_line(key: &str, v: &EmbeddingVector) -> String {
    let mut bits = String::with_capacity(v.dim() * 16);
    for x in v.values() {
        bits.push_str(&format!("{:016x}", x.to_bits()));
    }
    let body = format!("{key}\t{}\t{bits}", v.dim());
    format!("{body}\t{}\n", checksum(&body))
}

fn decode_line(line: &str) -> Option<(String, EmbeddingVector)> {
    let (body, sum) = line.rsplit_once('\t')?;
    if checksum(body) != sum {
        return None;
    }
    let mut fields = body.split('\t');
    let key = fields.next()?;
    let dim: usize = fields.next()?.parse().ok()?;
    let bits = fields.next()?;
    if fields.next().is_some() || bits.len() != dim * 16 {
        return None;
    }
    let values = (0..dim)
        .map(|i| u64::from_str_radix(&bits[i * 16..(i + 1) * 16], 16).map(f64::from_bits))
        .collect::<Result<Vec<_>, _>>()
        .ok()?;
    Some((key.to_string(), EmbeddingVector::new(values).ok()?))
}
