//! Encoder reached through a shell command template, measured with scaled
//! PSNR, results cached on disk.
//!
//! Per query the source Y4M is downscaled to the target resolution and
//! written to the work directory, the template is run with
//! `{input} {width} {height} {bitrate_bps} {output}` substituted, and the
//! command must leave a decoded Y4M reconstruction at `{output}`. That
//! reconstruction is upscaled back to native size and compared to the source.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Capability, ChunkRef, EncodeError, EncoderBackend, Memo, Result};
use crate::eval::{resize_chunk, scaled_psnr, EvalError};
use crate::rq::{Resolution, ResolutionSet};
use crate::video::y4m::{read_y4m, write_y4m};
use crate::video::VideoChunk;

pub const PLACEHOLDERS: [&str; 5] = ["{input}", "{width}", "{height}", "{bitrate_bps}", "{output}"];

#[derive(Clone, Debug, PartialEq)]
pub struct ExternalConfig {
    pub command_template: String,
    /// Scratch space for scaled inputs, reconstructions and encoder logs.
    pub workdir: PathBuf,
    /// Defaults to `workdir/cache`.
    pub cache_dir: Option<PathBuf>,
    pub native: Resolution,
    pub resolutions: ResolutionSet,
    pub min_log2_rate: f64,
    pub max_log2_rate: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    quality_db: f64,
    encoder_log_path: PathBuf,
}

#[derive(Debug)]
pub struct ExternalBackend {
    template: String,
    workdir: PathBuf,
    cache_dir: PathBuf,
    native: Resolution,
    capability: Capability,
    memo: Memo,
    hashes: Mutex<HashMap<PathBuf, String>>,
    sources: Mutex<HashMap<PathBuf, Arc<VideoChunk>>>,
    launches: AtomicUsize,
}

pub fn make_external_backend(cfg: ExternalConfig) -> Result<ExternalBackend> {
    ExternalBackend::new(cfg)
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', r"'\''"))
}

impl ExternalBackend {
    pub fn new(cfg: ExternalConfig) -> Result<Self> {
        let missing: Vec<&str> = PLACEHOLDERS
            .iter()
            .copied()
            .filter(|p| !cfg.command_template.contains(p))
            .collect();
        if !missing.is_empty() {
            return Err(EncodeError::BadTemplate(format!("missing {}", missing.join(" "))));
        }
        if !(cfg.min_log2_rate < cfg.max_log2_rate) {
            return Err(EncodeError::BadTemplate("empty rate range".into()));
        }
        let cache_dir = cfg.cache_dir.clone().unwrap_or_else(|| cfg.workdir.join("cache"));
        std::fs::create_dir_all(&cfg.workdir)?;
        std::fs::create_dir_all(&cache_dir)?;
        Ok(Self {
            template: cfg.command_template,
            workdir: cfg.workdir,
            cache_dir,
            native: cfg.native,
            capability: Capability {
                resolutions: cfg.resolutions,
                min_log2_rate: cfg.min_log2_rate,
                max_log2_rate: cfg.max_log2_rate,
            },
            memo: Memo::default(),
            hashes: Mutex::default(),
            sources: Mutex::default(),
            launches: AtomicUsize::new(0),
        })
    }

    /// Encoder processes started so far.
    pub fn process_launches(&self) -> usize {
        self.launches.load(Ordering::SeqCst)
    }

    fn content_hash(&self, path: &Path) -> Result<String> {
        if let Some(h) = self.hashes.lock().expect("hash lock").get(path) {
            return Ok(h.clone());
        }
        let h = hex::encode(Sha256::digest(std::fs::read(path)?));
        self.hashes
            .lock()
            .expect("hash lock")
            .insert(path.to_path_buf(), h.clone());
        Ok(h)
    }

    fn source(&self, path: &Path) -> Result<Arc<VideoChunk>> {
        if let Some(c) = self.sources.lock().expect("source lock").get(path) {
            return Ok(Arc::clone(c));
        }
        let chunk = read_y4m(std::io::BufReader::new(std::fs::File::open(path)?))?;
        if chunk.width() != self.native.width as usize || chunk.height() != self.native.height as usize {
            return Err(EncodeError::Eval(Box::new(EvalError::DimensionMismatch(format!(
                "source {}x{} is not native {}x{}",
                chunk.width(),
                chunk.height(),
                self.native.width,
                self.native.height
            )))));
        }
        let chunk = Arc::new(chunk);
        self.sources
            .lock()
            .expect("source lock")
            .insert(path.to_path_buf(), Arc::clone(&chunk));
        Ok(chunk)
    }

    fn cache_key(content: &str, log2_rate: f64, res: &Resolution) -> String {
        let mut h = Sha256::new();
        h.update(content.as_bytes());
        h.update(log2_rate.to_bits().to_le_bytes());
        h.update(format!("{}x{}", res.width, res.height).as_bytes());
        hex::encode(h.finalize())
    }

    fn read_cache(&self, key: &str) -> Result<Option<f64>> {
        let path = self.cache_dir.join(format!("{key}.json"));
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let rec: CacheRecord = serde_json::from_slice(&bytes).map_err(|_| EncodeError::CacheCorruption(path.clone()))?;
        if rec.key != key || !rec.quality_db.is_finite() {
            return Err(EncodeError::CacheCorruption(path));
        }
        Ok(Some(rec.quality_db))
    }

    fn write_cache(&self, rec: &CacheRecord) -> Result<()> {
        let path = self.cache_dir.join(format!("{}.json", rec.key));
        let tmp = self
            .cache_dir
            .join(format!("{}.{}.tmp", rec.key, std::process::id()));
        std::fs::write(&tmp, serde_json::to_vec_pretty(rec).expect("record serializes"))?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }

    fn run_encoder(&self, source: &VideoChunk, key: &str, log2_rate: f64, res: &Resolution) -> Result<(f64, PathBuf)> {
        let (w, h) = (res.width as usize, res.height as usize);
        let scaled = resize_chunk(source, w, h).map_err(|e| EncodeError::Eval(Box::new(e)))?;
        let input = self.workdir.join(format!("{key}.in.y4m"));
        let output = self.workdir.join(format!("{key}.out.y4m"));
        let log_path = self.workdir.join(format!("{key}.log"));
        write_y4m(&scaled, std::io::BufWriter::new(std::fs::File::create(&input)?))?;

        let bps = log2_rate.exp2().round() as u64;
        let cmd = self
            .template
            .replace("{input}", &shell_quote(&input))
            .replace("{output}", &shell_quote(&output))
            .replace("{width}", &w.to_string())
            .replace("{height}", &h.to_string())
            .replace("{bitrate_bps}", &bps.to_string());
        log::debug!("encode {key}: {cmd}");
        self.launches.fetch_add(1, Ordering::SeqCst);
        let out = Command::new("sh").arg("-c").arg(&cmd).current_dir(&self.workdir).output()?;
        let mut log_text = out.stdout.clone();
        log_text.extend_from_slice(&out.stderr);
        std::fs::write(&log_path, &log_text)?;
        if !out.status.success() {
            return Err(EncodeError::EncoderFailure {
                status: out.status.to_string(),
                output: String::from_utf8_lossy(&log_text).trim().to_string(),
            });
        }
        let recon = read_y4m(std::io::BufReader::new(std::fs::File::open(&output)?))?;
        let upscaled = resize_chunk(&recon, source.width(), source.height()).map_err(|e| EncodeError::Eval(Box::new(e)))?;
        let q = scaled_psnr(source, &upscaled).map_err(|e| EncodeError::Eval(Box::new(e)))?;
        let _ = std::fs::remove_file(&input);
        let _ = std::fs::remove_file(&output);
        Ok((q, log_path))
    }
}

impl EncoderBackend for ExternalBackend {
    fn capability(&self) -> &Capability {
        &self.capability
    }

    fn encode_quality(&self, chunk: &ChunkRef, log2_rate: f64, resolution: &Resolution) -> Result<f64> {
        self.capability.check(log2_rate, resolution)?;
        let path = chunk
            .source
            .as_deref()
            .ok_or_else(|| EncodeError::MissingSource(chunk.id.clone()))?;
        self.memo.get_or_try(chunk, log2_rate, resolution, || {
            let key = Self::cache_key(&self.content_hash(path)?, log2_rate, resolution);
            if let Some(q) = self.read_cache(&key)? {
                return Ok(q);
            }
            let source = self.source(path)?;
            let (quality_db, encoder_log_path) = self.run_encoder(&source, &key, log2_rate, resolution)?;
            self.write_cache(&CacheRecord {
                key,
                quality_db,
                encoder_log_path,
            })?;
            Ok(quality_db)
        })
    }
}
