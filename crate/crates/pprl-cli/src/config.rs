//! The shared parameter file both database owners consume.
//!
//! Flat `key = value` lines with `#` comments. Unknown keys are rejected so
//! a typo cannot silently diverge the two parties' artifacts.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use pprl_core::embedding::CorpusMode;
use pprl_core::encoder::BlockingScheme;
use pprl_core::error::{Error, Result};
use pprl_core::prep::CharClass;

/// Which encoder the DO pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    /// Embedding + binarization + seeded bit selection.
    EmbBin,
    /// Bloom filter baseline.
    Bloom,
}

impl std::fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EncoderKind::EmbBin => "embbin",
            EncoderKind::Bloom => "bloom",
        })
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "embbin" => Ok(EncoderKind::EmbBin),
            "bloom" => Ok(EncoderKind::Bloom),
            other => Err(Error::Config(format!(
                "unknown encoder {other:?} (expected embbin or bloom)"
            ))),
        }
    }
}

/// Every parameter of the three-party protocol in one place.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    // dataset
    pub char_class: CharClass,
    pub q: usize,
    pub csv_delimiter: char,
    pub id_col: String,
    pub cols: Vec<String>,
    pub separator: String,
    // corruption
    pub corrupt_rate: f64,
    // embedding
    pub embed_dim: usize,
    pub window: usize,
    pub min_freq: usize,
    pub embed_epochs: usize,
    pub embed_lr: f64,
    pub negative_samples: usize,
    pub corpus_mode: CorpusMode,
    // binarizer
    pub l: usize,
    pub binarizer_epochs: usize,
    pub batch_size: usize,
    pub binarizer_lr: f64,
    pub lambda: f64,
    // encoder
    pub k: usize,
    pub l_f: usize,
    pub block_scheme: BlockingScheme,
    pub encoder: EncoderKind,
    // bloom baseline
    pub bloom_l: usize,
    pub bloom_k_hash: usize,
    // linkage
    pub threshold: f64,
    pub max_pairs: usize,
    // global
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            char_class: CharClass::Letters,
            q: 2,
            csv_delimiter: ',',
            id_col: "id".into(),
            cols: vec!["value".into()],
            separator: String::new(),
            corrupt_rate: 0.2,
            embed_dim: 300,
            window: 5,
            min_freq: 1,
            embed_epochs: 5,
            embed_lr: 0.025,
            negative_samples: 5,
            corpus_mode: CorpusMode::AlphabetOrder,
            l: 1000,
            binarizer_epochs: 5,
            batch_size: 75,
            binarizer_lr: 1e-3,
            lambda: 1e-3,
            k: 15,
            l_f: 1000,
            block_scheme: BlockingScheme::SoundexFull,
            encoder: EncoderKind::EmbBin,
            bloom_l: 1000,
            bloom_k_hash: 15,
            threshold: 0.9,
            max_pairs: 0,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    /// Parse a `key = value` config file.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", line_no + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", line_no + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
        }
        match key {
            "char_class" => self.char_class = value.parse()?,
            "q" => self.q = num(key, value)?,
            "csv_delimiter" => {
                let mut chars = value.chars();
                self.csv_delimiter =
                    chars
                        .next()
                        .filter(|_| chars.next().is_none())
                        .ok_or_else(|| {
                            Error::Config(format!(
                                "csv_delimiter must be one character, got {value:?}"
                            ))
                        })?;
            }
            "id_col" => self.id_col = value.to_string(),
            "cols" => {
                self.cols = value
                    .split(',')
                    .map(|c| c.trim().to_string())
                    .filter(|c| !c.is_empty())
                    .collect();
                if self.cols.is_empty() {
                    return Err(Error::Config("cols must name at least one column".into()));
                }
            }
            "separator" => self.separator = value.to_string(),
            "corrupt_rate" => self.corrupt_rate = num(key, value)?,
            "embed_dim" => self.embed_dim = num(key, value)?,
            "window" => self.window = num(key, value)?,
            "min_freq" => self.min_freq = num(key, value)?,
            "embed_epochs" => self.embed_epochs = num(key, value)?,
            "embed_lr" => self.embed_lr = num(key, value)?,
            "negative_samples" => self.negative_samples = num(key, value)?,
            "corpus_mode" => self.corpus_mode = value.parse()?,
            "l" => self.l = num(key, value)?,
            "binarizer_epochs" => self.binarizer_epochs = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "binarizer_lr" => self.binarizer_lr = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "l_f" => self.l_f = num(key, value)?,
            "block_scheme" => self.block_scheme = value.parse()?,
            "encoder" => self.encoder = value.parse()?,
            "bloom_l" => self.bloom_l = num(key, value)?,
            "bloom_k_hash" => self.bloom_k_hash = num(key, value)?,
            "threshold" => self.threshold = num(key, value)?,
            "max_pairs" => self.max_pairs = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Serialize in canonical key order; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut kv = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        kv("char_class", self.char_class.to_string());
        kv("q", self.q.to_string());
        kv("csv_delimiter", self.csv_delimiter.to_string());
        kv("id_col", self.id_col.clone());
        kv("cols", self.cols.join(","));
        kv("separator", self.separator.clone());
        kv("corrupt_rate", self.corrupt_rate.to_string());
        kv("embed_dim", self.embed_dim.to_string());
        kv("window", self.window.to_string());
        kv("min_freq", self.min_freq.to_string());
        kv("embed_epochs", self.embed_epochs.to_string());
        kv("embed_lr", self.embed_lr.to_string());
        kv("negative_samples", self.negative_samples.to_string());
        kv("corpus_mode", self.corpus_mode.to_string());
        kv("l", self.l.to_string());
        kv("binarizer_epochs", self.binarizer_epochs.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("binarizer_lr", self.binarizer_lr.to_string());
        kv("lambda", self.lambda.to_string());
        kv("k", self.k.to_string());
        kv("l_f", self.l_f.to_string());
        kv("block_scheme", self.block_scheme.to_string());
        kv("encoder", self.encoder.to_string());
        kv("bloom_l", self.bloom_l.to_string());
        kv("bloom_k_hash", self.bloom_k_hash.to_string());
        kv("threshold", self.threshold.to_string());
        kv("max_pairs", self.max_pairs.to_string());
        kv("seed", self.seed.to_string());
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize())?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let alphabet_size = self
            .char_class
            .size()
            .checked_pow(self.q as u32)
            .ok_or_else(|| Error::Config("alphabet size overflows".into()))?;
        if self.l <= alphabet_size {
            return Err(Error::Config(format!(
                "l = {} must exceed the alphabet size {}^{} = {alphabet_size}",
                self.l,
                self.char_class.size(),
                self.q
            )));
        }
        if !(1 <= self.k && self.k <= self.l_f && self.l_f <= self.l) {
            return Err(Error::Config(format!(
                "requires 1 <= k <= l_f <= l, got k = {}, l_f = {}, l = {}",
                self.k, self.l_f, self.l
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.corrupt_rate) {
            return Err(Error::Config(format!(
                "corrupt_rate {} outside [0, 1]",
                self.corrupt_rate
            )));
        }
        self.cbow_config().validate()?;
        self.binarizer_config().validate()?;
        self.bloom_config().validate()?;
        Ok(())
    }

    pub fn cbow_config(&self) -> pprl_core::embedding::CbowConfig {
        pprl_core::embedding::CbowConfig {
            dim: self.embed_dim,
            min_freq: self.min_freq,
            window: self.window,
            epochs: self.embed_epochs,
            learning_rate: self.embed_lr,
            negative_samples: self.negative_samples,
            seed: 0, // overridden with a stage seed by the pipeline
            corpus_mode: self.corpus_mode,
        }
    }

    pub fn binarizer_config(&self) -> pprl_core::binarizer::BinarizerConfig {
        pprl_core::binarizer::BinarizerConfig {
            l: self.l,
            ep: self.binarizer_epochs,
            s: self.batch_size,
            learning_rate: self.binarizer_lr,
            lambda: self.lambda,
            seed: 0,
        }
    }

    pub fn encode_config(&self) -> pprl_core::encoder::EncodeConfig {
        pprl_core::encoder::EncodeConfig {
            k: self.k,
            l: self.l,
            l_f: self.l_f,
            global_seed: 0,
        }
    }

    pub fn bloom_config(&self) -> pprl_core::bloom::BloomConfig {
        pprl_core::bloom::BloomConfig {
            l_bf: self.bloom_l,
            k_hash: self.bloom_k_hash,
            seed: 0,
        }
    }

    pub fn csv_options(&self) -> pprl_core::prep::CsvOptions {
        pprl_core::prep::CsvOptions {
            delimiter: self.csv_delimiter as u8,
            separator: self.separator.clone(),
        }
    }
}
