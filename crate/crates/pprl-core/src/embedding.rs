//! CBOW q-gram embeddings.
//!
//! A small continuous bag-of-words model trained with negative sampling over
//! the q-gram alphabet (or over per-record q-gram lists). Each target token
//! is predicted from the mean of its context tokens' input vectors. Training
//! is single-threaded and fully deterministic under the configured seed; the
//! exact per-sample gradients are used (the mean-context gradient is divided
//! back over the context words) so they can be checked against finite
//! differences.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::prep::{QGramAlphabet, QGramIndex};
use crate::rng::SplitMix64;

/// Which token stream the model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusMode {
    /// The alphabet's grams as one ordered token sequence; the window then
    /// spans enumeration-adjacent grams. Every token occurs exactly once, so
    /// with `min_freq = 1` vocabulary coverage of the alphabet is total.
    AlphabetOrder,
    /// The per-record q-gram lists, one sentence per record.
    RecordLists,
}

impl std::fmt::Display for CorpusMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CorpusMode::AlphabetOrder => "alphabet_order",
            CorpusMode::RecordLists => "record_lists",
        })
    }
}

impl std::str::FromStr for CorpusMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alphabet_order" => Ok(CorpusMode::AlphabetOrder),
            "record_lists" => Ok(CorpusMode::RecordLists),
            other => Err(Error::Config(format!("unknown corpus mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CbowConfig {
    /// Embedding dimension d.
    pub dim: usize,
    /// Minimum corpus frequency f_q for a token to enter the vocabulary.
    pub min_freq: usize,
    /// Window size w: tokens up to w positions before and after the target.
    pub window: usize,
    pub epochs: usize,
    /// Initial learning rate; decays linearly to a small floor.
    pub learning_rate: f64,
    pub negative_samples: usize,
    pub seed: u64,
    pub corpus_mode: CorpusMode,
}

impl Default for CbowConfig {
    fn default() -> Self {
        Self {
            dim: 300,
            min_freq: 1,
            window: 5,
            epochs: 5,
            learning_rate: 0.025,
            negative_samples: 5,
            seed: 0,
            corpus_mode: CorpusMode::AlphabetOrder,
        }
    }
}

impl CbowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 || self.window < 1 || self.min_freq < 1 || self.negative_samples < 1 {
            return Err(Error::Config(
                "cbow config requires dim, window, min_freq, negative_samples >= 1".into(),
            ));
        }
        if self.epochs < 1 {
            return Err(Error::Config("cbow config requires epochs >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("cbow learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// A trained CBOW model: one input and one output vector per vocabulary
/// token. Rows are ordered by alphabet position.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowModel {
    pub tokens: Vec<String>,
    pub vocab: HashMap<String, usize>,
    pub input_vectors: Array2<f64>,
    pub output_vectors: Array2<f64>,
}

impl CbowModel {
    pub fn dim(&self) -> usize {
        self.input_vectors.ncols()
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }
}

/// Per-q-gram embedding vectors aligned with the alphabet order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    /// Row i is the embedding of alphabet gram i.
    pub vectors: Array2<f64>,
}

impl EmbeddingTable {
    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(i)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Negative-sampling loss for one (context, target, negatives) sample:
/// -ln σ(h·out_t) - Σ_neg ln σ(-h·out_n), with h the mean of the context
/// input vectors. The objective [`sample_gradients`] descends; exercised by
/// the finite-difference tests.
#[cfg_attr(not(test), allow(dead_code))]
fn sample_loss(
    input: &Array2<f64>,
    output: &Array2<f64>,
    context: &[usize],
    target: usize,
    negatives: &[usize],
) -> f64 {
    let dim = input.ncols();
    let mut h = vec![0.0; dim];
    for &c in context {
        for (hj, vj) in h.iter_mut().zip(input.row(c)) {
            *hj += vj;
        }
    }
    let inv = 1.0 / context.len() as f64;
    h.iter_mut().for_each(|v| *v *= inv);

    let score = |row: usize| -> f64 { h.iter().zip(output.row(row)).map(|(a, b)| a * b).sum() };
    let mut loss = -sigmoid(score(target)).max(f64::MIN_POSITIVE).ln();
    for &n in negatives {
        loss -= sigmoid(-score(n)).max(f64::MIN_POSITIVE).ln();
    }
    loss
}

/// Exact gradients of [`sample_loss`]: the shared context gradient
/// (dL/dh / |context|, to be applied to every context input row) and the
/// gradient for each touched output row.
fn sample_gradients(
    input: &Array2<f64>,
    output: &Array2<f64>,
    context: &[usize],
    target: usize,
    negatives: &[usize],
) -> (Vec<f64>, Vec<(usize, Vec<f64>)>) {
    let dim = input.ncols();
    let mut h = vec![0.0; dim];
    for &c in context {
        for (hj, vj) in h.iter_mut().zip(input.row(c)) {
            *hj += vj;
        }
    }
    let inv = 1.0 / context.len() as f64;
    h.iter_mut().for_each(|v| *v *= inv);

    let mut grad_h = vec![0.0; dim];
    let mut grad_out = Vec::with_capacity(1 + negatives.len());
    for (&row, label) in std::iter::once(&target)
        .chain(negatives)
        .zip(std::iter::once(1.0).chain(std::iter::repeat(0.0)))
    {
        let score: f64 = h.iter().zip(output.row(row)).map(|(a, b)| a * b).sum();
        let g = sigmoid(score) - label;
        for (gh, o) in grad_h.iter_mut().zip(output.row(row)) {
            *gh += g * o;
        }
        grad_out.push((row, h.iter().map(|&hj| g * hj).collect()));
    }
    // d h / d input_row = 1/|context| for each context row.
    grad_h.iter_mut().for_each(|v| *v *= inv);
    (grad_h, grad_out)
}

fn build_sentences(
    alphabet: &QGramAlphabet,
    records: Option<&QGramIndex>,
    mode: CorpusMode,
) -> Result<Vec<Vec<String>>> {
    match mode {
        CorpusMode::AlphabetOrder => Ok(vec![alphabet.grams.clone()]),
        CorpusMode::RecordLists => {
            let index = records.ok_or_else(|| {
                Error::Config("corpus_mode record_lists requires a q-gram index".into())
            })?;
            Ok(index
                .entries
                .values()
                .filter(|g| !g.is_empty())
                .cloned()
                .collect())
        }
    }
}

/// Train a CBOW model over the alphabet. For
/// [`CorpusMode::RecordLists`] the per-record q-gram index must be supplied.
pub fn train_cbow(
    alphabet: &QGramAlphabet,
    records: Option<&QGramIndex>,
    cfg: &CbowConfig,
) -> Result<CbowModel> {
    cfg.validate()?;
    if alphabet.is_empty() {
        return Err(Error::Config("q-gram alphabet is empty".into()));
    }
    let sentences = build_sentences(alphabet, records, cfg.corpus_mode)?;

    // Count corpus frequencies; every token must be an alphabet member.
    let mut counts = vec![0usize; alphabet.len()];
    for sentence in &sentences {
        for token in sentence {
            let idx = alphabet.index(token).ok_or_else(|| Error::UnknownQGram {
                gram: token.clone(),
                record: None,
            })?;
            counts[idx] += 1;
        }
    }

    // Vocabulary rows keep alphabet order, restricted to frequent tokens.
    let mut tokens = Vec::new();
    let mut vocab = HashMap::new();
    let mut vocab_counts = Vec::new();
    for (idx, &count) in counts.iter().enumerate() {
        if count >= cfg.min_freq {
            vocab.insert(alphabet.grams[idx].clone(), tokens.len());
            tokens.push(alphabet.grams[idx].clone());
            vocab_counts.push(count);
        }
    }
    if tokens.is_empty() {
        return Err(Error::Config(format!(
            "vocabulary empty after min_freq = {} filtering",
            cfg.min_freq
        )));
    }

    let n = tokens.len();
    let dim = cfg.dim;
    let mut rng = SplitMix64::new(cfg.seed);
    let mut input = Array2::zeros((n, dim));
    for v in input.iter_mut() {
        *v = (rng.next_f64() - 0.5) / dim as f64;
    }
    let mut output = Array2::<f64>::zeros((n, dim));

    // Cumulative unigram^(3/4) table for negative sampling.
    let cumulative: Vec<f64> = vocab_counts
        .iter()
        .scan(0.0, |acc, &c| {
            *acc += (c as f64).powf(0.75);
            Some(*acc)
        })
        .collect();
    let total_weight = *cumulative.last().unwrap();
    let draw_negative = |rng: &mut SplitMix64| -> usize {
        let r = rng.next_f64() * total_weight;
        cumulative.partition_point(|&c| c <= r).min(n - 1)
    };

    // Sentences as vocabulary row indices, out-of-vocabulary tokens dropped.
    let indexed: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|t| vocab.get(t).copied()).collect())
        .collect();
    let total_positions: usize = indexed.iter().map(Vec::len).sum::<usize>() * cfg.epochs;
    if total_positions == 0 {
        return Err(Error::Config("training corpus is empty".into()));
    }

    let mut processed = 0usize;
    let mut negatives = Vec::with_capacity(cfg.negative_samples);
    for _epoch in 0..cfg.epochs {
        for sentence in &indexed {
            for t in 0..sentence.len() {
                let alpha =
                    cfg.learning_rate * (1.0 - processed as f64 / total_positions as f64).max(1e-4);
                processed += 1;

                let lo = t.saturating_sub(cfg.window);
                let hi = (t + cfg.window + 1).min(sentence.len());
                let context: Vec<usize> =
                    (lo..hi).filter(|&i| i != t).map(|i| sentence[i]).collect();
                if context.is_empty() {
                    continue;
                }
                let target = sentence[t];

                negatives.clear();
                for _ in 0..cfg.negative_samples {
                    let cand = draw_negative(&mut rng);
                    // A draw hitting the target is skipped, as is standard.
                    if cand != target {
                        negatives.push(cand);
                    }
                }

                let (grad_ctx, grad_out) =
                    sample_gradients(&input, &output, &context, target, &negatives);
                for (row, g) in grad_out {
                    for (o, gj) in output.row_mut(row).iter_mut().zip(&g) {
                        *o -= alpha * gj;
                    }
                }
                for &c in &context {
                    for (v, gj) in input.row_mut(c).iter_mut().zip(&grad_ctx) {
                        *v -= alpha * gj;
                    }
                }
            }
        }
    }

    if input.iter().chain(output.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            iteration: cfg.epochs,
            batch: 0,
        });
    }

    Ok(CbowModel {
        tokens,
        vocab,
        input_vectors: input,
        output_vectors: output,
    })
}

/// Input-vector lookup for one q-gram.
pub fn embed_qgram<'m>(model: &'m CbowModel, qgram: &str) -> Result<ArrayView1<'m, f64>> {
    let row = model.vocab.get(qgram).ok_or_else(|| Error::UnknownQGram {
        gram: qgram.to_string(),
        record: None,
    })?;
    Ok(model.input_vectors.row(*row))
}

/// Assemble the embedding table in alphabet order.
pub fn embed_all(model: &CbowModel, alphabet: &QGramAlphabet) -> Result<EmbeddingTable> {
    let mut vectors = Array2::zeros((alphabet.len(), model.dim()));
    for (i, gram) in alphabet.grams.iter().enumerate() {
        let emb = embed_qgram(model, gram)?;
        vectors.row_mut(i).assign(&emb);
    }
    Ok(EmbeddingTable { vectors })
}

const MODEL_MAGIC: &[u8] = b"PPRLCB1";

/// Write the model to a versioned binary file: magic, d, vocab size, token
/// table, then the input and output matrices row-major as little-endian f64.
pub fn save_model(model: &CbowModel, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&(model.dim() as u32).to_le_bytes())?;
    w.write_all(&(model.vocab_size() as u32).to_le_bytes())?;
    for token in &model.tokens {
        let bytes = token.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
    }
    for matrix in [&model.input_vectors, &model.output_vectors] {
        for v in matrix.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<CbowModel> {
    let mut r = BufReader::new(File::open(path)?);
    let display = path.display().to_string();
    let mut magic = [0u8; 7];
    read_exact(&mut r, &mut magic, &display, "magic")?;
    if magic != MODEL_MAGIC {
        return Err(Error::BadMagic {
            path: display,
            expected: String::from_utf8_lossy(MODEL_MAGIC).into_owned(),
        });
    }
    let dim = read_u32(&mut r, &display, "dimension")? as usize;
    let vocab_size = read_u32(&mut r, &display, "vocab size")? as usize;
    let mut tokens = Vec::with_capacity(vocab_size);
    let mut vocab = HashMap::with_capacity(vocab_size);
    for i in 0..vocab_size {
        let len = read_u32(&mut r, &display, "token length")? as usize;
        let mut buf = vec![0u8; len];
        read_exact(&mut r, &mut buf, &display, "token")?;
        let token = String::from_utf8(buf)
            .map_err(|_| Error::Inconsistent(format!("non-UTF-8 token in {display}")))?;
        vocab.insert(token.clone(), i);
        tokens.push(token);
    }
    let mut read_matrix = |context: &str| -> Result<Array2<f64>> {
        let mut m = Array2::zeros((vocab_size, dim));
        let mut buf = [0u8; 8];
        for v in m.iter_mut() {
            read_exact(&mut r, &mut buf, &display, context)?;
            *v = f64::from_le_bytes(buf);
        }
        Ok(m)
    };
    let input_vectors = read_matrix("input matrix")?;
    let output_vectors = read_matrix("output matrix")?;
    Ok(CbowModel {
        tokens,
        vocab,
        input_vectors,
        output_vectors,
    })
}

pub(crate) fn read_exact(
    r: &mut impl Read,
    buf: &mut [u8],
    path: &str,
    context: &str,
) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated {
                path: path.to_string(),
                context: context.to_string(),
            }
        } else {
            Error::Io(e)
        }
    })
}

pub(crate) fn read_u32(r: &mut impl Read, path: &str, context: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, path, context)?;
    Ok(u32::from_le_bytes(buf))
}
