//! Learned binarization of q-gram embeddings.
//!
//! A linear projection `M` (l x d) is trained as a binary autoencoder over
//! the embedding table: a batch of embeddings is encoded to binary codes
//! `c(x) = step(M x)`, decoded as `x_hat = tanh(M^T c(x) + phi)`, and `M`
//! and `phi` descend the squared reconstruction error. An orthonormality
//! regularizer `(lambda/2) * ||M^T M - I||_F^2` keeps the projection well
//! conditioned. The step function is handled with the straight-through
//! estimator; the smooth (code-held-fixed) part of the gradient is exposed
//! separately so it can be verified against finite differences.
//!
//! After training, the alphabet's bit matrix is the sign pattern of the
//! projected embeddings: bit (i, j) is 1 iff embedding i dotted with
//! projection row j is greater than 0.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use crate::bits::BitVec;
use crate::embedding::{read_exact, read_u32, EmbeddingTable};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct BinarizerConfig {
    /// Projection width in bits (l).
    pub l: usize,
    /// Training iterations (ep).
    pub ep: usize,
    /// Batch size (s). Trailing records past the last full batch are skipped
    /// within an iteration.
    pub s: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for BinarizerConfig {
    fn default() -> Self {
        Self {
            l: 1000,
            ep: 5,
            s: 75,
            learning_rate: 1e-3,
            lambda: 1e-3,
            seed: 0,
        }
    }
}

impl BinarizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l < 1 || self.ep < 1 || self.s < 1 {
            return Err(Error::Config(
                "binarizer config requires l, ep, s >= 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(
                "binarizer learning rate must be positive".into(),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(
                "binarizer lambda must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Mutable training state: projection matrix, decoder offset, and the most
/// recently recorded losses.
#[derive(Debug, Clone)]
pub struct BinarizerState {
    /// l x d projection matrix.
    pub m: Array2<f64>,
    /// Decoder offset of length d. Initialized to random bits, real-valued
    /// thereafter.
    pub phi: Array1<f64>,
    pub rec_loss: f64,
    pub reg_loss: f64,
}

/// Fresh state: `M` uniform in [-a, a] with a = sqrt(6 / (d + l)), `phi`
/// drawn from {0, 1}, losses at the +inf sentinel.
pub fn init_binarizer(l: usize, d: usize, seed: u64) -> BinarizerState {
    let mut rng = SplitMix64::new(seed);
    let a = (6.0 / (d + l) as f64).sqrt();
    let mut m = Array2::zeros((l, d));
    for v in m.iter_mut() {
        *v = (rng.next_f64() * 2.0 - 1.0) * a;
    }
    let mut phi = Array1::zeros(d);
    for v in phi.iter_mut() {
        *v = (rng.next_u64() & 1) as f64;
    }
    BinarizerState {
        m,
        phi,
        rec_loss: f64::INFINITY,
        reg_loss: f64::INFINITY,
    }
}

/// Binary codes `step(M x)` for a batch of embeddings (rows of `xs`),
/// returned as a batch x l matrix of 0.0/1.0 values. The threshold is
/// strictly greater-than zero.
pub fn binary_codes(m: &Array2<f64>, xs: ArrayView2<'_, f64>) -> Array2<f64> {
    xs.dot(&m.t()).mapv(|z| if z > 0.0 { 1.0 } else { 0.0 })
}

/// Squared reconstruction error of a batch through fixed binary codes:
/// sum over the batch of ||x - tanh(M^T c + phi)||^2.
pub fn reconstruction_loss(
    m: &Array2<f64>,
    phi: &Array1<f64>,
    xs: ArrayView2<'_, f64>,
    codes: &Array2<f64>,
) -> f64 {
    let recon = (codes.dot(m) + phi).mapv(f64::tanh);
    (&xs - &recon).mapv(|e| e * e).sum()
}

/// Gradient of [`reconstruction_loss`] with respect to `M` and `phi`, the
/// binary codes held fixed. This is the exact gradient of the smooth decoder
/// path and is what finite differences of the loss reproduce.
pub fn reconstruction_gradient(
    m: &Array2<f64>,
    phi: &Array1<f64>,
    xs: ArrayView2<'_, f64>,
    codes: &Array2<f64>,
) -> (Array2<f64>, Array1<f64>) {
    let (_, grad_u) = forward_grad_u(m, phi, xs, codes);
    let grad_m = codes.t().dot(&grad_u);
    let grad_phi = grad_u.sum_axis(Axis(0));
    (grad_m, grad_phi)
}

/// Loss and d loss / d u with u = codes.M + phi (batch x d).
fn forward_grad_u(
    m: &Array2<f64>,
    phi: &Array1<f64>,
    xs: ArrayView2<'_, f64>,
    codes: &Array2<f64>,
) -> (f64, Array2<f64>) {
    let recon = (codes.dot(m) + phi).mapv(f64::tanh);
    let err = &xs - &recon;
    let loss = err.mapv(|e| e * e).sum();
    // d/du tanh(u) = 1 - tanh(u)^2
    let grad_u = -2.0 * &err * recon.mapv(|r| 1.0 - r * r);
    (loss, grad_u)
}

/// Full reconstruction gradient used in training: the fixed-code decoder
/// gradient plus the straight-through encoder term, which passes
/// d loss / d code through the step function unchanged onto `z = M x`.
fn reconstruction_gradient_ste(
    m: &Array2<f64>,
    phi: &Array1<f64>,
    xs: ArrayView2<'_, f64>,
    codes: &Array2<f64>,
) -> (f64, Array2<f64>, Array1<f64>) {
    let (loss, grad_u) = forward_grad_u(m, phi, xs, codes);
    let grad_m_decoder = codes.t().dot(&grad_u);
    let grad_phi = grad_u.sum_axis(Axis(0));
    // d loss / d codes = grad_u . M^T, straight through to z, then z = xs . M^T.
    let grad_codes = grad_u.dot(&m.t());
    let grad_m_encoder = grad_codes.t().dot(&xs);
    (loss, grad_m_decoder + grad_m_encoder, grad_phi)
}

/// Frobenius norm of M^T M - I.
pub fn orthonormality_residual(m: &Array2<f64>) -> f64 {
    residual_matrix(m).mapv(|v| v * v).sum().sqrt()
}

/// Regularisation loss (lambda / 2) * ||M^T M - I||_F^2.
pub fn regularisation_loss(m: &Array2<f64>, lambda: f64) -> f64 {
    0.5 * lambda * residual_matrix(m).mapv(|v| v * v).sum()
}

/// Gradient of [`regularisation_loss`]: 2 lambda M (M^T M - I).
pub fn regularisation_gradient(m: &Array2<f64>, lambda: f64) -> Array2<f64> {
    2.0 * lambda * m.dot(&residual_matrix(m))
}

fn residual_matrix(m: &Array2<f64>) -> Array2<f64> {
    let d = m.ncols();
    let mut r = m.t().dot(m);
    for i in 0..d {
        r[[i, i]] -= 1.0;
    }
    r
}

/// Run `ep` iterations of batched training over the table: a regularisation
/// step on `M`, then a reconstruction step on `M` and `phi`, recording both
/// losses after each batch.
pub fn train_binarizer(
    mut state: BinarizerState,
    table: &EmbeddingTable,
    cfg: &BinarizerConfig,
) -> Result<BinarizerState> {
    cfg.validate()?;
    let d = state.m.ncols();
    if table.dim() != d {
        return Err(Error::Shape {
            context: "embedding dimension for binarizer".into(),
            expected: d,
            actual: table.dim(),
        });
    }
    let n = table.len();
    if n < cfg.s {
        return Err(Error::Config(format!(
            "batch size {} exceeds table size {n}",
            cfg.s
        )));
    }

    let lr = cfg.learning_rate;
    for iteration in 0..cfg.ep {
        let mut batch_start = 0;
        let mut batch_idx = 0;
        while batch_start + cfg.s <= n {
            let xs = table
                .vectors
                .slice(s![batch_start..batch_start + cfg.s, ..]);

            let grad_reg = regularisation_gradient(&state.m, cfg.lambda);
            state.m.scaled_add(-lr, &grad_reg);

            let codes = binary_codes(&state.m, xs);
            let (_, grad_m, grad_phi) =
                reconstruction_gradient_ste(&state.m, &state.phi, xs, &codes);
            state.m.scaled_add(-lr, &grad_m);
            state.phi.scaled_add(-lr, &grad_phi);

            let codes = binary_codes(&state.m, xs);
            state.rec_loss = reconstruction_loss(&state.m, &state.phi, xs, &codes);
            state.reg_loss = regularisation_loss(&state.m, cfg.lambda);
            if !state.rec_loss.is_finite() || !state.reg_loss.is_finite() {
                return Err(Error::Divergence {
                    iteration,
                    batch: batch_idx,
                });
            }

            batch_start += cfg.s;
            batch_idx += 1;
        }
    }
    Ok(state)
}

/// Per-q-gram rows of l bits, aligned with the alphabet order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QGramBitMatrix {
    pub l: usize,
    pub rows: Vec<BitVec>,
}

impl QGramBitMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }
}

/// Project every embedding through the trained matrix and threshold at zero:
/// bit (i, j) is 1 iff row i of the table dotted with row j of `M` exceeds 0.
pub fn binarize_alphabet(state: &BinarizerState, table: &EmbeddingTable) -> Result<QGramBitMatrix> {
    let d = state.m.ncols();
    if table.dim() != d {
        return Err(Error::Shape {
            context: "embedding dimension for binarization".into(),
            expected: d,
            actual: table.dim(),
        });
    }
    let l = state.m.nrows();
    let z = table.vectors.dot(&state.m.t());
    let rows = z
        .rows()
        .into_iter()
        .map(|row| BitVec::from_bools(row.iter().map(|&v| v > 0.0)))
        .collect();
    Ok(QGramBitMatrix { l, rows })
}

const BITMATRIX_MAGIC: &[u8] = b"PPRLMP1";

/// Write the bit matrix: magic, l, row count (little-endian u32), then each
/// row packed 8 bits per byte (bit p in byte p/8 at bit 7 - p%8).
pub fn save_bit_matrix(matrix: &QGramBitMatrix, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(BITMATRIX_MAGIC)?;
    w.write_all(&(matrix.l as u32).to_le_bytes())?;
    w.write_all(&(matrix.rows.len() as u32).to_le_bytes())?;
    for row in &matrix.rows {
        w.write_all(row.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_bit_matrix(path: &Path) -> Result<QGramBitMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let display = path.display().to_string();
    let mut magic = [0u8; 7];
    read_exact(&mut r, &mut magic, &display, "magic")?;
    if magic != BITMATRIX_MAGIC {
        return Err(Error::BadMagic {
            path: display,
            expected: String::from_utf8_lossy(BITMATRIX_MAGIC).into_owned(),
        });
    }
    let l = read_u32(&mut r, &display, "row width")? as usize;
    let count = read_u32(&mut r, &display, "row count")? as usize;
    let bytes_per_row = l.div_ceil(8);
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let mut buf = vec![0u8; bytes_per_row];
        read_exact(&mut r, &mut buf, &display, &format!("bit row {i}"))?;
        rows.push(BitVec::from_bytes(l, buf)?);
    }
    Ok(QGramBitMatrix { l, rows })
}
