//! Privacy-preserving record linkage toolkit.
//!
//! Two database owners normalize their records, extract q-grams, and encode
//! each record into a fixed-length binary string — either through the
//! q-gram embedding pipeline (CBOW embeddings, learned sign binarization,
//! seeded k-bit selection, bitwise OR) or through the classic Bloom filter
//! baseline. A linkage unit then compares the encoded databases block by
//! block with the Dice coefficient and classifies matches against a
//! similarity threshold.
//!
//! The crate is organized along the protocol stages:
//!
//! - [`prep`]: CSV ingestion, normalization, q-gram alphabets and indexes,
//!   dataset corruption for evaluation.
//! - [`embedding`]: CBOW training over the alphabet and embedding lookup.
//! - [`binarizer`]: the projection autoencoder that turns embeddings into
//!   per-q-gram bit rows.
//! - [`encoder`]: temporary binary strings, final record strings, phonetic
//!   blocking, and the encoded-blocks wire format.
//! - [`bloom`]: the Bloom filter baseline encoder.
//! - [`linkage`]: blocked Dice comparison, ground truth, and evaluation
//!   metrics.
//!
//! Everything downstream of the agreed parameters is deterministic: all
//! randomness flows through [`rng`]'s SplitMix64/FNV-1a primitives, so two
//! parties running the same configuration derive identical encodings.

pub mod binarizer;
pub mod bits;
pub mod bloom;
pub mod embedding;
pub mod encoder;
pub mod error;
pub mod linkage;
pub mod prep;
pub mod rng;

pub use bits::BitVec;
pub use error::{Error, Result};
