//! Bloom filter q-gram encoding, the baseline the learned encoder is
//! compared against. Positions are derived by double hashing: for gram `g`
//! and hash number `i`, position = (h1(g) + i * h2(g)) mod l_bf with
//! h1 = fnv1a_64(g) XOR seed and h2 = fnv1a_64 under the alternate offset
//! basis, forced odd so the probe sequence cycles the whole filter even for
//! power-of-two lengths.

use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::bits::BitVec;
use crate::encoder::EncodedDatabase;
use crate::error::{Error, Result};
use crate::prep::QGramIndex;
use crate::rng::{fnv1a_64, fnv1a_64_alt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BloomConfig {
    /// Filter length in bits.
    pub l_bf: usize,
    /// Number of hash functions per q-gram.
    pub k_hash: usize,
    pub seed: u64,
}

impl BloomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_bf < 1 || self.k_hash < 1 {
            return Err(Error::Config(
                "bloom config requires l_bf >= 1 and k_hash >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// The bit positions a single q-gram sets.
pub fn bf_positions(gram: &str, cfg: &BloomConfig) -> Vec<usize> {
    let h1 = fnv1a_64(gram.as_bytes()) ^ cfg.seed;
    let h2 = fnv1a_64_alt(gram.as_bytes()) | 1;
    (0..cfg.k_hash as u64)
        .map(|i| (h1.wrapping_add(i.wrapping_mul(h2)) % cfg.l_bf as u64) as usize)
        .collect()
}

/// Encode a q-gram list into a Bloom filter. Duplicate grams set the same
/// bits, so insertion is idempotent.
pub fn bf_encode(qgrams: &[String], cfg: &BloomConfig) -> Result<BitVec> {
    cfg.validate()?;
    let mut filter = BitVec::zeros(cfg.l_bf);
    for gram in qgrams {
        for p in bf_positions(gram, cfg) {
            filter.set(p);
        }
    }
    Ok(filter)
}

/// One filter per record, interchangeable with the learned encoder's
/// [`EncodedDatabase`].
pub fn bf_encode_database(qgram_index: &QGramIndex, cfg: &BloomConfig) -> Result<EncodedDatabase> {
    cfg.validate()?;
    let entries = qgram_index
        .entries
        .par_iter()
        .map(|(id, grams)| Ok((id.clone(), bf_encode(grams, cfg)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(EncodedDatabase {
        l_f: cfg.l_bf,
        entries,
    })
}
