//! Record encoding: per-q-gram temporary binary strings via seeded k-bit
//! selection, OR-combination into per-record final binary strings, phonetic
//! blocking, and the encoded-blocks wire format sent to the linkage unit.
//!
//! Seeding discipline: both database owners must derive the same temporary
//! string for the same q-gram with no communication. Stage 1 seeds a
//! SplitMix64 stream with `fnv1a_64(gram bytes) XOR global_seed` and picks
//! `k` distinct source positions in [0, l) by partial Fisher-Yates; the
//! temporary string keeps the bit-matrix row's value at the selected
//! positions and is zero elsewhere. When `l > l_f` a second stage seeds a
//! stream with `splitmix64_mix(alphabet position) XOR global_seed`, picks
//! `k` distinct destination positions in [0, l_f), and copies the stage-1
//! selected values across in selection order.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::binarizer::QGramBitMatrix;
use crate::bits::BitVec;
use crate::embedding::{read_exact, read_u32};
use crate::error::{Error, Result};
use crate::prep::{Dataset, QGramAlphabet, QGramIndex};
use crate::rng::{fnv1a_64, select_distinct, splitmix64_mix, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeConfig {
    /// Number of bits selected per q-gram.
    pub k: usize,
    /// Projection width of the bit-matrix rows.
    pub l: usize,
    /// Final binary string length.
    pub l_f: usize,
    pub global_seed: u64,
}

impl EncodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.k && self.k <= self.l_f && self.l_f <= self.l) {
            return Err(Error::Config(format!(
                "encode config requires 1 <= k <= l_f <= l, got k = {}, l_f = {}, l = {}",
                self.k, self.l_f, self.l
            )));
        }
        Ok(())
    }
}

/// Stage-1 source positions for a q-gram: `k` distinct indexes in [0, l).
pub fn stage1_positions(qgram: &str, cfg: &EncodeConfig) -> Vec<usize> {
    let mut rng = SplitMix64::new(fnv1a_64(qgram.as_bytes()) ^ cfg.global_seed);
    select_distinct(&mut rng, cfg.k, cfg.l)
}

/// Stage-2 destination positions for a q-gram: `k` distinct indexes in
/// [0, l_f), seeded from the gram's alphabet position.
pub fn stage2_positions(alphabet_index: usize, cfg: &EncodeConfig) -> Vec<usize> {
    let mut rng = SplitMix64::new(splitmix64_mix(alphabet_index as u64) ^ cfg.global_seed);
    select_distinct(&mut rng, cfg.k, cfg.l_f)
}

/// Keep the row's bits at `selected` positions, zero everywhere else.
pub fn mask_selected(row: &BitVec, selected: &[usize]) -> BitVec {
    let mut t = BitVec::zeros(row.len());
    for &p in selected {
        if row.get(p) {
            t.set(p);
        }
    }
    t
}

/// Scatter the stage-1 selected values into a length-`l_f` string: the j-th
/// destination receives the value at the j-th selected source position.
pub fn scatter_selected(
    masked: &BitVec,
    sources: &[usize],
    destinations: &[usize],
    l_f: usize,
) -> BitVec {
    debug_assert_eq!(sources.len(), destinations.len());
    let mut t = BitVec::zeros(l_f);
    for (&src, &dst) in sources.iter().zip(destinations) {
        if masked.get(src) {
            t.set(dst);
        }
    }
    t
}

/// Temporary binary string of one q-gram.
pub fn gen_temp_binary(
    alphabet: &QGramAlphabet,
    bits: &QGramBitMatrix,
    qgram: &str,
    cfg: &EncodeConfig,
) -> Result<BitVec> {
    cfg.validate()?;
    let index = alphabet.index(qgram).ok_or_else(|| Error::UnknownQGram {
        gram: qgram.to_string(),
        record: None,
    })?;
    let row = bits.row(index);
    if row.len() != cfg.l {
        return Err(Error::Shape {
            context: "bit-matrix row width".into(),
            expected: cfg.l,
            actual: row.len(),
        });
    }
    let sources = stage1_positions(qgram, cfg);
    let masked = mask_selected(row, &sources);
    if cfg.l == cfg.l_f {
        Ok(masked)
    } else {
        let destinations = stage2_positions(index, cfg);
        Ok(scatter_selected(&masked, &sources, &destinations, cfg.l_f))
    }
}

/// Per-q-gram temporary strings covering the whole alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TempBinaryIndex {
    pub l_f: usize,
    pub entries: BTreeMap<String, BitVec>,
}

impl TempBinaryIndex {
    pub fn get(&self, gram: &str) -> Option<&BitVec> {
        self.entries.get(gram)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Apply [`gen_temp_binary`] to every alphabet gram. Entries are built
/// independently and keyed, so the result does not depend on scheduling.
pub fn build_temp_index(
    alphabet: &QGramAlphabet,
    bits: &QGramBitMatrix,
    cfg: &EncodeConfig,
) -> Result<TempBinaryIndex> {
    cfg.validate()?;
    if bits.len() != alphabet.len() {
        return Err(Error::Shape {
            context: "bit-matrix row count".into(),
            expected: alphabet.len(),
            actual: bits.len(),
        });
    }
    let entries = alphabet
        .grams
        .par_iter()
        .map(|gram| Ok((gram.clone(), gen_temp_binary(alphabet, bits, gram, cfg)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(TempBinaryIndex {
        l_f: cfg.l_f,
        entries,
    })
}

/// Bitwise OR of the q-gram strings; an empty list yields all zeros.
pub fn gen_final_binary(qgram_binaries: &[BitVec], l_f: usize) -> Result<BitVec> {
    let mut b = BitVec::zeros(l_f);
    for t in qgram_binaries {
        b.or_assign(t)?;
    }
    Ok(b)
}

/// Record id to final binary string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedDatabase {
    pub l_f: usize,
    pub entries: BTreeMap<String, BitVec>,
}

impl EncodedDatabase {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// OR-combine every record's temporary strings into its final binary string.
pub fn encode_database(
    qgram_index: &QGramIndex,
    temp: &TempBinaryIndex,
    l_f: usize,
) -> Result<EncodedDatabase> {
    if temp.l_f != l_f {
        return Err(Error::LfMismatch {
            expected: l_f,
            actual: temp.l_f,
        });
    }
    let entries = qgram_index
        .entries
        .par_iter()
        .map(|(id, grams)| {
            let mut b = BitVec::zeros(l_f);
            for gram in grams {
                let t = temp.get(gram).ok_or_else(|| Error::UnknownQGram {
                    gram: gram.clone(),
                    record: Some(id.clone()),
                })?;
                b.or_assign(t)?;
            }
            Ok((id.clone(), b))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(EncodedDatabase { l_f, entries })
}

/// How records are bucketed before transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockingScheme {
    /// One bucket holding everything.
    None,
    /// Soundex of the value's leading alphabetic run.
    SoundexFull,
    /// Soundex of the first n characters.
    SoundexPrefix(usize),
}

impl fmt::Display for BlockingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockingScheme::None => f.write_str("none"),
            BlockingScheme::SoundexFull => f.write_str("soundex_full"),
            BlockingScheme::SoundexPrefix(n) => write!(f, "soundex_prefix:{n}"),
        }
    }
}

impl FromStr for BlockingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(BlockingScheme::None);
        }
        if s == "soundex_full" {
            return Ok(BlockingScheme::SoundexFull);
        }
        if let Some(n) = s.strip_prefix("soundex_prefix:") {
            let n: usize = n
                .parse()
                .map_err(|_| Error::Config(format!("bad soundex prefix length in {s:?}")))?;
            if n == 0 {
                return Err(Error::Config("soundex prefix length must be >= 1".into()));
            }
            return Ok(BlockingScheme::SoundexPrefix(n));
        }
        Err(Error::Config(format!(
            "unknown blocking scheme {s:?} (expected none, soundex_full, or soundex_prefix:N)"
        )))
    }
}

/// Sentinel bucket for values without any alphabetic character.
const SOUNDEX_SENTINEL: &str = "Z000";

fn soundex_digit(c: char) -> Option<char> {
    match c {
        'b' | 'f' | 'p' | 'v' => Some('1'),
        'c' | 'g' | 'j' | 'k' | 'q' | 's' | 'x' | 'z' => Some('2'),
        'd' | 't' => Some('3'),
        'l' => Some('4'),
        'm' | 'n' => Some('5'),
        'r' => Some('6'),
        _ => None,
    }
}

/// American Soundex of the leading alphabetic run of `value` (assumed
/// lowercase): first letter uppercased plus three digits, zero padded.
/// 'h' and 'w' are transparent (consonants separated only by them code
/// once); vowels separate. Values with no alphabetic lead yield the
/// "Z000" sentinel.
fn soundex(value: &str) -> String {
    let run: Vec<char> = value
        .chars()
        .take_while(|c| c.is_ascii_lowercase())
        .collect();
    let Some(&first) = run.first() else {
        return SOUNDEX_SENTINEL.to_string();
    };
    let mut code = String::new();
    code.push(first.to_ascii_uppercase());
    let mut last_digit = soundex_digit(first);
    for &c in &run[1..] {
        if c == 'h' || c == 'w' {
            continue;
        }
        match soundex_digit(c) {
            Some(d) => {
                if Some(d) != last_digit {
                    code.push(d);
                    if code.len() == 4 {
                        break;
                    }
                }
                last_digit = Some(d);
            }
            None => last_digit = None, // vowel: breaks the doublet rule
        }
    }
    while code.len() < 4 {
        code.push('0');
    }
    code
}

/// Blocking key of a normalized value under the given scheme.
pub fn blocking_key(value: &str, scheme: BlockingScheme) -> String {
    match scheme {
        BlockingScheme::None => String::new(),
        BlockingScheme::SoundexFull => soundex(value),
        BlockingScheme::SoundexPrefix(n) => {
            let prefix: String = value.chars().take(n).collect();
            soundex(&prefix)
        }
    }
}

/// Encoded records grouped by blocking key. Bucket lists are sorted by
/// record id so serialization is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blocks {
    pub l_f: usize,
    pub scheme: BlockingScheme,
    pub buckets: BTreeMap<String, Vec<(String, BitVec)>>,
}

impl Blocks {
    pub fn total_records(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }
}

/// Bucket each encoded record by the blocking key of its plaintext value.
pub fn gen_blocks(
    encoded: &EncodedDatabase,
    dataset: &Dataset,
    scheme: BlockingScheme,
) -> Result<Blocks> {
    let values = dataset.values_by_id();
    if values.len() != encoded.len() {
        return Err(Error::Inconsistent(format!(
            "encoded database has {} records, dataset has {}",
            encoded.len(),
            values.len()
        )));
    }
    let mut buckets: BTreeMap<String, Vec<(String, BitVec)>> = BTreeMap::new();
    for (id, bits) in &encoded.entries {
        let value = values.get(id.as_str()).ok_or_else(|| {
            Error::Inconsistent(format!("record {id:?} is encoded but not in the dataset"))
        })?;
        buckets
            .entry(blocking_key(value, scheme))
            .or_default()
            .push((id.clone(), bits.clone()));
    }
    // BTreeMap iteration arrives id-sorted, so bucket lists already are.
    Ok(Blocks {
        l_f: encoded.l_f,
        scheme,
        buckets,
    })
}

const BLOCKS_MAGIC: &[u8] = b"PPRLENC1";

fn scheme_tag(scheme: BlockingScheme) -> u32 {
    match scheme {
        BlockingScheme::None => 0,
        BlockingScheme::SoundexFull => 1,
        // Prefix length in the upper 16 bits.
        BlockingScheme::SoundexPrefix(n) => 2 | ((n as u32) << 16),
    }
}

fn scheme_from_tag(tag: u32) -> Result<BlockingScheme> {
    match tag & 0xffff {
        0 => Ok(BlockingScheme::None),
        1 => Ok(BlockingScheme::SoundexFull),
        2 => Ok(BlockingScheme::SoundexPrefix((tag >> 16) as usize)),
        other => Err(Error::Inconsistent(format!(
            "unknown blocking scheme tag {other}"
        ))),
    }
}

/// Write the encoded-blocks wire file: magic "PPRLENC1"; header l_f, k,
/// scheme tag, bucket count (little-endian u32); per bucket the key and its
/// records; per record the id and ceil(l_f/8) packed bit bytes.
pub fn serialize_blocks(blocks: &Blocks, k: usize, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(BLOCKS_MAGIC)?;
    w.write_all(&(blocks.l_f as u32).to_le_bytes())?;
    w.write_all(&(k as u32).to_le_bytes())?;
    w.write_all(&scheme_tag(blocks.scheme).to_le_bytes())?;
    w.write_all(&(blocks.buckets.len() as u32).to_le_bytes())?;
    for (key, records) in &blocks.buckets {
        w.write_all(&(key.len() as u32).to_le_bytes())?;
        w.write_all(key.as_bytes())?;
        w.write_all(&(records.len() as u32).to_le_bytes())?;
        for (id, bits) in records {
            if bits.len() != blocks.l_f {
                return Err(Error::LfMismatch {
                    expected: blocks.l_f,
                    actual: bits.len(),
                });
            }
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            w.write_all(bits.as_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read an encoded-blocks wire file, returning the blocks and the k recorded
/// in the header.
pub fn deserialize_blocks(path: &Path) -> Result<(Blocks, usize)> {
    let mut r = BufReader::new(File::open(path)?);
    let display = path.display().to_string();
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, &display, "magic")?;
    if magic != BLOCKS_MAGIC {
        return Err(Error::BadMagic {
            path: display,
            expected: String::from_utf8_lossy(BLOCKS_MAGIC).into_owned(),
        });
    }
    let l_f = read_u32(&mut r, &display, "l_f")? as usize;
    let k = read_u32(&mut r, &display, "k")? as usize;
    let scheme = scheme_from_tag(read_u32(&mut r, &display, "scheme tag")?)?;
    let bucket_count = read_u32(&mut r, &display, "bucket count")? as usize;
    let bytes_per_record = l_f.div_ceil(8);

    let mut buckets = BTreeMap::new();
    for _ in 0..bucket_count {
        let key = read_string(&mut r, &display, "bucket key")?;
        let record_count = read_u32(&mut r, &display, "record count")? as usize;
        let mut records = Vec::with_capacity(record_count);
        for _ in 0..record_count {
            let id = read_string(&mut r, &display, "record id")?;
            let mut bytes = vec![0u8; bytes_per_record];
            read_exact(&mut r, &mut bytes, &display, "record bits")?;
            records.push((id, BitVec::from_bytes(l_f, bytes)?));
        }
        buckets.insert(key, records);
    }
    Ok((
        Blocks {
            l_f,
            scheme,
            buckets,
        },
        k,
    ))
}

fn read_string(r: &mut impl std::io::Read, path: &str, context: &str) -> Result<String> {
    let len = read_u32(r, path, context)? as usize;
    let mut buf = vec![0u8; len];
    read_exact(r, &mut buf, path, context)?;
    String::from_utf8(buf)
        .map_err(|_| Error::Inconsistent(format!("non-UTF-8 {context} in {path}")))
}
