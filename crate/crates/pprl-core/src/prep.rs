//! Data preparation: CSV ingestion, value normalization, q-gram alphabets,
//! per-record q-gram lists, and dataset corruption for evaluation runs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::rng::{fnv1a_64, SplitMix64};

/// Character class a database is normalized to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharClass {
    Letters,
    Digits,
    /// Letters followed by digits, 36 characters total.
    Mix,
}

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
const DIGITS: &[u8] = b"0123456789";

impl CharClass {
    /// Number of characters in the class (l_c).
    pub fn size(self) -> usize {
        match self {
            CharClass::Letters => 26,
            CharClass::Digits => 10,
            CharClass::Mix => 36,
        }
    }

    /// Canonical enumeration: 'a'..'z', then '0'..'9' for `Mix`.
    pub fn char_at(self, i: usize) -> char {
        debug_assert!(i < self.size());
        let b = match self {
            CharClass::Letters => LETTERS[i],
            CharClass::Digits => DIGITS[i],
            CharClass::Mix => {
                if i < 26 {
                    LETTERS[i]
                } else {
                    DIGITS[i - 26]
                }
            }
        };
        b as char
    }

    /// Position of `c` in the canonical enumeration, if it belongs.
    pub fn index_of(self, c: char) -> Option<usize> {
        match self {
            CharClass::Letters => c.is_ascii_lowercase().then(|| c as usize - 'a' as usize),
            CharClass::Digits => c.is_ascii_digit().then(|| c as usize - '0' as usize),
            CharClass::Mix => {
                if c.is_ascii_lowercase() {
                    Some(c as usize - 'a' as usize)
                } else if c.is_ascii_digit() {
                    Some(26 + c as usize - '0' as usize)
                } else {
                    None
                }
            }
        }
    }

    pub fn contains(self, c: char) -> bool {
        self.index_of(c).is_some()
    }
}

impl fmt::Display for CharClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CharClass::Letters => "letters",
            CharClass::Digits => "digits",
            CharClass::Mix => "mix",
        })
    }
}

impl FromStr for CharClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "letters" => Ok(CharClass::Letters),
            "digits" => Ok(CharClass::Digits),
            "mix" => Ok(CharClass::Mix),
            other => Err(Error::Config(format!(
                "unknown character class {other:?} (expected letters, digits, or mix)"
            ))),
        }
    }
}

/// One record: opaque identifier plus its normalized linkage value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    pub value: String,
}

/// An ordered collection of records with unique ids, values already
/// normalized to one character class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<Record>,
    pub source_name: String,
    pub linkage_columns: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Lookup table from record id to value.
    pub fn values_by_id(&self) -> HashMap<&str, &str> {
        self.records
            .iter()
            .map(|r| (r.id.as_str(), r.value.as_str()))
            .collect()
    }
}

/// Options for CSV ingestion and multi-attribute concatenation.
#[derive(Debug, Clone)]
pub struct CsvOptions {
    /// Field delimiter, comma by default.
    pub delimiter: u8,
    /// Separator inserted between concatenated linkage attributes. Empty by
    /// default; any characters outside the class are dropped by
    /// normalization anyway, so a non-empty separator only matters for
    /// in-class characters.
    pub separator: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            separator: String::new(),
        }
    }
}

/// Lowercase `raw` and drop every character outside `char_class`, preserving
/// the order of the survivors.
pub fn normalize_value(raw: &str, char_class: CharClass) -> String {
    raw.chars()
        .flat_map(|c| c.to_lowercase())
        .filter(|&c| char_class.contains(c))
        .collect()
}

/// Load a CSV file into a [`Dataset`]: one record per data row, the value
/// being the normalized concatenation of the linkage columns in order.
pub fn load_csv(
    path: &Path,
    id_column: &str,
    linkage_columns: &[String],
    char_class: CharClass,
    opts: &CsvOptions,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
                path: path.display().to_string(),
            })
    };
    let id_idx = col_index(id_column)?;
    let value_idxs: Vec<usize> = linkage_columns
        .iter()
        .map(|c| col_index(c))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut seen = HashMap::new();
    for (row, result) in reader.records().enumerate() {
        let row_fields = result?;
        let id = row_fields.get(id_idx).unwrap_or("").to_string();
        if id.is_empty() {
            return Err(Error::EmptyId { row: row + 2 });
        }
        if seen.insert(id.clone(), row).is_some() {
            return Err(Error::DuplicateId { id });
        }
        let raw = value_idxs
            .iter()
            .map(|&i| row_fields.get(i).unwrap_or(""))
            .collect::<Vec<_>>()
            .join(&opts.separator);
        records.push(Record {
            id,
            value: normalize_value(&raw, char_class),
        });
    }

    Ok(Dataset {
        records,
        source_name: path.display().to_string(),
        linkage_columns: linkage_columns.to_vec(),
    })
}

/// The ordered list of all possible q-grams for a character class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QGramAlphabet {
    pub q: usize,
    pub char_class: CharClass,
    pub grams: Vec<String>,
    index_of: HashMap<String, usize>,
}

impl QGramAlphabet {
    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn index(&self, gram: &str) -> Option<usize> {
        self.index_of.get(gram).copied()
    }

    pub fn contains(&self, gram: &str) -> bool {
        self.index_of.contains_key(gram)
    }
}

/// Enumerate all (l_c)^q possible q-grams in canonical order: lexicographic
/// over the class enumeration, so "aa", "ab", ..., "zz" for letters.
pub fn gen_all_possible_qgrams(char_class: CharClass, q: usize) -> Result<QGramAlphabet> {
    if q == 0 {
        return Err(Error::Config("q-gram length must be at least 1".into()));
    }
    let lc = char_class.size();
    let count = lc
        .checked_pow(q as u32)
        .filter(|&n| n <= 1 << 26)
        .ok_or_else(|| {
            Error::Config(format!(
                "alphabet of {lc}^{q} q-grams is too large to enumerate"
            ))
        })?;

    let mut grams = Vec::with_capacity(count);
    let mut index_of = HashMap::with_capacity(count);
    for idx in 0..count {
        let mut gram = String::with_capacity(q);
        let mut rem = idx;
        let mut digits = vec![0usize; q];
        for slot in (0..q).rev() {
            digits[slot] = rem % lc;
            rem /= lc;
        }
        for d in digits {
            gram.push(char_class.char_at(d));
        }
        index_of.insert(gram.clone(), idx);
        grams.push(gram);
    }

    Ok(QGramAlphabet {
        q,
        char_class,
        grams,
        index_of,
    })
}

/// Sliding window of width `q`, stride 1, no padding. Values shorter than
/// `q` yield the empty list.
pub fn gen_qgram_list(value: &str, q: usize) -> Vec<String> {
    debug_assert!(q >= 1);
    let chars: Vec<char> = value.chars().collect();
    if chars.len() < q {
        return Vec::new();
    }
    chars.windows(q).map(|w| w.iter().collect()).collect()
}

/// Per-record q-gram lists, keyed by record id. Extraction order and
/// duplicates are preserved.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QGramIndex {
    pub entries: BTreeMap<String, Vec<String>>,
}

impl QGramIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[String]> {
        self.entries.get(id).map(|v| v.as_slice())
    }
}

/// Generate the full q-gram alphabet and the per-record q-gram index for a
/// dataset.
pub fn prepare_database(
    dataset: &Dataset,
    q: usize,
    char_class: CharClass,
) -> Result<(QGramAlphabet, QGramIndex)> {
    if dataset.is_empty() {
        return Err(Error::Config(format!(
            "dataset {:?} has no records",
            dataset.source_name
        )));
    }
    let alphabet = gen_all_possible_qgrams(char_class, q)?;
    let mut index = QGramIndex::default();
    for record in &dataset.records {
        let grams = gen_qgram_list(&record.value, q);
        if grams.is_empty() {
            warn!(
                "record {:?} has value {:?} shorter than q = {q}; it encodes to all zeros",
                record.id, record.value
            );
        }
        index.entries.insert(record.id.clone(), grams);
    }
    Ok((alphabet, index))
}

/// Produce a corrupted copy of `dataset`: each record receives
/// `max(1, round(rate * |value|))` single-character edits (substitution,
/// insertion, or deletion chosen uniformly, replacement characters drawn from
/// the class). The edit stream for a record is seeded by
/// `fnv1a_64(record id) XOR seed`, so the output depends only on
/// (dataset, rate, seed).
pub fn corrupt_dataset(
    dataset: &Dataset,
    rate: f64,
    seed: u64,
    char_class: CharClass,
) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Config(format!(
            "corruption rate {rate} outside [0, 1]"
        )));
    }
    let lc = char_class.size() as u64;
    let mut records = Vec::with_capacity(dataset.records.len());
    for record in &dataset.records {
        if record.value.is_empty() {
            warn!(
                "record {:?} has an empty value; left uncorrupted",
                record.id
            );
            records.push(record.clone());
            continue;
        }
        let mut rng = SplitMix64::new(fnv1a_64(record.id.as_bytes()) ^ seed);
        let mut chars: Vec<char> = record.value.chars().collect();
        let n_edits = ((rate * chars.len() as f64).round() as usize).max(1);
        for _ in 0..n_edits {
            // A deletion can empty the value mid-stream; only insertion
            // remains applicable then.
            let op = if chars.is_empty() {
                1
            } else {
                rng.next_below(3)
            };
            match op {
                0 => {
                    let pos = rng.next_below(chars.len() as u64) as usize;
                    chars[pos] = char_class.char_at(rng.next_below(lc) as usize);
                }
                1 => {
                    let pos = rng.next_below(chars.len() as u64 + 1) as usize;
                    chars.insert(pos, char_class.char_at(rng.next_below(lc) as usize));
                }
                _ => {
                    let pos = rng.next_below(chars.len() as u64) as usize;
                    chars.remove(pos);
                }
            }
        }
        records.push(Record {
            id: record.id.clone(),
            value: chars.into_iter().collect(),
        });
    }
    Ok(Dataset {
        records,
        source_name: format!("{}:corrupted", dataset.source_name),
        linkage_columns: dataset.linkage_columns.clone(),
    })
}
