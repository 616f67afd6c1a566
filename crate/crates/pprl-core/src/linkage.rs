//! The linkage-unit comparator: intersects blocks from two encoded
//! databases, scores candidate pairs with the Dice coefficient over bit
//! vectors, classifies matches against a threshold, and evaluates the result
//! against ground truth.
//!
//! Candidate enumeration is deterministic: common blocking keys in sorted
//! order, then record ids in sorted order within each block, truncated at
//! `max_pairs` when a cap is set. Uncapped runs fan blocks out to parallel
//! workers and merge by key, which yields the same match set as the
//! sequential order.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::warn;
use rayon::prelude::*;

use crate::bits::BitVec;
use crate::encoder::Blocks;
use crate::error::{Error, Result};
use crate::prep::{gen_qgram_list, Dataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    /// Similarity threshold s_t in [0, 1]; ties are matches.
    pub threshold: f64,
    /// Maximum number of pair comparisons, 0 for unlimited.
    pub max_pairs: usize,
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "similarity threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Matched record pairs with their similarities, plus comparison counters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub matches: BTreeMap<(String, String), f64>,
    pub pairs_compared: usize,
    pub elapsed_seconds: f64,
}

/// Dice similarity over bit vectors: 2 * |a AND b| / (|a| + |b|), where |.|
/// counts one bits. Defined as 0.0 when both vectors are all zero.
pub fn dice_bits(a: &BitVec, b: &BitVec) -> Result<f64> {
    let common = a.and_count(b)?;
    let total = a.count_ones() + b.count_ones();
    if total == 0 {
        warn!("dice of two all-zero vectors; scoring 0.0");
        return Ok(0.0);
    }
    Ok(2.0 * common as f64 / total as f64)
}

/// Keys present in both block sets, sorted.
fn common_keys<'a>(a: &'a Blocks, b: &'a Blocks) -> Vec<&'a str> {
    a.buckets
        .keys()
        .filter(|k| b.buckets.contains_key(*k))
        .map(String::as_str)
        .collect()
}

/// Compare all cross pairs within the common blocks and record those with
/// similarity at or above the threshold.
pub fn link(blocks_a: &Blocks, blocks_b: &Blocks, cfg: &LinkConfig) -> Result<LinkResult> {
    cfg.validate()?;
    if blocks_a.l_f != blocks_b.l_f {
        return Err(Error::LfMismatch {
            expected: blocks_a.l_f,
            actual: blocks_b.l_f,
        });
    }
    let start = Instant::now();
    let keys = common_keys(blocks_a, blocks_b);

    type BlockMatches = (Vec<((String, String), f64)>, usize);
    let (matches, pairs_compared) = if cfg.max_pairs == 0 {
        // No cap: blocks are independent, fan them out and merge by key.
        let per_block: Vec<Result<BlockMatches>> = keys
            .par_iter()
            .map(|key| {
                let mut found = Vec::new();
                let mut compared = 0usize;
                for (id_a, bits_a) in &blocks_a.buckets[*key] {
                    for (id_b, bits_b) in &blocks_b.buckets[*key] {
                        let sim = dice_bits(bits_a, bits_b)?;
                        compared += 1;
                        if sim >= cfg.threshold {
                            found.push(((id_a.clone(), id_b.clone()), sim));
                        }
                    }
                }
                Ok((found, compared))
            })
            .collect();
        let mut matches = BTreeMap::new();
        let mut compared = 0usize;
        for block in per_block {
            let (found, n) = block?;
            compared += n;
            matches.extend(found);
        }
        (matches, compared)
    } else {
        let mut matches = BTreeMap::new();
        let mut compared = 0usize;
        'outer: for key in keys {
            for (id_a, bits_a) in &blocks_a.buckets[key] {
                for (id_b, bits_b) in &blocks_b.buckets[key] {
                    if compared >= cfg.max_pairs {
                        break 'outer;
                    }
                    let sim = dice_bits(bits_a, bits_b)?;
                    compared += 1;
                    if sim >= cfg.threshold {
                        matches.insert((id_a.clone(), id_b.clone()), sim);
                    }
                }
            }
        }
        (matches, compared)
    };

    Ok(LinkResult {
        matches,
        pairs_compared,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// The candidate pairs [`link`] compares, in its deterministic order and
/// under the same cap. Used to build ground truth over exactly the compared
/// universe.
pub fn candidate_pairs(
    blocks_a: &Blocks,
    blocks_b: &Blocks,
    max_pairs: usize,
) -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    'outer: for key in common_keys(blocks_a, blocks_b) {
        for (id_a, _) in &blocks_a.buckets[key] {
            for (id_b, _) in &blocks_b.buckets[key] {
                if max_pairs != 0 && pairs.len() >= max_pairs {
                    break 'outer;
                }
                pairs.push((id_a.clone(), id_b.clone()));
            }
        }
    }
    pairs
}

/// Dice similarity over q-gram sets (duplicates collapsed); 0.0 when both
/// sets are empty.
pub fn plaintext_dice(qgrams_a: &[String], qgrams_b: &[String]) -> f64 {
    let a: HashSet<&str> = qgrams_a.iter().map(String::as_str).collect();
    let b: HashSet<&str> = qgrams_b.iter().map(String::as_str).collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 0.0;
    }
    let common = a.intersection(&b).count();
    2.0 * common as f64 / total as f64
}

/// How true matches are decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruthMode {
    /// A candidate pair is a true match iff the Dice similarity of the two
    /// plaintext q-gram sets reaches the threshold (use the linking s_t).
    PlaintextDice(f64),
    /// Records with equal ids are true matches; for corrupted-copy
    /// experiments.
    SharedId,
}

/// Ground-truth match pairs. `candidates` must be the pair universe the
/// linker compares (see [`candidate_pairs`]); plaintext-Dice truth is
/// evaluated over exactly those pairs, while shared-id truth is the full id
/// intersection of the two datasets.
pub fn ground_truth(
    dataset_a: &Dataset,
    dataset_b: &Dataset,
    q: usize,
    mode: TruthMode,
    candidates: &[(String, String)],
) -> BTreeSet<(String, String)> {
    match mode {
        TruthMode::SharedId => {
            let ids_b: HashSet<&str> = dataset_b.records.iter().map(|r| r.id.as_str()).collect();
            dataset_a
                .records
                .iter()
                .filter(|r| ids_b.contains(r.id.as_str()))
                .map(|r| (r.id.clone(), r.id.clone()))
                .collect()
        }
        TruthMode::PlaintextDice(threshold) => {
            let grams_of = |dataset: &Dataset| -> HashMap<String, Vec<String>> {
                dataset
                    .records
                    .iter()
                    .map(|r| (r.id.clone(), gen_qgram_list(&r.value, q)))
                    .collect()
            };
            let grams_a = grams_of(dataset_a);
            let grams_b = grams_of(dataset_b);
            candidates
                .iter()
                .filter(
                    |(id_a, id_b)| match (grams_a.get(id_a), grams_b.get(id_b)) {
                        (Some(ga), Some(gb)) => plaintext_dice(ga, gb) >= threshold,
                        _ => false,
                    },
                )
                .cloned()
                .collect()
        }
    }
}

/// Confusion counts and derived ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
}

/// Score predicted matches against truth. `universe` is the number of
/// compared pairs; true negatives are counted relative to it.
pub fn evaluate(
    result: &LinkResult,
    truth: &BTreeSet<(String, String)>,
    universe: usize,
) -> Result<Metrics> {
    let tp = result
        .matches
        .keys()
        .filter(|pair| truth.contains(*pair))
        .count();
    let fp = result.matches.len() - tp;
    let fn_count = truth.len() - tp;
    if tp + fp + fn_count > universe {
        return Err(Error::Inconsistent(format!(
            "tp + fp + fn = {} exceeds the compared-pair universe {universe}",
            tp + fp + fn_count
        )));
    }
    let tn = universe - tp - fp - fn_count;

    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_count);
    let accuracy = ratio(tp + tn, universe);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_count,
        true_negatives: tn,
        precision,
        recall,
        accuracy,
        f1,
    })
}

/// Write matches as CSV `id_a,id_b,sim` with similarities to six decimal
/// places, rows sorted by (id_a, id_b).
pub fn write_matches_csv(result: &LinkResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id_a", "id_b", "sim"])?;
    for ((id_a, id_b), sim) in &result.matches {
        w.write_record([id_a.as_str(), id_b.as_str(), &format!("{sim:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a matches CSV produced by [`write_matches_csv`].
pub fn read_matches_csv(path: &Path) -> Result<BTreeMap<(String, String), f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut matches = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let sim: f64 =
            record.get(2).unwrap_or("").parse().map_err(|_| {
                Error::Inconsistent(format!("bad similarity in {}", path.display()))
            })?;
        matches.insert(
            (
                record.get(0).unwrap_or("").to_string(),
                record.get(1).unwrap_or("").to_string(),
            ),
            sim,
        );
    }
    Ok(matches)
}

/// Write metrics as a single-row CSV of counts and ratios.
pub fn write_metrics_csv(metrics: &Metrics, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "tp,fp,fn,tn,precision,recall,accuracy,f1")?;
    writeln!(
        w,
        "{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
        metrics.true_positives,
        metrics.false_positives,
        metrics.false_negatives,
        metrics.true_negatives,
        metrics.precision,
        metrics.recall,
        metrics.accuracy,
        metrics.f1
    )?;
    w.flush()?;
    Ok(())
}
