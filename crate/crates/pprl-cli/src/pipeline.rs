//! The two pipeline roles of the protocol: a database owner preparing and
//! encoding its records into an encoded-blocks file, and a linkage unit
//! comparing two such files. `run_demo` wires both together over a synthetic
//! dataset and its corrupted copy.
//!
//! All stage randomness fans out from the one master seed in the config:
//! stage seed i is the (i + 1)-th output of a SplitMix64 stream seeded with
//! the master seed. Two owners sharing a config therefore derive identical
//! alphabets, models, bit matrices, and temporary indexes.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::info;

use pprl_core::binarizer::{binarize_alphabet, init_binarizer, train_binarizer};
use pprl_core::bloom::bf_encode_database;
use pprl_core::embedding::{embed_all, train_cbow, CorpusMode};
use pprl_core::encoder::{
    build_temp_index, deserialize_blocks, encode_database, gen_blocks, serialize_blocks, Blocks,
};
use pprl_core::error::{Error, Result};
use pprl_core::linkage::{
    candidate_pairs, evaluate, ground_truth, link, write_matches_csv, write_metrics_csv,
    LinkConfig, LinkResult, Metrics, TruthMode,
};
use pprl_core::prep::{corrupt_dataset, load_csv, prepare_database, Dataset};
use pprl_core::rng::SplitMix64;

use crate::config::{EncoderKind, PipelineConfig};
use crate::synth::synthetic_first_names;

/// Named positions in the master seed fan-out.
#[derive(Debug, Clone, Copy)]
pub enum Stage {
    Corrupt = 0,
    Embed = 1,
    Binarize = 2,
    Encode = 3,
    Bloom = 4,
    Synthetic = 5,
}

/// Stage seed i is the (i + 1)-th output of SplitMix64(master).
pub fn stage_seed(master: u64, stage: Stage) -> u64 {
    let mut rng = SplitMix64::new(master);
    let mut seed = 0;
    for _ in 0..=(stage as usize) {
        seed = rng.next_u64();
    }
    seed
}

/// Wall-clock seconds per pipeline stage.
#[derive(Debug, Clone)]
pub struct StageTiming {
    pub name: &'static str,
    pub seconds: f64,
}

/// Outcome of one database-owner run.
#[derive(Debug, Clone)]
pub struct DoRunReport {
    pub records: usize,
    pub l_f: usize,
    pub timings: Vec<StageTiming>,
    pub total_seconds: f64,
}

fn timed<T>(
    timings: &mut Vec<StageTiming>,
    name: &'static str,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    let seconds = start.elapsed().as_secs_f64();
    println!("[do] {name}: {seconds:.3} s");
    timings.push(StageTiming { name, seconds });
    Ok(out)
}

/// Full database-owner pipeline: load and prepare the dataset, train the
/// encoder of choice, encode every record, block, and write the wire file.
pub fn run_do_pipeline(
    cfg: &PipelineConfig,
    dataset_path: &Path,
    out_path: &Path,
) -> Result<DoRunReport> {
    cfg.validate()?;
    let total_start = Instant::now();
    let mut timings = Vec::new();

    let dataset = timed(&mut timings, "load", || {
        load_csv(
            dataset_path,
            &cfg.id_col,
            &cfg.cols,
            cfg.char_class,
            &cfg.csv_options(),
        )
    })?;
    let report = encode_dataset_to_file(cfg, &dataset, out_path, &mut timings)?;
    Ok(DoRunReport {
        total_seconds: total_start.elapsed().as_secs_f64(),
        ..report
    })
}

/// The DO pipeline from an already-loaded dataset; shared by the CSV entry
/// point and the demo.
pub fn encode_dataset_to_file(
    cfg: &PipelineConfig,
    dataset: &Dataset,
    out_path: &Path,
    timings: &mut Vec<StageTiming>,
) -> Result<DoRunReport> {
    let (alphabet, qgram_index) = timed(timings, "prepare", || {
        prepare_database(dataset, cfg.q, cfg.char_class)
    })?;

    let (encoded, k_for_header) = match cfg.encoder {
        EncoderKind::EmbBin => {
            let model = timed(timings, "train-embed", || {
                let mut cbow = cfg.cbow_config();
                cbow.seed = stage_seed(cfg.seed, Stage::Embed);
                let records =
                    matches!(cfg.corpus_mode, CorpusMode::RecordLists).then_some(&qgram_index);
                train_cbow(&alphabet, records, &cbow)
            })?;
            let bits = timed(timings, "binarize", || {
                let table = embed_all(&model, &alphabet)?;
                let mut bin = cfg.binarizer_config();
                bin.seed = stage_seed(cfg.seed, Stage::Binarize);
                let state = init_binarizer(bin.l, table.dim(), bin.seed);
                let state = train_binarizer(state, &table, &bin)?;
                binarize_alphabet(&state, &table)
            })?;
            let encoded = timed(timings, "encode", || {
                let mut enc = cfg.encode_config();
                enc.global_seed = stage_seed(cfg.seed, Stage::Encode);
                let temp = build_temp_index(&alphabet, &bits, &enc)?;
                encode_database(&qgram_index, &temp, enc.l_f)
            })?;
            (encoded, cfg.k)
        }
        EncoderKind::Bloom => {
            let encoded = timed(timings, "encode-bf", || {
                let mut bloom = cfg.bloom_config();
                bloom.seed = stage_seed(cfg.seed, Stage::Bloom);
                bf_encode_database(&qgram_index, &bloom)
            })?;
            (encoded, cfg.bloom_k_hash)
        }
    };

    let l_f = encoded.l_f;
    let records = encoded.len();
    timed(timings, "block+write", || {
        let blocks = gen_blocks(&encoded, dataset, cfg.block_scheme)?;
        serialize_blocks(&blocks, k_for_header, out_path)
    })?;

    Ok(DoRunReport {
        records,
        l_f,
        timings: timings.clone(),
        total_seconds: timings.iter().map(|t| t.seconds).sum(),
    })
}

/// Ground-truth inputs for the evaluation half of the LU run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthSpec {
    /// Plaintext Dice at the linking threshold over the compared pairs.
    Dice,
    /// Shared record ids.
    Id,
}

/// Outcome of one linkage-unit run.
#[derive(Debug, Clone)]
pub struct LuRunReport {
    pub matches: usize,
    pub pairs_compared: usize,
    pub link_seconds: f64,
    pub metrics: Option<Metrics>,
}

/// Linkage-unit pipeline: read both encoded-blocks files, link, write the
/// matches CSV, and — when the plaintext datasets are supplied — evaluate
/// against ground truth and write the metrics CSV.
pub fn run_lu_pipeline(
    left_path: &Path,
    right_path: &Path,
    cfg: &PipelineConfig,
    matches_out: &Path,
    truth: Option<(&Dataset, &Dataset, TruthSpec)>,
    metrics_out: Option<&Path>,
) -> Result<LuRunReport> {
    let (blocks_a, _) = deserialize_blocks(left_path)?;
    let (blocks_b, _) = deserialize_blocks(right_path)?;
    if blocks_a.l_f != blocks_b.l_f {
        return Err(Error::LfMismatch {
            expected: blocks_a.l_f,
            actual: blocks_b.l_f,
        });
    }

    let link_cfg = LinkConfig {
        threshold: cfg.threshold,
        max_pairs: cfg.max_pairs,
    };
    let result = link(&blocks_a, &blocks_b, &link_cfg)?;
    println!(
        "[lu] compare: {:.3} s ({} pairs, {} matches)",
        result.elapsed_seconds,
        result.pairs_compared,
        result.matches.len()
    );
    write_matches_csv(&result, matches_out)?;

    let metrics = match truth {
        Some((dataset_a, dataset_b, spec)) => {
            let metrics = evaluate_against_truth(
                &blocks_a, &blocks_b, &result, cfg, dataset_a, dataset_b, spec,
            )?;
            if let Some(path) = metrics_out {
                write_metrics_csv(&metrics, path)?;
            }
            Some(metrics)
        }
        None => None,
    };

    Ok(LuRunReport {
        matches: result.matches.len(),
        pairs_compared: result.pairs_compared,
        link_seconds: result.elapsed_seconds,
        metrics,
    })
}

/// Evaluation half of the LU run, reusable against an in-memory link result.
pub fn evaluate_against_truth(
    blocks_a: &Blocks,
    blocks_b: &Blocks,
    result: &LinkResult,
    cfg: &PipelineConfig,
    dataset_a: &Dataset,
    dataset_b: &Dataset,
    spec: TruthSpec,
) -> Result<Metrics> {
    let candidates = candidate_pairs(blocks_a, blocks_b, cfg.max_pairs);
    let mode = match spec {
        TruthSpec::Dice => TruthMode::PlaintextDice(cfg.threshold),
        TruthSpec::Id => TruthMode::SharedId,
    };
    let truth = ground_truth(dataset_a, dataset_b, cfg.q, mode, &candidates);
    // Shared-id truth can contain pairs blocking kept apart; those are false
    // negatives outside the compared universe, so widen it to cover them.
    let candidate_set: HashSet<&(String, String)> = candidates.iter().collect();
    let outside = truth
        .iter()
        .filter(|pair| !candidate_set.contains(pair))
        .count();
    evaluate(result, &truth, candidates.len() + outside)
}

/// Write a dataset as a two-column `id,value` CSV, the shape the pipeline
/// subcommands exchange.
pub fn write_values_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "value"])?;
    for record in &dataset.records {
        w.write_record([record.id.as_str(), record.value.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the demo report.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoRow {
    pub encoder: EncoderKind,
    pub threshold: f64,
    pub pairs_compared: usize,
    pub matches: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub records: usize,
    pub rows: Vec<DemoRow>,
    pub total_seconds: f64,
}

impl DemoReport {
    /// Markdown report: one table row per (encoder, threshold).
    pub fn markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# Linkage demo report");
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{} synthetic first-name records linked against their corrupted copy.",
            self.records
        );
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "| encoder | s_t | pairs | matches | precision | recall | accuracy | f1 |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
        for row in &self.rows {
            let m = &row.metrics;
            let _ = writeln!(
                out,
                "| {} | {:.1} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
                row.encoder,
                row.threshold,
                row.pairs_compared,
                row.matches,
                m.precision,
                m.recall,
                m.accuracy,
                m.f1
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Total runtime: {:.2} s.", self.total_seconds);
        out
    }
}

/// Thresholds the demo sweeps.
pub const DEMO_THRESHOLDS: [f64; 3] = [0.8, 0.9, 1.0];

/// End-to-end demonstration: synthesize a first-name dataset, corrupt a
/// copy, run both encoders through the DO pipeline, link at each threshold,
/// and score against plaintext-Dice ground truth. Artifacts land in
/// `out_dir`; the Markdown report is also written there.
pub fn run_demo(cfg: &PipelineConfig, records: usize, out_dir: &Path) -> Result<DemoReport> {
    cfg.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(out_dir)?;

    let original = synthetic_first_names(records, stage_seed(cfg.seed, Stage::Synthetic));
    let corrupted = corrupt_dataset(
        &original,
        cfg.corrupt_rate,
        stage_seed(cfg.seed, Stage::Corrupt),
        cfg.char_class,
    )?;
    write_values_csv(&original, &out_dir.join("original.csv"))?;
    write_values_csv(&corrupted, &out_dir.join("corrupted.csv"))?;

    let mut rows = Vec::new();
    for encoder in [EncoderKind::EmbBin, EncoderKind::Bloom] {
        let mut encoder_cfg = cfg.clone();
        encoder_cfg.encoder = encoder;

        let left_path = out_dir.join(format!("{encoder}_a.bin"));
        let right_path = out_dir.join(format!("{encoder}_b.bin"));
        let mut timings = Vec::new();
        encode_dataset_to_file(&encoder_cfg, &original, &left_path, &mut timings)?;
        let mut timings = Vec::new();
        encode_dataset_to_file(&encoder_cfg, &corrupted, &right_path, &mut timings)?;

        let (blocks_a, _) = deserialize_blocks(&left_path)?;
        let (blocks_b, _) = deserialize_blocks(&right_path)?;
        for threshold in DEMO_THRESHOLDS {
            let mut run_cfg = encoder_cfg.clone();
            run_cfg.threshold = threshold;
            let result = link(
                &blocks_a,
                &blocks_b,
                &LinkConfig {
                    threshold,
                    max_pairs: run_cfg.max_pairs,
                },
            )?;
            let metrics = evaluate_against_truth(
                &blocks_a,
                &blocks_b,
                &result,
                &run_cfg,
                &original,
                &corrupted,
                TruthSpec::Dice,
            )?;
            info!(
                "demo {encoder} s_t={threshold}: f1={:.4} ({} matches)",
                metrics.f1,
                result.matches.len()
            );
            rows.push(DemoRow {
                encoder,
                threshold,
                pairs_compared: result.pairs_compared,
                matches: result.matches.len(),
                metrics,
            });
        }
    }

    let report = DemoReport {
        records,
        rows,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    let mut f = BufWriter::new(File::create(out_dir.join("report.md"))?);
    f.write_all(report.markdown().as_bytes())?;
    f.flush()?;
    Ok(report)
}

/// Desk-scale defaults for the demo: the paper-scale dimension is scaled
/// down so the whole run stays interactive.
pub fn demo_config() -> PipelineConfig {
    PipelineConfig {
        embed_dim: 64,
        ..PipelineConfig::default()
    }
}
