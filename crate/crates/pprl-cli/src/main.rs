//! `pprl` — privacy-preserving record linkage over encoded bit vectors.
//!
//! Database owners run `prepare`, `train-embed`, `binarize`, and `encode`
//! (or `encode-bf`) locally and ship only the encoded-blocks file; the
//! linkage unit runs `link` on two such files. `demo` exercises the whole
//! protocol on synthetic data. Exit codes: 0 success, 2 configuration
//! error, 3 data/format error, 4 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pprl_cli::config::PipelineConfig;
use pprl_cli::pipeline::{evaluate_against_truth, write_values_csv, TruthSpec};
use pprl_core::binarizer::{
    binarize_alphabet, init_binarizer, load_bit_matrix, save_bit_matrix, train_binarizer,
};
use pprl_core::embedding::{embed_all, load_model, save_model, train_cbow, CorpusMode};
use pprl_core::encoder::{
    build_temp_index, deserialize_blocks, encode_database, gen_blocks, serialize_blocks,
    BlockingScheme,
};
use pprl_core::error::Error;
use pprl_core::linkage::{
    link, read_matches_csv, write_matches_csv, write_metrics_csv, LinkConfig, LinkResult,
};
use pprl_core::prep::{
    corrupt_dataset, gen_all_possible_qgrams, load_csv, prepare_database, CharClass, CsvOptions,
};

#[derive(Parser)]
#[command(
    name = "pprl",
    version,
    about = "Privacy-preserving record linkage toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand that reads a record CSV.
#[derive(Args, Debug)]
struct DataArgs {
    /// Input CSV file (first row is the header).
    #[arg(long)]
    input: PathBuf,
    /// Column holding the record identifier.
    #[arg(long, default_value = "id")]
    id_col: String,
    /// Comma-separated linkage columns, concatenated in order.
    #[arg(long, default_value = "value", value_delimiter = ',')]
    cols: Vec<String>,
    /// Character class: letters, digits, or mix.
    #[arg(long, default_value = "letters")]
    char_class: CharClass,
    /// CSV field delimiter.
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// Separator inserted between concatenated columns.
    #[arg(long, default_value = "")]
    separator: String,
}

impl DataArgs {
    fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            delimiter: self.delimiter as u8,
            separator: self.separator.clone(),
        }
    }

    fn load(&self) -> Result<pprl_core::prep::Dataset, Error> {
        load_csv(
            &self.input,
            &self.id_col,
            &self.cols,
            self.char_class,
            &self.csv_options(),
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a CSV into the canonical id,value form.
    Prepare {
        #[command(flatten)]
        data: DataArgs,
        /// q-gram length used for the summary only.
        #[arg(long, default_value_t = 2)]
        q: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a corrupted copy of a dataset (single-character edits).
    Corrupt {
        #[command(flatten)]
        data: DataArgs,
        /// Edits per record as a fraction of the value length.
        #[arg(long, default_value_t = 0.2)]
        corrupt_rate: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the CBOW q-gram embedding model.
    TrainEmbed {
        #[arg(long, default_value = "letters")]
        char_class: CharClass,
        #[arg(long, default_value_t = 2)]
        q: usize,
        /// Embedding dimension.
        #[arg(long, default_value_t = 300)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 1)]
        min_freq: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0.025)]
        lr: f64,
        #[arg(long, default_value_t = 5)]
        negative_samples: usize,
        /// alphabet_order or record_lists.
        #[arg(long, default_value = "alphabet_order")]
        corpus_mode: CorpusMode,
        /// Record CSV, required for corpus_mode = record_lists.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "id")]
        id_col: String,
        #[arg(long, default_value = "value", value_delimiter = ',')]
        cols: Vec<String>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the binarizer and write the q-gram bit matrix.
    Binarize {
        /// Embedding model file from train-embed.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "letters")]
        char_class: CharClass,
        #[arg(long, default_value_t = 2)]
        q: usize,
        /// Projection width in bits; must exceed the alphabet size.
        #[arg(long, default_value_t = 1000)]
        l: usize,
        /// Training iterations.
        #[arg(long, default_value_t = 5)]
        ep: usize,
        /// Batch size.
        #[arg(long, default_value_t = 75)]
        batch: usize,
        #[arg(long, default_value_t = 1e-3)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a dataset into an encoded-blocks file via the bit matrix.
    Encode {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 2)]
        q: usize,
        /// Bit-matrix file from binarize.
        #[arg(long)]
        bitmatrix: PathBuf,
        /// Optional model file; cross-checked against the bit matrix.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Bits selected per q-gram.
        #[arg(long, default_value_t = 15)]
        k: usize,
        /// Final binary string length.
        #[arg(long, default_value_t = 1000)]
        lf: usize,
        /// none, soundex_full, or soundex_prefix:N.
        #[arg(long, default_value = "soundex_full")]
        block_scheme: BlockingScheme,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode a dataset with the Bloom filter baseline.
    EncodeBf {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 2)]
        q: usize,
        /// Filter length in bits.
        #[arg(long, default_value_t = 1000)]
        l: usize,
        /// Hash functions per q-gram.
        #[arg(long, default_value_t = 15)]
        k_hash: usize,
        #[arg(long, default_value = "soundex_full")]
        block_scheme: BlockingScheme,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two encoded-blocks files at the linkage unit.
    Link {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Similarity threshold s_t.
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
        /// Comparison cap, 0 for unlimited.
        #[arg(long, default_value_t = 0)]
        max_pairs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a matches CSV against ground truth.
    Evaluate {
        /// Matches CSV produced by link.
        #[arg(long)]
        matches: PathBuf,
        /// The encoded-blocks files that were linked (for the candidate
        /// universe).
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        /// Plaintext datasets the blocks were encoded from.
        #[arg(long)]
        left_data: PathBuf,
        #[arg(long)]
        right_data: PathBuf,
        #[arg(long, default_value = "id")]
        id_col: String,
        #[arg(long, default_value = "value", value_delimiter = ',')]
        cols: Vec<String>,
        #[arg(long, default_value = "letters")]
        char_class: CharClass,
        #[arg(long, default_value_t = 2)]
        q: usize,
        /// dice (plaintext Dice at the threshold) or id (shared ids).
        #[arg(long, default_value = "dice")]
        truth_mode: String,
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        max_pairs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full three-party protocol on synthetic data.
    Demo {
        /// Optional parameter file; desk-scale defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of synthetic records.
        #[arg(long, default_value_t = 1000)]
        records: usize,
        #[arg(long, default_value = "demo-out")]
        out_dir: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Io(_)
        | Error::Csv(_)
        | Error::MissingColumn { .. }
        | Error::DuplicateId { .. }
        | Error::EmptyId { .. }
        | Error::BadMagic { .. }
        | Error::Truncated { .. }
        | Error::LfMismatch { .. }
        | Error::UnknownQGram { .. }
        | Error::Shape { .. }
        | Error::Inconsistent(_) => 3,
        Error::Divergence { .. } => 4,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Prepare { data, q, out } => {
            let dataset = data.load()?;
            let (alphabet, index) = prepare_database(&dataset, q, data.char_class)?;
            write_values_csv(&dataset, &out)?;
            println!(
                "prepared {} records ({} possible {q}-grams, {} empty values) -> {}",
                dataset.len(),
                alphabet.len(),
                index.entries.values().filter(|g| g.is_empty()).count(),
                out.display()
            );
        }
        Command::Corrupt {
            data,
            corrupt_rate,
            seed,
            out,
        } => {
            let dataset = data.load()?;
            let corrupted = corrupt_dataset(&dataset, corrupt_rate, seed, data.char_class)?;
            write_values_csv(&corrupted, &out)?;
            println!(
                "corrupted {} records at rate {corrupt_rate} -> {}",
                corrupted.len(),
                out.display()
            );
        }
        Command::TrainEmbed {
            char_class,
            q,
            dim,
            window,
            min_freq,
            epochs,
            lr,
            negative_samples,
            corpus_mode,
            input,
            id_col,
            cols,
            seed,
            out,
        } => {
            let alphabet = gen_all_possible_qgrams(char_class, q)?;
            let cfg = pprl_core::embedding::CbowConfig {
                dim,
                min_freq,
                window,
                epochs,
                learning_rate: lr,
                negative_samples,
                seed,
                corpus_mode,
            };
            let index = match corpus_mode {
                CorpusMode::AlphabetOrder => None,
                CorpusMode::RecordLists => {
                    let input = input.ok_or_else(|| {
                        Error::Config("--input is required for corpus_mode record_lists".into())
                    })?;
                    let dataset =
                        load_csv(&input, &id_col, &cols, char_class, &CsvOptions::default())?;
                    Some(prepare_database(&dataset, q, char_class)?.1)
                }
            };
            let model = train_cbow(&alphabet, index.as_ref(), &cfg)?;
            save_model(&model, &out)?;
            println!(
                "trained {}-token model (d = {dim}) -> {}",
                model.vocab_size(),
                out.display()
            );
        }
        Command::Binarize {
            model,
            char_class,
            q,
            l,
            ep,
            batch,
            lambda,
            lr,
            seed,
            out,
        } => {
            let alphabet = gen_all_possible_qgrams(char_class, q)?;
            if l <= alphabet.len() {
                return Err(Error::Config(format!(
                    "l = {l} must exceed the alphabet size {}",
                    alphabet.len()
                )));
            }
            let model = load_model(&model)?;
            let table = embed_all(&model, &alphabet)?;
            let cfg = pprl_core::binarizer::BinarizerConfig {
                l,
                ep,
                s: batch,
                learning_rate: lr,
                lambda,
                seed,
            };
            let state = init_binarizer(l, table.dim(), seed);
            let state = train_binarizer(state, &table, &cfg)?;
            let bits = binarize_alphabet(&state, &table)?;
            save_bit_matrix(&bits, &out)?;
            println!(
                "binarized {} q-grams to {l}-bit rows (rec_l = {:.4}, reg_l = {:.4}) -> {}",
                bits.len(),
                state.rec_loss,
                state.reg_loss,
                out.display()
            );
        }
        Command::Encode {
            data,
            q,
            bitmatrix,
            model,
            k,
            lf,
            block_scheme,
            seed,
            out,
        } => {
            let dataset = data.load()?;
            let (alphabet, index) = prepare_database(&dataset, q, data.char_class)?;
            let bits = load_bit_matrix(&bitmatrix)?;
            if bits.len() != alphabet.len() {
                return Err(Error::Shape {
                    context: "bit-matrix rows vs alphabet".into(),
                    expected: alphabet.len(),
                    actual: bits.len(),
                });
            }
            if let Some(model_path) = model {
                let model = load_model(&model_path)?;
                if model.vocab_size() != alphabet.len() {
                    return Err(Error::Shape {
                        context: "model vocabulary vs alphabet".into(),
                        expected: alphabet.len(),
                        actual: model.vocab_size(),
                    });
                }
            }
            let cfg = pprl_core::encoder::EncodeConfig {
                k,
                l: bits.l,
                l_f: lf,
                global_seed: seed,
            };
            let temp = build_temp_index(&alphabet, &bits, &cfg)?;
            let encoded = encode_database(&index, &temp, lf)?;
            let blocks = gen_blocks(&encoded, &dataset, block_scheme)?;
            serialize_blocks(&blocks, k, &out)?;
            println!(
                "encoded {} records into {} blocks (l_f = {lf}) -> {}",
                encoded.len(),
                blocks.buckets.len(),
                out.display()
            );
        }
        Command::EncodeBf {
            data,
            q,
            l,
            k_hash,
            block_scheme,
            seed,
            out,
        } => {
            let dataset = data.load()?;
            let (_, index) = prepare_database(&dataset, q, data.char_class)?;
            let cfg = pprl_core::bloom::BloomConfig {
                l_bf: l,
                k_hash,
                seed,
            };
            let encoded = pprl_core::bloom::bf_encode_database(&index, &cfg)?;
            let blocks = gen_blocks(&encoded, &dataset, block_scheme)?;
            serialize_blocks(&blocks, k_hash, &out)?;
            println!(
                "bloom-encoded {} records into {} blocks (l = {l}) -> {}",
                encoded.len(),
                blocks.buckets.len(),
                out.display()
            );
        }
        Command::Link {
            left,
            right,
            threshold,
            max_pairs,
            out,
        } => {
            let (blocks_a, _) = deserialize_blocks(&left)?;
            let (blocks_b, _) = deserialize_blocks(&right)?;
            let result = link(
                &blocks_a,
                &blocks_b,
                &LinkConfig {
                    threshold,
                    max_pairs,
                },
            )?;
            write_matches_csv(&result, &out)?;
            println!(
                "compared {} pairs in {:.3} s, {} matches at s_t = {threshold} -> {}",
                result.pairs_compared,
                result.elapsed_seconds,
                result.matches.len(),
                out.display()
            );
        }
        Command::Evaluate {
            matches,
            left,
            right,
            left_data,
            right_data,
            id_col,
            cols,
            char_class,
            q,
            truth_mode,
            threshold,
            max_pairs,
            out,
        } => {
            let spec = match truth_mode.as_str() {
                "dice" => TruthSpec::Dice,
                "id" => TruthSpec::Id,
                other => {
                    return Err(Error::Config(format!(
                        "unknown truth mode {other:?} (expected dice or id)"
                    )))
                }
            };
            let opts = CsvOptions::default();
            let dataset_a = load_csv(&left_data, &id_col, &cols, char_class, &opts)?;
            let dataset_b = load_csv(&right_data, &id_col, &cols, char_class, &opts)?;
            let (blocks_a, _) = deserialize_blocks(&left)?;
            let (blocks_b, _) = deserialize_blocks(&right)?;
            let predicted = read_matches_csv(&matches)?;
            let result = LinkResult {
                pairs_compared: predicted.len(),
                matches: predicted,
                elapsed_seconds: 0.0,
            };
            let cfg = PipelineConfig {
                char_class,
                q,
                threshold,
                max_pairs,
                ..PipelineConfig::default()
            };
            let metrics = evaluate_against_truth(
                &blocks_a, &blocks_b, &result, &cfg, &dataset_a, &dataset_b, spec,
            )?;
            write_metrics_csv(&metrics, &out)?;
            println!(
                "precision {:.4}, recall {:.4}, accuracy {:.4}, f1 {:.4} -> {}",
                metrics.precision,
                metrics.recall,
                metrics.accuracy,
                metrics.f1,
                out.display()
            );
        }
        Command::Demo {
            config,
            records,
            out_dir,
        } => {
            let cfg = match config {
                Some(path) => PipelineConfig::load(&path)?,
                None => pprl_cli::pipeline::demo_config(),
            };
            let report = pprl_cli::pipeline::run_demo(&cfg, records, &out_dir)?;
            print!("{}", report.markdown());
            println!("report written to {}", out_dir.join("report.md").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
