//! Black-box tests of the `pprl` binary: the subcommand protocol flow and
//! the documented exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn pprl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pprl"))
        .args(args)
        .output()
        .expect("failed to spawn pprl")
}

fn assert_code(output: &Output, expected: i32) {
    let code = output.status.code().unwrap_or(-1);
    assert_eq!(
        code,
        expected,
        "exit code {code}, expected {expected}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

#[test]
fn do_and_lu_subcommands_compose() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).display().to_string();

    write(
        &dir.path().join("raw.csv"),
        "id,fn,ln\nr1,Peter,Miller\nr2,Pedro,Muller\nr3,Anna,Smith\nr4,Peter,Miller\n",
    );

    // DO side: normalize, corrupt a copy, train, binarize, encode both.
    let out = pprl(&[
        "prepare",
        "--input",
        &p("raw.csv"),
        "--id-col",
        "id",
        "--cols",
        "fn,ln",
        "--char-class",
        "letters",
        "--q",
        "2",
        "--out",
        &p("norm.csv"),
    ]);
    assert_code(&out, 0);
    let norm = std::fs::read_to_string(dir.path().join("norm.csv")).unwrap();
    assert!(norm.contains("r1,petermiller"));

    let out = pprl(&[
        "corrupt",
        "--input",
        &p("norm.csv"),
        "--char-class",
        "letters",
        "--corrupt-rate",
        "0.2",
        "--seed",
        "9",
        "--out",
        &p("corrupted.csv"),
    ]);
    assert_code(&out, 0);

    let out = pprl(&[
        "train-embed",
        "--char-class",
        "letters",
        "--q",
        "1",
        "--dim",
        "8",
        "--epochs",
        "2",
        "--seed",
        "5",
        "--out",
        &p("model.bin"),
    ]);
    assert_code(&out, 0);

    let out = pprl(&[
        "binarize",
        "--model",
        &p("model.bin"),
        "--char-class",
        "letters",
        "--q",
        "1",
        "--l",
        "40",
        "--ep",
        "2",
        "--batch",
        "5",
        "--seed",
        "5",
        "--out",
        &p("bits.bin"),
    ]);
    assert_code(&out, 0);

    for (input, blocks) in [("norm.csv", "a.bin"), ("corrupted.csv", "b.bin")] {
        let out = pprl(&[
            "encode",
            "--input",
            &p(input),
            "--char-class",
            "letters",
            "--q",
            "1",
            "--bitmatrix",
            &p("bits.bin"),
            "--model",
            &p("model.bin"),
            "--k",
            "4",
            "--lf",
            "40",
            "--block-scheme",
            "soundex_full",
            "--seed",
            "5",
            "--out",
            &p(blocks),
        ]);
        assert_code(&out, 0);
    }

    // LU side: link, then score against plaintext-Dice ground truth.
    let out = pprl(&[
        "link",
        "--left",
        &p("a.bin"),
        "--right",
        &p("b.bin"),
        "--threshold",
        "0.8",
        "--out",
        &p("matches.csv"),
    ]);
    assert_code(&out, 0);
    assert!(dir.path().join("matches.csv").exists());

    let out = pprl(&[
        "evaluate",
        "--matches",
        &p("matches.csv"),
        "--left",
        &p("a.bin"),
        "--right",
        &p("b.bin"),
        "--left-data",
        &p("norm.csv"),
        "--right-data",
        &p("corrupted.csv"),
        "--char-class",
        "letters",
        "--q",
        "1",
        "--truth-mode",
        "dice",
        "--threshold",
        "0.8",
        "--out",
        &p("metrics.csv"),
    ]);
    assert_code(&out, 0);
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("tp,fp,fn,tn,precision,recall,accuracy,f1"));
}

#[test]
fn bloom_encoder_goes_through_the_same_wire_format() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).display().to_string();
    write(
        &dir.path().join("data.csv"),
        "id,value\nr1,peter\nr2,anna\n",
    );

    let out = pprl(&[
        "encode-bf",
        "--input",
        &p("data.csv"),
        "--char-class",
        "letters",
        "--q",
        "2",
        "--l",
        "64",
        "--k-hash",
        "3",
        "--seed",
        "1",
        "--out",
        &p("bf.bin"),
    ]);
    assert_code(&out, 0);

    let out = pprl(&[
        "link",
        "--left",
        &p("bf.bin"),
        "--right",
        &p("bf.bin"),
        "--threshold",
        "1.0",
        "--out",
        &p("matches.csv"),
    ]);
    assert_code(&out, 0);
    let matches = std::fs::read_to_string(dir.path().join("matches.csv")).unwrap();
    // Linking a file against itself finds each record at similarity 1.
    assert!(matches.contains("r1,r1,1.000000"));
    assert!(matches.contains("r2,r2,1.000000"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // l below the alphabet size is a configuration error.
    let config = dir.path().join("bad.conf");
    write(&config, "l = 500\nl_f = 500\n");
    let out = pprl(&[
        "demo",
        "--config",
        &config.display().to_string(),
        "--records",
        "10",
        "--out-dir",
        &dir.path().join("out").display().to_string(),
    ]);
    assert_code(&out, 2);

    let config = dir.path().join("unknown.conf");
    write(&config, "no_such_key = 1\n");
    let out = pprl(&[
        "demo",
        "--config",
        &config.display().to_string(),
        "--records",
        "10",
        "--out-dir",
        &dir.path().join("out").display().to_string(),
    ]);
    assert_code(&out, 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).display().to_string();

    // Missing input file.
    let out = pprl(&["prepare", "--input", &p("nope.csv"), "--out", &p("x.csv")]);
    assert_code(&out, 3);

    // Missing column.
    write(&dir.path().join("data.csv"), "id,value\nr1,peter\n");
    let out = pprl(&[
        "prepare",
        "--input",
        &p("data.csv"),
        "--cols",
        "missing",
        "--out",
        &p("x.csv"),
    ]);
    assert_code(&out, 3);

    // Tampered magic in a blocks file.
    write(&dir.path().join("bogus.bin"), "NOTMAGICxxxxxxxxxxxxxxxx");
    let out = pprl(&[
        "link",
        "--left",
        &p("bogus.bin"),
        "--right",
        &p("bogus.bin"),
        "--threshold",
        "0.8",
        "--out",
        &p("m.csv"),
    ]);
    assert_code(&out, 3);
}

#[test]
fn mismatched_lf_files_abort() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).display().to_string();
    write(&dir.path().join("data.csv"), "id,value\nr1,peter\n");

    for (l, name) in [("64", "a.bin"), ("128", "b.bin")] {
        let out = pprl(&[
            "encode-bf",
            "--input",
            &p("data.csv"),
            "--char-class",
            "letters",
            "--q",
            "2",
            "--l",
            l,
            "--k-hash",
            "2",
            "--seed",
            "1",
            "--out",
            &p(name),
        ]);
        assert_code(&out, 0);
    }
    let out = pprl(&[
        "link",
        "--left",
        &p("a.bin"),
        "--right",
        &p("b.bin"),
        "--threshold",
        "0.8",
        "--out",
        &p("m.csv"),
    ]);
    assert_code(&out, 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("l_f"), "stderr: {stderr}");
}

#[test]
fn demo_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("demo");
    let out = pprl(&[
        "demo",
        "--records",
        "60",
        "--out-dir",
        &out_dir.display().to_string(),
    ]);
    assert_code(&out, 0);
    let report = std::fs::read_to_string(out_dir.join("report.md")).unwrap();
    // 3 thresholds x 2 encoders.
    assert_eq!(report.matches("| embbin |").count(), 3);
    assert_eq!(report.matches("| bloom |").count(), 3);
    assert!(out_dir.join("original.csv").exists());
    assert!(out_dir.join("corrupted.csv").exists());
}
