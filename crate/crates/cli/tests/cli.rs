//! End-to-end command tests driving the CLI in-process: full flows, exit
//! codes, determinism, and agreement between commands and direct library
//! calls.

use std::fs;
use std::path::{Path, PathBuf};

use echotext_cli::records::read_record;
use echotext_cli::INIT_STREAM;
use echotext_core::config::FullConfig;
use echotext_core::model::CnnModel;
use echotext_core::rng::{derive_seed, seeded};
use echotext_core::tensor::Scalar;
use echotext_core::text::{build_vocab, encode_dataset, load_dataset, tokenize};
use echotext_core::train::cross_validate;
use echotext_core::transfer::{Checkpoint, TransferOptions, TransferPlan};

fn run_cli(args: &[String]) -> i32 {
    let mut argv = vec!["echotext".to_string()];
    argv.extend_from_slice(args);
    echotext_cli::run(argv)
}

fn args(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

/// Small-but-learnable model settings shared by most tests.
const TINY: &[&str] = &[
    "d=32",
    "feature_maps=16",
    "hidden_units=16",
    "region_sizes=2,3",
    "batch_size=10",
    "dropout_rate=0.2",
];

fn push_sets(argv: &mut Vec<String>, sets: &[&str]) {
    for kv in sets {
        argv.push("--set".to_string());
        argv.push(kv.to_string());
    }
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut argv = args(&["gen", "--out", out.to_str().unwrap()]);
    argv.extend(extra.iter().map(|s| s.to_string()));
    assert_eq!(run_cli(&argv), 0, "gen {name} failed");
    out
}

fn train(data: &Path, out: &Path, seed: &str, epochs: &str, extra_sets: &[&str]) {
    let mut argv = args(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--seed",
        seed,
        "--epochs",
        epochs,
        "--out",
        out.to_str().unwrap(),
    ]);
    push_sets(&mut argv, TINY);
    push_sets(&mut argv, extra_sets);
    assert_eq!(run_cli(&argv), 0, "train to {} failed", out.display());
}

/// Config the CLI ends up with after TINY --set pairs, for direct calls.
fn tiny_config(num_classes: usize) -> FullConfig {
    let mut cfg = FullConfig::default();
    for kv in TINY {
        let (k, v) = kv.split_once('=').unwrap();
        cfg.apply(k, v).unwrap();
    }
    cfg.model.num_classes = num_classes;
    cfg
}

#[test]
fn gen_train_eval_flow_learns_the_synthetic_task() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "corpus.tsv", &["--sentences", "1000", "--seed", "7"]);
    let ckpt = dir.path().join("model.ckpt");
    train(&data, &ckpt, "11", "12", &[]);
    assert!(ckpt.exists());

    let record = read_record(&dir.path().join("model.ckpt.json")).unwrap();
    assert_eq!(record.experiment, "train");
    let held_out = record.mean_pct.expect("train records a held-out accuracy");
    assert!(held_out >= 90.0, "synthetic task should be learnable, got {held_out}");

    let code = run_cli(&args(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
}

#[test]
fn training_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "corpus.tsv", &["--sentences", "200", "--seed", "3"]);
    let a = dir.path().join("a.ckpt");
    let b = dir.path().join("b.ckpt");
    train(&data, &a, "9", "2", &[]);
    train(&data, &b, "9", "2", &[]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.ckpt.json")).unwrap(),
        fs::read(dir.path().join("b.ckpt.json")).unwrap()
    );
}

#[test]
fn epochs_zero_checkpoint_is_the_bare_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "corpus.tsv", &["--sentences", "200", "--seed", "3"]);
    let ckpt_path = dir.path().join("init.ckpt");
    train(&data, &ckpt_path, "5", "0", &[]);

    let saved = Checkpoint::load(&ckpt_path).unwrap();
    let cfg = tiny_config(2);
    let pairs = load_dataset(&data).unwrap();
    let corpus: Vec<Vec<String>> = pairs.iter().map(|(_, t)| tokenize(t)).collect();
    let vocab = build_vocab(&corpus, cfg.pipeline.min_count);
    let mut rng = seeded(derive_seed(5, INIT_STREAM));
    let expected: CnnModel<f32> = CnnModel::init_random(cfg.model.clone(), &vocab, &mut rng).unwrap();

    for (record, tensor) in saved.tensors.iter().zip(expected.tensors()) {
        assert_eq!(record.name, tensor.name);
        assert_eq!(record.values.len(), tensor.value.len());
        for (a, b) in record.values.iter().zip(tensor.value.data()) {
            assert_eq!(a.to_bits(), b.as_f32().to_bits(), "{} drifted", record.name);
        }
    }
}

#[test]
fn config_file_then_set_then_flags_layer_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "corpus.tsv", &["--sentences", "120", "--seed", "3"]);
    let cfg_file = dir.path().join("run.cfg");
    fs::write(&cfg_file, "epochs = 3\nseed = 9\nbatch_size = 10\n# comment\n").unwrap();

    let ckpt = dir.path().join("m.ckpt");
    let mut argv = args(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--config",
        cfg_file.to_str().unwrap(),
        "--out",
        ckpt.to_str().unwrap(),
    ]);
    push_sets(&mut argv, &["epochs=1", "d=16", "feature_maps=4", "hidden_units=4", "region_sizes=2"]);
    assert_eq!(run_cli(&argv), 0);
    let provenance = Checkpoint::load(&ckpt).unwrap().provenance;
    assert!(provenance.contains("seed=9"), "config file seed should hold: {provenance}");
    assert!(provenance.contains("epochs=1"), "--set should beat the file: {provenance}");

    argv.push("--seed".to_string());
    argv.push("4".to_string());
    assert_eq!(run_cli(&argv), 0);
    let provenance = Checkpoint::load(&ckpt).unwrap().provenance;
    assert!(provenance.contains("seed=4"), "--seed should beat the file: {provenance}");
}

#[test]
fn usage_and_config_problems_exit_2_without_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.ckpt");

    // Missing dataset.
    let code = run_cli(&args(&["train", "--data", "/no/such/file.tsv", "--out", out.to_str().unwrap()]));
    assert_eq!(code, 2);
    assert!(!out.exists(), "failed runs must not leave partial checkpoints");
    assert!(!dir.path().join("never.ckpt.json").exists());

    // Unknown config key.
    let data = gen(dir.path(), "d.tsv", &["--sentences", "40", "--seed", "1"]);
    let mut argv = args(&["train", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    push_sets(&mut argv, &["no_such_key=1"]);
    assert_eq!(run_cli(&argv), 2);

    // Bad plan string.
    let code = run_cli(&args(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--from-checkpoint",
        "/no/such.ckpt",
        "--plan",
        "ExCxHxOx",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 2);

    // Unknown activation name.
    let code = run_cli(&args(&[
        "sweep-activation",
        "--source-data",
        data.to_str().unwrap(),
        "--target",
        data.to_str().unwrap(),
        "--source-acts",
        "Selu",
        "--out",
        dir.path().join("sa").to_str().unwrap(),
    ]));
    assert_eq!(code, 2);
    assert!(!dir.path().join("sa").exists());

    // Help and version are success; unknown flags are usage errors.
    assert_eq!(run_cli(&args(&["--help"])), 0);
    assert_eq!(run_cli(&args(&["--version"])), 0);
    assert_eq!(run_cli(&args(&["train", "--frobnicate"])), 2);
    assert!(!out.exists());
}

#[test]
fn non_finite_loss_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.tsv");
    fs::write(&data, "0\taa bb aa bb\n1\tbb aa bb aa\n0\taa aa bb bb\n1\tbb bb aa aa\n").unwrap();
    // Vector magnitudes that overflow f32 into infinities; with identity
    // activations the first batch's logits go NaN.
    let vectors = dir.path().join("huge.vec");
    fs::write(
        &vectors,
        "2 4\naa 1e39 -1e39 1e39 -1e39\nbb -1e39 1e39 -1e39 1e39\n",
    )
    .unwrap();

    let mut argv = args(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--vectors",
        vectors.to_str().unwrap(),
        "--seed",
        "1",
        "--epochs",
        "1",
        "--out",
        dir.path().join("m.ckpt").to_str().unwrap(),
    ]);
    push_sets(
        &mut argv,
        &[
            "d=4",
            "feature_maps=4",
            "hidden_units=4",
            "region_sizes=2",
            "conv_activation=Iden",
            "hidden_activation=Iden",
            "dropout_rate=0.0",
            "batch_size=2",
            "test_fraction=0.25",
        ],
    );
    assert_eq!(run_cli(&argv), 3);
}

#[test]
fn transfer_copies_tensors_and_blocks_class_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let source_data = gen(dir.path(), "src.tsv", &["--sentences", "200", "--seed", "7"]);
    let target_data = gen(
        dir.path(),
        "tgt.tsv",
        &["--sentences", "80", "--seed", "21", "--overlap", "0.7", "--ref-seed", "7"],
    );
    let source_ckpt = dir.path().join("src.ckpt");
    train(&source_data, &source_ckpt, "11", "2", &[]);

    let out = dir.path().join("init.ckpt");
    let code = run_cli(&args(&[
        "transfer",
        "--from",
        source_ckpt.to_str().unwrap(),
        "--target-data",
        target_data.to_str().unwrap(),
        "--plan",
        "E=C=H=O=",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);

    let source = Checkpoint::load(&source_ckpt).unwrap();
    let moved = Checkpoint::load(&out).unwrap();
    for name in ["C.filters.0", "C.bias.0", "H.weight", "H.bias", "O.weight", "O.bias"] {
        assert_eq!(
            source.tensor(name).unwrap().values,
            moved.tensor(name).unwrap().values,
            "{name} should be copied verbatim"
        );
    }
    // Embedding rows for overlapping words are copied too.
    let src_e = source.tensor("E.embeddings").unwrap();
    let dst_e = moved.tensor("E.embeddings").unwrap();
    let d = source.config.d;
    let mut copied = 0;
    for (i, word) in moved.vocabulary.words().iter().enumerate() {
        if let Some(src_id) = source.vocabulary.lookup(word) {
            let from = &src_e.values[src_id as usize * d..(src_id as usize + 1) * d];
            let to = &dst_e.values[(i + 2) * d..(i + 3) * d];
            assert_eq!(from, to, "row for `{word}` should be copied");
            copied += 1;
        }
    }
    assert!(copied > 0, "the 0.7-overlap target must share words with the source");

    // A 5-class source cannot hand its O layer to a 2-class target.
    let source5_data = gen(dir.path(), "s5.tsv", &["--classes", "5", "--sentences", "250", "--seed", "9"]);
    let source5_ckpt = dir.path().join("s5.ckpt");
    train(&source5_data, &source5_ckpt, "12", "2", &[]);
    let code = run_cli(&args(&[
        "transfer",
        "--from",
        source5_ckpt.to_str().unwrap(),
        "--target-data",
        target_data.to_str().unwrap(),
        "--plan",
        "E=C=H=O=",
        "--out",
        dir.path().join("bad.ckpt").to_str().unwrap(),
    ]));
    assert_eq!(code, 2);
    assert!(!dir.path().join("bad.ckpt").exists());
}

fn quick_cv_sets(argv: &mut Vec<String>) {
    push_sets(argv, TINY);
    push_sets(argv, &["epochs=2", "folds=2", "repetitions=1"]);
}

#[test]
fn matrix_renders_blocked_cells_and_baseline_row() {
    let dir = tempfile::tempdir().unwrap();
    let source_data = gen(dir.path(), "s5.tsv", &["--classes", "5", "--sentences", "250", "--seed", "33"]);
    let target_data = gen(dir.path(), "t2.tsv", &["--sentences", "80", "--seed", "21"]);
    let source_ckpt = dir.path().join("s5.ckpt");
    train(&source_data, &source_ckpt, "12", "2", &[]);

    let out = dir.path().join("mx");
    let mut argv = args(&[
        "matrix",
        "--source",
        source_ckpt.to_str().unwrap(),
        "--target",
        target_data.to_str().unwrap(),
        "--include-baseline",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    quick_cv_sets(&mut argv);
    assert_eq!(run_cli(&argv), 0);

    let csv = fs::read_to_string(out.join("matrix.csv")).unwrap();
    let text = fs::read_to_string(out.join("matrix.txt")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 10, "header + baseline + 8 settings:\n{csv}");
    assert!(lines[1].starts_with("E★C★H★O★,"), "baseline row first:\n{csv}");
    for blocked in ["E🔒C🔒H🔒O🔒", "E🔓C🔓H🔓O🔓"] {
        let row = lines.iter().find(|l| l.starts_with(blocked)).unwrap();
        assert!(row.ends_with(",---"), "O-transfer into fewer classes must block: {row}");
        assert!(text.contains("---"));
    }

    // Nine records, two of them blocked, same numbers in text and CSV.
    let records: Vec<_> = fs::read_dir(out.join("records"))
        .unwrap()
        .map(|e| read_record(&e.unwrap().path()).unwrap())
        .collect();
    assert_eq!(records.len(), 9);
    assert_eq!(records.iter().filter(|r| r.blocked.is_some()).count(), 2);
    for r in &records {
        if let Some(pct) = r.mean_pct {
            let formatted = format!("{pct:.2}");
            assert!(csv.contains(&formatted) && text.contains(&formatted), "{formatted} missing");
        }
    }

    // A missing target aborts with exit 2 before anything is written.
    let out2 = dir.path().join("mx2");
    let mut argv = args(&[
        "matrix",
        "--source",
        source_ckpt.to_str().unwrap(),
        "--target",
        target_data.to_str().unwrap(),
        "--target",
        "/no/such/target.tsv",
        "--out",
        out2.to_str().unwrap(),
    ]);
    quick_cv_sets(&mut argv);
    assert_eq!(run_cli(&argv), 2);
    assert!(!out2.exists(), "load failures must abort before any output");
}

#[test]
fn sweep_dropout_single_rate_equals_direct_cross_validate() {
    let dir = tempfile::tempdir().unwrap();
    let source_data = gen(dir.path(), "src.tsv", &["--sentences", "200", "--seed", "7"]);
    let target_data = gen(
        dir.path(),
        "tgt.tsv",
        &["--sentences", "80", "--seed", "21", "--overlap", "0.7", "--ref-seed", "7"],
    );
    let source_ckpt = dir.path().join("src.ckpt");
    train(&source_data, &source_ckpt, "11", "2", &[]);

    let out = dir.path().join("sd");
    let mut argv = args(&[
        "sweep-dropout",
        "--source",
        source_ckpt.to_str().unwrap(),
        "--target",
        target_data.to_str().unwrap(),
        "--rates",
        "0.3",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    quick_cv_sets(&mut argv);
    assert_eq!(run_cli(&argv), 0);
    let record = read_record(&out.join("records").join("d00_0.3.json")).unwrap();

    // The same computation through the library.
    let source = Checkpoint::load(&source_ckpt).unwrap();
    let pairs = load_dataset(&target_data).unwrap();
    let corpus: Vec<Vec<String>> = pairs.iter().map(|(_, t)| tokenize(t)).collect();
    let vocab = build_vocab(&corpus, 1);
    let mut model_cfg = source.config.clone();
    model_cfg.num_classes = 2;
    model_cfg.dropout_rate = 0.3;
    let mut cfg = tiny_config(2);
    cfg.apply("epochs", "2").unwrap();
    cfg.apply("folds", "2").unwrap();
    cfg.apply("repetitions", "1").unwrap();
    cfg.train.seed = 5;
    cfg.train.dropout_rate = 0.3;
    let data = encode_dataset(&pairs, &vocab, 200, model_cfg.min_sentence_len());
    let plan: TransferPlan = "E🔓C🔓H🔓O★".parse().unwrap();
    let direct = cross_validate::<f32>(
        &data,
        &vocab,
        &model_cfg,
        &cfg.train,
        &plan,
        Some(&source),
        &TransferOptions::default(),
    )
    .unwrap();
    let recorded = record.mean_pct.unwrap();
    assert!(
        (recorded - 100.0 * direct.mean_accuracy).abs() < 1e-9,
        "sweep cell {recorded} vs direct {}",
        100.0 * direct.mean_accuracy
    );
}

#[test]
fn sweep_activation_renders_pairs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let source_data = gen(dir.path(), "src.tsv", &["--sentences", "120", "--seed", "7"]);
    let target_data = gen(
        dir.path(),
        "tgt.tsv",
        &["--sentences", "60", "--seed", "21", "--overlap", "0.7", "--ref-seed", "7"],
    );

    let run_sweep = |out: &Path| {
        let mut argv = args(&[
            "sweep-activation",
            "--source-data",
            source_data.to_str().unwrap(),
            "--target",
            target_data.to_str().unwrap(),
            "--source-acts",
            "Tanh,ReLU",
            "--target-acts",
            "ReLU",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        quick_cv_sets(&mut argv);
        assert_eq!(run_cli(&argv), 0);
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run_sweep(&out_a);
    run_sweep(&out_b);

    let csv = fs::read_to_string(out_a.join("sweep_activation.csv")).unwrap();
    assert!(csv.starts_with("source act,ReLU\n"), "{csv}");
    for line in csv.lines().skip(1) {
        let (_, cell) = line.split_once(',').unwrap();
        assert!(
            cell.starts_with('"') && cell.contains(", "),
            "cells hold a (frozen, fine-tuned) pair: {line}"
        );
    }
    assert_eq!(
        fs::read(out_a.join("sweep_activation.csv")).unwrap(),
        fs::read(out_b.join("sweep_activation.csv")).unwrap()
    );
    let record = read_record(&out_a.join("records").join("a00_Tanh_ReLU.json")).unwrap();
    let (frozen, finetuned) = record.pair_pct.unwrap();
    assert!((0.0..=100.0).contains(&frozen) && (0.0..=100.0).contains(&finetuned));
}

#[test]
fn report_rerenders_records_and_lists_corrupt_files() {
    let dir = tempfile::tempdir().unwrap();

    // Empty directory is a usage error.
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert_eq!(run_cli(&args(&["report", "--dir", empty.to_str().unwrap()])), 2);
    assert_eq!(run_cli(&args(&["report", "--dir", "/no/such/dir"])), 2);

    let source_data = gen(dir.path(), "src.tsv", &["--sentences", "150", "--seed", "7"]);
    let target_data = gen(dir.path(), "tgt.tsv", &["--sentences", "60", "--seed", "21"]);
    let source_ckpt = dir.path().join("src.ckpt");
    train(&source_data, &source_ckpt, "11", "2", &[]);
    let out = dir.path().join("mx");
    let mut argv = args(&[
        "matrix",
        "--source",
        source_ckpt.to_str().unwrap(),
        "--target",
        target_data.to_str().unwrap(),
        "--settings",
        "E🔒C🔒H★O★,E🔓C🔓H🔓O★",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    quick_cv_sets(&mut argv);
    assert_eq!(run_cli(&argv), 0);
    fs::write(out.join("records").join("zz_broken.json"), "{ nope").unwrap();

    let report_dir = dir.path().join("rep");
    let code = run_cli(&args(&[
        "report",
        "--dir",
        out.to_str().unwrap(),
        "--out",
        report_dir.to_str().unwrap(),
    ]));
    assert_eq!(code, 0, "corrupt records are listed, not fatal");

    let csv = fs::read_to_string(report_dir.join("report_matrix.csv")).unwrap();
    assert!(csv.starts_with("setting,"), "{csv}");
    assert!(csv.lines().next().unwrap().ends_with(",params"), "param column present: {csv}");
    let matrix_csv = fs::read_to_string(out.join("matrix.csv")).unwrap();
    for line in matrix_csv.lines().skip(1) {
        let (_, value) = line.rsplit_once(',').unwrap();
        assert!(csv.contains(value), "report lost the value {value}");
    }
    assert!(report_dir.join("report_matrix.txt").exists());
}

#[test]
fn stats_oov_and_advise_write_matching_tables() {
    let dir = tempfile::tempdir().unwrap();
    let big = gen(dir.path(), "big.tsv", &["--sentences", "300", "--seed", "7"]);
    let related = gen(
        dir.path(),
        "related.tsv",
        &["--sentences", "100", "--seed", "21", "--overlap", "0.8", "--ref-seed", "7"],
    );
    let far = gen(dir.path(), "far.tsv", &["--sentences", "100", "--seed", "99"]);

    let out = dir.path().join("tables");
    let code = run_cli(&args(&[
        "stats",
        "--data",
        big.to_str().unwrap(),
        "--data",
        far.to_str().unwrap(),
        "--role",
        "source",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let stats_csv = fs::read_to_string(out.join("stats.csv")).unwrap();
    assert!(stats_csv.starts_with("dataset,D,C,L,N,V,V_pre\n"), "{stats_csv}");
    assert!(stats_csv.contains("big,source,2,"), "{stats_csv}");

    let code = run_cli(&args(&[
        "oov",
        "--target",
        related.to_str().unwrap(),
        "--source",
        big.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let oov_csv = fs::read_to_string(out.join("oov.csv")).unwrap();
    let pairs_t = load_dataset(&related).unwrap();
    let pairs_s = load_dataset(&big).unwrap();
    let vocab_of = |pairs: &Vec<(usize, String)>| {
        let corpus: Vec<Vec<String>> = pairs.iter().map(|(_, t)| tokenize(t)).collect();
        build_vocab(&corpus, 1)
    };
    let expected = echotext_core::metrics::oov_count(&vocab_of(&pairs_t), &vocab_of(&pairs_s));
    assert!(oov_csv.contains(&format!("big,{expected}")), "{oov_csv}");

    // The related corpus should out-rank the unrelated one as a source.
    let code = run_cli(&args(&[
        "advise",
        "--target",
        related.to_str().unwrap(),
        "--source",
        big.to_str().unwrap(),
        "--source",
        far.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let advise_csv = fs::read_to_string(out.join("advise.csv")).unwrap();
    let first_row = advise_csv.lines().nth(1).unwrap();
    assert!(first_row.starts_with("1,big"), "high-overlap source ranks first: {advise_csv}");
}

#[test]
fn gen_is_deterministic_and_controls_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.tsv", &["--sentences", "150", "--seed", "13"]);
    let b = gen(dir.path(), "b.tsv", &["--sentences", "150", "--seed", "13"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let full = gen(
        dir.path(),
        "full.tsv",
        &["--sentences", "150", "--seed", "21", "--overlap", "1.0", "--ref-seed", "13"],
    );
    let load_vocab = |p: &Path| {
        let pairs = load_dataset(p).unwrap();
        let corpus: Vec<Vec<String>> = pairs.iter().map(|(_, t)| tokenize(t)).collect();
        build_vocab(&corpus, 1)
    };
    // Full reuse: every generated word exists in the reference pools, which
    // a large reference corpus exercises in full.
    let reference = gen(dir.path(), "ref.tsv", &["--sentences", "4000", "--seed", "13"]);
    let oov = echotext_core::metrics::oov_count(&load_vocab(&full), &load_vocab(&reference));
    assert_eq!(oov, 0, "overlap 1.0 reuses the reference pools verbatim");

    let disjoint = gen(
        dir.path(),
        "disjoint.tsv",
        &["--sentences", "150", "--seed", "22", "--overlap", "0.0", "--ref-seed", "13"],
    );
    let dv = load_vocab(&disjoint);
    let oov = echotext_core::metrics::oov_count(&dv, &load_vocab(&reference));
    assert_eq!(oov, dv.size(), "overlap 0.0 shares nothing");
}
