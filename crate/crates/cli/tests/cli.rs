use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn weaksup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weaksup"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const CLASSES: [&str; 3] = ["Health", "Politics", "Sport"];
const WORDS: [[&str; 4]; 3] = [
    ["asibiti", "cuta", "likita", "magani"],
    ["zabe", "gwamna", "majalisa", "jam'iyya"],
    ["kwallo", "wasa", "gasar", "kungiya"],
];

/// Headlines built from class words, with every fifth weak label rotated.
fn topic_files(dir: &Path, n: usize, offset: usize) -> (PathBuf, PathBuf) {
    let mut gold = String::new();
    let mut weak = String::new();
    for i in 0..n {
        let c = (i + offset) % 3;
        let w = &WORDS[c];
        let line = format!("{} {} labari {}", w[i % 4], w[(i + 1) % 4], i % 7);
        gold.push_str(&format!("{}\t{line}\n", CLASSES[c]));
        let wc = if i % 5 == 0 { (c + 1) % 3 } else { c };
        weak.push_str(&format!("{}\t{line}\n", CLASSES[wc]));
    }
    let g = dir.join(format!("gold{offset}.tsv"));
    let wk = dir.join(format!("weak{offset}.tsv"));
    fs::write(&g, gold).unwrap();
    fs::write(&wk, weak).unwrap();
    (g, wk)
}

fn embeddings(dir: &Path, zero: bool) -> PathBuf {
    let mut text = String::from("13 3\n");
    for (c, ws) in WORDS.iter().enumerate() {
        for w in ws {
            let v: Vec<String> = (0..3)
                .map(|j| {
                    if zero {
                        "0".into()
                    } else if j == c {
                        "1".into()
                    } else {
                        "0.1".into()
                    }
                })
                .collect();
            text.push_str(&format!("{w} {}\n", v.join(" ")));
        }
    }
    text.push_str(if zero {
        "labari 0 0 0\n"
    } else {
        "labari 0.2 0.2 0.2\n"
    });
    let path = dir.join(if zero { "zero.vec" } else { "emb.vec" });
    fs::write(&path, text).unwrap();
    path
}

fn curve_config(dir: &Path, zero: bool) -> PathBuf {
    let (train, weak) = topic_files(dir, 60, 0);
    let (dev, _) = topic_files(dir, 15, 1);
    let (test, _) = topic_files(dir, 21, 2);
    let emb = embeddings(dir, zero);
    let cfg = format!(
        "task = topic\ntrain = {}\nweak = {}\ndev = {}\ntest = {}\nembeddings = {}\n\
         sizes = 10,40\nseeds = 2\nseed = 3\nepochs = 30\nlearning_rate = 0.5\nsettings = clean channel\n",
        p(&train),
        p(&weak),
        p(&dev),
        p(&test),
        p(&emb)
    );
    let path = dir.join("exp.ini");
    fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&weaksup(&[])), 1);
    assert_eq!(code(&weaksup(&["frobnicate"])), 1);
    assert_eq!(code(&weaksup(&["split", "--task", "ner"])), 1);
    assert_eq!(
        code(&weaksup(&[
            "split", "--task", "pos", "--input", "x", "--out", "y"
        ])),
        1
    );
    assert_eq!(code(&weaksup(&["--help"])), 0);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conll");
    fs::write(&bad, "kano\tX-LOC\n").unwrap();
    let out = dir.path().join("cm.tsv");
    let o = weaksup(&[
        "estimate-cm",
        "--task",
        "ner",
        "--clean",
        p(&bad),
        "--weak",
        p(&bad),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
    let o = weaksup(&[
        "eval-rules",
        "--task",
        "ner",
        "--gold",
        "/nonexistent",
        "--weak",
        p(&bad),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn split_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let (gold, _) = topic_files(dir.path(), 50, 0);
    let out = dir.path().join("parts");
    let o = weaksup(&[
        "split",
        "--task",
        "topic",
        "--input",
        p(&gold),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let lines = |f: &str| fs::read_to_string(out.join(f)).unwrap().lines().count();
    assert_eq!(
        (lines("train.tsv"), lines("dev.tsv"), lines("test.tsv")),
        (35, 5, 10)
    );
}

#[test]
fn eval_rules_and_estimate_cm() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.conll");
    let weak = dir.path().join("weak.conll");
    fs::write(
        &gold,
        "Muhammadu\tB-PER\nBuhari\tI-PER\nya\tO\nje\tO\nKano\tB-LOC\n",
    )
    .unwrap();
    fs::write(
        &weak,
        "Muhammadu\tB-PER\nBuhari\tI-PER\nya\tO\nje\tB-LOC\nKano\tB-LOC\n",
    )
    .unwrap();
    let o = weaksup(&[
        "eval-rules",
        "--task",
        "ner",
        "--gold",
        p(&gold),
        "--weak",
        p(&weak),
    ]);
    assert_eq!(code(&o), 0);
    let table = stdout(&o);
    assert!(table.contains("PER") && table.contains("LOC"), "{table}");

    let cm = dir.path().join("cm.tsv");
    let o = weaksup(&[
        "estimate-cm",
        "--task",
        "ner",
        "--clean",
        p(&gold),
        "--weak",
        p(&weak),
        "--beta",
        "0.8",
        "--out",
        p(&cm),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&cm).unwrap();
    assert!(text.starts_with("O\tB-LOC\tI-LOC\tB-PER\tI-PER"), "{text}");
    for row in text.lines().skip(1) {
        let sum: f64 = row.split('\t').map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}

#[test]
fn annotate_with_date_rules() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.conll");
    let tokens = [
        "ranar", "18", "ga", "watan", "Mayu", ",", "shekarar", "2019", "ne",
    ];
    fs::write(
        &input,
        tokens
            .iter()
            .map(|t| format!("{t}\tO\n"))
            .collect::<String>(),
    )
    .unwrap();
    let rules = dir.path().join("rules.ini");
    fs::write(&rules, "language = hausa\n[date]\n").unwrap();
    let out = dir.path().join("weak.conll");
    let o = weaksup(&[
        "annotate",
        "--task",
        "ner",
        "--input",
        p(&input),
        "--rules",
        p(&rules),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let tags: Vec<String> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(
        tags,
        ["B-DATE", "I-DATE", "I-DATE", "I-DATE", "I-DATE", "I-DATE", "I-DATE", "I-DATE", "O"]
    );
}

#[test]
fn train_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (train, weak) = topic_files(d, 30, 0);
    let (dev, _) = topic_files(d, 9, 1);
    let emb = embeddings(d, false);
    let cm = d.join("cm.tsv");
    assert_eq!(
        code(&weaksup(&[
            "estimate-cm",
            "--task",
            "topic",
            "--clean",
            p(&train),
            "--weak",
            p(&weak),
            "--beta",
            "0.8",
            "--out",
            p(&cm),
        ])),
        0
    );
    let model = d.join("model.txt");
    let history = d.join("history.csv");
    let o = weaksup(&[
        "train",
        "--task",
        "topic",
        "--train",
        p(&train),
        "--dev",
        p(&dev),
        "--embeddings",
        p(&emb),
        "--noisy",
        p(&weak),
        "--cm",
        p(&cm),
        "--epochs",
        "10",
        "--seed",
        "4",
        "--history",
        p(&history),
        "--out",
        p(&model),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let hist = fs::read_to_string(&history).unwrap();
    assert_eq!(hist.lines().count(), 11);
    assert!(
        hist.lines().skip(1).all(|l| l.ends_with(",30,30")),
        "{hist}"
    );

    let csv = d.join("metrics.csv");
    let o = weaksup(&[
        "evaluate",
        "--model",
        p(&model),
        "--test",
        p(&dev),
        "--embeddings",
        p(&emb),
        "--csv",
        p(&csv),
    ]);
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(&csv)
        .unwrap()
        .starts_with("setting,seed,label,precision,recall,f1,support\n"));

    let o = weaksup(&[
        "train",
        "--task",
        "topic",
        "--train",
        p(&train),
        "--dev",
        p(&dev),
        "--embeddings",
        p(&emb),
        "--noisy",
        p(&weak),
        "--out",
        p(&model),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn curve_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = curve_config(dir.path(), false);
    let run = |out: &Path| {
        let o = weaksup(&["curve", "--config", p(&cfg), "--out", p(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read_to_string(out.join("runs.csv")).unwrap(),
            fs::read_to_string(out.join("summary.csv")).unwrap(),
        )
    };
    let (runs, summary) = run(&dir.path().join("a"));
    assert_eq!((runs, summary.clone()), run(&dir.path().join("b")));
    let (runs, _) = run(&dir.path().join("a"));
    assert_eq!(runs.lines().next(), Some("setting,size,seed,f1"));
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 2);
    assert_eq!(summary.lines().next(), Some("setting,size,mean_f1,stderr"));
    assert_eq!(summary.lines().count(), 1 + 2 * 2);

    let out = dir.path().join("c");
    let o = weaksup(&[
        "curve",
        "--config",
        p(&cfg),
        "--out",
        p(&out),
        "--sizes",
        "10",
        "--seed",
        "9",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read_to_string(out.join("runs.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 2 * 2
    );
}

#[test]
fn degenerate_runs_exit_3_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = curve_config(dir.path(), true);
    let out = dir.path().join("out");
    let o = weaksup(&["curve", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("runs.csv").exists());
    assert!(!out.join("summary.csv").exists());
}
