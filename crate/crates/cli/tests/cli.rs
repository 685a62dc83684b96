use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use minmax_core::rng::SplitMix64;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minmax"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn minmax")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

/// Two noisy prototypes over 20 features, 200 rows.
fn two_class_file(seed: u64) -> String {
    let mut g = SplitMix64::new(seed);
    let mut body = String::new();
    for n in 0..200 {
        let label = if n % 2 == 0 { 1 } else { -1 };
        body.push_str(&label.to_string());
        for i in 1..=20 {
            let base = if (i % 2 == 0) == (label == 1) { 4.0 } else { 0.5 };
            if g.next_closed_open01() < 0.8 {
                body.push_str(&format!(" {i}:{:.4}", base * (0.5 + g.next_closed_open01())));
            }
        }
        body.push('\n');
    }
    body
}

#[test]
fn gram_on_three_vectors() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.svm", "1 1:1\n2 2:1\n1 1:1 2:1\n");
    ok(dir.path(), &["gram", "--kernel", "minmax", "--train", "d.svm", "--out", "g.txt"]);
    let text = fs::read_to_string(dir.path().join("g.txt")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["1 0:1 1:1 2:0 3:0.5", "2 0:2 1:0 2:1 3:0.5", "1 0:3 1:0.5 2:0.5 3:1"]);
}

#[test]
fn gram_streams_through_stdio() {
    let mut child = bin()
        .args(["gram", "--kernel", "resemblance", "--train", "-", "--out", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"0 1:3 2:1\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0 0:1 1:1\n");
}

#[test]
fn sketch_and_encode_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.svm", &two_class_file(1));
    let sketch = ["sketch", "--k", "64", "--seed", "9", "--dimension", "20", "--in", "d.svm", "--out"];
    ok(dir.path(), &[&sketch[..], &["a.sk"]].concat());
    ok(dir.path(), &[&sketch[..], &["b.sk"]].concat());
    ok(dir.path(), &[&["--threads", "1"], &sketch[..], &["c.sk"]].concat());
    let a = fs::read(dir.path().join("a.sk")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.sk")).unwrap());
    assert_eq!(a, fs::read(dir.path().join("c.sk")).unwrap());

    let encode = ["encode", "--bi", "5", "--bt", "0", "--in", "a.sk", "--labels", "d.svm", "--out"];
    let first = ok(dir.path(), &[&encode[..], &["-"]].concat()).stdout;
    let second = ok(dir.path(), &[&encode[..], &["-"]].concat()).stdout;
    assert_eq!(first, second);
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 200);
    assert!(text.starts_with("1 "));
}

#[test]
fn simulate_half_pair_matches_binomial_variance() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.svm", "0 1:1 2:2\n0 1:2 2:1\n");
    let args = ["simulate", "--pairs", "p.svm", "--k-grid", "100", "--schemes", "full", "--reps", "10000", "--seed", "3"];
    ok(dir.path(), &[&args[..], &["--out", "r.csv"]].concat());
    ok(dir.path(), &[&args[..], &["--out", "r2.csv"]].concat());
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(dir.path().join("r2.csv")).unwrap());
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("pair,k,scheme,bias,mse,theoretical_var,n_reps"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..3], ["1", "100", "full"]);
    let mse: f64 = row[4].parse().unwrap();
    assert!((0.00225..=0.00275).contains(&mse), "mse {mse}");
    assert_eq!(row[5], "0.0025");
}

#[test]
fn train_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "train.svm", &two_class_file(2));
    write(dir.path(), "test.svm", &two_class_file(3));
    for name in ["train", "test"] {
        let data = format!("{name}.svm");
        let sk = format!("{name}.sk");
        let enc = format!("{name}.enc");
        ok(dir.path(), &["sketch", "--k", "64", "--seed", "5", "--dimension", "20", "--in", &data, "--out", &sk]);
        ok(dir.path(), &["encode", "--bi", "5", "--bt", "1", "--in", &sk, "--labels", &data, "--out", &enc]);
    }
    let sweep = ok(
        dir.path(),
        &["train", "--train", "train.enc", "--test", "test.enc", "--bi", "5", "--bt", "1", "--seed", "1", "--out", "m.txt"],
    );
    assert_eq!(String::from_utf8(sweep.stdout).unwrap().lines().count(), 9);
    let eval = ok(dir.path(), &["eval", "--model", "m.txt", "--test", "test.enc"]);
    let text = String::from_utf8(eval.stdout).unwrap();
    let acc: f64 = text.trim().strip_prefix("accuracy=").unwrap().parse().unwrap();
    assert!(acc > 0.95, "accuracy {acc}");

    ok(dir.path(), &["train", "--raw", "--train", "train.svm", "--lambdas", "0.001", "--seed", "1", "--out", "raw.txt"]);
    let eval = ok(dir.path(), &["eval", "--model", "raw.txt", "--test", "test.svm"]);
    assert!(String::from_utf8(eval.stdout).unwrap().starts_with("accuracy="));
}

#[test]
fn failures_exit_with_class_and_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.svm", "1 1:1\n2 2:1\n");
    write(dir.path(), "neg.svm", "1 1:1\n2 2:-1\n");

    let usage = run(dir.path(), &["sketch", "--k", "4", "--dimension", "2", "--in", "d.svm", "--out", "x"]);
    assert_eq!(usage.status.code(), Some(1));
    let data = run(dir.path(), &["sketch", "--k", "4", "--seed", "1", "--dimension", "2", "--in", "neg.svm", "--out", "x"]);
    assert_eq!(data.status.code(), Some(2));
    let stderr = String::from_utf8(data.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    assert!(stderr.contains("line 2"), "{stderr}");
    write(dir.path(), "big.svm", "1 1:3\n");
    let numeric = run(dir.path(), &["gram", "--kernel", "linear", "--train", "big.svm", "--out", "x"]);
    assert_eq!(numeric.status.code(), Some(3));

    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| !n.ends_with(".svm"))
        .collect();
    assert_eq!(leftovers, Vec::<String>::new());
}

#[test]
fn encode_rejects_label_count_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "d.svm", "1 1:1\n2 2:1\n");
    write(dir.path(), "one.svm", "1 1:1\n");
    ok(dir.path(), &["sketch", "--k", "3", "--seed", "1", "--dimension", "2", "--in", "d.svm", "--out", "s.sk"]);
    let out = run(dir.path(), &["encode", "--bi", "1", "--bt", "0", "--in", "s.sk", "--labels", "one.svm", "--out", "e"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("e").exists());
}
