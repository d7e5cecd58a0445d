use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fastds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastds")).args(args).output().expect("run fastds")
}

fn scratch() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn toy(dir: &Path) -> PathBuf {
    let p = dir.join("toy.csv");
    let mut text = String::from("question,annotator,option\n");
    for q in 0..6 {
        for a in 0..3 {
            text.push_str(&format!("q{q},a{a},{}\n", q % 2));
        }
    }
    std::fs::write(&p, text).unwrap();
    p
}

fn contested(dir: &Path) -> PathBuf {
    let p = dir.join("contested.csv");
    let rows = [[0, 0, 1], [1, 1, 0], [0, 1, 1], [1, 0, 0], [0, 0, 0], [1, 1, 1], [0, 1, 0], [1, 0, 1]];
    let mut text = String::from("question,annotator,option\n");
    for (q, row) in rows.iter().enumerate() {
        for (a, l) in row.iter().enumerate() {
            text.push_str(&format!("q{q},a{a},{l}\n"));
        }
    }
    std::fs::write(&p, text).unwrap();
    p
}

fn json(path: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn aggregate_toy_converges() {
    let dir = scratch();
    let input = toy(dir.path());
    let out = path(dir.path(), "report.json");
    let o = fastds(&["aggregate", "--input", input.to_str().unwrap(), "--algorithm", "fds", "--seed", "42", "--output", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out);
    assert_eq!(report["converged"], true);
    assert_eq!(report["labels"]["q0"], "0");
    assert_eq!(report["labels"]["q1"], "1");
}

#[test]
fn strict_non_convergence_exits_3() {
    let dir = scratch();
    let input = contested(dir.path());
    let args = ["aggregate", "--input", input.to_str().unwrap(), "--algorithm", "ds", "--max-iters", "1"];
    assert_eq!(fastds(&args).status.code(), Some(0));
    assert_eq!(fastds(&[&args[..], &["--strict"]].concat()).status.code(), Some(3));
}

#[test]
fn exit_codes_for_bad_input_and_usage() {
    let dir = scratch();
    let missing = path(dir.path(), "nope.csv");
    assert_eq!(fastds(&["aggregate", "--input", &missing, "--algorithm", "ds"]).status.code(), Some(2));
    assert_eq!(fastds(&["aggregate", "--bogus"]).status.code(), Some(64));
    assert_eq!(fastds(&["--help"]).status.code(), Some(0));

    let bad = dir.path().join("dup.csv");
    std::fs::write(&bad, "question,annotator,option\nq,a,0\nq,a,1\n").unwrap();
    let o = fastds(&["aggregate", "--input", bad.to_str().unwrap(), "--algorithm", "mv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let input = toy(dir.path());
    let o = fastds(&["aggregate", "--input", input.to_str().unwrap(), "--algorithm", "ds", "--tol", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_perfect_annotators_match_gold() {
    let dir = scratch();
    let run = |tag: &str| {
        let (v, g) = (path(dir.path(), &format!("v{tag}.csv")), path(dir.path(), &format!("g{tag}.csv")));
        let o = fastds(&[
            "simulate", "--questions", "10", "--annotators", "3", "--options", "2", "--votes-per-question", "3",
            "--accuracy", "1.0", "--seed", "5", "--out", &v, "--gold-out", &g,
        ]);
        assert_eq!(o.status.code(), Some(0));
        (std::fs::read_to_string(v).unwrap(), std::fs::read_to_string(g).unwrap())
    };
    let first = run("a");
    assert_eq!(first, run("b"));

    let gold: std::collections::HashMap<String, String> = first
        .1
        .lines()
        .skip(1)
        .map(|l| {
            let (q, c) = l.split_once(',').unwrap();
            (q.to_owned(), c.to_owned())
        })
        .collect();
    for line in first.0.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(gold[f[0]], f[2]);
    }

    let o = fastds(&[
        "simulate", "--questions", "10", "--annotators", "3", "--options", "2", "--votes-per-question", "4",
        "--accuracy", "0.9", "--out", &path(dir.path(), "x.csv"), "--gold-out", &path(dir.path(), "y.csv"),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fds_beats_or_ties_mv_on_simulated_votes() {
    let dir = scratch();
    let (v, g) = (path(dir.path(), "v.csv"), path(dir.path(), "g.csv"));
    fastds(&[
        "simulate", "--questions", "2000", "--annotators", "10", "--options", "3", "--votes-per-question", "5",
        "--accuracy", "0.8", "--seed", "1", "--out", &v, "--gold-out", &g,
    ]);
    let acc = |alg: &str| {
        let out = path(dir.path(), &format!("{alg}.json"));
        fastds(&["aggregate", "--input", &v, "--gold", &g, "--algorithm", alg, "--output", &out]);
        json(&out)["accuracy"].as_f64().unwrap()
    };
    let (mv, fds) = (acc("mv"), acc("fds"));
    assert!(fds + 0.005 >= mv, "fds {fds} mv {mv}");
}

#[test]
fn online_unanimous_stream_follows_the_votes() {
    let dir = scratch();
    let input = toy(dir.path());
    let out = path(dir.path(), "stream.jsonl");
    let o = fastds(&["online", "--input", input.to_str().unwrap(), "--initial", "3", "--output", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<Value> =
        std::fs::read_to_string(&out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    for (i, line) in lines[..3].iter().enumerate() {
        let want = ((i + 3) % 2).to_string();
        assert_eq!(line["chosen"], Value::String(want.clone()));
        assert_eq!(line["majority"], Value::String(want));
    }

    let o = fastds(&["online", "--input", input.to_str().unwrap(), "--initial", "6"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_at_k1_gives_equal_accuracy_and_plots() {
    let dir = scratch();
    let (v, g) = (path(dir.path(), "v.csv"), path(dir.path(), "g.csv"));
    fastds(&[
        "simulate", "--questions", "200", "--annotators", "8", "--options", "3", "--votes-per-question", "4",
        "--accuracy", "0.7", "--seed", "2", "--out", &v, "--gold-out", &g,
    ]);
    let (csv, plots) = (path(dir.path(), "sweep.csv"), path(dir.path(), "plots"));
    let o = fastds(&["sweep", "--input", &v, "--gold", &g, "--k-max", "1", "--out", &csv, "--plot", &plots]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let accs: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(accs.len(), 4);
    assert!(accs.iter().all(|a| *a == accs[0]), "{accs:?}");
    assert!(Path::new(&plots).join("accuracy.svg").exists());

    let replot = path(dir.path(), "replot");
    assert_eq!(fastds(&["plot", "--input", &csv, "--dir", &replot]).status.code(), Some(0));
    assert!(Path::new(&replot).join("iterations.svg").exists());
}
