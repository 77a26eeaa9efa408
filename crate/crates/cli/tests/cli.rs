use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn densegen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_densegen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const DIAG_5: &str = "v:1;d:1;prec:33|v:inf;d:;prec:33|v:inf;d:;prec:33|v:-1;d:1;prec:31";
const IDENTITY: &str = "v:0;d:1;prec:32|v:inf;d:;prec:32|v:inf;d:;prec:32|v:0;d:1;prec:32";

#[test]
fn classify_diagonal_and_identity() {
    let o = densegen(&["classify", "--element", DIAG_5]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "Hyperbolic ℓ=2, v(tr)=-1, oracle agrees\n");
    let o = densegen(&["classify", "--element", IDENTITY]);
    assert!(stdout(&o).starts_with("Elliptic ℓ=0"));
}

#[test]
fn classify_zero_trace_refuses() {
    // [[0, 1], [-1, 0]] with diagonal known only modulo π^0
    let minus_one = format!("v:0;d:{};prec:32", vec!["4"; 32].join(","));
    let rot = format!("v:inf;d:;prec:0|v:0;d:1;prec:32|{minus_one}|v:inf;d:;prec:0");
    let rot = rot.as_str();
    let o = densegen(&["classify", "--element", rot]);
    let err = String::from_utf8_lossy(&o.stderr).to_string();
    assert_eq!(code(&o), 3, "{err}");
    assert!(err.contains("precision exhausted"));
}

#[test]
fn bad_input_exits_2() {
    assert_eq!(
        code(&densegen(&["classify", "--field", "padic:4:32", "--seed", "1"])),
        2
    );
    assert_eq!(code(&densegen(&["classify", "--element", "v:0;d:9;prec:1|x"])), 2);
    assert_eq!(code(&densegen(&["prg-census", "--p", "9"])), 2);
}

#[test]
fn census_guard_and_small_census() {
    let o = densegen(&["prg-census", "--p", "101"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget exceeded"));

    let o = densegen(&["prg-census", "--group", "psl2", "--p", "5", "--k", "3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("orbits on generating tuples 1\n"), "{}", stdout(&o));

    let o = densegen(&["prg-census", "--group", "psl2", "--p", "5", "--k", "2", "--csv"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("size,generating,trace_class,representative"));
    let rows: Vec<&str> = lines.collect();
    // three plain fields, then the quoted tuple
    assert!(rows.iter().all(|l| l
        .splitn(4, ',')
        .nth(3)
        .is_some_and(|r| r.starts_with('"') && r.ends_with('"'))));
    let total: u64 = rows
        .iter()
        .map(|l| l.split(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 60 * 60);
}

fn first_record(path: &Path) -> serde_json::Value {
    let text = fs::read_to_string(path).unwrap();
    serde_json::from_str(text.lines().next().unwrap()).unwrap()
}

fn write_lines(path: &Path, v: &serde_json::Value) {
    let lines: Vec<&str> = v.as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    fs::write(path, lines.join("\n")).unwrap();
}

#[test]
fn density_records_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.jsonl");
    let o = densegen(&[
        "experiment-density",
        "--trials",
        "6",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let o = densegen(&["verify", "--records", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "6 records checked, 1 skipped, 0 problems\n");

    let rec = first_record(&out);
    let gens = dir.path().join("g.txt");
    write_lines(&gens, &rec["generators"]);
    let o = densegen(&["certify", "--tuple", gens.to_str().unwrap()]);
    assert_eq!(stdout(&o), rec["certificate"].as_str().unwrap());

    let cert = dir.path().join("c.txt");
    fs::write(&cert, rec["certificate"].as_str().unwrap()).unwrap();
    let o = densegen(&[
        "verify",
        "--tuple",
        gens.to_str().unwrap(),
        "--certificate",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);

    // a certificate claiming the elliptic generator is unbounded is rejected
    let forged = rec["certificate"]
        .as_str()
        .unwrap()
        .replace("unbounded g1\n", "unbounded g2\n");
    fs::write(&cert, forged).unwrap();
    let o = densegen(&[
        "verify",
        "--tuple",
        gens.to_str().unwrap(),
        "--certificate",
        cert.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn normalize_records_and_words_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n.jsonl");
    let o = densegen(&[
        "normalize",
        "--trials",
        "10",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let o = densegen(&["verify", "--records", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let rec = first_record(&out);
    let tuple = dir.path().join("t.txt");
    write_lines(&tuple, &rec["tuple"]);
    let t = tuple.to_str().unwrap();
    let word = stdout(&densegen(&["normalize", "--tuple", t]));
    assert_eq!(word.trim_end(), rec["word"].as_str().unwrap());
    assert_eq!(code(&densegen(&["verify", "--tuple", t, "--word", word.trim_end()])), 0);

    let red = stdout(&densegen(&["reduce", "--tuple", t]));
    assert_eq!(
        code(&densegen(&[
            "verify",
            "--tuple",
            t,
            "--word",
            red.trim_end(),
            "--target",
            "elliptic"
        ])),
        0
    );
}

#[test]
fn tampered_record_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n.jsonl");
    densegen(&[
        "normalize",
        "--trials",
        "4",
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let mut rec: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    rec["verified"] = serde_json::Value::Bool(false);
    fs::write(&out, format!("{rec}\n")).unwrap();
    assert_eq!(code(&densegen(&["verify", "--records", out.to_str().unwrap()])), 1);
}

#[test]
fn experiments_ignore_thread_count() {
    for args in [
        vec!["experiment-density", "--trials", "5", "--seed", "11"],
        vec!["experiment-treeaut", "--trials", "5", "--seed", "11", "--depth", "8"],
        vec!["normalize", "--trials", "5", "--seed", "11"],
    ] {
        let run = |t: &str| {
            let mut a = args.clone();
            a.extend(["--threads", t]);
            stdout(&densegen(&a))
        };
        assert_eq!(run("1"), run("3"), "{args:?}");
    }
}

#[test]
fn zero_trials_give_a_summary_only() {
    let text = stdout(&densegen(&["experiment-density", "--trials", "0"]));
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("\"certified\":0") && !text.contains("NaN"));
}

#[test]
fn portrait_classification() {
    let dir = tempfile::tempdir().unwrap();
    let tree = densegen::treeaut::RegularTree::new(2).unwrap();
    let g = densegen::treeaut::TreePortrait::canonical_shift(tree, 2, 8).unwrap();
    let path = dir.path().join("p.txt");
    fs::write(&path, g.serialize()).unwrap();
    let o = densegen(&["classify", "--portrait", path.to_str().unwrap()]);
    assert!(stdout(&o).starts_with("Hyperbolic ℓ=4"), "{}", stdout(&o));
}
