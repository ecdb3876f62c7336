use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sysnet::evolution::{filter_sners, merge, snp_metric, StateRules};
use sysnet::miner::{mine_state_bruteforce, MineParams};
use sysnet::preprocess::read_series;

fn sysnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sysnet"))
        .args(args)
        .output()
        .expect("run sysnet")
}

fn ok(args: &[&str]) -> String {
    let out = sysnet(args);
    assert!(
        out.status.success(),
        "sysnet {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn write_snapshots(dir: &Path, states: &[(&str, &str)]) {
    fs::create_dir_all(dir).unwrap();
    for (name, body) in states {
        fs::write(dir.join(name), body).unwrap();
    }
}

/// Three small call-graph-like states with overlapping structure.
fn example_series(dir: &Path) {
    write_snapshots(
        dir,
        &[
            ("v1.tsv", "main\tparse\nmain\tlog\nrun\tparse\nrun\tlog\ncli\tparse\n"),
            ("v2.tsv", "main\tparse\nmain\tlog\nrun\tparse\nrun\tlog\nrun\tsave\n"),
            ("v3.tsv", "main\tparse\nrun\tsave\ncli\tsave\ncli\tparse\n"),
        ],
    );
}

#[test]
fn preprocess_writes_one_db_per_state() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    example_series(&input);
    let out = tmp.path().join("out");
    let stdout = ok(&["preprocess", "--input", &s(&input), "--out", &s(&out)]);
    assert!(stdout.starts_with("N = 3\nK = 6\n"), "{stdout}");
    for i in 1..=3 {
        assert!(out.join(format!("SysNetDbs/SysNetDb_{i}_ID.txt")).is_file());
    }
    assert!(!out.join("SysNetDbs/SysNetDb_4_ID.txt").exists());
    let index = fs::read_to_string(out.join("IndexFile.txt")).unwrap();
    assert!(index.starts_with("1\tmain\n2\tparse\n3\tlog\n"), "{index}");
    assert_eq!(
        fs::read_to_string(out.join("SysNetDbs/SysNetDb_1_ID.txt")).unwrap(),
        "1 -1 2 3 -2\n4 -1 2 3 -2\n5 -1 2 -2\n"
    );
}

#[test]
fn preprocess_empty_dir_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("empty");
    fs::create_dir(&input).unwrap();
    let out = sysnet(&["preprocess", "--input", &s(&input), "--out", &s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no states found"));
}

#[test]
fn preprocess_follows_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    example_series(&input);
    let manifest = tmp.path().join("order.txt");
    fs::write(&manifest, "v3.tsv\nv1.tsv\n").unwrap();
    let out = tmp.path().join("out");
    ok(&["preprocess", "--input", &s(&input), "--manifest", &s(&manifest), "--out", &s(&out)]);
    let (dbs, _) = read_series(&out).unwrap();
    let labels: Vec<&str> = dbs.iter().map(|d| d.label.as_str()).collect();
    assert_eq!(labels, vec!["v3.tsv", "v1.tsv"]);
}

#[test]
fn preprocess_pair_files() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    write_snapshots(&input, &[("a.txt", "butter jam -> milk\nbread -> milk\n")]);
    let out = tmp.path().join("out");
    ok(&["preprocess", "--input", &s(&input), "--grouping", "pairs", "--out", &s(&out)]);
    assert_eq!(
        fs::read_to_string(out.join("SysNetDbs/SysNetDb_1_ID.txt")).unwrap(),
        "1 2 -1 3 -2\n4 -1 3 -2\n"
    );

    write_snapshots(&input, &[("b.txt", "broken line\n")]);
    let bad = sysnet(&["preprocess", "--input", &s(&input), "--grouping", "pairs", "--out", &s(&out)]);
    assert_eq!(bad.status.code(), Some(3));
}

fn mine_args<'a>(db: &'a str, out: &'a str, triple: [&'a str; 3]) -> Vec<&'a str> {
    vec![
        "mine", "--db", db, "--min-sup-count", triple[0], "--min-conf", triple[1],
        "--min-stab-count", triple[2], "--out", out,
    ]
}

#[test]
fn mine_matches_oracle_counts_and_formula() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    example_series(&input);
    let series = tmp.path().join("series");
    ok(&["preprocess", "--input", &s(&input), "--out", &s(&series)]);
    let out = tmp.path().join("mined");
    let stdout = ok(&mine_args(&s(&series), &s(&out), ["1", "0.5", "2"]));

    // independent counts from the brute-force oracle
    let (dbs, _) = read_series(&series).unwrap();
    let params = MineParams::new(1, "0.5".parse().unwrap()).unwrap();
    let per_state: Vec<StateRules> = dbs
        .iter()
        .map(|db| StateRules {
            label: db.label.clone(),
            rules: mine_state_bruteforce(db, &params, false).unwrap(),
        })
        .collect();
    let ers = merge(&per_state).unwrap();
    let sners = filter_sners(&ers, 2).unwrap().len();
    assert!(stdout.contains(&format!("NERs: {}\n", ers.ner_count())), "{stdout}");
    assert!(stdout.contains(&format!("SNERs: {sners}\n")), "{stdout}");

    // SNP printed on stdout agrees with the formula applied to the files
    let lines = |f: &str| fs::read_to_string(out.join(f)).unwrap().lines().count();
    let from_files = snp_metric(2, 3, lines("SNERs_ID.txt"), lines("NERs_ID.txt")).unwrap();
    assert!(stdout.contains(&format!("SNP: {from_files:.2}\n")), "{stdout}");

    for i in 1..=3 {
        assert!(out.join(format!("netRules/net_Rules_{i}_ID.txt")).is_file());
    }
    let names = fs::read_to_string(out.join("SNERs_Name.txt")).unwrap();
    assert!(names.contains("main -> parse #STABCOUNT: 3 #STAB: 1.00"), "{names}");
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains(&format!("SNP: {from_files:.2}\n")), "{report}");
    let csv = fs::read_to_string(out.join("snp.csv")).unwrap();
    assert!(csv.starts_with("minSupCount,minConf,minStabCount,N,minStab,SNER_count,NER_count,SNER_fraction,SNP\n1,0.5,2,3,0.67,"));

    let again = tmp.path().join("again");
    ok(&mine_args(&s(&series), &s(&again), ["1", "0.5", "2"]));
    for f in ["NERs_ID.txt", "SNERs_ID.txt", "NERs_Name.txt", "SNERs_Name.txt", "report.txt", "snp.csv"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn mine_rejects_bad_thresholds() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    example_series(&input);
    let series = tmp.path().join("series");
    ok(&["preprocess", "--input", &s(&input), "--out", &s(&series)]);
    let out = s(&tmp.path().join("o"));
    let db = s(&series);
    assert_eq!(sysnet(&mine_args(&db, &out, ["2", "0.5", "4"])).status.code(), Some(2));
    assert_eq!(sysnet(&mine_args(&db, &out, ["0", "0.5", "2"])).status.code(), Some(2));
    assert_eq!(sysnet(&mine_args(&db, &out, ["2", "1.5", "2"])).status.code(), Some(2));
    let missing = s(&tmp.path().join("nowhere"));
    assert_eq!(sysnet(&mine_args(&missing, &out, ["2", "0.5", "2"])).status.code(), Some(3));
    assert_eq!(sysnet(&["mine", "--db", &db]).status.code(), Some(2));
}

#[test]
fn mine_classifies_new_state_against_previous_snp() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    example_series(&input);
    let series = tmp.path().join("series");
    ok(&["preprocess", "--input", &s(&input), "--out", &s(&series)]);
    let out = tmp.path().join("o");
    let (db, out_dir) = (s(&series), s(&out));
    let mut args = mine_args(&db, &out_dir, ["1", "0", "1"]);
    args.extend(["--previous-snp", "0"]);
    ok(&args);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("new state: MoreStableSeries"), "{report}");
}

fn sweep_rows(stdout: &str) -> Vec<Vec<String>> {
    stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn sweep_on_constant_series() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    let body = "a -> b c\na -> b\nd -> c\n";
    write_snapshots(&input, &[("1", body), ("2", body), ("3", body)]);
    let series = tmp.path().join("series");
    ok(&["preprocess", "--input", &s(&input), "--grouping", "pairs", "--out", &s(&series)]);
    let db = s(&series);
    let stdout = ok(&[
        "sweep", "--db", &db, "--min-sup-count", "2", "--min-conf", "0.5", "--min-stab-count", "1..3",
    ]);
    let snp: Vec<String> = sweep_rows(&stdout).into_iter().map(|r| r[8].clone()).collect();
    assert_eq!(snp, vec!["33.33", "66.67", "100.00"]);

    let stdout = ok(&[
        "sweep", "--db", &db, "--min-sup-count", "2", "--min-conf", "0.5", "--min-stab-count", "1..3",
        "--sort", "desc",
    ]);
    let snp: Vec<String> = sweep_rows(&stdout).into_iter().map(|r| r[8].clone()).collect();
    assert_eq!(snp, vec!["100.00", "66.67", "33.33"]);

    let stdout = ok(&[
        "sweep", "--db", &db, "--min-sup-count", "1,2,3", "--min-conf", "0.5", "--min-stab-count", "1,2,3",
        "--jobs", "4",
    ]);
    assert_eq!(sweep_rows(&stdout).len(), 9);
}

#[test]
fn sweep_on_volatile_series() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    write_snapshots(&input, &[("1", "a\tb\na\tc\n"), ("2", "d\te\nd\tf\n"), ("3", "g\th\n")]);
    let series = tmp.path().join("series");
    ok(&["preprocess", "--input", &s(&input), "--out", &s(&series)]);
    let csv = tmp.path().join("sweep.csv");
    ok(&[
        "sweep", "--db", &s(&series), "--min-sup-count", "1", "--min-conf", "0,0.5", "--min-stab-count", "2,3",
        "--out", &s(&csv),
    ]);
    let rows = sweep_rows(&fs::read_to_string(&csv).unwrap());
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[8] == "0.00"), "{rows:?}");

    let empty = sysnet(&["sweep", "--db", &s(&series), "--min-sup-count", "", "--min-conf", "0.5", "--min-stab-count", "1"]);
    assert_eq!(empty.status.code(), Some(2));
}

#[test]
fn gen_and_decode() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.txt");
    fs::write(&spec, "states = 3\nseed = 1\nplant = 1 -> 2 | 1,2 | 3\n").unwrap();
    let series = tmp.path().join("series");
    let stdout = ok(&["gen", "--spec", &s(&spec), "--out", &s(&series)]);
    assert!(stdout.starts_with("N = 3\n"), "{stdout}");
    assert_eq!(
        fs::read_to_string(series.join("SysNetDbs/SysNetDb_1_ID.txt")).unwrap(),
        "1 -1 2 -2\n".repeat(3)
    );
    assert_eq!(fs::read_to_string(series.join("SysNetDbs/SysNetDb_3_ID.txt")).unwrap(), "");

    let out = tmp.path().join("mined");
    let stdout = ok(&mine_args(&s(&series), &s(&out), ["3", "0.5", "2"]));
    assert!(stdout.contains("SNP: 66.67"), "{stdout}");

    let decoded = tmp.path().join("decoded.txt");
    ok(&[
        "decode", "--rules", &s(&out.join("NERs_ID.txt")), "--index", &s(&series.join("IndexFile.txt")),
        "--out", &s(&decoded),
    ]);
    assert_eq!(fs::read_to_string(&decoded).unwrap(), "e1 -> e2 #STABCOUNT: 2 #STAB: 0.67\n");

    let bad_spec = tmp.path().join("bad.txt");
    fs::write(&bad_spec, "states = 2\nnoise_pairs = 1\nnoise_ids = 1..4\nplant = 1 -> 2 | 1 | 1\n").unwrap();
    assert_eq!(sysnet(&["gen", "--spec", &s(&bad_spec), "--out", &s(&series)]).status.code(), Some(3));
}
