use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_memplan"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_chain(dir: &Path, name: &str, depth: usize, size: u64) -> PathBuf {
    let records: Vec<_> = (0..depth)
        .map(|i| serde_json::json!({ "id": i, "first": i, "last": i + 1, "size": size }))
        .collect();
    let path = dir.join(name);
    fs::write(&path, serde_json::json!({ "records": records }).to_string()).unwrap();
    path
}

#[test]
fn chain_plan_in_offsets_mode_is_twice_the_size() {
    let dir = TempDir::new().unwrap();
    let chain = write_chain(dir.path(), "chain.json", 4, 64);
    let out = run(&[
        "plan",
        path_str(&chain),
        "--mode",
        "offsets",
        "--strategy",
        "greedy-by-size",
    ]);
    assert!(out.status.success(), "{out:?}");
    let plan: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(plan["mode"], "offsets");
    assert_eq!(plan["footprint"], 128);
}

#[test]
fn offsets_strategy_in_shared_mode_is_a_usage_error() {
    let out = run(&[
        "plan",
        path_str(&data("sample_network_records.json")),
        "--mode",
        "shared",
        "--strategy",
        "greedy-by-breadth-offsets",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not available in shared mode"));
}

#[test]
fn bad_flags_exit_with_usage_code() {
    assert_eq!(run(&["plan"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn plans_are_deterministic() {
    let model = data("sample_network_model.json");
    for (mode, strategy) in [
        ("shared", "greedy-by-size-improved"),
        ("shared", "greedy-by-breadth"),
        ("offsets", "greedy-by-breadth"),
        ("offsets", "shared:greedy-by-size"),
        ("offsets", "naive"),
    ] {
        let args = [
            "plan",
            path_str(&model),
            "--mode",
            mode,
            "--strategy",
            strategy,
        ];
        let a = run(&args);
        let b = run(&args);
        assert!(a.status.success(), "{mode} {strategy}: {a:?}");
        assert_eq!(a.stdout, b.stdout, "{mode} {strategy}");
    }
}

#[test]
fn bounds_of_sample_network() {
    let out = run(&["bounds", path_str(&data("sample_network_records.json"))]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["shared_lower_bound"], 128);
    assert_eq!(v["offset_lower_bound"], 124);
    assert_eq!(v["positional_maximums"], serde_json::json!([64, 40, 16, 8]));
}

#[test]
fn validate_accepts_good_and_rejects_tampered_plans() {
    let dir = TempDir::new().unwrap();
    let records = data("sample_network_records.json");
    let plan_path = dir.path().join("plan.json");
    let out = run(&[
        "plan",
        path_str(&records),
        "--mode",
        "offsets",
        "--strategy",
        "greedy-by-size",
        "-o",
        path_str(&plan_path),
    ]);
    assert!(out.status.success());
    let ok = run(&["validate", path_str(&plan_path), path_str(&records)]);
    assert_eq!(ok.status.code(), Some(0));

    let mut plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&plan_path).unwrap()).unwrap();
    // t6 and t7 are both live at operators 7 and 8.
    plan["assignment"]["6"] = plan["assignment"]["7"].clone();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, plan.to_string()).unwrap();
    let out = run(&["validate", path_str(&bad), path_str(&records)]);
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ok"], false);
    assert_eq!(report["violations"][0]["kind"], "overlap-in-memory");

    let render = run(&["render", path_str(&bad), path_str(&records)]);
    assert_eq!(render.status.code(), Some(2));
}

#[test]
fn oracle_refuses_instances_above_cap() {
    let dir = TempDir::new().unwrap();
    let chain = write_chain(dir.path(), "chain.json", 9, 8);
    let out = run(&["oracle", path_str(&chain), "--mode", "offsets"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["oracle", path_str(&chain), "--mode", "shared"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["optimum"], 16);
}

#[test]
fn gen_matches_golden() {
    let out = run(&["gen", "--seed", "1", "--ops", "5"]);
    assert!(out.status.success());
    let expected = fs::read_to_string(golden("gen_seed1_ops5.json")).unwrap();
    assert_eq!(stdout(&out), expected);
}

#[test]
fn gen_without_residuals_is_a_chain() {
    let out = run(&[
        "gen",
        "--seed",
        "7",
        "--ops",
        "6",
        "--tensors",
        "5",
        "--residual-prob",
        "0",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for op in v["operators"].as_array().unwrap() {
        assert_eq!(op["inputs"].as_array().unwrap().len(), 1, "{op}");
    }
    let bad = run(&["gen", "--ops", "5", "--tensors", "2"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn render_matches_golden() {
    let dir = TempDir::new().unwrap();
    let records = data("sample_network_records.json");
    let plan_path = dir.path().join("plan.json");
    let out = run(&[
        "plan",
        path_str(&records),
        "--mode",
        "offsets",
        "--strategy",
        "greedy-by-size",
        "-o",
        path_str(&plan_path),
    ]);
    assert!(out.status.success());
    for (format, file) in [
        ("ascii", "sample_offsets_greedy_by_size.txt"),
        ("svg", "sample_offsets_greedy_by_size.svg"),
    ] {
        let out = run(&[
            "render",
            path_str(&plan_path),
            path_str(&records),
            "--format",
            format,
        ]);
        assert!(out.status.success());
        assert_eq!(
            stdout(&out),
            fs::read_to_string(golden(file)).unwrap(),
            "{format}"
        );
    }
}

#[test]
fn bench_over_chains() {
    let dir = TempDir::new().unwrap();
    for d in 2..5 {
        write_chain(dir.path(), &format!("chain-{d}.json"), d, 64);
    }
    fs::write(dir.path().join("broken.json"), "{ not json").unwrap();
    let args = [
        "bench",
        path_str(dir.path()),
        "--oracle-cap",
        "8",
        "--jobs",
        "2",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{a:?}");
    assert_eq!(a.stdout, b.stdout);

    let csv = stdout(&a);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "instance,strategy,mode,footprint,lower_bound,naive,time_us,optimum,gap"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * 6);
    for row in rows.iter().filter(|r| r[1] != "naive") {
        assert_eq!(row[3], "128", "{row:?}");
        assert_eq!(row[4], "128");
        assert_eq!(row[8], "0");
    }
}

#[test]
fn bench_corpus_written_by_gen_is_clean() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    let out = run(&[
        "gen",
        "--corpus",
        path_str(&corpus),
        "--count",
        "20",
        "--small",
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read_dir(&corpus).unwrap().count(), 20);
    let out = run(&[
        "bench",
        path_str(&corpus),
        "--oracle-cap",
        "8",
        "--format",
        "json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 20);
    assert_eq!(rows[0]["instance"], "corpus-0001");
}
