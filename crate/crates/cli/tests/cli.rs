use std::process::{Command, Output};

use serde_json::Value;

fn dyadic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadic"))
        .args(args)
        .env_remove("DYADIC_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = dyadic(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn lvalue_examples() {
    let out = dyadic(&["lvalue", "--n", "1", "--m", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "L(χ1, -1) = -1\nord2 = 0/1\n");

    let out = dyadic(&["lvalue", "--n", "0", "--d", "1", "--m", "2"]);
    assert!(stdout(&out).starts_with("L(1, -1) = -1/12\n"));

    let v = json(&["lvalue", "--n", "3", "--d", "5", "--m", "2", "--json"]);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["convention"], "chi_n(5) = zeta_{2^n}");
    assert_eq!(v["result"]["ord2"], "1/1");
}

#[test]
fn lvalue_json_round_trips() {
    let v = json(&["lvalue", "--n", "2", "--d", "15", "--m", "4", "--json"]);
    let result: dyadic_core::LValueResult = serde_json::from_value(v["result"].clone()).unwrap();
    let spec = dyadic_core::CharSpec::new(2, 15, 1).unwrap();
    let direct = dyadic_core::LValueEngine::new().l_value(&spec, 4).unwrap();
    assert_eq!(result, direct);
}

#[test]
fn invariants_examples() {
    let v = json(&["invariants", "--d", "5", "--m", "2", "--json"]);
    assert_eq!(v["result"]["mu"], 2);
    assert_eq!(v["result"]["lambda"], 0);
    let triple: dyadic_core::iwasawa::InvariantTriple =
        serde_json::from_value(v["result"].clone()).unwrap();
    assert_eq!(triple.d, 5);

    let v = json(&["invariants", "--d", "1", "--m", "4", "--json"]);
    assert_eq!(
        (v["result"]["mu"].as_i64(), v["result"]["lambda"].as_i64()),
        (Some(0), Some(0))
    );

    assert_eq!(dyadic(&["invariants", "--d", "4"]).status.code(), Some(2));
    assert_eq!(dyadic(&["invariants", "--d", "9"]).status.code(), Some(2));
}

#[test]
fn kgroup_and_structure() {
    let v = json(&["kgroup", "--n", "3", "--json"]);
    assert_eq!(v["result"]["e"], 8);
    let v = json(&["kgroup", "--n", "2", "--m", "4", "--json"]);
    assert_eq!(v["result"]["e"], 0);
    let out = dyadic(&["structure", "--n", "2", "--d", "5"]);
    assert!(stdout(&out).contains("(Z/2)^8"));
    // 2 splits in Q(√7), so no per-family g2 is known
    assert_eq!(
        dyadic(&["structure", "--n", "1", "--d", "7"]).status.code(),
        Some(2)
    );
    assert_eq!(
        dyadic(&["structure", "--n", "1", "--d", "7", "--g2", "2"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn verify_exit_codes() {
    let ok = dyadic(&["verify", "--n", "2,3", "--d", "3,15", "--m", "2"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).ends_with("16 passed, 0 failed\n"));

    let fault = dyadic(&[
        "verify",
        "--n",
        "2",
        "--d",
        "3",
        "--m",
        "2",
        "--inject-fault",
    ]);
    assert_eq!(fault.status.code(), Some(1));
    assert!(stdout(&fault).contains("FAIL "));

    assert_eq!(
        dyadic(&["verify", "--check", "no_such"]).status.code(),
        Some(2)
    );
    assert_eq!(dyadic(&["verify", "--m", "3"]).status.code(), Some(2));
}

#[test]
fn verify_single_check() {
    let out = dyadic(&["verify", "--check", "chi_product", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 1);
}

#[test]
fn verify_reports_reverify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reports.jsonl");
    let p = path.to_str().unwrap();
    let out = dyadic(&[
        "verify",
        "--n",
        "2",
        "--d",
        "3,5",
        "--m",
        "2",
        "--reports",
        p,
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(dyadic(&["verify", "--reverify", p]).status.code(), Some(0));

    let faulty = dir.path().join("faulty.jsonl");
    let f = faulty.to_str().unwrap();
    dyadic(&[
        "verify",
        "--n",
        "2",
        "--d",
        "3",
        "--m",
        "2",
        "--inject-fault",
        "--reports",
        f,
    ]);
    assert_eq!(dyadic(&["verify", "--reverify", f]).status.code(), Some(1));
}

#[test]
fn sweep_is_deterministic_across_jobs() {
    let args = ["sweep", "--ds", "3,5,15,21", "--n-max", "5", "--ms", "2,4"];
    let outputs: Vec<String> = ["1", "4", "8"]
        .iter()
        .map(|j| {
            let mut full = vec!["--jobs", j];
            full.extend_from_slice(&args);
            let out = dyadic(&full);
            assert_eq!(out.status.code(), Some(0));
            stdout(&out)
        })
        .collect();
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let lines: Vec<&str> = outputs[0].lines().collect();
    assert_eq!(
        lines[0],
        "d,n,m,ord2_computed,ord2_predicted,match,n_d_ceiling,n_d_refined"
    );
    assert_eq!(lines.len(), 1 + 4 * 5 * 2);
}

#[test]
fn sweep_matches_past_refined_bound() {
    let out = dyadic(&["sweep", "--ds", "3,5,15", "--n-max", "5", "--ms", "2"]);
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    for rec in reader.records() {
        let rec = rec.unwrap();
        let n: u32 = rec[1].parse().unwrap();
        let refined: u32 = rec[7].parse().unwrap();
        if n >= refined {
            assert_eq!(&rec[5], "true", "{rec:?}");
        }
    }
}

#[test]
fn size_guard_needs_override() {
    assert_eq!(
        dyadic(&["sweep", "--ds", "3", "--n-max", "30"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        dyadic(&["lvalue", "--n", "20", "--d", "105"]).status.code(),
        Some(2)
    );
}

#[test]
fn warm_cache_gives_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let c = cache.to_str().unwrap();
    let args = ["--cache", c, "sweep", "--ds", "5,15", "--n-max", "4"];
    let cold = dyadic(&args);
    let warm = dyadic(&args);
    assert_eq!(cold.status.code(), Some(0));
    assert_eq!(cold.stdout, warm.stdout);
    assert!(std::fs::read_to_string(&cache).unwrap().lines().count() > 1);

    let env = Command::new(env!("CARGO_BIN_EXE_dyadic"))
        .args(["sweep", "--ds", "5,15", "--n-max", "4"])
        .env("DYADIC_CACHE", c)
        .output()
        .unwrap();
    assert_eq!(env.stdout, cold.stdout);
}

#[test]
fn corrupt_cache_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    std::fs::write(&cache, "not json\n").unwrap();
    let out = dyadic(&["--cache", cache.to_str().unwrap(), "lvalue", "--n", "1"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn threshold_reports_bounds() {
    let v = json(&["threshold", "--d", "15", "--json"]);
    assert_eq!(v["result"]["bound"]["ceiling"], 3);
    assert_eq!(v["result"]["bound"]["refined"], 2);
    assert!(v["result"]["observed"].as_u64().unwrap() <= 2);
}
