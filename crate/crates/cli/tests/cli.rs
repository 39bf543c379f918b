use std::path::Path;
use std::process::{Command, Output};

use dperm::RunConfig;
use tempfile::TempDir;

fn dperm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dperm"))
        .args(args)
        .current_dir(dir)
        .env_remove("DPERM_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const AUDIT: &str = r#"
experiment = "audit"
mechanism = "exponential"
epsilon = 1.0
n = 3
resolution = 16
universe = [0.25, 0.75]
output = "audit.csv"
"#;

#[test]
fn tiny_exponential_audit_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "audit.toml", AUDIT);
    let out = dperm(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(dir.path().join("audit.csv")).unwrap();
    let headers: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        headers,
        ["experiment", "mechanism", "problem", "n", "epsilon", "delta", "seed", "metric", "value", "stderr", "bound", "pass"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    let ratio = rows.iter().find(|r| &r[7] == "max_log_ratio").unwrap();
    let value: f64 = ratio[8].parse().unwrap();
    assert!(value > 0.0 && value <= 1.0);
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(summary["failed"], 0);
}

#[test]
fn manifest_echo_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "audit.toml", AUDIT);
    assert_eq!(dperm(dir.path(), &["run", &cfg]).status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("audit.csv.manifest.json")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&text).unwrap();
    let echoed = RunConfig::parse(manifest["config"].as_str().unwrap()).unwrap();
    assert_eq!(echoed, RunConfig::parse(AUDIT).unwrap());
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn reruns_and_thread_counts_give_identical_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "experiment = \"consistency\"\nn = 20\ntrials = 200\nseed = 5\noutput = \"c.csv\"\n",
    );
    let mut outputs = Vec::new();
    for threads in ["1", "3", "1"] {
        let out = Command::new(env!("CARGO_BIN_EXE_dperm"))
            .args(["run", &cfg])
            .current_dir(dir.path())
            .env("DPERM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        outputs.push(std::fs::read(dir.path().join("c.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "audit.toml", AUDIT);
    let out = Command::new(env!("CARGO_BIN_EXE_dperm"))
        .args(["run", &cfg])
        .current_dir(dir.path())
        .env("DPERM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("DPERM_THREADS"));
}

#[test]
fn config_errors_have_distinct_prefixes() {
    let dir = TempDir::new().unwrap();
    let missing = dperm(dir.path(), &["run", "nowhere.toml"]);
    let typo = write(dir.path(), "typo.toml", "experiment = \"audit\"\nepsilonn = 1.0\n");
    let typo = dperm(dir.path(), &["run", &typo]);
    let unknown = write(dir.path(), "unknown.toml", "experiment = \"telepathy\"\n");
    let unknown = dperm(dir.path(), &["run", &unknown]);
    for out in [&missing, &typo, &unknown] {
        assert_eq!(out.status.code(), Some(1));
    }
    assert!(stderr(&missing).starts_with("error: cannot read file"));
    assert!(stderr(&typo).starts_with("error: config schema violation"));
    assert!(stderr(&typo).contains("epsilonn"));
    assert!(stderr(&unknown).starts_with("error: unknown experiment `telepathy`"));
}

#[test]
fn oversized_packing_is_a_size_limit_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "big.toml", "experiment = \"counterexample\"\nepsilon = 2.0\nn = 20\n");
    let out = dperm(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("size limit"), "{}", stderr(&out));
}

#[test]
fn failed_check_exits_two_with_witnesses() {
    // the worst packed gap drifts down once the zero-risk intervals are resolved
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "ce.toml",
        "experiment = \"counterexample\"\nresolutions = [16, 256, 65536]\noutput = \"ce.csv\"\n",
    );
    let out = dperm(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(summary["failed"].as_u64().unwrap() >= 1);
    assert_eq!(summary["witnesses"].as_array().unwrap().len(), 3);
    assert!(summary["failures"][0]["metric"].as_str().unwrap().starts_with("gap_drop"));

    let s = dperm(dir.path(), &["summarize", "ce.csv"]);
    assert_eq!(s.status.code(), Some(2));
}

#[test]
fn list_is_stable_and_has_a_json_form() {
    let dir = TempDir::new().unwrap();
    let a = stdout(&dperm(dir.path(), &["list"]));
    let b = stdout(&dperm(dir.path(), &["list"]));
    assert_eq!(a, b);
    assert!(a.starts_with("name"));
    assert!(a.lines().count() >= 4);
    for name in ["audit", "consistency", "counterexample"] {
        assert!(a.lines().any(|l| l.starts_with(name)));
    }
    let json: Vec<serde_json::Value> = serde_json::from_str(&stdout(&dperm(dir.path(), &["list", "--json"]))).unwrap();
    assert_eq!(json[0]["name"], "audit");
    assert!(json.iter().all(|e| e["topic"].is_string()));
}

#[test]
fn summarize_empty_mixed_and_failing_files() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "empty.csv", "");
    let out = dperm(dir.path(), &["summarize", "empty.csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "0 rows");

    let header = "experiment,mechanism,problem,n,epsilon,delta,seed,metric,value,stderr,bound,pass\n";
    write(
        dir.path(),
        "mixed.csv",
        &format!(
            "{header}audit,exponential,threshold,3,1.0,0.0,1,max_log_ratio,0.4,0.0,1.0,true\n\
             audit,exponential,threshold,3,1.0,0.0,1,realized_delta,0.0,0.0,0.0,true\n\
             aerm,exponential,threshold,100,1.0,0.0,1,aerm_gap,0.05,0.0,1.2,true\n"
        ),
    );
    let out = dperm(dir.path(), &["summarize", "mixed.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let audit = text.lines().find(|l| l.starts_with("audit")).unwrap();
    let cols: Vec<&str> = audit.split_whitespace().collect();
    assert_eq!(&cols[1..4], ["2", "2", "0"]);
    assert!(text.contains("3 rows"));

    write(
        dir.path(),
        "fail.csv",
        &format!("{header}rates,laplace-erm-mean,pth_power_mean,100,0.01,0.0,1,slope_outside_range,0.6,0.0,0.0,false\n"),
    );
    assert_eq!(dperm(dir.path(), &["summarize", "fail.csv"]).status.code(), Some(2));
    assert_eq!(dperm(dir.path(), &["summarize", "absent.csv"]).status.code(), Some(1));
}

#[test]
fn json_format_and_nested_output_directory() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "experiment = \"stability\"\nepsilon = 0.5\nformat = \"json\"\noutput = \"out/deep/s.json\"\n",
    );
    let out = dperm(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/deep/s.json")).unwrap()).unwrap();
    let stab = rows.iter().find(|r| r["metric"] == "stability").unwrap();
    assert!(stab["value"].as_f64().unwrap() <= 0.5f64.exp_m1());
    assert!(rows.iter().any(|r| r["metric"] == "stability_small_eps"));
}

#[test]
fn approximate_mechanisms_report_their_delta() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        "experiment = \"audit\"\nmechanism = \"subsampled-mixture\"\ndelta = 0.01\ngamma = 0.25\nn = 4\nuniverse = [0.3]\noutput = \"m.csv\"\n",
    );
    let out = dperm(dir.path(), &["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let delta_row = text.lines().find(|l| l.contains("realized_delta")).unwrap();
    let cols: Vec<&str> = delta_row.split(',').collect();
    let (value, bound): (f64, f64) = (cols[8].parse().unwrap(), cols[10].parse().unwrap());
    assert!(value <= bound + 1e-12);
    assert!((bound - 0.25 * 1f64.exp() * 0.01).abs() < 1e-12);
}
