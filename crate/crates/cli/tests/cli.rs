use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn revertgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revertgraph")).args(args).output().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

/// Relative path → contents for every file under `dir`.
fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn missing_config_is_a_data_error_naming_the_path() {
    let out = revertgraph(&["run", "--config", "/nonexistent/matrix.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/matrix.json"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(revertgraph(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn synth_with_a_seed_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = revertgraph(&["synth", "--seed", "7", "-o", dir.path().to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let first = tree(a.path());
    assert!(first.contains_key(Path::new("labels.csv")));
    assert_eq!(first, tree(b.path()));
}

#[test]
fn extract_reproduces_the_mini_repo_edges() {
    let out = revertgraph(&["extract", fixture("minirepo").to_str().unwrap()]);
    assert!(out.status.success());
    let graph: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let nodes: Vec<&str> = graph["nodes"].as_array().unwrap().iter().map(|n| n.as_str().unwrap()).collect();
    let mut got: Vec<String> = graph["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| format!("{} {}", nodes[e[0].as_u64().unwrap() as usize], nodes[e[1].as_u64().unwrap() as usize]))
        .collect();
    got.sort();
    let expected = std::fs::read_to_string(fixture("minirepo.edges")).unwrap();
    assert_eq!(got, expected.lines().collect::<Vec<_>>());
}

#[test]
fn run_is_deterministic_apart_from_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("matrix.json");
    std::fs::write(
        &config,
        r#"{"dataset": {"synth": {"n_nodes": 300, "positive_rate": 0.08}},
            "strategies": [1, 2], "representations": ["raw"],
            "models": ["logreg", "lof"], "resamplers": ["none", "smote"], "seeds": [0, 1]}"#,
    )
    .unwrap();
    let run = || {
        let out = revertgraph(&["run", "--config", config.to_str().unwrap(), "--format", "json"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .map(|l| {
                let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                let obj = v.as_object_mut().unwrap();
                obj.remove("started_at");
                obj.remove("finished_at");
                v.to_string()
            })
            .collect::<Vec<_>>()
    };
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
}
