//! The hand-built mini-repository under `tests/fixtures/minirepo` against its
//! hand-derived edge list in `tests/fixtures/minirepo.edges`.

use std::path::PathBuf;

use revertgraph::codegraph::{build_code_graph, SourceTree};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn expected_edges() -> Vec<(String, String)> {
    std::fs::read_to_string(fixture("minirepo.edges"))
        .unwrap()
        .lines()
        .map(|l| {
            let (a, b) = l.split_once(' ').unwrap();
            (a.to_string(), b.to_string())
        })
        .collect()
}

fn edges_by_path(exclude: &[String]) -> Vec<(String, String)> {
    let tree = SourceTree::load(&fixture("minirepo"), exclude).unwrap();
    let g = build_code_graph(&tree.files).unwrap();
    let p = g.node_paths();
    g.edges().into_iter().map(|(a, b)| (p[a].clone(), p[b].clone())).collect()
}

#[test]
fn mini_repo_has_the_expected_edges() {
    let tree = SourceTree::load(&fixture("minirepo"), &[]).unwrap();
    assert_eq!(tree.files.len(), 13);
    assert_eq!(edges_by_path(&[]), expected_edges());
}

#[test]
fn comment_and_string_imports_leave_a_node_isolated() {
    let tree = SourceTree::load(&fixture("minirepo"), &[]).unwrap();
    let g = build_code_graph(&tree.files).unwrap();
    let id = g.node_id("docs_text.py").unwrap();
    assert_eq!(g.topology().degree(id), 0);
}

#[test]
fn serialized_graph_is_stable() {
    let load = || {
        let tree = SourceTree::load(&fixture("minirepo"), &[]).unwrap();
        build_code_graph(&tree.files).unwrap().to_json()
    };
    assert_eq!(load(), load());
}

#[test]
fn excluded_paths_drop_their_edges() {
    let edges = edges_by_path(&["tests/**".to_string()]);
    let expected: Vec<_> = expected_edges().into_iter().filter(|(a, b)| !a.starts_with("tests/") && !b.starts_with("tests/")).collect();
    assert_eq!(edges, expected);
}
