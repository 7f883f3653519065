//! Undirected module-level import graph extracted statically from a source tree.

pub(crate) mod imports;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use imports::extract_imports;

/// Plain undirected adjacency: sorted, duplicate-free neighbor lists, no self-loops.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Topology {
    adj: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds from an edge list; self-loops and duplicates are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            assert!(a < n && b < n, "edge ({a},{b}) outside {n} nodes");
            if a != b {
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        Self {
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges as `(i, j)` with `i < j`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, nbrs) in self.adj.iter().enumerate() {
            out.extend(nbrs.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    /// Subgraph induced by `keep` (in the given order); node `k` of the result is `keep[k]`.
    pub fn induced(&self, keep: &[usize]) -> Topology {
        let mut pos = vec![usize::MAX; self.node_count()];
        for (k, &v) in keep.iter().enumerate() {
            pos[v] = k;
        }
        let mut edges = Vec::new();
        for (k, &v) in keep.iter().enumerate() {
            for &u in &self.adj[v] {
                if pos[u] != usize::MAX && pos[u] > k {
                    edges.push((k, pos[u]));
                }
            }
        }
        Topology::from_edges(keep.len(), &edges)
    }
}

/// Import graph: node `i` is the file `node_paths[i]`; paths are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeGraph {
    node_paths: Vec<String>,
    topology: Topology,
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<String>,
    edges: Vec<[usize; 2]>,
}

impl CodeGraph {
    pub fn new(node_paths: Vec<String>, topology: Topology) -> Result<Self> {
        if node_paths.len() != topology.node_count() {
            return Err(Error::Shape(format!(
                "{} paths for {} nodes",
                node_paths.len(),
                topology.node_count()
            )));
        }
        Ok(Self {
            node_paths,
            topology,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_paths.len()
    }

    pub fn node_paths(&self) -> &[String] {
        &self.node_paths
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.topology.edges()
    }

    pub fn node_id(&self, path: &str) -> Option<usize> {
        self.node_paths.binary_search_by(|p| p.as_str().cmp(path)).ok()
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            nodes: self.node_paths.clone(),
            edges: self.edges().into_iter().map(|(a, b)| [a, b]).collect(),
        };
        serde_json::to_string_pretty(&file).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| Error::json("graph file", e))?;
        let n = file.nodes.len();
        if file.nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "graph nodes must be sorted and unique".into(),
            ));
        }
        let mut edges = Vec::with_capacity(file.edges.len());
        for [a, b] in file.edges {
            if a >= n || b >= n {
                return Err(Error::NodeOutOfRange { node: a.max(b), n });
            }
            edges.push((a, b));
        }
        CodeGraph::new(file.nodes, Topology::from_edges(n, &edges))
    }
}

/// Number of distinct in-repo modules adjacent to `node`.
pub fn degree(graph: &CodeGraph, node: usize) -> Result<usize> {
    if node >= graph.node_count() {
        return Err(Error::NodeOutOfRange {
            node,
            n: graph.node_count(),
        });
    }
    Ok(graph.topology.degree(node))
}

/// Dotted module name of a repository-relative path: `a/b/c.py` ↦ `a.b.c`,
/// `a/b/__init__.py` ↦ `a.b`.
pub fn module_name(path: &str) -> String {
    let path = path.replace('\\', "/");
    let mut segs: Vec<&str> = path.split('/').filter(|s| !s.is_empty() && *s != ".").collect();
    if let Some(last) = segs.pop() {
        let stem = match last.rfind('.') {
            Some(0) | None => last,
            Some(k) => &last[..k],
        };
        if stem != "__init__" {
            segs.push(stem);
        }
    }
    segs.join(".")
}

fn is_package_marker(path: &str) -> bool {
    let file = path.rsplit(['/', '\\']).next().unwrap_or(path);
    file.starts_with("__init__.")
}

/// Longest in-repo prefix of `name`, or `None` for external imports.
pub fn resolve_module(name: &str, repo_index: &HashMap<String, usize>) -> Option<usize> {
    let mut candidate = name;
    loop {
        if let Some(&id) = repo_index.get(candidate) {
            return Some(id);
        }
        candidate = &candidate[..candidate.rfind('.')?];
    }
}

/// Graph together with the warnings raised while building it.
#[derive(Debug, Clone)]
pub struct GraphBuild {
    pub graph: CodeGraph,
    pub warnings: Vec<String>,
}

/// Builds the import graph for `file_map` (path → source text).
pub fn build_code_graph(file_map: &BTreeMap<String, String>) -> Result<CodeGraph> {
    let build = build_code_graph_with_warnings(file_map)?;
    for w in &build.warnings {
        log::warn!("{w}");
    }
    Ok(build.graph)
}

pub fn build_code_graph_with_warnings(file_map: &BTreeMap<String, String>) -> Result<GraphBuild> {
    if file_map.is_empty() {
        return Err(Error::EmptyRepository);
    }
    let mut warnings = Vec::new();
    let paths: Vec<String> = file_map.keys().cloned().collect();

    let mut index: HashMap<String, usize> = HashMap::new();
    for (id, path) in paths.iter().enumerate() {
        let name = module_name(path);
        if name.is_empty() {
            continue;
        }
        if let Some(&first) = index.get(&name) {
            warnings.push(format!(
                "module {name} defined by both {} and {path}; using the former",
                paths[first]
            ));
        } else {
            index.insert(name, id);
        }
    }

    let mut edges = Vec::new();
    for (id, path) in paths.iter().enumerate() {
        let mut context = module_name(path);
        if is_package_marker(path) {
            // Relative imports inside a package marker resolve against the package itself.
            context.push_str(".__init__");
        }
        for imported in extract_imports(&file_map[path], &context) {
            if let Some(target) = resolve_module(&imported, &index) {
                if target != id {
                    edges.push((id, target));
                }
            }
        }
    }
    let graph = CodeGraph::new(paths.clone(), Topology::from_edges(paths.len(), &edges))?;
    Ok(GraphBuild { graph, warnings })
}

/// Files of a repository, loaded from a directory or a `{"files": {...}}` JSON map.
#[derive(Debug, Clone, Default)]
pub struct SourceTree {
    pub files: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct FileMapDoc {
    files: BTreeMap<String, String>,
}

fn exclude_set(patterns: &[String]) -> Result<GlobSet> {
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        b.add(Glob::new(p).map_err(|e| Error::Config(format!("bad exclude glob {p:?}: {e}")))?);
    }
    b.build()
        .map_err(|e| Error::Config(format!("exclude globs: {e}")))
}

impl SourceTree {
    /// Loads `*.py` files under a directory, or every entry of a JSON file map.
    /// Paths matching any `exclude` glob are skipped. Undecodable files are kept
    /// with empty content (they become isolated nodes) and a warning.
    pub fn load(path: &Path, exclude: &[String]) -> Result<Self> {
        let excluded = exclude_set(exclude)?;
        let mut tree = SourceTree::default();
        if path.is_dir() {
            for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
                let entry = entry.map_err(|e| {
                    Error::io(path, std::io::Error::other(e.to_string()))
                })?;
                if !entry.file_type().is_file() {
                    continue;
                }
                let rel = entry
                    .path()
                    .strip_prefix(path)
                    .expect("walkdir yields children")
                    .to_string_lossy()
                    .replace('\\', "/");
                if !rel.ends_with(".py") || excluded.is_match(&rel) {
                    continue;
                }
                let bytes = std::fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
                let text = match String::from_utf8(bytes) {
                    Ok(t) => t,
                    Err(_) => {
                        tree.warnings
                            .push(format!("{rel}: not valid UTF-8; kept as isolated node"));
                        String::new()
                    }
                };
                tree.files.insert(rel, text);
            }
        } else {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let doc: FileMapDoc = serde_json::from_str(&text)
                .map_err(|e| Error::json(path.display().to_string(), e))?;
            tree.files = doc
                .files
                .into_iter()
                .map(|(k, v)| (k.replace('\\', "/"), v))
                .filter(|(k, _)| !excluded.is_match(k))
                .collect();
        }
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repo(entries: &[(&str, &str)]) -> BTreeMap<String, String> {
        entries
            .iter()
            .map(|(p, s)| (p.to_string(), s.to_string()))
            .collect()
    }

    #[test]
    fn module_names() {
        assert_eq!(module_name("a/b/c.py"), "a.b.c");
        assert_eq!(module_name("a/b/__init__.py"), "a.b");
        assert_eq!(module_name("top.py"), "top");
    }

    #[test]
    fn resolution_examples() {
        let index: HashMap<String, usize> = [("pkg.util".to_string(), 3)].into();
        assert_eq!(resolve_module("pkg.util", &index), Some(3));
        assert_eq!(resolve_module("os.path", &index), None);
        assert_eq!(resolve_module("pkg.util.helpers", &index), Some(3));
        assert_eq!(resolve_module("pkg", &index), None);
    }

    #[test]
    fn longest_prefix_wins() {
        let index: HashMap<String, usize> =
            [("pkg".to_string(), 0), ("pkg.util".to_string(), 1)].into();
        assert_eq!(resolve_module("pkg.util.x", &index), Some(1));
        assert_eq!(resolve_module("pkg.other", &index), Some(0));
    }

    #[test]
    fn single_import_makes_one_edge() {
        let g = build_code_graph(&repo(&[("a.py", "import b"), ("b.py", "")])).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn mutual_imports_collapse() {
        let g = build_code_graph(&repo(&[("a.py", "import b"), ("b.py", "import a")])).unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn external_only_is_isolated() {
        let g = build_code_graph(&repo(&[("a.py", "import os\nimport numpy"), ("b.py", "")]))
            .unwrap();
        assert_eq!(degree(&g, 0).unwrap(), 0);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn self_import_dropped() {
        let g = build_code_graph(&repo(&[("a.py", "import a")])).unwrap();
        assert!(g.edges().is_empty());
    }

    #[test]
    fn empty_repository_is_error() {
        assert!(matches!(
            build_code_graph(&BTreeMap::new()),
            Err(Error::EmptyRepository)
        ));
    }

    #[test]
    fn degree_examples() {
        let g = build_code_graph(&repo(&[
            ("hub.py", "import a, b, c, d, e"),
            ("a.py", ""),
            ("b.py", ""),
            ("c.py", ""),
            ("d.py", ""),
            ("e.py", ""),
            ("z.py", ""),
        ]))
        .unwrap();
        assert_eq!(degree(&g, g.node_id("hub.py").unwrap()).unwrap(), 5);
        assert_eq!(degree(&g, g.node_id("z.py").unwrap()).unwrap(), 0);
        assert!(matches!(degree(&g, 99), Err(Error::NodeOutOfRange { .. })));

        let tri = build_code_graph(&repo(&[("a.py", "import b"), ("b.py", "import c"), ("c.py", "import a")]))
            .unwrap();
        for i in 0..3 {
            assert_eq!(degree(&tri, i).unwrap(), 2);
        }
    }

    #[test]
    fn package_marker_relative_import() {
        let g = build_code_graph(&repo(&[
            ("pkg/__init__.py", "from . import util"),
            ("pkg/util.py", ""),
        ]))
        .unwrap();
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn shadowing_warns_and_first_wins() {
        let b = build_code_graph_with_warnings(&repo(&[
            ("m.py", "import pkg.b"),
            ("pkg/b.py", ""),
            ("pkg/b/__init__.py", ""),
        ]))
        .unwrap();
        assert_eq!(b.warnings.len(), 1);
        let g = b.graph;
        assert_eq!(g.edges(), vec![(0, g.node_id("pkg/b.py").unwrap())]);
    }

    #[test]
    fn json_roundtrip() {
        let g = build_code_graph(&repo(&[("a.py", "import b"), ("b.py", "import c"), ("c.py", "")]))
            .unwrap();
        let text = g.to_json();
        assert_eq!(CodeGraph::from_json(&text).unwrap(), g);
    }

    #[test]
    fn induced_subgraph_keeps_internal_edges() {
        let t = Topology::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let s = t.induced(&[3, 2, 0]);
        assert_eq!(s.edges(), vec![(0, 1)]);
    }
}
