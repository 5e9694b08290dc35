//! Edge-list serialization of reduced graphs.
//!
//! ```text
//! {"n":4,"edges":2,"k_max":3,"seed":7}
//! 0 1 9.9999999999999978e-1
//! 2 3 3.6787944117144233e-1
//! ```
//!
//! The first line is a JSON header. Each following line is one undirected
//! edge `p q w` with `p < q`, 0-based ids and the weight in scientific
//! notation with 17 significant digits, which round-trips every f64 exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::ReducedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphHeader {
    pub n: usize,
    pub edges: usize,
    pub k_max: Option<usize>,
    pub seed: Option<u64>,
}

pub fn format_graph(g: &ReducedGraph, k_max: Option<usize>, seed: Option<u64>) -> String {
    let header = GraphHeader {
        n: g.n(),
        edges: g.edge_count(),
        k_max,
        seed,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for (p, q, w) in g.edges() {
        let _ = writeln!(out, "{p} {q} {w:.16e}");
    }
    out
}

pub fn parse_graph(text: &str) -> Result<(GraphHeader, ReducedGraph)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| Error::input("graph file is empty"))?;
    let header: GraphHeader = serde_json::from_str(first).map_err(|e| Error::Parse {
        row: 1,
        message: format!("bad header: {e}"),
    })?;
    let mut edges = Vec::with_capacity(header.edges);
    for (i, line) in lines {
        let bad = |message: String| Error::Parse { row: i + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected `p q w`, got {line:?}")));
        }
        let p = fields[0].parse::<usize>().map_err(|e| bad(e.to_string()))?;
        let q = fields[1].parse::<usize>().map_err(|e| bad(e.to_string()))?;
        let w = fields[2].parse::<f64>().map_err(|e| bad(e.to_string()))?;
        edges.push((p, q, w));
    }
    if edges.len() != header.edges {
        return Err(Error::input(format!(
            "header announces {} edges, file has {}",
            header.edges,
            edges.len()
        )));
    }
    let g = ReducedGraph::from_edges(header.n, edges)?;
    Ok((header, g))
}

pub fn write_graph(g: &ReducedGraph, k_max: Option<usize>, seed: Option<u64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_graph(g, k_max, seed)).map_err(|e| Error::io(path, e))
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<(GraphHeader, ReducedGraph)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_graph(&text)
}
