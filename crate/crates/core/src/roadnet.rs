//! Road network ingestion and the travel-time model.
//!
//! The processing pipeline is: [`load_graph`] -> [`assign_speeds`] ->
//! [`contract_degree2`] -> [`filter_largest_scc`] -> [`compute_travel_time_matrix`].
//! Edge travel times are whole seconds, `ceil(length / speed)`, never below one.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use petgraph::graph::{DiGraph, NodeIndex};
use rayon::prelude::*;
use thiserror::Error;

/// Identifier of a road-network node as it appears in input files.
pub type NodeId = u64;

const MATRIX_MAGIC: &[u8; 4] = b"DTTM";

#[derive(Debug, Error)]
pub enum RoadnetError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge {from}->{to}: {msg}")]
    InvalidEdge {
        from: NodeId,
        to: NodeId,
        msg: String,
    },
    #[error("invalid speed {speed} for {what}")]
    InvalidSpeed { what: String, speed: f64 },
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("edge {from}->{to} references unknown node {missing}")]
    DanglingEdge {
        from: NodeId,
        to: NodeId,
        missing: NodeId,
    },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("graph is not strongly connected: node {to} unreachable from node {from}")]
    NotStronglyConnected { from: NodeId, to: NodeId },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("malformed matrix: {0}")]
    Matrix(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Latitude/longitude in degrees. Metadata only.
    pub coord: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
    pub speed_mps: f64,
    pub travel_time_s: u32,
}

impl Edge {
    pub fn new(
        from: NodeId,
        to: NodeId,
        length_m: f64,
        speed_mps: f64,
    ) -> Result<Edge, RoadnetError> {
        let invalid = |msg: String| RoadnetError::InvalidEdge { from, to, msg };
        if !(length_m.is_finite() && length_m > 0.0) {
            return Err(invalid(format!("length must be positive, got {length_m}")));
        }
        if !(speed_mps.is_finite() && speed_mps > 0.0) {
            return Err(invalid(format!("speed must be positive, got {speed_mps}")));
        }
        let travel_time_s = edge_travel_time(length_m, speed_mps)
            .ok_or_else(|| invalid("travel time does not fit in 32 bits".to_string()))?;
        Ok(Edge {
            from,
            to,
            length_m,
            speed_mps,
            travel_time_s,
        })
    }
}

fn edge_travel_time(length_m: f64, speed_mps: f64) -> Option<u32> {
    let t = (length_m / speed_mps).ceil().max(1.0);
    (t <= u32::MAX as f64).then_some(t as u32)
}

/// Directed road graph. Nodes are kept sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl RoadGraph {
    pub fn new(mut nodes: Vec<Node>, edges: Vec<Edge>) -> Result<RoadGraph, RoadnetError> {
        nodes.sort_by_key(|n| n.id);
        if let Some(w) = nodes.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(RoadnetError::DuplicateNode(w[0].id));
        }
        let graph = RoadGraph { nodes, edges };
        for e in &graph.edges {
            for end in [e.from, e.to] {
                if !graph.contains(end) {
                    return Err(RoadnetError::DanglingEdge {
                        from: e.from,
                        to: e.to,
                        missing: end,
                    });
                }
            }
            if !(e.length_m > 0.0 && e.speed_mps > 0.0 && e.travel_time_s >= 1) {
                return Err(RoadnetError::InvalidEdge {
                    from: e.from,
                    to: e.to,
                    msg: "non-positive length, speed or travel time".to_string(),
                });
            }
        }
        Ok(graph)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.binary_search_by_key(&id, |n| n.id).is_ok()
    }

    fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok()
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> RoadnetError {
    RoadnetError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_field<T: std::str::FromStr>(
    tok: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, RoadnetError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

/// Content lines with their 1-based line numbers; blank lines and `#` comments skipped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_graph(text: &str) -> Result<RoadGraph, RoadnetError> {
    let mut lines = content_lines(text);
    let mut header = |keyword: &str| -> Result<usize, RoadnetError> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("missing `{keyword}` header")))?;
        let mut toks = line.split_whitespace();
        if toks.next() != Some(keyword) {
            return Err(parse_err(no, format!("expected `{keyword} <count>`")));
        }
        parse_field(toks.next(), no, "count")
    };

    let node_count = header("nodes")?;
    let mut nodes = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, "fewer node lines than declared"))?;
        let mut toks = line.split_whitespace();
        if toks.next() != Some("node") {
            return Err(parse_err(no, "expected `node <id> [<lat> <lon>]`"));
        }
        let id = parse_field(toks.next(), no, "node id")?;
        let coord = match (toks.next(), toks.next()) {
            (None, _) => None,
            (Some(lat), lon) => Some((
                parse_field(Some(lat), no, "latitude")?,
                parse_field(lon, no, "longitude")?,
            )),
        };
        if toks.next().is_some() {
            return Err(parse_err(no, "trailing tokens"));
        }
        nodes.push(Node { id, coord });
    }

    let mut lines_after_nodes = lines;
    let (no, line) = lines_after_nodes
        .next()
        .ok_or_else(|| parse_err(0, "missing `edges` header"))?;
    let mut toks = line.split_whitespace();
    if toks.next() != Some("edges") {
        return Err(parse_err(no, "expected `edges <count>`"));
    }
    let edge_count: usize = parse_field(toks.next(), no, "count")?;

    let known: BTreeSet<NodeId> = nodes.iter().map(|n| n.id).collect();
    let mut edges = Vec::with_capacity(edge_count);
    for _ in 0..edge_count {
        let (no, line) = lines_after_nodes
            .next()
            .ok_or_else(|| parse_err(0, "fewer edge lines than declared"))?;
        let mut toks = line.split_whitespace();
        if toks.next() != Some("edge") {
            return Err(parse_err(
                no,
                "expected `edge <from> <to> <length_m> <speed_mps>`",
            ));
        }
        let from: NodeId = parse_field(toks.next(), no, "from node")?;
        let to: NodeId = parse_field(toks.next(), no, "to node")?;
        let length = parse_field(toks.next(), no, "length")?;
        let speed = parse_field(toks.next(), no, "speed")?;
        if toks.next().is_some() {
            return Err(parse_err(no, "trailing tokens"));
        }
        for end in [from, to] {
            if !known.contains(&end) {
                return Err(parse_err(no, format!("unknown node id {end}")));
            }
        }
        edges.push(Edge::new(from, to, length, speed)?);
    }
    if let Some((no, _)) = lines_after_nodes.next() {
        return Err(parse_err(no, "more lines than declared"));
    }
    RoadGraph::new(nodes, edges)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<RoadGraph, RoadnetError> {
    parse_graph(&fs::read_to_string(path)?)
}

pub fn write_graph(graph: &RoadGraph, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "nodes {}", graph.nodes.len())?;
    for n in &graph.nodes {
        match n.coord {
            Some((lat, lon)) => writeln!(out, "node {} {} {}", n.id, lat, lon)?,
            None => writeln!(out, "node {}", n.id)?,
        }
    }
    writeln!(out, "edges {}", graph.edges.len())?;
    for e in &graph.edges {
        writeln!(
            out,
            "edge {} {} {} {}",
            e.from, e.to, e.length_m, e.speed_mps
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedTable {
    pub default_mps: f64,
    pub speeds: HashMap<(NodeId, NodeId), f64>,
}

impl SpeedTable {
    pub fn uniform(default_mps: f64) -> Result<SpeedTable, RoadnetError> {
        check_speed("default", default_mps)?;
        Ok(SpeedTable {
            default_mps,
            speeds: HashMap::new(),
        })
    }

    pub fn insert(&mut self, from: NodeId, to: NodeId, speed_mps: f64) -> Result<(), RoadnetError> {
        check_speed(&format!("edge {from}->{to}"), speed_mps)?;
        self.speeds.insert((from, to), speed_mps);
        Ok(())
    }

    pub fn speed(&self, from: NodeId, to: NodeId) -> f64 {
        self.speeds
            .get(&(from, to))
            .copied()
            .unwrap_or(self.default_mps)
    }
}

fn check_speed(what: &str, speed: f64) -> Result<(), RoadnetError> {
    if speed.is_finite() && speed > 0.0 {
        Ok(())
    } else {
        Err(RoadnetError::InvalidSpeed {
            what: what.to_string(),
            speed,
        })
    }
}

pub fn parse_speed_table(text: &str) -> Result<SpeedTable, RoadnetError> {
    let mut lines = content_lines(text);
    let (no, first) = lines
        .next()
        .ok_or_else(|| parse_err(0, "missing `default <speed_mps>` line"))?;
    let mut toks = first.split_whitespace();
    if toks.next() != Some("default") {
        return Err(parse_err(no, "first line must be `default <speed_mps>`"));
    }
    let mut table = SpeedTable::uniform(parse_field(toks.next(), no, "default speed")?)?;
    for (no, line) in lines {
        let mut toks = line.split_whitespace();
        let from = parse_field(toks.next(), no, "from node")?;
        let to = parse_field(toks.next(), no, "to node")?;
        let speed = parse_field(toks.next(), no, "speed")?;
        if toks.next().is_some() {
            return Err(parse_err(no, "trailing tokens"));
        }
        table.insert(from, to, speed)?;
    }
    Ok(table)
}

pub fn load_speed_table(path: impl AsRef<Path>) -> Result<SpeedTable, RoadnetError> {
    parse_speed_table(&fs::read_to_string(path)?)
}

/// Replaces every edge speed by the table entry, or the table default when absent.
pub fn assign_speeds(graph: &RoadGraph, speeds: &SpeedTable) -> RoadGraph {
    let edges = graph
        .edges
        .iter()
        .map(|e| {
            let speed = speeds.speed(e.from, e.to);
            Edge {
                speed_mps: speed,
                travel_time_s: edge_travel_time(e.length_m, speed).unwrap_or(u32::MAX),
                ..e.clone()
            }
        })
        .collect();
    RoadGraph {
        nodes: graph.nodes.clone(),
        edges,
    }
}

/// Removes pass-through nodes, replacing each eliminated chain by a single edge
/// carrying the summed length and travel time.
///
/// A node is pass-through when either
/// - it has exactly one incoming edge `u -> v` and one outgoing edge `v -> w`
///   with `u != w`, or
/// - it has exactly the edges `u <-> v <-> w` (two in, two out, `u != w`).
///
/// Nodes with self-loops or parallel edges never qualify, nor do nodes whose
/// replacement edge would run parallel to an existing one.
pub fn contract_degree2(graph: &RoadGraph) -> RoadGraph {
    let n = graph.nodes.len();
    let mut edges: Vec<Option<Edge>> = graph.edges.iter().cloned().map(Some).collect();
    let mut out_edges: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut in_edges: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let ix = |id: NodeId| graph.index_of(id).expect("validated graph");
    for (k, e) in graph.edges.iter().enumerate() {
        out_edges[ix(e.from)].insert(k);
        in_edges[ix(e.to)].insert(k);
    }

    let mut removed = vec![false; n];
    let mut worklist: BTreeSet<usize> = (0..n).collect();
    while let Some(v) = worklist.pop_first() {
        let Some(bypasses) = pass_through(v, &edges, &out_edges, &in_edges, &ix) else {
            continue;
        };
        let incident: Vec<usize> = in_edges[v]
            .iter()
            .chain(out_edges[v].iter())
            .copied()
            .collect();
        for k in incident {
            let e = edges[k].take().expect("live edge");
            out_edges[ix(e.from)].remove(&k);
            in_edges[ix(e.to)].remove(&k);
        }
        in_edges[v].clear();
        out_edges[v].clear();
        removed[v] = true;

        for (first, second) in bypasses {
            let (from, to) = (first.from, second.to);
            let length_m = first.length_m + second.length_m;
            let travel_time_s = first.travel_time_s.saturating_add(second.travel_time_s);
            let replacement = Edge {
                from,
                to,
                length_m,
                speed_mps: length_m / travel_time_s as f64,
                travel_time_s,
            };
            let (fi, ti) = (ix(from), ix(to));
            edges.push(Some(replacement));
            out_edges[fi].insert(edges.len() - 1);
            in_edges[ti].insert(edges.len() - 1);
            worklist.insert(fi);
            worklist.insert(ti);
        }
    }

    let nodes = graph
        .nodes
        .iter()
        .zip(&removed)
        .filter(|(_, &r)| !r)
        .map(|(n, _)| n.clone())
        .collect();
    RoadGraph {
        nodes,
        edges: edges.into_iter().flatten().collect(),
    }
}

/// The edge pairs to splice if node `v` is pass-through.
fn pass_through(
    v: usize,
    edges: &[Option<Edge>],
    out_edges: &[BTreeSet<usize>],
    in_edges: &[BTreeSet<usize>],
    ix: &impl Fn(NodeId) -> usize,
) -> Option<Vec<(Edge, Edge)>> {
    let ins: Vec<&Edge> = in_edges[v]
        .iter()
        .map(|&k| edges[k].as_ref().expect("live edge"))
        .collect();
    let outs: Vec<&Edge> = out_edges[v]
        .iter()
        .map(|&k| edges[k].as_ref().expect("live edge"))
        .collect();
    if ins.iter().any(|e| ix(e.from) == v) || outs.iter().any(|e| ix(e.to) == v) {
        return None;
    }
    let bypasses = match (ins.as_slice(), outs.as_slice()) {
        ([a], [b]) if a.from != b.to => vec![((*a).clone(), (*b).clone())],
        ([a1, a2], [b1, b2]) => {
            let (u, w) = (a1.from, a2.from);
            if u == w {
                return None;
            }
            let out_to = |x: NodeId| outs.iter().find(|e| e.to == x).copied();
            let (to_u, to_w) = (out_to(u)?, out_to(w)?);
            if b1.to == b2.to {
                return None;
            }
            vec![((*a1).clone(), to_w.clone()), ((*a2).clone(), to_u.clone())]
        }
        _ => return None,
    };
    let linked = |from: NodeId, to: NodeId| {
        out_edges[ix(from)]
            .iter()
            .any(|&k| edges[k].as_ref().is_some_and(|e| e.to == to))
    };
    if bypasses.iter().any(|(a, b)| linked(a.from, b.to)) {
        return None;
    }
    Some(bypasses)
}

/// Induced subgraph on the largest strongly connected component.
/// Ties go to the component containing the smallest node id.
pub fn filter_largest_scc(graph: &RoadGraph) -> Result<RoadGraph, RoadnetError> {
    if graph.nodes.is_empty() {
        return Err(RoadnetError::EmptyGraph);
    }
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(graph.nodes.len(), graph.edges.len());
    for _ in &graph.nodes {
        g.add_node(());
    }
    for e in &graph.edges {
        let (a, b) = (
            graph.index_of(e.from).unwrap(),
            graph.index_of(e.to).unwrap(),
        );
        g.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
    }
    // Node indices follow sorted ids, so the smallest index is the smallest id.
    let best = petgraph::algo::kosaraju_scc(&g)
        .into_iter()
        .map(|c| {
            let min = c.iter().map(|n| n.index()).min().unwrap();
            (c, min)
        })
        .min_by_key(|(c, min)| (Reverse(c.len()), *min))
        .map(|(c, _)| c)
        .unwrap();
    let mut keep = vec![false; graph.nodes.len()];
    for n in best {
        keep[n.index()] = true;
    }
    let nodes = graph
        .nodes
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(n, _)| n.clone())
        .collect();
    let edges = graph
        .edges
        .iter()
        .filter(|e| keep[graph.index_of(e.from).unwrap()] && keep[graph.index_of(e.to).unwrap()])
        .cloned()
        .collect();
    Ok(RoadGraph { nodes, edges })
}

/// All-pairs shortest travel times in whole seconds.
#[derive(Debug, Clone)]
pub struct TravelTimeMatrix {
    ids: Vec<NodeId>,
    pos: HashMap<NodeId, usize>,
    times: Vec<u32>,
}

impl PartialEq for TravelTimeMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids && self.times == other.times
    }
}

impl TravelTimeMatrix {
    /// Builds a matrix from an id index and row-major entries.
    pub fn from_parts(ids: Vec<NodeId>, times: Vec<u32>) -> Result<TravelTimeMatrix, RoadnetError> {
        let n = ids.len();
        if times.len() != n * n {
            return Err(RoadnetError::Matrix(format!(
                "{} entries for {} nodes",
                times.len(),
                n
            )));
        }
        let mut pos = HashMap::with_capacity(n);
        for (i, &id) in ids.iter().enumerate() {
            if pos.insert(id, i).is_some() {
                return Err(RoadnetError::DuplicateNode(id));
            }
            if times[i * n + i] != 0 {
                return Err(RoadnetError::Matrix(format!(
                    "non-zero diagonal at node {id}"
                )));
            }
        }
        Ok(TravelTimeMatrix { ids, pos, times })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.pos.get(&id).copied()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.pos.contains_key(&id)
    }

    /// Lookup by dense matrix index.
    #[inline]
    pub fn get(&self, from: usize, to: usize) -> u32 {
        self.times[from * self.ids.len() + to]
    }

    pub fn row(&self, from: usize) -> &[u32] {
        let n = self.ids.len();
        &self.times[from * n..(from + 1) * n]
    }

    pub fn travel_time(&self, from: NodeId, to: NodeId) -> Result<u32, RoadnetError> {
        let a = self.index_of(from).ok_or(RoadnetError::UnknownNode(from))?;
        let b = self.index_of(to).ok_or(RoadnetError::UnknownNode(to))?;
        Ok(self.get(a, b))
    }

    pub fn write_to(&self, out: impl Write) -> io::Result<()> {
        let mut out = BufWriter::new(out);
        out.write_all(MATRIX_MAGIC)?;
        out.write_all(&(self.ids.len() as u64).to_le_bytes())?;
        for id in &self.ids {
            out.write_all(&id.to_le_bytes())?;
        }
        for t in &self.times {
            out.write_all(&t.to_le_bytes())?;
        }
        out.flush()
    }

    pub fn read_from(mut input: impl Read) -> Result<TravelTimeMatrix, RoadnetError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let bad = |msg: &str| RoadnetError::Matrix(msg.to_string());
        if bytes.len() < 12 || &bytes[..4] != MATRIX_MAGIC {
            return Err(bad("missing DTTM magic"));
        }
        let n = u64::from_le_bytes(bytes[4..12].try_into().unwrap());
        let n = usize::try_from(n).map_err(|_| bad("node count overflow"))?;
        let expected = n
            .checked_mul(n)
            .and_then(|nn| nn.checked_mul(4))
            .and_then(|b| b.checked_add(12 + 8 * n))
            .ok_or_else(|| bad("node count overflow"))?;
        if bytes.len() != expected {
            return Err(RoadnetError::Matrix(format!(
                "expected {expected} bytes, found {}",
                bytes.len()
            )));
        }
        let ids = bytes[12..12 + 8 * n]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let times = bytes[12 + 8 * n..]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        TravelTimeMatrix::from_parts(ids, times)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write_to(fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TravelTimeMatrix, RoadnetError> {
        TravelTimeMatrix::read_from(fs::File::open(path)?)
    }
}

/// One Dijkstra search per source node, run in parallel over sources.
pub fn compute_travel_time_matrix(graph: &RoadGraph) -> Result<TravelTimeMatrix, RoadnetError> {
    let n = graph.nodes.len();
    if n == 0 {
        return Err(RoadnetError::EmptyGraph);
    }
    // CSR adjacency keeping only the fastest of any parallel edges.
    let mut arcs: Vec<(usize, usize, u32)> = graph
        .edges
        .iter()
        .map(|e| {
            (
                graph.index_of(e.from).unwrap(),
                graph.index_of(e.to).unwrap(),
                e.travel_time_s,
            )
        })
        .collect();
    arcs.sort_unstable();
    arcs.dedup_by_key(|a| (a.0, a.1));
    let mut first_arc = vec![0usize; n + 1];
    for &(a, _, _) in &arcs {
        first_arc[a + 1] += 1;
    }
    for i in 0..n {
        first_arc[i + 1] += first_arc[i];
    }
    let heads: Vec<(usize, u32)> = arcs.iter().map(|&(_, b, t)| (b, t)).collect();

    let rows: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|source| {
            let mut dist = vec![u64::MAX; n];
            let mut heap = BinaryHeap::new();
            dist[source] = 0;
            heap.push(Reverse((0u64, source)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &(v, t) in &heads[first_arc[u]..first_arc[u + 1]] {
                    let nd = d + t as u64;
                    if nd < dist[v] {
                        dist[v] = nd;
                        heap.push(Reverse((nd, v)));
                    }
                }
            }
            dist.into_iter()
                .map(|d| d.min(u32::MAX as u64) as u32)
                .collect::<Vec<u32>>()
        })
        .collect();

    let ids: Vec<NodeId> = graph.nodes.iter().map(|n| n.id).collect();
    let mut times = Vec::with_capacity(n * n);
    for (i, row) in rows.into_iter().enumerate() {
        if let Some(j) = row.iter().position(|&t| t == u32::MAX) {
            return Err(RoadnetError::NotStronglyConnected {
                from: ids[i],
                to: ids[j],
            });
        }
        times.extend(row);
    }
    TravelTimeMatrix::from_parts(ids, times)
}

/// Full pipeline from a raw graph and speed table to the travel-time matrix.
/// Returns the processed graph alongside the matrix.
pub fn build_travel_model(
    graph: &RoadGraph,
    speeds: &SpeedTable,
) -> Result<(RoadGraph, TravelTimeMatrix), RoadnetError> {
    let processed = filter_largest_scc(&contract_degree2(&assign_speeds(graph, speeds)))?;
    let matrix = compute_travel_time_matrix(&processed)?;
    Ok((processed, matrix))
}
