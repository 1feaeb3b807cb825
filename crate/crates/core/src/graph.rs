//! Layer-dependency graph of a heterogeneous (multi-modality, multi-task) model.
//!
//! Layers are stored sorted by id, so a layer's index doubles as its rank in
//! every "ascending id" tie-break used elsewhere in the crate.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const DEFAULT_DTYPE_BYTES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LayerKind {
    Conv,
    FC,
    LSTM,
}

impl LayerKind {
    pub const ALL: [LayerKind; 3] = [LayerKind::Conv, LayerKind::FC, LayerKind::LSTM];

    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Conv => "Conv",
            LayerKind::FC => "FC",
            LayerKind::LSTM => "LSTM",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Conv" => Some(LayerKind::Conv),
            "FC" => Some(LayerKind::FC),
            "LSTM" => Some(LayerKind::LSTM),
            _ => None,
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shape parameters of one layer; the variant determines the layer kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerParams {
    /// `n` output channels, `m` input channels, `r`x`c` output map, `k`x`k` kernel, stride `s`.
    Conv {
        n: u64,
        m: u64,
        r: u64,
        c: u64,
        k: u64,
        s: u64,
    },
    /// `n` input features, `m` output features.
    FC { n: u64, m: u64 },
    /// `n` input size, `h` hidden size, `l` stacked layers.
    LSTM { n: u64, h: u64, l: u64 },
}

impl LayerParams {
    pub fn kind(&self) -> LayerKind {
        match self {
            LayerParams::Conv { .. } => LayerKind::Conv,
            LayerParams::FC { .. } => LayerKind::FC,
            LayerParams::LSTM { .. } => LayerKind::LSTM,
        }
    }

    fn field_names(kind: LayerKind) -> &'static [&'static str] {
        match kind {
            LayerKind::Conv => &["n", "m", "r", "c", "k", "s"],
            LayerKind::FC => &["n", "m"],
            LayerKind::LSTM => &["n", "h", "l"],
        }
    }

    fn fields(&self) -> Vec<(&'static str, u64)> {
        match *self {
            LayerParams::Conv { n, m, r, c, k, s } => {
                vec![("n", n), ("m", m), ("r", r), ("c", c), ("k", k), ("s", s)]
            }
            LayerParams::FC { n, m } => vec![("n", n), ("m", m)],
            LayerParams::LSTM { n, h, l } => vec![("n", n), ("h", h), ("l", l)],
        }
    }

    fn from_fields(kind: LayerKind, get: impl Fn(&str) -> u64) -> Self {
        match kind {
            LayerKind::Conv => LayerParams::Conv {
                n: get("n"),
                m: get("m"),
                r: get("r"),
                c: get("c"),
                k: get("k"),
                s: get("s"),
            },
            LayerKind::FC => LayerParams::FC {
                n: get("n"),
                m: get("m"),
            },
            LayerKind::LSTM => LayerParams::LSTM {
                n: get("n"),
                h: get("h"),
                l: get("l"),
            },
        }
    }

    /// Weight element count. LSTM uses the 4-gate convention with bias pairs;
    /// stacked layers after the first take `h` inputs.
    pub fn weight_elems(&self) -> u64 {
        match *self {
            LayerParams::Conv { n, m, k, .. } => n * m * k * k,
            LayerParams::FC { n, m } => n * m,
            LayerParams::LSTM { n, h, l } => {
                let first = 4 * (n * h + h * h + 2 * h);
                let stacked = 4 * (h * h + h * h + 2 * h);
                first + (l - 1) * stacked
            }
        }
    }

    pub fn ofm_elems(&self) -> u64 {
        match *self {
            LayerParams::Conv { n, r, c, .. } => n * r * c,
            LayerParams::FC { m, .. } => m,
            LayerParams::LSTM { h, .. } => h,
        }
    }

    /// Input elements over the full receptive field, padding ignored.
    pub fn ifm_elems(&self) -> u64 {
        match *self {
            LayerParams::Conv { m, r, c, k, s, .. } => m * ((r - 1) * s + k) * ((c - 1) * s + k),
            LayerParams::FC { n, .. } => n,
            LayerParams::LSTM { n, .. } => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerNode {
    pub id: String,
    pub params: LayerParams,
    pub dtype_bytes: u64,
    pub weight_bytes: u64,
    pub ifm_bytes: u64,
    pub ofm_bytes: u64,
}

impl LayerNode {
    pub fn new(id: impl Into<String>, params: LayerParams, dtype_bytes: u64) -> Self {
        LayerNode {
            id: id.into(),
            weight_bytes: dtype_bytes * params.weight_elems(),
            ifm_bytes: dtype_bytes * params.ifm_elems(),
            ofm_bytes: dtype_bytes * params.ofm_elems(),
            params,
            dtype_bytes,
        }
    }

    pub fn kind(&self) -> LayerKind {
        self.params.kind()
    }

    /// Same kind, shape and element width; used to decide whether a layer
    /// "persists" between two graphs.
    pub fn same_shape(&self, other: &LayerNode) -> bool {
        self.params == other.params && self.dtype_bytes == other.dtype_bytes
    }
}

/// Validated directed acyclic layer graph.
#[derive(Debug, Clone)]
pub struct ModelGraph {
    name: String,
    nodes: Vec<LayerNode>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    preds: Vec<Vec<(usize, usize)>>,
    succs: Vec<Vec<(usize, usize)>>,
    topo: Vec<usize>,
}

impl ModelGraph {
    /// Builds and validates a graph from layers and `(producer, consumer)` id pairs.
    pub fn new<S: AsRef<str>>(name: impl Into<String>, layers: Vec<LayerNode>, edges: &[(S, S)]) -> Result<Self> {
        let mut nodes = layers;
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in nodes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::DuplicateId(pair[0].id.clone()));
            }
        }
        if nodes.is_empty() {
            return Err(Error::schema("layers", "model has no layers"));
        }
        let index: HashMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();

        let mut edge_set = BTreeSet::new();
        for (src, dst) in edges {
            let (src, dst) = (src.as_ref(), dst.as_ref());
            let lookup = |id: &str| {
                index.get(id).copied().ok_or_else(|| Error::DanglingEdge {
                    src: src.to_string(),
                    dst: dst.to_string(),
                    missing: id.to_string(),
                })
            };
            let (u, v) = (lookup(src)?, lookup(dst)?);
            if u == v {
                return Err(Error::SelfLoop(src.to_string()));
            }
            if !edge_set.insert((u, v)) {
                return Err(Error::DuplicateEdge(src.to_string(), dst.to_string()));
            }
        }
        let edges: Vec<(usize, usize)> = edge_set.into_iter().collect();
        let mut preds = vec![Vec::new(); nodes.len()];
        let mut succs = vec![Vec::new(); nodes.len()];
        for (e, &(u, v)) in edges.iter().enumerate() {
            succs[u].push((v, e));
            preds[v].push((u, e));
        }
        for list in preds.iter_mut() {
            list.sort_unstable();
        }

        let mut g = ModelGraph {
            name: name.into(),
            nodes,
            index,
            edges,
            preds,
            succs,
            topo: Vec::new(),
        };
        g.topo = g.kahn().map_err(|leftover| Error::Cycle(g.find_cycle(&leftover)))?;
        Ok(g)
    }

    fn kahn(&self) -> std::result::Result<Vec<usize>, Vec<usize>> {
        let mut indeg: Vec<usize> = self.preds.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = (0..self.len()).filter(|&i| indeg[i] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(Reverse(u)) = ready.pop() {
            order.push(u);
            for &(v, _) in &self.succs[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.push(Reverse(v));
                }
            }
        }
        if order.len() == self.len() {
            Ok(order)
        } else {
            Err((0..self.len()).filter(|&i| indeg[i] > 0).collect())
        }
    }

    /// Walks predecessor links inside the non-drainable remainder until a node repeats.
    fn find_cycle(&self, leftover: &[usize]) -> Vec<String> {
        let stuck: BTreeSet<usize> = leftover.iter().copied().collect();
        let mut seen = HashMap::new();
        let mut path = Vec::new();
        let mut cur = leftover[0];
        loop {
            if let Some(&pos) = seen.get(&cur) {
                let mut cycle: Vec<usize> = path[pos..].to_vec();
                cycle.reverse();
                let min_pos = cycle
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, &n)| n)
                    .map(|(i, _)| i)
                    .unwrap();
                cycle.rotate_left(min_pos);
                return cycle.into_iter().map(|n| self.nodes[n].id.clone()).collect();
            }
            seen.insert(cur, path.len());
            path.push(cur);
            cur = self.preds[cur]
                .iter()
                .map(|&(p, _)| p)
                .find(|p| stuck.contains(p))
                .expect("stuck node keeps a stuck predecessor");
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[LayerNode] {
        &self.nodes
    }

    pub fn node(&self, ix: usize) -> &LayerNode {
        &self.nodes[ix]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn layer(&self, id: &str) -> Option<&LayerNode> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    /// Edges as `(producer, consumer)` index pairs, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.succs[u].iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }

    /// `(predecessor, edge index)` pairs.
    pub fn preds(&self, ix: usize) -> &[(usize, usize)] {
        &self.preds[ix]
    }

    /// `(successor, edge index)` pairs.
    pub fn succs(&self, ix: usize) -> &[(usize, usize)] {
        &self.succs[ix]
    }

    pub fn entries(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.preds[i].is_empty()).collect()
    }

    pub fn exits(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.succs[i].is_empty()).collect()
    }

    pub fn is_exit(&self, ix: usize) -> bool {
        self.succs[ix].is_empty()
    }

    /// Kahn order, ties broken by ascending id.
    pub fn topo_order_ix(&self) -> &[usize] {
        &self.topo
    }

    pub fn topo_order(&self) -> Vec<String> {
        self.topo.iter().map(|&i| self.nodes[i].id.clone()).collect()
    }

    /// Layers not in `done` whose predecessors are all in `done`, ascending id.
    pub fn frontier_ix(&self, done: &[bool]) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for v in 0..self.len() {
            if done[v] {
                if let Some(&(p, _)) = self.preds[v].iter().find(|&&(p, _)| !done[p]) {
                    return Err(Error::NotDependencyClosed {
                        layer: self.nodes[v].id.clone(),
                        pred: self.nodes[p].id.clone(),
                    });
                }
            } else if self.preds[v].iter().all(|&(p, _)| done[p]) {
                out.push(v);
            }
        }
        Ok(out)
    }

    pub fn frontier<S: AsRef<str> + Ord>(&self, done: &BTreeSet<S>) -> Result<BTreeSet<String>> {
        let mut mask = vec![false; self.len()];
        for id in done {
            let ix = self
                .index_of(id.as_ref())
                .ok_or_else(|| Error::schema("done", format!("unknown layer `{}`", id.as_ref())))?;
            mask[ix] = true;
        }
        Ok(self
            .frontier_ix(&mask)?
            .into_iter()
            .map(|i| self.nodes[i].id.clone())
            .collect())
    }

    /// Successive frontier groups from the empty set; the order in which layers
    /// are committed during mapping.
    pub fn frontier_groups(&self) -> Vec<Vec<usize>> {
        let mut done = vec![false; self.len()];
        let mut groups = Vec::new();
        loop {
            let group = self.frontier_ix(&done).expect("accumulated frontiers stay closed");
            if group.is_empty() {
                return groups;
            }
            for &v in &group {
                done[v] = true;
            }
            groups.push(group);
        }
    }

    /// Subgraph induced by `keep`, preserving ids.
    pub fn induced(&self, name: impl Into<String>, keep: &BTreeSet<String>) -> Result<ModelGraph> {
        let layers = self.nodes.iter().filter(|n| keep.contains(&n.id)).cloned().collect();
        let edges: Vec<(String, String)> = self
            .edges
            .iter()
            .map(|&(u, v)| (self.nodes[u].id.clone(), self.nodes[v].id.clone()))
            .filter(|(u, v)| keep.contains(u) && keep.contains(v))
            .collect();
        ModelGraph::new(name, layers, &edges)
    }

    /// Weakly connected components as sorted id sets, ordered by smallest id.
    pub fn components(&self) -> Vec<BTreeSet<String>> {
        let mut comp = vec![usize::MAX; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let c = out.len();
            let mut stack = vec![start];
            let mut members = BTreeSet::new();
            comp[start] = c;
            while let Some(u) = stack.pop() {
                members.insert(self.nodes[u].id.clone());
                let nbrs = self.preds[u].iter().chain(&self.succs[u]).map(|&(w, _)| w);
                for w in nbrs {
                    if comp[w] == usize::MAX {
                        comp[w] = c;
                        stack.push(w);
                    }
                }
            }
            out.push(members);
        }
        out
    }

    /// Ids of layers reachable from entry `entry` and from no other entry:
    /// the subgraph owned by one input modality.
    pub fn exclusive_to(&self, entry: usize) -> BTreeSet<String> {
        let mut origins: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.len()];
        for &v in &self.topo {
            if self.preds[v].is_empty() {
                origins[v].insert(v);
            }
            for &(p, _) in &self.preds[v] {
                let from = origins[p].clone();
                origins[v].extend(from);
            }
        }
        (0..self.len())
            .filter(|&v| origins[v].len() == 1 && origins[v].contains(&entry))
            .map(|v| self.nodes[v].id.clone())
            .collect()
    }

    pub fn total_weight_bytes(&self) -> u64 {
        self.nodes.iter().map(|n| n.weight_bytes).sum()
    }

    pub fn total_params(&self) -> u64 {
        self.nodes.iter().map(|n| n.params.weight_elems()).sum()
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            name: self.name.clone(),
            layers: self
                .nodes
                .iter()
                .map(|n| LayerDocument {
                    id: n.id.clone(),
                    kind: n.kind().as_str().to_string(),
                    params: n
                        .params
                        .fields()
                        .into_iter()
                        .map(|(k, v)| (k.to_string(), Value::from(v)))
                        .collect(),
                    dtype_bytes: Some(n.dtype_bytes),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(u, v)| [self.nodes[u].id.clone(), self.nodes[v].id.clone()])
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model document serializes")
    }
}

/// On-disk model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub name: String,
    pub layers: Vec<LayerDocument>,
    #[serde(default)]
    pub edges: Vec<[String; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDocument {
    pub id: String,
    pub kind: String,
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dtype_bytes: Option<u64>,
}

impl ModelDocument {
    pub fn into_graph(self) -> Result<ModelGraph> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, doc) in self.layers.into_iter().enumerate() {
            let at = |f: &str| format!("layers[{i}].{f}");
            if doc.id.is_empty() {
                return Err(Error::schema(at("id"), "empty id"));
            }
            let kind = LayerKind::parse(&doc.kind)
                .ok_or_else(|| Error::schema(at("kind"), format!("expected Conv, FC or LSTM, got `{}`", doc.kind)))?;
            let names = LayerParams::field_names(kind);
            if let Some(extra) = doc.params.keys().find(|k| !names.contains(&k.as_str())) {
                return Err(Error::schema(
                    at(&format!("params.{extra}")),
                    format!("unknown parameter for {kind} layer"),
                ));
            }
            let mut values = BTreeMap::new();
            for &name in names {
                let field = at(&format!("params.{name}"));
                let raw = doc.params.get(name).ok_or_else(|| Error::schema(&field, "missing"))?;
                let v = raw
                    .as_u64()
                    .ok_or_else(|| Error::schema(&field, format!("expected a positive integer, got {raw}")))?;
                if v == 0 {
                    return Err(Error::schema(&field, "must be >= 1"));
                }
                values.insert(name, v);
            }
            let dtype = doc.dtype_bytes.unwrap_or(DEFAULT_DTYPE_BYTES);
            if dtype == 0 {
                return Err(Error::schema(at("dtype_bytes"), "must be >= 1"));
            }
            let params = LayerParams::from_fields(kind, |f| values[f]);
            layers.push(LayerNode::new(doc.id, params, dtype));
        }
        let edges: Vec<(String, String)> = self.edges.into_iter().map(|[a, b]| (a, b)).collect();
        ModelGraph::new(self.name, layers, &edges)
    }
}

/// Parses and validates a model document.
pub fn parse_model(document: &str) -> Result<ModelGraph> {
    let doc: ModelDocument = serde_json::from_str(document)?;
    doc.into_graph()
}
