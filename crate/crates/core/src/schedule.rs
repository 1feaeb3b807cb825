//! Mapping state, list scheduling, and the schedule export/validation formats.
//!
//! Every accelerator executes its layers one at a time in commitment order. A
//! layer starts once its accelerator is free and all producers have finished;
//! its own transfers and compute run back to back. Costs are cached per layer so
//! that incremental rescheduling after a local change reproduces the full
//! computation bit for bit.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ModelGraph;
use crate::system::{CostBreakdown, SystemSpec};

/// Absolute tolerance, in seconds, for latency tie detection.
pub const TIME_EPS: f64 = 1e-12;

/// A graph and system pair with per-(layer, accelerator) compute costs cached.
#[derive(Debug, Clone)]
pub struct Instance<'a> {
    pub graph: &'a ModelGraph,
    pub system: &'a SystemSpec,
    compute: Vec<Vec<Option<f64>>>,
    compute_energy: Vec<Vec<f64>>,
    eligible: Vec<Vec<usize>>,
}

impl<'a> Instance<'a> {
    /// Fails with `NoSupportingAccelerator` if some layer has nowhere to run.
    pub fn new(graph: &'a ModelGraph, system: &'a SystemSpec) -> Result<Self> {
        let mut compute = Vec::with_capacity(graph.len());
        let mut compute_energy = Vec::with_capacity(graph.len());
        let mut eligible = Vec::with_capacity(graph.len());
        for layer in graph.nodes() {
            let row: Vec<Option<f64>> = system
                .accelerators()
                .iter()
                .map(|a| a.compute_latency(layer).ok())
                .collect();
            let ok: Vec<usize> = (0..row.len()).filter(|&a| row[a].is_some()).collect();
            if ok.is_empty() {
                return Err(Error::NoSupportingAccelerator {
                    layer: layer.id.clone(),
                    kind: layer.kind().to_string(),
                });
            }
            compute_energy.push(system.accelerators().iter().map(|a| a.compute_energy(layer)).collect());
            compute.push(row);
            eligible.push(ok);
        }
        Ok(Instance {
            graph,
            system,
            compute,
            compute_energy,
            eligible,
        })
    }

    /// Accelerators able to run `layer`, in system order.
    pub fn eligible(&self, layer: usize) -> &[usize] {
        &self.eligible[layer]
    }

    pub fn compute_latency(&self, layer: usize, acc: usize) -> Result<f64> {
        self.compute[layer][acc].ok_or_else(|| Error::UnsupportedLayer {
            acc: self.system.acc(acc).id.clone(),
            layer: self.graph.node(layer).id.clone(),
        })
    }

    /// Cost with every weight and activation going through the host.
    pub fn zero_locality_cost(&self, layer: usize, acc: usize) -> Result<CostBreakdown> {
        let c = self.compute_latency(layer, acc)?;
        Ok(self
            .system
            .acc(acc)
            .cost_with_compute(self.graph.node(layer), c, false, 0, 0))
    }

    /// Bytes of `layer`'s input elided by fused incoming edges, split in
    /// proportion to each producer's output size.
    pub fn input_fused_bytes(&self, m: &MappingState, layer: usize) -> u64 {
        let preds = self.graph.preds(layer);
        if preds.is_empty() {
            return 0;
        }
        let mut fused = 0u128;
        let mut all = 0u128;
        for &(u, e) in preds {
            let b = self.graph.node(u).ofm_bytes as u128;
            all += b;
            if m.fused[e] {
                fused += b;
            }
        }
        if fused == all {
            return self.graph.node(layer).ifm_bytes;
        }
        (self.graph.node(layer).ifm_bytes as u128 * fused / all) as u64
    }

    /// The output only stays local when every consumer edge is fused; exits always ship.
    pub fn output_fused_bytes(&self, m: &MappingState, layer: usize) -> u64 {
        let succs = self.graph.succs(layer);
        if !succs.is_empty() && succs.iter().all(|&(_, e)| m.fused[e]) {
            self.graph.node(layer).ofm_bytes
        } else {
            0
        }
    }

    pub fn layer_cost(&self, m: &MappingState, layer: usize) -> Result<CostBreakdown> {
        let acc = m.assignment[layer].ok_or_else(|| Error::IncompleteAssignment(self.graph.node(layer).id.clone()))?;
        let c = self.compute_latency(layer, acc)?;
        Ok(self.system.acc(acc).cost_with_compute(
            self.graph.node(layer),
            c,
            m.pinned[layer],
            self.input_fused_bytes(m, layer),
            self.output_fused_bytes(m, layer),
        ))
    }

    /// Bytes the layer moves over its host link.
    pub fn transferred_bytes(&self, m: &MappingState, layer: usize) -> u64 {
        let node = self.graph.node(layer);
        let w = if m.pinned[layer] { 0 } else { node.weight_bytes };
        w + (node.ifm_bytes - self.input_fused_bytes(m, layer)) + (node.ofm_bytes - self.output_fused_bytes(m, layer))
    }

    pub fn layer_energy(&self, m: &MappingState, layer: usize) -> f64 {
        let acc = m.assignment[layer].expect("assigned layer");
        self.compute_energy[layer][acc] + self.transferred_bytes(m, layer) as f64 * self.system.acc(acc).energy_per_byte
    }
}

/// Layer-to-accelerator assignment plus locality decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingState {
    pub(crate) assignment: Vec<Option<usize>>,
    pub(crate) acc_order: Vec<Vec<usize>>,
    /// Commitment rank; a topological order of the graph.
    pub(crate) rank: Vec<usize>,
    next_rank: usize,
    pub(crate) pinned: Vec<bool>,
    /// Indexed by graph edge.
    pub(crate) fused: Vec<bool>,
    pub(crate) dram_used: Vec<u64>,
}

impl MappingState {
    pub fn empty(inst: &Instance) -> Self {
        MappingState {
            assignment: vec![None; inst.graph.len()],
            acc_order: vec![Vec::new(); inst.system.len()],
            rank: vec![usize::MAX; inst.graph.len()],
            next_rank: 0,
            pinned: vec![false; inst.graph.len()],
            fused: vec![false; inst.graph.edges().len()],
            dram_used: vec![0; inst.system.len()],
        }
    }

    /// Appends `layer` to the end of `acc`'s execution order.
    pub fn commit(&mut self, layer: usize, acc: usize) {
        debug_assert!(self.assignment[layer].is_none());
        self.assignment[layer] = Some(acc);
        self.acc_order[acc].push(layer);
        self.rank[layer] = self.next_rank;
        self.next_rank += 1;
    }

    /// Moves an assigned layer, keeping commitment order on the destination.
    /// Locality decisions involving the layer are dropped.
    pub fn move_layer(&mut self, inst: &Instance, layer: usize, dst: usize) {
        let src = self.assignment[layer].expect("moving an assigned layer");
        if src == dst {
            return;
        }
        self.acc_order[src].retain(|&l| l != layer);
        let r = self.rank[layer];
        let pos = self.acc_order[dst].partition_point(|&l| self.rank[l] < r);
        self.acc_order[dst].insert(pos, layer);
        self.assignment[layer] = Some(dst);
        self.pinned[layer] = false;
        for &(_, e) in inst.graph.preds(layer).iter().chain(inst.graph.succs(layer)) {
            self.fused[e] = false;
        }
        self.recompute_dram(inst);
    }

    /// Pins or unpins a layer's weights. Capacity is not checked here; see [`MappingState::check`].
    pub fn set_pinned(&mut self, inst: &Instance, layer: usize, on: bool) {
        self.pinned[layer] = on;
        self.recompute_dram(inst);
    }

    /// Marks an edge fused or not. Returns false, leaving the state alone, if
    /// fusing an edge whose endpoints are on different accelerators.
    pub fn set_fused(&mut self, inst: &Instance, edge: usize, on: bool) -> bool {
        let (u, v) = inst.graph.edges()[edge];
        if on && (self.assignment[u].is_none() || self.assignment[u] != self.assignment[v]) {
            return false;
        }
        self.fused[edge] = on;
        self.recompute_dram(inst);
        true
    }

    pub fn clear_locality(&mut self) {
        self.pinned.iter_mut().for_each(|p| *p = false);
        self.fused.iter_mut().for_each(|f| *f = false);
        self.dram_used.iter_mut().for_each(|d| *d = 0);
    }

    pub(crate) fn recompute_dram(&mut self, inst: &Instance) {
        let mut used = vec![0u64; inst.system.len()];
        for (l, &p) in self.pinned.iter().enumerate() {
            if p {
                used[self.assignment[l].expect("pinned layer is assigned")] += inst.graph.node(l).weight_bytes;
            }
        }
        for (e, &(u, _)) in inst.graph.edges().iter().enumerate() {
            if self.fused[e] {
                used[self.assignment[u].expect("fused edge is assigned")] += inst.graph.node(u).ofm_bytes;
            }
        }
        self.dram_used = used;
    }

    pub fn is_complete(&self) -> bool {
        self.assignment.iter().all(Option::is_some)
    }

    pub fn acc_of(&self, layer: usize) -> Option<usize> {
        self.assignment[layer]
    }

    pub fn acc_order(&self, acc: usize) -> &[usize] {
        &self.acc_order[acc]
    }

    pub fn is_pinned(&self, layer: usize) -> bool {
        self.pinned[layer]
    }

    pub fn is_fused(&self, edge: usize) -> bool {
        self.fused[edge]
    }

    pub fn dram_used(&self, acc: usize) -> u64 {
        self.dram_used[acc]
    }

    pub fn pinned_count(&self) -> usize {
        self.pinned.iter().filter(|&&p| p).count()
    }

    pub fn fused_count(&self) -> usize {
        self.fused.iter().filter(|&&f| f).count()
    }

    /// Assignment by id.
    pub fn assignment_ids(&self, inst: &Instance) -> BTreeMap<String, String> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(l, a)| a.map(|a| (inst.graph.node(l).id.clone(), inst.system.acc(a).id.clone())))
            .collect()
    }

    /// Checks the structural invariants against the instance.
    pub fn check(&self, inst: &Instance) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidState(msg));
        let g = inst.graph;
        let mut seen = vec![false; g.len()];
        for (a, order) in self.acc_order.iter().enumerate() {
            for (i, &l) in order.iter().enumerate() {
                if seen[l] {
                    return bad(format!("layer `{}` appears twice in execution orders", g.node(l).id));
                }
                seen[l] = true;
                if self.assignment[l] != Some(a) {
                    return bad(format!(
                        "layer `{}` ordered on `{}` but not assigned there",
                        g.node(l).id,
                        inst.system.acc(a).id
                    ));
                }
                if i > 0 && self.rank[order[i - 1]] >= self.rank[l] {
                    return bad(format!(
                        "execution order on `{}` is not in commitment order",
                        inst.system.acc(a).id
                    ));
                }
                if inst.compute[l][a].is_none() {
                    return Err(Error::UnsupportedLayer {
                        acc: inst.system.acc(a).id.clone(),
                        layer: g.node(l).id.clone(),
                    });
                }
            }
        }
        for l in 0..g.len() {
            if self.assignment[l].is_some() != seen[l] {
                return bad(format!("layer `{}` assignment and order disagree", g.node(l).id));
            }
            if self.pinned[l] && self.assignment[l].is_none() {
                return bad(format!("unassigned layer `{}` is pinned", g.node(l).id));
            }
        }
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            if let (Some(_), Some(_)) = (self.assignment[u], self.assignment[v]) {
                if self.rank[u] >= self.rank[v] {
                    return bad(format!(
                        "commitment order puts `{}` after its consumer `{}`",
                        g.node(u).id,
                        g.node(v).id
                    ));
                }
            }
            if self.fused[e] && (self.assignment[u].is_none() || self.assignment[u] != self.assignment[v]) {
                return bad(format!(
                    "edge {} -> {} is fused across accelerators",
                    g.node(u).id,
                    g.node(v).id
                ));
            }
        }
        let mut copy = self.clone();
        copy.recompute_dram(inst);
        if copy.dram_used != self.dram_used {
            return bad("dram_used is out of date".into());
        }
        for (a, &used) in self.dram_used.iter().enumerate() {
            if used > inst.system.acc(a).m_acc {
                return bad(format!(
                    "`{}` uses {used} bytes of DRAM, capacity {}",
                    inst.system.acc(a).id,
                    inst.system.acc(a).m_acc
                ));
            }
        }
        Ok(())
    }

    pub fn to_document(&self, inst: &Instance) -> MappingDocument {
        let g = inst.graph;
        MappingDocument {
            assignment: self.assignment_ids(inst),
            acc_order: self
                .acc_order
                .iter()
                .enumerate()
                .map(|(a, o)| {
                    (
                        inst.system.acc(a).id.clone(),
                        o.iter().map(|&l| g.node(l).id.clone()).collect(),
                    )
                })
                .collect(),
            pinned: (0..g.len())
                .filter(|&l| self.pinned[l])
                .map(|l| g.node(l).id.clone())
                .collect(),
            fused: g
                .edges()
                .iter()
                .enumerate()
                .filter(|&(e, _)| self.fused[e])
                .map(|(_, &(u, v))| [g.node(u).id.clone(), g.node(v).id.clone()])
                .collect(),
        }
    }
}

/// On-disk mapping file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingDocument {
    pub assignment: BTreeMap<String, String>,
    pub acc_order: BTreeMap<String, Vec<String>>,
    pub pinned: Vec<String>,
    pub fused: Vec<[String; 2]>,
}

impl MappingDocument {
    /// Rebuilds a state; commitment ranks follow a topological order of the
    /// combined dependency and execution-order constraints.
    pub fn into_state(&self, inst: &Instance) -> Result<MappingState> {
        let g = inst.graph;
        let layer = |id: &str| {
            g.index_of(id)
                .ok_or_else(|| Error::schema("mapping", format!("unknown layer `{id}`")))
        };
        let acc = |id: &str| {
            inst.system
                .index_of(id)
                .ok_or_else(|| Error::schema("mapping", format!("unknown accelerator `{id}`")))
        };
        let mut m = MappingState::empty(inst);
        let mut orders = vec![Vec::new(); inst.system.len()];
        for (a_id, ids) in &self.acc_order {
            let a = acc(a_id)?;
            for id in ids {
                let l = layer(id)?;
                if m.assignment[l].is_some() {
                    return Err(Error::InvalidState(format!("layer `{id}` ordered twice")));
                }
                m.assignment[l] = Some(a);
                orders[a].push(l);
            }
        }
        for (l_id, a_id) in &self.assignment {
            let (l, a) = (layer(l_id)?, acc(a_id)?);
            if m.assignment[l] != Some(a) {
                return Err(Error::InvalidState(format!(
                    "assignment of `{l_id}` disagrees with acc_order"
                )));
            }
        }
        if let Some(l) =
            (0..g.len()).find(|&l| m.assignment[l].is_some() && !self.assignment.contains_key(&g.node(l).id))
        {
            return Err(Error::InvalidState(format!(
                "layer `{}` ordered but not assigned",
                g.node(l).id
            )));
        }
        let order = combined_order(g, &m.assignment, &orders)?;
        for (r, &l) in order.iter().enumerate() {
            m.rank[l] = r;
        }
        m.next_rank = order.len();
        m.acc_order = orders;
        for id in &self.pinned {
            m.pinned[layer(id)?] = true;
        }
        for [u, v] in &self.fused {
            let (u, v) = (layer(u)?, layer(v)?);
            let e = g.edge_index(u, v).ok_or_else(|| {
                Error::schema("mapping.fused", format!("no edge {} -> {}", g.node(u).id, g.node(v).id))
            })?;
            m.fused[e] = true;
        }
        for l in 0..g.len() {
            if m.pinned[l] && m.assignment[l].is_none() {
                return Err(Error::InvalidState(format!(
                    "unassigned layer `{}` is pinned",
                    g.node(l).id
                )));
            }
        }
        for (e, &(u, v)) in g.edges().iter().enumerate() {
            if m.fused[e] && (m.assignment[u].is_none() || m.assignment[u] != m.assignment[v]) {
                return Err(Error::InvalidState(format!(
                    "edge {} -> {} is fused across accelerators",
                    g.node(u).id,
                    g.node(v).id
                )));
            }
        }
        m.recompute_dram(inst);
        m.check(inst)?;
        Ok(m)
    }
}

/// Topological order of assigned layers under dependency plus execution-order edges.
fn combined_order(g: &ModelGraph, assignment: &[Option<usize>], orders: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = g.len();
    let mut next_on_acc = vec![None; n];
    let mut indeg = vec![0usize; n];
    for order in orders {
        for w in order.windows(2) {
            next_on_acc[w[0]] = Some(w[1]);
            indeg[w[1]] += 1;
        }
    }
    for &(u, v) in g.edges() {
        if assignment[u].is_some() && assignment[v].is_some() {
            indeg[v] += 1;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&l| assignment[l].is_some() && indeg[l] == 0)
        .map(Reverse)
        .collect();
    let mut out = Vec::new();
    while let Some(Reverse(u)) = ready.pop() {
        out.push(u);
        let nexts = g
            .succs(u)
            .iter()
            .map(|&(v, _)| v)
            .filter(|&v| assignment[v].is_some())
            .chain(next_on_acc[u]);
        for v in nexts {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push(Reverse(v));
            }
        }
    }
    let assigned = assignment.iter().filter(|a| a.is_some()).count();
    if out.len() != assigned {
        return Err(Error::InvalidState(
            "execution orders conflict with layer dependencies".into(),
        ));
    }
    Ok(out)
}

/// Per-layer timing and the system rollup.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub start: Vec<f64>,
    pub finish: Vec<f64>,
    pub cost: Vec<CostBreakdown>,
    pub energy: Vec<f64>,
    acc_of: Vec<usize>,
    acc_prev: Vec<Option<usize>>,
    pub sys_latency: f64,
    pub sys_energy: f64,
}

impl Schedule {
    pub fn comm_seconds(&self) -> f64 {
        self.cost.iter().map(CostBreakdown::comm).sum()
    }

    pub fn compute_seconds(&self) -> f64 {
        self.cost.iter().map(|c| c.compute).sum()
    }

    /// Fraction of summed layer time spent computing.
    pub fn compute_share(&self) -> f64 {
        let compute = self.compute_seconds();
        let total = compute + self.comm_seconds();
        if total > 0.0 {
            compute / total
        } else {
            1.0
        }
    }

    fn rollup(&mut self) {
        self.sys_latency = self.finish.iter().copied().fold(0.0, f64::max);
        self.sys_energy = self.energy.iter().sum();
    }

    pub fn to_gantt(&self, inst: &Instance, m: &MappingState) -> GanttDocument {
        GanttDocument {
            summary: GanttSummary {
                sys_latency: self.sys_latency,
                sys_energy: self.sys_energy,
                comm_seconds: self.comm_seconds(),
                compute_seconds: self.compute_seconds(),
            },
            accelerators: (0..inst.system.len())
                .map(|a| GanttLane {
                    id: inst.system.acc(a).id.clone(),
                    layers: m.acc_order[a]
                        .iter()
                        .map(|&l| GanttEntry {
                            layer: inst.graph.node(l).id.clone(),
                            start: self.start[l],
                            finish: self.finish[l],
                            breakdown: self.cost[l],
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

fn acc_prev_of(m: &MappingState, n: usize) -> Vec<Option<usize>> {
    let mut prev = vec![None; n];
    for order in &m.acc_order {
        for w in order.windows(2) {
            prev[w[1]] = Some(w[0]);
        }
    }
    prev
}

/// List-schedules a complete mapping.
pub fn full_schedule(inst: &Instance, m: &MappingState) -> Result<Schedule> {
    let g = inst.graph;
    if let Some(l) = (0..g.len()).find(|&l| m.assignment[l].is_none()) {
        return Err(Error::IncompleteAssignment(g.node(l).id.clone()));
    }
    m.check(inst)?;
    let n = g.len();
    let mut s = Schedule {
        start: vec![0.0; n],
        finish: vec![0.0; n],
        cost: Vec::with_capacity(n),
        energy: Vec::with_capacity(n),
        acc_of: m.assignment.iter().map(|a| a.unwrap()).collect(),
        acc_prev: acc_prev_of(m, n),
        sys_latency: 0.0,
        sys_energy: 0.0,
    };
    for l in 0..n {
        s.cost.push(inst.layer_cost(m, l)?);
        s.energy.push(inst.layer_energy(m, l));
    }
    let mut by_rank: Vec<usize> = (0..n).collect();
    by_rank.sort_unstable_by_key(|&l| m.rank[l]);
    for l in by_rank {
        let (start, finish) = place(g, &s, l);
        s.start[l] = start;
        s.finish[l] = finish;
    }
    s.rollup();
    Ok(s)
}

#[inline]
fn place(g: &ModelGraph, s: &Schedule, l: usize) -> (f64, f64) {
    let mut start = s.acc_prev[l].map_or(0.0, |p| s.finish[p]);
    for &(p, _) in g.preds(l) {
        start = start.max(s.finish[p]);
    }
    (start, start + s.cost[l].total())
}

/// Updates `prev` after the layers in `changed` had their placement or
/// locality altered, touching only layers whose timing can move.
///
/// Layers whose accelerator or execution-order predecessor differs from
/// `prev` are picked up automatically. Cost changes are not: a pin toggle or
/// a fusion change (including fusions dropped by `move_layer`) must list
/// every affected endpoint in `changed`.
pub fn incremental_reschedule(
    inst: &Instance,
    m: &MappingState,
    prev: &Schedule,
    changed: &BTreeSet<usize>,
) -> Result<Schedule> {
    let g = inst.graph;
    let n = g.len();
    if let Some(l) = (0..n).find(|&l| m.assignment[l].is_none()) {
        return Err(Error::IncompleteAssignment(g.node(l).id.clone()));
    }
    let mut s = prev.clone();
    let acc_prev = acc_prev_of(m, n);
    let mut acc_next = vec![None; n];
    for order in &m.acc_order {
        for w in order.windows(2) {
            acc_next[w[0]] = Some(w[1]);
        }
    }
    let mut seeds: BTreeSet<usize> = changed.clone();
    for l in 0..n {
        let acc = m.assignment[l].unwrap();
        if s.acc_of[l] != acc || s.acc_prev[l] != acc_prev[l] {
            seeds.insert(l);
        }
    }
    if seeds.is_empty() {
        return Ok(s);
    }
    s.acc_prev = acc_prev;
    for &l in &seeds {
        s.acc_of[l] = m.assignment[l].unwrap();
        s.cost[l] = inst.layer_cost(m, l)?;
        s.energy[l] = inst.layer_energy(m, l);
    }

    let mut queued = vec![false; n];
    let mut heap = BinaryHeap::new();
    for &l in &seeds {
        queued[l] = true;
        heap.push(Reverse((m.rank[l], l)));
    }
    while let Some(Reverse((_, l))) = heap.pop() {
        queued[l] = false;
        let (start, finish) = place(g, &s, l);
        let moved = start != s.start[l] || finish != s.finish[l];
        s.start[l] = start;
        s.finish[l] = finish;
        if moved || seeds.contains(&l) {
            let nexts = g.succs(l).iter().map(|&(v, _)| v).chain(acc_next[l]);
            for v in nexts {
                if !queued[v] {
                    queued[v] = true;
                    heap.push(Reverse((m.rank[v], v)));
                }
            }
        }
    }
    s.rollup();
    Ok(s)
}

/// Compute energy plus host-link transfer energy, recomputed from the mapping.
pub fn system_energy(inst: &Instance, m: &MappingState) -> f64 {
    (0..inst.graph.len())
        .map(|l| {
            let acc = inst.system.acc(m.assignment[l].expect("complete mapping"));
            acc.compute_energy(inst.graph.node(l)) + inst.transferred_bytes(m, l) as f64 * acc.energy_per_byte
        })
        .sum()
}

/// Gantt export: one lane per accelerator plus summary totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GanttDocument {
    pub summary: GanttSummary,
    pub accelerators: Vec<GanttLane>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GanttSummary {
    pub sys_latency: f64,
    pub sys_energy: f64,
    pub comm_seconds: f64,
    pub compute_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GanttLane {
    pub id: String,
    pub layers: Vec<GanttEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GanttEntry {
    pub layer: String,
    pub start: f64,
    pub finish: f64,
    pub breakdown: CostBreakdown,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12)
}

/// Checks a Gantt document against the model graph, independently of the
/// scheduler: every layer runs exactly once, producers finish before
/// consumers start, lanes never overlap, and the summary matches the lanes.
pub fn validate_gantt(g: &ModelGraph, doc: &GanttDocument) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidSchedule(msg));
    let mut times: Vec<Option<(f64, f64)>> = vec![None; g.len()];
    let (mut comm, mut compute, mut latest) = (0.0, 0.0, 0.0f64);
    for lane in &doc.accelerators {
        let mut free = f64::NEG_INFINITY;
        for entry in &lane.layers {
            let Some(l) = g.index_of(&entry.layer) else {
                return bad(format!("unknown layer `{}` on `{}`", entry.layer, lane.id));
            };
            if times[l].is_some() {
                return bad(format!("layer `{}` scheduled twice", entry.layer));
            }
            if !(entry.start >= 0.0) || !(entry.finish >= entry.start) {
                return bad(format!(
                    "layer `{}` has interval [{}, {}]",
                    entry.layer, entry.start, entry.finish
                ));
            }
            if entry.start < free {
                return bad(format!(
                    "layer `{}` overlaps its predecessor on `{}`",
                    entry.layer, lane.id
                ));
            }
            let b = &entry.breakdown;
            if [b.weight_xfer, b.input_xfer, b.compute, b.output_xfer]
                .iter()
                .any(|x| !(*x >= 0.0))
            {
                return bad(format!("layer `{}` has a negative cost component", entry.layer));
            }
            let busy = b.weight_xfer + b.input_xfer + b.compute + b.output_xfer;
            if !close(entry.finish - entry.start, busy) {
                return bad(format!(
                    "layer `{}` runs {} s but its breakdown sums to {busy} s",
                    entry.layer,
                    entry.finish - entry.start
                ));
            }
            free = entry.finish;
            times[l] = Some((entry.start, entry.finish));
            comm += b.weight_xfer + b.input_xfer + b.output_xfer;
            compute += b.compute;
            latest = latest.max(entry.finish);
        }
    }
    if let Some(l) = times.iter().position(Option::is_none) {
        return bad(format!("layer `{}` is not scheduled", g.node(l).id));
    }
    for &(u, v) in g.edges() {
        let (_, fu) = times[u].unwrap();
        let (sv, _) = times[v].unwrap();
        if sv < fu {
            return bad(format!(
                "`{}` starts at {sv} before producer `{}` finishes at {fu}",
                g.node(v).id,
                g.node(u).id
            ));
        }
    }
    if doc.summary.sys_latency != latest {
        return bad(format!(
            "sys_latency {} but last finish is {latest}",
            doc.summary.sys_latency
        ));
    }
    if !close(doc.summary.comm_seconds, comm) || !close(doc.summary.compute_seconds, compute) {
        return bad("summary totals disagree with lanes".into());
    }
    Ok(())
}

impl Schedule {
    pub fn validate(&self, inst: &Instance, m: &MappingState) -> Result<()> {
        validate_gantt(inst.graph, &self.to_gantt(inst, m))
    }
}

/// Reads an execution interval list back into per-layer `(start, finish)`.
pub fn gantt_times(doc: &GanttDocument) -> BTreeMap<String, (f64, f64)> {
    doc.accelerators
        .iter()
        .flat_map(|lane| lane.layers.iter().map(|e| (e.layer.clone(), (e.start, e.finish))))
        .collect()
}
