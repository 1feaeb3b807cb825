//! Four-step heterogeneous mapping:
//!
//! 1. computation-prioritized mapping over successive frontier groups,
//! 2. weight pinning in local DRAM via per-accelerator knapsack,
//! 3. activation fusion between adjacent layers sharing an accelerator,
//! 4. greedy data-locality remapping of layers onto their neighbours'
//!    accelerators, re-running steps 2 and 3 for every attempt.
//!
//! The result after step 2 is the computation-prioritized baseline.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LayerNode, ModelGraph};
use crate::knapsack::{knapsack_with_mandatory, KnapsackItem};
use crate::schedule::{full_schedule, incremental_reschedule, Instance, MappingState, Schedule, TIME_EPS};
use crate::system::{transfer_time, SystemSpec};

/// Largest number of joint assignments enumerated at once in step 1.
pub const ENUMERATION_CAP: u128 = 4096;

/// Mapping and schedule after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSnapshot {
    pub state: MappingState,
    pub schedule: Schedule,
}

impl StepSnapshot {
    pub fn sys_latency(&self) -> f64 {
        self.schedule.sys_latency
    }

    pub fn sys_energy(&self) -> f64 {
        self.schedule.sys_energy
    }
}

/// One accepted step-4 move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemapOp {
    pub layer: String,
    pub from: String,
    pub to: String,
    pub latency_before: f64,
    pub latency_after: f64,
}

/// What a previous mapping left behind: where each layer ran and whether its
/// weights are still resident in that accelerator's DRAM.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlacementMemory {
    pub layers: BTreeMap<String, Placement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub acc: String,
    pub resident: bool,
    pub node: LayerNode,
}

impl PlacementMemory {
    pub fn resident_on(&self, acc: &str) -> BTreeSet<String> {
        self.layers
            .iter()
            .filter(|(_, p)| p.resident && p.acc == acc)
            .map(|(id, _)| id.clone())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct H2HResult {
    /// Snapshots after each executed step, in order.
    pub steps: Vec<StepSnapshot>,
    pub remap_log: Vec<RemapOp>,
    /// Step-4 passes over the layer list.
    pub passes: usize,
    pub search_time: Duration,
    pub memory: PlacementMemory,
}

impl H2HResult {
    pub fn step(&self, k: usize) -> &StepSnapshot {
        &self.steps[k - 1]
    }

    pub fn last(&self) -> &StepSnapshot {
        self.steps.last().expect("at least one step")
    }

    pub fn final_state(&self) -> &MappingState {
        &self.last().state
    }

    pub fn latencies(&self) -> Vec<f64> {
        self.steps.iter().map(StepSnapshot::sys_latency).collect()
    }
}

/// Restrictions imposed by previously buffered weights.
#[derive(Debug, Clone)]
struct Constraints {
    forced: Vec<Option<usize>>,
    mandatory: Vec<bool>,
    locked: Vec<bool>,
}

impl Constraints {
    fn none(n: usize) -> Self {
        Constraints {
            forced: vec![None; n],
            mandatory: vec![false; n],
            locked: vec![false; n],
        }
    }

    fn choices<'i>(&'i self, inst: &'i Instance, layer: usize) -> &'i [usize] {
        match &self.forced[layer] {
            Some(a) => std::slice::from_ref(a),
            None => inst.eligible(layer),
        }
    }
}

/// Splits an id-ordered group so that each chunk's joint assignment count
/// stays within [`ENUMERATION_CAP`].
fn chunk_group(group: &[usize], width: impl Fn(usize) -> usize) -> Vec<Vec<usize>> {
    let mut chunks = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    let mut product: u128 = 1;
    for &l in group {
        let w = width(l) as u128;
        if !cur.is_empty() && product * w > ENUMERATION_CAP {
            chunks.push(std::mem::take(&mut cur));
            product = 1;
        }
        cur.push(l);
        product *= w;
    }
    if !cur.is_empty() {
        chunks.push(cur);
    }
    chunks
}

fn prioritized(inst: &Instance, cons: &Constraints) -> Result<MappingState> {
    let g = inst.graph;
    let mut m = MappingState::empty(inst);
    let n_acc = inst.system.len();
    let mut finish = vec![0.0f64; g.len()];
    let mut acc_free = vec![0.0f64; n_acc];
    let mut makespan = 0.0f64;

    for group in g.frontier_groups() {
        for chunk in chunk_group(&group, |l| cons.choices(inst, l).len()) {
            let choices: Vec<&[usize]> = chunk.iter().map(|&l| cons.choices(inst, l)).collect();
            let ready: Vec<f64> = chunk
                .iter()
                .map(|&l| g.preds(l).iter().map(|&(p, _)| finish[p]).fold(0.0, f64::max))
                .collect();
            let cost: Vec<Vec<f64>> = chunk
                .iter()
                .zip(&choices)
                .map(|(&l, cs)| {
                    cs.iter()
                        .map(|&a| inst.zero_locality_cost(l, a).map(|c| c.total()))
                        .collect()
                })
                .collect::<Result<_>>()?;

            let mut digits = vec![0usize; chunk.len()];
            let mut free = acc_free.clone();
            let mut fin = vec![0.0; chunk.len()];
            let mut best: Option<(f64, f64, Vec<usize>, Vec<f64>)> = None;
            'enumerate: loop {
                free.copy_from_slice(&acc_free);
                let mut peak = makespan;
                let mut sum = 0.0;
                for j in 0..chunk.len() {
                    let a = choices[j][digits[j]];
                    let start = free[a].max(ready[j]);
                    fin[j] = start + cost[j][digits[j]];
                    free[a] = fin[j];
                    peak = peak.max(fin[j]);
                    sum += fin[j];
                }
                let delta = peak - makespan;
                let better = match &best {
                    None => true,
                    Some((bd, bs, _, _)) => delta < bd - TIME_EPS || (delta <= bd + TIME_EPS && sum < bs - TIME_EPS),
                };
                if better {
                    best = Some((delta, sum, digits.clone(), fin.clone()));
                }
                // mixed-radix increment, last layer fastest
                let mut j = chunk.len();
                loop {
                    if j == 0 {
                        break 'enumerate;
                    }
                    j -= 1;
                    digits[j] += 1;
                    if digits[j] < choices[j].len() {
                        break;
                    }
                    digits[j] = 0;
                }
            }
            let (_, _, digits, fin) = best.expect("non-empty candidate set");
            for (j, &l) in chunk.iter().enumerate() {
                let a = choices[j][digits[j]];
                m.commit(l, a);
                finish[l] = fin[j];
                acc_free[a] = fin[j];
                makespan = makespan.max(fin[j]);
            }
        }
    }
    Ok(m)
}

/// Step 1: maps each frontier group to the joint assignment with the smallest
/// makespan increment, with all weights and activations going through the host.
///
/// Ties go to the smaller sum of the group's finish times, then to the first
/// assignment in (layer id, accelerator order) enumeration.
pub fn computation_prioritized_mapping(inst: &Instance) -> Result<MappingState> {
    prioritized(inst, &Constraints::none(inst.graph.len()))
}

/// Knapsack selections already computed for an instance, keyed by
/// (accelerator, capacity, items in priority order, mandatory flags).
type PinMemo = HashMap<(usize, u64, Vec<usize>, Vec<bool>), Vec<bool>>;

fn pin_weights(
    inst: &Instance,
    m: &mut MappingState,
    sched: &Schedule,
    cons: &Constraints,
    memo: &mut PinMemo,
) -> Result<Schedule> {
    let g = inst.graph;
    let before = m.pinned.clone();
    for a in 0..inst.system.len() {
        let acc = inst.system.acc(a);
        let mut layers = m.acc_order[a].clone();
        layers.sort_by(|&x, &y| sched.start[x].total_cmp(&sched.start[y]).then(x.cmp(&y)));
        let items: Vec<KnapsackItem> = layers
            .iter()
            .map(|&l| KnapsackItem {
                tag: l,
                weight: g.node(l).weight_bytes,
                value: transfer_time(g.node(l).weight_bytes, acc.bw_acc),
            })
            .collect();
        let mandatory: Vec<bool> = layers.iter().map(|&l| cons.mandatory[l]).collect();
        let reserved: u64 = g
            .edges()
            .iter()
            .enumerate()
            .filter(|&(e, &(u, _))| m.fused[e] && m.assignment[u] == Some(a))
            .map(|(_, &(u, _))| g.node(u).ofm_bytes)
            .sum();
        let capacity = acc.m_acc.saturating_sub(reserved);
        let selected = memo
            .entry((a, capacity, layers, mandatory))
            .or_insert_with_key(|(_, _, _, mandatory)| knapsack_with_mandatory(&items, mandatory, capacity));
        for (item, &take) in items.iter().zip(selected.iter()) {
            m.pinned[item.tag] = take;
        }
    }
    m.recompute_dram(inst);
    let changed: BTreeSet<usize> = (0..g.len()).filter(|&l| m.pinned[l] != before[l]).collect();
    incremental_reschedule(inst, m, sched, &changed)
}

/// Step 2: per-accelerator knapsack over assigned layers' weights, valued in
/// saved transfer seconds, with ties going to layers that start earlier.
pub fn weight_locality_opt(inst: &Instance, m: &MappingState) -> Result<MappingState> {
    let mut out = m.clone();
    let sched = full_schedule(inst, &out)?;
    pin_weights(
        inst,
        &mut out,
        &sched,
        &Constraints::none(inst.graph.len()),
        &mut PinMemo::new(),
    )?;
    Ok(out)
}

fn fuse_activations(inst: &Instance, m: &mut MappingState, sched: &Schedule) -> Result<Schedule> {
    let g = inst.graph;
    let mut pos = vec![0usize; g.len()];
    for (i, &l) in g.topo_order_ix().iter().enumerate() {
        pos[l] = i;
    }
    let mut edges: Vec<usize> = (0..g.edges().len()).collect();
    edges.sort_by_key(|&e| (pos[g.edges()[e].0], pos[g.edges()[e].1]));
    let mut changed = BTreeSet::new();
    for e in edges {
        let (u, v) = g.edges()[e];
        let a = m.assignment[u].expect("complete mapping");
        if m.fused[e] || m.assignment[v] != Some(a) {
            continue;
        }
        let need = g.node(u).ofm_bytes;
        if need <= inst.system.acc(a).m_acc - m.dram_used[a] {
            m.fused[e] = true;
            m.dram_used[a] += need;
            changed.insert(u);
            changed.insert(v);
        }
    }
    incremental_reschedule(inst, m, sched, &changed)
}

/// Step 3: fuses same-accelerator edges, in topological edge order, while the
/// producer's output buffer fits in the DRAM left after weight pinning.
pub fn activation_transfer_opt(inst: &Instance, m: &MappingState) -> Result<MappingState> {
    let mut out = m.clone();
    let sched = full_schedule(inst, &out)?;
    fuse_activations(inst, &mut out, &sched)?;
    Ok(out)
}

/// Schedules of the same assignment at zero locality, after pinning, and after fusion.
struct Localized {
    zero: Schedule,
    pinned: (MappingState, Schedule),
    fused: (MappingState, Schedule),
}

fn localize(inst: &Instance, m: &MappingState, cons: &Constraints, memo: &mut PinMemo) -> Result<Localized> {
    let mut base = m.clone();
    base.clear_locality();
    let zero = full_schedule(inst, &base)?;
    let mut pinned = base;
    let after_pin = pin_weights(inst, &mut pinned, &zero, cons, memo)?;
    let mut fused = pinned.clone();
    let after_fuse = fuse_activations(inst, &mut fused, &after_pin)?;
    Ok(Localized {
        zero,
        pinned: (pinned, after_pin),
        fused: (fused, after_fuse),
    })
}

/// Re-derives pinning and fusion from scratch for an assignment and returns
/// the resulting state and schedule.
pub fn evaluate_assignment(inst: &Instance, m: &MappingState) -> Result<(MappingState, Schedule)> {
    Ok(localize(inst, m, &Constraints::none(inst.graph.len()), &mut PinMemo::new())?.fused)
}

/// Distinct accelerators hosting a graph neighbour of `layer`, in system order.
fn neighbour_accs(inst: &Instance, m: &MappingState, layer: usize) -> Vec<usize> {
    let g = inst.graph;
    let here = m.assignment[layer];
    let set: BTreeSet<usize> = g
        .preds(layer)
        .iter()
        .chain(g.succs(layer))
        .filter_map(|&(w, _)| m.assignment[w])
        .filter(|&a| Some(a) != here && inst.system.acc(a).supports(g.node(layer).kind()))
        .collect();
    set.into_iter().collect()
}

struct Remapped {
    state: MappingState,
    schedule: Schedule,
    log: Vec<RemapOp>,
    passes: usize,
}

fn remap(inst: &Instance, start: (MappingState, Schedule), cons: &Constraints, memo: &mut PinMemo) -> Result<Remapped> {
    let g = inst.graph;
    let (mut m, mut s) = start;
    let mut log = Vec::new();
    let max_passes = g.len() * inst.system.len() + 1;
    let mut passes = 0;
    while passes < max_passes {
        passes += 1;
        let mut accepted = false;
        for &layer in g.topo_order_ix() {
            if cons.locked[layer] {
                continue;
            }
            let mut best: Option<(usize, MappingState, Schedule)> = None;
            for dst in neighbour_accs(inst, &m, layer) {
                let mut cand = m.clone();
                cand.move_layer(inst, layer, dst);
                let (cand, sched) = localize(inst, &cand, cons, memo)?.fused;
                let bar = best.as_ref().map_or(s.sys_latency, |b| b.2.sys_latency);
                if sched.sys_latency < bar - TIME_EPS {
                    best = Some((dst, cand, sched));
                }
            }
            if let Some((dst, cand, sched)) = best {
                log.push(RemapOp {
                    layer: g.node(layer).id.clone(),
                    from: inst.system.acc(m.assignment[layer].unwrap()).id.clone(),
                    to: inst.system.acc(dst).id.clone(),
                    latency_before: s.sys_latency,
                    latency_after: sched.sys_latency,
                });
                m = cand;
                s = sched;
                accepted = true;
            }
        }
        if !accepted {
            break;
        }
    }
    Ok(Remapped {
        state: m,
        schedule: s,
        log,
        passes,
    })
}

/// Step 4: greedy passes in topological order moving single layers onto an
/// accelerator hosting one of their neighbours; a move is kept only if it
/// lowers system latency by more than [`TIME_EPS`]. Stops after a pass with
/// no accepted move.
pub fn data_locality_remapping(inst: &Instance, m: &MappingState) -> Result<(MappingState, Vec<RemapOp>)> {
    let cons = Constraints::none(inst.graph.len());
    let s = full_schedule(inst, m)?;
    let r = remap(inst, (m.clone(), s), &cons, &mut PinMemo::new())?;
    Ok((r.state, r.log))
}

fn run_constrained(
    inst: &Instance,
    cons: &Constraints,
    through: usize,
    seed: Option<MappingState>,
    memo: &mut PinMemo,
) -> Result<(Vec<StepSnapshot>, Vec<RemapOp>, usize)> {
    assert!((1..=4).contains(&through), "steps run through 1..=4");
    let step1 = match seed {
        Some(m) => m,
        None => prioritized(inst, cons)?,
    };
    let loc = localize(inst, &step1, cons, memo)?;
    let mut steps = vec![StepSnapshot {
        state: step1,
        schedule: loc.zero,
    }];
    if through >= 2 {
        steps.push(StepSnapshot {
            state: loc.pinned.0,
            schedule: loc.pinned.1,
        });
    }
    if through >= 3 {
        steps.push(StepSnapshot {
            state: loc.fused.0.clone(),
            schedule: loc.fused.1.clone(),
        });
    }
    let (mut log, mut passes) = (Vec::new(), 0);
    if through >= 4 {
        let r = remap(inst, loc.fused, cons, memo)?;
        log = r.log;
        passes = r.passes;
        steps.push(StepSnapshot {
            state: r.state,
            schedule: r.schedule,
        });
    }
    Ok((steps, log, passes))
}

fn memory_of(inst: &Instance, m: &MappingState) -> PlacementMemory {
    let g = inst.graph;
    PlacementMemory {
        layers: (0..g.len())
            .map(|l| {
                (
                    g.node(l).id.clone(),
                    Placement {
                        acc: inst.system.acc(m.assignment[l].unwrap()).id.clone(),
                        resident: m.pinned[l],
                        node: g.node(l).clone(),
                    },
                )
            })
            .collect(),
    }
}

/// Runs steps 1 through `through` (1..=4).
pub fn run_h2h_steps(graph: &ModelGraph, system: &SystemSpec, through: usize) -> Result<H2HResult> {
    let t0 = Instant::now();
    let inst = Instance::new(graph, system)?;
    let (steps, remap_log, passes) = run_constrained(
        &inst,
        &Constraints::none(graph.len()),
        through,
        None,
        &mut PinMemo::new(),
    )?;
    let memory = memory_of(&inst, &steps.last().unwrap().state);
    Ok(H2HResult {
        steps,
        remap_log,
        passes,
        search_time: t0.elapsed(),
        memory,
    })
}

/// The full four-step mapping.
pub fn run_h2h(graph: &ModelGraph, system: &SystemSpec) -> Result<H2HResult> {
    run_h2h_steps(graph, system, 4)
}

/// Steps 1 and 2 only: computation-prioritized mapping with weight locality.
pub fn run_baseline(graph: &ModelGraph, system: &SystemSpec) -> Result<(MappingState, Schedule)> {
    let r = run_h2h_steps(graph, system, 2)?;
    let snap = r.steps.into_iter().nth(1).unwrap();
    Ok((snap.state, snap.schedule))
}

/// Remaps after a modality change, reusing what `prev` left in local DRAM.
///
/// Layers of `graph` whose weights are still resident stay on that
/// accelerator and keep their weights pinned. Two starting points are
/// tried: a fresh computation-prioritized mapping of the other layers, and a
/// warm start that also returns every previously seen layer to its last
/// accelerator. The better one after steps 2 and 3 goes through step 4, in
/// which resident layers do not move.
pub fn remap_incremental(prev: &H2HResult, graph: &ModelGraph, system: &SystemSpec) -> Result<H2HResult> {
    let t0 = Instant::now();
    let inst = Instance::new(graph, system)?;
    let n = graph.len();
    let mut cons = Constraints::none(n);
    let mut warm = Constraints::none(n);
    for l in 0..n {
        let node = graph.node(l);
        let Some(p) = prev.memory.layers.get(&node.id) else {
            continue;
        };
        if !p.node.same_shape(node) {
            return Err(Error::IdConflict(node.id.clone()));
        }
        let Some(a) = system.index_of(&p.acc) else { continue };
        if !system.acc(a).supports(node.kind()) {
            continue;
        }
        warm.forced[l] = Some(a);
        if p.resident {
            cons.forced[l] = Some(a);
            cons.mandatory[l] = true;
            cons.locked[l] = true;
        }
    }
    warm.mandatory = cons.mandatory.clone();
    warm.locked = cons.locked.clone();

    let fresh = prioritized(&inst, &cons)?;
    let warm_start = prioritized(&inst, &warm)?;
    let mut memo = PinMemo::new();
    let fresh_lat = localize(&inst, &fresh, &cons, &mut memo)?.fused.1.sys_latency;
    let warm_lat = localize(&inst, &warm_start, &cons, &mut memo)?.fused.1.sys_latency;
    let seed = if warm_lat <= fresh_lat { warm_start } else { fresh };

    let (steps, remap_log, passes) = run_constrained(&inst, &cons, 4, Some(seed), &mut memo)?;
    let mut memory = memory_of(&inst, &steps[3].state);
    retain_dormant(&inst, &steps[3].state, prev, &mut memory);
    Ok(H2HResult {
        steps,
        remap_log,
        passes,
        search_time: t0.elapsed(),
        memory,
    })
}

/// Layers absent from the new graph keep their weights resident while the
/// DRAM the new mapping leaves free can hold them, largest transfer saving first.
fn retain_dormant(inst: &Instance, m: &MappingState, prev: &H2HResult, memory: &mut PlacementMemory) {
    let sys = inst.system;
    let mut free: Vec<u64> = (0..sys.len()).map(|a| sys.acc(a).m_acc - m.dram_used[a]).collect();
    let mut dormant: Vec<(&String, &Placement)> = prev
        .memory
        .layers
        .iter()
        .filter(|(id, _)| inst.graph.index_of(id).is_none())
        .collect();
    dormant.sort_by(|x, y| y.1.node.weight_bytes.cmp(&x.1.node.weight_bytes).then(x.0.cmp(y.0)));
    for (id, p) in dormant {
        let mut kept = p.clone();
        kept.resident = false;
        if p.resident {
            if let Some(a) = sys.index_of(&p.acc) {
                if p.node.weight_bytes <= free[a] {
                    free[a] -= p.node.weight_bytes;
                    kept.resident = true;
                }
            }
        }
        memory.layers.insert(id.clone(), kept);
    }
}
