//! Test-side oracles, written against the cost rules rather than the library code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use h2h::schedule::{GanttDocument, MappingDocument};
use h2h::{ModelGraph, SystemSpec};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-30)
}

/// Expected (weight, input, compute, output) seconds of one layer.
pub fn expected_cost(g: &ModelGraph, sys: &SystemSpec, doc: &MappingDocument, layer: &str) -> [f64; 4] {
    let l = g.index_of(layer).unwrap();
    let node = g.node(l);
    let acc = sys.acc(sys.index_of(&doc.assignment[layer]).unwrap());
    let fused: BTreeSet<(String, String)> = doc.fused.iter().map(|[u, v]| (u.clone(), v.clone())).collect();
    let pinned = doc.pinned.iter().any(|p| p == layer);

    let weight = if pinned { 0 } else { node.weight_bytes };
    let preds: Vec<&h2h::LayerNode> = g.edges().iter().filter(|e| e.1 == l).map(|e| g.node(e.0)).collect();
    let is_fused_in = |p: &h2h::LayerNode| fused.contains(&(p.id.clone(), layer.to_string()));
    let total: u128 = preds.iter().map(|p| p.ofm_bytes as u128).sum();
    let local: u128 = preds
        .iter()
        .filter(|p| is_fused_in(p))
        .map(|p| p.ofm_bytes as u128)
        .sum();
    let input = if preds.is_empty() {
        node.ifm_bytes
    } else if preds.iter().all(|p| is_fused_in(p)) {
        0
    } else {
        node.ifm_bytes - (node.ifm_bytes as u128 * local / total) as u64
    };
    let succs: Vec<&h2h::LayerNode> = g.edges().iter().filter(|e| e.0 == l).map(|e| g.node(e.1)).collect();
    let output = if !succs.is_empty() && succs.iter().all(|s| fused.contains(&(layer.to_string(), s.id.clone()))) {
        0
    } else {
        node.ofm_bytes
    };
    let compute = acc.compute_latency(node).unwrap();
    [
        weight as f64 / acc.bw_acc,
        input as f64 / acc.bw_acc,
        compute,
        output as f64 / acc.bw_acc,
    ]
}

/// Full check of an emitted schedule against its mapping: lane contents and
/// order, per-layer costs, dependencies, no overlap, no idle gaps beyond
/// what dependencies force, and the makespan.
pub fn check_emitted(
    g: &ModelGraph,
    sys: &SystemSpec,
    doc: &MappingDocument,
    gantt: &GanttDocument,
) -> Result<(), String> {
    let mut times: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for lane in &gantt.accelerators {
        let ids: Vec<&String> = lane.layers.iter().map(|e| &e.layer).collect();
        let want: Vec<&String> = doc
            .acc_order
            .get(&lane.id)
            .map(|v| v.iter().collect())
            .unwrap_or_default();
        if ids != want {
            return Err(format!(
                "lane {} order {:?} differs from mapping {:?}",
                lane.id, ids, want
            ));
        }
        for e in &lane.layers {
            if times.insert(&e.layer, (e.start, e.finish)).is_some() {
                return Err(format!("{} appears twice", e.layer));
            }
        }
    }
    if times.len() != g.len() {
        return Err(format!("{} of {} layers scheduled", times.len(), g.len()));
    }
    let mut latest = 0.0f64;
    for lane in &gantt.accelerators {
        let mut free = 0.0f64;
        for e in &lane.layers {
            let l = g.index_of(&e.layer).unwrap();
            let want = expected_cost(g, sys, doc, &e.layer);
            let got = [
                e.breakdown.weight_xfer,
                e.breakdown.input_xfer,
                e.breakdown.compute,
                e.breakdown.output_xfer,
            ];
            if !want.iter().zip(&got).all(|(a, b)| close(*a, *b)) {
                return Err(format!("{} costs {got:?}, expected {want:?}", e.layer));
            }
            let ready = g
                .edges()
                .iter()
                .filter(|x| x.1 == l)
                .map(|x| times[g.node(x.0).id.as_str()].1)
                .fold(free, f64::max);
            if e.start < ready - 1e-9 * ready.abs() {
                return Err(format!("{} starts at {} before ready time {ready}", e.layer, e.start));
            }
            if !close(e.start, ready) && e.start > ready {
                return Err(format!("{} idles: ready at {ready}, starts {}", e.layer, e.start));
            }
            if !close(e.finish - e.start, want.iter().sum()) {
                return Err(format!(
                    "{} duration {} vs cost {}",
                    e.layer,
                    e.finish - e.start,
                    want.iter().sum::<f64>()
                ));
            }
            free = e.finish;
            latest = latest.max(e.finish);
        }
    }
    if gantt.summary.sys_latency != latest {
        return Err(format!(
            "sys_latency {} vs last finish {latest}",
            gantt.summary.sys_latency
        ));
    }
    Ok(())
}

/// Best knapsack value over all subsets, walking them in Gray-code order.
pub fn brute_force_knapsack(items: &[(u64, f64)], capacity: u64) -> f64 {
    let n = items.len();
    let (mut w, mut v, mut best) = (0u64, 0.0f64, 0.0f64);
    let mut in_set = vec![false; n];
    for k in 1u64..(1 << n) {
        let i = k.trailing_zeros() as usize;
        if in_set[i] {
            w -= items[i].0;
            v -= items[i].1;
        } else {
            w += items[i].0;
            v += items[i].1;
        }
        in_set[i] = !in_set[i];
        if w <= capacity && v > best {
            best = v;
        }
    }
    best
}
