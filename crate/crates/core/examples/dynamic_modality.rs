//! Drop one input modality, then bring it back, reusing buffered weights.

use std::collections::BTreeSet;

use h2h::fixtures::{synthetic_system, vlocnet};
use h2h::{remap_incremental, run_h2h};

fn main() -> h2h::Result<()> {
    let (g, sys) = (vlocnet(), synthetic_system().with_uniform_bandwidth(1.25e8));
    let cold = run_h2h(&g, &sys)?;
    let entry = g.entries()[1];
    let gone = g.exclusive_to(entry);
    let keep: BTreeSet<String> = g
        .nodes()
        .iter()
        .map(|n| n.id.clone())
        .filter(|id| !gone.contains(id))
        .collect();
    let minus = g.induced("vlocnet-minus", &keep)?;

    let reduced = remap_incremental(&cold, &minus, &sys)?;
    let back = remap_incremental(&reduced, &g, &sys)?;
    let dormant = reduced
        .memory
        .layers
        .iter()
        .filter(|(id, p)| gone.contains(*id) && p.resident)
        .count();
    println!("cold: {:.4e} s over {} layers", cold.last().sys_latency(), g.len());
    println!(
        "without `{}` ({} layers): {:.4e} s, {dormant} dormant layers still buffered",
        g.node(entry).id,
        gone.len(),
        reduced.last().sys_latency()
    );
    println!(
        "re-added: {:.4e} s in {:?}",
        back.last().sys_latency(),
        back.search_time
    );
    Ok(())
}
