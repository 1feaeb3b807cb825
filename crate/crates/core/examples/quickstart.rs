//! Two layers, two accelerators: each step of the mapper on the toy system.

use h2h::fixtures::{toy_pair, toy_system};
use h2h::{run_h2h, Instance};

fn main() -> h2h::Result<()> {
    let (g, sys) = (toy_pair(), toy_system());
    let r = run_h2h(&g, &sys)?;
    let inst = Instance::new(&g, &sys)?;
    for (k, snap) in r.steps.iter().enumerate() {
        println!(
            "step {}: latency {} s, {:?}, pinned {}, fused {}",
            k + 1,
            snap.sys_latency(),
            snap.state.assignment_ids(&inst),
            snap.state.pinned_count(),
            snap.state.fused_count()
        );
    }
    for op in &r.remap_log {
        println!(
            "remap {} {} -> {} ({} -> {} s)",
            op.layer, op.from, op.to, op.latency_before, op.latency_after
        );
    }
    Ok(())
}
