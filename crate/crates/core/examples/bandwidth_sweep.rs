//! Latency reduction of the full mapping over the step-2 baseline as the host link gets faster.

use h2h::cli::DEFAULT_BANDWIDTHS;
use h2h::fixtures::{mmmt_models, synthetic_system};
use h2h::report::reduction_pct;
use h2h::run_h2h;

fn main() -> h2h::Result<()> {
    let base = synthetic_system();
    print!("{:12}", "model");
    for bw in DEFAULT_BANDWIDTHS {
        print!("{:>10}", format!("{:.3}GB/s", bw / 1e9));
    }
    println!();
    for g in mmmt_models() {
        print!("{:12}", g.name());
        for bw in DEFAULT_BANDWIDTHS {
            let r = run_h2h(&g, &base.with_uniform_bandwidth(bw))?;
            print!(
                "{:>9.1}%",
                reduction_pct(r.step(2).sys_latency(), r.last().sys_latency())
            );
        }
        println!();
    }
    Ok(())
}
