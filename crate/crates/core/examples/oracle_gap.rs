//! Heuristic against exhaustive search on small random instances.

use h2h::fixtures::{random_instance, RandomConfig};
use h2h::oracle::{exhaustive_map, OracleOptions};
use h2h::report::relative_pct;
use h2h::{run_h2h, Instance};

fn main() -> h2h::Result<()> {
    let cfg = RandomConfig {
        layers: 2..=7,
        accelerators: 2..=3,
    };
    let mut gaps = Vec::new();
    for seed in 0..50 {
        let (g, sys) = random_instance(seed, &cfg);
        let o = exhaustive_map(&Instance::new(&g, &sys)?, OracleOptions::default())?;
        let h = run_h2h(&g, &sys)?.last().sys_latency();
        gaps.push(relative_pct(h, o.latency) - 100.0);
    }
    gaps.sort_by(f64::total_cmp);
    let optimal = gaps.iter().filter(|&&g| g == 0.0).count();
    println!(
        "{optimal}/{} optimal, median gap {:.2}%, worst {:.2}%",
        gaps.len(),
        gaps[gaps.len() / 2],
        gaps[gaps.len() - 1]
    );
    Ok(())
}
