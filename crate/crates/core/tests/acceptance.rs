//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use h2h::cli::{self, DEFAULT_BANDWIDTHS};
use h2h::fixtures::{
    chain3, fig2_model, mmmt_models, random_instance, random_model, random_system, synthetic_system, toy_pair,
    toy_system, RandomConfig,
};
use h2h::oracle::{exhaustive_map, OracleOptions};
use h2h::report::{read_csv_file, reduction_pct, relative_pct, SweepRow};
use h2h::schedule::{GanttDocument, MappingDocument};
use h2h::{
    full_schedule, incremental_reschedule, knapsack_solver, remap_incremental, run_h2h, H2HResult, Instance,
    KnapsackItem, LayerKind, LayerNode, MappingState, ModelGraph, Schedule, SystemSpec,
};

use common::{brute_force_knapsack, check_emitted};

const LOW_BW: f64 = 1.25e8;
const HIGH_BW: f64 = 1.25e9;

/// Every schedule seen by any criterion, checked independently.
#[derive(Default)]
struct Audit {
    checked: usize,
    failures: Vec<String>,
}

impl Audit {
    fn schedule(&mut self, what: &str, g: &ModelGraph, sys: &SystemSpec, m: &MappingState, s: &Schedule) {
        let inst = Instance::new(g, sys).unwrap();
        self.emitted(what, g, sys, &m.to_document(&inst), &s.to_gantt(&inst, m));
    }

    fn result(&mut self, what: &str, g: &ModelGraph, sys: &SystemSpec, r: &H2HResult) {
        for (k, snap) in r.steps.iter().enumerate() {
            self.schedule(&format!("{what} step {}", k + 1), g, sys, &snap.state, &snap.schedule);
        }
    }

    fn emitted(&mut self, what: &str, g: &ModelGraph, sys: &SystemSpec, m: &MappingDocument, gantt: &GanttDocument) {
        self.checked += 1;
        if let Err(e) = check_emitted(g, sys, m, gantt) {
            self.failures.push(format!("{what}: {e}"));
        }
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Small fixtures on the toy system, the MMMT set on the synthetic system.
fn fixtures() -> Vec<(ModelGraph, SystemSpec)> {
    let mut out = vec![
        (toy_pair(), toy_system()),
        (chain3(), toy_system()),
        (fig2_model(), toy_system()),
    ];
    out.extend(mmmt_models().into_iter().map(|g| (g, synthetic_system())));
    out
}

fn monotone(r: &H2HResult) -> bool {
    r.latencies().windows(2).all(|w| w[0] >= w[1])
}

fn criterion_1(audit: &mut Audit) -> Verdict {
    let t0 = Instant::now();
    let mut bad = Vec::new();
    let mut runs = 0;
    for (g, sys) in fixtures() {
        let systems = if g.len() > 10 {
            DEFAULT_BANDWIDTHS
                .iter()
                .map(|&bw| sys.with_uniform_bandwidth(bw))
                .collect()
        } else {
            vec![sys]
        };
        for sys in systems {
            let r = run_h2h(&g, &sys).unwrap();
            audit.result(g.name(), &g, &sys, &r);
            runs += 1;
            if !monotone(&r) {
                bad.push(format!("{} {:?}", g.name(), r.latencies()));
            }
        }
    }
    for seed in 0..500 {
        let (g, sys) = random_instance(seed, &RandomConfig::default());
        let r = run_h2h(&g, &sys).unwrap();
        audit.result(&format!("random seed {seed}"), &g, &sys, &r);
        runs += 1;
        if !monotone(&r) {
            bad.push(format!("seed {seed} {:?}", r.latencies()));
        }
    }
    let took = t0.elapsed();
    let pass = bad.is_empty() && took < Duration::from_secs(60);
    verdict(
        pass,
        format!(
            "{runs} runs, {} non-monotone, {:.1}s {:?}",
            bad.len(),
            took.as_secs_f64(),
            bad.first()
        ),
    )
}

fn criterion_2(audit: &mut Audit) -> Verdict {
    let t0 = Instant::now();
    let cfg = RandomConfig {
        layers: 1..=7,
        accelerators: 1..=3,
    };
    let (mut within, mut below, mut optimal) = (0, Vec::new(), 0);
    let mut worst = 0.0f64;
    for seed in 0..200 {
        let (g, sys) = random_instance(10_000 + seed, &cfg);
        let inst = Instance::new(&g, &sys).unwrap();
        let r = run_h2h(&g, &sys).unwrap();
        let o = exhaustive_map(&inst, OracleOptions::default()).unwrap();
        audit.result(&format!("oracle seed {seed}"), &g, &sys, &r);
        audit.schedule(&format!("oracle best {seed}"), &g, &sys, &o.state, &o.schedule);
        let h = r.last().sys_latency();
        if h < o.latency {
            below.push(seed);
        }
        if h <= 1.25 * o.latency {
            within += 1;
        }
        if h == o.latency {
            optimal += 1;
        }
        worst = worst.max(relative_pct(h, o.latency) - 100.0);
    }
    let took = t0.elapsed();
    let pass = within >= 180 && below.is_empty() && took < Duration::from_secs(120);
    verdict(
        pass,
        format!(
            "{within}/200 within 25%, {optimal} optimal, worst gap {worst:.1}%, {} below oracle, {:.1}s",
            below.len(),
            took.as_secs_f64()
        ),
    )
}

fn criterion_3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for trial in 0..1000 {
        let n = rng.gen_range(0..=20);
        // half the trials use DRAM-scale weights
        let scale: u64 = if trial % 2 == 0 { 1 } else { 1 << 20 };
        let spec: Vec<(u64, f64)> = (0..n)
            .map(|_| (rng.gen_range(1..=100) * scale, rng.gen_range(1..=1000) as f64))
            .collect();
        let total: u64 = spec.iter().map(|i| i.0).sum();
        let capacity = rng.gen_range(0..=total.max(1));
        let items: Vec<KnapsackItem> = spec
            .iter()
            .enumerate()
            .map(|(tag, &(weight, value))| KnapsackItem { tag, weight, value })
            .collect();
        let sel = knapsack_solver(&items, capacity);
        let weight: u64 = items.iter().zip(&sel).filter(|p| *p.1).map(|p| p.0.weight).sum();
        let value: f64 = items.iter().zip(&sel).filter(|p| *p.1).map(|p| p.0.value).sum();
        if weight > capacity || value != brute_force_knapsack(&spec, capacity) {
            mismatches += 1;
        }
    }
    verdict(mismatches == 0, format!("1000 instances, {mismatches} mismatches"))
}

/// Applies one random edit and returns the layers whose cost may change,
/// or None when the edit was rejected.
fn perturb(rng: &mut ChaCha8Rng, inst: &Instance, m: &mut MappingState) -> Option<BTreeSet<usize>> {
    let g = inst.graph;
    let neighbours = |l: usize| -> BTreeSet<usize> {
        g.preds(l)
            .iter()
            .chain(g.succs(l))
            .map(|&(v, _)| v)
            .chain([l])
            .collect()
    };
    let before = m.clone();
    let changed = match rng.gen_range(0..3) {
        0 => {
            let l = rng.gen_range(0..g.len());
            let elig = inst.eligible(l);
            let dst = elig[rng.gen_range(0..elig.len())];
            m.move_layer(inst, l, dst);
            neighbours(l)
        }
        1 => {
            let l = rng.gen_range(0..g.len());
            let on = !m.is_pinned(l);
            m.set_pinned(inst, l, on);
            [l].into()
        }
        _ => {
            if g.edges().is_empty() {
                return None;
            }
            let e = rng.gen_range(0..g.edges().len());
            let on = !m.is_fused(e);
            if !m.set_fused(inst, e, on) {
                return None;
            }
            let (u, v) = g.edges()[e];
            [u, v].into()
        }
    };
    if m.check(inst).is_err() {
        *m = before;
        return None;
    }
    Some(changed)
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut trials, mut mismatches) = (0, 0);
    let mut instance = 0u64;
    while trials < 1000 {
        let (g, sys) = random_instance(20_000 + instance, &RandomConfig::default());
        instance += 1;
        let inst = Instance::new(&g, &sys).unwrap();
        let r = h2h::run_h2h_steps(&g, &sys, 3).unwrap();
        let mut m = r.final_state().clone();
        let mut s = full_schedule(&inst, &m).unwrap();
        for _ in 0..10 {
            let Some(changed) = perturb(&mut rng, &inst, &mut m) else {
                continue;
            };
            let inc = incremental_reschedule(&inst, &m, &s, &changed).unwrap();
            let full = full_schedule(&inst, &m).unwrap();
            trials += 1;
            if inc.start != full.start || inc.finish != full.finish || inc.sys_latency != full.sys_latency {
                mismatches += 1;
            }
            s = inc;
        }
    }
    verdict(
        mismatches == 0,
        format!("{trials} trials on {instance} instances, {mismatches} mismatches"),
    )
}

fn reduction_at(g: &ModelGraph, sys: &SystemSpec, bw: f64) -> (f64, H2HResult) {
    let r = run_h2h(g, &sys.with_uniform_bandwidth(bw)).unwrap();
    (reduction_pct(r.step(2).sys_latency(), r.last().sys_latency()), r)
}

fn criterion_5(audit: &mut Audit) -> Verdict {
    let sys = synthetic_system();
    let (mut in_band, mut trend_ok, mut parts) = (0, 0, Vec::new());
    for g in mmmt_models() {
        let (low, r_low) = reduction_at(&g, &sys, LOW_BW);
        let (high, _) = reduction_at(&g, &sys, HIGH_BW);
        audit.result(g.name(), &g, &sys.with_uniform_bandwidth(LOW_BW), &r_low);
        let rel_low = 100.0 - low;
        let rel_high = 100.0 - high;
        if rel_low <= rel_high {
            trend_ok += 1;
        }
        if (15.0..=80.0).contains(&low) {
            in_band += 1;
        }
        parts.push(format!("{} {low:.1}%->{high:.1}%", g.name()));
    }
    verdict(
        trend_ok == 6 && in_band >= 4,
        format!("trend {trend_ok}/6, in [15,80]% {in_band}/6 ({})", parts.join(", ")),
    )
}

fn criterion_6() -> Verdict {
    let mut bad = Vec::new();
    let mut count = 0;
    for (g, sys) in fixtures() {
        let sys = if g.len() > 10 {
            sys.with_uniform_bandwidth(LOW_BW)
        } else {
            sys
        };
        let r = run_h2h(&g, &sys).unwrap();
        count += 1;
        let (before, after) = (r.step(2).schedule.compute_share(), r.last().schedule.compute_share());
        if after < before {
            bad.push(format!("{} {before:.3}->{after:.3}", g.name()));
        }
    }
    verdict(
        bad.is_empty(),
        format!("{count} fixtures, {} regressions {:?}", bad.len(), bad),
    )
}

fn criterion_7(audit: &mut Audit) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(141);
    let g = random_model(&mut rng, 141);
    let needed: BTreeSet<LayerKind> = g.nodes().iter().map(LayerNode::kind).collect();
    let sys = random_system(&mut rng, 12, &needed);
    let t0 = Instant::now();
    let r = run_h2h(&g, &sys).unwrap();
    let took = t0.elapsed();
    audit.result("141-node random", &g, &sys, &r);
    verdict(
        took <= Duration::from_secs(10),
        format!(
            "141 layers x 12 accelerators in {:.3}s, {} remaps",
            took.as_secs_f64(),
            r.remap_log.len()
        ),
    )
}

fn assignment(g: &ModelGraph, sys: &SystemSpec, r: &H2HResult) -> BTreeMap<String, String> {
    r.final_state().assignment_ids(&Instance::new(g, sys).unwrap())
}

fn criterion_8(audit: &mut Audit) -> Verdict {
    let mut cases = vec![(fig2_model(), toy_system())];
    for g in mmmt_models() {
        cases.push((g.clone(), synthetic_system().with_uniform_bandwidth(LOW_BW)));
        cases.push((g, synthetic_system()));
    }
    let (mut runs, mut moved, mut worse) = (0, Vec::new(), Vec::new());
    let mut persisted = 0;
    for (g, sys) in cases {
        let cold = run_h2h(&g, &sys).unwrap();
        let cold_lat = cold.last().sys_latency();
        for entry in g.entries() {
            let gone = g.exclusive_to(entry);
            if gone.len() == g.len() {
                continue;
            }
            let keep: BTreeSet<String> = g
                .nodes()
                .iter()
                .map(|n| n.id.clone())
                .filter(|id| !gone.contains(id))
                .collect();
            let g_minus = g.induced(format!("{}-minus", g.name()), &keep).unwrap();
            let reduced = remap_incremental(&cold, &g_minus, &sys).unwrap();
            let readd = remap_incremental(&reduced, &g, &sys).unwrap();
            audit.result(
                &format!("{} without {}", g.name(), g.node(entry).id),
                &g_minus,
                &sys,
                &reduced,
            );
            audit.result(&format!("{} re-added {}", g.name(), g.node(entry).id), &g, &sys, &readd);
            runs += 1;

            let (a_cold, a_red, a_readd) = (
                assignment(&g, &sys, &cold),
                assignment(&g_minus, &sys, &reduced),
                assignment(&g, &sys, &readd),
            );
            for id in &keep {
                persisted += 1;
                if a_cold[id] != a_red[id] || a_red[id] != a_readd[id] {
                    moved.push(format!(
                        "{}:{id} {}->{}->{}",
                        g.name(),
                        a_cold[id],
                        a_red[id],
                        a_readd[id]
                    ));
                }
            }
            let lat = readd.last().sys_latency();
            if lat > cold_lat {
                worse.push(format!("{} -{}: {lat:e} > {cold_lat:e}", g.name(), g.node(entry).id));
            }
        }
    }
    verdict(
        moved.is_empty() && worse.is_empty(),
        format!(
            "{runs} remove/re-add cycles, {}/{persisted} persisted layers moved, {} slower than cold {:?} {:?}",
            moved.len(),
            worse.len(),
            moved.first(),
            worse.first()
        ),
    )
}

/// Same path as `cli::run`, with the log discarded.
fn run_cli(args: &[&str]) -> i32 {
    use clap::Parser;
    let parsed = cli::Cli::try_parse_from(std::iter::once("h2h").chain(args.iter().copied())).unwrap();
    match cli::execute(&parsed, &mut std::io::sink()) {
        Ok(()) => 0,
        Err(e) => cli::exit_code(&e),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn audit_map_dir(audit: &mut Audit, what: &str, dir: &Path, model: &str, system: &str, seed: u64) {
    let g = cli::load_model(model, seed).unwrap();
    let sys = cli::load_system(system, seed, &g).unwrap();
    for k in 1..=4 {
        let gantt: GanttDocument = read_json(&dir.join(format!("gantt_step{k}.json")));
        let mapping: MappingDocument = read_json(&dir.join(format!("mapping_step{k}.json")));
        audit.emitted(&format!("{what} step {k}"), &g, &sys, &mapping, &gantt);
    }
}

fn criterion_9(audit: &mut Audit) -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut exit_failures = Vec::new();
    let mut invocations = 0;
    let mut names: Vec<(String, &str)> = ["toy_pair", "chain3", "fig2"]
        .iter()
        .map(|n| (n.to_string(), "fixture:toy"))
        .collect();
    names.extend(
        mmmt_models()
            .iter()
            .map(|g| (g.name().to_string(), "fixture:synthetic12")),
    );
    for (name, system) in &names {
        let model = format!("fixture:{name}");
        let dir = tmp.path().join(format!("map-{name}"));
        let dir_s = dir.to_str().unwrap();
        invocations += 1;
        if run_cli(&["map", "--model", &model, "--system", system, "--out", dir_s]) != 0 {
            exit_failures.push(format!("map {name}"));
            continue;
        }
        audit_map_dir(audit, &format!("cli map {name}"), &dir, &model, system, 0);
        let sweep = tmp.path().join(format!("sweep-{name}"));
        invocations += 1;
        if run_cli(&[
            "sweep",
            "--model",
            &model,
            "--system",
            system,
            "--out",
            sweep.to_str().unwrap(),
        ]) != 0
        {
            exit_failures.push(format!("sweep {name}"));
        } else {
            let rows: Vec<SweepRow> = read_csv_file(&sweep.join("sweep.csv")).unwrap();
            if rows.len() != 4 * DEFAULT_BANDWIDTHS.len() {
                exit_failures.push(format!("sweep {name}: {} rows", rows.len()));
            }
        }
    }
    for seed in 0..100u64 {
        let dir = tmp.path().join(format!("random-{seed}"));
        let seed_s = seed.to_string();
        let layers = format!("random:{}", 1 + seed % 60);
        let accs = format!("random:{}", 2 + seed % 11);
        invocations += 1;
        let code = run_cli(&[
            "map",
            "--model",
            &layers,
            "--system",
            &accs,
            "--seed",
            &seed_s,
            "--out",
            dir.to_str().unwrap(),
        ]);
        if code != 0 {
            exit_failures.push(format!("random map seed {seed} exit {code}"));
            continue;
        }
        audit_map_dir(audit, &format!("cli random {seed}"), &dir, &layers, &accs, seed);
        invocations += 1;
        let gantt = dir.join("gantt_step4.json");
        let mapping = dir.join("mapping.json");
        let code = run_cli(&[
            "validate",
            "--model",
            &layers,
            "--system",
            &accs,
            "--seed",
            &seed_s,
            "--gantt",
            gantt.to_str().unwrap(),
            "--mapping",
            mapping.to_str().unwrap(),
        ]);
        if code != 0 {
            exit_failures.push(format!("validate seed {seed} exit {code}"));
        }
    }
    let pass = exit_failures.is_empty() && audit.failures.is_empty();
    verdict(
        pass,
        format!(
            "{} schedules checked ({invocations} CLI runs), {} invalid {:?}, {} CLI failures {:?}",
            audit.checked,
            audit.failures.len(),
            audit.failures.first(),
            exit_failures.len(),
            exit_failures.first()
        ),
    )
}

fn main() {
    let mut audit = Audit::default();
    let mut all = true;
    let mut report = |n: usize, name: &str, run: &mut dyn FnMut(&mut Audit) -> Verdict, audit: &mut Audit| {
        let t0 = Instant::now();
        let v = run(audit);
        all &= v.pass;
        println!(
            "criterion {n} [{name}]: {} ({}; {:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t0.elapsed().as_secs_f64()
        );
    };
    report(1, "step monotonicity", &mut criterion_1, &mut audit);
    report(2, "oracle gap", &mut criterion_2, &mut audit);
    report(3, "knapsack", &mut |_| criterion_3(), &mut audit);
    report(4, "incremental reschedule", &mut |_| criterion_4(), &mut audit);
    report(5, "bandwidth trend", &mut criterion_5, &mut audit);
    report(6, "compute share", &mut |_| criterion_6(), &mut audit);
    report(7, "search time", &mut criterion_7, &mut audit);
    report(8, "dynamic modality", &mut criterion_8, &mut audit);
    report(9, "schedule validity", &mut criterion_9, &mut audit);
    if !all {
        std::process::exit(1);
    }
}
