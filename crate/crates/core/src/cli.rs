//! `h2h` command line.
//!
//! Model and system arguments take a file path, `fixture:<name>` for a
//! built-in, or `random:<n>` for a generated instance seeded by `--seed`.
//! Exit codes: 0 success, 1 infeasible instance, 2 bad input or I/O.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fixtures::{named_model, named_system, random_model, random_system};
use crate::graph::{parse_model, LayerNode, ModelGraph};
use crate::mapper::{run_baseline, run_h2h, run_h2h_steps};
use crate::oracle::{exhaustive_map, OracleOptions, DEFAULT_BUDGET};
use crate::report::{compare_row, relative_pct, step_rows, sweep_rows, write_csv_file, OracleRow};
use crate::schedule::{validate_gantt, GanttDocument, Instance, MappingDocument};
use crate::system::{parse_system, PerfModelRegistry, SystemSpec};

/// Host-link settings swept by default, bytes per second.
pub const DEFAULT_BANDWIDTHS: [f64; 5] = [1.25e8, 1.5e8, 2.5e8, 5e8, 1.25e9];

#[derive(Debug, Parser)]
#[command(
    name = "h2h",
    version,
    about = "Map heterogeneous DNN graphs onto heterogeneous accelerator systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Model file, `fixture:<name>` or `random:<layers>`.
    #[arg(long)]
    pub model: String,
    /// System file, `fixture:<name>` or `random:<accelerators>`.
    #[arg(long)]
    pub system: String,
    /// Seed for `random:` inputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override every accelerator's host-link bandwidth (bytes/s).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Per-accelerator overrides, `id=bytes_per_s`, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_override)]
    pub acc_bandwidth: Vec<(String, f64)>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the mapping through a given step and write reports.
    Map {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(1..=4))]
        steps: u8,
    },
    /// Sweep uniform host-link bandwidths.
    Sweep {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: PathBuf,
        /// Bytes per second, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BANDWIDTHS)]
        bandwidths: Vec<f64>,
    },
    /// Baseline (steps 1-2) against the full mapping.
    Compare {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive optimum and the heuristic's gap to it.
    Oracle {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
        /// Also enumerate execution orders.
        #[arg(long)]
        orderings: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check input files and, optionally, schedule and mapping files.
    Validate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        system: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        gantt: Vec<PathBuf>,
        #[arg(long)]
        mapping: Option<PathBuf>,
    },
}

fn parse_override(s: &str) -> std::result::Result<(String, f64), String> {
    let (id, bw) = s
        .split_once('=')
        .ok_or_else(|| format!("expected id=bytes_per_s, got `{s}`"))?;
    let bw: f64 = bw.parse().map_err(|e| format!("bad bandwidth in `{s}`: {e}"))?;
    Ok((id.to_string(), bw))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(spec: &str, seed: u64) -> Result<ModelGraph> {
    if let Some(name) = spec.strip_prefix("fixture:") {
        return named_model(name);
    }
    if let Some(n) = spec.strip_prefix("random:") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::schema("model", format!("bad layer count in `{spec}`")))?;
        if n == 0 {
            return Err(Error::schema("model", "random model needs at least one layer"));
        }
        return Ok(random_model(&mut ChaCha8Rng::seed_from_u64(seed), n));
    }
    parse_model(&read(Path::new(spec))?)
}

pub fn load_system(spec: &str, seed: u64, model: &ModelGraph) -> Result<SystemSpec> {
    if let Some(name) = spec.strip_prefix("fixture:") {
        return named_system(name);
    }
    if let Some(n) = spec.strip_prefix("random:") {
        let n: usize = n
            .parse()
            .map_err(|_| Error::schema("system", format!("bad accelerator count in `{spec}`")))?;
        if n == 0 {
            return Err(Error::schema("system", "random system needs at least one accelerator"));
        }
        let needed: BTreeSet<_> = model.nodes().iter().map(LayerNode::kind).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        return Ok(random_system(&mut rng, n, &needed));
    }
    parse_system(&read(Path::new(spec))?, &PerfModelRegistry::default())
}

fn load(inputs: &Inputs) -> Result<(ModelGraph, SystemSpec)> {
    let g = load_model(&inputs.model, inputs.seed)?;
    let mut sys = load_system(&inputs.system, inputs.seed, &g)?;
    if let Some(bw) = inputs.bandwidth {
        if !(bw > 0.0 && bw.is_finite()) {
            return Err(Error::schema("bandwidth", "must be a positive number"));
        }
        sys = sys.with_uniform_bandwidth(bw);
    }
    if !inputs.acc_bandwidth.is_empty() {
        let overrides: BTreeMap<String, f64> = inputs.acc_bandwidth.iter().cloned().collect();
        sys = sys.with_bandwidths(&overrides)?;
    }
    Ok((g, sys))
}

fn create_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })
}

fn checked_gantt(g: &ModelGraph, doc: GanttDocument) -> Result<GanttDocument> {
    validate_gantt(g, &doc)?;
    Ok(doc)
}

fn cmd_map(inputs: &Inputs, out: &Path, steps: usize, log: &mut dyn Write) -> Result<()> {
    let (g, sys) = load(inputs)?;
    let r = run_h2h_steps(&g, &sys, steps)?;
    let inst = Instance::new(&g, &sys)?;
    create_dir(out)?;
    for (k, snap) in r.steps.iter().enumerate() {
        let doc = checked_gantt(&g, snap.schedule.to_gantt(&inst, &snap.state))?;
        write(&out.join(format!("gantt_step{}.json", k + 1)), &to_json(&doc))?;
        write(
            &out.join(format!("mapping_step{}.json", k + 1)),
            &to_json(&snap.state.to_document(&inst)),
        )?;
    }
    write(&out.join("mapping.json"), &to_json(&r.final_state().to_document(&inst)))?;
    let rows = step_rows(&r);
    write_csv_file(&out.join("summary.csv"), &rows)?;
    for row in &rows {
        let rel = row.relative_latency_pct.map_or("-".to_string(), |p| format!("{p:.1}%"));
        writeln!(
            log,
            "step {}: latency {:.6e} s, energy {:.6e} J, relative {rel}",
            row.step, row.sys_latency_s, row.sys_energy_j
        )
        .ok();
    }
    writeln!(
        log,
        "{} remaps, search {:.3} s",
        r.remap_log.len(),
        r.search_time.as_secs_f64()
    )
    .ok();
    Ok(())
}

fn cmd_sweep(inputs: &Inputs, out: &Path, bandwidths: &[f64], log: &mut dyn Write) -> Result<()> {
    if bandwidths.is_empty() || bandwidths.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(Error::schema("bandwidths", "need one or more positive values"));
    }
    let (g, sys) = load(inputs)?;
    create_dir(out)?;
    let mut rows = Vec::new();
    for &bw in bandwidths {
        let sys = sys.with_uniform_bandwidth(bw);
        let r = run_h2h(&g, &sys)?;
        let inst = Instance::new(&g, &sys)?;
        for snap in &r.steps {
            checked_gantt(&g, snap.schedule.to_gantt(&inst, &snap.state))?;
        }
        let part = sweep_rows(bw, &r);
        writeln!(
            log,
            "{bw:.3e} B/s: step 4 at {:.1}% of step 2",
            part[3].relative_latency_pct
        )
        .ok();
        rows.extend(part);
    }
    write_csv_file(&out.join("sweep.csv"), &rows)
}

fn cmd_compare(inputs: &Inputs, out: &Path, log: &mut dyn Write) -> Result<()> {
    let (g, sys) = load(inputs)?;
    let inst = Instance::new(&g, &sys)?;
    let (bm, bs) = run_baseline(&g, &sys)?;
    let r = run_h2h(&g, &sys)?;
    checked_gantt(&g, bs.to_gantt(&inst, &bm))?;
    let h = &r.last().schedule;
    checked_gantt(&g, h.to_gantt(&inst, r.final_state()))?;
    let row = compare_row(g.name(), &bs, h);
    create_dir(out)?;
    write_csv_file(&out.join("compare.csv"), std::slice::from_ref(&row))?;
    writeln!(
        log,
        "latency -{:.1}%, energy -{:.1}%, compute share {:.3} -> {:.3}",
        row.latency_reduction_pct, row.energy_reduction_pct, row.baseline_compute_share, row.h2h_compute_share
    )
    .ok();
    Ok(())
}

fn cmd_oracle(inputs: &Inputs, budget: u128, orderings: bool, out: Option<&Path>, log: &mut dyn Write) -> Result<()> {
    let (g, sys) = load(inputs)?;
    let inst = Instance::new(&g, &sys)?;
    let opts = OracleOptions {
        with_locality: true,
        max_candidates: budget,
        enumerate_orderings: orderings,
    };
    let best = exhaustive_map(&inst, opts)?;
    checked_gantt(&g, best.schedule.to_gantt(&inst, &best.state))?;
    let r = run_h2h(&g, &sys)?;
    let h = r.last().schedule.sys_latency;
    let row = OracleRow {
        candidates: best.evaluated,
        oracle_latency_s: best.latency,
        h2h_latency_s: h,
        gap_pct: relative_pct(h, best.latency) - 100.0,
    };
    writeln!(
        log,
        "optimum {:.6e} s over {} candidates; h2h {:.6e} s; gap {:.2}%",
        row.oracle_latency_s, row.candidates, h, row.gap_pct
    )
    .ok();
    for (id, acc) in best.state.assignment_ids(&inst) {
        writeln!(log, "  {id} -> {acc}").ok();
    }
    if let Some(out) = out {
        create_dir(out)?;
        write_csv_file(&out.join("oracle.csv"), &[row])?;
        write(
            &out.join("oracle_mapping.json"),
            &to_json(&best.state.to_document(&inst)),
        )?;
    }
    Ok(())
}

fn cmd_validate(
    model: &str,
    system: Option<&str>,
    seed: u64,
    gantt: &[PathBuf],
    mapping: Option<&Path>,
    log: &mut dyn Write,
) -> Result<()> {
    let g = load_model(model, seed)?;
    writeln!(
        log,
        "model `{}`: {} layers, {} edges",
        g.name(),
        g.len(),
        g.edges().len()
    )
    .ok();
    let sys = system.map(|s| load_system(s, seed, &g)).transpose()?;
    if let Some(sys) = &sys {
        Instance::new(&g, sys)?;
        writeln!(log, "system: {} accelerators", sys.len()).ok();
    }
    for path in gantt {
        let doc: GanttDocument = serde_json::from_str(&read(path)?)?;
        validate_gantt(&g, &doc)?;
        writeln!(
            log,
            "{}: valid schedule, latency {:.6e} s",
            path.display(),
            doc.summary.sys_latency
        )
        .ok();
    }
    if let Some(path) = mapping {
        let sys = sys
            .as_ref()
            .ok_or_else(|| Error::schema("system", "--mapping needs --system"))?;
        let inst = Instance::new(&g, sys)?;
        let doc: MappingDocument = serde_json::from_str(&read(path)?)?;
        let m = doc.into_state(&inst)?;
        let s = crate::schedule::full_schedule(&inst, &m)?;
        s.validate(&inst, &m)?;
        writeln!(
            log,
            "{}: valid mapping, latency {:.6e} s",
            path.display(),
            s.sys_latency
        )
        .ok();
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

/// Runs a parsed command, writing progress to `log`.
pub fn execute(cli: &Cli, log: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Map { inputs, out, steps } => cmd_map(inputs, out, *steps as usize, log),
        Command::Sweep {
            inputs,
            out,
            bandwidths,
        } => cmd_sweep(inputs, out, bandwidths, log),
        Command::Compare { inputs, out } => cmd_compare(inputs, out, log),
        Command::Oracle {
            inputs,
            budget,
            orderings,
            out,
        } => cmd_oracle(inputs, *budget, *orderings, out.as_deref(), log),
        Command::Validate {
            model,
            system,
            seed,
            gantt,
            mapping,
        } => cmd_validate(model, system.as_deref(), *seed, gantt, mapping.as_deref(), log),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_infeasible() {
        1
    } else {
        2
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            e.print().ok();
            return code;
        }
    };
    match execute(&cli, &mut std::io::stdout()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
