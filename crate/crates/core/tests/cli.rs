mod common;

use std::path::Path;
use std::process::{Command, Output};

use h2h::cli::{load_model, load_system};
use h2h::report::{read_csv_file, CompareRow, OracleRow, StepRow, SweepRow};
use h2h::schedule::{GanttDocument, MappingDocument};

fn h2h(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_h2h")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    h2h(args).status.code().unwrap()
}

fn json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn map_writes_parseable_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2");
    let run = h2h(&[
        "map",
        "--model",
        "fixture:fig2",
        "--system",
        "fixture:toy",
        "--out",
        s(&out),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("step 4"));

    let rows: Vec<StepRow> = read_csv_file(&out.join("summary.csv")).unwrap();
    let lat: Vec<f64> = rows.iter().map(|r| r.sys_latency_s).collect();
    assert_eq!(lat, [24.0, 18.0, 18.0, 15.0]);
    assert_eq!(rows[1].relative_latency_pct, Some(100.0));
    assert_eq!(rows[3].remaps, 2);

    let g = load_model("fixture:fig2", 0).unwrap();
    let sys = load_system("fixture:toy", 0, &g).unwrap();
    for k in 1..=4 {
        let gantt: GanttDocument = json(&out.join(format!("gantt_step{k}.json")));
        let mapping: MappingDocument = json(&out.join(format!("mapping_step{k}.json")));
        common::check_emitted(&g, &sys, &mapping, &gantt).unwrap();
        assert_eq!(gantt.summary.sys_latency, lat[k - 1]);
    }
    let last: MappingDocument = json(&out.join("mapping.json"));
    assert_eq!(last, json::<MappingDocument>(&out.join("mapping_step4.json")));

    let gantt = out.join("gantt_step4.json");
    let mapping = out.join("mapping.json");
    let args = [
        "validate",
        "--model",
        "fixture:fig2",
        "--system",
        "fixture:toy",
        "--gantt",
        s(&gantt),
        "--mapping",
        s(&mapping),
    ];
    assert_eq!(code(&args), 0);
}

#[test]
fn steps_flag_limits_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("two");
    assert_eq!(
        code(&[
            "map",
            "--model",
            "fixture:chain3",
            "--system",
            "fixture:toy",
            "--steps",
            "2",
            "--out",
            s(&out)
        ]),
        0
    );
    let rows: Vec<StepRow> = read_csv_file(&out.join("summary.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(!out.join("gantt_step3.json").exists());
    assert_eq!(
        code(&[
            "map",
            "--model",
            "fixture:chain3",
            "--system",
            "fixture:toy",
            "--steps",
            "5",
            "--out",
            s(&out)
        ]),
        2
    );
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let args = [
            "map",
            "--model",
            "random:40",
            "--system",
            "random:5",
            "--seed",
            "11",
            "--out",
            s(out),
        ];
        assert_eq!(code(&args), 0);
    }
    for file in ["gantt_step4.json", "mapping.json"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn sweep_compare_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep");
    let args = [
        "sweep",
        "--model",
        "fixture:mocap",
        "--system",
        "fixture:synthetic12",
        "--bandwidths",
        "1.25e8,1.25e9",
        "--out",
        s(&sweep),
    ];
    assert_eq!(code(&args), 0);
    let rows: Vec<SweepRow> = read_csv_file(&sweep.join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 8);
    let at = |bw: f64| {
        rows.iter()
            .find(|r| r.bandwidth_bytes_per_s == bw && r.step == 4)
            .unwrap()
            .relative_latency_pct
    };
    assert!(at(1.25e8) <= at(1.25e9));

    let cmp = dir.path().join("cmp");
    assert_eq!(
        code(&[
            "compare",
            "--model",
            "fixture:cnn_lstm",
            "--system",
            "fixture:synthetic12",
            "--bandwidth",
            "1.25e8",
            "--out",
            s(&cmp)
        ]),
        0
    );
    let row: Vec<CompareRow> = read_csv_file(&cmp.join("compare.csv")).unwrap();
    assert_eq!(row[0].model, "cnn_lstm");
    assert!(row[0].latency_reduction_pct > 0.0);
    assert!(row[0].h2h_compute_share >= row[0].baseline_compute_share);

    let orc = dir.path().join("orc");
    assert_eq!(
        code(&[
            "oracle",
            "--model",
            "fixture:fig2",
            "--system",
            "fixture:toy",
            "--out",
            s(&orc)
        ]),
        0
    );
    let row: Vec<OracleRow> = read_csv_file(&orc.join("oracle.csv")).unwrap();
    assert_eq!(row[0].candidates, 64);
    assert_eq!(row[0].gap_pct, 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    // infeasible: budget, and a layer kind no accelerator runs
    assert_eq!(
        code(&[
            "oracle",
            "--model",
            "fixture:vlocnet",
            "--system",
            "fixture:synthetic12"
        ]),
        1
    );
    let lstm = dir.path().join("lstm.json");
    std::fs::write(
        &lstm,
        r#"{"name": "l", "layers": [{"id": "x", "kind": "LSTM", "params": {"n": 4, "h": 4, "l": 1}}], "edges": []}"#,
    )
    .unwrap();
    assert_eq!(
        code(&["map", "--model", s(&lstm), "--system", "fixture:toy", "--out", s(&out)]),
        1
    );

    // I/O and schema
    let missing = h2h(&[
        "map",
        "--model",
        "/nonexistent/m.json",
        "--system",
        "fixture:toy",
        "--out",
        s(&out),
    ]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/m.json"));
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"name": "b", "layers": [{"id": "x", "kind": "FC", "params": {"n": 0, "m": 1}}], "edges": []}"#,
    )
    .unwrap();
    assert_eq!(code(&["validate", "--model", s(&bad)]), 2);
    assert_eq!(
        code(&[
            "map",
            "--model",
            "fixture:nope",
            "--system",
            "fixture:toy",
            "--out",
            s(&out)
        ]),
        2
    );
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["--help"]), 0);

    // a tampered schedule fails validation
    let good = dir.path().join("good");
    assert_eq!(
        code(&[
            "map",
            "--model",
            "fixture:fig2",
            "--system",
            "fixture:toy",
            "--out",
            s(&good)
        ]),
        0
    );
    let mut doc: GanttDocument = json(&good.join("gantt_step4.json"));
    doc.accelerators[0].layers[0].finish += 1.0;
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(
        code(&["validate", "--model", "fixture:fig2", "--gantt", s(&tampered)]),
        2
    );
}

#[test]
fn per_accelerator_bandwidth_override() {
    let dir = tempfile::tempdir().unwrap();
    let (slow, fast) = (dir.path().join("slow"), dir.path().join("fast"));
    assert_eq!(
        code(&[
            "map",
            "--model",
            "fixture:fig2",
            "--system",
            "fixture:toy",
            "--out",
            s(&slow)
        ]),
        0
    );
    let args = [
        "map",
        "--model",
        "fixture:fig2",
        "--system",
        "fixture:toy",
        "--acc-bandwidth",
        "acc1=5,acc2=5",
        "--out",
        s(&fast),
    ];
    assert_eq!(code(&args), 0);
    let a: Vec<StepRow> = read_csv_file(&slow.join("summary.csv")).unwrap();
    let b: Vec<StepRow> = read_csv_file(&fast.join("summary.csv")).unwrap();
    assert!(b[3].sys_latency_s < a[3].sys_latency_s);
    assert_eq!(
        code(&[
            "map",
            "--model",
            "fixture:fig2",
            "--system",
            "fixture:toy",
            "--acc-bandwidth",
            "zzz=5",
            "--out",
            s(&fast)
        ]),
        2
    );
}
