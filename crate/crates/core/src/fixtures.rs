//! Built-in models and systems.
//!
//! Everything here is synthetic. The six MMMT graphs mimic the structure of
//! published multi-modality multi-task networks (several backbones, skip
//! edges, cross-talk between branches, fusion heads) with parameter totals in
//! the same range, but they are not the real networks. Likewise the
//! 12-accelerator system only mirrors a Conv/FC/LSTM support mix.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{LayerKind, LayerNode, LayerParams, ModelGraph};
use crate::system::{AcceleratorSpec, FixedLatencyModel, PerformanceModel, RooflineModel, SystemSpec};

const GIB: u64 = 1 << 30;
const MIB: u64 = 1 << 20;

/// Incremental graph construction.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    layers: Vec<LayerNode>,
    edges: Vec<(String, String)>,
    dtype_bytes: u64,
}

impl GraphBuilder {
    pub fn new(dtype_bytes: u64) -> Self {
        GraphBuilder {
            dtype_bytes,
            ..Default::default()
        }
    }

    pub fn layer(&mut self, id: impl Into<String>, params: LayerParams, preds: &[&str]) -> String {
        let id = id.into();
        self.layers.push(LayerNode::new(id.clone(), params, self.dtype_bytes));
        for p in preds {
            self.edges.push((p.to_string(), id.clone()));
        }
        id
    }

    #[allow(clippy::too_many_arguments)]
    pub fn conv(&mut self, id: impl Into<String>, n: u64, m: u64, r: u64, k: u64, s: u64, preds: &[&str]) -> String {
        self.layer(id, LayerParams::Conv { n, m, r, c: r, k, s }, preds)
    }

    pub fn fc(&mut self, id: impl Into<String>, n: u64, m: u64, preds: &[&str]) -> String {
        self.layer(id, LayerParams::FC { n, m }, preds)
    }

    pub fn lstm(&mut self, id: impl Into<String>, n: u64, h: u64, l: u64, preds: &[&str]) -> String {
        self.layer(id, LayerParams::LSTM { n, h, l }, preds)
    }

    pub fn edge(&mut self, src: &str, dst: &str) {
        self.edges.push((src.to_string(), dst.to_string()));
    }

    pub fn build(self, name: &str) -> Result<ModelGraph> {
        ModelGraph::new(name, self.layers, &self.edges)
    }
}

/// Two-accelerator system with constant per-kind latencies.
///
/// `acc1` is faster on Conv (2 s vs 3 s), `acc2` on FC (2 s vs 3 s). Both
/// run both kinds, links move 0.5 B/s and DRAM is ample.
pub fn toy_system() -> SystemSpec {
    let acc = |id: &str, conv: f64, fc: f64| AcceleratorSpec {
        id: id.to_string(),
        supported_kinds: [LayerKind::Conv, LayerKind::FC].into_iter().collect(),
        bw_acc: 0.5,
        m_acc: 1024,
        energy_per_mac: 1.0,
        energy_per_byte: 1.0,
        perf_model: Arc::new(FixedLatencyModel::new([(LayerKind::Conv, conv), (LayerKind::FC, fc)])),
    };
    SystemSpec::new(vec![acc("acc1", 2.0, 3.0), acc("acc2", 3.0, 2.0)]).expect("valid toy system")
}

fn unit_conv() -> LayerParams {
    LayerParams::Conv {
        n: 1,
        m: 1,
        r: 1,
        c: 1,
        k: 1,
        s: 1,
    }
}

fn unit_fc() -> LayerParams {
    LayerParams::FC { n: 1, m: 1 }
}

/// Conv `A` feeding FC `B`; every activation is one byte (2 s per leg on [`toy_system`]).
pub fn toy_pair() -> ModelGraph {
    let mut b = GraphBuilder::new(1);
    b.layer("A", unit_conv(), &[]);
    b.layer("B", unit_fc(), &["A"]);
    b.build("toy_pair").expect("valid")
}

/// Three-layer Conv, FC, FC chain for [`toy_system`].
pub fn chain3() -> ModelGraph {
    let mut b = GraphBuilder::new(1);
    b.layer("L1", unit_conv(), &[]);
    b.layer("L2", unit_fc(), &["L1"]);
    b.layer("L3", unit_fc(), &["L2"]);
    b.build("chain3").expect("valid")
}

/// Six layers in two modality branches with one cross-talk edge.
///
/// ```text
/// a1(Conv) -> a2(FC) -> a3(FC)
///               \
/// b1(FC) -> b2(Conv) -> b3(Conv)
/// ```
/// Each kind is fastest on a different accelerator of [`toy_system`], so the
/// computation-prioritized mapping splits both chains; no adjacent pair
/// shares an accelerator until remapping moves `a2` and `b2`.
pub fn fig2_model() -> ModelGraph {
    let mut b = GraphBuilder::new(1);
    b.layer("a1", unit_conv(), &[]);
    b.layer("a2", unit_fc(), &["a1"]);
    b.layer("a3", unit_fc(), &["a2"]);
    b.layer("b1", unit_fc(), &[]);
    b.layer("b2", unit_conv(), &["b1"]);
    b.layer("b3", unit_conv(), &["b2", "a2"]);
    b.build("fig2").expect("valid")
}

/// Names accepted by [`named_model`].
pub const MMMT_NAMES: [&str; 6] = ["vlocnet", "casua_surf", "vfs", "facebag", "cnn_lstm", "mocap"];

/// Residual CNN backbone. `stages` lists `(channels, spatial size, blocks)`;
/// bottleneck blocks use 1x1/3x3/1x1 with 4x expansion. Each block's output
/// and its input both feed the next block (the skip edge). Returns the ids of
/// the last layer of every stage.
fn resnet(
    b: &mut GraphBuilder,
    prefix: &str,
    in_ch: u64,
    input_size: u64,
    stages: &[(u64, u64, usize)],
    bottleneck: bool,
    entry_preds: &[&str],
) -> Vec<String> {
    let stem_ch = stages[0].0;
    let stem = b.conv(
        format!("{prefix}_stem"),
        stem_ch,
        in_ch,
        input_size / 2,
        7,
        2,
        entry_preds,
    );
    let mut block_in = stem.clone();
    let mut skip: Option<String> = None;
    let mut ch = stem_ch;
    let mut outs = Vec::new();
    for (si, &(width, size, blocks)) in stages.iter().enumerate() {
        for bi in 0..blocks {
            let tag = format!("{prefix}_s{}b{}", si + 1, bi + 1);
            let mut preds = vec![block_in.clone()];
            preds.extend(skip.clone());
            let preds: Vec<&str> = preds.iter().map(String::as_str).collect();
            let out_ch = if bottleneck { width * 4 } else { width };
            let last = if bottleneck {
                let x = b.conv(format!("{tag}_1"), width, ch, size, 1, 1, &preds);
                let y = b.conv(format!("{tag}_2"), width, width, size, 3, 1, &[&x]);
                b.conv(format!("{tag}_3"), out_ch, width, size, 1, 1, &[&y])
            } else {
                let x = b.conv(format!("{tag}_1"), width, ch, size, 3, 1, &preds);
                b.conv(format!("{tag}_2"), out_ch, width, size, 3, 1, &[&x])
            };
            skip = Some(block_in);
            block_in = last;
            ch = out_ch;
        }
        outs.push(block_in.clone());
    }
    outs
}

/// VGG-16 style plain backbone: 13 Conv then two FC. Returns the last FC.
fn vgg16(b: &mut GraphBuilder, prefix: &str, input_size: u64, entry: &[&str]) -> String {
    let plan: [(u64, usize); 5] = [(64, 2), (128, 2), (256, 3), (512, 3), (512, 3)];
    let mut prev: Option<String> = None;
    let mut ch = 3;
    let mut size = input_size;
    let mut i = 0;
    for (width, reps) in plan {
        for _ in 0..reps {
            i += 1;
            let preds: Vec<&str> = prev.as_deref().map_or(entry.to_vec(), |p| vec![p]);
            prev = Some(b.conv(format!("{prefix}_c{i:02}"), width, ch, size, 3, 1, &preds));
            ch = width;
        }
        size /= 2;
    }
    let last = prev.unwrap();
    let f1 = b.fc(format!("{prefix}_fc1"), 512 * size * size, 4096, &[&last]);
    b.fc(format!("{prefix}_fc2"), 4096, 4096, &[&f1])
}

/// Plain 1-D CNN over a token sequence (modeled as `r x 1` maps with 3x3 kernels).
fn text_cnn(b: &mut GraphBuilder, prefix: &str, seq: u64, widths: &[u64]) -> String {
    let mut prev: Option<String> = None;
    let mut ch = 64;
    for (i, &w) in widths.iter().enumerate() {
        let preds: Vec<&str> = prev.as_deref().map_or(vec![], |p| vec![p]);
        let len = (seq >> (i / 2)).max(1);
        let params = LayerParams::Conv {
            n: w,
            m: ch,
            r: len,
            c: 1,
            k: 3,
            s: 1,
        };
        prev = Some(b.layer(format!("{prefix}_c{:02}", i + 1), params, &preds));
        ch = w;
    }
    prev.unwrap()
}

/// Visual localization + odometry: three ResNet-50-style encoders
/// (two odometry streams and one global pose stream) with stage-level
/// cross-talk from the odometry encoder into the pose encoder, and FC pose
/// heads. 141 layers.
pub fn vlocnet() -> ModelGraph {
    let mut b = GraphBuilder::new(4);
    let stages = [(64, 56, 3), (128, 28, 4), (256, 14, 6), (512, 7, 2)];
    let odo_t = resnet(&mut b, "odo_t", 3, 224, &stages, true, &[]);
    let odo_p = resnet(&mut b, "odo_p", 3, 224, &stages, true, &[]);
    let pose = resnet(&mut b, "pose", 3, 224, &stages, true, &[]);
    // pose stream consumes odometry features at every stage boundary
    for (s, o) in odo_p.iter().zip(&pose).take(3) {
        let next = first_layer_after(&b, o);
        b.edge(s, &next);
    }
    b.fc("head_odo_t", 2048 * 49, 512, &[&odo_t[3], &odo_p[3]]);
    b.fc("head_odo_p", 2048 * 49, 512, &[&odo_p[3]]);
    b.fc("head_pose", 2048 * 49, 512, &[&pose[3], &odo_t[3]]);
    b.build("vlocnet").expect("valid")
}

/// Id of the layer that directly consumes `id` and was added right after it
/// (the next block's first conv).
fn first_layer_after(b: &GraphBuilder, id: &str) -> String {
    let pos = b.layers.iter().position(|l| l.id == id).expect("known layer");
    b.layers[pos + 1].id.clone()
}

/// Face anti-spoofing over RGB, depth and IR: three ResNet-18 style encoders
/// at half width, a fused ResNet stage on the concatenated features and a
/// two-layer classifier.
pub fn casua_surf() -> ModelGraph {
    let mut b = GraphBuilder::new(4);
    let stages = [(32, 56, 2), (64, 28, 2), (128, 14, 2), (256, 7, 2)];
    let mut tails = Vec::new();
    for m in ["rgb", "depth", "ir"] {
        let outs = resnet(&mut b, m, 3, 224, &stages[..3], false, &[]);
        tails.push(outs[2].clone());
    }
    let tails: Vec<&str> = tails.iter().map(String::as_str).collect();
    let f1 = b.conv("fuse_1", 512, 384, 7, 3, 1, &tails);
    let f2 = b.conv("fuse_2", 512, 512, 7, 3, 1, &[&f1]);
    let f3 = b.conv("fuse_3", 512, 512, 7, 3, 1, &[&f2, &f1]);
    let f4 = b.conv("fuse_4", 512, 512, 7, 3, 1, &[&f3]);
    let c1 = b.fc("cls_1", 512 * 49, 128, &[&f4, &f3]);
    b.fc("cls_2", 128, 2, &[&c1]);
    b.build("casua_surf").expect("valid")
}

/// Video face, scene and text streams: two VGG-16 backbones, a deep text CNN,
/// and a fusion classifier.
pub fn vfs() -> ModelGraph {
    let mut b = GraphBuilder::new(4);
    let face = vgg16(&mut b, "face", 224, &[]);
    let scene = vgg16(&mut b, "scene", 224, &[]);
    let text = text_cnn(&mut b, "text", 256, &[64, 64, 128, 128, 256, 256, 512, 512, 512]);
    let t_fc = b.fc("text_fc", 512 * 16, 2048, &[&text]);
    let f1 = b.fc("fuse_1", 4096 * 2 + 2048, 2048, &[&face, &scene, &t_fc]);
    b.fc("fuse_2", 2048, 7, &[&f1]);
    b.build("vfs").expect("valid")
}

/// Multi-modal face recognition: three 3/4-width ResNet-18 encoders with
/// cross-talk from RGB into the other two at the third stage, and a shared
/// embedding head over pooled features.
pub fn facebag() -> ModelGraph {
    let mut b = GraphBuilder::new(4);
    let stages = [(48, 56, 2), (96, 28, 2), (192, 14, 2), (384, 7, 2)];
    let rgb = resnet(&mut b, "rgb", 3, 224, &stages, false, &[]);
    let depth = resnet(&mut b, "depth", 3, 224, &stages, false, &[]);
    let ir = resnet(&mut b, "ir", 3, 224, &stages, false, &[]);
    for other in [&depth, &ir] {
        let next = first_layer_after(&b, &other[2]);
        b.edge(&rgb[2], &next);
    }
    let e = b.fc("embed", 384 * 3, 512, &[&rgb[3], &depth[3], &ir[3]]);
    b.fc("cls", 512, 1000, &[&e]);
    b.build("facebag").expect("valid")
}

/// Video plus wearable-sensor activity recognition: a five-layer frame CNN
/// and a three-layer sensor CNN feed a two-layer LSTM, with per-task heads.
pub fn cnn_lstm() -> ModelGraph {
    let mut b = GraphBuilder::new(4);
    let v1 = b.conv("vid_c1", 96, 3, 55, 11, 4, &[]);
    let v2 = b.conv("vid_c2", 256, 96, 27, 5, 1, &[&v1]);
    let v3 = b.conv("vid_c3", 384, 256, 13, 3, 1, &[&v2]);
    let v4 = b.conv("vid_c4", 384, 384, 13, 3, 1, &[&v3]);
    let v5 = b.conv("vid_c5", 256, 384, 13, 3, 1, &[&v4]);
    let vf = b.fc("vid_fc", 256 * 36, 1024, &[&v5]);
    let s1 = b.conv("imu_c1", 64, 6, 16, 3, 1, &[]);
    let s2 = b.conv("imu_c2", 128, 64, 8, 3, 1, &[&s1]);
    let s3 = b.conv("imu_c3", 128, 128, 4, 3, 1, &[&s2]);
    let sf = b.fc("imu_fc", 128 * 4 * 4, 256, &[&s3]);
    let l = b.lstm("fuse_lstm", 1280, 512, 2, &[&vf, &sf]);
    b.fc("head_act", 512, 20, &[&l]);
    b.fc("head_loc", 512, 8, &[&l]);
    b.build("cnn_lstm").expect("valid")
}

/// Speech, text and motion-capture emotion recognition: LSTM encoders for
/// speech and text, a four-layer CNN for mocap, and a fusion MLP.
pub fn mocap() -> ModelGraph {
    let mut b = GraphBuilder::new(4);
    let sp1 = b.lstm("speech_lstm1", 40, 512, 1, &[]);
    let sp2 = b.lstm("speech_lstm2", 512, 256, 1, &[&sp1]);
    let tx1 = b.lstm("text_lstm1", 300, 512, 1, &[]);
    let tx2 = b.lstm("text_lstm2", 512, 256, 1, &[&tx1]);
    let m1 = b.conv("mocap_c1", 64, 1, 100, 3, 1, &[]);
    let m2 = b.conv("mocap_c2", 128, 64, 50, 3, 1, &[&m1]);
    let m3 = b.conv("mocap_c3", 256, 128, 25, 3, 1, &[&m2]);
    let m4 = b.conv("mocap_c4", 256, 256, 7, 3, 1, &[&m3]);
    let mf = b.fc("mocap_fc", 256 * 7 * 7, 128, &[&m4]);
    let f1 = b.fc("fuse_1", 640, 1024, &[&sp2, &tx2, &mf]);
    let f2 = b.fc("fuse_2", 1024, 256, &[&f1]);
    b.fc("head", 256, 4, &[&f2]);
    b.build("mocap").expect("valid")
}

/// Six synthetic MMMT models, in [`MMMT_NAMES`] order.
pub fn mmmt_models() -> Vec<ModelGraph> {
    vec![vlocnet(), casua_surf(), vfs(), facebag(), cnn_lstm(), mocap()]
}

/// Built-in model by name: one of [`MMMT_NAMES`], `fig2`, `toy_pair` or `chain3`.
pub fn named_model(name: &str) -> Result<ModelGraph> {
    Ok(match name {
        "vlocnet" => vlocnet(),
        "casua_surf" => casua_surf(),
        "vfs" => vfs(),
        "facebag" => facebag(),
        "cnn_lstm" => cnn_lstm(),
        "mocap" => mocap(),
        "fig2" => fig2_model(),
        "toy_pair" => toy_pair(),
        "chain3" => chain3(),
        _ => return Err(Error::schema("model", format!("unknown fixture `{name}`"))),
    })
}

/// Built-in system by name: `synthetic12` or `toy`.
pub fn named_system(name: &str) -> Result<SystemSpec> {
    match name {
        "synthetic12" => Ok(synthetic_system()),
        "toy" => Ok(toy_system()),
        _ => Err(Error::schema("system", format!("unknown fixture `{name}`"))),
    }
}

/// Default link bandwidth of [`synthetic_system`], bytes per second.
pub const SYNTHETIC_BW: f64 = 0.5e9;

/// Twelve synthetic accelerators: seven Conv-only, two Conv/FC/LSTM, one
/// FC/LSTM and two LSTM-only designs.
pub fn synthetic_system() -> SystemSpec {
    use LayerKind::{Conv, FC, LSTM};
    // (id, kinds, PEs, MHz, (conv, fc, lstm) efficiency, DRAM)
    #[allow(clippy::type_complexity)]
    let table: [(&str, &[LayerKind], f64, f64, [f64; 3], u64); 12] = [
        ("cnn_a", &[Conv], 512.0, 200.0, [0.85, 0.0, 0.0], 2 * GIB),
        ("cnn_b", &[Conv], 256.0, 250.0, [0.80, 0.0, 0.0], GIB),
        ("cnn_c", &[Conv], 128.0, 300.0, [0.90, 0.0, 0.0], 512 * MIB),
        ("cnn_d", &[Conv], 288.0, 200.0, [0.75, 0.0, 0.0], 4 * GIB),
        ("cnn_e", &[Conv], 192.0, 220.0, [0.80, 0.0, 0.0], GIB),
        ("cnn_f", &[Conv], 392.0, 150.0, [0.70, 0.0, 0.0], 2 * GIB),
        ("cnn_g", &[Conv], 96.0, 350.0, [0.95, 0.0, 0.0], 512 * MIB),
        ("gen_a", &[Conv, FC, LSTM], 128.0, 250.0, [0.50, 0.60, 0.40], 8 * GIB),
        ("gen_b", &[Conv, FC, LSTM], 256.0, 200.0, [0.45, 0.55, 0.45], 4 * GIB),
        ("rnn_a", &[FC, LSTM], 64.0, 300.0, [0.0, 0.80, 0.70], 2 * GIB),
        ("rnn_b", &[LSTM], 32.0, 400.0, [0.0, 0.0, 0.85], GIB),
        ("rnn_c", &[LSTM], 64.0, 250.0, [0.0, 0.0, 0.80], 512 * MIB),
    ];
    let accs = table
        .iter()
        .map(|&(id, kinds, pes, mhz, eff, dram)| {
            let model = RooflineModel::new(
                pes,
                mhz * 1e6,
                kinds.iter().map(|&k| {
                    let e = match k {
                        Conv => eff[0],
                        FC => eff[1],
                        LSTM => eff[2],
                    };
                    (k, e)
                }),
            );
            AcceleratorSpec {
                id: id.to_string(),
                supported_kinds: kinds.iter().copied().collect(),
                bw_acc: SYNTHETIC_BW,
                m_acc: dram,
                energy_per_mac: 2e-12,
                energy_per_byte: 1e-10,
                perf_model: Arc::new(model) as Arc<dyn PerformanceModel>,
            }
        })
        .collect();
    SystemSpec::new(accs).expect("valid synthetic system")
}

/// Shape of random instances.
#[derive(Debug, Clone)]
pub struct RandomConfig {
    pub layers: std::ops::RangeInclusive<usize>,
    pub accelerators: std::ops::RangeInclusive<usize>,
}

impl Default for RandomConfig {
    fn default() -> Self {
        RandomConfig {
            layers: 1..=100,
            accelerators: 2..=12,
        }
    }
}

fn random_params(rng: &mut ChaCha8Rng, kind: LayerKind) -> LayerParams {
    match kind {
        LayerKind::Conv => LayerParams::Conv {
            n: *[16, 32, 64, 128, 256].choose(rng).unwrap(),
            m: *[3, 16, 32, 64, 128, 256].choose(rng).unwrap(),
            r: *[7, 14, 28, 56].choose(rng).unwrap(),
            c: *[7, 14, 28, 56].choose(rng).unwrap(),
            k: *[1, 3, 5].choose(rng).unwrap(),
            s: rng.gen_range(1..=2),
        },
        LayerKind::FC => LayerParams::FC {
            n: *[256, 512, 1024, 2048, 4096].choose(rng).unwrap(),
            m: *[10, 256, 512, 1024, 2048].choose(rng).unwrap(),
        },
        LayerKind::LSTM => LayerParams::LSTM {
            n: *[64, 128, 256, 512].choose(rng).unwrap(),
            h: *[128, 256, 512, 1024].choose(rng).unwrap(),
            l: rng.gen_range(1..=3),
        },
    }
}

/// Random DAG of `n` layers. Ids are zero-padded so id order is creation
/// order; every layer draws up to three predecessors from the previous eight.
pub fn random_model(rng: &mut ChaCha8Rng, n: usize) -> ModelGraph {
    let mut b = GraphBuilder::new(*[1, 2, 4].choose(rng).unwrap());
    let ids: Vec<String> = (0..n).map(|i| format!("L{i:03}")).collect();
    for i in 0..n {
        let kind = match rng.gen_range(0..10) {
            0..=5 => LayerKind::Conv,
            6..=8 => LayerKind::FC,
            _ => LayerKind::LSTM,
        };
        let mut preds: Vec<&str> = Vec::new();
        if i > 0 && rng.gen_bool(0.9) {
            let lo = i.saturating_sub(8);
            let window: Vec<usize> = (lo..i).collect();
            let k = rng.gen_range(1..=3.min(window.len()));
            let mut chosen: Vec<usize> = window.choose_multiple(rng, k).copied().collect();
            chosen.sort_unstable();
            preds = chosen.iter().map(|&p| ids[p].as_str()).collect();
        }
        b.layer(ids[i].clone(), random_params(rng, kind), &preds);
    }
    b.build("random").expect("random DAG is valid")
}

/// Random system of `n` accelerators covering every kind in `needed`.
pub fn random_system(rng: &mut ChaCha8Rng, n: usize, needed: &BTreeSet<LayerKind>) -> SystemSpec {
    let mut kinds: Vec<BTreeSet<LayerKind>> = (0..n)
        .map(|_| {
            let set: BTreeSet<LayerKind> = LayerKind::ALL.into_iter().filter(|_| rng.gen_bool(0.5)).collect();
            if set.is_empty() {
                [*LayerKind::ALL.choose(rng).unwrap()].into_iter().collect()
            } else {
                set
            }
        })
        .collect();
    for &k in needed {
        if !kinds.iter().any(|s| s.contains(&k)) {
            let a = rng.gen_range(0..n);
            kinds[a].insert(k);
        }
    }
    let bws = [1.25e8, 1.5e8, 2.5e8, 5e8, 1.25e9];
    let drams = [0, 256 * 1024, 4 * MIB, 64 * MIB, GIB];
    let accs = kinds
        .into_iter()
        .enumerate()
        .map(|(i, set)| {
            let model = RooflineModel::new(
                *[256.0, 512.0, 1024.0, 2048.0].choose(rng).unwrap(),
                rng.gen_range(1.0e8..5.0e8),
                set.iter().map(|&k| (k, rng.gen_range(0.2..=1.0))),
            );
            AcceleratorSpec {
                id: format!("acc{i:02}"),
                supported_kinds: set,
                bw_acc: *bws.choose(rng).unwrap(),
                m_acc: *drams.choose(rng).unwrap(),
                energy_per_mac: 1e-12,
                energy_per_byte: 1e-10,
                perf_model: Arc::new(model) as Arc<dyn PerformanceModel>,
            }
        })
        .collect();
    SystemSpec::new(accs).expect("random system is valid")
}

/// Deterministic random model and system for `seed`.
pub fn random_instance(seed: u64, cfg: &RandomConfig) -> (ModelGraph, SystemSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(cfg.layers.clone());
    let a = rng.gen_range(cfg.accelerators.clone());
    let g = random_model(&mut rng, n);
    let needed: BTreeSet<LayerKind> = g.nodes().iter().map(LayerNode::kind).collect();
    let sys = random_system(&mut rng, a, &needed);
    (g, sys)
}
