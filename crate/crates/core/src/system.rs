//! Heterogeneous accelerator system and per-layer cost components.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::{LayerKind, LayerNode, LayerParams};

/// Multiply-accumulate count of a layer (LSTM stacked layers take `h` inputs).
pub fn mac_count(params: &LayerParams) -> u64 {
    match *params {
        LayerParams::Conv { n, m, r, c, k, .. } => n * m * r * c * k * k,
        LayerParams::FC { n, m } => n * m,
        LayerParams::LSTM { n, h, l } => 4 * (n * h + h * h) + (l - 1) * 4 * (h * h + h * h),
    }
}

/// Seconds to move `bytes` over a link of `bw` bytes per second.
pub fn transfer_time(bytes: u64, bw: f64) -> f64 {
    bytes as f64 / bw
}

/// Analytical latency model of one accelerator design.
///
/// Implementations must be pure: identical arguments give bit-identical results.
pub trait PerformanceModel: fmt::Debug + Send + Sync {
    /// Type tag used in system files.
    fn type_name(&self) -> &'static str;

    /// Seconds to compute the layer, or `None` if this design cannot run it.
    fn compute_latency(&self, params: &LayerParams) -> Option<f64>;

    fn compute_energy(&self, params: &LayerParams, energy_per_mac: f64) -> f64 {
        mac_count(params) as f64 * energy_per_mac
    }

    /// Parameters as written to a system file, including `type`.
    fn to_json(&self) -> Value;
}

/// Reference model: MACs over `pe_count * freq_hz * efficiency[kind]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RooflineModel {
    pub pe_count: f64,
    pub freq_hz: f64,
    pub efficiency: BTreeMap<LayerKind, f64>,
}

impl RooflineModel {
    pub fn new(pe_count: f64, freq_hz: f64, efficiency: impl IntoIterator<Item = (LayerKind, f64)>) -> Self {
        RooflineModel {
            pe_count,
            freq_hz,
            efficiency: efficiency.into_iter().collect(),
        }
    }

    pub fn uniform(pe_count: f64, freq_hz: f64) -> Self {
        Self::new(pe_count, freq_hz, LayerKind::ALL.map(|k| (k, 1.0)))
    }

    fn from_json(v: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(rename = "type")]
            _type: String,
            pe_count: f64,
            freq_hz: f64,
            efficiency: BTreeMap<LayerKind, f64>,
        }
        let raw: Raw = serde_json::from_value(v.clone()).map_err(|e| Error::schema("perf_model", e.to_string()))?;
        if !(raw.pe_count > 0.0) {
            return Err(Error::schema("perf_model.pe_count", "must be > 0"));
        }
        if !(raw.freq_hz > 0.0) {
            return Err(Error::schema("perf_model.freq_hz", "must be > 0"));
        }
        for (kind, eff) in &raw.efficiency {
            if !(*eff > 0.0 && *eff <= 1.0) {
                return Err(Error::schema(
                    format!("perf_model.efficiency.{kind}"),
                    "must be in (0, 1]",
                ));
            }
        }
        Ok(RooflineModel::new(raw.pe_count, raw.freq_hz, raw.efficiency))
    }
}

impl PerformanceModel for RooflineModel {
    fn type_name(&self) -> &'static str {
        "roofline"
    }

    fn compute_latency(&self, params: &LayerParams) -> Option<f64> {
        let eff = *self.efficiency.get(&params.kind())?;
        Some(mac_count(params) as f64 / (self.pe_count * self.freq_hz * eff))
    }

    fn to_json(&self) -> Value {
        json!({
            "type": "roofline",
            "pe_count": self.pe_count,
            "freq_hz": self.freq_hz,
            "efficiency": self.efficiency,
        })
    }
}

/// Constant latency per layer kind, independent of shape. Handy for hand-checked fixtures.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedLatencyModel {
    pub latency: BTreeMap<LayerKind, f64>,
}

impl FixedLatencyModel {
    pub fn new(latency: impl IntoIterator<Item = (LayerKind, f64)>) -> Self {
        FixedLatencyModel {
            latency: latency.into_iter().collect(),
        }
    }

    fn from_json(v: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            #[serde(rename = "type")]
            _type: String,
            latency: BTreeMap<LayerKind, f64>,
        }
        let raw: Raw = serde_json::from_value(v.clone()).map_err(|e| Error::schema("perf_model", e.to_string()))?;
        for (kind, s) in &raw.latency {
            if !(*s > 0.0 && s.is_finite()) {
                return Err(Error::schema(format!("perf_model.latency.{kind}"), "must be > 0"));
            }
        }
        Ok(FixedLatencyModel { latency: raw.latency })
    }
}

impl PerformanceModel for FixedLatencyModel {
    fn type_name(&self) -> &'static str {
        "fixed"
    }

    fn compute_latency(&self, params: &LayerParams) -> Option<f64> {
        self.latency.get(&params.kind()).copied()
    }

    fn to_json(&self) -> Value {
        json!({ "type": "fixed", "latency": self.latency })
    }
}

type ModelFactory = Box<dyn Fn(&Value) -> Result<Arc<dyn PerformanceModel>> + Send + Sync>;

/// Maps `perf_model.type` strings to constructors.
pub struct PerfModelRegistry {
    factories: HashMap<String, ModelFactory>,
}

impl PerfModelRegistry {
    pub fn empty() -> Self {
        PerfModelRegistry {
            factories: HashMap::new(),
        }
    }

    pub fn register<F>(&mut self, type_name: impl Into<String>, factory: F)
    where
        F: Fn(&Value) -> Result<Arc<dyn PerformanceModel>> + Send + Sync + 'static,
    {
        self.factories.insert(type_name.into(), Box::new(factory));
    }

    pub fn build(&self, v: &Value) -> Result<Arc<dyn PerformanceModel>> {
        let ty = v
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::schema("perf_model.type", "missing"))?;
        let factory = self
            .factories
            .get(ty)
            .ok_or_else(|| Error::UnknownPerfModel(ty.to_string()))?;
        factory(v)
    }
}

impl Default for PerfModelRegistry {
    fn default() -> Self {
        let mut r = PerfModelRegistry::empty();
        r.register("roofline", |v| {
            Ok(Arc::new(RooflineModel::from_json(v)?) as Arc<dyn PerformanceModel>)
        });
        r.register("fixed", |v| {
            Ok(Arc::new(FixedLatencyModel::from_json(v)?) as Arc<dyn PerformanceModel>)
        });
        r
    }
}

#[derive(Debug, Clone)]
pub struct AcceleratorSpec {
    pub id: String,
    pub supported_kinds: BTreeSet<LayerKind>,
    /// Accelerator-to-host bandwidth, bytes per second.
    pub bw_acc: f64,
    /// Local DRAM capacity, bytes.
    pub m_acc: u64,
    pub energy_per_mac: f64,
    pub energy_per_byte: f64,
    pub perf_model: Arc<dyn PerformanceModel>,
}

impl AcceleratorSpec {
    pub fn supports(&self, kind: LayerKind) -> bool {
        self.supported_kinds.contains(&kind)
    }

    pub fn compute_latency(&self, layer: &LayerNode) -> Result<f64> {
        let unsupported = || Error::UnsupportedLayer {
            acc: self.id.clone(),
            layer: layer.id.clone(),
        };
        if !self.supports(layer.kind()) {
            return Err(unsupported());
        }
        self.perf_model.compute_latency(&layer.params).ok_or_else(unsupported)
    }

    pub fn compute_energy(&self, layer: &LayerNode) -> f64 {
        self.perf_model.compute_energy(&layer.params, self.energy_per_mac)
    }

    /// Serialized transfer and compute time of `layer` on this accelerator.
    ///
    /// Fused byte counts are clamped to the layer's activation sizes.
    pub fn layer_cost(
        &self,
        layer: &LayerNode,
        weight_pinned: bool,
        input_fused_bytes: u64,
        output_fused_bytes: u64,
    ) -> Result<CostBreakdown> {
        let compute = self.compute_latency(layer)?;
        Ok(self.cost_with_compute(layer, compute, weight_pinned, input_fused_bytes, output_fused_bytes))
    }

    pub(crate) fn cost_with_compute(
        &self,
        layer: &LayerNode,
        compute: f64,
        weight_pinned: bool,
        input_fused_bytes: u64,
        output_fused_bytes: u64,
    ) -> CostBreakdown {
        let weight_bytes = if weight_pinned { 0 } else { layer.weight_bytes };
        CostBreakdown {
            weight_xfer: transfer_time(weight_bytes, self.bw_acc),
            input_xfer: transfer_time(layer.ifm_bytes - input_fused_bytes.min(layer.ifm_bytes), self.bw_acc),
            compute,
            output_xfer: transfer_time(layer.ofm_bytes - output_fused_bytes.min(layer.ofm_bytes), self.bw_acc),
        }
    }

    fn to_document(&self) -> AcceleratorDocument {
        AcceleratorDocument {
            id: self.id.clone(),
            supported_kinds: self.supported_kinds.iter().copied().collect(),
            bw_acc_bytes_per_s: self.bw_acc,
            m_acc_bytes: self.m_acc,
            energy_per_mac: self.energy_per_mac,
            energy_per_byte: self.energy_per_byte,
            perf_model: self.perf_model.to_json(),
        }
    }
}

/// Per-layer latency components, in seconds. They do not overlap.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub weight_xfer: f64,
    pub input_xfer: f64,
    pub compute: f64,
    pub output_xfer: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.weight_xfer + self.input_xfer + self.compute + self.output_xfer
    }

    pub fn comm(&self) -> f64 {
        self.weight_xfer + self.input_xfer + self.output_xfer
    }
}

#[derive(Debug, Clone)]
pub struct SystemSpec {
    accelerators: Vec<AcceleratorSpec>,
}

impl SystemSpec {
    pub fn new(accelerators: Vec<AcceleratorSpec>) -> Result<Self> {
        if accelerators.is_empty() {
            return Err(Error::schema("accelerators", "at least one accelerator is required"));
        }
        let mut seen = BTreeSet::new();
        for (i, a) in accelerators.iter().enumerate() {
            let at = |f: &str| format!("accelerators[{i}].{f}");
            if a.id.is_empty() {
                return Err(Error::schema(at("id"), "empty id"));
            }
            if !seen.insert(a.id.as_str()) {
                return Err(Error::DuplicateId(a.id.clone()));
            }
            if a.supported_kinds.is_empty() {
                return Err(Error::schema(at("supported_kinds"), "must not be empty"));
            }
            if !(a.bw_acc > 0.0 && a.bw_acc.is_finite()) {
                return Err(Error::schema(at("bw_acc_bytes_per_s"), "must be > 0"));
            }
            if !(a.energy_per_mac >= 0.0) {
                return Err(Error::schema(at("energy_per_mac"), "must be >= 0"));
            }
            if !(a.energy_per_byte >= 0.0) {
                return Err(Error::schema(at("energy_per_byte"), "must be >= 0"));
            }
        }
        Ok(SystemSpec { accelerators })
    }

    pub fn accelerators(&self) -> &[AcceleratorSpec] {
        &self.accelerators
    }

    pub fn len(&self) -> usize {
        self.accelerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accelerators.is_empty()
    }

    pub fn acc(&self, ix: usize) -> &AcceleratorSpec {
        &self.accelerators[ix]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.accelerators.iter().position(|a| a.id == id)
    }

    /// Copy with every host link set to `bw`.
    pub fn with_uniform_bandwidth(&self, bw: f64) -> SystemSpec {
        let mut out = self.clone();
        for a in &mut out.accelerators {
            a.bw_acc = bw;
        }
        out
    }

    /// Copy with the named host links overridden.
    pub fn with_bandwidths(&self, overrides: &BTreeMap<String, f64>) -> Result<SystemSpec> {
        let mut out = self.clone();
        for (id, &bw) in overrides {
            let ix = self
                .index_of(id)
                .ok_or_else(|| Error::schema("bandwidth override", format!("unknown accelerator `{id}`")))?;
            if !(bw > 0.0) {
                return Err(Error::schema(format!("bandwidth override {id}"), "must be > 0"));
            }
            out.accelerators[ix].bw_acc = bw;
        }
        Ok(out)
    }

    pub fn to_document(&self) -> SystemDocument {
        SystemDocument {
            accelerators: self.accelerators.iter().map(AcceleratorSpec::to_document).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("system document serializes")
    }
}

/// On-disk system file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub accelerators: Vec<AcceleratorDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceleratorDocument {
    pub id: String,
    pub supported_kinds: Vec<LayerKind>,
    pub bw_acc_bytes_per_s: f64,
    pub m_acc_bytes: u64,
    pub energy_per_mac: f64,
    pub energy_per_byte: f64,
    pub perf_model: Value,
}

impl SystemDocument {
    pub fn into_system(self, registry: &PerfModelRegistry) -> Result<SystemSpec> {
        let mut accs = Vec::with_capacity(self.accelerators.len());
        for (i, a) in self.accelerators.into_iter().enumerate() {
            let perf_model = registry.build(&a.perf_model).map_err(|e| match e {
                Error::Schema { field, message } => Error::schema(format!("accelerators[{i}].{field}"), message),
                other => other,
            })?;
            accs.push(AcceleratorSpec {
                id: a.id,
                supported_kinds: a.supported_kinds.into_iter().collect(),
                bw_acc: a.bw_acc_bytes_per_s,
                m_acc: a.m_acc_bytes,
                energy_per_mac: a.energy_per_mac,
                energy_per_byte: a.energy_per_byte,
                perf_model,
            });
        }
        SystemSpec::new(accs)
    }
}

pub fn parse_system(document: &str, registry: &PerfModelRegistry) -> Result<SystemSpec> {
    let doc: SystemDocument = serde_json::from_str(document)?;
    doc.into_system(registry)
}
