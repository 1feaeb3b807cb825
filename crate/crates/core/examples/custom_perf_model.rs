//! Registering a performance model type and loading a system that uses it.

use std::sync::Arc;

use serde_json::Value;

use h2h::fixtures::cnn_lstm;
use h2h::{parse_system, run_h2h, LayerParams, PerfModelRegistry, PerformanceModel};

/// Latency = a fixed launch overhead plus MACs at a given rate.
#[derive(Debug)]
struct Affine {
    overhead_s: f64,
    macs_per_s: f64,
}

impl PerformanceModel for Affine {
    fn type_name(&self) -> &'static str {
        "affine"
    }

    fn compute_latency(&self, params: &LayerParams) -> Option<f64> {
        Some(self.overhead_s + h2h::mac_count(params) as f64 / self.macs_per_s)
    }

    fn to_json(&self) -> Value {
        serde_json::json!({"type": "affine", "overhead_s": self.overhead_s, "macs_per_s": self.macs_per_s})
    }
}

const SYSTEM: &str = r#"{"accelerators": [
  {"id": "dsp", "supported_kinds": ["Conv", "FC", "LSTM"], "bw_acc_bytes_per_s": 2.5e8, "m_acc_bytes": 268435456,
   "energy_per_mac": 2e-12, "energy_per_byte": 1e-10,
   "perf_model": {"type": "affine", "overhead_s": 2e-5, "macs_per_s": 4e10}},
  {"id": "npu", "supported_kinds": ["Conv"], "bw_acc_bytes_per_s": 2.5e8, "m_acc_bytes": 67108864,
   "energy_per_mac": 1e-12, "energy_per_byte": 1e-10,
   "perf_model": {"type": "roofline", "pe_count": 1024, "freq_hz": 5e8, "efficiency": {"Conv": 0.8}}}
]}"#;

fn main() -> h2h::Result<()> {
    let mut registry = PerfModelRegistry::default();
    registry.register("affine", |v| {
        let num = |k: &str| {
            v.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| h2h::Error::schema(format!("perf_model.{k}"), "missing"))
        };
        Ok(Arc::new(Affine {
            overhead_s: num("overhead_s")?,
            macs_per_s: num("macs_per_s")?,
        }) as Arc<dyn PerformanceModel>)
    });
    let sys = parse_system(SYSTEM, &registry)?;
    let r = run_h2h(&cnn_lstm(), &sys)?;
    println!("latency by step: {:?}", r.latencies());
    Ok(())
}
