//! Mapping and scheduling of heterogeneous multi-modality, multi-task DNN
//! graphs onto heterogeneous multi-accelerator systems, with joint
//! optimization of computation placement and host-link communication.

pub mod cli;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod knapsack;
pub mod mapper;
pub mod oracle;
pub mod report;
pub mod schedule;
pub mod system;

pub use error::{Error, Result};
pub use graph::{parse_model, LayerKind, LayerNode, LayerParams, ModelGraph};
pub use knapsack::{knapsack_solver, KnapsackItem};
pub use mapper::{
    activation_transfer_opt, computation_prioritized_mapping, data_locality_remapping, remap_incremental, run_baseline,
    run_h2h, run_h2h_steps, weight_locality_opt, H2HResult, RemapOp, StepSnapshot,
};
pub use oracle::{exhaustive_map, OracleOptions, OracleResult};
pub use schedule::{
    full_schedule, incremental_reschedule, system_energy, validate_gantt, GanttDocument, Instance, MappingState,
    Schedule,
};
pub use system::{
    mac_count, parse_system, transfer_time, AcceleratorSpec, CostBreakdown, FixedLatencyModel, PerfModelRegistry,
    PerformanceModel, RooflineModel, SystemSpec,
};
