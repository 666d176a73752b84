//! Benchmark layer: workload models (transformer-encoder GEMM table,
//! conv-layer files), the timing harness, and CSV/JSON reporting.

mod harness;
mod report;
mod workload;

pub use harness::{
    checksum_f32, checksum_i32, gops, run_benchmark, BenchConfig, BenchResult, QuantizeMode,
};
pub use report::{results_from_json, results_to_csv, results_to_json};
pub use workload::{
    bert_encoder_shapes, load_conv_workload, parse_conv_workload, WorkloadCase, WorkloadKind,
};
