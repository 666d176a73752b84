//! Timing harness. Cases run serially; each case may use internal GEMM
//! workers. A rep re-executes every instance of the case; reps continue
//! until at least `min_seconds` of wall time have elapsed (so
//! `min_seconds = 0` measures exactly one rep). The timed region covers
//! the whole per-inference pipeline — packing, im2col and, on the
//! quantized path, activation quantization and output rescaling — while
//! weight-side quantization happens once outside it, as it would offline.
//!
//! Operand data is generated deterministically from the case label and
//! dimensions, never from the backend, so every integer backend sees the
//! same inputs and must produce the same output checksum.

use crate::bench::{WorkloadCase, WorkloadKind};
use crate::gemm::{default_blocking, CacheModel, GemmOptions};
use crate::lowering::{conv_lowered_f32, conv_lowered_i8_i32, flatten_filters, ConvSpec, Tensor4D};
use crate::matrix::{naive_matvec_f32, GemmProblem, Matrix};
use crate::quant::{qgemm, quantize_dynamic};
use crate::ukernel::{find_backend, BackendKernel};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuantizeMode {
    /// Run every case in the backend's native domain.
    Off,
    /// Quantize exactly the quantization-eligible cases (integer backends
    /// only; the FP32 backend always runs FP32).
    Auto,
    /// Quantize every GEMM and conv case regardless of eligibility;
    /// rejected for the FP32 backend.
    Force,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub workers: usize,
    pub min_seconds: f64,
    pub quantize: QuantizeMode,
    pub cache: CacheModel,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            workers: 1,
            min_seconds: 1.0,
            quantize: QuantizeMode::Auto,
            cache: CacheModel::DEFAULT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub label: String,
    pub backend: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub instances: usize,
    pub reps: u64,
    pub wall_seconds: f64,
    /// Multiply-add work per rep: 2*m*n*k per instance.
    pub useful_ops: u64,
    pub gops: f64,
    pub checksum: u64,
}

/// Billions of useful operations per second: ops*reps / wall / 1e9.
pub fn gops(useful_ops: u64, reps: u64, wall_seconds: f64) -> f64 {
    assert!(wall_seconds > 0.0, "wall time must be positive");
    useful_ops as f64 * reps as f64 / wall_seconds / 1e9
}

/// Order-independent checksum of INT32 output words.
pub fn checksum_i32(words: &[i32]) -> u64 {
    words.iter().fold(0u64, |acc, &v| acc.wrapping_add(v as u32 as u64))
}

/// Order-independent checksum of FP32 output bit patterns.
pub fn checksum_f32(words: &[f32]) -> u64 {
    words.iter().fold(0u64, |acc, &v| acc.wrapping_add(v.to_bits() as u64))
}

/// Runs every case on one registered backend. Fails on an unknown backend
/// name, on `Force` quantization against the FP32 backend, and on a cache
/// model too small for the backend's micro-tile.
pub fn run_benchmark(
    cases: &[WorkloadCase],
    backend: &str,
    cfg: &BenchConfig,
) -> Result<Vec<BenchResult>, String> {
    assert!(cfg.workers > 0, "worker count must be positive");
    assert!(cfg.min_seconds >= 0.0, "min_seconds must be non-negative");
    let kernel = find_backend(backend).ok_or_else(|| format!("unknown backend `{backend}`"))?;
    if cfg.quantize == QuantizeMode::Force && matches!(kernel, BackendKernel::F32(_)) {
        return Err(format!(
            "quantize mode `force` requires an integer backend; `{backend}` accumulates in FP32"
        ));
    }
    let blocking = default_blocking(&cfg.cache, &kernel.spec()).map_err(|e| e.to_string())?;
    let opts = GemmOptions { blocking, workers: cfg.workers };
    cases.iter().map(|case| run_case(case, kernel, &opts, cfg)).collect()
}

/// Stable per-case seed: FNV-1a over the label folded with the dims, so
/// reruns and different backends draw identical operands.
fn case_seed(case: &WorkloadCase) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    let mut eat = |byte: u8| {
        h ^= byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    };
    for b in case.label.bytes() {
        eat(b);
    }
    let (m, n, k) = case.gemm_dims();
    for dim in [m, n, k, case.instances] {
        for b in (dim as u64).to_le_bytes() {
            eat(b);
        }
    }
    h
}

fn timed(min_seconds: f64, mut body: impl FnMut()) -> (u64, f64) {
    let start = Instant::now();
    let mut reps = 0u64;
    loop {
        body();
        reps += 1;
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed >= min_seconds {
            return (reps, elapsed);
        }
    }
}

fn result_from(
    case: &WorkloadCase,
    backend_name: &str,
    reps: u64,
    wall: f64,
    checksum: u64,
) -> BenchResult {
    let (m, n, k) = case.gemm_dims();
    BenchResult {
        label: case.label.clone(),
        backend: backend_name.to_string(),
        m,
        n,
        k,
        instances: case.instances,
        reps,
        wall_seconds: wall,
        useful_ops: case.useful_ops(),
        gops: gops(case.useful_ops(), reps, wall),
        checksum,
    }
}

fn quantize_tensor(t: &Tensor4D<f32>) -> (Tensor4D<i8>, f32) {
    let mut max_abs = 0f32;
    for &v in t.data() {
        assert!(v.is_finite(), "quantization requires finite input");
        max_abs = max_abs.max(v.abs());
    }
    let scale = if max_abs == 0.0 { 1.0 } else { max_abs / 127.0 };
    let (b, h, w, c) = t.dims();
    let q = Tensor4D::from_fn(b, h, w, c, |bi, y, x, ci| {
        (t.at(bi, y, x, ci) / scale).round().clamp(-127.0, 127.0) as i8
    });
    (q, scale)
}

fn run_case(
    case: &WorkloadCase,
    kernel: BackendKernel,
    opts: &GemmOptions,
    cfg: &BenchConfig,
) -> Result<BenchResult, String> {
    let quantized = match (&case.kind, cfg.quantize) {
        (WorkloadKind::Matvec { .. }, _) => false,
        (_, QuantizeMode::Off) => false,
        (_, QuantizeMode::Force) => true,
        (_, QuantizeMode::Auto) => case.quantize && matches!(kernel, BackendKernel::Int(_)),
    };
    let mut rng = StdRng::seed_from_u64(case_seed(case));
    let (reps, wall, checksum) = match (&case.kind, kernel) {
        // The fully-connected tail has no blocked integer path; it is
        // measured as an FP32 matvec whichever backend is selected.
        (WorkloadKind::Matvec { m, n }, _) => {
            let a = Matrix::from_fn(*m, *n, |_, _| rng.gen_range(-1.0f32..1.0));
            let x: Vec<f32> = (0..*n).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            let mut y = vec![0f32; *m];
            let (reps, wall) = timed(cfg.min_seconds, || {
                for _ in 0..case.instances {
                    naive_matvec_f32(&mut y, &a.view(), &x, false);
                }
            });
            (reps, wall, checksum_f32(&y))
        }
        (WorkloadKind::Gemm { m, n, k }, BackendKernel::Int(int)) if quantized => {
            let a = Matrix::from_fn(*m, *k, |_, _| rng.gen_range(-1.0f32..1.0));
            let b = Matrix::from_fn(*k, *n, |_, _| rng.gen_range(-1.0f32..1.0));
            let qa = quantize_dynamic(&a.view());
            let mut c = Matrix::zeros(1, 1);
            let (reps, wall) = timed(cfg.min_seconds, || {
                for _ in 0..case.instances {
                    let qb = quantize_dynamic(&b.view());
                    c = qgemm(int, &qa, &qb, opts);
                }
            });
            (reps, wall, checksum_f32(&c.to_dense_vec()))
        }
        (WorkloadKind::Gemm { m, n, k }, BackendKernel::Int(int)) => {
            let a = Matrix::from_fn(*m, *k, |_, _| rng.gen::<i8>());
            let b = Matrix::from_fn(*k, *n, |_, _| rng.gen::<i8>());
            let problem = GemmProblem::infer((*m, *n), (*m, *k), (*k, *n), false, false, false);
            let mut c = Matrix::<i32>::zeros(*m, *n);
            let (reps, wall) = timed(cfg.min_seconds, || {
                for _ in 0..case.instances {
                    crate::gemm::gemm_i8_i32(int, &mut c.view_mut(), &a.view(), &b.view(), problem, opts);
                }
            });
            (reps, wall, checksum_i32(&c.to_dense_vec()))
        }
        (WorkloadKind::Gemm { m, n, k }, BackendKernel::F32(f)) => {
            let a = Matrix::from_fn(*m, *k, |_, _| rng.gen_range(-1.0f32..1.0));
            let b = Matrix::from_fn(*k, *n, |_, _| rng.gen_range(-1.0f32..1.0));
            let problem = GemmProblem::infer((*m, *n), (*m, *k), (*k, *n), false, false, false);
            let mut c = Matrix::<f32>::zeros(*m, *n);
            let (reps, wall) = timed(cfg.min_seconds, || {
                for _ in 0..case.instances {
                    crate::gemm::gemm_f32(f, &mut c.view_mut(), &a.view(), &b.view(), problem, opts);
                }
            });
            (reps, wall, checksum_f32(&c.to_dense_vec()))
        }
        (WorkloadKind::Conv { spec, batch, h_i, w_i }, BackendKernel::Int(int)) if quantized => {
            let (input, filters) = random_conv_operands_f32(&mut rng, spec, *batch, *h_i, *w_i);
            let (qf, s_f) = {
                let flat = flatten_filters(&filters);
                let q = quantize_dynamic(&flat.view());
                let s = q.scale();
                (q.codes().clone(), s)
            };
            let mut out = Vec::new();
            let (reps, wall) = timed(cfg.min_seconds, || {
                for _ in 0..case.instances {
                    let (qi, s_i) = quantize_tensor(&input);
                    let cq = conv_lowered_i8_i32(int, &qi, &qf, spec, opts);
                    let rescale = s_f * s_i;
                    out = cq.data().iter().map(|&v| rescale * v as f32).collect();
                }
            });
            (reps, wall, checksum_f32(&out))
        }
        (WorkloadKind::Conv { spec, batch, h_i, w_i }, BackendKernel::Int(int)) => {
            let input = Tensor4D::from_fn(*batch, *h_i, *w_i, spec.c_i, |_, _, _, _| rng.gen::<i8>());
            let filters =
                Tensor4D::from_fn(spec.c_o, spec.h_f, spec.w_f, spec.c_i, |_, _, _, _| rng.gen::<i8>());
            let flat = flatten_filters(&filters);
            let mut out = Tensor4D::<i32>::zeros(1, 1, 1, 1);
            let (reps, wall) = timed(cfg.min_seconds, || {
                for _ in 0..case.instances {
                    out = conv_lowered_i8_i32(int, &input, &flat, spec, opts);
                }
            });
            (reps, wall, checksum_i32(out.data()))
        }
        (WorkloadKind::Conv { spec, batch, h_i, w_i }, BackendKernel::F32(f)) => {
            let (input, filters) = random_conv_operands_f32(&mut rng, spec, *batch, *h_i, *w_i);
            let flat = flatten_filters(&filters);
            let mut out = Tensor4D::<f32>::zeros(1, 1, 1, 1);
            let (reps, wall) = timed(cfg.min_seconds, || {
                for _ in 0..case.instances {
                    out = conv_lowered_f32(f, &input, &flat, spec, opts);
                }
            });
            (reps, wall, checksum_f32(out.data()))
        }
    };
    Ok(result_from(case, kernel.name(), reps, wall, checksum))
}

fn random_conv_operands_f32(
    rng: &mut StdRng,
    spec: &ConvSpec,
    batch: usize,
    h_i: usize,
    w_i: usize,
) -> (Tensor4D<f32>, Tensor4D<f32>) {
    let input = Tensor4D::from_fn(batch, h_i, w_i, spec.c_i, |_, _, _, _| rng.gen_range(-1.0f32..1.0));
    let filters = Tensor4D::from_fn(spec.c_o, spec.h_f, spec.w_f, spec.c_i, |_, _, _, _| {
        rng.gen_range(-1.0f32..1.0)
    });
    (input, filters)
}
