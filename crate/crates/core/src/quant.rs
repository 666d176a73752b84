//! Dynamic symmetric per-tensor quantization: one FP32 scale per matrix,
//! INT8 codes in [-127, 127] (-128 stays unused so negation is exact),
//! and a quantized GEMM whose integer core is bit-exact — all
//! approximation error enters through rounding and the final rescale.

use crate::bench::{WorkloadCase, WorkloadKind};
use crate::gemm::{gemm_i8_i32, GemmOptions};
use crate::matrix::{GemmProblem, Matrix, MatrixView};
use crate::ukernel::IntKernel;

#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedMatrix {
    data: Matrix<i8>,
    scale: f32,
}

impl QuantizedMatrix {
    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }

    /// s such that original ~= s * codes.
    pub fn scale(&self) -> f32 {
        self.scale
    }

    pub fn codes(&self) -> &Matrix<i8> {
        &self.data
    }
}

/// Quantizes with scale s = max|M| / 127 (s = 1 for the all-zero matrix,
/// making the round trip exact) and codes
/// q = clamp(round_half_away_from_zero(M/s), -127, 127). Rejects
/// non-finite entries.
pub fn quantize_dynamic(m: &MatrixView<'_, f32>) -> QuantizedMatrix {
    let mut max_abs = 0f32;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.at(i, j);
            assert!(v.is_finite(), "quantization requires finite input, got {v} at ({i},{j})");
            max_abs = max_abs.max(v.abs());
        }
    }
    let scale = if max_abs == 0.0 { 1.0 } else { max_abs / 127.0 };
    // f32::round rounds half away from zero.
    let data = Matrix::from_fn(m.rows(), m.cols(), |i, j| {
        (m.at(i, j) / scale).round().clamp(-127.0, 127.0) as i8
    });
    QuantizedMatrix { data, scale }
}

pub fn dequantize(q: &QuantizedMatrix) -> Matrix<f32> {
    Matrix::from_fn(q.rows(), q.cols(), |i, j| q.scale * q.data.at(i, j) as f32)
}

/// Quantized GEMM: runs the INT8/INT32 blocked GEMM on the codes and
/// rescales elementwise, C(i,j) = (s_a * s_b) * Cq(i,j).
pub fn qgemm(
    kernel: &dyn IntKernel,
    a: &QuantizedMatrix,
    b: &QuantizedMatrix,
    opts: &GemmOptions,
) -> Matrix<f32> {
    assert_eq!(a.cols(), b.rows(), "inner dimensions must agree");
    let (m, n, k) = (a.rows(), b.cols(), a.cols());
    let mut cq = Matrix::<i32>::zeros(m, n);
    let problem = GemmProblem::infer((m, n), (m, k), (k, n), false, false, false);
    {
        let mut cv = cq.view_mut();
        gemm_i8_i32(kernel, &mut cv, &a.data.view(), &b.data.view(), problem, opts);
    }
    let rescale = a.scale * b.scale;
    Matrix::from_fn(m, n, |i, j| rescale * cq.at(i, j) as f32)
}

/// Whether the dynamic-quantization path may replace FP32 for a workload
/// case. Convolutions qualify; encoder GEMMs qualify exactly when one
/// operand is a weight matrix (M1-M3, M9, F11, F13) and not when both are
/// activations (M5, M7); the fully-connected matvec tail stays FP32.
/// Unlabeled GEMM cases are an error.
pub fn eligible_for_quantization(case: &WorkloadCase) -> Result<bool, String> {
    match &case.kind {
        WorkloadKind::Conv { .. } => Ok(true),
        WorkloadKind::Matvec { .. } => Ok(false),
        WorkloadKind::Gemm { .. } => match case.label.as_str() {
            "M1" | "M2" | "M3" | "M9" | "F11" | "F13" => Ok(true),
            "M5" | "M7" => Ok(false),
            other => Err(format!("unknown GEMM case label `{other}`")),
        },
    }
}
