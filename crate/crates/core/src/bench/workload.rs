//! Workload definitions: the eight encoder GEMMs of a BERT-style
//! transformer layer, and a line-delimited file format for convolution
//! layer stacks.

use crate::lowering::ConvSpec;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WorkloadKind {
    Gemm { m: usize, n: usize, k: usize },
    /// A batched convolution over an h_i x w_i input; benchmarked through
    /// im2col lowering, so its GEMM dims follow the lowering formula.
    Conv { spec: ConvSpec, batch: usize, h_i: usize, w_i: usize },
    /// m x n matrix against an n-vector (the fully-connected tail of a
    /// conv stack); equivalent to the degenerate (m, 1, n) GEMM.
    Matvec { m: usize, n: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkloadCase {
    pub label: String,
    pub kind: WorkloadKind,
    /// How many independent copies of this shape one pass executes
    /// (e.g. one per attention head per batch element).
    pub instances: usize,
    /// Whether the dynamic-quantization path may replace the FP32 GEMM
    /// for this case.
    pub quantize: bool,
}

impl WorkloadCase {
    /// The case expressed as one GEMM (m, n, k): conv cases report their
    /// lowered dimensions, a matvec is (m, 1, n).
    pub fn gemm_dims(&self) -> (usize, usize, usize) {
        match &self.kind {
            WorkloadKind::Gemm { m, n, k } => (*m, *n, *k),
            WorkloadKind::Conv { spec, batch, h_i, w_i } => {
                spec.lowered_gemm_dims(*batch, *h_i, *w_i)
            }
            WorkloadKind::Matvec { m, n } => (*m, 1, *n),
        }
    }

    /// Multiply-add work per pass: 2*m*n*k per GEMM instance (2*m*n for a
    /// matvec, which the (m, 1, n) mapping yields for free).
    pub fn useful_ops(&self) -> u64 {
        let (m, n, k) = self.gemm_dims();
        2 * (m as u64) * (n as u64) * (k as u64) * (self.instances as u64)
    }
}

fn gemm_case(label: &str, m: usize, n: usize, k: usize, instances: usize, quantize: bool) -> WorkloadCase {
    assert!(m > 0 && n > 0 && k > 0 && instances > 0);
    WorkloadCase { label: label.to_string(), kind: WorkloadKind::Gemm { m, n, k }, instances, quantize }
}

/// The GEMM shapes of one transformer-encoder layer with model dimension
/// `d`, `h` attention heads, feed-forward dimension `f`, sequence length
/// `l` and batch `b`:
///
/// * M1–M3: query/key/value projections, (d, l*b, d)
/// * M5: attention scores Q^T*K, (l, l, d/h), one GEMM per head per batch
/// * M7: attention-weighted values, (d/h, l, l), likewise per head
/// * M9: output projection, (d, l*b, d)
/// * F11/F13: feed-forward up/down projections, (f, l*b, d) and (d, l*b, f)
///
/// Weight-times-activation cases are quantization-eligible; the two
/// activation-times-activation cases (M5, M7) are not. Element-wise rows
/// of the layer (softmax, layer norm, GELU) carry no GEMM and are omitted.
pub fn bert_encoder_shapes(d: usize, h: usize, f: usize, l: usize, b: usize) -> Vec<WorkloadCase> {
    assert!(d > 0 && h > 0 && f > 0 && l > 0 && b > 0);
    assert!(d % h == 0, "attention heads ({h}) must divide the model dimension ({d})");
    let per_head = h * b;
    vec![
        gemm_case("M1", d, l * b, d, 1, true),
        gemm_case("M2", d, l * b, d, 1, true),
        gemm_case("M3", d, l * b, d, 1, true),
        gemm_case("M5", l, l, d / h, per_head, false),
        gemm_case("M7", d / h, l, l, per_head, false),
        gemm_case("M9", d, l * b, d, 1, true),
        gemm_case("F11", f, l * b, d, 1, true),
        gemm_case("F13", d, l * b, f, 1, true),
    ]
}

const CONV_FIELDS: [&str; 10] =
    ["label", "c_i", "h_i", "w_i", "c_o", "h_f", "w_f", "stride", "pad", "b"];

/// Parses a conv-workload file: one record per line, comma-separated
/// `label, c_i, h_i, w_i, c_o, h_f, w_f, stride, pad, b`; blank lines and
/// `#` comments are skipped. A line labeled `FC` must describe a 1x1
/// filter on a 1x1 input and becomes a matrix-vector case (c_o x c_i,
/// one instance per batch element, never quantized); every other line
/// becomes a quantization-eligible convolution case. Errors carry the
/// 1-based line number and the offending field.
pub fn parse_conv_workload(text: &str) -> Result<Vec<WorkloadCase>, String> {
    let mut cases = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != CONV_FIELDS.len() {
            return Err(format!(
                "line {line_no}: expected {} comma-separated fields ({}), found {}",
                CONV_FIELDS.len(),
                CONV_FIELDS.join(", "),
                fields.len()
            ));
        }
        let label = fields[0];
        if label.is_empty() {
            return Err(format!("line {line_no}: field `label`: must not be empty"));
        }
        let mut nums = [0usize; 9];
        for (slot, (name, text)) in CONV_FIELDS[1..].iter().zip(&fields[1..]).enumerate() {
            nums[slot] = text
                .parse()
                .map_err(|e| format!("line {line_no}: field `{name}`: {e} (got `{text}`)"))?;
        }
        let [c_i, h_i, w_i, c_o, h_f, w_f, stride, pad, b] = nums;
        for (name, value) in
            [("c_i", c_i), ("h_i", h_i), ("w_i", w_i), ("c_o", c_o), ("h_f", h_f), ("w_f", w_f), ("stride", stride), ("b", b)]
        {
            if value == 0 {
                return Err(format!("line {line_no}: field `{name}`: must be positive"));
            }
        }
        if label == "FC" {
            if [h_i, w_i, h_f, w_f, stride] != [1, 1, 1, 1, 1] || pad != 0 {
                return Err(format!(
                    "line {line_no}: an FC record must have h_i = w_i = h_f = w_f = stride = 1 and pad = 0"
                ));
            }
            cases.push(WorkloadCase {
                label: label.to_string(),
                kind: WorkloadKind::Matvec { m: c_o, n: c_i },
                instances: b,
                quantize: false,
            });
            continue;
        }
        for (what, extent, filter) in [("height", h_i, h_f), ("width", w_i, w_f)] {
            let padded = extent + 2 * pad;
            if padded < filter {
                return Err(format!(
                    "line {line_no}: `{label}` filter {what} {filter} exceeds padded input {padded}"
                ));
            }
            if (padded - filter) % stride != 0 {
                return Err(format!(
                    "line {line_no}: `{label}` output {what} is not an integer: padded span {} is not a multiple of stride {stride}",
                    padded - filter
                ));
            }
        }
        cases.push(WorkloadCase {
            label: label.to_string(),
            kind: WorkloadKind::Conv {
                spec: ConvSpec { c_o, h_f, w_f, c_i, stride, pad },
                batch: b,
                h_i,
                w_i,
            },
            instances: 1,
            quantize: true,
        });
    }
    Ok(cases)
}

pub fn load_conv_workload(path: &Path) -> Result<Vec<WorkloadCase>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read workload file {}: {e}", path.display()))?;
    parse_conv_workload(&text).map_err(|e| format!("{}: {e}", path.display()))
}
