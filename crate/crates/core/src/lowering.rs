//! Convolution lowering: im2col turns a batched 2-D convolution into one
//! GEMM of dimensions (c_o, b*h_o*w_o, c_i*h_f*w_f). A naive seven-loop
//! direct convolution serves as the oracle the lowered path is tested
//! against.

use crate::gemm::{gemm_f32, gemm_i8_i32, GemmOptions};
use crate::matrix::{Element, GemmProblem, Matrix};
use crate::ukernel::{F32Kernel, IntKernel};

/// Batched channel-last image tensor: index (b, y, x, c), with c fastest in
/// memory so each receptive-field read is contiguous over channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4D<T> {
    b: usize,
    h: usize,
    w: usize,
    c: usize,
    data: Vec<T>,
}

impl<T: Element> Tensor4D<T> {
    pub fn zeros(b: usize, h: usize, w: usize, c: usize) -> Self {
        assert!(b > 0 && h > 0 && w > 0 && c > 0, "tensor dims must be positive");
        Tensor4D { b, h, w, c, data: vec![T::default(); b * h * w * c] }
    }

    pub fn from_fn(
        b: usize,
        h: usize,
        w: usize,
        c: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> T,
    ) -> Self {
        let mut t = Tensor4D::zeros(b, h, w, c);
        for bi in 0..b {
            for y in 0..h {
                for x in 0..w {
                    for ci in 0..c {
                        let v = f(bi, y, x, ci);
                        t.set(bi, y, x, ci, v);
                    }
                }
            }
        }
        t
    }

    /// (b, h, w, c)
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.b, self.h, self.w, self.c)
    }

    #[inline]
    fn index(&self, b: usize, y: usize, x: usize, c: usize) -> usize {
        debug_assert!(b < self.b && y < self.h && x < self.w && c < self.c);
        ((b * self.h + y) * self.w + x) * self.c + c
    }

    #[inline]
    pub fn at(&self, b: usize, y: usize, x: usize, c: usize) -> T {
        self.data[self.index(b, y, x, c)]
    }

    #[inline]
    pub fn set(&mut self, b: usize, y: usize, x: usize, c: usize, v: T) {
        let i = self.index(b, y, x, c);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }
}

/// Convolution geometry: c_o filters of h_f x w_f x c_i taps, applied with
/// one stride and symmetric zero padding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub c_o: usize,
    pub h_f: usize,
    pub w_f: usize,
    pub c_i: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvSpec {
    /// Output spatial size for an h_i x w_i input. The padded extent must
    /// split into an exact positive number of strides: (h_i + 2*pad - h_f)
    /// must be non-negative and divisible by the stride.
    pub fn output_dims(&self, h_i: usize, w_i: usize) -> (usize, usize) {
        assert!(self.stride > 0, "stride must be positive");
        assert!(self.h_f > 0 && self.w_f > 0 && self.c_i > 0 && self.c_o > 0);
        let span = |extent: usize, filter: usize, what: &str| {
            let padded = extent + 2 * self.pad;
            assert!(padded >= filter, "filter {what} {filter} exceeds padded input {padded}");
            let steps = padded - filter;
            assert_eq!(
                steps % self.stride,
                0,
                "{what}: padded extent {padded} minus filter {filter} must be a multiple of stride {}",
                self.stride
            );
            steps / self.stride + 1
        };
        (span(h_i, self.h_f, "height"), span(w_i, self.w_f, "width"))
    }

    /// The (m, n, k) of the lowered GEMM for a b-image h_i x w_i input.
    pub fn lowered_gemm_dims(&self, b: usize, h_i: usize, w_i: usize) -> (usize, usize, usize) {
        let (h_o, w_o) = self.output_dims(h_i, w_i);
        (self.c_o, b * h_o * w_o, self.c_i * self.h_f * self.w_f)
    }
}

/// Unfolds every receptive field of `input` into one column: row
/// r = f_y*(w_f*c_i) + f_x*c_i + c (channel fastest, then filter x, then
/// filter y), column q = b*(h_o*w_o) + y*w_o + x. Padding taps stay zero.
pub fn im2col<T: Element>(input: &Tensor4D<T>, spec: &ConvSpec) -> Matrix<T> {
    let (b, h_i, w_i, c_i) = input.dims();
    assert_eq!(c_i, spec.c_i, "input channels disagree with spec");
    let (h_o, w_o) = spec.output_dims(h_i, w_i);
    let rows = spec.c_i * spec.h_f * spec.w_f;
    let cols = b * h_o * w_o;
    let mut out = Matrix::zeros(rows, cols);
    for bi in 0..b {
        for y in 0..h_o {
            for x in 0..w_o {
                let q = bi * (h_o * w_o) + y * w_o + x;
                for f_y in 0..spec.h_f {
                    // Signed source coordinates: padding makes them negative
                    // at the borders.
                    let sy = (y * spec.stride + f_y) as isize - spec.pad as isize;
                    if sy < 0 || sy >= h_i as isize {
                        continue;
                    }
                    for f_x in 0..spec.w_f {
                        let sx = (x * spec.stride + f_x) as isize - spec.pad as isize;
                        if sx < 0 || sx >= w_i as isize {
                            continue;
                        }
                        let r0 = f_y * (spec.w_f * spec.c_i) + f_x * spec.c_i;
                        for c in 0..c_i {
                            out.set(r0 + c, q, input.at(bi, sy as usize, sx as usize, c));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Reshapes a (c_o, h_f, w_f, c_i) filter bank (filter index in the batch
/// slot) into the c_o x (c_i*h_f*w_f) matrix whose row ordering matches
/// [`im2col`] rows.
pub fn flatten_filters<T: Element>(filters: &Tensor4D<T>) -> Matrix<T> {
    let (c_o, h_f, w_f, c_i) = filters.dims();
    Matrix::from_fn(c_o, c_i * h_f * w_f, |o, r| {
        let f_y = r / (w_f * c_i);
        let f_x = (r / c_i) % w_f;
        let c = r % c_i;
        filters.at(o, f_y, f_x, c)
    })
}

/// Seven-loop INT8 convolution oracle over 4-D filters; wrapping i32
/// accumulation to stay comparable with the GEMM path bit for bit.
pub fn direct_conv_i8_i32(
    input: &Tensor4D<i8>,
    filters: &Tensor4D<i8>,
    spec: &ConvSpec,
) -> Tensor4D<i32> {
    let (b, h_i, w_i, c_i) = input.dims();
    let (c_o, h_f, w_f, fc_i) = filters.dims();
    assert_eq!((c_o, h_f, w_f, fc_i), (spec.c_o, spec.h_f, spec.w_f, spec.c_i));
    assert_eq!(c_i, spec.c_i);
    let (h_o, w_o) = spec.output_dims(h_i, w_i);
    let mut out = Tensor4D::zeros(b, h_o, w_o, c_o);
    for bi in 0..b {
        for y in 0..h_o {
            for x in 0..w_o {
                for o in 0..c_o {
                    let mut acc = 0i32;
                    for f_y in 0..h_f {
                        let sy = (y * spec.stride + f_y) as isize - spec.pad as isize;
                        if sy < 0 || sy >= h_i as isize {
                            continue;
                        }
                        for f_x in 0..w_f {
                            let sx = (x * spec.stride + f_x) as isize - spec.pad as isize;
                            if sx < 0 || sx >= w_i as isize {
                                continue;
                            }
                            for c in 0..c_i {
                                let iv = input.at(bi, sy as usize, sx as usize, c) as i32;
                                let fv = filters.at(o, f_y, f_x, c) as i32;
                                acc = acc.wrapping_add(iv * fv);
                            }
                        }
                    }
                    out.set(bi, y, x, o, acc);
                }
            }
        }
    }
    out
}

/// FP32 twin of [`direct_conv_i8_i32`]. Accumulates taps in the same
/// (f_y, f_x, c) order the lowered GEMM consumes im2col rows.
pub fn direct_conv_f32(
    input: &Tensor4D<f32>,
    filters: &Tensor4D<f32>,
    spec: &ConvSpec,
) -> Tensor4D<f32> {
    let (b, h_i, w_i, c_i) = input.dims();
    let (c_o, h_f, w_f, fc_i) = filters.dims();
    assert_eq!((c_o, h_f, w_f, fc_i), (spec.c_o, spec.h_f, spec.w_f, spec.c_i));
    assert_eq!(c_i, spec.c_i);
    let (h_o, w_o) = spec.output_dims(h_i, w_i);
    let mut out = Tensor4D::zeros(b, h_o, w_o, c_o);
    for bi in 0..b {
        for y in 0..h_o {
            for x in 0..w_o {
                for o in 0..c_o {
                    let mut acc = 0f32;
                    for f_y in 0..h_f {
                        let sy = (y * spec.stride + f_y) as isize - spec.pad as isize;
                        if sy < 0 || sy >= h_i as isize {
                            continue;
                        }
                        for f_x in 0..w_f {
                            let sx = (x * spec.stride + f_x) as isize - spec.pad as isize;
                            if sx < 0 || sx >= w_i as isize {
                                continue;
                            }
                            for c in 0..c_i {
                                acc += input.at(bi, sy as usize, sx as usize, c)
                                    * filters.at(o, f_y, f_x, c);
                            }
                        }
                    }
                    out.set(bi, y, x, o, acc);
                }
            }
        }
    }
    out
}

fn conv_output_from_gemm<Acc: Element>(
    c: &Matrix<Acc>,
    b: usize,
    h_o: usize,
    w_o: usize,
    c_o: usize,
) -> Tensor4D<Acc> {
    Tensor4D::from_fn(b, h_o, w_o, c_o, |bi, y, x, o| c.at(o, bi * (h_o * w_o) + y * w_o + x))
}

/// Convolution as one blocked GEMM: flat_filters x im2col(input). The
/// filter operand must already be flattened to c_o x (c_i*h_f*w_f); the
/// GEMM dimensions are asserted against the lowering formula.
pub fn conv_lowered_i8_i32(
    kernel: &dyn IntKernel,
    input: &Tensor4D<i8>,
    flat_filters: &Matrix<i8>,
    spec: &ConvSpec,
    opts: &GemmOptions,
) -> Tensor4D<i32> {
    let (b, h_i, w_i, _) = input.dims();
    let (m, n, k) = spec.lowered_gemm_dims(b, h_i, w_i);
    assert_eq!(
        (flat_filters.rows(), flat_filters.cols()),
        (m, k),
        "flattened filters disagree with lowering dimensions"
    );
    let cols = im2col(input, spec);
    assert_eq!((cols.rows(), cols.cols()), (k, n));
    let mut c = Matrix::zeros(m, n);
    let problem = GemmProblem::infer((m, n), (m, k), (k, n), false, false, false);
    {
        let mut cv = c.view_mut();
        gemm_i8_i32(kernel, &mut cv, &flat_filters.view(), &cols.view(), problem, opts);
    }
    let (h_o, w_o) = spec.output_dims(h_i, w_i);
    conv_output_from_gemm(&c, b, h_o, w_o, spec.c_o)
}

/// FP32 twin of [`conv_lowered_i8_i32`].
pub fn conv_lowered_f32(
    kernel: &dyn F32Kernel,
    input: &Tensor4D<f32>,
    flat_filters: &Matrix<f32>,
    spec: &ConvSpec,
    opts: &GemmOptions,
) -> Tensor4D<f32> {
    let (b, h_i, w_i, _) = input.dims();
    let (m, n, k) = spec.lowered_gemm_dims(b, h_i, w_i);
    assert_eq!(
        (flat_filters.rows(), flat_filters.cols()),
        (m, k),
        "flattened filters disagree with lowering dimensions"
    );
    let cols = im2col(input, spec);
    let mut c = Matrix::zeros(m, n);
    let problem = GemmProblem::infer((m, n), (m, k), (k, n), false, false, false);
    {
        let mut cv = c.view_mut();
        gemm_f32(kernel, &mut cv, &flat_filters.view(), &cols.view(), problem, opts);
    }
    let (h_o, w_o) = spec.output_dims(h_i, w_i);
    conv_output_from_gemm(&c, b, h_o, w_o, spec.c_o)
}
