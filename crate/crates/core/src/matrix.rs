//! Row-major matrix storage, element types, and the naive reference GEMMs.
//!
//! Everything in this crate is checked against the two oracles defined here:
//! `naive_gemm_f32` (fixed i-j-k summation order, so float comparisons are
//! reproducible) and `naive_gemm_i8_i32` (exact integer arithmetic, the
//! bit-for-bit ground truth for every integer backend).

/// Scalar types handled by the kernels: FP32 data, INT8 data, INT32 accumulators.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ElementType {
    F32,
    I8,
    I32,
}

impl ElementType {
    pub fn bits(self) -> usize {
        match self {
            ElementType::F32 | ElementType::I32 => 32,
            ElementType::I8 => 8,
        }
    }

    pub fn size_bytes(self) -> usize {
        self.bits() / 8
    }
}

/// Marker trait tying a Rust scalar to its [`ElementType`] tag.
pub trait Element:
    Copy + Default + PartialEq + std::fmt::Debug + Send + Sync + 'static
{
    const TYPE: ElementType;
}

impl Element for f32 {
    const TYPE: ElementType = ElementType::F32;
}
impl Element for i8 {
    const TYPE: ElementType = ElementType::I8;
}
impl Element for i32 {
    const TYPE: ElementType = ElementType::I32;
}

/// Largest k for which an INT8 GEMM cannot overflow an INT32 accumulator in
/// value terms: k * 127 * 127 <= i32::MAX.
pub const I8_GEMM_MAX_K: usize = 133_152;

fn check_storage(rows: usize, cols: usize, row_stride: usize, len: usize) {
    assert!(row_stride >= cols, "row_stride {row_stride} < cols {cols}");
    let required = if rows == 0 { 0 } else { (rows - 1) * row_stride + cols };
    assert!(
        len >= required,
        "storage too short: {len} elements, need {required} for {rows}x{cols} stride {row_stride}"
    );
}

/// Owned row-major matrix. `row_stride >= cols` so sub-blocks of a larger
/// allocation can be addressed without copying.
#[derive(Clone, Debug)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    row_stride: usize,
    data: Vec<T>,
}

impl<T: Element> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, row_stride: cols, data: vec![T::default(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        check_storage(rows, cols, cols, data.len());
        Matrix { rows, cols, row_stride: cols, data }
    }

    pub fn with_stride(rows: usize, cols: usize, row_stride: usize, data: Vec<T>) -> Self {
        check_storage(rows, cols, row_stride, data.len());
        Matrix { rows, cols, row_stride, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, row_stride: cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.view().at(i, j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.view_mut().set(i, j, v);
    }

    pub fn view(&self) -> MatrixView<'_, T> {
        MatrixView {
            rows: self.rows,
            cols: self.cols,
            row_stride: self.row_stride,
            data: &self.data,
        }
    }

    pub fn view_mut(&mut self) -> MatrixViewMut<'_, T> {
        MatrixViewMut {
            rows: self.rows,
            cols: self.cols,
            row_stride: self.row_stride,
            data: &mut self.data,
        }
    }

    /// Dense row-major copy of the logical contents (stride dropped).
    pub fn to_dense_vec(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows {
            let base = i * self.row_stride;
            out.extend_from_slice(&self.data[base..base + self.cols]);
        }
        out
    }
}

/// Logical equality: same shape and same elements, independent of stride.
impl<T: Element> PartialEq for Matrix<T> {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && (0..self.rows)
                .all(|i| (0..self.cols).all(|j| self.at(i, j) == other.at(i, j)))
    }
}

/// Borrowed read-only view of a row-major block.
#[derive(Clone, Copy, Debug)]
pub struct MatrixView<'a, T> {
    rows: usize,
    cols: usize,
    row_stride: usize,
    data: &'a [T],
}

impl<'a, T: Element> MatrixView<'a, T> {
    pub fn new(rows: usize, cols: usize, row_stride: usize, data: &'a [T]) -> Self {
        check_storage(rows, cols, row_stride, data.len());
        MatrixView { rows, cols, row_stride, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_stride(&self) -> usize {
        self.row_stride
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of {}x{}", self.rows, self.cols);
        self.data[i * self.row_stride + j]
    }
}

/// Borrowed mutable view of a row-major block.
#[derive(Debug)]
pub struct MatrixViewMut<'a, T> {
    rows: usize,
    cols: usize,
    row_stride: usize,
    data: &'a mut [T],
}

impl<'a, T: Element> MatrixViewMut<'a, T> {
    pub fn new(rows: usize, cols: usize, row_stride: usize, data: &'a mut [T]) -> Self {
        check_storage(rows, cols, row_stride, data.len());
        MatrixViewMut { rows, cols, row_stride, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_stride(&self) -> usize {
        self.row_stride
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        debug_assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of {}x{}", self.rows, self.cols);
        self.data[i * self.row_stride + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of {}x{}", self.rows, self.cols);
        self.data[i * self.row_stride + j] = v;
    }

    pub fn fill(&mut self, v: T) {
        for i in 0..self.rows {
            let base = i * self.row_stride;
            self.data[base..base + self.cols].fill(v);
        }
    }

    /// Raw base pointer; used by the blocked driver to hand out disjoint
    /// micro-tiles to worker threads.
    pub fn as_mut_ptr(&mut self) -> *mut T {
        self.data.as_mut_ptr()
    }

    pub fn reborrow(&mut self) -> MatrixViewMut<'_, T> {
        MatrixViewMut {
            rows: self.rows,
            cols: self.cols,
            row_stride: self.row_stride,
            data: self.data,
        }
    }
}

/// A validated GEMM shape: C (m x n) = op(A) * op(B) with optional accumulation
/// into the existing contents of C.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GemmProblem {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub transpose_a: bool,
    pub transpose_b: bool,
    pub accumulate: bool,
}

impl GemmProblem {
    /// Derives (m, n, k) from the operand shapes, panicking on any mismatch.
    pub fn infer(
        c: (usize, usize),
        a: (usize, usize),
        b: (usize, usize),
        transpose_a: bool,
        transpose_b: bool,
        accumulate: bool,
    ) -> GemmProblem {
        let (m, n) = c;
        let (am, ak) = if transpose_a { (a.1, a.0) } else { a };
        let (bk, bn) = if transpose_b { (b.1, b.0) } else { b };
        assert_eq!(am, m, "dimension mismatch: op(A) has {am} rows, C has {m}");
        assert_eq!(bn, n, "dimension mismatch: op(B) has {bn} cols, C has {n}");
        assert_eq!(ak, bk, "dimension mismatch: op(A) has {ak} cols, op(B) has {bk} rows");
        GemmProblem { m, n, k: ak, transpose_a, transpose_b, accumulate }
    }
}

/// Reference FP32 GEMM: C = A*B (or C += A*B). The k-summation runs in a fixed
/// i-j-k loop order so results are reproducible; float comparisons elsewhere
/// are made against exactly this order.
pub fn naive_gemm_f32(
    c: &mut MatrixViewMut<'_, f32>,
    a: &MatrixView<'_, f32>,
    b: &MatrixView<'_, f32>,
    accumulate: bool,
) {
    let (m, n) = (c.rows(), c.cols());
    let k = a.cols();
    assert_eq!(a.rows(), m, "dimension mismatch: A has {} rows, C has {m}", a.rows());
    assert_eq!(b.rows(), k, "dimension mismatch: B has {} rows, A has {k} cols", b.rows());
    assert_eq!(b.cols(), n, "dimension mismatch: B has {} cols, C has {n}", b.cols());
    for i in 0..m {
        for j in 0..n {
            let mut sum = if accumulate { c.at(i, j) } else { 0.0 };
            for p in 0..k {
                sum += a.at(i, p) * b.at(p, j);
            }
            c.set(i, j, sum);
        }
    }
}

/// Reference INT8 -> INT32 GEMM. Products are exact in i32; accumulation uses
/// two's-complement wrapping adds, matching the emulated instruction set.
/// For k <= [`I8_GEMM_MAX_K`] no wrap can occur, so this is the bit-exact
/// ground truth for every integer backend.
pub fn naive_gemm_i8_i32(
    c: &mut MatrixViewMut<'_, i32>,
    a: &MatrixView<'_, i8>,
    b: &MatrixView<'_, i8>,
    accumulate: bool,
) {
    let (m, n) = (c.rows(), c.cols());
    let k = a.cols();
    assert_eq!(a.rows(), m, "dimension mismatch: A has {} rows, C has {m}", a.rows());
    assert_eq!(b.rows(), k, "dimension mismatch: B has {} rows, A has {k} cols", b.rows());
    assert_eq!(b.cols(), n, "dimension mismatch: B has {} cols, C has {n}", b.cols());
    assert!(
        k <= I8_GEMM_MAX_K,
        "k = {k} exceeds the INT32 overflow-safe bound {I8_GEMM_MAX_K}"
    );
    for i in 0..m {
        for j in 0..n {
            let mut sum: i32 = if accumulate { c.at(i, j) } else { 0 };
            for p in 0..k {
                sum = sum.wrapping_add(a.at(i, p) as i32 * b.at(p, j) as i32);
            }
            c.set(i, j, sum);
        }
    }
}

/// Reference FP32 matrix-vector product: y = A*x (or y += A*x).
pub fn naive_matvec_f32(
    y: &mut [f32],
    a: &MatrixView<'_, f32>,
    x: &[f32],
    accumulate: bool,
) {
    assert_eq!(y.len(), a.rows(), "dimension mismatch: y has {} elements, A has {} rows", y.len(), a.rows());
    assert_eq!(x.len(), a.cols(), "dimension mismatch: x has {} elements, A has {} cols", x.len(), a.cols());
    for i in 0..a.rows() {
        let mut sum = if accumulate { y[i] } else { 0.0 };
        for p in 0..a.cols() {
            sum += a.at(i, p) * x[p];
        }
        y[i] = sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_f32_scalar_case() {
        let a = Matrix::from_vec(1, 1, vec![2.0]);
        let b = Matrix::from_vec(1, 1, vec![3.0]);
        let mut c = Matrix::zeros(1, 1);
        naive_gemm_f32(&mut c.view_mut(), &a.view(), &b.view(), false);
        assert_eq!(c.at(0, 0), 6.0);
    }

    #[test]
    fn gemm_f32_identity_returns_b_exactly() {
        let a = Matrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.0 });
        let b = Matrix::from_fn(4, 4, |i, j| (i * 4 + j) as f32 * 0.375 - 2.0);
        let mut c = Matrix::zeros(4, 4);
        naive_gemm_f32(&mut c.view_mut(), &a.view(), &b.view(), false);
        // 1.0*x + 0.0*y is exact in IEEE arithmetic, so this holds bitwise.
        assert_eq!(c, b);
    }

    #[test]
    fn gemm_f32_all_ones() {
        let a = Matrix::from_fn(3, 3, |_, _| 1.0f32);
        let b = a.clone();
        let mut c = Matrix::zeros(3, 3);
        naive_gemm_f32(&mut c.view_mut(), &a.view(), &b.view(), false);
        assert!(c.to_dense_vec().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn gemm_f32_fresh_equals_accumulate_on_zeros() {
        let a = Matrix::from_fn(5, 3, |i, j| (i as f32 - j as f32) * 0.7);
        let b = Matrix::from_fn(3, 4, |i, j| (i * j) as f32 * 0.3 - 1.0);
        let mut c1 = Matrix::zeros(5, 4);
        let mut c2 = Matrix::zeros(5, 4);
        naive_gemm_f32(&mut c1.view_mut(), &a.view(), &b.view(), false);
        naive_gemm_f32(&mut c2.view_mut(), &a.view(), &b.view(), true);
        assert_eq!(c1.to_dense_vec(), c2.to_dense_vec());
    }

    #[test]
    fn gemm_i8_zero_matrices_leave_accumulator_untouched() {
        let a = Matrix::<i8>::zeros(3, 5);
        let b = Matrix::<i8>::zeros(5, 2);
        let mut c = Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as i32 - 3);
        let before = c.clone();
        naive_gemm_i8_i32(&mut c.view_mut(), &a.view(), &b.view(), true);
        assert_eq!(c, before);
    }

    #[test]
    fn gemm_i8_extreme_negative_products() {
        // 2 * (-128)^2 = 32768: one step beyond i16 range, comfortably in i32.
        let a = Matrix::from_vec(1, 2, vec![-128i8, -128]);
        let b = Matrix::from_vec(2, 1, vec![-128i8, -128]);
        let mut c = Matrix::zeros(1, 1);
        naive_gemm_i8_i32(&mut c.view_mut(), &a.view(), &b.view(), false);
        assert_eq!(c.at(0, 0), 32768);
    }

    #[test]
    #[should_panic(expected = "overflow-safe bound")]
    fn gemm_i8_rejects_k_beyond_safe_bound() {
        let k = I8_GEMM_MAX_K + 1;
        let a = Matrix::<i8>::zeros(1, k);
        let b = Matrix::<i8>::zeros(k, 1);
        let mut c = Matrix::zeros(1, 1);
        naive_gemm_i8_i32(&mut c.view_mut(), &a.view(), &b.view(), false);
    }

    #[test]
    #[should_panic(expected = "dimension mismatch")]
    fn gemm_rejects_inner_dim_mismatch() {
        let a = Matrix::<f32>::zeros(2, 3);
        let b = Matrix::<f32>::zeros(4, 2);
        let mut c = Matrix::zeros(2, 2);
        naive_gemm_f32(&mut c.view_mut(), &a.view(), &b.view(), false);
    }

    #[test]
    fn matvec_identity_and_ones() {
        let eye = Matrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.0 });
        let x = [3.0f32, -1.0, 0.5, 2.0];
        let mut y = [0.0f32; 4];
        naive_matvec_f32(&mut y, &eye.view(), &x, false);
        assert_eq!(y, x);

        let ones = Matrix::from_fn(3, 5, |_, _| 1.0f32);
        let xs = [1.0f32; 5];
        let mut ys = [0.0f32; 3];
        naive_matvec_f32(&mut ys, &ones.view(), &xs, false);
        assert!(ys.iter().all(|&v| v == 5.0));
    }

    #[test]
    fn matvec_agrees_with_gemm_n1() {
        let a = Matrix::from_fn(5, 7, |i, j| (i as f32 * 1.25 - j as f32) * 0.5);
        let x: Vec<f32> = (0..7).map(|i| i as f32 * 0.25 - 1.0).collect();
        let mut y = [0.0f32; 5];
        naive_matvec_f32(&mut y, &a.view(), &x, false);

        let xm = Matrix::from_vec(7, 1, x);
        let mut c = Matrix::zeros(5, 1);
        naive_gemm_f32(&mut c.view_mut(), &a.view(), &xm.view(), false);
        assert_eq!(c.to_dense_vec(), y.to_vec());
    }

    #[test]
    fn strided_views_address_sub_blocks() {
        // 2x2 block at (1,1) of a 4x4 backing store.
        let data: Vec<i32> = (0..16).collect();
        let v = MatrixView::new(2, 2, 4, &data[5..]);
        assert_eq!(v.at(0, 0), 5);
        assert_eq!(v.at(0, 1), 6);
        assert_eq!(v.at(1, 0), 9);
        assert_eq!(v.at(1, 1), 10);
    }

    #[test]
    fn problem_inference_honors_transposes() {
        let p = GemmProblem::infer((3, 4), (5, 3), (4, 5), true, true, false);
        assert_eq!((p.m, p.n, p.k), (3, 4, 5));
    }

    #[test]
    #[should_panic(expected = "storage too short")]
    fn view_rejects_short_storage() {
        let data = [0.0f32; 5];
        let _ = MatrixView::new(2, 3, 3, &data);
    }
}
