//! Packed operand layouts for the blocked GEMM.
//!
//! Both operands are repacked into contiguous panel buffers before the
//! micro-kernel runs, and a single pair of address functions describes every
//! backend's layout:
//!
//! * A blocks are split into row panels of height `mr`. Within a panel,
//!   k-values are grouped by `kr`; inside a group each row's `kr` values are
//!   contiguous:  offset = (k/kr)*(mr*kr) + (i%mr)*kr + (k%kr).
//!   With kr = 1 this degenerates to the classic column-of-mr layout.
//!
//! * B blocks are split into column panels of width `nr`. k-groups of `kr`
//!   are further interleaved in sub-groups of `t` (t divides kr), so that a
//!   micro-kernel consuming `t` k-values per column reads them stride-1:
//!   offset = (k/kr)*(nr*kr) + ((k%kr)/t)*(nr*t) + (j%nr)*t + (k%t).
//!   t = kr makes each column's k-group contiguous; t = 1 gives a plain
//!   row-of-nr layout.
//!
//! Ragged edges are zero-padded: panel heights/widths are always full and kc
//! is padded to a multiple of kr, so micro-kernels never branch on edges.
//! Zeros are multiplicatively neutral, which keeps padded results bit-exact.
//! Transposition is absorbed here — kernels never see a transpose flag.

use crate::matrix::{Element, Matrix, MatrixView};

/// A-operand layout: row-panel height `mr`, k-group depth `kr`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackLayoutA {
    pub mr: usize,
    pub kr: usize,
}

impl PackLayoutA {
    pub fn new(mr: usize, kr: usize) -> Self {
        assert!(mr > 0 && kr > 0, "layout dims must be positive: mr={mr} kr={kr}");
        PackLayoutA { mr, kr }
    }
}

/// B-operand layout: column-panel width `nr`, k-group depth `kr`,
/// k-interleave factor `t` (must divide `kr`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackLayoutB {
    pub nr: usize,
    pub kr: usize,
    pub t: usize,
}

impl PackLayoutB {
    pub fn new(nr: usize, kr: usize, t: usize) -> Self {
        assert!(nr > 0 && kr > 0 && t > 0, "layout dims must be positive: nr={nr} kr={kr} t={t}");
        assert_eq!(kr % t, 0, "interleave factor t={t} must divide kr={kr}");
        PackLayoutB { nr, kr, t }
    }
}

/// kc padded up to a whole number of k-groups.
pub fn pad_kc(kc: usize, kr: usize) -> usize {
    kc.div_ceil(kr) * kr
}

/// Buffer offset of logical element (i, k) of an A block packed with `la`,
/// where i indexes block rows and k indexes the block's k extent.
#[inline]
pub fn packed_a_offset(la: PackLayoutA, kc_pad: usize, i: usize, k: usize) -> usize {
    let panel = i / la.mr;
    panel * (la.mr * kc_pad) + packed_a_offset_in_panel(la, i % la.mr, k)
}

/// Offset within a single A panel for local row `i` (0 <= i < mr).
#[inline]
pub fn packed_a_offset_in_panel(la: PackLayoutA, i: usize, k: usize) -> usize {
    debug_assert!(i < la.mr);
    (k / la.kr) * (la.mr * la.kr) + i * la.kr + (k % la.kr)
}

/// Buffer offset of logical element (k, j) of a B block packed with `lb`,
/// where j indexes block columns.
#[inline]
pub fn packed_b_offset(lb: PackLayoutB, kc_pad: usize, k: usize, j: usize) -> usize {
    let panel = j / lb.nr;
    panel * (lb.nr * kc_pad) + packed_b_offset_in_panel(lb, k, j % lb.nr)
}

/// Offset within a single B panel for local column `j` (0 <= j < nr).
#[inline]
pub fn packed_b_offset_in_panel(lb: PackLayoutB, k: usize, j: usize) -> usize {
    debug_assert!(j < lb.nr);
    (k / lb.kr) * (lb.nr * lb.kr)
        + ((k % lb.kr) / lb.t) * (lb.nr * lb.t)
        + j * lb.t
        + (k % lb.t)
}

/// A packed A block: ceil(mc/mr) zero-padded panels of mr x kc_pad elements.
#[derive(Clone, Debug)]
pub struct PackedA<T> {
    layout: PackLayoutA,
    rows: usize,
    kc: usize,
    kc_pad: usize,
    buf: Vec<T>,
}

impl<T: Element> PackedA<T> {
    pub fn new_zeroed(layout: PackLayoutA, rows: usize, kc: usize) -> Self {
        assert!(rows > 0 && kc > 0, "packed block must be non-empty");
        let kc_pad = pad_kc(kc, layout.kr);
        let panels = rows.div_ceil(layout.mr).max(1);
        PackedA {
            layout,
            rows,
            kc,
            kc_pad,
            buf: vec![T::default(); panels * layout.mr * kc_pad],
        }
    }

    pub fn layout(&self) -> PackLayoutA {
        self.layout
    }

    /// Logical block rows (mc), before padding.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn kc(&self) -> usize {
        self.kc
    }

    pub fn kc_pad(&self) -> usize {
        self.kc_pad
    }

    pub fn panel_count(&self) -> usize {
        self.buf.len() / self.panel_len()
    }

    pub fn panel_len(&self) -> usize {
        self.layout.mr * self.kc_pad
    }

    pub fn panel(&self, p: usize) -> &[T] {
        let len = self.panel_len();
        &self.buf[p * len..(p + 1) * len]
    }

    /// Mutable panel slices, for partitioned (multi-worker) packing.
    pub fn panels_mut(&mut self) -> std::slice::ChunksMut<'_, T> {
        let len = self.panel_len();
        self.buf.chunks_mut(len)
    }

    pub fn buf(&self) -> &[T] {
        &self.buf
    }

    /// Logical element (i, k) of the block, including padding reads.
    pub fn at(&self, i: usize, k: usize) -> T {
        self.buf[packed_a_offset(self.layout, self.kc_pad, i, k)]
    }

    /// Recovers the logical (rows x kc) block, dropping all padding.
    pub fn unpack(&self) -> Matrix<T> {
        Matrix::from_fn(self.rows, self.kc, |i, k| self.at(i, k))
    }
}

/// A packed B block: ceil(nc/nr) zero-padded panels of nr x kc_pad elements.
#[derive(Clone, Debug)]
pub struct PackedB<T> {
    layout: PackLayoutB,
    cols: usize,
    kc: usize,
    kc_pad: usize,
    buf: Vec<T>,
}

impl<T: Element> PackedB<T> {
    pub fn new_zeroed(layout: PackLayoutB, cols: usize, kc: usize) -> Self {
        assert!(cols > 0 && kc > 0, "packed block must be non-empty");
        let kc_pad = pad_kc(kc, layout.kr);
        let panels = cols.div_ceil(layout.nr).max(1);
        PackedB {
            layout,
            cols,
            kc,
            kc_pad,
            buf: vec![T::default(); panels * layout.nr * kc_pad],
        }
    }

    pub fn layout(&self) -> PackLayoutB {
        self.layout
    }

    /// Logical block columns (nc), before padding.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kc(&self) -> usize {
        self.kc
    }

    pub fn kc_pad(&self) -> usize {
        self.kc_pad
    }

    pub fn panel_count(&self) -> usize {
        self.buf.len() / self.panel_len()
    }

    pub fn panel_len(&self) -> usize {
        self.layout.nr * self.kc_pad
    }

    pub fn panel(&self, p: usize) -> &[T] {
        let len = self.panel_len();
        &self.buf[p * len..(p + 1) * len]
    }

    pub fn buf(&self) -> &[T] {
        &self.buf
    }

    /// Logical element (k, j) of the block, including padding reads.
    pub fn at(&self, k: usize, j: usize) -> T {
        self.buf[packed_b_offset(self.layout, self.kc_pad, k, j)]
    }

    /// Recovers the logical (kc x cols) block, dropping all padding.
    pub fn unpack(&self) -> Matrix<T> {
        Matrix::from_fn(self.kc, self.cols, |k, j| self.at(k, j))
    }
}

/// Reads logical A(ic+i, pc+k) of the (possibly transposed) operand.
#[inline]
fn src_a<T: Element>(src: &MatrixView<'_, T>, transpose: bool, r: usize, c: usize) -> T {
    if transpose {
        src.at(c, r)
    } else {
        src.at(r, c)
    }
}

fn check_block_a<T: Element>(
    src: &MatrixView<'_, T>,
    transpose: bool,
    ic: usize,
    pc: usize,
    mc: usize,
    kc: usize,
) {
    let (rows, cols) = if transpose { (src.cols(), src.rows()) } else { (src.rows(), src.cols()) };
    assert!(
        ic + mc <= rows && pc + kc <= cols,
        "A block ({ic}+{mc}, {pc}+{kc}) exceeds operand {rows}x{cols}"
    );
}

/// Packs the mc x kc block of A at (ic, pc) into panel layout `la`.
/// With `transpose`, element (ic+i, pc+k) is read from src(pc+k, ic+i).
pub fn pack_a<T: Element>(
    src: &MatrixView<'_, T>,
    ic: usize,
    pc: usize,
    mc: usize,
    kc: usize,
    la: PackLayoutA,
    transpose: bool,
) -> PackedA<T> {
    check_block_a(src, transpose, ic, pc, mc, kc);
    let mut packed = PackedA::new_zeroed(la, mc, kc);
    let kc_pad = packed.kc_pad;
    for (p, panel) in packed.buf.chunks_mut(la.mr * kc_pad).enumerate() {
        pack_a_panel(panel, src, ic, pc, mc, kc, la, transpose, p);
    }
    packed
}

/// Fills one zero-initialized A panel (`panel.len() == mr * kc_pad`).
/// Exposed so the blocked driver can partition panel packing across workers.
pub fn pack_a_panel<T: Element>(
    panel: &mut [T],
    src: &MatrixView<'_, T>,
    ic: usize,
    pc: usize,
    mc: usize,
    kc: usize,
    la: PackLayoutA,
    transpose: bool,
    panel_index: usize,
) {
    debug_assert_eq!(panel.len(), la.mr * pad_kc(kc, la.kr));
    let i0 = panel_index * la.mr;
    let live_rows = mc.saturating_sub(i0).min(la.mr);
    for i in 0..live_rows {
        for k in 0..kc {
            panel[packed_a_offset_in_panel(la, i, k)] =
                src_a(src, transpose, ic + i0 + i, pc + k);
        }
    }
}

/// Packs the kc x nc block of B at (pc, jc) into panel layout `lb`.
/// With `transpose`, element (pc+k, jc+j) is read from src(jc+j, pc+k).
pub fn pack_b<T: Element>(
    src: &MatrixView<'_, T>,
    pc: usize,
    jc: usize,
    kc: usize,
    nc: usize,
    lb: PackLayoutB,
    transpose: bool,
) -> PackedB<T> {
    let (rows, cols) = if transpose { (src.cols(), src.rows()) } else { (src.rows(), src.cols()) };
    assert!(
        pc + kc <= rows && jc + nc <= cols,
        "B block ({pc}+{kc}, {jc}+{nc}) exceeds operand {rows}x{cols}"
    );
    let mut packed = PackedB::new_zeroed(lb, nc, kc);
    let kc_pad = packed.kc_pad;
    for (p, panel) in packed.buf.chunks_mut(lb.nr * kc_pad).enumerate() {
        let j0 = p * lb.nr;
        let live_cols = nc.saturating_sub(j0).min(lb.nr);
        for k in 0..kc {
            for j in 0..live_cols {
                let v = if transpose {
                    src.at(jc + j0 + j, pc + k)
                } else {
                    src.at(pc + k, jc + j0 + j)
                };
                panel[packed_b_offset_in_panel(lb, k, j)] = v;
            }
        }
    }
    packed
}
