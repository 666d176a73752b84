//! Micro-kernels: the innermost GEMM loop, one per emulated backend.
//!
//! Every kernel consumes one packed A panel and one packed B panel (see
//! [`crate::packing`]) and accumulates an mr x nr tile of C. The common
//! template: load the live part of the C tile into an accumulator block,
//! loop over k-groups of the panels, store the live part back. Edge tiles
//! are handled by zero-padded accumulators plus masked write-back, so the
//! arithmetic inside the loop never branches on tile shape.

use crate::matrix::{Element, ElementType, MatrixViewMut};
use crate::packing::{
    packed_a_offset_in_panel, packed_b_offset_in_panel, PackLayoutA, PackLayoutB,
};

mod engines;
mod f32_axpy;
mod neon;
mod sve;

pub use engines::{AmxTile16x16, ImeMadot4x8, SmeMopa};
pub use f32_axpy::Fp32Axpy4x8;
pub use neon::{NeonDot4x16, NeonMull2x8};
pub use sve::SveDot;

/// Static description of a micro-kernel's geometry and register footprint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MicroKernelSpec {
    pub name: &'static str,
    /// C tile rows.
    pub mr: usize,
    /// C tile columns.
    pub nr: usize,
    /// k-values consumed per packed k-group.
    pub kr: usize,
    /// B-panel k-interleave factor (divides kr).
    pub t: usize,
    pub in_elem: ElementType,
    pub acc_elem: ElementType,
    /// Architectural vector/tile registers the kernel keeps live.
    pub register_budget: usize,
    /// Size of the register file those come from.
    pub register_file: usize,
}

impl MicroKernelSpec {
    pub fn layout_a(&self) -> PackLayoutA {
        PackLayoutA::new(self.mr, self.kr)
    }

    pub fn layout_b(&self) -> PackLayoutB {
        PackLayoutB::new(self.nr, self.kr, self.t)
    }
}

/// Mutable view of one mr x nr tile of C, possibly clipped at the matrix
/// edge. Kernels read/write only the live `live_rows x live_cols` region.
///
/// Holds a raw pointer so the blocked driver can hand element-disjoint tiles
/// of one C buffer to concurrent workers; all accesses are bounds-checked
/// against the live region.
pub struct MicroTileMut<'a, T> {
    ptr: *mut T,
    row_stride: usize,
    live_rows: usize,
    live_cols: usize,
    _lt: std::marker::PhantomData<&'a mut T>,
}

impl<'a, T: Element> MicroTileMut<'a, T> {
    /// Tile at (i0, j0) of `view`, clipped to the view's bounds.
    pub fn from_view(
        view: &'a mut MatrixViewMut<'_, T>,
        i0: usize,
        j0: usize,
        mr: usize,
        nr: usize,
    ) -> Self {
        assert!(i0 < view.rows() && j0 < view.cols(), "tile origin ({i0},{j0}) outside C");
        let live_rows = (view.rows() - i0).min(mr);
        let live_cols = (view.cols() - j0).min(nr);
        let row_stride = view.row_stride();
        let ptr = unsafe { view.as_mut_ptr().add(i0 * row_stride + j0) };
        MicroTileMut { ptr, row_stride, live_rows, live_cols, _lt: std::marker::PhantomData }
    }

    /// # Safety
    ///
    /// `ptr` must stay valid for the tile's lifetime, the live region must lie
    /// inside one allocation, and no other reference may touch those elements
    /// while the tile exists.
    pub unsafe fn from_raw_parts(
        ptr: *mut T,
        row_stride: usize,
        live_rows: usize,
        live_cols: usize,
    ) -> Self {
        MicroTileMut { ptr, row_stride, live_rows, live_cols, _lt: std::marker::PhantomData }
    }

    pub fn live_rows(&self) -> usize {
        self.live_rows
    }

    pub fn live_cols(&self) -> usize {
        self.live_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(i < self.live_rows && j < self.live_cols, "tile read ({i},{j}) outside live region");
        unsafe { *self.ptr.add(i * self.row_stride + j) }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(i < self.live_rows && j < self.live_cols, "tile write ({i},{j}) outside live region");
        unsafe { *self.ptr.add(i * self.row_stride + j) = v };
    }

    /// Copies the live region into a row-major mr x nr accumulator buffer,
    /// zeroing the padded remainder.
    pub fn load_padded(&self, buf: &mut [T], mr: usize, nr: usize) {
        assert_eq!(buf.len(), mr * nr);
        assert!(self.live_rows <= mr && self.live_cols <= nr);
        buf.fill(T::default());
        for i in 0..self.live_rows {
            for j in 0..self.live_cols {
                buf[i * nr + j] = self.get(i, j);
            }
        }
    }

    /// Writes the live region back from a row-major accumulator buffer with
    /// row length `nr`; padded lanes are discarded.
    pub fn store_live(&mut self, buf: &[T], nr: usize) {
        assert!(self.live_cols <= nr && self.live_rows * nr <= buf.len());
        for i in 0..self.live_rows {
            for j in 0..self.live_cols {
                self.set(i, j, buf[i * nr + j]);
            }
        }
    }
}

/// INT8 x INT8 -> INT32 micro-kernel. `a_panel` / `b_panel` are single packed
/// panels of `mr * kc_pad` / `nr * kc_pad` elements; `kc` is the logical
/// depth (the zero padding up to kc_pad is arithmetically neutral).
pub trait IntKernel: Send + Sync {
    fn spec(&self) -> MicroKernelSpec;
    fn run(&self, cr: &mut MicroTileMut<'_, i32>, a_panel: &[i8], b_panel: &[i8], kc: usize);
}

/// FP32 micro-kernel; same panel contract as [`IntKernel`].
pub trait F32Kernel: Send + Sync {
    fn spec(&self) -> MicroKernelSpec;
    fn run(&self, cr: &mut MicroTileMut<'_, f32>, a_panel: &[f32], b_panel: &[f32], kc: usize);
}

/// A registered backend: either an integer kernel or the FP32 one.
#[derive(Clone, Copy)]
pub enum BackendKernel {
    Int(&'static dyn IntKernel),
    F32(&'static dyn F32Kernel),
}

impl BackendKernel {
    pub fn spec(&self) -> MicroKernelSpec {
        match self {
            BackendKernel::Int(k) => k.spec(),
            BackendKernel::F32(k) => k.spec(),
        }
    }

    pub fn name(&self) -> &'static str {
        self.spec().name
    }
}

pub static FP32_AXPY_4X8: Fp32Axpy4x8 = Fp32Axpy4x8;
pub static NEON_MULL_2X8: NeonMull2x8 = NeonMull2x8;
pub static NEON_DOT_4X16: NeonDot4x16 = NeonDot4x16;
pub static SVE_DOT_128: SveDot = SveDot::new(128);
pub static SVE_DOT_256: SveDot = SveDot::new(256);
pub static SVE_DOT_512: SveDot = SveDot::new(512);
pub static IME_MADOT_4X8: ImeMadot4x8 = ImeMadot4x8;
pub static AMX_TILE_16X16: AmxTile16x16 = AmxTile16x16;
pub static SME_MOPA_512: SmeMopa = SmeMopa::new(512);

static BACKENDS: [BackendKernel; 9] = [
    BackendKernel::F32(&FP32_AXPY_4X8),
    BackendKernel::Int(&NEON_MULL_2X8),
    BackendKernel::Int(&NEON_DOT_4X16),
    BackendKernel::Int(&SVE_DOT_128),
    BackendKernel::Int(&SVE_DOT_256),
    BackendKernel::Int(&SVE_DOT_512),
    BackendKernel::Int(&IME_MADOT_4X8),
    BackendKernel::Int(&AMX_TILE_16X16),
    BackendKernel::Int(&SME_MOPA_512),
];

/// All registered backends, FP32 first, integer backends after.
pub fn all_backends() -> &'static [BackendKernel] {
    &BACKENDS
}

pub fn find_backend(name: &str) -> Option<BackendKernel> {
    all_backends().iter().copied().find(|b| b.name() == name)
}

pub fn integer_backends() -> impl Iterator<Item = &'static dyn IntKernel> {
    all_backends().iter().filter_map(|b| match b {
        BackendKernel::Int(k) => Some(*k),
        BackendKernel::F32(_) => None,
    })
}

/// Generic scalar fallback: computes the same tile as any integer kernel by
/// addressing the packed panels through the layout formulas instead of the
/// backend's vector load sequence. Used as the second route in differential
/// tests.
pub fn scalar_ref_i8(
    cr: &mut MicroTileMut<'_, i32>,
    a_panel: &[i8],
    b_panel: &[i8],
    kc: usize,
    la: PackLayoutA,
    lb: PackLayoutB,
) {
    for i in 0..cr.live_rows() {
        for j in 0..cr.live_cols() {
            let mut acc = cr.get(i, j);
            for k in 0..kc {
                let a = a_panel[packed_a_offset_in_panel(la, i, k)] as i32;
                let b = b_panel[packed_b_offset_in_panel(lb, k, j)] as i32;
                acc = acc.wrapping_add(a * b);
            }
            cr.set(i, j, acc);
        }
    }
}

/// FP32 twin of [`scalar_ref_i8`]; accumulates in ascending k order.
pub fn scalar_ref_f32(
    cr: &mut MicroTileMut<'_, f32>,
    a_panel: &[f32],
    b_panel: &[f32],
    kc: usize,
    la: PackLayoutA,
    lb: PackLayoutB,
) {
    for i in 0..cr.live_rows() {
        for j in 0..cr.live_cols() {
            let mut acc = cr.get(i, j);
            for k in 0..kc {
                acc += a_panel[packed_a_offset_in_panel(la, i, k)]
                    * b_panel[packed_b_offset_in_panel(lb, k, j)];
            }
            cr.set(i, j, acc);
        }
    }
}

/// The element runs a kernel loads from its panels during one k-group:
/// `(offset, len)` pairs into the A resp. B panel, in issue order.
/// Mirrors each kernel's load choreography; the packing tests replay these
/// to prove every load is stride-1 and the group is covered without gaps.
#[derive(Clone, Debug)]
pub struct LoadSchedule {
    pub a_loads: Vec<(usize, usize)>,
    pub b_loads: Vec<(usize, usize)>,
}

pub fn load_schedule(spec: &MicroKernelSpec) -> LoadSchedule {
    let (mr, nr, kr, t) = (spec.mr, spec.nr, spec.kr, spec.t);
    match spec.name {
        // One column of A (mr values), then the B row in register-width runs.
        "fp32-axpy-4x8" => LoadSchedule {
            a_loads: vec![(0, mr)],
            b_loads: vec![(0, 4), (4, 4)],
        },
        // Two 8-value half-rows per A row; B column pairs, one 8-value run
        // per k-half per column.
        "neon-mull-2x8" => LoadSchedule {
            a_loads: (0..mr).flat_map(|i| [(i * kr, 8), (i * kr + 8, 8)]).collect(),
            b_loads: (0..nr / 2)
                .flat_map(|p| (0..4).map(move |q| (p * 2 * t + q * 8, 8)))
                .collect(),
        },
        // Full kr-deep rows of A; per lane, nr*4 bytes of B in 16-byte runs.
        "neon-dot-4x16" => LoadSchedule {
            a_loads: (0..mr).map(|i| (i * kr, kr)).collect(),
            b_loads: (0..kr / 4)
                .flat_map(|s| (0..nr / 4).map(move |r| (s * nr * 4 + r * 16, 16)))
                .collect(),
        },
        "sve-dot-128" | "sve-dot-256" | "sve-dot-512" => LoadSchedule {
            a_loads: (0..mr).map(|i| (i * kr, kr)).collect(),
            b_loads: (0..kr / 4)
                .flat_map(|s| (0..2).map(move |h| (s * nr * 4 + h * (nr * 2), nr * 2)))
                .collect(),
        },
        // Whole 4x8 A tile in one run; B as two 8x4 column-major halves.
        "ime-madot-4x8" => LoadSchedule {
            a_loads: vec![(0, mr * kr)],
            b_loads: vec![(0, 32), (32, 32)],
        },
        // Whole 1 KiB tiles.
        "amx-tile-16x16" => LoadSchedule {
            a_loads: vec![(0, mr * kr)],
            b_loads: vec![(0, nr * kr)],
        },
        // One full-width register per operand per group.
        "sme-mopa-512" => LoadSchedule {
            a_loads: vec![(0, mr * kr)],
            b_loads: vec![(0, nr * kr)],
        },
        other => panic!("no load schedule recorded for backend {other}"),
    }
}

/// Exact arithmetic intensity of an mr x nr x kc micro-tile update:
/// 2*mr*nr*kc multiply-adds over (2*mr*nr + mr*kc + kc*nr) elements moved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Intensity {
    pub ops: u64,
    pub traffic_elems: u64,
}

impl Intensity {
    pub fn value(self) -> f64 {
        self.ops as f64 / self.traffic_elems as f64
    }
}

pub fn arithmetic_intensity(mr: usize, nr: usize, kc: usize) -> Intensity {
    let (mr, nr, kc) = (mr as u64, nr as u64, kc as u64);
    Intensity { ops: 2 * mr * nr * kc, traffic_elems: 2 * mr * nr + mr * kc + kc * nr }
}

/// No (mr, nr) pair fits the register budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InfeasibleBudget {
    pub register_count: usize,
    pub vl_bits: usize,
}

impl std::fmt::Display for InfeasibleBudget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "no micro-tile fits {} registers at {} bits",
            self.register_count, self.vl_bits
        )
    }
}

impl std::error::Error for InfeasibleBudget {}

/// Registers needed for an mr x nr tile: the C accumulators (32-bit lanes)
/// plus one column of A and one row of B in input precision.
pub fn microtile_register_cost(mr: usize, nr: usize, vl_bits: usize, in_elem: ElementType) -> usize {
    let acc_regs = (mr * nr * 32).div_ceil(vl_bits);
    let a_regs = (mr * in_elem.bits()).div_ceil(vl_bits);
    let b_regs = (nr * in_elem.bits()).div_ceil(vl_bits);
    acc_regs + a_regs + b_regs
}

/// Picks the (mr, nr) in [1,16]^2 that maximizes asymptotic arithmetic
/// intensity 2*mr*nr/(mr+nr) (the kc -> inf limit) subject to the register
/// budget. Ties prefer mr <= nr, then smaller mr, then smaller nr.
pub fn select_microtile_dims(
    register_count: usize,
    vl_bits: usize,
    in_elem: ElementType,
) -> Result<(usize, usize), InfeasibleBudget> {
    assert!(register_count >= 4, "register_count {register_count} < 4");
    assert!(
        crate::isa::SCALABLE_WIDTHS.contains(&vl_bits) || vl_bits == 64,
        "unsupported vector width {vl_bits}"
    );
    let mut best: Option<(usize, usize)> = None;
    for mr in 1..=16 {
        for nr in 1..=16 {
            if microtile_register_cost(mr, nr, vl_bits, in_elem) > register_count {
                continue;
            }
            let better = match best {
                None => true,
                Some((bm, bn)) => {
                    // Compare mr*nr/(mr+nr) exactly by cross-multiplication.
                    let lhs = (mr * nr * (bm + bn)) as u128;
                    let rhs = (bm * bn * (mr + nr)) as u128;
                    if lhs != rhs {
                        lhs > rhs
                    } else {
                        ((mr <= nr), std::cmp::Reverse(mr), std::cmp::Reverse(nr))
                            > ((bm <= bn), std::cmp::Reverse(bm), std::cmp::Reverse(bn))
                    }
                }
            };
            if better {
                best = Some((mr, nr));
            }
        }
    }
    best.ok_or(InfeasibleBudget { register_count, vl_bits })
}
