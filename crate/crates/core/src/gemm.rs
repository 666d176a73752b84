//! Blocked GEMM driver: the five cache-blocking loops around a micro-kernel.
//!
//! Loop nest, outermost first: jc over N in steps of nc, pc over K in steps
//! of kc, ic over M in steps of mc. Each (jc, pc) packs one kc x nc block of
//! B; each (ic) inside it packs one mc x kc block of A; the two inner loops
//! (jr over B panels, ir over A panels) then run the micro-kernel once per
//! mr x nr tile of C. Accumulation over pc blocks happens directly in C, so
//! a fresh (non-accumulating) product zeroes C once up front.
//!
//! With `workers > 1` the driver keeps the same loop structure and splits
//! two phases per (jc, pc, ic) iteration across scoped threads: A panels are
//! packed in parallel (panel-disjoint), then jr strips of C are updated in
//! parallel (column-disjoint). Every k contribution to a given C element is
//! still applied in the same order by exactly one worker per strip, so
//! results are identical for any worker count — bit for bit, including FP32.

use crate::matrix::{Element, GemmProblem, MatrixView, MatrixViewMut, I8_GEMM_MAX_K};
use crate::packing::{pack_a_panel, pack_b, PackedA, PackedB};
use crate::ukernel::{F32Kernel, IntKernel, MicroKernelSpec, MicroTileMut};

/// Cache capacities in bytes used to derive blocking parameters. `l3 = 0`
/// models a machine without a shared last-level cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheModel {
    pub l1: usize,
    pub l2: usize,
    pub l3: usize,
}

impl CacheModel {
    pub const DEFAULT: CacheModel =
        CacheModel { l1: 32 * 1024, l2: 1024 * 1024, l3: 32 * 1024 * 1024 };
}

/// Block sizes for the three cache-blocking loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockingParams {
    pub mc: usize,
    pub nc: usize,
    pub kc: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheTooSmall {
    pub level: &'static str,
    pub needed_bytes: usize,
    pub have_bytes: usize,
}

impl std::fmt::Display for CacheTooSmall {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "cache too small: {} must hold {} bytes at half capacity, has {}",
            self.level, self.needed_bytes, self.have_bytes
        )
    }
}

impl std::error::Error for CacheTooSmall {}

/// Derives blocking parameters from cache sizes: kc fills half of L1 with
/// one (mr + nr) x kc operand slice, mc fills half of L2 with the packed A
/// block, nc fills half of L3 with the packed B block (8 panels when there
/// is no L3). Each is the largest multiple of the micro-tile dimension that
/// fits; it is an error if even a single tile's working set does not fit.
pub fn default_blocking(
    cache: &CacheModel,
    spec: &MicroKernelSpec,
) -> Result<BlockingParams, CacheTooSmall> {
    let bytes = spec.in_elem.size_bytes();
    let kc_raw = (cache.l1 / 2) / ((spec.mr + spec.nr) * bytes);
    let kc = kc_raw / spec.kr * spec.kr;
    if kc == 0 {
        return Err(CacheTooSmall {
            level: "L1",
            needed_bytes: (spec.mr + spec.nr) * spec.kr * bytes,
            have_bytes: cache.l1 / 2,
        });
    }
    let mc = ((cache.l2 / 2) / (kc * bytes)) / spec.mr * spec.mr;
    if mc == 0 {
        return Err(CacheTooSmall {
            level: "L2",
            needed_bytes: spec.mr * kc * bytes,
            have_bytes: cache.l2 / 2,
        });
    }
    let nc = if cache.l3 == 0 {
        8 * spec.nr
    } else {
        let nc = ((cache.l3 / 2) / (kc * bytes)) / spec.nr * spec.nr;
        if nc == 0 {
            return Err(CacheTooSmall {
                level: "L3",
                needed_bytes: spec.nr * kc * bytes,
                have_bytes: cache.l3 / 2,
            });
        }
        nc
    };
    Ok(BlockingParams { mc, nc, kc })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GemmOptions {
    pub blocking: BlockingParams,
    pub workers: usize,
}

impl Default for GemmOptions {
    /// 64 is a multiple of every registered kernel's mr, nr and kr, so the
    /// default blocking never pads interior blocks for any backend.
    fn default() -> Self {
        GemmOptions { blocking: BlockingParams { mc: 64, nc: 64, kc: 64 }, workers: 1 }
    }
}

/// Receives one callback per packing/micro-kernel event, in issue order.
/// Only the single-worker driver reports events.
pub trait GemmObserver {
    fn on_pack_b(&mut self, _pc: usize, _jc: usize, _kc: usize, _nc: usize) {}
    fn on_pack_a(&mut self, _ic: usize, _pc: usize, _mc: usize, _kc: usize) {}
    fn on_micro_tile(&mut self, _ic: usize, _jc: usize, _ir: usize, _jr: usize) {}
}

struct NullObserver;

impl GemmObserver for NullObserver {}

/// INT8 x INT8 -> INT32 blocked product: C = A B (optionally transposed /
/// accumulated per `problem`) using `kernel` for every micro-tile.
pub fn gemm_i8_i32(
    kernel: &dyn IntKernel,
    c: &mut MatrixViewMut<'_, i32>,
    a: &MatrixView<'_, i8>,
    b: &MatrixView<'_, i8>,
    problem: GemmProblem,
    opts: &GemmOptions,
) {
    gemm_i8_i32_with_observer(kernel, c, a, b, problem, opts, &mut NullObserver);
}

pub fn gemm_i8_i32_with_observer(
    kernel: &dyn IntKernel,
    c: &mut MatrixViewMut<'_, i32>,
    a: &MatrixView<'_, i8>,
    b: &MatrixView<'_, i8>,
    problem: GemmProblem,
    opts: &GemmOptions,
    obs: &mut dyn GemmObserver,
) {
    assert!(
        problem.k <= I8_GEMM_MAX_K,
        "k = {} exceeds the overflow-safe bound {I8_GEMM_MAX_K}",
        problem.k
    );
    drive(kernel, c, a, b, problem, opts, obs);
}

/// FP32 blocked product; same structure as [`gemm_i8_i32`].
pub fn gemm_f32(
    kernel: &dyn F32Kernel,
    c: &mut MatrixViewMut<'_, f32>,
    a: &MatrixView<'_, f32>,
    b: &MatrixView<'_, f32>,
    problem: GemmProblem,
    opts: &GemmOptions,
) {
    gemm_f32_with_observer(kernel, c, a, b, problem, opts, &mut NullObserver);
}

pub fn gemm_f32_with_observer(
    kernel: &dyn F32Kernel,
    c: &mut MatrixViewMut<'_, f32>,
    a: &MatrixView<'_, f32>,
    b: &MatrixView<'_, f32>,
    problem: GemmProblem,
    opts: &GemmOptions,
    obs: &mut dyn GemmObserver,
) {
    drive(kernel, c, a, b, problem, opts, obs);
}

/// Unifies the two kernel traits for the generic driver body.
trait PanelKernel<In: Element, Acc: Element>: Sync {
    fn spec(&self) -> MicroKernelSpec;
    fn run_panel(&self, cr: &mut MicroTileMut<'_, Acc>, a: &[In], b: &[In], kc: usize);
}

impl PanelKernel<i8, i32> for dyn IntKernel + '_ {
    fn spec(&self) -> MicroKernelSpec {
        IntKernel::spec(self)
    }

    fn run_panel(&self, cr: &mut MicroTileMut<'_, i32>, a: &[i8], b: &[i8], kc: usize) {
        self.run(cr, a, b, kc)
    }
}

impl PanelKernel<f32, f32> for dyn F32Kernel + '_ {
    fn spec(&self) -> MicroKernelSpec {
        F32Kernel::spec(self)
    }

    fn run_panel(&self, cr: &mut MicroTileMut<'_, f32>, a: &[f32], b: &[f32], kc: usize) {
        self.run(cr, a, b, kc)
    }
}

/// Raw C pointer that may cross into scoped worker threads. Workers derive
/// element-disjoint tiles from it (distinct jr strips), which keeps the
/// aliasing sound.
struct SendPtr<T>(*mut T);

impl<T> Clone for SendPtr<T> {
    fn clone(&self) -> Self {
        SendPtr(self.0)
    }
}

impl<T> Copy for SendPtr<T> {}

unsafe impl<T: Send> Send for SendPtr<T> {}
unsafe impl<T: Sync> Sync for SendPtr<T> {}

impl<T> SendPtr<T> {
    /// Accessor instead of field access so closures capture the whole
    /// wrapper (which is Send/Sync) and not the bare pointer field.
    fn get(self) -> *mut T {
        self.0
    }
}

fn drive<In: Element, Acc: Element, K: PanelKernel<In, Acc> + ?Sized>(
    kernel: &K,
    c: &mut MatrixViewMut<'_, Acc>,
    a: &MatrixView<'_, In>,
    b: &MatrixView<'_, In>,
    problem: GemmProblem,
    opts: &GemmOptions,
    obs: &mut dyn GemmObserver,
) {
    let GemmProblem { m, n, k, transpose_a, transpose_b, accumulate } = problem;
    let a_dims = if transpose_a { (a.cols(), a.rows()) } else { (a.rows(), a.cols()) };
    let b_dims = if transpose_b { (b.cols(), b.rows()) } else { (b.rows(), b.cols()) };
    assert_eq!((c.rows(), c.cols()), (m, n), "C shape disagrees with problem");
    assert_eq!(a_dims, (m, k), "op(A) shape disagrees with problem");
    assert_eq!(b_dims, (k, n), "op(B) shape disagrees with problem");
    assert!(opts.workers >= 1, "need at least one worker");
    let spec = kernel.spec();
    // Callers may pass any positive block sizes; the driver rounds them up
    // to the micro-tile multiples the packing layouts require.
    let bl = opts.blocking;
    assert!(bl.mc > 0 && bl.nc > 0 && bl.kc > 0, "block sizes must be positive");
    let mc_p = bl.mc.next_multiple_of(spec.mr);
    let nc_p = bl.nc.next_multiple_of(spec.nr);
    let kc_p = bl.kc.next_multiple_of(spec.kr);

    if !accumulate {
        c.fill(Acc::default());
    }
    if m == 0 || n == 0 || k == 0 {
        return;
    }

    let row_stride = c.row_stride();
    let c_base = SendPtr(c.as_mut_ptr());
    let mut jc = 0;
    while jc < n {
        let nc_eff = nc_p.min(n - jc);
        let mut pc = 0;
        while pc < k {
            let kc_eff = kc_p.min(k - pc);
            obs.on_pack_b(pc, jc, kc_eff, nc_eff);
            let pb = pack_b(b, pc, jc, kc_eff, nc_eff, spec.layout_b(), transpose_b);
            let mut ic = 0;
            while ic < m {
                let mc_eff = mc_p.min(m - ic);
                obs.on_pack_a(ic, pc, mc_eff, kc_eff);
                let pa = pack_a_parallel(
                    a, ic, pc, mc_eff, kc_eff, &spec, transpose_a, opts.workers,
                );
                if opts.workers == 1 {
                    for jr in 0..pb.panel_count() {
                        for ir in 0..pa.panel_count() {
                            obs.on_micro_tile(ic, jc, ir, jr);
                        }
                    }
                }
                update_strips(
                    kernel, c_base, row_stride, m, n, ic, jc, kc_eff, &pa, &pb, &spec,
                    opts.workers,
                );
                ic += mc_p;
            }
            pc += kc_p;
        }
        jc += nc_p;
    }
}

/// Packs the mc x kc block of A, splitting panels across `workers` scoped
/// threads. Panels are disjoint slices of the packed buffer, so each worker
/// owns its share outright.
fn pack_a_parallel<In: Element>(
    a: &MatrixView<'_, In>,
    ic: usize,
    pc: usize,
    mc: usize,
    kc: usize,
    spec: &MicroKernelSpec,
    transpose: bool,
    workers: usize,
) -> PackedA<In> {
    let la = spec.layout_a();
    let mut pa = PackedA::new_zeroed(la, mc, kc);
    if workers == 1 {
        for (p, panel) in pa.panels_mut().enumerate() {
            pack_a_panel(panel, a, ic, pc, mc, kc, la, transpose, p);
        }
        return pa;
    }
    let mut indexed: Vec<(usize, &mut [In])> = pa.panels_mut().enumerate().collect();
    let share = indexed.len().div_ceil(workers);
    std::thread::scope(|s| {
        while !indexed.is_empty() {
            let take = share.min(indexed.len());
            let group: Vec<(usize, &mut [In])> = indexed.drain(..take).collect();
            s.spawn(move || {
                for (p, panel) in group {
                    pack_a_panel(panel, a, ic, pc, mc, kc, la, transpose, p);
                }
            });
        }
    });
    pa
}

/// Runs the two register loops: jr over B panels (one C column strip each),
/// ir over A panels. Strips are dealt to workers in contiguous runs; a
/// worker writes only its strips' tiles, so C accesses never alias.
#[allow(clippy::too_many_arguments)]
fn update_strips<In: Element, Acc: Element, K: PanelKernel<In, Acc> + ?Sized>(
    kernel: &K,
    c_base: SendPtr<Acc>,
    row_stride: usize,
    m: usize,
    n: usize,
    ic: usize,
    jc: usize,
    kc_eff: usize,
    pa: &PackedA<In>,
    pb: &PackedB<In>,
    spec: &MicroKernelSpec,
    workers: usize,
) {
    let run_strip = |jr: usize| {
        let j0 = jc + jr * spec.nr;
        let live_cols = spec.nr.min(n - j0);
        for ir in 0..pa.panel_count() {
            let i0 = ic + ir * spec.mr;
            let live_rows = spec.mr.min(m - i0);
            // Tiles of distinct (ir, jr) cover disjoint C elements.
            let mut tile = unsafe {
                MicroTileMut::from_raw_parts(
                    c_base.get().add(i0 * row_stride + j0),
                    row_stride,
                    live_rows,
                    live_cols,
                )
            };
            kernel.run_panel(&mut tile, pa.panel(ir), pb.panel(jr), kc_eff);
        }
    };
    let strips = pb.panel_count();
    if workers == 1 {
        for jr in 0..strips {
            run_strip(jr);
        }
        return;
    }
    let share = strips.div_ceil(workers);
    std::thread::scope(|s| {
        let mut lo = 0;
        while lo < strips {
            let hi = (lo + share).min(strips);
            let run_strip = &run_strip;
            s.spawn(move || {
                for jr in lo..hi {
                    run_strip(jr);
                }
            });
            lo = hi;
        }
    });
}
