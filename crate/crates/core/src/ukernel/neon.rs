//! INT8 micro-kernels on 128-bit vectors: a widening-multiply variant that
//! needs no dot-product instruction, and an indexed-dot variant.

use crate::isa::{dot_lane_s32, mull_s8, padal_s16, padd_s32, Vec128, Vec64};
use crate::matrix::ElementType;
use crate::ukernel::{IntKernel, MicroKernelSpec, MicroTileMut};

/// 2x8 kernel: per 16-deep k-group it forms i8 x i8 -> i16 products with
/// `mull_s8` and widens each product register straight into the i32
/// partials with `padal_s16`.
///
/// Each 16-bit lane holds exactly one product before widening. Folding a
/// second product in first (multiply-accumulate into i16) would wrap for
/// extreme inputs — (-128)*(-128) + (-128)*(-128) = 32768 overflows i16 —
/// and corrupt the i32 total, so this kernel widens per 8-value k-half.
/// Per k-group: 4 A loads, 16 B loads, 64 multiply/widen pairs into 16
/// partial registers; a final two-pass pairwise `padd_s32` tree folds the
/// partials into C rows. Budget: 16 partials + 4 A + 4 B + 4 C = 28 of 32.
pub struct NeonMull2x8;

const MULL_MR: usize = 2;
const MULL_NR: usize = 8;
const MULL_KR: usize = 16;

impl IntKernel for NeonMull2x8 {
    fn spec(&self) -> MicroKernelSpec {
        MicroKernelSpec {
            name: "neon-mull-2x8",
            mr: MULL_MR,
            nr: MULL_NR,
            kr: MULL_KR,
            t: 16,
            in_elem: ElementType::I8,
            acc_elem: ElementType::I32,
            register_budget: 28,
            register_file: 32,
        }
    }

    fn run(&self, cr: &mut MicroTileMut<'_, i32>, a_panel: &[i8], b_panel: &[i8], kc: usize) {
        let groups = kc.div_ceil(MULL_KR);
        assert_eq!(a_panel.len(), MULL_MR * groups * MULL_KR);
        assert_eq!(b_panel.len(), MULL_NR * groups * MULL_KR);
        let mut buf = [0i32; MULL_MR * MULL_NR];
        cr.load_padded(&mut buf, MULL_MR, MULL_NR);
        // part[row][col]: running i32x4 partial sums for one C element each.
        let mut part = [[Vec128::zeroed(); MULL_NR]; MULL_MR];
        let half = |s: &[i8], base: usize| Vec64::from_i8(s[base..base + 8].try_into().unwrap());
        for g in 0..groups {
            let ab = g * MULL_MR * MULL_KR;
            // Row 0 k-halves, then row 1 k-halves.
            let a = [half(a_panel, ab), half(a_panel, ab + 8), half(a_panel, ab + 16), half(a_panel, ab + 24)];
            let bb = g * MULL_NR * MULL_KR;
            for p in 0..MULL_NR / 2 {
                // Column pair p: 16 bytes of column 2p, then of column 2p+1.
                let b = [
                    half(b_panel, bb + p * 32),
                    half(b_panel, bb + p * 32 + 8),
                    half(b_panel, bb + p * 32 + 16),
                    half(b_panel, bb + p * 32 + 24),
                ];
                for i in 0..MULL_MR {
                    for c in 0..2 {
                        let reg = &mut part[i][p * 2 + c];
                        *reg = padal_s16(*reg, mull_s8(a[i * 2], b[c * 2]));
                        *reg = padal_s16(*reg, mull_s8(a[i * 2 + 1], b[c * 2 + 1]));
                    }
                }
            }
        }
        for i in 0..MULL_MR {
            for h in 0..2 {
                // Two-pass pairwise add: one i32x4 with the four column totals.
                let lo = padd_s32(part[i][h * 4], part[i][h * 4 + 1]);
                let hi = padd_s32(part[i][h * 4 + 2], part[i][h * 4 + 3]);
                let tot = padd_s32(lo, hi).as_i32();
                for j in 0..4 {
                    let e = &mut buf[i * MULL_NR + h * 4 + j];
                    *e = e.wrapping_add(tot[j]);
                }
            }
        }
        cr.store_live(&buf, MULL_NR);
    }
}

/// 4x16 kernel on the indexed four-way dot product: B is packed with t=4 so
/// each 16-byte B load covers four columns, and `dot_lane_s32` broadcasts
/// one 4-byte A group per lane. Per k-group: 4 A loads, 16 B loads, 64 dot
/// ops. Budget: 16 C + 4 A + 4 B = 24 of 32.
pub struct NeonDot4x16;

const DOT_MR: usize = 4;
const DOT_NR: usize = 16;
const DOT_KR: usize = 16;

impl IntKernel for NeonDot4x16 {
    fn spec(&self) -> MicroKernelSpec {
        MicroKernelSpec {
            name: "neon-dot-4x16",
            mr: DOT_MR,
            nr: DOT_NR,
            kr: DOT_KR,
            t: 4,
            in_elem: ElementType::I8,
            acc_elem: ElementType::I32,
            register_budget: 24,
            register_file: 32,
        }
    }

    fn run(&self, cr: &mut MicroTileMut<'_, i32>, a_panel: &[i8], b_panel: &[i8], kc: usize) {
        let groups = kc.div_ceil(DOT_KR);
        assert_eq!(a_panel.len(), DOT_MR * groups * DOT_KR);
        assert_eq!(b_panel.len(), DOT_NR * groups * DOT_KR);
        let mut buf = [0i32; DOT_MR * DOT_NR];
        cr.load_padded(&mut buf, DOT_MR, DOT_NR);
        let mut c: [[Vec128; 4]; DOT_MR] = std::array::from_fn(|i| {
            std::array::from_fn(|r| {
                Vec128::from_i32(buf[i * DOT_NR + r * 4..i * DOT_NR + r * 4 + 4].try_into().unwrap())
            })
        });
        let vec = |s: &[i8], base: usize| Vec128::from_i8(s[base..base + 16].try_into().unwrap());
        for g in 0..groups {
            let ab = g * DOT_MR * DOT_KR;
            let a: [Vec128; DOT_MR] = std::array::from_fn(|i| vec(a_panel, ab + i * DOT_KR));
            let bb = g * DOT_NR * DOT_KR;
            for lane in 0..4 {
                // Sub-group `lane`: 4 k-values for all 16 columns, 16 bytes per
                // 4-column register.
                let b: [Vec128; 4] = std::array::from_fn(|r| vec(b_panel, bb + lane * 64 + r * 16));
                for i in 0..DOT_MR {
                    for r in 0..4 {
                        c[i][r] = dot_lane_s32(c[i][r], b[r], a[i], lane);
                    }
                }
            }
        }
        for i in 0..DOT_MR {
            for r in 0..4 {
                buf[i * DOT_NR + r * 4..i * DOT_NR + r * 4 + 4].copy_from_slice(&c[i][r].as_i32());
            }
        }
        cr.store_live(&buf, DOT_NR);
    }
}
