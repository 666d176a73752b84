//! Vector-length-agnostic INT8 dot-product kernel.
//!
//! One kernel body covers 128/256/512-bit vectors: with n = vl/32 i32 lanes
//! per register it computes a 4 x 2n tile. A is packed exactly as for the
//! fixed 128-bit dot kernel (kr = vl/8 deep rows); B keeps the t = 4
//! interleave so one register load covers n columns. The A operand of each
//! dot is a broadcast tuple: the active 4-byte group replicated across the
//! register, selected by the dot's lane index from a 4-register tuple.
//! Budget: 8 C + 4 A rows + 4 tuple + 2 B = 18 of 32.

use crate::isa::{svdot_lane_s32, VecN};
use crate::matrix::ElementType;
use crate::ukernel::{IntKernel, MicroKernelSpec, MicroTileMut};

const MR: usize = 4;

pub struct SveDot {
    vl_bits: usize,
}

impl SveDot {
    pub const fn new(vl_bits: usize) -> Self {
        assert!(
            vl_bits == 128 || vl_bits == 256 || vl_bits == 512,
            "supported scalable dot widths: 128, 256, 512"
        );
        SveDot { vl_bits }
    }

    pub fn vl_bits(&self) -> usize {
        self.vl_bits
    }

    /// i32 lanes per register = columns per B load.
    fn lanes(&self) -> usize {
        self.vl_bits / 32
    }
}

impl IntKernel for SveDot {
    fn spec(&self) -> MicroKernelSpec {
        let name = match self.vl_bits {
            128 => "sve-dot-128",
            256 => "sve-dot-256",
            512 => "sve-dot-512",
            _ => unreachable!(),
        };
        MicroKernelSpec {
            name,
            mr: MR,
            nr: 2 * self.lanes(),
            kr: self.vl_bits / 8,
            t: 4,
            in_elem: ElementType::I8,
            acc_elem: ElementType::I32,
            register_budget: 18,
            register_file: 32,
        }
    }

    fn run(&self, cr: &mut MicroTileMut<'_, i32>, a_panel: &[i8], b_panel: &[i8], kc: usize) {
        let n = self.lanes();
        let nr = 2 * n;
        let kr = self.vl_bits / 8;
        let groups = kc.div_ceil(kr);
        assert_eq!(a_panel.len(), MR * groups * kr);
        assert_eq!(b_panel.len(), nr * groups * kr);
        let mut buf = vec![0i32; MR * nr];
        cr.load_padded(&mut buf, MR, nr);
        let mut c: Vec<[VecN; 2]> = (0..MR)
            .map(|i| {
                [
                    VecN::from_i32_slice(&buf[i * nr..i * nr + n]),
                    VecN::from_i32_slice(&buf[i * nr + n..i * nr + 2 * n]),
                ]
            })
            .collect();
        for g in 0..groups {
            let arow = |i: usize| &a_panel[g * MR * kr + i * kr..g * MR * kr + (i + 1) * kr];
            // Each 16-byte block of the A rows feeds four dot lanes.
            for blk in 0..kr / 16 {
                let tuples: Vec<[VecN; 4]> = (0..MR)
                    .map(|i| {
                        std::array::from_fn(|lane| {
                            let q = &arow(i)[blk * 16 + lane * 4..blk * 16 + lane * 4 + 4];
                            let rep: Vec<i8> = q.iter().copied().cycle().take(4 * n).collect();
                            VecN::from_i8_slice(&rep)
                        })
                    })
                    .collect();
                for lane in 0..4 {
                    let s = blk * 4 + lane;
                    let bb = g * nr * kr + s * nr * 4;
                    let b0 = VecN::from_i8_slice(&b_panel[bb..bb + 4 * n]);
                    let b1 = VecN::from_i8_slice(&b_panel[bb + 4 * n..bb + 8 * n]);
                    for i in 0..MR {
                        c[i][0] = svdot_lane_s32(&c[i][0], &b0, &tuples[i], lane);
                        c[i][1] = svdot_lane_s32(&c[i][1], &b1, &tuples[i], lane);
                    }
                }
            }
        }
        for i in 0..MR {
            buf[i * nr..i * nr + n].copy_from_slice(&c[i][0].as_i32_vec());
            buf[i * nr + n..i * nr + 2 * n].copy_from_slice(&c[i][1].as_i32_vec());
        }
        cr.store_live(&buf, nr);
    }
}
