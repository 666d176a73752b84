//! FP32 4x8 micro-kernel built on lane-broadcast fused-multiply-add.
//!
//! Per k step: one 4-lane load of the A column, two 4-lane loads of the B
//! row, and eight lane-indexed FMAs (`C[i][half] += B[half] * A[lane i]`).
//! Register budget: 8 accumulators + 1 A + 2 B = 11 of the 32-entry file.

use crate::isa::{fma_lane_f32, Vec128};
use crate::matrix::ElementType;
use crate::ukernel::{F32Kernel, MicroKernelSpec, MicroTileMut};

const MR: usize = 4;
const NR: usize = 8;

pub struct Fp32Axpy4x8;

impl F32Kernel for Fp32Axpy4x8 {
    fn spec(&self) -> MicroKernelSpec {
        MicroKernelSpec {
            name: "fp32-axpy-4x8",
            mr: MR,
            nr: NR,
            kr: 1,
            t: 1,
            in_elem: ElementType::F32,
            acc_elem: ElementType::F32,
            register_budget: 11,
            register_file: 32,
        }
    }

    fn run(&self, cr: &mut MicroTileMut<'_, f32>, a_panel: &[f32], b_panel: &[f32], kc: usize) {
        assert_eq!(a_panel.len(), MR * kc);
        assert_eq!(b_panel.len(), NR * kc);
        let mut buf = [0f32; MR * NR];
        cr.load_padded(&mut buf, MR, NR);
        let mut c: [[Vec128; 2]; MR] = std::array::from_fn(|i| {
            std::array::from_fn(|h| {
                Vec128::from_f32(buf[i * NR + h * 4..i * NR + h * 4 + 4].try_into().unwrap())
            })
        });
        for k in 0..kc {
            let a = Vec128::from_f32(a_panel[k * MR..k * MR + 4].try_into().unwrap());
            let b0 = Vec128::from_f32(b_panel[k * NR..k * NR + 4].try_into().unwrap());
            let b1 = Vec128::from_f32(b_panel[k * NR + 4..k * NR + 8].try_into().unwrap());
            for i in 0..MR {
                c[i][0] = fma_lane_f32(c[i][0], b0, a, i);
                c[i][1] = fma_lane_f32(c[i][1], b1, a, i);
            }
        }
        for i in 0..MR {
            for h in 0..2 {
                buf[i * NR + h * 4..i * NR + h * 4 + 4].copy_from_slice(&c[i][h].as_f32());
            }
        }
        cr.store_live(&buf, NR);
    }
}
