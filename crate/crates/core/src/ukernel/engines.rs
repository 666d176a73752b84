//! Matrix-engine micro-kernels: per k-group each one issues a single
//! hardware-style tile/outer-product instruction instead of a vector loop.

use crate::isa::{smopa_s8, tile_dpbssd, vmadot, MadotAcc, TileReg, VecN, ZaTile, SCALABLE_WIDTHS};
use crate::matrix::ElementType;
use crate::ukernel::{IntKernel, MicroKernelSpec, MicroTileMut};

/// 4x8 kernel on the 4x4x8 integer matrix-dot instruction: one A tile
/// (4x8 row-major) against two 8x4 column-major B halves, accumulating in
/// two 4x4 grids that live in two 256-bit registers each.
/// Budget: 4 accumulator + 2 A + 2 B registers = 8 of 32.
pub struct ImeMadot4x8;

impl IntKernel for ImeMadot4x8 {
    fn spec(&self) -> MicroKernelSpec {
        MicroKernelSpec {
            name: "ime-madot-4x8",
            mr: 4,
            nr: 8,
            kr: 8,
            t: 8,
            in_elem: ElementType::I8,
            acc_elem: ElementType::I32,
            register_budget: 8,
            register_file: 32,
        }
    }

    fn run(&self, cr: &mut MicroTileMut<'_, i32>, a_panel: &[i8], b_panel: &[i8], kc: usize) {
        let groups = kc.div_ceil(8);
        assert_eq!(a_panel.len(), groups * 32);
        assert_eq!(b_panel.len(), groups * 64);
        let mut buf = [0i32; 32];
        cr.load_padded(&mut buf, 4, 8);
        let grid = |h: usize| {
            std::array::from_fn(|i| std::array::from_fn(|j| buf[i * 8 + h * 4 + j]))
        };
        let mut acc = [MadotAcc::from_grid(grid(0)), MadotAcc::from_grid(grid(1))];
        for g in 0..groups {
            let a: &[i8; 32] = a_panel[g * 32..g * 32 + 32].try_into().unwrap();
            for h in 0..2 {
                let b: &[i8; 32] = b_panel[g * 64 + h * 32..g * 64 + (h + 1) * 32].try_into().unwrap();
                acc[h] = vmadot(acc[h], a, b);
            }
        }
        for i in 0..4 {
            for h in 0..2 {
                for j in 0..4 {
                    buf[i * 8 + h * 4 + j] = acc[h].grid[i][j];
                }
            }
        }
        cr.store_live(&buf, 8);
    }
}

/// 16x16 kernel on the 16x16x64 tile dot-product: the packed k-group blocks
/// of both panels are exactly the tile register images (A row-major, B in
/// the 4-deep interleave the instruction expects), so the k loop is one
/// tile instruction per 64 k-values. Budget: 3 of the 8 tile registers.
pub struct AmxTile16x16;

impl IntKernel for AmxTile16x16 {
    fn spec(&self) -> MicroKernelSpec {
        MicroKernelSpec {
            name: "amx-tile-16x16",
            mr: 16,
            nr: 16,
            kr: 64,
            t: 4,
            in_elem: ElementType::I8,
            acc_elem: ElementType::I32,
            register_budget: 3,
            register_file: 8,
        }
    }

    fn run(&self, cr: &mut MicroTileMut<'_, i32>, a_panel: &[i8], b_panel: &[i8], kc: usize) {
        let groups = kc.div_ceil(64);
        assert_eq!(a_panel.len(), groups * 1024);
        assert_eq!(b_panel.len(), groups * 1024);
        let mut buf = [0i32; 256];
        cr.load_padded(&mut buf, 16, 16);
        let mut c = TileReg::zeroed();
        for i in 0..16 {
            for j in 0..16 {
                c.set_i32(i, j, buf[i * 16 + j]);
            }
        }
        let tile = |panel: &[i8], g: usize| {
            let mut bytes = [0u8; 1024];
            for (d, s) in bytes.iter_mut().zip(&panel[g * 1024..(g + 1) * 1024]) {
                *d = *s as u8;
            }
            TileReg::from_bytes(bytes)
        };
        for g in 0..groups {
            c = tile_dpbssd(&c, &tile(a_panel, g), &tile(b_panel, g));
        }
        for i in 0..16 {
            for j in 0..16 {
                buf[i * 16 + j] = c.i32_at(i, j);
            }
        }
        cr.store_live(&buf, 16);
    }
}

/// Square outer-product kernel: per 4-deep k-group one widening INT8
/// outer-product instruction updates the whole (svl/32)^2 accumulator tile
/// from one A register (row-major 4-wide) and one B register (column-major
/// 4-tall). Budget: the accumulator tile plus 2 vector registers.
pub struct SmeMopa {
    svl_bits: usize,
}

impl SmeMopa {
    pub const fn new(svl_bits: usize) -> Self {
        assert!(
            svl_bits == 128 || svl_bits == 256 || svl_bits == 512 || svl_bits == 1024 || svl_bits == 2048,
            "streaming vector length must be one of 128/256/512/1024/2048"
        );
        SmeMopa { svl_bits }
    }

    fn side(&self) -> usize {
        self.svl_bits / 32
    }
}

impl IntKernel for SmeMopa {
    fn spec(&self) -> MicroKernelSpec {
        let name = match self.svl_bits {
            128 => "sme-mopa-128",
            256 => "sme-mopa-256",
            512 => "sme-mopa-512",
            1024 => "sme-mopa-1024",
            2048 => "sme-mopa-2048",
            _ => unreachable!(),
        };
        MicroKernelSpec {
            name,
            mr: self.side(),
            nr: self.side(),
            kr: 4,
            t: 4,
            in_elem: ElementType::I8,
            acc_elem: ElementType::I32,
            register_budget: 3,
            register_file: 32,
        }
    }

    fn run(&self, cr: &mut MicroTileMut<'_, i32>, a_panel: &[i8], b_panel: &[i8], kc: usize) {
        let side = self.side();
        let groups = kc.div_ceil(4);
        assert_eq!(a_panel.len(), side * groups * 4);
        assert_eq!(b_panel.len(), side * groups * 4);
        let mut buf = vec![0i32; side * side];
        cr.load_padded(&mut buf, side, side);
        let mut za = ZaTile::zeroed(self.svl_bits);
        for i in 0..side {
            for j in 0..side {
                za.set_i32(i, j, buf[i * side + j]);
            }
        }
        for g in 0..groups {
            let zn = VecN::from_i8_slice(&a_panel[g * side * 4..(g + 1) * side * 4]);
            let zm = VecN::from_i8_slice(&b_panel[g * side * 4..(g + 1) * side * 4]);
            za = smopa_s8(&za, &zn, &zm);
        }
        for i in 0..side {
            for j in 0..side {
                buf[i * side + j] = za.i32_at(i, j);
            }
        }
        cr.store_live(&buf, side);
    }
}

// Compile-time check that every width the constructor accepts is scalable.
const _: () = {
    let mut i = 0;
    while i < SCALABLE_WIDTHS.len() {
        let _ = SmeMopa::new(SCALABLE_WIDTHS[i]);
        i += 1;
    }
};
