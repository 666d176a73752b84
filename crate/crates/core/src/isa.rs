//! Bit-exact scalar models of the SIMD / matrix-engine instructions the
//! micro-kernels are built from.
//!
//! Registers are modeled as raw byte payloads with little-endian lane order,
//! so results are identical on any host. All integer additions wrap in two's
//! complement, matching the non-saturating hardware instructions being
//! modeled; floating-point multiply-accumulate is deliberately unfused (the
//! product and the sum are each rounded). Every function is pure: it returns
//! a new register value and never mutates its inputs.

/// 64-bit vector register: 8 INT8 lanes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Vec64(pub [u8; 8]);

impl Vec64 {
    pub fn zeroed() -> Self {
        Vec64([0; 8])
    }

    pub fn from_i8(lanes: [i8; 8]) -> Self {
        Vec64(lanes.map(|v| v as u8))
    }

    pub fn as_i8(self) -> [i8; 8] {
        self.0.map(|b| b as i8)
    }
}

/// 128-bit vector register: 16 INT8, 8 INT16, 4 INT32, or 4 FP32 lanes
/// depending on the instruction interpreting it.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Vec128(pub [u8; 16]);

impl Vec128 {
    pub fn zeroed() -> Self {
        Vec128([0; 16])
    }

    pub fn from_i8(lanes: [i8; 16]) -> Self {
        Vec128(lanes.map(|v| v as u8))
    }

    pub fn as_i8(self) -> [i8; 16] {
        self.0.map(|b| b as i8)
    }

    pub fn from_i16(lanes: [i16; 8]) -> Self {
        let mut b = [0u8; 16];
        for (i, v) in lanes.iter().enumerate() {
            b[2 * i..2 * i + 2].copy_from_slice(&v.to_le_bytes());
        }
        Vec128(b)
    }

    pub fn as_i16(self) -> [i16; 8] {
        std::array::from_fn(|i| i16::from_le_bytes([self.0[2 * i], self.0[2 * i + 1]]))
    }

    pub fn from_i32(lanes: [i32; 4]) -> Self {
        let mut b = [0u8; 16];
        for (i, v) in lanes.iter().enumerate() {
            b[4 * i..4 * i + 4].copy_from_slice(&v.to_le_bytes());
        }
        Vec128(b)
    }

    pub fn as_i32(self) -> [i32; 4] {
        std::array::from_fn(|i| {
            i32::from_le_bytes(self.0[4 * i..4 * i + 4].try_into().unwrap())
        })
    }

    pub fn from_f32(lanes: [f32; 4]) -> Self {
        let mut b = [0u8; 16];
        for (i, v) in lanes.iter().enumerate() {
            b[4 * i..4 * i + 4].copy_from_slice(&v.to_le_bytes());
        }
        Vec128(b)
    }

    pub fn as_f32(self) -> [f32; 4] {
        std::array::from_fn(|i| {
            f32::from_le_bytes(self.0[4 * i..4 * i + 4].try_into().unwrap())
        })
    }
}

/// Legal widths for scalable vector registers.
pub const SCALABLE_WIDTHS: [usize; 5] = [128, 256, 512, 1024, 2048];

/// Scalable vector register of `width_bits` in {128, 256, 512, 1024, 2048}:
/// width/8 INT8 lanes or width/32 INT32 lanes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VecN {
    bytes: Vec<u8>,
}

impl VecN {
    pub fn zeroed(width_bits: usize) -> Self {
        assert!(
            SCALABLE_WIDTHS.contains(&width_bits),
            "unsupported vector width {width_bits}"
        );
        VecN { bytes: vec![0; width_bits / 8] }
    }

    pub fn from_i8_slice(lanes: &[i8]) -> Self {
        let mut v = VecN::zeroed(lanes.len() * 8);
        for (b, &l) in v.bytes.iter_mut().zip(lanes) {
            *b = l as u8;
        }
        v
    }

    pub fn from_i32_slice(lanes: &[i32]) -> Self {
        let mut v = VecN::zeroed(lanes.len() * 32);
        for (i, &l) in lanes.iter().enumerate() {
            v.bytes[4 * i..4 * i + 4].copy_from_slice(&l.to_le_bytes());
        }
        v
    }

    pub fn width_bits(&self) -> usize {
        self.bytes.len() * 8
    }

    pub fn i8_lane(&self, i: usize) -> i8 {
        self.bytes[i] as i8
    }

    pub fn i32_lane(&self, i: usize) -> i32 {
        i32::from_le_bytes(self.bytes[4 * i..4 * i + 4].try_into().unwrap())
    }

    pub fn as_i8_vec(&self) -> Vec<i8> {
        self.bytes.iter().map(|&b| b as i8).collect()
    }

    pub fn as_i32_vec(&self) -> Vec<i32> {
        (0..self.width_bits() / 32).map(|i| self.i32_lane(i)).collect()
    }
}

/// 1 KiB tile register: 16 rows of 64 bytes. Interpreted per operand role as
/// 16x16 INT32 (row-major), 16x64 INT8 (row-major), or the 4-interleaved INT8
/// layout described at [`tile_dpbssd`].
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct TileReg(pub [u8; 1024]);

impl std::fmt::Debug for TileReg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TileReg({:?}...)", &self.0[..16])
    }
}

impl TileReg {
    pub fn zeroed() -> Self {
        TileReg([0; 1024])
    }

    pub fn from_bytes(bytes: [u8; 1024]) -> Self {
        TileReg(bytes)
    }

    /// INT8 element at (row, byte column) of the 16x64 view.
    pub fn i8_at(&self, row: usize, col: usize) -> i8 {
        debug_assert!(row < 16 && col < 64);
        self.0[row * 64 + col] as i8
    }

    pub fn set_i8(&mut self, row: usize, col: usize, v: i8) {
        debug_assert!(row < 16 && col < 64);
        self.0[row * 64 + col] = v as u8;
    }

    /// INT32 element at (row, column) of the 16x16 view.
    pub fn i32_at(&self, row: usize, col: usize) -> i32 {
        debug_assert!(row < 16 && col < 16);
        let off = row * 64 + col * 4;
        i32::from_le_bytes(self.0[off..off + 4].try_into().unwrap())
    }

    pub fn set_i32(&mut self, row: usize, col: usize, v: i32) {
        debug_assert!(row < 16 && col < 16);
        let off = row * 64 + col * 4;
        self.0[off..off + 4].copy_from_slice(&v.to_le_bytes());
    }
}

/// Accumulator tile for the outer-product engine: a square INT32 grid of side
/// `svl_bits / 32`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZaTile {
    svl_bits: usize,
    bytes: Vec<u8>,
}

impl ZaTile {
    pub fn zeroed(svl_bits: usize) -> Self {
        assert!(
            SCALABLE_WIDTHS.contains(&svl_bits),
            "unsupported streaming vector length {svl_bits}"
        );
        ZaTile { svl_bits, bytes: vec![0; (svl_bits / 8) * (svl_bits / 8)] }
    }

    pub fn svl_bits(&self) -> usize {
        self.svl_bits
    }

    /// Grid side length (number of INT32 rows = columns).
    pub fn side(&self) -> usize {
        self.svl_bits / 32
    }

    pub fn i32_at(&self, i: usize, j: usize) -> i32 {
        debug_assert!(i < self.side() && j < self.side());
        let off = (i * self.side() + j) * 4;
        i32::from_le_bytes(self.bytes[off..off + 4].try_into().unwrap())
    }

    pub fn set_i32(&mut self, i: usize, j: usize, v: i32) {
        debug_assert!(i < self.side() && j < self.side());
        let off = (i * self.side() + j) * 4;
        self.bytes[off..off + 4].copy_from_slice(&v.to_le_bytes());
    }
}

/// 4x4 INT32 accumulator of the integer matrix extension, physically held in
/// two 256-bit registers: grid row r occupies bits [128*(r%2), 128*(r%2)+127]
/// of register r/2 (rows 0-1 in register 0, rows 2-3 in register 1).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct MadotAcc {
    pub grid: [[i32; 4]; 4],
}

impl MadotAcc {
    pub fn zeroed() -> Self {
        MadotAcc::default()
    }

    pub fn from_grid(grid: [[i32; 4]; 4]) -> Self {
        MadotAcc { grid }
    }

    /// Packs the grid into its two 256-bit register images.
    pub fn to_registers(self) -> [[u8; 32]; 2] {
        let mut regs = [[0u8; 32]; 2];
        for r in 0..4 {
            let base = 16 * (r % 2);
            for j in 0..4 {
                regs[r / 2][base + 4 * j..base + 4 * j + 4]
                    .copy_from_slice(&self.grid[r][j].to_le_bytes());
            }
        }
        regs
    }

    pub fn from_registers(regs: [[u8; 32]; 2]) -> Self {
        let mut grid = [[0i32; 4]; 4];
        for r in 0..4 {
            let base = 16 * (r % 2);
            for j in 0..4 {
                grid[r][j] = i32::from_le_bytes(
                    regs[r / 2][base + 4 * j..base + 4 * j + 4].try_into().unwrap(),
                );
            }
        }
        MadotAcc { grid }
    }
}

/// FP32 fused-index multiply-add: vr[i] = acc[i] + v1[i] * v2[lane].
/// The multiply and the add are rounded separately (no fusion).
pub fn fma_lane_f32(acc: Vec128, v1: Vec128, v2: Vec128, lane: usize) -> Vec128 {
    assert!(lane < 4, "lane {lane} out of range for 4 FP32 lanes");
    let a = acc.as_f32();
    let x = v1.as_f32();
    let s = v2.as_f32()[lane];
    Vec128::from_f32(std::array::from_fn(|i| a[i] + x[i] * s))
}

/// Widening INT8 multiply: vr[i] = v0[i] * v1[i] as INT16 (always exact:
/// |product| <= 16384).
pub fn mull_s8(v0: Vec64, v1: Vec64) -> Vec128 {
    let a = v0.as_i8();
    let b = v1.as_i8();
    Vec128::from_i16(std::array::from_fn(|i| a[i] as i16 * b[i] as i16))
}

/// Widening INT8 multiply-accumulate into INT16 lanes:
/// vr[i] = acc[i] + v1[i] * v2[i], with the INT16 addition wrapping.
/// Two maximal products (-128 * -128, twice) sum to 32768 and wrap to -32768,
/// so accumulation cadence in kernels matters; see the INT8 NEON kernel.
pub fn mlal_s8(acc: Vec128, v1: Vec64, v2: Vec64) -> Vec128 {
    let base = acc.as_i16();
    let a = v1.as_i8();
    let b = v2.as_i8();
    Vec128::from_i16(std::array::from_fn(|i| {
        base[i].wrapping_add(a[i] as i16 * b[i] as i16)
    }))
}

/// Pairwise widening accumulate: vr[i] = acc[i] + v1[2i] + v1[2i+1], where
/// acc has 4 INT32 lanes and v1 has 8 INT16 lanes. The INT16 operands are
/// widened before the addition, so e.g. -32768 + -32768 = -65536 exactly.
pub fn padal_s16(acc: Vec128, v1: Vec128) -> Vec128 {
    let base = acc.as_i32();
    let x = v1.as_i16();
    Vec128::from_i32(std::array::from_fn(|i| {
        base[i]
            .wrapping_add(x[2 * i] as i32)
            .wrapping_add(x[2 * i + 1] as i32)
    }))
}

/// Pairwise INT32 add of two registers:
/// vr = [v0[0]+v0[1], v0[2]+v0[3], v1[0]+v1[1], v1[2]+v1[3]].
pub fn padd_s32(v0: Vec128, v1: Vec128) -> Vec128 {
    let a = v0.as_i32();
    let b = v1.as_i32();
    Vec128::from_i32([
        a[0].wrapping_add(a[1]),
        a[2].wrapping_add(a[3]),
        b[0].wrapping_add(b[1]),
        b[2].wrapping_add(b[3]),
    ])
}

/// Indexed INT8 dot product into INT32 lanes:
/// vr[i] = acc[i] + sum_{j=0..4} v1[i*4+j] * v2[lane*4+j].
/// Products and sums are computed in INT32; no intermediate narrowing.
pub fn dot_lane_s32(acc: Vec128, v1: Vec128, v2: Vec128, lane: usize) -> Vec128 {
    assert!(lane < 4, "lane {lane} out of range for 4 INT8 quadruples");
    let base = acc.as_i32();
    let a = v1.as_i8();
    let b = v2.as_i8();
    Vec128::from_i32(std::array::from_fn(|i| {
        let mut sum = base[i];
        for j in 0..4 {
            sum = sum.wrapping_add(a[i * 4 + j] as i32 * b[lane * 4 + j] as i32);
        }
        sum
    }))
}

/// Scalable indexed INT8 dot product. `v2` is a 4-tuple of registers and
/// `lane` selects the tuple entry, which is indexed with the same element
/// index as `v1`: vr[i] = acc[i] + sum_{j=0..4} v1[i*4+j] * v2[lane][i*4+j].
/// All registers must share one width.
pub fn svdot_lane_s32(acc: &VecN, v1: &VecN, v2: &[VecN; 4], lane: usize) -> VecN {
    assert!(lane < 4, "lane {lane} out of range for a 4-tuple");
    let w = acc.width_bits();
    assert_eq!(v1.width_bits(), w, "v1 width {} != acc width {w}", v1.width_bits());
    for (t, v) in v2.iter().enumerate() {
        assert_eq!(v.width_bits(), w, "v2[{t}] width {} != acc width {w}", v.width_bits());
    }
    let sel = &v2[lane];
    let n = w / 32;
    let lanes: Vec<i32> = (0..n)
        .map(|i| {
            let mut sum = acc.i32_lane(i);
            for j in 0..4 {
                sum = sum
                    .wrapping_add(v1.i8_lane(i * 4 + j) as i32 * sel.i8_lane(i * 4 + j) as i32);
            }
            sum
        })
        .collect();
    VecN::from_i32_slice(&lanes)
}

/// 4x4x8 INT8 matrix multiply-accumulate:
/// acc(i,j) += sum_{t=0..8} a(i,t) * b(t,j), with `a` given as 4x8 row-major
/// bytes and `b` as 8x4 column-major bytes (column j contiguous at b[j*8..]).
pub fn vmadot(acc: MadotAcc, a: &[i8; 32], b: &[i8; 32]) -> MadotAcc {
    let mut out = acc;
    for i in 0..4 {
        for j in 0..4 {
            let mut sum = out.grid[i][j];
            for t in 0..8 {
                sum = sum.wrapping_add(a[i * 8 + t] as i32 * b[j * 8 + t] as i32);
            }
            out.grid[i][j] = sum;
        }
    }
    out
}

/// 16x16x64 INT8 tile multiply-accumulate: c(i,j) += sum_{t=0..64} a(i,t) * B(t,j).
/// `c` is 16x16 INT32 row-major, `a` is 16x64 INT8 row-major, and `b` holds B
/// in the 4-interleaved layout: logical B(t,j) lives at byte row t/4, byte
/// column j*4 + t%4.
pub fn tile_dpbssd(c: &TileReg, a: &TileReg, b: &TileReg) -> TileReg {
    let mut out = *c;
    for i in 0..16 {
        for j in 0..16 {
            let mut sum = out.i32_at(i, j);
            for t in 0..64 {
                let bv = b.i8_at(t / 4, j * 4 + t % 4);
                sum = sum.wrapping_add(a.i8_at(i, t) as i32 * bv as i32);
            }
            out.set_i32(i, j, sum);
        }
    }
    out
}

/// Widening INT8 outer-product accumulate over a square INT32 tile:
/// za(i,j) += sum_{t=0..4} zn[4i+t] * zm[4j+t] for i, j in 0..svl/32.
/// Equivalently, the sum of four INT8 rank-1 updates. The input registers
/// must match the tile's streaming vector length.
pub fn smopa_s8(za: &ZaTile, zn: &VecN, zm: &VecN) -> ZaTile {
    let svl = za.svl_bits();
    assert_eq!(zn.width_bits(), svl, "zn width {} != SVL {svl}", zn.width_bits());
    assert_eq!(zm.width_bits(), svl, "zm width {} != SVL {svl}", zm.width_bits());
    let n = za.side();
    let mut out = za.clone();
    for i in 0..n {
        for j in 0..n {
            let mut sum = out.i32_at(i, j);
            for t in 0..4 {
                sum = sum.wrapping_add(zn.i8_lane(4 * i + t) as i32 * zm.i8_lane(4 * j + t) as i32);
            }
            out.set_i32(i, j, sum);
        }
    }
    out
}
