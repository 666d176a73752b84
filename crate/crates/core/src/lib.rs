pub mod bench;
pub mod gemm;
pub mod isa;
pub mod lowering;
pub mod quant;
pub mod matrix;
pub mod packing;
pub mod ukernel;
