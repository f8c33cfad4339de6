//! Tristate numbers (tnums): the bit-level abstract domain used by the Linux
//! eBPF verifier, with its arithmetic and bitwise transfer functions, a
//! value-mask decomposed multiplication, and harnesses that check soundness,
//! optimality and relative precision by exhaustive enumeration and measure
//! operator speed.

pub mod arith;
pub mod bench;
pub mod bitops;
pub mod error;
pub mod fixture;
pub mod galois;
pub mod op;
pub mod par;
pub mod precision;
pub mod tnum;
pub mod verify;

pub use arith::{bitwise_mul, bitwise_mul_opt, kern_mul, our_mul, our_mul_simplified, tnum_add, tnum_sub};
pub use bitops::{tnum_and, tnum_arsh, tnum_lshift, tnum_or, tnum_rshift, tnum_xor};
pub use error::{Result, TnumError};
pub use galois::{alpha, concrete_image, gamma, optimal_abstract, subset, ConcreteOp, ConcreteSet};
pub use op::OpId;
pub use tnum::{Order, Tnum, Trit};
