//! Dense tensors with tape-based reverse-mode differentiation.

mod gradcheck;
mod kernels;
mod tape;
mod tensor;

pub use gradcheck::{finite_diff_check, GradCheckReport, GroupCheck};
pub use tape::{Gradients, Tape, Var, PROB_FLOOR};
pub use tensor::Tensor;
