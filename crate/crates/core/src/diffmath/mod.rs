//! Dense numerical kernels with reverse-mode gradients over a small, fixed
//! operator set, plus the Adam optimizer, a finite-difference gradient checker
//! and the binary parameter checkpoint format.

mod adam;
mod checkpoint;
mod gradcheck;
mod mlp;
mod params;
mod tape;
mod tensor;

pub use adam::{adam_step, OptimizerState};
pub use checkpoint::{read_checkpoint, write_checkpoint, NamedTensors, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{grad_check, GradCheckReport, GradProbe};
pub use mlp::Mlp2;
pub use params::{ParamId, ParamStore};
pub use tape::{BlockDiagonal, CustomBackward, Gradients, Tape, Var};
pub use tensor::{check_same_shape, masked_mse, tensor_from_values, Tensor2};
