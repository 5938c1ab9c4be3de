//! Dense matrices, parameter storage, Adam and finite-difference checking.

mod adam;
mod gradcheck;
mod matrix;
mod params;

pub use adam::{adam_step, AdamConfig};
pub use gradcheck::{grad_check, GradCheckReport, GroupError};
pub use matrix::{sigmoid, Matrix};
pub(crate) use matrix::{fill_dropout_mask, gemv_acc, gemv_t_acc, outer_acc};
pub use params::{GradBuffer, Param, ParamId, ParamStore};
