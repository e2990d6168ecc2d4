//! Dense matrices, reverse-mode gradients, Adam, and gradient checking.

mod adam;
mod gradcheck;
mod matrix;
pub mod nn;
mod param;
mod tape;
mod topk;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{
    grad_check, relative_error, EntryReport, GradCheckConfig, GradCheckReport, ParamReport,
};
pub use matrix::{Matrix, Real};
pub use param::{Gradients, ParamId, ParamStore, Parameter};
pub use tape::{Tape, Var};
pub use topk::{topk_select, TopK};
