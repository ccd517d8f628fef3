//! Numerical core: matrices, a reverse-mode tape, LSTM and attention
//! layers, dropout, Adam and finite-difference gradient checking.

pub mod adam;
pub mod attention;
pub mod dropout;
pub mod extended;
pub mod float;
pub mod gradcheck;
pub mod lstm;
pub mod matrix;
pub mod param;
pub mod tape;

pub use adam::{Adam, AdamConfig};
pub use attention::{additive_attention, Attention, Memory};
pub use dropout::{dropout, dropout_mask, dropout_var};
pub use extended::Extended;
pub use float::{Float, FloatMode};
pub use gradcheck::{gradient_check, gradient_check_extended, GradCheckReport, ParamCheck, Sampling};
pub use lstm::{bilstm, lstm_cell, BiLstm, LstmParams};
pub use matrix::{gemm, Matrix};
pub use param::{Init, Param, ParamId, ParamSet};
pub use tape::{Tape, Var, PROB_FLOOR};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("non-finite gradient in parameter {param}")]
    NonFiniteGradient { param: String },
}
