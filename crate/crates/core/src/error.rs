use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::jets::JetError;
use crate::tensor::TensorError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{what} needs jet order {need}, only {have} available")]
    InsufficientOrder { what: &'static str, need: usize, have: usize },
    #[error("point is not on the hypersurface (s = {0:.3e})")]
    NotOnSurface(f64),
    #[error("defining function has degenerate gradient (|ds| = {0:.3e})")]
    DegenerateNormal(f64),
    #[error("{op} is only implemented for dimension {supported}, got {dim}")]
    UnsupportedDimension { op: &'static str, dim: usize, supported: &'static str },
    #[error("splitting operator denominator vanishes for d = {dim}, w = {weight}")]
    WeightDegenerate { dim: usize, weight: i32 },
    #[error("input is not tangential (normal component {0:.3e})")]
    NotTangential(f64),
    #[error("input is not trace-free (trace {0:.3e})")]
    NotTraceFree(f64),
    #[error("normal jet of order {k} is not determined (max {max})")]
    OrderNotDetermined { k: usize, max: usize },
    #[error("solution only available through stage {done}, {need} required")]
    InsufficientStages { done: usize, need: usize },
    #[error("scales or dimensions do not match: {0}")]
    Mismatch(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
