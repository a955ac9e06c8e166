// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiment;
pub mod maps;
pub mod model;
pub mod propagator;
pub mod schedule;
pub mod tensor;
pub mod tolerance;
