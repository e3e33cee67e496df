//! Data model shared by every other module: samples, evaluated functions,
//! function classes, and the empirical geometry they induce.
//!
//! All types are immutable after construction and all operations are pure.

mod classes;
mod function;
mod sample;

pub use classes::{
    shifted_star_class, FiniteDictionary, FunctionClass, LinearClass, ShiftedStarClass,
    StarHullClass,
};
pub use function::{empirical_distance, empirical_inner, empirical_norm, EvaluatedFunction};
pub use sample::{DesignSample, Truth};
