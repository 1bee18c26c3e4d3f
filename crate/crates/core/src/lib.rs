//! Microscopic Lindbladian and effective nonreciprocal Keldysh descriptions
//! of a lambda-system junction with engineered atom loss.

pub mod bridge;
pub mod keldysh;
pub mod lindblad;
pub mod model;
pub mod sweep;
pub mod validate;
