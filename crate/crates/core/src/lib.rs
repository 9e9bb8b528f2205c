//! Exact and rigorous-float computation of Kloosterman sum moments over F_p,
//! with the local invariant and modular form data needed to interpret them.

pub mod ball;
pub mod cyclotomic;
pub mod evans;
pub mod ffprime;
pub mod invariants;
pub mod kloosterman;
pub mod modforms;
pub mod moments;

pub use ffprime::{FieldElem, Prime};
