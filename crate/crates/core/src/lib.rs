//! Exact non-archimedean arithmetic for τ-sheaves and t-modules at a point.

pub mod additive;
pub mod commands;
pub mod error;
pub mod field;
pub mod mat;
pub mod newton;
pub mod normlaw;
pub mod problem;
pub mod rat;
pub mod report;
pub mod roots;
pub mod scan;
pub mod series;
pub mod session;
pub mod tate;
pub mod tau;
pub mod tmodule;
pub mod torsion;
pub mod tower;

pub use error::{Error, Result};
pub use field::Fe;
pub use rat::Q;
pub use series::{Tri, ValSeries};
pub use session::{Ctx, SessionConfig};
