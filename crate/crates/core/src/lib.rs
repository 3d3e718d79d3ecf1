pub mod bench;
pub mod corridor;
pub mod env;
pub mod error;
pub mod geometry;
pub mod pipeline;
pub mod qp;
pub mod replan;
pub mod sampler;
pub mod trajectory;

pub use error::{Error, Result};
