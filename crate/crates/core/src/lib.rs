pub mod arith;
pub mod decomp;
pub mod distsim;
pub mod error;
pub mod gen;
pub mod lpcore;
pub mod model;
pub mod morph;
pub mod relax;
pub mod wl;

pub use error::{Error, Result};
