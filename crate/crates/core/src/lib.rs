pub mod analysis;
pub mod config;
pub mod dispersion;
pub mod dynamics;
pub mod error;
pub mod finitesize;
pub mod freespace;
pub mod impurity;
pub mod kernels;
pub mod lattice;
pub mod linalg;
pub mod singleexc;
pub mod specfun;
pub mod symmetry;
pub mod twoexc;

pub use error::{Error, Result};
