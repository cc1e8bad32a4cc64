//! Collision-model simulation of a driven two-level atom in a thermal
//! waveguide field.
//!
//! The atom interacts sequentially with short field units, each prepared
//! in a displaced thermal state. The reduced dynamics reproduces the
//! optical Bloch equations; the per-collision splitting of the joint state
//! change into product and correlation parts feeds a bipartite energy
//! ledger, photon-flow and spectral observables, and entropy production.
//!
//! Conventions: ħ = 1, atomic basis ordered {|e⟩, |g⟩}, atom factor first
//! in every tensor product.

pub mod cli;
pub mod collider;
pub mod densemath;
pub mod energetics;
pub mod entropy;
pub mod error;
pub mod fieldobs;
pub mod model;
pub mod obe;
pub mod svg;
pub mod verify;

pub use densemath::{CplxMatrix, C64};
pub use error::{Error, Result};
pub use model::ModelParams;
