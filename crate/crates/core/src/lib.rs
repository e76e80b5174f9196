//! Affine blender-horseshoe models, their certification and the folding
//! construction of robust tangencies.

pub mod axioms;
pub mod blender_property;
pub mod central_reduction;
pub mod cli;
pub mod disks;
pub mod error;
pub mod folding;
pub mod geometry;
pub mod map;
pub mod model;
pub mod orbit;
pub mod perturbation;

pub use error::{Error, Result};
