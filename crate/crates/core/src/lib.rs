//! Good-ball covers of finite metric-measure spaces.
//!
//! A run takes a finite sample of a Riemannian manifold (distance matrix,
//! volume weights, injectivity radius), finds at every point the largest
//! ball with controlled volume growth, packs a maximal disjoint family of
//! such balls, and takes the nerve of the doubled balls. The nerve's Betti
//! numbers are compared with the manifold's, and its simplex counts with the
//! closed-form bound in terms of `vol / inj^n`.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod goodballs;
pub mod homology;
pub mod io;
pub mod nerve;
pub mod packing;
pub mod pipeline;
pub mod space;

pub use error::{Error, Result};
