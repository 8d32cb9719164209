//! Signed graph augmentation toolkit.
//!
//! The pipeline has three stages built on a shared signed-graph model:
//!
//! 1. [`augment`]: a pre-trained SGCN encoder proposes edge additions and
//!    deletions, and only additions that close balanced triangles are kept.
//! 2. [`curriculum`]: training edges are scored by how strongly balance theory
//!    contradicts them and are fed to the final model easiest first.
//! 3. [`evalbench`]: link sign prediction metrics, multi-seed experiments,
//!    random-perturbation baselines and parameter sweeps.
//!
//! [`balance`] holds triangle enumeration and the balance degrees, and
//! [`encoder`] the SGCN encoder with its three-class pair classifier.

pub mod augment;
pub mod balance;
pub mod cli;
pub mod curriculum;
pub mod encoder;
pub mod error;
pub mod evalbench;
pub mod graph;
pub mod rng;

pub use error::{Error, Result};
pub use graph::{EdgeSample, Sign, SignedGraph};
