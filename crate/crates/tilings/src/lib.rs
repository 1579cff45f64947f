//! Rectangle tilings of R^d built on exact arithmetic: the notched-cube
//! periodic tiling and its grid moves, two-rectangle staircase tilings and
//! their sequence codes, and samplers and estimators for invariant measures
//! on tiling spaces.
//!
//! See the `examples/` directory for one runnable example per capability and
//! the `tile` binary for the command-line interface.

pub mod exact;
pub mod geom;
pub mod notched;
pub mod patch;
pub mod relocate;
pub mod staircase;

pub use exact::{GeneratorContext, Generator, ModuleScalar, Refinement, Sign};
