//! The guide lives in `book/src`. mdbook cannot test listings that use an
//! external crate, so each chapter is pulled in here and `cargo test --doc`
//! runs its code blocks.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/discrete.md")]
pub mod discrete {}
#[doc = include_str!("../../../book/src/conjugate.md")]
pub mod conjugate {}
#[doc = include_str!("../../../book/src/laplace.md")]
pub mod laplace {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/mcmc.md")]
pub mod mcmc {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
