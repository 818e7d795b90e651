//! The user guide, embedded chapter by chapter.
//!
//! The modules below hold the same Markdown that `mdbook build book/`
//! renders, pulled in with `include_str!`. Every fenced Rust example
//! in the guide therefore compiles and runs as a doc-test of this
//! crate, so the prose cannot drift from the code it describes.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/solver.md")]
pub mod solver {}

#[doc = include_str!("../../../book/src/coherence.md")]
pub mod coherence {}

#[doc = include_str!("../../../book/src/synthetic.md")]
pub mod synthetic {}

#[doc = include_str!("../../../book/src/detection.md")]
pub mod detection {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
