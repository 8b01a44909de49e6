//! Runs the code blocks of the guide in `book/src` as doc-tests, one module
//! per chapter so a failure points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/grids.md")]
pub mod grids {}
#[doc = include_str!("../../../book/src/linear-flow.md")]
pub mod linear_flow {}
#[doc = include_str!("../../../book/src/time-stepping.md")]
pub mod time_stepping {}
#[doc = include_str!("../../../book/src/decay-analysis.md")]
pub mod decay_analysis {}
#[doc = include_str!("../../../book/src/blowup.md")]
pub mod blowup {}
#[doc = include_str!("../../../book/src/command-line.md")]
pub mod command_line {}
