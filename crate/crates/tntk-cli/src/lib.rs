//! Library side of the workbench binary: file formats, the kernel grid
//! mini-language, statistics helpers, and the command implementations.

pub mod commands;
pub mod io;
pub mod parallel;
pub mod specgrid;
pub mod stats;
