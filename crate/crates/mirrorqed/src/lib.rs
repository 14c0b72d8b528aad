//! File formats, plots and the command-line front end for `mirrorqed-core`.

pub mod cli;
pub mod flags;
pub mod manifest;
pub mod output;
pub mod plot;
pub mod presets;

pub use mirrorqed_core as core;
