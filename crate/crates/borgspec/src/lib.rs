//! Command-line tools around `borgspec_core`: operator and ODE spec files,
//! tabular exports, SVG plots and a rayon field evaluator.

pub mod cli;
pub mod formats;
pub mod parallel;
pub mod plot;
pub mod presets;

pub use borgspec_core as engine;
