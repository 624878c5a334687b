//! Reduced-order model: projection, time stepping, separable sources and
//! the end-to-end pipeline.

pub mod pipeline;
pub mod reduce;
pub mod source;
pub mod time;

pub use pipeline::{
    build_basis, solve_fom, solve_reduced, solve_rom_pipeline, BasisMethod, BasisOutcome, Diagnostics, Discretization,
    PipelineConfig, PipelineOutput, Problem, RomOptions, SourceSpec,
};
pub use reduce::{lift, reduce, rom_initial, RomSystem};
pub use source::{chebyshev_nodes, lagrange_eval, SeparableSource};
pub use time::{integrate, DtRule, TimeGrid};
