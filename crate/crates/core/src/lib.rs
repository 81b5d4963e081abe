//! Stencil compiler: DSL frontend, analysis, planning, code generation,
//! reference execution and dataflow simulation.

pub mod analysis;
pub mod codegen;
pub mod corpus;
pub mod dataflow;
pub mod diag;
pub mod dump;
pub mod exec;
pub mod frontend;
pub mod hir;
pub mod pipeline;
pub mod planning;
pub mod sim;
