//! DSL frontend: tokenizer, parser, validator and pretty-printer.

pub mod ast;
pub mod bind;
pub mod lexer;
mod parser;
pub mod printer;
pub mod validate;

pub use ast::*;
pub use bind::{kernel_grid_context, kernel_scalar_env, resolve_bindings, Bindings};
pub use parser::parse_source;
pub use printer::{print_expr, print_unit};
pub use validate::{check_compile_time_bounds, launch_keys, validate};
