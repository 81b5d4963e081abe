//! Dataflow IR: stencil point index patterns, communication schedule, state
//! machine, SSA column program and PE layout.

pub mod format;
pub mod layout;
pub mod pattern;
pub mod program;
pub mod schedule;
pub mod ssa;
pub mod state;

pub use format::{parse_program, render_layout, render_program, LAYOUT_FILE, PROGRAM_FILE};
pub use layout::{map_grid_to_fabric, Margins, PeLayout};
pub use pattern::{annotate_zmax, pattern_id_of, Dir, PatternId, PatternSet};
pub use program::{build_dataflow, render_dfir, DataflowProgram};
pub use schedule::{
    build_comm_schedule, render_schedule, routing_closure, sort_dependencies, CommAction, CommStep,
};
pub use ssa::{lower_to_ssa, Operand, SsaOp, SsaProgram};
pub use state::{build_state_machine, Guard, State, StateKind, StateMachine};
