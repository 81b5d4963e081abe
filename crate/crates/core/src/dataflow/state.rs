//! Per-PE control state machine.

use std::fmt;

use super::schedule::CommStep;

pub const SETUP: &str = "STATE_SETUP";
pub const UPDATE: &str = "STATE_UPDATE_STENCIL";
pub const CHECK: &str = "STATE_ITERATION_CHECK";
pub const TEARDOWN: &str = "STATE_TEARDOWN";
pub const EXIT: &str = "STATE_EXIT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    Setup,
    /// Snapshot send buffers for schedule step `k`.
    PrepTrans(usize),
    /// Move data over the links for schedule step `k`.
    Trans(usize),
    Update,
    Check,
    Teardown,
    Exit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Guard {
    Always,
    /// Taken while completed iterations are below the bound.
    IterationsBelow(u64),
    /// Taken once the bound is reached.
    IterationsDone(u64),
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::Always => f.write_str("always"),
            Guard::IterationsBelow(t) => write!(f, "iterations<{t}"),
            Guard::IterationsDone(t) => write!(f, "iterations>={t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub name: String,
    pub kind: StateKind,
    /// `(guard, successor index)` in evaluation order.
    pub next: Vec<(Guard, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMachine {
    pub states: Vec<State>,
    pub iterations: u64,
}

impl StateMachine {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.states.iter().map(|s| s.name.as_str()).collect()
    }

    /// Successor of state `at` given completed iterations.
    pub fn successor(&self, at: usize, done: u64) -> Option<usize> {
        self.states[at].next.iter().find_map(|&(g, to)| {
            let ok = match g {
                Guard::Always => true,
                Guard::IterationsBelow(t) => done < t,
                Guard::IterationsDone(t) => done >= t,
            };
            ok.then_some(to)
        })
    }
}

pub fn build_state_machine(schedule: &[CommStep], iterations: u64) -> Result<StateMachine, String> {
    if iterations == 0 {
        return Err("dataflow programs need at least one iteration".to_string());
    }
    let mut states = vec![State {
        name: SETUP.into(),
        kind: StateKind::Setup,
        next: Vec::new(),
    }];
    for (k, s) in schedule.iter().enumerate() {
        states.push(State {
            name: format!("STATE_PREP_TRANS_{}", s.label()),
            kind: StateKind::PrepTrans(k),
            next: Vec::new(),
        });
        states.push(State {
            name: format!("STATE_TRANS_{}", s.label()),
            kind: StateKind::Trans(k),
            next: Vec::new(),
        });
    }
    for (name, kind) in [
        (UPDATE, StateKind::Update),
        (CHECK, StateKind::Check),
        (TEARDOWN, StateKind::Teardown),
        (EXIT, StateKind::Exit),
    ] {
        states.push(State {
            name: name.into(),
            kind,
            next: Vec::new(),
        });
    }
    let update = 1 + 2 * schedule.len();
    let (check, teardown, exit) = (update + 1, update + 2, update + 3);
    for (k, st) in states.iter_mut().enumerate() {
        st.next = match st.kind {
            StateKind::Setup
            | StateKind::PrepTrans(_)
            | StateKind::Trans(_)
            | StateKind::Update => {
                vec![(Guard::Always, k + 1)]
            }
            StateKind::Check => vec![
                (Guard::IterationsBelow(iterations), 1),
                (Guard::IterationsDone(iterations), teardown),
            ],
            StateKind::Teardown => vec![(Guard::Always, exit)],
            StateKind::Exit => Vec::new(),
        };
    }
    debug_assert_eq!(states[check].kind, StateKind::Check);
    Ok(StateMachine { states, iterations })
}

impl fmt::Display for StateMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.states {
            write!(f, "{}", s.name)?;
            for (g, to) in &s.next {
                write!(f, " [{g}] -> {}", self.states[*to].name)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
