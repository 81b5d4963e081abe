//! Lock-step simulation of a dataflow program on a grid of processing
//! elements (PEs) joined by four-neighbour links.
//!
//! PE `(x, y)` owns the Z-column `[x][y][:]` of the grid. All PEs run the same
//! state machine and enter each state together. Arithmetic is carried out in
//! `f64` and rounded to the grid's element type after every operation, which
//! reproduces native `f32` results for `+ - * /`.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::codegen::GeneratedArtifact;
use crate::dataflow::{
    parse_program, CommAction, DataflowProgram, Dir, Operand, PatternId, SsaOp, StateKind,
    LAYOUT_FILE, PROGRAM_FILE,
};
use crate::exec::grid::GridBuffer;
use crate::exec::Grids;
use crate::frontend::{DType, Literal};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("cannot load dataflow program: {0}")]
    Load(String),
    #[error("grid does not match the program layout: {0}")]
    Layout(String),
    #[error("PE ({x}, {y}) in {state} found no payload on the link from {dir}")]
    EmptyLink {
        x: usize,
        y: usize,
        dir: &'static str,
        state: String,
    },
    #[error("{0} payloads were left on links at an iteration boundary")]
    Leftover(usize),
    #[error("step limit of {0} exceeded before STATE_EXIT")]
    StepLimit(u64),
    #[error("simulation already reached STATE_EXIT")]
    Exited,
}

/// One processing element.
#[derive(Debug, Clone)]
pub struct PeState {
    pub x: usize,
    pub y: usize,
    /// Column of the grid the kernel reads.
    pub input: Vec<f64>,
    /// Column of the grid the kernel writes.
    pub output: Vec<f64>,
    /// One column per routed pattern, indexed like [`Simulator::patterns`].
    pub buffers: Vec<Vec<f64>>,
    /// Snapshots taken by the last PREP_TRANS, one per action.
    send: Vec<Vec<f64>>,
    /// Outgoing link queues indexed by direction (N, E, S, W).
    links: [Vec<Vec<f64>>; 4],
    pub iterations: u64,
}

/// Summary of one lock-step step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub step: u64,
    pub state: String,
    /// Payloads placed on links.
    pub sends: u64,
    /// Payloads taken from links.
    pub receives: u64,
    /// Sends off the active rectangle, dropped.
    pub discarded: u64,
    /// Receives from off the active rectangle, replaced by zeros.
    pub zero_filled: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimulationTrace {
    pub steps: Vec<StepRecord>,
    /// Steps between leaving STATE_SETUP and entering STATE_TEARDOWN.
    pub timer: u64,
}

impl SimulationTrace {
    /// How many times `state` was entered.
    pub fn entries(&self, state: &str) -> usize {
        self.steps.iter().filter(|s| s.state == state).count()
    }
}

impl fmt::Display for SimulationTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "step state sends receives discarded zero_filled")?;
        for s in &self.steps {
            writeln!(
                f,
                "{} {} {} {} {} {}",
                s.step, s.state, s.sends, s.receives, s.discarded, s.zero_filled
            )?;
        }
        writeln!(f, "timer {}", self.timer)
    }
}

fn dir_index(d: Dir) -> usize {
    match d {
        Dir::N => 0,
        Dir::E => 1,
        Dir::S => 2,
        Dir::W => 3,
    }
}

fn round(dtype: DType, x: f64) -> f64 {
    match dtype {
        DType::F32 => x as f32 as f64,
        DType::F64 => x,
    }
}

fn lit(dtype: DType, c: &Literal) -> f64 {
    match dtype {
        DType::F32 => c.parse::<f32>().map_or(f64::NAN, f64::from),
        DType::F64 => c.parse::<f64>().unwrap_or(f64::NAN),
    }
}

pub struct Simulator {
    pub program: DataflowProgram,
    /// Routed patterns in buffer order.
    pub patterns: Vec<PatternId>,
    pub pes: Vec<PeState>,
    pub state: usize,
    pub trace: SimulationTrace,
    nx: usize,
    ny: usize,
    nz: usize,
    swapped: bool,
    pool: Option<rayon::ThreadPool>,
}

/// Parse the artifact's layout and program files and place `grid` on the PEs.
pub fn load_program(a: &GeneratedArtifact, grid: &GridBuffer) -> Result<Simulator, SimError> {
    let layout = a
        .file(LAYOUT_FILE)
        .ok_or_else(|| SimError::Load(format!("artifact has no {LAYOUT_FILE}")))?;
    let program = a
        .file(PROGRAM_FILE)
        .ok_or_else(|| SimError::Load(format!("artifact has no {PROGRAM_FILE}")))?;
    let p = parse_program(layout, program).map_err(SimError::Load)?;
    Simulator::new(p, grid)
}

impl Simulator {
    pub fn new(program: DataflowProgram, grid: &GridBuffer) -> Result<Self, SimError> {
        let p = &program;
        let mismatch = |m: String| Err(SimError::Layout(m));
        if grid.shape != p.extents {
            return mismatch(format!(
                "grid shape {:?}, program extents {:?}",
                grid.shape, p.extents
            ));
        }
        if grid.dtype != p.dtype {
            return mismatch(format!(
                "grid is {}, program is {}",
                grid.dtype.name(),
                p.dtype.name()
            ));
        }
        if grid.order != p.order {
            return mismatch(format!(
                "grid halo {}, program halo {}",
                grid.order, p.order
            ));
        }
        let (nx, ny) = (p.extents[0], p.extents[1]);
        let nz = p.extents.get(2).copied().unwrap_or(1);
        if p.layout.active != (nx, ny) || p.layout.nz != nz {
            return mismatch(format!(
                "active rectangle {}x{} with columns of {}, grid {nx}x{ny}x{nz}",
                p.layout.active.0, p.layout.active.1, p.layout.nz
            ));
        }
        if !grid.halo_is_zero() {
            return mismatch("halo cells must be zero".into());
        }
        let patterns: Vec<PatternId> = p.routed.iter().copied().collect();
        let actions = p
            .schedule
            .iter()
            .map(|s| s.actions.len())
            .max()
            .unwrap_or(0);
        let mut pes = Vec::with_capacity(nx * ny);
        for x in 0..nx {
            for y in 0..ny {
                let column: Vec<f64> = (0..nz)
                    .map(|z| {
                        let pt: Vec<i64> = if p.extents.len() == 3 {
                            vec![x as i64, y as i64, z as i64]
                        } else {
                            vec![x as i64, y as i64]
                        };
                        grid.get(&pt)
                    })
                    .collect();
                pes.push(PeState {
                    x,
                    y,
                    input: column,
                    output: vec![0.0; nz],
                    buffers: vec![vec![0.0; nz]; patterns.len()],
                    send: vec![Vec::new(); actions],
                    links: Default::default(),
                    iterations: 0,
                });
            }
        }
        let swapped = p.result == p.input && p.input != p.output;
        Ok(Simulator {
            patterns,
            pes,
            state: 0,
            trace: SimulationTrace::default(),
            nx,
            ny,
            nz,
            swapped,
            pool: None,
            program,
        })
    }

    /// Evaluate PEs on a dedicated pool of `n` workers.
    pub fn with_workers(mut self, n: usize) -> Self {
        self.pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().ok();
        self
    }

    pub fn state_name(&self) -> &str {
        &self.program.machine.states[self.state].name
    }

    pub fn is_done(&self) -> bool {
        self.program.machine.states[self.state].kind == StateKind::Exit
    }

    fn pe_index(&self, x: i64, y: i64) -> Option<usize> {
        (x >= 0 && y >= 0 && (x as usize) < self.nx && (y as usize) < self.ny)
            .then(|| x as usize * self.ny + y as usize)
    }

    fn neighbour(&self, pe: usize, d: Dir) -> Option<usize> {
        let (dx, dy) = d.delta();
        let p = &self.pes[pe];
        self.pe_index(p.x as i64 + dx, p.y as i64 + dy)
    }

    fn buffer_slot(&self, p: PatternId) -> Option<usize> {
        self.patterns.iter().position(|&q| q == p)
    }

    /// Run the current state's action on every PE, record it and advance.
    pub fn step(&mut self) -> Result<(), SimError> {
        if self.is_done() {
            return Err(SimError::Exited);
        }
        let st = self.program.machine.states[self.state].clone();
        let mut rec = StepRecord {
            step: self.trace.steps.len() as u64,
            state: st.name.clone(),
            sends: 0,
            receives: 0,
            discarded: 0,
            zero_filled: 0,
        };
        match st.kind {
            StateKind::Setup | StateKind::Teardown | StateKind::Exit => {}
            StateKind::PrepTrans(k) => self.prep(k),
            StateKind::Trans(k) => self.trans(k, &st.name, &mut rec)?,
            StateKind::Update => self.update(),
            StateKind::Check => {
                let left: usize = self
                    .pes
                    .iter()
                    .flat_map(|p| p.links.iter())
                    .map(Vec::len)
                    .sum();
                if left > 0 {
                    return Err(SimError::Leftover(left));
                }
            }
        }
        if !matches!(
            st.kind,
            StateKind::Setup | StateKind::Teardown | StateKind::Exit
        ) {
            self.trace.timer += 1;
        }
        self.trace.steps.push(rec);
        let done = self.pes.first().map_or(0, |p| p.iterations);
        if let Some(next) = self.program.machine.successor(self.state, done) {
            self.state = next;
        }
        Ok(())
    }

    fn prep(&mut self, k: usize) {
        let actions = self.program.schedule[k].actions.clone();
        let slots: Vec<Option<usize>> = actions.iter().map(|a| self.buffer_slot(a.send)).collect();
        let pes = &mut self.pes;
        let mut work = move || {
            pes.par_iter_mut().for_each(|pe| {
                for (n, a) in actions.iter().enumerate() {
                    let src = match (a.send, slots[n]) {
                        (PatternId::Center, _) => &pe.input,
                        (_, Some(s)) => &pe.buffers[s],
                        (_, None) => unreachable!("schedule sends an unrouted pattern"),
                    };
                    pe.send[n].clone_from(src);
                }
            })
        };
        match &self.pool {
            Some(pool) => pool.install(work),
            None => work(),
        }
    }

    fn trans(&mut self, k: usize, name: &str, rec: &mut StepRecord) -> Result<(), SimError> {
        let actions: Vec<CommAction> = self.program.schedule[k].actions.clone();
        // enqueue on links that lead to a PE, drop the rest
        for pe in 0..self.pes.len() {
            for (n, a) in actions.iter().enumerate() {
                if self.neighbour(pe, a.send_to).is_some() {
                    let payload = self.pes[pe].send[n].clone();
                    self.pes[pe].links[dir_index(a.send_to)].push(payload);
                    rec.sends += 1;
                } else {
                    rec.discarded += 1;
                }
            }
        }
        // receive: the neighbour in direction `d` sends toward `d.opposite()`
        let mut incoming: Vec<Vec<Option<Vec<f64>>>> = Vec::with_capacity(self.pes.len());
        for pe in 0..self.pes.len() {
            let mut got = Vec::with_capacity(actions.len());
            for a in &actions {
                match self.neighbour(pe, a.recv_from) {
                    None => {
                        rec.zero_filled += 1;
                        got.push(None);
                    }
                    Some(src) => {
                        let q = &mut self.pes[src].links[dir_index(a.recv_from.opposite())];
                        if q.is_empty() {
                            let p = &self.pes[pe];
                            return Err(SimError::EmptyLink {
                                x: p.x,
                                y: p.y,
                                dir: a.recv_from.word(),
                                state: name.to_string(),
                            });
                        }
                        got.push(Some(q.remove(0)));
                        rec.receives += 1;
                    }
                }
            }
            incoming.push(got);
        }
        let slots: Vec<usize> = actions
            .iter()
            .map(|a| {
                self.buffer_slot(a.recv_into)
                    .expect("received pattern is routed")
            })
            .collect();
        let nz = self.nz;
        for (pe, got) in self.pes.iter_mut().zip(incoming) {
            for (n, g) in got.into_iter().enumerate() {
                pe.buffers[slots[n]] = g.unwrap_or_else(|| vec![0.0; nz]);
            }
        }
        Ok(())
    }

    fn update(&mut self) {
        let dtype = self.program.dtype;
        let ops = self.program.ssa.ops.clone();
        let patterns = self.patterns.clone();
        let nz = self.nz;
        let swapped = self.swapped;
        let pes = &mut self.pes;
        let mut work = move || {
            pes.par_iter_mut().for_each(|pe| {
                let out = eval_column(&ops, pe, &patterns, nz, dtype);
                pe.output = out;
                if swapped {
                    std::mem::swap(&mut pe.input, &mut pe.output);
                }
                pe.iterations += 1;
            })
        };
        match &self.pool {
            Some(pool) => pool.install(work),
            None => work(),
        }
    }

    /// Step until STATE_EXIT and reassemble the grids.
    pub fn run_to_exit(&mut self) -> Result<(Grids, SimulationTrace), SimError> {
        let limit = self.program.machine.states.len() as u64 * self.program.iterations.max(1) * 4;
        let mut n = 0u64;
        while !self.is_done() {
            if n >= limit {
                return Err(SimError::StepLimit(limit));
            }
            self.step()?;
            n += 1;
        }
        // record entry into STATE_EXIT
        self.trace.steps.push(StepRecord {
            step: self.trace.steps.len() as u64,
            state: self.state_name().to_string(),
            sends: 0,
            receives: 0,
            discarded: 0,
            zero_filled: 0,
        });
        Ok((self.grids(), self.trace.clone()))
    }

    /// Current contents of the input and output grids.
    pub fn grids(&self) -> Grids {
        let p = &self.program;
        let mut input = GridBuffer::zeros(p.dtype, &p.extents, p.order);
        let mut output = GridBuffer::zeros(p.dtype, &p.extents, p.order);
        for pe in &self.pes {
            for z in 0..self.nz {
                let pt: Vec<i64> = if p.extents.len() == 3 {
                    vec![pe.x as i64, pe.y as i64, z as i64]
                } else {
                    vec![pe.x as i64, pe.y as i64]
                };
                input.set(&pt, pe.input[z]);
                output.set(&pt, pe.output[z]);
            }
        }
        let mut g = BTreeMap::new();
        g.insert(p.output.clone(), output);
        g.insert(p.input.clone(), input);
        g
    }

    /// Column held by PE `(x, y)` for `pattern`.
    pub fn buffer(&self, x: usize, y: usize, pattern: PatternId) -> Option<&[f64]> {
        let pe = &self.pes[self.pe_index(x as i64, y as i64)?];
        if pattern == PatternId::Center {
            return Some(&pe.input);
        }
        Some(&pe.buffers[self.buffer_slot(pattern)?])
    }

    pub fn extents(&self) -> (usize, usize, usize) {
        (self.nx, self.ny, self.nz)
    }
}

fn eval_column(
    ops: &[SsaOp],
    pe: &PeState,
    patterns: &[PatternId],
    nz: usize,
    dtype: DType,
) -> Vec<f64> {
    let mut temps: Vec<Vec<f64>> = Vec::with_capacity(ops.len());
    let column = |o: &Operand, temps: &[Vec<f64>], z: usize| -> f64 {
        match o {
            Operand::Const(c) => lit(dtype, c),
            Operand::Temp(t) => temps[*t][z],
            Operand::Column { pattern, zshift } => {
                let q = z as i64 + zshift;
                if q < 0 || q >= nz as i64 {
                    return 0.0;
                }
                let src = if *pattern == PatternId::Center {
                    &pe.input
                } else {
                    let s = patterns
                        .iter()
                        .position(|p| p == pattern)
                        .expect("operand pattern is routed");
                    &pe.buffers[s]
                };
                src[q as usize]
            }
        }
    };
    for op in ops {
        let mut out = Vec::with_capacity(nz);
        for z in 0..nz {
            let v = |o: &Operand| column(o, &temps, z);
            let r = |x: f64| round(dtype, x);
            let x = match op {
                SsaOp::MulConst { c, x, .. } => r(lit(dtype, c) * v(x)),
                SsaOp::Add(a, b) => r(v(a) + v(b)),
                SsaOp::Sub(a, b) => r(v(a) - v(b)),
                SsaOp::Mul(a, b) => r(v(a) * v(b)),
                SsaOp::Div(a, b) => r(v(a) / v(b)),
                SsaOp::Neg(a) => -v(a),
                SsaOp::Mov(a) => v(a),
                SsaOp::Fma { acc, c, x, .. } => {
                    let prod = r(lit(dtype, c) * v(x));
                    r(v(acc) + prod)
                }
            };
            out.push(x);
        }
        temps.push(out);
    }
    temps.pop().unwrap_or_else(|| vec![0.0; nz])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::generate;
    use crate::corpus::{lookup, program_source, Iterations};
    use crate::dataflow::state::UPDATE;
    use crate::exec::{compare, initial_grids, run_target};
    use crate::pipeline::{compile_source, Compiled, Options};

    fn build(kernel: &str, ext: &[usize], t: u64) -> Compiled {
        let k = lookup(kernel).unwrap();
        let src = program_source(&k, ext, Iterations::Fixed(t), "dataflow");
        compile_source(&src, &Options::default()).unwrap()
    }

    fn seeded(c: &Compiled, seed: u64) -> Grids {
        let mut g = initial_grids(&c.target);
        for (n, b) in g.values_mut().enumerate() {
            b.fill_log_uniform(seed + n as u64, 1e-4, 1e5);
        }
        g
    }

    fn simulate(c: &Compiled, g: &Grids) -> (Grids, SimulationTrace) {
        let a = generate(&c.target, &c.plan).unwrap();
        let crate::pipeline::Plan::Dataflow(p) = &c.plan else {
            panic!()
        };
        let mut s = load_program(&a, &g[&p.input]).unwrap();
        s.run_to_exit().unwrap()
    }

    #[test]
    fn box3d2r_matches_reference_bitwise() {
        let c = build("box3d2r", &[8, 8, 4], 3);
        let g = seeded(&c, 1);
        let (got, trace) = simulate(&c, &g);
        let mut want = g.clone();
        run_target(&c.target, &mut want).unwrap();
        let r = compare(&got["u"], &want["u"]).unwrap();
        assert_eq!(r.max_error, 0.0, "{r}");
        assert_eq!(trace.entries(UPDATE), 3);
    }

    #[test]
    fn neighbour_buffers_after_comm_phase() {
        let c = build("box3d2r", &[7, 6, 3], 1);
        let g = seeded(&c, 2);
        let crate::pipeline::Plan::Dataflow(p) = &c.plan else {
            panic!()
        };
        let a = generate(&c.target, &c.plan).unwrap();
        let mut s = load_program(&a, &g["u"]).unwrap();
        while s.program.machine.states[s.state].kind != StateKind::Update {
            s.step().unwrap();
        }
        let u = &g["u"];
        for x in 0..7i64 {
            for y in 0..6i64 {
                for pat in p.patterns.non_center() {
                    let (dx, dy) = pat.offset();
                    let col = s.buffer(x as usize, y as usize, pat).unwrap();
                    for z in 0..3i64 {
                        let (qx, qy) = (x + dx, y + dy);
                        let want = if (0..7).contains(&qx) && (0..6).contains(&qy) {
                            u.get(&[qx, qy, z])
                        } else {
                            0.0
                        };
                        assert_eq!(col[z as usize], want, "PE ({x},{y}) {pat} z={z}");
                    }
                }
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = build("star3d3r", &[9, 7, 5], 2);
        let g = seeded(&c, 3);
        let a = generate(&c.target, &c.plan).unwrap();
        let runs: Vec<(Grids, SimulationTrace)> = [1, 3, 8]
            .iter()
            .map(|&w| {
                load_program(&a, &g["u"])
                    .unwrap()
                    .with_workers(w)
                    .run_to_exit()
                    .unwrap()
            })
            .collect();
        for r in &runs[1..] {
            assert_eq!(r.0["u"].to_bytes(), runs[0].0["u"].to_bytes());
            assert_eq!(r.1, runs[0].1);
        }
    }

    #[test]
    fn load_rejects_mismatched_grid() {
        let c = build("star3d1r", &[4, 4, 3], 1);
        let a = generate(&c.target, &c.plan).unwrap();
        let big = GridBuffer::zeros(DType::F32, &[5, 4, 3], 1);
        assert!(matches!(load_program(&a, &big), Err(SimError::Layout(_))));
        let mut halo = GridBuffer::zeros(DType::F32, &[4, 4, 3], 1);
        halo.set(&[-1, 0, 0], 1.0);
        assert!(matches!(load_program(&a, &halo), Err(SimError::Layout(_))));
    }

    #[test]
    fn zero_input_stays_zero() {
        let c = build("box3d1r", &[5, 5, 3], 2);
        let g = initial_grids(&c.target);
        let (got, _) = simulate(&c, &g);
        assert!(got["u"].interior_values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn stepping_past_exit_fails() {
        let c = build("star2d1r", &[3, 3], 1);
        let g = initial_grids(&c.target);
        let a = generate(&c.target, &c.plan).unwrap();
        let mut s = load_program(&a, &g["u"]).unwrap();
        s.run_to_exit().unwrap();
        assert_eq!(s.step(), Err(SimError::Exited));
    }
}
