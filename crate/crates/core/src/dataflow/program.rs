//! Complete dataflow program for one target: recognition of the supported
//! target shape plus every DFIR artifact.

use std::collections::BTreeSet;
use std::fmt;

use super::layout::{
    map_grid_to_fabric, Margins, PeLayout, DEFAULT_FABRIC, DEFAULT_MARGINS, DEFAULT_MEMORY_BUDGET,
};
use super::pattern::{annotate_zmax, PatternId, PatternSet};
use super::schedule::{
    build_comm_schedule, render_schedule, routing_closure, sort_dependencies, CommStep,
};
use super::ssa::{lower_to_ssa, SsaProgram};
use super::state::{build_state_machine, StateMachine};
use crate::frontend::DType;
use crate::hir::{HirMap, HirStmt, HirTarget};
use crate::planning::BackendConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct DataflowProgram {
    pub kernel: String,
    pub dtype: DType,
    /// Logical grid extents, 2 or 3 entries.
    pub extents: Vec<usize>,
    /// Halo width of the grid files read and written.
    pub order: usize,
    /// Grid read by the stencil.
    pub input: String,
    /// Grid written by the stencil.
    pub output: String,
    /// Target grid holding the final state.
    pub result: String,
    pub iterations: u64,
    /// Patterns the kernel reads, with Z reach.
    pub patterns: PatternSet,
    /// Patterns routed to every PE, including staging hops.
    pub routed: BTreeSet<PatternId>,
    pub order_sorted: Vec<PatternId>,
    pub schedule: Vec<CommStep>,
    pub machine: StateMachine,
    pub ssa: SsaProgram,
    pub layout: PeLayout,
}

impl DataflowProgram {
    pub fn dims(&self) -> usize {
        self.extents.len()
    }
}

/// The single shape a dataflow target may take: a counted loop around one
/// whole-domain map, optionally followed by a swap of its input and output.
fn recognize(h: &HirTarget) -> Result<(&HirMap, u64, bool), String> {
    let unsupported = || {
        format!(
            "target `{}` is not supported by the dataflow backend: expected `for _ in range(T)` around one whole-domain map, optionally followed by a swap of its input and output",
            h.name
        )
    };
    let (m, count, swap) = match h.body.as_slice() {
        [HirStmt::Map(m)] => (m, 1, None),
        [HirStmt::Loop { count, body }] => match body.as_slice() {
            [HirStmt::Map(m)] => (m, *count, None),
            [HirStmt::Map(m), HirStmt::Swap(a, b)] => (m, *count, Some((a, b))),
            _ => return Err(unsupported()),
        },
        _ => return Err(unsupported()),
    };
    if m.updates.len() != 1 {
        return Err(format!(
            "dataflow kernel `{}` must update exactly one grid",
            m.kernel
        ));
    }
    let reads = m.reads();
    if reads.len() != 1 {
        return Err(format!(
            "dataflow kernel `{}` must read exactly one grid",
            m.kernel
        ));
    }
    let extents = &h.grids[&reads[0]].shape;
    if !m.covers_full_domain(extents) || m.regions.len() != 1 {
        return Err(format!(
            "dataflow map of `{}` must cover the whole grid without boundary regions",
            m.kernel
        ));
    }
    let swapped = match swap {
        None => false,
        Some((a, b)) => {
            let pair = BTreeSet::from([a.as_str(), b.as_str()]);
            if pair != BTreeSet::from([reads[0].as_str(), m.updates[0].dest.as_str()]) {
                return Err(format!(
                    "swap in target `{}` must exchange the map's input and output",
                    h.name
                ));
            }
            true
        }
    };
    Ok((m, count, swapped))
}

fn cfg_layout(cfg: &BackendConfig, extents: &[usize], elem: usize) -> Result<PeLayout, String> {
    let fabric = match cfg.dims("fabric", 2, 2)? {
        Some(v) => (v[0], v[1]),
        None => DEFAULT_FABRIC,
    };
    let margins = match cfg.get("margins") {
        None => DEFAULT_MARGINS,
        Some(v) => match v.as_ints().as_deref() {
            Some(&[n, e, s, w]) if [n, e, s, w].iter().all(|&x| x >= 0) => Margins {
                north: n as usize,
                east: e as usize,
                south: s as usize,
                west: w as usize,
            },
            _ => {
                return Err(format!(
                "parameter `margins` expects four non-negative integers (N, E, S, W), got `{v}`"
            ))
            }
        },
    };
    let budget = match cfg.get("memoryBudget") {
        None => DEFAULT_MEMORY_BUDGET,
        Some(v) => match v.as_int() {
            Some(b) if b > 0 => b as usize,
            _ => {
                return Err(format!(
                    "parameter `memoryBudget` expects a positive byte count, got `{v}`"
                ))
            }
        },
    };
    map_grid_to_fabric(extents, elem, fabric, margins, budget)
}

pub fn build_dataflow(h: &HirTarget, cfg: &BackendConfig) -> Result<DataflowProgram, String> {
    let (m, iterations, swapped) = recognize(h)?;
    let input = m.reads().remove(0);
    let output = m.updates[0].dest.clone();
    let grid = &h.grids[&input];
    let dims = grid.shape.len();
    if !(2..=3).contains(&dims) {
        return Err(format!(
            "dataflow backend needs a 2D or 3D kernel, `{}` is {dims}D",
            m.kernel
        ));
    }
    let layout = cfg_layout(cfg, &grid.shape, grid.dtype.size())?;

    let offsets = m.info.all_offsets();
    let patterns = annotate_zmax(offsets.iter().map(|o| o.0.as_slice()));
    if let Some((p, z)) = patterns.zmax.iter().find(|(_, &z)| z as usize > grid.order) {
        return Err(format!(
            "pattern {p} reaches {z} planes along Z, beyond the grid halo of {}",
            grid.order
        ));
    }
    let routed = routing_closure(patterns.non_center());
    let order_sorted = sort_dependencies(&routed);
    let schedule = build_comm_schedule(&order_sorted)?;
    let machine = build_state_machine(&schedule, iterations)?;
    let ssa = lower_to_ssa(&m.updates[0].expr, &input, dims);
    let result = if swapped {
        input.clone()
    } else {
        output.clone()
    };
    Ok(DataflowProgram {
        kernel: m.kernel.clone(),
        dtype: grid.dtype,
        extents: grid.shape.clone(),
        order: grid.order,
        input,
        output,
        result,
        iterations,
        patterns,
        routed,
        order_sorted,
        schedule,
        machine,
        ssa,
        layout,
    })
}

/// Text rendering for `inspect --dfir`.
pub fn render_dfir(p: &DataflowProgram) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "kernel {} ({}D, {}), {} iterations\n",
        p.kernel,
        p.dims(),
        p.dtype.name(),
        p.iterations
    ));
    s.push_str("\npatterns (zmax):\n");
    for pat in &p.patterns.patterns {
        s.push_str(&format!("  {pat} {}\n", p.patterns.zmax[pat]));
    }
    let staging: Vec<String> = p
        .routed
        .iter()
        .filter(|r| !p.patterns.patterns.contains(r))
        .map(|r| r.to_string())
        .collect();
    if !staging.is_empty() {
        s.push_str(&format!("staging patterns: {}\n", staging.join(" ")));
    }
    let order: Vec<String> = p.order_sorted.iter().map(|x| x.to_string()).collect();
    s.push_str(&format!("\norder: {}\n", order.join(" ")));
    s.push_str("\nschedule:\n");
    s.push_str(&render_schedule(&p.schedule));
    s.push_str(&format!("\nstates ({}):\n", p.machine.states.len()));
    s.push_str(&p.machine.to_string());
    s.push_str("\nssa:\n");
    s.push_str(&p.ssa.to_string());
    s.push_str("\nlayout:\n");
    s.push_str(&p.layout.to_string());
    s
}

impl fmt::Display for DataflowProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_dfir(self))
    }
}
