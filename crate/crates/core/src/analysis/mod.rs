//! High-level stencil analysis: offset sets, shape classification, radius,
//! operation counts, map desugaring and region decomposition.

mod linear;
mod mapspec;
mod regions;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::frontend::{KernelDecl, Offset};

pub use linear::{linear_form, LinearForm, Term};
pub use mapspec::{desugar_map, desugar_map_symbolic, MapSpec, SymMapSpec};
pub use regions::{decompose_regions, LoopNest, Region, RegionTag, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Star,
    Box,
    Other,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Star => "star",
            Shape::Box => "box",
            Shape::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StencilInfo {
    pub kernel: String,
    pub dims: usize,
    pub radius: u64,
    pub shape: Shape,
    /// Offsets read from each input grid.
    pub offsets: BTreeMap<String, BTreeSet<Offset>>,
    pub flops_per_point: u64,
    /// Grids written by the kernel.
    pub dests: Vec<String>,
}

impl StencilInfo {
    /// Union of offsets over every read grid.
    pub fn all_offsets(&self) -> BTreeSet<Offset> {
        self.offsets.values().flatten().cloned().collect()
    }

    pub fn read_grids(&self) -> impl Iterator<Item = &String> {
        self.offsets.keys()
    }

    pub fn point_count(&self) -> usize {
        self.all_offsets().len()
    }
}

pub fn analyze_kernel(k: &KernelDecl) -> StencilInfo {
    let mut offsets: BTreeMap<String, BTreeSet<Offset>> = BTreeMap::new();
    let mut dests = Vec::new();
    for u in k.updates() {
        u.expr.for_each_read(&mut |g, o, _| {
            offsets.entry(g.to_string()).or_default().insert(o.clone());
        });
        dests.push(u.grid.clone());
    }
    let dims = k.dims().unwrap_or(0);
    let all: BTreeSet<Offset> = offsets.values().flatten().cloned().collect();
    let radius = all.iter().map(Offset::radius).max().unwrap_or(0);
    StencilInfo {
        kernel: k.name.clone(),
        dims,
        radius,
        shape: classify(&all, dims, radius),
        offsets,
        flops_per_point: k.flops(),
        dests,
    }
}

fn classify(all: &BTreeSet<Offset>, dims: usize, radius: u64) -> Shape {
    let star = all.iter().all(|o| o.nonzero_components() <= 1);
    if star && (dims <= 1 || radius == 0) {
        return Shape::Star;
    }
    let r = radius as i64;
    let cube = (2 * r + 1).pow(dims as u32) as usize;
    if all.len() == cube && all.iter().all(|o| o.0.iter().all(|c| c.abs() <= r)) {
        return Shape::Box;
    }
    if star {
        Shape::Star
    } else {
        Shape::Other
    }
}
