//! Mid-level planning: symbol tables, blocking strategy and per-backend
//! template plans.

mod config;
mod gpu;
mod omp;

use std::collections::BTreeMap;
use std::fmt;

use crate::analysis::StencilInfo;
use crate::frontend::{KernelDecl, KernelStmt, ParamType};

pub use config::{parse_override, parse_value, BackendConfig};
pub use gpu::{plan_gpu, GpuPlan, GpuTemplate, MemType};
pub use omp::{plan_omp, OmpAlgorithm, OmpPlan, OmpTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Grid,
    Scalar,
    Temp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub kind: SymbolKind,
    pub is_update_dest: bool,
    /// Declared in the kernel signature rather than inside the body.
    pub is_top_level: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    pub entries: BTreeMap<String, Symbol>,
}

impl SymbolTable {
    pub fn get(&self, name: &str) -> Option<&Symbol> {
        self.entries.get(name)
    }
}

impl fmt::Display for SymbolTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, s) in &self.entries {
            let kind = match s.kind {
                SymbolKind::Grid => "grid",
                SymbolKind::Scalar => "scalar",
                SymbolKind::Temp => "temp",
            };
            write!(f, "{name}: {kind}")?;
            if s.is_update_dest {
                f.write_str(" dest")?;
            }
            if s.is_top_level {
                f.write_str(" top")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockingKind {
    Blocking3d,
    Streaming2_5d,
    Blocking2d,
    Streaming1_5d,
    Blocking1d,
}

impl BlockingKind {
    pub fn name(self) -> &'static str {
        match self {
            BlockingKind::Blocking3d => "blocking_3d",
            BlockingKind::Streaming2_5d => "streaming_2_5d",
            BlockingKind::Blocking2d => "blocking_2d",
            BlockingKind::Streaming1_5d => "streaming_1_5d",
            BlockingKind::Blocking1d => "blocking_1d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockingPlan {
    pub kind: BlockingKind,
    /// Outermost dimension streamed through when the kind is a streaming one.
    pub stream_dim: Option<usize>,
}

impl BlockingPlan {
    pub fn for_dims(dims: usize, streaming: bool) -> Result<Self, String> {
        let kind = match (dims, streaming) {
            (3, false) => BlockingKind::Blocking3d,
            (3, true) => BlockingKind::Streaming2_5d,
            (2, false) => BlockingKind::Blocking2d,
            (2, true) => BlockingKind::Streaming1_5d,
            (1, false) => BlockingKind::Blocking1d,
            (1, true) => {
                return Err("streaming templates need a kernel of at least 2 dimensions".to_string())
            }
            _ => return Err(format!("unsupported kernel dimensionality {dims}")),
        };
        Ok(BlockingPlan {
            kind,
            stream_dim: streaming.then_some(0),
        })
    }
}

impl fmt::Display for BlockingPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if let Some(d) = self.stream_dim {
            write!(f, " stream_dim={d}")?;
        }
        Ok(())
    }
}

/// Symbol table plus blocking choice for one kernel.
pub fn build_mir(
    info: &StencilInfo,
    k: &KernelDecl,
    streaming: bool,
) -> Result<(SymbolTable, BlockingPlan), String> {
    let mut t = SymbolTable::default();
    for p in &k.params {
        let kind = match p.ty {
            ParamType::Grid => SymbolKind::Grid,
            ParamType::Scalar(_) => SymbolKind::Scalar,
        };
        t.entries.insert(
            p.name.clone(),
            Symbol {
                kind,
                is_update_dest: info.dests.contains(&p.name),
                is_top_level: true,
            },
        );
    }
    for s in &k.body {
        if let KernelStmt::Assign { name, .. } = s {
            t.entries.insert(
                name.clone(),
                Symbol {
                    kind: SymbolKind::Temp,
                    is_update_dest: false,
                    is_top_level: false,
                },
            );
        }
    }
    Ok((t, BlockingPlan::for_dims(info.dims, streaming)?))
}

/// Split `[lo, hi)` into chunks of at most `step`.
pub(crate) fn chunks(lo: i64, hi: i64, step: usize) -> Vec<(i64, i64)> {
    let step = step.max(1) as i64;
    let mut out = Vec::new();
    let mut a = lo;
    while a < hi {
        out.push((a, (a + step).min(hi)));
        a += step;
    }
    out
}

/// Cartesian product of per-dimension chunk lists, lexicographic.
pub(crate) fn tile_product(per_dim: &[Vec<(i64, i64)>]) -> Vec<Vec<(i64, i64)>> {
    let mut out: Vec<Vec<(i64, i64)>> = vec![Vec::new()];
    for d in per_dim {
        out = out
            .into_iter()
            .flat_map(|t| {
                d.iter().map(move |&c| {
                    let mut t = t.clone();
                    t.push(c);
                    t
                })
            })
            .collect();
    }
    out
}
