use std::fmt;

use super::{chunks, tile_product, BackendConfig, BlockingPlan};
use crate::analysis::{linear_form, Region, Shape, StencilInfo};
use crate::diag::{Diagnostic, Pos};
use crate::frontend::KernelDecl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OmpTemplate {
    Loop,
    LoopBlocking,
    LoopBlockingCollapse,
    TasksBlocking,
    Taskloop,
}

impl OmpTemplate {
    pub const ALL: [OmpTemplate; 5] = [
        OmpTemplate::Loop,
        OmpTemplate::LoopBlocking,
        OmpTemplate::LoopBlockingCollapse,
        OmpTemplate::TasksBlocking,
        OmpTemplate::Taskloop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OmpTemplate::Loop => "loop",
            OmpTemplate::LoopBlocking => "loop_blocking",
            OmpTemplate::LoopBlockingCollapse => "loop_blocking_collapse",
            OmpTemplate::TasksBlocking => "tasks_blocking",
            OmpTemplate::Taskloop => "taskloop",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        OmpTemplate::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn uses_blocking(self) -> bool {
        matches!(
            self,
            OmpTemplate::LoopBlocking
                | OmpTemplate::LoopBlockingCollapse
                | OmpTemplate::TasksBlocking
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OmpAlgorithm {
    Conventional,
    Semi,
}

impl OmpAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            OmpAlgorithm::Conventional => "conventional",
            OmpAlgorithm::Semi => "semi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmpPlan {
    pub template: OmpTemplate,
    /// `(bx, by)` tiling the two outermost loops; present iff blocking.
    pub block: Option<(usize, usize)>,
    pub algorithm: OmpAlgorithm,
    /// Accepted for completeness; has no effect on generated code.
    pub padding: bool,
    pub blocking: BlockingPlan,
}

pub const DEFAULT_OMP_BLOCK: (usize, usize) = (64, 64);

/// Resolve an OpenMP plan; warnings are returned alongside.
pub fn plan_omp(
    info: &StencilInfo,
    k: &KernelDecl,
    cfg: &BackendConfig,
) -> Result<(OmpPlan, Vec<Diagnostic>), String> {
    let mut warnings = Vec::new();
    let template = match cfg.word("template")? {
        None => OmpTemplate::Loop,
        Some(w) => OmpTemplate::from_name(w).ok_or_else(|| {
            format!(
                "unknown OpenMP template `{w}` (expected loop, loop_blocking, loop_blocking_collapse, tasks_blocking or taskloop)"
            )
        })?,
    };
    let algorithm = match cfg.word("algorithm")? {
        None | Some("conventional") => OmpAlgorithm::Conventional,
        Some("semi") => OmpAlgorithm::Semi,
        Some(w) => {
            return Err(format!(
                "unknown algorithm `{w}` (expected conventional or semi)"
            ))
        }
    };
    let dims = cfg.dims("blockDims", 1, 2)?;
    let block = if template.uses_blocking() {
        Some(match dims {
            Some(d) => (d[0], *d.get(1).unwrap_or(&d[0])),
            None => DEFAULT_OMP_BLOCK,
        })
    } else {
        if dims.is_some() {
            warnings.push(Diagnostic::warning(
                Pos::default(),
                format!(
                    "blockDims ignored: template `{}` does not use blocking",
                    template.name()
                ),
            ));
        }
        None
    };
    if algorithm == OmpAlgorithm::Semi {
        if info.shape != Shape::Star {
            return Err("semi algorithm requires a star-shaped stencil".to_string());
        }
        if k.updates().iter().any(|u| linear_form(&u.expr).is_none()) {
            return Err("semi algorithm requires a weighted-sum kernel".to_string());
        }
    }
    let blocking = BlockingPlan::for_dims(info.dims, false)?;
    Ok((
        OmpPlan {
            template,
            block,
            algorithm,
            padding: cfg.flag("padding")?,
            blocking,
        },
        warnings,
    ))
}

impl OmpPlan {
    /// Blocks over `region`: the two outermost dimensions tiled by `(bx, by)`,
    /// inner dimensions whole. Non-blocking templates yield one block per
    /// outermost index, the unit of parallel work.
    pub fn blocks(&self, region: &Region) -> Vec<Vec<(i64, i64)>> {
        let per_dim: Vec<Vec<(i64, i64)>> = region
            .ranges
            .iter()
            .enumerate()
            .map(|(d, &(a, b))| {
                let step = match (self.block, d) {
                    (Some((bx, _)), 0) => bx,
                    (Some((_, by)), 1) => by,
                    (None, 0) => 1,
                    _ => usize::MAX,
                };
                if step == usize::MAX {
                    if a < b {
                        vec![(a, b)]
                    } else {
                        Vec::new()
                    }
                } else {
                    chunks(a, b, step)
                }
            })
            .collect();
        tile_product(&per_dim)
    }
}

impl fmt::Display for OmpPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "template: {}", self.template.name())?;
        writeln!(f, "algorithm: {}", self.algorithm.name())?;
        writeln!(f, "blocking: {}", self.blocking)?;
        match self.block {
            Some((bx, by)) => writeln!(f, "block: {bx}x{by}")?,
            None => writeln!(f, "block: none")?,
        }
        writeln!(f, "padding: {} (inert)", self.padding)
    }
}
