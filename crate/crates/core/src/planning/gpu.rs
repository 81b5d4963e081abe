use std::fmt;

use super::{chunks, tile_product, BackendConfig, BlockingPlan};
use crate::analysis::{linear_form, Region, Shape, StencilInfo};
use crate::frontend::{KernelDecl, LaunchValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GpuTemplate {
    Gmem,
    Smem,
    F4,
    Shift,
    Unroll,
    Semi,
}

impl GpuTemplate {
    pub const ALL: [GpuTemplate; 6] = [
        GpuTemplate::Gmem,
        GpuTemplate::Smem,
        GpuTemplate::F4,
        GpuTemplate::Shift,
        GpuTemplate::Unroll,
        GpuTemplate::Semi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GpuTemplate::Gmem => "gmem",
            GpuTemplate::Smem => "smem",
            GpuTemplate::F4 => "f4",
            GpuTemplate::Shift => "shift",
            GpuTemplate::Unroll => "unroll",
            GpuTemplate::Semi => "semi",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        GpuTemplate::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn is_streaming(self) -> bool {
        matches!(
            self,
            GpuTemplate::Shift | GpuTemplate::Unroll | GpuTemplate::Semi
        )
    }

    /// Templates that stage input through scratch memory.
    pub fn uses_scratch(self) -> bool {
        !matches!(self, GpuTemplate::Gmem | GpuTemplate::F4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MemType {
    Registers,
    Shared,
}

impl MemType {
    pub fn name(self) -> &'static str {
        match self {
            MemType::Registers => "registers",
            MemType::Shared => "shared",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GpuPlan {
    pub template: GpuTemplate,
    /// Threads per block `(Dx, Dy, Dz)`; `x` runs along the innermost dimension.
    pub block: [usize; 3],
    /// Tile of the streamed plane `(Dx, Dy)` for 2.5D templates.
    pub plane: [usize; 2],
    pub mem_type: MemType,
    /// Whether `mem_type` came from `auto`.
    pub mem_auto: bool,
    pub prefetch: bool,
    pub async_memcpy: bool,
    pub compute_capability: String,
    /// Accepted for completeness; has no effect on generated code.
    pub padding: bool,
    pub blocking: BlockingPlan,
}

pub const DEFAULT_BLOCK: [usize; 3] = [16, 8, 8];
pub const DEFAULT_PLANE: [usize; 2] = [32, 32];
pub const DEFAULT_CAPABILITY: &str = "8.0";

fn capability(v: &LaunchValue) -> Option<String> {
    let s = match v {
        LaunchValue::Str(s) => s.clone(),
        LaunchValue::Float(l) => l.text().to_string(),
        LaunchValue::Int(i) => format!("{i}.0"),
        _ => return None,
    };
    parse_capability(&s).map(|_| s)
}

fn parse_capability(s: &str) -> Option<(u32, u32)> {
    let (a, b) = s.split_once('.').unwrap_or((s, "0"));
    Some((a.parse().ok()?, b.parse().ok()?))
}

/// Resolve a GPU plan. `extents` are the logical grid extents when known.
pub fn plan_gpu(
    info: &StencilInfo,
    k: &KernelDecl,
    cfg: &BackendConfig,
    extents: Option<&[usize]>,
) -> Result<GpuPlan, String> {
    let template = match cfg.word("template")? {
        None => GpuTemplate::Gmem,
        Some(w) => GpuTemplate::from_name(w).ok_or_else(|| {
            format!("unknown GPU template `{w}` (expected gmem, smem, f4, shift, unroll or semi)")
        })?,
    };
    let blocking = BlockingPlan::for_dims(info.dims, template.is_streaming())
        .map_err(|e| format!("template `{}`: {e}", template.name()))?;

    let mut block = DEFAULT_BLOCK;
    if let Some(d) = cfg.dims("threadsPerBlock", 1, 3)? {
        block = [1, 1, 1];
        block[..d.len()].copy_from_slice(&d);
    }
    let mut plane = DEFAULT_PLANE;
    if let Some(d) = cfg.dims("planeDims", 1, 2)? {
        plane = [1, 1];
        plane[..d.len()].copy_from_slice(&d);
    }

    let (mem_type, mem_auto) = match cfg.word("memType")? {
        None | Some("auto") => (
            if info.shape == Shape::Star {
                MemType::Registers
            } else {
                MemType::Shared
            },
            true,
        ),
        Some("registers") => (MemType::Registers, false),
        Some("shared") => (MemType::Shared, false),
        Some(w) => {
            return Err(format!(
                "unknown memType `{w}` (expected registers, shared or auto)"
            ))
        }
    };
    if mem_type == MemType::Registers && info.shape != Shape::Star {
        return Err("memType registers is only supported for star-shaped stencils".to_string());
    }

    let compute_capability = match cfg.get("computeCapability") {
        None => DEFAULT_CAPABILITY.to_string(),
        Some(v) => capability(v).ok_or_else(|| format!("malformed computeCapability `{v}`"))?,
    };
    let prefetch = cfg.flag("prefetch")?;
    let async_memcpy = cfg.flag("asyncMemcpy")?;
    let padding = cfg.flag("padding")?;

    if async_memcpy {
        let cc = parse_capability(&compute_capability).unwrap_or((0, 0));
        if cc < (8, 0) {
            return Err(format!(
                "asyncMemcpy requires compute capability >= 8.0 (A100/H100 class), got {compute_capability}"
            ));
        }
        if !template.uses_scratch() {
            return Err(format!(
                "asyncMemcpy needs a template that stages data in scratch memory, not `{}`",
                template.name()
            ));
        }
    }
    if template == GpuTemplate::F4 {
        if let Some(ext) = extents {
            let inner = *ext.last().unwrap_or(&0);
            if inner % 4 != 0 {
                return Err(format!(
                    "template f4 requires the innermost extent to be divisible by 4, got {inner}"
                ));
            }
        }
    }
    if template == GpuTemplate::Semi {
        if info.shape != Shape::Star {
            return Err("template semi requires a star-shaped stencil".to_string());
        }
        if k.updates().iter().any(|u| linear_form(&u.expr).is_none()) {
            return Err("template semi requires a weighted-sum kernel".to_string());
        }
    }

    Ok(GpuPlan {
        template,
        block,
        plane,
        mem_type,
        mem_auto,
        prefetch,
        async_memcpy,
        compute_capability,
        padding,
        blocking,
    })
}

impl GpuPlan {
    /// Points handled per thread along the innermost dimension.
    pub fn vector_width(&self) -> usize {
        if self.template == GpuTemplate::F4 {
            4
        } else {
            1
        }
    }

    /// Tile extent per grid dimension (outermost first). Streaming templates
    /// cover the whole streamed dimension with one tile.
    pub fn tile_extent(&self, dims: usize) -> Vec<usize> {
        if self.template.is_streaming() {
            let mut t = vec![usize::MAX; dims];
            let n = dims - 1;
            for (i, slot) in t.iter_mut().skip(1).enumerate() {
                *slot = self.plane[n - 1 - i];
            }
            t
        } else {
            let mut t = vec![0; dims];
            for (d, slot) in t.iter_mut().enumerate() {
                *slot = self.block[dims - 1 - d];
            }
            t[dims - 1] *= self.vector_width();
            t
        }
    }

    /// Blocks (or streamed columns) covering `region`, clamped at its edges.
    pub fn tiles(&self, region: &Region) -> Vec<Vec<(i64, i64)>> {
        let ext = self.tile_extent(region.ranges.len());
        let per_dim: Vec<Vec<(i64, i64)>> = region
            .ranges
            .iter()
            .zip(&ext)
            .map(|(&(a, b), &e)| {
                if e == usize::MAX {
                    if a < b {
                        vec![(a, b)]
                    } else {
                        Vec::new()
                    }
                } else {
                    chunks(a, b, e)
                }
            })
            .collect();
        tile_product(&per_dim)
    }
}

impl fmt::Display for GpuPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "template: {}", self.template.name())?;
        writeln!(f, "blocking: {}", self.blocking)?;
        writeln!(
            f,
            "block: {}x{}x{}",
            self.block[0], self.block[1], self.block[2]
        )?;
        writeln!(f, "plane: {}x{}", self.plane[0], self.plane[1])?;
        writeln!(
            f,
            "mem_type: {}{}",
            self.mem_type.name(),
            if self.mem_auto { " (auto)" } else { "" }
        )?;
        writeln!(f, "prefetch: {}", self.prefetch)?;
        writeln!(f, "async_memcpy: {}", self.async_memcpy)?;
        writeln!(f, "compute_capability: {}", self.compute_capability)?;
        writeln!(f, "padding: {} (inert)", self.padding)
    }
}
