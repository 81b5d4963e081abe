//! CUDA-style kernels with a documentation-only host stub.

use std::collections::BTreeMap;

use super::{
    artifact_name, c_expr, c_literal, check_swaps, fingerprint, shifted, Code, GeneratedArtifact,
    IndexScheme,
};
use crate::analysis::{linear_form, Term};
use crate::frontend::{BackendKind, DType, Offset};
use crate::hir::{HirMap, HirStmt, HirTarget, HirUpdate};
use crate::pipeline::Plan;
use crate::planning::{GpuPlan, GpuTemplate, MemType};

const AXES: [&str; 3] = ["x", "y", "z"];

fn macro_name(grid: &str) -> String {
    format!("{}_IDX", grid.to_uppercase())
}

struct Ctx<'a> {
    h: &'a HirTarget,
    plan: &'a GpuPlan,
    dtype: DType,
    ty: &'static str,
}

/// Per-grid, per-dimension reach of one update.
fn reach_of(u: &HirUpdate, dims: usize) -> BTreeMap<String, Vec<i64>> {
    let mut r: BTreeMap<String, Vec<i64>> = BTreeMap::new();
    u.expr.for_each_read(&mut |g, o, _| {
        let e = r.entry(g.to_string()).or_insert_with(|| vec![0; dims]);
        for d in 0..dims {
            e[d] = e[d].max(o.0[d].abs());
        }
    });
    r
}

fn axis(dims: usize, d: usize) -> &'static str {
    AXES[dims - 1 - d]
}

fn global(grid: &str, idx: &[String], o: &[i64]) -> String {
    let a: Vec<String> = idx.iter().zip(o).map(|(i, &x)| shifted(i, x)).collect();
    format!("{grid}[{}({})]", macro_name(grid), a.join(", "))
}

fn flat(ext: &[String], idx: &[String]) -> String {
    let mut s = idx[0].clone();
    for d in 1..idx.len() {
        s = format!("({s}) * ({}) + {}", ext[d], idx[d]);
    }
    s
}

pub fn gen_gpu(h: &HirTarget, plan: &GpuPlan) -> Result<GeneratedArtifact, String> {
    check_swaps(h)?;
    let dtype = h.dtype().ok_or("target has no grids")?;
    let cx = Ctx {
        h,
        plan,
        dtype,
        ty: dtype.c_type(),
    };
    let path = artifact_name(h, "cuda", plan.template.name(), "cu");
    let fp = fingerprint(h, &Plan::Gpu(plan.clone()));

    let mut c = Code::default();
    c.raw(format!("/* {path}: target {} ({fp}) */", h.name));
    c.raw(format!(
        "/* template {}, {}, block {}x{}x{}, plane {}x{}, memory {}, compute capability {} */",
        plan.template.name(),
        plan.blocking,
        plan.block[0],
        plan.block[1],
        plan.block[2],
        plan.plane[0],
        plan.plane[1],
        plan.mem_type.name(),
        plan.compute_capability
    ));
    c.raw("#include <cuda_runtime.h>");
    if plan.async_memcpy {
        c.raw("#include <cuda_pipeline.h>");
    }
    c.line("");
    for (g, d) in &h.grids {
        c.raw(IndexScheme::new(&d.shape, d.order).c_macro(&macro_name(g)));
    }
    c.line("");
    if plan.template == GpuTemplate::F4 {
        c.open(format!(
            "static __device__ __forceinline__ float4 load4(const {} *p, size_t i)",
            cx.ty
        ));
        c.line("return make_float4(p[i], p[i + 1], p[i + 2], p[i + 3]);");
        c.close();
        c.line("");
    }

    let maps = h.maps();
    for (n, m) in maps.iter().enumerate() {
        for (k, u) in m.updates.iter().enumerate() {
            let name = format!("{}_{n}_{k}", m.kernel);
            match plan.template {
                GpuTemplate::Gmem => kernel_gmem(&mut c, &cx, &name, m, u),
                GpuTemplate::Smem => kernel_smem(&mut c, &cx, &name, m, u),
                GpuTemplate::F4 => kernel_f4(&mut c, &cx, &name, m, u),
                GpuTemplate::Shift | GpuTemplate::Unroll | GpuTemplate::Semi => {
                    if m.info.dims < 2 {
                        return Err(format!(
                            "template `{}` streams a dimension and needs a kernel of at least 2 dimensions",
                            plan.template.name()
                        ));
                    }
                    kernel_stream(&mut c, &cx, &name, m, u)?
                }
            }
            c.line("");
        }
    }
    host_stub(&mut c, &cx);

    Ok(GeneratedArtifact {
        files: vec![(path, c.finish())],
        entry: format!("{}_host", h.name),
        backend: BackendKind::Gpu,
        fingerprint: fp,
    })
}

fn signature(cx: &Ctx<'_>, name: &str, dims: usize) -> String {
    let mut p: Vec<String> =
        cx.h.grids
            .keys()
            .map(|g| format!("{} *{g}", cx.ty))
            .collect();
    for d in 0..dims {
        p.push(format!("long lo{d}"));
        p.push(format!("long hi{d}"));
    }
    format!("__global__ void {name}({})", p.join(", "))
}

/// Point handled by this thread along each blocked dimension.
fn thread_index(c: &mut Code, dims: usize, skip: usize, vec: usize) {
    for d in skip..dims {
        let a = axis(dims, d);
        let scale = if d == dims - 1 && vec > 1 {
            format!("{vec} * ")
        } else {
            String::new()
        };
        c.line(format!(
            "const long i{d} = lo{d} + {scale}((long)blockIdx.{a} * blockDim.{a} + threadIdx.{a});"
        ));
    }
}

fn guard(dims: usize, skip: usize) -> String {
    let v: Vec<String> = (skip..dims).map(|d| format!("i{d} < hi{d}")).collect();
    v.join(" && ")
}

fn idx(dims: usize) -> Vec<String> {
    (0..dims).map(|d| format!("i{d}")).collect()
}

fn kernel_gmem(c: &mut Code, cx: &Ctx<'_>, name: &str, m: &HirMap, u: &HirUpdate) {
    let dims = m.info.dims;
    c.open(signature(cx, name, dims));
    thread_index(c, dims, 0, 1);
    c.line(format!("if (!({})) return;", guard(dims, 0)));
    let i = idx(dims);
    let rhs = c_expr(&u.expr, cx.dtype, &mut |g, o| global(g, &i, &o.0));
    c.line(format!("{} = {rhs};", global(&u.dest, &i, &vec![0; dims])));
    c.close();
}

fn kernel_f4(c: &mut Code, cx: &Ctx<'_>, name: &str, m: &HirMap, u: &HirUpdate) {
    let dims = m.info.dims;
    c.open(signature(cx, name, dims));
    thread_index(c, dims, 0, 4);
    c.line(format!("if (!({})) return;", guard(dims, 0)));
    let i = idx(dims);
    let mut reads: Vec<(String, Offset)> = Vec::new();
    u.expr.for_each_read(&mut |g, o, _| {
        if !reads.iter().any(|(h, p)| h == g && p == o) {
            reads.push((g.to_string(), o.clone()));
        }
    });
    for (n, (g, o)) in reads.iter().enumerate() {
        let a: Vec<String> = i.iter().zip(&o.0).map(|(v, &x)| shifted(v, x)).collect();
        c.line(format!(
            "const float4 r{n} = load4({g}, {}({}));",
            macro_name(g),
            a.join(", ")
        ));
    }
    c.line("float4 out;");
    for comp in ["x", "y", "z", "w"] {
        let rhs = c_expr(&u.expr, cx.dtype, &mut |g, o| {
            let n = reads
                .iter()
                .position(|(h, p)| h == g && p == o)
                .unwrap_or(0);
            format!("r{n}.{comp}")
        });
        c.line(format!("out.{comp} = {rhs};"));
    }
    let a = i.join(", ");
    c.line(format!(
        "{d}[{}({a})] = out.x;",
        macro_name(&u.dest),
        d = u.dest
    ));
    for (k, comp) in ["y", "z", "w"].iter().enumerate() {
        let mut j = i.clone();
        j[dims - 1] = format!("i{} + {}", dims - 1, k + 1);
        c.line(format!(
            "{d}[{}({})] = out.{comp};",
            macro_name(&u.dest),
            j.join(", "),
            d = u.dest
        ));
    }
    c.close();
}

/// Scratch copy of a grid's tile plus halo.
struct Scratch {
    grid: String,
    ext: Vec<String>,
    reach: Vec<i64>,
}

fn scratch_name(g: &str) -> String {
    format!("s_{g}")
}

fn kernel_smem(c: &mut Code, cx: &Ctx<'_>, name: &str, m: &HirMap, u: &HirUpdate) {
    let dims = m.info.dims;
    let tile: Vec<usize> = (0..dims).map(|d| cx.plan.block[dims - 1 - d]).collect();
    let scratch: Vec<Scratch> = reach_of(u, dims)
        .into_iter()
        .map(|(g, r)| Scratch {
            ext: (0..dims)
                .map(|d| (tile[d] as i64 + 2 * r[d]).to_string())
                .collect(),
            grid: g,
            reach: r,
        })
        .collect();
    c.open(signature(cx, name, dims));
    for s in &scratch {
        c.line(format!(
            "__shared__ {} {}[{}];",
            cx.ty,
            scratch_name(&s.grid),
            s.ext.join(" * ")
        ));
    }
    for d in 0..dims {
        let a = axis(dims, d);
        c.line(format!(
            "const long t{d} = lo{d} + (long)blockIdx.{a} * blockDim.{a};"
        ));
    }
    thread_index(c, dims, 0, 1);
    c.line(format!("const bool active = {};", guard(dims, 0)));
    let tid = match dims {
        1 => "threadIdx.x".to_string(),
        2 => "threadIdx.x + blockDim.x * threadIdx.y".to_string(),
        _ => "threadIdx.x + blockDim.x * (threadIdx.y + blockDim.y * threadIdx.z)".to_string(),
    };
    c.line(format!("const int tid = {tid};"));
    c.line("const int nthreads = blockDim.x * blockDim.y * blockDim.z;");
    c.line("/* cooperative load of the tile and its halo */");
    for s in &scratch {
        let total = s.ext.join(" * ");
        c.open(format!("for (int k = tid; k < {total}; k += nthreads)"));
        let mut rest = "k".to_string();
        let mut g = Vec::new();
        for d in (0..dims).rev() {
            c.line(format!("const long a{d} = ({rest}) % {};", s.ext[d]));
            rest = format!("({rest}) / {}", s.ext[d]);
            g.push(format!("g{d}"));
        }
        g.reverse();
        for d in 0..dims {
            c.line(format!("const long g{d} = t{d} - {} + a{d};", s.reach[d]));
        }
        let cond: Vec<String> = (0..dims)
            .map(|d| format!("g{d} < hi{d} + {}", s.reach[d]))
            .collect();
        let src = global(&s.grid, &g, &vec![0; dims]);
        if cx.plan.async_memcpy {
            c.open(format!("if ({})", cond.join(" && ")));
            c.line(format!(
                "__pipeline_memcpy_async(&{}[k], &{src}, sizeof({}));",
                scratch_name(&s.grid),
                cx.ty
            ));
            c.close();
        } else {
            c.line(format!(
                "if ({}) {}[k] = {src};",
                cond.join(" && "),
                scratch_name(&s.grid)
            ));
        }
        c.close();
    }
    if cx.plan.async_memcpy {
        c.line("__pipeline_commit();");
        c.line("__pipeline_wait_prior(0);");
    }
    c.line("__syncthreads();");
    c.line("if (!active) return;");
    let i = idx(dims);
    let rhs = c_expr(&u.expr, cx.dtype, &mut |g, o| {
        let s = scratch
            .iter()
            .find(|s| s.grid == g)
            .expect("read grid has scratch");
        let local: Vec<String> = (0..dims)
            .map(|d| format!("i{d} - t{d} + {}", s.reach[d] + o.0[d]))
            .collect();
        format!("{}[{}]", scratch_name(g), flat(&s.ext, &local))
    });
    c.line(format!("{} = {rhs};", global(&u.dest, &i, &vec![0; dims])));
    c.close();
}

/// Streaming over dimension 0 with a window of `2r + 1` planes per grid.
fn kernel_stream(
    c: &mut Code,
    cx: &Ctx<'_>,
    name: &str,
    m: &HirMap,
    u: &HirUpdate,
) -> Result<(), String> {
    let dims = m.info.dims;
    let plan = cx.plan;
    let regs = plan.mem_type == MemType::Registers;
    let unrolled = plan.template != GpuTemplate::Shift;
    let semi = plan.template == GpuTemplate::Semi;
    let reach = reach_of(u, dims);
    let r0 = reach.values().map(|r| r[0]).max().unwrap_or(0);
    let w = (2 * r0 + 1) as usize;
    let tile: Vec<usize> = (1..dims).map(|d| plan.plane[dims - 1 - d]).collect();
    // in-plane scratch extents per grid
    let pext: BTreeMap<&String, Vec<String>> = reach
        .iter()
        .map(|(g, r)| {
            (
                g,
                (1..dims)
                    .map(|d| (tile[d - 1] as i64 + 2 * r[d]).to_string())
                    .collect(),
            )
        })
        .collect();
    let lf = if semi {
        Some(linear_form(&u.expr).ok_or("template semi needs a weighted-sum kernel")?)
    } else {
        None
    };

    c.open(signature(cx, name, dims));
    for (g, e) in &pext {
        if regs {
            c.line(format!("{} reg_{g}[{w}];", cx.ty));
            c.line(format!(
                "__shared__ {} {}[{}];",
                cx.ty,
                scratch_name(g),
                e.join(" * ")
            ));
        } else {
            c.line(format!(
                "__shared__ {} {}[{w}][{}];",
                cx.ty,
                scratch_name(g),
                e.join(" * ")
            ));
        }
        if plan.prefetch || plan.async_memcpy {
            if regs && plan.async_memcpy {
                c.line(format!(
                    "__shared__ {} stage_{g}[{}];",
                    cx.ty,
                    tile.iter().product::<usize>()
                ));
            } else if regs {
                c.line(format!("{} pre_{g};", cx.ty));
            } else {
                c.line(format!(
                    "__shared__ {} stage_{g}[{}];",
                    cx.ty,
                    e.join(" * ")
                ));
            }
        }
    }
    if semi {
        c.line(format!("{} partial[{w}];", cx.ty));
        c.line(format!(
            "for (int s = 0; s < {w}; s++) partial[s] = {};",
            c_literal("0", cx.dtype)
        ));
    }
    for d in 1..dims {
        let a = axis(dims, d);
        c.line(format!(
            "const long t{d} = lo{d} + (long)blockIdx.{a} * blockDim.{a};"
        ));
    }
    thread_index(c, dims, 1, 1);
    c.line(format!("const bool active = {};", guard(dims, 1)));

    // plane loaders
    let load = |c: &mut Code, plane: &str, slot: &str, stage: bool| {
        for (g, r) in &reach {
            let e = &pext[g];
            let mut j = vec![plane.to_string()];
            j.extend((1..dims).map(|d| format!("i{d}")));
            if regs && stage && plan.async_memcpy {
                c.line(format!(
                    "if (active) __pipeline_memcpy_async(&stage_{g}[threadIdx.x + blockDim.x * threadIdx.y], &{}, sizeof({}));",
                    global(g, &j, &vec![0; dims]),
                    cx.ty
                ));
                continue;
            }
            if regs {
                let target = if stage {
                    format!("pre_{g}")
                } else {
                    format!("reg_{g}[{slot}]")
                };
                c.line(format!(
                    "if (active) {target} = {};",
                    global(g, &j, &vec![0; dims])
                ));
                continue;
            }
            let tid = if dims == 2 {
                "threadIdx.x"
            } else {
                "threadIdx.x + blockDim.x * threadIdx.y"
            };
            c.open(format!(
                "for (int k = {tid}; k < {}; k += blockDim.x * blockDim.y)",
                e.join(" * ")
            ));
            let mut rest = "k".to_string();
            let mut gi = vec![plane.to_string()];
            for d in (1..dims).rev() {
                c.line(format!("const long a{d} = ({rest}) % {};", e[d - 1]));
                rest = format!("({rest}) / {}", e[d - 1]);
            }
            for d in 1..dims {
                gi.push(format!("t{d} - {} + a{d}", r[d]));
            }
            let dst = if stage {
                format!("stage_{g}[k]")
            } else {
                format!("{}[{slot}][k]", scratch_name(g))
            };
            if plan.async_memcpy && stage {
                c.line(format!(
                    "__pipeline_memcpy_async(&{dst}, &{}, sizeof({}));",
                    global(g, &gi, &vec![0; dims]),
                    cx.ty
                ));
            } else {
                c.line(format!("{dst} = {};", global(g, &gi, &vec![0; dims])));
            }
            c.close();
        }
    };
    // in-plane neighbours of the current plane for register streaming
    let load_plane_regs = |c: &mut Code, plane: &str| {
        for (g, r) in &reach {
            let e = &pext[g];
            let tid = if dims == 2 {
                "threadIdx.x"
            } else {
                "threadIdx.x + blockDim.x * threadIdx.y"
            };
            c.open(format!(
                "for (int k = {tid}; k < {}; k += blockDim.x * blockDim.y)",
                e.join(" * ")
            ));
            let mut rest = "k".to_string();
            for d in (1..dims).rev() {
                c.line(format!("const long a{d} = ({rest}) % {};", e[d - 1]));
                rest = format!("({rest}) / {}", e[d - 1]);
            }
            let mut gi = vec![plane.to_string()];
            for d in 1..dims {
                gi.push(format!("t{d} - {} + a{d}", r[d]));
            }
            c.line(format!(
                "{}[k] = {};",
                scratch_name(g),
                global(g, &gi, &vec![0; dims])
            ));
            c.close();
        }
    };
    // slot holding plane `z + o`, for step `j` of an unrolled group
    let slot = |o: i64, j: i64| -> String {
        if unrolled {
            ((j + o).rem_euclid(w as i64)).to_string()
        } else {
            (r0 + o).to_string()
        }
    };
    let read = |g: &str, o: &[i64], j: i64| -> String {
        let r = &reach[g];
        let e = &pext.get(&g.to_string()).expect("grid read");
        let local: Vec<String> = (1..dims)
            .map(|d| format!("i{d} - t{d} + {}", r[d] + o[d]))
            .collect();
        let in_plane = flat(&e[..], &local);
        if regs {
            if o[0] != 0 || o[1..].iter().all(|&x| x == 0) {
                format!("reg_{g}[{}]", slot(o[0], j))
            } else {
                format!("{}[{in_plane}]", scratch_name(g))
            }
        } else {
            format!("{}[{}][{in_plane}]", scratch_name(g), slot(o[0], j))
        }
    };

    c.line("/* prologue: planes below the first computed plane */");
    c.open(format!("for (long q = lo0 - {r0}; q < lo0 + {r0}; q++)"));
    let pro_slot = if unrolled {
        format!("(int)(((q - lo0) % {w} + {w}) % {w})")
    } else {
        format!("(int)(q - lo0 + {r0})")
    };
    load(c, "q", &pro_slot, false);
    c.close();
    if plan.prefetch || plan.async_memcpy {
        c.line("/* prefetch the first incoming plane */");
        load(c, &format!("lo0 + {r0}"), "0", true);
        if plan.async_memcpy {
            c.line("__pipeline_commit();");
        }
    }
    c.line("__syncthreads();");

    let zero = vec![0i64; dims];
    let step = |c: &mut Code, z: &str, j: i64| {
        let incoming = slot(r0, j);
        if plan.prefetch || plan.async_memcpy {
            if plan.async_memcpy {
                c.line("__pipeline_wait_prior(0);");
                c.line("__syncthreads();");
            }
            for g in reach.keys() {
                if regs {
                    let src = if plan.async_memcpy {
                        format!("stage_{g}[threadIdx.x + blockDim.x * threadIdx.y]")
                    } else {
                        format!("pre_{g}")
                    };
                    c.line(format!("if (active) reg_{g}[{incoming}] = {src};"));
                } else {
                    let e = &pext[g];
                    c.line(format!(
                        "for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < {}; k += blockDim.x * blockDim.y) {}[{incoming}][k] = stage_{g}[k];",
                        e.join(" * "),
                        scratch_name(g)
                    ));
                }
            }
            c.line("__syncthreads();");
            c.line(format!(
                "/* overlap: fetch plane {z} + {} while computing */",
                r0 + 1
            ));
            c.open(format!("if ({z} + {} < hi0 + {r0})", r0 + 1));
            load(c, &format!("{z} + {}", r0 + 1), "0", true);
            if plan.async_memcpy {
                c.line("__pipeline_commit();");
            }
            c.close();
        } else {
            load(c, &format!("{z} + {r0}"), &incoming, false);
        }
        if regs {
            load_plane_regs(c, z);
        }
        c.line("__syncthreads();");
        let mut i = vec![z.to_string()];
        i.extend((1..dims).map(|d| format!("i{d}")));
        c.open("if (active)");
        match &lf {
            None => {
                let rhs = c_expr(&u.expr, cx.dtype, &mut |g, o| read(g, &o.0, j));
                c.line(format!("{} = {rhs};", global(&u.dest, &i, &zero)));
            }
            Some(lf) => {
                let term = |t: &Term, x: String| match &t.coef {
                    Some(k) => format!("({} * {x})", c_literal(k.text(), cx.dtype)),
                    None => x,
                };
                let here = slot(0, j);
                c.line(format!("{} acc = partial[{here}];", cx.ty));
                let mut in_plane: Vec<&Term> = lf
                    .terms
                    .iter()
                    .filter(|t| t.offset.is_lex_negative() && t.offset.0[0] == 0)
                    .collect();
                in_plane.sort_by(|a, b| a.offset.0.cmp(&b.offset.0));
                for t in in_plane {
                    let op = if t.negate { "-" } else { "+" };
                    c.line(format!(
                        "acc = acc {op} {};",
                        term(t, read(&t.grid, &t.offset.0, j))
                    ));
                }
                c.line("/* backward update */");
                for t in lf.terms.iter().filter(|t| !t.offset.is_lex_negative()) {
                    let op = if t.negate { "-" } else { "+" };
                    c.line(format!(
                        "acc = acc {op} {};",
                        term(t, read(&t.grid, &t.offset.0, j))
                    ));
                }
                if let Some(dv) = &lf.divisor {
                    c.line(format!("acc = acc / {};", c_literal(dv.text(), cx.dtype)));
                }
                c.line(format!("{} = acc;", global(&u.dest, &i, &zero)));
                c.line(format!("partial[{here}] = {};", c_literal("0", cx.dtype)));
                c.line("/* forward update into planes above */");
                let mut fwd: Vec<&Term> = lf
                    .terms
                    .iter()
                    .filter(|t| t.offset.is_lex_negative() && t.offset.0[0] < 0)
                    .collect();
                fwd.sort_by(|a, b| a.offset.0.cmp(&b.offset.0));
                for t in fwd {
                    let target = slot(-t.offset.0[0], j);
                    let op = if t.negate { "-" } else { "+" };
                    let x = term(t, read(&t.grid, &zero, j));
                    c.line(format!("partial[{target}] = partial[{target}] {op} {x};"));
                }
            }
        }
        c.close();
        c.line("__syncthreads();");
        if !unrolled {
            c.line("/* shift the window down one plane */");
            for g in reach.keys() {
                for s in 0..w - 1 {
                    if regs {
                        c.line(format!("reg_{g}[{s}] = reg_{g}[{}];", s + 1));
                    } else {
                        let e = &pext[g];
                        c.line(format!(
                            "for (int k = threadIdx.x + blockDim.x * threadIdx.y; k < {}; k += blockDim.x * blockDim.y) {n}[{s}][k] = {n}[{}][k];",
                            e.join(" * "),
                            s + 1,
                            n = scratch_name(g)
                        ));
                    }
                }
            }
            c.line("__syncthreads();");
        }
    };

    if unrolled {
        c.open(format!("for (long zb = lo0; zb < hi0; zb += {w})"));
        for j in 0..w as i64 {
            c.open(format!("if (zb + {j} < hi0)"));
            c.line(format!("const long z = zb + {j};"));
            step(c, "z", j);
            c.close();
        }
        c.close();
    } else {
        c.open("for (long z = lo0; z < hi0; z++)");
        step(c, "z", 0);
        c.close();
    }
    c.close();
    Ok(())
}

/// Host scaffolding: allocation, copies, stream, launches per region with a
/// buffer swap, copy back. Not compiled by the test suite.
fn host_stub(c: &mut Code, cx: &Ctx<'_>) {
    let h = cx.h;
    let ty = cx.ty;
    let args: Vec<String> = h.grids.keys().map(|g| format!("{ty} *h_{g}")).collect();
    c.open(format!("void {}_host({})", h.name, args.join(", ")));
    for (g, d) in &h.grids {
        let n = IndexScheme::new(&d.shape, d.order).len();
        c.line(format!("{ty} *{g};"));
        c.line(format!("cudaMalloc((void **)&{g}, {n} * sizeof({ty}));"));
        c.line(format!(
            "cudaMemcpy({g}, h_{g}, {n} * sizeof({ty}), cudaMemcpyHostToDevice);"
        ));
    }
    c.line("cudaStream_t stream;");
    c.line("cudaStreamCreate(&stream);");
    let mut counter = (0usize, 0usize);
    stub_body(c, cx, &h.body, &mut counter);
    c.line("cudaStreamSynchronize(stream);");
    for (g, d) in &h.grids {
        let n = IndexScheme::new(&d.shape, d.order).len();
        c.line(format!(
            "cudaMemcpy(h_{g}, {g}, {n} * sizeof({ty}), cudaMemcpyDeviceToHost);"
        ));
        c.line(format!("cudaFree({g});"));
    }
    c.line("cudaStreamDestroy(stream);");
    c.close();
}

fn stub_body(c: &mut Code, cx: &Ctx<'_>, body: &[HirStmt], counter: &mut (usize, usize)) {
    let plan = cx.plan;
    for s in body {
        match s {
            HirStmt::Map(m) => {
                let n = counter.0;
                counter.0 += 1;
                let dims = m.info.dims;
                let streaming = plan.template.is_streaming();
                let threads: Vec<usize> = (0..dims)
                    .map(|d| {
                        if streaming {
                            if d == 0 {
                                1
                            } else {
                                plan.plane[dims - 1 - d]
                            }
                        } else {
                            plan.block[dims - 1 - d]
                        }
                    })
                    .collect();
                for (k, _) in m.updates.iter().enumerate() {
                    for r in &m.regions {
                        if r.size() == 0 {
                            continue;
                        }
                        let mut grid = ["1".to_string(), "1".to_string(), "1".to_string()];
                        let mut block = [1usize; 3];
                        for d in 0..dims {
                            let a = dims - 1 - d;
                            let (lo, hi) = r.ranges[d];
                            let per = if d == dims - 1 {
                                threads[d] * plan.vector_width()
                            } else {
                                threads[d]
                            };
                            if streaming && d == 0 {
                                continue;
                            }
                            grid[a] = format!("{}", ((hi - lo) as usize).div_ceil(per));
                            block[a] = threads[d];
                        }
                        let mut a: Vec<String> = cx.h.grids.keys().cloned().collect();
                        for &(lo, hi) in &r.ranges {
                            a.push(lo.to_string());
                            a.push(hi.to_string());
                        }
                        c.line(format!(
                            "{}_{n}_{k}<<<dim3({}, {}, {}), dim3({}, {}, {}), 0, stream>>>({});",
                            m.kernel,
                            grid[0],
                            grid[1],
                            grid[2],
                            block[0],
                            block[1],
                            block[2],
                            a.join(", ")
                        ));
                    }
                }
            }
            HirStmt::Swap(a, b) => {
                c.line(format!("{{ {} *tmp = {a}; {a} = {b}; {b} = tmp; }}", cx.ty))
            }
            HirStmt::Loop { count, body } => {
                let t = format!("t{}", counter.1);
                counter.1 += 1;
                c.open(format!("for (long {t} = 0; {t} < {count}; {t}++)"));
                stub_body(c, cx, body, counter);
                c.close();
            }
        }
    }
}
