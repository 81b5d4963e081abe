//! Static checks over a parsed unit. Every problem becomes a positioned
//! diagnostic; the result is sorted by source position.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::bind::{kernel_grid_context, resolve_bindings};
use crate::analysis::desugar_map_symbolic;
use crate::diag::{sort_diagnostics, Diagnostic, Pos};

const COMMON_KEYS: &[&str] = &["decomposition"];
const OMP_KEYS: &[&str] = &["template", "algorithm", "blockDims", "padding"];
const GPU_KEYS: &[&str] = &[
    "template",
    "computeCapability",
    "threadsPerBlock",
    "planeDims",
    "memType",
    "prefetch",
    "asyncMemcpy",
    "padding",
];
const DATAFLOW_KEYS: &[&str] = &["fabric", "margins", "memoryBudget"];

/// Launch parameter keys accepted by a backend constructor.
pub fn launch_keys(backend: BackendKind) -> Vec<&'static str> {
    let specific: &[&str] = match backend {
        BackendKind::Seq => &[],
        BackendKind::Omp => OMP_KEYS,
        BackendKind::Gpu => GPU_KEYS,
        BackendKind::Dataflow => DATAFLOW_KEYS,
    };
    COMMON_KEYS.iter().chain(specific).copied().collect()
}

pub fn validate(unit: &SourceUnit) -> Vec<Diagnostic> {
    let mut d = Vec::new();

    let mut seen: BTreeMap<&str, Pos> = BTreeMap::new();
    let names = unit
        .kernels
        .iter()
        .map(|k| (k.name.as_str(), k.pos))
        .chain(unit.targets.iter().map(|t| (t.name.as_str(), t.pos)));
    for (name, pos) in names {
        if seen.insert(name, pos).is_some() {
            d.push(Diagnostic::error(
                pos,
                format!("duplicate definition of `{name}`"),
            ));
        }
    }
    let mut grid_names = BTreeSet::new();
    for g in &unit.grids {
        if !grid_names.insert(g.name.as_str()) {
            d.push(Diagnostic::error(
                g.pos,
                format!("duplicate grid `{}`", g.name),
            ));
        }
        if seen.contains_key(g.name.as_str()) {
            d.push(Diagnostic::error(
                g.pos,
                format!(
                    "grid `{}` shadows a kernel or target of the same name",
                    g.name
                ),
            ));
        }
    }

    for k in &unit.kernels {
        check_kernel(k, &mut d);
    }
    for t in &unit.targets {
        check_target(unit, t, &mut d);
    }
    if let Some(l) = &unit.launch {
        check_launch(unit, l, &mut d);
    }
    sort_diagnostics(&mut d);
    d
}

fn dup_params(params: &[Param], d: &mut Vec<Diagnostic>) {
    let mut seen = BTreeSet::new();
    for p in params {
        if !seen.insert(p.name.as_str()) {
            d.push(Diagnostic::error(
                p.pos,
                format!("duplicate parameter `{}`", p.name),
            ));
        }
    }
}

fn check_kernel(k: &KernelDecl, d: &mut Vec<Diagnostic>) {
    dup_params(&k.params, d);
    let mut temps: BTreeSet<&str> = BTreeSet::new();
    let mut dests: BTreeMap<&str, Pos> = BTreeMap::new();
    let mut reads: Vec<(&str, Pos)> = Vec::new();
    let dims = k.dims();

    let check_offset = |o: &Offset, pos: Pos, d: &mut Vec<Diagnostic>| {
        if let Some(n) = dims {
            if o.dims() != n {
                d.push(Diagnostic::error(
                    pos,
                    format!(
                        "offset arity mismatch: expected {n} components, found {}",
                        o.dims()
                    ),
                ));
            }
        }
    };

    for stmt in &k.body {
        let (expr, _) = match stmt {
            KernelStmt::Assign { expr, pos, .. } | KernelStmt::Update { expr, pos, .. } => {
                (expr, *pos)
            }
        };
        expr.for_each_var(&mut |name, pos| {
            let ok = temps.contains(name)
                || matches!(k.param(name), Some(p) if matches!(p.ty, ParamType::Scalar(_)));
            if !ok {
                let msg = match k.param(name) {
                    Some(_) => format!("grid `{name}` used without `at`"),
                    None => format!("undefined name `{name}`"),
                };
                d.push(Diagnostic::error(pos, msg));
            }
        });
        expr.for_each_read(&mut |grid, o, pos| {
            match k.param(grid) {
                Some(p) if p.ty == ParamType::Grid => reads.push((grid, pos)),
                Some(_) => d.push(Diagnostic::error(pos, format!("`{grid}` is not a grid"))),
                None => d.push(Diagnostic::error(pos, format!("unknown grid `{grid}`"))),
            }
            check_offset(o, pos, d);
        });
        match stmt {
            KernelStmt::Assign { name, pos, .. } => {
                if k.param(name).is_some() {
                    d.push(Diagnostic::error(
                        *pos,
                        format!("assignment to parameter `{name}`"),
                    ));
                } else if !temps.insert(name) {
                    d.push(Diagnostic::error(
                        *pos,
                        format!("temporary `{name}` is assigned twice"),
                    ));
                }
            }
            KernelStmt::Update {
                grid, offset, pos, ..
            } => {
                match k.param(grid) {
                    Some(p) if p.ty == ParamType::Grid => {}
                    Some(_) => d.push(Diagnostic::error(*pos, format!("`{grid}` is not a grid"))),
                    None => d.push(Diagnostic::error(*pos, format!("unknown grid `{grid}`"))),
                }
                check_offset(offset, *pos, d);
                if !offset.is_zero() {
                    d.push(Diagnostic::error(*pos, "destination offset must be zero"));
                }
                if dests.insert(grid, *pos).is_some() {
                    d.push(Diagnostic::error(
                        *pos,
                        format!("grid `{grid}` is updated twice"),
                    ));
                }
            }
        }
    }
    if dests.is_empty() {
        d.push(Diagnostic::error(
            k.pos,
            format!("kernel `{}` has no update", k.name),
        ));
    }
    for (grid, pos) in reads {
        if dests.contains_key(grid) {
            d.push(Diagnostic::error(
                pos,
                format!(
                    "destination grid `{grid}` is also read; a kernel must not read what it writes"
                ),
            ));
        }
    }
}

fn check_target(unit: &SourceUnit, t: &TargetDecl, d: &mut Vec<Diagnostic>) {
    dup_params(&t.params, d);
    let grid_param = |n: &str| matches!(t.param(n), Some(p) if p.ty == ParamType::Grid);
    let int_param = |n: &str| matches!(t.param(n), Some(Param { ty: ParamType::Scalar(s), .. }) if s.is_integer());

    let bindings = resolve_bindings(unit, t, &BTreeMap::new()).ok();

    t.walk(&mut |s| match s {
        TargetStmt::For { bound, pos, .. } => {
            if let LoopBound::Param(p) = bound {
                if !int_param(p) {
                    d.push(Diagnostic::error(
                        *pos,
                        format!(
                            "loop bound `{p}` must be an integer parameter of target `{}`",
                            t.name
                        ),
                    ));
                }
            }
        }
        TargetStmt::Swap { a, b, pos } => {
            for n in [a, b] {
                if !grid_param(n) {
                    d.push(Diagnostic::error(
                        *pos,
                        format!("swap operand `{n}` is not a grid parameter"),
                    ));
                }
            }
        }
        TargetStmt::Map {
            spec,
            kernel,
            args,
            pos,
        } => {
            for kw in &spec.kwargs {
                let mut syms = Vec::new();
                match &kw.value {
                    MapArg::Scalar(b) => syms.extend(b.terms.keys().cloned()),
                    MapArg::Tuple(items) => items
                        .iter()
                        .for_each(|b| syms.extend(b.terms.keys().cloned())),
                    MapArg::Shape(g) => {
                        if !grid_param(g) {
                            d.push(Diagnostic::error(
                                kw.pos,
                                format!("`{g}.shape` does not name a grid parameter"),
                            ));
                        }
                    }
                }
                for s in syms {
                    let ok = match s.split_once(".shape[") {
                        Some((g, _)) => grid_param(g),
                        None => int_param(&s),
                    };
                    if !ok {
                        d.push(Diagnostic::error(
                            kw.pos,
                            format!("unknown symbol `{s}` in map bounds"),
                        ));
                    }
                }
            }
            if let Err(e) = desugar_map_symbolic(spec, None) {
                d.push(Diagnostic::error(*pos, e));
            }
            let Some(k) = unit.kernel(kernel) else {
                d.push(Diagnostic::error(
                    *pos,
                    format!("unknown kernel `{kernel}`"),
                ));
                return;
            };
            if k.params.len() != args.len() {
                d.push(Diagnostic::error(
                    *pos,
                    format!(
                        "map passes {} arguments to kernel `{kernel}` which takes {}",
                        args.len(),
                        k.params.len()
                    ),
                ));
                return;
            }
            for (p, a) in k.params.iter().zip(args) {
                match t.param(a) {
                    None => d.push(Diagnostic::error(*pos, format!("unknown argument `{a}`"))),
                    Some(tp) if (tp.ty == ParamType::Grid) != (p.ty == ParamType::Grid) => {
                        d.push(Diagnostic::error(
                            *pos,
                            format!(
                                "argument `{a}` does not match the type of kernel parameter `{}`",
                                p.name
                            ),
                        ))
                    }
                    _ => {}
                }
            }
            let mut uniq = BTreeSet::new();
            for (p, a) in k.params.iter().zip(args) {
                if p.ty == ParamType::Grid && !uniq.insert(a) {
                    d.push(Diagnostic::error(
                        *pos,
                        format!("grid `{a}` is passed twice to kernel `{kernel}`"),
                    ));
                }
            }
            if let Some(b) = &bindings {
                check_grid_context(unit, k, args, b, *pos, d);
            }
        }
    });
}

fn check_grid_context(
    unit: &SourceUnit,
    k: &KernelDecl,
    args: &[String],
    b: &super::bind::Bindings,
    call: Pos,
    d: &mut Vec<Diagnostic>,
) {
    let ctx = kernel_grid_context(unit, k, args, b);
    let dtypes: BTreeSet<DType> = ctx.values().map(|g| g.dtype).collect();
    if dtypes.len() > 1 {
        d.push(Diagnostic::error(
            call,
            format!("kernel `{}` mixes f32 and f64 grids", k.name),
        ));
    }
    let shapes: BTreeSet<&Vec<usize>> = ctx.values().map(|g| &g.shape).collect();
    if shapes.len() > 1 {
        d.push(Diagnostic::error(
            call,
            format!("grids passed to kernel `{}` have different shapes", k.name),
        ));
    }
    let check = |grid: &str, o: &Offset, pos: Pos, d: &mut Vec<Diagnostic>| {
        let Some(g) = ctx.get(grid) else { return };
        if o.dims() != g.shape.len() {
            d.push(Diagnostic::error(
                pos,
                format!(
                    "offset arity mismatch: grid `{}` has {} dimensions, offset has {}",
                    g.name,
                    g.shape.len(),
                    o.dims()
                ),
            ));
        } else if o.radius() > g.order as u64 {
            d.push(Diagnostic::error(
                pos,
                format!(
                    "offset {o} exceeds halo of grid `{}` (order {})",
                    g.name, g.order
                ),
            ));
        }
    };
    for stmt in &k.body {
        match stmt {
            KernelStmt::Assign { expr, .. } => expr.for_each_read(&mut |g, o, p| check(g, o, p, d)),
            KernelStmt::Update {
                grid,
                offset,
                expr,
                pos,
            } => {
                expr.for_each_read(&mut |g, o, p| check(g, o, p, d));
                check(grid, offset, *pos, d);
            }
        }
    }
}

fn check_launch(unit: &SourceUnit, l: &LaunchDecl, d: &mut Vec<Diagnostic>) {
    let keys = launch_keys(l.backend);
    let mut seen = BTreeSet::new();
    for p in &l.params {
        if !keys.contains(&p.key.as_str()) {
            d.push(Diagnostic::error(
                p.pos,
                format!(
                    "unknown launch parameter `{}` for backend `{}`",
                    p.key, l.backend
                ),
            ));
        }
        if !seen.insert(p.key.as_str()) {
            d.push(Diagnostic::error(
                p.pos,
                format!("duplicate launch parameter `{}`", p.key),
            ));
        }
    }
    let Some(t) = unit.target(&l.target) else {
        d.push(Diagnostic::error(
            l.pos,
            format!("unknown target `{}`", l.target),
        ));
        return;
    };
    if let Err(e) = resolve_bindings(unit, t, &BTreeMap::new()) {
        d.push(e);
    }
    if l.backend == BackendKind::Dataflow {
        d.extend(check_compile_time_bounds(t, &BTreeMap::new()));
    }
}

/// Dataflow programs need every loop bound at compile time: either a literal
/// or a parameter fixed by `fixed` (command-line specialization).
pub fn check_compile_time_bounds(
    t: &TargetDecl,
    fixed: &BTreeMap<String, String>,
) -> Vec<Diagnostic> {
    let mut d = Vec::new();
    t.walk(&mut |s| {
        if let TargetStmt::For {
            bound: LoopBound::Param(p),
            pos,
            ..
        } = s
        {
            if !fixed.contains_key(p) {
                d.push(Diagnostic::error(
                    *pos,
                    format!(
                        "dataflow backend requires a compile-time iteration count; loop bound `{p}` is a runtime value (use a literal or bind it with --bind {p}=N)"
                    ),
                ));
            }
        }
    });
    d
}
