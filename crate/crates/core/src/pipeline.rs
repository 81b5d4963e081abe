//! Source to plan: parse, validate, bind, lower and resolve the backend plan.

use std::collections::BTreeMap;

use crate::analysis::Scheme;
use crate::dataflow::{build_dataflow, DataflowProgram};
use crate::diag::{has_errors, sort_diagnostics, Diagnostic, Pos};
use crate::exec::Engine;
use crate::frontend::{
    check_compile_time_bounds, parse_source, resolve_bindings, validate, BackendKind, LaunchValue,
    SourceUnit, TargetDecl,
};
use crate::hir::{lower_target, HirTarget};
use crate::planning::{
    build_mir, plan_gpu, plan_omp, BackendConfig, BlockingPlan, GpuPlan, OmpPlan, SymbolTable,
};

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Target to compile; defaults to the launched target, then the only one.
    pub target: Option<String>,
    pub backend: Option<BackendKind>,
    /// Backend parameters overriding the launch statement.
    pub params: Vec<(String, LaunchValue)>,
    /// Target parameter values (`name=value`).
    pub binds: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Seq,
    Omp(OmpPlan),
    Gpu(GpuPlan),
    Dataflow(Box<DataflowProgram>),
}

impl Plan {
    /// Executor engine emulating this plan. Dataflow programs run on the
    /// simulator instead and map to the naive engine here.
    pub fn engine(&self) -> Engine {
        match self {
            Plan::Omp(p) => Engine::Omp(p.clone()),
            Plan::Gpu(p) => Engine::Tile(p.clone()),
            Plan::Seq | Plan::Dataflow(_) => Engine::Naive,
        }
    }
}

/// Per-kernel mid-level view used by dumps.
#[derive(Debug, Clone)]
pub struct KernelMir {
    pub kernel: String,
    pub symbols: SymbolTable,
    pub blocking: BlockingPlan,
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub unit: SourceUnit,
    pub target: HirTarget,
    pub config: BackendConfig,
    pub mir: Vec<KernelMir>,
    pub plan: Plan,
    pub warnings: Vec<Diagnostic>,
}

fn err(msg: impl Into<String>) -> Vec<Diagnostic> {
    vec![Diagnostic::error(Pos::default(), msg)]
}

/// Parse and validate only.
pub fn frontend(src: &str) -> Result<(SourceUnit, Vec<Diagnostic>), Vec<Diagnostic>> {
    let unit = parse_source(src).map_err(|e| vec![e])?;
    let mut d = validate(&unit);
    sort_diagnostics(&mut d);
    if has_errors(&d) {
        return Err(d);
    }
    Ok((unit, d))
}

pub fn select_target<'a>(
    unit: &'a SourceUnit,
    name: Option<&str>,
) -> Result<&'a TargetDecl, Vec<Diagnostic>> {
    if let Some(n) = name {
        return unit
            .target(n)
            .ok_or_else(|| err(format!("no target named `{n}`")));
    }
    if let Some(l) = &unit.launch {
        if let Some(t) = unit.target(&l.target) {
            return Ok(t);
        }
    }
    match unit.targets.as_slice() {
        [t] => Ok(t),
        [] => Err(err("source defines no target")),
        _ => Err(err(
            "source defines several targets; pick one with --target",
        )),
    }
}

pub fn config_for(unit: &SourceUnit, opts: &Options) -> Result<BackendConfig, Vec<Diagnostic>> {
    let mut cfg = BackendConfig::from_unit(unit);
    if let Some(b) = opts.backend {
        if b != cfg.backend {
            cfg = cfg.with_backend(b);
        }
    }
    for (k, v) in &opts.params {
        cfg.set(k, v.clone()).map_err(err)?;
    }
    Ok(cfg)
}

/// Full pipeline up to a resolved plan.
pub fn compile_source(src: &str, opts: &Options) -> Result<Compiled, Vec<Diagnostic>> {
    let (unit, mut warnings) = frontend(src)?;
    let cfg = config_for(&unit, opts)?;
    let t = select_target(&unit, opts.target.as_deref())?.clone();
    if cfg.backend == BackendKind::Dataflow {
        let d = check_compile_time_bounds(&t, &opts.binds);
        if !d.is_empty() {
            return Err(d);
        }
    }
    let scheme: Scheme = cfg.scheme().map_err(err)?;
    let b = resolve_bindings(&unit, &t, &opts.binds).map_err(|e| vec![e])?;
    let (h, w) = lower_target(&unit, &t, &b, scheme).map_err(|e| vec![e])?;
    warnings.extend(w);

    let streaming = cfg.backend == BackendKind::Gpu
        && cfg
            .word("template")
            .ok()
            .flatten()
            .and_then(crate::planning::GpuTemplate::from_name)
            .is_some_and(|t| t.is_streaming());
    let mut mir = Vec::new();
    let mut plans = Vec::new();
    for m in h.maps() {
        if mir.iter().any(|k: &KernelMir| k.kernel == m.kernel) {
            continue;
        }
        let k = unit.kernel(&m.kernel).expect("lowered map names a kernel");
        let (symbols, blocking) =
            build_mir(&m.info, k, streaming).map_err(|e| vec![Diagnostic::error(m.pos, e)])?;
        mir.push(KernelMir {
            kernel: m.kernel.clone(),
            symbols,
            blocking,
        });
        let extents = h.grids.get(&m.updates[0].dest).map(|g| g.shape.clone());
        let plan = match cfg.backend {
            BackendKind::Seq => Plan::Seq,
            BackendKind::Omp => {
                let (p, w) =
                    plan_omp(&m.info, k, &cfg).map_err(|e| vec![Diagnostic::error(m.pos, e)])?;
                warnings.extend(w);
                Plan::Omp(p)
            }
            BackendKind::Gpu => Plan::Gpu(
                plan_gpu(&m.info, k, &cfg, extents.as_deref())
                    .map_err(|e| vec![Diagnostic::error(m.pos, e)])?,
            ),
            BackendKind::Dataflow => Plan::Seq,
        };
        plans.push(plan);
    }
    let plan = match cfg.backend {
        BackendKind::Dataflow => Plan::Dataflow(Box::new(build_dataflow(&h, &cfg).map_err(err)?)),
        _ => {
            if plans.windows(2).any(|w| w[0] != w[1]) {
                return Err(err("maps of this target resolve to different plans; one plan per target is supported"));
            }
            plans.pop().unwrap_or(Plan::Seq)
        }
    };
    Ok(Compiled {
        unit,
        target: h,
        config: cfg,
        mir,
        plan,
        warnings,
    })
}
