//! Target lowered against concrete bindings: loop counts resolved, map bounds
//! evaluated and split into regions, kernel scalars substituted and reads
//! renamed to the target's grid parameters.

use std::collections::BTreeMap;
use std::fmt;

use crate::analysis::{
    analyze_kernel, decompose_regions, desugar_map, MapSpec, Region, Scheme, StencilInfo,
};
use crate::diag::{Diagnostic, Pos};
use crate::frontend::{
    kernel_grid_context, print_expr, Bindings, DType, Expr, GridDecl, KernelDecl, LoopBound,
    ParamType, SourceUnit, TargetDecl, TargetStmt,
};

#[derive(Debug, Clone, PartialEq)]
pub struct HirUpdate {
    /// Target grid parameter written.
    pub dest: String,
    /// Expression over target grid parameters.
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HirMap {
    pub kernel: String,
    pub info: StencilInfo,
    pub spec: MapSpec,
    pub regions: Vec<Region>,
    pub updates: Vec<HirUpdate>,
    /// Kernel parameter → target parameter for grid arguments.
    pub grid_args: BTreeMap<String, String>,
    pub pos: Pos,
}

impl HirMap {
    /// Target grids read by the map, in name order.
    pub fn reads(&self) -> Vec<String> {
        let mut out = std::collections::BTreeSet::new();
        for u in &self.updates {
            u.expr.for_each_read(&mut |g, _, _| {
                out.insert(g.to_string());
            });
        }
        out.into_iter().collect()
    }

    pub fn covers_full_domain(&self, extents: &[usize]) -> bool {
        self.spec
            .dims
            .iter()
            .zip(extents)
            .all(|(d, &e)| d[0] == 0 && d[3] == e as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HirStmt {
    Map(HirMap),
    Swap(String, String),
    Loop { count: u64, body: Vec<HirStmt> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HirTarget {
    pub name: String,
    /// Target grid parameter → bound module grid declaration.
    pub grids: BTreeMap<String, GridDecl>,
    pub body: Vec<HirStmt>,
    pub scheme: Scheme,
}

impl HirTarget {
    pub fn dtype(&self) -> Option<DType> {
        self.grids.values().next().map(|g| g.dtype)
    }

    /// Every map in program order.
    pub fn maps(&self) -> Vec<&HirMap> {
        fn go<'a>(s: &'a [HirStmt], out: &mut Vec<&'a HirMap>) {
            for st in s {
                match st {
                    HirStmt::Map(m) => out.push(m),
                    HirStmt::Loop { body, .. } => go(body, out),
                    HirStmt::Swap(..) => {}
                }
            }
        }
        let mut out = Vec::new();
        go(&self.body, &mut out);
        out
    }
}

/// Symbol values visible to map bounds: integer scalars and `g.shape[d]`.
pub fn map_env(unit: &SourceUnit, b: &Bindings) -> BTreeMap<String, i64> {
    let mut env = BTreeMap::new();
    for g in &unit.grids {
        for (d, &e) in g.shape.iter().enumerate() {
            env.insert(format!("{}.shape[{d}]", g.name), e as i64);
        }
    }
    for (p, g) in &b.grids {
        if let Some(g) = unit.grid(g) {
            for (d, &e) in g.shape.iter().enumerate() {
                env.insert(format!("{p}.shape[{d}]"), e as i64);
            }
        }
    }
    for name in b.scalars.keys() {
        if let Some(v) = b.scalar_int(name) {
            env.insert(name.clone(), v);
        }
    }
    env
}

fn rename_reads(e: &Expr, names: &BTreeMap<String, String>) -> Expr {
    match e {
        Expr::Read { grid, offset, pos } => Expr::Read {
            grid: names.get(grid).cloned().unwrap_or_else(|| grid.clone()),
            offset: offset.clone(),
            pos: *pos,
        },
        Expr::Unary { op, child } => Expr::Unary {
            op: *op,
            child: Box::new(rename_reads(child, names)),
        },
        Expr::Binary { op, lhs, rhs } => Expr::Binary {
            op: *op,
            lhs: Box::new(rename_reads(lhs, names)),
            rhs: Box::new(rename_reads(rhs, names)),
        },
        other => other.clone(),
    }
}

fn lower_map(
    unit: &SourceUnit,
    k: &KernelDecl,
    args: &[String],
    b: &Bindings,
    env: &BTreeMap<String, i64>,
    spec: &crate::frontend::MapSpecRaw,
    scheme: Scheme,
    pos: Pos,
    warnings: &mut Vec<Diagnostic>,
) -> Result<HirMap, Diagnostic> {
    let ctx = kernel_grid_context(unit, k, args, b);
    let mut grid_args = BTreeMap::new();
    let mut scalars = BTreeMap::new();
    for (p, a) in k.params.iter().zip(args) {
        match p.ty {
            ParamType::Grid => {
                if !ctx.contains_key(&p.name) {
                    return Err(Diagnostic::error(
                        pos,
                        format!("grid argument `{a}` is not bound to a declared grid"),
                    ));
                }
                grid_args.insert(p.name.clone(), a.clone());
            }
            ParamType::Scalar(_) => {
                let v = b.scalars.get(a).ok_or_else(|| {
                    Diagnostic::error(
                        pos,
                        format!(
                            "scalar argument `{a}` has no value; bind it with --bind {a}=VALUE"
                        ),
                    )
                })?;
                scalars.insert(p.name.clone(), Expr::Const(v.clone()));
            }
        }
    }
    let extents = ctx
        .values()
        .next()
        .map(|g| g.shape.clone())
        .ok_or_else(|| {
            Diagnostic::error(pos, format!("kernel `{}` has no grid arguments", k.name))
        })?;
    let (spec, w) = desugar_map(spec, env, &extents, pos)?;
    warnings.extend(w);
    let regions = decompose_regions(&spec, scheme).map_err(|m| Diagnostic::error(pos, m))?;
    let updates = k
        .updates()
        .into_iter()
        .map(|u| HirUpdate {
            dest: grid_args[&u.grid].clone(),
            expr: rename_reads(&u.expr.substitute(&scalars), &grid_args),
        })
        .collect();
    Ok(HirMap {
        kernel: k.name.clone(),
        info: analyze_kernel(k),
        spec,
        regions,
        updates,
        grid_args,
        pos,
    })
}

/// Lower a validated target. Returns the HIR plus any warnings.
pub fn lower_target(
    unit: &SourceUnit,
    target: &TargetDecl,
    b: &Bindings,
    scheme: Scheme,
) -> Result<(HirTarget, Vec<Diagnostic>), Diagnostic> {
    let env = map_env(unit, b);
    let mut warnings = Vec::new();

    fn go(
        stmts: &[TargetStmt],
        unit: &SourceUnit,
        b: &Bindings,
        env: &BTreeMap<String, i64>,
        scheme: Scheme,
        warnings: &mut Vec<Diagnostic>,
    ) -> Result<Vec<HirStmt>, Diagnostic> {
        let mut out = Vec::new();
        for s in stmts {
            out.push(match s {
                TargetStmt::For {
                    bound, body, pos, ..
                } => {
                    let count = match bound {
                        LoopBound::Literal(n) => *n,
                        LoopBound::Param(p) => {
                            let v = b.scalar_int(p).ok_or_else(|| {
                                Diagnostic::error(
                                    *pos,
                                    format!(
                                        "loop bound `{p}` has no value; bind it with --bind {p}=N"
                                    ),
                                )
                            })?;
                            u64::try_from(v).map_err(|_| {
                                Diagnostic::error(*pos, format!("loop bound `{p}` is negative"))
                            })?
                        }
                    };
                    HirStmt::Loop {
                        count,
                        body: go(body, unit, b, env, scheme, warnings)?,
                    }
                }
                TargetStmt::Swap { a, b: c, .. } => HirStmt::Swap(a.clone(), c.clone()),
                TargetStmt::Map {
                    spec,
                    kernel,
                    args,
                    pos,
                } => {
                    let k = unit.kernel(kernel).ok_or_else(|| {
                        Diagnostic::error(*pos, format!("unknown kernel `{kernel}`"))
                    })?;
                    HirStmt::Map(lower_map(
                        unit, k, args, b, env, spec, scheme, *pos, warnings,
                    )?)
                }
            });
        }
        Ok(out)
    }

    let body = go(&target.body, unit, b, &env, scheme, &mut warnings)?;
    let mut grids = BTreeMap::new();
    for p in target.params.iter().filter(|p| p.ty == ParamType::Grid) {
        match b.grids.get(&p.name).and_then(|g| unit.grid(g)) {
            Some(g) => {
                grids.insert(p.name.clone(), g.clone());
            }
            None => {
                return Err(Diagnostic::error(
                    target.pos,
                    format!(
                        "grid parameter `{}` is not bound to a declared grid",
                        p.name
                    ),
                ))
            }
        }
    }
    Ok((
        HirTarget {
            name: target.name.clone(),
            grids,
            body,
            scheme,
        },
        warnings,
    ))
}

impl fmt::Display for HirTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "target {} decomposition={}",
            self.name,
            self.scheme.name()
        )?;
        for (p, g) in &self.grids {
            writeln!(
                f,
                "  grid {p} -> {} {} shape={:?} order={}",
                g.name,
                g.dtype.name(),
                g.shape,
                g.order
            )?;
        }
        fn go(s: &[HirStmt], depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let pad = "  ".repeat(depth);
            for st in s {
                match st {
                    HirStmt::Loop { count, body } => {
                        writeln!(f, "{pad}loop {count}")?;
                        go(body, depth + 1, f)?;
                    }
                    HirStmt::Swap(a, b) => writeln!(f, "{pad}swap {a} {b}")?,
                    HirStmt::Map(m) => {
                        writeln!(f, "{pad}map {} [{}] {}", m.kernel, m.spec, m.info.shape)?;
                        for r in &m.regions {
                            writeln!(f, "{pad}  region {} {:?}", r.tag, r.ranges)?;
                        }
                        for u in &m.updates {
                            writeln!(f, "{pad}  {} = {}", u.dest, print_expr(&u.expr))?;
                        }
                    }
                }
            }
            Ok(())
        }
        go(&self.body, 1, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_source, resolve_bindings};

    const SRC: &str = "\
import stencilpy as st

@st.kernel
def k(a: st.grid, b: st.grid, c: st.f32):
    b.at(0, 0).set(c * a.at(1, 0))

@st.target
def t(u: st.grid, v: st.grid, n: st.i32, s: st.f32):
    for _t in range(n):
        st.map(e=u.shape, w=1)(k)(u, v, s)
        (u, v) = (v, u)

u = st.grid(dtype=st.f32, shape=(6, 5), order=1)
v = st.grid(dtype=st.f32, shape=(6, 5), order=1)
";

    #[test]
    fn binds_loops_scalars_and_renames_reads() {
        let unit = parse_source(SRC).unwrap();
        let t = unit.target("t").unwrap();
        let ov = BTreeMap::from([
            ("n".to_string(), "3".to_string()),
            ("s".to_string(), "0.5".to_string()),
        ]);
        let b = resolve_bindings(&unit, t, &ov).unwrap();
        let (h, w) = lower_target(&unit, t, &b, Scheme::CrossProduct).unwrap();
        assert!(w.is_empty());
        let HirStmt::Loop { count, body } = &h.body[0] else {
            panic!()
        };
        assert_eq!(*count, 3);
        let HirStmt::Map(m) = &body[0] else { panic!() };
        assert_eq!(m.spec.dims, vec![[0, 1, 5, 6], [0, 1, 4, 5]]);
        assert_eq!(m.regions.len(), 9);
        assert_eq!(print_expr(&m.updates[0].expr), "0.5 * u.at(1, 0)");
        assert_eq!(m.updates[0].dest, "v");
    }

    #[test]
    fn unbound_loop_count_is_reported() {
        let unit = parse_source(SRC).unwrap();
        let t = unit.target("t").unwrap();
        let b = resolve_bindings(&unit, t, &BTreeMap::new()).unwrap();
        let e = lower_target(&unit, t, &b, Scheme::CrossProduct).unwrap_err();
        assert!(e.message.contains("--bind n=N"), "{}", e.message);
    }
}
