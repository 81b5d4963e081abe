//! Resolution of target parameters to module grids and scalar values.

use std::collections::BTreeMap;

use super::ast::*;
use crate::diag::{Diagnostic, Pos};

/// Concrete values for a target's parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings {
    /// Target grid parameter → declared module grid.
    pub grids: BTreeMap<String, String>,
    /// Target scalar parameter → literal value.
    pub scalars: BTreeMap<String, Literal>,
}

impl Bindings {
    pub fn scalar_int(&self, name: &str) -> Option<i64> {
        let text = self.scalars.get(name)?.text().to_string();
        text.parse().ok()
    }
}

/// Bind target parameters using, in increasing priority: a module grid of the
/// same name, the launch statement's positional arguments, then `overrides`
/// (`name=value` pairs typically given on the command line).
pub fn resolve_bindings(
    unit: &SourceUnit,
    target: &TargetDecl,
    overrides: &BTreeMap<String, String>,
) -> Result<Bindings, Diagnostic> {
    let mut b = Bindings::default();
    for p in &target.params {
        if p.ty == ParamType::Grid && unit.grid(&p.name).is_some() {
            b.grids.insert(p.name.clone(), p.name.clone());
        }
    }
    if let Some(l) = unit.launch.as_ref().filter(|l| l.target == target.name) {
        if l.args.len() != target.params.len() {
            return Err(Diagnostic::error(
                l.pos,
                format!(
                    "target `{}` takes {} arguments but launch passes {}",
                    target.name,
                    target.params.len(),
                    l.args.len()
                ),
            ));
        }
        for (p, a) in target.params.iter().zip(&l.args) {
            bind_one(unit, &mut b, p, &a.to_string(), l.pos)?;
        }
    }
    for (k, v) in overrides {
        let p = target.param(k).ok_or_else(|| {
            Diagnostic::error(
                target.pos,
                format!("target `{}` has no parameter `{k}`", target.name),
            )
        })?;
        bind_one(unit, &mut b, p, v, target.pos)?;
    }
    Ok(b)
}

fn bind_one(
    unit: &SourceUnit,
    b: &mut Bindings,
    p: &Param,
    value: &str,
    pos: Pos,
) -> Result<(), Diagnostic> {
    match p.ty {
        ParamType::Grid => {
            if unit.grid(value).is_none() {
                return Err(Diagnostic::error(
                    pos,
                    format!(
                        "grid parameter `{}` bound to undeclared grid `{value}`",
                        p.name
                    ),
                ));
            }
            b.grids.insert(p.name.clone(), value.to_string());
        }
        ParamType::Scalar(t) => {
            let ok = if t.is_integer() {
                value.parse::<i64>().is_ok()
            } else {
                value.parse::<f64>().is_ok()
            };
            if !ok {
                return Err(Diagnostic::error(
                    pos,
                    format!(
                        "value `{value}` is not a valid {} for parameter `{}`",
                        t.name(),
                        p.name
                    ),
                ));
            }
            b.scalars.insert(p.name.clone(), Literal(value.to_string()));
        }
    }
    Ok(())
}

/// Grid declaration seen by each grid parameter of `kernel` when invoked with
/// `args` from a target bound by `b`. Unbound parameters are omitted.
pub fn kernel_grid_context<'a>(
    unit: &'a SourceUnit,
    kernel: &KernelDecl,
    args: &[String],
    b: &Bindings,
) -> BTreeMap<String, &'a GridDecl> {
    let mut out = BTreeMap::new();
    for (p, a) in kernel.params.iter().zip(args) {
        if p.ty != ParamType::Grid {
            continue;
        }
        if let Some(g) = b.grids.get(a).and_then(|g| unit.grid(g)) {
            out.insert(p.name.clone(), g);
        }
    }
    out
}

/// Substitute kernel scalar parameters with the values passed at a map call.
pub fn kernel_scalar_env(
    kernel: &KernelDecl,
    args: &[String],
    b: &Bindings,
) -> BTreeMap<String, Expr> {
    let mut env = BTreeMap::new();
    for (p, a) in kernel.params.iter().zip(args) {
        if let ParamType::Scalar(_) = p.ty {
            if let Some(v) = b.scalars.get(a) {
                env.insert(p.name.clone(), Expr::Const(v.clone()));
            }
        }
    }
    env
}
