//! Canonical pretty-printer. Output re-parses to a structurally equal unit.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn print_unit(unit: &SourceUnit) -> String {
    let a = &unit.alias;
    let mut out = String::new();
    if unit.has_import || a != "stencilpy" {
        if a == "stencilpy" {
            out.push_str("import stencilpy\n");
        } else {
            let _ = writeln!(out, "import stencilpy as {a}");
        }
    }
    for k in &unit.kernels {
        out.push('\n');
        let _ = writeln!(out, "@{a}.kernel");
        let _ = writeln!(out, "def {}({}):", k.name, params(a, &k.params));
        for s in &k.body {
            match s {
                KernelStmt::Assign { name, expr, .. } => {
                    let _ = writeln!(out, "{INDENT}{name} = {}", print_expr(expr));
                }
                KernelStmt::Update {
                    grid, offset, expr, ..
                } => {
                    let _ = writeln!(out, "{INDENT}{grid}.at{offset}.set({})", print_expr(expr));
                }
            }
        }
    }
    for t in &unit.targets {
        out.push('\n');
        let _ = writeln!(out, "@{a}.target");
        let _ = writeln!(out, "def {}({}):", t.name, params(a, &t.params));
        target_body(&mut out, a, &t.body, 1);
    }
    if !unit.grids.is_empty() {
        out.push('\n');
    }
    for g in &unit.grids {
        let shape: Vec<String> = g.shape.iter().map(|e| e.to_string()).collect();
        let shape = if shape.len() == 1 {
            format!("({},)", shape[0])
        } else {
            format!("({})", shape.join(", "))
        };
        let _ = writeln!(
            out,
            "{} = {a}.grid(dtype={a}.{}, shape={shape}, order={})",
            g.name, g.dtype, g.order
        );
    }
    if let Some(l) = &unit.launch {
        out.push('\n');
        let ps: Vec<String> = l
            .params
            .iter()
            .map(|p| format!("{}={}", p.key, p.value))
            .collect();
        let args: Vec<String> = l.args.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(
            out,
            "{a}.launch(backend={a}.{}({}))({})({})",
            l.ctor,
            ps.join(", "),
            l.target,
            args.join(", ")
        );
    }
    out
}

fn params(alias: &str, ps: &[Param]) -> String {
    ps.iter()
        .map(|p| format!("{}: {alias}.{}", p.name, p.ty.name()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn target_body(out: &mut String, a: &str, stmts: &[TargetStmt], depth: usize) {
    let pad = INDENT.repeat(depth);
    for s in stmts {
        match s {
            TargetStmt::For {
                var, bound, body, ..
            } => {
                let b = match bound {
                    LoopBound::Literal(n) => n.to_string(),
                    LoopBound::Param(p) => p.clone(),
                };
                let _ = writeln!(out, "{pad}for {var} in range({b}):");
                target_body(out, a, body, depth + 1);
            }
            TargetStmt::Map {
                spec, kernel, args, ..
            } => {
                let kw: Vec<String> = spec
                    .kwargs
                    .iter()
                    .map(|k| format!("{}={}", k.key, map_arg(&k.value)))
                    .collect();
                let _ = writeln!(
                    out,
                    "{pad}{a}.map({})({kernel})({})",
                    kw.join(", "),
                    args.join(", ")
                );
            }
            TargetStmt::Swap { a: x, b: y, .. } => {
                let _ = writeln!(out, "{pad}({x}, {y}) = ({y}, {x})");
            }
        }
    }
}

pub fn map_arg(v: &MapArg) -> String {
    match v {
        MapArg::Scalar(b) => b.to_string(),
        MapArg::Tuple(items) => {
            let parts: Vec<String> = items.iter().map(|b| b.to_string()).collect();
            format!("({})", parts.join(", "))
        }
        MapArg::Shape(g) => format!("{g}.shape"),
    }
}

/// Render an expression with the minimum parentheses that preserve its tree.
pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Const(l) => l.text().to_string(),
        Expr::Read { grid, offset, .. } => format!("{grid}.at{offset}"),
        Expr::Var { name, .. } => name.clone(),
        Expr::Unary { child, .. } => match **child {
            Expr::Binary { .. } => format!("-({})", print_expr(child)),
            _ => format!("-{}", print_expr(child)),
        },
        Expr::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            let l = print_expr(lhs);
            let r = print_expr(rhs);
            let l = match **lhs {
                Expr::Binary { op: lo, .. } if lo.precedence() < p => format!("({l})"),
                _ => l,
            };
            let r = match **rhs {
                Expr::Binary { op: ro, .. } if ro.precedence() <= p => format!("({r})"),
                _ => r,
            };
            format!("{l} {} {r}", op.symbol())
        }
    }
}
