//! Single-assignment column program for the per-PE stencil update.
//!
//! Every operation consumes whole Z-columns. A column operand names a pattern
//! buffer and a Z shift, so `u.at(1, 0, -2)` becomes `E10[z-2]`.

use std::fmt;

use super::pattern::{pattern_id_of, PatternId};
use crate::frontend::{BinOp, Expr, Literal, UnOp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Column { pattern: PatternId, zshift: i64 },
    Temp(usize),
    Const(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SsaOp {
    /// `c * x` (or `x * c` when `const_right`).
    MulConst {
        c: Literal,
        x: Operand,
        const_right: bool,
    },
    Add(Operand, Operand),
    Sub(Operand, Operand),
    /// `acc + c * x` computed as two rounded operations; `acc_right` when the
    /// product was the left addend, `const_right` when written `x * c`.
    Fma {
        acc: Operand,
        c: Literal,
        x: Operand,
        acc_right: bool,
        const_right: bool,
    },
    Mul(Operand, Operand),
    Div(Operand, Operand),
    Neg(Operand),
    /// Plain copy, used when the update is a bare operand.
    Mov(Operand),
}

/// Ops in evaluation order; op `k` defines temp `k` and the last op's
/// result is the output column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SsaProgram {
    pub ops: Vec<SsaOp>,
    /// Input grid name and dimensionality, used to re-expand operands.
    pub input: String,
    pub dims: usize,
}

pub fn lower_to_ssa(expr: &Expr, input: &str, dims: usize) -> SsaProgram {
    let mut ops = Vec::new();
    let r = lower(expr, &mut ops);
    if !matches!(r, Operand::Temp(t) if t + 1 == ops.len()) {
        ops.push(SsaOp::Mov(r));
    }
    SsaProgram {
        ops,
        input: input.to_string(),
        dims,
    }
}

fn emit(ops: &mut Vec<SsaOp>, op: SsaOp) -> Operand {
    ops.push(op);
    Operand::Temp(ops.len() - 1)
}

/// Split `c * x` / `x * c` into `(c, x, const_right)`.
fn as_scaled(e: &Expr) -> Option<(&Literal, &Expr, bool)> {
    match e {
        Expr::Binary {
            op: BinOp::Mul,
            lhs,
            rhs,
        } => match (&**lhs, &**rhs) {
            (Expr::Const(c), x) if !matches!(x, Expr::Const(_)) => Some((c, x, false)),
            (x, Expr::Const(c)) if !matches!(x, Expr::Const(_)) => Some((c, x, true)),
            _ => None,
        },
        _ => None,
    }
}

fn lower(e: &Expr, ops: &mut Vec<SsaOp>) -> Operand {
    match e {
        Expr::Const(c) => Operand::Const(c.clone()),
        Expr::Read { offset, .. } => {
            let o = &offset.0;
            let x = o.first().copied().unwrap_or(0);
            let y = o.get(1).copied().unwrap_or(0);
            let z = o.get(2).copied().unwrap_or(0);
            Operand::Column {
                pattern: pattern_id_of(x, y),
                zshift: z,
            }
        }
        Expr::Var { name, .. } => panic!("unbound variable `{name}` reached SSA lowering"),
        Expr::Unary {
            op: UnOp::Neg,
            child,
        } => {
            let a = lower(child, ops);
            emit(ops, SsaOp::Neg(a))
        }
        Expr::Binary {
            op: BinOp::Add,
            lhs,
            rhs,
        } => {
            if let Some((c, x, const_right)) = as_scaled(rhs) {
                let acc = lower(lhs, ops);
                let x = lower(x, ops);
                return emit(
                    ops,
                    SsaOp::Fma {
                        acc,
                        c: c.clone(),
                        x,
                        acc_right: false,
                        const_right,
                    },
                );
            }
            if let Some((c, x, const_right)) = as_scaled(lhs) {
                let x = lower(x, ops);
                let acc = lower(rhs, ops);
                return emit(
                    ops,
                    SsaOp::Fma {
                        acc,
                        c: c.clone(),
                        x,
                        acc_right: true,
                        const_right,
                    },
                );
            }
            let a = lower(lhs, ops);
            let b = lower(rhs, ops);
            emit(ops, SsaOp::Add(a, b))
        }
        Expr::Binary { op, lhs, rhs } => {
            if *op == BinOp::Mul {
                if let Some((c, x, const_right)) = as_scaled(e) {
                    let _ = (lhs, rhs);
                    let x = lower(x, ops);
                    return emit(
                        ops,
                        SsaOp::MulConst {
                            c: c.clone(),
                            x,
                            const_right,
                        },
                    );
                }
            }
            let a = lower(lhs, ops);
            let b = lower(rhs, ops);
            emit(
                ops,
                match op {
                    BinOp::Sub => SsaOp::Sub(a, b),
                    BinOp::Mul => SsaOp::Mul(a, b),
                    BinOp::Div => SsaOp::Div(a, b),
                    BinOp::Add => unreachable!(),
                },
            )
        }
    }
}

impl SsaProgram {
    /// Rebuild the expression tree the program computes.
    pub fn expand(&self) -> Expr {
        let mut temps: Vec<Expr> = Vec::new();
        for op in &self.ops {
            let v = |o: &Operand| self.operand_expr(o, &temps);
            let e = match op {
                SsaOp::MulConst { c, x, const_right } => scaled(c, v(x), *const_right),
                SsaOp::Add(a, b) => Expr::binary(BinOp::Add, v(a), v(b)),
                SsaOp::Sub(a, b) => Expr::binary(BinOp::Sub, v(a), v(b)),
                SsaOp::Mul(a, b) => Expr::binary(BinOp::Mul, v(a), v(b)),
                SsaOp::Div(a, b) => Expr::binary(BinOp::Div, v(a), v(b)),
                SsaOp::Neg(a) => Expr::neg(v(a)),
                SsaOp::Mov(a) => v(a),
                SsaOp::Fma {
                    acc,
                    c,
                    x,
                    acc_right,
                    const_right,
                } => {
                    let prod = scaled(c, v(x), *const_right);
                    if *acc_right {
                        Expr::binary(BinOp::Add, prod, v(acc))
                    } else {
                        Expr::binary(BinOp::Add, v(acc), prod)
                    }
                }
            };
            temps.push(e);
        }
        temps.pop().unwrap_or_else(|| Expr::constant("0.0"))
    }

    fn operand_expr(&self, o: &Operand, temps: &[Expr]) -> Expr {
        match o {
            Operand::Const(c) => Expr::Const(c.clone()),
            Operand::Temp(t) => temps[*t].clone(),
            Operand::Column { pattern, zshift } => {
                let (x, y) = pattern.offset();
                let off = match self.dims {
                    1 => vec![x],
                    2 => vec![x, y],
                    _ => vec![x, y, *zshift],
                };
                Expr::read(&self.input, off)
            }
        }
    }

    /// Every column operand with its shift.
    pub fn columns(&self) -> Vec<(PatternId, i64)> {
        let mut out = Vec::new();
        let mut push = |o: &Operand| {
            if let Operand::Column { pattern, zshift } = o {
                out.push((*pattern, *zshift));
            }
        };
        for op in &self.ops {
            match op {
                SsaOp::MulConst { x, .. } | SsaOp::Neg(x) | SsaOp::Mov(x) => push(x),
                SsaOp::Add(a, b) | SsaOp::Sub(a, b) | SsaOp::Mul(a, b) | SsaOp::Div(a, b) => {
                    push(a);
                    push(b);
                }
                SsaOp::Fma { acc, x, .. } => {
                    push(acc);
                    push(x);
                }
            }
        }
        out
    }
}

fn scaled(c: &Literal, x: Expr, const_right: bool) -> Expr {
    if const_right {
        Expr::binary(BinOp::Mul, x, Expr::Const(c.clone()))
    } else {
        Expr::binary(BinOp::Mul, Expr::Const(c.clone()), x)
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Column { pattern, zshift } => write!(f, "{pattern}[{zshift}]"),
            Operand::Temp(t) => write!(f, "t{t}"),
            Operand::Const(c) => write!(f, "#{}", c.text()),
        }
    }
}

impl fmt::Display for SsaOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SsaOp::MulConst { c, x, const_right } => {
                write!(
                    f,
                    "mul_const {} {x}{}",
                    c.text(),
                    if *const_right { " r" } else { "" }
                )
            }
            SsaOp::Add(a, b) => write!(f, "add {a} {b}"),
            SsaOp::Sub(a, b) => write!(f, "sub {a} {b}"),
            SsaOp::Mul(a, b) => write!(f, "mul {a} {b}"),
            SsaOp::Div(a, b) => write!(f, "div {a} {b}"),
            SsaOp::Neg(a) => write!(f, "neg {a}"),
            SsaOp::Mov(a) => write!(f, "mov {a}"),
            SsaOp::Fma {
                acc,
                c,
                x,
                acc_right,
                const_right,
            } => {
                write!(f, "fma {acc} {} {x}", c.text())?;
                if *acc_right {
                    f.write_str(" accr")?;
                }
                if *const_right {
                    f.write_str(" r")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for SsaProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, op) in self.ops.iter().enumerate() {
            writeln!(f, "t{k} = {op}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn expr(body: &str) -> Expr {
        let src =
            format!("@st.kernel\ndef k(u: st.grid, v: st.grid):\n  v.at(0, 0, 0).set({body})\n");
        parse_source(&src).unwrap().kernels[0].updates()[0]
            .expr
            .clone()
    }

    #[test]
    fn scaled_center_is_one_mul_const() {
        let e = expr("0.25 * u.at(0, 0, 0)");
        let p = lower_to_ssa(&e, "u", 3);
        assert_eq!(p.ops.len(), 1);
        assert!(matches!(p.ops[0], SsaOp::MulConst { .. }));
        assert_eq!(p.expand(), e);
    }

    #[test]
    fn bare_read_gets_a_mov() {
        let e = expr("u.at(0, 1, -2)");
        let p = lower_to_ssa(&e, "u", 3);
        assert_eq!(p.to_string(), "t0 = mov N10[-2]\n");
        assert_eq!(p.expand(), e);
    }

    #[test]
    fn mixed_forms_re_expand() {
        for body in [
            "u.at(1, 0, 0) * 2.0 + u.at(0, 0, 1)",
            "-(u.at(1, 0, 0) - 3.0 * u.at(-1, 0, 0)) / 4.0",
            "u.at(0, 0, 0) * u.at(0, 1, 0) + 0.5 * (u.at(1, 1, 1) + u.at(-1, -1, -1))",
            "2.0 * 3.0 + u.at(0, 0, 0)",
        ] {
            let e = expr(body);
            assert_eq!(lower_to_ssa(&e, "u", 3).expand(), e, "{body}");
        }
    }
}
