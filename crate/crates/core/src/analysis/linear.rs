//! Weighted-sum view of an update expression, used by the Semi-stencil
//! algorithm which needs each contribution to touch exactly one input point.

use crate::frontend::{BinOp, Expr, Literal, Offset, UnOp};

/// One contribution `sign * coef * grid[offset]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub negate: bool,
    pub coef: Option<Literal>,
    /// Coefficient written to the right of the read (`u.at(..) * c`).
    pub coef_right: bool,
    pub grid: String,
    pub offset: Offset,
}

/// `(t0 ± t1 ± ... ± tn) [/ divisor]`, accumulated strictly left to right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearForm {
    pub terms: Vec<Term>,
    pub divisor: Option<Literal>,
    /// A shared coefficient `c * (a ± b)` was distributed over its reads, so
    /// summing the terms rounds differently from the source expression.
    pub distributed: bool,
}

/// Decompose `e` into a left-leaning chain of single-read terms, or `None`
/// when the expression has a different structure.
pub fn linear_form(e: &Expr) -> Option<LinearForm> {
    let (body, divisor) = match e {
        Expr::Binary {
            op: BinOp::Div,
            lhs,
            rhs,
        } => match &**rhs {
            Expr::Const(c) => (&**lhs, Some(c.clone())),
            _ => return None,
        },
        _ => (e, None),
    };
    let mut terms = Vec::new();
    let mut distributed = false;
    chain(body, false, &mut terms, &mut distributed)?;
    Some(LinearForm {
        terms,
        divisor,
        distributed,
    })
}

fn chain(e: &Expr, negate: bool, out: &mut Vec<Term>, distributed: &mut bool) -> Option<()> {
    match e {
        Expr::Binary {
            op: op @ (BinOp::Add | BinOp::Sub),
            lhs,
            rhs,
        } if !negate => {
            chain(lhs, false, out, distributed)?;
            operand(rhs, *op == BinOp::Sub, out, distributed)
        }
        _ => operand(e, negate, out, distributed),
    }
}

/// A single term, or `c * (r0 ± r1 ...)` over uncoefficiented reads.
fn operand(e: &Expr, negate: bool, out: &mut Vec<Term>, distributed: &mut bool) -> Option<()> {
    if let Some(t) = term(e) {
        out.push(Term {
            negate: t.negate != negate,
            ..t
        });
        return Some(());
    }
    let Expr::Binary {
        op: BinOp::Mul,
        lhs,
        rhs,
    } = e
    else {
        return None;
    };
    let (c, group, right) = match (&**lhs, &**rhs) {
        (Expr::Const(c), g) => (c, g, false),
        (g, Expr::Const(c)) => (c, g, true),
        _ => return None,
    };
    let mut inner = Vec::new();
    let mut nested = false;
    chain(group, false, &mut inner, &mut nested)?;
    if nested || inner.iter().any(|t| t.coef.is_some()) {
        return None;
    }
    *distributed = true;
    out.extend(inner.into_iter().map(|t| Term {
        negate: t.negate != negate,
        coef: Some(c.clone()),
        coef_right: right,
        ..t
    }));
    Some(())
}

fn term(e: &Expr) -> Option<Term> {
    match e {
        Expr::Read { grid, offset, .. } => Some(Term {
            negate: false,
            coef: None,
            coef_right: false,
            grid: grid.clone(),
            offset: offset.clone(),
        }),
        Expr::Unary {
            op: UnOp::Neg,
            child,
        } => {
            let t = term(child)?;
            Some(Term {
                negate: !t.negate,
                ..t
            })
        }
        Expr::Binary {
            op: BinOp::Mul,
            lhs,
            rhs,
        } => match (&**lhs, &**rhs) {
            (Expr::Const(c), Expr::Read { grid, offset, .. }) => Some(Term {
                negate: false,
                coef: Some(c.clone()),
                coef_right: false,
                grid: grid.clone(),
                offset: offset.clone(),
            }),
            (Expr::Read { grid, offset, .. }, Expr::Const(c)) => Some(Term {
                negate: false,
                coef: Some(c.clone()),
                coef_right: true,
                grid: grid.clone(),
                offset: offset.clone(),
            }),
            _ => None,
        },
        _ => None,
    }
}
