//! Postfix evaluation of update expressions over scalar or vector lanes.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::frontend::{BinOp, Expr, UnOp};

pub trait Num:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
}

impl Num for f32 {}
impl Num for f64 {}

/// Element type of a grid.
pub trait Real: Num + Send + Sync + PartialEq + Debug + Default + 'static {
    fn parse_lit(s: &str) -> Self;
    fn to_f64(self) -> f64;
    fn splat4(self) -> V4<Self> {
        V4([self; 4])
    }
}

impl Real for f32 {
    fn parse_lit(s: &str) -> Self {
        s.parse().unwrap_or(f32::NAN)
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn parse_lit(s: &str) -> Self {
        s.parse().unwrap_or(f64::NAN)
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Four independent lanes, each computed exactly as a scalar would be.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct V4<T>(pub [T; 4]);

macro_rules! lanewise {
    ($tr:ident, $f:ident, $op:tt) => {
        impl<T: Num> $tr for V4<T> {
            type Output = Self;
            #[inline]
            fn $f(self, o: Self) -> Self {
                let (a, b) = (self.0, o.0);
                V4([a[0] $op b[0], a[1] $op b[1], a[2] $op b[2], a[3] $op b[3]])
            }
        }
    };
}

lanewise!(Add, add, +);
lanewise!(Sub, sub, -);
lanewise!(Mul, mul, *);
lanewise!(Div, div, /);

impl<T: Num> Neg for V4<T> {
    type Output = Self;
    fn neg(self) -> Self {
        V4(self.0.map(|x| -x))
    }
}

impl<T: Num> Num for V4<T> {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ins {
    Load(u32),
    Const(u32),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
}

/// Compiled expression. `loads[k]` is `(slot, offset)` where the slot indexes
/// the grid list given at compile time.
#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    pub ins: Vec<Ins>,
    pub loads: Vec<(usize, Vec<i64>)>,
    pub consts: Vec<String>,
}

impl Tape {
    pub fn compile(e: &Expr, slots: &[String]) -> Tape {
        let mut t = Tape {
            ins: Vec::new(),
            loads: Vec::new(),
            consts: Vec::new(),
        };
        t.emit(e, slots);
        t
    }

    fn emit(&mut self, e: &Expr, slots: &[String]) {
        match e {
            Expr::Const(c) => {
                self.consts.push(c.text().to_string());
                self.ins.push(Ins::Const(self.consts.len() as u32 - 1));
            }
            Expr::Read { grid, offset, .. } => {
                let s = slots
                    .iter()
                    .position(|x| x == grid)
                    .unwrap_or_else(|| panic!("read of `{grid}` outside the slot list"));
                self.loads.push((s, offset.0.clone()));
                self.ins.push(Ins::Load(self.loads.len() as u32 - 1));
            }
            Expr::Var { name, .. } => panic!("unbound variable `{name}` reached execution"),
            Expr::Unary {
                op: UnOp::Neg,
                child,
            } => {
                self.emit(child, slots);
                self.ins.push(Ins::Neg);
            }
            Expr::Binary { op, lhs, rhs } => {
                self.emit(lhs, slots);
                self.emit(rhs, slots);
                self.ins.push(match op {
                    BinOp::Add => Ins::Add,
                    BinOp::Sub => Ins::Sub,
                    BinOp::Mul => Ins::Mul,
                    BinOp::Div => Ins::Div,
                });
            }
        }
    }

    pub fn constants<T: Real>(&self) -> Vec<T> {
        self.consts.iter().map(|c| T::parse_lit(c)).collect()
    }

    /// Evaluate with `load(k)` supplying the value of `loads[k]`.
    #[inline]
    pub fn eval<L: Num>(
        &self,
        consts: &[L],
        stack: &mut Vec<L>,
        mut load: impl FnMut(usize) -> L,
    ) -> L {
        stack.clear();
        for ins in &self.ins {
            match *ins {
                Ins::Load(k) => stack.push(load(k as usize)),
                Ins::Const(k) => stack.push(consts[k as usize]),
                Ins::Neg => {
                    let a = stack.pop().unwrap();
                    stack.push(-a);
                }
                op => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(match op {
                        Ins::Add => a + b,
                        Ins::Sub => a - b,
                        Ins::Mul => a * b,
                        _ => a / b,
                    });
                }
            }
        }
        stack.pop().unwrap()
    }
}
