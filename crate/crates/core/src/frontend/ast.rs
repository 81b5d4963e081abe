//! Program model produced by the parser.

use std::collections::BTreeMap;
use std::fmt;

use crate::diag::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    pub fn name(self) -> &'static str {
        match self {
            DType::F32 => "f32",
            DType::F64 => "f64",
        }
    }

    pub fn c_type(self) -> &'static str {
        match self {
            DType::F32 => "float",
            DType::F64 => "double",
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    /// Namespace alias of the DSL module (`st` in `import stencilpy as st`).
    pub alias: String,
    pub has_import: bool,
    pub grids: Vec<GridDecl>,
    pub kernels: Vec<KernelDecl>,
    pub targets: Vec<TargetDecl>,
    pub launch: Option<LaunchDecl>,
}

impl SourceUnit {
    pub fn kernel(&self, name: &str) -> Option<&KernelDecl> {
        self.kernels.iter().find(|k| k.name == name)
    }

    pub fn target(&self, name: &str) -> Option<&TargetDecl> {
        self.targets.iter().find(|t| t.name == name)
    }

    pub fn grid(&self, name: &str) -> Option<&GridDecl> {
        self.grids.iter().find(|g| g.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridDecl {
    pub name: String,
    pub dtype: DType,
    pub shape: Vec<usize>,
    pub order: usize,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarType {
    F32,
    F64,
    I32,
    I64,
}

impl ScalarType {
    pub fn name(self) -> &'static str {
        match self {
            ScalarType::F32 => "f32",
            ScalarType::F64 => "f64",
            ScalarType::I32 => "i32",
            ScalarType::I64 => "i64",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, ScalarType::I32 | ScalarType::I64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamType {
    Grid,
    Scalar(ScalarType),
}

impl ParamType {
    pub fn name(self) -> &'static str {
        match self {
            ParamType::Grid => "grid",
            ParamType::Scalar(s) => s.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: ParamType,
    pub pos: Pos,
}

/// Relative grid offset, one signed component per grid dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Offset(pub Vec<i64>);

impl Offset {
    pub fn zero(dims: usize) -> Self {
        Offset(vec![0; dims])
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Largest absolute component.
    pub fn radius(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn nonzero_components(&self) -> usize {
        self.0.iter().filter(|&&c| c != 0).count()
    }

    /// Strictly before the center point in lexicographic order.
    pub fn is_lex_negative(&self) -> bool {
        self.0.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0)
    }
}

impl fmt::Display for Offset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
}

/// Numeric literal kept as its source lexeme so it can be rounded directly
/// to whichever element type the kernel is instantiated with.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal(pub String);

impl Literal {
    pub fn from_f64(v: f64) -> Self {
        let mut s = format!("{v:?}");
        if !s.contains(['.', 'e', 'E']) {
            s.push_str(".0");
        }
        Literal(s)
    }

    pub fn parse<T: std::str::FromStr>(&self) -> Option<T> {
        self.0.parse().ok()
    }

    pub fn value_f64(&self) -> f64 {
        self.0.parse().unwrap_or(f64::NAN)
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Const(Literal),
    Read {
        grid: String,
        offset: Offset,
        pos: Pos,
    },
    /// Reference to a kernel temporary or scalar parameter.
    Var {
        name: String,
        pos: Pos,
    },
    Unary {
        op: UnOp,
        child: Box<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

impl Expr {
    pub fn read(grid: &str, offset: Vec<i64>) -> Expr {
        Expr::Read {
            grid: grid.to_string(),
            offset: Offset(offset),
            pos: Pos::default(),
        }
    }

    pub fn constant(text: &str) -> Expr {
        Expr::Const(Literal(text.to_string()))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn neg(child: Expr) -> Expr {
        Expr::Unary {
            op: UnOp::Neg,
            child: Box::new(child),
        }
    }

    /// Number of arithmetic operators in the tree.
    pub fn op_count(&self) -> u64 {
        match self {
            Expr::Const(_) | Expr::Read { .. } | Expr::Var { .. } => 0,
            Expr::Unary { child, .. } => 1 + child.op_count(),
            Expr::Binary { lhs, rhs, .. } => 1 + lhs.op_count() + rhs.op_count(),
        }
    }

    /// Visit every grid read in evaluation (left-to-right) order.
    pub fn for_each_read<'a>(&'a self, f: &mut impl FnMut(&'a str, &'a Offset, Pos)) {
        match self {
            Expr::Const(_) | Expr::Var { .. } => {}
            Expr::Read { grid, offset, pos } => f(grid, offset, *pos),
            Expr::Unary { child, .. } => child.for_each_read(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.for_each_read(f);
                rhs.for_each_read(f);
            }
        }
    }

    pub fn for_each_var<'a>(&'a self, f: &mut impl FnMut(&'a str, Pos)) {
        match self {
            Expr::Const(_) | Expr::Read { .. } => {}
            Expr::Var { name, pos } => f(name, *pos),
            Expr::Unary { child, .. } => child.for_each_var(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.for_each_var(f);
                rhs.for_each_var(f);
            }
        }
    }

    /// Replace variables by the expressions bound to them.
    pub fn substitute(&self, env: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Var { name, .. } => match env.get(name) {
                Some(e) => e.clone(),
                None => self.clone(),
            },
            Expr::Const(_) | Expr::Read { .. } => self.clone(),
            Expr::Unary { op, child } => Expr::Unary {
                op: *op,
                child: Box::new(child.substitute(env)),
            },
            Expr::Binary { op, lhs, rhs } => Expr::Binary {
                op: *op,
                lhs: Box::new(lhs.substitute(env)),
                rhs: Box::new(rhs.substitute(env)),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelStmt {
    /// `name = expr`: a kernel-local temporary.
    Assign { name: String, expr: Expr, pos: Pos },
    /// `grid.at(offset).set(expr)`.
    Update {
        grid: String,
        offset: Offset,
        expr: Expr,
        pos: Pos,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<KernelStmt>,
    pub pos: Pos,
}

/// One stencil update with all temporaries inlined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Update {
    pub grid: String,
    pub offset: Offset,
    pub expr: Expr,
}

impl KernelDecl {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn grid_params(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().filter(|p| p.ty == ParamType::Grid)
    }

    /// Updates in statement order, temporaries substituted.
    pub fn updates(&self) -> Vec<Update> {
        let mut env = BTreeMap::new();
        let mut out = Vec::new();
        for stmt in &self.body {
            match stmt {
                KernelStmt::Assign { name, expr, .. } => {
                    let e = expr.substitute(&env);
                    env.insert(name.clone(), e);
                }
                KernelStmt::Update {
                    grid, offset, expr, ..
                } => out.push(Update {
                    grid: grid.clone(),
                    offset: offset.clone(),
                    expr: expr.substitute(&env),
                }),
            }
        }
        out
    }

    /// Dimensionality implied by the first `at` construct, if any.
    pub fn dims(&self) -> Option<usize> {
        for stmt in &self.body {
            match stmt {
                KernelStmt::Update { offset, .. } => return Some(offset.dims()),
                KernelStmt::Assign { expr, .. } => {
                    let mut d = None;
                    expr.for_each_read(&mut |_, o, _| {
                        d.get_or_insert(o.dims());
                    });
                    if d.is_some() {
                        return d;
                    }
                }
            }
        }
        None
    }

    /// Arithmetic operator count over every statement.
    pub fn flops(&self) -> u64 {
        self.body
            .iter()
            .map(|s| match s {
                KernelStmt::Assign { expr, .. } | KernelStmt::Update { expr, .. } => {
                    expr.op_count()
                }
            })
            .sum()
    }
}

/// Linear integer expression over named symbols, used for map bounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Bound {
    pub terms: BTreeMap<String, i64>,
    pub constant: i64,
}

impl Bound {
    pub fn int(v: i64) -> Self {
        Bound {
            terms: BTreeMap::new(),
            constant: v,
        }
    }

    pub fn sym(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.to_string(), 1);
        Bound { terms, constant: 0 }
    }

    pub fn shape_of(grid: &str, dim: usize) -> Self {
        Bound::sym(&format!("{grid}.shape[{dim}]"))
    }

    pub fn as_const(&self) -> Option<i64> {
        self.terms.is_empty().then_some(self.constant)
    }

    pub fn add(&self, other: &Bound) -> Bound {
        self.combine(other, 1)
    }

    pub fn sub(&self, other: &Bound) -> Bound {
        self.combine(other, -1)
    }

    pub fn scale(&self, k: i64) -> Bound {
        let mut out = Bound::int(self.constant * k);
        if k != 0 {
            for (s, c) in &self.terms {
                out.terms.insert(s.clone(), c * k);
            }
        }
        out
    }

    fn combine(&self, other: &Bound, sign: i64) -> Bound {
        let mut out = self.clone();
        out.constant += sign * other.constant;
        for (s, c) in &other.terms {
            let e = out.terms.entry(s.clone()).or_insert(0);
            *e += sign * c;
            if *e == 0 {
                out.terms.remove(s);
            }
        }
        out
    }

    /// Evaluate against concrete symbol values.
    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Result<i64, String> {
        let mut v = self.constant;
        for (s, c) in &self.terms {
            let x = env
                .get(s)
                .ok_or_else(|| format!("unbound symbol `{s}` in map bound"))?;
            v += c * x;
        }
        Ok(v)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let pos = self.terms.iter().filter(|(_, &c)| c > 0);
        let neg = self.terms.iter().filter(|(_, &c)| c < 0);
        for (s, &c) in pos.chain(neg) {
            let sign = if c < 0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let mag = c.unsigned_abs();
            if mag == 1 {
                write!(f, "{sign}{s}")?;
            } else {
                write!(f, "{sign}{mag}*{s}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, "+{}", self.constant)
        } else if self.constant < 0 {
            write!(f, "-{}", self.constant.unsigned_abs())
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapArg {
    Scalar(Bound),
    Tuple(Vec<Bound>),
    /// `grid.shape`: the full logical extents of a grid.
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapKwarg {
    pub key: String,
    pub value: MapArg,
    pub pos: Pos,
}

/// Looping pattern exactly as written in `map(...)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MapSpecRaw {
    pub kwargs: Vec<MapKwarg>,
}

impl MapSpecRaw {
    pub fn get(&self, key: &str) -> Option<&MapArg> {
        self.kwargs.iter().find(|k| k.key == key).map(|k| &k.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoopBound {
    Literal(u64),
    Param(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetStmt {
    For {
        var: String,
        bound: LoopBound,
        body: Vec<TargetStmt>,
        pos: Pos,
    },
    Map {
        spec: MapSpecRaw,
        kernel: String,
        args: Vec<String>,
        pos: Pos,
    },
    Swap {
        a: String,
        b: String,
        pos: Pos,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<TargetStmt>,
    pub pos: Pos,
}

impl TargetDecl {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Visit every statement depth-first in program order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TargetStmt)) {
        fn go<'a>(stmts: &'a [TargetStmt], f: &mut impl FnMut(&'a TargetStmt)) {
            for s in stmts {
                f(s);
                if let TargetStmt::For { body, .. } = s {
                    go(body, f);
                }
            }
        }
        go(&self.body, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BackendKind {
    Seq,
    Omp,
    Gpu,
    Dataflow,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Seq => "seq",
            BackendKind::Omp => "omp",
            BackendKind::Gpu => "gpu",
            BackendKind::Dataflow => "dataflow",
        }
    }

    /// Resolve a backend constructor or CLI name.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "seq" => Some(BackendKind::Seq),
            "omp" | "openmp" => Some(BackendKind::Omp),
            "gpu" | "cuda" => Some(BackendKind::Gpu),
            "dataflow" | "csl" => Some(BackendKind::Dataflow),
            _ => None,
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LaunchValue {
    Int(i64),
    Float(Literal),
    Str(String),
    Bool(bool),
    Tuple(Vec<LaunchValue>),
    /// Dotted enum path such as `st.CUDABackend.Template.gmem`.
    Path(Vec<String>),
}

impl LaunchValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            LaunchValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Strings and enum paths collapse to their final identifier.
    pub fn as_word(&self) -> Option<&str> {
        match self {
            LaunchValue::Str(s) => Some(s),
            LaunchValue::Path(p) => p.last().map(String::as_str),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            LaunchValue::Bool(b) => Some(*b),
            LaunchValue::Int(0) => Some(false),
            LaunchValue::Int(1) => Some(true),
            _ => None,
        }
    }

    pub fn as_ints(&self) -> Option<Vec<i64>> {
        match self {
            LaunchValue::Int(v) => Some(vec![*v]),
            LaunchValue::Tuple(items) => items.iter().map(LaunchValue::as_int).collect(),
            _ => None,
        }
    }
}

impl fmt::Display for LaunchValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LaunchValue::Int(v) => write!(f, "{v}"),
            LaunchValue::Float(l) => f.write_str(l.text()),
            LaunchValue::Str(s) => write!(f, "\"{s}\""),
            LaunchValue::Bool(b) => f.write_str(if *b { "True" } else { "False" }),
            LaunchValue::Tuple(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{it}")?;
                }
                if items.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
            LaunchValue::Path(p) => f.write_str(&p.join(".")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaunchParam {
    pub key: String,
    pub value: LaunchValue,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LaunchArg {
    Name(String),
    Int(i64),
    Float(Literal),
}

impl fmt::Display for LaunchArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LaunchArg::Name(n) => f.write_str(n),
            LaunchArg::Int(v) => write!(f, "{v}"),
            LaunchArg::Float(l) => f.write_str(l.text()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaunchDecl {
    pub backend: BackendKind,
    /// Constructor identifier as written (`cuda`, `omp`, ...).
    pub ctor: String,
    pub params: Vec<LaunchParam>,
    pub target: String,
    pub args: Vec<LaunchArg>,
    pub pos: Pos,
}
