//! Recursive-descent parser for the decorator-based stencil DSL.
//!
//! The accepted surface is a restricted Python subset: `import`, grid
//! declarations, `@st.kernel` / `@st.target` functions, and one `st.launch`
//! statement. Kernels contain `at(..).set(..)` updates and temporaries;
//! targets contain `for`-range loops, `map` invocations, and tuple swaps.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use crate::diag::{Diagnostic, Pos};

type PResult<T> = Result<T, Diagnostic>;

/// Parse DSL source into a [`SourceUnit`]. Fails with the first syntax error.
pub fn parse_source(text: &str) -> Result<SourceUnit, Diagnostic> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        toks: tokens,
        at: 0,
        alias: "st".to_string(),
    };
    p.module()
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    alias: String,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum FnKind {
    Kernel,
    Target,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, what: &str) -> Diagnostic {
        Diagnostic::error(
            self.pos(),
            format!("expected {what}, found {}", self.peek().describe()),
        )
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_name(&self, n: &str) -> bool {
        matches!(self.peek(), Tok::Name(m) if m == n)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Pos> {
        if self.is_punct(p) {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn expect_name(&mut self) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Name(n) => {
                let pos = self.bump().pos;
                Ok((n, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<Pos> {
        if self.is_name(kw) {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline => {
                self.bump();
                Ok(())
            }
            Tok::Eof | Tok::Dedent => Ok(()),
            _ => Err(self.unexpected("end of line")),
        }
    }

    fn expect_int(&mut self) -> PResult<i64> {
        let neg = self.eat_punct("-");
        match self.peek().clone() {
            Tok::Number { text, is_int: true } => {
                let pos = self.bump().pos;
                let v: i64 = text
                    .parse()
                    .map_err(|_| Diagnostic::error(pos, "integer literal out of range"))?;
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.unexpected("integer literal")),
        }
    }

    /// `alias.member` where member is returned.
    fn alias_member(&mut self) -> PResult<(String, Pos)> {
        let (head, pos) = self.expect_name()?;
        if head != self.alias {
            return Err(Diagnostic::error(
                pos,
                format!("unknown construct `{head}`; expected `{}.`", self.alias),
            ));
        }
        self.expect_punct(".")?;
        let (m, _) = self.expect_name()?;
        Ok((m, pos))
    }

    fn dotted(&mut self) -> PResult<(Vec<String>, Pos)> {
        let (first, pos) = self.expect_name()?;
        let mut parts = vec![first];
        while self.eat_punct(".") {
            parts.push(self.expect_name()?.0);
        }
        Ok((parts, pos))
    }

    // ── module level ────────────────────────────────────────────────────

    fn module(&mut self) -> PResult<SourceUnit> {
        let mut unit = SourceUnit {
            alias: self.alias.clone(),
            has_import: false,
            grids: Vec::new(),
            kernels: Vec::new(),
            targets: Vec::new(),
            launch: None,
        };
        loop {
            match self.peek().clone() {
                Tok::Eof => break,
                Tok::Newline => {
                    self.bump();
                }
                Tok::Name(n) if n == "import" => {
                    let pos = self.bump().pos;
                    if unit.has_import {
                        return Err(Diagnostic::error(pos, "duplicate import"));
                    }
                    let (module, mpos) = self.expect_name()?;
                    if module != "stencilpy" {
                        return Err(Diagnostic::error(
                            mpos,
                            format!("unknown module `{module}`; only `stencilpy` can be imported"),
                        ));
                    }
                    self.alias = if self.is_name("as") {
                        self.bump();
                        self.expect_name()?.0
                    } else {
                        module
                    };
                    unit.alias = self.alias.clone();
                    unit.has_import = true;
                    self.expect_newline()?;
                }
                Tok::Punct("@") => {
                    let pos = self.bump().pos;
                    let (path, _) = self.dotted()?;
                    let kind = match path.as_slice() {
                        [a, k] if *a == self.alias && k == "kernel" => FnKind::Kernel,
                        [a, k] if *a == self.alias && k == "target" => FnKind::Target,
                        _ => {
                            return Err(Diagnostic::error(
                                pos,
                                format!("unknown decorator `@{}`", path.join(".")),
                            ))
                        }
                    };
                    self.expect_newline()?;
                    let (name, params, fpos) = self.fn_header(kind)?;
                    match kind {
                        FnKind::Kernel => {
                            let body = self.block(|p| p.kernel_stmt())?;
                            unit.kernels.push(KernelDecl {
                                name,
                                params,
                                body,
                                pos: fpos,
                            });
                        }
                        FnKind::Target => {
                            let body = self.block(|p| p.target_stmt())?;
                            unit.targets.push(TargetDecl {
                                name,
                                params,
                                body,
                                pos: fpos,
                            });
                        }
                    }
                }
                Tok::Name(n) if n == "def" => {
                    return Err(Diagnostic::error(
                        self.pos(),
                        "function without `@kernel` or `@target` decorator is not supported",
                    ));
                }
                Tok::Name(n)
                    if n == self.alias
                        && matches!(self.peek_at(2), Tok::Name(m) if m == "launch") =>
                {
                    let launch = self.launch()?;
                    if unit.launch.is_some() {
                        return Err(Diagnostic::error(
                            launch.pos,
                            "only one launch statement is allowed",
                        ));
                    }
                    unit.launch = Some(launch);
                }
                Tok::Name(_) if matches!(self.peek_at(1), Tok::Punct("=")) => {
                    let g = self.grid_decl()?;
                    unit.grids.push(g);
                }
                _ => {
                    return Err(Diagnostic::error(
                        self.pos(),
                        format!("unknown construct starting with {}", self.peek().describe()),
                    ))
                }
            }
        }
        Ok(unit)
    }

    fn fn_header(&mut self, kind: FnKind) -> PResult<(String, Vec<Param>, Pos)> {
        self.expect_keyword("def")?;
        let (name, pos) = self.expect_name()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        while !self.is_punct(")") {
            let (pname, ppos) = self.expect_name()?;
            if !self.eat_punct(":") {
                let what = if kind == FnKind::Kernel {
                    "kernel"
                } else {
                    "target"
                };
                return Err(Diagnostic::error(
                    ppos,
                    format!("parameter `{pname}` of {what} `{name}` is missing a type hint"),
                ));
            }
            let (ty_path, tpos) = self.dotted()?;
            let ty = match ty_path.as_slice() {
                [a, t] if *a == self.alias => match t.as_str() {
                    "grid" => ParamType::Grid,
                    "f32" => ParamType::Scalar(ScalarType::F32),
                    "f64" => ParamType::Scalar(ScalarType::F64),
                    "i32" => ParamType::Scalar(ScalarType::I32),
                    "i64" => ParamType::Scalar(ScalarType::I64),
                    _ => {
                        return Err(Diagnostic::error(
                            tpos,
                            format!("unknown type `{}`", ty_path.join(".")),
                        ))
                    }
                },
                _ => {
                    return Err(Diagnostic::error(
                        tpos,
                        format!("unknown type `{}`", ty_path.join(".")),
                    ))
                }
            };
            params.push(Param {
                name: pname,
                ty,
                pos: ppos,
            });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        if self.eat_punct("->") {
            let (ret, rpos) = self.dotted()?;
            if ret != ["None"] {
                return Err(Diagnostic::error(
                    rpos,
                    "kernels and targets cannot return values",
                ));
            }
        }
        self.expect_punct(":")?;
        self.expect_newline()?;
        Ok((name, params, pos))
    }

    fn block<T>(&mut self, mut stmt: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        if !matches!(self.peek(), Tok::Indent) {
            return Err(self.unexpected("an indented block"));
        }
        self.bump();
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Tok::Dedent => {
                    self.bump();
                    break;
                }
                Tok::Eof => break,
                Tok::Newline => {
                    self.bump();
                }
                _ => out.push(stmt(self)?),
            }
        }
        Ok(out)
    }

    fn grid_decl(&mut self) -> PResult<GridDecl> {
        let (name, pos) = self.expect_name()?;
        self.expect_punct("=")?;
        let (ctor, cpos) = self.alias_member()?;
        if ctor != "grid" {
            return Err(Diagnostic::error(
                cpos,
                format!(
                    "unknown construct `{}.{ctor}`; only grids may be declared at module level",
                    self.alias
                ),
            ));
        }
        self.expect_punct("(")?;
        let mut dtype = None;
        let mut shape = None;
        let mut order = 0usize;
        while !self.is_punct(")") {
            let (key, kpos) = self.expect_name()?;
            self.expect_punct("=")?;
            match key.as_str() {
                "dtype" => {
                    let (t, tpos) = self.alias_member()?;
                    dtype = Some(match t.as_str() {
                        "f32" => DType::F32,
                        "f64" => DType::F64,
                        _ => {
                            return Err(Diagnostic::error(
                                tpos,
                                format!("unsupported grid dtype `{t}`"),
                            ))
                        }
                    });
                }
                "shape" => {
                    let mut dims = Vec::new();
                    if self.eat_punct("(") {
                        while !self.is_punct(")") {
                            dims.push(self.expect_int()?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                        self.expect_punct(")")?;
                    } else {
                        dims.push(self.expect_int()?);
                    }
                    if dims.is_empty() || dims.len() > 3 {
                        return Err(Diagnostic::error(
                            kpos,
                            "grid shape must have 1 to 3 extents",
                        ));
                    }
                    if dims.iter().any(|&d| d < 1) {
                        return Err(Diagnostic::error(kpos, "grid extents must be positive"));
                    }
                    shape = Some(dims.into_iter().map(|d| d as usize).collect());
                }
                "order" => {
                    let o = self.expect_int()?;
                    if o < 0 {
                        return Err(Diagnostic::error(kpos, "grid order must be non-negative"));
                    }
                    order = o as usize;
                }
                _ => {
                    return Err(Diagnostic::error(
                        kpos,
                        format!("unknown grid parameter `{key}`"),
                    ))
                }
            }
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        self.expect_newline()?;
        let dtype = dtype
            .ok_or_else(|| Diagnostic::error(pos, format!("grid `{name}` is missing `dtype`")))?;
        let shape = shape
            .ok_or_else(|| Diagnostic::error(pos, format!("grid `{name}` is missing `shape`")))?;
        Ok(GridDecl {
            name,
            dtype,
            shape,
            order,
            pos,
        })
    }

    fn launch(&mut self) -> PResult<LaunchDecl> {
        let (_, pos) = self.alias_member()?;
        self.expect_punct("(")?;
        let (key, kpos) = self.expect_name()?;
        if key != "backend" {
            return Err(Diagnostic::error(
                kpos,
                format!("unknown launch argument `{key}`"),
            ));
        }
        self.expect_punct("=")?;
        let (ctor, cpos) = self.alias_member()?;
        let backend = BackendKind::from_name(&ctor)
            .ok_or_else(|| Diagnostic::error(cpos, format!("unknown backend `{ctor}`")))?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        while !self.is_punct(")") {
            let (k, ppos) = self.expect_name()?;
            self.expect_punct("=")?;
            let value = self.launch_value()?;
            params.push(LaunchParam {
                key: k,
                value,
                pos: ppos,
            });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        self.eat_punct(",");
        self.expect_punct(")")?;
        self.expect_punct("(")?;
        let (target, _) = self.expect_name()?;
        self.expect_punct(")")?;
        self.expect_punct("(")?;
        let mut args = Vec::new();
        while !self.is_punct(")") {
            let arg = match self.peek().clone() {
                Tok::Name(n) => {
                    self.bump();
                    LaunchArg::Name(n)
                }
                Tok::Number { is_int: true, .. } | Tok::Punct("-") => {
                    LaunchArg::Int(self.expect_int()?)
                }
                Tok::Number {
                    text,
                    is_int: false,
                } => {
                    self.bump();
                    LaunchArg::Float(Literal(text))
                }
                _ => return Err(self.unexpected("launch argument")),
            };
            args.push(arg);
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(")")?;
        self.expect_newline()?;
        Ok(LaunchDecl {
            backend,
            ctor,
            params,
            target,
            args,
            pos,
        })
    }

    fn launch_value(&mut self) -> PResult<LaunchValue> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(LaunchValue::Str(s))
            }
            Tok::Number { text, is_int } => {
                let pos = self.bump().pos;
                if is_int {
                    text.parse()
                        .map(LaunchValue::Int)
                        .map_err(|_| Diagnostic::error(pos, "integer literal out of range"))
                } else {
                    Ok(LaunchValue::Float(Literal(text)))
                }
            }
            Tok::Punct("-") => Ok(LaunchValue::Int(self.expect_int()?)),
            Tok::Punct("(") => {
                self.bump();
                let mut items = Vec::new();
                while !self.is_punct(")") {
                    items.push(self.launch_value()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(")")?;
                Ok(LaunchValue::Tuple(items))
            }
            Tok::Name(n) if n == "True" || n == "False" => {
                self.bump();
                Ok(LaunchValue::Bool(n == "True"))
            }
            Tok::Name(_) => Ok(LaunchValue::Path(self.dotted()?.0)),
            _ => Err(self.unexpected("launch parameter value")),
        }
    }

    // ── kernels ─────────────────────────────────────────────────────────

    fn kernel_stmt(&mut self) -> PResult<KernelStmt> {
        let (name, pos) = self.expect_name()?;
        if self.eat_punct("=") {
            let expr = self.expr()?;
            self.expect_newline()?;
            return Ok(KernelStmt::Assign { name, expr, pos });
        }
        if self.is_punct(".") && matches!(self.peek_at(1), Tok::Name(m) if m == "at") {
            self.bump();
            self.bump();
            let offset = self.offset()?;
            self.expect_punct(".")?;
            let (m, mpos) = self.expect_name()?;
            if m != "set" {
                return Err(Diagnostic::error(
                    mpos,
                    format!("expected `.set(...)` after `at(...)`, found `.{m}`"),
                ));
            }
            self.expect_punct("(")?;
            let expr = self.expr()?;
            self.expect_punct(")")?;
            self.expect_newline()?;
            return Ok(KernelStmt::Update {
                grid: name,
                offset,
                expr,
                pos,
            });
        }
        Err(Diagnostic::error(
            pos,
            "unknown construct in kernel; expected `grid.at(...).set(...)` or `name = expr`",
        ))
    }

    fn offset(&mut self) -> PResult<Offset> {
        self.expect_punct("(")?;
        let mut comps = Vec::new();
        while !self.is_punct(")") {
            comps.push(self.expect_int()?);
            if !self.eat_punct(",") {
                break;
            }
        }
        let pos = self.expect_punct(")")?;
        if comps.is_empty() || comps.len() > 3 {
            return Err(Diagnostic::error(
                pos,
                "`at` takes 1 to 3 offset components",
            ));
        }
        Ok(Offset(comps))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_punct("+") {
                BinOp::Add
            } else if self.is_punct("-") {
                BinOp::Sub
            } else {
                break;
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.is_punct("*") {
                BinOp::Mul
            } else if self.is_punct("/") {
                BinOp::Div
            } else {
                break;
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("-") {
            return Ok(Expr::neg(self.unary()?));
        }
        if self.eat_punct("+") {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Number { text, .. } => {
                self.bump();
                Ok(Expr::Const(Literal(text)))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Name(name) => {
                let pos = self.bump().pos;
                if self.is_punct(".") {
                    self.bump();
                    let (m, mpos) = self.expect_name()?;
                    if m != "at" {
                        return Err(Diagnostic::error(
                            mpos,
                            format!("unknown construct `.{m}` in expression"),
                        ));
                    }
                    let offset = self.offset()?;
                    Ok(Expr::Read {
                        grid: name,
                        offset,
                        pos,
                    })
                } else if self.is_punct("(") {
                    Err(Diagnostic::error(
                        pos,
                        format!("function call `{name}(...)` is not supported in kernels"),
                    ))
                } else {
                    Ok(Expr::Var { name, pos })
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    // ── targets ─────────────────────────────────────────────────────────

    fn target_stmt(&mut self) -> PResult<TargetStmt> {
        let pos = self.pos();
        if self.is_name("for") {
            self.bump();
            let (var, _) = self.expect_name()?;
            self.expect_keyword("in")?;
            self.expect_keyword("range")?;
            self.expect_punct("(")?;
            let bound = match self.peek().clone() {
                Tok::Name(n) => {
                    self.bump();
                    LoopBound::Param(n)
                }
                Tok::Number { is_int: true, .. } | Tok::Punct("-") => {
                    let bpos = self.pos();
                    let v = self.expect_int()?;
                    if v < 0 {
                        return Err(Diagnostic::error(bpos, "range bound must be non-negative"));
                    }
                    LoopBound::Literal(v as u64)
                }
                _ => return Err(self.unexpected("integer literal or parameter name")),
            };
            self.expect_punct(")")?;
            self.expect_punct(":")?;
            self.expect_newline()?;
            let body = self.block(|p| p.target_stmt())?;
            return Ok(TargetStmt::For {
                var,
                bound,
                body,
                pos,
            });
        }
        if matches!(self.peek(), Tok::Name(n) if *n == self.alias)
            && matches!(self.peek_at(2), Tok::Name(m) if m == "map")
        {
            self.alias_member()?;
            self.expect_punct("(")?;
            let spec = self.map_spec()?;
            self.expect_punct(")")?;
            self.expect_punct("(")?;
            let (kernel, _) = self.expect_name()?;
            self.expect_punct(")")?;
            self.expect_punct("(")?;
            let mut args = Vec::new();
            while !self.is_punct(")") {
                args.push(self.expect_name()?.0);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(")")?;
            self.expect_newline()?;
            return Ok(TargetStmt::Map {
                spec,
                kernel,
                args,
                pos,
            });
        }
        if let Some(stmt) = self.try_swap(pos)? {
            return Ok(stmt);
        }
        Err(Diagnostic::error(
            pos,
            "unknown construct in target; only for-range loops, map invocations and swaps are supported",
        ))
    }

    fn name_pair(&mut self) -> PResult<(String, String)> {
        let paren = self.eat_punct("(");
        let (a, _) = self.expect_name()?;
        self.expect_punct(",")?;
        let (b, _) = self.expect_name()?;
        if paren {
            self.expect_punct(")")?;
        }
        Ok((a, b))
    }

    fn try_swap(&mut self, pos: Pos) -> PResult<Option<TargetStmt>> {
        let looks_like_pair = match self.peek() {
            Tok::Punct("(") => {
                matches!(self.peek_at(1), Tok::Name(_))
                    && matches!(self.peek_at(2), Tok::Punct(","))
            }
            Tok::Name(_) => matches!(self.peek_at(1), Tok::Punct(",")),
            _ => false,
        };
        if !looks_like_pair {
            return Ok(None);
        }
        let (l0, l1) = self.name_pair()?;
        self.expect_punct("=")?;
        let (r0, r1) = self.name_pair()?;
        self.expect_newline()?;
        if l0 == r1 && l1 == r0 && l0 != l1 {
            Ok(Some(TargetStmt::Swap { a: l0, b: l1, pos }))
        } else {
            Err(Diagnostic::error(
                pos,
                "tuple assignment must swap two distinct names",
            ))
        }
    }

    fn map_spec(&mut self) -> PResult<MapSpecRaw> {
        let mut spec = MapSpecRaw::default();
        while !self.is_punct(")") {
            let (key, pos) = self.expect_name()?;
            if !matches!(key.as_str(), "i" | "j" | "k" | "e" | "w") {
                return Err(Diagnostic::error(
                    pos,
                    format!("unknown map argument `{key}`"),
                ));
            }
            if spec.get(&key).is_some() {
                return Err(Diagnostic::error(
                    pos,
                    format!("duplicate map argument `{key}`"),
                ));
            }
            self.expect_punct("=")?;
            let value = self.map_arg()?;
            spec.kwargs.push(MapKwarg { key, value, pos });
            if !self.eat_punct(",") {
                break;
            }
        }
        Ok(spec)
    }

    fn map_arg(&mut self) -> PResult<MapArg> {
        if let (Tok::Name(g), Tok::Punct("."), Tok::Name(s)) = (
            self.peek().clone(),
            self.peek_at(1).clone(),
            self.peek_at(2).clone(),
        ) {
            if s == "shape" && !matches!(self.peek_at(3), Tok::Punct("[")) {
                self.bump();
                self.bump();
                self.bump();
                return Ok(MapArg::Shape(g));
            }
        }
        if self.is_punct("(") {
            self.bump();
            let first = self.bound()?;
            if self.eat_punct(")") {
                return Ok(MapArg::Scalar(first));
            }
            let mut items = vec![first];
            while self.eat_punct(",") {
                if self.is_punct(")") {
                    break;
                }
                items.push(self.bound()?);
            }
            self.expect_punct(")")?;
            return Ok(MapArg::Tuple(items));
        }
        Ok(MapArg::Scalar(self.bound()?))
    }

    fn bound(&mut self) -> PResult<Bound> {
        let mut acc = if self.eat_punct("-") {
            self.bound_term()?.scale(-1)
        } else {
            self.bound_term()?
        };
        loop {
            if self.eat_punct("+") {
                acc = acc.add(&self.bound_term()?);
            } else if self.eat_punct("-") {
                acc = acc.sub(&self.bound_term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn bound_term(&mut self) -> PResult<Bound> {
        match self.peek().clone() {
            Tok::Number { is_int: true, .. } => {
                let k = self.expect_int()?;
                if self.eat_punct("*") {
                    Ok(self.bound_atom()?.scale(k))
                } else {
                    Ok(Bound::int(k))
                }
            }
            _ => self.bound_atom(),
        }
    }

    fn bound_atom(&mut self) -> PResult<Bound> {
        match self.peek().clone() {
            Tok::Name(n) => {
                self.bump();
                if self.eat_punct(".") {
                    let (m, mpos) = self.expect_name()?;
                    if m != "shape" {
                        return Err(Diagnostic::error(
                            mpos,
                            format!("unknown construct `.{m}` in map bound"),
                        ));
                    }
                    self.expect_punct("[")?;
                    let d = self.expect_int()?;
                    self.expect_punct("]")?;
                    if !(0..3).contains(&d) {
                        return Err(Diagnostic::error(mpos, "shape index out of range"));
                    }
                    Ok(Bound::shape_of(&n, d as usize))
                } else {
                    Ok(Bound::sym(&n))
                }
            }
            Tok::Number { is_int: true, .. } => Ok(Bound::int(self.expect_int()?)),
            _ => Err(self.unexpected("map bound")),
        }
    }
}
