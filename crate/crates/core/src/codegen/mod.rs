//! Source emission: serial and OpenMP C, CUDA-style GPU kernels and the
//! text dataflow program.

mod c;
mod gpu;

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::dataflow::{render_layout, render_program, DataflowProgram, LAYOUT_FILE, PROGRAM_FILE};
use crate::frontend::{BackendKind, BinOp, DType, Expr, Offset, UnOp};
use crate::hir::{HirStmt, HirTarget};
use crate::pipeline::Plan;

pub use c::{gen_openmp, gen_serial};
pub use gpu::gen_gpu;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedArtifact {
    /// `(relative path, contents)` in emission order.
    pub files: Vec<(String, String)>,
    /// Function (or program) a caller invokes.
    pub entry: String,
    pub backend: BackendKind,
    /// Short digest of the lowered target and plan.
    pub fingerprint: String,
}

impl GeneratedArtifact {
    pub fn file(&self, path: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(p, _)| p == path)
            .map(|(_, t)| t.as_str())
    }
}

/// Row-major flattening with a halo of `order` cells on every side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexScheme {
    pub extents: Vec<usize>,
    pub order: usize,
    /// Elements before the first padded row.
    pub lead_padding: usize,
}

impl IndexScheme {
    pub fn new(extents: &[usize], order: usize) -> Self {
        IndexScheme {
            extents: extents.to_vec(),
            order,
            lead_padding: 0,
        }
    }

    pub fn padded(&self) -> Vec<usize> {
        self.extents.iter().map(|e| e + 2 * self.order).collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let p = self.padded();
        let mut s = vec![1; p.len()];
        for d in (0..p.len().saturating_sub(1)).rev() {
            s[d] = s[d + 1] * p[d + 1];
        }
        s
    }

    pub fn len(&self) -> usize {
        self.lead_padding + self.padded().iter().product::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of logical point `i` (`-order <= i_d < extent_d + order`).
    pub fn flat(&self, i: &[i64]) -> usize {
        let idx: i64 = i
            .iter()
            .zip(self.strides())
            .map(|(&x, s)| (x + self.order as i64) * s as i64)
            .sum();
        self.lead_padding + idx as usize
    }

    /// C macro `NAME(i0, ...)` implementing [`IndexScheme::flat`].
    pub fn c_macro(&self, name: &str) -> String {
        let args: Vec<String> = (0..self.extents.len()).map(|d| format!("i{d}")).collect();
        let terms: Vec<String> = self
            .strides()
            .iter()
            .enumerate()
            .map(|(d, s)| {
                if *s == 1 {
                    format!("((i{d}) + {})", self.order)
                } else {
                    format!("((i{d}) + {}) * {s}", self.order)
                }
            })
            .collect();
        let lead = if self.lead_padding > 0 {
            format!("{} + ", self.lead_padding)
        } else {
            String::new()
        };
        format!(
            "#define {name}({}) ((size_t)({lead}{}))",
            args.join(", "),
            terms.join(" + ")
        )
    }
}

/// C spelling of a numeric literal in `dtype`.
pub fn c_literal(text: &str, dtype: DType) -> String {
    let mut s = text.to_string();
    if !s.contains(['.', 'e', 'E']) {
        s.push_str(".0");
    }
    if dtype == DType::F32 {
        s.push('f');
    }
    s
}

/// `base + o` for an index expression, folding zero offsets.
pub fn shifted(base: &str, o: i64) -> String {
    match o {
        0 => base.to_string(),
        o if o > 0 => format!("{base} + {o}"),
        o => format!("{base} - {}", -o),
    }
}

/// Fully parenthesized C expression so evaluation follows the parse tree.
pub fn c_expr(e: &Expr, dtype: DType, read: &mut dyn FnMut(&str, &Offset) -> String) -> String {
    match e {
        Expr::Const(c) => c_literal(c.text(), dtype),
        Expr::Read { grid, offset, .. } => read(grid, offset),
        Expr::Var { name, .. } => name.clone(),
        Expr::Unary {
            op: UnOp::Neg,
            child,
        } => format!("(-{})", c_expr(child, dtype, read)),
        Expr::Binary { op, lhs, rhs } => {
            let l = c_expr(lhs, dtype, read);
            let r = c_expr(rhs, dtype, read);
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
            };
            format!("({l} {sym} {r})")
        }
    }
}

/// Indented line buffer.
#[derive(Default)]
pub(crate) struct Code {
    out: String,
    depth: usize,
}

impl Code {
    pub fn line(&mut self, s: impl AsRef<str>) {
        let s = s.as_ref();
        if s.is_empty() {
            self.out.push('\n');
            return;
        }
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    /// Pragmas and preprocessor lines start in column zero.
    pub fn raw(&mut self, s: impl AsRef<str>) {
        self.out.push_str(s.as_ref());
        self.out.push('\n');
    }

    pub fn open(&mut self, s: impl AsRef<str>) {
        let s = s.as_ref();
        if s.is_empty() {
            self.line("{");
        } else {
            self.line(format!("{s} {{"));
        }
        self.depth += 1;
    }

    pub fn close(&mut self) {
        self.depth -= 1;
        self.line("}");
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub(crate) fn fingerprint(h: &HirTarget, plan: &Plan) -> String {
    let mut hasher = Sha256::new();
    hasher.update(h.to_string());
    hasher.update(format!("{plan:?}"));
    let d = hasher.finalize();
    let mut s = String::new();
    for b in &d[..8] {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Short kernel name used in file names: the first map's kernel without a
/// leading `kernel_`.
pub fn artifact_stem(h: &HirTarget) -> String {
    let k = h
        .maps()
        .first()
        .map(|m| m.kernel.clone())
        .unwrap_or_else(|| h.name.clone());
    k.strip_prefix("kernel_").map(str::to_string).unwrap_or(k)
}

pub fn artifact_name(h: &HirTarget, backend: &str, template: &str, ext: &str) -> String {
    format!("kernel_{}_{backend}_{template}.{ext}", artifact_stem(h))
}

/// Layout and program files for the dataflow simulator.
pub fn gen_dataflow_program(h: &HirTarget, p: &DataflowProgram) -> GeneratedArtifact {
    GeneratedArtifact {
        files: vec![
            (LAYOUT_FILE.to_string(), render_layout(p)),
            (PROGRAM_FILE.to_string(), render_program(p)),
        ],
        entry: p.kernel.clone(),
        backend: BackendKind::Dataflow,
        fingerprint: fingerprint(h, &Plan::Dataflow(Box::new(p.clone()))),
    }
}

/// Generate the artifact for `plan`.
pub fn generate(h: &HirTarget, plan: &Plan) -> Result<GeneratedArtifact, String> {
    match plan {
        Plan::Seq => gen_serial(h),
        Plan::Omp(p) => gen_openmp(h, p),
        Plan::Gpu(p) => gen_gpu(h, p),
        Plan::Dataflow(p) => Ok(gen_dataflow_program(h, p)),
    }
}

/// Grids exchanged by swaps must share a layout so one index macro serves
/// whichever buffer the name currently refers to.
pub(crate) fn check_swaps(h: &HirTarget) -> Result<(), String> {
    fn go(h: &HirTarget, body: &[HirStmt]) -> Result<(), String> {
        for s in body {
            match s {
                HirStmt::Swap(a, b) => {
                    let (ga, gb) = (&h.grids[a], &h.grids[b]);
                    if ga.shape != gb.shape || ga.order != gb.order || ga.dtype != gb.dtype {
                        return Err(format!(
                            "swapped grids `{a}` and `{b}` have different layouts"
                        ));
                    }
                }
                HirStmt::Loop { body, .. } => go(h, body)?,
                HirStmt::Map(_) => {}
            }
        }
        Ok(())
    }
    go(h, &h.body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn literals_get_a_float_suffix() {
        assert_eq!(c_literal("0.25005", DType::F32), "0.25005f");
        assert_eq!(c_literal("2", DType::F32), "2.0f");
        assert_eq!(c_literal("1e-3", DType::F64), "1e-3");
    }

    #[test]
    fn index_macro_text() {
        let s = IndexScheme::new(&[4, 5], 2);
        assert_eq!(
            s.c_macro("U_IDX"),
            "#define U_IDX(i0, i1) ((size_t)(((i0) + 2) * 9 + ((i1) + 2)))"
        );
        assert_eq!(s.flat(&[-2, -2]), 0);
        assert_eq!(s.flat(&[5, 6]), s.len() - 1);
    }

    proptest! {
        #[test]
        fn flattening_covers_the_padded_array_once(
            ext in prop::collection::vec(1usize..5, 1..4),
            order in 0usize..3,
        ) {
            let s = IndexScheme::new(&ext, order);
            let mut seen = vec![false; s.len()];
            let r = order as i64;
            let mut p: Vec<i64> = vec![-r; ext.len()];
            'outer: loop {
                let i = s.flat(&p);
                prop_assert!(!seen[i]);
                seen[i] = true;
                let mut d = ext.len();
                loop {
                    if d == 0 { break 'outer; }
                    d -= 1;
                    p[d] += 1;
                    if p[d] < ext[d] as i64 + r { break; }
                    p[d] = -r;
                }
            }
            prop_assert!(seen.iter().all(|&x| x));
        }
    }
}
