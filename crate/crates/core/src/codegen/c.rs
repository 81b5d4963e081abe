//! Serial and OpenMP C.

use super::{
    artifact_name, c_expr, c_literal, check_swaps, fingerprint, shifted, Code, GeneratedArtifact,
    IndexScheme,
};
use crate::analysis::linear_form;
use crate::frontend::{BackendKind, DType};
use crate::hir::{HirMap, HirStmt, HirTarget, HirUpdate};
use crate::pipeline::Plan;
use crate::planning::{OmpAlgorithm, OmpPlan, OmpTemplate};

const PARALLEL_FOR: &str = "#pragma omp parallel for default(shared) schedule(runtime)";

fn macro_name(grid: &str) -> String {
    format!("{}_IDX", grid.to_uppercase())
}

fn len_name(grid: &str) -> String {
    format!("{}_LEN", grid.to_uppercase())
}

struct Ctx<'a> {
    h: &'a HirTarget,
    dtype: DType,
    ty: &'static str,
    omp: Option<&'a OmpPlan>,
}

impl Ctx<'_> {
    fn read(&self, grid: &str, idx: &[String], o: &[i64]) -> String {
        let args: Vec<String> = idx.iter().zip(o).map(|(i, &x)| shifted(i, x)).collect();
        format!("{grid}[{}({})]", macro_name(grid), args.join(", "))
    }

    fn grid_params(&self, with_ty: bool) -> String {
        let v: Vec<String> = self
            .h
            .grids
            .keys()
            .map(|g| {
                if with_ty {
                    format!("{} *{g}", self.ty)
                } else {
                    g.clone()
                }
            })
            .collect();
        v.join(", ")
    }
}

pub fn gen_serial(h: &HirTarget) -> Result<GeneratedArtifact, String> {
    emit(h, None)
}

pub fn gen_openmp(h: &HirTarget, plan: &OmpPlan) -> Result<GeneratedArtifact, String> {
    emit(h, Some(plan))
}

fn emit(h: &HirTarget, omp: Option<&OmpPlan>) -> Result<GeneratedArtifact, String> {
    check_swaps(h)?;
    let dtype = h.dtype().ok_or("target has no grids")?;
    let cx = Ctx {
        h,
        dtype,
        ty: dtype.c_type(),
        omp,
    };
    let (backend, template, plan) = match omp {
        None => ("seq", "serial".to_string(), Plan::Seq),
        Some(p) => {
            let t = match p.algorithm {
                OmpAlgorithm::Semi => format!("{}_semi", p.template.name()),
                OmpAlgorithm::Conventional => p.template.name().to_string(),
            };
            ("omp", t, Plan::Omp(p.clone()))
        }
    };
    let path = artifact_name(h, backend, &template, "c");
    let fp = fingerprint(h, &plan);
    let semi = omp.is_some_and(|p| p.algorithm == OmpAlgorithm::Semi);

    let mut c = Code::default();
    c.raw(format!("/* {path}: target {} ({fp}) */", h.name));
    c.raw("#include <stddef.h>");
    c.raw("#include <stdlib.h>");
    if omp.is_some() {
        c.raw("#include <omp.h>");
    }
    c.line("");
    for (g, d) in &h.grids {
        let s = IndexScheme::new(&d.shape, d.order);
        c.raw(s.c_macro(&macro_name(g)));
        c.raw(format!("#define {} {}", len_name(g), s.len()));
    }
    c.line("");

    let maps = h.maps();
    for (n, m) in maps.iter().enumerate() {
        emit_map(&mut c, &cx, n, m, semi)?;
        c.line("");
    }

    let ptrs: Vec<String> = h
        .grids
        .keys()
        .map(|g| format!("{} **{g}_p", cx.ty))
        .collect();
    c.open(format!("void {}({})", h.name, ptrs.join(", ")));
    for g in h.grids.keys() {
        c.line(format!("{} *{g} = *{g}_p;", cx.ty));
    }
    let tasks = omp.is_some_and(|p| p.template == OmpTemplate::TasksBlocking);
    let mut counter = (0usize, 0usize);
    if tasks {
        c.raw("#pragma omp parallel default(shared)");
        c.raw("#pragma omp master");
        if matches!(h.body.as_slice(), [HirStmt::Loop { .. }]) {
            emit_body(&mut c, &cx, &h.body, &mut counter, tasks);
        } else {
            c.open("");
            emit_body(&mut c, &cx, &h.body, &mut counter, tasks);
            c.close();
        }
    } else {
        emit_body(&mut c, &cx, &h.body, &mut counter, tasks);
    }
    for g in h.grids.keys() {
        c.line(format!("*{g}_p = {g};"));
    }
    c.close();
    c.line("");
    emit_main(&mut c, &cx);

    Ok(GeneratedArtifact {
        files: vec![(path, c.finish())],
        entry: h.name.clone(),
        backend: if omp.is_some() {
            BackendKind::Omp
        } else {
            BackendKind::Seq
        },
        fingerprint: fp,
    })
}

fn emit_body(
    c: &mut Code,
    cx: &Ctx<'_>,
    body: &[HirStmt],
    counter: &mut (usize, usize),
    tasks: bool,
) {
    for s in body {
        match s {
            HirStmt::Map(_) => {
                c.line(format!("map_{}({});", counter.0, cx.grid_params(false)));
                counter.0 += 1;
                if tasks {
                    c.raw("#pragma omp taskwait");
                }
            }
            HirStmt::Swap(a, b) => {
                c.line(format!("{{ {} *tmp = {a}; {a} = {b}; {b} = tmp; }}", cx.ty));
            }
            HirStmt::Loop { count, body } => {
                let t = format!("t{}", counter.1);
                counter.1 += 1;
                c.open(format!("for (long {t} = 0; {t} < {count}; {t}++)"));
                emit_body(c, cx, body, counter, tasks);
                c.close();
            }
        }
    }
}

fn idx_vars(dims: usize) -> Vec<String> {
    (0..dims).map(|d| format!("i{d}")).collect()
}

fn assign(cx: &Ctx<'_>, u: &HirUpdate, idx: &[String]) -> String {
    let zero = vec![0i64; idx.len()];
    let rhs = c_expr(&u.expr, cx.dtype, &mut |g, o| cx.read(g, idx, &o.0));
    format!("{} = {rhs};", cx.read(&u.dest, idx, &zero))
}

fn emit_map(c: &mut Code, cx: &Ctx<'_>, n: usize, m: &HirMap, semi: bool) -> Result<(), String> {
    c.open(format!("static void map_{n}({})", cx.grid_params(true)));
    let dims = m.info.dims;
    for (ri, r) in m.regions.iter().enumerate() {
        if r.size() == 0 {
            continue;
        }
        let b: Vec<String> = r
            .ranges
            .iter()
            .map(|(a, b)| format!("[{a}, {b})"))
            .collect();
        c.line(format!("/* {} region {ri}: {} */", m.kernel, b.join(" x ")));
        for u in &m.updates {
            let lo: Vec<String> = r.ranges.iter().map(|x| x.0.to_string()).collect();
            let hi: Vec<String> = r.ranges.iter().map(|x| x.1.to_string()).collect();
            match cx.omp {
                None => emit_nest(c, cx, u, &lo, &hi, None),
                Some(p) => emit_omp_region(c, cx, p, u, &lo, &hi, dims, semi)?,
            }
        }
    }
    c.close();
    Ok(())
}

/// Loops over a box of points; `first` is a pragma for the outermost loop.
fn emit_nest(
    c: &mut Code,
    cx: &Ctx<'_>,
    u: &HirUpdate,
    lo: &[String],
    hi: &[String],
    first: Option<&[&str]>,
) {
    let idx = idx_vars(lo.len());
    if let Some(pr) = first {
        for p in pr {
            c.raw(p);
        }
    }
    for d in 0..lo.len() {
        c.open(format!(
            "for (long i{d} = {}; i{d} < {}; i{d}++)",
            lo[d], hi[d]
        ));
    }
    c.line(assign(cx, u, &idx));
    for _ in 0..lo.len() {
        c.close();
    }
}

#[allow(clippy::too_many_arguments)]
fn emit_omp_region(
    c: &mut Code,
    cx: &Ctx<'_>,
    p: &OmpPlan,
    u: &HirUpdate,
    lo: &[String],
    hi: &[String],
    dims: usize,
    semi: bool,
) -> Result<(), String> {
    let outer: Vec<&str> = match p.template {
        OmpTemplate::Loop | OmpTemplate::LoopBlocking => vec![PARALLEL_FOR],
        OmpTemplate::LoopBlockingCollapse => vec![],
        OmpTemplate::TasksBlocking => vec![],
        OmpTemplate::Taskloop => vec![
            "#pragma omp parallel default(shared)",
            "#pragma omp single",
            "#pragma omp taskloop",
        ],
    };
    match p.block {
        None => {
            if !semi {
                emit_nest(c, cx, u, lo, hi, Some(&outer));
                return Ok(());
            }
            for pr in &outer {
                c.raw(pr);
            }
            c.open(format!("for (long b0 = {}; b0 < {}; b0++)", lo[0], hi[0]));
            let mut blo = lo.to_vec();
            let mut bhi = hi.to_vec();
            blo[0] = "b0".into();
            bhi[0] = "b0 + 1".into();
            emit_semi_block(c, cx, u, &blo, &bhi)?;
            c.close();
        }
        Some((bx, by)) => {
            let nb = dims.min(2);
            let steps = [bx, by];
            let collapse = format!("{PARALLEL_FOR} collapse(2)");
            match p.template {
                OmpTemplate::LoopBlockingCollapse if nb == 2 => c.raw(&collapse),
                OmpTemplate::LoopBlockingCollapse => c.raw(PARALLEL_FOR),
                _ => {
                    for pr in &outer {
                        c.raw(pr);
                    }
                }
            }
            for d in 0..nb {
                c.open(format!(
                    "for (long b{d} = {}; b{d} < {}; b{d} += {})",
                    lo[d], hi[d], steps[d]
                ));
            }
            let tasks = p.template == OmpTemplate::TasksBlocking;
            if tasks {
                c.raw("#pragma omp task");
                c.open("");
            }
            let mut blo = lo.to_vec();
            let mut bhi = hi.to_vec();
            for d in 0..nb {
                c.line(format!(
                    "const long e{d} = b{d} + {s} < {h} ? b{d} + {s} : {h};",
                    s = steps[d],
                    h = hi[d]
                ));
                blo[d] = format!("b{d}");
                bhi[d] = format!("e{d}");
            }
            if semi {
                emit_semi_block(c, cx, u, &blo, &bhi)?;
            } else {
                emit_nest(c, cx, u, &blo, &bhi, None);
            }
            if tasks {
                c.close();
            }
            for _ in 0..nb {
                c.close();
            }
        }
    }
    Ok(())
}

/// Forward sweep scattering lexicographically negative contributions into a
/// partial array, then a backward sweep adding the rest.
fn emit_semi_block(
    c: &mut Code,
    cx: &Ctx<'_>,
    u: &HirUpdate,
    lo: &[String],
    hi: &[String],
) -> Result<(), String> {
    let lf = linear_form(&u.expr).ok_or("semi algorithm needs a weighted-sum kernel")?;
    let dims = lo.len();
    let mut reach = vec![0i64; dims];
    for t in &lf.terms {
        for d in 0..dims {
            reach[d] = reach[d].max(t.offset.0[d].abs());
        }
    }
    let mut fwd: Vec<_> = lf
        .terms
        .iter()
        .filter(|t| t.offset.is_lex_negative())
        .collect();
    fwd.sort_by(|a, b| a.offset.0.cmp(&b.offset.0));
    let bwd: Vec<_> = lf
        .terms
        .iter()
        .filter(|t| !t.offset.is_lex_negative())
        .collect();

    let ty = cx.ty;
    let zero = c_literal("0", cx.dtype);
    c.open("");
    let n: Vec<String> = (0..dims).map(|d| format!("n{d}")).collect();
    for d in 0..dims {
        c.line(format!("const long n{d} = ({}) - ({});", hi[d], lo[d]));
    }
    c.line(format!(
        "{ty} *partial = ({ty} *)malloc((size_t)({}) * sizeof({ty}));",
        n.join(" * ")
    ));
    c.line(format!(
        "for (long k = 0; k < {}; k++) partial[k] = {zero};",
        n.join(" * ")
    ));
    let pflat = |vars: &[String]| -> String {
        let mut s = format!("(({}) - ({}))", vars[0], lo[0]);
        for d in 1..dims {
            s = format!("({s} * n{d} + (({}) - ({})))", vars[d], lo[d]);
        }
        s
    };
    let term = |t: &crate::analysis::Term, x: String| -> String {
        match &t.coef {
            Some(k) => format!("({} * {x})", c_literal(k.text(), cx.dtype)),
            None => x,
        }
    };
    c.line("/* forward update */");
    for d in 0..dims {
        c.open(format!(
            "for (long q{d} = ({}) - {r}; q{d} < ({}) + {r}; q{d}++)",
            lo[d],
            hi[d],
            r = reach[d]
        ));
    }
    let q: Vec<String> = (0..dims).map(|d| format!("q{d}")).collect();
    for t in &fwd {
        let p: Vec<String> = (0..dims).map(|d| shifted(&q[d], -t.offset.0[d])).collect();
        let cond: Vec<String> = (0..dims)
            .map(|d| format!("{p} >= {l} && {p} < {h}", p = p[d], l = lo[d], h = hi[d]))
            .collect();
        let zero_off = vec![0i64; dims];
        let x = term(t, cx.read(&t.grid, &q, &zero_off));
        let slot = format!("partial[{}]", pflat(&p));
        let op = if t.negate { "-" } else { "+" };
        c.line(format!(
            "if ({}) {slot} = {slot} {op} {x};",
            cond.join(" && ")
        ));
    }
    for _ in 0..dims {
        c.close();
    }
    c.line("/* backward update */");
    for d in 0..dims {
        c.open(format!(
            "for (long i{d} = ({}) - 1; i{d} >= {}; i{d}--)",
            hi[d], lo[d]
        ));
    }
    let idx = idx_vars(dims);
    c.line(format!("{ty} acc = partial[{}];", pflat(&idx)));
    for t in &bwd {
        let x = term(t, cx.read(&t.grid, &idx, &t.offset.0));
        let op = if t.negate { "-" } else { "+" };
        c.line(format!("acc = acc {op} {x};"));
    }
    if let Some(dv) = &lf.divisor {
        c.line(format!("acc = acc / {};", c_literal(dv.text(), cx.dtype)));
    }
    let zero_off = vec![0i64; dims];
    c.line(format!("{} = acc;", cx.read(&u.dest, &idx, &zero_off)));
    for _ in 0..dims {
        c.close();
    }
    c.line("free(partial);");
    c.close();
    Ok(())
}

/// Optional driver: `prog IN... OUT...` over grid files, one per target grid
/// in name order.
fn emit_main(c: &mut Code, cx: &Ctx<'_>) {
    let grids: Vec<&String> = cx.h.grids.keys().collect();
    let ty = cx.ty;
    c.raw("#ifdef STENCIL_MAIN");
    c.raw("#include <stdio.h>");
    c.raw("#include <string.h>");
    c.line("");
    c.open("static int load_grid(const char *path, void *data, size_t bytes, unsigned char *hdr, size_t *hlen)");
    c.line("FILE *f = fopen(path, \"rb\");");
    c.line("if (!f) return -1;");
    c.line("size_t n = fread(hdr, 1, 8, f);");
    c.line("if (n != 8 || memcmp(hdr, \"STGR\", 4) != 0) { fclose(f); return -1; }");
    c.line("*hlen = 16 + 8 * (size_t)hdr[6];");
    c.line("n = fread(hdr + 8, 1, *hlen - 8, f);");
    c.line("n += fread(data, 1, bytes, f);");
    c.line("fclose(f);");
    c.line("return n == *hlen - 8 + bytes ? 0 : -1;");
    c.close();
    c.line("");
    c.open("static int store_grid(const char *path, const void *data, size_t bytes, const unsigned char *hdr, size_t hlen)");
    c.line("FILE *f = fopen(path, \"wb\");");
    c.line("if (!f) return -1;");
    c.line("size_t n = fwrite(hdr, 1, hlen, f) + fwrite(data, 1, bytes, f);");
    c.line("fclose(f);");
    c.line("return n == hlen + bytes ? 0 : -1;");
    c.close();
    c.line("");
    c.open("int main(int argc, char **argv)");
    let names: Vec<String> = grids.iter().map(|g| format!("IN_{g}")).collect();
    let outs: Vec<String> = grids.iter().map(|g| format!("OUT_{g}")).collect();
    c.open(format!("if (argc != {})", 1 + 2 * grids.len()));
    c.line(format!(
        "fprintf(stderr, \"usage: %s {} {}\\n\", argv[0]);",
        names.join(" "),
        outs.join(" ")
    ));
    c.line("return 2;");
    c.close();
    for (k, g) in grids.iter().enumerate() {
        let len = len_name(g);
        c.line(format!("{ty} *{g} = ({ty} *)malloc({len} * sizeof({ty}));"));
        c.line(format!("unsigned char hdr_{g}[64];"));
        c.line(format!("size_t hlen_{g} = 0;"));
        c.open(format!(
            "if (load_grid(argv[{}], {g}, {len} * sizeof({ty}), hdr_{g}, &hlen_{g}) != 0)",
            1 + k
        ));
        c.line(format!(
            "fprintf(stderr, \"cannot read %s\\n\", argv[{}]);",
            1 + k
        ));
        c.line("return 1;");
        c.close();
    }
    let refs: Vec<String> = grids.iter().map(|g| format!("&{g}")).collect();
    c.line(format!("{}({});", cx.h.name, refs.join(", ")));
    for (k, g) in grids.iter().enumerate() {
        let len = len_name(g);
        c.open(format!(
            "if (store_grid(argv[{}], {g}, {len} * sizeof({ty}), hdr_{g}, hlen_{g}) != 0)",
            1 + grids.len() + k
        ));
        c.line(format!(
            "fprintf(stderr, \"cannot write %s\\n\", argv[{}]);",
            1 + grids.len() + k
        ));
        c.line("return 1;");
        c.close();
    }
    for g in &grids {
        c.line(format!("free({g});"));
    }
    c.line("return 0;");
    c.close();
    c.raw("#endif");
}
