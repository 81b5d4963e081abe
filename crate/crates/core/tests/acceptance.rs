//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p stencilc-core --test acceptance -- --nocapture`.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use common::{
    artifact, async_sequence, compile_corpus, expected_pragmas, golden_cases, golden_dir, host_cc,
    pragmas, run_c, seeded_grids, ASYNC, GPU_TEMPLATES, OMP_TEMPLATES,
};
use stencilc::analysis::{
    analyze_kernel, decompose_regions, desugar_map_symbolic, MapSpec, Scheme, Shape,
};
use stencilc::codegen::generate;
use stencilc::corpus::benchmark_kernels;
use stencilc::dataflow::{build_comm_schedule, pattern_id_of, sort_dependencies, Dir, PatternId};
use stencilc::exec::{compare, run_omp_plan, run_semi, run_target, run_tile_plan, Grids};
use stencilc::frontend::{parse_source, MapSpecRaw, TargetStmt};
use stencilc::pipeline::Plan;
use stencilc::sim::load_program;

const MAX_TOL: f64 = 1e-7;
const RMSD_TOL: f64 = 1e-8;
const BUDGET_EXEC: Duration = Duration::from_secs(60);
const BUDGET_SIM: Duration = Duration::from_secs(30);
const BUDGET_CODEGEN: Duration = Duration::from_secs(5);

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_flop_counts() -> Check {
    let mut rows = 0;
    for k in benchmark_kernels().into_iter().filter(|k| !k.jacobi) {
        let (d, r) = (k.dims as u64, k.radius as u64);
        let points = match k.shape {
            Shape::Star => 2 * d * r + 1,
            Shape::Box => (2 * r + 1).pow(d as u32),
            Shape::Other => return Err(format!("{}: unexpected shape", k.name)),
        };
        let want = 2 * points - 1;
        ensure(k.flops == want, || {
            format!("{}: table {} vs 2P-1 = {want}", k.name, k.flops)
        })?;
        let c = compile_corpus(&k.name, &vec![8; k.dims], 1, "seq", &[]);
        let info = analyze_kernel(&c.unit.kernels[0]);
        ensure(info.point_count() as u64 == points, || {
            format!(
                "{}: {} points, expected {points}",
                k.name,
                info.point_count()
            )
        })?;
        ensure(info.flops_per_point == want, || {
            format!(
                "{}: analysis counts {} flops, expected {want}",
                k.name, info.flops_per_point
            )
        })?;
        rows += 1;
    }
    ensure(rows == 16, || format!("{rows} star/box rows"))?;
    Ok(format!("{rows} rows, exact"))
}

fn rotate_cw(x: i64, y: i64) -> (i64, i64) {
    (y, -x)
}

fn c2_pattern_ids() -> Check {
    for r in 1..=4i64 {
        let mut seen = BTreeMap::new();
        for x in -r..=r {
            for y in -r..=r {
                if (x, y) == (0, 0) {
                    continue;
                }
                let p = pattern_id_of(x, y);
                ensure(p.offset() == (x, y), || {
                    format!("{p} names {:?}, not ({x},{y})", p.offset())
                })?;
                if let Some(prev) = seen.insert(p, (x, y)) {
                    return Err(format!("({x},{y}) and {prev:?} both map to {p}"));
                }
                let (rx, ry) = rotate_cw(x, y);
                let q = pattern_id_of(rx, ry);
                let d = p.dir().unwrap();
                ensure(
                    q == p.in_quadrant(d.clockwise()) && q.ij() == p.ij(),
                    || format!("rotating ({x},{y}) gives {q}, expected {} rotated", p),
                )?;
            }
        }
        let want = (4 * r * (r + 1)) as usize;
        ensure(seen.len() == want, || {
            format!("r={r}: {} ids, expected {want}", seen.len())
        })?;
        let mut expected = BTreeSet::new();
        for d in [Dir::N, Dir::E, Dir::S, Dir::W] {
            for i in 1..=r as u32 {
                for j in 0..=r as u32 {
                    expected.insert(PatternId::quad(d, i, j));
                }
            }
        }
        let got: BTreeSet<PatternId> = seen.keys().copied().collect();
        ensure(got == expected, || {
            format!("r={r}: image is not the (d, 1..r, 0..r) set")
        })?;
    }
    ensure(pattern_id_of(0, 0) == PatternId::Center, || {
        "origin is not the center".into()
    })?;
    Ok("r=1..4 bijective, rotation holds".into())
}

/// Box3d2r communication table: per step, per quadrant N, E, S, W,
/// `(sent, to, from, into)`.
const BOX3D2R_TABLE: [[(&str, &str, &str, &str); 4]; 6] = [
    [
        ("0", "South", "North", "N10"),
        ("0", "West", "East", "E10"),
        ("0", "North", "South", "S10"),
        ("0", "East", "West", "W10"),
    ],
    [
        ("N10", "South", "North", "N20"),
        ("E10", "West", "East", "E20"),
        ("S10", "North", "South", "S20"),
        ("W10", "East", "West", "W20"),
    ],
    [
        ("N10", "East", "North", "N11"),
        ("E10", "South", "East", "E11"),
        ("S10", "West", "South", "S11"),
        ("W10", "North", "West", "W11"),
    ],
    [
        ("N11", "South", "North", "N21"),
        ("E11", "West", "East", "E21"),
        ("S11", "North", "South", "S21"),
        ("W11", "East", "West", "W21"),
    ],
    [
        ("N20", "East", "North", "N12"),
        ("E20", "South", "East", "E12"),
        ("S20", "West", "South", "S12"),
        ("W20", "North", "West", "W12"),
    ],
    [
        ("N12", "South", "North", "N22"),
        ("E12", "West", "East", "E22"),
        ("S12", "North", "South", "S22"),
        ("W12", "East", "West", "W22"),
    ],
];

fn box3d2r_program() -> Box<stencilc::dataflow::DataflowProgram> {
    let c = compile_corpus("box3d2r", &[6, 6, 3], 1000, "dataflow", &[]);
    match c.plan {
        Plan::Dataflow(p) => p,
        _ => unreachable!(),
    }
}

fn c3_comm_table() -> Check {
    let p = box3d2r_program();
    let steps = build_comm_schedule(&p.order_sorted).map_err(|e| e.to_string())?;
    ensure(steps == p.schedule, || {
        "program schedule differs from a fresh build".into()
    })?;
    ensure(steps.len() == 6, || format!("{} steps", steps.len()))?;
    let mut cells = 0;
    for (n, (s, row)) in steps.iter().zip(BOX3D2R_TABLE).enumerate() {
        ensure(s.actions.len() == 4, || {
            format!("step {} has {} actions", n + 1, s.actions.len())
        })?;
        for (a, (sent, to, from, into)) in s.actions.iter().zip(row) {
            let send = format!("Send {} to {}", a.send, a.send_to.word());
            let recv = format!("Receive from {} into {}", a.recv_from.word(), a.recv_into);
            ensure(send == format!("Send {sent} to {to}"), || {
                format!("step {}: {send}, expected Send {sent} to {to}", n + 1)
            })?;
            ensure(recv == format!("Receive from {from} into {into}"), || {
                format!(
                    "step {}: {recv}, expected Receive from {from} into {into}",
                    n + 1
                )
            })?;
            cells += 2;
        }
    }
    Ok(format!("{cells} cells equal"))
}

fn names(v: &[PatternId]) -> Vec<String> {
    v.iter().map(|p| p.to_string()).collect()
}

fn ids(s: &[&str]) -> BTreeSet<PatternId> {
    s.iter().map(|x| x.parse().unwrap()).collect()
}

fn c4_dependency_chains() -> Check {
    let cases: [(&[&str], &[&str]); 3] = [
        (&["N20", "N10"], &["N10", "N20"]),
        (&["E30", "E10", "E20"], &["E10", "E20", "E30"]),
        (&["W22", "W21", "W20", "W10"], &["W10", "W20", "W21", "W22"]),
    ];
    for (input, want) in cases {
        let got = names(&sort_dependencies(&ids(input)));
        ensure(got == want, || format!("{input:?} sorted to {got:?}"))?;
    }
    let p = box3d2r_program();
    for d in [Dir::N, Dir::E, Dir::S, Dir::W] {
        let q: Vec<String> = p
            .order_sorted
            .iter()
            .filter(|x| x.dir() == Some(d))
            .map(|x| x.to_string()[1..].to_string())
            .collect();
        ensure(q == ["10", "20", "11", "21", "12", "22"], || {
            format!("box3d2r {}: {q:?}", d.word())
        })?;
    }
    Ok("chains and box3d2r order hold".into())
}

fn c5_state_machine() -> Check {
    let p = box3d2r_program();
    let m = &p.machine;
    let mut want = vec!["STATE_SETUP".to_string()];
    for l in ["10", "20", "11", "21", "12", "22"] {
        want.push(format!("STATE_PREP_TRANS_{l}"));
        want.push(format!("STATE_TRANS_{l}"));
    }
    for s in ["UPDATE_STENCIL", "ITERATION_CHECK", "TEARDOWN", "EXIT"] {
        want.push(format!("STATE_{s}"));
    }
    ensure(want.len() == 17, || "oracle state count".into())?;
    ensure(m.names() == want, || format!("states {:?}", m.names()))?;
    let check = m.index_of("STATE_ITERATION_CHECK").unwrap();
    let first = m.index_of("STATE_PREP_TRANS_10").unwrap();
    let teardown = m.index_of("STATE_TEARDOWN").unwrap();
    for (done, to) in [(0, first), (999, first), (1000, teardown), (1001, teardown)] {
        ensure(m.successor(check, done) == Some(to), || {
            format!(
                "after {done} iterations check goes to {:?}",
                m.successor(check, done)
            )
        })?;
    }
    for t in 1..=5u64 {
        let c = compile_corpus("box3d2r", &[6, 5, 3], t, "dataflow", &[]);
        let Plan::Dataflow(dp) = &c.plan else {
            unreachable!()
        };
        let a = generate(&c.target, &c.plan)?;
        let g = seeded_grids(&c.target, t);
        let mut s = load_program(&a, &g[&dp.input]).map_err(|e| e.to_string())?;
        let (_, trace) = s.run_to_exit().map_err(|e| e.to_string())?;
        let n = trace.entries("STATE_UPDATE_STENCIL");
        ensure(n as u64 == t, || format!("T={t}: update entered {n} times"))?;
    }
    Ok("17 states, check branches, update entered T times for T=1..5".into())
}

fn variants() -> Vec<(&'static str, Vec<String>)> {
    let mut v: Vec<(&str, Vec<String>)> = vec![("seq", vec![])];
    for t in OMP_TEMPLATES {
        v.push(("omp", vec![format!("template={t}")]));
        v.push((
            "omp",
            vec![format!("template={t}"), "algorithm=semi".into()],
        ));
    }
    for t in GPU_TEMPLATES {
        v.push(("cuda", vec![format!("template={t}")]));
    }
    for t in ["shift", "unroll", "semi"] {
        v.push((
            "cuda",
            vec![format!("template={t}"), "memType=shared".into()],
        ));
        v.push((
            "cuda",
            vec![format!("template={t}"), "prefetch=true".into()],
        ));
    }
    v
}

fn run_variant(
    backend: &str,
    plan: &Plan,
    h: &stencilc::hir::HirTarget,
    g: &mut Grids,
) -> Result<(), String> {
    let r = match (backend, plan) {
        ("seq", _) => run_semi(h, g),
        (_, Plan::Omp(p)) => run_omp_plan(h, p, g),
        (_, Plan::Gpu(p)) => run_tile_plan(h, p, g),
        _ => return Err(format!("unexpected plan for {backend}")),
    };
    r.map(|_| ()).map_err(|e| e.to_string())
}

fn c6_executor_variants() -> Check {
    let start = Instant::now();
    let vs = variants();
    let (mut combos, mut worst) = (0, (0.0f64, 0.0f64));
    for (n, k) in benchmark_kernels().into_iter().enumerate() {
        let ext = if k.dims == 2 {
            vec![96, 88]
        } else {
            vec![24, 22, 20]
        };
        let t = 1 + (n as u64 % 5);
        let reference = compile_corpus(&k.name, &ext, t, "seq", &[]);
        let input = seeded_grids(&reference.target, 600 + n as u64);
        let mut want = input.clone();
        run_target(&reference.target, &mut want).map_err(|e| e.to_string())?;
        let star = k.shape == Shape::Star;
        let usable: Vec<&(&str, Vec<String>)> = vs
            .iter()
            .filter(|(b, p)| star || (*b != "seq" && !p.iter().any(|x| x.ends_with("=semi"))))
            .collect();
        for m in 0..4 {
            let (backend, params) = usable[(4 * n + m) % usable.len()];
            let p: Vec<&str> = params.iter().map(String::as_str).collect();
            let c = compile_corpus(&k.name, &ext, t, backend, &p);
            let mut got = input.clone();
            run_variant(backend, &c.plan, &c.target, &mut got)?;
            for (name, w) in &want {
                let r = compare(&got[name], w).map_err(|e| e.to_string())?;
                let (mx, rm) = r.normalized();
                worst = (worst.0.max(mx), worst.1.max(rm));
                ensure(r.within(MAX_TOL, RMSD_TOL), || {
                    format!("{} T={t} {backend} {params:?} grid {name}: {r}", k.name)
                })?;
            }
            combos += 1;
        }
    }
    let took = start.elapsed();
    ensure(combos >= 60, || format!("only {combos} combinations"))?;
    ensure(took < BUDGET_EXEC, || {
        format!("{took:.1?} exceeds {BUDGET_EXEC:?}")
    })?;
    Ok(format!(
        "{combos} combinations, worst normalized max={:e} rmsd={:e}, {took:.1?}",
        worst.0, worst.1
    ))
}

fn c7_simulator() -> Check {
    let start = Instant::now();
    let mut runs = 0;
    let mut worst = 0.0f64;
    for k in benchmark_kernels()
        .into_iter()
        .filter(|k| k.dims == 3 && !k.jacobi)
    {
        let t = 5;
        let c = compile_corpus(&k.name, &[9, 9, 6], t, "dataflow", &[]);
        let Plan::Dataflow(p) = &c.plan else {
            unreachable!()
        };
        let a = generate(&c.target, &c.plan)?;
        let input = seeded_grids(&c.target, 700 + runs);
        let mut want = input.clone();
        run_target(&c.target, &mut want).map_err(|e| e.to_string())?;
        let mut s = load_program(&a, &input[&p.input]).map_err(|e| e.to_string())?;
        let (got, trace) = s.run_to_exit().map_err(|e| e.to_string())?;
        ensure(trace.entries("STATE_UPDATE_STENCIL") as u64 == t, || {
            format!("{}: update count", k.name)
        })?;
        for (name, g) in &got {
            let r = compare(g, &want[name]).map_err(|e| e.to_string())?;
            worst = worst.max(r.normalized().0);
            ensure(r.within(MAX_TOL, RMSD_TOL), || {
                format!("{} grid {name}: {r}", k.name)
            })?;
        }
        runs += 1;
    }
    let took = start.elapsed();
    ensure(runs == 8, || format!("{runs} kernels"))?;
    ensure(took < BUDGET_SIM, || {
        format!("{took:.1?} exceeds {BUDGET_SIM:?}")
    })?;
    Ok(format!(
        "{runs} kernels on 9x9x6, T=5, worst normalized max={worst:e}, {took:.1?}"
    ))
}

fn raw_map(args: &str) -> MapSpecRaw {
    let src = format!("@st.target\ndef t(u: st.grid):\n  st.map({args})(k)(u)\n");
    let unit = parse_source(&src).unwrap();
    match &unit.targets[0].body[0] {
        TargetStmt::Map { spec, .. } => spec.clone(),
        _ => unreachable!(),
    }
}

fn covers_exactly(spec: &MapSpec, scheme: Scheme) -> Result<(), String> {
    let regions = decompose_regions(spec, scheme)?;
    let total: u64 = regions.iter().map(|r| r.size()).sum();
    ensure(total == spec.point_count(), || {
        format!("{spec} {scheme}: sizes sum to {total}")
    })?;
    for x in 0..12 {
        for y in 0..12 {
            for z in 0..12 {
                let p = [x, y, z];
                let inside = spec.dims.iter().zip(p).all(|(d, v)| d[0] <= v && v < d[3]);
                let hits = regions.iter().filter(|r| r.contains(&p)).count();
                ensure(hits == usize::from(inside), || {
                    format!("{spec} {scheme}: {p:?} in {hits} regions")
                })?;
            }
        }
    }
    Ok(())
}

/// Value of a bound written as `a+b-c` with symbols and integers.
fn eval_text(text: &str, env: &BTreeMap<String, i64>) -> i64 {
    let mut total = 0;
    let mut sign = 1;
    let mut tok = String::new();
    let mut flush = |tok: &mut String, sign: i64| {
        if !tok.is_empty() {
            total += sign * tok.parse::<i64>().unwrap_or_else(|_| env[tok.as_str()]);
            tok.clear();
        }
    };
    for ch in text.chars() {
        match ch {
            '+' | '-' => {
                flush(&mut tok, sign);
                sign = if ch == '-' { -1 } else { 1 };
            }
            ' ' => {}
            c => tok.push(c),
        }
    }
    flush(&mut tok, sign);
    total
}

fn c8_map_sugar() -> Check {
    let rules: [(&str, [[&str; 4]; 2]); 6] = [
        ("i=x, j=y", [["0", "0", "x", "x"], ["0", "0", "y", "y"]]),
        (
            "i=x, j=y, w=p",
            [["0", "p", "x-p", "x"], ["0", "p", "y-p", "y"]],
        ),
        (
            "i=(x1, x2), j=(y1, y2)",
            [["x1", "x1", "x2", "x2"], ["y1", "y1", "y2", "y2"]],
        ),
        (
            "i=(x1, x2), j=(y1, y2), e=p",
            [["x1", "x1+p", "x2-p", "x2"], ["y1", "y1+p", "y2-p", "y2"]],
        ),
        ("e=(x, y)", [["0", "0", "x", "x"], ["0", "0", "y", "y"]]),
        (
            "e=(x, y), w=p",
            [["0", "p", "x-p", "x"], ["0", "p", "y-p", "y"]],
        ),
    ];
    let syms = ["x", "y", "p", "x1", "x2", "y1", "y2"];
    let envs: Vec<BTreeMap<String, i64>> = [
        [40, 31, 2, 3, 29, 5, 23],
        [17, 64, 5, 1, 13, 7, 50],
        [9, 9, 0, 0, 9, 2, 8],
    ]
    .iter()
    .map(|vals| {
        syms.iter()
            .map(|s| s.to_string())
            .zip(vals.iter().copied())
            .collect()
    })
    .collect();
    for (args, want) in &rules {
        let got = desugar_map_symbolic(&raw_map(args), Some(2))?;
        ensure(got.dims.len() == 2, || {
            format!("map({args}) gave {} dims", got.dims.len())
        })?;
        for (d, (g, w)) in got.dims.iter().zip(want).enumerate() {
            for (b, (gb, wb)) in g.iter().zip(w).enumerate() {
                for env in &envs {
                    let have = gb.eval(env)?;
                    ensure(have == eval_text(wb, env), || {
                        format!("map({args}) dim {d} entry {b}: got {gb}, expected {wb}")
                    })?;
                }
            }
        }
    }
    let per_dim: [[i64; 4]; 5] = [
        [0, 0, 12, 12],
        [0, 2, 10, 12],
        [1, 3, 9, 11],
        [0, 1, 11, 12],
        [2, 2, 7, 7],
    ];
    let mut specs = vec![MapSpec::full(&[12, 12, 12])];
    for a in per_dim {
        for b in per_dim {
            for c in per_dim {
                specs.push(MapSpec {
                    dims: vec![a, b, c],
                });
            }
        }
    }
    for s in &specs {
        for scheme in [Scheme::Unified, Scheme::CrossProduct, Scheme::Slab7] {
            covers_exactly(s, scheme)?;
        }
    }
    Ok(format!(
        "{} rules, {} specs x 3 schemes cover 12^3 exactly once",
        rules.len(),
        specs.len()
    ))
}

fn c9_codegen() -> Check {
    let start = Instant::now();
    let dir = golden_dir();
    let mut files = 0;
    for (k, ext, backend, params) in golden_cases() {
        let p: Vec<&str> = params.iter().map(String::as_str).collect();
        let a = artifact(k, &ext, backend, &p);
        ensure(a == artifact(k, &ext, backend, &p), || {
            format!("{k} {backend} {params:?} not deterministic")
        })?;
        for (name, text) in &a.files {
            let stem = if params.iter().any(|x| x.starts_with("asyncMemcpy")) {
                format!("async_{name}")
            } else {
                name.clone()
            };
            let want =
                std::fs::read_to_string(dir.join(&stem)).map_err(|e| format!("{stem}: {e}"))?;
            ensure(want == *text, || {
                format!("{stem} differs from its snapshot")
            })?;
            files += 1;
        }
    }
    for t in OMP_TEMPLATES {
        for (k, ext) in [("star2d4r", vec![16, 16]), ("box3d1r", vec![8, 8, 8])] {
            let a = artifact(k, &ext, "omp", &[&format!("template={t}")]);
            ensure(pragmas(&a.files[0].1) == expected_pragmas(t), || {
                format!("{k} {t} pragmas")
            })?;
        }
    }
    for t in GPU_TEMPLATES {
        let staging = t != "gmem" && t != "f4";
        for on in [false, staging] {
            let mut p = vec![format!("template={t}")];
            if on {
                p.push("asyncMemcpy=true".into());
            }
            let p: Vec<&str> = p.iter().map(String::as_str).collect();
            let a = artifact("star3d2r", &[8, 8, 8], "cuda", &p);
            let text = &a.files[0].1;
            let any = ASYNC.iter().any(|s| text.contains(s));
            ensure(async_sequence(text) == on && any == on, || {
                format!("{t} async={on}")
            })?;
        }
    }
    let took = start.elapsed();
    ensure(took < BUDGET_CODEGEN, || {
        format!("{took:.1?} exceeds {BUDGET_CODEGEN:?}")
    })?;
    Ok(format!(
        "{files} snapshots stable, pragmas and async gating hold, {took:.1?}"
    ))
}

fn c10_host_c() -> Outcome {
    let Some((cc, omp)) = host_cc() else {
        return Outcome::Skip("no host C compiler".into());
    };
    let dir = tempfile::tempdir().unwrap();
    let mut backends = vec!["seq"];
    if omp {
        backends.push("omp");
    }
    let mut runs = 0;
    let mut worst = 0.0f64;
    for (n, (k, ext)) in [("star2d4r", vec![40, 36]), ("star3d2r", vec![12, 10, 9])]
        .into_iter()
        .enumerate()
    {
        for backend in &backends {
            let c = compile_corpus(k, &ext, 3, backend, &[]);
            let a = match generate(&c.target, &c.plan) {
                Ok(a) => a,
                Err(e) => return Outcome::Fail(e),
            };
            let input = seeded_grids(&c.target, 900 + n as u64);
            let mut want = input.clone();
            run_target(&c.target, &mut want).unwrap();
            let sub = dir.path().join(format!("{k}_{backend}"));
            std::fs::create_dir_all(&sub).unwrap();
            let got = match run_c(&cc, &a, &input, *backend == "omp", &sub) {
                Ok(g) => g,
                Err(e) => return Outcome::Fail(e),
            };
            for (name, w) in &want {
                let r = compare(&got[name], w).unwrap();
                worst = worst.max(r.normalized().0);
                if !r.within(MAX_TOL, RMSD_TOL) {
                    return Outcome::Fail(format!("{k} {backend} grid {name}: {r}"));
                }
            }
            runs += 1;
        }
    }
    let note = if omp { "" } else { ", OpenMP unavailable" };
    Outcome::Pass(format!(
        "{runs} programs built with {cc}, worst normalized max={worst:e}{note}"
    ))
}

fn outcome(c: Check) -> Outcome {
    match c {
        Ok(s) => Outcome::Pass(s),
        Err(e) => Outcome::Fail(e),
    }
}

#[test]
fn acceptance() {
    let checks: Vec<Criterion> = vec![
        ("flop counts", Box::new(|| outcome(c1_flop_counts()))),
        ("pattern ids", Box::new(|| outcome(c2_pattern_ids()))),
        (
            "box3d2r communication table",
            Box::new(|| outcome(c3_comm_table())),
        ),
        (
            "dependency chains",
            Box::new(|| outcome(c4_dependency_chains())),
        ),
        ("state machine", Box::new(|| outcome(c5_state_machine()))),
        (
            "executor variants",
            Box::new(|| outcome(c6_executor_variants())),
        ),
        ("dataflow simulator", Box::new(|| outcome(c7_simulator()))),
        (
            "map sugar and decompositions",
            Box::new(|| outcome(c8_map_sugar())),
        ),
        ("code generation", Box::new(|| outcome(c9_codegen()))),
        ("generated C on the host", Box::new(c10_host_c)),
    ];
    println!("tolerances: normalized max<={MAX_TOL:e} rmsd<={RMSD_TOL:e}");
    let mut failed = Vec::new();
    for (n, (name, f)) in checks.iter().enumerate() {
        let id = n + 1;
        let res = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Outcome::Fail(format!("panicked: {:?}", e.downcast_ref::<String>()))
        });
        match res {
            Outcome::Pass(d) => println!("criterion {id:>2} PASS {name}: {d}"),
            Outcome::Skip(d) => println!("criterion {id:>2} SKIP {name}: {d}"),
            Outcome::Fail(d) => {
                println!("criterion {id:>2} FAIL {name}: {d}");
                failed.push(id);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
