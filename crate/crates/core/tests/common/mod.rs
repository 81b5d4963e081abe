#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use stencilc::codegen::{generate, GeneratedArtifact};
use stencilc::corpus::{lookup, program_source, Iterations};
use stencilc::exec::grid::GridBuffer;
use stencilc::exec::{initial_grids, Grids};
use stencilc::hir::HirTarget;
use stencilc::pipeline::{compile_source, Compiled, Options};
use stencilc::planning::parse_override;

pub fn compile_corpus(
    kernel: &str,
    extents: &[usize],
    t: u64,
    backend: &str,
    params: &[&str],
) -> Compiled {
    let k = lookup(kernel).unwrap_or_else(|| panic!("no corpus kernel {kernel}"));
    let iters = if backend == "dataflow" {
        Iterations::Fixed(t)
    } else {
        Iterations::Launch(t)
    };
    let src = program_source(&k, extents, iters, backend);
    let opts = Options {
        params: params.iter().map(|p| parse_override(p).unwrap()).collect(),
        ..Options::default()
    };
    compile_source(&src, &opts).unwrap_or_else(|d| panic!("{kernel} {backend} {params:?}: {d:?}"))
}

pub fn artifact(
    kernel: &str,
    extents: &[usize],
    backend: &str,
    params: &[&str],
) -> GeneratedArtifact {
    let c = compile_corpus(kernel, extents, 3, backend, params);
    generate(&c.target, &c.plan).unwrap()
}

/// Log-uniform interiors in `[1e-4, 1e5]`, zero halos.
pub fn seeded_grids(h: &HirTarget, seed: u64) -> Grids {
    let mut g = initial_grids(h);
    for (n, b) in g.values_mut().enumerate() {
        b.fill_log_uniform(seed.wrapping_mul(31).wrapping_add(n as u64), 1e-4, 1e5);
    }
    g
}

/// Host C compiler, if one runs. `Some(true)` when it also accepts `-fopenmp`.
pub fn host_cc() -> Option<(String, bool)> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".to_string());
    let dir = tempfile::tempdir().ok()?;
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include <omp.h>\nint main(void) { return omp_get_max_threads() > 0 ? 0 : 1; }\n",
    )
    .ok()?;
    let plain = Command::new(&cc).arg("--version").output().ok()?;
    if !plain.status.success() {
        return None;
    }
    let omp = Command::new(&cc)
        .arg("-fopenmp")
        .arg(&src)
        .arg("-o")
        .arg(dir.path().join("probe"))
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false);
    Some((cc, omp))
}

/// Compile the artifact's C file with `STENCIL_MAIN`, run it on `grids` and
/// read the results back.
pub fn run_c(
    cc: &str,
    a: &GeneratedArtifact,
    grids: &Grids,
    openmp: bool,
    dir: &Path,
) -> Result<Grids, String> {
    let (name, text) = &a.files[0];
    let src = dir.join(name);
    std::fs::write(&src, text).map_err(|e| e.to_string())?;
    let bin = dir.join(format!("{name}.bin"));
    let mut cmd = Command::new(cc);
    cmd.args(["-std=c99", "-O2", "-ffp-contract=off", "-DSTENCIL_MAIN"]);
    if openmp {
        cmd.arg("-fopenmp");
    }
    let out = cmd
        .arg(&src)
        .arg("-o")
        .arg(&bin)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{cc} failed on {name}:\n{}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let names: Vec<&String> = grids.keys().collect();
    let mut run = Command::new(&bin);
    for n in &names {
        let p = dir.join(format!("in_{n}.grid"));
        grids[*n].write_file(&p).map_err(|e| e.to_string())?;
        run.arg(p);
    }
    for n in &names {
        run.arg(dir.join(format!("out_{n}.grid")));
    }
    if openmp {
        run.env("OMP_NUM_THREADS", "4");
    }
    let out = run.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{name} exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    names
        .iter()
        .map(|n| {
            let g = GridBuffer::read_file(&dir.join(format!("out_{n}.grid")))
                .map_err(|e| e.to_string())?;
            Ok(((*n).clone(), g))
        })
        .collect()
}

pub const OMP_TEMPLATES: [&str; 5] = [
    "loop",
    "loop_blocking",
    "loop_blocking_collapse",
    "tasks_blocking",
    "taskloop",
];
pub const GPU_TEMPLATES: [&str; 6] = ["gmem", "smem", "f4", "shift", "unroll", "semi"];

/// Configurations pinned by snapshot files.
pub fn golden_cases() -> Vec<(&'static str, Vec<usize>, &'static str, Vec<String>)> {
    let mut v = vec![
        ("star2d4r", vec![16, 16], "seq", vec![]),
        ("box2d1r", vec![12, 12], "seq", vec![]),
        (
            "star3d2r",
            vec![8, 8, 8],
            "omp",
            vec![
                "template=loop_blocking".to_string(),
                "algorithm=semi".to_string(),
            ],
        ),
    ];
    for t in OMP_TEMPLATES {
        v.push((
            "star2d4r",
            vec![16, 16],
            "omp",
            vec![format!("template={t}")],
        ));
    }
    for t in GPU_TEMPLATES {
        v.push((
            "star3d2r",
            vec![8, 8, 8],
            "cuda",
            vec![format!("template={t}")],
        ));
    }
    v.push((
        "star3d2r",
        vec![8, 8, 8],
        "cuda",
        vec![
            "template=unroll".into(),
            "asyncMemcpy=true".into(),
            "memType=shared".into(),
        ],
    ));
    v
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn pragmas(text: &str) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for l in text.lines() {
        let l = l.trim();
        if let Some(p) = l.strip_prefix("#pragma omp ") {
            *m.entry(p.to_string()).or_default() += 1;
        }
    }
    m
}

pub fn multiset(items: &[&str]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for i in items {
        *m.entry(i.to_string()).or_default() += 1;
    }
    m
}

pub fn expected_pragmas(template: &str) -> BTreeMap<String, usize> {
    match template {
        "loop" | "loop_blocking" => multiset(&["parallel for default(shared) schedule(runtime)"]),
        "loop_blocking_collapse" => {
            multiset(&["parallel for default(shared) schedule(runtime) collapse(2)"])
        }
        "tasks_blocking" => multiset(&["parallel default(shared)", "master", "task", "taskwait"]),
        "taskloop" => multiset(&["parallel default(shared)", "single", "taskloop"]),
        _ => unreachable!(),
    }
}

pub const ASYNC: [&str; 3] = [
    "__pipeline_memcpy_async",
    "__pipeline_commit",
    "__pipeline_wait_prior",
];

pub fn async_sequence(text: &str) -> bool {
    let mut from = 0;
    for s in ASYNC {
        match text[from..].find(s) {
            Some(i) => from += i + s.len(),
            None => return false,
        }
    }
    true
}
