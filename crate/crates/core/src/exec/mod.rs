//! Reference executor: runs lowered targets point by point, through the
//! semi-stencil sweeps, or by emulating a GPU/OpenMP plan, and compares
//! grids.

pub mod engine;
pub mod grid;
pub mod tape;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use crate::analysis::{linear_form, Shape};
use crate::frontend::DType;
use crate::hir::{HirMap, HirStmt, HirTarget};
use crate::planning::{GpuPlan, GpuTemplate, OmpAlgorithm, OmpPlan};

use engine::{Job, SemiForm, Src};
pub use grid::{Geom, GridBuffer, GridData, GridIoError};
pub use tape::{Real, Tape, V4};

/// Buffers keyed by target grid parameter.
pub type Grids = BTreeMap<String, GridBuffer>;

#[derive(Debug, Clone, PartialEq)]
pub enum Engine {
    Naive,
    Semi,
    Tile(GpuPlan),
    Omp(OmpPlan),
}

impl Engine {
    fn wants_semi(&self) -> bool {
        match self {
            Engine::Naive => false,
            Engine::Semi => true,
            Engine::Tile(p) => p.template == GpuTemplate::Semi,
            Engine::Omp(p) => p.algorithm == OmpAlgorithm::Semi,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("no buffer for grid `{0}`")]
    MissingGrid(String),
    #[error("grid `{name}`: expected {expected}, got {found}")]
    Mismatch {
        name: String,
        expected: String,
        found: String,
    },
    #[error("kernel `{kernel}`: {message}")]
    Plan { kernel: String, message: String },
    #[error("cannot compare grids: {0}")]
    Compare(String),
}

fn describe(dtype: DType, shape: &[usize], order: usize) -> String {
    let s: Vec<String> = shape.iter().map(|e| e.to_string()).collect();
    format!("{} [{}] order {}", dtype.name(), s.join("x"), order)
}

/// Zero-filled buffers matching the target's bound grid declarations.
pub fn initial_grids(h: &HirTarget) -> Grids {
    h.grids
        .iter()
        .map(|(p, g)| (p.clone(), GridBuffer::for_decl(g)))
        .collect()
}

/// Check that `grids` supplies every target grid with the declared layout.
pub fn check_grids(h: &HirTarget, grids: &Grids) -> Result<(), ExecError> {
    for (p, g) in &h.grids {
        let b = grids
            .get(p)
            .ok_or_else(|| ExecError::MissingGrid(p.clone()))?;
        if b.dtype != g.dtype || b.shape != g.shape || b.order != g.order {
            return Err(ExecError::Mismatch {
                name: p.clone(),
                expected: describe(g.dtype, &g.shape, g.order),
                found: describe(b.dtype, &b.shape, b.order),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecStats {
    pub maps: u64,
    pub points: u64,
    /// Non-finite values in the final buffers.
    pub nonfinite: usize,
}

/// Sequential point-by-point execution: regions in order, points in
/// row-major order.
pub fn run_target(h: &HirTarget, grids: &mut Grids) -> Result<ExecStats, ExecError> {
    run(h, grids, &Engine::Naive)
}

pub fn run_semi(h: &HirTarget, grids: &mut Grids) -> Result<ExecStats, ExecError> {
    run(h, grids, &Engine::Semi)
}

pub fn run_tile_plan(
    h: &HirTarget,
    plan: &GpuPlan,
    grids: &mut Grids,
) -> Result<ExecStats, ExecError> {
    run(h, grids, &Engine::Tile(plan.clone()))
}

pub fn run_omp_plan(
    h: &HirTarget,
    plan: &OmpPlan,
    grids: &mut Grids,
) -> Result<ExecStats, ExecError> {
    run(h, grids, &Engine::Omp(plan.clone()))
}

pub fn run(h: &HirTarget, grids: &mut Grids, engine: &Engine) -> Result<ExecStats, ExecError> {
    check_grids(h, grids)?;
    for m in h.maps() {
        check_map(m, engine)?;
    }
    let mut stats = ExecStats::default();
    exec_block(&h.body, grids, engine, &mut stats)?;
    stats.nonfinite = grids.values().map(|g| g.count_nonfinite()).sum();
    Ok(stats)
}

fn check_map(m: &HirMap, engine: &Engine) -> Result<(), ExecError> {
    let err = |message: String| ExecError::Plan {
        kernel: m.kernel.clone(),
        message,
    };
    if engine.wants_semi() {
        if m.info.shape != Shape::Star {
            return Err(err(format!(
                "semi-stencil needs a star-shaped kernel, found {}",
                m.info.shape
            )));
        }
        for u in &m.updates {
            if linear_form(&u.expr).is_none() {
                return Err(err(
                    "semi-stencil needs a weighted sum of single reads".into()
                ));
            }
        }
    }
    if let Engine::Tile(p) = engine {
        if p.template.is_streaming() && m.info.dims < 2 {
            return Err(err(format!(
                "template `{}` needs at least two dimensions",
                p.template.name()
            )));
        }
    }
    Ok(())
}

fn exec_block(
    body: &[HirStmt],
    grids: &mut Grids,
    engine: &Engine,
    stats: &mut ExecStats,
) -> Result<(), ExecError> {
    for s in body {
        match s {
            HirStmt::Map(m) => {
                exec_map(m, grids, engine)?;
                stats.maps += 1;
                stats.points +=
                    m.regions.iter().map(|r| r.size()).sum::<u64>() * m.updates.len() as u64;
            }
            HirStmt::Swap(a, b) => {
                let mut x = grids
                    .remove(a)
                    .ok_or_else(|| ExecError::MissingGrid(a.clone()))?;
                let y = grids
                    .get_mut(b)
                    .ok_or_else(|| ExecError::MissingGrid(b.clone()))?;
                std::mem::swap(&mut x, y);
                grids.insert(a.clone(), x);
            }
            HirStmt::Loop { count, body } => {
                for _ in 0..*count {
                    exec_block(body, grids, engine, stats)?;
                }
            }
        }
    }
    Ok(())
}

/// Element types a buffer can hold.
pub trait Elem: Real {
    fn view(d: &GridData) -> Option<&[Self]>;
    fn view_mut(d: &mut GridData) -> Option<&mut Vec<Self>>;
}

impl Elem for f32 {
    fn view(d: &GridData) -> Option<&[Self]> {
        match d {
            GridData::F32(v) => Some(v),
            _ => None,
        }
    }
    fn view_mut(d: &mut GridData) -> Option<&mut Vec<Self>> {
        match d {
            GridData::F32(v) => Some(v),
            _ => None,
        }
    }
}

impl Elem for f64 {
    fn view(d: &GridData) -> Option<&[Self]> {
        match d {
            GridData::F64(v) => Some(v),
            _ => None,
        }
    }
    fn view_mut(d: &mut GridData) -> Option<&mut Vec<Self>> {
        match d {
            GridData::F64(v) => Some(v),
            _ => None,
        }
    }
}

fn exec_map(m: &HirMap, grids: &mut Grids, engine: &Engine) -> Result<(), ExecError> {
    let dtype = grids.values().next().map(|g| g.dtype).unwrap_or(DType::F64);
    match dtype {
        DType::F32 => exec_map_typed::<f32>(m, grids, engine),
        DType::F64 => exec_map_typed::<f64>(m, grids, engine),
    }
}

fn exec_map_typed<T: Elem>(
    m: &HirMap,
    grids: &mut Grids,
    engine: &Engine,
) -> Result<(), ExecError> {
    let slots = m.reads();
    for u in &m.updates {
        // the destination is never read by its own update
        let mut dest = grids
            .remove(&u.dest)
            .ok_or_else(|| ExecError::MissingGrid(u.dest.clone()))?;
        let result = (|| {
            let geoms: Vec<Geom> = slots
                .iter()
                .map(|s| {
                    grids
                        .get(s)
                        .map(|g| g.geom())
                        .ok_or_else(|| ExecError::MissingGrid(s.clone()))
                })
                .collect::<Result<_, _>>()?;
            let mut srcs = Vec::with_capacity(slots.len());
            for (s, g) in slots.iter().zip(&geoms) {
                let data = T::view(&grids[s].data).ok_or_else(|| ExecError::Mismatch {
                    name: s.clone(),
                    expected: "uniform element type".into(),
                    found: grids[s].dtype.name().into(),
                })?;
                srcs.push(Src { data, geom: g });
            }
            let tape = Tape::compile(&u.expr, &slots);
            let semi = if engine.wants_semi() {
                linear_form(&u.expr).map(|lf| SemiForm::<T>::new(&lf, &slots))
            } else {
                None
            };
            let job = Job::new(&tape, srcs, m.info.dims, semi);
            let dg = dest.geom();
            let out = T::view_mut(&mut dest.data).ok_or_else(|| ExecError::Mismatch {
                name: u.dest.clone(),
                expected: "uniform element type".into(),
                found: dest.dtype.name().into(),
            })?;
            match engine {
                Engine::Naive => engine::run_naive(&job, &m.regions, out, &dg),
                Engine::Semi => engine::run_semi(&job, &m.regions, out, &dg),
                Engine::Tile(p) => engine::run_tile(&job, p, &m.regions, out, &dg),
                Engine::Omp(p) => engine::run_omp(&job, p, &m.regions, out, &dg),
            }
            Ok(())
        })();
        grids.insert(u.dest.clone(), dest);
        result?;
    }
    Ok(())
}

/// Error statistics over the interior of two grids.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub max_error: f64,
    pub rmsd: f64,
    /// Logical index of the largest error.
    pub worst: Vec<i64>,
    pub points: usize,
    /// Largest finite interior magnitude of the reference grid.
    pub scale: f64,
}

impl ComparisonReport {
    /// Errors divided by the reference value scale.
    pub fn normalized(&self) -> (f64, f64) {
        if self.scale > 0.0 {
            (self.max_error / self.scale, self.rmsd / self.scale)
        } else {
            (self.max_error, self.rmsd)
        }
    }

    pub fn within(&self, max_tol: f64, rmsd_tol: f64) -> bool {
        let (m, r) = self.normalized();
        m <= max_tol && r <= rmsd_tol
    }
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at: Vec<String> = self.worst.iter().map(|x| x.to_string()).collect();
        let (m, r) = self.normalized();
        write!(
            f,
            "max={:e} rmsd={:e} at=({}) normalized max={:e} rmsd={:e}",
            self.max_error,
            self.rmsd,
            at.join(","),
            m,
            r
        )
    }
}

/// Compare `a` against the reference `reference`. NaN mismatches count as
/// infinite error.
pub fn compare(a: &GridBuffer, reference: &GridBuffer) -> Result<ComparisonReport, ExecError> {
    if a.shape != reference.shape || a.order != reference.order {
        return Err(ExecError::Compare(format!(
            "{} vs {}",
            describe(a.dtype, &a.shape, a.order),
            describe(reference.dtype, &reference.shape, reference.order)
        )));
    }
    let mut max_error = 0.0f64;
    let mut sum = 0.0f64;
    let mut worst = vec![0i64; a.dims()];
    let mut scale = 0.0f64;
    let mut points = 0usize;
    a.for_each_interior(|p, i| {
        let (x, y) = (a.get_flat(i), reference.get_flat(i));
        let e = if x == y || (x.is_nan() && y.is_nan()) {
            0.0
        } else if x.is_finite() && y.is_finite() {
            (x - y).abs()
        } else {
            f64::INFINITY
        };
        if e > max_error {
            max_error = e;
            worst = p.to_vec();
        }
        sum += e * e;
        if y.is_finite() {
            scale = scale.max(y.abs());
        }
        points += 1;
    });
    let rmsd = if points > 0 {
        (sum / points as f64).sqrt()
    } else {
        0.0
    };
    Ok(ComparisonReport {
        max_error,
        rmsd,
        worst,
        points,
        scale,
    })
}

/// Wall time of the pipeline phases.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProfileReport {
    pub frontend: Duration,
    pub codegen: Duration,
    pub execution: Duration,
}

impl ProfileReport {
    pub fn total(&self) -> Duration {
        self.frontend + self.codegen + self.execution
    }
}

impl fmt::Display for ProfileReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "frontend: {:.6} s", self.frontend.as_secs_f64())?;
        writeln!(f, "codegen: {:.6} s", self.codegen.as_secs_f64())?;
        writeln!(f, "execution: {:.6} s", self.execution.as_secs_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{lookup, program_source, Iterations};
    use crate::pipeline::{compile_source, Options, Plan};
    use crate::planning::parse_value;

    const LISTING: &str = include_str!("../../tests/fixtures/star2d4r_gpu.stpy");

    fn compiled(
        src: &str,
        binds: &[(&str, &str)],
        params: &[(&str, &str)],
    ) -> crate::pipeline::Compiled {
        let opts = Options {
            binds: binds
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), parse_value(v)))
                .collect(),
            ..Options::default()
        };
        compile_source(src, &opts).unwrap_or_else(|d| panic!("{d:?}"))
    }

    fn seeded(h: &HirTarget, seed: u64) -> Grids {
        let mut g = initial_grids(h);
        for (i, b) in g.values_mut().enumerate() {
            b.fill_log_uniform(seed + i as u64, 1e-4, 1e5);
        }
        g
    }

    fn f32s(g: &GridBuffer) -> &[f32] {
        f32::view(&g.data).unwrap()
    }

    /// Listing kernel written out by hand over a padded 12x12 f32 array.
    fn brute_force_star2d4r(
        u0: &[f32],
        v0: &[f32],
        n: usize,
        r: usize,
        steps: usize,
    ) -> (Vec<f32>, Vec<f32>) {
        let w = n + 2 * r;
        let (mut u, mut v) = (u0.to_vec(), v0.to_vec());
        let at = |a: &[f32], i: usize, j: usize, di: i64, dj: i64| {
            a[((i as i64 + di) as usize) * w + (j as i64 + dj) as usize]
        };
        for _ in 0..steps {
            for i in r..r + n {
                for j in r..r + n {
                    let x = 0.25005f32 * at(&u, i, j, 0, 0)
                        + 0.11111f32 * (at(&u, i, j, -4, 0) + at(&u, i, j, 4, 0))
                        + 0.06251f32 * (at(&u, i, j, -3, 0) + at(&u, i, j, 3, 0))
                        + 0.06255f32 * (at(&u, i, j, -2, 0) + at(&u, i, j, 2, 0))
                        + 0.06245f32 * (at(&u, i, j, -1, 0) + at(&u, i, j, 1, 0))
                        + 0.06248f32 * (at(&u, i, j, 0, -1) + at(&u, i, j, 0, 1))
                        + 0.06243f32 * (at(&u, i, j, 0, -2) + at(&u, i, j, 0, 2))
                        + 0.06253f32 * (at(&u, i, j, 0, -3) + at(&u, i, j, 0, 3))
                        - 0.22220f32 * (at(&u, i, j, 0, -4) + at(&u, i, j, 0, 4));
                    v[i * w + j] = x;
                }
            }
            std::mem::swap(&mut u, &mut v);
        }
        (u, v)
    }

    fn listing_12() -> String {
        LISTING.replace("(1000,1000)", "(12,12)")
    }

    #[test]
    fn listing_kernel_matches_brute_force_bitwise() {
        let c = compiled(&listing_12(), &[("iter", "3")], &[]);
        let mut g = seeded(&c.target, 7);
        let (eu, ev) = brute_force_star2d4r(f32s(&g["u"]), f32s(&g["v"]), 12, 4, 3);
        run_target(&c.target, &mut g).unwrap();
        assert_eq!(f32s(&g["u"]), eu.as_slice());
        assert_eq!(f32s(&g["v"]), ev.as_slice());
    }

    #[test]
    fn zero_grids_stay_zero() {
        let k = lookup("box2d2r").unwrap();
        let c = compiled(
            &program_source(&k, &[9, 7], Iterations::Fixed(3), "seq"),
            &[],
            &[],
        );
        let mut g = initial_grids(&c.target);
        run_target(&c.target, &mut g).unwrap();
        assert!(g
            .values()
            .all(|b| b.interior_values().iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn identity_kernel_with_two_swaps_restores_input() {
        let src = "import stencilpy as st\n\n@st.kernel\ndef k(a: st.grid, b: st.grid):\n    b.at(0, 0).set(a.at(0, 0))\n\n@st.target\ndef t(u: st.grid, v: st.grid):\n    for _i in range(2):\n        st.map(e=u.shape)(k)(u, v)\n        (v, u) = (u, v)\n\nu = st.grid(dtype=st.f64, shape=(5, 6), order=1)\nv = st.grid(dtype=st.f64, shape=(5, 6), order=1)\n";
        let c = compiled(src, &[], &[]);
        let mut g = seeded(&c.target, 3);
        let before = g["u"].clone();
        run_target(&c.target, &mut g).unwrap();
        assert_eq!(g["u"], before);
    }

    #[test]
    fn semi_matches_naive_on_listing_within_rounding() {
        let c = compiled(&listing_12(), &[("iter", "2")], &[]);
        let mut a = seeded(&c.target, 11);
        let mut b = a.clone();
        run_target(&c.target, &mut a).unwrap();
        run_semi(&c.target, &mut b).unwrap();
        let r = compare(&b["u"], &a["u"]).unwrap();
        assert!(r.within(1e-7, 1e-7), "{r}");
    }

    #[test]
    fn semi_is_exact_on_ordered_corpus_kernels() {
        for (name, ext) in [("star2d1r", vec![10, 10]), ("star3d4r", vec![8, 8, 8])] {
            let k = lookup(name).unwrap();
            let c = compiled(
                &program_source(&k, &ext, Iterations::Fixed(2), "seq"),
                &[],
                &[],
            );
            let mut a = seeded(&c.target, 5);
            let mut b = a.clone();
            run_target(&c.target, &mut a).unwrap();
            run_semi(&c.target, &mut b).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }

    #[test]
    fn semi_rejects_box_kernels() {
        let k = lookup("box2d1r").unwrap();
        let c = compiled(
            &program_source(&k, &[6, 6], Iterations::Fixed(1), "seq"),
            &[],
            &[],
        );
        let mut g = initial_grids(&c.target);
        assert!(matches!(
            run_semi(&c.target, &mut g),
            Err(ExecError::Plan { .. })
        ));
    }

    fn gpu_variant(name: &str, ext: &[usize], params: &[(&str, &str)]) {
        let k = lookup(name).unwrap();
        let src = program_source(&k, ext, Iterations::Fixed(2), "cuda");
        let c = compiled(&src, &[], params);
        let Plan::Gpu(plan) = &c.plan else { panic!() };
        let mut a = seeded(&c.target, 1);
        let mut b = a.clone();
        run_target(&c.target, &mut a).unwrap();
        run_tile_plan(&c.target, plan, &mut b).unwrap();
        assert_eq!(a, b, "{name} {params:?}");
    }

    #[test]
    fn gpu_templates_reproduce_naive_results() {
        gpu_variant(
            "star3d2r",
            &[16, 16, 16],
            &[("template", "gmem"), ("threadsPerBlock", "(8,8,8)")],
        );
        gpu_variant(
            "box3d2r",
            &[12, 11, 10],
            &[("template", "shift"), ("planeDims", "(4,4)")],
        );
        gpu_variant(
            "box3d1r",
            &[9, 9, 9],
            &[("template", "unroll"), ("prefetch", "True")],
        );
        gpu_variant(
            "star2d4r",
            &[16, 16],
            &[("template", "f4"), ("threadsPerBlock", "(4,4)")],
        );
        gpu_variant(
            "star2d3r",
            &[13, 12],
            &[("template", "f4"), ("threadsPerBlock", "(2,3)")],
        );
        gpu_variant(
            "box2d2r",
            &[10, 9],
            &[("template", "smem"), ("threadsPerBlock", "(4,4)")],
        );
        gpu_variant(
            "star3d3r",
            &[10, 9, 8],
            &[("template", "semi"), ("planeDims", "(4,4)")],
        );
        gpu_variant(
            "star2d2r",
            &[11, 9],
            &[("template", "semi"), ("planeDims", "(3,)")],
        );
    }

    #[test]
    fn omp_plans_reproduce_naive_results() {
        for (name, params) in [
            ("box3d1r", vec![("template", "loop")]),
            (
                "star3d2r",
                vec![
                    ("template", "loop_blocking_collapse"),
                    ("blockDims", "(4,3)"),
                ],
            ),
            (
                "star2d2r",
                vec![
                    ("template", "tasks_blocking"),
                    ("algorithm", "semi"),
                    ("blockDims", "(3,4)"),
                ],
            ),
        ] {
            let k = lookup(name).unwrap();
            let ext = vec![9; k.dims];
            let c = compiled(
                &program_source(&k, &ext, Iterations::Fixed(2), "omp"),
                &[],
                &params,
            );
            let Plan::Omp(plan) = &c.plan else { panic!() };
            let mut a = seeded(&c.target, 2);
            let mut b = a.clone();
            run_target(&c.target, &mut a).unwrap();
            run_omp_plan(&c.target, plan, &mut b).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }

    #[test]
    fn compare_reports_single_perturbation() {
        let mut a = GridBuffer::zeros(DType::F64, &[4, 5], 1);
        a.fill_log_uniform(9, 1.0, 2.0);
        let mut b = a.clone();
        let x = b.get(&[2, 3]);
        b.set(&[2, 3], x + 1e-6);
        let r = compare(&b, &a).unwrap();
        assert!((r.max_error - 1e-6).abs() < 1e-15);
        assert!((r.rmsd - 1e-6 / 20f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.worst, vec![2, 3]);
        assert!(
            r.to_string().starts_with("max=") && r.to_string().contains("at=(2,3) normalized max=")
        );
        let same = compare(&a, &a).unwrap();
        assert_eq!((same.max_error, same.rmsd), (0.0, 0.0));
        let other = GridBuffer::zeros(DType::F64, &[5, 4], 1);
        assert!(compare(&a, &other).is_err());
    }

    #[test]
    fn maps_never_touch_the_halo() {
        let k = lookup("box3d2r").unwrap();
        let c = compiled(
            &program_source(&k, &[6, 5, 4], Iterations::Fixed(2), "seq"),
            &[],
            &[],
        );
        let mut g = seeded(&c.target, 4);
        run_target(&c.target, &mut g).unwrap();
        assert!(g.values().all(|b| b.halo_is_zero()));
    }

    #[test]
    fn nonfinite_values_are_counted() {
        let src = "import stencilpy as st\n\n@st.kernel\ndef k(a: st.grid, b: st.grid):\n    b.at(0).set(a.at(0) / 0.0)\n\n@st.target\ndef t(u: st.grid, v: st.grid):\n    st.map(e=u.shape)(k)(u, v)\n\nu = st.grid(dtype=st.f32, shape=(4,), order=0)\nv = st.grid(dtype=st.f32, shape=(4,), order=0)\n";
        let c = compiled(src, &[], &[]);
        let mut g = seeded(&c.target, 1);
        let s = run_target(&c.target, &mut g).unwrap();
        assert_eq!(s.nonfinite, 4);
    }
}
