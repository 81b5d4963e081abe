//! Canonical benchmark kernels: star and box stencils of radius 1 to 4 in 2D
//! and 3D plus four Jacobi-style kernels, rendered as DSL source.
//!
//! Terms are summed in ascending lexicographic offset order. Star2d4r uses the
//! classic finite-difference weights; every other kernel draws its weights
//! from a seeded generator so the sources are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::Shape;

const SEED: u64 = 0x5713_2d4c;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusKernel {
    /// Kernel name, e.g. `box3d2r` or `j2d9pt-gol`.
    pub name: String,
    pub shape: Shape,
    pub dims: usize,
    pub radius: usize,
    /// Weighted sum divided by a constant.
    pub jacobi: bool,
    pub flops: u64,
}

impl CorpusKernel {
    /// Identifier usable in source (`-` replaced).
    pub fn ident(&self) -> String {
        self.name.replace('-', "_")
    }

    pub fn offsets(&self) -> Vec<Vec<i64>> {
        let r = self.radius as i64;
        let mut out: Vec<Vec<i64>> = vec![Vec::new()];
        for _ in 0..self.dims {
            out = out
                .into_iter()
                .flat_map(|o| {
                    (-r..=r).map(move |x| {
                        let mut o = o.clone();
                        o.push(x);
                        o
                    })
                })
                .collect();
        }
        if self.shape == Shape::Star {
            out.retain(|o| o.iter().filter(|&&x| x != 0).count() <= 1);
        }
        out
    }
}

fn entry(
    name: &str,
    shape: Shape,
    dims: usize,
    radius: usize,
    jacobi: bool,
    flops: u64,
) -> CorpusKernel {
    CorpusKernel {
        name: name.to_string(),
        shape,
        dims,
        radius,
        jacobi,
        flops,
    }
}

/// The twenty benchmark kernels with their reference FLOP counts.
pub fn benchmark_kernels() -> Vec<CorpusKernel> {
    let mut v = Vec::new();
    for (dims, flops) in [(2, [9, 17, 25, 33]), (3, [13, 25, 37, 49])] {
        for r in 1..=4 {
            v.push(entry(
                &format!("star{dims}d{r}r"),
                Shape::Star,
                dims,
                r,
                false,
                flops[r - 1],
            ));
        }
    }
    for (dims, flops) in [(2, [17, 49, 97, 161]), (3, [53, 249, 685, 1457])] {
        for r in 1..=4 {
            v.push(entry(
                &format!("box{dims}d{r}r"),
                Shape::Box,
                dims,
                r,
                false,
                flops[r - 1],
            ));
        }
    }
    v.push(entry("j2d5pt", Shape::Star, 2, 1, true, 10));
    v.push(entry("j2d9pt-gol", Shape::Box, 2, 1, true, 18));
    v.push(entry("j2d9pt", Shape::Star, 2, 2, true, 18));
    v.push(entry("j3d27pt", Shape::Box, 3, 1, true, 54));
    v
}

pub fn lookup(name: &str) -> Option<CorpusKernel> {
    benchmark_kernels()
        .into_iter()
        .find(|k| k.name == name || k.ident() == name)
}

fn star2d4r_weight(o: &[i64]) -> &'static str {
    match (o[0].abs(), o[1].abs()) {
        (0, 0) => "0.25005",
        (4, 0) => "0.11111",
        (3, 0) => "0.06251",
        (2, 0) => "0.06255",
        (1, 0) => "0.06245",
        (0, 1) => "0.06248",
        (0, 2) => "0.06243",
        (0, 3) => "0.06253",
        _ => "0.22220",
    }
}

/// Signed weights in offset order, as source literals plus a negation flag,
/// and the divisor for Jacobi kernels.
fn weights(k: &CorpusKernel) -> (Vec<(bool, String)>, Option<String>) {
    let offs = k.offsets();
    if k.name == "star2d4r" {
        let w = offs
            .iter()
            .map(|o| (o[0] == 0 && o[1].abs() == 4, star2d4r_weight(o).to_string()))
            .collect();
        return (w, None);
    }
    let idx = benchmark_kernels()
        .iter()
        .position(|t| t.name == k.name)
        .unwrap_or(0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + idx);
    if k.jacobi {
        let mut sum = 0.0;
        let w: Vec<(bool, String)> = offs
            .iter()
            .map(|_| {
                let c = rng.gen_range(10..160) as f64 / 10.0;
                sum += c;
                (false, format!("{c:.1}"))
            })
            .collect();
        return (w, Some(format!("{:.1}", sum.ceil() + 1.0)));
    }
    let raw: Vec<f64> = offs.iter().map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let w = raw
        .iter()
        .map(|c| (false, format!("{:.5}", (c / total).max(0.00001))))
        .collect();
    (w, None)
}

fn at(o: &[i64]) -> String {
    let parts: Vec<String> = o.iter().map(|x| x.to_string()).collect();
    format!("u.at({})", parts.join(", "))
}

/// `@st.kernel` definition of a corpus kernel.
pub fn kernel_source(k: &CorpusKernel) -> String {
    let offs = k.offsets();
    let (w, div) = weights(k);
    let zero = vec!["0"; k.dims].join(", ");
    let mut s = format!(
        "@st.kernel\ndef kernel_{}(u: st.grid, v: st.grid):\n",
        k.ident()
    );
    let open = if div.is_some() { "(" } else { "" };
    s.push_str(&format!("    v.at({zero}).set({open}"));
    for (n, (o, (neg, c))) in offs.iter().zip(&w).enumerate() {
        let term = format!("{c} * {}", at(o));
        if n == 0 {
            s.push_str(&term);
        } else {
            s.push_str(&format!(
                "\n        {} {term}",
                if *neg { "-" } else { "+" }
            ));
        }
    }
    if let Some(d) = div {
        s.push_str(&format!(")\n        / {d}"));
    }
    s.push_str(")\n");
    s
}

/// How the iteration count reaches the time loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Iterations {
    /// `range(T)` with a literal.
    Fixed(u64),
    /// `range(iter)` with `iter` passed by the launch statement.
    Launch(u64),
}

/// Complete module: kernel, time-loop target, grid declarations and a launch
/// statement for `backend` (`seq`, `omp`, `cuda`, `dataflow`).
pub fn program_source(
    k: &CorpusKernel,
    extents: &[usize],
    iters: Iterations,
    backend: &str,
) -> String {
    let mut s = String::from("import stencilpy as st\n\n");
    s.push_str(&kernel_source(k));
    let id = k.ident();
    let (param, bound, arg) = match iters {
        Iterations::Fixed(t) => (String::new(), t.to_string(), String::new()),
        Iterations::Launch(t) => (
            ", iter: st.i32".to_string(),
            "iter".to_string(),
            format!(", {t}"),
        ),
    };
    s.push_str(&format!(
        "\n@st.target\ndef target_{id}(u: st.grid, v: st.grid{param}):\n    for _t in range({bound}):\n        st.map(e=u.shape)(kernel_{id})(u, v)\n        (v, u) = (u, v)\n\n"
    ));
    let shape: Vec<String> = extents.iter().map(|e| e.to_string()).collect();
    for g in ["u", "v"] {
        s.push_str(&format!(
            "{g} = st.grid(dtype=st.f32, shape=({}), order={})\n",
            shape.join(", "),
            k.radius
        ));
    }
    s.push_str(&format!(
        "st.launch(backend=st.{backend}())(target_{id})(u, v{arg})\n"
    ));
    s
}
