//! Map engines. Each computes the new values of one update over a box of
//! points and returns them in row-major order; the caller writes them back.

use rayon::prelude::*;

use super::grid::Geom;
use super::tape::{Real, Tape, V4};
use crate::analysis::{LinearForm, Region};
use crate::planning::{GpuPlan, GpuTemplate, OmpAlgorithm, OmpPlan};

pub type Ranges = Vec<(i64, i64)>;

/// Visit every point of a box in row-major order.
pub fn lex(ranges: &[(i64, i64)], mut f: impl FnMut(&[i64])) {
    if ranges.iter().any(|&(a, b)| a >= b) {
        return;
    }
    let mut p: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(&p);
        let mut d = ranges.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            p[d] += 1;
            if p[d] < ranges[d].1 {
                break;
            }
            p[d] = ranges[d].0;
        }
    }
}

pub fn volume(ranges: &[(i64, i64)]) -> usize {
    ranges
        .iter()
        .map(|&(a, b)| (b - a).max(0) as usize)
        .product()
}

fn box_geom(ranges: &[(i64, i64)]) -> Geom {
    Geom::new(
        ranges.iter().map(|r| r.0).collect(),
        ranges
            .iter()
            .map(|&(a, b)| (b - a).max(0) as usize)
            .collect(),
    )
}

#[derive(Clone, Copy)]
pub struct Src<'a, T> {
    pub data: &'a [T],
    pub geom: &'a Geom,
}

/// One signed, scaled read of a linear form.
#[derive(Debug, Clone)]
pub struct SemiTerm<T> {
    pub slot: usize,
    pub offset: Vec<i64>,
    pub coef: Option<T>,
    pub negate: bool,
}

impl<T: Real> SemiTerm<T> {
    #[inline]
    fn value(&self, x: T) -> T {
        match self.coef {
            Some(c) => c * x,
            None => x,
        }
    }

    #[inline]
    fn apply(&self, acc: T, x: T) -> T {
        if self.negate {
            acc - self.value(x)
        } else {
            acc + self.value(x)
        }
    }
}

/// Forward terms (lexicographically negative offsets, ascending) and the
/// remaining terms in expression order.
#[derive(Debug, Clone)]
pub struct SemiForm<T> {
    pub forward: Vec<SemiTerm<T>>,
    pub backward: Vec<SemiTerm<T>>,
    pub divisor: Option<T>,
}

impl<T: Real> SemiForm<T> {
    pub fn new(lf: &LinearForm, slots: &[String]) -> Self {
        let mut forward = Vec::new();
        let mut backward = Vec::new();
        for t in &lf.terms {
            let st = SemiTerm {
                slot: slots
                    .iter()
                    .position(|s| *s == t.grid)
                    .expect("term grid in slot list"),
                offset: t.offset.0.clone(),
                coef: t.coef.as_ref().map(|c| T::parse_lit(c.text())),
                negate: t.negate,
            };
            if t.offset.is_lex_negative() {
                forward.push(st);
            } else {
                backward.push(st);
            }
        }
        forward.sort_by(|a, b| a.offset.cmp(&b.offset));
        SemiForm {
            forward,
            backward,
            divisor: lf.divisor.as_ref().map(|d| T::parse_lit(d.text())),
        }
    }
}

/// Everything needed to evaluate one update at a point.
pub struct Job<'a, T> {
    pub tape: &'a Tape,
    pub consts: Vec<T>,
    pub srcs: Vec<Src<'a, T>>,
    /// Per slot, per dimension: largest `|offset|` read.
    pub reach: Vec<Vec<i64>>,
    pub semi: Option<SemiForm<T>>,
}

impl<'a, T: Real> Job<'a, T> {
    pub fn new(
        tape: &'a Tape,
        srcs: Vec<Src<'a, T>>,
        dims: usize,
        semi: Option<SemiForm<T>>,
    ) -> Self {
        let mut reach = vec![vec![0i64; dims]; srcs.len()];
        for (s, o) in &tape.loads {
            for d in 0..dims {
                reach[*s][d] = reach[*s][d].max(o[d].abs());
            }
        }
        Job {
            tape,
            consts: tape.constants(),
            srcs,
            reach,
            semi,
        }
    }

    #[inline]
    fn point(&self, srcs: &[Src<'_, T>], p: &[i64], stack: &mut Vec<T>) -> T {
        self.tape.eval(&self.consts, stack, |k| {
            let (s, o) = &self.tape.loads[k];
            let src = &srcs[*s];
            src.data[src.geom.flat_off(p, o)]
        })
    }

    fn point4(
        &self,
        srcs: &[Src<'_, T>],
        p: &[i64],
        consts: &[V4<T>],
        stack: &mut Vec<V4<T>>,
    ) -> V4<T> {
        self.tape.eval(consts, stack, |k| {
            let (s, o) = &self.tape.loads[k];
            let src = &srcs[*s];
            let i = src.geom.flat_off(p, o);
            V4([
                src.data[i],
                src.data[i + 1],
                src.data[i + 2],
                src.data[i + 3],
            ])
        })
    }

    fn semi_form(&self) -> &SemiForm<T> {
        self.semi.as_ref().expect("semi engine needs a linear form")
    }
}

/// Point-by-point evaluation over a box, reading global memory.
pub fn box_naive<T: Real>(job: &Job<'_, T>, ranges: &[(i64, i64)]) -> Vec<T> {
    let mut out = Vec::with_capacity(volume(ranges));
    let mut stack = Vec::new();
    lex(ranges, |p| out.push(job.point(&job.srcs, p, &mut stack)));
    out
}

/// Semi-stencil over a box: a forward sweep scatters every lexicographically
/// negative contribution into a partial array, then a backward sweep adds the
/// remaining terms.
pub fn box_semi<T: Real>(job: &Job<'_, T>, ranges: &[(i64, i64)]) -> Vec<T> {
    let form = job.semi_form();
    let pg = box_geom(ranges);
    let mut partial = vec![T::default(); pg.len()];
    let reach = (0..ranges.len())
        .map(|d| job.reach.iter().map(|r| r[d]).max().unwrap_or(0))
        .collect::<Vec<_>>();
    let ext: Ranges = ranges
        .iter()
        .zip(&reach)
        .map(|(&(a, b), &r)| (a - r, b + r))
        .collect();
    let mut p = vec![0i64; ranges.len()];
    lex(&ext, |q| {
        for t in &form.forward {
            for d in 0..q.len() {
                p[d] = q[d] - t.offset[d];
            }
            if pg.contains(&p) {
                let src = &job.srcs[t.slot];
                let i = pg.flat(&p);
                partial[i] = t.apply(partial[i], src.data[src.geom.flat(q)]);
            }
        }
    });
    let mut out = vec![T::default(); pg.len()];
    let mut pts = Vec::with_capacity(pg.len());
    lex(ranges, |p| pts.push(p.to_vec()));
    for p in pts.iter().rev() {
        let i = pg.flat(p);
        let mut acc = partial[i];
        for t in &form.backward {
            let src = &job.srcs[t.slot];
            acc = t.apply(acc, src.data[src.geom.flat_off(p, &t.offset)]);
        }
        if let Some(d) = form.divisor {
            acc = acc / d;
        }
        out[i] = acc;
    }
    out
}

/// Write box values produced by an engine back into the destination.
pub fn write_box<T: Copy>(dest: &mut [T], geom: &Geom, ranges: &[(i64, i64)], vals: &[T]) {
    let mut k = 0;
    lex(ranges, |p| {
        dest[geom.flat(p)] = vals[k];
        k += 1;
    });
}

pub fn run_naive<T: Real>(job: &Job<'_, T>, regions: &[Region], dest: &mut [T], dg: &Geom) {
    for r in regions {
        let v = box_naive(job, &r.ranges);
        write_box(dest, dg, &r.ranges, &v);
    }
}

pub fn run_semi<T: Real>(job: &Job<'_, T>, regions: &[Region], dest: &mut [T], dg: &Geom) {
    for r in regions {
        let v = box_semi(job, &r.ranges);
        write_box(dest, dg, &r.ranges, &v);
    }
}

/// OpenMP plan: the plan's blocks run in parallel, each conventionally or
/// with the semi-stencil sweeps confined to the block.
pub fn run_omp<T: Real>(
    job: &Job<'_, T>,
    plan: &OmpPlan,
    regions: &[Region],
    dest: &mut [T],
    dg: &Geom,
) {
    for r in regions {
        let blocks = plan.blocks(r);
        let vals: Vec<Vec<T>> = blocks
            .par_iter()
            .map(|b| match plan.algorithm {
                OmpAlgorithm::Conventional => box_naive(job, b),
                OmpAlgorithm::Semi => box_semi(job, b),
            })
            .collect();
        for (b, v) in blocks.iter().zip(&vals) {
            write_box(dest, dg, b, v);
        }
    }
}

/// GPU plan emulated block by block.
pub fn run_tile<T: Real>(
    job: &Job<'_, T>,
    plan: &GpuPlan,
    regions: &[Region],
    dest: &mut [T],
    dg: &Geom,
) {
    for r in regions {
        let tiles = plan.tiles(r);
        let vals: Vec<Vec<T>> = tiles
            .par_iter()
            .map(|t| match plan.template {
                GpuTemplate::Gmem => box_naive(job, t),
                GpuTemplate::F4 => tile_f4(job, t),
                GpuTemplate::Smem => tile_smem(job, t),
                GpuTemplate::Shift | GpuTemplate::Unroll => tile_stream(job, plan, t, false),
                GpuTemplate::Semi => tile_stream(job, plan, t, true),
            })
            .collect();
        for (t, v) in tiles.iter().zip(&vals) {
            write_box(dest, dg, t, v);
        }
    }
}

/// Each thread computes four consecutive innermost points as one vector;
/// a partial group at the tile edge falls back to scalar lanes.
fn tile_f4<T: Real>(job: &Job<'_, T>, t: &[(i64, i64)]) -> Vec<T> {
    let n = t.len();
    let consts4: Vec<V4<T>> = job.consts.iter().map(|c| c.splat4()).collect();
    let mut out = Vec::with_capacity(volume(t));
    let mut s1 = Vec::new();
    let mut s4 = Vec::new();
    let (a, b) = t[n - 1];
    let outer: Ranges = t[..n - 1].to_vec();
    let mut p = vec![0i64; n];
    let mut row = |q: &[i64]| {
        p[..n - 1].copy_from_slice(q);
        let mut x = a;
        while x < b {
            p[n - 1] = x;
            if x + 4 <= b {
                let v = job.point4(&job.srcs, &p, &consts4, &mut s4);
                out.extend_from_slice(&v.0);
                x += 4;
            } else {
                out.push(job.point(&job.srcs, &p, &mut s1));
                x += 1;
            }
        }
    };
    if n == 1 {
        row(&[]);
    } else {
        lex(&outer, |q| row(q));
    }
    out
}

/// Copy a box of a source (reads outside the source's storage are a bug).
fn load_box<T: Real>(src: &Src<'_, T>, ranges: &[(i64, i64)]) -> (Vec<T>, Geom) {
    let g = box_geom(ranges);
    let mut buf = Vec::with_capacity(g.len());
    lex(ranges, |q| buf.push(src.data[src.geom.flat(q)]));
    (buf, g)
}

/// Cooperative load of the tile plus halo into scratch, barrier, compute.
fn tile_smem<T: Real>(job: &Job<'_, T>, t: &[(i64, i64)]) -> Vec<T> {
    let scratch: Vec<(Vec<T>, Geom)> = job
        .srcs
        .iter()
        .enumerate()
        .map(|(s, src)| {
            let r: Ranges = t
                .iter()
                .zip(&job.reach[s])
                .map(|(&(a, b), &h)| (a - h, b + h))
                .collect();
            load_box(src, &r)
        })
        .collect();
    let srcs: Vec<Src<'_, T>> = scratch
        .iter()
        .map(|(d, g)| Src { data: d, geom: g })
        .collect();
    let mut out = Vec::with_capacity(volume(t));
    let mut stack = Vec::new();
    lex(t, |p| out.push(job.point(&srcs, p, &mut stack)));
    out
}

/// Window of planes along the streamed (outermost) dimension for one slot.
struct Window<T> {
    planes: Vec<Vec<T>>,
    geom: Geom,
    reach0: i64,
    /// Ring indexing (`unroll`/`semi`) instead of physical shifting.
    ring: bool,
    /// Plane held in slot 0 when shifting.
    base: i64,
}

impl<T: Real> Window<T> {
    fn slot(&self, q0: i64) -> usize {
        let w = self.planes.len() as i64;
        if self.ring {
            q0.rem_euclid(w) as usize
        } else {
            (q0 - self.base) as usize
        }
    }

    fn push(&mut self, q0: i64, plane: Vec<T>) {
        if self.ring {
            let s = self.slot(q0);
            self.planes[s] = plane;
            return;
        }
        let w = self.planes.len() as i64;
        if q0 - self.base >= w {
            // shift every plane down by one
            for k in 0..self.planes.len() - 1 {
                let (lo, hi) = self.planes.split_at_mut(k + 1);
                lo[k].copy_from_slice(&hi[0]);
            }
            self.base += 1;
        }
        let s = self.slot(q0);
        self.planes[s] = plane;
    }

    #[inline]
    fn get(&self, p: &[i64], o: &[i64]) -> T {
        let q0 = p[0] + o[0];
        debug_assert!((q0 - self.base).abs() <= 2 * self.reach0 || self.ring);
        self.planes[self.slot(q0)][self.geom.flat_off(&p[1..], &o[1..])]
    }
}

/// 2.5D (or 1.5D) streaming: walk the outermost dimension, holding
/// `2r + 1` planes per input. `semi` adds forward/backward partial sums.
fn tile_stream<T: Real>(job: &Job<'_, T>, plan: &GpuPlan, t: &[(i64, i64)], semi: bool) -> Vec<T> {
    let (a0, b0) = t[0];
    let staged_loads = plan.prefetch || plan.async_memcpy;
    let ring = plan.template != GpuTemplate::Shift;
    let plane_ranges: Vec<Ranges> = (0..job.srcs.len())
        .map(|s| {
            t[1..]
                .iter()
                .zip(&job.reach[s][1..])
                .map(|(&(a, b), &h)| (a - h, b + h))
                .collect()
        })
        .collect();
    let mut windows: Vec<Window<T>> = (0..job.srcs.len())
        .map(|s| {
            let r0 = job.reach[s][0];
            let g = box_geom(&plane_ranges[s]);
            Window {
                planes: vec![vec![T::default(); g.len()]; (2 * r0 + 1) as usize],
                geom: g,
                reach0: r0,
                ring,
                base: a0 - r0,
            }
        })
        .collect();
    let load_plane = |s: usize, q0: i64| -> Vec<T> {
        let src = &job.srcs[s];
        let mut buf = Vec::with_capacity(windows_len(&plane_ranges[s]));
        let mut full = vec![q0];
        lex(&plane_ranges[s], |q| {
            full.truncate(1);
            full.extend_from_slice(q);
            buf.push(src.data[src.geom.flat(&full)]);
        });
        buf
    };

    let out_g = box_geom(t);
    let mut out = vec![T::default(); out_g.len()];
    let mut partial = if semi {
        vec![T::default(); out_g.len()]
    } else {
        Vec::new()
    };
    let r0max = job.reach.iter().map(|r| r[0]).max().unwrap_or(0);
    let inner: Ranges = t[1..].to_vec();
    let mut stack = Vec::new();
    let mut staged: Vec<Option<(i64, Vec<T>)>> = vec![None; job.srcs.len()];

    // slot s receives plane z + r0(s) just before plane z is computed
    for z in a0 - 2 * r0max..b0 {
        for s in 0..job.srcs.len() {
            let r0 = job.reach[s][0];
            let qs = z + r0;
            if qs < a0 - r0 || qs >= b0 + r0 {
                continue;
            }
            let plane = if staged_loads {
                let cur = match staged[s].take() {
                    Some((q, p)) if q == qs => p,
                    _ => load_plane(s, qs),
                };
                if qs + 1 < b0 + r0 {
                    staged[s] = Some((qs + 1, load_plane(s, qs + 1)));
                }
                cur
            } else {
                load_plane(s, qs)
            };
            windows[s].push(qs, plane);
        }
        if semi {
            let form = job.semi_form();
            let mut p = vec![0i64; t.len()];
            let ri = r0max_inner(job);
            let ext: Ranges = t[1..].iter().map(|&(a, b)| (a - ri, b + ri)).collect();
            let mut scatter = |q: &[i64]| {
                for term in &form.forward {
                    let w = &windows[term.slot];
                    let qs = z + w.reach0;
                    if qs < a0 - w.reach0 || qs >= b0 + w.reach0 || !w.geom.contains(q) {
                        continue;
                    }
                    p[0] = qs - term.offset[0];
                    for d in 1..t.len() {
                        p[d] = q[d - 1] - term.offset[d];
                    }
                    if !out_g.contains(&p) {
                        continue;
                    }
                    let x = w.planes[w.slot(qs)][w.geom.flat(q)];
                    let i = out_g.flat(&p);
                    partial[i] = term.apply(partial[i], x);
                }
            };
            if ext.is_empty() {
                scatter(&[]);
            } else {
                lex(&ext, |q| scatter(q));
            }
        }
        if z < a0 || z >= b0 {
            continue;
        }
        let mut p = vec![z; t.len()];
        let row_pts = {
            let mut v = Vec::new();
            if inner.is_empty() {
                v.push(Vec::new());
            } else {
                lex(&inner, |q| v.push(q.to_vec()));
            }
            v
        };
        for q in row_pts {
            p[1..].copy_from_slice(&q);
            let i = out_g.flat(&p);
            out[i] = if semi {
                let form = job.semi_form();
                let mut acc = partial[i];
                for term in &form.backward {
                    acc = term.apply(acc, windows[term.slot].get(&p, &term.offset));
                }
                if let Some(d) = form.divisor {
                    acc = acc / d;
                }
                acc
            } else {
                job.tape.eval(&job.consts, &mut stack, |k| {
                    let (s, o) = &job.tape.loads[k];
                    windows[*s].get(&p, o)
                })
            };
        }
    }
    out
}

fn windows_len(r: &[(i64, i64)]) -> usize {
    volume(r)
}

fn r0max_inner<T>(job: &Job<'_, T>) -> i64 {
    job.reach
        .iter()
        .flat_map(|r| r[1..].iter().copied())
        .max()
        .unwrap_or(0)
}
