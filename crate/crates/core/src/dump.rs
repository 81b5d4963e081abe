//! Deterministic text dumps used by `inspect` and `--save-temps`.

use std::fmt::Write as _;

use crate::dataflow::render_dfir;
use crate::frontend::print_unit;
use crate::pipeline::{Compiled, Plan};

/// Validated source, reprinted.
pub fn vhir(c: &Compiled) -> String {
    print_unit(&c.unit)
}

pub fn hir(c: &Compiled) -> String {
    c.target.to_string()
}

/// Stencil facts per kernel and the region split of every map.
pub fn stencil(c: &Compiled) -> String {
    let mut s = String::new();
    let mut seen = Vec::new();
    for m in c.target.maps() {
        if seen.contains(&m.kernel) {
            continue;
        }
        seen.push(m.kernel.clone());
        let i = &m.info;
        let _ = writeln!(s, "kernel {}", i.kernel);
        let _ = writeln!(s, "  dims {}", i.dims);
        let _ = writeln!(s, "  shape {}", i.shape);
        let _ = writeln!(s, "  radius {}", i.radius);
        let _ = writeln!(s, "  points {}", i.point_count());
        let _ = writeln!(s, "  flops_per_point {}", i.flops_per_point);
        let _ = writeln!(s, "  writes {}", i.dests.join(" "));
        for (g, offs) in &i.offsets {
            let o: Vec<String> = offs.iter().map(|o| o.to_string()).collect();
            let _ = writeln!(s, "  reads {g} {}", o.join(" "));
        }
    }
    for (n, m) in c.target.maps().iter().enumerate() {
        let _ = writeln!(
            s,
            "map {n} {} [{}] points {}",
            m.kernel,
            m.spec,
            m.spec.point_count()
        );
        for r in &m.regions {
            let _ = writeln!(s, "  region {} size {}", r, r.size());
        }
    }
    s
}

pub fn plan(c: &Compiled) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config {}", c.config);
    for k in &c.mir {
        let _ = writeln!(s, "kernel {}", k.kernel);
        let _ = write!(s, "{}", k.symbols);
        let _ = writeln!(s, "blocking {}", k.blocking);
    }
    match &c.plan {
        Plan::Seq => s.push_str("plan seq\n"),
        Plan::Omp(p) => {
            let _ = writeln!(s, "plan {p}");
        }
        Plan::Gpu(p) => {
            let _ = writeln!(s, "plan {p}");
        }
        Plan::Dataflow(p) => {
            s.push_str("plan dataflow\n");
            s.push_str(&p.layout.to_string());
        }
    }
    s
}

pub fn dfir(c: &Compiled) -> Option<String> {
    match &c.plan {
        Plan::Dataflow(p) => Some(render_dfir(p)),
        _ => None,
    }
}
