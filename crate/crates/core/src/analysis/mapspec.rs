//! Expansion of `map(...)` shorthand into explicit per-dimension 4-tuples.
//!
//! Each dimension is described by `(a0, a1, a2, a3)` splitting `[a0, a3)` into
//! a low boundary `[a0, a1)`, a middle `[a1, a2)` and a high boundary
//! `[a2, a3)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::diag::{Diagnostic, Pos};
use crate::frontend::{Bound, MapArg, MapSpecRaw};

const DIM_KEYS: [&str; 3] = ["i", "j", "k"];

/// Explicit map bounds whose entries may still reference symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymMapSpec {
    pub dims: Vec<[Bound; 4]>,
}

impl fmt::Display for SymMapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (d, b) in self.dims.iter().enumerate() {
            if d > 0 {
                f.write_str(", ")?;
            }
            write!(
                f,
                "{}=({}, {}, {}, {})",
                DIM_KEYS[d], b[0], b[1], b[2], b[3]
            )?;
        }
        Ok(())
    }
}

/// Concrete map bounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MapSpec {
    pub dims: Vec<[i64; 4]>,
}

impl MapSpec {
    /// Whole-domain spec without boundary intervals.
    pub fn full(extents: &[usize]) -> Self {
        MapSpec {
            dims: extents
                .iter()
                .map(|&e| [0, 0, e as i64, e as i64])
                .collect(),
        }
    }

    pub fn point_count(&self) -> u64 {
        self.dims.iter().map(|d| (d[3] - d[0]) as u64).product()
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (d, b) in self.dims.iter().enumerate() {
            if d > 0 {
                f.write_str(", ")?;
            }
            write!(
                f,
                "{}=({}, {}, {}, {})",
                DIM_KEYS[d], b[0], b[1], b[2], b[3]
            )?;
        }
        Ok(())
    }
}

/// Expand the shorthand forms. `dims` is needed only to expand `e=g.shape`;
/// when it is unknown the result for that form is empty.
pub fn desugar_map_symbolic(raw: &MapSpecRaw, dims: Option<usize>) -> Result<SymMapSpec, String> {
    let dim_args: Vec<&MapArg> = DIM_KEYS.iter().map_while(|k| raw.get(k)).collect();
    for (n, k) in DIM_KEYS.iter().enumerate() {
        if n >= dim_args.len() && raw.get(k).is_some() {
            return Err(format!(
                "map argument `{k}` given without `{}`",
                DIM_KEYS[n - 1]
            ));
        }
    }
    let e = raw.get("e");
    let w = raw.get("w");
    let width = |v: Option<&MapArg>| -> Result<Option<Bound>, String> {
        match v {
            None => Ok(None),
            Some(MapArg::Scalar(b)) => Ok(Some(b.clone())),
            Some(_) => Err("boundary width must be a scalar".to_string()),
        }
    };

    if dim_args.is_empty() {
        let extents: Vec<Bound> = match e {
            Some(MapArg::Tuple(items)) => items.clone(),
            Some(MapArg::Scalar(b)) => vec![b.clone()],
            Some(MapArg::Shape(g)) => match dims {
                Some(n) => (0..n).map(|d| Bound::shape_of(g, d)).collect(),
                None => Vec::new(),
            },
            None => return Err("map needs `i`/`j`/`k` or `e` arguments".to_string()),
        };
        if extents.len() > 3 {
            return Err("map supports at most 3 dimensions".to_string());
        }
        let p = width(w)?;
        return Ok(SymMapSpec {
            dims: extents
                .iter()
                .map(|x| split(&Bound::int(0), x, p.as_ref()))
                .collect(),
        });
    }

    let scalar_e = match e {
        None => None,
        Some(MapArg::Scalar(b)) => Some(b.clone()),
        Some(_) => return Err("`e` cannot give extents when `i`/`j`/`k` are present".to_string()),
    };
    let p = match (scalar_e, width(w)?) {
        (Some(_), Some(_)) => return Err("boundary width given by both `e` and `w`".to_string()),
        (a, b) => a.or(b),
    };

    let arity = |a: &MapArg| match a {
        MapArg::Scalar(_) => 1,
        MapArg::Tuple(t) => t.len(),
        MapArg::Shape(_) => 0,
    };
    let first = arity(dim_args[0]);
    if dim_args.iter().any(|a| arity(a) != first) {
        return Err("inconsistent arity between map dimensions".to_string());
    }
    let mut out = Vec::new();
    for a in dim_args {
        let d = match a {
            MapArg::Scalar(x) => split(&Bound::int(0), x, p.as_ref()),
            MapArg::Tuple(t) if t.len() == 2 => split(&t[0], &t[1], p.as_ref()),
            MapArg::Tuple(t) if t.len() == 4 => {
                if p.is_some() {
                    return Err(
                        "boundary width cannot be combined with explicit 4-tuples".to_string()
                    );
                }
                [t[0].clone(), t[1].clone(), t[2].clone(), t[3].clone()]
            }
            _ => {
                return Err(
                    "map dimension must be an extent, a (start, end) pair or a 4-tuple".to_string(),
                )
            }
        };
        out.push(d);
    }
    Ok(SymMapSpec { dims: out })
}

fn split(lo: &Bound, hi: &Bound, p: Option<&Bound>) -> [Bound; 4] {
    match p {
        None => [lo.clone(), lo.clone(), hi.clone(), hi.clone()],
        Some(p) => [lo.clone(), lo.add(p), hi.sub(p), hi.clone()],
    }
}

impl SymMapSpec {
    /// Evaluate against symbol values and check against the grid extents.
    /// A boundary width that swallows the middle interval is clamped and
    /// reported as a warning.
    pub fn eval(
        &self,
        env: &BTreeMap<String, i64>,
        extents: &[usize],
        pos: Pos,
    ) -> Result<(MapSpec, Vec<Diagnostic>), Diagnostic> {
        if self.dims.len() != extents.len() {
            return Err(Diagnostic::error(
                pos,
                format!(
                    "map has {} dimensions but the grid has {}",
                    self.dims.len(),
                    extents.len()
                ),
            ));
        }
        let mut warnings = Vec::new();
        let mut dims = Vec::new();
        for (d, (b, &ext)) in self.dims.iter().zip(extents).enumerate() {
            let mut v = [0i64; 4];
            for (slot, bound) in v.iter_mut().zip(b) {
                *slot = bound.eval(env).map_err(|m| Diagnostic::error(pos, m))?;
            }
            let key = DIM_KEYS[d];
            if v[0] < 0 || v[3] > ext as i64 || v[0] > v[3] {
                return Err(Diagnostic::error(
                    pos,
                    format!(
                        "map range {key}=[{}, {}) is outside the grid extent {ext}",
                        v[0], v[3]
                    ),
                ));
            }
            if v[1] < v[0] || v[2] > v[3] {
                return Err(Diagnostic::error(
                    pos,
                    format!("negative boundary width in dimension `{key}`"),
                ));
            }
            if v[1] > v[2] {
                warnings.push(Diagnostic::warning(
                    pos,
                    format!(
                        "boundary width exceeds half the extent in dimension `{key}`; inner region is empty"
                    ),
                ));
                v[1] = v[1].min(v[3]);
                v[2] = v[2].max(v[1]);
            }
            dims.push(v);
        }
        Ok((MapSpec { dims }, warnings))
    }
}

/// Desugar and evaluate in one step.
pub fn desugar_map(
    raw: &MapSpecRaw,
    env: &BTreeMap<String, i64>,
    extents: &[usize],
    pos: Pos,
) -> Result<(MapSpec, Vec<Diagnostic>), Diagnostic> {
    let sym =
        desugar_map_symbolic(raw, Some(extents.len())).map_err(|m| Diagnostic::error(pos, m))?;
    sym.eval(env, extents, pos)
}
