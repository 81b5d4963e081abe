//! Splitting a map domain into disjoint loop regions.

use std::fmt;

use super::MapSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Unified,
    CrossProduct,
    Slab7,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Unified => "unified",
            Scheme::CrossProduct => "cross_product",
            Scheme::Slab7 => "slab7",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "unified" => Some(Scheme::Unified),
            "cross_product" | "two_region" | "nine_region" => Some(Scheme::CrossProduct),
            "slab7" | "seven_region" => Some(Scheme::Slab7),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Position code per dimension: `0` low, `1` middle, `2` high, `3` full span.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionTag {
    Inner,
    Boundary(String),
}

impl fmt::Display for RegionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionTag::Inner => f.write_str("inner"),
            RegionTag::Boundary(c) => write!(f, "boundary_{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Region {
    /// Half-open `[lo, hi)` per dimension.
    pub ranges: Vec<(i64, i64)>,
    pub tag: RegionTag,
}

impl Region {
    pub fn size(&self) -> u64 {
        self.ranges.iter().map(|(a, b)| (b - a) as u64).product()
    }

    pub fn contains(&self, p: &[i64]) -> bool {
        self.ranges
            .iter()
            .zip(p)
            .all(|(&(a, b), &x)| a <= x && x < b)
    }

    pub fn loop_nest(&self, padded: &[usize], order: usize) -> LoopNest {
        let mut strides = vec![1usize; padded.len()];
        for d in (0..padded.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * padded[d + 1];
        }
        LoopNest {
            lower: self.ranges.iter().map(|r| r.0).collect(),
            upper: self.ranges.iter().map(|r| r.1).collect(),
            strides,
            order,
        }
    }

    /// Visit every point in lexicographic order.
    pub fn for_each_point(&self, mut f: impl FnMut(&[i64])) {
        if self.ranges.iter().any(|(a, b)| a >= b) {
            return;
        }
        let mut p: Vec<i64> = self.ranges.iter().map(|r| r.0).collect();
        loop {
            f(&p);
            let mut d = p.len();
            loop {
                if d == 0 {
                    return;
                }
                d -= 1;
                p[d] += 1;
                if p[d] < self.ranges[d].1 {
                    break;
                }
                p[d] = self.ranges[d].0;
            }
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag)?;
        for (a, b) in &self.ranges {
            write!(f, " [{a},{b})")?;
        }
        Ok(())
    }
}

/// Loop bounds and flattened strides for one region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopNest {
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
    /// Strides of the halo-padded array, last dimension contiguous.
    pub strides: Vec<usize>,
    pub order: usize,
}

impl LoopNest {
    pub fn iterations(&self) -> u64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (b - a).max(0) as u64)
            .product()
    }
}

fn interval(d: &[i64; 4], code: u8) -> (i64, i64) {
    match code {
        0 => (d[0], d[1]),
        1 => (d[1], d[2]),
        2 => (d[2], d[3]),
        _ => (d[0], d[3]),
    }
}

fn make(spec: &MapSpec, codes: &[u8]) -> Region {
    let ranges = spec
        .dims
        .iter()
        .zip(codes)
        .map(|(d, &c)| interval(d, c))
        .collect();
    let tag = if codes.iter().all(|&c| c == 1) {
        RegionTag::Inner
    } else {
        RegionTag::Boundary(codes.iter().map(|c| char::from(b'0' + c)).collect())
    };
    Region { ranges, tag }
}

pub fn decompose_regions(spec: &MapSpec, scheme: Scheme) -> Result<Vec<Region>, String> {
    let n = spec.dims.len();
    let mut regions = match scheme {
        Scheme::Unified => vec![Region {
            ranges: spec.dims.iter().map(|d| (d[0], d[3])).collect(),
            tag: RegionTag::Inner,
        }],
        Scheme::CrossProduct => {
            let mut codes: Vec<Vec<u8>> = vec![Vec::new()];
            for _ in 0..n {
                codes = codes
                    .into_iter()
                    .flat_map(|c| {
                        (0..3u8).map(move |k| {
                            let mut c = c.clone();
                            c.push(k);
                            c
                        })
                    })
                    .collect();
            }
            codes.iter().map(|c| make(spec, c)).collect()
        }
        Scheme::Slab7 => {
            if n != 3 {
                return Err(format!("slab7 decomposition needs a 3D map, got {n}D"));
            }
            [
                [1, 1, 1],
                [3, 3, 0],
                [3, 3, 2],
                [3, 0, 1],
                [3, 2, 1],
                [0, 1, 1],
                [2, 1, 1],
            ]
            .iter()
            .map(|c| make(spec, c))
            .collect()
        }
    };
    regions.retain(|r| r.size() > 0);
    regions.sort_by(|a, b| a.tag.cmp(&b.tag));
    Ok(regions)
}
