//! Stencil point index patterns: where a neighbor value comes from on the
//! PE grid, named by quadrant plus distance along (`i`) and across (`j`) the
//! quadrant's axis.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

/// Compass direction on the PE grid; `N` is `+y`, `E` is `+x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    pub fn letter(self) -> char {
        match self {
            Dir::N => 'N',
            Dir::E => 'E',
            Dir::S => 'S',
            Dir::W => 'W',
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            Dir::N => "North",
            Dir::E => "East",
            Dir::S => "South",
            Dir::W => "West",
        }
    }

    pub fn from_word(s: &str) -> Option<Dir> {
        Dir::ALL
            .into_iter()
            .find(|d| d.word() == s || d.letter().to_string() == s)
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::N => Dir::S,
            Dir::E => Dir::W,
            Dir::S => Dir::N,
            Dir::W => Dir::E,
        }
    }

    /// Quarter turn clockwise: N→E→S→W→N.
    pub fn clockwise(self) -> Dir {
        match self {
            Dir::N => Dir::E,
            Dir::E => Dir::S,
            Dir::S => Dir::W,
            Dir::W => Dir::N,
        }
    }

    /// Quarter turn counterclockwise: N→W→S→E→N.
    pub fn counterclockwise(self) -> Dir {
        self.clockwise().opposite()
    }

    /// Unit step `(dx, dy)`.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Dir::N => (0, 1),
            Dir::E => (1, 0),
            Dir::S => (0, -1),
            Dir::W => (-1, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternId {
    Center,
    Quad { d: Dir, i: u32, j: u32 },
}

impl PatternId {
    pub fn quad(d: Dir, i: u32, j: u32) -> Self {
        PatternId::Quad { d, i, j }
    }

    /// Planar offset `(x, y)` that this pattern names.
    pub fn offset(self) -> (i64, i64) {
        match self {
            PatternId::Center => (0, 0),
            PatternId::Quad { d, i, j } => {
                let (i, j) = (i as i64, j as i64);
                match d {
                    Dir::N => (j, i),
                    Dir::E => (i, -j),
                    Dir::S => (-j, -i),
                    Dir::W => (-i, j),
                }
            }
        }
    }

    pub fn dir(self) -> Option<Dir> {
        match self {
            PatternId::Center => None,
            PatternId::Quad { d, .. } => Some(d),
        }
    }

    pub fn ij(self) -> (u32, u32) {
        match self {
            PatternId::Center => (0, 0),
            PatternId::Quad { i, j, .. } => (i, j),
        }
    }

    /// Same `(i, j)` in another quadrant.
    pub fn in_quadrant(self, d: Dir) -> Self {
        match self {
            PatternId::Center => PatternId::Center,
            PatternId::Quad { i, j, .. } => PatternId::Quad { d, i, j },
        }
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternId::Center => f.write_str("0"),
            PatternId::Quad { d, i, j } => write!(f, "{}{i}{j}", d.letter()),
        }
    }
}

impl FromStr for PatternId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "0" {
            return Ok(PatternId::Center);
        }
        let bad = || format!("malformed pattern id `{s}`");
        let mut chars = s.chars();
        let d = match chars.next() {
            Some('N') => Dir::N,
            Some('E') => Dir::E,
            Some('S') => Dir::S,
            Some('W') => Dir::W,
            _ => return Err(bad()),
        };
        let digits: Vec<u32> = chars
            .map(|c| c.to_digit(10))
            .collect::<Option<_>>()
            .ok_or_else(bad)?;
        match digits.as_slice() {
            [i, j] if *i >= 1 => Ok(PatternId::quad(d, *i, *j)),
            _ => Err(bad()),
        }
    }
}

/// Quadrant classification of a planar offset.
pub fn pattern_id_of(x: i64, y: i64) -> PatternId {
    let q = |d, i: i64, j: i64| PatternId::quad(d, i as u32, j as u32);
    if x == 0 && y == 0 {
        PatternId::Center
    } else if x >= 0 && y > 0 {
        q(Dir::N, y, x)
    } else if x > 0 && y <= 0 {
        q(Dir::E, x, -y)
    } else if x <= 0 && y < 0 {
        q(Dir::S, -y, -x)
    } else {
        q(Dir::W, -x, y)
    }
}

/// Patterns used by a kernel and the deepest Z reach of each.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatternSet {
    pub patterns: BTreeSet<PatternId>,
    pub zmax: BTreeMap<PatternId, u64>,
}

impl PatternSet {
    pub fn non_center(&self) -> impl Iterator<Item = PatternId> + '_ {
        self.patterns
            .iter()
            .copied()
            .filter(|p| *p != PatternId::Center)
    }
}

/// Project offsets onto the PE plane; the third component (if any) is the
/// Z reach within the local column. Offsets are `(x, y[, z])`.
pub fn annotate_zmax<'a>(offsets: impl IntoIterator<Item = &'a [i64]>) -> PatternSet {
    let mut set = PatternSet::default();
    for o in offsets {
        let x = o.first().copied().unwrap_or(0);
        let y = o.get(1).copied().unwrap_or(0);
        let z = o.get(2).copied().unwrap_or(0);
        let p = pattern_id_of(x, y);
        set.patterns.insert(p);
        let m = set.zmax.entry(p).or_insert(0);
        *m = (*m).max(z.unsigned_abs());
    }
    set
}
