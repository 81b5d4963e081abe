//! Dependency ordering of patterns and the SPMD communication schedule.

use std::collections::BTreeSet;
use std::fmt;

use super::pattern::{Dir, PatternId};

/// Ascending `(j, i)` within each quadrant; quadrants are interleaved by rank
/// in N, E, S, W order.
pub fn sort_dependencies(patterns: &BTreeSet<PatternId>) -> Vec<PatternId> {
    let mut per_quad: Vec<Vec<PatternId>> = Dir::ALL
        .iter()
        .map(|&d| {
            let mut v: Vec<PatternId> = patterns
                .iter()
                .copied()
                .filter(|p| p.dir() == Some(d))
                .collect();
            v.sort_by_key(|p| {
                let (i, j) = p.ij();
                (j, i)
            });
            v
        })
        .collect();
    let ranks = per_quad.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::new();
    for r in 0..ranks {
        for q in per_quad.iter_mut() {
            if let Some(p) = q.get(r) {
                out.push(*p);
            }
        }
    }
    out
}

/// Whether `a` must be delivered before `b` within one quadrant.
pub fn depends_on(b: PatternId, a: PatternId) -> bool {
    match (a, b) {
        (
            PatternId::Quad {
                d: da,
                i: ia,
                j: ja,
            },
            PatternId::Quad {
                d: db,
                i: ib,
                j: jb,
            },
        ) if da == db => (ja == jb && ib > ia) || (ja != jb && jb > ja),
        _ => false,
    }
}

/// Patterns that must be routed so every requested pattern can be delivered:
/// closed under the staging dependencies and under quarter rotations (the
/// four quadrants run the same step sequence in lock-step).
pub fn routing_closure(patterns: impl IntoIterator<Item = PatternId>) -> BTreeSet<PatternId> {
    let mut shapes: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut work: Vec<(u32, u32)> = patterns
        .into_iter()
        .filter(|p| *p != PatternId::Center)
        .map(|p| p.ij())
        .collect();
    while let Some((i, j)) = work.pop() {
        if !shapes.insert((i, j)) {
            continue;
        }
        if i > 1 {
            work.push((i - 1, j));
        } else if j > 0 {
            work.push((j, 0));
        }
    }
    shapes
        .into_iter()
        .flat_map(|(i, j)| Dir::ALL.map(|d| PatternId::quad(d, i, j)))
        .collect()
}

/// One quadrant's action within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CommAction {
    pub send: PatternId,
    pub send_to: Dir,
    pub recv_from: Dir,
    pub recv_into: PatternId,
}

/// One lock-step communication step, actions in N, E, S, W order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommStep {
    /// `(i, j)` shared by the four quadrants' target patterns.
    pub rank_ij: (u32, u32),
    pub actions: Vec<CommAction>,
}

impl CommStep {
    pub fn label(&self) -> String {
        format!("{}{}", self.rank_ij.0, self.rank_ij.1)
    }
}

pub fn action_for(p: PatternId) -> Option<CommAction> {
    let PatternId::Quad { d, i, j } = p else {
        return None;
    };
    let (send, send_to) = match (i, j) {
        (1, 0) => (PatternId::Center, d.opposite()),
        (1, j) => (PatternId::quad(d, j, 0), d.clockwise()),
        (i, j) => (PatternId::quad(d, i - 1, j), d.opposite()),
    };
    Some(CommAction {
        send,
        send_to,
        recv_from: d,
        recv_into: p,
    })
}

/// Group a dependency-sorted, rotation-closed pattern list into steps.
pub fn build_comm_schedule(ordered: &[PatternId]) -> Result<Vec<CommStep>, String> {
    let mut steps: Vec<CommStep> = Vec::new();
    for &p in ordered {
        let Some(a) = action_for(p) else { continue };
        let ij = p.ij();
        match steps.iter_mut().find(|s| s.rank_ij == ij) {
            Some(s) => s.actions.push(a),
            None => steps.push(CommStep {
                rank_ij: ij,
                actions: vec![a],
            }),
        }
    }
    for s in &steps {
        let dirs: Vec<Dir> = s.actions.iter().map(|a| a.recv_from).collect();
        if dirs != Dir::ALL {
            return Err(format!(
                "step {} does not cover all four quadrants; pattern set is not rotation-closed",
                s.label()
            ));
        }
    }
    Ok(steps)
}

impl fmt::Display for CommAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Send {} to {} / Receive from {} into {}",
            self.send,
            self.send_to.word(),
            self.recv_from.word(),
            self.recv_into
        )
    }
}

/// Table with one row per step and one column per quadrant.
pub fn render_schedule(steps: &[CommStep]) -> String {
    let mut rows: Vec<Vec<String>> = vec![vec![
        "step".into(),
        "N send".into(),
        "N receive".into(),
        "E send".into(),
        "E receive".into(),
        "S send".into(),
        "S receive".into(),
        "W send".into(),
        "W receive".into(),
    ]];
    for (k, s) in steps.iter().enumerate() {
        let mut row = vec![format!("{}", k + 1)];
        for a in &s.actions {
            row.push(format!("Send {} to {}", a.send, a.send_to.word()));
            row.push(format!(
                "Receive from {} into {}",
                a.recv_from.word(),
                a.recv_into
            ));
        }
        rows.push(row);
    }
    let cols = rows[0].len();
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .map(|r| r.get(c).map_or(0, String::len))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(s: &[&str]) -> BTreeSet<PatternId> {
        s.iter().map(|x| x.parse().unwrap()).collect()
    }

    fn names(v: &[PatternId]) -> Vec<String> {
        v.iter().map(|p| p.to_string()).collect()
    }

    #[test]
    fn chains_within_quadrant() {
        assert_eq!(
            names(&sort_dependencies(&ids(&["N20", "N10"]))),
            ["N10", "N20"]
        );
        assert_eq!(
            names(&sort_dependencies(&ids(&["E30", "E10", "E20"]))),
            ["E10", "E20", "E30"]
        );
        assert_eq!(
            names(&sort_dependencies(&ids(&["W22", "W21", "W10", "W20"]))),
            ["W10", "W20", "W21", "W22"]
        );
    }

    #[test]
    fn closure_adds_staging_and_rotations() {
        let c = routing_closure(ids(&["N12"]));
        let shapes: BTreeSet<(u32, u32)> = c.iter().map(|p| p.ij()).collect();
        assert_eq!(shapes, BTreeSet::from([(1, 0), (2, 0), (1, 2)]));
        assert_eq!(c.len(), 12);
    }

    #[test]
    fn incomplete_rotation_is_rejected() {
        let ordered = sort_dependencies(&ids(&["N10", "E10"]));
        assert!(build_comm_schedule(&ordered).is_err());
    }

    #[test]
    fn directions_within_a_step_are_distinct() {
        let all = routing_closure(ids(&["N44", "E43", "S22"]));
        let steps = build_comm_schedule(&sort_dependencies(&all)).unwrap();
        for s in steps {
            let sends: BTreeSet<Dir> = s.actions.iter().map(|a| a.send_to).collect();
            assert_eq!(sends.len(), 4);
            for a in &s.actions {
                assert!(s
                    .actions
                    .iter()
                    .any(|b| b.send_to == a.recv_from.opposite()));
            }
        }
    }
}
