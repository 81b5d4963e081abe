//! Line-oriented text format of `layout.df` and `program.df`.

use std::collections::{BTreeMap, BTreeSet};

use super::layout::{Margins, PeLayout};
use super::pattern::{Dir, PatternId, PatternSet};
use super::program::DataflowProgram;
use super::schedule::{CommAction, CommStep};
use super::ssa::{Operand, SsaOp, SsaProgram};
use super::state::{Guard, State, StateKind, StateMachine};
use crate::frontend::{DType, Literal};

pub const LAYOUT_FILE: &str = "layout.df";
pub const PROGRAM_FILE: &str = "program.df";

pub fn render_layout(p: &DataflowProgram) -> String {
    let mut s = String::from("# dataflow layout\n");
    s.push_str(&p.layout.to_string());
    s.push_str(&format!("program {PROGRAM_FILE}\n"));
    s.push_str(&format!("symbols {} {}\n", p.input, p.output));
    s
}

fn kind_word(k: StateKind) -> String {
    match k {
        StateKind::Setup => "setup".into(),
        StateKind::PrepTrans(i) => format!("prep {i}"),
        StateKind::Trans(i) => format!("trans {i}"),
        StateKind::Update => "update".into(),
        StateKind::Check => "check".into(),
        StateKind::Teardown => "teardown".into(),
        StateKind::Exit => "exit".into(),
    }
}

pub fn render_program(p: &DataflowProgram) -> String {
    let mut s = String::from("# dataflow program\n");
    s.push_str(&format!("kernel {}\n", p.kernel));
    s.push_str(&format!("dtype {}\n", p.dtype.name()));
    let ext: Vec<String> = p.extents.iter().map(|e| e.to_string()).collect();
    s.push_str(&format!("extents {}\n", ext.join(" ")));
    s.push_str(&format!("order {}\n", p.order));
    s.push_str(&format!(
        "input {}\noutput {}\nresult {}\n",
        p.input, p.output, p.result
    ));
    s.push_str(&format!("iterations {}\n", p.iterations));

    s.push_str("\n[patterns]\n");
    for pat in &p.patterns.patterns {
        s.push_str(&format!("{pat} zmax {}\n", p.patterns.zmax[pat]));
    }
    s.push_str("\n[routes]\n");
    for pat in &p.order_sorted {
        s.push_str(&format!(
            "{pat} from {}\n",
            pat.dir().map_or("-", |d| d.word())
        ));
    }
    s.push_str("\n[schedule]\n");
    for st in &p.schedule {
        let acts: Vec<String> = st.actions.iter().map(|a| a.to_string()).collect();
        s.push_str(&format!("step {}: {}\n", st.label(), acts.join(" | ")));
    }
    s.push_str("\n[states]\n");
    for st in &p.machine.states {
        let next: Vec<String> = st
            .next
            .iter()
            .map(|(g, to)| format!("{g}:{}", p.machine.states[*to].name))
            .collect();
        s.push_str(
            &format!("{} {} -> {}\n", st.name, kind_word(st.kind), next.join(" "))
                .replace(" \n", "\n"),
        );
    }
    s.push_str("\n[ssa]\n");
    s.push_str(&p.ssa.to_string());
    s
}

struct Lines<'a> {
    file: &'a str,
    items: Vec<(usize, &'a str)>,
    at: usize,
}

impl<'a> Lines<'a> {
    fn new(file: &'a str, text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Lines { file, items, at: 0 }
    }

    fn err(&self, line: usize, msg: impl std::fmt::Display) -> String {
        format!("{}:{line}: {msg}", self.file)
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.at).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let r = self.peek();
        self.at += 1;
        r
    }

    fn key(&mut self, key: &str) -> Result<(usize, &'a str), String> {
        match self.next() {
            Some((n, l)) => match l.split_once(' ') {
                Some((k, rest)) if k == key => Ok((n, rest.trim())),
                _ => Err(self.err(n, format!("expected `{key} ...`"))),
            },
            None => Err(format!(
                "{}: unexpected end of file, expected `{key}`",
                self.file
            )),
        }
    }

    fn section(&mut self, name: &str) -> Result<Vec<(usize, &'a str)>, String> {
        let header = format!("[{name}]");
        match self.next() {
            Some((_, l)) if l == header => {}
            Some((n, _)) => return Err(self.err(n, format!("expected section {header}"))),
            None => return Err(format!("{}: missing section {header}", self.file)),
        }
        let mut out = Vec::new();
        while let Some((n, l)) = self.peek() {
            if l.starts_with('[') {
                break;
            }
            out.push((n, l));
            self.at += 1;
        }
        Ok(out)
    }
}

fn num<T: std::str::FromStr>(lines: &Lines, n: usize, s: &str) -> Result<T, String> {
    s.parse()
        .map_err(|_| lines.err(n, format!("expected a number, got `{s}`")))
}

fn nums(lines: &Lines, n: usize, s: &str) -> Result<Vec<usize>, String> {
    s.split_whitespace().map(|x| num(lines, n, x)).collect()
}

pub fn parse_layout(text: &str) -> Result<PeLayout, String> {
    let mut l = Lines::new(LAYOUT_FILE, text);
    let (n, v) = l.key("fabric")?;
    let fabric = match nums(&l, n, v)?.as_slice() {
        [a, b] => (*a, *b),
        _ => return Err(l.err(n, "fabric needs two extents")),
    };
    let (n, v) = l.key("margins")?;
    let margins = match nums(&l, n, v)?.as_slice() {
        [a, b, c, d] => Margins {
            north: *a,
            east: *b,
            south: *c,
            west: *d,
        },
        _ => return Err(l.err(n, "margins needs four values")),
    };
    let (n, v) = l.key("active")?;
    let active = match nums(&l, n, v)?.as_slice() {
        [a, b] => (*a, *b),
        _ => return Err(l.err(n, "active needs two extents")),
    };
    let (n, v) = l.key("nz")?;
    let nz = num(&l, n, v)?;
    let (n, v) = l.key("elem_size")?;
    let elem_size = num(&l, n, v)?;
    let (n, v) = l.key("memory_budget")?;
    let memory_budget = num(&l, n, v)?;
    Ok(PeLayout {
        fabric,
        margins,
        active,
        nz,
        elem_size,
        memory_budget,
    })
}

fn parse_pattern(l: &Lines, n: usize, s: &str) -> Result<PatternId, String> {
    s.parse().map_err(|e: String| l.err(n, e))
}

fn parse_dir(l: &Lines, n: usize, s: &str) -> Result<Dir, String> {
    Dir::from_word(s).ok_or_else(|| l.err(n, format!("unknown direction `{s}`")))
}

fn parse_action(l: &Lines, n: usize, s: &str) -> Result<CommAction, String> {
    let w: Vec<&str> = s.split_whitespace().collect();
    match w.as_slice() {
        ["Send", p, "to", d, "/", "Receive", "from", r, "into", q] => Ok(CommAction {
            send: parse_pattern(l, n, p)?,
            send_to: parse_dir(l, n, d)?,
            recv_from: parse_dir(l, n, r)?,
            recv_into: parse_pattern(l, n, q)?,
        }),
        _ => Err(l.err(n, format!("malformed action `{s}`"))),
    }
}

fn parse_operand(l: &Lines, n: usize, s: &str) -> Result<Operand, String> {
    if let Some(c) = s.strip_prefix('#') {
        return Ok(Operand::Const(Literal(c.to_string())));
    }
    if let Some(t) = s.strip_prefix('t') {
        if let Ok(t) = t.parse() {
            return Ok(Operand::Temp(t));
        }
    }
    let (p, z) = s
        .strip_suffix(']')
        .and_then(|x| x.split_once('['))
        .ok_or_else(|| l.err(n, format!("malformed operand `{s}`")))?;
    Ok(Operand::Column {
        pattern: parse_pattern(l, n, p)?,
        zshift: num(l, n, z)?,
    })
}

fn parse_op(l: &Lines, n: usize, s: &str) -> Result<SsaOp, String> {
    let w: Vec<&str> = s.split_whitespace().collect();
    let op = |i: usize| -> Result<Operand, String> {
        w.get(i)
            .ok_or_else(|| l.err(n, "missing operand"))
            .and_then(|x| parse_operand(l, n, x))
    };
    let lit = |i: usize| -> Result<Literal, String> {
        w.get(i)
            .map(|x| Literal(x.to_string()))
            .ok_or_else(|| l.err(n, "missing constant"))
    };
    let flags = |from: usize| -> BTreeSet<&str> { w.iter().skip(from).copied().collect() };
    Ok(match w.first().copied() {
        Some("mul_const") => SsaOp::MulConst {
            c: lit(1)?,
            x: op(2)?,
            const_right: flags(3).contains("r"),
        },
        Some("fma") => {
            let f = flags(4);
            SsaOp::Fma {
                acc: op(1)?,
                c: lit(2)?,
                x: op(3)?,
                acc_right: f.contains("accr"),
                const_right: f.contains("r"),
            }
        }
        Some("add") => SsaOp::Add(op(1)?, op(2)?),
        Some("sub") => SsaOp::Sub(op(1)?, op(2)?),
        Some("mul") => SsaOp::Mul(op(1)?, op(2)?),
        Some("div") => SsaOp::Div(op(1)?, op(2)?),
        Some("neg") => SsaOp::Neg(op(1)?),
        Some("mov") => SsaOp::Mov(op(1)?),
        _ => return Err(l.err(n, format!("unknown SSA op `{s}`"))),
    })
}

fn parse_guard(l: &Lines, n: usize, s: &str) -> Result<Guard, String> {
    if s == "always" {
        Ok(Guard::Always)
    } else if let Some(t) = s.strip_prefix("iterations>=") {
        Ok(Guard::IterationsDone(num(l, n, t)?))
    } else if let Some(t) = s.strip_prefix("iterations<") {
        Ok(Guard::IterationsBelow(num(l, n, t)?))
    } else {
        Err(l.err(n, format!("unknown guard `{s}`")))
    }
}

/// Load a program from the text of its two files.
pub fn parse_program(layout_text: &str, program_text: &str) -> Result<DataflowProgram, String> {
    let layout = parse_layout(layout_text)?;
    let mut l = Lines::new(PROGRAM_FILE, program_text);
    let (_, kernel) = l.key("kernel")?;
    let (n, dt) = l.key("dtype")?;
    let dtype = match dt {
        "f32" => DType::F32,
        "f64" => DType::F64,
        _ => return Err(l.err(n, format!("unknown dtype `{dt}`"))),
    };
    let (n, v) = l.key("extents")?;
    let extents = nums(&l, n, v)?;
    let (n, v) = l.key("order")?;
    let order = num(&l, n, v)?;
    let (_, input) = l.key("input")?;
    let (_, output) = l.key("output")?;
    let (_, result) = l.key("result")?;
    let (n, v) = l.key("iterations")?;
    let iterations = num(&l, n, v)?;

    let mut patterns = PatternSet::default();
    for (n, line) in l.section("patterns")? {
        let w: Vec<&str> = line.split_whitespace().collect();
        let ["zmax", z] = w[1..] else {
            return Err(l.err(n, "expected `<pattern> zmax <n>`"));
        };
        let p = parse_pattern(&l, n, w[0])?;
        patterns.patterns.insert(p);
        patterns.zmax.insert(p, num(&l, n, z)?);
    }
    let mut order_sorted = Vec::new();
    for (n, line) in l.section("routes")? {
        let w: Vec<&str> = line.split_whitespace().collect();
        let p = parse_pattern(&l, n, w[0])?;
        if w.len() != 3 || w[1] != "from" || p.dir() != Dir::from_word(w[2]) {
            return Err(l.err(n, format!("malformed route `{line}`")));
        }
        order_sorted.push(p);
    }
    let mut schedule = Vec::new();
    for (n, line) in l.section("schedule")? {
        let (head, rest) = line
            .split_once(':')
            .ok_or_else(|| l.err(n, "expected `step <ij>: ...`"))?;
        let actions = rest
            .split('|')
            .map(|a| parse_action(&l, n, a.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        let rank_ij = actions.first().map(|a| a.recv_into.ij()).unwrap_or((0, 0));
        let step = CommStep { rank_ij, actions };
        if head.trim() != format!("step {}", step.label()) {
            return Err(l.err(n, format!("step label `{head}` does not match its actions")));
        }
        schedule.push(step);
    }
    let mut raw_states = Vec::new();
    for (n, line) in l.section("states")? {
        let (lhs, rhs) = line
            .split_once("->")
            .ok_or_else(|| l.err(n, "expected `->`"))?;
        let w: Vec<&str> = lhs.split_whitespace().collect();
        let kind = match w.as_slice() {
            [_, "setup"] => StateKind::Setup,
            [_, "prep", k] => StateKind::PrepTrans(num(&l, n, k)?),
            [_, "trans", k] => StateKind::Trans(num(&l, n, k)?),
            [_, "update"] => StateKind::Update,
            [_, "check"] => StateKind::Check,
            [_, "teardown"] => StateKind::Teardown,
            [_, "exit"] => StateKind::Exit,
            _ => return Err(l.err(n, format!("malformed state `{lhs}`"))),
        };
        if let StateKind::PrepTrans(k) | StateKind::Trans(k) = kind {
            if k >= schedule.len() {
                return Err(l.err(n, format!("state refers to missing schedule step {k}")));
            }
        }
        let mut next = Vec::new();
        for t in rhs.split_whitespace() {
            let (g, to) = t
                .split_once(':')
                .ok_or_else(|| l.err(n, format!("malformed transition `{t}`")))?;
            next.push((parse_guard(&l, n, g)?, to.to_string(), n));
        }
        raw_states.push((w[0].to_string(), kind, next));
    }
    let index: BTreeMap<String, usize> = raw_states
        .iter()
        .enumerate()
        .map(|(i, (name, _, _))| (name.clone(), i))
        .collect();
    let mut states = Vec::new();
    for (name, kind, next) in raw_states {
        let next = next
            .into_iter()
            .map(|(g, to, n)| {
                index
                    .get(&to)
                    .map(|&i| (g, i))
                    .ok_or_else(|| l.err(n, format!("transition to unknown state `{to}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        states.push(State { name, kind, next });
    }
    if states.first().map(|s| s.kind) != Some(StateKind::Setup) {
        return Err(format!(
            "{PROGRAM_FILE}: first state must be the setup state"
        ));
    }
    let mut ops = Vec::new();
    for (n, line) in l.section("ssa")? {
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| l.err(n, "expected `tK = op ...`"))?;
        if lhs.trim() != format!("t{}", ops.len()) {
            return Err(l.err(
                n,
                format!("SSA temps must be defined in order, found `{}`", lhs.trim()),
            ));
        }
        let op = parse_op(&l, n, rhs.trim())?;
        ops.push(op);
    }
    if let Some((n, _)) = l.peek() {
        return Err(l.err(n, "unexpected trailing content"));
    }
    for (k, op) in ops.iter().enumerate() {
        let bad = check_temps(op, k);
        if let Some(t) = bad {
            return Err(format!(
                "{PROGRAM_FILE}: SSA op t{k} uses t{t} before it is defined"
            ));
        }
    }
    if ops.is_empty() {
        return Err(format!("{PROGRAM_FILE}: empty SSA program"));
    }
    if layout.active.0 != extents[0] || layout.active.1 != extents.get(1).copied().unwrap_or(1) {
        return Err("layout active rectangle does not match program extents".to_string());
    }
    Ok(DataflowProgram {
        kernel: kernel.to_string(),
        dtype,
        routed: order_sorted.iter().copied().collect(),
        ssa: SsaProgram {
            ops,
            input: input.to_string(),
            dims: extents.len(),
        },
        extents,
        order,
        input: input.to_string(),
        output: output.to_string(),
        result: result.to_string(),
        iterations,
        patterns,
        order_sorted,
        schedule,
        machine: StateMachine { states, iterations },
        layout,
    })
}

fn check_temps(op: &SsaOp, k: usize) -> Option<usize> {
    let used = |o: &Operand| match o {
        Operand::Temp(t) if *t >= k => Some(*t),
        _ => None,
    };
    match op {
        SsaOp::MulConst { x, .. } | SsaOp::Neg(x) | SsaOp::Mov(x) => used(x),
        SsaOp::Add(a, b) | SsaOp::Sub(a, b) | SsaOp::Mul(a, b) | SsaOp::Div(a, b) => {
            used(a).or(used(b))
        }
        SsaOp::Fma { acc, x, .. } => used(acc).or(used(x)),
    }
}
