//! Circuit representation, a small line-based text format, the dependency
//! DAG and compilation to the native gate set `{rz(θ), rx90, rzx90, id}`.
//!
//! The text format has one gate per line: `name [params] qubit [qubit]`.
//! Parameters accept plain numbers and simple `pi` expressions (`pi/2`,
//! `-3*pi/4`). `#` starts a comment. An optional `qubits N` line fixes the
//! register size; otherwise it is one more than the largest index used.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{self, CMatrix};

pub mod benchmarks;

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    /// Virtual Z rotation, implemented in software with zero duration.
    Rz(f64),
    RxHalfPi,
    /// Cross-resonance `exp(-i π/4 σ_z ⊗ σ_x)`, σ_z on the first qubit.
    RzxHalfPi,
    Identity,
    Named { name: String, params: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GateRecord", from = "GateRecord")]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn rz(theta: f64, q: usize) -> Gate {
        Gate { kind: GateKind::Rz(theta), qubits: vec![q] }
    }

    pub fn rx90(q: usize) -> Gate {
        Gate { kind: GateKind::RxHalfPi, qubits: vec![q] }
    }

    pub fn rzx90(a: usize, b: usize) -> Gate {
        Gate { kind: GateKind::RzxHalfPi, qubits: vec![a, b] }
    }

    pub fn id(q: usize) -> Gate {
        Gate { kind: GateKind::Identity, qubits: vec![q] }
    }

    pub fn named(name: &str, params: Vec<f64>, qubits: Vec<usize>) -> Gate {
        let kind = match (name, params.as_slice(), qubits.len()) {
            ("rz", [theta], 1) => GateKind::Rz(*theta),
            ("rx90", [], 1) => GateKind::RxHalfPi,
            ("rzx90", [], 2) => GateKind::RzxHalfPi,
            ("id", [], 1) => GateKind::Identity,
            _ => GateKind::Named { name: name.to_string(), params },
        };
        Gate { kind, qubits }
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            GateKind::Rz(_) => "rz",
            GateKind::RxHalfPi => "rx90",
            GateKind::RzxHalfPi => "rzx90",
            GateKind::Identity => "id",
            GateKind::Named { name, .. } => name,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match &self.kind {
            GateKind::Rz(t) => vec![*t],
            GateKind::Named { params, .. } => params.clone(),
            _ => Vec::new(),
        }
    }

    pub fn is_native(&self) -> bool {
        !matches!(self.kind, GateKind::Named { .. })
    }

    pub fn is_virtual(&self) -> bool {
        matches!(self.kind, GateKind::Rz(_))
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits.len() == 2
    }

    /// Unitary on the gate's own qubits (in `qubits` order), if known.
    pub fn matrix(&self) -> Option<CMatrix> {
        let p = self.params();
        let m = match (self.name(), p.as_slice()) {
            ("rz", [t]) => quantum::rz(*t),
            ("rx90", []) => quantum::rx(PI / 2.0),
            ("rzx90", []) => quantum::rzx(PI / 2.0),
            ("rzx", [t]) => quantum::rzx(*t),
            ("id", []) => quantum::identity(2),
            ("h", []) => quantum::hadamard(),
            ("x", []) => quantum::pauli_x(),
            ("y", []) => quantum::pauli_y(),
            ("z", []) => quantum::pauli_z(),
            ("s", []) => quantum::phase(PI / 2.0),
            ("sdg", []) => quantum::phase(-PI / 2.0),
            ("t", []) => quantum::phase(PI / 4.0),
            ("tdg", []) => quantum::phase(-PI / 4.0),
            ("rx", [t]) => quantum::rx(*t),
            ("ry", [t]) => quantum::ry(*t),
            ("cx", []) => quantum::cnot(),
            ("cz", []) => quantum::cz(),
            ("cp", [t]) => quantum::cphase(*t),
            ("swap", []) => quantum::swap(),
            _ => return None,
        };
        (m.nrows() == 1 << self.qubits.len()).then_some(m)
    }
}

/// Serialized form of a [`Gate`].
#[derive(Serialize, Deserialize)]
struct GateRecord {
    name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<f64>,
    qubits: Vec<usize>,
}

impl From<Gate> for GateRecord {
    fn from(g: Gate) -> Self {
        GateRecord { name: g.name().to_string(), params: g.params(), qubits: g.qubits }
    }
}

impl From<GateRecord> for Gate {
    fn from(r: GateRecord) -> Self {
        Gate::named(&r.name, r.params, r.qubits)
    }
}

/// Gate durations in seconds for one pulse backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Durations {
    pub rx90: f64,
    pub identity: f64,
    pub rzx90: f64,
}

impl Default for Durations {
    fn default() -> Self {
        Durations { rx90: 20e-9, identity: 20e-9, rzx90: 80e-9 }
    }
}

impl Durations {
    /// Composite-pulse timings: a 120 ns rx90 and a 40 ns identity.
    pub fn dcg() -> Self {
        Durations { rx90: 120e-9, identity: 40e-9, rzx90: 80e-9 }
    }

    /// Duration of `g`. Non-native gates are charged as one rx90 or one rzx90.
    pub fn of(&self, g: &Gate) -> f64 {
        match g.kind {
            GateKind::Rz(_) => 0.0,
            GateKind::RxHalfPi => self.rx90,
            GateKind::Identity => self.identity,
            GateKind::RzxHalfPi => self.rzx90,
            GateKind::Named { .. } if g.is_two_qubit() => self.rzx90,
            GateKind::Named { .. } => self.rx90,
        }
    }
}

/// A gate list with its per-qubit dependency DAG.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

impl Circuit {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut last: Vec<Option<usize>> = vec![None; num_qubits];
        let mut preds = Vec::with_capacity(gates.len());
        let mut succs = vec![Vec::new(); gates.len()];
        for (i, g) in gates.iter().enumerate() {
            if g.qubits.is_empty() || g.qubits.len() > 2 {
                return Err(Error::Circuit(format!("gate {} acts on {} qubits", g.name(), g.qubits.len())));
            }
            if g.qubits.len() == 2 && g.qubits[0] == g.qubits[1] {
                return Err(Error::Circuit(format!("gate {} repeats qubit {}", g.name(), g.qubits[0])));
            }
            if let Some(&q) = g.qubits.iter().find(|&&q| q >= num_qubits) {
                return Err(Error::Circuit(format!("qubit {q} out of range for {num_qubits} qubits")));
            }
            if g.params().iter().any(|p| !p.is_finite()) {
                return Err(Error::Circuit(format!("gate {} has a non-finite parameter", g.name())));
            }
            let mut p: Vec<usize> = g.qubits.iter().filter_map(|&q| last[q]).collect();
            p.sort_unstable();
            p.dedup();
            for &j in &p {
                succs[j].push(i);
            }
            preds.push(p);
            for &q in &g.qubits {
                last[q] = Some(i);
            }
        }
        Ok(Circuit { num_qubits, gates, preds, succs })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Immediate predecessors of gate `i` (the previous gate on each of its qubits).
    pub fn predecessors(&self, i: usize) -> &[usize] {
        &self.preds[i]
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succs[i]
    }

    /// Gates not yet scheduled whose predecessors all are.
    pub fn schedulable(&self, scheduled: &[bool]) -> Vec<usize> {
        (0..self.gates.len())
            .filter(|&i| !scheduled[i] && self.preds[i].iter().all(|&p| scheduled[p]))
            .collect()
    }

    pub fn is_native(&self) -> bool {
        self.gates.iter().all(Gate::is_native)
    }

    pub fn parse(text: &str) -> Result<Circuit> {
        let mut declared: Option<usize> = None;
        let mut gates = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let tokens = tokenize(line);
            let name = tokens[0].to_ascii_lowercase();
            if name == "qubits" {
                if declared.is_some() || !gates.is_empty() {
                    return Err(err("'qubits' must appear once, before any gate".into()));
                }
                let n = tokens
                    .get(1)
                    .and_then(|t| t.parse::<usize>().ok())
                    .filter(|_| tokens.len() == 2)
                    .ok_or_else(|| err("expected 'qubits N'".into()))?;
                declared = Some(n);
                continue;
            }
            let rest = &tokens[1..];
            let (n_params, n_qubits) = match arity(&name) {
                Some(a) => a,
                None => {
                    let trailing = rest.iter().rev().take_while(|t| t.parse::<usize>().is_ok()).count().min(2);
                    if trailing == 0 {
                        return Err(err(format!("gate '{name}' has no qubit operands")));
                    }
                    (rest.len() - trailing, trailing)
                }
            };
            if rest.len() != n_params + n_qubits {
                return Err(err(format!(
                    "'{name}' takes {n_params} parameter(s) and {n_qubits} qubit(s), got {} operand(s)",
                    rest.len()
                )));
            }
            let params = rest[..n_params]
                .iter()
                .map(|t| parse_angle(t).ok_or_else(|| err(format!("bad parameter '{t}'"))))
                .collect::<Result<Vec<f64>>>()?;
            let qubits = rest[n_params..]
                .iter()
                .map(|t| t.parse::<usize>().map_err(|_| err(format!("bad qubit index '{t}'"))))
                .collect::<Result<Vec<usize>>>()?;
            if let Some(n) = declared {
                if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
                    return Err(err(format!("qubit {q} out of range for {n} qubits")));
                }
            }
            if qubits.len() == 2 && qubits[0] == qubits[1] {
                return Err(err(format!("'{name}' repeats qubit {}", qubits[0])));
            }
            gates.push(Gate::named(&name, params, qubits));
        }
        let n = declared.unwrap_or_else(|| {
            gates.iter().flat_map(|g| g.qubits.iter().copied()).max().map_or(0, |m| m + 1)
        });
        Circuit::new(n, gates)
    }

    /// Dense unitary of the whole circuit (at most 10 qubits).
    pub fn unitary(&self) -> Result<CMatrix> {
        if self.num_qubits > 10 {
            return Err(Error::Circuit(format!("{} qubits is too many for a dense unitary", self.num_qubits)));
        }
        let mut u = quantum::identity(1 << self.num_qubits);
        for g in &self.gates {
            let m = g
                .matrix()
                .ok_or_else(|| Error::Circuit(format!("no matrix for gate '{}'", g.name())))?;
            u = quantum::embed(&m, &g.qubits, self.num_qubits) * u;
        }
        Ok(u)
    }

    /// Rewrites every gate into `{rz, rx90, rzx90, id}`. Equal to the input
    /// up to a global phase.
    pub fn to_native(&self) -> Result<Circuit> {
        let mut out = Vec::new();
        for g in &self.gates {
            lower(g, &mut out)?;
        }
        Circuit::new(self.num_qubits, out)
    }

    /// Places logical qubit `q` on device qubit `layout[q]` of a
    /// `num_qubits`-qubit device.
    pub fn relabel(&self, layout: &[usize], num_qubits: usize) -> Result<Circuit> {
        if layout.len() < self.num_qubits {
            return Err(Error::Circuit(format!("layout covers {} of {} qubits", layout.len(), self.num_qubits)));
        }
        let gates = self
            .gates
            .iter()
            .map(|g| Gate { kind: g.kind.clone(), qubits: g.qubits.iter().map(|&q| layout[q]).collect() })
            .collect();
        Circuit::new(num_qubits, gates)
    }
}

fn tokenize(line: &str) -> Vec<String> {
    // `rz(0.5) 3` and `rz 0.5 3` are both accepted.
    let mut out = Vec::new();
    for tok in line.split_whitespace() {
        match tok.find('(') {
            Some(open) if tok.ends_with(')') => {
                out.push(tok[..open].to_string());
                out.extend(
                    tok[open + 1..tok.len() - 1]
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty()),
                );
            }
            _ => out.push(tok.trim_end_matches(',').to_string()),
        }
    }
    out
}

fn arity(name: &str) -> Option<(usize, usize)> {
    Some(match name {
        "h" | "x" | "y" | "z" | "s" | "sdg" | "t" | "tdg" | "id" | "rx90" => (0, 1),
        "rz" | "rx" | "ry" => (1, 1),
        "cx" | "cz" | "swap" | "rzx90" => (0, 2),
        "cp" | "rzx" => (1, 2),
        _ => return None,
    })
}

/// Parses a number or a product/quotient chain of numbers and `pi`.
pub fn parse_angle(text: &str) -> Option<f64> {
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, text.strip_prefix('+').unwrap_or(text)),
    };
    if body.is_empty() {
        return None;
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut start = 0;
    let chars: Vec<(usize, char)> = body.char_indices().collect();
    for k in 0..=chars.len() {
        let at_end = k == chars.len();
        let is_op = !at_end && (chars[k].1 == '*' || chars[k].1 == '/') && k > 0;
        if !(at_end || is_op) {
            continue;
        }
        let end = if at_end { body.len() } else { chars[k].0 };
        let term = body[start..end].trim();
        let factor = if term.eq_ignore_ascii_case("pi") { PI } else { term.parse::<f64>().ok()? };
        value = if op == '*' { value * factor } else { value / factor };
        if !at_end {
            op = chars[k].1;
            start = end + 1;
        }
    }
    let v = sign * value;
    v.is_finite().then_some(v)
}

fn lower(g: &Gate, out: &mut Vec<Gate>) -> Result<()> {
    if g.is_native() {
        out.push(g.clone());
        return Ok(());
    }
    let q = &g.qubits;
    let p = g.params();
    let (a, b) = (q[0], q.get(1).copied().unwrap_or(usize::MAX));
    let h = |out: &mut Vec<Gate>, t: usize| {
        out.push(Gate::rz(PI / 2.0, t));
        out.push(Gate::rx90(t));
        out.push(Gate::rz(PI / 2.0, t));
    };
    let cx = |out: &mut Vec<Gate>, a: usize, b: usize| {
        out.push(Gate::rz(PI, b));
        out.push(Gate::rzx90(a, b));
        out.push(Gate::rz(PI, b));
        out.push(Gate::rx90(b));
        out.push(Gate::rz(PI / 2.0, a));
    };
    let rx = |out: &mut Vec<Gate>, theta: f64, t: usize| {
        out.push(Gate::rz(PI / 2.0, t));
        out.push(Gate::rx90(t));
        out.push(Gate::rz(theta + PI, t));
        out.push(Gate::rx90(t));
        out.push(Gate::rz(PI / 2.0, t));
    };
    match (g.name(), p.as_slice(), q.len()) {
        ("h", [], 1) => h(out, a),
        ("x", [], 1) => {
            out.push(Gate::rx90(a));
            out.push(Gate::rx90(a));
        }
        ("y", [], 1) => {
            out.push(Gate::rx90(a));
            out.push(Gate::rx90(a));
            out.push(Gate::rz(PI, a));
        }
        ("z", [], 1) => out.push(Gate::rz(PI, a)),
        ("s", [], 1) => out.push(Gate::rz(PI / 2.0, a)),
        ("sdg", [], 1) => out.push(Gate::rz(-PI / 2.0, a)),
        ("t", [], 1) => out.push(Gate::rz(PI / 4.0, a)),
        ("tdg", [], 1) => out.push(Gate::rz(-PI / 4.0, a)),
        ("rx", [t], 1) => rx(out, *t, a),
        ("ry", [t], 1) => {
            out.push(Gate::rz(-PI / 2.0, a));
            rx(out, *t, a);
            out.push(Gate::rz(PI / 2.0, a));
        }
        ("cx", [], 2) => cx(out, a, b),
        ("cz", [], 2) => {
            h(out, b);
            cx(out, a, b);
            h(out, b);
        }
        ("cp", [t], 2) => {
            out.push(Gate::rz(t / 2.0, a));
            cx(out, a, b);
            out.push(Gate::rz(-t / 2.0, b));
            cx(out, a, b);
            out.push(Gate::rz(t / 2.0, b));
        }
        ("swap", [], 2) => {
            cx(out, a, b);
            cx(out, b, a);
            cx(out, a, b);
        }
        _ => return Err(Error::Circuit(format!("cannot decompose gate '{}'", g.name()))),
    }
    Ok(())
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        for p in self.params() {
            write!(f, " {p:?}")?;
        }
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.num_qubits)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}
