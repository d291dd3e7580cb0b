//! Compiles problems into self-organizing circuits: a small boolean circuit IR,
//! adders, the array multiplier for factorization and the subset-sum accumulator.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gate::GateKind;
use crate::netlist::{GateInst, Generator, Netlist, Node, NodeId, ReadoutGroup};

pub type Line = usize;

/// Default ramp time for generators emitted by the compiler.
pub const DEFAULT_RAMP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoolOp {
    And,
    Or,
    Xor,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoolGate {
    pub op: BoolOp,
    /// For `Not` only the first input is used.
    pub inputs: [Line; 2],
    pub out: Line,
}

/// A combinational circuit with constrained lines and named unknown groups.
/// Gates must be added in topological order.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BoolCircuit {
    pub labels: Vec<String>,
    pub gates: Vec<BoolGate>,
    pub constraints: BTreeMap<Line, bool>,
    /// Named unknown groups, most significant bit first.
    pub unknowns: Vec<(String, Vec<Line>)>,
    driven: Vec<bool>,
}

impl BoolCircuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn line(&mut self, label: impl Into<String>) -> Line {
        self.labels.push(label.into());
        self.driven.push(false);
        self.labels.len() - 1
    }

    pub fn n_lines(&self) -> usize {
        self.labels.len()
    }

    /// A fresh line pinned to `bit`.
    pub fn constant(&mut self, bit: bool) -> Line {
        let l = self.line(if bit { "one" } else { "zero" });
        self.constraints.insert(l, bit);
        l
    }

    pub fn constrain(&mut self, line: Line, bit: bool) -> Result<()> {
        match self.constraints.insert(line, bit) {
            Some(prev) if prev != bit => Err(Error::Contradiction(self.labels[line].clone())),
            _ => Ok(()),
        }
    }

    pub fn gate(&mut self, op: BoolOp, a: Line, b: Line) -> Line {
        let name = match op {
            BoolOp::And => "and",
            BoolOp::Or => "or",
            BoolOp::Xor => "xor",
            BoolOp::Not => "not",
        };
        let out = self.line(format!("{name}{}", self.gates.len()));
        self.driven[out] = true;
        self.gates.push(BoolGate { op, inputs: [a, b], out });
        out
    }

    pub fn and(&mut self, a: Line, b: Line) -> Line {
        self.gate(BoolOp::And, a, b)
    }
    pub fn or(&mut self, a: Line, b: Line) -> Line {
        self.gate(BoolOp::Or, a, b)
    }
    pub fn xor(&mut self, a: Line, b: Line) -> Line {
        self.gate(BoolOp::Xor, a, b)
    }
    pub fn not(&mut self, a: Line) -> Line {
        self.gate(BoolOp::Not, a, a)
    }

    /// Returns `(sum, carry)`.
    pub fn half_adder(&mut self, a: Line, b: Line) -> (Line, Line) {
        (self.xor(a, b), self.and(a, b))
    }

    /// Two XOR, two AND and one OR. Returns `(sum, carry)`.
    pub fn full_adder(&mut self, a: Line, b: Line, cin: Line) -> (Line, Line) {
        let t = self.xor(a, b);
        let s = self.xor(t, cin);
        let c1 = self.and(a, b);
        let c2 = self.and(t, cin);
        (s, self.or(c1, c2))
    }

    /// Adds one operand (`None` = constant 0) into bit `k` with an optional carry.
    fn add_bits(&mut self, ops: &[Option<Line>]) -> (Option<Line>, Option<Line>) {
        let present: Vec<Line> = ops.iter().flatten().copied().collect();
        match present.as_slice() {
            [] => (None, None),
            [a] => (Some(*a), None),
            [a, b] => {
                let (s, c) = self.half_adder(*a, *b);
                (Some(s), Some(c))
            }
            [a, b, c] => {
                let (s, co) = self.full_adder(*a, *b, *c);
                (Some(s), Some(co))
            }
            _ => unreachable!("at most three addends"),
        }
    }

    /// Ripple-adds two little-endian operands whose missing bits are constant 0.
    /// The result is one bit wider than the wider operand.
    pub fn ripple_add(&mut self, a: &[Option<Line>], b: &[Option<Line>]) -> Vec<Option<Line>> {
        let w = a.len().max(b.len());
        let mut out = Vec::with_capacity(w + 1);
        let mut carry = None;
        for k in 0..w {
            let (s, c) = self.add_bits(&[
                a.get(k).copied().flatten(),
                b.get(k).copied().flatten(),
                carry,
            ]);
            out.push(s);
            carry = c;
        }
        out.push(carry);
        out
    }

    /// OR-reduces the given lines into one line (the line itself if only one).
    pub fn or_tree(&mut self, lines: &[Line]) -> Option<Line> {
        let mut layer: Vec<Line> = lines.to_vec();
        if layer.is_empty() {
            return None;
        }
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            for ch in layer.chunks(2) {
                next.push(if ch.len() == 2 { self.or(ch[0], ch[1]) } else { ch[0] });
            }
            layer = next;
        }
        Some(layer[0])
    }

    /// Lines that are neither gate outputs nor constrained.
    pub fn free_inputs(&self) -> Vec<Line> {
        (0..self.n_lines())
            .filter(|&l| !self.driven[l] && !self.constraints.contains_key(&l))
            .collect()
    }

    /// Forward-propagates an assignment of the undriven lines. Returns every line
    /// value, or `None` when a source line is missing from `inputs`.
    pub fn propagate(&self, inputs: &BTreeMap<Line, bool>) -> Option<Vec<bool>> {
        let mut val = vec![None; self.n_lines()];
        for l in 0..self.n_lines() {
            if !self.driven[l] {
                val[l] = inputs.get(&l).copied().or_else(|| self.constraints.get(&l).copied());
            }
        }
        for g in &self.gates {
            let a = val[g.inputs[0]]?;
            let b = val[g.inputs[1]]?;
            val[g.out] = Some(match g.op {
                BoolOp::And => a & b,
                BoolOp::Or => a | b,
                BoolOp::Xor => a ^ b,
                BoolOp::Not => !a,
            });
        }
        val.into_iter().collect()
    }

    /// `true` iff propagating `inputs` meets every constraint.
    pub fn satisfied_by(&self, inputs: &BTreeMap<Line, bool>) -> bool {
        match self.propagate(inputs) {
            Some(v) => self.constraints.iter().all(|(&l, &b)| v[l] == b),
            None => false,
        }
    }

    /// Checks that every line value satisfies the gate relations and constraints.
    pub fn consistent(&self, values: &[bool]) -> bool {
        self.constraints.iter().all(|(&l, &b)| values[l] == b)
            && self.gates.iter().all(|g| {
                let (a, b) = (values[g.inputs[0]], values[g.inputs[1]]);
                values[g.out]
                    == match g.op {
                        BoolOp::And => a & b,
                        BoolOp::Or => a | b,
                        BoolOp::Xor => a ^ b,
                        BoolOp::Not => !a,
                    }
            })
    }
}

/// Output of [`compile_boolean`]: the netlist and the node of every source line.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub netlist: Netlist,
    pub line_nodes: Vec<NodeId>,
    pub circuit: BoolCircuit,
}

/// Lowers a boolean circuit to a netlist: one node per line, NOT as XOR with
/// a pinned logic-1 terminal, generators on constrained lines, auto VCDCGs.
pub fn compile_boolean(c: &BoolCircuit, ramp: f64) -> Result<Compiled> {
    let mut nodes: Vec<Node> = c
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| Node { id: i as NodeId, label: sanitize(l) })
        .collect();
    let mut generators: Vec<Generator> = c
        .constraints
        .iter()
        .map(|(&l, &b)| Generator { node: l as NodeId, level: if b { 1.0 } else { -1.0 }, ramp })
        .collect();
    let mut gates = Vec::with_capacity(c.gates.len());
    for g in &c.gates {
        let [a, b] = g.inputs.map(|l| l as NodeId);
        let out = g.out as NodeId;
        let inst = match g.op {
            BoolOp::And => GateInst { kind: GateKind::And, terms: [a, b, out] },
            BoolOp::Or => GateInst { kind: GateKind::Or, terms: [a, b, out] },
            BoolOp::Xor => GateInst { kind: GateKind::Xor, terms: [a, b, out] },
            BoolOp::Not => {
                let one = nodes.len() as NodeId;
                nodes.push(Node { id: one, label: format!("one_{out}") });
                generators.push(Generator { node: one, level: 1.0, ramp });
                GateInst { kind: GateKind::Xor, terms: [a, one, out] }
            }
        };
        gates.push(inst);
    }
    let readout = c
        .unknowns
        .iter()
        .map(|(name, lines)| ReadoutGroup {
            name: name.clone(),
            nodes: lines.iter().map(|&l| l as NodeId).collect(),
        })
        .collect();
    generators.sort_by_key(|g| g.node);
    let netlist = Netlist::build(nodes, gates, generators, None, readout)?;
    Ok(Compiled { netlist, line_nodes: (0..c.n_lines() as NodeId).collect(), circuit: c.clone() })
}

fn sanitize(label: &str) -> String {
    label.chars().map(|ch| if ch.is_whitespace() { '_' } else { ch }).collect()
}

/// Adder fragment: `a + b + cin = sum`, little-endian lines.
#[derive(Debug, Clone)]
pub struct AdderFragment {
    pub circuit: BoolCircuit,
    pub a: Vec<Line>,
    pub b: Vec<Line>,
    /// Carry-in, pinned to 0 (absent for the 1-bit half adder).
    pub cin: Option<Line>,
    /// `width + 1` sum lines, the last being the carry out.
    pub sum: Vec<Line>,
}

/// Ripple-carry adder: a half adder for width 1, otherwise `width` full adders
/// with a carry-in pinned to logic 0.
pub fn build_adder(width: usize) -> Result<AdderFragment> {
    if width == 0 {
        return Err(Error::Problem("adder width must be at least 1".into()));
    }
    let mut c = BoolCircuit::new();
    let a: Vec<Line> = (0..width).map(|i| c.line(format!("a{i}"))).collect();
    let b: Vec<Line> = (0..width).map(|i| c.line(format!("b{i}"))).collect();
    let mut sum = Vec::with_capacity(width + 1);
    let cin;
    if width == 1 {
        let (s, co) = c.half_adder(a[0], b[0]);
        sum.push(s);
        sum.push(co);
        cin = None;
    } else {
        let z = c.line("cin");
        c.constrain(z, false)?;
        let mut carry = z;
        for i in 0..width {
            let (s, co) = c.full_adder(a[i], b[i], carry);
            sum.push(s);
            carry = co;
        }
        sum.push(carry);
        cin = Some(z);
    }
    c.unknowns.push(("a".into(), a.iter().rev().copied().collect()));
    c.unknowns.push(("b".into(), b.iter().rev().copied().collect()));
    Ok(AdderFragment { circuit: c, a, b, cin, sum })
}

/// Adder run in reverse: the `width + 1` sum lines are pinned to `total`
/// and the operands are the unknowns.
pub fn compile_adder(width: usize, total: u64, ramp: f64) -> Result<Compiled> {
    let mut frag = build_adder(width)?;
    if total >= 1u64 << (width + 1) {
        return Err(Error::Problem(format!("sum {total} does not fit in {} bits", width + 1)));
    }
    for (k, &l) in frag.sum.iter().enumerate() {
        frag.circuit.constrain(l, (total >> k) & 1 == 1)?;
    }
    let mut out = compile_boolean(&frag.circuit, ramp)?;
    let m = &mut out.netlist.meta;
    m.insert("problem".into(), "adder".into());
    m.insert("width".into(), width.to_string());
    m.insert("sum".into(), total.to_string());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorSpec {
    pub n: u64,
    pub n_n: usize,
    pub n_p: usize,
    pub n_q: usize,
    /// Add OR constraints that forbid `p = 1` or `q = 1` when the widths would
    /// otherwise admit the trivial factorization.
    pub exclude_trivial: bool,
}

impl FactorSpec {
    /// Uses the bit length of `n` when `n_n` is `None`.
    pub fn new(n: u64, n_n: Option<usize>) -> Result<Self> {
        let bits = (64 - n.leading_zeros()) as usize;
        let n_n = n_n.unwrap_or(bits);
        if n < 1 {
            return Err(Error::Problem("n must be positive".into()));
        }
        // Below four bits the q operand would be a single bit.
        if !(4..=62).contains(&n_n) {
            return Err(Error::Problem(format!("n_n={n_n} outside 4..=62")));
        }
        if bits > n_n {
            return Err(Error::Problem(format!("n={n} needs {bits} bits but n_n={n_n}")));
        }
        Ok(Self { n, n_n, n_p: n_n - 1, n_q: n_n / 2, exclude_trivial: true })
    }

    /// Whether `p = n, q = 1` (or the swap) fits the operand widths.
    pub fn trivial_representable(&self) -> bool {
        self.n < (1u64 << self.n_p) || self.n < (1u64 << self.n_q)
    }
}

/// Array multiplier `p * q` with the product lines constrained to `n`.
/// Readout groups are `p` and `q`.
pub fn factorization_circuit(spec: &FactorSpec) -> Result<BoolCircuit> {
    let mut c = BoolCircuit::new();
    let p: Vec<Line> = (0..spec.n_p).map(|i| c.line(format!("p{i}"))).collect();
    let q: Vec<Line> = (0..spec.n_q).map(|j| c.line(format!("q{j}"))).collect();
    let width = spec.n_p + spec.n_q;
    let mut acc: Vec<Option<Line>> = vec![None; width];
    for (j, &qj) in q.iter().enumerate() {
        let mut row: Vec<Option<Line>> = vec![None; width];
        for (i, &pi) in p.iter().enumerate() {
            row[i + j] = Some(c.and(pi, qj));
        }
        if j == 0 {
            acc = row;
            continue;
        }
        // Bits below j pass through unchanged.
        let hi = c.ripple_add(&acc[j..], &row[j..]);
        for (k, bit) in hi.into_iter().enumerate() {
            if j + k < width {
                acc[j + k] = bit;
            } else if bit.is_some() {
                // A carry beyond the product width must be zero.
                c.constrain(bit.unwrap(), false)?;
            }
        }
    }
    for (k, bit) in acc.iter().enumerate() {
        let want = k < 64 && (spec.n >> k) & 1 == 1;
        match bit {
            Some(l) => c.constrain(*l, want)?,
            None if want => {
                return Err(Error::Problem(format!("bit {k} of n cannot be produced")));
            }
            None => {}
        }
    }
    if spec.exclude_trivial {
        if spec.n < (1u64 << spec.n_p) && spec.n_q >= 2 {
            let big = c.or_tree(&q[1..]).expect("non-empty");
            c.constrain(big, true)?;
        }
        if spec.n < (1u64 << spec.n_q) && spec.n_p >= 2 {
            let big = c.or_tree(&p[1..]).expect("non-empty");
            c.constrain(big, true)?;
        }
    }
    c.unknowns.push(("p".into(), p.iter().rev().copied().collect()));
    c.unknowns.push(("q".into(), q.iter().rev().copied().collect()));
    Ok(c)
}

pub fn compile_factorization(spec: &FactorSpec, ramp: f64) -> Result<Compiled> {
    let c = factorization_circuit(spec)?;
    let mut out = compile_boolean(&c, ramp)?;
    let m = &mut out.netlist.meta;
    m.insert("problem".into(), "factor".into());
    m.insert("n".into(), spec.n.to_string());
    m.insert("n_n".into(), spec.n_n.to_string());
    m.insert("n_p".into(), spec.n_p.to_string());
    m.insert("n_q".into(), spec.n_q.to_string());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetSumSpec {
    pub set: Vec<u64>,
    pub target: u64,
    /// Bits per element.
    pub p: usize,
    /// Output width: bits needed for the sum of all elements.
    pub w: usize,
    pub fold_constants: bool,
}

impl SubsetSumSpec {
    pub fn new(set: Vec<u64>, target: u64, p: Option<usize>) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Problem("empty set".into()));
        }
        if let Some(&z) = set.iter().find(|&&q| q == 0) {
            return Err(Error::Problem(format!("elements must be positive, got {z}")));
        }
        let maxbits = set.iter().map(|&q| (64 - q.leading_zeros()) as usize).max().unwrap();
        let p = p.unwrap_or(maxbits);
        if p < maxbits || p > 40 {
            return Err(Error::Problem(format!("precision p={p} cannot hold the elements")));
        }
        let total: u64 = set.iter().sum();
        let w = (64 - total.leading_zeros()) as usize;
        if target >= (1u64 << w) {
            return Err(Error::Problem(format!("target {target} does not fit in {w} output bits")));
        }
        Ok(Self { set, target, p, w, fold_constants: false })
    }

    /// `true` when only the empty subset can reach the target.
    pub fn is_trivial(&self) -> bool {
        self.target == 0
    }
}

/// Gated accumulator `sum_j c_j q_j` with the sum constrained to the target.
/// Readout group `c` lists `c_1 .. c_n` (first element first).
pub fn subset_sum_circuit(spec: &SubsetSumSpec) -> Result<BoolCircuit> {
    let mut c = BoolCircuit::new();
    let sel: Vec<Line> = (0..spec.set.len()).map(|j| c.line(format!("c{}", j + 1))).collect();
    let mut acc: Vec<Option<Line>> = Vec::new();
    for (j, &q) in spec.set.iter().enumerate() {
        let gated: Vec<Option<Line>> = (0..spec.p)
            .map(|k| {
                let bit = (q >> k) & 1 == 1;
                if spec.fold_constants {
                    bit.then_some(sel[j])
                } else {
                    let k_line = c.constant(bit);
                    Some(c.and(sel[j], k_line))
                }
            })
            .collect();
        acc = if j == 0 { gated } else { c.ripple_add(&acc, &gated) };
        // Trim constant-zero carries at the top.
        while acc.len() > spec.p && acc.last() == Some(&None) {
            acc.pop();
        }
    }
    for (k, bit) in acc.iter().enumerate() {
        let want = k < spec.w && (spec.target >> k) & 1 == 1;
        match bit {
            Some(l) => c.constrain(*l, want)?,
            None if want => return Err(Error::Problem(format!("sum bit {k} cannot be produced"))),
            None => {}
        }
    }
    c.unknowns.push(("c".into(), sel));
    Ok(c)
}

pub fn compile_subset_sum(spec: &SubsetSumSpec, ramp: f64) -> Result<Compiled> {
    if spec.is_trivial() {
        return Err(Error::Problem("target 0 admits only the empty subset".into()));
    }
    let c = subset_sum_circuit(spec)?;
    let mut out = compile_boolean(&c, ramp)?;
    let m = &mut out.netlist.meta;
    m.insert("problem".into(), "subset-sum".into());
    m.insert(
        "set".into(),
        spec.set.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
    );
    m.insert("target".into(), spec.target.to_string());
    m.insert("p".into(), spec.p.to_string());
    m.insert("w".into(), spec.w.to_string());
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateCountReport {
    pub and: usize,
    pub or: usize,
    pub xor: usize,
    pub total: usize,
    pub nodes: usize,
    pub free_nodes: usize,
    pub generators: usize,
    pub n_m: usize,
    pub n_dcg: usize,
    /// Dimension of the assembled state (free node voltages, memristor
    /// states, VCDCG currents and VCDCG `s` variables).
    pub state_dim: usize,
}

pub fn gate_count_report(n: &Netlist) -> GateCountReport {
    let st = n.validate().stats;
    GateCountReport {
        and: st.and_gates,
        or: st.or_gates,
        xor: st.xor_gates,
        total: st.gates,
        nodes: st.nodes,
        free_nodes: st.free_nodes,
        generators: st.generators,
        n_m: st.n_m,
        n_dcg: st.n_dcg,
        state_dim: st.free_nodes + st.n_m + 2 * st.n_dcg,
    }
}

/// Least-squares fit of `y = a x^b` in log space. Returns `(a, b, r2)`.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (b, a, r2) = linear_fit(&lx, &ly);
    (a.exp(), b, r2)
}

/// Ordinary least squares `y = slope x + intercept`. Returns `(slope, intercept, r2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}
