//! Circuit data model and the line-oriented netlist text format (v1).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::GateKind;

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateInst {
    pub kind: GateKind,
    /// Node ids for T1, T2 and OUT.
    pub terms: [NodeId; 3],
}

/// Ideal voltage source pinning a node to `level * v_c`, ramped smoothly over `ramp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub node: NodeId,
    /// Target in units of `v_c`; `+1` encodes logic 1 and `-1` logic 0.
    pub level: f64,
    pub ramp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutGroup {
    pub name: String,
    /// Most significant bit first.
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Netlist {
    pub nodes: Vec<Node>,
    pub gates: Vec<GateInst>,
    pub generators: Vec<Generator>,
    pub vcdcg_nodes: Vec<NodeId>,
    pub readout: Vec<ReadoutGroup>,
    pub meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Stats {
    pub nodes: usize,
    pub gates: usize,
    pub and_gates: usize,
    pub or_gates: usize,
    pub xor_gates: usize,
    pub generators: usize,
    /// Memristor count, 12 per gate.
    pub n_m: usize,
    pub resistor_branches: usize,
    pub n_dcg: usize,
    /// Free (non-generator) node count.
    pub free_nodes: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub stats: Stats,
}

impl Diagnostics {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl Netlist {
    /// Builds and validates a netlist. With `vcdcgs == None` a VCDCG is placed on
    /// every non-generator node touched by a gate.
    pub fn build(
        nodes: Vec<Node>,
        gates: Vec<GateInst>,
        generators: Vec<Generator>,
        vcdcgs: Option<Vec<NodeId>>,
        readout: Vec<ReadoutGroup>,
    ) -> Result<Self> {
        let mut n = Netlist { nodes, gates, generators, vcdcg_nodes: vec![], readout, meta: BTreeMap::new() };
        n.vcdcg_nodes = match vcdcgs {
            Some(v) => v,
            None => n.auto_vcdcg_nodes(),
        };
        let d = n.validate();
        if !d.is_ok() {
            return Err(Error::Netlist(d.errors.join("; ")));
        }
        Ok(n)
    }

    /// Non-generator nodes touched by at least one gate terminal, in node order.
    pub fn auto_vcdcg_nodes(&self) -> Vec<NodeId> {
        let gen: BTreeSet<NodeId> = self.generators.iter().map(|g| g.node).collect();
        let touched: BTreeSet<NodeId> =
            self.gates.iter().flat_map(|g| g.terms.iter().copied()).collect();
        self.nodes
            .iter()
            .map(|n| n.id)
            .filter(|id| touched.contains(id) && !gen.contains(id))
            .collect()
    }

    pub fn node_label(&self, id: NodeId) -> Option<&str> {
        self.nodes.iter().find(|n| n.id == id).map(|n| n.label.as_str())
    }

    pub fn readout_group(&self, name: &str) -> Option<&ReadoutGroup> {
        self.readout.iter().find(|g| g.name == name)
    }

    pub fn validate(&self) -> Diagnostics {
        let mut d = Diagnostics::default();
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                d.errors.push(format!("duplicate node id {}", n.id));
            }
            if n.label.chars().any(char::is_whitespace) {
                d.errors.push(format!("node {} label contains whitespace", n.id));
            }
        }
        let mut gens = BTreeSet::new();
        for g in &self.generators {
            if !ids.contains(&g.node) {
                d.errors.push(format!("generator references missing node {}", g.node));
            }
            if !gens.insert(g.node) {
                d.errors.push(format!("node {} has more than one generator", g.node));
            }
            if !(g.ramp >= 0.0) || !g.level.is_finite() {
                d.errors.push(format!("generator on node {} has invalid level/ramp", g.node));
            }
        }
        let mut touched = BTreeSet::new();
        let mut per_kind = [0usize; 3];
        for (gi, g) in self.gates.iter().enumerate() {
            per_kind[g.kind as usize] += 1;
            for &t in &g.terms {
                if !ids.contains(&t) {
                    d.errors.push(format!("gate {gi} references missing node {t}"));
                }
                touched.insert(t);
            }
            if g.terms[0] == g.terms[2] || g.terms[1] == g.terms[2] || g.terms[0] == g.terms[1] {
                d.warnings.push(format!("gate {gi} ties two of its own terminals together"));
            }
        }
        let mut dcg = BTreeSet::new();
        for &v in &self.vcdcg_nodes {
            if !ids.contains(&v) {
                d.errors.push(format!("VCDCG on missing node {v}"));
            }
            if gens.contains(&v) {
                d.errors.push(format!("node {v} carries both a generator and a VCDCG"));
            }
            if !dcg.insert(v) {
                d.errors.push(format!("node {v} carries more than one VCDCG"));
            }
        }
        for &t in &touched {
            if !gens.contains(&t) && !dcg.contains(&t) {
                d.errors.push(format!("free gate node {t} has no VCDCG"));
            }
        }
        let mut names = BTreeSet::new();
        for r in &self.readout {
            if !names.insert(r.name.as_str()) {
                d.errors.push(format!("duplicate readout group {}", r.name));
            }
            for &v in &r.nodes {
                if !ids.contains(&v) {
                    d.errors.push(format!("readout {} references missing node {v}", r.name));
                } else if gens.contains(&v) {
                    d.errors.push(format!("readout {} references generator node {v}", r.name));
                }
            }
        }
        if self.gates.is_empty() {
            d.warnings.push("no gates".into());
        }
        let free = ids.iter().filter(|i| !gens.contains(i)).count();
        d.stats = Stats {
            nodes: self.nodes.len(),
            gates: self.gates.len(),
            and_gates: per_kind[0],
            or_gates: per_kind[1],
            xor_gates: per_kind[2],
            generators: self.generators.len(),
            n_m: 12 * self.gates.len(),
            resistor_branches: 3 * self.gates.len(),
            n_dcg: self.vcdcg_nodes.len(),
            free_nodes: free,
        };
        d
    }

    /// Renders the v1 text format.
    pub fn serialize(&self) -> String {
        let mut s = String::from("SOLC-NETLIST v1\n[NODES]\n");
        for n in &self.nodes {
            if n.label.is_empty() {
                let _ = writeln!(s, "{}", n.id);
            } else {
                let _ = writeln!(s, "{} {}", n.id, n.label);
            }
        }
        s.push_str("[GATES]\n");
        for g in &self.gates {
            let _ = writeln!(s, "{} {} {} {}", g.kind, g.terms[0], g.terms[1], g.terms[2]);
        }
        s.push_str("[GENERATORS]\n");
        for g in &self.generators {
            let _ = writeln!(s, "{} {:?} {:?}", g.node, g.level, g.ramp);
        }
        s.push_str("[VCDCG]\n");
        for v in &self.vcdcg_nodes {
            let _ = writeln!(s, "{v}");
        }
        s.push_str("[READOUT]\n");
        for r in &self.readout {
            s.push_str(&r.name);
            for v in &r.nodes {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        s.push_str("[META]\n");
        for (k, v) in &self.meta {
            let _ = writeln!(s, "{k} {v}");
        }
        s
    }

    /// Parses the v1 text format. Structural validity is checked separately by
    /// [`Netlist::validate`].
    pub fn deserialize(text: &str) -> Result<Self> {
        const SECTIONS: [&str; 6] = ["NODES", "GATES", "GENERATORS", "VCDCG", "READOUT", "META"];
        let mut n = Netlist::default();
        let mut seen: HashMap<&str, usize> = HashMap::new();
        let mut section: Option<&str> = None;
        let mut header_ok = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_ok {
                if line != "SOLC-NETLIST v1" {
                    return Err(err(format!("expected header 'SOLC-NETLIST v1', got {line:?}")));
                }
                header_ok = true;
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let sec = SECTIONS
                    .iter()
                    .find(|&&s| s == name)
                    .ok_or_else(|| err(format!("unknown section [{name}]")))?;
                if seen.insert(sec, line_no).is_some() {
                    return Err(err(format!("section [{name}] repeated")));
                }
                section = Some(sec);
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let id = |s: &str, what: &str| -> Result<NodeId> {
                s.parse().map_err(|_| err(format!("bad {what} {s:?}")))
            };
            let num = |s: &str, what: &str| -> Result<f64> {
                s.parse().map_err(|_| err(format!("bad {what} {s:?}")))
            };
            match section {
                None => return Err(err("record outside any section".into())),
                Some("NODES") => {
                    if fields.len() > 2 {
                        return Err(err("node record is 'id [label]'".into()));
                    }
                    n.nodes.push(Node {
                        id: id(fields[0], "node id")?,
                        label: fields.get(1).map(|s| s.to_string()).unwrap_or_default(),
                    });
                }
                Some("GATES") => {
                    if fields.len() != 4 {
                        return Err(err("gate record is 'KIND t1 t2 out'".into()));
                    }
                    let kind: GateKind = fields[0]
                        .parse()
                        .map_err(|_| err(format!("unknown gate kind {:?}", fields[0])))?;
                    n.gates.push(GateInst {
                        kind,
                        terms: [id(fields[1], "t1")?, id(fields[2], "t2")?, id(fields[3], "out")?],
                    });
                }
                Some("GENERATORS") => {
                    if fields.len() != 3 {
                        return Err(err("generator record is 'node level ramp_time'".into()));
                    }
                    n.generators.push(Generator {
                        node: id(fields[0], "node")?,
                        level: num(fields[1], "level")?,
                        ramp: num(fields[2], "ramp_time")?,
                    });
                }
                Some("VCDCG") => {
                    if fields.len() != 1 {
                        return Err(err("VCDCG record is a single node id".into()));
                    }
                    n.vcdcg_nodes.push(id(fields[0], "node")?);
                }
                Some("READOUT") => {
                    let nodes = fields[1..]
                        .iter()
                        .map(|f| id(f, "readout node"))
                        .collect::<Result<Vec<_>>>()?;
                    n.readout.push(ReadoutGroup { name: fields[0].to_string(), nodes });
                }
                Some("META") => {
                    let (k, v) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
                    n.meta.insert(k.to_string(), v.trim().to_string());
                }
                Some(_) => unreachable!(),
            }
        }
        let last = text.lines().count();
        if !header_ok {
            return Err(Error::Parse { line: last, msg: "missing header".into() });
        }
        for s in SECTIONS {
            if !seen.contains_key(s) {
                return Err(Error::Parse { line: last, msg: format!("missing section [{s}]") });
            }
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_and() -> Netlist {
        Netlist::build(
            (0..3).map(|i| Node { id: i, label: format!("n{i}") }).collect(),
            vec![GateInst { kind: GateKind::And, terms: [0, 1, 2] }],
            vec![Generator { node: 2, level: 1.0, ramp: 0.1 }],
            None,
            vec![ReadoutGroup { name: "in".into(), nodes: vec![0, 1] }],
        )
        .unwrap()
    }

    #[test]
    fn auto_placement_skips_generators() {
        let n = one_and();
        assert_eq!(n.vcdcg_nodes, vec![0, 1]);
        assert_eq!(n.validate().stats.n_m, 12);
    }

    #[test]
    fn structural_errors() {
        let nodes: Vec<Node> = (0..3).map(|i| Node { id: i, label: String::new() }).collect();
        let bad_gate = vec![GateInst { kind: GateKind::Or, terms: [0, 1, 7] }];
        assert!(Netlist::build(nodes.clone(), bad_gate, vec![], None, vec![]).is_err());
        let g = vec![GateInst { kind: GateKind::Or, terms: [0, 1, 2] }];
        let gen = vec![Generator { node: 2, level: -1.0, ramp: 0.0 }];
        assert!(Netlist::build(nodes, g, gen, Some(vec![0, 1, 2]), vec![]).is_err());
    }

    #[test]
    fn text_round_trip_and_truncation() {
        let mut n = one_and();
        n.meta.insert("problem".into(), "demo run".into());
        let text = n.serialize();
        assert_eq!(Netlist::deserialize(&text).unwrap(), n);
        let cut: String = text.lines().take_while(|l| *l != "[READOUT]").map(|l| format!("{l}\n")).collect();
        let e = Netlist::deserialize(&cut).unwrap_err();
        assert!(e.to_string().contains("READOUT"), "{e}");
        let bad = text.replace("AND", "NAND");
        assert!(Netlist::deserialize(&bad).unwrap_err().to_string().contains("NAND"));
    }

    #[test]
    fn empty_warns() {
        assert!(Netlist::default().validate().warnings.iter().any(|w| w == "no gates"));
    }
}
