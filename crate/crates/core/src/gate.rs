//! Self-organizing logic gates: the universal three-terminal gate built from
//! dynamic correction modules, its coefficient tables and static checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::device::Device;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    And,
    Or,
    Xor,
}

impl GateKind {
    pub const ALL: [GateKind; 3] = [GateKind::And, GateKind::Or, GateKind::Xor];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Xor => "XOR",
        }
    }

    /// Boolean function of the gate.
    pub fn eval(self, a: bool, b: bool) -> bool {
        match self {
            GateKind::And => a & b,
            GateKind::Or => a | b,
            GateKind::Xor => a ^ b,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().trim_start_matches("SO_") {
            "AND" => Ok(GateKind::And),
            "OR" => Ok(GateKind::Or),
            "XOR" => Ok(GateKind::Xor),
            other => Err(Error::Netlist(format!("unknown gate kind {other:?}"))),
        }
    }
}

/// `true` iff `bo` is the gate's output for inputs `(b1, b2)`.
pub fn truth_check(kind: GateKind, b1: bool, b2: bool, bo: bool) -> bool {
    kind.eval(b1, b2) == bo
}

pub const TERMINALS: [&str; 3] = ["T1", "T2", "OUT"];
pub const BRANCHES: [&str; 5] = ["LM1", "LM2", "LM3", "LM4", "LR"];

/// Number of memristors per terminal.
pub const MEMS_PER_TERMINAL: usize = 4;
/// Number of memristors per gate.
pub const MEMS_PER_GATE: usize = 12;

/// Orientation of each memristor relative to the branch drop `v_t - L`.
/// M1 and M2 see the drop directly, M3 and M4 see it reversed.
pub const MEM_POLARITY: [f64; 4] = [1.0, 1.0, -1.0, -1.0];

/// Coefficients `(a1, a2, ao, dc)` of one controlled source, `dc` in units of `v_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coeffs {
    pub a1: f64,
    pub a2: f64,
    pub ao: f64,
    pub dc: f64,
}

const fn c(a1: f64, a2: f64, ao: f64, dc: f64) -> Coeffs {
    Coeffs { a1, a2, ao, dc }
}

impl Coeffs {
    pub fn eval(&self, v: [f64; 3], v_c: f64) -> f64 {
        self.a1 * v[0] + self.a2 * v[1] + self.ao * v[2] + self.dc * v_c
    }

    pub fn grad(&self) -> [f64; 3] {
        [self.a1, self.a2, self.ao]
    }
}

/// `[terminal][branch]` coefficient block of one gate kind.
pub type GateTable = [[Coeffs; 5]; 3];

const AND_TABLE: GateTable = [
    [c(0., -1., 1., 1.), c(1., 0., 0., 0.), c(0., 0., 1., 0.), c(1., 0., 0., 0.), c(4., 1., -3., -1.)],
    [c(-1., 0., 1., 1.), c(0., 1., 0., 0.), c(0., 0., 1., 0.), c(0., 1., 0., 0.), c(1., 4., -3., -1.)],
    [c(1., 0., 0., 0.), c(0., 1., 0., 0.), c(0., 0., 1., 0.), c(2., 2., -1., -2.), c(-4., -4., 7., 2.)],
];

const OR_TABLE: GateTable = [
    [c(0., 0., 1., 0.), c(1., 0., 0., 0.), c(0., -1., 1., -1.), c(1., 0., 0., 0.), c(4., 1., -3., 1.)],
    [c(0., 0., 1., 0.), c(0., 1., 0., 0.), c(-1., 0., 1., -1.), c(0., 1., 0., 0.), c(1., 4., -3., 1.)],
    [c(0., 0., 1., 0.), c(2., 2., -1., 2.), c(1., 0., 0., 0.), c(0., 1., 0., 0.), c(-4., -4., 7., -2.)],
];

const XOR_TABLE: GateTable = [
    [c(0., -1., -1., 1.), c(0., 1., 1., 1.), c(0., -1., 1., -1.), c(0., 1., -1., -1.), c(6., 0., -1., 0.)],
    [c(-1., 0., -1., 1.), c(1., 0., 1., 1.), c(-1., 0., 1., -1.), c(1., 0., -1., -1.), c(0., 6., -1., 0.)],
    [c(-1., -1., 0., 1.), c(1., 1., 0., 1.), c(-1., 1., 0., -1.), c(1., -1., 0., -1.), c(-1., -1., 7., 0.)],
];

/// Coefficient tables for all three gate kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateTables {
    tables: [GateTable; 3],
}

impl Default for GateTables {
    fn default() -> Self {
        Self { tables: [AND_TABLE, OR_TABLE, XOR_TABLE] }
    }
}

impl GateTables {
    pub fn table(&self, kind: GateKind) -> &GateTable {
        &self.tables[kind.index()]
    }

    pub fn coeffs(&self, kind: GateKind, terminal: usize, branch: usize) -> Coeffs {
        self.tables[kind.index()][terminal][branch]
    }

    /// Applies `gate.<KIND>.<TERM>.<BRANCH>.<field>=value` overrides found in a
    /// key=value text; other keys are ignored.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let Some((k, v)) = line.split_once('=') else { continue };
            let k = k.trim();
            let Some(rest) = k.strip_prefix("gate.") else { continue };
            let parts: Vec<&str> = rest.split('.').collect();
            let bad = || Error::Params(format!("bad gate override key {k:?}"));
            if parts.len() != 4 {
                return Err(bad());
            }
            let kind: GateKind = parts[0].parse().map_err(|_| bad())?;
            let t = TERMINALS.iter().position(|&n| n == parts[1]).ok_or_else(bad)?;
            let b = BRANCHES.iter().position(|&n| n == parts[2]).ok_or_else(bad)?;
            let val: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Params(format!("bad value for {k}: {v:?}")))?;
            let slot = &mut self.tables[kind.index()][t][b];
            match parts[3] {
                "a1" => slot.a1 = val,
                "a2" => slot.a2 = val,
                "ao" => slot.ao = val,
                "dc" => slot.dc = val,
                _ => return Err(bad()),
            }
        }
        Ok(())
    }

    /// Serializes every coefficient as override lines.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for kind in GateKind::ALL {
            for (t, tn) in TERMINALS.iter().enumerate() {
                for (b, bn) in BRANCHES.iter().enumerate() {
                    let q = self.coeffs(kind, t, b);
                    for (f, v) in [("a1", q.a1), ("a2", q.a2), ("ao", q.ao), ("dc", q.dc)] {
                        out.push_str(&format!("gate.{kind}.{tn}.{bn}.{f}={v}\n"));
                    }
                }
            }
        }
        out
    }

    /// Value of the controlled source on `branch` of `terminal`.
    pub fn vcvg_value(
        &self,
        kind: GateKind,
        terminal: usize,
        branch: usize,
        v: [f64; 3],
        v_c: f64,
    ) -> f64 {
        self.coeffs(kind, terminal, branch).eval(v, v_c)
    }
}

/// Terminal voltages and the 12 memristor states `x[terminal][memristor]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateState {
    pub v: [f64; 3],
    pub x: [[f64; 4]; 3],
}

/// Branch drops `v_t - L` for all 15 branches.
pub fn branch_drops(tables: &GateTables, kind: GateKind, v: [f64; 3], v_c: f64) -> [[f64; 5]; 3] {
    let mut d = [[0.0; 5]; 3];
    for (t, row) in d.iter_mut().enumerate() {
        for (b, slot) in row.iter_mut().enumerate() {
            *slot = v[t] - tables.vcvg_value(kind, t, b, v, v_c);
        }
    }
    d
}

/// Currents flowing out of each terminal into the gate, summed over its five branches.
pub fn terminal_currents(
    tables: &GateTables,
    kind: GateKind,
    state: &GateState,
    dev: &Device,
) -> [f64; 3] {
    let d = branch_drops(tables, kind, state.v, dev.p.v_c);
    let mut out = [0.0; 3];
    for t in 0..3 {
        let mut acc = d[t][4] / dev.p.r_off;
        for m in 0..4 {
            acc += d[t][m] * dev.p.conductance(state.x[t][m]);
        }
        out[t] = acc;
    }
    out
}

/// Memristor states reached under frozen terminal voltages: each memristor
/// goes to the bound its voltage drives it toward, or keeps `x0` when its
/// voltage is zero.
pub fn relax_memristors(
    tables: &GateTables,
    kind: GateKind,
    v: [f64; 3],
    x0: [[f64; 4]; 3],
    dev: &Device,
) -> [[f64; 4]; 3] {
    let d = branch_drops(tables, kind, v, dev.p.v_c);
    let mut x = x0;
    for t in 0..3 {
        for m in 0..4 {
            let v_m = MEM_POLARITY[m] * d[t][m];
            // Integrate until the rate vanishes; the exact update lands on the bound.
            let mut xi = x[t][m];
            for _ in 0..64 {
                if dev.memristor_rate(xi, v_m) == 0.0 {
                    break;
                }
                xi = dev.memristor_advance(xi, v_m, 1e3);
            }
            x[t][m] = xi;
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
}

/// Classifies a `±v_c` configuration by its logic consistency.
pub fn classify_config(kind: GateKind, v: [f64; 3], v_c: f64) -> Result<Stability> {
    let mut bits = [false; 3];
    for (b, &vi) in bits.iter_mut().zip(v.iter()) {
        if vi == v_c {
            *b = true;
        } else if vi != -v_c {
            return Err(Error::Params(format!("terminal voltage {vi} is not +/-v_c")));
        }
    }
    Ok(if truth_check(kind, bits[0], bits[1], bits[2]) {
        Stability::Stable
    } else {
        Stability::Unstable
    })
}

/// One row of the gate-constraint report.
#[derive(Debug, Clone, Serialize)]
pub struct GateCheck {
    pub kind: GateKind,
    pub bits: [bool; 3],
    pub consistent: bool,
    /// Currents out of each terminal, worst case over the memristor states tried.
    pub currents: [f64; 3],
    pub passed: bool,
    pub detail: String,
}

/// Runs the static gate-constraint checks for all 24 `±v_c` configurations.
///
/// Consistent configurations must draw exactly zero current from every
/// terminal for every memristor state tried. Inconsistent ones, after
/// relaxation, must have some terminal current of magnitude at least
/// `v_c/R_off`, and the current delivered into the output node must have the
/// sign opposite to the output voltage.
pub fn check_gate_configs(tables: &GateTables, dev: &Device) -> Vec<GateCheck> {
    let v_c = dev.p.v_c;
    let probes: Vec<[[f64; 4]; 3]> = (0..8)
        .map(|k| {
            let mut x = [[0.0; 4]; 3];
            for (t, row) in x.iter_mut().enumerate() {
                for (m, xv) in row.iter_mut().enumerate() {
                    // Deterministic spread of states across [0, 1].
                    *xv = ((k * 7 + t * 5 + m * 3) % 11) as f64 / 10.0;
                }
            }
            x
        })
        .collect();
    let mut out = Vec::new();
    for kind in GateKind::ALL {
        for code in 0..8u8 {
            let bits = [code & 4 != 0, code & 2 != 0, code & 1 != 0];
            let v = bits.map(|b| if b { v_c } else { -v_c });
            let consistent = truth_check(kind, bits[0], bits[1], bits[2]);
            if consistent {
                let mut worst = [0.0f64; 3];
                for x in &probes {
                    let relaxed = relax_memristors(tables, kind, v, *x, dev);
                    for xs in [*x, relaxed] {
                        let i = terminal_currents(tables, kind, &GateState { v, x: xs }, dev);
                        for t in 0..3 {
                            if i[t].abs() > worst[t].abs() {
                                worst[t] = i[t];
                            }
                        }
                    }
                }
                let passed = worst.iter().all(|&i| i == 0.0);
                out.push(GateCheck {
                    kind,
                    bits,
                    consistent,
                    currents: worst,
                    passed,
                    detail: if passed {
                        "zero current".into()
                    } else {
                        format!("residual current {:?}", worst)
                    },
                });
            } else {
                let x = relax_memristors(tables, kind, v, [[0.5; 4]; 3], dev);
                let i = terminal_currents(tables, kind, &GateState { v, x }, dev);
                let big = i.iter().any(|c| c.abs() >= v_c / dev.p.r_off);
                let injected_out = -i[2];
                let opposite = injected_out * v[2] < 0.0;
                out.push(GateCheck {
                    kind,
                    bits,
                    consistent,
                    currents: i,
                    passed: big && opposite,
                    detail: format!("large={big} opposite={opposite}"),
                });
            }
        }
    }
    out
}
