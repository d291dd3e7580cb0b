//! Turns a netlist into an executable ODE system in node-voltage coordinates.
//!
//! State layout: `[v (free nodes) | x (memristors) | i (VCDCG currents) | s]`.
//! Every gate terminal hosts five branches (four memristors and one resistor),
//! each in series with a controlled source of value `L = a1 v1 + a2 v2 + ao vo + dc v_c`.
//! The branch drop is `v_t - L`; memristor voltages are the drop times the
//! memristor's polarity. Each free node has a capacitance to ground.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::device::Device;
use crate::error::{Error, Result};
use crate::gate::{GateTables, MEM_POLARITY};
use crate::netlist::{Generator, Netlist, NodeId};
use crate::sparse::Pattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Free(usize),
    Fixed(usize),
}

/// One branch: drop `= sum_k w[k] v[nodes[k]] + d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub term: usize,
    pub nodes: [usize; 3],
    pub w: [f64; 3],
    pub d: f64,
    /// Memristor index, `None` for the resistor branch.
    pub mem: Option<usize>,
    pub pol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout {
    pub nv: usize,
    pub nm: usize,
    pub nd: usize,
}

impl Layout {
    pub fn dim(&self) -> usize {
        self.nv + self.nm + 2 * self.nd
    }
    pub fn v(&self) -> std::ops::Range<usize> {
        0..self.nv
    }
    pub fn x(&self) -> std::ops::Range<usize> {
        self.nv..self.nv + self.nm
    }
    pub fn i(&self) -> std::ops::Range<usize> {
        self.nv + self.nm..self.nv + self.nm + self.nd
    }
    pub fn s(&self) -> std::ops::Range<usize> {
        self.nv + self.nm + self.nd..self.dim()
    }
}

/// Assembled circuit; immutable after construction.
#[derive(Debug, Clone)]
pub struct System {
    pub dev: Device,
    pub tables: GateTables,
    pub netlist: Netlist,
    pub node_ids: Vec<NodeId>,
    pub slots: Vec<Slot>,
    /// Global node index of each free node.
    pub free: Vec<usize>,
    /// Global node index and generator of each fixed node.
    pub fixed: Vec<(usize, Generator)>,
    pub branches: Vec<Branch>,
    /// Capacitance to ground of each free node.
    pub cap: Vec<f64>,
    /// Leak conductance to ground of each free node.
    pub leak: Vec<f64>,
    /// Free-node index carrying each VCDCG.
    pub dcg_free: Vec<usize>,
    /// VCDCG index per free node.
    pub dcg_of_free: Vec<Option<usize>>,
    /// Branches whose terminal is each free node.
    pub node_branches: Vec<Vec<usize>>,
    pub layout: Layout,
    pub n_r: usize,
    pub s_min: f64,
    pub s_max: f64,
    /// Pattern of the free-node coupling matrix.
    pub vpat: Pattern,
    /// For every branch, the coupling-matrix slots `(term, nodes[k])` (or `usize::MAX`).
    pub branch_slots: Vec<[usize; 3]>,
    pub diag_slots: Vec<usize>,
}

impl System {
    pub fn assemble(netlist: &Netlist, dev: &Device, tables: &GateTables) -> Result<Self> {
        let diag = netlist.validate();
        if !diag.is_ok() {
            return Err(Error::Netlist(diag.errors.join("; ")));
        }
        let index: HashMap<NodeId, usize> =
            netlist.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        let gen: HashMap<NodeId, Generator> =
            netlist.generators.iter().map(|g| (g.node, *g)).collect();
        let mut slots = Vec::with_capacity(netlist.nodes.len());
        let mut free = Vec::new();
        let mut fixed = Vec::new();
        for (gi, n) in netlist.nodes.iter().enumerate() {
            if let Some(g) = gen.get(&n.id) {
                slots.push(Slot::Fixed(fixed.len()));
                fixed.push((gi, *g));
            } else {
                slots.push(Slot::Free(free.len()));
                free.push(gi);
            }
        }
        let nv = free.len();
        let v_c = dev.p.v_c;
        let mut branches = Vec::with_capacity(15 * netlist.gates.len());
        let mut term_count = vec![0usize; nv];
        for (g, inst) in netlist.gates.iter().enumerate() {
            let nodes = inst.terms.map(|id| index[&id]);
            for t in 0..3 {
                if let Slot::Free(k) = slots[nodes[t]] {
                    term_count[k] += 1;
                }
                for b in 0..5 {
                    let q = tables.coeffs(inst.kind, t, b);
                    let mut w = [-q.a1, -q.a2, -q.ao];
                    w[t] += 1.0;
                    let (mem, pol) = if b < 4 {
                        (Some(g * 12 + t * 4 + b), MEM_POLARITY[b])
                    } else {
                        (None, 1.0)
                    };
                    branches.push(Branch { term: nodes[t], nodes, w, d: -q.dc * v_c, mem, pol });
                }
            }
        }
        if let Some(k) = term_count.iter().position(|&c| c == 0) {
            return Err(Error::Netlist(format!(
                "degenerate netlist: free node {} is not connected to any gate",
                netlist.nodes[free[k]].id
            )));
        }
        let cap: Vec<f64> = term_count.iter().map(|&c| dev.p.c * c as f64).collect();
        let leak: Vec<f64> = term_count.iter().map(|&c| dev.p.g_leak * c as f64).collect();
        let mut dcg_of_free = vec![None; nv];
        let mut dcg_free = Vec::new();
        for id in &netlist.vcdcg_nodes {
            if let Slot::Free(k) = slots[index[id]] {
                dcg_of_free[k] = Some(dcg_free.len());
                dcg_free.push(k);
            }
        }
        let mut node_branches = vec![Vec::new(); nv];
        let mut entries = Vec::new();
        for (bi, br) in branches.iter().enumerate() {
            if let Slot::Free(k) = slots[br.term] {
                node_branches[k].push(bi);
                for &n in &br.nodes {
                    if let Slot::Free(m) = slots[n] {
                        entries.push((k, m));
                    }
                }
            }
        }
        let vpat = Pattern::from_entries(nv, entries);
        let branch_slots = branches
            .iter()
            .map(|br| {
                let mut s = [usize::MAX; 3];
                if let Slot::Free(k) = slots[br.term] {
                    for (j, &n) in br.nodes.iter().enumerate() {
                        if let Slot::Free(m) = slots[n] {
                            s[j] = vpat.index(k, m).unwrap();
                        }
                    }
                }
                s
            })
            .collect();
        let diag_slots = (0..nv).map(|k| vpat.index(k, k).unwrap()).collect();
        let (s_min, s_max) = dev.s_bounds();
        let nm = 12 * netlist.gates.len();
        Ok(Self {
            dev: dev.clone(),
            tables: tables.clone(),
            netlist: netlist.clone(),
            node_ids: netlist.nodes.iter().map(|n| n.id).collect(),
            slots,
            free,
            fixed,
            cap,
            leak,
            layout: Layout { nv, nm, nd: dcg_free.len() },
            dcg_free,
            dcg_of_free,
            node_branches,
            n_r: 3 * netlist.gates.len(),
            branches,
            s_min,
            s_max,
            vpat,
            branch_slots,
            diag_slots,
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Generator output at time `t` (C1 ramp from 0 to the target).
    pub fn generator_value(&self, g: &Generator, t: f64) -> f64 {
        let target = g.level * self.dev.p.v_c;
        if g.ramp <= 0.0 || t >= g.ramp {
            target
        } else if t <= 0.0 {
            0.0
        } else {
            let y = t / g.ramp;
            target * y * y * (3.0 - 2.0 * y)
        }
    }

    /// Time derivative of [`System::generator_value`].
    pub fn generator_rate(&self, g: &Generator, t: f64) -> f64 {
        if g.ramp <= 0.0 || t <= 0.0 || t >= g.ramp {
            return 0.0;
        }
        let y = t / g.ramp;
        g.level * self.dev.p.v_c * 6.0 * y * (1.0 - y) / g.ramp
    }

    /// Latest time at which any generator is still ramping.
    pub fn ramp_end(&self) -> f64 {
        self.fixed.iter().map(|(_, g)| g.ramp).fold(0.0, f64::max)
    }

    /// Voltages of all nodes (global order) for a state at time `t`.
    pub fn node_voltages(&self, y: &[f64], t: f64, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.slots.iter().map(|s| match *s {
            Slot::Free(k) => y[k],
            Slot::Fixed(k) => self.generator_value(&self.fixed[k].1, t),
        }));
    }

    #[inline]
    pub fn drop(&self, br: &Branch, vn: &[f64]) -> f64 {
        br.w[0] * vn[br.nodes[0]] + br.w[1] * vn[br.nodes[1]] + br.w[2] * vn[br.nodes[2]] + br.d
    }

    #[inline]
    pub fn branch_conductance(&self, br: &Branch, y: &[f64]) -> f64 {
        match br.mem {
            Some(m) => self.dev.p.conductance(y[self.layout.nv + m]),
            None => 1.0 / self.dev.p.r_off,
        }
    }

    /// Memristor voltages `v_M` for all memristors.
    pub fn memristor_voltages(&self, y: &[f64], t: f64) -> Vec<f64> {
        let mut vn = Vec::new();
        self.node_voltages(y, t, &mut vn);
        let mut out = vec![0.0; self.layout.nm];
        for br in &self.branches {
            if let Some(m) = br.mem {
                out[m] = br.pol * self.drop(br, &vn);
            }
        }
        out
    }

    /// Net current delivered by gates into every free node.
    pub fn gate_injection(&self, y: &[f64], t: f64) -> Vec<f64> {
        let mut vn = Vec::new();
        self.node_voltages(y, t, &mut vn);
        let mut inj = vec![0.0; self.layout.nv];
        for br in &self.branches {
            if let Slot::Free(k) = self.slots[br.term] {
                inj[k] -= self.branch_conductance(br, y) * self.drop(br, &vn);
            }
        }
        inj
    }

    /// Right-hand side of the ODE.
    pub fn eval_rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let l = self.layout;
        let p = &self.dev.p;
        let mut vn = Vec::with_capacity(self.slots.len());
        self.node_voltages(y, t, &mut vn);
        dy.iter_mut().for_each(|d| *d = 0.0);
        for br in &self.branches {
            let drop = self.drop(br, &vn);
            let cond = match br.mem {
                Some(m) => {
                    let x = y[l.nv + m];
                    let v_m = br.pol * drop;
                    dy[l.nv + m] = self.dev.memristor_rate(x, v_m);
                    p.conductance(x)
                }
                None => 1.0 / p.r_off,
            };
            if let Slot::Free(k) = self.slots[br.term] {
                dy[k] -= cond * drop;
            }
        }
        let currents = &y[l.i()];
        for (j, &k) in self.dcg_free.iter().enumerate() {
            let i = y[l.nv + l.nm + j];
            let s = y[l.nv + l.nm + l.nd + j];
            dy[k] -= i;
            let (f, _) = self.dev.f_dcg(vn[self.free[k]]);
            dy[l.nv + l.nm + j] = self.dev.rho(s) * f - p.gamma * self.dev.rho(1.0 - s) * i;
            dy[l.nv + l.nm + l.nd + j] = self.dev.f_s(currents, s);
        }
        for k in 0..l.nv {
            dy[k] = (dy[k] - self.leak[k] * y[k]) / self.cap[k];
        }
    }

    /// Analytic Jacobian of [`System::eval_rhs`] as coordinate triplets.
    pub fn eval_jacobian(&self, t: f64, y: &[f64]) -> Vec<(usize, usize, f64)> {
        let l = self.layout;
        let p = &self.dev.p;
        let mut vn = Vec::new();
        self.node_voltages(y, t, &mut vn);
        let mut jac: HashMap<(usize, usize), f64> = HashMap::new();
        let mut add = |r: usize, c: usize, v: f64| *jac.entry((r, c)).or_insert(0.0) += v;
        for br in &self.branches {
            let drop = self.drop(br, &vn);
            let term_free = match self.slots[br.term] {
                Slot::Free(k) => Some(k),
                Slot::Fixed(_) => None,
            };
            let cond = self.branch_conductance(br, y);
            if let Some(k) = term_free {
                for (j, &n) in br.nodes.iter().enumerate() {
                    if let Slot::Free(m) = self.slots[n] {
                        add(k, m, -cond * br.w[j] / self.cap[k]);
                    }
                }
            }
            if let Some(m) = br.mem {
                let x = y[l.nv + m];
                let v_m = br.pol * drop;
                if let Some(k) = term_free {
                    add(k, l.nv + m, -p.conductance_dx(x) * drop / self.cap[k]);
                }
                let (rx, rv) = self.dev.memristor_rate_grad(x, v_m);
                add(l.nv + m, l.nv + m, rx);
                for (j, &n) in br.nodes.iter().enumerate() {
                    if let Slot::Free(q) = self.slots[n] {
                        add(l.nv + m, q, rv * br.pol * br.w[j]);
                    }
                }
            }
        }
        for k in 0..l.nv {
            add(k, k, -self.leak[k] / self.cap[k]);
        }
        let currents = &y[l.i()];
        let ds_di = self.dev.f_s_di(currents);
        for (j, &k) in self.dcg_free.iter().enumerate() {
            let ri = l.nv + l.nm + j;
            let rs = l.nv + l.nm + l.nd + j;
            let i = y[ri];
            let s = y[rs];
            add(k, ri, -1.0 / self.cap[k]);
            let (f, fp) = self.dev.f_dcg(vn[self.free[k]]);
            add(ri, k, self.dev.rho(s) * fp);
            add(ri, ri, -p.gamma * self.dev.rho(1.0 - s));
            add(ri, rs, self.dev.rho_deriv(s) * f + p.gamma * self.dev.rho_deriv(1.0 - s) * i);
            for (jj, &d) in ds_di.iter().enumerate() {
                add(rs, l.nv + l.nm + jj, d);
            }
            add(rs, rs, self.dev.f_s_ds(s));
        }
        let mut out: Vec<(usize, usize, f64)> =
            jac.into_iter().filter(|(_, v)| *v != 0.0).map(|((r, c), v)| (r, c, v)).collect();
        out.sort_by_key(|&(r, c, _)| (r, c));
        out
    }

    pub fn jacobian_dense(&self, t: f64, y: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.eval_jacobian(t, y) {
            m[(r, c)] += v;
        }
        m
    }

    /// Spectral abscissa of the free-node subsystem with memristors frozen at
    /// `x` and VCDCGs disconnected. Limited to small circuits.
    pub fn linear_eigen_check(&self, x: &[f64]) -> Result<f64> {
        let nv = self.layout.nv;
        if nv > 400 {
            return Err(Error::Numerical(format!("eigen check refused for {nv} free nodes")));
        }
        let mut y = vec![0.0; self.dim()];
        y[self.layout.x()].copy_from_slice(x);
        let mut a = DMatrix::zeros(nv, nv);
        for br in &self.branches {
            if let Slot::Free(k) = self.slots[br.term] {
                let cond = self.branch_conductance(br, &y);
                for (j, &n) in br.nodes.iter().enumerate() {
                    if let Slot::Free(m) = self.slots[n] {
                        a[(k, m)] -= cond * br.w[j] / self.cap[k];
                    }
                }
            }
        }
        for k in 0..nv {
            a[(k, k)] -= self.leak[k] / self.cap[k];
        }
        let eig = a.complex_eigenvalues();
        Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    }

    /// Conductance matrix `G(x)` of the free-node subsystem on [`System::vpat`]
    /// and the constant injection `c` so that the gate current into node `k`
    /// is `c_k - (G v)_k`.
    pub fn conductance_system(&self, y: &[f64], t: f64, gvals: &mut [f64], c: &mut [f64]) {
        let mut vn = Vec::new();
        self.node_voltages(y, t, &mut vn);
        gvals.iter_mut().for_each(|v| *v = 0.0);
        c.iter_mut().for_each(|v| *v = 0.0);
        for (bi, br) in self.branches.iter().enumerate() {
            if let Slot::Free(k) = self.slots[br.term] {
                let cond = self.branch_conductance(br, y);
                let mut known = br.d;
                for (j, &n) in br.nodes.iter().enumerate() {
                    let slot = self.branch_slots[bi][j];
                    if slot == usize::MAX {
                        known += br.w[j] * vn[n];
                    } else {
                        gvals[slot] += cond * br.w[j];
                    }
                }
                c[k] -= cond * known;
            }
        }
        for (k, &d) in self.diag_slots.iter().enumerate() {
            gvals[d] += self.leak[k];
        }
    }

    /// Independent construction of the memristor-voltage formulation:
    /// `d v_M / dt` built from explicit dense operators acting on `v_M`,
    /// `i_DCG` and the fixed-node voltages, with node voltages recovered from
    /// `v_M` by least squares. Intended for small circuits.
    pub fn vm_formulation_rate(&self, v_m: &[f64], y: &[f64], t: f64) -> Result<Vec<f64>> {
        let l = self.layout;
        let nv = l.nv;
        let mems: Vec<&Branch> = self.branches.iter().filter(|b| b.mem.is_some()).collect();
        let nm = mems.len();
        // Rows: v_M = P (W_f v_f + W_x v_x + d) with P = polarity.
        let mut wf = DMatrix::<f64>::zeros(nm, nv);
        let mut off = nalgebra::DVector::<f64>::zeros(nm);
        let mut vn = Vec::new();
        self.node_voltages(y, t, &mut vn);
        for (r, br) in mems.iter().enumerate() {
            let mut o = br.d;
            for (j, &n) in br.nodes.iter().enumerate() {
                match self.slots[n] {
                    Slot::Free(k) => wf[(r, k)] += br.pol * br.w[j],
                    Slot::Fixed(_) => o += br.w[j] * vn[n],
                }
            }
            off[r] = br.pol * o;
        }
        // Node voltages implied by v_M.
        let rhs = nalgebra::DVector::from_column_slice(v_m) - &off;
        let wtw = wf.transpose() * &wf;
        let chol = wtw
            .cholesky()
            .ok_or_else(|| Error::Numerical("memristor voltages do not determine the nodes".into()))?;
        let v_free = chol.solve(&(wf.transpose() * rhs));
        // Branch currents: memristors use g(x) v_M / pol; resistors re-derive
        // their drops from the recovered node voltages.
        let mut inj = nalgebra::DVector::<f64>::zeros(nv);
        let mut vfull = vn.clone();
        for (k, &gidx) in self.free.iter().enumerate() {
            vfull[gidx] = v_free[k];
        }
        let mut mi = 0;
        for br in &self.branches {
            let i_out = match br.mem {
                Some(m) => {
                    let cur = self.dev.p.conductance(y[nv + m]) * v_m[mi] * br.pol;
                    mi += 1;
                    cur
                }
                None => self.drop(br, &vfull) / self.dev.p.r_off,
            };
            if let Slot::Free(k) = self.slots[br.term] {
                inj[k] -= i_out;
            }
        }
        for (j, &k) in self.dcg_free.iter().enumerate() {
            inj[k] -= y[l.nv + l.nm + j];
        }
        for k in 0..nv {
            inj[k] -= self.leak[k] * v_free[k];
        }
        let cinv = nalgebra::DVector::from_iterator(nv, self.cap.iter().map(|c| 1.0 / c));
        let dv = inj.component_mul(&cinv);
        // Ramping generators move v_M through the fixed-node columns.
        let mut dfix = vec![0.0; self.slots.len()];
        for (gidx, g) in &self.fixed {
            dfix[*gidx] = self.generator_rate(g, t);
        }
        let mut out = (&wf * dv).data.as_vec().clone();
        for (r, br) in mems.iter().enumerate() {
            for (j, &n) in br.nodes.iter().enumerate() {
                if let Slot::Fixed(_) = self.slots[n] {
                    out[r] += br.pol * br.w[j] * dfix[n];
                }
            }
        }
        Ok(out)
    }

    /// `d v_M / dt` obtained by mapping the node-voltage right-hand side.
    pub fn vm_rate_from_nodes(&self, y: &[f64], t: f64) -> Vec<f64> {
        let mut dy = vec![0.0; self.dim()];
        self.eval_rhs(t, y, &mut dy);
        let mut dn = vec![0.0; self.slots.len()];
        for (k, &g) in self.free.iter().enumerate() {
            dn[g] = dy[k];
        }
        for (gidx, g) in &self.fixed {
            dn[*gidx] = self.generator_rate(g, t);
        }
        let mut out = vec![0.0; self.layout.nm];
        for br in &self.branches {
            if let Some(m) = br.mem {
                out[m] = br.pol * self.drop(br, &dn) - br.pol * br.d;
            }
        }
        out
    }

    /// Labels for trajectory columns: one per free node.
    pub fn free_node_ids(&self) -> Vec<NodeId> {
        self.free.iter().map(|&g| self.node_ids[g]).collect()
    }
}
