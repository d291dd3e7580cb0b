//! Time stepping, invariant guards, equilibrium detection and trajectory recording.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembler::System;
use crate::error::{Error, Result};
use crate::netlist::NodeId;
use crate::sparse::SparseLu;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Forward Euler on the full state.
    Euler,
    /// Classical fourth-order Runge-Kutta on the full state.
    Rk4,
    /// Linearly implicit trapezoidal rule on the node-voltage and VCDCG-current
    /// block, exact memristor update.
    Trapezoidal,
    /// Linearly implicit backward Euler on the same block.
    BackwardEuler,
}

impl Method {
    fn theta(self) -> Option<f64> {
        match self {
            Method::Trapezoidal => Some(0.5),
            Method::BackwardEuler => Some(1.0),
            _ => None,
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            "trapezoidal" | "trap" => Ok(Method::Trapezoidal),
            "backward-euler" | "beuler" | "implicit-euler" => Ok(Method::BackwardEuler),
            other => Err(Error::Params(format!("unknown method {other:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Euler => "euler",
            Method::Rk4 => "rk4",
            Method::Trapezoidal => "trapezoidal",
            Method::BackwardEuler => "backward-euler",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOpts {
    pub method: Method,
    pub dt: f64,
    pub t_max: f64,
    /// Record every n-th step (0 disables recording).
    pub record_every: usize,
    pub eq_tol_v: f64,
    pub eq_tol_i: f64,
    /// Time the equilibrium conditions must hold continuously.
    pub eq_dwell: f64,
    pub seed: u64,
    /// Also require `|i_DCG| <= eq_tol_i` at equilibrium.
    pub strict_current: bool,
    /// Restrict recorded columns to these nodes.
    pub record_nodes: Option<Vec<NodeId>>,
}

impl Default for IntegrationOpts {
    fn default() -> Self {
        let dt = 1e-4;
        Self {
            method: Method::Trapezoidal,
            dt,
            t_max: 50.0,
            record_every: 0,
            eq_tol_v: 1e-3,
            eq_tol_i: 1e-3,
            eq_dwell: 100.0 * dt,
            seed: 0,
            strict_current: false,
            record_nodes: None,
        }
    }
}

impl IntegrationOpts {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_max > 0.0 && self.eq_tol_v > 0.0 && self.eq_tol_i > 0.0) {
            return Err(Error::Params("dt, t_max and tolerances must be positive".into()));
        }
        if !(self.eq_dwell >= 0.0) {
            return Err(Error::Params("eq_dwell must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    BudgetExhausted,
    Fault,
}

/// Invariant bookkeeping over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Audit {
    /// Largest distance of `x` outside `[0, 1]` before clamping.
    pub max_x_overshoot: f64,
    /// Largest distance of `s` outside `[s_min, s_max]` before clamping.
    pub max_s_overshoot: f64,
    pub x_clamps: u64,
    pub s_clamps: u64,
    pub max_abs_i: f64,
    pub max_abs_v: f64,
    /// Scaled right-hand-side residual at the detected equilibrium.
    pub eq_residual: Option<f64>,
    pub log: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trajectory {
    pub node_ids: Vec<NodeId>,
    pub times: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub steps: u64,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = String::from("t");
        for id in &self.node_ids {
            header.push_str(&format!(",node_{id}"));
        }
        writeln!(w, "{header}")?;
        for (t, row) in self.times.iter().zip(&self.samples) {
            let mut line = format!("{t}");
            for v in row {
                line.push_str(&format!(",{v}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub outcome: Outcome,
    pub t_end: f64,
    /// Time at which the equilibrium conditions first held (start of the dwell).
    pub t_converged: Option<f64>,
    pub steps: u64,
    #[serde(skip)]
    pub state: Vec<f64>,
    pub trajectory: Trajectory,
    pub audit: Audit,
    pub fault: Option<String>,
}

/// Random memristor states, zero voltages and currents, `s = s_max`.
pub fn initial_state(sys: &System, seed: u64) -> Vec<f64> {
    let l = sys.layout;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = vec![0.0; l.dim()];
    for k in l.x() {
        y[k] = rng.random::<f64>();
    }
    for k in l.s() {
        y[k] = sys.s_max;
    }
    y
}

/// Single-step integrator holding the factorization workspace.
pub struct Stepper<'a> {
    sys: &'a System,
    method: Method,
    lu: Option<SparseLu>,
    gvals: Vec<f64>,
    cvec: Vec<f64>,
    mvals: Vec<f64>,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    pub audit: Audit,
}

impl<'a> Stepper<'a> {
    pub fn new(sys: &'a System, method: Method) -> Self {
        let n = sys.dim();
        let nnz = sys.vpat.nnz();
        let lu = method.theta().map(|_| SparseLu::new(&sys.vpat));
        Self {
            sys,
            method,
            lu,
            gvals: vec![0.0; nnz],
            cvec: vec![0.0; sys.layout.nv],
            mvals: vec![0.0; nnz],
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: vec![0.0; n],
            audit: Audit::default(),
        }
    }

    /// Advances `y` from `t` to `t + dt`, then clamps `x` and `s`.
    pub fn step(&mut self, y: &mut [f64], t: f64, dt: f64) -> Result<()> {
        match self.method {
            Method::Euler => {
                self.sys.eval_rhs(t, y, &mut self.k[0]);
                for (yi, ki) in y.iter_mut().zip(&self.k[0]) {
                    *yi += dt * ki;
                }
            }
            Method::Rk4 => self.rk4(y, t, dt),
            Method::Trapezoidal | Method::BackwardEuler => self.implicit(y, t, dt)?,
        }
        self.guard(y)
    }

    fn rk4(&mut self, y: &mut [f64], t: f64, dt: f64) {
        let n = y.len();
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        self.sys.eval_rhs(t, y, k1);
        for j in 0..n {
            tmp[j] = y[j] + 0.5 * dt * k1[j];
        }
        self.sys.eval_rhs(t + 0.5 * dt, tmp, k2);
        for j in 0..n {
            tmp[j] = y[j] + 0.5 * dt * k2[j];
        }
        self.sys.eval_rhs(t + 0.5 * dt, tmp, k3);
        for j in 0..n {
            tmp[j] = y[j] + dt * k3[j];
        }
        self.sys.eval_rhs(t + dt, tmp, k4);
        for j in 0..n {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }

    fn implicit(&mut self, y: &mut [f64], t: f64, dt: f64) -> Result<()> {
        let sys = self.sys;
        let l = sys.layout;
        let dev = &sys.dev;
        let p = &dev.p;
        let theta = self.method.theta().unwrap();
        let t_th = t + theta * dt;
        sys.conductance_system(y, t_th, &mut self.gvals, &mut self.cvec);
        // F0 = c - G v0 - i0 ; matrix = C/dt + theta G + theta E.
        let mut f0 = self.cvec.clone();
        let pat = &sys.vpat;
        for r in 0..l.nv {
            let mut acc = 0.0;
            for k in pat.row(r) {
                acc += self.gvals[k] * y[pat.cols[k]];
            }
            f0[r] -= acc;
        }
        for (m, g) in self.mvals.iter_mut().zip(&self.gvals) {
            *m = theta * g;
        }
        for k in 0..l.nv {
            self.mvals[sys.diag_slots[k]] += sys.cap[k] / dt;
        }
        let mut b_i = vec![0.0; l.nd];
        let mut e_i = vec![0.0; l.nd];
        for (j, &k) in sys.dcg_free.iter().enumerate() {
            let i0 = y[l.nv + l.nm + j];
            let s0 = y[l.nv + l.nm + l.nd + j];
            let (f, fp) = dev.f_dcg(y[k]);
            let rho = dev.rho(s0);
            let rho_bar = dev.rho(1.0 - s0);
            let a = 1.0 + dt * p.gamma * rho_bar * theta;
            b_i[j] = dt * (rho * f - p.gamma * rho_bar * i0) / a;
            e_i[j] = dt * rho * theta * fp / a;
            f0[k] -= i0 + theta * b_i[j];
            self.mvals[sys.diag_slots[k]] += theta * e_i[j];
        }
        let lu = self.lu.as_mut().unwrap();
        lu.factor(&self.mvals)?;
        lu.solve(&mut f0);
        let dv = f0;
        for k in 0..l.nv {
            y[k] += dv[k];
        }
        for (j, &k) in sys.dcg_free.iter().enumerate() {
            y[l.nv + l.nm + j] += b_i[j] + e_i[j] * dv[k];
        }
        // Memristors follow the new voltages exactly over the step.
        let mut vn = Vec::with_capacity(sys.slots.len());
        sys.node_voltages(y, t + dt, &mut vn);
        for br in &sys.branches {
            if let Some(m) = br.mem {
                let v_m = br.pol * sys.drop(br, &vn);
                let x = &mut y[l.nv + m];
                *x = dev.memristor_advance(*x, v_m, dt);
            }
        }
        let currents: Vec<f64> = y[l.i()].to_vec();
        for j in 0..l.nd {
            let s = &mut y[l.nv + l.nm + l.nd + j];
            *s += dt * dev.f_s(&currents, *s);
        }
        Ok(())
    }

    fn guard(&mut self, y: &mut [f64]) -> Result<()> {
        let l = self.sys.layout;
        if let Some(k) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state component {k}")));
        }
        for x in &mut y[l.x()] {
            let over = (-*x).max(*x - 1.0);
            if over > 0.0 {
                self.audit.max_x_overshoot = self.audit.max_x_overshoot.max(over);
                self.audit.x_clamps += 1;
                *x = x.clamp(0.0, 1.0);
            }
        }
        let (lo, hi) = (self.sys.s_min, self.sys.s_max);
        for s in &mut y[l.s()] {
            let over = (lo - *s).max(*s - hi);
            if over > 0.0 {
                self.audit.max_s_overshoot = self.audit.max_s_overshoot.max(over);
                self.audit.s_clamps += 1;
                *s = s.clamp(lo, hi);
            }
        }
        for &i in &y[l.i()] {
            self.audit.max_abs_i = self.audit.max_abs_i.max(i.abs());
        }
        for &v in &y[l.v()] {
            self.audit.max_abs_v = self.audit.max_abs_v.max(v.abs());
        }
        Ok(())
    }
}

/// Instantaneous equilibrium test: every VCDCG node within `eq_tol_v` of
/// `±v_c`, every VCDCG in drive mode with its current below `i_max`
/// (and below `eq_tol_i` when `strict_current` is set).
pub fn equilibrium_conditions(sys: &System, y: &[f64], opts: &IntegrationOpts) -> bool {
    let l = sys.layout;
    let p = &sys.dev.p;
    sys.dcg_free.iter().enumerate().all(|(j, &k)| {
        let v = y[k];
        let i = y[l.nv + l.nm + j];
        let s = y[l.nv + l.nm + l.nd + j];
        ((v.abs() - p.v_c).abs() <= opts.eq_tol_v)
            && s > 0.5
            && i.abs() < p.i_max
            && (!opts.strict_current || i.abs() <= opts.eq_tol_i)
    })
}

/// Alias matching the single-state form of the detector (no dwell).
pub fn detect_equilibrium(sys: &System, y: &[f64], opts: &IntegrationOpts) -> bool {
    equilibrium_conditions(sys, y, opts)
}

/// Scaled equilibrium residual: the largest of `|dv/dt| * tau_v / v_c`,
/// `|di/dt| / (m1 v_c)` and `|dx/dt| * tau_x` for the free-node subsystem.
pub fn equilibrium_residual(sys: &System, t: f64, y: &[f64]) -> f64 {
    let l = sys.layout;
    let p = &sys.dev.p;
    let mut dy = vec![0.0; l.dim()];
    sys.eval_rhs(t, y, &mut dy);
    // Characteristic time of the voltage block at unit node capacitance.
    let mut r = 0.0f64;
    for k in l.v() {
        r = r.max((dy[k] * sys.cap[k] * p.r_off).abs() / p.v_c);
    }
    for k in l.i() {
        r = r.max(dy[k].abs() / (p.m1 * p.v_c));
    }
    r
}

/// Integrates from `y0` until a dwelled equilibrium or `t_max`.
pub fn integrate(sys: &System, y0: &[f64], opts: &IntegrationOpts) -> Result<RunResult> {
    opts.validate()?;
    let mut y = y0.to_vec();
    let mut st = Stepper::new(sys, opts.method);
    let cols: Vec<(NodeId, usize)> = match &opts.record_nodes {
        Some(ids) => ids
            .iter()
            .filter_map(|id| {
                sys.free_node_ids().iter().position(|f| f == id).map(|k| (*id, k))
            })
            .collect(),
        None => sys.free_node_ids().into_iter().enumerate().map(|(k, id)| (id, k)).collect(),
    };
    let mut traj = Trajectory { node_ids: cols.iter().map(|c| c.0).collect(), ..Default::default() };
    let record = |traj: &mut Trajectory, t: f64, y: &[f64]| {
        traj.times.push(t);
        traj.samples.push(cols.iter().map(|&(_, k)| y[k]).collect());
    };
    if opts.record_every > 0 {
        record(&mut traj, 0.0, &y);
    }
    let n_steps = (opts.t_max / opts.dt).ceil() as u64;
    let ramp_end = sys.ramp_end();
    let mut dwell_start: Option<f64> = None;
    let mut t = 0.0;
    let mut steps = 0u64;
    let mut outcome = Outcome::BudgetExhausted;
    let mut fault = None;
    let mut t_conv = None;
    while steps < n_steps {
        if let Err(e) = st.step(&mut y, t, opts.dt) {
            st.audit.log.push(format!("t={t:.6}: {e}"));
            fault = Some(e.to_string());
            outcome = Outcome::Fault;
            break;
        }
        steps += 1;
        t = steps as f64 * opts.dt;
        if opts.record_every > 0 && steps.is_multiple_of(opts.record_every as u64) {
            record(&mut traj, t, &y);
        }
        if t >= ramp_end && equilibrium_conditions(sys, &y, opts) {
            let start = *dwell_start.get_or_insert(t);
            if t - start >= opts.eq_dwell - 1e-12 {
                outcome = Outcome::Converged;
                t_conv = Some(start);
                st.audit.eq_residual = Some(equilibrium_residual(sys, t, &y));
                break;
            }
        } else {
            dwell_start = None;
        }
    }
    traj.steps = steps;
    if st.audit.x_clamps + st.audit.s_clamps > 0 {
        st.audit.log.push(format!(
            "clamped x {} times (max overshoot {:e}), s {} times (max overshoot {:e})",
            st.audit.x_clamps, st.audit.max_x_overshoot, st.audit.s_clamps, st.audit.max_s_overshoot
        ));
    }
    Ok(RunResult {
        outcome,
        t_end: t,
        t_converged: t_conv,
        steps,
        state: y,
        trajectory: traj,
        audit: st.audit,
        fault,
    })
}
