//! End-to-end solving: compile, simulate, decode, verify, repeat.
//!
//! Also hosts the Monte Carlo success-probability estimate and the scaling
//! sweeps used for the size/time fits.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembler::System;
use crate::compiler::{
    compile_factorization, compile_subset_sum, gate_count_report, linear_fit, Compiled,
    FactorSpec, SubsetSumSpec, DEFAULT_RAMP,
};
use crate::device::{Device, DeviceParams};
use crate::error::{Error, Result};
use crate::gate::GateTables;
use crate::integrator::{initial_state, integrate, IntegrationOpts, Outcome, RunResult};
use crate::netlist::Netlist;

/// Device parameters together with the gate coefficient tables.
#[derive(Debug, Clone)]
pub struct Machine {
    pub dev: Device,
    pub tables: GateTables,
}

impl Machine {
    pub fn new(p: DeviceParams) -> Result<Self> {
        Ok(Self { dev: Device::new(p)?, tables: GateTables::default() })
    }

    /// Parses a params text: device keys plus optional `gate.*` overrides.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut tables = GateTables::default();
        tables.apply_overrides(text)?;
        Ok(Self { dev: Device::new(DeviceParams::from_kv_str(text)?)?, tables })
    }

    /// Loads from `path`, else `$SOLC_PARAMS`, else the defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let path = path
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(DeviceParams::ENV_VAR).map(Into::into));
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
                Self::from_kv_str(&text)
            }
            None => Self::new(DeviceParams::default()),
        }
    }
}

impl Default for Machine {
    fn default() -> Self {
        Self::new(DeviceParams::default()).expect("defaults are valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "problem", rename_all = "kebab-case")]
pub enum Problem {
    Factor(FactorSpec),
    SubsetSum(SubsetSumSpec),
}

impl Problem {
    pub fn compile(&self, ramp: f64) -> Result<Compiled> {
        match self {
            Problem::Factor(s) => compile_factorization(s, ramp),
            Problem::SubsetSum(s) => compile_subset_sum(s, ramp),
        }
    }
}

/// Decoded readout group, MSB first as listed in the netlist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BitGroup {
    pub name: String,
    pub bits: Vec<bool>,
}

impl BitGroup {
    /// Value reading the bits MSB first.
    pub fn value(&self) -> u64 {
        self.bits.iter().fold(0, |a, &b| (a << 1) | b as u64)
    }
}

/// Reads every readout group from the node voltages at time `t`.
/// A voltage within `eq_tol_v` of zero is reported as ambiguous.
pub fn decode_readout(sys: &System, y: &[f64], t: f64, eq_tol_v: f64) -> Result<Vec<BitGroup>> {
    let mut vn = Vec::new();
    sys.node_voltages(y, t, &mut vn);
    decode_voltages(&sys.netlist, &vn, eq_tol_v)
}

/// Decoding on a voltage vector in netlist node order.
pub fn decode_voltages(net: &Netlist, vn: &[f64], eq_tol_v: f64) -> Result<Vec<BitGroup>> {
    let index: HashMap<_, _> = net.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    net.readout
        .iter()
        .map(|g| {
            let bits = g
                .nodes
                .iter()
                .map(|id| {
                    let v = vn[index[id]];
                    if v.abs() <= eq_tol_v {
                        Err(Error::Numerical(format!(
                            "ambiguous bit: node {id} of group {} at {v:e}",
                            g.name
                        )))
                    } else {
                        Ok(v > 0.0)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(BitGroup { name: g.name.clone(), bits })
        })
        .collect()
}

/// Verified answer, re-derived from integer arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Factors { p: u64, q: u64 },
    Subset { selected: Vec<bool>, elements: Vec<u64> },
}

fn group<'a>(groups: &'a [BitGroup], name: &str) -> Option<&'a BitGroup> {
    groups.iter().find(|g| g.name == name)
}

/// Checks decoded bits against the source problem. Returns the answer when
/// it is arithmetically correct.
pub fn verify_solution(problem: &Problem, groups: &[BitGroup]) -> Option<Answer> {
    match problem {
        Problem::Factor(s) => {
            let p = group(groups, "p")?.value();
            let q = group(groups, "q")?.value();
            (p > 1 && q > 1 && p.checked_mul(q) == Some(s.n)).then_some(Answer::Factors { p, q })
        }
        Problem::SubsetSum(s) => {
            // The `c` group lists c_1..c_n, first element first.
            let sel = &group(groups, "c")?.bits;
            if sel.len() != s.set.len() || !sel.iter().any(|&b| b) {
                return None;
            }
            let sum: u64 = s.set.iter().zip(sel).filter(|(_, &b)| b).map(|(q, _)| q).sum();
            (sum == s.target).then(|| Answer::Subset {
                selected: sel.clone(),
                elements: s.set.iter().zip(sel).filter(|(_, &b)| b).map(|(q, _)| *q).collect(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Solved,
    /// An equilibrium was reached but the readout failed verification.
    Unverified,
    BudgetExhausted,
    Fault,
}

impl Status {
    /// Process exit code convention: 0 solved, 2 not solved within budget, 1 error.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Solved => 0,
            Status::Unverified | Status::BudgetExhausted => 2,
            Status::Fault => 1,
        }
    }
}

/// One simulated attempt.
#[derive(Debug, Clone, Serialize)]
pub struct Attempt {
    pub seed: u64,
    pub status: Status,
    pub groups: Vec<BitGroup>,
    pub answer: Option<Answer>,
    pub t_end: f64,
    pub t_converged: Option<f64>,
    pub steps: u64,
    pub wall_s: f64,
    pub eq_residual: Option<f64>,
    pub max_abs_i: f64,
    pub max_x_overshoot: f64,
    pub max_s_overshoot: f64,
    pub note: Option<String>,
}

impl Attempt {
    pub fn verified(&self) -> bool {
        self.status == Status::Solved
    }
}

/// Result of [`solve`]: the final attempt plus the history.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub status: Status,
    pub verified: bool,
    pub groups: Vec<BitGroup>,
    pub answer: Option<Answer>,
    pub seed: u64,
    pub steps: u64,
    pub wall_s: f64,
    pub t_converged: Option<f64>,
    pub eq_residual: Option<f64>,
    pub attempts: Vec<Attempt>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOpts {
    pub integration: IntegrationOpts,
    /// Additional attempts after the first, each from a fresh random state.
    pub retries: u32,
    pub ramp: f64,
}

impl Default for SolveOpts {
    fn default() -> Self {
        Self { integration: IntegrationOpts::default(), retries: 0, ramp: DEFAULT_RAMP }
    }
}

/// Runs one seeded attempt on an assembled system.
pub fn run_attempt(
    problem: &Problem,
    sys: &System,
    opts: &IntegrationOpts,
    seed: u64,
) -> Result<(Attempt, RunResult)> {
    let t0 = Instant::now();
    let y0 = initial_state(sys, seed);
    let r = integrate(sys, &y0, opts)?;
    let wall_s = t0.elapsed().as_secs_f64();
    let (status, groups, answer, note) = match r.outcome {
        Outcome::Fault => (Status::Fault, vec![], None, r.fault.clone()),
        Outcome::BudgetExhausted => {
            // Advisory readout only.
            let g = decode_readout(sys, &r.state, r.t_end, opts.eq_tol_v).unwrap_or_default();
            (Status::BudgetExhausted, g, None, None)
        }
        Outcome::Converged => match decode_readout(sys, &r.state, r.t_end, opts.eq_tol_v) {
            Err(e) => (Status::Unverified, vec![], None, Some(e.to_string())),
            Ok(g) => match verify_solution(problem, &g) {
                Some(a) => (Status::Solved, g, Some(a), None),
                None => (Status::Unverified, g, None, Some("readout fails verification".into())),
            },
        },
    };
    let a = Attempt {
        seed,
        status,
        groups,
        answer,
        t_end: r.t_end,
        t_converged: r.t_converged,
        steps: r.steps,
        wall_s,
        eq_residual: r.audit.eq_residual,
        max_abs_i: r.audit.max_abs_i,
        max_x_overshoot: r.audit.max_x_overshoot,
        max_s_overshoot: r.audit.max_s_overshoot,
        note,
    };
    Ok((a, r))
}

/// Seed of the `k`-th attempt derived from a base seed.
pub fn attempt_seed(base: u64, k: u64) -> u64 {
    base.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Compile, assemble and integrate until a verified answer or the retry
/// budget runs out.
pub fn solve(problem: &Problem, machine: &Machine, opts: &SolveOpts) -> Result<RunOutcome> {
    let compiled = problem.compile(opts.ramp)?;
    let sys = System::assemble(&compiled.netlist, &machine.dev, &machine.tables)?;
    solve_on(problem, &sys, opts)
}

/// As [`solve`] on an already assembled system.
pub fn solve_on(problem: &Problem, sys: &System, opts: &SolveOpts) -> Result<RunOutcome> {
    let base = opts.integration.seed;
    let mut attempts = Vec::new();
    for k in 0..=opts.retries as u64 {
        let (a, _) = run_attempt(problem, sys, &opts.integration, attempt_seed(base, k))?;
        let done = a.verified() || a.status == Status::Fault;
        log::info!("attempt {k} seed {} -> {:?}", a.seed, a.status);
        attempts.push(a);
        if done {
            break;
        }
    }
    let last = attempts.last().expect("at least one attempt").clone();
    Ok(RunOutcome {
        status: last.status,
        verified: last.verified(),
        groups: last.groups,
        answer: last.answer,
        seed: last.seed,
        steps: attempts.iter().map(|a| a.steps).sum(),
        wall_s: attempts.iter().map(|a| a.wall_s).sum(),
        t_converged: last.t_converged,
        eq_residual: last.eq_residual,
        attempts,
    })
}

/// Success probability with a Wilson score interval.
#[derive(Debug, Clone, Serialize)]
pub struct SuccessEstimate {
    pub trials: usize,
    pub successes: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub attempts: Vec<Attempt>,
}

/// Wilson score interval for `k` successes in `n` trials at normal quantile `z`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let den = 1.0 + z2 / n;
    let mid = (p + z2 / (2.0 * n)) / den;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / den;
    // The bounds touch 0 and 1 exactly at the extremes; avoid round-off there.
    let lo = if k == 0 { 0.0 } else { (mid - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (mid + half).min(1.0) };
    (lo, hi)
}

const Z95: f64 = 1.959_963_984_540_054;

/// Independent seeded single attempts run in parallel.
pub fn estimate_success_probability(
    problem: &Problem,
    machine: &Machine,
    trials: usize,
    opts: &SolveOpts,
) -> Result<SuccessEstimate> {
    if trials == 0 {
        return Err(Error::Params("trials must be at least 1".into()));
    }
    let compiled = problem.compile(opts.ramp)?;
    let sys = System::assemble(&compiled.netlist, &machine.dev, &machine.tables)?;
    estimate_on(problem, &sys, trials, &opts.integration)
}

pub fn estimate_on(
    problem: &Problem,
    sys: &System,
    trials: usize,
    opts: &IntegrationOpts,
) -> Result<SuccessEstimate> {
    let mut attempts: Vec<Attempt> = (0..trials as u64)
        .into_par_iter()
        .map(|k| run_attempt(problem, sys, opts, attempt_seed(opts.seed, k)).map(|r| r.0))
        .collect::<Result<_>>()?;
    attempts.sort_by_key(|a| a.seed);
    let successes = attempts.iter().filter(|a| a.verified()).count();
    let (ci_low, ci_high) = wilson_interval(successes, trials, Z95);
    Ok(SuccessEstimate {
        trials,
        successes,
        estimate: successes as f64 / trials as f64,
        ci_low,
        ci_high,
        attempts,
    })
}

/// Problem family for scaling sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Size is `n_n`; the instance is a balanced odd semiprime of that width.
    Factor,
    /// Size is the precision `p` with `n` elements.
    SubsetSum { n: usize },
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Balanced odd semiprime of width at most `n_n`: the largest prime not above
/// `sqrt(2^n_n)` times the largest smaller prime that keeps the product in range.
pub fn semiprime_for_width(n_n: usize) -> Option<u64> {
    let lim = 1u64 << n_n;
    let mut p = (lim as f64).sqrt() as u64;
    while p > 3 {
        if is_prime(p) && p % 2 == 1 {
            let mut q = (lim - 1) / p;
            q = q.min(p - 1);
            while q >= 3 {
                if is_prime(q) {
                    return Some(p * q);
                }
                q -= 1;
            }
        }
        p -= 1;
    }
    None
}

/// Deterministic subset-sum instance of `n` elements with `p` bits each whose
/// target is reachable by the first and last elements.
pub fn subset_sum_instance(n: usize, p: usize) -> Result<SubsetSumSpec> {
    let top = (1u64 << p) - 1;
    let set: Vec<u64> = (0..n as u64).map(|j| top.saturating_sub(2 * j).max(1)).collect();
    let target = set[0] + set[n - 1];
    SubsetSumSpec::new(set, target, Some(p))
}

pub fn family_instance(family: Family, size: usize) -> Result<Problem> {
    match family {
        Family::Factor => {
            let n = semiprime_for_width(size)
                .ok_or_else(|| Error::Problem(format!("no odd semiprime fits {size} bits")))?;
            Ok(Problem::Factor(FactorSpec::new(n, Some(size))?))
        }
        Family::SubsetSum { n } => Ok(Problem::SubsetSum(subset_sum_instance(n, size)?)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeRecord {
    pub size: usize,
    pub instance: String,
    pub gates: usize,
    pub state_dim: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_fraction: f64,
    /// Median simulated convergence time over verified trials.
    pub median_t: Option<f64>,
    pub attempts: Vec<Attempt>,
}

/// Power-law fit `y = a x^b` with a 95% interval on `b`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Fit {
    pub prefactor: f64,
    pub exponent: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub r2: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub family: Family,
    pub records: Vec<SizeRecord>,
    pub gate_fit: Option<Fit>,
    pub time_fit: Option<Fit>,
}

/// Two-sided 97.5% Student-t quantile.
fn t_quantile(df: usize) -> f64 {
    const T: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];
    match df {
        0 => f64::INFINITY,
        1..=10 => T[df - 1],
        11..=30 => 2.228 - (df as f64 - 10.0) * (2.228 - 2.042) / 20.0,
        _ => Z95,
    }
}

/// Log-log least squares with a confidence interval on the exponent.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Option<Fit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let (b, a, r2) = linear_fit(&lx, &ly);
    let n = pts.len();
    let half = if n > 2 {
        let mx = lx.iter().sum::<f64>() / n as f64;
        let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - a - b * x).powi(2)).sum();
        let se = (sse / (n - 2) as f64 / sxx).sqrt();
        t_quantile(n - 2) * se
    } else {
        f64::INFINITY
    };
    Some(Fit {
        prefactor: a.exp(),
        exponent: b,
        ci_low: b - half,
        ci_high: b + half,
        r2,
        points: n,
    })
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Per-size structure and dynamics statistics with power-law fits.
/// With `trials == 0` only the structural columns are filled.
pub fn scaling_sweep(
    family: Family,
    sizes: &[usize],
    trials: usize,
    machine: &Machine,
    opts: &SolveOpts,
) -> Result<SweepReport> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Params("sweep sizes must be strictly increasing".into()));
    }
    let mut records = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let problem = family_instance(family, size)?;
        let compiled = problem.compile(opts.ramp)?;
        let rep = gate_count_report(&compiled.netlist);
        let (attempts, successes) = if trials > 0 {
            let sys = System::assemble(&compiled.netlist, &machine.dev, &machine.tables)?;
            let est = estimate_on(&problem, &sys, trials, &opts.integration)?;
            (est.attempts, est.successes)
        } else {
            (vec![], 0)
        };
        let mut times: Vec<f64> =
            attempts.iter().filter(|a| a.verified()).filter_map(|a| a.t_converged).collect();
        records.push(SizeRecord {
            size,
            instance: instance_label(&problem),
            gates: rep.total,
            state_dim: rep.state_dim,
            trials,
            successes,
            success_fraction: if trials > 0 { successes as f64 / trials as f64 } else { 0.0 },
            median_t: median(&mut times),
            attempts,
        });
    }
    let xs: Vec<f64> = records.iter().map(|r| r.size as f64).collect();
    let gates: Vec<f64> = records.iter().map(|r| r.gates as f64).collect();
    let (tx, ty): (Vec<f64>, Vec<f64>) =
        records.iter().filter_map(|r| r.median_t.map(|t| (r.size as f64, t))).unzip();
    Ok(SweepReport {
        family,
        gate_fit: fit_power_law(&xs, &gates),
        time_fit: fit_power_law(&tx, &ty),
        records,
    })
}

pub fn instance_label(problem: &Problem) -> String {
    match problem {
        Problem::Factor(s) => format!("n={}", s.n),
        Problem::SubsetSum(s) => format!(
            "set={} target={}",
            s.set.iter().map(u64::to_string).collect::<Vec<_>>().join(" "),
            s.target
        ),
    }
}

impl SweepReport {
    /// One row per size and trial, then a summary block and the fits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "size,trial,seed,status,t_converged,steps,wall_s")?;
        for r in &self.records {
            for (k, a) in r.attempts.iter().enumerate() {
                let t = a.t_converged.map(|t| t.to_string()).unwrap_or_default();
                let status = serde_json::to_value(a.status).unwrap();
                let status = status.as_str().unwrap_or("");
                writeln!(w, "{},{k},{},{status},{t},{},{}", r.size, a.seed, a.steps, a.wall_s)?;
            }
        }
        writeln!(w)?;
        writeln!(w, "size,instance,gates,state_dim,trials,successes,success_fraction,median_t")?;
        for r in &self.records {
            let t = r.median_t.map(|t| t.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{t}",
                r.size, r.instance, r.gates, r.state_dim, r.trials, r.successes, r.success_fraction
            )?;
        }
        writeln!(w)?;
        writeln!(w, "fit,exponent,ci_low,ci_high,r2,points")?;
        for (name, f) in [("gates", &self.gate_fit), ("time", &self.time_fit)] {
            if let Some(f) = f {
                writeln!(
                    w,
                    "{name},{},{},{},{},{}",
                    f.exponent, f.ci_low, f.ci_high, f.r2, f.points
                )?;
            }
        }
        Ok(())
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::env::current_dir()?,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg(name: &str, bits: &[u8]) -> BitGroup {
        BitGroup { name: name.into(), bits: bits.iter().map(|&b| b == 1).collect() }
    }

    #[test]
    fn verify_factors() {
        let p = Problem::Factor(FactorSpec::new(35, Some(6)).unwrap());
        assert!(verify_solution(&p, &[bg("p", &[0, 0, 1, 0, 1]), bg("q", &[1, 1, 1])]).is_some());
        assert!(verify_solution(&p, &[bg("p", &[0, 0, 1, 0, 1]), bg("q", &[1, 1, 0])]).is_none());
        assert!(verify_solution(&p, &[bg("p", &[1, 0, 0, 0, 1, 1]), bg("q", &[0, 0, 1])]).is_none());
    }

    #[test]
    fn verify_subset() {
        let p = Problem::SubsetSum(SubsetSumSpec::new(vec![5, 6, 7], 13, Some(3)).unwrap());
        assert!(verify_solution(&p, &[bg("c", &[0, 1, 1])]).is_some());
        assert!(verify_solution(&p, &[bg("c", &[1, 1, 0])]).is_none());
        assert!(verify_solution(&p, &[bg("c", &[0, 0, 0])]).is_none());
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(20, 20, Z95);
        assert!((hi - 1.0).abs() < 1e-12);
        assert!((lo - 0.8389).abs() < 1e-3, "{lo}");
        let (lo, hi) = wilson_interval(0, 20, Z95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.1611).abs() < 1e-3);
    }

    #[test]
    fn semiprimes() {
        assert_eq!(semiprime_for_width(6), Some(35));
        assert_eq!(semiprime_for_width(9), Some(19 * 17));
        assert_eq!(semiprime_for_width(12), Some(61 * 59));
    }
}
