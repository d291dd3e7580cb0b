//! Device-level models: memristors, the smooth step family, the
//! voltage-controlled differential current generator (VCDCG) and its
//! internal state variable `s`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and numerical device parameters.
///
/// Field names mirror the keys accepted by [`DeviceParams::from_kv_str`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub r_on: f64,
    pub r_off: f64,
    /// Node capacitance used by the assembler.
    pub c: f64,
    pub alpha: f64,
    /// Window sharpness; `f64::INFINITY` selects the Heaviside window.
    pub k: f64,
    /// Memristor threshold voltage.
    pub v_t: f64,
    pub v_c: f64,
    pub gamma: f64,
    pub q: f64,
    /// Magnitude of the VCDCG slope at the origin (the curve has slope `-m0` there).
    pub m0: f64,
    pub m1: f64,
    pub i_min: f64,
    pub i_max: f64,
    pub k_i: f64,
    pub k_s: f64,
    pub delta_s: f64,
    pub delta_i: f64,
    /// Smoothness order of the smooth step.
    pub r: u32,
    /// Gate strength factor used in the `i_max` consistency check.
    pub k_wrong: f64,
    /// Voltage bound for the over-voltage diagnostic.
    pub v_sat: f64,
    /// Conductance to ground added per gate terminal at every free node.
    pub g_leak: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            r_on: 1e-2,
            r_off: 1.0,
            c: 1e-9,
            alpha: 60.0,
            k: f64::INFINITY,
            v_t: 0.0,
            v_c: 1.0,
            gamma: 60.0,
            q: 10.0,
            m0: 400.0,
            m1: 400.0,
            i_min: 1e-8,
            i_max: 20.0,
            k_i: 1e-7,
            k_s: 1e-7,
            delta_s: 0.0,
            delta_i: 0.0,
            r: 1,
            k_wrong: 1.0,
            v_sat: 2.0,
            g_leak: 0.0,
        }
    }
}

const KEYS: &[&str] = &[
    "R_on", "R_off", "C", "alpha", "k", "V_t", "v_c", "gamma", "q", "m0", "m1", "i_min", "i_max",
    "k_i", "k_s", "delta_s", "delta_i", "r", "K_wrong", "v_sat", "g_leak",
];

impl DeviceParams {
    /// Environment variable naming a default parameter file.
    pub const ENV_VAR: &'static str = "SOLC_PARAMS";

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "R_on" => &mut self.r_on,
            "R_off" => &mut self.r_off,
            "C" => &mut self.c,
            "alpha" => &mut self.alpha,
            "k" => &mut self.k,
            "V_t" => &mut self.v_t,
            "v_c" => &mut self.v_c,
            "gamma" => &mut self.gamma,
            "q" => &mut self.q,
            "m0" => &mut self.m0,
            "m1" => &mut self.m1,
            "i_min" => &mut self.i_min,
            "i_max" => &mut self.i_max,
            "k_i" => &mut self.k_i,
            "k_s" => &mut self.k_s,
            "delta_s" => &mut self.delta_s,
            "delta_i" => &mut self.delta_i,
            "K_wrong" => &mut self.k_wrong,
            "v_sat" => &mut self.v_sat,
            "g_leak" => &mut self.g_leak,
            _ => return None,
        })
    }

    /// Applies one `key=value` assignment. `k` accepts `inf`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::Params(format!("invalid value for {key}: {value:?}"));
        if key == "r" {
            self.r = value.trim().parse().map_err(|_| bad())?;
            return Ok(());
        }
        let v: f64 = match value.trim() {
            "inf" | "Inf" | "INF" | "infinity" => f64::INFINITY,
            s => s.parse().map_err(|_| bad())?,
        };
        let slot = self
            .slot(key)
            .ok_or_else(|| Error::Params(format!("unknown parameter key {key:?}")))?;
        *slot = v;
        Ok(())
    }

    /// Parses `key=value` lines on top of the defaults. `#` starts a comment.
    /// Keys prefixed with `gate.` belong to the gate tables and are skipped here.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut p = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Params(format!("line {}: expected key=value, got {raw:?}", lineno + 1))
            })?;
            let k = k.trim();
            if k.starts_with("gate.") {
                continue;
            }
            p.set(k, v)?;
        }
        Ok(p)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_kv_str(&text)
    }

    /// Loads from `path` if given, else from `$SOLC_PARAMS`, else defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_file(p),
            None => match std::env::var_os(Self::ENV_VAR) {
                Some(p) => Self::from_file(Path::new(&p)),
                None => Ok(Self::default()),
            },
        }
    }

    /// Serializes every key, so that `from_kv_str(to_kv_string())` round-trips.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        let mut copy = self.clone();
        for key in KEYS {
            if *key == "r" {
                out.push_str(&format!("r={}\n", self.r));
                continue;
            }
            let v = *copy.slot(key).expect("known key");
            if v.is_infinite() && v > 0.0 {
                out.push_str(&format!("{key}=inf\n"));
            } else {
                out.push_str(&format!("{key}={v:e}\n"));
            }
        }
        out
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        let mut copy = self.clone();
        let mut m = BTreeMap::new();
        for key in KEYS {
            let v = if *key == "r" { self.r as f64 } else { *copy.slot(key).unwrap() };
            m.insert((*key).to_string(), v);
        }
        m
    }

    /// Memristor resistance `M(x) = R_on (1 - x) + R_off x`.
    #[inline]
    pub fn resistance(&self, x: f64) -> f64 {
        self.r_on * (1.0 - x) + self.r_off * x
    }

    #[inline]
    pub fn conductance(&self, x: f64) -> f64 {
        1.0 / self.resistance(x)
    }

    /// `d g / d x`.
    #[inline]
    pub fn conductance_dx(&self, x: f64) -> f64 {
        let m = self.resistance(x);
        -(self.r_off - self.r_on) / (m * m)
    }
}

/// Warnings produced by [`validate_params`] for conditions that are advisory.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamWarning(pub String);

impl fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Checks hard invariants (returned as `Err`) and advisory ones (returned as warnings).
pub fn validate_params(p: &DeviceParams) -> Result<Vec<ParamWarning>> {
    let mut hard = Vec::new();
    if !(p.r_on > 0.0 && p.r_on < p.r_off) {
        hard.push(format!("need 0 < R_on < R_off (R_on={}, R_off={})", p.r_on, p.r_off));
    }
    for (name, v) in [
        ("C", p.c),
        ("alpha", p.alpha),
        ("v_c", p.v_c),
        ("gamma", p.gamma),
        ("q", p.q),
        ("m0", p.m0),
        ("m1", p.m1),
        ("k_i", p.k_i),
        ("k_s", p.k_s),
        ("k", p.k),
    ] {
        if !(v > 0.0) {
            hard.push(format!("{name} must be positive, got {v}"));
        }
    }
    for (name, v) in [("V_t", p.v_t), ("delta_s", p.delta_s), ("delta_i", p.delta_i)] {
        if !(v >= 0.0) || !v.is_finite() {
            hard.push(format!("{name} must be finite and non-negative, got {v}"));
        }
    }
    if p.r < 1 {
        hard.push(format!("smoothness order r must be at least 1, got {}", p.r));
    }
    if !(p.i_min > 0.0 && p.i_min < p.i_max) {
        hard.push(format!("need 0 < i_min < i_max (i_min={}, i_max={})", p.i_min, p.i_max));
    }
    if p.k_wrong > 0.0 && p.i_max >= p.k_wrong * p.v_c / p.r_on {
        hard.push(format!(
            "i_max={} must stay below K_wrong*v_c/R_on={}; larger currents mask wrong gate configurations",
            p.i_max,
            p.k_wrong * p.v_c / p.r_on
        ));
    }
    // The s-equation only has a single equilibrium beyond 1 when k_i/k_s exceeds
    // the height of the cubic's bump, sqrt(3)/18.
    if p.k_s > 0.0 && p.k_i / p.k_s <= 3f64.sqrt() / 18.0 {
        hard.push(format!(
            "k_i/k_s={} leaves the s-equation with three roots; need k_i/k_s > sqrt(3)/18",
            p.k_i / p.k_s
        ));
    }
    if !hard.is_empty() {
        return Err(Error::Params(hard.join("; ")));
    }

    let mut warn = Vec::new();
    let fmax = p.q.max(4.0 * p.m0 * p.v_c / 27.0);
    if p.k_s < 10.0 * fmax {
        warn.push(ParamWarning(format!(
            "k_s={} is not much larger than max|f_DCG|~{fmax}; s-dynamics may not separate",
            p.k_s
        )));
    }
    if p.k_i <= (3.0f64 / 18.0).sqrt() * p.k_s {
        warn.push(ParamWarning(format!(
            "k_i={} is at or below sqrt(3/18)*k_s={}",
            p.k_i,
            (3.0f64 / 18.0).sqrt() * p.k_s
        )));
    }
    let tau_c = p.c * p.r_on;
    let tau_m = p.r_on / (p.alpha * p.v_c) * (p.r_off / p.r_on);
    if tau_c > 0.1 * tau_m {
        warn.push(ParamWarning(format!(
            "capacitive time {tau_c:e} is not small against memristive time {tau_m:e}"
        )));
    }
    Ok(warn)
}

/// Coefficients `a_{r+1} .. a_{2r+1}` of the order-`r` smooth step polynomial.
/// They solve `sum a_i = 1`, `sum C(i,l) a_i = 0` (l = 1..r); the solution is
/// `a_{r+1+k} = (-1)^k C(r+k, k) C(2r+1, r-k)`, evaluated exactly in integers.
pub fn smoothstep_coeffs(r: u32) -> Result<Vec<f64>> {
    if r == 0 || r > 12 {
        return Err(Error::Params(format!("smoothness order r={r} outside 1..=12")));
    }
    let r = r as u64;
    Ok((0..=r)
        .map(|k| {
            let c = binom(r + k, k) * binom(2 * r + 1, r - k);
            if k % 2 == 0 { c as f64 } else { -(c as f64) }
        })
        .collect())
}

fn binom(n: u64, k: u64) -> u64 {
    // Exact: each partial product is itself a binomial coefficient.
    (0..k).fold(1, |acc, j| acc * (n - j) / (j + 1))
}

/// A smooth step of order `r`: 0 for `y <= 0`, 1 for `y >= 1`, `C^r` across both knots.
#[derive(Debug, Clone)]
pub struct SmoothStep {
    r: u32,
    coeffs: Vec<f64>,
}

impl SmoothStep {
    pub fn new(r: u32) -> Result<Self> {
        Ok(Self { r, coeffs: smoothstep_coeffs(r)? })
    }

    pub fn order(&self) -> u32 {
        self.r
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else if y >= 1.0 {
            1.0
        } else if y > 0.5 {
            // The polynomial cancels badly near 1; use S(y) = 1 - S(1 - y).
            1.0 - self.eval(1.0 - y)
        } else {
            let mut acc = 0.0;
            for a in self.coeffs.iter().rev() {
                acc = acc * y + a;
            }
            acc * y.powi(self.r as i32 + 1)
        }
    }

    pub fn deriv(&self, y: f64) -> f64 {
        if y <= 0.0 || y >= 1.0 {
            0.0
        } else if y > 0.5 {
            self.deriv(1.0 - y)
        } else {
            let base = self.r as i32 + 1;
            self.coeffs
                .iter()
                .enumerate()
                .map(|(j, a)| a * (base + j as i32) as f64 * y.powi(base + j as i32 - 1))
                .sum()
        }
    }

    /// `step_eval`: smooth step with width `delta`, or the Heaviside step
    /// (value 0 at 0) when `delta == 0`.
    pub fn step(&self, y: f64, delta: f64) -> f64 {
        if delta > 0.0 {
            self.eval(y / delta)
        } else if y > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn step_deriv(&self, y: f64, delta: f64) -> f64 {
        if delta > 0.0 {
            self.deriv(y / delta) / delta
        } else {
            0.0
        }
    }
}

/// Precomputed device evaluator bundling parameters and the smooth step.
#[derive(Debug, Clone)]
pub struct Device {
    pub p: DeviceParams,
    pub step: SmoothStep,
    s_bounds: (f64, f64),
}

impl Device {
    /// Rejects parameters that fail the hard checks of [`validate_params`].
    pub fn new(p: DeviceParams) -> Result<Self> {
        validate_params(&p)?;
        let step = SmoothStep::new(p.r)?;
        let s_bounds = solve_s_bounds(p.k_i, p.k_s)?;
        Ok(Self { p, step, s_bounds })
    }

    pub fn s_bounds(&self) -> (f64, f64) {
        self.s_bounds
    }

    /// Window function `h(x, v_M)`; vanishes when the memristor is pinned at the
    /// bound it is being driven toward.
    pub fn window(&self, x: f64, v_m: f64) -> f64 {
        let p = &self.p;
        let (ex0, ex1) = if p.k.is_infinite() {
            (heaviside(x), heaviside(1.0 - x))
        } else {
            (1.0 - (-p.k * x).exp(), 1.0 - (-p.k * (1.0 - x)).exp())
        };
        let (tv_pos, tv_neg) = if p.v_t > 0.0 {
            (self.step.eval(v_m / (2.0 * p.v_t)), self.step.eval(-v_m / (2.0 * p.v_t)))
        } else {
            (heaviside(v_m), heaviside(-v_m))
        };
        ex0 * tv_pos + ex1 * tv_neg
    }

    /// Partial derivatives `(dh/dx, dh/dv_M)`; ideal steps contribute zero.
    pub fn window_grad(&self, x: f64, v_m: f64) -> (f64, f64) {
        let p = &self.p;
        let (ex0, ex1, dex0, dex1) = if p.k.is_infinite() {
            (heaviside(x), heaviside(1.0 - x), 0.0, 0.0)
        } else {
            let (a, b) = ((-p.k * x).exp(), (-p.k * (1.0 - x)).exp());
            (1.0 - a, 1.0 - b, p.k * a, -p.k * b)
        };
        let (tp, tn, dtp, dtn) = if p.v_t > 0.0 {
            let y = v_m / (2.0 * p.v_t);
            let sc = 1.0 / (2.0 * p.v_t);
            (self.step.eval(y), self.step.eval(-y), self.step.deriv(y) * sc, -self.step.deriv(-y) * sc)
        } else {
            (heaviside(v_m), heaviside(-v_m), 0.0, 0.0)
        };
        (dex0 * tp + dex1 * tn, ex0 * dtp + ex1 * dtn)
    }

    /// `(d rate/dx, d rate/dv_M)` for [`Device::memristor_rate`].
    pub fn memristor_rate_grad(&self, x: f64, v_m: f64) -> (f64, f64) {
        let h = self.window(x, v_m);
        let (hx, hv) = self.window_grad(x, v_m);
        let g = self.p.conductance(x);
        let gx = self.p.conductance_dx(x);
        let a = self.p.alpha;
        (-a * (hx * g + h * gx) * v_m, -a * (hv * g * v_m + h * g))
    }

    /// Memristor state rate `dx/dt = -alpha h(x, v_M) g(x) v_M`.
    pub fn memristor_rate(&self, x: f64, v_m: f64) -> f64 {
        -self.p.alpha * self.window(x, v_m) * self.p.conductance(x) * v_m
    }

    /// Advances `x` over `dt` with `v_M` frozen, integrating
    /// `dM/dt = alpha (R_off - R_on) v_M / M` exactly and clamping at the bounds.
    pub fn memristor_advance(&self, x: f64, v_m: f64, dt: f64) -> f64 {
        let p = &self.p;
        if self.window(x, v_m) == 0.0 || v_m == 0.0 {
            return x;
        }
        if !p.k.is_infinite() || p.v_t > 0.0 {
            // Soft windows: explicit step, clamped.
            let dx = self.memristor_rate(x, v_m) * dt;
            return (x + dx).clamp(0.0, 1.0);
        }
        // With M = R_on + (R_off - R_on) x, d(M^2)/dt = -2 alpha (R_off - R_on) v_M.
        let dr = p.r_off - p.r_on;
        let m = self.p.resistance(x);
        let m2 = m * m - 2.0 * p.alpha * dr * v_m * dt;
        let m_new = if m2 <= p.r_on * p.r_on { p.r_on } else { m2.sqrt() };
        ((m_new - p.r_on) / dr).clamp(0.0, 1.0)
    }

    /// VCDCG nonlinearity `f_DCG(v)` and its derivative.
    pub fn f_dcg(&self, v: f64) -> (f64, f64) {
        f_dcg(v, self.p.v_c, self.p.q, self.p.m0, self.p.m1)
    }

    /// Current-magnitude filter `rho(s)`.
    pub fn rho(&self, s: f64) -> f64 {
        self.step.step(s - 0.5, self.p.delta_s)
    }

    pub fn rho_deriv(&self, s: f64) -> f64 {
        self.step.step_deriv(s - 0.5, self.p.delta_s)
    }

    /// Products `P_min` (1 when all currents are below `i_min`) and `P_max`
    /// (1 when none exceeds `i_max`).
    pub fn s_indicators(&self, currents: &[f64]) -> (f64, f64) {
        let p = &self.p;
        let mut pmin = 1.0;
        let mut pmax = 1.0;
        for &i in currents {
            pmin *= self.step.step(p.i_min * p.i_min - i * i, p.delta_i);
            pmax *= self.step.step(p.i_max * p.i_max - i * i, p.delta_i);
        }
        (pmin, pmax)
    }

    /// Right-hand side of the `s` equation.
    pub fn f_s(&self, currents: &[f64], s: f64) -> f64 {
        let (pmin, pmax) = self.s_indicators(currents);
        -self.p.k_s * s * (s - 1.0) * (2.0 * s - 1.0) + self.p.k_i * (pmin + pmax - 1.0)
    }

    /// Derivative of `f_s` with respect to `s`.
    pub fn f_s_ds(&self, s: f64) -> f64 {
        -self.p.k_s * (6.0 * s * s - 6.0 * s + 1.0)
    }

    /// Partial derivatives of `f_s` with respect to each current.
    pub fn f_s_di(&self, currents: &[f64]) -> Vec<f64> {
        let p = &self.p;
        let n = currents.len();
        let (lo2, hi2) = (p.i_min * p.i_min, p.i_max * p.i_max);
        let mins: Vec<f64> = currents.iter().map(|&i| self.step.step(lo2 - i * i, p.delta_i)).collect();
        let maxs: Vec<f64> = currents.iter().map(|&i| self.step.step(hi2 - i * i, p.delta_i)).collect();
        (0..n)
            .map(|j| {
                let i = currents[j];
                let dmin = self.step.step_deriv(lo2 - i * i, p.delta_i) * (-2.0 * i);
                let dmax = self.step.step_deriv(hi2 - i * i, p.delta_i) * (-2.0 * i);
                let rest_min: f64 = (0..n).filter(|&l| l != j).map(|l| mins[l]).product();
                let rest_max: f64 = (0..n).filter(|&l| l != j).map(|l| maxs[l]).product();
                p.k_i * (dmin * rest_min + dmax * rest_max)
            })
            .collect()
    }
}

#[inline]
fn heaviside(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Piecewise cubic Hermite VCDCG curve through
/// `(-2v_c, -q, 0), (-v_c, 0, m1), (0, 0, -m0), (v_c, 0, m1), (2v_c, q, 0)`
/// (value, slope), held constant outside `[-2v_c, 2v_c]`.
pub fn f_dcg(v: f64, v_c: f64, q: f64, m0: f64, m1: f64) -> (f64, f64) {
    let knots = [
        (-2.0 * v_c, -q, 0.0),
        (-v_c, 0.0, m1),
        (0.0, 0.0, -m0),
        (v_c, 0.0, m1),
        (2.0 * v_c, q, 0.0),
    ];
    if v <= knots[0].0 {
        return (-q, 0.0);
    }
    if v >= knots[4].0 {
        return (q, 0.0);
    }
    let seg = ((v + 2.0 * v_c) / v_c).floor().clamp(0.0, 3.0) as usize;
    let (x0, y0, d0) = knots[seg];
    let (x1, y1, d1) = knots[seg + 1];
    let h = x1 - x0;
    let t = (v - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let val = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    let der = (dh00 * y0 + dh10 * h * d0 + dh01 * y1 + dh11 * h * d1) / h;
    (val, der)
}

/// Returns `(s_min, s_max)`: the outer equilibria of
/// `-k_s s (s-1)(2s-1) +/- k_i = 0`, with `s_min = 1 - s_max`.
pub fn solve_s_bounds(k_i: f64, k_s: f64) -> Result<(f64, f64)> {
    if !(k_i > 0.0 && k_s > 0.0) {
        return Err(Error::Params(format!("k_i and k_s must be positive (k_i={k_i}, k_s={k_s})")));
    }
    let target = k_i / k_s;
    if target <= 3f64.sqrt() / 18.0 {
        return Err(Error::Params(format!(
            "k_i/k_s={target} gives three equilibria; need k_i/k_s > sqrt(3)/18"
        )));
    }
    let u = |s: f64| s * (s - 1.0) * (2.0 * s - 1.0) - target;
    let du = |s: f64| 6.0 * s * s - 6.0 * s + 1.0;
    // u is increasing on [1, inf) and u(1) = -target < 0.
    let mut lo = 1.0;
    let mut hi = 2.0;
    while u(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if u(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..4 {
        s -= u(s) / du(s);
    }
    Ok((1.0 - s, s))
}
