#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solc::assembler::System;
use solc::gate::GateKind;
use solc::netlist::{GateInst, Generator, Netlist, Node, ReadoutGroup};

/// One gate on nodes 0, 1, 2 with the listed nodes pinned by generators.
pub fn one_gate(kind: GateKind, pinned: &[(u32, f64)]) -> Netlist {
    Netlist::build(
        (0..3).map(|id| Node { id, label: format!("n{id}") }).collect(),
        vec![GateInst { kind, terms: [0, 1, 2] }],
        pinned.iter().map(|&(node, level)| Generator { node, level, ramp: 0.05 }).collect(),
        None,
        vec![ReadoutGroup { name: "in".into(), nodes: vec![0, 1] }],
    )
    .expect("valid one-gate netlist")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random state away from the switching surfaces of the ideal steps: memristor
/// voltages, `x` and the current magnitudes all keep a margin from their kinks.
pub fn smooth_state(sys: &System, rng: &mut ChaCha8Rng, t: f64) -> Vec<f64> {
    let l = sys.layout;
    let p = &sys.dev.p;
    loop {
        let mut y = vec![0.0; l.dim()];
        for k in l.v() {
            y[k] = rng.random_range(-1.8..1.8);
        }
        for k in l.x() {
            y[k] = rng.random_range(0.05..0.95);
        }
        for k in l.i() {
            let mag = rng.random_range(0.1 * p.i_max..0.9 * p.i_max);
            y[k] = if rng.random::<bool>() { mag } else { -mag };
        }
        let (s0, s1) = (sys.s_min, sys.s_max);
        for k in l.s() {
            y[k] = rng.random_range(s0..s1);
        }
        let vm = sys.memristor_voltages(&y, t);
        let knots = [-1.0, 0.0, 1.0].map(|u| u * p.v_c);
        let near_knot = l.v().any(|k| knots.iter().any(|kn| (y[k] - kn).abs() < 1e-3));
        // Branches wired as v_t - v_t carry exactly zero and stay smooth.
        if vm.iter().all(|v| *v == 0.0 || v.abs() > 1e-3) && !near_knot {
            return y;
        }
    }
}

/// Central finite-difference Jacobian, column by column.
pub fn fd_jacobian(sys: &System, t: f64, y: &[f64]) -> Vec<Vec<f64>> {
    let n = y.len();
    let mut cols = Vec::with_capacity(n);
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = 1e-6 * y[j].abs().max(1.0);
        yp[j] = y[j] + h;
        sys.eval_rhs(t, &yp, &mut fp);
        yp[j] = y[j] - h;
        sys.eval_rhs(t, &yp, &mut fm);
        yp[j] = y[j];
        cols.push((0..n).map(|i| (fp[i] - fm[i]) / (2.0 * h)).collect());
    }
    cols
}

/// Worst column-relative mismatch between the analytic and finite-difference Jacobians.
pub fn jacobian_mismatch(sys: &System, t: f64, y: &[f64]) -> f64 {
    let a = sys.jacobian_dense(t, y);
    let fd = fd_jacobian(sys, t, y);
    let mut worst = 0.0f64;
    for (j, col) in fd.iter().enumerate() {
        let scale = col.iter().chain(a.column(j).iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            continue;
        }
        for (i, v) in col.iter().enumerate() {
            worst = worst.max((a[(i, j)] - v).abs() / scale);
        }
    }
    worst
}

/// Worst relative gap between the two memristor-voltage rate formulations.
pub fn vm_mismatch(sys: &System, t: f64, y: &[f64]) -> f64 {
    let vm = sys.memristor_voltages(y, t);
    let direct = sys.vm_formulation_rate(&vm, y, t).expect("formulation defined");
    let mapped = sys.vm_rate_from_nodes(y, t);
    let scale = mapped.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    direct.iter().zip(&mapped).map(|(a, b)| (a - b).abs() / scale).fold(0.0, f64::max)
}
