mod common;

use solc::assembler::System;
use solc::compiler::{compile_adder, FactorSpec, DEFAULT_RAMP};
use solc::gate::{truth_check, GateKind};
use solc::integrator::{equilibrium_residual, initial_state, integrate, IntegrationOpts, Method, Outcome};
use solc::runner::{decode_readout, Answer, run_attempt, solve_on, Machine, Problem, SolveOpts, Status};

const CALIBRATED: &str = include_str!("../../../params/calibrated.params");

fn calibrated() -> Machine {
    Machine::from_kv_str(CALIBRATED).unwrap()
}

fn opts(t_max: f64) -> IntegrationOpts {
    IntegrationOpts { t_max, ..Default::default() }
}

#[test]
fn single_gates_settle_on_consistent_inputs() {
    let m = calibrated();
    for kind in GateKind::ALL {
        for out in [false, true] {
            let net = common::one_gate(kind, &[(2, if out { 1.0 } else { -1.0 })]);
            let sys = System::assemble(&net, &m.dev, &m.tables).unwrap();
            for seed in 0..3 {
                let o = opts(30.0);
                let r = integrate(&sys, &initial_state(&sys, seed), &o).unwrap();
                assert_eq!(r.outcome, Outcome::Converged, "{kind} out={out} seed={seed}");
                let g = decode_readout(&sys, &r.state, r.t_end, o.eq_tol_v).unwrap();
                let b = &g[0].bits;
                assert!(truth_check(kind, b[0], b[1], out), "{kind} out={out}: {b:?}");
                let res = equilibrium_residual(&sys, r.t_end, &r.state);
                assert!(res <= 10.0 * o.eq_tol_v, "residual {res}");
                assert!(r.audit.max_abs_i <= 1.05 * m.dev.p.i_max);
            }
        }
    }
}

#[test]
fn reversed_adder_finds_operands() {
    let m = calibrated();
    let comp = compile_adder(2, 5, DEFAULT_RAMP).unwrap();
    let sys = System::assemble(&comp.netlist, &m.dev, &m.tables).unwrap();
    let mut solved = 0;
    for seed in 0..4 {
        let o = opts(40.0);
        let r = integrate(&sys, &initial_state(&sys, seed), &o).unwrap();
        if r.outcome == Outcome::Converged {
            let g = decode_readout(&sys, &r.state, r.t_end, o.eq_tol_v).unwrap();
            assert_eq!(g[0].value() + g[1].value(), 5, "{g:?}");
            solved += 1;
        }
    }
    assert!(solved >= 2, "{solved}/4");
}

#[test]
fn factors_fifteen_on_the_smallest_multiplier() {
    let m = calibrated();
    let problem = Problem::Factor(FactorSpec::new(15, Some(4)).unwrap());
    let c = problem.compile(DEFAULT_RAMP).unwrap();
    let sys = System::assemble(&c.netlist, &m.dev, &m.tables).unwrap();
    let so = SolveOpts { integration: opts(40.0), retries: 3, ramp: DEFAULT_RAMP };
    let out = solve_on(&problem, &sys, &so).unwrap();
    assert_eq!(out.status, Status::Solved, "{:?}", out.attempts);
    let Some(Answer::Factors { p, q }) = out.answer else { panic!("no factors") };
    assert_eq!(p * q, 15);
}

#[test]
fn runs_are_deterministic_per_seed() {
    let m = calibrated();
    let problem = Problem::Factor(FactorSpec::new(15, Some(4)).unwrap());
    let c = problem.compile(DEFAULT_RAMP).unwrap();
    let sys = System::assemble(&c.netlist, &m.dev, &m.tables).unwrap();
    let o = opts(1.0);
    let (a, ra) = run_attempt(&problem, &sys, &o, 11).unwrap();
    let (b, rb) = run_attempt(&problem, &sys, &o, 11).unwrap();
    assert_eq!(ra.state, rb.state);
    assert_eq!(a.steps, b.steps);
    let (_, rc) = run_attempt(&problem, &sys, &o, 12).unwrap();
    assert_ne!(ra.state, rc.state);
}

#[test]
fn methods_agree_on_a_short_horizon() {
    let m = calibrated();
    let net = common::one_gate(GateKind::Or, &[(2, 1.0)]);
    let sys = System::assemble(&net, &m.dev, &m.tables).unwrap();
    let y0 = initial_state(&sys, 5);
    let mut finals = Vec::new();
    for method in [Method::BackwardEuler, Method::Trapezoidal] {
        let o = IntegrationOpts { method, dt: 1e-5, t_max: 0.01, ..Default::default() };
        finals.push(integrate(&sys, &y0, &o).unwrap().state);
    }
    let l = sys.layout;
    for k in l.v() {
        assert!((finals[0][k] - finals[1][k]).abs() < 1e-2, "node {k}");
    }
}

#[test]
fn state_bounds_hold_along_runs() {
    let m = calibrated();
    let problem = Problem::Factor(FactorSpec::new(21, Some(6)).unwrap());
    let c = problem.compile(DEFAULT_RAMP).unwrap();
    let sys = System::assemble(&c.netlist, &m.dev, &m.tables).unwrap();
    let r = integrate(&sys, &initial_state(&sys, 3), &opts(3.0)).unwrap();
    let l = sys.layout;
    assert!(r.state[l.x()].iter().all(|x| (0.0..=1.0).contains(x)));
    assert!(r.state[l.s()].iter().all(|s| (sys.s_min..=sys.s_max).contains(s)));
    assert!(r.audit.max_abs_i <= 1.05 * m.dev.p.i_max);
}

#[test]
fn jacobian_matches_differences_with_calibrated_parameters() {
    let m = calibrated();
    let mut rng = common::rng(1);
    let adder = compile_adder(2, 3, DEFAULT_RAMP).unwrap();
    let nets = [common::one_gate(GateKind::Xor, &[]), common::one_gate(GateKind::And, &[(2, 1.0)]), adder.netlist];
    for net in &nets {
        let sys = System::assemble(net, &m.dev, &m.tables).unwrap();
        for _ in 0..5 {
            let y = common::smooth_state(&sys, &mut rng, 0.02);
            let e = common::jacobian_mismatch(&sys, 0.02, &y);
            assert!(e < 1e-5, "mismatch {e}");
        }
    }
}

#[test]
fn memristor_voltage_formulation_agrees() {
    let m = calibrated();
    let mut rng = common::rng(2);
    for kind in GateKind::ALL {
        for pinned in [vec![], vec![(2u32, -1.0)]] {
            let sys = System::assemble(&common::one_gate(kind, &pinned), &m.dev, &m.tables).unwrap();
            for _ in 0..10 {
                // Inside the generator ramp as well as after it.
                for t in [0.01, 0.5] {
                    let y = common::smooth_state(&sys, &mut rng, t);
                    let e = common::vm_mismatch(&sys, t, &y);
                    assert!(e < 1e-10, "{kind} t={t}: {e}");
                }
            }
        }
    }
}

#[test]
fn leak_stabilizes_the_frozen_network() {
    let mut rng = common::rng(3);
    let free = common::one_gate(GateKind::And, &[]);
    use rand::Rng;
    let m = calibrated();
    let sys = System::assemble(&free, &m.dev, &m.tables).unwrap();
    for _ in 0..50 {
        let x: Vec<f64> = (0..sys.layout.nm).map(|_| rng.random::<f64>()).collect();
        assert!(sys.linear_eigen_check(&x).unwrap() < 0.0);
    }
    // Without a leak every memristor off already gives a positive abscissa.
    let bare = Machine::default();
    let sys = System::assemble(&free, &bare.dev, &bare.tables).unwrap();
    assert!(sys.linear_eigen_check(&vec![1.0; sys.layout.nm]).unwrap() > 0.0);
}
