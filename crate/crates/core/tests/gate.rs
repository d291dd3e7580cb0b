use proptest::prelude::*;
use solc::device::{Device, DeviceParams};
use solc::gate::{
    branch_drops, check_gate_configs, classify_config, relax_memristors, terminal_currents,
    truth_check, GateKind, GateState, GateTables, Stability, MEM_POLARITY,
};

fn dev() -> Device {
    Device::new(DeviceParams::default()).unwrap()
}

fn kind() -> impl Strategy<Value = GateKind> {
    prop_oneof![Just(GateKind::And), Just(GateKind::Or), Just(GateKind::Xor)]
}

#[test]
fn truth_tables() {
    let rows = [(false, false), (false, true), (true, false), (true, true)];
    let and: Vec<bool> = rows.iter().map(|&(a, b)| GateKind::And.eval(a, b)).collect();
    let or: Vec<bool> = rows.iter().map(|&(a, b)| GateKind::Or.eval(a, b)).collect();
    let xor: Vec<bool> = rows.iter().map(|&(a, b)| GateKind::Xor.eval(a, b)).collect();
    assert_eq!(and, [false, false, false, true]);
    assert_eq!(or, [false, true, true, true]);
    assert_eq!(xor, [false, true, true, false]);
    assert!(truth_check(GateKind::Xor, true, false, true));
    assert_eq!("so_and".parse::<GateKind>().unwrap(), GateKind::And);
    assert!("NAND".parse::<GateKind>().is_err());
}

#[test]
fn classification_counts() {
    for k in GateKind::ALL {
        let stable = (0..8)
            .filter(|c| {
                let v = [4, 2, 1].map(|b| if c & b != 0 { 1.0 } else { -1.0 });
                classify_config(k, v, 1.0).unwrap() == Stability::Stable
            })
            .count();
        assert_eq!(stable, 4);
    }
}

proptest! {
    #[test]
    fn terminal_currents_are_linear_in_the_drops(
        k in kind(),
        v in prop::array::uniform3(-2.0..2.0f64),
        x in prop::array::uniform3(prop::array::uniform4(0.0..=1.0f64)),
    ) {
        let t = GateTables::default();
        let d = dev();
        let got = terminal_currents(&t, k, &GateState { v, x }, &d);
        for term in 0..3 {
            let mut want = 0.0;
            #[allow(clippy::needless_range_loop)]
            for b in 0..5 {
                let q = t.coeffs(k, term, b);
                let drop = v[term] - (q.a1 * v[0] + q.a2 * v[1] + q.ao * v[2] + q.dc);
                let r = if b < 4 { 1e-2 * (1.0 - x[term][b]) + x[term][b] } else { 1.0 };
                want += drop / r;
            }
            prop_assert!((got[term] - want).abs() < 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn relaxation_drives_memristors_to_their_bounds(
        k in kind(),
        bits in prop::array::uniform3(any::<bool>()),
        x0 in prop::array::uniform3(prop::array::uniform4(0.0..=1.0f64)),
    ) {
        let t = GateTables::default();
        let d = dev();
        let v = bits.map(|b| if b { 1.0 } else { -1.0 });
        let x = relax_memristors(&t, k, v, x0, &d);
        let drops = branch_drops(&t, k, v, 1.0);
        for term in 0..3 {
            for m in 0..4 {
                let vm = MEM_POLARITY[m] * drops[term][m];
                let want = if vm > 0.0 { 0.0 } else if vm < 0.0 { 1.0 } else { x0[term][m] };
                prop_assert_eq!(x[term][m], want);
            }
        }
    }
}

#[test]
fn inconsistent_configurations_push_back() {
    let t = GateTables::default();
    let d = dev();
    let rows = check_gate_configs(&t, &d);
    assert_eq!(rows.len(), 24);
    assert_eq!(rows.iter().filter(|r| r.consistent).count(), 12);
    for r in rows.iter().filter(|r| !r.consistent) {
        assert!(r.passed, "{:?} {:?}: {}", r.kind, r.bits, r.detail);
    }
}

#[test]
fn some_consistent_configurations_are_exactly_quiet() {
    let t = GateTables::default();
    let d = dev();
    let rows = check_gate_configs(&t, &d);
    // AND with every terminal high and OR with every terminal low draw nothing.
    for (k, bits) in [(GateKind::And, [true; 3]), (GateKind::Or, [false; 3])] {
        let r = rows.iter().find(|r| r.kind == k && r.bits == bits).unwrap();
        assert!(r.passed && r.currents == [0.0; 3], "{r:?}");
    }
}

#[test]
fn overrides_change_the_check() {
    let mut t = GateTables::default();
    t.apply_overrides("gate.AND.OUT.LR.dc=5\n").unwrap();
    let d = dev();
    let rows = check_gate_configs(&t, &d);
    let r = rows.iter().find(|r| r.kind == GateKind::And && r.bits == [true; 3]).unwrap();
    assert!(!r.passed);
    assert!(t.apply_overrides("gate.AND.T9.LR.dc=5").is_err());
    assert!(t.apply_overrides("gate.AND.OUT.LR.zz=5").is_err());
}
