use proptest::prelude::*;
use solc::compiler::{FactorSpec, SubsetSumSpec};
use solc::integrator::IntegrationOpts;
use solc::netlist::Netlist;
use solc::runner::{
    decode_voltages, estimate_success_probability, fit_power_law, scaling_sweep,
    semiprime_for_width, subset_sum_instance, verify_solution, wilson_interval, write_atomic,
    Answer, BitGroup, Family, Machine, Problem, SolveOpts, Status,
};

fn bits(value: u64, width: usize) -> Vec<bool> {
    (0..width).rev().map(|k| (value >> k) & 1 == 1).collect()
}

fn group(name: &str, value: u64, width: usize) -> BitGroup {
    BitGroup { name: name.into(), bits: bits(value, width) }
}

proptest! {
    #[test]
    fn wilson_bounds_solve_the_score_equation(n in 1usize..200, k_frac in 0.0..=1.0f64) {
        let k = ((n as f64) * k_frac).round() as usize;
        let z = 1.959963984540054;
        let (lo, hi) = wilson_interval(k, n, z);
        let ph = k as f64 / n as f64;
        prop_assert!(lo <= ph + 1e-12 && ph <= hi + 1e-12);
        // Interior bounds are roots of (ph - p)^2 = z^2 p (1 - p) / n.
        for b in [lo, hi] {
            if b > 0.0 && b < 1.0 {
                let lhs = (ph - b).powi(2);
                let rhs = z * z * b * (1.0 - b) / n as f64;
                prop_assert!((lhs - rhs).abs() < 1e-9, "b={} lhs={} rhs={}", b, lhs, rhs);
            }
        }
    }

    #[test]
    fn factor_verification_is_integer_arithmetic(p in 0u64..32, q in 0u64..8, n in 9u64..64) {
        let problem = Problem::Factor(FactorSpec::new(n, Some(6)).unwrap());
        let got = verify_solution(&problem, &[group("p", p, 5), group("q", q, 3)]);
        let want = p * q == n && p > 1 && q > 1;
        prop_assert_eq!(got.is_some(), want);
        if let Some(Answer::Factors { p: a, q: b }) = got {
            prop_assert_eq!((a, b), (p, q));
        }
    }

    #[test]
    fn subset_verification(mask in 0u64..8, target in 1u64..20) {
        let set = vec![5, 6, 7];
        let problem = Problem::SubsetSum(SubsetSumSpec::new(set.clone(), target, Some(3)).unwrap());
        let sel: Vec<bool> = (0..3).map(|j| (mask >> j) & 1 == 1).collect();
        let sum: u64 = set.iter().zip(&sel).filter(|(_, &b)| b).map(|(q, _)| q).sum();
        let got = verify_solution(&problem, &[BitGroup { name: "c".into(), bits: sel }]);
        prop_assert_eq!(got.is_some(), mask != 0 && sum == target);
    }

    #[test]
    fn power_law_fit_recovers_exact_data(a in 0.1..10.0f64, b in -2.0..3.0f64) {
        let xs = [2.0, 3.0, 5.0, 8.0, 13.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| a * x.powf(b)).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        prop_assert!((f.exponent - b).abs() < 1e-9);
        prop_assert!((f.prefactor - a).abs() < 1e-8 * a);
        prop_assert!(f.r2 > 1.0 - 1e-12 || b.abs() < 1e-6);
    }
}

#[test]
fn fit_interval_covers_noisy_slope() {
    let xs = [6.0, 9.0, 12.0, 15.0, 18.0];
    let noise = [1.02, 0.97, 1.01, 0.99, 1.03];
    let ys: Vec<f64> = xs.iter().zip(noise).map(|(x, e)| 3.0 * x * x * e).collect();
    let f = fit_power_law(&xs, &ys).unwrap();
    assert!(f.ci_low < 2.0 && 2.0 < f.ci_high, "{f:?}");
    assert!(fit_power_law(&[1.0], &[1.0]).is_none());
}

#[test]
fn ambiguous_readout_is_an_error() {
    let text = "SOLC-NETLIST v1\n[NODES]\n0\n1\n2\n[GATES]\nAND 0 1 2\n[GENERATORS]\n2 1.0 0.0\n[VCDCG]\n0\n1\n[READOUT]\nin 0 1\n[META]\n";
    let net = Netlist::deserialize(text).unwrap();
    let g = decode_voltages(&net, &[1.0, -0.9, 1.0], 1e-3).unwrap();
    assert_eq!(g[0].bits, vec![true, false]);
    assert_eq!(g[0].value(), 2);
    let e = decode_voltages(&net, &[1.0, 1e-4, 1.0], 1e-3).unwrap_err();
    assert!(e.to_string().contains("ambiguous"));
}

#[test]
fn canonical_instances() {
    assert_eq!(semiprime_for_width(15), Some(181 * 179));
    for s in 6..=20 {
        let n = semiprime_for_width(s).unwrap();
        assert!(n < 1 << s && n % 2 == 1);
    }
    let spec = subset_sum_instance(3, 4).unwrap();
    assert_eq!(spec.set, vec![15, 13, 11]);
    assert_eq!(spec.target, 26);
}

#[test]
fn structural_sweep_report() {
    let rep = scaling_sweep(Family::Factor, &[6, 8, 10], 0, &Machine::default(), &SolveOpts::default()).unwrap();
    assert_eq!(rep.records.len(), 3);
    assert!(rep.time_fit.is_none());
    let fit = rep.gate_fit.unwrap();
    // Small widths sit above the asymptotic exponent of 2.
    assert!(fit.exponent > 1.5 && fit.exponent < 3.0, "{fit:?}");
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).unwrap();
    let csv = String::from_utf8(buf).unwrap();
    assert!(csv.contains("size,instance,gates,state_dim"));
    assert!(csv.lines().any(|l| l.starts_with("gates,")));
    assert!(scaling_sweep(Family::Factor, &[8, 6], 0, &Machine::default(), &SolveOpts::default()).is_err());
}

#[test]
fn success_estimate_over_seeds() {
    let m = Machine::default();
    let problem = Problem::Factor(FactorSpec::new(15, Some(4)).unwrap());
    let opts = SolveOpts { integration: IntegrationOpts { t_max: 0.2, ..Default::default() }, ..Default::default() };
    let est = estimate_success_probability(&problem, &m, 3, &opts).unwrap();
    assert_eq!(est.trials, 3);
    assert_eq!(est.attempts.len(), 3);
    assert!(est.attempts.windows(2).all(|w| w[0].seed < w[1].seed));
    assert!(est.ci_low <= est.estimate && est.estimate <= est.ci_high);
    assert!(est.attempts.iter().all(|a| a.status != Status::Fault));
    assert!(estimate_success_probability(&problem, &m, 0, &opts).is_err());
}

#[test]
fn atomic_write_replaces_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("out.json");
    write_atomic(&p, b"one").unwrap();
    write_atomic(&p, b"two").unwrap();
    assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn machine_loading() {
    let m = Machine::from_kv_str("g_leak=2\ngate.OR.OUT.LR.dc=-3\n").unwrap();
    assert_eq!(m.dev.p.g_leak, 2.0);
    assert_eq!(m.tables.coeffs(solc::gate::GateKind::Or, 2, 4).dc, -3.0);
    assert!(Machine::from_kv_str("i_max=500").is_err());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.params");
    std::fs::write(&p, "C=1e-3\n").unwrap();
    assert_eq!(Machine::load(Some(&p)).unwrap().dev.p.c, 1e-3);
    assert!(Machine::load(Some(&dir.path().join("missing"))).is_err());
}
