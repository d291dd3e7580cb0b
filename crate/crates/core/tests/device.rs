use proptest::prelude::*;
use solc::device::{f_dcg, smoothstep_coeffs, solve_s_bounds, validate_params, Device, DeviceParams, SmoothStep};

fn dev() -> Device {
    Device::new(DeviceParams::default()).unwrap()
}

#[test]
fn smoothstep_matches_closed_forms() {
    // 3y^2 - 2y^3, 6y^5 - 15y^4 + 10y^3 and -20y^7 + 70y^6 - 84y^5 + 35y^4.
    assert_eq!(smoothstep_coeffs(1).unwrap(), vec![3.0, -2.0]);
    assert_eq!(smoothstep_coeffs(2).unwrap(), vec![10.0, -15.0, 6.0]);
    assert_eq!(smoothstep_coeffs(3).unwrap(), vec![35.0, -84.0, 70.0, -20.0]);
    assert!(smoothstep_coeffs(0).is_err());
}

#[test]
fn smoothstep_has_unit_half_integral() {
    // Symmetric about (1/2, 1/2), so the area under it is exactly 1/2.
    for r in 1..=6 {
        let st = SmoothStep::new(r).unwrap();
        let n = 2000;
        let h = 1.0 / n as f64;
        let simpson: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                w * st.eval(k as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((simpson - 0.5).abs() < 1e-10, "r={r}: {simpson}");
    }
}

#[test]
fn smoothstep_is_flat_to_order_r() {
    for r in 1..=4u32 {
        let st = SmoothStep::new(r).unwrap();
        // theta(e) = O(e^(r+1)), theta'(e) = O(e^r).
        for e in [1e-2, 1e-3] {
            assert!(st.eval(e) < 1e3 * e.powi(r as i32 + 1));
            assert!(st.deriv(e) < 1e3 * e.powi(r as i32));
            assert!(st.deriv(1.0 - e) < 1e3 * e.powi(r as i32));
        }
    }
}

proptest! {
    #[test]
    fn smoothstep_symmetric_and_monotone(r in 1u32..=6, y in 0.0..1.0f64, dy in 0.0..0.1f64) {
        let st = SmoothStep::new(r).unwrap();
        prop_assert!((st.eval(y) + st.eval(1.0 - y) - 1.0).abs() < 1e-12);
        prop_assert!(st.eval((y + dy).min(1.0)) >= st.eval(y) - 1e-15);
        prop_assert!((0.0..=1.0).contains(&st.eval(y)));
    }

    #[test]
    fn smoothstep_derivative_matches_differences(r in 1u32..=4, y in 0.01..0.99f64) {
        let st = SmoothStep::new(r).unwrap();
        let h = 1e-6;
        let fd = (st.eval(y + h) - st.eval(y - h)) / (2.0 * h);
        prop_assert!((st.deriv(y) - fd).abs() < 1e-6 * st.deriv(y).abs().max(1.0));
    }

    #[test]
    fn dcg_is_odd_with_matching_derivative(v in -3.0..3.0f64) {
        let p = DeviceParams::default();
        let (f, d) = f_dcg(v, p.v_c, p.q, p.m0, p.m1);
        let (g, e) = f_dcg(-v, p.v_c, p.q, p.m0, p.m1);
        prop_assert!((f + g).abs() < 1e-9 && (d - e).abs() < 1e-9);
        let h = 1e-7;
        let knot = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().any(|k| (v - k).abs() < 1e-5);
        if !knot {
            let fd = (f_dcg(v + h, p.v_c, p.q, p.m0, p.m1).0 - f_dcg(v - h, p.v_c, p.q, p.m0, p.m1).0) / (2.0 * h);
            prop_assert!((fd - d).abs() < 1e-4 * d.abs().max(1.0));
        }
    }

    #[test]
    fn memristor_update_stays_in_bounds(x in 0.0..=1.0f64, v in -5.0..5.0f64, dt in 0.0..1.0f64) {
        let d = dev();
        let y = d.memristor_advance(x, v, dt);
        prop_assert!((0.0..=1.0).contains(&y));
        // Positive memristor voltage lowers the resistance.
        if v > 0.0 { prop_assert!(y <= x); } else { prop_assert!(y >= x); }
    }

    #[test]
    fn params_text_round_trip(c in 1e-12..1.0f64, g in 0.0..10.0f64, r in 1u32..5, imax in 1.0..50.0f64) {
        let mut p = DeviceParams { c, g_leak: g, r, i_max: imax, ..Default::default() };
        p.k = if r % 2 == 0 { f64::INFINITY } else { 25.0 };
        let back = DeviceParams::from_kv_str(&p.to_kv_string()).unwrap();
        prop_assert_eq!(back, p);
    }
}

#[test]
fn dcg_curve_shape() {
    let p = DeviceParams::default();
    let f = |v: f64| f_dcg(v, p.v_c, p.q, p.m0, p.m1);
    for v in [-1.0, 0.0, 1.0] {
        assert_eq!(f(v).0, 0.0);
    }
    assert_eq!(f(0.0).1, -p.m0);
    assert_eq!(f(1.0).1, p.m1);
    assert_eq!(f(5.0), (p.q, 0.0));
    assert_eq!(f(-5.0), (-p.q, 0.0));
    // Hermite midpoint between the 0 and v_c knots: (h/8)(d0 - d1).
    assert!((f(0.5).0 - (-(p.m0 + p.m1) / 8.0)).abs() < 1e-12);
}

#[test]
fn s_bounds_are_the_outer_roots() {
    for (ki, ks) in [(1.0, 1.0), (1e-7, 1e-7), (2.0, 5.0), (1e3, 1e3)] {
        let (lo, hi) = solve_s_bounds(ki, ks).unwrap();
        let cubic = |s: f64| -ks * s * (s - 1.0) * (2.0 * s - 1.0);
        assert!((cubic(hi) + ki).abs() < 1e-9 * ki.max(1.0), "hi={hi}");
        assert!((cubic(lo) - ki).abs() < 1e-9 * ki.max(1.0), "lo={lo}");
        assert!((lo + hi - 1.0).abs() < 1e-12 && hi > 1.0);
    }
    assert!(solve_s_bounds(0.01, 1.0).is_err());
}

#[test]
fn exact_memristor_update_matches_fine_integration() {
    let d = dev();
    let p = &d.p;
    for (x0, v) in [(0.8, 0.002), (0.3, -0.004), (0.5, 0.0001)] {
        let t = 1.0;
        let exact = d.memristor_advance(x0, v, t);
        // RK4 on dx/dt = -alpha g(x) v.
        let rate = |x: f64| -p.alpha * v / p.resistance(x);
        let n = 20_000;
        let h = t / n as f64;
        let mut x = x0;
        for _ in 0..n {
            let k1 = rate(x);
            let k2 = rate(x + 0.5 * h * k1);
            let k3 = rate(x + 0.5 * h * k2);
            let k4 = rate(x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!((exact - x).abs() < 1e-9, "x0={x0} v={v}: {exact} vs {x}");
    }
}

#[test]
fn memristor_saturates_at_the_bounds() {
    let d = dev();
    assert_eq!(d.memristor_advance(0.5, 1.0, 10.0), 0.0);
    assert_eq!(d.memristor_advance(0.5, -1.0, 10.0), 1.0);
    assert_eq!(d.window(0.0, 1.0), 0.0);
    assert_eq!(d.window(1.0, -1.0), 0.0);
    assert_eq!(d.window(0.0, -1.0), 1.0);
    assert_eq!(d.memristor_advance(0.4, 0.0, 1.0), 0.4);
}

#[test]
fn s_equation_regimes() {
    let p = DeviceParams { k_i: 2.0, k_s: 1.0, ..Default::default() };
    let d = Device::new(p).unwrap();
    assert_eq!(d.f_s(&[0.0, 0.0], 0.0), 2.0);
    assert_eq!(d.f_s(&[0.0, 25.0], 0.0), -2.0);
    assert_eq!(d.f_s(&[0.0, 5.0], 0.0), 0.0);
    assert_eq!(d.rho(0.6), 1.0);
    assert_eq!(d.rho(0.4), 0.0);
}

#[test]
fn s_current_derivatives_with_smooth_steps() {
    let p = DeviceParams { k_i: 2.0, k_s: 1.0, delta_i: 4.0, i_max: 2.0, i_min: 0.5, ..Default::default() };
    let d = Device::new(p).unwrap();
    let cur = [0.3, 1.8, -0.9];
    let g = d.f_s_di(&cur);
    for j in 0..cur.len() {
        let h = 1e-6;
        let mut a = cur;
        let mut b = cur;
        a[j] += h;
        b[j] -= h;
        let fd = (d.f_s(&a, 0.7) - d.f_s(&b, 0.7)) / (2.0 * h);
        assert!((fd - g[j]).abs() < 1e-6, "j={j}: {fd} vs {}", g[j]);
    }
}

#[test]
fn parameter_validation() {
    assert!(validate_params(&DeviceParams::default()).is_ok());
    let warn = validate_params(&DeviceParams::default()).unwrap();
    assert!(warn.iter().any(|w| w.to_string().contains("k_s")));
    let bad = DeviceParams { i_max: 200.0, ..Default::default() };
    assert!(validate_params(&bad).is_err());
    let bad = DeviceParams { r_on: 2.0, ..Default::default() };
    assert!(validate_params(&bad).is_err());
    assert!(DeviceParams::from_kv_str("nope=1").is_err());
    assert!(DeviceParams::from_kv_str("C 1").is_err());
    let p = DeviceParams::from_kv_str("# comment\nC=1e-2 # trailing\nk=inf\ngate.AND.T1.LM1.a1=3\n").unwrap();
    assert_eq!(p.c, 1e-2);
    assert!(p.k.is_infinite());
}
