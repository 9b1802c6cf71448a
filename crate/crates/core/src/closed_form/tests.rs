use super::*;
use crate::tandem::SinkHandoff;

fn p(l1: f64, l2: f64, mu: f64, a: f64) -> SystemParams {
    SystemParams::new(l1, l2, mu, a).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn psi_hand_values() {
    assert_eq!(psi(&p(1.0, 0.0, 1.0, 1.0), -1.0).unwrap(), (-4.0, -16.0));
    assert_eq!(psi(&p(1.0, 1.0, 1.0, 1.0), 0.0).unwrap(), (-1.0, -3.0));
    let params = p(0.7, 2.2, 1.3, 0.4);
    let (r1, r) = (params.rho1(), params.rho());
    let (a, b) = psi(&params, 0.0).unwrap();
    assert!(close(a, -r1, 1e-15) && close(b, -r1 * (r + 1.0), 1e-15));
}

#[test]
fn psi_polys_match_values() {
    let l = Loads::of(&p(0.7, 2.2, 1.3, 0.4)).unwrap();
    for x in [-2.0, -0.3, 0.0, 0.8, 1.7] {
        let (a, b) = psi_values(&l, x);
        assert!(close(psi1_poly(&l).eval(x), a, 1e-13));
        assert!(close(psi2_poly(&l).eval(x), b, 1e-13));
    }
}

#[test]
fn preemptive_erlang_instance() {
    let params = p(1.0, 0.0, 1.0, 1.0);
    assert_eq!(mgf_preemptive(&params, -1.0).unwrap(), 0.125);
    for x in [-2.0, -1.0, -0.5, 0.5] {
        let m = mgf_preemptive(&params, x).unwrap();
        assert!(close(m, (1.0 - x).powi(-3), 1e-13), "{x}: {m}");
    }
    let pole = RationalMgf::preemptive(&params)
        .unwrap()
        .smallest_pole()
        .unwrap();
    assert!((pole - 1.0).abs() < 1e-6, "{pole}");
}

#[test]
fn normalization_at_zero() {
    for params in [
        p(1.0, 0.0, 1.0, 1.0),
        p(0.3, 4.0, 2.0, 0.1),
        p(5.0, 0.2, 0.5, 9.0),
    ] {
        assert!(close(mgf_preemptive(&params, 0.0).unwrap(), 1.0, 1e-12));
        assert!(close(mgf_blocking(&params, 0.0).unwrap(), 1.0, 1e-12));
    }
}

#[test]
fn blocking_hand_value_and_divergence() {
    let params = p(1.0, 0.0, 1.0, 1.0);
    assert!(close(
        mgf_blocking(&params, -1.0).unwrap(),
        9.0 / 128.0,
        1e-14
    ));
    let mut last = 0.0;
    for eps in [1e-1, 1e-2, 1e-3] {
        let m = mgf_blocking(&params, 1.0 - eps).unwrap();
        assert!(m > 10.0 * last, "{eps}: {m}");
        last = m;
    }
    assert!(last > 1e8, "{last}");
    assert!(matches!(
        mgf_blocking(&params, 1.0),
        Err(ClosedFormError::DomainExceeded { .. })
    ));
}

#[test]
fn blocking_pole_below_alpha_bar() {
    for (l1, l2) in [(1.0, 0.5), (0.2, 0.0), (3.0, 2.0)] {
        let pole = RationalMgf::blocking(&p(l1, l2, 1.0, 0.5))
            .unwrap()
            .smallest_pole()
            .unwrap();
        assert!(pole <= 0.5 + 1e-12, "{pole}");
    }
}

#[test]
fn rational_matches_direct_formulas() {
    for params in [
        p(1.0, 1.0, 1.0, 1.0),
        p(0.7, 2.3, 1.5, 0.4),
        p(2.0, 0.5, 1.0, 3.0),
    ] {
        let pre = RationalMgf::preemptive(&params).unwrap();
        let blk = RationalMgf::blocking(&params).unwrap();
        for s in [-3.0, -1.0, -0.2, 0.0, 0.05] {
            assert!(close(
                pre.eval(s).unwrap(),
                mgf_preemptive(&params, s).unwrap(),
                1e-12
            ));
            assert!(close(
                blk.eval(s).unwrap(),
                mgf_blocking(&params, s).unwrap(),
                1e-12
            ));
        }
    }
}

#[test]
fn stationary_values() {
    let pi = stationary_preemptive(&p(1.0, 1.0, 1.0, 1.0)).unwrap();
    let expect = [
        1.0 / 9.0,
        2.0 / 9.0,
        2.0 / 9.0,
        1.0 / 9.0,
        1.0 / 18.0,
        1.0 / 18.0,
        1.0 / 9.0,
        1.0 / 18.0,
        1.0 / 18.0,
    ];
    for (a, b) in pi.iter().zip(expect) {
        assert!((a - b).abs() < 1e-15);
    }
    let pi = stationary_blocking(&p(0.5, 0.5, 1.0, 1.0)).unwrap();
    assert_eq!(pi, [0.25, 0.375, 0.25, 0.125]);

    for params in [p(0.7, 2.3, 1.5, 0.4), p(3.0, 0.0, 0.2, 7.0)] {
        let pi = stationary_preemptive(&params).unwrap();
        assert!(close(pi.iter().sum(), 1.0, 1e-14));
        let idle = pi[0] + pi[3] + pi[6];
        assert!(close(
            idle,
            params.mu / (params.lambda() + params.mu),
            1e-14
        ));
        let pb = stationary_blocking(&params).unwrap();
        assert!(close(pb.iter().sum(), 1.0, 1e-14));
    }
}

#[test]
fn stationary_preemptive_balances() {
    let params = p(0.7, 2.3, 1.5, 0.4);
    let (l1, l2, mu, a) = (params.lambda1, params.lambda2, params.mu, params.alpha);
    let l = l1 + l2;
    let pi = stationary_preemptive(&params).unwrap();
    let residuals = [
        l * pi[0] - a * pi[3] - a * pi[6],
        (l + mu) * pi[1] - l1 * (pi[0] + pi[1] + pi[2]) - a * (pi[4] + pi[7]),
        (l + mu) * pi[2] - l2 * (pi[0] + pi[1] + pi[2]) - a * (pi[5] + pi[8]),
        (l + a) * pi[3] - mu * (pi[1] + pi[4] + pi[7]),
        (l + mu + a) * pi[4] - l1 * (pi[3] + pi[4] + pi[5]),
        (l + mu + a) * pi[5] - l2 * (pi[3] + pi[4] + pi[5]),
        (l + a) * pi[6] - mu * (pi[2] + pi[5] + pi[8]),
        (l + mu + a) * pi[7] - l1 * (pi[6] + pi[7] + pi[8]),
        (l + mu + a) * pi[8] - l2 * (pi[6] + pi[7] + pi[8]),
    ];
    for r in residuals {
        assert!(r.abs() <= 1e-12, "{r}");
    }
}

#[test]
fn per_state_preemptive_fixtures() {
    let params = p(1.0, 0.0, 1.0, 1.0);
    let v = per_state_vs_preemptive(&params, -1.0).unwrap();
    assert!(close(v.values[0], 1.0 / 18.0, 1e-14));
    for label in ["20", "21", "02", "12", "22"] {
        assert_eq!(v.get(label), Some(0.0));
    }
    let v0 = per_state_vs_preemptive(&params, 0.0).unwrap();
    let pi = stationary_preemptive(&params).unwrap();
    assert!(close(v0.values[0], pi[0], 1e-15));
    // Known mismatch: 5/24 against pi(10) = 3/8.
    assert!(close(v0.values[1], 5.0 / 24.0, 1e-15));
    assert!(close(pi[1], 3.0 / 8.0, 1e-15));
    assert!(v0.is_flagged(1) && !v0.is_flagged(4));

    let params = p(0.7, 2.3, 1.5, 0.4);
    let v0 = per_state_vs_preemptive(&params, 0.0).unwrap();
    let pi = stationary_preemptive(&params).unwrap();
    let a = params.alpha_bar();
    let r = params.rho();
    assert!(close(v0.values[0], a / ((a + r) * (1.0 + r)), 1e-14));
    for (q, (&v, &x)) in v0.values.iter().zip(&pi).enumerate().skip(4) {
        assert!(close(v, x, 1e-13), "state {q}");
    }
}

#[test]
fn per_state_blocking_fixtures() {
    let params = p(1.0, 0.0, 1.0, 1.0);
    let v = per_state_vs_blocking(&params, -1.0).unwrap();
    assert!(close(v.values[0], 1.0 / 32.0, 1e-14));
    let v0 = per_state_vs_blocking(&params, 0.0).unwrap();
    assert!(close(v0.values[3], 0.125, 1e-15));
    assert!(close(v0.values.iter().sum(), 0.75, 1e-15));
    assert!(close(v0.values[1], 0.125, 1e-15));
    assert!(v0.flagged.iter().all(|(_, d)| d.id == "DISC-2"));
}

#[test]
fn moments_erlang() {
    let params = p(1.0, 0.0, 1.0, 1.0);
    let m = moments_closed_form(&params, Policy::Preemptive, 2).unwrap();
    assert!(close(m[0], 1.0, 1e-15) && close(m[1], 3.0, 1e-14) && close(m[2], 12.0, 1e-13));
    assert!(close((m[2] - m[1] * m[1]).sqrt(), 3f64.sqrt(), 1e-13));
    assert_eq!(
        moments_closed_form(&params, Policy::Preemptive, 0).unwrap(),
        vec![1.0]
    );
    assert!(matches!(
        moments_closed_form(&params, Policy::Preemptive, 9),
        Err(ClosedFormError::MomentOrderTooHigh(9))
    ));
}

#[test]
fn single_source_mean() {
    for (l1, mu, a) in [
        (1.0, 1.0, 1.0),
        (2.0, 1.0, 4.0),
        (4.0, 2.0, 8.0),
        (0.3, 5.0, 0.7),
    ] {
        let params = p(l1, 0.0, mu, a);
        let m = moments_closed_form(&params, Policy::Preemptive, 1).unwrap();
        assert!(close(m[1], 1.0 / l1 + 1.0 / mu + 1.0 / a, 1e-12));
    }
}

#[test]
fn moments_match_finite_differences() {
    let h = 1e-5;
    for params in [p(0.7, 2.3, 1.5, 0.4), p(2.0, 0.5, 1.0, 3.0)] {
        for (policy, f) in [
            (
                Policy::Preemptive,
                mgf_preemptive as fn(&SystemParams, f64) -> Result<f64, ClosedFormError>,
            ),
            (Policy::Blocking(SinkHandoff::Drop), mgf_blocking),
        ] {
            let fd = (f(&params, h).unwrap() - f(&params, -h).unwrap()) / (2.0 * h);
            let m1 = moments_closed_form(&params, policy, 1).unwrap()[1];
            assert!((fd - m1).abs() <= 1e-5 * m1, "{policy}: {fd} vs {m1}");
        }
    }
}

#[test]
fn lcfs_limit() {
    assert_eq!(
        reference_limits(&p(1.0, 1.0, 1.0, 1.0))
            .unwrap()
            .lcfs_s_mean,
        3.0
    );
    let r = reference_limits(&p(1.0, 0.0, 1.0, 1.0)).unwrap();
    assert_eq!(r.single_source_mean, Some(3.0));
    assert_eq!(
        reference_limits(&p(4.0, 0.0, 2.0, 8.0))
            .unwrap()
            .single_source_mean,
        Some(0.875)
    );
    assert_eq!(
        reference_limits(&p(4.0, 1.0, 2.0, 8.0))
            .unwrap()
            .single_source_mean,
        None
    );
    for r1 in [0.2, 1.0, 3.0] {
        let params = p(r1, 1.5, 1.0, 1e6);
        let mean = moments_closed_form(&params, Policy::Preemptive, 1).unwrap()[1];
        let lim = reference_limits(&params).unwrap().lcfs_s_mean;
        assert!((mean - lim).abs() <= 1e-4 * lim, "{mean} vs {lim}");
    }
}

#[test]
fn double_pole_found() {
    // lambda1/(lambda1-s) * (1/(1-s))^2: double pole at 1, numerator-free.
    let params = p(4.0, 0.0, 1.0, 1.0);
    let pole = RationalMgf::preemptive(&params)
        .unwrap()
        .smallest_pole()
        .unwrap();
    assert!((pole - 1.0).abs() < 1e-6, "{pole}");
    let m = mgf_preemptive(&params, -1.0).unwrap();
    assert!(close(m, 4.0 / 5.0 / 4.0, 1e-13), "{m}");
}

#[test]
fn replace_has_no_closed_form() {
    let policy = Policy::Blocking(SinkHandoff::Replace);
    assert!(matches!(
        moments_closed_form(&p(1.0, 1.0, 1.0, 1.0), policy, 1),
        Err(ClosedFormError::Unavailable(_))
    ));
}
