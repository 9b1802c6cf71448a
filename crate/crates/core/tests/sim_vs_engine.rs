use aoi_core::shs::{aoi_moments, mgf};
use aoi_core::sim::{run_simulation, Horizon, SimConfig};
use aoi_core::tandem::{build, swap_sources};
use aoi_core::{Policy, SinkHandoff, SystemParams};

fn check(p: SystemParams, policy: Policy, source: u8, seed: u64) {
    let config = SimConfig {
        source,
        seed,
        replications: 16,
        mgf_points: vec![-1.0, -0.25],
        ..SimConfig::new(p, policy, Horizon::Deliveries(25_000))
    };
    let est = run_simulation(&config).unwrap();
    let tracked = if source == 1 {
        p
    } else {
        swap_sources(&p).unwrap()
    };
    let model = build(&tracked, policy).unwrap();
    let m = aoi_moments(&model, 2).unwrap();
    let std = (m[2] - m[1] * m[1]).sqrt();
    let tag = format!("{policy:?} source {source} {p:?}");
    // About fifty comparisons per run, so a 4-standard-error band.
    let within = |x: f64, se: Option<f64>, target: f64, what: &str| {
        let se = se.unwrap();
        assert!(
            (x - target).abs() <= 4.0 * se,
            "{tag} {what}: {x} vs {target} (se {se})"
        );
    };
    within(est.mean, est.stderr_mean, m[1], "mean");
    within(
        est.second_moment,
        est.stderr_second_moment,
        m[2],
        "second moment",
    );
    within(est.std, est.stderr_std, std, "std");
    for point in &est.mgf {
        within(
            point.value,
            point.stderr,
            mgf(&model, point.s).unwrap(),
            "mgf",
        );
    }
}

#[test]
fn simulation_agrees_with_engine() {
    let grid = [
        SystemParams::new(1.0, 0.5, 1.0, 1.0).unwrap(),
        SystemParams::new(0.4, 2.0, 2.0, 0.7).unwrap(),
        SystemParams::new(3.0, 1.0, 0.8, 2.5).unwrap(),
    ];
    for (k, p) in grid.into_iter().enumerate() {
        for policy in [
            Policy::Preemptive,
            Policy::Blocking(SinkHandoff::Drop),
            Policy::Blocking(SinkHandoff::Replace),
        ] {
            check(p, policy, 1, 100 + k as u64);
        }
    }
}

#[test]
fn source_two_tracked() {
    let p = SystemParams::new(0.6, 1.7, 1.2, 0.9).unwrap();
    check(p, Policy::Preemptive, 2, 5);
    check(p, Policy::Blocking(SinkHandoff::Drop), 2, 6);
}
