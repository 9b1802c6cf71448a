//! Mean and standard deviation of the source-1 AoI over a grid of source-1
//! loads at a fixed total arrival rate.

use aoi_core::closed_form::moments_closed_form;
use aoi_core::shs::aoi_moments;
use aoi_core::sim::{replication_seed, run_simulation, Horizon, SimConfig};
use aoi_core::tandem::build;
use aoi_core::{Policy, SinkHandoff, SystemParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::csv::{fmt_num, CsvWriter};
use crate::CliError;

pub const SWEEP_HEADER: [&str; 10] = [
    "policy",
    "method",
    "lambda1",
    "lambda2",
    "mu",
    "alpha",
    "rho1",
    "mean_aoi",
    "std_aoi",
    "ci95_mean",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    ShsEngine,
    Simulation,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::ShsEngine => "shs_engine",
            Method::Simulation => "simulation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub policy: Policy,
    pub method: Method,
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu: f64,
    pub alpha: f64,
    pub rho1: f64,
    pub mean_aoi: f64,
    pub std_aoi: f64,
    /// Only for simulation rows.
    pub ci95_mean: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub seed: u64,
    pub replications: u32,
    pub horizon: Horizon,
    pub warmup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub points: usize,
    pub policies: Vec<Policy>,
    pub sim: Option<SimSettings>,
}

/// `rho1_k = k * rho / (points + 1)`, `k = 1..=points`, with `rho = lambda/mu`.
pub fn rho1_grid(lambda: f64, mu: f64, points: usize) -> Vec<f64> {
    let rho = lambda / mu;
    (1..=points)
        .map(|k| k as f64 * rho / (points + 1) as f64)
        .collect()
}

fn std_of(m: &[f64]) -> f64 {
    (m[2] - m[1] * m[1]).max(0.0).sqrt()
}

fn point_rows(spec: &SweepSpec, k: usize, rho1: f64) -> Result<Vec<SweepRow>, CliError> {
    let lambda1 = rho1 * spec.mu;
    let lambda2 = (spec.lambda - lambda1).max(0.0);
    let params = SystemParams::new(lambda1, lambda2, spec.mu, spec.alpha)?;
    let mut rows = Vec::new();
    for (j, &policy) in spec.policies.iter().enumerate() {
        let row = |method, m: &[f64], ci95_mean| SweepRow {
            policy,
            method,
            lambda1,
            lambda2,
            mu: spec.mu,
            alpha: spec.alpha,
            rho1,
            mean_aoi: m[1],
            std_aoi: std_of(m),
            ci95_mean,
        };
        if policy != Policy::Blocking(SinkHandoff::Replace) {
            rows.push(row(
                Method::ClosedForm,
                &moments_closed_form(&params, policy, 2)?,
                None,
            ));
        }
        rows.push(row(
            Method::ShsEngine,
            &aoi_moments(&build(&params, policy)?, 2)?,
            None,
        ));
        if let Some(sim) = spec.sim {
            let config = SimConfig {
                seed: replication_seed(sim.seed, (k * spec.policies.len() + j) as u32),
                replications: sim.replications,
                warmup: sim.warmup,
                ..SimConfig::new(params, policy, sim.horizon)
            };
            let est = run_simulation(&config)?;
            rows.push(SweepRow {
                std_aoi: est.std,
                ci95_mean: est.ci95_mean,
                ..row(
                    Method::Simulation,
                    &[1.0, est.mean, est.second_moment],
                    None,
                )
            });
        }
    }
    Ok(rows)
}

/// Rows in (point, policy, method) order, whatever order points finish in.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, CliError> {
    if spec.points == 0 {
        return Err(CliError("sweep needs at least one point".into()));
    }
    let per_point = rho1_grid(spec.lambda, spec.mu, spec.points)
        .into_par_iter()
        .enumerate()
        .map(|(k, rho1)| point_rows(spec, k, rho1))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn to_csv(rows: &[SweepRow]) -> Result<String, CliError> {
    let mut w = CsvWriter::new(Vec::new(), &SWEEP_HEADER)?;
    for r in rows {
        w.row(&[
            r.policy.name().to_string(),
            r.method.name().to_string(),
            fmt_num(r.lambda1),
            fmt_num(r.lambda2),
            fmt_num(r.mu),
            fmt_num(r.alpha),
            fmt_num(r.rho1),
            fmt_num(r.mean_aoi),
            fmt_num(r.std_aoi),
            r.ci95_mean.map(fmt_num).unwrap_or_default(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()).expect("utf8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(points: usize) -> SweepSpec {
        SweepSpec {
            lambda: 5.0,
            mu: 1.0,
            alpha: 1.0,
            points,
            policies: vec![Policy::Preemptive, Policy::Blocking(SinkHandoff::Drop)],
            sim: None,
        }
    }

    #[test]
    fn grid_is_interior() {
        let g = rho1_grid(5.0, 1.0, 4);
        assert_eq!(g, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(rho1_grid(5.0, 2.0, 20).iter().all(|&r| r > 0.0 && r < 2.5));
    }

    #[test]
    fn default_sweep_shape_and_order() {
        let rows = run_sweep(&spec(20)).unwrap();
        assert_eq!(rows.len(), 80);
        for chunk in rows.chunks(4) {
            assert_eq!(chunk[0].method, Method::ClosedForm);
            assert_eq!(chunk[1].method, Method::ShsEngine);
            assert_eq!(chunk[0].policy, Policy::Preemptive);
            assert_eq!(chunk[2].policy, Policy::Blocking(SinkHandoff::Drop));
            assert!(chunk[0].mean_aoi <= chunk[2].mean_aoi);
            assert!((chunk[0].rho1 - chunk[0].lambda1 / chunk[0].mu).abs() < 1e-15);
            assert!((chunk[0].lambda1 + chunk[0].lambda2 - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn simulation_rows_carry_ci() {
        let mut s = spec(2);
        s.sim = Some(SimSettings {
            seed: 3,
            replications: 2,
            horizon: Horizon::Deliveries(2000),
            warmup: 0.1,
        });
        let rows = run_sweep(&s).unwrap();
        assert_eq!(rows.len(), 12);
        assert!(rows
            .iter()
            .all(|r| (r.method == Method::Simulation) == r.ci95_mean.is_some()));
        assert_eq!(rows, run_sweep(&s).unwrap());
    }

    #[test]
    fn replace_has_no_closed_form_rows() {
        let mut s = spec(3);
        s.policies = vec![Policy::Blocking(SinkHandoff::Replace)];
        let rows = run_sweep(&s).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.method == Method::ShsEngine));
    }
}
