//! Discrete-event simulation of the two-server tandem.
//!
//! Each replication is a Gillespie-style run: the time to the next event is
//! exponential with the total rate of the events that can change the state,
//! and the event is picked in proportion to its rate. Preempted or replaced
//! service is resampled rather than tracked, which is exact for exponential
//! servers. The tracked source's age is integrated exactly between its
//! deliveries.

mod path;
mod state;

pub use path::{path_accumulate, PathIntegrals};
pub use state::{Event, Packet, SystemState};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shs::mgf_domain_bound;
use crate::tandem::{self, swap_sources, ModelError, Policy, SystemParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("infeasible event {event:?}: {reason}")]
    InfeasibleEvent { event: Event, reason: &'static str },
    #[error("replications were produced by different configurations")]
    MismatchedConfig,
    #[error("no delivery of the tracked source inside the measurement window")]
    NoDeliveries,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Run length. Deliveries counts delivered packets of the tracked source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Horizon {
    Deliveries(u64),
    Time(f64),
}

pub const DEFAULT_WARMUP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: SystemParams,
    pub policy: Policy,
    /// Tracked source, 1 or 2.
    pub source: u8,
    pub horizon: Horizon,
    /// Leading fraction of the horizon that is discarded.
    pub warmup: f64,
    pub seed: u64,
    pub replications: u32,
    pub mgf_points: Vec<f64>,
}

impl SimConfig {
    pub fn new(params: SystemParams, policy: Policy, horizon: Horizon) -> Self {
        Self {
            params,
            policy,
            source: 1,
            horizon,
            warmup: DEFAULT_WARMUP,
            seed: 0,
            replications: 1,
            mgf_points: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        let p = &self.params;
        SystemParams::new(p.lambda1, p.lambda2, p.mu, p.alpha)?;
        if !(1..=2).contains(&self.source) {
            return bad(format!("source must be 1 or 2, got {}", self.source));
        }
        let rate = if self.source == 1 {
            p.lambda1
        } else {
            p.lambda2
        };
        if rate <= 0.0 {
            return bad(format!(
                "tracked source {} has zero arrival rate",
                self.source
            ));
        }
        if !(0.0..0.5).contains(&self.warmup) {
            return bad(format!("warmup {} outside [0, 0.5)", self.warmup));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        match self.horizon {
            Horizon::Deliveries(n) if n < 2 => {
                return bad("deliveries horizon must be at least 2".into())
            }
            Horizon::Time(t) if !(t > 0.0 && t.is_finite()) => {
                return bad(format!("time horizon {t} must be positive"))
            }
            _ => {}
        }
        if self.mgf_points.iter().any(|s| !s.is_finite()) {
            return bad("MGF points must be finite".into());
        }
        if self.mgf_points.iter().any(|&s| s > 0.0) {
            let bound = mgf_domain_bound(&self.tracked_model()?);
            if let Some(s) = self.mgf_points.iter().find(|&&s| s >= bound) {
                return bad(format!(
                    "MGF point {s} is outside the domain (bound {bound})"
                ));
            }
        }
        Ok(())
    }

    fn tracked_model(&self) -> Result<crate::shs::ShsModel, SimError> {
        let params = if self.source == 1 {
            self.params
        } else {
            swap_sources(&self.params)?
        };
        Ok(tandem::build(&params, self.policy)?)
    }
}

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index`: `mix64(base ^ mix64(index))`, where `mix64`
/// is the splitmix64 step.
pub fn replication_seed(base: u64, index: u32) -> u64 {
    mix64(base ^ mix64(u64::from(index)))
}

/// Raw accumulators of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub config: SimConfig,
    pub index: u32,
    pub seed: u64,
    pub measured_time: f64,
    pub deliveries: u64,
    pub events: u64,
    pub integral_first: f64,
    pub integral_second: f64,
    pub integral_exp: Vec<f64>,
}

impl ReplicationResult {
    pub fn mean(&self) -> f64 {
        self.integral_first / self.measured_time
    }
    pub fn second_moment(&self) -> f64 {
        self.integral_second / self.measured_time
    }
    pub fn std(&self) -> f64 {
        (self.second_moment() - self.mean().powi(2)).max(0.0).sqrt()
    }
    pub fn mgf(&self) -> Vec<f64> {
        self.integral_exp
            .iter()
            .map(|v| v / self.measured_time)
            .collect()
    }
}

struct Accumulator {
    time: f64,
    first: f64,
    second: f64,
    exp: Vec<f64>,
}

impl Accumulator {
    fn add(&mut self, s_list: &[f64], a: f64, len: f64) {
        self.time += len;
        self.first += path::linear_integral(a, len);
        self.second += path::square_integral(a, len);
        for (acc, &s) in self.exp.iter_mut().zip(s_list) {
            *acc += path::exp_integral(a, len, s);
        }
    }
}

/// Runs replication `index` of `config`.
pub fn run_replication(config: &SimConfig, index: u32) -> Result<ReplicationResult, SimError> {
    config.validate()?;
    let seed = replication_seed(config.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let SystemParams {
        lambda1,
        lambda2,
        mu,
        alpha,
    } = config.params;
    let preemptive = config.policy == Policy::Preemptive;
    let tracked = config.source;
    let s_list = &config.mgf_points;

    let (end_time, window_start, skip, target) = match config.horizon {
        Horizon::Time(t) => (t, config.warmup * t, 0, u64::MAX),
        Horizon::Deliveries(n) => {
            let skip = ((config.warmup * n as f64) as u64).max(1);
            (f64::INFINITY, f64::INFINITY, skip, n)
        }
    };

    let mut st = SystemState::new();
    let mut acc = Accumulator {
        time: 0.0,
        first: 0.0,
        second: 0.0,
        exp: vec![0.0; s_list.len()],
    };
    // Start (time, age) of the open segment inside the window.
    let mut segment: Option<(f64, f64)> = None;
    let mut deliveries = 0u64;
    let mut measured = 0u64;
    let mut events = 0u64;

    loop {
        let arrivals_on = preemptive || st.transmitter.is_none();
        let r1 = if arrivals_on { lambda1 } else { 0.0 };
        let r2 = if arrivals_on { lambda2 } else { 0.0 };
        let rt = if st.transmitter.is_some() { mu } else { 0.0 };
        let rs = if st.sink.is_some() { alpha } else { 0.0 };
        let total = r1 + r2 + rt + rs;
        let wait: f64 = rng.sample(Exp1);
        let now = st.clock + wait / total;

        if now >= end_time {
            if let Some((t0, a0)) = segment {
                acc.add(s_list, a0, end_time - t0);
            }
            break;
        }
        if segment.is_none() && now >= window_start {
            if let Some(g) = st.last_delivered[usize::from(tracked - 1)] {
                segment = Some((window_start, window_start - g));
            }
        }

        let u = rng.random::<f64>() * total;
        let event = if u < r1 {
            Event::Arrival(1)
        } else if u < r1 + r2 {
            Event::Arrival(2)
        } else if u < r1 + r2 + rt {
            Event::TransmitterDone
        } else {
            Event::SinkDone
        };
        events += 1;
        let Some(packet) = st.step(config.policy, event, now)? else {
            continue;
        };
        if packet.source != tracked {
            continue;
        }
        deliveries += 1;
        if let Some((t0, a0)) = segment {
            acc.add(s_list, a0, now - t0);
            measured += 1;
        }
        let in_window = match config.horizon {
            Horizon::Deliveries(_) => deliveries >= skip,
            Horizon::Time(_) => now >= window_start,
        };
        if in_window {
            segment = Some((now, now - packet.generated));
        }
        if deliveries == target {
            break;
        }
    }

    if acc.time <= 0.0 {
        return Err(SimError::NoDeliveries);
    }
    Ok(ReplicationResult {
        config: config.clone(),
        index,
        seed,
        measured_time: acc.time,
        deliveries: measured,
        events,
        integral_first: acc.first,
        integral_second: acc.second,
        integral_exp: acc.exp,
    })
}

/// Runs all replications (in parallel, results kept in index order) and
/// merges them.
pub fn run_simulation(config: &SimConfig) -> Result<SimEstimate, SimError> {
    config.validate()?;
    let reps = (0..config.replications)
        .into_par_iter()
        .map(|i| run_replication(config, i))
        .collect::<Result<Vec<_>, _>>()?;
    merge_replications(&reps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfEstimate {
    pub s: f64,
    pub value: f64,
    pub ci95: Option<f64>,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub index: u32,
    pub seed: u64,
    pub mean: f64,
    pub second_moment: f64,
    pub std: f64,
    pub mgf: Vec<f64>,
    pub measured_time: f64,
    pub deliveries: u64,
    pub events: u64,
}

/// Across-replication estimates. Confidence half-widths use the normal
/// approximation `1.96 * sd / sqrt(R)` and are `None` for a single
/// replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub mean: f64,
    pub second_moment: f64,
    pub std: f64,
    pub ci95_mean: Option<f64>,
    pub ci95_second_moment: Option<f64>,
    pub ci95_std: Option<f64>,
    pub stderr_mean: Option<f64>,
    pub stderr_second_moment: Option<f64>,
    pub stderr_std: Option<f64>,
    pub mgf: Vec<MgfEstimate>,
    pub seed: u64,
    pub replications: u32,
    pub horizon: Horizon,
    pub warmup: f64,
    pub policy: Policy,
    pub source: u8,
    pub params: SystemParams,
    pub events_processed: u64,
    pub per_replication: Vec<ReplicationSummary>,
}

const Z95: f64 = 1.96;

/// Sample mean and standard error of the mean.
fn mean_se(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Unweighted merge of replication accumulators.
pub fn merge_replications(reps: &[ReplicationResult]) -> Result<SimEstimate, SimError> {
    let first = reps
        .first()
        .ok_or_else(|| SimError::InvalidConfig("no replications to merge".into()))?;
    if reps.iter().any(|r| r.config != first.config) {
        return Err(SimError::MismatchedConfig);
    }
    let config = &first.config;
    let collect = |f: &dyn Fn(&ReplicationResult) -> f64| reps.iter().map(f).collect::<Vec<_>>();
    let (mean, se_mean) = mean_se(&collect(&|r| r.mean()));
    let (second_moment, se_m2) = mean_se(&collect(&|r| r.second_moment()));
    let (_, se_std) = mean_se(&collect(&|r| r.std()));
    let std = (second_moment - mean * mean).max(0.0).sqrt();
    let ci = |se: Option<f64>| se.map(|v| Z95 * v);

    let mgf = config
        .mgf_points
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let (value, se) = mean_se(&collect(&|r| r.integral_exp[k] / r.measured_time));
            MgfEstimate {
                s,
                value,
                ci95: ci(se),
                stderr: se,
            }
        })
        .collect();

    Ok(SimEstimate {
        mean,
        second_moment,
        std,
        ci95_mean: ci(se_mean),
        ci95_second_moment: ci(se_m2),
        ci95_std: ci(se_std),
        stderr_mean: se_mean,
        stderr_second_moment: se_m2,
        stderr_std: se_std,
        mgf,
        seed: config.seed,
        replications: reps.len() as u32,
        horizon: config.horizon,
        warmup: config.warmup,
        policy: config.policy,
        source: config.source,
        params: config.params,
        events_processed: reps.iter().map(|r| r.events).sum(),
        per_replication: reps
            .iter()
            .map(|r| ReplicationSummary {
                index: r.index,
                seed: r.seed,
                mean: r.mean(),
                second_moment: r.second_moment(),
                std: r.std(),
                mgf: r.mgf(),
                measured_time: r.measured_time,
                deliveries: r.deliveries,
                events: r.events,
            })
            .collect(),
    })
}
