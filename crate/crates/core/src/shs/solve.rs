use nalgebra::DMatrix;
use serde::Serialize;

use super::{ShsError, ShsModel};
use crate::linalg::Factored;

/// Highest moment order [`aoi_moments`] accepts.
pub const MAX_MOMENT_ORDER: usize = 8;

const NONNEGATIVE_TOL: f64 = -1e-10;
const MGF_NEGATIVE_TOL: f64 = -1e-8;
const MGF_RESIDUAL_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    probabilities: Vec<f64>,
    residual: f64,
}

impl StationaryDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

/// Per-state vectors of length `age_dim`, stored state-major.
///
/// `order` is 0 for the MGF vectors at `s`, and `k >= 1` for the k-th
/// derivative of those vectors at `s = 0` (order 1 is the usual first-moment
/// correlation vector).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationVectors {
    order: usize,
    s: f64,
    age_dim: usize,
    values: Vec<f64>,
    residual: f64,
}

impl CorrelationVectors {
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn state(&self, q: usize) -> &[f64] {
        &self.values[q * self.age_dim..(q + 1) * self.age_dim]
    }
    pub fn component(&self, q: usize, j: usize) -> f64 {
        self.values[q * self.age_dim + j]
    }
    /// `sum_q v_{q,j}`.
    pub fn component_sum(&self, j: usize) -> f64 {
        self.values.iter().skip(j).step_by(self.age_dim).sum()
    }
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

/// Outgoing rate per state with inert self-loops netted out.
fn effective_out_rates(model: &ShsModel) -> Vec<f64> {
    let mut out = vec![0.0; model.state_count()];
    for t in model.transitions().iter().filter(|t| !t.is_inert()) {
        out[t.from()] += t.rate();
    }
    out
}

pub fn stationary_distribution(model: &ShsModel) -> Result<StationaryDistribution, ShsError> {
    let n = model.state_count();
    let mut m = DMatrix::<f64>::zeros(n, n);
    // Row q: pi_q * sum_out - sum_in rate * pi_from = 0. Self-loops cancel.
    for t in model.transitions().iter().filter(|t| t.from() != t.to()) {
        m[(t.from(), t.from())] += t.rate();
        m[(t.to(), t.from())] -= t.rate();
    }
    for c in 0..n {
        m[(n - 1, c)] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let singular = |_| ShsError::SingularSystem {
        system: "stationary distribution",
    };
    let (mut p, residual) = Factored::new(m)
        .map_err(singular)?
        .solve(&rhs)
        .map_err(singular)?;
    for (q, v) in p.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -1e-12 {
                return Err(ShsError::NegativeSolution {
                    state: q,
                    component: 0,
                    value: *v,
                });
            }
            *v = 0.0;
        }
    }
    if residual > RESIDUAL_TOL {
        return Err(ShsError::SingularSystem {
            system: "stationary distribution",
        });
    }
    Ok(StationaryDistribution {
        probabilities: p,
        residual,
    })
}

/// Matrix of `v_q (R_q - s) - sum_in rate * v_from A_l` over the stacked
/// unknowns `v[q * age_dim + j]`.
fn age_operator(model: &ShsModel, s: f64) -> DMatrix<f64> {
    let d = model.age_dim();
    let size = model.state_count() * d;
    let mut m = DMatrix::<f64>::zeros(size, size);
    for (q, r) in effective_out_rates(model).into_iter().enumerate() {
        for j in 0..d {
            m[(q * d + j, q * d + j)] += r - s;
        }
    }
    for t in model.transitions().iter().filter(|t| !t.is_inert()) {
        for j in 0..d {
            for i in 0..d {
                if t.reset().get(i, j) == 1 {
                    m[(t.to() * d + j, t.from() * d + i)] -= t.rate();
                }
            }
        }
    }
    m
}

fn replicated(model: &ShsModel, pi: &StationaryDistribution) -> Vec<f64> {
    let d = model.age_dim();
    pi.probabilities()
        .iter()
        .flat_map(|&p| std::iter::repeat_n(p, d))
        .collect()
}

fn moment_factor(model: &ShsModel) -> Result<Factored, ShsError> {
    Factored::new(age_operator(model, 0.0)).map_err(|_| ShsError::SingularSystem {
        system: "first moment",
    })
}

/// Solves for the first-order correlation vectors and returns them with the
/// average AoI `sum_q v_{q, aoi_component}`.
pub fn first_moment_vectors(
    model: &ShsModel,
    pi: &StationaryDistribution,
) -> Result<(CorrelationVectors, f64), ShsError> {
    let factor = moment_factor(model)?;
    let rhs = replicated(model, pi);
    let vectors = derivative_step(model, &factor, &rhs, 1)?;
    let d = model.age_dim();
    if let Some((idx, &value)) = vectors
        .values
        .iter()
        .enumerate()
        .find(|(_, &v)| v < NONNEGATIVE_TOL)
    {
        return Err(ShsError::NegativeSolution {
            state: idx / d,
            component: idx % d,
            value,
        });
    }
    let avg = vectors.component_sum(model.aoi_component());
    Ok((vectors, avg))
}

/// One solve of the k-th derivative system: `L w_k = k * w_{k-1}`.
fn derivative_step(
    model: &ShsModel,
    factor: &Factored,
    previous: &[f64],
    k: usize,
) -> Result<CorrelationVectors, ShsError> {
    let scale = k as f64;
    let rhs: Vec<f64> = previous.iter().map(|v| scale * v).collect();
    let (values, residual) = factor.solve(&rhs).map_err(|_| ShsError::SingularSystem {
        system: "moment recursion",
    })?;
    if residual > RESIDUAL_TOL {
        return Err(ShsError::SingularSystem {
            system: "moment recursion",
        });
    }
    Ok(CorrelationVectors {
        order: k,
        s: 0.0,
        age_dim: model.age_dim(),
        values,
        residual,
    })
}

/// MGF correlation vectors `E[e^{s x} 1{q(t) = q}]` in steady state.
///
/// Fails with `DomainExceeded` once `s` reaches the MGF's region of
/// convergence: the system turns singular, the residual blows up, or some
/// component goes negative.
pub fn mgf_vectors(
    model: &ShsModel,
    pi: &StationaryDistribution,
    s: f64,
) -> Result<CorrelationVectors, ShsError> {
    if !s.is_finite() || s >= recurrent_rate_floor(model) {
        return Err(ShsError::DomainExceeded { s });
    }
    let d = model.age_dim();
    let p = pi.probabilities();
    let mut rhs = vec![0.0; model.state_count() * d];
    for t in model.transitions().iter().filter(|t| !t.is_inert()) {
        for j in 0..d {
            if t.reset_hat().get(j, j) == 1 {
                rhs[t.to() * d + j] += t.rate() * p[t.from()];
            }
        }
    }
    let fail = |_| {
        if s > 0.0 {
            ShsError::DomainExceeded { s }
        } else {
            ShsError::SingularSystem { system: "mgf" }
        }
    };
    let (values, residual) = Factored::new(age_operator(model, s))
        .map_err(fail)?
        .solve(&rhs)
        .map_err(fail)?;
    if residual > MGF_RESIDUAL_TOL || values.iter().any(|&v| v < MGF_NEGATIVE_TOL) {
        return Err(ShsError::DomainExceeded { s });
    }
    Ok(CorrelationVectors {
        order: 0,
        s,
        age_dim: d,
        values,
        residual,
    })
}

/// Smallest outgoing rate among recurrent states. No positive MGF solution
/// exists at or beyond it.
fn recurrent_rate_floor(model: &ShsModel) -> f64 {
    effective_out_rates(model)
        .into_iter()
        .enumerate()
        .filter(|&(q, _)| model.is_recurrent(q))
        .map(|(_, r)| r)
        .fold(f64::INFINITY, f64::min)
}

/// Stationary MGF of the tracked age component.
pub fn mgf(model: &ShsModel, s: f64) -> Result<f64, ShsError> {
    let pi = stationary_distribution(model)?;
    Ok(mgf_vectors(model, &pi, s)?.component_sum(model.aoi_component()))
}

/// Raw moments `E[Δ^k]` for `k = 0..=m`, from the derivatives of the MGF
/// system at `s = 0`.
pub fn aoi_moments(model: &ShsModel, m: usize) -> Result<Vec<f64>, ShsError> {
    if m > MAX_MOMENT_ORDER {
        return Err(ShsError::MomentOrderTooHigh(m));
    }
    let pi = stationary_distribution(model)?;
    Ok(derivative_vectors(model, &pi, m)?
        .iter()
        .map(|w| w.component_sum(model.aoi_component()))
        .collect())
}

fn derivative_vectors(
    model: &ShsModel,
    pi: &StationaryDistribution,
    m: usize,
) -> Result<Vec<CorrelationVectors>, ShsError> {
    let mut out = vec![CorrelationVectors {
        order: 0,
        s: 0.0,
        age_dim: model.age_dim(),
        values: replicated(model, pi),
        residual: 0.0,
    }];
    if m == 0 {
        return Ok(out);
    }
    let factor = moment_factor(model)?;
    for k in 1..=m {
        let next = derivative_step(model, &factor, &out[k - 1].values, k)?;
        out.push(next);
    }
    Ok(out)
}

/// Bisection estimate of the largest `s` for which [`mgf_vectors`] succeeds.
/// Always positive.
pub fn mgf_domain_bound(model: &ShsModel) -> f64 {
    let Ok(pi) = stationary_distribution(model) else {
        return f64::MIN_POSITIVE;
    };
    let ceiling = recurrent_rate_floor(model);
    if !(ceiling.is_finite() && ceiling > 0.0) {
        return f64::MIN_POSITIVE;
    }
    let ok = |s: f64| mgf_vectors(model, &pi, s).is_ok();
    let mut lo = 0.0;
    let mut hi = ceiling;
    if !ok(ceiling * 1e-9) {
        return ceiling * 1e-9;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MgfSample {
    pub s: f64,
    /// `None` when `s` lies outside the MGF domain.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualEntry {
    pub system: String,
    pub residual: f64,
}

/// Everything the engine computes for one model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub states: Vec<String>,
    pub pi: Vec<f64>,
    pub avg_aoi: f64,
    /// Raw moments, `moments[0] == 1`.
    pub moments: Vec<f64>,
    pub std_aoi: Option<f64>,
    pub mgf_samples: Vec<MgfSample>,
    pub domain_bound: f64,
    pub residuals: Vec<ResidualEntry>,
}

pub fn solve_report(model: &ShsModel, m: usize, s_list: &[f64]) -> Result<SolveReport, ShsError> {
    if m > MAX_MOMENT_ORDER {
        return Err(ShsError::MomentOrderTooHigh(m));
    }
    let pi = stationary_distribution(model)?;
    let (first, avg_aoi) = first_moment_vectors(model, &pi)?;
    let derivs = derivative_vectors(model, &pi, m.max(1))?;
    let moments: Vec<f64> = derivs
        .iter()
        .take(m + 1)
        .map(|w| w.component_sum(model.aoi_component()))
        .collect();
    let std_aoi = (m >= 2).then(|| (moments[2] - moments[1] * moments[1]).max(0.0).sqrt());
    let mut residuals = vec![
        ResidualEntry {
            system: "stationary".into(),
            residual: pi.residual(),
        },
        ResidualEntry {
            system: "first_moment".into(),
            residual: first.residual(),
        },
    ];
    residuals.extend(
        derivs
            .iter()
            .skip(2)
            .take(m.saturating_sub(1))
            .map(|w| ResidualEntry {
                system: format!("moment_{}", w.order()),
                residual: w.residual(),
            }),
    );
    let mut mgf_samples = Vec::with_capacity(s_list.len());
    for &s in s_list {
        match mgf_vectors(model, &pi, s) {
            Ok(v) => {
                residuals.push(ResidualEntry {
                    system: format!("mgf(s={s})"),
                    residual: v.residual(),
                });
                mgf_samples.push(MgfSample {
                    s,
                    value: Some(v.component_sum(model.aoi_component())),
                });
            }
            Err(ShsError::DomainExceeded { .. }) => mgf_samples.push(MgfSample { s, value: None }),
            Err(e) => return Err(e),
        }
    }
    Ok(SolveReport {
        states: model.states().to_vec(),
        pi: pi.probabilities().to_vec(),
        avg_aoi,
        moments,
        std_aoi,
        mgf_samples,
        domain_bound: mgf_domain_bound(model),
        residuals,
    })
}
