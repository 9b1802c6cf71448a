//! Closed-form AoI results for the tandem system and their exact moments.
//!
//! Everything is expressed in the normalized variables `s̄ = s/μ`,
//! `ᾱ = α/μ`, `ρ_i = λ_i/μ`. The expressions are evaluated as written; where
//! a per-state expression disagrees with the engine the result carries a
//! [`KnownDiscrepancy`] instead of a silent correction.

mod discrepancy;
mod poly;

pub use discrepancy::{KnownDiscrepancy, DISC_1, DISC_2, DISC_3, DISC_4, KNOWN_DISCREPANCIES};
pub use poly::{product, series_quotient, Poly};

use thiserror::Error;

use crate::tandem::{ModelError, Policy, SinkHandoff, SystemParams};

pub const MAX_MOMENT_ORDER: usize = 8;

/// Relative size below which a denominator counts as zero.
const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("denominator vanishes at s = {s} (pole)")]
    PoleProximity { s: f64 },
    #[error("s = {s} is at or beyond the first pole s0 = {pole}")]
    DomainExceeded { s: f64, pole: f64 },
    #[error("moment order {0} exceeds the supported maximum {MAX_MOMENT_ORDER}")]
    MomentOrderTooHigh(usize),
    #[error("no closed form for {0:?}")]
    Unavailable(Policy),
    #[error(transparent)]
    Params(#[from] ModelError),
}

/// Normalized loads.
#[derive(Debug, Clone, Copy)]
struct Loads {
    rho1: f64,
    rho2: f64,
    rho: f64,
    alpha: f64,
}

impl Loads {
    fn of(params: &SystemParams) -> Result<Self, ModelError> {
        params.check_analyzable()?;
        Ok(Self {
            rho1: params.rho1(),
            rho2: params.rho2(),
            rho: params.rho(),
            alpha: params.alpha_bar(),
        })
    }
}

fn psi1_poly(l: &Loads) -> Poly {
    // rho s - rho1 + s (1 - s)
    Poly::new(vec![-l.rho1, l.rho + 1.0, -1.0])
}

fn psi2_poly(l: &Loads) -> Poly {
    let (r1, r2) = (l.rho1, l.rho2);
    // r1^2 (s - 1) + r1 r2 (2s - 1) + r1 (-1 + 4s - 3s^2)
    //   + r2 s (r2 + 2 - 3s) + s (1 - 3s + 2s^2)
    Poly::new(vec![
        -r1 * r1 - r1 * r2 - r1,
        r1 * r1 + 2.0 * r1 * r2 + 4.0 * r1 + r2 * (r2 + 2.0) + 1.0,
        -3.0 * r1 - 3.0 * r2 - 3.0,
        2.0,
    ])
}

/// `s(1-s)(ρ-s)(ρ+1-s) + ᾱ²ψ1 + ᾱψ2`, the quartic shared by both MGFs.
fn core_poly(l: &Loads) -> Poly {
    let quartic = product(&[
        Poly::linear(0.0, 1.0),
        Poly::linear(1.0, -1.0),
        Poly::linear(l.rho, -1.0),
        Poly::linear(l.rho + 1.0, -1.0),
    ]);
    &(&quartic + &psi1_poly(l).scale(l.alpha * l.alpha)) + &psi2_poly(l).scale(l.alpha)
}

fn core_value(l: &Loads, s: f64) -> f64 {
    let (p1, p2) = psi_values(l, s);
    s * (1.0 - s) * (l.rho - s) * (l.rho + 1.0 - s) + l.alpha * l.alpha * p1 + l.alpha * p2
}

fn psi_values(l: &Loads, s: f64) -> (f64, f64) {
    let (r1, r2, r) = (l.rho1, l.rho2, l.rho);
    let psi1 = r * s - r1 + s * (1.0 - s);
    let psi2 = r1 * r1 * (s - 1.0)
        + r1 * r2 * (2.0 * s - 1.0)
        + r1 * (-1.0 + 4.0 * s - 3.0 * s * s)
        + r2 * s * (r2 + 2.0 - 3.0 * s)
        + s * (1.0 - 3.0 * s + 2.0 * s * s);
    (psi1, psi2)
}

/// `(ψ1, ψ2)` at the normalized point `s_bar`.
pub fn psi(params: &SystemParams, s_bar: f64) -> Result<(f64, f64), ClosedFormError> {
    Ok(psi_values(&Loads::of(params)?, s_bar))
}

/// An MGF `N(s̄)/D(s̄)` with `s̄ = s/scale`. The denominator is kept as a list
/// of factors so that repeated roots are not lost when searching for poles.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMgf {
    numerator: Poly,
    denominator: Poly,
    factors: Vec<Poly>,
    scale: f64,
}

impl RationalMgf {
    fn from_factors(numerator: Poly, factors: Vec<Poly>, scale: f64) -> Self {
        let denominator = product(&factors);
        Self {
            numerator,
            denominator,
            factors,
            scale,
        }
    }

    /// MGF of the source-1 AoI under the preemptive policy.
    pub fn preemptive(params: &SystemParams) -> Result<Self, ClosedFormError> {
        let l = Loads::of(params)?;
        let numerator = Poly::linear(-l.alpha - l.rho - 1.0, 1.0).scale(l.rho1 * l.alpha);
        Ok(Self::from_factors(
            numerator,
            vec![core_poly(&l)],
            params.mu,
        ))
    }

    /// MGF of the source-1 AoI under the blocking policy.
    pub fn blocking(params: &SystemParams) -> Result<Self, ClosedFormError> {
        let l = Loads::of(params)?;
        let numerator = product(&[
            Poly::linear(-l.alpha - l.rho, 1.0),
            Poly::linear(l.rho + 1.0, -1.0),
            Poly::linear(l.alpha + l.rho + 1.0, -1.0),
        ])
        .scale(l.rho1 * l.alpha * l.alpha);
        let factors = vec![
            Poly::linear(l.alpha, -1.0),
            Poly::linear(1.0, -1.0),
            Poly::constant((l.alpha + l.rho) * (l.rho + 1.0)),
            core_poly(&l),
        ];
        Ok(Self::from_factors(numerator, factors, params.mu))
    }

    /// The blocking form describes the drop handoff only; replace has no
    /// closed form.
    pub fn for_policy(params: &SystemParams, policy: Policy) -> Result<Self, ClosedFormError> {
        match policy {
            Policy::Preemptive => Self::preemptive(params),
            Policy::Blocking(SinkHandoff::Drop) => Self::blocking(params),
            Policy::Blocking(SinkHandoff::Replace) => Err(ClosedFormError::Unavailable(policy)),
        }
    }

    pub fn numerator(&self) -> &Poly {
        &self.numerator
    }
    pub fn denominator(&self) -> &Poly {
        &self.denominator
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Smallest positive pole in `s` units, if any. Roots shared with the
    /// numerator are skipped.
    pub fn smallest_pole(&self) -> Option<f64> {
        let mut roots = Vec::new();
        for f in &self.factors {
            match f.degree() {
                0 => {}
                1 => roots.push(-f.coeff(0) / f.coeff(1)),
                _ => roots.extend(positive_real_roots(f)),
            }
        }
        roots
            .into_iter()
            .filter(|&r| r > 0.0)
            .filter(|&r| self.numerator.eval(r).abs() > 1e-9 * self.numerator.magnitude(r))
            .fold(None, |best: Option<f64>, r| {
                Some(best.map_or(r, |b| b.min(r)))
            })
            .map(|r| r * self.scale)
    }

    /// Evaluates the MGF at `s`, refusing points at or past the first pole.
    pub fn eval(&self, s: f64) -> Result<f64, ClosedFormError> {
        if let Some(pole) = self.smallest_pole() {
            if s >= pole {
                return Err(ClosedFormError::DomainExceeded { s, pole });
            }
        }
        let x = s / self.scale;
        let den = self.denominator.eval(x);
        if den.abs() <= POLE_TOL * self.denominator.magnitude(x) {
            return Err(ClosedFormError::PoleProximity { s });
        }
        Ok(self.numerator.eval(x) / den)
    }

    /// Raw moments `d^k M / ds^k` at 0 for `k = 0..=m`.
    pub fn moments(&self, m: usize) -> Result<Vec<f64>, ClosedFormError> {
        if m > MAX_MOMENT_ORDER {
            return Err(ClosedFormError::MomentOrderTooHigh(m));
        }
        let d0 = self.denominator.coeff(0);
        if d0.abs() <= POLE_TOL * self.denominator.magnitude(0.0) {
            return Err(ClosedFormError::PoleProximity { s: 0.0 });
        }
        let taylor = series_quotient(&self.numerator, &self.denominator, m + 1);
        let mut factorial = 1.0;
        Ok(taylor
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                if k > 0 {
                    factorial *= k as f64;
                }
                factorial * c / self.scale.powi(k as i32)
            })
            .collect())
    }
}

/// Positive real roots. Odd-multiplicity roots come from sign changes on a
/// fine grid over `(0, Cauchy bound]` followed by bisection; even-multiplicity
/// roots are roots of the derivative at which `p` vanishes.
fn positive_real_roots(p: &Poly) -> Vec<f64> {
    if p.degree() == 0 {
        return Vec::new();
    }
    let mut roots = sign_change_roots(p);
    for r in positive_real_roots(&p.derivative()) {
        let touches = p.eval(r).abs() <= 1e-10 * p.magnitude(r);
        if touches && !roots.iter().any(|x| (x - r).abs() <= 1e-6 * (1.0 + r)) {
            roots.push(r);
        }
    }
    roots
}

fn sign_change_roots(p: &Poly) -> Vec<f64> {
    const STEPS: usize = 20_000;
    let upper = p.root_bound();
    let mut roots = Vec::new();
    let mut x0 = 0.0;
    let mut f0 = p.eval(x0);
    for i in 1..=STEPS {
        let x1 = upper * i as f64 / STEPS as f64;
        let f1 = p.eval(x1);
        if f1 == 0.0 {
            roots.push(x1);
        } else if f0 != 0.0 && f0.signum() != f1.signum() {
            let (mut lo, mut hi, mut flo) = (x0, x1, f0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = p.eval(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push(polish_multiple_root(p, 0.5 * (lo + hi)));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

/// Bisection stalls in the rounding noise around a root of multiplicity
/// `m > 1`. The `(m-1)`-th derivative has a simple root there, so Newton on
/// it recovers full precision.
fn polish_multiple_root(p: &Poly, r: f64) -> f64 {
    let mut q = p.derivative();
    let mut lower = p.clone();
    while q.degree() > 0 && q.eval(r).abs() <= 1e-6 * q.magnitude(r) {
        lower = q.clone();
        q = q.derivative();
    }
    if lower == *p {
        return r;
    }
    let (f, df) = (lower, q);
    let mut x = r;
    for _ in 0..50 {
        let step = f.eval(x) / df.eval(x);
        if !step.is_finite() {
            return r;
        }
        x -= step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    if (x - r).abs() <= 1e-3 * (1.0 + r.abs()) {
        x
    } else {
        r
    }
}

fn check_pole(value: f64, magnitude: f64, s: f64) -> Result<f64, ClosedFormError> {
    if value.abs() <= POLE_TOL * magnitude.max(f64::MIN_POSITIVE) || !value.is_finite() {
        Err(ClosedFormError::PoleProximity { s })
    } else {
        Ok(value)
    }
}

/// Preemptive-policy MGF of the source-1 AoI, evaluated term by term.
pub fn mgf_preemptive(params: &SystemParams, s: f64) -> Result<f64, ClosedFormError> {
    let l = Loads::of(params)?;
    domain_check(&RationalMgf::preemptive(params)?, s)?;
    let x = s / params.mu;
    let den = core_value(&l, x);
    check_pole(den, core_poly(&l).magnitude(x), s)?;
    Ok(l.rho1 * l.alpha * (x - l.alpha - l.rho - 1.0) / den)
}

/// Blocking-policy MGF of the source-1 AoI, evaluated term by term.
pub fn mgf_blocking(params: &SystemParams, s: f64) -> Result<f64, ClosedFormError> {
    let l = Loads::of(params)?;
    domain_check(&RationalMgf::blocking(params)?, s)?;
    let x = s / params.mu;
    let core = core_value(&l, x);
    check_pole(core, core_poly(&l).magnitude(x), s)?;
    check_pole(l.alpha - x, l.alpha + x.abs(), s)?;
    check_pole(1.0 - x, 1.0 + x.abs(), s)?;
    let num = l.rho1
        * l.alpha
        * l.alpha
        * (x - l.alpha - l.rho)
        * (l.rho + 1.0 - x)
        * (l.alpha + l.rho + 1.0 - x);
    let den = (l.alpha - x) * (1.0 - x) * (l.alpha + l.rho) * (l.rho + 1.0) * core;
    Ok(num / den)
}

fn domain_check(mgf: &RationalMgf, s: f64) -> Result<(), ClosedFormError> {
    match mgf.smallest_pole() {
        Some(pole) if s >= pole => Err(ClosedFormError::DomainExceeded { s, pole }),
        _ => Ok(()),
    }
}

/// Stationary probabilities of the preemptive chain, ordered
/// `00, 10, 20, 01, 11, 21, 02, 12, 22`.
pub fn stationary_preemptive(params: &SystemParams) -> Result<[f64; 9], ClosedFormError> {
    params.check_analyzable()?;
    let SystemParams {
        lambda1: l1,
        lambda2: l2,
        mu,
        alpha: a,
    } = *params;
    let l = l1 + l2;
    let big = (l + a) * (l + mu);
    let busy = (mu + a) * big;
    Ok([
        a * mu / big,
        a * l1 * (a + mu + l) / busy,
        a * l2 * (a + mu + l) / busy,
        l1 * mu / big,
        l1 * l1 * mu / busy,
        l1 * l2 * mu / busy,
        l2 * mu / big,
        l1 * l2 * mu / busy,
        l2 * l2 * mu / busy,
    ])
}

/// Labels of the positions returned by [`stationary_blocking`]. Positions 1
/// and 2 are BI and IB: only that order satisfies the blocking chain's
/// balance equations.
pub const BLOCKING_POSITION_LABELS: [&str; 4] = ["II", "BI", "IB", "BB"];

/// Stationary probabilities of the blocking chain, by position; see
/// [`BLOCKING_POSITION_LABELS`].
pub fn stationary_blocking(params: &SystemParams) -> Result<[f64; 4], ClosedFormError> {
    params.check_analyzable()?;
    let SystemParams { mu, alpha: a, .. } = *params;
    let l = params.lambda();
    let norm = (l + mu) * (l + a);
    Ok([
        a * mu / norm,
        a * l * (a + l + mu) / ((a + mu) * norm),
        mu * l / norm,
        mu * l * l / ((a + mu) * norm),
    ])
}

/// First components of the per-state MGF vectors from closed-form
/// expressions, with any discrepancies those expressions are known to carry.
#[derive(Debug, Clone, PartialEq)]
pub struct PerStateVs {
    pub labels: &'static [&'static str],
    pub values: Vec<f64>,
    /// `(position, discrepancy)` for entries known not to match the engine.
    pub flagged: Vec<(usize, &'static KnownDiscrepancy)>,
}

impl PerStateVs {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .map(|i| self.values[i])
    }

    pub fn is_flagged(&self, position: usize) -> bool {
        self.flagged.iter().any(|&(p, _)| p == position)
    }
}

/// Preemptive per-state `v̄ˢ_{q0}` for the nine states (order as
/// [`crate::tandem::PREEMPTIVE_STATES`]). Entries for 10, 20 and 01 are
/// flagged [`DISC_1`].
pub fn per_state_vs_preemptive(
    params: &SystemParams,
    s: f64,
) -> Result<PerStateVs, ClosedFormError> {
    let l = Loads::of(params)?;
    let x = s / params.mu;
    let (r1, r2, r, a) = (l.rho1, l.rho2, l.rho, l.alpha);
    let core = check_pole(core_value(&l, x), core_poly(&l).magnitude(x), s)?;
    let f = |v: f64| check_pole(v, 1.0 + v.abs() + x.abs(), s);
    let a_r = f(a + r - x)?;
    let one_r = f(1.0 + r - x)?;
    let one = f(1.0 - x)?;
    let a_r_1 = f(a + r + 1.0 - x)?;
    let a_1 = f(a + 1.0 - x)?;
    let a_s = f(a - x)?;

    let v00 = r1 * a * (x - a) * (1.0 - x) * (a + r + 1.0 - x) / (a_r * one_r * core);
    let hat = a * a
        + a * (2.0 * r - 2.0 - 3.0 * x)
        + r * r
        + r1 * (2.0 * r2 + 2.0 - 3.0 * x)
        + r2 * r2
        + r2 * (2.0 - 3.0 * x)
        + 1.0
        - 3.0 * x
        + 2.0 * x * x;
    let k = a + r + 1.0 - 2.0 * x;
    let transmit = v00 * hat / (a_r * one * a_r_1);
    let deliver = v00 * k / (a_1 * one * a_r_1);
    let both = v00 * k / (a_1 * a_s * one * a_r_1);
    let values = vec![
        v00,
        r1 * transmit,
        r2 * transmit,
        r1 * deliver,
        r1 * r1 * both,
        r1 * r2 * both,
        r2 * v00 * k / (a_s * one * a_r_1),
        r1 * r2 * both,
        r2 * r2 * both,
    ];
    Ok(PerStateVs {
        labels: &crate::tandem::PREEMPTIVE_STATES,
        values,
        flagged: vec![(1, &DISC_1), (2, &DISC_1), (3, &DISC_1)],
    })
}

/// Blocking per-state `v̄ˢ_{q0}` by position ([`BLOCKING_POSITION_LABELS`]).
/// Positions 1..3 are flagged [`DISC_2`]; only position 0 matches the engine
/// away from `s = 0`.
pub fn per_state_vs_blocking(params: &SystemParams, s: f64) -> Result<PerStateVs, ClosedFormError> {
    let l = Loads::of(params)?;
    let x = s / params.mu;
    let (r1, r, a) = (l.rho1, l.rho, l.alpha);
    let core = check_pole(core_value(&l, x), core_poly(&l).magnitude(x), s)?;
    let f = |v: f64| check_pole(v, 1.0 + v.abs() + x.abs(), s);
    let one = f(1.0 - x)?;
    let a_1 = f(a + 1.0 - x)?;
    let a_s = f(a - x)?;
    let base = -a * a * r1 * (a + r + 1.0 - x) / ((a + r) * (r + 1.0) * core);
    let values = vec![
        base,
        base * r / (a_1 * one),
        base * r / (a_s * one),
        base * r * r / (a_s * a_1 * one),
    ];
    Ok(PerStateVs {
        labels: &BLOCKING_POSITION_LABELS,
        values,
        flagged: vec![(1, &DISC_2), (2, &DISC_2), (3, &DISC_2)],
    })
}

/// Exact raw moments of the policy's closed-form MGF, `k = 0..=m`.
pub fn moments_closed_form(
    params: &SystemParams,
    policy: Policy,
    m: usize,
) -> Result<Vec<f64>, ClosedFormError> {
    if m > MAX_MOMENT_ORDER {
        return Err(ClosedFormError::MomentOrderTooHigh(m));
    }
    RationalMgf::for_policy(params, policy)?.moments(m)
}

/// Limiting mean AoI values the preemptive result must reproduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceLimits {
    /// `α → ∞`: single preemptive server (LCFS with preemption in service),
    /// `(1 + ρ) / (μ ρ1)`.
    pub lcfs_s_mean: f64,
    /// `λ2 = 0`: `1/λ1 + 1/μ + 1/α`.
    pub single_source_mean: Option<f64>,
}

pub fn reference_limits(params: &SystemParams) -> Result<ReferenceLimits, ClosedFormError> {
    params.check_analyzable()?;
    let lcfs_s_mean = (1.0 + params.rho()) / (params.mu * params.rho1());
    let single_source_mean = (params.lambda2 == 0.0)
        .then(|| 1.0 / params.lambda1 + 1.0 / params.mu + 1.0 / params.alpha);
    Ok(ReferenceLimits {
        lcfs_s_mean,
        single_source_mean,
    })
}

#[cfg(test)]
mod tests;
