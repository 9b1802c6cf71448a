//! The two-source, two-server tandem system as SHS models.
//!
//! Sources 1 and 2 emit Poisson streams (rates `lambda1`, `lambda2`) into a
//! bufferless transmitter (exponential, rate `mu`) that feeds a bufferless
//! sink server (exponential, rate `alpha`). The age vector is
//! `[x0, x1, x2]`: the current source-1 age at the sink, the age it would drop
//! to if the sink-server packet were delivered now, and the same for the
//! transmitter packet.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::shs::{ResetMap, ShsError, ShsModel, Transition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Shs(#[from] ShsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu: f64,
    pub alpha: f64,
}

impl SystemParams {
    /// Checks `lambda_i >= 0`, `mu > 0`, `alpha > 0`, all finite.
    pub fn new(lambda1: f64, lambda2: f64, mu: f64, alpha: f64) -> Result<Self, ModelError> {
        let p = Self {
            lambda1,
            lambda2,
            mu,
            alpha,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParams(msg));
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be finite and >= 0"));
            }
        }
        for (name, v) in [("mu", self.mu), ("alpha", self.alpha)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// Parameters usable for source-1 analysis: valid and `lambda1 > 0`.
    pub fn check_analyzable(&self) -> Result<(), ModelError> {
        self.check()?;
        if self.lambda1 <= 0.0 {
            return Err(ModelError::InvalidParams(
                "lambda1 must be > 0 to analyze source 1".into(),
            ));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda1 + self.lambda2
    }
    pub fn rho1(&self) -> f64 {
        self.lambda1 / self.mu
    }
    pub fn rho2(&self) -> f64 {
        self.lambda2 / self.mu
    }
    pub fn rho(&self) -> f64 {
        self.lambda() / self.mu
    }
    pub fn alpha_bar(&self) -> f64 {
        self.alpha / self.mu
    }

    /// Multiplies every rate by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            lambda1: self.lambda1 * c,
            lambda2: self.lambda2 * c,
            mu: self.mu * c,
            alpha: self.alpha * c,
        }
    }
}

/// What a blocking-policy transmitter does with a finished packet when the
/// sink server is busy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinkHandoff {
    /// The finished packet replaces the one in the sink server.
    Replace,
    /// The finished packet is blocked and cleared.
    #[default]
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "sink_handoff")]
pub enum Policy {
    /// Every arrival preempts whatever is in service, at both servers.
    Preemptive,
    /// Arrivals at a busy transmitter are discarded.
    Blocking(SinkHandoff),
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Preemptive => "preemptive",
            Policy::Blocking(_) => "blocking",
        }
    }

    pub fn sink_handoff(&self) -> Option<SinkHandoff> {
        match self {
            Policy::Preemptive => None,
            Policy::Blocking(h) => Some(*h),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for SinkHandoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SinkHandoff::Replace => "replace",
            SinkHandoff::Drop => "drop",
        })
    }
}

impl FromStr for SinkHandoff {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "replace" => Ok(Self::Replace),
            "drop" => Ok(Self::Drop),
            other => Err(format!(
                "unknown sink handoff '{other}' (expected replace|drop)"
            )),
        }
    }
}

pub const PREEMPTIVE_STATES: [&str; 9] = ["00", "10", "20", "01", "11", "21", "02", "12", "22"];
pub const BLOCKING_STATES: [&str; 4] = ["II", "IB", "BI", "BB"];

#[derive(Clone, Copy)]
enum Rate {
    L1,
    L2,
    Mu,
    Alpha,
}

const N: Option<usize> = None;
const X0: Option<usize> = Some(0);
const X1: Option<usize> = Some(1);
const X2: Option<usize> = Some(2);

type Row = (u32, &'static str, &'static str, Rate, [Option<usize>; 3]);

/// Preemptive transitions, one per table row: `(l, from, to, rate, x')`
/// where `x'[j]` names the component copied into slot `j` (`N` = fresh, 0).
const PREEMPTIVE_ROWS: [Row; 27] = [
    (1, "00", "10", Rate::L1, [X0, X1, N]),
    (2, "00", "20", Rate::L2, [X0, X1, X1]),
    (3, "10", "10", Rate::L1, [X0, X1, N]),
    (4, "10", "20", Rate::L2, [X0, X1, X1]),
    (5, "10", "01", Rate::Mu, [X0, X2, X2]),
    (6, "20", "10", Rate::L1, [X0, X1, N]),
    (7, "20", "02", Rate::Mu, [X0, X0, X2]),
    (8, "01", "11", Rate::L1, [X0, X1, N]),
    (9, "01", "21", Rate::L2, [X0, X1, X1]),
    (10, "01", "00", Rate::Alpha, [X1, X1, X2]),
    (11, "11", "11", Rate::L1, [X0, X1, N]),
    (12, "11", "21", Rate::L2, [X0, X1, X1]),
    (13, "11", "01", Rate::Mu, [X0, X2, X2]),
    (14, "11", "10", Rate::Alpha, [X1, X1, X2]),
    (15, "21", "11", Rate::L1, [X0, X1, N]),
    (16, "21", "02", Rate::Mu, [X0, X0, X2]),
    (17, "21", "20", Rate::Alpha, [X1, X1, X1]),
    (18, "02", "12", Rate::L1, [X0, X0, N]),
    (19, "02", "22", Rate::L2, [X0, X0, X0]),
    (20, "02", "00", Rate::Alpha, [X0, X1, X2]),
    (21, "12", "12", Rate::L1, [X0, X0, N]),
    (22, "12", "22", Rate::L2, [X0, X0, X0]),
    (23, "12", "01", Rate::Mu, [X0, X2, X2]),
    (24, "12", "10", Rate::Alpha, [X0, X1, X2]),
    (25, "22", "12", Rate::L1, [X0, X0, N]),
    (26, "22", "02", Rate::Mu, [X0, X0, X2]),
    (27, "22", "20", Rate::Alpha, [X0, X1, X1]),
];

/// Blocking transitions. Row 9 depends on the sink handoff and is patched in
/// [`build_blocking`].
const BLOCKING_ROWS: [Row; 10] = [
    (1, "II", "BI", Rate::L1, [X0, X1, N]),
    (2, "II", "BI", Rate::L2, [X0, X1, X1]),
    (3, "BI", "BI", Rate::L1, [X0, X1, X2]),
    (4, "BI", "IB", Rate::Mu, [X0, X2, X2]),
    (5, "IB", "II", Rate::Alpha, [X1, X1, X2]),
    (6, "IB", "BB", Rate::L1, [X0, X1, N]),
    (7, "IB", "BB", Rate::L2, [X0, X1, X1]),
    (8, "BB", "BB", Rate::L1, [X0, X1, X2]),
    (9, "BB", "IB", Rate::Mu, [X0, X2, X2]),
    (10, "BB", "BI", Rate::Alpha, [X1, X1, X2]),
];

/// Blocking with the replace handoff. The four-state chain cannot carry this
/// variant: a source-2 packet entering a busy transmitter gets `x2 = x1`,
/// which is right only if the sink packet is delivered first. Splitting BB
/// by the source of the transmitter packet fixes that; after a replace by a
/// source-2 packet the sink slot takes `x0`.
pub const BLOCKING_REPLACE_STATES: [&str; 5] = ["II", "IB", "BI", "BB1", "BB2"];

const BLOCKING_REPLACE_ROWS: [Row; 12] = [
    (1, "II", "BI", Rate::L1, [X0, X1, N]),
    (2, "II", "BI", Rate::L2, [X0, X1, X1]),
    (3, "BI", "BI", Rate::L1, [X0, X1, X2]),
    (4, "BI", "IB", Rate::Mu, [X0, X2, X2]),
    (5, "IB", "II", Rate::Alpha, [X1, X1, X2]),
    (6, "IB", "BB1", Rate::L1, [X0, X1, N]),
    (7, "IB", "BB2", Rate::L2, [X0, X1, X1]),
    (8, "BB1", "BB1", Rate::L1, [X0, X1, X2]),
    (9, "BB1", "IB", Rate::Mu, [X0, X2, X2]),
    (10, "BB1", "BI", Rate::Alpha, [X1, X1, X2]),
    (11, "BB2", "IB", Rate::Mu, [X0, X0, X2]),
    (12, "BB2", "BI", Rate::Alpha, [X1, X1, X2]),
];

/// The printed preemptive reset for l = 10, `[[1,1,0],[0,0,0],[0,0,1]]`,
/// maps `x` to `[x0, x0, x2]` and so never delivers the sink packet.
const PRINTED_ROW_10: [Option<usize>; 3] = [X0, X0, X2];

fn assemble(
    params: &SystemParams,
    labels: &[&str],
    rows: impl IntoIterator<Item = Row>,
) -> Result<ShsModel, ModelError> {
    params.check_analyzable()?;
    let index = |label: &str| {
        labels
            .iter()
            .position(|&s| s == label)
            .expect("known label")
    };
    let mut transitions = Vec::new();
    for (id, from, to, rate, sources) in rows {
        let rate = match rate {
            Rate::L1 => params.lambda1,
            Rate::L2 => params.lambda2,
            Rate::Mu => params.mu,
            Rate::Alpha => params.alpha,
        };
        // A silent source contributes no transitions.
        if rate == 0.0 {
            continue;
        }
        transitions.push(Transition::new(
            id,
            index(from),
            index(to),
            rate,
            ResetMap::from_sources(&sources),
        )?);
    }
    Ok(ShsModel::new(
        labels.iter().map(|s| s.to_string()).collect(),
        3,
        0,
        transitions,
    )?)
}

/// Nine-state preemptive model (27 transitions when `lambda2 > 0`).
pub fn build_preemptive(params: &SystemParams) -> Result<ShsModel, ModelError> {
    assemble(params, &PREEMPTIVE_STATES, PREEMPTIVE_ROWS)
}

/// The preemptive model with the l = 10 reset taken from its printed matrix
/// instead of its stated effect `[x1, x1, x2]`. Kept for discrepancy reports.
pub fn build_preemptive_printed_row10(params: &SystemParams) -> Result<ShsModel, ModelError> {
    let rows = PREEMPTIVE_ROWS.map(|r| {
        if r.0 == 10 {
            (r.0, r.1, r.2, r.3, PRINTED_ROW_10)
        } else {
            r
        }
    });
    assemble(params, &PREEMPTIVE_STATES, rows)
}

/// Blocking model. Drop uses the four-state chain; replace uses the
/// five-state chain of [`BLOCKING_REPLACE_STATES`].
pub fn build_blocking(params: &SystemParams, handoff: SinkHandoff) -> Result<ShsModel, ModelError> {
    match handoff {
        SinkHandoff::Drop => build_blocking_four_state(params, handoff),
        SinkHandoff::Replace => assemble(params, &BLOCKING_REPLACE_STATES, BLOCKING_REPLACE_ROWS),
    }
}

/// Four-state blocking chain with the l = 9 (BB -> IB) reset chosen by
/// `handoff`. Source-2 arrivals at a busy transmitter only produce identity
/// self-loops and are left out. With `Replace` this is the tabulated
/// matrix, which is not an exact model of the replace dynamics; it is kept
/// for discrepancy reports.
pub fn build_blocking_four_state(
    params: &SystemParams,
    handoff: SinkHandoff,
) -> Result<ShsModel, ModelError> {
    let row9 = match handoff {
        SinkHandoff::Replace => [X0, X2, X2],
        SinkHandoff::Drop => [X0, X1, X2],
    };
    let rows = BLOCKING_ROWS.map(|r| {
        if r.0 == 9 {
            (r.0, r.1, r.2, r.3, row9)
        } else {
            r
        }
    });
    assemble(params, &BLOCKING_STATES, rows)
}

pub fn build(params: &SystemParams, policy: Policy) -> Result<ShsModel, ModelError> {
    match policy {
        Policy::Preemptive => build_preemptive(params),
        Policy::Blocking(h) => build_blocking(params, h),
    }
}

/// Exchanges the two sources so that source-1 analysis of the result gives
/// the AoI of the original source 2.
pub fn swap_sources(params: &SystemParams) -> Result<SystemParams, ModelError> {
    if params.lambda2.is_nan() || params.lambda2 <= 0.0 {
        return Err(ModelError::InvalidParams(
            "lambda2 must be > 0 to analyze source 2".into(),
        ));
    }
    SystemParams::new(params.lambda2, params.lambda1, params.mu, params.alpha)
}
