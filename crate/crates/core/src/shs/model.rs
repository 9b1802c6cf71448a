use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use std::fmt;

use super::ShsError;

/// Binary reset map `A_l`, stored row-major. A transition maps the age row
/// vector `x` to `x' = x A_l`, so column `j` says where `x'_j` comes from.
#[derive(Clone, PartialEq, Eq)]
pub struct ResetMap {
    dim: usize,
    entries: Vec<u8>,
}

impl ResetMap {
    /// Builds a map from row-major rows. Entries are range-checked later by
    /// [`compute_a_hat`]; this only checks the shape.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, ShsError> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(ShsError::DimensionMismatch {
                expected: dim,
                found: rows.iter().map(Vec::len).max().unwrap_or(0),
            });
        }
        Ok(Self {
            dim,
            entries: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        Self { dim, entries }
    }

    /// Builds the map realizing `x'_j = x_{sources[j]}`, or `x'_j = 0` for
    /// `None` (a fresh packet).
    pub fn from_sources(sources: &[Option<usize>]) -> Self {
        let dim = sources.len();
        let mut entries = vec![0; dim * dim];
        for (j, src) in sources.iter().enumerate() {
            if let Some(i) = *src {
                assert!(i < dim, "source component {i} out of range");
                entries[i * dim + j] = 1;
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.entries[row * self.dim + col]
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.entries.chunks(self.dim).map(<[u8]>::to_vec).collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim)
    }

    pub fn is_column_zero(&self, col: usize) -> bool {
        (0..self.dim).all(|i| self.get(i, col) == 0)
    }

    /// `x A`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|j| {
                (0..self.dim)
                    .filter(|&i| self.get(i, j) == 1)
                    .map(|i| x[i])
                    .sum()
            })
            .collect()
    }
}

impl fmt::Debug for ResetMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// Diagonal map `Â` flagging the age components a reset sets to zero:
/// `Â(j, j) = 1` iff column `j` of `reset` is all zero.
///
/// Rejects entries outside {0, 1} and columns holding more than one 1 (a
/// reset copies at most one component into each slot).
pub fn compute_a_hat(reset: &ResetMap) -> Result<ResetMap, ShsError> {
    let dim = reset.dim();
    for j in 0..dim {
        let mut ones = 0;
        for i in 0..dim {
            match reset.get(i, j) {
                0 => {}
                1 => ones += 1,
                v => {
                    return Err(ShsError::NonBinaryReset {
                        row: i,
                        col: j,
                        value: i64::from(v),
                    })
                }
            }
        }
        if ones > 1 {
            return Err(ShsError::NonBinaryReset {
                row: dim,
                col: j,
                value: ones,
            });
        }
    }
    let zero_cols: Vec<Option<usize>> = (0..dim)
        .map(|j| reset.is_column_zero(j).then_some(j))
        .collect();
    let mut hat = ResetMap {
        dim,
        entries: vec![0; dim * dim],
    };
    for j in zero_cols.into_iter().flatten() {
        hat.entries[j * dim + j] = 1;
    }
    Ok(hat)
}

/// One rated transition `l: q_l -> q'_l` with reset map `A_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    id: u32,
    from: usize,
    to: usize,
    rate: f64,
    reset: ResetMap,
    reset_hat: ResetMap,
}

impl Transition {
    pub fn new(
        id: u32,
        from: usize,
        to: usize,
        rate: f64,
        reset: ResetMap,
    ) -> Result<Self, ShsError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(ShsError::RateNotPositive { id, rate });
        }
        let reset_hat = compute_a_hat(&reset)?;
        Ok(Self {
            id,
            from,
            to,
            rate,
            reset,
            reset_hat,
        })
    }

    pub fn id(&self) -> u32 {
        self.id
    }
    pub fn from(&self) -> usize {
        self.from
    }
    pub fn to(&self) -> usize {
        self.to
    }
    pub fn rate(&self) -> f64 {
        self.rate
    }
    pub fn reset(&self) -> &ResetMap {
        &self.reset
    }
    pub fn reset_hat(&self) -> &ResetMap {
        &self.reset_hat
    }

    /// Self-loops with an identity reset drop out of every balance equation.
    pub(crate) fn is_inert(&self) -> bool {
        self.from == self.to && self.reset.is_identity()
    }
}

/// A validated stochastic hybrid system: a finite Markov chain whose
/// transitions reset a piecewise-linear age vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ShsModel {
    states: Vec<String>,
    age_dim: usize,
    aoi_component: usize,
    transitions: Vec<Transition>,
    recurrent: Vec<bool>,
}

impl ShsModel {
    /// Validates and builds a model. See [`validate_model`].
    pub fn new(
        states: Vec<String>,
        age_dim: usize,
        aoi_component: usize,
        transitions: Vec<Transition>,
    ) -> Result<Self, ShsError> {
        validate_model(states, age_dim, aoi_component, transitions)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }
    pub fn age_dim(&self) -> usize {
        self.age_dim
    }
    pub fn aoi_component(&self) -> usize {
        self.aoi_component
    }
    pub fn states(&self) -> &[String] {
        &self.states
    }
    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    /// Whether a state belongs to the closed communicating class.
    pub fn is_recurrent(&self, state: usize) -> bool {
        self.recurrent[state]
    }

    /// Total outgoing rate per state, self-loops included.
    pub fn outgoing_rates(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.state_count()];
        for t in &self.transitions {
            out[t.from] += t.rate;
        }
        out
    }

    /// Returns a copy with one extra transition, revalidated.
    pub fn with_transition(&self, transition: Transition) -> Result<Self, ShsError> {
        let mut transitions = self.transitions.clone();
        transitions.push(transition);
        Self::new(
            self.states.clone(),
            self.age_dim,
            self.aoi_component,
            transitions,
        )
    }
}

/// Checks indices, reset shapes and entries, and that the chain has exactly
/// one closed communicating class (so the stationary vector is unique).
/// States outside that class are transient and end up with zero probability.
pub fn validate_model(
    states: Vec<String>,
    age_dim: usize,
    aoi_component: usize,
    transitions: Vec<Transition>,
) -> Result<ShsModel, ShsError> {
    let n = states.len();
    if n == 0 {
        return Err(ShsError::EmptyModel);
    }
    if age_dim == 0 {
        return Err(ShsError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    if aoi_component >= age_dim {
        return Err(ShsError::IndexOutOfRange {
            what: "aoi_component",
            index: aoi_component,
            bound: age_dim,
        });
    }
    for t in &transitions {
        for (what, index) in [("transition.from", t.from), ("transition.to", t.to)] {
            if index >= n {
                return Err(ShsError::IndexOutOfRange {
                    what,
                    index,
                    bound: n,
                });
            }
        }
        if t.reset.dim() != age_dim {
            return Err(ShsError::DimensionMismatch {
                expected: age_dim,
                found: t.reset.dim(),
            });
        }
        if !(t.rate > 0.0 && t.rate.is_finite()) {
            return Err(ShsError::RateNotPositive {
                id: t.id,
                rate: t.rate,
            });
        }
        // Transition::new already derived reset_hat; recheck in case the
        // caller built a transition for another dimension.
        debug_assert_eq!(compute_a_hat(&t.reset)?, t.reset_hat);
    }

    let recurrent = closed_class(n, &transitions)?;
    Ok(ShsModel {
        states,
        age_dim,
        aoi_component,
        transitions,
        recurrent,
    })
}

fn closed_class(n: usize, transitions: &[Transition]) -> Result<Vec<bool>, ShsError> {
    let mut graph = DiGraph::<(), ()>::with_capacity(n, transitions.len());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for t in transitions.iter().filter(|t| t.from != t.to) {
        graph.update_edge(nodes[t.from], nodes[t.to], ());
    }
    let sccs = tarjan_scc(&graph);
    let mut component = vec![0; n];
    for (c, scc) in sccs.iter().enumerate() {
        for node in scc {
            component[node.index()] = c;
        }
    }
    let mut leaves_component = vec![false; sccs.len()];
    for t in transitions {
        if component[t.from] != component[t.to] {
            leaves_component[component[t.from]] = true;
        }
    }
    let closed: Vec<usize> = (0..sccs.len()).filter(|&c| !leaves_component[c]).collect();
    if closed.len() != 1 {
        return Err(ShsError::ReducibleChain {
            closed_classes: closed.len(),
        });
    }
    Ok((0..n).map(|q| component[q] == closed[0]).collect())
}
