//! JSON representation of an [`ShsModel`].
//!
//! ```json
//! {
//!   "states": ["0", "1"],
//!   "age_dim": 2,
//!   "aoi_component": 0,
//!   "transitions": [
//!     {"id": 0, "from": 0, "to": 1, "rate": 1.0, "reset": [[1, 0], [0, 0]]}
//!   ]
//! }
//! ```
//!
//! `reset` lists the rows of the binary matrix `A` in `x' = x A`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shs::{ResetMap, ShsError, ShsModel, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub states: Vec<String>,
    pub age_dim: usize,
    pub aoi_component: usize,
    pub transitions: Vec<TransitionDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionDocument {
    pub id: u32,
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    /// Row-major; entries are kept as integers so that invalid values reach
    /// the validator instead of failing as a type error.
    pub reset: Vec<Vec<i64>>,
}

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("JSON error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("transition {id}: {source}")]
    Transition {
        id: u32,
        #[source]
        source: ShsError,
    },
    #[error(transparent)]
    Model(#[from] ShsError),
}

impl DocumentError {
    /// The underlying engine error, if validation (not parsing) failed.
    pub fn shs_error(&self) -> Option<&ShsError> {
        match self {
            Self::Parse { .. } => None,
            Self::Transition { source, .. } => Some(source),
            Self::Model(e) => Some(e),
        }
    }
}

impl From<serde_json::Error> for DocumentError {
    fn from(e: serde_json::Error) -> Self {
        Self::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

impl ModelDocument {
    pub fn from_model(model: &ShsModel) -> Self {
        Self {
            states: model.states().to_vec(),
            age_dim: model.age_dim(),
            aoi_component: model.aoi_component(),
            transitions: model
                .transitions()
                .iter()
                .map(|t| TransitionDocument {
                    id: t.id(),
                    from: t.from(),
                    to: t.to(),
                    rate: t.rate(),
                    reset: t
                        .reset()
                        .rows()
                        .into_iter()
                        .map(|r| r.into_iter().map(i64::from).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_model(&self) -> Result<ShsModel, DocumentError> {
        let transitions = self
            .transitions
            .iter()
            .map(|t| {
                let wrap = |source| DocumentError::Transition { id: t.id, source };
                let rows = binary_rows(&t.reset).map_err(wrap)?;
                let reset = ResetMap::from_rows(&rows).map_err(wrap)?;
                Transition::new(t.id, t.from, t.to, t.rate, reset).map_err(wrap)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ShsModel::new(
            self.states.clone(),
            self.age_dim,
            self.aoi_component,
            transitions,
        )?)
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

/// Parses and validates a model document in one step.
pub fn parse_model(text: &str) -> Result<ShsModel, DocumentError> {
    ModelDocument::from_json(text)?.to_model()
}

fn binary_rows(rows: &[Vec<i64>]) -> Result<Vec<Vec<u8>>, ShsError> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| match v {
                    0 | 1 => Ok(v as u8),
                    _ => Err(ShsError::NonBinaryReset {
                        row: i,
                        col: j,
                        value: v,
                    }),
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"{
  "states": ["a", "b"],
  "age_dim": 2,
  "aoi_component": 0,
  "transitions": [
    {"id": 0, "from": 0, "to": 1, "rate": 2.0, "reset": [[1, 0], [0, 0]]},
    {"id": 1, "from": 1, "to": 0, "rate": 3.0, "reset": [[0, 0], [1, 0]]}
  ]
}"#;

    #[test]
    fn parses_and_round_trips() {
        let model = parse_model(TOY).unwrap();
        assert_eq!(model.state_count(), 2);
        let doc = ModelDocument::from_model(&model);
        assert_eq!(doc, ModelDocument::from_json(TOY).unwrap());
        assert_eq!(ModelDocument::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn entry_two_is_non_binary() {
        let bad = TOY.replace("[[1, 0], [0, 0]]", "[[1, 0], [0, 2]]");
        let err = parse_model(&bad).unwrap_err();
        assert_eq!(
            err.shs_error(),
            Some(&ShsError::NonBinaryReset {
                row: 1,
                col: 1,
                value: 2
            })
        );
    }

    #[test]
    fn syntax_error_reports_line() {
        let bad = TOY.replace("\"age_dim\": 2,", "\"age_dim\": 2");
        match ModelDocument::from_json(&bad).unwrap_err() {
            DocumentError::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let bad = TOY.replace("\"age_dim\"", "\"extra\": 1, \"age_dim\"");
        assert!(matches!(
            ModelDocument::from_json(&bad),
            Err(DocumentError::Parse { .. })
        ));
    }

    #[test]
    fn ragged_reset_rejected() {
        let bad = TOY.replace("[[1, 0], [0, 0]]", "[[1, 0], [0]]");
        assert!(matches!(
            parse_model(&bad).unwrap_err().shs_error(),
            Some(ShsError::DimensionMismatch { .. })
        ));
    }
}
