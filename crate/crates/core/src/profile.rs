//! Scalar time/space profiles used for coefficients and initial data.

use serde::{Deserialize, Serialize};

/// A scalar function of one variable with a small closed-form vocabulary.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// Coefficients in increasing degree: `c[0] + c[1] x + c[2] x² + …`.
    Polynomial {
        coefficients: Vec<f64>,
    },
    Cosine {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl Profile {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            Profile::Cosine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * x + phase).cos(),
        }
    }
}
