//! Closed-form model instances used as oracles for the whole pipeline.

pub mod euclidean;
pub mod tripod;

use serde::Serialize;

/// Where the optimal destabilizing ray points, in instance-specific terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AnalyticDirection {
    Trivial,
    /// Unit direction in ℝⁿ.
    Vector(Vec<f64>),
    /// Tripod branch (1-based).
    Branch(usize),
    /// Grid direction of a toric ray u + t·f (unit L² norm).
    Profile(Vec<f64>),
}

/// Known sharp values for an instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticAnswers {
    /// inf |∂F|.
    pub b: f64,
    pub direction: AnalyticDirection,
    /// Two branches share the minimal slope (tripod only).
    pub tie: bool,
}

impl AnalyticAnswers {
    pub fn stable() -> Self {
        AnalyticAnswers {
            b: 0.0,
            direction: AnalyticDirection::Trivial,
            tie: false,
        }
    }

    pub fn unstable(b: f64, direction: AnalyticDirection) -> Self {
        AnalyticAnswers {
            b,
            direction,
            tie: false,
        }
    }

    pub fn is_unstable(&self) -> bool {
        self.b > 0.0
    }
}
