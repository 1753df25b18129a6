//! Appearance embeddings and their distances.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A fixed-dimension appearance vector with its cached Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Embedding {
    vector: Vec<f64>,
    norm: f64,
}

impl Embedding {
    pub fn new(vector: Vec<f64>) -> Result<Self> {
        if !vector.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("embedding has a non-finite component"));
        }
        let norm = libm::sqrt(vector.iter().map(|x| x * x).sum());
        if !(norm > 0.0) {
            return Err(Error::InvalidInput("embedding has zero norm"));
        }
        Ok(Self { vector, norm })
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum AppearanceMetric {
    #[default]
    Cosine,
    Euclidean,
}

/// Cosine distance `1 - a·b / (‖a‖‖b‖)`, in `[0, 2]`.
pub fn appearance_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    distance(AppearanceMetric::Cosine, a, b)
}

pub fn distance(metric: AppearanceMetric, a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(match metric {
        AppearanceMetric::Cosine => {
            let dot: f64 = a.vector.iter().zip(&b.vector).map(|(x, y)| x * y).sum();
            (1.0 - dot / (a.norm * b.norm)).clamp(0.0, 2.0)
        }
        AppearanceMetric::Euclidean => libm::sqrt(
            a.vector
                .iter()
                .zip(&b.vector)
                .map(|(x, y)| (x - y) * (x - y))
                .sum(),
        ),
    })
}
