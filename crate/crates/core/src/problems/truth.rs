//! Ground-truth descriptions written alongside generated benchmark data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::features::FeatureSpec;

/// Generating equation of one regime as feature-name -> coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeTruth {
    pub name: String,
    pub condition: String,
    pub coefficients: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub problem: String,
    pub description: String,
    /// Display names of the input columns `x1..xn`.
    pub variables: Vec<String>,
    pub parameters: BTreeMap<String, f64>,
    pub regimes: Vec<RegimeTruth>,
    /// Generating regime of each observation.
    pub labels: Vec<usize>,
}

impl GroundTruth {
    pub fn regime(&self, name: &str) -> Option<&RegimeTruth> {
        self.regimes.iter().find(|r| r.name == name)
    }
}

/// Generated data with its candidate library (for linear discovery) and ground truth.
#[derive(Debug, Clone)]
pub struct Benchmark<T> {
    pub data: Dataset<T>,
    pub features: Option<FeatureSpec>,
    pub truth: GroundTruth,
}

pub(crate) fn coefficients(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}
