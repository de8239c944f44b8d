use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::Action;
use crate::error::{Error, Result};

/// The attack artifact: which dimensions to overwrite, with which values,
/// and the action the backdoor should produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerSpec {
    pub dimensions: Vec<usize>,
    pub magnitudes: Vec<f64>,
    pub target: Action,
    /// Valid range of each trigger dimension.
    pub ranges: Vec<(f64, f64)>,
    /// How the dimensions were chosen, e.g. `shap` or `index:2`.
    pub dimension_strategy: String,
    /// How the magnitudes were chosen, e.g. `optimized` or `mean`.
    pub magnitude_strategy: String,
    /// Global SHAP importance of every state dimension, when computed.
    pub importance: Option<Vec<f64>>,
    /// Trigger loss at the first and final iterate of the last search.
    pub initial_loss: Option<f64>,
    pub final_loss: Option<f64>,
    /// Timestep at which this trigger took effect.
    pub timestep: u64,
}

impl TriggerSpec {
    pub fn new(dimensions: Vec<usize>, magnitudes: Vec<f64>, target: Action, ranges: Vec<(f64, f64)>) -> Result<Self> {
        let spec = Self {
            dimensions,
            magnitudes,
            target,
            ranges,
            dimension_strategy: String::new(),
            magnitude_strategy: String::new(),
            importance: None,
            initial_loss: None,
            final_loss: None,
            timestep: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.len() != self.magnitudes.len() || self.dimensions.len() != self.ranges.len() {
            return Err(Error::Shape(format!(
                "trigger has {} dimensions, {} magnitudes, {} ranges",
                self.dimensions.len(),
                self.magnitudes.len(),
                self.ranges.len()
            )));
        }
        for ((&j, &v), &(lo, hi)) in self.dimensions.iter().zip(&self.magnitudes).zip(&self.ranges) {
            if !(v >= lo && v <= hi) {
                return Err(Error::Domain(format!("magnitude {v} for dimension {j} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn inject(&self, state: &[f64]) -> Vec<f64> {
        inject_trigger(state, &self.dimensions, &self.magnitudes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let spec: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Copy of `state` with `state[dims[i]] = values[i]`.
pub fn inject_trigger(state: &[f64], dims: &[usize], values: &[f64]) -> Vec<f64> {
    let mut out = state.to_vec();
    for (&j, &v) in dims.iter().zip(values) {
        out[j] = v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injection() {
        assert_eq!(inject_trigger(&[1.0, 2.0, 3.0], &[0], &[9.0]), vec![9.0, 2.0, 3.0]);
        assert_eq!(inject_trigger(&[1.0, 2.0, 3.0], &[], &[]), vec![1.0, 2.0, 3.0]);
        assert_eq!(inject_trigger(&[1.0, 2.0], &[1, 0], &[5.0, 6.0]), vec![6.0, 5.0]);
    }

    #[test]
    fn out_of_range_magnitude_rejected() {
        assert!(TriggerSpec::new(vec![0], vec![2.0], Action::Discrete(0), vec![(-1.0, 1.0)]).is_err());
        assert!(TriggerSpec::new(vec![0], vec![1.0], Action::Discrete(0), vec![(-1.0, 1.0)]).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let mut spec = TriggerSpec::new(vec![2, 0], vec![0.25, -1.0], Action::Continuous(vec![-2.0]), vec![(-1.0, 1.0); 2]).unwrap();
        spec.importance = Some(vec![0.1, 0.2, 0.3]);
        spec.final_loss = Some(0.01);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trigger.json");
        spec.save(&path).unwrap();
        assert_eq!(TriggerSpec::load(&path).unwrap(), spec);
    }
}
