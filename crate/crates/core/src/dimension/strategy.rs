use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::shap::{rank_dimensions, select_trigger_dimensions, Attribution};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// How trigger dimensions are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DimensionStrategy {
    /// Top-K by SHAP importance with the configured K.
    Shap,
    /// The single most important dimension.
    ShapTop1,
    /// The most important half of the dimensions, rounded up.
    ShapTop50,
    /// Every dimension, in importance order.
    All,
    /// One uniformly random dimension, seeded.
    Random,
    /// A fixed dimension.
    Index(usize),
}

impl DimensionStrategy {
    pub fn uses_shap(self) -> bool {
        matches!(self, Self::Shap | Self::ShapTop1 | Self::ShapTop50 | Self::All)
    }

    /// Number of dimensions the strategy selects out of `d`.
    pub fn count(self, k: usize, d: usize) -> usize {
        match self {
            Self::Shap => k,
            Self::ShapTop1 | Self::Random | Self::Index(_) => 1,
            Self::ShapTop50 => d.div_ceil(2),
            Self::All => d,
        }
    }

    /// Selects dimensions. SHAP-based strategies need `attribution`.
    pub fn select(self, k: usize, d: usize, attribution: Option<&Attribution>, rng: &mut Rng) -> Result<Vec<usize>> {
        match self {
            Self::Random => Ok(vec![rng.below(d)]),
            Self::Index(j) if j < d => Ok(vec![j]),
            Self::Index(j) => Err(Error::config("dimension.strategy", format!("index {j} out of range for {d} dimensions"))),
            _ => {
                let att = attribution
                    .ok_or_else(|| Error::Estimation(format!("strategy `{self}` requires SHAP attributions")))?;
                if att.importance.len() != d {
                    return Err(Error::Shape(format!("attribution over {} dims, state has {d}", att.importance.len())));
                }
                if self == Self::All {
                    return Ok(rank_dimensions(&att.importance));
                }
                select_trigger_dimensions(att, self.count(k, d))
            }
        }
    }
}

impl fmt::Display for DimensionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Shap => f.write_str("shap"),
            Self::ShapTop1 => f.write_str("shap-top1"),
            Self::ShapTop50 => f.write_str("shap-top50"),
            Self::All => f.write_str("all"),
            Self::Random => f.write_str("random"),
            Self::Index(j) => write!(f, "index:{j}"),
        }
    }
}

impl FromStr for DimensionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = || {
            Error::config(
                "dimension.strategy",
                format!("unknown strategy `{s}` (expected shap, shap-top1, shap-top50, all, random or index:<j>)"),
            )
        };
        Ok(match s {
            "shap" => Self::Shap,
            "shap-top1" => Self::ShapTop1,
            "shap-top50" => Self::ShapTop50,
            "all" => Self::All,
            "random" => Self::Random,
            _ => Self::Index(s.strip_prefix("index:").and_then(|j| j.parse().ok()).ok_or_else(err)?),
        })
    }
}

impl TryFrom<String> for DimensionStrategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DimensionStrategy> for String {
    fn from(s: DimensionStrategy) -> String {
        s.to_string()
    }
}

/// Trigger-dimension selection settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimensionConfig {
    pub strategy: DimensionStrategy,
    /// K for the `shap` strategy.
    pub k: usize,
    /// Background states drawn from the freezing-period buffer.
    pub n_background: usize,
    /// States explained.
    pub n_explain: usize,
    pub max_enumerate_dim: usize,
    pub max_coalitions: usize,
}

impl Default for DimensionConfig {
    fn default() -> Self {
        Self {
            strategy: DimensionStrategy::Shap,
            k: 1,
            n_background: 1000,
            n_explain: 100,
            max_enumerate_dim: 12,
            max_coalitions: 2048,
        }
    }
}

impl DimensionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("dimension.k", "must be at least 1"));
        }
        if self.n_background == 0 {
            return Err(Error::config("dimension.n_background", "must be positive"));
        }
        if self.n_explain == 0 {
            return Err(Error::config("dimension.n_explain", "must be positive"));
        }
        if self.max_enumerate_dim > 20 {
            return Err(Error::config("dimension.max_enumerate_dim", "full enumeration is limited to 20 dimensions"));
        }
        if self.max_coalitions < 2 {
            return Err(Error::config("dimension.max_coalitions", "must be at least 2"));
        }
        Ok(())
    }

    /// Checks `k` against the state dimension of the target environment.
    pub fn validate_for(&self, d: usize) -> Result<()> {
        self.validate()?;
        if self.strategy == DimensionStrategy::Shap && self.k > d {
            return Err(Error::config("dimension.k", format!("K = {} exceeds the state dimension {d}", self.k)));
        }
        if let DimensionStrategy::Index(j) = self.strategy {
            if j >= d {
                return Err(Error::config("dimension.strategy", format!("index {j} out of range for {d} dimensions")));
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> super::KernelShapConfig {
        super::KernelShapConfig {
            max_enumerate_dim: self.max_enumerate_dim,
            max_coalitions: self.max_coalitions,
        }
    }
}
