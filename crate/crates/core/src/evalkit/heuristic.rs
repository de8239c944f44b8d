use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Rng;

/// How a trigger magnitude is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MagnitudeStrategy {
    /// Largest observed value of the dimension.
    Max,
    /// Smallest observed value.
    Min,
    Mean,
    /// Median of observed values.
    Med,
    /// Midpoint of the valid range.
    Mid,
    /// Uniform draw from the valid range.
    Rand,
    /// Gradient search.
    Optimized,
}

impl MagnitudeStrategy {
    pub const ALL: [MagnitudeStrategy; 7] = [
        MagnitudeStrategy::Max,
        MagnitudeStrategy::Min,
        MagnitudeStrategy::Mean,
        MagnitudeStrategy::Med,
        MagnitudeStrategy::Mid,
        MagnitudeStrategy::Rand,
        MagnitudeStrategy::Optimized,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MagnitudeStrategy::Max => "max",
            MagnitudeStrategy::Min => "min",
            MagnitudeStrategy::Mean => "mean",
            MagnitudeStrategy::Med => "med",
            MagnitudeStrategy::Mid => "mid",
            MagnitudeStrategy::Rand => "rand",
            MagnitudeStrategy::Optimized => "optimized",
        }
    }

    /// Column label used in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            MagnitudeStrategy::Max => "Max",
            MagnitudeStrategy::Min => "Min",
            MagnitudeStrategy::Mean => "Mean",
            MagnitudeStrategy::Med => "Med",
            MagnitudeStrategy::Mid => "Mid",
            MagnitudeStrategy::Rand => "Rand",
            MagnitudeStrategy::Optimized => "Optimized",
        }
    }
}

/// Heuristic magnitude for dimension values `observed` with valid `range`.
/// The result is clamped into the range.
pub fn heuristic_magnitude(strategy: MagnitudeStrategy, observed: &[f64], range: (f64, f64), rng: &mut Rng) -> Result<f64> {
    let (lo, hi) = range;
    let needs_data = !matches!(strategy, MagnitudeStrategy::Mid | MagnitudeStrategy::Rand);
    if needs_data && observed.is_empty() {
        return Err(Error::Estimation(format!("strategy `{}` needs observed states", strategy.name())));
    }
    let v = match strategy {
        MagnitudeStrategy::Max => observed.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        MagnitudeStrategy::Min => observed.iter().copied().fold(f64::INFINITY, f64::min),
        MagnitudeStrategy::Mean => observed.iter().sum::<f64>() / observed.len() as f64,
        MagnitudeStrategy::Med => {
            let mut sorted = observed.to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            if n % 2 == 1 {
                sorted[n / 2]
            } else {
                0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
            }
        }
        MagnitudeStrategy::Mid => 0.5 * (lo + hi),
        MagnitudeStrategy::Rand => rng.uniform_range(lo, hi),
        MagnitudeStrategy::Optimized => {
            return Err(Error::Domain("optimized magnitudes come from the gradient search".into()));
        }
    };
    Ok(v.clamp(lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(s: MagnitudeStrategy, xs: &[f64]) -> f64 {
        heuristic_magnitude(s, xs, (-1.0, 1.0), &mut Rng::new(0)).unwrap()
    }

    #[test]
    fn heuristics() {
        assert_eq!(h(MagnitudeStrategy::Mean, &[1.0, 2.0, 3.0].map(|x| x / 4.0)), 0.5);
        assert_eq!(
            heuristic_magnitude(MagnitudeStrategy::Mean, &[1.0, 2.0, 3.0], (-5.0, 5.0), &mut Rng::new(0)).unwrap(),
            2.0
        );
        assert_eq!(
            heuristic_magnitude(MagnitudeStrategy::Med, &[3.0, 1.0, 2.0], (-5.0, 5.0), &mut Rng::new(0)).unwrap(),
            2.0
        );
        assert_eq!(h(MagnitudeStrategy::Mid, &[]), 0.0);
        assert_eq!(h(MagnitudeStrategy::Max, &[0.2, 0.9, -0.5]), 0.9);
        assert_eq!(h(MagnitudeStrategy::Min, &[0.2, 0.9, -0.5]), -0.5);
        assert_eq!(h(MagnitudeStrategy::Med, &[0.1, 0.4, 0.2, 0.3]), 0.25);
    }

    #[test]
    fn rand_is_seeded_and_in_range() {
        let a = heuristic_magnitude(MagnitudeStrategy::Rand, &[], (2.0, 3.0), &mut Rng::new(4)).unwrap();
        let b = heuristic_magnitude(MagnitudeStrategy::Rand, &[], (2.0, 3.0), &mut Rng::new(4)).unwrap();
        assert_eq!(a, b);
        assert!((2.0..3.0).contains(&a));
    }

    #[test]
    fn empty_buffer_rejected() {
        assert!(heuristic_magnitude(MagnitudeStrategy::Max, &[], (0.0, 1.0), &mut Rng::new(0)).is_err());
        assert!(heuristic_magnitude(MagnitudeStrategy::Optimized, &[0.5], (0.0, 1.0), &mut Rng::new(0)).is_err());
    }
}
