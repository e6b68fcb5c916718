//! Seeded synthetic sample sets for demos and calibration experiments.
//!
//! Points are uniform over a square domain. Reference values are drawn
//! independently of location, so (predicted, reference) pairs are exchangeable
//! across locations unless a scenario plants structure in the error.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{validate_sample_set, Point, SamplePoint, SampleSet};
use crate::spatial::euclidean_distance;

/// Side length of the square domain, in coordinate units.
pub const DOMAIN_SIZE: f64 = 10_000.0;
/// Standard deviation of the baseline prediction error.
pub const ERROR_SD: f64 = 10.0;
/// Mean and standard deviation of the reference values.
pub const REFERENCE_MEAN: f64 = 150.0;
pub const REFERENCE_SD: f64 = 30.0;
/// Error inflation inside the planted disc of the cluster scenario.
pub const CLUSTER_INFLATION: f64 = 5.0;
/// Planted disc radius as a fraction of the domain side.
pub const CLUSTER_RADIUS_FRACTION: f64 = 0.15;
/// Constant under-prediction of the bias scenario.
pub const BIAS_OFFSET: f64 = -25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Independent errors, no spatial structure.
    Null,
    /// Over-predictions inflated inside a disc at the domain center.
    Cluster,
    /// Uniform under-prediction plus independent errors.
    Bias,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "null" => Ok(Scenario::Null),
            "cluster" => Ok(Scenario::Cluster),
            "bias" => Ok(Scenario::Bias),
            _ => Err(Error::UnknownScenario(s.to_string())),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Null => "null",
            Scenario::Cluster => "cluster",
            Scenario::Bias => "bias",
        })
    }
}

/// A planted high-error region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: Point,
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, p: Point) -> bool {
        euclidean_distance(self.center, p) < self.radius
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub samples: SampleSet,
    pub disc: Option<Disc>,
}

pub fn generate(scenario: Scenario, n: usize, seed: u64) -> Result<Synthetic> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, ERROR_SD).expect("positive sd");
    let reference_dist = Normal::new(REFERENCE_MEAN, REFERENCE_SD).expect("positive sd");
    let disc = (scenario == Scenario::Cluster).then_some(Disc {
        center: Point::new(DOMAIN_SIZE / 2.0, DOMAIN_SIZE / 2.0),
        radius: CLUSTER_RADIUS_FRACTION * DOMAIN_SIZE,
    });
    let points = (0..n)
        .map(|i| {
            let loc = Point::new(rng.random_range(0.0..DOMAIN_SIZE), rng.random_range(0.0..DOMAIN_SIZE));
            let reference = reference_dist.sample(&mut rng);
            let mut error = noise.sample(&mut rng);
            match scenario {
                Scenario::Null => {}
                Scenario::Cluster => {
                    // one-signed so the disc is a hot spot, not just a noisier patch
                    if disc.is_some_and(|d| d.contains(loc)) {
                        error = CLUSTER_INFLATION * error.abs();
                    }
                }
                Scenario::Bias => error += BIAS_OFFSET,
            }
            SamplePoint::new(format!("s{i:04}"), loc.x, loc.y, reference + error, reference)
        })
        .collect();
    Ok(Synthetic {
        samples: validate_sample_set(points)?,
        disc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::global_diagnostics;

    #[test]
    fn scenario_names() {
        assert_eq!("cluster".parse::<Scenario>().unwrap(), Scenario::Cluster);
        assert!(matches!("storm".parse::<Scenario>(), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn sizes_and_determinism() {
        let a = generate(Scenario::Null, 550, 7).unwrap();
        let b = generate(Scenario::Null, 550, 7).unwrap();
        assert_eq!(a.samples.len(), 550);
        assert_eq!(a.samples, b.samples);
        assert_ne!(a.samples, generate(Scenario::Null, 550, 8).unwrap().samples);
    }

    #[test]
    fn cluster_disc_has_larger_errors() {
        let syn = generate(Scenario::Cluster, 550, 11).unwrap();
        let disc = syn.disc.unwrap();
        let (mut inside, mut outside) = (Vec::new(), Vec::new());
        for p in syn.samples.points() {
            let d = p.deviation().abs();
            if disc.contains(p.location()) {
                inside.push(d)
            } else {
                outside.push(d)
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(inside.len() > 10);
        assert!(mean(&inside) > 3.0 * mean(&outside));
    }

    #[test]
    fn bias_scenario_under_predicts() {
        let syn = generate(Scenario::Bias, 550, 3).unwrap();
        let g = global_diagnostics(&syn.samples).unwrap();
        assert!(g.msd < -20.0 && g.msd > -30.0);
    }
}
