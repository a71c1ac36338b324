//! Within-group user distance and uniform/divergent classification.
//!
//! Each group gets a normalized distance: the mean Euclidean distance over all
//! user pairs divided by `100·√I`, the largest distance two rating vectors of
//! length `I` can have. Normalizing makes groups with different item counts
//! comparable, so a single pair of thresholds `μ − σ` / `μ + σ` is computed
//! over the pooled corpus.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{GroupScenario, MAX_RATING};

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceReport {
    /// Symmetric `U × U` matrix with a zero diagonal.
    pub pairwise: Vec<Vec<f64>>,
    pub normalized_distance: f64,
}

#[allow(clippy::needless_range_loop)]
pub fn pairwise_distances(scenario: &GroupScenario) -> DistanceReport {
    let n = scenario.num_users();
    let mut pairwise = vec![vec![0.0; n]; n];
    let mut total = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let d = scenario.ratings[a]
                .iter()
                .zip(&scenario.ratings[b])
                .map(|(&x, &y)| {
                    let diff = f64::from(x) - f64::from(y);
                    diff * diff
                })
                .sum::<f64>()
                .sqrt();
            pairwise[a][b] = d;
            pairwise[b][a] = d;
            total += d;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let max = f64::from(MAX_RATING) * (scenario.num_items() as f64).sqrt();
    DistanceReport { pairwise, normalized_distance: total / pairs / max }
}

/// Normalized distance of every scenario, computed in parallel.
pub fn corpus_distances<'a, I>(scenarios: I) -> Vec<(String, f64)>
where
    I: IntoParallelIterator<Item = &'a GroupScenario>,
{
    scenarios.into_par_iter().map(|s| (s.scenario_id.clone(), pairwise_distances(s).normalized_distance)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureClass {
    Uniform,
    Intermediate,
    Divergent,
}

impl fmt::Display for StructureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructureClass::Uniform => "uniform",
            StructureClass::Intermediate => "intermediate",
            StructureClass::Divergent => "divergent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStructureLabel {
    pub scenario_id: String,
    pub label: StructureClass,
    pub normalized_distance: f64,
    pub thresholds: Thresholds,
}

/// Population statistics of a classified corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureClassification {
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    pub labels: Vec<GroupStructureLabel>,
}

impl StructureClassification {
    pub fn count(&self, class: StructureClass) -> usize {
        self.labels.iter().filter(|l| l.label == class).count()
    }

    pub fn label_of(&self, scenario_id: &str) -> Option<&GroupStructureLabel> {
        self.labels.iter().find(|l| l.scenario_id == scenario_id)
    }
}

pub fn classify_value(d: f64, t: Thresholds) -> StructureClass {
    if d < t.low {
        StructureClass::Uniform
    } else if d > t.high {
        StructureClass::Divergent
    } else {
        StructureClass::Intermediate
    }
}

/// Labels each group against pooled `μ ± σ` thresholds.
pub fn classify_corpus(distances: &[(String, f64)]) -> Result<StructureClassification> {
    if distances.len() < 2 {
        return Err(Error::DegeneratePopulation(format!("need at least 2 groups, got {}", distances.len())));
    }
    if let Some((id, d)) = distances.iter().find(|(_, d)| !d.is_finite()) {
        return Err(Error::Validation(format!("distance of {id} is not finite: {d}")));
    }
    let n = distances.len() as f64;
    let mean = distances.iter().map(|(_, d)| d).sum::<f64>() / n;
    let var = distances.iter().map(|(_, d)| (d - mean).powi(2)).sum::<f64>() / n;
    let std_dev = var.sqrt();
    // identical inputs can leave rounding residue in the mean
    if std_dev <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::DegeneratePopulation("all group distances are equal (σ = 0)".into()));
    }
    let thresholds = Thresholds { low: mean - std_dev, high: mean + std_dev };
    let labels = distances
        .iter()
        .map(|(id, d)| GroupStructureLabel {
            scenario_id: id.clone(),
            label: classify_value(*d, thresholds),
            normalized_distance: *d,
            thresholds,
        })
        .collect();
    Ok(StructureClassification { mean, std_dev, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn two_users(a: Vec<u8>, b: Vec<u8>) -> GroupScenario {
        GroupScenario::from_ratings("t", vec![a, b], 0).unwrap()
    }

    #[test]
    fn maximal_disagreement() {
        let r = pairwise_distances(&two_users(vec![0, 0], vec![100, 100]));
        assert!((r.pairwise[0][1] - 100.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((r.normalized_distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_users() {
        let r = pairwise_distances(&two_users(vec![3, 70, 9], vec![3, 70, 9]));
        assert_eq!(r.normalized_distance, 0.0);
        assert_eq!(r.pairwise, vec![vec![0.0; 2]; 2]);
    }

    #[test]
    fn one_axis_distance() {
        let r = pairwise_distances(&two_users(vec![0, 0], vec![100, 0]));
        assert!((r.pairwise[0][1] - 100.0).abs() < 1e-12);
        assert!((r.normalized_distance - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
    }

    #[test]
    fn matrix_is_symmetric_with_zero_diagonal() {
        let s = crate::scenario::generate_scenario(4, 25, 3).unwrap();
        let r = pairwise_distances(&s);
        for a in 0..4 {
            assert_eq!(r.pairwise[a][a], 0.0);
            for b in 0..4 {
                assert_eq!(r.pairwise[a][b], r.pairwise[b][a]);
            }
        }
    }

    #[test]
    fn equal_distances_are_degenerate() {
        let d: Vec<_> = (0..10).map(|i| (format!("g{i}"), 0.3)).collect();
        assert!(matches!(classify_corpus(&d), Err(Error::DegeneratePopulation(_))));
        assert!(matches!(classify_corpus(&d[..1]), Err(Error::DegeneratePopulation(_))));
    }

    #[test]
    fn normal_population_tail_mass() {
        // Φ(−1) ≈ 0.1587 of a normal population falls in each tail
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.4, 0.05).unwrap();
        let d: Vec<_> = (0..1000).map(|i| (format!("g{i}"), normal.sample(&mut rng))).collect();
        let c = classify_corpus(&d).unwrap();
        for class in [StructureClass::Uniform, StructureClass::Divergent] {
            let frac = c.count(class) as f64 / 1000.0;
            assert!((frac - 0.1587).abs() <= 0.03, "{class}: {frac}");
        }
    }

    #[test]
    fn labels_match_thresholds() {
        let d = vec![("a".into(), 0.1), ("b".into(), 0.5), ("c".into(), 0.9), ("d".into(), 0.5)];
        let c = classify_corpus(&d).unwrap();
        assert_eq!(c.label_of("a").unwrap().label, StructureClass::Uniform);
        assert_eq!(c.label_of("b").unwrap().label, StructureClass::Intermediate);
        assert_eq!(c.label_of("c").unwrap().label, StructureClass::Divergent);
    }
}
