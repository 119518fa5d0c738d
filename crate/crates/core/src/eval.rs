//! Similarity index against a ground-truth partition and the replicated
//! simulation runner.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_dissimilarity_matrix, BaselineMethod, BaselineSpec};
use crate::embedding::{
    bivariate_sum_dissimilarity_matrix, joint_dissimilarity_matrix, DissimilarityMatrix,
    TimeSeriesPanel,
};
use crate::error::{invalid, Error, Result};
use crate::hclust::{agglomerate, cut, default_k_max, select_k, Partition};
use crate::numeric::{mean, median, quantile};
use crate::simgen::{build_experiment, SimSpec};

/// Version of the [`ExperimentReport`] JSON layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// `(1/K) Σ_i max_j 2|G_i ∩ A_j| / (|G_i| + |A_j|)` where `K` is the number
/// of clusters in the ground truth `truth`.
pub fn similarity_index(truth: &Partition, candidate: &Partition) -> Result<f64> {
    if truth.len() != candidate.len() {
        return Err(Error::PartitionMismatch(format!(
            "{} vs {} elements",
            truth.len(),
            candidate.len()
        )));
    }
    let (kg, ka) = (truth.num_clusters(), candidate.num_clusters());
    let mut overlap = vec![0usize; kg * ka];
    let mut g_size = vec![0usize; kg];
    let mut a_size = vec![0usize; ka];
    for (&g, &a) in truth.labels().iter().zip(candidate.labels()) {
        overlap[g * ka + a] += 1;
        g_size[g] += 1;
        a_size[a] += 1;
    }
    let total: f64 = (0..kg)
        .map(|i| {
            (0..ka)
                .map(|j| 2.0 * overlap[i * ka + j] as f64 / (g_size[i] + a_size[j]) as f64)
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(total / kg as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMode {
    Joint,
    BivariateSum,
}

/// A dissimilarity used in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Energy { lag: usize, mode: EnergyMode },
    Baseline(BaselineSpec),
}

impl Method {
    pub fn energy(lag: usize) -> Self {
        Self::Energy {
            lag,
            mode: EnergyMode::Joint,
        }
    }

    pub fn acf(max_lag: usize) -> Self {
        Self::Baseline(BaselineSpec {
            method: BaselineMethod::Acf,
            max_lag,
            p_weight: BaselineSpec::DEFAULT_P_WEIGHT,
        })
    }

    pub fn pacf(max_lag: usize) -> Self {
        Self::Baseline(BaselineSpec {
            method: BaselineMethod::Pacf,
            max_lag,
            p_weight: BaselineSpec::DEFAULT_P_WEIGHT,
        })
    }

    pub fn periodogram(method: BaselineMethod) -> Self {
        Self::Baseline(BaselineSpec::periodogram(method))
    }

    pub fn dissimilarity(&self, panel: &TimeSeriesPanel) -> Result<DissimilarityMatrix> {
        match *self {
            Self::Energy {
                lag,
                mode: EnergyMode::Joint,
            } => joint_dissimilarity_matrix(panel, lag),
            Self::Energy {
                lag,
                mode: EnergyMode::BivariateSum,
            } => bivariate_sum_dissimilarity_matrix(panel, lag),
            Self::Baseline(spec) => baseline_dissimilarity_matrix(panel, &spec),
        }
    }
}

/// Short descriptors: `energy-h1`, `energy-bivsum-h2`, `acf-L10`,
/// `pacf-L25-p0.1`, `per`, `per-lp`, `int-per`.
impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Energy {
                lag,
                mode: EnergyMode::Joint,
            } => write!(f, "energy-h{lag}"),
            Self::Energy {
                lag,
                mode: EnergyMode::BivariateSum,
            } => write!(f, "energy-bivsum-h{lag}"),
            Self::Baseline(spec) => {
                let name = match spec.method {
                    BaselineMethod::Acf => "acf",
                    BaselineMethod::Pacf => "pacf",
                    BaselineMethod::Per => return f.write_str("per"),
                    BaselineMethod::PerLp => return f.write_str("per-lp"),
                    BaselineMethod::IntPer => return f.write_str("int-per"),
                };
                write!(f, "{name}-L{}", spec.max_lag)?;
                if spec.p_weight != BaselineSpec::DEFAULT_P_WEIGHT {
                    write!(f, "-p{}", spec.p_weight)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || invalid("method", format!("unrecognised method `{s}`"));
        let num = |t: &str, prefix: char| -> Result<usize> {
            t.strip_prefix(prefix).and_then(|v| v.parse().ok()).ok_or_else(bad)
        };
        match s {
            "per" => return Ok(Self::periodogram(BaselineMethod::Per)),
            "per-lp" => return Ok(Self::periodogram(BaselineMethod::PerLp)),
            "int-per" => return Ok(Self::periodogram(BaselineMethod::IntPer)),
            _ => {}
        }
        let parts: Vec<&str> = s.split('-').collect();
        match parts.as_slice() {
            ["energy", h] => Ok(Self::energy(num(h, 'h')?)),
            ["energy", "bivsum", h] => Ok(Self::Energy {
                lag: num(h, 'h')?,
                mode: EnergyMode::BivariateSum,
            }),
            [kind @ ("acf" | "pacf"), l, rest @ ..] => {
                let method = if *kind == "acf" {
                    BaselineMethod::Acf
                } else {
                    BaselineMethod::Pacf
                };
                let p_weight = match rest {
                    [] => BaselineSpec::DEFAULT_P_WEIGHT,
                    [p] => p.strip_prefix('p').and_then(|v| v.parse().ok()).ok_or_else(bad)?,
                    _ => return Err(bad()),
                };
                Ok(Self::Baseline(BaselineSpec::new(method, num(l, 'L')?, p_weight)?))
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KMode {
    /// Cut at the ground-truth cluster count.
    KnownK0,
    /// Choose the count by average silhouette width.
    Silhouette,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
    pub iqr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let (q1, q3) = (quantile(values, 0.25), quantile(values, 0.75));
        Self {
            min: quantile(values, 0.0),
            q1,
            median: median(values),
            mean: mean(values),
            q3,
            max: quantile(values, 1.0),
            iqr: q3 - q1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub scores: Vec<f64>,
    pub clusters: Vec<usize>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub spec: SimSpec,
    pub reps: usize,
    pub base_seed: u64,
    pub k_mode: KMode,
    pub replicate_seeds: Vec<u64>,
    pub methods: Vec<MethodResult>,
}

impl ExperimentReport {
    pub fn method(&self, name: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == name)
    }
}

/// Seed of replicate `r`.
pub fn replicate_seed(base_seed: u64, r: usize) -> u64 {
    base_seed ^ r as u64
}

/// Clusters one panel with `method` and scores it against `truth`; returns
/// `(similarity, cluster count)`.
pub fn score_method(
    panel: &TimeSeriesPanel,
    truth: &Partition,
    k0: usize,
    method: &Method,
    k_mode: KMode,
) -> Result<(f64, usize)> {
    let d = method.dissimilarity(panel)?;
    let dend = agglomerate(&d)?;
    let k = match k_mode {
        KMode::KnownK0 => k0,
        KMode::Silhouette => select_k(&dend, &d, default_k_max(d.size()))?.0,
    };
    Ok((similarity_index(truth, &cut(&dend, k)?)?, k))
}

/// Replicated simulation study: each replicate simulates `spec` with seed
/// `base_seed ^ r`, clusters it with every method and scores the result.
pub fn run_experiment(
    spec: &SimSpec,
    methods: &[Method],
    reps: usize,
    base_seed: u64,
    k_mode: KMode,
) -> Result<ExperimentReport> {
    if reps == 0 {
        return Err(invalid("reps", "must be at least 1"));
    }
    if methods.is_empty() {
        return Err(invalid("methods", "no methods given"));
    }
    let seeds: Vec<u64> = (0..reps).map(|r| replicate_seed(base_seed, r)).collect();
    let per_rep = seeds
        .par_iter()
        .map(|&seed| {
            let (panel, truth) = build_experiment(&spec.with_seed(seed))?;
            methods
                .iter()
                .map(|m| score_method(&panel, &truth.partition, truth.k0, m, k_mode))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let methods = methods
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let scores: Vec<f64> = per_rep.iter().map(|r| r[i].0).collect();
            MethodResult {
                method: m.to_string(),
                clusters: per_rep.iter().map(|r| r[i].1).collect(),
                summary: Summary::of(&scores),
                scores,
            }
        })
        .collect();
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        spec: *spec,
        reps,
        base_seed,
        k_mode,
        replicate_seeds: seeds,
        methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::Scenario;

    fn p(groups: &[Vec<usize>]) -> Partition {
        Partition::from_groups(groups).unwrap()
    }

    #[test]
    fn hand_computed_similarities() {
        let g = p(&[vec![0, 1], vec![2, 3]]);
        assert_eq!(similarity_index(&g, &g).unwrap(), 1.0);
        assert_eq!(similarity_index(&g, &p(&[vec![0, 2], vec![1, 3]])).unwrap(), 0.5);
        let g = p(&[vec![0, 1, 2], vec![3]]);
        let a = p(&[vec![0, 1], vec![2, 3]]);
        let v = similarity_index(&g, &a).unwrap();
        assert!((v - (0.8 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!(similarity_index(&g, &p(&[vec![0, 1, 2]])).is_err());
    }

    #[test]
    fn method_descriptors_round_trip() {
        for m in [
            Method::energy(2),
            Method::Energy {
                lag: 3,
                mode: EnergyMode::BivariateSum,
            },
            Method::acf(10),
            Method::pacf(25),
            Method::Baseline(BaselineSpec::new(BaselineMethod::Acf, 5, 0.1).unwrap()),
            Method::periodogram(BaselineMethod::Per),
            Method::periodogram(BaselineMethod::PerLp),
            Method::periodogram(BaselineMethod::IntPer),
        ] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("energy".parse::<Method>().is_err());
        assert!("acf-L0".parse::<Method>().is_err());
        assert!("dtw".parse::<Method>().is_err());
    }

    #[test]
    fn experiment_is_deterministic() {
        let spec = SimSpec::new(Scenario::Nonlinear16, 60, 0);
        let methods = [Method::energy(1), Method::acf(5)];
        let a = run_experiment(&spec, &methods, 2, 9, KMode::KnownK0).unwrap();
        let b = run_experiment(&spec, &methods, 2, 9, KMode::KnownK0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.methods[0].scores.len(), 2);
        assert!(a.methods.iter().flat_map(|m| &m.scores).all(|&s| (0.0..=1.0).contains(&s)));
        let s = run_experiment(&spec, &methods, 1, 9, KMode::Silhouette).unwrap();
        assert!(s.methods[0].clusters[0] >= 2);
        assert!(run_experiment(&spec, &[], 1, 9, KMode::KnownK0).is_err());
        assert!(run_experiment(&spec, &methods, 0, 9, KMode::KnownK0).is_err());
    }

    #[test]
    fn method_list_does_not_change_panels() {
        let spec = SimSpec::new(Scenario::Arma20, 80, 0);
        let one = run_experiment(&spec, &[Method::energy(1)], 2, 5, KMode::KnownK0).unwrap();
        let two = run_experiment(&spec, &[Method::acf(10), Method::energy(1)], 2, 5, KMode::KnownK0).unwrap();
        assert_eq!(one.methods[0], two.methods[1]);
    }
}
