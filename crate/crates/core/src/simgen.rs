//! Seeded generators for the nonlinear, ARMA and VAR benchmark panels.
//!
//! Every panel column draws its innovations from its own ChaCha20 stream
//! (`seed`, stream = column index), so a column's values do not depend on
//! the order in which columns are generated.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{normalize, TimeSeriesPanel};
use crate::error::{invalid, Error, Result};
use crate::hclust::Partition;

pub const DEFAULT_BURN_IN: usize = 500;

/// Safety factor applied when scaling VAR coefficient matrices.
pub const VAR_STABILITY_MARGIN: f64 = 1.05;

/// Independent random stream for one panel column.
pub fn column_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    Normal,
    StudentT2,
}

fn draw_noise(rng: &mut impl Rng, noise: Noise, count: usize) -> Vec<f64> {
    match noise {
        Noise::Normal => (0..count).map(|_| rng.sample(StandardNormal)).collect(),
        Noise::StudentT2 => {
            let t = StudentT::new(2.0).expect("two degrees of freedom");
            (0..count).map(|_| rng.sample(t)).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearModel {
    /// Threshold AR: `0.5 X I(X <= 0) - 2 X I(X > 0) + ε`.
    Tar,
    /// Exponential AR: `(0.3 - 10 exp(-X²)) X + ε`.
    Expar,
    /// `ε_t - 0.4 ε_{t-1}`.
    Ma1,
    /// `ε_t - 0.5 ε_{t-1} + 0.8 ε²_{t-1}`.
    Nlma,
}

impl NonlinearModel {
    pub const ALL: [Self; 4] = [Self::Tar, Self::Expar, Self::Ma1, Self::Nlma];

    fn label(self) -> &'static str {
        match self {
            Self::Tar => "TAR",
            Self::Expar => "EXPAR",
            Self::Ma1 => "MA",
            Self::Nlma => "NLMA",
        }
    }
}

/// Runs a nonlinear model on given innovations from `X_0 = ε_0 = 0`.
pub fn nonlinear_recursion(model: NonlinearModel, eps: &[f64]) -> Vec<f64> {
    let mut x_prev = 0.0;
    let mut e_prev = 0.0;
    eps.iter()
        .map(|&e| {
            let x = match model {
                NonlinearModel::Tar => {
                    if x_prev <= 0.0 {
                        0.5 * x_prev + e
                    } else {
                        -2.0 * x_prev + e
                    }
                }
                NonlinearModel::Expar => (0.3 - 10.0 * (-x_prev * x_prev).exp()) * x_prev + e,
                NonlinearModel::Ma1 => e - 0.4 * e_prev,
                NonlinearModel::Nlma => e - 0.5 * e_prev + 0.8 * e_prev * e_prev,
            };
            x_prev = x;
            e_prev = e;
            x
        })
        .collect()
}

fn gen_nonlinear_rng(model: NonlinearModel, n: usize, burn_in: usize, rng: &mut impl Rng) -> Vec<f64> {
    let eps = draw_noise(rng, Noise::Normal, burn_in + n);
    nonlinear_recursion(model, &eps).split_off(burn_in)
}

/// `n` values of a nonlinear model with standard normal innovations.
pub fn gen_nonlinear(model: NonlinearModel, n: usize, seed: u64) -> Vec<f64> {
    gen_nonlinear_rng(model, n, DEFAULT_BURN_IN, &mut column_rng(seed, 0))
}

fn spectral_radius(m: DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Companion-matrix spectral radius of a (V)AR with the given lag matrices.
pub fn companion_spectral_radius(lags: &[DMatrix<f64>]) -> f64 {
    let Some(first) = lags.first() else {
        return 0.0;
    };
    let k = first.nrows();
    let p = lags.len();
    let mut comp = DMatrix::zeros(k * p, k * p);
    for (i, b) in lags.iter().enumerate() {
        comp.view_mut((0, i * k), (k, k)).copy_from(b);
    }
    for i in 0..k * (p - 1) {
        comp[(k + i, i)] = 1.0;
    }
    spectral_radius(comp)
}

/// Rejects AR coefficients whose companion spectral radius is not below 1.
pub fn check_causal(ar: &[f64]) -> Result<()> {
    let lags: Vec<DMatrix<f64>> = ar.iter().map(|&a| DMatrix::from_element(1, 1, a)).collect();
    let r = companion_spectral_radius(&lags);
    if r < 1.0 {
        Ok(())
    } else {
        Err(Error::NonCausal(r))
    }
}

/// `X_t = Σ ar_i X_{t-i} + ε_t + Σ ma_j ε_{t-j}` from zero initial values.
pub fn arma_recursion(ar: &[f64], ma: &[f64], eps: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = Vec::with_capacity(eps.len());
    for t in 0..eps.len() {
        let mut v = eps[t];
        for (i, a) in ar.iter().enumerate() {
            if t > i {
                v += a * x[t - i - 1];
            }
        }
        for (j, m) in ma.iter().enumerate() {
            if t > j {
                v += m * eps[t - j - 1];
            }
        }
        x.push(v);
    }
    x
}

fn gen_arma_rng(ar: &[f64], ma: &[f64], n: usize, burn_in: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    check_causal(ar)?;
    let eps = draw_noise(rng, Noise::Normal, burn_in + n);
    Ok(arma_recursion(ar, ma, &eps).split_off(burn_in))
}

/// `n` values of a causal Gaussian ARMA process.
pub fn gen_arma(ar: &[f64], ma: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    gen_arma_rng(ar, ma, n, DEFAULT_BURN_IN, &mut column_rng(seed, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarKind {
    Var1,
    Var2,
}

/// Lag matrices `B_1, …, B_p` of a 10-dimensional VAR.
#[derive(Debug, Clone, PartialEq)]
pub struct VarCoefficients {
    pub lags: Vec<DMatrix<f64>>,
}

fn linspace_matrix(lo: f64, hi: f64) -> DMatrix<f64> {
    let values: Vec<f64> = (0..100).map(|i| lo + (hi - lo) * i as f64 / 99.0).collect();
    DMatrix::from_column_slice(10, 10, &values)
}

/// Benchmark VAR coefficients: 100 equally spaced values filled column-wise.
///
/// VAR(1) uses `[-1, 1]` scaled by `1.05 σ_max`. VAR(2) uses `[-1, 0]` and
/// `[0, 1]`, both divided by `1.05 λ_max((B1+B2)(B1+B2)ᵀ)`.
pub fn var_coefficients(kind: VarKind) -> VarCoefficients {
    match kind {
        VarKind::Var1 => {
            let b = linspace_matrix(-1.0, 1.0);
            let sigma_max = b.singular_values().max();
            VarCoefficients {
                lags: vec![b / (VAR_STABILITY_MARGIN * sigma_max)],
            }
        }
        VarKind::Var2 => {
            let b1 = linspace_matrix(-1.0, 0.0);
            let b2 = linspace_matrix(0.0, 1.0);
            let s = &b1 + &b2;
            let lambda_max = (&s * s.transpose()).symmetric_eigenvalues().max();
            let scale = VAR_STABILITY_MARGIN * lambda_max;
            VarCoefficients {
                lags: vec![b1 / scale, b2 / scale],
            }
        }
    }
}

/// Runs `X_t = Σ B_i X_{t-i} + ε_t` on innovation rows, with every
/// pre-sample value equal to `start`. Returns one row per time point.
pub fn var_recursion(coeffs: &VarCoefficients, start: &[f64], innovations: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = start.len();
    let mut history: Vec<DVector<f64>> = vec![DVector::from_column_slice(start); coeffs.lags.len()];
    innovations
        .iter()
        .map(|eps| {
            let mut x = DVector::from_column_slice(eps);
            for (b, past) in coeffs.lags.iter().zip(history.iter().rev()) {
                x += b * past;
            }
            history.remove(0);
            history.push(x.clone());
            debug_assert_eq!(x.len(), k);
            x.iter().copied().collect()
        })
        .collect()
}

fn gen_var_streams(
    coeffs: &VarCoefficients,
    noise: Noise,
    n: usize,
    burn_in: usize,
    seed: u64,
    first_stream: u64,
) -> Result<Vec<Vec<f64>>> {
    let r = companion_spectral_radius(&coeffs.lags);
    if r >= 1.0 {
        return Err(Error::NonCausal(r));
    }
    let k = coeffs.lags[0].nrows();
    let streams: Vec<Vec<f64>> = (0..k as u64)
        .into_par_iter()
        .map(|i| draw_noise(&mut column_rng(seed, first_stream + i), noise, burn_in + n))
        .collect();
    let rows: Vec<Vec<f64>> = (0..burn_in + n)
        .map(|t| streams.iter().map(|s| s[t]).collect())
        .collect();
    let path = var_recursion(coeffs, &vec![0.0; k], &rows);
    Ok((0..k)
        .map(|i| path[burn_in..].iter().map(|row| row[i]).collect())
        .collect())
}

/// Ten component series (columns) of a stationary VAR.
pub fn gen_var(coeffs: &VarCoefficients, noise: Noise, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    gen_var_streams(coeffs, noise, n, DEFAULT_BURN_IN, seed, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Four nonlinear models, four series each.
    Nonlinear16,
    /// Five ARMA models, four series each.
    Arma20,
    /// Four 10-dimensional VARs (VAR(1)/VAR(2), normal/t₂ noise).
    Var40,
}

impl Scenario {
    pub fn clusters(self) -> usize {
        match self {
            Self::Nonlinear16 => 4,
            Self::Arma20 => 5,
            Self::Var40 => 4,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::Nonlinear16 => 16,
            Self::Arma20 => 20,
            Self::Var40 => 40,
        }
    }
}

/// The five ARMA models as `(label, ar, ma)`.
pub const ARMA_MODELS: [(&str, &[f64], &[f64]); 5] = [
    ("AR1", &[0.5], &[]),
    ("MA1", &[], &[0.7]),
    ("AR2", &[0.6, 0.2], &[]),
    ("MA2", &[], &[0.8, -0.6]),
    ("ARMA11", &[0.8], &[0.2]),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl SimSpec {
    pub fn new(scenario: Scenario, n: usize, seed: u64) -> Self {
        Self {
            scenario,
            n,
            seed,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub partition: Partition,
    pub k0: usize,
}

/// Simulates the scenario's panel (every column normalized) and its ground
/// truth. Deterministic in `spec`.
pub fn build_experiment(spec: &SimSpec) -> Result<(TimeSeriesPanel, GroundTruth)> {
    if spec.n < 10 {
        return Err(invalid("n", format!("must be at least 10, got {}", spec.n)));
    }
    let (n, burn, seed) = (spec.n, spec.burn_in, spec.seed);
    let per_cluster = spec.scenario.dim() / spec.scenario.clusters();
    let (names, columns): (Vec<String>, Vec<Vec<f64>>) = match spec.scenario {
        Scenario::Nonlinear16 => {
            let cols = (0..16usize)
                .into_par_iter()
                .map(|c| {
                    let model = NonlinearModel::ALL[c / per_cluster];
                    gen_nonlinear_rng(model, n, burn, &mut column_rng(seed, c as u64))
                })
                .collect();
            let names = (0..16)
                .map(|c| format!("{}_{}", NonlinearModel::ALL[c / per_cluster].label(), c % per_cluster + 1))
                .collect();
            (names, cols)
        }
        Scenario::Arma20 => {
            let cols = (0..20usize)
                .into_par_iter()
                .map(|c| {
                    let (_, ar, ma) = ARMA_MODELS[c / per_cluster];
                    gen_arma_rng(ar, ma, n, burn, &mut column_rng(seed, c as u64))
                })
                .collect::<Result<Vec<_>>>()?;
            let names = (0..20)
                .map(|c| format!("{}_{}", ARMA_MODELS[c / per_cluster].0, c % per_cluster + 1))
                .collect();
            (names, cols)
        }
        Scenario::Var40 => {
            let blocks = [
                ("VAR1N", VarKind::Var1, Noise::Normal),
                ("VAR1T", VarKind::Var1, Noise::StudentT2),
                ("VAR2N", VarKind::Var2, Noise::Normal),
                ("VAR2T", VarKind::Var2, Noise::StudentT2),
            ];
            let mut names = Vec::with_capacity(40);
            let mut cols = Vec::with_capacity(40);
            for (b, (label, kind, noise)) in blocks.into_iter().enumerate() {
                let block = gen_var_streams(&var_coefficients(kind), noise, n, burn, seed, (b * 10) as u64)?;
                names.extend((1..=10).map(|i| format!("{label}_{i}")));
                cols.extend(block);
            }
            (names, cols)
        }
    };
    let panel = normalize(&TimeSeriesPanel::new(names, columns)?)?;
    let labels: Vec<usize> = (0..spec.scenario.dim()).map(|c| c / per_cluster).collect();
    let truth = GroundTruth {
        partition: Partition::from_labels(&labels)?,
        k0: spec.scenario.clusters(),
    };
    Ok((panel, truth))
}
