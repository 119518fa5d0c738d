//! Competing dissimilarities: weighted ACF/PACF distances and
//! periodogram-based distances.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::embedding::{DissimilarityMatrix, TimeSeriesPanel};
use crate::error::{invalid, Error, Result};
use crate::numeric::{mean, NeumaierSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    Acf,
    Pacf,
    Per,
    PerLp,
    IntPer,
}

/// Which baseline to use and, for the correlation-based ones, the maximum
/// lag `max_lag` and geometric weight `p_weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSpec {
    pub method: BaselineMethod,
    pub max_lag: usize,
    pub p_weight: f64,
}

impl BaselineSpec {
    pub const DEFAULT_P_WEIGHT: f64 = 0.05;

    pub fn new(method: BaselineMethod, max_lag: usize, p_weight: f64) -> Result<Self> {
        let spec = Self {
            method,
            max_lag,
            p_weight,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn periodogram(method: BaselineMethod) -> Self {
        Self {
            method,
            max_lag: 1,
            p_weight: Self::DEFAULT_P_WEIGHT,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_lag < 1 {
            return Err(invalid("max_lag", "must be at least 1"));
        }
        if !(self.p_weight > 0.0 && self.p_weight < 1.0) {
            return Err(invalid("p_weight", format!("must lie in (0, 1), got {}", self.p_weight)));
        }
        Ok(())
    }
}

/// Sample autocorrelations at lags `1..=max_lag` (autocovariances with
/// denominator `n`).
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if max_lag >= n {
        return Err(Error::LagTooLarge { lag: max_lag, len: n });
    }
    let m = mean(series);
    let centred: Vec<f64> = series.iter().map(|x| x - m).collect();
    let autocov = |lag: usize| {
        centred
            .iter()
            .zip(&centred[lag..])
            .map(|(a, b)| a * b)
            .collect::<NeumaierSum>()
            .total()
            / n as f64
    };
    let c0 = autocov(0);
    if !(c0 > 0.0) {
        return Err(Error::ConstantColumn("series".into()));
    }
    Ok((1..=max_lag).map(|l| autocov(l) / c0).collect())
}

/// Partial autocorrelations at lags `1..=max_lag` via Durbin–Levinson.
pub fn pacf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    pacf_from_acf(&acf(series, max_lag)?)
}

/// Durbin–Levinson recursion on autocorrelations `rho[0] = ρ(1), …`.
pub fn pacf_from_acf(rho: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(rho.len());
    let mut phi: Vec<f64> = Vec::with_capacity(rho.len());
    for k in 1..=rho.len() {
        let num = rho[k - 1] - (1..k).map(|j| phi[j - 1] * rho[k - j - 1]).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| phi[j - 1] * rho[j - 1]).sum::<f64>();
        if den.abs() < 1e-12 {
            return Err(Error::SingularRecursion(k));
        }
        let pkk = num / den;
        let next: Vec<f64> = (1..k).map(|j| phi[j - 1] - pkk * phi[k - j - 1]).collect();
        phi = next;
        phi.push(pkk);
        out.push(pkk);
    }
    Ok(out)
}

/// `(Σ_ℓ p (1-p)^ℓ (a_ℓ - b_ℓ)²)^{1/2}` over lags `ℓ = 1..`.
pub fn weighted_coefficient_distance(a: &[f64], b: &[f64], p_weight: f64) -> f64 {
    let mut w = p_weight;
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        w *= 1.0 - p_weight;
        total += w * (x - y) * (x - y);
    }
    total.sqrt()
}

/// Geometrically weighted distance between sample ACFs.
pub fn weighted_acf_distance(x: &[f64], y: &[f64], max_lag: usize, p_weight: f64) -> Result<f64> {
    BaselineSpec::new(BaselineMethod::Acf, max_lag, p_weight)?;
    Ok(weighted_coefficient_distance(&acf(x, max_lag)?, &acf(y, max_lag)?, p_weight))
}

/// Geometrically weighted distance between sample PACFs.
pub fn weighted_pacf_distance(x: &[f64], y: &[f64], max_lag: usize, p_weight: f64) -> Result<f64> {
    BaselineSpec::new(BaselineMethod::Pacf, max_lag, p_weight)?;
    Ok(weighted_coefficient_distance(&pacf(x, max_lag)?, &pacf(y, max_lag)?, p_weight))
}

/// `I(ω_j) = |Σ_t x_t e^{-i t ω_j}|² / n` at `ω_j = 2πj/n`, `j = 1..=n/2`.
pub fn periodogram(series: &[f64]) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 4 {
        return Err(invalid("series", format!("periodogram needs n >= 4, got {n}")));
    }
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(buf[1..=n / 2].iter().map(|c| c.norm_sqr() / n as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodogramVariant {
    Raw,
    Log,
    Integrated,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Periodogram transformed for the chosen distance variant.
fn periodogram_feature(series: &[f64], variant: PeriodogramVariant) -> Result<Vec<f64>> {
    let per = periodogram(series)?;
    match variant {
        PeriodogramVariant::Raw => Ok(per),
        PeriodogramVariant::Log => {
            if let Some(j) = per.iter().position(|&v| !(v > 0.0)) {
                return Err(invalid("series", format!("zero periodogram ordinate at j = {}", j + 1)));
            }
            Ok(per.iter().map(|v| v.ln()).collect())
        }
        PeriodogramVariant::Integrated => {
            let mut cum = Vec::with_capacity(per.len());
            let mut acc = 0.0;
            for v in &per {
                acc += v;
                cum.push(acc);
            }
            if !(acc > 0.0) {
                return Err(invalid("series", "periodogram is identically zero"));
            }
            Ok(cum.into_iter().map(|c| c / acc).collect())
        }
    }
}

/// Euclidean distance between (log / normalized cumulative) periodograms.
pub fn periodogram_distance(x: &[f64], y: &[f64], variant: PeriodogramVariant) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(euclid(&periodogram_feature(x, variant)?, &periodogram_feature(y, variant)?))
}

/// Pairwise baseline dissimilarities between all components of `panel`.
pub fn baseline_dissimilarity_matrix(
    panel: &TimeSeriesPanel,
    spec: &BaselineSpec,
) -> Result<DissimilarityMatrix> {
    spec.validate()?;
    if panel.dim() < 2 {
        return Err(Error::MalformedPanel("need at least two components".into()));
    }
    let feature = |col: &[f64]| match spec.method {
        BaselineMethod::Acf => acf(col, spec.max_lag),
        BaselineMethod::Pacf => pacf(col, spec.max_lag),
        BaselineMethod::Per => periodogram_feature(col, PeriodogramVariant::Raw),
        BaselineMethod::PerLp => periodogram_feature(col, PeriodogramVariant::Log),
        BaselineMethod::IntPer => periodogram_feature(col, PeriodogramVariant::Integrated),
    };
    let features = panel
        .columns()
        .iter()
        .map(|c| feature(c))
        .collect::<Result<Vec<_>>>()?;
    let weighted = matches!(spec.method, BaselineMethod::Acf | BaselineMethod::Pacf);
    DissimilarityMatrix::from_pairs(features.len(), |j, k| {
        Ok(if weighted {
            weighted_coefficient_distance(&features[j], &features[k], spec.p_weight)
        } else {
            euclid(&features[j], &features[k])
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn wiggle(n: usize, seed: f64) -> Vec<f64> {
        (0..n)
            .map(|t| ((t as f64 * seed).sin() * 3.7 + (t as f64 * 0.37).cos()).fract())
            .collect()
    }

    #[test]
    fn alternating_series() {
        let x: Vec<f64> = (0..1000).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = acf(&x, 2).unwrap();
        assert!((r[0] + 0.999).abs() < 1e-12);
        assert!(acf(&[2.0; 10], 2).is_err());
        assert!(acf(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn pacf_first_lag_is_acf() {
        let x = wiggle(200, 1.3);
        assert_eq!(pacf(&x, 1).unwrap()[0], acf(&x, 1).unwrap()[0]);
    }

    #[test]
    fn durbin_levinson_matches_yule_walker() {
        for seed in [0.7, 1.3, 2.9] {
            let x = wiggle(300, seed);
            let rho = acf(&x, 5).unwrap();
            let dl = pacf_from_acf(&rho).unwrap();
            for k in 1..=5 {
                let r = |lag: usize| if lag == 0 { 1.0 } else { rho[lag - 1] };
                let toeplitz = DMatrix::from_fn(k, k, |i, j| r(i.abs_diff(j)));
                let rhs = DVector::from_fn(k, |i, _| rho[i]);
                let sol = toeplitz.lu().solve(&rhs).unwrap();
                assert!((sol[k - 1] - dl[k - 1]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn weighted_distance_properties() {
        let x = wiggle(120, 0.9);
        let y = wiggle(120, 2.1);
        assert_eq!(weighted_acf_distance(&x, &x, 10, 0.05).unwrap(), 0.0);
        let d = weighted_acf_distance(&x, &y, 10, 0.05).unwrap();
        let bound = 2.0 * (1..=10).map(|l| 0.05 * 0.95f64.powi(l)).sum::<f64>().sqrt();
        assert!(d > 0.0 && d <= bound && bound < 2.0);
        let affine: Vec<f64> = y.iter().map(|v| 3.0 * v - 7.0).collect();
        assert!((weighted_acf_distance(&x, &affine, 10, 0.05).unwrap() - d).abs() < 1e-12);
        assert!(weighted_acf_distance(&x, &y, 10, 1.0).is_err());
        assert!(weighted_acf_distance(&x, &y, 0, 0.05).is_err());
        assert_eq!(weighted_pacf_distance(&x, &x, 25, 0.05).unwrap(), 0.0);
    }

    #[test]
    fn periodogram_of_cosine() {
        let n = 64;
        let x: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * 5.0 * t as f64 / n as f64).cos())
            .collect();
        let per = periodogram(&x).unwrap();
        assert_eq!(per.len(), 32);
        let (peak, _) = per
            .iter()
            .enumerate()
            .fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        assert_eq!(peak + 1, 5);
        assert!((per[4] - n as f64 / 4.0).abs() < 1e-9);
        let others: f64 = per.iter().enumerate().filter(|(i, _)| *i != 4).map(|(_, v)| v).sum();
        assert!(others < 1e-20);
        assert!(periodogram(&[0.0; 8]).unwrap().iter().all(|&v| v == 0.0));
        assert!(periodogram(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn periodogram_distances() {
        let x = wiggle(100, 1.1);
        let y = wiggle(100, 0.4);
        for v in [PeriodogramVariant::Raw, PeriodogramVariant::Log, PeriodogramVariant::Integrated] {
            assert_eq!(periodogram_distance(&x, &x, v).unwrap(), 0.0);
            assert!(periodogram_distance(&x, &y, v).unwrap() > 0.0);
        }
        let scaled: Vec<f64> = y.iter().map(|v| 5.0 * v).collect();
        let a = periodogram_distance(&x, &y, PeriodogramVariant::Integrated).unwrap();
        let b = periodogram_distance(&x, &scaled, PeriodogramVariant::Integrated).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(periodogram_distance(&[0.0; 8], &x[..8], PeriodogramVariant::Log).is_err());
        assert!(periodogram_distance(&x, &y[..50], PeriodogramVariant::Raw).is_err());
    }

    #[test]
    fn matrix_identical_and_permuted() {
        let cols = vec![wiggle(80, 0.3), wiggle(80, 0.3), wiggle(80, 1.9), wiggle(80, 2.6)];
        let panel = TimeSeriesPanel::from_columns(cols).unwrap();
        let perm = [3, 1, 0, 2];
        let permuted = panel.permute_columns(&perm).unwrap();
        for method in [
            BaselineMethod::Acf,
            BaselineMethod::Pacf,
            BaselineMethod::Per,
            BaselineMethod::PerLp,
            BaselineMethod::IntPer,
        ] {
            let spec = BaselineSpec::new(method, 10, 0.05).unwrap();
            let d = baseline_dissimilarity_matrix(&panel, &spec).unwrap();
            assert_eq!(d.get(0, 1), 0.0);
            let dp = baseline_dissimilarity_matrix(&permuted, &spec).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(dp.get(i, j), d.get(perm[i], perm[j]));
                }
            }
        }
    }
}
