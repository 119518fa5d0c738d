//! Energy distance between two multivariate samples.
//!
//! The estimator is the plug-in V-statistic
//!
//! ```text
//! 2/(n m) ΣΣ |Y_j - Z_k| - 1/n² ΣΣ |Y_j - Y_k| - 1/m² ΣΣ |Z_j - Z_k|
//! ```
//!
//! with diagonal terms included. Alongside it live the analytic values for
//! the normal/normal and Laplace/normal pairs, a Gaussian-measure variant and
//! a characteristic-function quadrature used to cross-check the estimator.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::numeric::NeumaierSum;

/// Rows handled by one task when the pairwise sums are split up. Fixed so the
/// reduction order never depends on the thread count.
const ROW_BLOCK: usize = 128;

/// A sample of `rows` observations in `dim` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
    rows: usize,
    dim: usize,
}

impl Sample {
    pub fn new(values: Vec<f64>, rows: usize, dim: usize) -> Result<Self> {
        if rows == 0 {
            return Err(Error::EmptySample);
        }
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if values.len() != rows * dim {
            return Err(invalid(
                "values",
                format!("expected {} entries, got {}", rows * dim, values.len()),
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { values, rows, dim })
    }

    /// One-dimensional sample from a slice of observations.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), values.len(), 1)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::EmptySample);
        };
        let dim = first.as_ref().len();
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(values, rows.len(), dim)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    /// Applies `f` to every entry, keeping the shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect(), self.rows, self.dim)
    }
}

/// Dimension-dependent constant of the energy weight `ds / (c_p |s|^{p+1})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyConstants {
    pub p: usize,
    pub c_p: f64,
}

impl EnergyConstants {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(invalid("p", "dimension must be positive"));
        }
        let half = (p as f64 + 1.0) / 2.0;
        Ok(Self {
            p,
            c_p: PI.powf(half) / gamma(half),
        })
    }
}

/// Total order on samples used to fix the evaluation order of a pair, which
/// makes every two-sample statistic here bit-for-bit symmetric.
fn canonical_cmp(a: &Sample, b: &Sample) -> Ordering {
    a.rows.cmp(&b.rows).then_with(|| {
        a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn check_pair(y: &Sample, z: &Sample) -> Result<()> {
    if y.dim != z.dim {
        return Err(Error::DimensionMismatch {
            left: y.dim,
            right: z.dim,
        });
    }
    Ok(())
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    match a.len() {
        1 => (a[0] - b[0]).abs(),
        2 => {
            let (d0, d1) = (a[0] - b[0], a[1] - b[1]);
            (d0 * d0 + d1 * d1).sqrt()
        }
        _ => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Sum of `kernel(a_j, b)` over `b`'s rows, using four lanes so the inner loop
/// pipelines while staying in a fixed order.
#[inline]
fn row_sum(a_row: &[f64], b: &Sample, kernel: &impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let mut lanes = [0.0f64; 4];
    let mut chunks = b.values.chunks_exact(4 * b.dim);
    for chunk in &mut chunks {
        for (lane, row) in lanes.iter_mut().zip(chunk.chunks_exact(b.dim)) {
            *lane += kernel(a_row, row);
        }
    }
    let mut tail = 0.0;
    for row in chunks.remainder().chunks_exact(b.dim) {
        tail += kernel(a_row, row);
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

/// `Σ_j Σ_k kernel(a_j, b_k)` in row-major order of `a`, blocked over rows of
/// `a` with a compensated reduction.
fn pair_sum(a: &Sample, b: &Sample, kernel: impl Fn(&[f64], &[f64]) -> f64 + Sync) -> f64 {
    let block_sum = |block: &[f64]| {
        let mut acc = NeumaierSum::default();
        for a_row in block.chunks_exact(a.dim) {
            acc.add(row_sum(a_row, b, &kernel));
        }
        acc.total()
    };
    let block_len = ROW_BLOCK * a.dim;
    let partials: Vec<f64> = if a.rows * b.rows >= 1 << 16 {
        a.values.par_chunks(block_len).map(block_sum).collect()
    } else {
        a.values.chunks(block_len).map(block_sum).collect()
    };
    partials.into_iter().collect::<NeumaierSum>().total()
}

/// Mean pairwise Euclidean distance of a sample with itself, diagonal
/// included. Cached per component when a whole dissimilarity matrix is built.
pub(crate) fn within_mean(a: &Sample) -> f64 {
    let n = a.rows as f64;
    pair_sum(a, a, euclidean) / (n * n)
}

/// Energy V-statistic from precomputed within-sample means. Bit-identical to
/// [`energy_distance_vstat`].
pub(crate) fn vstat_with_within(y: &Sample, wy: f64, z: &Sample, wz: f64) -> f64 {
    let ((a, wa), (b, wb)) = match canonical_cmp(y, z) {
        Ordering::Greater => ((z, wz), (y, wy)),
        _ => ((y, wy), (z, wz)),
    };
    let cross = pair_sum(a, b, euclidean) / (a.rows as f64 * b.rows as f64);
    (2.0 * cross - wa - wb).max(0.0)
}

/// Energy-distance V-statistic between `y` and `z`.
///
/// Unequal sample sizes are allowed. The value is nonnegative, exactly zero
/// for identical samples and exactly symmetric in its arguments.
pub fn energy_distance_vstat(y: &Sample, z: &Sample) -> Result<f64> {
    check_pair(y, z)?;
    Ok(vstat_with_within(y, within_mean(y), z, within_mean(z)))
}

/// V-statistic of the distance obtained by weighting the characteristic
/// function difference with a centred Gaussian measure of scale `sigma`.
/// Lies in `[0, 2]`.
pub fn energy_distance_gaussian_kernel(y: &Sample, z: &Sample, sigma: f64) -> Result<f64> {
    check_pair(y, z)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if y.dim != 1 {
        return Err(invalid("dim", "Gaussian-measure variant is univariate"));
    }
    let (a, b) = match canonical_cmp(y, z) {
        Ordering::Greater => (z, y),
        _ => (y, z),
    };
    let half_s2 = sigma * sigma / 2.0;
    let kernel = move |u: &[f64], v: &[f64]| {
        let d = u[0] - v[0];
        (-half_s2 * d * d).exp()
    };
    let (na, nb) = (a.rows as f64, b.rows as f64);
    let kaa = pair_sum(a, a, kernel) / (na * na);
    let kbb = pair_sum(b, b, kernel) / (nb * nb);
    let kab = pair_sum(a, b, kernel) / (na * nb);
    Ok((kaa + kbb - 2.0 * kab).clamp(0.0, 2.0))
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal parameters are valid")
}

/// Population energy distance between `σZ + θ` and `Z` for `Z ~ N(0,1)`.
pub fn closed_form_normal(sigma: f64, theta: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if !theta.is_finite() {
        return Err(invalid("theta", "must be finite"));
    }
    let scale = (sigma * sigma + 1.0).sqrt();
    let tau = (theta / scale).abs();
    let phi = standard_normal().cdf(tau);
    let mean_abs = tau * (2.0 * phi - 1.0) + (2.0 / PI).sqrt() * (-tau * tau / 2.0).exp();
    Ok(2.0 * scale * mean_abs - FRAC_2_SQRT_PI * (sigma + 1.0))
}

/// Population energy distance between a Laplace(0, λ) and a standard normal.
pub fn closed_form_laplace_vs_normal(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let upper_tail = 1.0 - standard_normal().cdf(1.0 / lambda);
    Ok(4.0 * lambda * upper_tail * (1.0 / (2.0 * lambda * lambda)).exp() - 1.5 * lambda
        + (SQRT_2 - 1.0) * FRAC_2_SQRT_PI)
}

/// Empirical characteristic function of a univariate sample on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCF {
    pub grid: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl EmpiricalCF {
    pub fn new(sample: &Sample, grid: &[f64]) -> Result<Self> {
        if sample.dim != 1 {
            return Err(invalid("dim", "empirical CF grid evaluation is univariate"));
        }
        let n = sample.rows as f64;
        let (re, im) = grid
            .iter()
            .map(|&s| {
                let (mut c, mut si) = (0.0, 0.0);
                for &x in &sample.values {
                    let (sn, cs) = (s * x).sin_cos();
                    c += cs;
                    si += sn;
                }
                (c / n, si / n)
            })
            .unzip();
        Ok(Self {
            grid: grid.to_vec(),
            re,
            im,
        })
    }

    pub fn modulus(&self, i: usize) -> f64 {
        self.re[i].hypot(self.im[i])
    }
}

/// Truncated integration range and mesh for [`energy_distance_quadrature_1d`].
///
/// `[lower, upper]` is cut into decades; each decade gets a uniform composite
/// Simpson rule with `intervals_per_panel` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    pub lower: f64,
    pub upper: f64,
    pub intervals_per_panel: usize,
}

impl Default for QuadratureGrid {
    /// `ε = 1e-6`; `S` puts at most `1e-6` of weight mass (times the bound 4
    /// on the integrand numerator) beyond the cut-off.
    fn default() -> Self {
        Self {
            lower: 1e-6,
            upper: 4.0 / (PI * 1e-6),
            intervals_per_panel: 16_384,
        }
    }
}

impl QuadratureGrid {
    fn validate(&self) -> Result<()> {
        if !(self.lower > 0.0 && self.lower.is_finite()) {
            return Err(invalid("lower", "must be positive and finite"));
        }
        if !(self.upper > self.lower && self.upper.is_finite()) {
            return Err(invalid("upper", "must be finite and exceed lower"));
        }
        if self.intervals_per_panel < 2 || !self.intervals_per_panel.is_multiple_of(2) {
            return Err(invalid("intervals_per_panel", "must be even and at least 2"));
        }
        Ok(())
    }

    fn panels(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut lo = self.lower;
        while lo < self.upper {
            let hi = (lo * 10.0).min(self.upper);
            out.push((lo, hi));
            lo = hi;
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.panels().len() * (self.intervals_per_panel + 1)
    }
}

/// Energy distance of two univariate samples obtained by integrating
/// `|φ̂_Y(s) - φ̂_Z(s)|² / (π s²)` numerically over `ε ≤ |s| ≤ S`.
///
/// Independent of the pairwise-distance route; used to check it.
pub fn energy_distance_quadrature_1d(y: &Sample, z: &Sample, grid: QuadratureGrid) -> Result<f64> {
    check_pair(y, z)?;
    if y.dim != 1 {
        return Err(invalid("dim", "quadrature oracle is univariate"));
    }
    grid.validate()?;

    // Signed weights turn the CF difference into a single sum Σ w_i e^{i s x_i}.
    let points: Vec<(f64, f64)> = y
        .values
        .iter()
        .map(|&x| (x, 1.0 / y.rows as f64))
        .chain(z.values.iter().map(|&x| (x, -1.0 / z.rows as f64)))
        .collect();

    let mut total = NeumaierSum::default();
    for (lo, hi) in grid.panels() {
        total.add(simpson_panel(&points, lo, hi, grid.intervals_per_panel));
    }
    // Integrand is even in s.
    Ok(2.0 * total.total())
}

fn simpson_panel(points: &[(f64, f64)], lo: f64, hi: f64, intervals: usize) -> f64 {
    let step = (hi - lo) / intervals as f64;
    // Current phasor w e^{i s x} and its per-step rotation e^{i step x}.
    let mut state: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, w)| {
            let (sn, cs) = (lo * x).sin_cos();
            (w * cs, w * sn)
        })
        .collect();
    let rotors: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, _)| {
            let (sn, cs) = (step * x).sin_cos();
            (cs, sn)
        })
        .collect();

    let mut acc = NeumaierSum::default();
    for k in 0..=intervals {
        let s = lo + step * k as f64;
        let (re, im) = state
            .iter()
            .fold((0.0, 0.0), |(r, i), &(c, sn)| (r + c, i + sn));
        let value = (re * re + im * im) / (PI * s * s);
        let weight = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.add(weight * value);
        if k < intervals {
            for (st, rot) in state.iter_mut().zip(&rotors) {
                *st = (st.0 * rot.0 - st.1 * rot.1, st.0 * rot.1 + st.1 * rot.0);
            }
        }
    }
    acc.total() * step / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn s(v: &[f64]) -> Sample {
        Sample::from_scalars(v).unwrap()
    }

    #[test]
    fn singleton_samples() {
        assert_eq!(energy_distance_vstat(&s(&[0.0]), &s(&[1.0])).unwrap(), 2.0);
    }

    #[test]
    fn two_point_samples() {
        let d = energy_distance_vstat(&s(&[0.0, 2.0]), &s(&[1.0, 3.0])).unwrap();
        assert_relative_eq!(d, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn identical_samples_are_exactly_zero() {
        let y = Sample::from_rows(&[[0.3, -1.2], [2.5, 0.1], [7.0, 3.3]]).unwrap();
        assert_eq!(energy_distance_vstat(&y, &y.clone()).unwrap(), 0.0);
    }

    #[test]
    fn unequal_sizes() {
        // cross: (1+3+1)/3 ; within y: 0 ; within z: 2*2/9
        let d = energy_distance_vstat(&s(&[1.0]), &s(&[0.0, 2.0, 1.0])).unwrap();
        let expected = 2.0 * (1.0 + 1.0 + 0.0) / 3.0 - 0.0 - (2.0 * (2.0 + 1.0 + 1.0)) / 9.0;
        assert_relative_eq!(d, expected, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            energy_distance_vstat(&s(&[1.0]), &Sample::from_rows(&[[1.0, 2.0]]).unwrap()),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        );
        assert_eq!(Sample::from_scalars(&[]), Err(Error::EmptySample));
        assert!(matches!(
            Sample::from_scalars(&[1.0, f64::NAN]),
            Err(Error::NonFinite { row: 1, col: 0 })
        ));
    }

    #[test]
    fn gaussian_kernel_examples() {
        let y = s(&[0.0]);
        let d = energy_distance_gaussian_kernel(&y, &s(&[1.0]), 1.0).unwrap();
        assert_relative_eq!(d, 2.0 - 2.0 * (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(d, 0.786_938_680_574_733, epsilon = 1e-12);
        assert_eq!(energy_distance_gaussian_kernel(&y, &s(&[0.0]), 1.0).unwrap(), 0.0);
        let t = 1.7;
        let d = energy_distance_gaussian_kernel(&y, &s(&[t]), 1.0).unwrap();
        assert_relative_eq!(d, 2.0 - 2.0 * (-t * t / 2.0).exp(), epsilon = 1e-15);
        assert!(energy_distance_gaussian_kernel(&y, &y, 0.0).is_err());
        assert!(energy_distance_gaussian_kernel(&y, &y, -1.0).is_err());
    }

    #[test]
    fn normal_closed_form() {
        assert!(closed_form_normal(1.0, 0.0).unwrap().abs() < 1e-15);
        let v = closed_form_normal(2.0, 0.0).unwrap();
        let by_hand = 2.0 * 5f64.sqrt() * (2.0 / PI).sqrt() - 6.0 / PI.sqrt();
        assert_relative_eq!(v, by_hand, epsilon = 1e-14);
        assert!((v - 0.18311).abs() < 5e-6);
        let far = closed_form_normal(1.0, 3.0).unwrap();
        assert!(far > 0.0 && far > closed_form_normal(1.0, 1.0).unwrap());
        assert!(closed_form_normal(0.0, 0.0).is_err());
    }

    #[test]
    fn laplace_closed_form() {
        let v = closed_form_laplace_vs_normal(1.0).unwrap();
        assert!(v > 0.0);
        // 2E|Y-Z| - E|Y-Y'| - E|Z-Z'| with E|Y-Z| integrated numerically.
        assert!((v - 0.013_703_121_970_71).abs() < 1e-9, "{v}");
        assert!(closed_form_laplace_vs_normal(-1.0).is_err());
    }

    #[test]
    fn constants() {
        assert_relative_eq!(EnergyConstants::new(1).unwrap().c_p, PI, epsilon = 1e-14);
        // c_2 = π^{3/2} / Γ(3/2) = 2π
        assert_relative_eq!(EnergyConstants::new(2).unwrap().c_p, 2.0 * PI, epsilon = 1e-13);
        assert!(EnergyConstants::new(0).is_err());
    }

    #[test]
    fn empirical_cf_bounds() {
        let cf = EmpiricalCF::new(&s(&[0.1, -2.0, 3.5, 0.7]), &[0.0, 0.5, 1.0, 10.0]).unwrap();
        assert_eq!((cf.re[0], cf.im[0]), (1.0, 0.0));
        for i in 0..cf.grid.len() {
            assert!(cf.modulus(i) <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn quadrature_two_point() {
        let d = energy_distance_quadrature_1d(&s(&[0.0, 2.0]), &s(&[1.0, 3.0]), QuadratureGrid::default())
            .unwrap();
        assert!((d - 1.0).abs() < 1e-3, "{d}");
    }

    #[test]
    fn quadrature_identity_and_errors() {
        let y = s(&[0.4, 1.0, -3.0]);
        assert!(energy_distance_quadrature_1d(&y, &y, QuadratureGrid::default()).unwrap() < 1e-20);
        let bad = QuadratureGrid {
            lower: 1.0,
            upper: 0.5,
            ..Default::default()
        };
        assert!(energy_distance_quadrature_1d(&y, &y, bad).is_err());
        let odd = QuadratureGrid {
            intervals_per_panel: 3,
            ..Default::default()
        };
        assert!(energy_distance_quadrature_1d(&y, &y, odd).is_err());
        assert!(QuadratureGrid::default().node_count() >= 200_000);
    }
}
