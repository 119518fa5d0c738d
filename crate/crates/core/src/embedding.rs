//! Lagged embeddings of component series and the energy dissimilarity
//! matrices built from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{vstat_with_within, within_mean, Sample};
use crate::error::{invalid, Error, Result};
use crate::numeric::{mean, sample_sd};

/// `d` component series of common length `n`, stored column by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesPanel {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl TimeSeriesPanel {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::MalformedPanel("no columns".into()));
        }
        if names.len() != columns.len() {
            return Err(Error::MalformedPanel(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::MalformedPanel("no observations".into()));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::MalformedPanel(format!(
                    "column `{name}` has length {}, expected {n}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::MalformedPanel(format!(
                    "non-finite value in column `{name}` at row {row}"
                )));
            }
        }
        let mut sorted: Vec<&String> = names.iter().collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::MalformedPanel(format!("duplicate name `{}`", w[0])));
        }
        Ok(Self { names, columns })
    }

    /// Panel with generated names `X1..Xd`.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let names = (1..=columns.len()).map(|i| format!("X{i}")).collect();
        Self::new(names, columns)
    }

    /// Number of time points.
    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of component series.
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Reorders the components; `order[i]` is the source index of new column `i`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        Self::new(
            order.iter().map(|&j| self.names[j].clone()).collect(),
            order.iter().map(|&j| self.columns[j].clone()).collect(),
        )
    }

    fn map_columns(&self, f: impl Fn(&str, &[f64]) -> Result<Vec<f64>>) -> Result<Self> {
        let columns = self
            .names
            .iter()
            .zip(&self.columns)
            .map(|(name, col)| f(name, col))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.names.clone(), columns)
    }
}

/// Symmetric `d × d` matrix of nonnegative dissimilarities with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl DissimilarityMatrix {
    /// Validates a row-major `size × size` matrix.
    pub fn new(size: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::MalformedMatrix(format!(
                "expected {} entries, got {}",
                size * size,
                entries.len()
            )));
        }
        for i in 0..size {
            if entries[i * size + i] != 0.0 {
                return Err(Error::MalformedMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in i + 1..size {
                let (a, b) = (entries[i * size + j], entries[j * size + i]);
                if !a.is_finite() || a < 0.0 {
                    return Err(Error::MalformedMatrix(format!("invalid entry {a} at ({i}, {j})")));
                }
                if a != b {
                    return Err(Error::MalformedMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { size, entries })
    }

    /// Builds the matrix from its strict upper triangle, evaluating the pairs
    /// in parallel.
    pub fn from_pairs<F>(size: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> Result<f64> + Sync,
    {
        let pairs: Vec<(usize, usize)> = (0..size)
            .flat_map(|j| (j + 1..size).map(move |k| (j, k)))
            .collect();
        let values = pairs
            .par_iter()
            .map(|&(j, k)| f(j, k))
            .collect::<Result<Vec<f64>>>()?;
        let mut entries = vec![0.0; size * size];
        for (&(j, k), v) in pairs.iter().zip(values) {
            entries[j * size + k] = v;
            entries[k * size + j] = v;
        }
        Self::new(size, entries)
    }

    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            entries: vec![0.0; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    /// Element-wise sum.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        if self.size != other.size {
            return Err(Error::DimensionMismatch {
                left: self.size,
                right: other.size,
            });
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Ok(Self {
            size: self.size,
            entries,
        })
    }
}

/// Lagged windows `(x_t, x_{t+1}, …, x_{t+h})` for `t = 1..n-h`.
pub fn lag_embed(series: &[f64], h: usize) -> Result<Sample> {
    if h >= series.len() {
        return Err(Error::LagTooLarge {
            lag: h,
            len: series.len(),
        });
    }
    let rows = series.len() - h;
    let values = series.windows(h + 1).flatten().copied().collect();
    Sample::new(values, rows, h + 1)
}

/// Pairs `(x_t, x_{t+ℓ})` for `t = 1..n-ℓ`.
pub fn pair_embed_bivariate(series: &[f64], ell: usize) -> Result<Sample> {
    if ell == 0 {
        return Err(invalid("ell", "pair lag must be positive"));
    }
    if ell >= series.len() {
        return Err(Error::LagTooLarge {
            lag: ell,
            len: series.len(),
        });
    }
    let values = series
        .iter()
        .zip(&series[ell..])
        .flat_map(|(&a, &b)| [a, b])
        .collect();
    Sample::new(values, series.len() - ell, 2)
}

fn require_components(panel: &TimeSeriesPanel) -> Result<()> {
    if panel.dim() < 2 {
        return Err(Error::MalformedPanel("need at least two components".into()));
    }
    Ok(())
}

fn energy_matrix(samples: Vec<Sample>) -> Result<DissimilarityMatrix> {
    let within: Vec<f64> = samples.par_iter().map(within_mean).collect();
    DissimilarityMatrix::from_pairs(samples.len(), |j, k| {
        Ok(vstat_with_within(&samples[j], within[j], &samples[k], within[k]))
    })
}

/// Energy dissimilarities between the `(h+1)`-dimensional lagged
/// distributions of every pair of components.
pub fn joint_dissimilarity_matrix(panel: &TimeSeriesPanel, h: usize) -> Result<DissimilarityMatrix> {
    require_components(panel)?;
    let samples = panel
        .columns()
        .iter()
        .map(|c| lag_embed(c, h))
        .collect::<Result<Vec<_>>>()?;
    energy_matrix(samples)
}

/// Sum over `ℓ = 0..=h` of the energy dissimilarities of the marginal
/// (`ℓ = 0`) and lag-`ℓ` bivariate distributions.
pub fn bivariate_sum_dissimilarity_matrix(
    panel: &TimeSeriesPanel,
    h: usize,
) -> Result<DissimilarityMatrix> {
    if h >= panel.len() {
        return Err(Error::LagTooLarge {
            lag: h,
            len: panel.len(),
        });
    }
    let mut total = joint_dissimilarity_matrix(panel, 0)?;
    for ell in 1..=h {
        let samples = panel
            .columns()
            .iter()
            .map(|c| pair_embed_bivariate(c, ell))
            .collect::<Result<Vec<_>>>()?;
        total = total.sum(&energy_matrix(samples)?)?;
    }
    Ok(total)
}

/// Rescales every component to sample mean 0 and sample standard deviation 1
/// (denominator `n - 1`).
pub fn normalize(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    if panel.len() < 2 {
        return Err(Error::MalformedPanel("normalization needs at least two observations".into()));
    }
    panel.map_columns(|name, col| {
        let m = mean(col);
        let sd = sample_sd(col);
        if !(sd > 0.0) {
            return Err(Error::ConstantColumn(name.to_string()));
        }
        Ok(col.iter().map(|x| (x - m) / sd).collect())
    })
}

/// Log growth rates `ln x_t - ln x_{t-1}`; the result is one row shorter.
pub fn log_growth(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    if panel.len() < 2 {
        return Err(Error::MalformedPanel("log growth needs at least two observations".into()));
    }
    panel.map_columns(|name, col| {
        if let Some(row) = col.iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositive {
                row,
                column: name.to_string(),
                value: col[row],
            });
        }
        Ok(col.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_distance_vstat;
    use std::f64::consts::E;

    fn rows(s: &Sample) -> Vec<Vec<f64>> {
        s.iter_rows().map(<[f64]>::to_vec).collect()
    }

    #[test]
    fn lag_embedding_rows() {
        let s = lag_embed(&[1.0, 2.0, 3.0, 4.0], 1).unwrap();
        assert_eq!(rows(&s), vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0]]);
        let s = lag_embed(&[1.0, 2.0, 3.0], 0).unwrap();
        assert_eq!(rows(&s), vec![vec![1.0], vec![2.0], vec![3.0]]);
        let s = lag_embed(&[1.0, 2.0, 3.0, 4.0, 5.0], 2).unwrap();
        assert_eq!(s.rows(), 3);
        assert_eq!(s.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(lag_embed(&[1.0, 2.0], 2), Err(Error::LagTooLarge { lag: 2, len: 2 }));
    }

    #[test]
    fn bivariate_pairs() {
        let s = pair_embed_bivariate(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(rows(&s), vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
        let s = pair_embed_bivariate(&[1.0, 2.0, 3.0], 1).unwrap();
        assert_eq!(rows(&s), vec![vec![1.0, 2.0], vec![2.0, 3.0]]);
        assert_eq!(pair_embed_bivariate(&[1.0, 2.0, 3.0], 2).unwrap().rows(), 1);
        assert!(pair_embed_bivariate(&[1.0, 2.0, 3.0], 3).is_err());
    }

    fn panel() -> TimeSeriesPanel {
        TimeSeriesPanel::from_columns(vec![
            vec![0.1, 1.5, -0.3, 2.2, 0.9, -1.1],
            vec![0.1, 1.5, -0.3, 2.2, 0.9, -1.1],
            vec![3.0, -2.0, 0.5, 0.4, 1.0, 2.5],
        ])
        .unwrap()
    }

    #[test]
    fn identical_columns_give_zero() {
        for h in 0..3 {
            let d = joint_dissimilarity_matrix(&panel(), h).unwrap();
            assert_eq!(d.get(0, 1), 0.0);
            assert!(d.get(0, 2) > 0.0);
            let d = bivariate_sum_dissimilarity_matrix(&panel(), h).unwrap();
            assert_eq!(d.get(0, 1), 0.0);
        }
    }

    #[test]
    fn lag_zero_reduces_to_raw_columns() {
        let p = panel();
        let d = joint_dissimilarity_matrix(&p, 0).unwrap();
        let direct = energy_distance_vstat(
            &Sample::from_scalars(p.column(0)).unwrap(),
            &Sample::from_scalars(p.column(2)).unwrap(),
        )
        .unwrap();
        assert_eq!(d.get(0, 2), direct);
        assert_eq!(bivariate_sum_dissimilarity_matrix(&p, 0).unwrap(), d);
    }

    #[test]
    fn bivariate_sum_dominates_terms() {
        let p = panel();
        let total = bivariate_sum_dissimilarity_matrix(&p, 2).unwrap();
        let d0 = joint_dissimilarity_matrix(&p, 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(total.get(i, j) >= d0.get(i, j));
            }
        }
    }

    #[test]
    fn matrix_validation() {
        assert!(DissimilarityMatrix::new(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(DissimilarityMatrix::new(2, vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(DissimilarityMatrix::new(2, vec![0.0, -1.0, -1.0, 0.0]).is_err());
        assert!(DissimilarityMatrix::new(2, vec![0.0, 1.0, 1.0]).is_err());
        assert!(DissimilarityMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
    }

    #[test]
    fn normalization() {
        let p = TimeSeriesPanel::from_columns(vec![vec![1.0, 2.0, 3.0], vec![5.0, -1.0, 2.0]]).unwrap();
        let q = normalize(&p).unwrap();
        for col in q.columns() {
            assert!(mean(col).abs() <= 1e-12);
            assert!((sample_sd(col) - 1.0).abs() <= 1e-12);
        }
        assert_eq!(q.column(0), &[-1.0, 0.0, 1.0]);
        let again = normalize(&q).unwrap();
        for (a, b) in again.columns().iter().flatten().zip(q.columns().iter().flatten()) {
            assert!((a - b).abs() <= 1e-12);
        }
        let flat = TimeSeriesPanel::from_columns(vec![vec![2.0; 4], vec![1.0, 2.0, 3.0, 4.0]]).unwrap();
        assert_eq!(normalize(&flat), Err(Error::ConstantColumn("X1".into())));
    }

    #[test]
    fn growth_rates() {
        let p = TimeSeriesPanel::from_columns(vec![vec![1.0, E, E * E], vec![3.0, 3.0, 3.0]]).unwrap();
        let g = log_growth(&p).unwrap();
        assert_eq!(g.len(), 2);
        for v in g.column(0) {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert_eq!(g.column(1), &[0.0, 0.0]);
        let p = TimeSeriesPanel::from_columns(vec![vec![100.0, 110.0]]).unwrap();
        let g = log_growth(&p).unwrap();
        assert!((g.column(0)[0] - 1.1f64.ln()).abs() < 1e-15);
        assert!((g.column(0)[0] - 0.09531).abs() < 1e-5);
        let bad = TimeSeriesPanel::from_columns(vec![vec![1.0, 0.0, 2.0]]).unwrap();
        assert!(matches!(log_growth(&bad), Err(Error::NonPositive { row: 1, .. })));
    }

    #[test]
    fn panel_validation() {
        assert!(TimeSeriesPanel::new(vec!["a".into(), "a".into()], vec![vec![1.0], vec![2.0]]).is_err());
        assert!(TimeSeriesPanel::from_columns(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(TimeSeriesPanel::from_columns(vec![vec![1.0, f64::NAN]]).is_err());
        let single = TimeSeriesPanel::from_columns(vec![vec![1.0, 2.0]]).unwrap();
        assert!(joint_dissimilarity_matrix(&single, 0).is_err());
    }
}
