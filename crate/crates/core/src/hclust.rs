//! Agglomerative clustering with the generalized Ward Lance–Williams update,
//! dendrogram cutting and silhouette-based choice of the cluster count.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::DissimilarityMatrix;
use crate::error::{invalid, Error, Result};

/// One agglomeration step. Leaves are ids `0..d`; the cluster formed by merge
/// `i` gets id `d + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    leaves: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Checks that `merges` describe a full binary tree over `leaves` leaves.
    pub fn new(leaves: usize, merges: Vec<Merge>) -> Result<Self> {
        if leaves < 2 || merges.len() != leaves - 1 {
            return Err(invalid(
                "merges",
                format!("{} merges for {leaves} leaves", merges.len()),
            ));
        }
        let mut sizes = vec![1usize; leaves];
        let mut used = vec![false; 2 * leaves - 1];
        for (i, m) in merges.iter().enumerate() {
            let next = leaves + i;
            for id in [m.left, m.right] {
                if id >= next || used[id] {
                    return Err(invalid("merges", format!("bad cluster id {id} in merge {i}")));
                }
                used[id] = true;
            }
            if m.size != sizes[m.left] + sizes[m.right] {
                return Err(invalid("merges", format!("wrong size in merge {i}")));
            }
            if !(m.height >= 0.0) {
                return Err(invalid("merges", format!("negative height in merge {i}")));
            }
            sizes.push(m.size);
        }
        Ok(Self { leaves, merges })
    }

    pub fn leaves(&self) -> usize {
        self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Newick text with merge-height differences as branch lengths.
    pub fn to_newick(&self, names: &[String]) -> Result<String> {
        if names.len() != self.leaves {
            return Err(invalid("names", format!("{} names for {} leaves", names.len(), self.leaves)));
        }
        let root = 2 * self.leaves - 2;
        let mut out = String::new();
        self.write_newick(root, names, &mut out);
        out.push(';');
        Ok(out)
    }

    fn height(&self, id: usize) -> f64 {
        if id < self.leaves {
            0.0
        } else {
            self.merges[id - self.leaves].height
        }
    }

    fn write_newick(&self, id: usize, names: &[String], out: &mut String) {
        if id < self.leaves {
            out.push_str(&newick_label(&names[id]));
            return;
        }
        let m = self.merges[id - self.leaves];
        out.push('(');
        for (i, child) in [m.left, m.right].into_iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            self.write_newick(child, names, out);
            let _ = write!(out, ":{}", m.height - self.height(child));
        }
        out.push(')');
    }
}

fn newick_label(name: &str) -> String {
    if name.chars().any(|c| "()[]':;, \t".contains(c)) {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_string()
    }
}

/// Stepwise generalized Ward agglomeration.
///
/// Clusters live in slots; merging slots `j < k` stores the union in slot `j`,
/// so a slot index is always the smallest leaf it contains. Ties on the
/// minimal dissimilarity go to the lexicographically smallest slot pair.
#[derive(Debug, Clone)]
pub struct WardAgglomerator {
    dist: Vec<f64>,
    d: usize,
    active: Vec<bool>,
    sizes: Vec<usize>,
    ids: Vec<usize>,
    members: Vec<Vec<usize>>,
    merges: Vec<Merge>,
}

impl WardAgglomerator {
    pub fn new(d: &DissimilarityMatrix) -> Result<Self> {
        let n = d.size();
        if n < 2 {
            return Err(Error::MalformedMatrix("need at least two items".into()));
        }
        Ok(Self {
            dist: d.as_slice().to_vec(),
            d: n,
            active: vec![true; n],
            sizes: vec![1; n],
            ids: (0..n).collect(),
            members: (0..n).map(|i| vec![i]).collect(),
            merges: Vec::with_capacity(n - 1),
        })
    }

    pub fn is_done(&self) -> bool {
        self.merges.len() + 1 == self.d
    }

    /// Active clusters as `(slot, leaf members)`.
    pub fn clusters(&self) -> impl Iterator<Item = (usize, &[usize])> {
        (0..self.d)
            .filter(|&s| self.active[s])
            .map(|s| (s, self.members[s].as_slice()))
    }

    /// Current dissimilarity between the clusters in two active slots.
    pub fn dissimilarity(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.d + b]
    }

    /// Performs one merge and returns it, or `None` once a single cluster is left.
    pub fn step(&mut self) -> Option<Merge> {
        if self.is_done() {
            return None;
        }
        let n = self.d;
        let mut best: Option<(usize, usize, f64)> = None;
        for j in (0..n).filter(|&j| self.active[j]) {
            for k in (j + 1..n).filter(|&k| self.active[k]) {
                let v = self.dist[j * n + k];
                if best.is_none_or(|(_, _, b)| v < b) {
                    best = Some((j, k, v));
                }
            }
        }
        let (j, k, djk) = best?;
        let (nj, nk) = (self.sizes[j] as f64, self.sizes[k] as f64);
        for l in (0..n).filter(|&l| self.active[l] && l != j && l != k) {
            let nl = self.sizes[l] as f64;
            let total = nj + nk + nl;
            let updated = (nj + nl) / total * self.dist[j * n + l]
                + (nk + nl) / total * self.dist[k * n + l]
                - nl / total * djk;
            self.dist[j * n + l] = updated;
            self.dist[l * n + j] = updated;
        }
        let merge = Merge {
            left: self.ids[j],
            right: self.ids[k],
            height: djk,
            size: self.sizes[j] + self.sizes[k],
        };
        self.active[k] = false;
        self.sizes[j] = merge.size;
        self.ids[j] = n + self.merges.len();
        let moved = std::mem::take(&mut self.members[k]);
        self.members[j].extend(moved);
        self.members[j].sort_unstable();
        self.merges.push(merge);
        Some(merge)
    }

    pub fn finish(mut self) -> Dendrogram {
        while self.step().is_some() {}
        Dendrogram {
            leaves: self.d,
            merges: self.merges,
        }
    }
}

/// Full generalized Ward agglomeration of `d`.
pub fn agglomerate(d: &DissimilarityMatrix) -> Result<Dendrogram> {
    Ok(WardAgglomerator::new(d)?.finish())
}

/// Hard assignment of `d` items to clusters `0..k`. Labels are numbered in
/// order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Accepts any labelling and renumbers it by first appearance.
    pub fn from_labels<T: Eq + Clone>(labels: &[T]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::PartitionMismatch("empty partition".into()));
        }
        let mut seen: Vec<T> = Vec::new();
        let labels = labels
            .iter()
            .map(|l| match seen.iter().position(|s| s == l) {
                Some(i) => i,
                None => {
                    seen.push(l.clone());
                    seen.len() - 1
                }
            })
            .collect();
        Ok(Self {
            labels,
            k: seen.len(),
        })
    }

    /// Partition from explicit groups of item indices covering `0..d` exactly once.
    pub fn from_groups(groups: &[Vec<usize>]) -> Result<Self> {
        let d: usize = groups.iter().map(Vec::len).sum();
        let mut labels = vec![usize::MAX; d];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::PartitionMismatch(format!("group {g} is empty")));
            }
            for &i in members {
                if i >= d || labels[i] != usize::MAX {
                    return Err(Error::PartitionMismatch(format!("item {i} misplaced")));
                }
                labels[i] = g;
            }
        }
        Self::from_labels(&labels)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.k
    }

    /// Members of each cluster, in label order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Cuts the dendrogram into `k` clusters by undoing its last `k - 1` merges.
pub fn cut(dend: &Dendrogram, k: usize) -> Result<Partition> {
    let d = dend.leaves;
    if k == 0 || k > d {
        return Err(invalid("k", format!("must be in 1..={d}, got {k}")));
    }
    let mut parent: Vec<usize> = (0..2 * d - 1).collect();
    for (i, m) in dend.merges[..d - k].iter().enumerate() {
        let node = d + i;
        let (a, b) = (find(&mut parent, m.left), find(&mut parent, m.right));
        parent[a] = node;
        parent[b] = node;
    }
    let roots: Vec<usize> = (0..d).map(|i| find(&mut parent, i)).collect();
    Partition::from_labels(&roots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    pub k: usize,
    pub values: Vec<f64>,
    pub average: f64,
}

/// Silhouette widths of `part` under dissimilarities `d`. Members of
/// singleton clusters score 0.
pub fn silhouette(d: &DissimilarityMatrix, part: &Partition) -> Result<SilhouetteReport> {
    let n = d.size();
    if part.len() != n {
        return Err(Error::PartitionMismatch(format!(
            "partition covers {} items, matrix has {n}",
            part.len()
        )));
    }
    let k = part.num_clusters();
    if k < 2 {
        return Err(invalid("k", "silhouette needs at least two clusters"));
    }
    let labels = part.labels();
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let own = labels[i];
            if counts[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, &l) in labels.iter().enumerate() {
                if j != i {
                    sums[l] += d.get(i, j);
                }
            }
            let a = sums[own] / (counts[own] - 1) as f64;
            let b = (0..k)
                .filter(|&l| l != own)
                .map(|l| sums[l] / counts[l] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    let average = values.iter().sum::<f64>() / n as f64;
    Ok(SilhouetteReport { k, values, average })
}

/// Default upper bound for the silhouette search.
pub fn default_k_max(d: usize) -> usize {
    d.saturating_sub(1).min(10)
}

/// Picks the cluster count in `2..=k_max` with the largest average silhouette
/// width; ties go to the smaller count.
pub fn select_k(
    dend: &Dendrogram,
    d: &DissimilarityMatrix,
    k_max: usize,
) -> Result<(usize, Vec<SilhouetteReport>)> {
    if dend.leaves != d.size() {
        return Err(Error::PartitionMismatch("dendrogram and matrix sizes differ".into()));
    }
    if k_max < 2 || k_max + 1 > d.size() {
        return Err(invalid(
            "k_max",
            format!("must be in 2..={}, got {k_max}", d.size().saturating_sub(1)),
        ));
    }
    let reports = (2..=k_max)
        .into_par_iter()
        .map(|k| silhouette(d, &cut(dend, k)?))
        .collect::<Result<Vec<_>>>()?;
    let best = reports
        .iter()
        .fold(&reports[0], |best, r| if r.average > best.average { r } else { best });
    Ok((best.k, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(size: usize, upper: &[f64]) -> DissimilarityMatrix {
        let mut it = upper.iter();
        let mut e = vec![0.0; size * size];
        for i in 0..size {
            for j in i + 1..size {
                let v = *it.next().unwrap();
                e[i * size + j] = v;
                e[j * size + i] = v;
            }
        }
        DissimilarityMatrix::new(size, e).unwrap()
    }

    #[test]
    fn three_point_update() {
        let d = matrix(3, &[1.0, 4.0, 5.0]);
        let mut agg = WardAgglomerator::new(&d).unwrap();
        let m = agg.step().unwrap();
        assert_eq!((m.left, m.right, m.height, m.size), (0, 1, 1.0, 2));
        assert!((agg.dissimilarity(0, 2) - 17.0 / 3.0).abs() < 1e-15);
        let dend = agg.finish();
        assert_eq!(dend.merges()[1].left, 3);
        assert_eq!(dend.merges()[1].right, 2);
        assert_eq!(cut(&dend, 2).unwrap().clusters(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn zero_matrix_merges_at_zero() {
        let dend = agglomerate(&DissimilarityMatrix::zeros(5)).unwrap();
        assert!(dend.merges().iter().all(|m| m.height == 0.0));
        // ties resolve to the smallest slot pair
        assert_eq!((dend.merges()[0].left, dend.merges()[0].right), (0, 1));
    }

    #[test]
    fn cut_extremes() {
        let d = matrix(4, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let dend = agglomerate(&d).unwrap();
        assert_eq!(cut(&dend, 4).unwrap().num_clusters(), 4);
        assert_eq!(cut(&dend, 1).unwrap().clusters(), vec![vec![0, 1, 2, 3]]);
        assert!(cut(&dend, 0).is_err());
        assert!(cut(&dend, 5).is_err());
    }

    #[test]
    fn silhouette_two_blocks() {
        let d = matrix(4, &[0.1, 10.0, 10.0, 10.0, 10.0, 0.1]);
        let part = Partition::from_labels(&[0, 0, 1, 1]).unwrap();
        let s = silhouette(&d, &part).unwrap();
        for v in &s.values {
            assert!((v - 0.99).abs() < 1e-15);
        }
        let dend = agglomerate(&d).unwrap();
        assert_eq!(select_k(&dend, &d, 3).unwrap().0, 2);
    }

    #[test]
    fn silhouette_degenerate_cases() {
        let d = matrix(4, &[1.0; 6]);
        let s = silhouette(&d, &Partition::from_labels(&[0, 0, 1, 1]).unwrap()).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        let d = matrix(3, &[1.0, 4.0, 5.0]);
        let s = silhouette(&d, &Partition::from_labels(&[0, 0, 1]).unwrap()).unwrap();
        assert_eq!(s.values[2], 0.0);
        assert!(silhouette(&d, &Partition::from_labels(&[0, 0, 0]).unwrap()).is_err());
        assert!(silhouette(&d, &Partition::from_labels(&[0, 1]).unwrap()).is_err());
    }

    #[test]
    fn select_k_range() {
        let d = matrix(3, &[1.0, 4.0, 5.0]);
        let dend = agglomerate(&d).unwrap();
        assert!(select_k(&dend, &d, 1).is_err());
        assert!(select_k(&dend, &d, 3).is_err());
        assert_eq!(default_k_max(3), 2);
        assert_eq!(default_k_max(40), 10);
    }

    #[test]
    fn newick_output() {
        let d = matrix(3, &[1.0, 4.0, 5.0]);
        let dend = agglomerate(&d).unwrap();
        let names = vec!["a".to_string(), "b".into(), "c d".into()];
        let nwk = dend.to_newick(&names).unwrap();
        let h = 17.0f64 / 3.0;
        assert_eq!(nwk, format!("((a:1,b:1):{},'c d':{});", h - 1.0, h));
    }

    #[test]
    fn dendrogram_validation() {
        let ok = Merge { left: 0, right: 1, height: 1.0, size: 2 };
        assert!(Dendrogram::new(2, vec![ok]).is_ok());
        assert!(Dendrogram::new(2, vec![Merge { size: 3, ..ok }]).is_err());
        assert!(Dendrogram::new(3, vec![ok, Merge { left: 0, right: 2, height: 2.0, size: 2 }]).is_err());
    }

    #[test]
    fn partition_from_groups() {
        let p = Partition::from_groups(&[vec![2, 3], vec![0, 1]]).unwrap();
        assert_eq!(p.labels(), &[0, 0, 1, 1]);
        assert!(Partition::from_groups(&[vec![0, 0]]).is_err());
    }
}
