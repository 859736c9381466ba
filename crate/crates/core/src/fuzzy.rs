//! Clustering through fuzzy equivalence relations.
//!
//! A dissimilarity matrix becomes a reflexive, symmetric fuzzy relation; its
//! max-min transitive closure is a fuzzy equivalence; cutting that at a level
//! `alpha` gives a crisp equivalence whose classes are the clusters.
//!
//! Max-min composition only ever selects existing entries, so the closure is
//! reached exactly and compared with `==`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{dissimilarity_matrix, CompositeMetric, DissimilarityMatrix, DistanceError};
use crate::features::FeatureVector;
use crate::matrix::SquareMatrix;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("relation dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("entry ({0}, {1}) outside [0, 1]")]
    OutOfRange(usize, usize),
    #[error("relation is not reflexive at {0}")]
    NotReflexive(usize),
    #[error("relation is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("relation is not transitive: ({i}, {k}) and ({k}, {j}) hold but ({i}, {j}) does not")]
    NotTransitive { i: usize, k: usize, j: usize },
    #[error("cut level {0} outside (0, 1]")]
    CutLevel(f64),
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

/// Reflexive, symmetric relation with entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRelation(SquareMatrix<f64>);

impl FuzzyRelation {
    pub fn new(m: SquareMatrix<f64>) -> Result<Self, ClusterError> {
        let n = m.n();
        for i in 0..n {
            if m[(i, i)] != 1.0 {
                return Err(ClusterError::NotReflexive(i));
            }
            for j in 0..n {
                let v = m[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(ClusterError::OutOfRange(i, j));
                }
                if libm::fabs(v - m[(j, i)]) > SYMMETRY_TOLERANCE {
                    return Err(ClusterError::NotSymmetric(i, j));
                }
            }
        }
        Ok(FuzzyRelation(m))
    }

    pub fn matrix(&self) -> &SquareMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }
}

/// A fuzzy relation that is also max-min transitive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyEquivalentRelation(SquareMatrix<f64>);

impl FuzzyEquivalentRelation {
    pub fn matrix(&self) -> &SquareMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    /// The relation as a plain fuzzy relation (it is reflexive and symmetric).
    pub fn as_relation(&self) -> FuzzyRelation {
        FuzzyRelation(self.0.clone())
    }
}

/// Boolean relation, typically an alpha-cut.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrispRelation(SquareMatrix<bool>);

impl CrispRelation {
    pub fn new(m: SquareMatrix<bool>) -> Self {
        CrispRelation(m)
    }

    pub fn matrix(&self) -> &SquareMatrix<bool> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }
}

/// Disjoint clusters covering `0..n`. Members are ascending and clusters are
/// ordered by their smallest member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub clusters: Vec<Vec<usize>>,
    pub cut_level: f64,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    /// Cluster index of every element.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = alloc::vec![usize::MAX; self.universe()];
        for (c, members) in self.clusters.iter().enumerate() {
            for &m in members {
                labels[m] = c;
            }
        }
        labels
    }

    /// True when every cluster of `self` lies inside one cluster of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let outer = coarser.labels();
        self.clusters
            .iter()
            .all(|c| c.iter().all(|&m| outer.get(m) == outer.get(c[0])))
    }

    fn canonical(mut clusters: Vec<Vec<usize>>, cut_level: f64) -> Self {
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.sort_unstable_by_key(|c| c[0]);
        Partition {
            clusters,
            cut_level,
        }
    }
}

/// `rho = 1 - d / d_max` off the diagonal, 1 on it. A matrix of zeros gives
/// the all-ones relation.
pub fn similarity_relation(d: &DissimilarityMatrix) -> FuzzyRelation {
    let max = d.max_off_diagonal();
    let n = d.n();
    let m = SquareMatrix::from_fn(n, |i, j| {
        if i == j || max == 0.0 {
            1.0
        } else {
            (1.0 - d.values[(i, j)] / max).clamp(0.0, 1.0)
        }
    });
    FuzzyRelation(m)
}

fn compose_row(r_row: &[f64], s: &SquareMatrix<f64>, out: &mut [f64]) {
    out.fill(0.0);
    for (k, &a) in r_row.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (o, &b) in out.iter_mut().zip(s.row(k)) {
            // branch-free so the loop vectorizes
            let m = if a < b { a } else { b };
            *o = if *o > m { *o } else { m };
        }
    }
}

/// `out[i][j] = max_k min(r[i][k], s[k][j])`.
pub fn maxmin_compose(
    r: &SquareMatrix<f64>,
    s: &SquareMatrix<f64>,
) -> Result<SquareMatrix<f64>, ClusterError> {
    let n = r.n();
    if s.n() != n {
        return Err(ClusterError::DimensionMismatch(n, s.n()));
    }
    let mut out = SquareMatrix::filled(n, 0.0);
    if n == 0 {
        return Ok(out);
    }
    #[cfg(feature = "rayon")]
    {
        use rayon::prelude::*;
        out.as_mut_slice()
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| compose_row(r.row(i), s, row));
    }
    #[cfg(not(feature = "rayon"))]
    for (i, row) in out.as_mut_slice().chunks_mut(n).enumerate() {
        compose_row(r.row(i), s, row);
    }
    Ok(out)
}

/// Max-min transitive closure by repeated squaring until `R o R = R`.
///
/// For a reflexive relation `R^2k >= R^k`, so squaring reaches the union of
/// all powers after at most `ceil(log2 n)` squarings.
pub fn transitive_closure(r: &FuzzyRelation) -> FuzzyEquivalentRelation {
    transitive_closure_counted(r).0
}

/// As [`transitive_closure`], also returning the number of compositions
/// performed (the last one confirms the fixpoint).
pub fn transitive_closure_counted(r: &FuzzyRelation) -> (FuzzyEquivalentRelation, usize) {
    let mut current = r.0.clone();
    let mut compositions = 0;
    loop {
        let next = maxmin_compose(&current, &current).expect("square by construction");
        compositions += 1;
        if next == current {
            return (FuzzyEquivalentRelation(current), compositions);
        }
        current = next;
    }
}

/// Distinct entries of the closure in ascending order: every cut level that
/// yields a different partition.
pub fn cut_levels(t: &FuzzyEquivalentRelation) -> Vec<f64> {
    let mut levels: Vec<f64> =
        t.0.as_slice()
            .iter()
            .copied()
            .filter(|v| *v > 0.0)
            .collect();
    levels.sort_unstable_by(f64::total_cmp);
    levels.dedup();
    levels
}

fn check_level(alpha: f64) -> Result<(), ClusterError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(ClusterError::CutLevel(alpha))
    }
}

/// `1` where `t[i][j] >= alpha`.
pub fn alpha_cut(t: &FuzzyEquivalentRelation, alpha: f64) -> Result<CrispRelation, ClusterError> {
    check_level(alpha)?;
    Ok(CrispRelation(t.0.map(|v| *v >= alpha)))
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins, keeping roots deterministic
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Groups elements whose rows in `cut` are identical.
pub fn clusters_by_identical_rows(cut: &CrispRelation) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<&[bool], Vec<usize>> = BTreeMap::new();
    for (i, row) in cut.0.rows().enumerate() {
        groups.entry(row).or_default().push(i);
    }
    Partition::canonical(groups.into_values().collect(), 0.0).clusters
}

/// Connected components of the graph whose edges are the `true` entries.
pub fn clusters_by_components(cut: &CrispRelation) -> Vec<Vec<usize>> {
    let n = cut.n();
    let mut set = DisjointSet::new(n);
    for i in 0..n {
        for (j, &linked) in cut.0.row(i).iter().enumerate() {
            if linked && j > i {
                set.union(i, j);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = set.find(i);
        groups.entry(root).or_default().push(i);
    }
    Partition::canonical(groups.into_values().collect(), 0.0).clusters
}

/// Checks that `cut` is an equivalence relation in `O(n^2)`: reflexive,
/// symmetric, and every row equal to its connected component. On failure
/// names a witness.
pub fn check_equivalence(cut: &CrispRelation) -> Result<(), ClusterError> {
    let m = &cut.0;
    let n = m.n();
    for i in 0..n {
        if !m[(i, i)] {
            return Err(ClusterError::NotReflexive(i));
        }
        for j in i + 1..n {
            if m[(i, j)] != m[(j, i)] {
                return Err(ClusterError::NotSymmetric(i, j));
            }
        }
    }
    for component in clusters_by_components(cut) {
        for &i in &component {
            let Some(&target) = component.iter().find(|&&j| !m[(i, j)]) else {
                continue;
            };
            // walk a path from i to target; the first hop leaving row i's
            // support gives the transitivity witness
            let path = path_between(m, i, target);
            let pos = path
                .iter()
                .position(|&p| !m[(i, p)])
                .expect("target is not related to i");
            return Err(ClusterError::NotTransitive {
                i,
                k: path[pos - 1],
                j: path[pos],
            });
        }
    }
    Ok(())
}

fn path_between(m: &SquareMatrix<bool>, from: usize, to: usize) -> Vec<usize> {
    let n = m.n();
    let mut prev = alloc::vec![usize::MAX; n];
    let mut queue = alloc::collections::VecDeque::from([from]);
    prev[from] = from;
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for (v, &linked) in m.row(u).iter().enumerate() {
            if linked && prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut path = alloc::vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

/// Equivalence classes of a crisp equivalence relation.
pub fn extract_clusters(cut: &CrispRelation, alpha: f64) -> Result<Partition, ClusterError> {
    check_level(alpha)?;
    check_equivalence(cut)?;
    let clusters = clusters_by_identical_rows(cut);
    debug_assert_eq!(clusters, clusters_by_components(cut));
    Ok(Partition::canonical(clusters, alpha))
}

/// Every intermediate of one domain's clustering chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainClustering {
    pub dissimilarity: DissimilarityMatrix,
    pub relation: FuzzyRelation,
    pub closure: FuzzyEquivalentRelation,
    pub cut: CrispRelation,
    pub partition: Partition,
}

/// distance -> similarity -> closure -> cut -> partition for one domain.
pub fn cluster_domain(
    features: &[FeatureVector],
    metric: &CompositeMetric,
    level: f64,
) -> Result<DomainClustering, ClusterError> {
    check_level(level)?;
    let dissimilarity = dissimilarity_matrix(features, metric)?;
    let relation = similarity_relation(&dissimilarity);
    let closure = transitive_closure(&relation);
    let cut = alpha_cut(&closure, level)?;
    let partition = extract_clusters(&cut, level)?;
    Ok(DomainClustering {
        dissimilarity,
        relation,
        closure,
        cut,
        partition,
    })
}

/// Customer-need clustering at `alpha` and functional-requirement clustering
/// at `beta`, over the same records.
pub fn cluster_both_domains(
    customer: (&[FeatureVector], &CompositeMetric),
    product: (&[FeatureVector], &CompositeMetric),
    alpha: f64,
    beta: f64,
) -> Result<(DomainClustering, DomainClustering), ClusterError> {
    check_level(alpha)?;
    check_level(beta)?;
    if customer.0.len() != product.0.len() {
        return Err(ClusterError::DimensionMismatch(
            customer.0.len(),
            product.0.len(),
        ));
    }
    Ok((
        cluster_domain(customer.0, customer.1, alpha)?,
        cluster_domain(product.0, product.1, beta)?,
    ))
}
