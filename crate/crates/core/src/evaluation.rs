//! MAP classification and partition agreement (Rand / adjusted Rand).

use std::collections::HashMap;

use crate::error::{CwmError, Result};
use crate::model::Responsibilities;
use crate::scalar::Scalar;

/// Cluster ids for `n` observations. Ids are arbitrary integers; only the
/// induced grouping matters.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition(pub Vec<usize>);

impl Partition {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn slice_from(&self, start: usize) -> Partition {
        Partition(self.0[start..].to_vec())
    }
}

impl From<Vec<usize>> for Partition {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// Per-row argmax (1-based), ties to the lowest component.
pub fn map_assign<T: Scalar>(resp: &Responsibilities<T>) -> Partition {
    Partition((0..resp.n()).map(|i| resp.map_label(i)).collect())
}

/// Cross-tabulation of two partitions.
#[derive(Debug, Clone)]
pub struct Contingency {
    pub n: usize,
    pub cells: HashMap<(usize, usize), usize>,
    pub row_sums: HashMap<usize, usize>,
    pub col_sums: HashMap<usize, usize>,
}

impl Contingency {
    pub fn new(a: &Partition, b: &Partition) -> Result<Self> {
        if a.len() != b.len() {
            return Err(CwmError::LengthMismatch(a.len(), b.len()));
        }
        let mut cells = HashMap::new();
        let mut row_sums = HashMap::new();
        let mut col_sums = HashMap::new();
        for (&i, &j) in a.0.iter().zip(&b.0) {
            *cells.entry((i, j)).or_insert(0) += 1;
            *row_sums.entry(i).or_insert(0) += 1;
            *col_sums.entry(j).or_insert(0) += 1;
        }
        Ok(Self {
            n: a.len(),
            cells,
            row_sums,
            col_sums,
        })
    }

    fn pair_sums(&self) -> (f64, f64, f64) {
        fn s<K>(m: &HashMap<K, usize>) -> f64 {
            m.values().map(|&c| choose2(c)).sum()
        }
        (s(&self.cells), s(&self.row_sums), s(&self.col_sums))
    }
}

#[inline]
fn choose2(c: usize) -> f64 {
    (c as f64) * (c as f64 - 1.0) / 2.0
}

/// Fraction of the `C(n, 2)` pairs on which the two partitions agree.
pub fn rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    if t.n < 2 {
        return Err(CwmError::TooFewPoints(t.n));
    }
    let (same_both, same_a, same_b) = t.pair_sums();
    let total = choose2(t.n);
    // agreements = pairs together in both + pairs apart in both
    Ok((total + 2.0 * same_both - same_a - same_b) / total)
}

/// Hubert–Arabie adjusted Rand index.
///
/// When the chance-expected index equals its maximum (e.g. both partitions
/// put everything in one cluster) the ratio is undefined; the result is then
/// 1 for partitions that coincide up to renaming and 0 otherwise.
pub fn adjusted_rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    let t = Contingency::new(a, b)?;
    if t.n < 2 {
        return Err(CwmError::TooFewPoints(t.n));
    }
    let (index, sum_a, sum_b) = t.pair_sums();
    let expected = sum_a * sum_b / choose2(t.n);
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(if same_grouping(&t) { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

fn same_grouping(t: &Contingency) -> bool {
    t.cells.len() == t.row_sums.len() && t.cells.len() == t.col_sums.len()
}

/// ARI restricted to observations `m..n`, i.e. the unlabeled rows when
/// labeled rows are stored first.
pub fn ari_unlabeled_subset(a: &Partition, b: &Partition, m: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(CwmError::LengthMismatch(a.len(), b.len()));
    }
    if m + 2 > a.len() {
        return Err(CwmError::TooFewPoints(a.len().saturating_sub(m)));
    }
    adjusted_rand_index(&a.slice_from(m), &b.slice_from(m))
}
