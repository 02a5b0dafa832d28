//! r^T tables: cell indexing, permutation orbits, marginals and symmetrization.
//!
//! Cells are stored row-major (first axis slowest, last axis fastest).
//! Category labels are 1-based in [`CellIndex`] and 0-based everywhere else.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating that a probability vector sums to one.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Axis count `t` and categories per axis `r` of an r^T lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub t: usize,
    pub r: usize,
}

impl Shape {
    pub fn new(r: usize, t: usize) -> Result<Self> {
        if r < 2 || t < 2 {
            return Err(Error::InvalidTable(format!(
                "need r >= 2 and T >= 2, got r={r}, T={t}"
            )));
        }
        r.checked_pow(t as u32)
            .ok_or_else(|| Error::InvalidTable(format!("r^T overflows for r={r}, T={t}")))?;
        Ok(Self { t, r })
    }

    /// Number of cells, r^T.
    pub fn cells(&self) -> usize {
        self.r.pow(self.t as u32)
    }

    /// 0-based coordinates of the cell at `index`.
    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.t];
        for slot in out.iter_mut().rev() {
            *slot = index % self.r;
            index /= self.r;
        }
        out
    }

    /// Row-major index of 0-based coordinates. Caller guarantees validity.
    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().fold(0, |acc, &c| acc * self.r + c)
    }
}

/// A cell of the lattice, with 1-based category labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex(Vec<usize>);

impl CellIndex {
    pub fn new(coords: Vec<usize>, r: usize) -> Result<Self> {
        for (axis, &value) in coords.iter().enumerate() {
            if value < 1 || value > r {
                return Err(Error::CoordinateOutOfRange {
                    axis: axis + 1,
                    value,
                    r,
                });
            }
        }
        Ok(Self(coords))
    }

    pub(crate) fn from_zero_based(coords: &[usize]) -> Self {
        Self(coords.iter().map(|c| c + 1).collect())
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn zero_based(&self) -> Vec<usize> {
        self.0.iter().map(|c| c - 1).collect()
    }
}

/// Row-major position of `cell` in an r^T table: `Σ_t (i_t − 1)·r^(T−t)`.
pub fn linear_index(cell: &CellIndex, r: usize, t: usize) -> Result<usize> {
    if cell.len() != t {
        return Err(Error::ShapeMismatch {
            expected: t,
            got: cell.len(),
        });
    }
    let checked = CellIndex::new(cell.0.clone(), r)?;
    Ok(checked.zero_based().iter().fold(0, |acc, &c| acc * r + c))
}

/// Inverse of [`linear_index`].
pub fn cell_at(index: usize, r: usize, t: usize) -> Result<CellIndex> {
    let shape = Shape::new(r, t)?;
    if index >= shape.cells() {
        return Err(Error::ShapeMismatch {
            expected: shape.cells(),
            got: index + 1,
        });
    }
    Ok(CellIndex::from_zero_based(&shape.coords(index)))
}

/// The set of distinct coordinate permutations of a cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orbit {
    /// Coordinates sorted ascending.
    pub representative: CellIndex,
    /// Distinct permutations of the representative, in lexicographic order.
    pub members: Vec<CellIndex>,
}

impl Orbit {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Lexicographic next permutation; false once the sequence is the last one.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    while next_permutation(&mut cur) {
        out.push(cur.clone());
    }
    out
}

/// All distinct permutations of `cell`; the representative is the sorted tuple.
pub fn orbit_of(cell: &CellIndex) -> Orbit {
    let mut sorted = cell.0.clone();
    sorted.sort_unstable();
    let members = distinct_permutations(&sorted)
        .into_iter()
        .map(CellIndex)
        .collect();
    Orbit {
        representative: CellIndex(sorted),
        members,
    }
}

/// Orbits of an r^T lattice, in lexicographic order of their representatives.
pub fn enumerate_orbits(r: usize, t: usize) -> Result<Vec<Orbit>> {
    let set = OrbitSet::shared(Shape::new(r, t)?);
    Ok(set
        .orbits()
        .iter()
        .map(|o| Orbit {
            representative: CellIndex::from_zero_based(&o.representative),
            members: o
                .members
                .iter()
                .map(|&i| CellIndex::from_zero_based(&set.shape.coords(i)))
                .collect(),
        })
        .collect())
}

/// Index-level view of one orbit.
#[derive(Debug, Clone)]
pub struct OrbitCells {
    /// 0-based sorted coordinates.
    pub representative: Vec<usize>,
    /// Row-major indices of the members, ascending. The first one is the representative.
    pub members: Vec<usize>,
}

/// Precomputed orbit partition of a lattice, shared read-only.
#[derive(Debug)]
pub struct OrbitSet {
    shape: Shape,
    orbits: Vec<OrbitCells>,
    cell_orbit: Vec<usize>,
}

impl OrbitSet {
    fn build(shape: Shape) -> Self {
        let mut by_rep: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut orbits: Vec<OrbitCells> = Vec::new();
        let mut cell_orbit = Vec::with_capacity(shape.cells());
        // Row-major traversal meets each orbit's sorted member first.
        for idx in 0..shape.cells() {
            let mut key = shape.coords(idx);
            key.sort_unstable();
            let id = *by_rep.entry(key.clone()).or_insert_with(|| {
                orbits.push(OrbitCells {
                    representative: key,
                    members: Vec::new(),
                });
                orbits.len() - 1
            });
            orbits[id].members.push(idx);
            cell_orbit.push(id);
        }
        Self {
            shape,
            orbits,
            cell_orbit,
        }
    }

    /// Cached orbit set for `shape`.
    pub fn shared(shape: Shape) -> Arc<OrbitSet> {
        static CACHE: OnceLock<Mutex<HashMap<Shape, Arc<OrbitSet>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(shape)
            .or_insert_with(|| Arc::new(OrbitSet::build(shape)))
            .clone()
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbits.is_empty()
    }

    pub fn orbits(&self) -> &[OrbitCells] {
        &self.orbits
    }

    /// Orbit id of the cell at row-major `index`.
    pub fn orbit_id(&self, index: usize) -> usize {
        self.cell_orbit[index]
    }

    pub fn orbit_size(&self, index: usize) -> usize {
        self.orbits[self.cell_orbit[index]].members.len()
    }

    /// Orbit totals `t_{ab…m}` of a cell vector.
    pub fn orbit_totals(&self, values: &[f64]) -> Vec<f64> {
        let mut totals = vec![0.0; self.orbits.len()];
        for (idx, v) in values.iter().enumerate() {
            totals[self.cell_orbit[idx]] += v;
        }
        totals
    }

    /// Orbit means broadcast back to every cell.
    pub fn symmetrize_slice(&self, values: &[f64]) -> Vec<f64> {
        let totals = self.orbit_totals(values);
        (0..values.len())
            .map(|idx| {
                let id = self.cell_orbit[idx];
                totals[id] / self.orbits[id].members.len() as f64
            })
            .collect()
    }
}

/// Ordered category scores `u_1 ≤ … ≤ u_r` with `u_1 < u_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.len() < 2 {
            return Err(Error::InvalidScores(format!(
                "need at least 2 scores, got {}",
                u.len()
            )));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidScores("scores must be finite".into()));
        }
        if u.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidScores("scores must be non-decreasing".into()));
        }
        if u[0] >= u[u.len() - 1] {
            return Err(Error::InvalidScores(
                "first score must be strictly below the last".into(),
            ));
        }
        Ok(Self(u))
    }

    /// Equal-interval scores `u_i = i`.
    pub fn equal_interval(r: usize) -> Self {
        Self((1..=r).map(|i| i as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ScoreVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ScoreVector> for Vec<f64> {
    fn from(s: ScoreVector) -> Self {
        s.0
    }
}

/// Observed counts over an r^T lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    shape: Shape,
    counts: Vec<u64>,
    n: u64,
}

impl Table {
    pub fn new(r: usize, t: usize, counts: Vec<u64>) -> Result<Self> {
        let shape = Shape::new(r, t)?;
        if counts.len() != shape.cells() {
            return Err(Error::ShapeMismatch {
                expected: shape.cells(),
                got: counts.len(),
            });
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::InvalidTable("total count must be at least 1".into()));
        }
        Ok(Self { shape, counts, n })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn r(&self) -> usize {
        self.shape.r
    }

    pub fn t(&self) -> usize {
        self.shape.t
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn orbits(&self) -> Arc<OrbitSet> {
        OrbitSet::shared(self.shape)
    }

    /// Sample proportions `n_i / n`.
    pub fn proportions(&self) -> ProbVector {
        let n = self.n as f64;
        ProbVector {
            shape: self.shape,
            probs: self.counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }

    pub fn counts_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

/// A probability distribution over an r^T lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector {
    shape: Shape,
    probs: Vec<f64>,
}

impl ProbVector {
    pub fn new(r: usize, t: usize, probs: Vec<f64>) -> Result<Self> {
        let shape = Shape::new(r, t)?;
        if probs.len() != shape.cells() {
            return Err(Error::ShapeMismatch {
                expected: shape.cells(),
                got: probs.len(),
            });
        }
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(Error::NegativeEntry { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidProbVector(format!(
                "entries sum to {sum}, not 1"
            )));
        }
        Ok(Self { shape, probs })
    }

    /// Normalizes nonnegative weights to a distribution.
    pub fn from_weights(r: usize, t: usize, weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidProbVector(format!("weights sum to {sum}")));
        }
        Self::new(r, t, weights.iter().map(|w| w / sum).collect())
    }

    pub fn uniform(r: usize, t: usize) -> Result<Self> {
        let shape = Shape::new(r, t)?;
        let n = shape.cells();
        Ok(Self {
            shape,
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.probs
    }

    pub fn get(&self, cell: &CellIndex) -> Result<f64> {
        Ok(self.probs[linear_index(cell, self.shape.r, self.shape.t)?])
    }

    pub fn orbits(&self) -> Arc<OrbitSet> {
        OrbitSet::shared(self.shape)
    }
}

/// Replaces every cell by its orbit mean.
pub fn symmetrize(p: &ProbVector) -> ProbVector {
    ProbVector {
        shape: p.shape,
        probs: p.orbits().symmetrize_slice(&p.probs),
    }
}

/// `p_i / Σ_{j ∈ A(i)} p_j`.
pub fn conditional_orbit_prob(p: &ProbVector, cell: &CellIndex) -> Result<f64> {
    let idx = linear_index(cell, p.shape.r, p.shape.t)?;
    let orbits = p.orbits();
    let total: f64 = orbits.orbits()[orbits.orbit_id(idx)]
        .members
        .iter()
        .map(|&j| p.probs[j])
        .sum();
    if total <= 0.0 {
        return Err(Error::UndefinedConditional {
            cell: cell.coords().to_vec(),
        });
    }
    Ok(p.probs[idx] / total)
}

fn check_axis(axis: usize, t: usize) -> Result<()> {
    if axis < 1 || axis > t {
        return Err(Error::AxisOutOfRange { axis, t });
    }
    Ok(())
}

/// Marginal sums along 1-based `axis` of any cell vector.
pub(crate) fn marginal_sums(shape: Shape, values: &[f64], axis: usize) -> Vec<f64> {
    let stride = shape.r.pow((shape.t - axis) as u32);
    let mut out = vec![0.0; shape.r];
    for (idx, v) in values.iter().enumerate() {
        out[(idx / stride) % shape.r] += v;
    }
    out
}

/// `Pr(X_axis = j)` for `j = 1..r`; `axis` is 1-based.
pub fn marginal_dist(p: &ProbVector, axis: usize) -> Result<Vec<f64>> {
    check_axis(axis, p.shape.t)?;
    Ok(marginal_sums(p.shape, &p.probs, axis))
}

/// `Σ_j u_j Pr(X_axis = j)`.
pub fn marginal_moment(p: &ProbVector, axis: usize, u: &ScoreVector) -> Result<f64> {
    if u.len() != p.shape.r {
        return Err(Error::InvalidScores(format!(
            "expected {} scores, got {}",
            p.shape.r,
            u.len()
        )));
    }
    Ok(marginal_dist(p, axis)?
        .iter()
        .zip(u.values())
        .map(|(m, s)| m * s)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cell(c: &[usize]) -> CellIndex {
        CellIndex(c.to_vec())
    }

    fn dysmenorrhea() -> Table {
        crate::datasets::dysmenorrhea().table
    }

    #[test]
    fn linear_index_examples() {
        assert_eq!(linear_index(&cell(&[1, 1, 1]), 3, 3).unwrap(), 0);
        assert_eq!(linear_index(&cell(&[3, 3, 3]), 3, 3).unwrap(), 26);
        // (1-1)*9 + (2-1)*3 + (3-1)
        assert_eq!(linear_index(&cell(&[1, 2, 3]), 3, 3).unwrap(), 5);
    }

    #[test]
    fn linear_index_rejects_bad_coordinates() {
        assert!(matches!(
            linear_index(&cell(&[1, 4, 1]), 3, 3),
            Err(Error::CoordinateOutOfRange {
                axis: 2,
                value: 4,
                ..
            })
        ));
        assert!(linear_index(&cell(&[0, 1, 1]), 3, 3).is_err());
        assert!(linear_index(&cell(&[1, 1]), 3, 3).is_err());
    }

    #[test]
    fn linear_index_round_trips() {
        for (r, t) in [(2usize, 2usize), (3, 3), (4, 3), (2, 5)] {
            let n = r.pow(t as u32);
            for idx in 0..n {
                let c = cell_at(idx, r, t).unwrap();
                assert_eq!(linear_index(&c, r, t).unwrap(), idx);
            }
        }
    }

    #[test]
    fn orbit_examples() {
        let o = orbit_of(&cell(&[1, 1, 1]));
        assert_eq!(o.size(), 1);
        assert_eq!(o.members, vec![cell(&[1, 1, 1])]);

        let o = orbit_of(&cell(&[2, 1, 2]));
        assert_eq!(o.representative, cell(&[1, 2, 2]));
        assert_eq!(
            o.members,
            vec![cell(&[1, 2, 2]), cell(&[2, 1, 2]), cell(&[2, 2, 1])]
        );

        assert_eq!(orbit_of(&cell(&[3, 1, 2])).size(), 6);
    }

    #[test]
    fn orbit_counts() {
        assert_eq!(enumerate_orbits(3, 3).unwrap().len(), 10);
        assert_eq!(enumerate_orbits(2, 2).unwrap().len(), 3);
        let two_three = enumerate_orbits(2, 3).unwrap();
        assert_eq!(two_three.len(), 4);
        let sizes: Vec<_> = two_three.iter().map(Orbit::size).collect();
        assert_eq!(sizes, vec![1, 3, 3, 1]);
    }

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn orbits_partition_the_lattice() {
        for r in 2..=5 {
            for t in 2..=5 {
                let orbits = enumerate_orbits(r, t).unwrap();
                assert_eq!(orbits.len(), binomial(r + t - 1, t));
                let total: usize = orbits.iter().map(Orbit::size).sum();
                assert_eq!(total, r.pow(t as u32));
                for o in &orbits {
                    for m in &o.members {
                        assert_eq!(orbit_of(m).representative, o.representative);
                    }
                }
            }
        }
    }

    #[test]
    fn symmetrize_two_by_two() {
        let p = ProbVector::new(2, 2, vec![0.1, 0.4, 0.2, 0.3]).unwrap();
        let s = symmetrize(&p);
        for (a, b) in s.probs().iter().zip([0.1, 0.3, 0.3, 0.3]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(symmetrize(&s), s);
        let u = ProbVector::uniform(3, 3).unwrap();
        assert_eq!(symmetrize(&u), u);
    }

    #[test]
    fn conditional_orbit_probabilities() {
        let p = ProbVector::new(2, 2, vec![0.1, 0.4, 0.2, 0.3]).unwrap();
        assert_abs_diff_eq!(
            conditional_orbit_prob(&p, &cell(&[1, 2])).unwrap(),
            0.4 / 0.6,
            epsilon = 1e-15
        );
        let u = ProbVector::uniform(3, 3).unwrap();
        assert_abs_diff_eq!(
            conditional_orbit_prob(&u, &cell(&[1, 2, 3])).unwrap(),
            1.0 / 6.0,
            epsilon = 1e-15
        );
        assert_eq!(conditional_orbit_prob(&u, &cell(&[1, 1, 1])).unwrap(), 1.0);

        let z = ProbVector::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(matches!(
            conditional_orbit_prob(&z, &cell(&[2, 1])),
            Err(Error::UndefinedConditional { .. })
        ));
    }

    #[test]
    fn marginals_of_dysmenorrhea() {
        let p = dysmenorrhea().proportions();
        let m = marginal_dist(&p, 1).unwrap();
        for (a, b) in m.iter().zip([64.0 / 86.0, 17.0 / 86.0, 5.0 / 86.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        let u = ScoreVector::equal_interval(3);
        assert_abs_diff_eq!(
            marginal_moment(&p, 1, &u).unwrap(),
            (64.0 + 2.0 * 17.0 + 3.0 * 5.0) / 86.0,
            epsilon = 1e-14
        );
        assert!(matches!(
            marginal_dist(&p, 4),
            Err(Error::AxisOutOfRange { axis: 4, t: 3 })
        ));
        assert!(marginal_dist(&p, 0).is_err());
    }

    #[test]
    fn uniform_marginals_and_moments() {
        let p = ProbVector::uniform(3, 3).unwrap();
        for axis in 1..=3 {
            for m in marginal_dist(&p, axis).unwrap() {
                assert_abs_diff_eq!(m, 1.0 / 3.0, epsilon = 1e-15);
            }
        }
        let u = ScoreVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(marginal_moment(&p, 2, &u).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn score_validation() {
        assert!(ScoreVector::new(vec![1.0, 1.0, 1.0]).is_err());
        assert!(ScoreVector::new(vec![1.0, 3.0, 2.0]).is_err());
        assert!(ScoreVector::new(vec![1.0, 1.0, 2.0]).is_ok());
    }

    #[test]
    fn table_validation() {
        assert!(Table::new(3, 3, vec![0; 27]).is_err());
        assert!(Table::new(3, 3, vec![1; 26]).is_err());
        assert!(Table::new(1, 3, vec![1]).is_err());
        assert_eq!(dysmenorrhea().n(), 86);
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(2, 2, vec![0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(ProbVector::new(2, 2, vec![0.5, 0.5, 0.1, 0.1]).is_err());
        assert!(ProbVector::new(2, 2, vec![0.25; 3]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dist(r: usize, t: usize) -> impl Strategy<Value = ProbVector> {
            let n = r.pow(t as u32);
            prop::collection::vec(0.0f64..1.0, n).prop_filter_map("zero mass", move |w| {
                ProbVector::from_weights(r, t, &w).ok()
            })
        }

        fn shaped() -> impl Strategy<Value = ProbVector> {
            (2usize..=4, 2usize..=4).prop_flat_map(|(r, t)| dist(r, t))
        }

        proptest! {
            #[test]
            fn symmetrize_idempotent_and_preserves_orbit_totals(p in shaped()) {
                let s = symmetrize(&p);
                let ss = symmetrize(&s);
                for (a, b) in s.probs().iter().zip(ss.probs()) {
                    prop_assert!((a - b).abs() < 1e-15);
                }
                let orbits = p.orbits();
                for (a, b) in orbits.orbit_totals(p.probs()).iter().zip(orbits.orbit_totals(s.probs())) {
                    prop_assert!((a - b).abs() < 1e-14);
                }
                prop_assert!((s.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn symmetrized_moments_agree_across_axes(p in shaped(), shift in -2.0f64..2.0) {
                let shape = p.shape();
                let u = ScoreVector::new((0..shape.r).map(|i| shift + (i * i) as f64).collect()).unwrap();
                let s = symmetrize(&p);
                let first = marginal_moment(&s, 1, &u).unwrap();
                for axis in 2..=shape.t {
                    prop_assert!((marginal_moment(&s, axis, &u).unwrap() - first).abs() < 1e-12);
                }
            }

            #[test]
            fn marginals_sum_to_one(p in shaped()) {
                for axis in 1..=p.shape().t {
                    let s: f64 = marginal_dist(&p, axis).unwrap().iter().sum();
                    prop_assert!((s - 1.0).abs() < 1e-12);
                }
            }
        }
    }
}
