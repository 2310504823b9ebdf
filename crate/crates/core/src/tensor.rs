//! Exact sparse 3-tensors.
//!
//! A [`Tensor`] is a trilinear form over three labeled variable lists. Entries
//! are keyed by the index triple `[i, j, k]` and hold nonzero rational
//! coefficients; arithmetic that produces a zero coefficient removes the entry.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Coeff = BigRational;
pub type Index = [usize; 3];

/// Largest power materialized by [`Tensor::power`] unless the caller raises it.
pub const DEFAULT_POWER_CAP: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i % 3]
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s {
            "x" | "X" => Some(Axis::X),
            "y" | "Y" => Some(Axis::Y),
            "z" | "Z" => Some(Axis::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Equal,
    AtLeast,
}

/// An externally known fact about a tensor (for instance its asymptotic rank)
/// that is carried along as an input and never computed here.
#[derive(Clone, Debug, PartialEq)]
pub struct AssertedFact {
    pub quantity: String,
    pub relation: Relation,
    pub value: f64,
    pub citation: String,
}

impl AssertedFact {
    pub fn asymptotic_rank(relation: Relation, value: f64, citation: impl Into<String>) -> Self {
        AssertedFact {
            quantity: "R~".to_string(),
            relation,
            value,
            citation: citation.into(),
        }
    }

    pub fn summary(&self) -> String {
        let rel = match self.relation {
            Relation::Equal => "=",
            Relation::AtLeast => ">=",
        };
        format!("{} {} {} [{}]", self.quantity, rel, self.value, self.citation)
    }
}

pub fn int(n: i64) -> Coeff {
    BigRational::from_integer(BigInt::from(n))
}

pub(crate) fn one() -> Coeff {
    BigRational::one()
}

#[derive(Clone, Debug)]
pub struct Tensor {
    labels: [Vec<String>; 3],
    entries: BTreeMap<Index, Coeff>,
    facts: Vec<AssertedFact>,
}

impl PartialEq for Tensor {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.entries == other.entries
    }
}

impl Tensor {
    /// Builds a tensor from labeled axes and a list of entries. Repeated index
    /// triples are summed and zero coefficients dropped.
    pub fn new(
        x_labels: Vec<String>,
        y_labels: Vec<String>,
        z_labels: Vec<String>,
        entries: impl IntoIterator<Item = (Index, Coeff)>,
    ) -> Result<Tensor> {
        let labels = [x_labels, y_labels, z_labels];
        for (axis, list) in Axis::ALL.iter().zip(labels.iter()) {
            let mut seen = HashSet::with_capacity(list.len());
            for l in list {
                if !seen.insert(l.as_str()) {
                    return Err(Error::input(format!("duplicate {axis}-label `{l}`")));
                }
            }
        }
        let dims = [labels[0].len(), labels[1].len(), labels[2].len()];
        let mut map: BTreeMap<Index, Coeff> = BTreeMap::new();
        for (idx, c) in entries {
            for a in 0..3 {
                if idx[a] >= dims[a] {
                    return Err(Error::input(format!(
                        "{}-index {} out of range (size {})",
                        Axis::from_index(a),
                        idx[a],
                        dims[a]
                    )));
                }
            }
            accumulate(&mut map, idx, c);
        }
        Ok(Tensor {
            labels,
            entries: map,
            facts: Vec::new(),
        })
    }

    /// Tensor with default labels `x0, x1, ...`.
    pub fn from_sizes(dims: [usize; 3], entries: impl IntoIterator<Item = (Index, Coeff)>) -> Result<Tensor> {
        let [x, y, z] = default_labels(dims);
        Tensor::new(x, y, z, entries)
    }

    /// All-ones tensor on the given support.
    pub fn from_support(dims: [usize; 3], support: impl IntoIterator<Item = Index>) -> Result<Tensor> {
        Tensor::from_sizes(dims, support.into_iter().map(|i| (i, one())))
    }

    pub fn zero(dims: [usize; 3]) -> Tensor {
        Tensor {
            labels: default_labels(dims),
            entries: BTreeMap::new(),
            facts: Vec::new(),
        }
    }

    // Internal constructor for already-valid data.
    pub(crate) fn from_parts(labels: [Vec<String>; 3], entries: BTreeMap<Index, Coeff>) -> Tensor {
        debug_assert!(entries.values().all(|c| !c.is_zero()));
        Tensor {
            labels,
            entries,
            facts: Vec::new(),
        }
    }

    pub fn with_fact(mut self, fact: AssertedFact) -> Tensor {
        self.facts.push(fact);
        self
    }

    pub fn facts(&self) -> &[AssertedFact] {
        &self.facts
    }

    /// The asserted asymptotic rank, if the constructor recorded one.
    pub fn asymptotic_rank(&self) -> Option<&AssertedFact> {
        self.facts.iter().find(|f| f.quantity == "R~")
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.labels[0].len(), self.labels[1].len(), self.labels[2].len()]
    }

    pub fn size(&self, axis: Axis) -> usize {
        self.labels[axis.index()].len()
    }

    pub fn labels(&self, axis: Axis) -> &[String] {
        &self.labels[axis.index()]
    }

    pub fn label_position(&self, axis: Axis, label: &str) -> Option<usize> {
        self.labels[axis.index()].iter().position(|l| l == label)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Index, &Coeff)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = Index> + '_ {
        self.entries.keys().copied()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn coefficient(&self, idx: Index) -> Coeff {
        self.entries.get(&idx).cloned().unwrap_or_else(Coeff::zero)
    }

    /// True if every coefficient equals one.
    pub fn is_zero_one(&self) -> bool {
        self.entries.values().all(|c| c.is_one())
    }

    /// Exact entry-wise equality, ignoring labels.
    pub fn same_entries(&self, other: &Tensor) -> bool {
        self.dims() == other.dims() && self.entries == other.entries
    }

    /// Variables of `axis` that occur in at least one entry.
    pub fn used(&self, axis: Axis) -> Vec<bool> {
        let a = axis.index();
        let mut used = vec![false; self.size(axis)];
        for idx in self.entries.keys() {
            used[idx[a]] = true;
        }
        used
    }

    /// Every variable appears in some entry.
    pub fn is_minimal(&self) -> bool {
        Axis::ALL.iter().all(|&axis| self.used(axis).into_iter().all(|u| u))
    }

    /// Drops variables that appear in no entry.
    pub fn trim(&self) -> Tensor {
        let keep: [Vec<usize>; 3] = [Axis::X, Axis::Y, Axis::Z].map(|axis| {
            self.used(axis)
                .into_iter()
                .enumerate()
                .filter_map(|(i, u)| u.then_some(i))
                .collect()
        });
        self.restrict(&keep)
    }

    /// Restriction to the listed variables, re-indexed in the given order.
    /// Every other variable is set to zero.
    pub fn restrict(&self, keep: &[Vec<usize>; 3]) -> Tensor {
        let maps: Vec<Vec<Option<usize>>> = (0..3)
            .map(|a| {
                let mut m = vec![None; self.labels[a].len()];
                for (new, &old) in keep[a].iter().enumerate() {
                    m[old] = Some(new);
                }
                m
            })
            .collect();
        let mut entries = BTreeMap::new();
        for (idx, c) in &self.entries {
            if let (Some(i), Some(j), Some(k)) = (maps[0][idx[0]], maps[1][idx[1]], maps[2][idx[2]]) {
                entries.insert([i, j, k], c.clone());
            }
        }
        let labels = [0, 1, 2].map(|a| keep[a].iter().map(|&p| self.labels[a][p].clone()).collect());
        Tensor::from_parts(labels, entries)
    }

    /// Zeroes every variable on `axis` outside `keep`, leaving the shape and
    /// labels unchanged.
    pub fn restrict_keep_positions(&self, axis: Axis, keep: &[usize]) -> Tensor {
        let a = axis.index();
        let mut on = vec![false; self.labels[a].len()];
        for &v in keep {
            if v < on.len() {
                on[v] = true;
            }
        }
        let entries = self
            .entries
            .iter()
            .filter(|(idx, _)| on[idx[a]])
            .map(|(idx, c)| (*idx, c.clone()))
            .collect();
        Tensor::from_parts(self.labels.clone(), entries)
    }

    /// Applies variable bijections: variable at position `p` on axis `a` moves to
    /// position `perms[a][p]`.
    pub fn relabel(&self, perms: &[Vec<usize>; 3]) -> Result<Tensor> {
        let dims = self.dims();
        for a in 0..3 {
            if !is_permutation(&perms[a], dims[a]) {
                return Err(Error::input(format!(
                    "relabeling of axis {} is not a bijection",
                    Axis::from_index(a)
                )));
            }
        }
        let labels = [0, 1, 2].map(|a| {
            let mut out = vec![String::new(); dims[a]];
            for (p, &q) in perms[a].iter().enumerate() {
                out[q] = self.labels[a][p].clone();
            }
            out
        });
        let entries = self
            .entries
            .iter()
            .map(|(idx, c)| ([perms[0][idx[0]], perms[1][idx[1]], perms[2][idx[2]]], c.clone()))
            .collect();
        Ok(Tensor {
            labels,
            entries,
            facts: self.facts.clone(),
        })
    }

    /// True if `perms` carries `self` onto `other` entry for entry.
    pub fn isomorphic_under(&self, other: &Tensor, perms: &[Vec<usize>; 3]) -> bool {
        match self.relabel(perms) {
            Ok(t) => t.same_entries(other),
            Err(_) => false,
        }
    }

    /// Sum of two tensors over the same variable sets; labels come from `self`.
    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.dims() != other.dims() {
            return Err(Error::input(format!(
                "cannot add tensors of shapes {:?} and {:?}",
                self.dims(),
                other.dims()
            )));
        }
        let mut entries = self.entries.clone();
        for (idx, c) in &other.entries {
            accumulate(&mut entries, *idx, c.clone());
        }
        Ok(Tensor::from_parts(self.labels.clone(), entries))
    }

    pub fn scale(&self, c: &Coeff) -> Tensor {
        if c.is_zero() {
            return Tensor::from_parts(self.labels.clone(), BTreeMap::new());
        }
        let entries = self.entries.iter().map(|(i, v)| (*i, v * c)).collect();
        Tensor::from_parts(self.labels.clone(), entries)
    }

    /// `T^{⊗n}` for `1 <= n <= cap`.
    pub fn power(&self, n: usize, cap: usize) -> Result<Tensor> {
        if n == 0 {
            return Err(Error::input("tensor power must be at least 1"));
        }
        if n > cap {
            return Err(Error::TooLarge(format!(
                "tensor power {n} exceeds the materialization cap {cap}"
            )));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = tensor_product(&out, self);
        }
        Ok(out)
    }

    /// Coefficient of `x_i y_j z_k` equals that of `x_j y_k z_i`, under the
    /// stored index order.
    pub fn is_variable_symmetric(&self) -> bool {
        let [nx, ny, nz] = self.dims();
        if nx != ny || ny != nz {
            return false;
        }
        self.entries
            .iter()
            .all(|(&[i, j, k], c)| self.entries.get(&[j, k, i]) == Some(c))
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for ([i, j, k], c) in &self.entries {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if !c.is_one() {
                write!(f, "{c}*")?;
            }
            write!(f, "{}{}{}", self.labels[0][*i], self.labels[1][*j], self.labels[2][*k])?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

pub(crate) fn accumulate(map: &mut BTreeMap<Index, Coeff>, idx: Index, c: Coeff) {
    if c.is_zero() {
        return;
    }
    match map.entry(idx) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            *o.get_mut() += c;
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

pub(crate) fn default_labels(dims: [usize; 3]) -> [Vec<String>; 3] {
    [0, 1, 2].map(|a| {
        let p = Axis::from_index(a).name();
        (0..dims[a]).map(|i| format!("{p}{i}")).collect()
    })
}

pub(crate) fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &v in p {
        if v >= n || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}

fn pair_labels(a: &[String], b: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for la in a {
        for lb in b {
            out.push(format!("({la},{lb})"));
        }
    }
    out
}

/// Kronecker product: variable `(u, v)` sits at index `u * |B_axis| + v`.
pub fn tensor_product(a: &Tensor, b: &Tensor) -> Tensor {
    let bd = b.dims();
    let labels = [0, 1, 2].map(|ax| pair_labels(&a.labels[ax], &b.labels[ax]));
    let mut entries = BTreeMap::new();
    for (ia, ca) in &a.entries {
        for (ib, cb) in &b.entries {
            let idx = [ia[0] * bd[0] + ib[0], ia[1] * bd[1] + ib[1], ia[2] * bd[2] + ib[2]];
            entries.insert(idx, ca * cb);
        }
    }
    Tensor::from_parts(labels, entries)
}

/// Disjoint sum `A ⊕ B`; the variables of `B` follow those of `A` on each axis.
pub fn direct_sum(a: &Tensor, b: &Tensor) -> Tensor {
    let ad = a.dims();
    let labels = [0, 1, 2].map(|ax| {
        a.labels[ax]
            .iter()
            .map(|l| format!("(0,{l})"))
            .chain(b.labels[ax].iter().map(|l| format!("(1,{l})")))
            .collect()
    });
    let mut entries = a.entries.clone();
    for (ib, c) in &b.entries {
        entries.insert([ib[0] + ad[0], ib[1] + ad[1], ib[2] + ad[2]], c.clone());
    }
    Tensor::from_parts(labels, entries)
}

/// `m ⊙ T`, the disjoint sum of `m` copies.
pub fn n_copies(m: usize, t: &Tensor) -> Tensor {
    let d = t.dims();
    let labels = [0, 1, 2].map(|ax| {
        (0..m)
            .flat_map(|c| t.labels[ax].iter().map(move |l| format!("({c},{l})")))
            .collect()
    });
    let mut entries = BTreeMap::new();
    for c in 0..m {
        for (i, v) in &t.entries {
            entries.insert([i[0] + c * d[0], i[1] + c * d[1], i[2] + c * d[2]], v.clone());
        }
    }
    Tensor::from_parts(labels, entries)
}

/// `rot(T)`: the tensor over `Y, Z, X` with the coefficient of `y_j z_k x_i`
/// equal to that of `x_i y_j z_k` in `T`.
pub fn rotate(t: &Tensor) -> Tensor {
    let labels = [t.labels[1].clone(), t.labels[2].clone(), t.labels[0].clone()];
    let entries = t.entries.iter().map(|(&[i, j, k], c)| ([j, k, i], c.clone())).collect();
    Tensor::from_parts(labels, entries)
}

/// `T ⊗ rot(T) ⊗ rot²(T)` with every axis indexed by `X × Y × Z` of `T`.
///
/// The plain product indexes its y-axis by `Y × Z × X`; cyclically shifting
/// the y- and z-tuples aligns all three axes, which makes the result
/// variable-symmetric in stored order. The coefficient of
/// `x_(a1,a2,a3) y_(p1,p2,p3) z_(r1,r2,r3)` is
/// `T(a1,p2,r3) · T(r1,a2,p3) · T(p1,r2,a3)`.
pub fn cyclic_symmetrization(t: &Tensor) -> Tensor {
    let [nx, ny, nz] = t.dims();
    let flat = |u: usize, v: usize, w: usize| (u * ny + v) * nz + w;
    let mut labels: Vec<String> = Vec::with_capacity(nx * ny * nz);
    for lx in &t.labels[0] {
        for ly in &t.labels[1] {
            for lz in &t.labels[2] {
                labels.push(format!("({lx},{ly},{lz})"));
            }
        }
    }
    let list: Vec<(&Index, &Coeff)> = t.entries.iter().collect();
    let mut entries = BTreeMap::new();
    for (e1, c1) in &list {
        for (e2, c2) in &list {
            let c12 = *c1 * *c2;
            for (e3, c3) in &list {
                let x = flat(e1[0], e2[1], e3[2]);
                let y = flat(e3[0], e1[1], e2[2]);
                let z = flat(e2[0], e3[1], e1[2]);
                entries.insert([x, y, z], &c12 * *c3);
            }
        }
    }
    let labels = [labels.clone(), labels.clone(), labels];
    Tensor::from_parts(labels, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_cw, make_independent, make_matmul, make_t112};

    #[test]
    fn new_sums_duplicates_and_drops_zeros() {
        let t = Tensor::from_sizes(
            [1, 1, 2],
            vec![([0, 0, 0], int(2)), ([0, 0, 0], int(-2)), ([0, 0, 1], int(3))],
        )
        .unwrap();
        assert_eq!(t.nnz(), 1);
        assert_eq!(t.coefficient([0, 0, 1]), int(3));
    }

    #[test]
    fn new_rejects_bad_input() {
        assert!(Tensor::from_sizes([1, 1, 1], vec![([0, 1, 0], one())]).is_err());
        let dup = Tensor::new(vec!["a".into(), "a".into()], vec!["b".into()], vec!["c".into()], vec![]);
        assert!(dup.is_err());
    }

    #[test]
    fn add_cancels_to_zero() {
        let t = make_matmul(2, 1, 1);
        let neg = t.scale(&int(-1));
        assert!(t.add(&neg).unwrap().is_zero());
    }

    #[test]
    fn product_with_unit_is_identity() {
        let a = make_cw(2, &[1, 2]).unwrap();
        let p = tensor_product(&a, &make_independent(1));
        assert!(p.same_entries(&a));
    }

    #[test]
    fn direct_sum_of_units() {
        let s = direct_sum(&make_independent(1), &make_independent(1));
        assert!(s.same_entries(&make_independent(2)));
        let m = n_copies(3, &make_independent(2));
        assert!(m.same_entries(&make_independent(6)));
    }

    #[test]
    fn rotate_cubed_is_identity() {
        let t = make_t112(2);
        let r3 = rotate(&rotate(&rotate(&t)));
        assert_eq!(r3, t);
    }

    #[test]
    fn trim_removes_unused() {
        let t = Tensor::from_support([3, 2, 2], vec![[0, 0, 0], [2, 1, 1]]).unwrap();
        assert!(!t.is_minimal());
        let tt = t.trim();
        assert_eq!(tt.dims(), [2, 2, 2]);
        assert!(tt.is_minimal());
        assert_eq!(tt.labels(Axis::X), &["x0".to_string(), "x2".to_string()]);
    }

    #[test]
    fn power_respects_cap() {
        let t = make_independent(2);
        assert_eq!(t.power(3, DEFAULT_POWER_CAP).unwrap().nnz(), 8);
        assert!(matches!(t.power(4, DEFAULT_POWER_CAP), Err(Error::TooLarge(_))));
    }

    #[test]
    fn t112_symmetrization_is_symmetric() {
        let t = make_t112(1);
        assert!(!t.is_variable_symmetric());
        let ts = cyclic_symmetrization(&t);
        assert!(ts.is_variable_symmetric());
        assert_eq!(ts.nnz(), t.nnz().pow(3));
    }
}
