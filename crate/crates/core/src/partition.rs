//! Variable partitions and the block decomposition they induce.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::{rotate, Axis, Coeff, Index, Tensor};

/// One part `X_i` of an axis. `members` are variable positions on that axis;
/// `grade` is the integer used by the hyperplane condition `i + j + k = ℓ`
/// (by default the part's position).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Part {
    pub label: String,
    pub members: Vec<usize>,
    pub grade: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariablePartition {
    parts: [Vec<Part>; 3],
    dims: [usize; 3],
    owner: [Vec<usize>; 3],
}

impl VariablePartition {
    /// Validates that on every axis the parts are nonempty, disjoint and cover
    /// `0..dims[axis]`.
    pub fn new(parts: [Vec<Part>; 3], dims: [usize; 3]) -> Result<Self> {
        let mut owner: [Vec<usize>; 3] = Default::default();
        for a in 0..3 {
            let axis = Axis::from_index(a);
            let mut own = vec![usize::MAX; dims[a]];
            for (pi, p) in parts[a].iter().enumerate() {
                if p.members.is_empty() {
                    return Err(Error::input(format!("{axis}-part `{}` is empty", p.label)));
                }
                for &m in &p.members {
                    if m >= dims[a] {
                        return Err(Error::input(format!(
                            "{axis}-part `{}` names variable {m}, axis has {}",
                            p.label, dims[a]
                        )));
                    }
                    if own[m] != usize::MAX {
                        return Err(Error::input(format!("{axis}-variable {m} lies in two parts")));
                    }
                    own[m] = pi;
                }
            }
            if let Some(m) = own.iter().position(|&o| o == usize::MAX) {
                return Err(Error::input(format!("{axis}-variable {m} is in no part")));
            }
            owner[a] = own;
        }
        Ok(VariablePartition { parts, dims, owner })
    }

    /// Builds parts from member lists; labels and grades are positions.
    pub fn from_members(members: [Vec<Vec<usize>>; 3], dims: [usize; 3]) -> Result<Self> {
        let parts = members.map(|list| {
            list.into_iter()
                .enumerate()
                .map(|(i, m)| Part {
                    label: i.to_string(),
                    members: m,
                    grade: i as i64,
                })
                .collect()
        });
        VariablePartition::new(parts, dims)
    }

    /// One part per axis.
    pub fn trivial(dims: [usize; 3]) -> Self {
        let members = dims.map(|n| vec![(0..n).collect()]);
        VariablePartition::from_members(members, dims).expect("trivial partition is valid")
    }

    /// Every variable in its own part.
    pub fn singletons(dims: [usize; 3]) -> Self {
        let members = dims.map(|n| (0..n).map(|i| vec![i]).collect());
        VariablePartition::from_members(members, dims).expect("singleton partition is valid")
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn parts(&self, axis: Axis) -> &[Part] {
        &self.parts[axis.index()]
    }

    pub fn num_parts(&self, axis: Axis) -> usize {
        self.parts[axis.index()].len()
    }

    pub fn part_sizes(&self, axis: Axis) -> Vec<usize> {
        self.parts(axis).iter().map(|p| p.members.len()).collect()
    }

    /// Part index of each variable on `axis`.
    pub fn owner(&self, axis: Axis) -> &[usize] {
        &self.owner[axis.index()]
    }

    /// The partition of `T ⊗ rot(T) ⊗ rot²(T)` (as laid out by
    /// [`crate::tensor::cyclic_symmetrization`]) into products
    /// `X_a × Y_b × Z_c`, identical on all three axes. Grades add.
    pub fn cyclic_product(&self) -> VariablePartition {
        let [_, ny, nz] = self.dims;
        let n = self.dims.iter().product();
        let mut parts = Vec::new();
        for px in &self.parts[0] {
            for py in &self.parts[1] {
                for pz in &self.parts[2] {
                    let mut members = Vec::with_capacity(px.members.len() * py.members.len() * pz.members.len());
                    for &u in &px.members {
                        for &v in &py.members {
                            for &w in &pz.members {
                                members.push((u * ny + v) * nz + w);
                            }
                        }
                    }
                    parts.push(Part {
                        label: format!("({},{},{})", px.label, py.label, pz.label),
                        members,
                        grade: px.grade + py.grade + pz.grade,
                    });
                }
            }
        }
        VariablePartition::new([parts.clone(), parts.clone(), parts], [n; 3]).expect("product partition is valid")
    }
}

/// The nonzero blocks `T_{ijk}` of a tensor under a partition. Each block is
/// stored over its own variables `X_i, Y_j, Z_k` (positions in part order).
#[derive(Clone, Debug)]
pub struct BlockSet {
    partition: VariablePartition,
    blocks: BTreeMap<Index, Tensor>,
}

pub fn blocks(t: &Tensor, p: &VariablePartition) -> Result<BlockSet> {
    if t.dims() != p.dims() {
        return Err(Error::input(format!(
            "partition covers shape {:?} but tensor has shape {:?}",
            p.dims(),
            t.dims()
        )));
    }
    // local position of each variable inside its part
    let local: Vec<Vec<usize>> = (0..3)
        .map(|a| {
            let mut pos = vec![0; p.dims[a]];
            for part in &p.parts[a] {
                for (i, &m) in part.members.iter().enumerate() {
                    pos[m] = i;
                }
            }
            pos
        })
        .collect();
    let mut grouped: BTreeMap<Index, BTreeMap<Index, Coeff>> = BTreeMap::new();
    for (idx, c) in t.entries() {
        let key = [p.owner[0][idx[0]], p.owner[1][idx[1]], p.owner[2][idx[2]]];
        let loc = [local[0][idx[0]], local[1][idx[1]], local[2][idx[2]]];
        grouped.entry(key).or_default().insert(loc, c.clone());
    }
    let blocks = grouped
        .into_iter()
        .map(|(key, entries)| {
            let labels = [0, 1, 2].map(|a| {
                p.parts[a][key[a]]
                    .members
                    .iter()
                    .map(|&m| t.labels(Axis::from_index(a))[m].clone())
                    .collect()
            });
            (key, Tensor::from_parts(labels, entries))
        })
        .collect();
    Ok(BlockSet {
        partition: p.clone(),
        blocks,
    })
}

impl BlockSet {
    pub fn partition(&self) -> &VariablePartition {
        &self.partition
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block ids `(i, j, k)` in lexicographic order.
    pub fn ids(&self) -> Vec<Index> {
        self.blocks.keys().copied().collect()
    }

    pub fn get(&self, id: Index) -> Option<&Tensor> {
        self.blocks.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Index, &Tensor)> {
        self.blocks.iter()
    }

    /// Block name from part labels, e.g. `T_{0,1,1}`.
    pub fn name(&self, id: Index) -> String {
        let l = |a: usize| self.partition.parts[a][id[a]].label.as_str();
        let (x, y, z) = (l(0), l(1), l(2));
        if x.len() == 1 && y.len() == 1 && z.len() == 1 {
            format!("T_{x}{y}{z}")
        } else {
            format!("T_{{{x},{y},{z}}}")
        }
    }

    /// The block embedded back into the parent's variable space.
    pub fn embedded(&self, id: Index) -> Option<Tensor> {
        let b = self.blocks.get(&id)?;
        let p = &self.partition;
        let entries = b
            .entries()
            .map(|(loc, c)| {
                let idx = [0, 1, 2].map(|a| p.parts[a][id[a]].members[loc[a]]);
                (idx, c.clone())
            })
            .collect();
        Some(Tensor::from_parts(crate::tensor::default_labels(p.dims), entries))
    }

    /// Sum of all blocks over the parent variable sets.
    pub fn reconstruct(&self) -> Tensor {
        let mut sum = Tensor::zero(self.partition.dims);
        for id in self.blocks.keys() {
            let e = self.embedded(*id).expect("id from this set");
            sum = sum.add(&e).expect("same shape");
        }
        sum
    }

    /// `k_X = k_Y = k_Z`, `|X_i| = |Y_i| = |Z_i|`, and `T_{jki}` equals
    /// `rot(T_{ijk})` under the positional alignment of parts (zero blocks
    /// included).
    pub fn is_t_symmetric(&self) -> bool {
        let p = &self.partition;
        let k = p.num_parts(Axis::X);
        if p.num_parts(Axis::Y) != k || p.num_parts(Axis::Z) != k {
            return false;
        }
        let sx = p.part_sizes(Axis::X);
        if p.part_sizes(Axis::Y) != sx || p.part_sizes(Axis::Z) != sx {
            return false;
        }
        self.blocks
            .iter()
            .all(|(&[i, j, kk], b)| match self.blocks.get(&[j, kk, i]) {
                Some(other) => rotate(b).same_entries(other),
                None => false,
            })
    }

    /// Rotation orbits `{T_ijk, T_jki, T_kij}` as lists of positions in
    /// [`BlockSet::ids`]. Only meaningful for T-symmetric block sets.
    pub fn rotation_orbits(&self) -> Result<Vec<Vec<usize>>> {
        let ids = self.ids();
        let pos: BTreeMap<Index, usize> = ids.iter().enumerate().map(|(n, id)| (*id, n)).collect();
        let mut seen = vec![false; ids.len()];
        let mut orbits = Vec::new();
        for (n, &[i, j, k]) in ids.iter().enumerate() {
            if seen[n] {
                continue;
            }
            let mut orbit = vec![n];
            seen[n] = true;
            for r in [[j, k, i], [k, i, j]] {
                let m = *pos
                    .get(&r)
                    .ok_or_else(|| Error::input(format!("block {:?} has no rotated partner {:?}", [i, j, k], r)))?;
                if !seen[m] {
                    seen[m] = true;
                    orbit.push(m);
                }
            }
            orbits.push(orbit);
        }
        Ok(orbits)
    }
}

/// `T` is variable-symmetric and `P` is a T-symmetric partition of it.
pub fn is_t_symmetric_partition(t: &Tensor, p: &VariablePartition) -> bool {
    if !t.is_variable_symmetric() {
        return false;
    }
    match blocks(t, p) {
        Ok(bs) => bs.is_t_symmetric(),
        Err(_) => false,
    }
}
