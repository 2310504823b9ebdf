//! Flattening ranks, the derived quantities `m(T)` and `μ(T)`, and recognition
//! of matrix multiplication tensors.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::tensor::{Axis, Coeff, Tensor};

/// The `axis`-flattening of a tensor: one row per variable on `axis`, one
/// column per pair of variables on the other two axes (in cyclic order, so
/// the x-flattening has columns `(y, z)`).
#[derive(Clone, Debug)]
pub struct FlatteningMatrix {
    pub axis: Axis,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<BTreeMap<usize, Coeff>>,
}

impl FlatteningMatrix {
    pub fn of(t: &Tensor, axis: Axis) -> FlatteningMatrix {
        let dims = t.dims();
        let a = axis.index();
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let mut entries = vec![BTreeMap::new(); dims[a]];
        for (idx, v) in t.entries() {
            entries[idx[a]].insert(idx[b] * dims[c] + idx[c], v.clone());
        }
        FlatteningMatrix {
            axis,
            rows: dims[a],
            cols: dims[b] * dims[c],
            entries,
        }
    }

    /// Exact rank by fraction-free elimination.
    pub fn rank(&self) -> usize {
        // only columns that carry a nonzero matter
        let mut colmap: BTreeMap<usize, usize> = BTreeMap::new();
        for row in &self.entries {
            for &c in row.keys() {
                let n = colmap.len();
                colmap.entry(c).or_insert(n);
            }
        }
        let ncols = colmap.len();
        let rows: Vec<Vec<BigInt>> = self
            .entries
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| {
                let lcm = r.values().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
                let mut dense = vec![BigInt::zero(); ncols];
                for (c, v) in r {
                    dense[colmap[c]] = v.numer() * (&lcm / v.denom());
                }
                dense
            })
            .collect();
        bareiss_rank(rows, ncols)
    }
}

/// Rank of an integer matrix by Bareiss elimination. Every division is exact.
pub fn bareiss_rank(mut m: Vec<Vec<BigInt>>, ncols: usize) -> usize {
    let nrows = m.len();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        // smallest nonzero pivot keeps the numbers short
        let pivot = (rank..nrows)
            .filter(|&r| !m[r][col].is_zero())
            .min_by(|&a, &b| m[a][col].abs().cmp(&m[b][col].abs()));
        let Some(p) = pivot else { continue };
        m.swap(rank, p);
        let (top, rest) = m.split_at_mut(rank + 1);
        let prow = &top[rank];
        for row in rest.iter_mut() {
            let factor = row[col].clone();
            for c in col + 1..ncols {
                let v = &prow[col] * &row[c] - &factor * &prow[c];
                row[c] = v / &prev;
            }
            row[col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    rank
}

pub fn axis_rank(t: &Tensor, axis: Axis) -> usize {
    FlatteningMatrix::of(t, axis).rank()
}

/// `S_x(T)`, the rank of the x-flattening.
pub fn x_rank(t: &Tensor) -> usize {
    axis_rank(t, Axis::X)
}

pub fn y_rank(t: &Tensor) -> usize {
    axis_rank(t, Axis::Y)
}

pub fn z_rank(t: &Tensor) -> usize {
    axis_rank(t, Axis::Z)
}

/// `m(T) = max(S_x, S_y, S_z)`.
pub fn m_value(t: &Tensor) -> usize {
    x_rank(t).max(y_rank(t)).max(z_rank(t))
}

/// `μ(T) = |X|·|Y|·|Z|` after removing unused variables.
pub fn measure(t: &Tensor) -> u128 {
    t.trim().dims().iter().map(|&n| n as u128).product()
}

/// `min(S_x, S_y, S_z)`, an upper bound on the slice rank.
pub fn slice_rank_upper_trivial(t: &Tensor) -> usize {
    x_rank(t).min(y_rank(t)).min(z_rank(t))
}

/// A tensor recognized as `c·⟨a,b,c⟩`. `relabel[axis][p]` is the position in
/// [`crate::families::make_matmul`]'s layout of the variable at position `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatmulShape {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub scale: Coeff,
    pub relabel: [Vec<usize>; 3],
}

fn neighbor_classes(t: &Tensor, from: usize, to: usize) -> (Vec<usize>, usize) {
    let n = t.dims()[from];
    let mut nb: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (idx, _) in t.entries() {
        nb[idx[from]].push(idx[to]);
    }
    let mut ids: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut class = Vec::with_capacity(n);
    for mut v in nb {
        v.sort_unstable();
        v.dedup();
        let next = ids.len();
        class.push(*ids.entry(v).or_insert(next));
    }
    (class, ids.len())
}

/// Recognizes tensors that equal a scalar multiple of `⟨a,b,c⟩` after
/// relabeling variables.
///
/// `(a, b, c)` is forced by the axis sizes and the number of entries. The
/// index pieces are read off neighbourhoods: the y-neighbours of `x_{ij}` fix
/// `j`, its z-neighbours fix `i`, and so on. The candidate relabeling is then
/// checked entry by entry.
pub fn recognize_matmul(t: &Tensor) -> Option<MatmulShape> {
    if t.is_zero() || !t.is_minimal() {
        return None;
    }
    let scale = t.entries().next()?.1.clone();
    if !t.entries().all(|(_, c)| *c == scale) {
        return None;
    }
    let [nx, ny, nz] = t.dims();
    let e = t.nnz();
    if (nx as u128) * (ny as u128) * (nz as u128) != (e as u128) * (e as u128) {
        return None;
    }
    if e % nx != 0 || e % ny != 0 || e % nz != 0 {
        return None;
    }
    let (a, b, c) = (e / ny, e / nz, e / nx);
    if a * b != nx || b * c != ny || c * a != nz {
        return None;
    }

    // x by y-neighbourhood -> j ; x by z-neighbourhood -> i ; y by z-neighbourhood -> k
    let (xj, nj) = neighbor_classes(t, 0, 1);
    let (xi, ni) = neighbor_classes(t, 0, 2);
    let (yk, nk) = neighbor_classes(t, 1, 2);
    if nj != b || ni != a || nk != c {
        return None;
    }
    let mut yj = vec![usize::MAX; ny];
    let mut zi = vec![usize::MAX; nz];
    let mut zk = vec![usize::MAX; nz];
    for (&[x, y, z], _) in t.entries() {
        for (slot, val) in [(&mut yj[y], xj[x]), (&mut zi[z], xi[x]), (&mut zk[z], yk[y])] {
            if *slot == usize::MAX {
                *slot = val;
            } else if *slot != val {
                return None;
            }
        }
    }
    let relabel = [
        (0..nx).map(|x| xi[x] * b + xj[x]).collect::<Vec<_>>(),
        (0..ny).map(|y| yj[y] * c + yk[y]).collect(),
        (0..nz).map(|z| zk[z] * a + zi[z]).collect(),
    ];
    let target = crate::families::make_matmul(a, b, c).scale(&scale);
    if t.isomorphic_under(&target, &relabel) {
        Some(MatmulShape {
            a,
            b,
            c,
            scale,
            relabel,
        })
    } else {
        None
    }
}
