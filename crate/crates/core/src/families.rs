//! Constructors for the tensor families studied here and their standard
//! variable partitions.
//!
//! Each constructor fixes a canonical index order. Under that order every
//! family member with the identity permutation is variable-symmetric, and the
//! matching partition constructor is symmetric as well. Asymptotic ranks are
//! attached as [`AssertedFact`]s; they are known results, not computed.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::partition::{Part, VariablePartition};
use crate::tensor::{is_permutation, one, AssertedFact, Index, Relation, Tensor};

fn all_ones(labels: [Vec<String>; 3], support: impl IntoIterator<Item = Index>) -> Tensor {
    let entries: BTreeMap<Index, _> = support.into_iter().map(|i| (i, one())).collect();
    Tensor::from_parts(labels, entries)
}

/// `⟨a,b,c⟩ = Σ x_{ij} y_{jk} z_{ki}`. Index layout: `x_{ij}` at `i*b + j`,
/// `y_{jk}` at `j*c + k`, `z_{ki}` at `k*a + i`.
///
/// # Panics
/// If any dimension is zero.
pub fn make_matmul(a: usize, b: usize, c: usize) -> Tensor {
    assert!(a >= 1 && b >= 1 && c >= 1, "matrix dimensions must be positive");
    let x = (0..a)
        .flat_map(|i| (0..b).map(move |j| format!("x_({i},{j})")))
        .collect();
    let y = (0..b)
        .flat_map(|j| (0..c).map(move |k| format!("y_({j},{k})")))
        .collect();
    let z = (0..c)
        .flat_map(|k| (0..a).map(move |i| format!("z_({k},{i})")))
        .collect();
    let mut support = Vec::with_capacity(a * b * c);
    for i in 0..a {
        for j in 0..b {
            for k in 0..c {
                support.push([i * b + j, j * c + k, k * a + i]);
            }
        }
    }
    all_ones([x, y, z], support)
}

/// The independent tensor `⟨q⟩ = Σ x_i y_i z_i`.
///
/// # Panics
/// If `q == 0`.
pub fn make_independent(q: usize) -> Tensor {
    assert!(q >= 1, "independent tensor size must be positive");
    let labels = ["x", "y", "z"].map(|p| (0..q).map(|i| format!("{p}{i}")).collect());
    all_ones(labels, (0..q).map(|i| [i, i, i])).with_fact(AssertedFact::asymptotic_rank(
        Relation::Equal,
        q as f64,
        "diagonal tensor: rank equals flattening rank q",
    ))
}

fn check_sigma(q: usize, sigma: &[usize]) -> Result<()> {
    let zero_based: Vec<usize> = sigma.iter().map(|&s| s.wrapping_sub(1)).collect();
    if !is_permutation(&zero_based, q) {
        return Err(Error::input(format!("sigma {sigma:?} is not a permutation of 1..={q}")));
    }
    Ok(())
}

fn indexed_labels(n: usize) -> [Vec<String>; 3] {
    ["x", "y", "z"].map(|p| (0..n).map(|i| format!("{p}{i}")).collect())
}

/// Identity permutation of `1..=q`.
pub fn identity_sigma(q: usize) -> Vec<usize> {
    (1..=q).collect()
}

/// `CW_{q,σ} = x_0 y_0 z_{q+1} + x_0 y_{q+1} z_0 + x_{q+1} y_0 z_0
///   + Σ_{i=1}^q (x_i y_{σ(i)} z_0 + x_i y_0 z_i + x_0 y_i z_i)`.
///
/// `sigma[i-1]` holds `σ(i)`; the variable `x_i` sits at index `i`.
pub fn make_cw(q: usize, sigma: &[usize]) -> Result<Tensor> {
    check_sigma(q, sigma)?;
    let top = q + 1;
    let mut support = vec![[0, 0, top], [0, top, 0], [top, 0, 0]];
    for i in 1..=q {
        support.push([i, sigma[i - 1], 0]);
        support.push([i, 0, i]);
        support.push([0, i, i]);
    }
    Ok(
        all_ones(indexed_labels(q + 2), support).with_fact(AssertedFact::asymptotic_rank(
            Relation::Equal,
            (q + 2) as f64,
            "known border rank q+2 of the Coppersmith-Winograd tensor",
        )),
    )
}

/// `cw_{q,σ} = Σ_{i=1}^q (x_i y_{σ(i)} z_0 + x_i y_0 z_i + x_0 y_i z_i)`.
pub fn make_cw_small(q: usize, sigma: &[usize]) -> Result<Tensor> {
    if q == 0 {
        return Err(Error::input("cw_q needs q >= 1"));
    }
    check_sigma(q, sigma)?;
    let mut support = Vec::with_capacity(3 * q);
    for i in 1..=q {
        support.push([i, sigma[i - 1], 0]);
        support.push([i, 0, i]);
        support.push([0, i, i]);
    }
    Ok(
        all_ones(indexed_labels(q + 1), support).with_fact(AssertedFact::asymptotic_rank(
            Relation::AtLeast,
            (q + 1) as f64,
            "flattening lower bound q+1 for the small Coppersmith-Winograd tensor",
        )),
    )
}

fn cyclic_fact(q: usize) -> AssertedFact {
    AssertedFact::asymptotic_rank(
        Relation::Equal,
        q as f64,
        "known asymptotic rank q of the cyclic group tensor and its lower triangular part",
    )
}

/// Structural tensor of the cyclic group: `Σ_{i,j} x_i y_j z_{i+j mod q}`.
///
/// # Panics
/// If `q == 0`.
pub fn make_cyclic(q: usize) -> Tensor {
    assert!(q >= 1, "cyclic group order must be positive");
    let support = (0..q).flat_map(|i| (0..q).map(move |j| [i, j, (i + j) % q]));
    all_ones(indexed_labels(q), support).with_fact(cyclic_fact(q))
}

/// Lower triangular part `Σ_{i+j<q} x_i y_j z_{i+j}`.
///
/// The variable `z_s` is stored at index `q-1-s`, so every entry satisfies
/// `i + j + k = q - 1` and the tensor is variable-symmetric in stored order.
/// Over `F_q` this tensor degenerates to the full cyclic tensor; that fact is
/// recorded as metadata only.
///
/// # Panics
/// If `q == 0`.
pub fn make_cyclic_lower(q: usize) -> Tensor {
    assert!(q >= 1, "cyclic group order must be positive");
    let x = (0..q).map(|i| format!("x{i}")).collect();
    let y = (0..q).map(|j| format!("y{j}")).collect();
    let z = (0..q).map(|p| format!("z{}", q - 1 - p)).collect();
    let support = (0..q).flat_map(|i| (0..q - i).map(move |j| [i, j, q - 1 - (i + j)]));
    all_ones([x, y, z], support)
        .with_fact(cyclic_fact(q))
        .with_fact(AssertedFact {
            quantity: "note".to_string(),
            relation: Relation::Equal,
            value: 0.0,
            citation: "degenerates to the full cyclic tensor over F_q (not computed)".to_string(),
        })
}

/// The subtensor `t_112` of `CW_q^{⊗2}`:
/// `Σ_i x_{i,0} y_{i,0} z_{0,q+1} + Σ_k x_{0,k} y_{0,k} z_{q+1,0}
///  + Σ_{i,k} x_{i,0} y_{0,k} z_{i,k} + Σ_{i,k} x_{0,k} y_{i,0} z_{i,k}`.
///
/// Layout: `x_{i,0}` at `i-1`, `x_{0,k}` at `q+k-1` (same for y); `z_{i,k}` at
/// `(i-1)q + (k-1)`, `z_{0,q+1}` at `q²`, `z_{q+1,0}` at `q²+1`.
///
/// # Panics
/// If `q == 0`.
pub fn make_t112(q: usize) -> Tensor {
    assert!(q >= 1, "t_112 needs q >= 1");
    let xy = |p: &str| -> Vec<String> {
        (1..=q)
            .map(|i| format!("{p}_({i},0)"))
            .chain((1..=q).map(|k| format!("{p}_(0,{k})")))
            .collect()
    };
    let mut z: Vec<String> = Vec::with_capacity(q * q + 2);
    for i in 1..=q {
        for k in 1..=q {
            z.push(format!("z_({i},{k})"));
        }
    }
    z.push(format!("z_(0,{})", q + 1));
    z.push(format!("z_({},0)", q + 1));
    let za = q * q;
    let zb = q * q + 1;
    let mut support = Vec::with_capacity(2 * q + 2 * q * q);
    for i in 0..q {
        support.push([i, i, za]);
        support.push([q + i, q + i, zb]);
    }
    for i in 0..q {
        for k in 0..q {
            let zik = i * q + k;
            support.push([i, q + k, zik]);
            support.push([q + k, i, zik]);
        }
    }
    all_ones([xy("x"), xy("y"), z], support)
}

fn part(label: &str, members: impl IntoIterator<Item = usize>, grade: i64) -> Part {
    Part {
        label: label.to_string(),
        members: members.into_iter().collect(),
        grade,
    }
}

fn same_on_all_axes(parts: Vec<Part>, dims: [usize; 3]) -> VariablePartition {
    VariablePartition::new([parts.clone(), parts.clone(), parts], dims)
        .expect("family partition is valid by construction")
}

/// `X_0 = {x_0}`, `X_1 = {x_1..x_q}`, `X_2 = {x_{q+1}}`, likewise for Y and Z.
pub fn cw_partition(q: usize) -> VariablePartition {
    let n = q + 2;
    let mut parts = vec![part("0", [0], 0)];
    if q > 0 {
        parts.push(part("1", 1..=q, 1));
    }
    parts.push(part("2", [q + 1], 2));
    same_on_all_axes(parts, [n; 3])
}

/// `X_0 = {x_0}`, `X_1 = {x_1..x_q}`, likewise for Y and Z.
pub fn cw_small_partition(q: usize) -> VariablePartition {
    same_on_all_axes(vec![part("0", [0], 0), part("1", 1..=q, 1)], [q + 1; 3])
}

/// Partition of `t_112`: `X_0 = {x_{i,0}}`, `X_1 = {x_{0,k}}` (same for Y),
/// `Z_0 = {z_{i,k}}`, `Z_1 = {z_{0,q+1}}`, `Z_2 = {z_{q+1,0}}`.
///
/// Grades are 0/1 on X and Y and `(1, 2, 0)` on `Z_0, Z_1, Z_2`, so every
/// nonzero block has grade sum 2.
pub fn t112_partition(q: usize) -> VariablePartition {
    let xy = vec![part("0", 0..q, 0), part("1", q..2 * q, 1)];
    let z = vec![part("0", 0..q * q, 1), part("1", [q * q], 2), part("2", [q * q + 1], 0)];
    VariablePartition::new([xy.clone(), xy, z], [2 * q, 2 * q, q * q + 2])
        .expect("t_112 partition is valid by construction")
}
