//! Maximization of `p_X`-type objectives over block distributions.
//!
//! All objectives are handled in the log domain:
//! `log p_X = Σ_i p(X_i) (log|X_i| − log p(X_i))`, with `0 log 0 = 0`.
//! `log p_X` is concave in `p`, so a weighted sum `Σ_a λ_a log p_a` with
//! `λ ≥ 0` is maximized by pairwise Frank–Wolfe with exact line search; the
//! spread of the gradient over the support bounds the suboptimality and is
//! reported as the KKT residual.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::partition::BlockSet;
use crate::tensor::{Axis, Index};

pub const INNER_TOL: f64 = 1e-10;
pub const REPORT_TOL: f64 = 1e-6;
pub const MULTISTART: usize = 16;
const MAX_ITERS: usize = 200_000;
const SUM_TOL: f64 = 1e-12;

/// Block ids with part sizes; optionally the rotation orbits of a
/// T-symmetric partition.
#[derive(Clone, Debug)]
pub struct BlockModel {
    ids: Vec<Index>,
    sizes: [Vec<usize>; 3],
    orbits: Option<Vec<Vec<usize>>>,
}

impl BlockModel {
    pub fn new(ids: Vec<Index>, part_sizes: [Vec<usize>; 3]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::input("no nonzero blocks"));
        }
        for a in 0..3 {
            if part_sizes[a].iter().any(|&s| s == 0) {
                return Err(Error::input("empty part"));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for id in &ids {
            if (0..3).any(|a| id[a] >= part_sizes[a].len()) {
                return Err(Error::input(format!("block {id:?} refers to a missing part")));
            }
            if !seen.insert(*id) {
                return Err(Error::input(format!("block {id:?} listed twice")));
            }
        }
        Ok(BlockModel {
            ids,
            sizes: part_sizes,
            orbits: None,
        })
    }

    pub fn from_blocks(bs: &BlockSet) -> Self {
        let p = bs.partition();
        BlockModel::new(bs.ids(), Axis::ALL.map(|a| p.part_sizes(a))).expect("block set yields a valid model")
    }

    /// Model with rotation orbits; fails unless the block set is T-symmetric.
    pub fn symmetric(bs: &BlockSet) -> Result<Self> {
        if !bs.is_t_symmetric() {
            return Err(Error::input("partition is not T-symmetric"));
        }
        let mut m = BlockModel::from_blocks(bs);
        m.orbits = Some(bs.rotation_orbits()?);
        Ok(m)
    }

    /// Attaches orbits `{ijk, jki, kij}` computed from the ids alone. The
    /// caller vouches that the blocks themselves are rotations of each other.
    pub fn with_rotation_orbits(mut self) -> Result<Self> {
        if self.sizes[0] != self.sizes[1] || self.sizes[0] != self.sizes[2] {
            return Err(Error::input("part sizes differ between axes"));
        }
        let pos: BTreeMap<Index, usize> = self.ids.iter().enumerate().map(|(n, id)| (*id, n)).collect();
        let mut seen = vec![false; self.ids.len()];
        let mut orbits = Vec::new();
        for (n, &[i, j, k]) in self.ids.iter().enumerate() {
            if seen[n] {
                continue;
            }
            seen[n] = true;
            let mut orbit = vec![n];
            for r in [[j, k, i], [k, i, j]] {
                let m = *pos
                    .get(&r)
                    .ok_or_else(|| Error::input(format!("block {:?} has no rotated partner {r:?}", [i, j, k])))?;
                if !seen[m] {
                    seen[m] = true;
                    orbit.push(m);
                }
            }
            orbits.push(orbit);
        }
        self.orbits = Some(orbits);
        Ok(self)
    }

    /// Block model of `T ⊗ rot(T) ⊗ rot²(T)` under the product partition, laid
    /// out as [`crate::partition::VariablePartition::cyclic_product`] does.
    pub fn cyclic_product(&self) -> Result<BlockModel> {
        let [sx, sy, sz] = &self.sizes;
        let (ny, nz) = (sy.len(), sz.len());
        let flat = |u: usize, v: usize, w: usize| (u * ny + v) * nz + w;
        let mut sizes = Vec::with_capacity(sx.len() * ny * nz);
        for a in sx {
            for b in sy {
                for c in sz {
                    sizes.push(a * b * c);
                }
            }
        }
        let mut ids = Vec::with_capacity(self.ids.len().pow(3));
        for e1 in &self.ids {
            for e2 in &self.ids {
                for e3 in &self.ids {
                    ids.push([
                        flat(e1[0], e2[1], e3[2]),
                        flat(e3[0], e1[1], e2[2]),
                        flat(e2[0], e3[1], e1[2]),
                    ]);
                }
            }
        }
        BlockModel::new(ids, [sizes.clone(), sizes.clone(), sizes])?.with_rotation_orbits()
    }

    pub fn ids(&self) -> &[Index] {
        &self.ids
    }

    pub fn num_blocks(&self) -> usize {
        self.ids.len()
    }

    pub fn part_sizes(&self, axis: Axis) -> &[usize] {
        &self.sizes[axis.index()]
    }

    pub fn orbits(&self) -> Option<&[Vec<usize>]> {
        self.orbits.as_deref()
    }

    pub fn position(&self, id: Index) -> Option<usize> {
        self.ids.iter().position(|b| *b == id)
    }

    pub fn marginals(&self, d: &BlockDistribution, axis: Axis) -> Vec<f64> {
        marginals(self, &d.p, axis.index())
    }

    fn atoms(&self, symmetric: bool) -> Vec<Vec<usize>> {
        match (&self.orbits, symmetric) {
            (Some(o), true) => o.clone(),
            _ => (0..self.ids.len()).map(|n| vec![n]).collect(),
        }
    }
}

fn marginals(model: &BlockModel, p: &[f64], a: usize) -> Vec<f64> {
    let mut m = vec![0.0; model.sizes[a].len()];
    for (id, pb) in model.ids.iter().zip(p) {
        m[id[a]] += pb;
    }
    m
}

fn log_p(model: &BlockModel, p: &[f64], a: usize) -> f64 {
    marginals(model, p, a)
        .iter()
        .zip(&model.sizes[a])
        .filter(|(m, _)| **m > 0.0)
        .map(|(m, s)| m * ((*s as f64).ln() - m.ln()))
        .sum()
}

/// A probability distribution on the nonzero blocks, in model order.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDistribution {
    ids: Vec<Index>,
    p: Vec<f64>,
}

impl BlockDistribution {
    pub fn new(model: &BlockModel, p: Vec<f64>) -> Result<Self> {
        if p.len() != model.num_blocks() {
            return Err(Error::input(format!(
                "distribution has {} entries, model has {} blocks",
                p.len(),
                model.num_blocks()
            )));
        }
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::input("probabilities must be finite and nonnegative"));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::input(format!("probabilities sum to {s}, not 1")));
        }
        Ok(BlockDistribution {
            ids: model.ids.clone(),
            p,
        })
    }

    /// Builds from a sparse map; mass on a block that is not in the model is rejected.
    pub fn from_map(model: &BlockModel, map: &BTreeMap<Index, f64>) -> Result<Self> {
        let mut p = vec![0.0; model.num_blocks()];
        for (id, v) in map {
            let n = model
                .position(*id)
                .ok_or_else(|| Error::input(format!("block {id:?} is not a nonzero block")))?;
            p[n] = *v;
        }
        BlockDistribution::new(model, p)
    }

    pub fn uniform(model: &BlockModel) -> Self {
        let n = model.num_blocks();
        BlockDistribution {
            ids: model.ids.clone(),
            p: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(model: &BlockModel, id: Index) -> Result<Self> {
        BlockDistribution::from_map(model, &BTreeMap::from([(id, 1.0)]))
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn ids(&self) -> &[Index] {
        &self.ids
    }

    pub fn get(&self, id: Index) -> f64 {
        self.ids.iter().position(|b| *b == id).map_or(0.0, |n| self.p[n])
    }

    /// Convex combination `t·self + (1−t)·other`.
    pub fn mix(&self, other: &BlockDistribution, t: f64) -> Result<Self> {
        if self.ids != other.ids {
            return Err(Error::input("distributions live on different block sets"));
        }
        Ok(BlockDistribution {
            ids: self.ids.clone(),
            p: self
                .p
                .iter()
                .zip(&other.p)
                .map(|(a, b)| t * a + (1.0 - t) * b)
                .collect(),
        })
    }

    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .ids
            .iter()
            .zip(&self.p)
            .filter(|(_, v)| **v > 1e-15)
            .map(|(id, v)| format!("T_{}{}{}={v:.9}", id[0], id[1], id[2]))
            .collect();
        parts.join(",")
    }
}

/// A distribution constant on rotation orbits.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricDistribution {
    inner: BlockDistribution,
}

impl SymmetricDistribution {
    pub fn new(model: &BlockModel, d: BlockDistribution) -> Result<Self> {
        let orbits = model
            .orbits()
            .ok_or_else(|| Error::input("model carries no rotation orbits"))?;
        for o in orbits {
            let first = d.p[o[0]];
            if o.iter().any(|&n| (d.p[n] - first).abs() > SUM_TOL) {
                return Err(Error::input("distribution is not constant on rotation orbits"));
            }
        }
        Ok(SymmetricDistribution { inner: d })
    }

    pub fn distribution(&self) -> &BlockDistribution {
        &self.inner
    }

    pub fn into_distribution(self) -> BlockDistribution {
        self.inner
    }
}

/// `log p_X, log p_Y, log p_Z` of a distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveValue {
    pub log: [f64; 3],
}

impl ObjectiveValue {
    pub fn log_of(&self, axis: Axis) -> f64 {
        self.log[axis.index()]
    }

    pub fn value(&self, axis: Axis) -> f64 {
        self.log_of(axis).exp()
    }

    pub fn px(&self) -> f64 {
        self.value(Axis::X)
    }

    pub fn min_log(&self) -> f64 {
        self.log.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_value(&self) -> f64 {
        self.min_log().exp()
    }

    pub fn weighted(&self, lambda: [f64; 3]) -> f64 {
        (0..3)
            .filter(|&a| lambda[a] > 0.0)
            .map(|a| lambda[a] * self.log[a])
            .sum()
    }
}

pub fn eval_px(model: &BlockModel, d: &BlockDistribution) -> ObjectiveValue {
    ObjectiveValue {
        log: [0, 1, 2].map(|a| log_p(model, &d.p, a)),
    }
}

/// Orbit-averaged distribution `(p(T_ijk) + p(T_jki) + p(T_kij)) / 3`.
pub fn symmetrize(model: &BlockModel, d: &BlockDistribution) -> Result<SymmetricDistribution> {
    let orbits = model
        .orbits()
        .ok_or_else(|| Error::input("partition is not T-symmetric"))?;
    let mut p = vec![0.0; d.p.len()];
    for o in orbits {
        // orbits of fixed blocks have one element; sum over the full rotation
        let [i, j, k] = model.ids[o[0]];
        let rot = [[i, j, k], [j, k, i], [k, i, j]];
        let total: f64 = rot.iter().map(|id| d.get(*id)).sum();
        for &n in o {
            p[n] = total / 3.0 * (3 / o.len()) as f64;
        }
    }
    SymmetricDistribution::new(model, BlockDistribution { ids: d.ids.clone(), p })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub iterations: usize,
    /// Max gradient minus min gradient over the support; bounds the
    /// suboptimality of the log objective.
    pub kkt_residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct Maximum {
    pub distribution: BlockDistribution,
    pub value: ObjectiveValue,
    /// `Σ_a λ_a log p_a` at the returned distribution.
    pub objective: f64,
    pub certificate: Certificate,
}

struct Problem<'a> {
    model: &'a BlockModel,
    lambda: [f64; 3],
    atoms: Vec<Vec<usize>>,
}

impl Problem<'_> {
    fn expand(&self, w: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.model.num_blocks()];
        for (o, wo) in self.atoms.iter().zip(w) {
            for &n in o {
                p[n] = wo / o.len() as f64;
            }
        }
        p
    }

    fn block_grad(&self, p: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; p.len()];
        for a in 0..3 {
            let l = self.lambda[a];
            if l <= 0.0 {
                continue;
            }
            let m = marginals(self.model, p, a);
            for (n, id) in self.model.ids.iter().enumerate() {
                let mi = m[id[a]];
                g[n] += if mi > 0.0 {
                    l * ((self.model.sizes[a][id[a]] as f64).ln() - mi.ln() - 1.0)
                } else {
                    f64::INFINITY
                };
            }
        }
        g
    }

    fn atom_grad(&self, w: &[f64]) -> Vec<f64> {
        let g = self.block_grad(&self.expand(w));
        self.atoms
            .iter()
            .map(|o| o.iter().map(|&n| g[n]).sum::<f64>() / o.len() as f64)
            .collect()
    }

    fn objective(&self, p: &[f64]) -> f64 {
        (0..3)
            .filter(|&a| self.lambda[a] > 0.0)
            .map(|a| self.lambda[a] * log_p(self.model, p, a))
            .sum()
    }
}

/// Maximizes `Σ_a λ_a log p_a` over `P(L)`, or over `P^sym(L)` when
/// `symmetric` is set (requires orbits on the model).
pub fn maximize_weighted(model: &BlockModel, lambda: [f64; 3], symmetric: bool) -> Result<Maximum> {
    maximize_weighted_capped(model, lambda, symmetric, MAX_ITERS)
}

fn maximize_weighted_capped(
    model: &BlockModel,
    lambda: [f64; 3],
    symmetric: bool,
    max_iters: usize,
) -> Result<Maximum> {
    if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::input("weights must be finite and nonnegative"));
    }
    if symmetric && model.orbits.is_none() {
        return Err(Error::input("partition is not T-symmetric"));
    }
    let prob = Problem {
        model,
        lambda,
        atoms: model.atoms(symmetric),
    };
    let k = prob.atoms.len();
    let mut w = vec![1.0 / k as f64; k];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        let g = prob.atom_grad(&w);
        let s = argmax(&g, |_| true);
        let v = argmin(&g, |n| w[n] > 0.0);
        residual = g[s] - g[v];
        if residual <= INNER_TOL || s == v {
            residual = residual.max(0.0);
            break;
        }
        iterations += 1;
        let cap = w[v];
        let slope = |gamma: f64| {
            let mut w2 = w.clone();
            w2[s] += gamma;
            w2[v] -= gamma;
            let g2 = prob.atom_grad(&w2);
            g2[s] - g2[v]
        };
        let gamma = line_search(slope, cap);
        if gamma <= 0.0 {
            break;
        }
        w[s] += gamma;
        w[v] -= gamma;
        if w[v] < 1e-300 {
            w[v] = 0.0;
        }
    }
    let p = prob.expand(&w);
    let distribution = BlockDistribution {
        ids: model.ids.clone(),
        p,
    };
    let value = eval_px(model, &distribution);
    let objective = prob.objective(&distribution.p);
    let converged = residual <= REPORT_TOL * 1e-2;
    Ok(Maximum {
        distribution,
        value,
        objective,
        certificate: Certificate {
            iterations,
            kkt_residual: residual,
            converged,
        },
    })
}

/// `sup_{p ∈ P^sym(L)} p_X`.
pub fn maximize_symmetric(model: &BlockModel) -> Result<(SymmetricDistribution, Maximum)> {
    let m = maximize_weighted(model, [1.0, 0.0, 0.0], true)?;
    if !m.certificate.converged {
        return Err(Error::Convergence(format!(
            "symmetric maximization stalled with KKT residual {:.3e}",
            m.certificate.kkt_residual
        )));
    }
    let sym = SymmetricDistribution::new(model, m.distribution.clone())?;
    Ok((sym, m))
}

#[derive(Clone, Debug)]
pub struct MinMax {
    pub distribution: BlockDistribution,
    pub value: ObjectiveValue,
    /// `min_a log p_a` at `distribution`.
    pub min_log: f64,
    /// Upper bound on the true maximum of `min_a log p_a`.
    pub dual_bound_log: f64,
    pub lambda: [f64; 3],
    pub starts: usize,
}

impl MinMax {
    pub fn gap(&self) -> f64 {
        (self.dual_bound_log - self.min_log).max(0.0)
    }
}

/// `sup_{p ∈ P(L)} min{p_X, p_Y, p_Z}`.
///
/// Primal: seeded multistart projected supergradient ascent. Dual:
/// `min_{λ ∈ Δ_3} max_p Σ λ_a log p_a` by nested golden-section search, each
/// inner maximizer also serving as a primal candidate. The reported value is
/// the best primal candidate; `dual_bound_log` certifies it.
pub fn maximize_minmax(model: &BlockModel, seed: u64) -> Result<MinMax> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    let offer = |p: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        let h = (0..3).map(|a| log_p(model, &p, a)).fold(f64::INFINITY, f64::min);
        if best.as_ref().map_or(true, |(b, _)| h > *b) {
            *best = Some((h, p));
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.num_blocks();
    for start in 0..MULTISTART {
        let p0 = match start {
            0 => vec![1.0 / n as f64; n],
            s if s % 2 == 1 => {
                let v = rng.gen_range(0..n);
                let mut p = vec![0.5 / n as f64; n];
                p[v] += 0.5;
                p
            }
            _ => {
                let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / s).collect()
            }
        };
        let p = supergradient_ascent(model, p0);
        offer(p, &mut best);
    }

    // ∂g/∂λ_a − ∂g/∂λ_3 = f_a − f_3 at the inner maximizer (Danskin); g is
    // convex, so bisection on these signs locates the dual minimizer. Edges of
    // the λ-triangle are evaluated exactly: near them the inner problem is
    // badly conditioned.
    let mut dual = f64::INFINITY;
    let mut solve = |l1: f64, l2: f64, best: &mut Option<(f64, Vec<f64>)>| -> Result<[f64; 3]> {
        let l3 = (1.0 - l1 - l2).max(0.0);
        let m = maximize_weighted_capped(model, [l1, l2, l3], false, DUAL_INNER_ITERS)?;
        dual = dual.min(m.objective + m.certificate.kkt_residual);
        offer(m.distribution.p.clone(), best);
        Ok(m.value.log)
    };
    // returns (λ_2, f, whether λ_3 = 0 was chosen)
    let mut inner = |l1: f64, best: &mut Option<(f64, Vec<f64>)>| -> Result<(f64, [f64; 3], bool)> {
        let top = (1.0 - l1).max(0.0);
        let f = solve(l1, top, best)?;
        if f[1] - f[2] <= 0.0 || top == 0.0 {
            return Ok((top, f, true));
        }
        let f = solve(l1, 0.0, best)?;
        if f[1] - f[2] >= 0.0 {
            return Ok((0.0, f, false));
        }
        let (mut lo, mut hi) = (0.0, top);
        let mut f = f;
        for _ in 0..DUAL_STEPS {
            let mid = 0.5 * (lo + hi);
            if hi - lo < 1e-13 {
                break;
            }
            f = solve(l1, mid, best)?;
            let d = f[1] - f[2];
            if d.abs() < 1e-13 {
                return Ok((mid, f, false));
            }
            if d > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok((0.5 * (lo + hi), f, false))
    };
    // derivative of min_{λ_2} g(λ_1, λ_2) in λ_1 by the envelope rule
    let outer_slope = |f: [f64; 3], on_edge: bool| if on_edge { f[0] - f[1] } else { f[0] - f[2] };
    let mut pick = |l1: f64, best: &mut Option<(f64, Vec<f64>)>| -> Result<(f64, f64)> {
        let (l2, f, edge) = inner(l1, best)?;
        Ok((l2, outer_slope(f, edge)))
    };
    let (mut l1, mut l2);
    let (a_hi, d_hi) = pick(1.0, &mut best)?;
    let (a_lo, d_lo) = pick(0.0, &mut best)?;
    if d_hi <= 0.0 {
        (l1, l2) = (1.0, a_hi);
    } else if d_lo >= 0.0 {
        (l1, l2) = (0.0, a_lo);
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        (l1, l2) = (0.5, 0.0);
        for _ in 0..DUAL_STEPS {
            if hi - lo < 1e-13 {
                break;
            }
            l1 = 0.5 * (lo + hi);
            let (a2, d) = pick(l1, &mut best)?;
            l2 = a2;
            if d.abs() < 1e-13 {
                break;
            }
            if d > 0.0 {
                hi = l1;
            } else {
                lo = l1;
            }
        }
    }

    let (h, p) = best.expect("at least one candidate");
    let distribution = BlockDistribution {
        ids: model.ids.clone(),
        p,
    };
    let value = eval_px(model, &distribution);
    Ok(MinMax {
        distribution,
        value,
        min_log: h,
        dual_bound_log: dual.max(h),
        lambda: [l1, l2, (1.0 - l1 - l2).max(0.0)],
        starts: MULTISTART,
    })
}

fn supergradient_ascent(model: &BlockModel, mut p: Vec<f64>) -> Vec<f64> {
    let mut best = p.clone();
    let mut best_h = f64::NEG_INFINITY;
    for k in 0..3000 {
        let logs = [0, 1, 2].map(|a| log_p(model, &p, a));
        let (a, h) = logs
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (a, v)| if *v < acc.1 { (a, *v) } else { acc });
        if h > best_h {
            best_h = h;
            best.clone_from(&p);
        }
        let m = marginals(model, &p, a);
        let g: Vec<f64> = model
            .ids
            .iter()
            .map(|id| {
                let mi = m[id[a]].max(1e-12);
                (model.sizes[a][id[a]] as f64).ln() - mi.ln() - 1.0
            })
            .collect();
        let norm = g.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-12);
        let step = 0.1 / ((k + 1) as f64).sqrt() / norm;
        let y: Vec<f64> = p.iter().zip(&g).map(|(pi, gi)| pi + step * gi).collect();
        p = project_simplex(&y);
    }
    best
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// Root of a nonincreasing slope on `[0, cap]` (or `cap` if the slope stays
/// nonnegative), by bisection until both ends are finite, then Illinois.
fn line_search(slope: impl Fn(f64) -> f64, cap: f64) -> f64 {
    let f_hi = slope(cap);
    if f_hi >= 0.0 {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    let (mut f_lo, mut f_hi) = (slope(0.0), f_hi);
    let mut side = 0i8;
    for _ in 0..200 {
        let x = if f_lo.is_finite() && f_hi.is_finite() {
            let x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
            if x > lo && x < hi {
                x
            } else {
                0.5 * (lo + hi)
            }
        } else {
            0.5 * (lo + hi)
        };
        if x <= lo || x >= hi {
            break;
        }
        let fx = slope(x);
        if fx.abs() < 1e-14 {
            return x;
        }
        if fx > 0.0 {
            lo = x;
            f_lo = fx;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            f_hi = fx;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
        if hi - lo <= 1e-17 * cap.max(1e-300) {
            break;
        }
    }
    lo
}

const DUAL_STEPS: usize = 60;
const DUAL_INNER_ITERS: usize = 20_000;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_min(lo: f64, hi: f64, tol: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let (mut a, mut b) = (lo, hi);
    if b - a <= tol {
        let m = 0.5 * (a + b);
        return Ok((m, f(m)?));
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    // endpoints matter for kinked convex functions pinned at the boundary
    let mut cands = vec![(c, fc), (d, fd), (lo, f(lo)?), (hi, f(hi)?)];
    cands.sort_by(|x, y| x.1.total_cmp(&y.1));
    Ok(cands[0])
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn maximize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let (x, v) = golden_min(lo, hi, 1e-10 * (hi - lo), |x| Ok(-f(x))).expect("infallible");
    (x, -v)
}

/// Maximizes a differentiable concave function by bisection on the sign of
/// its derivative; accurate to floating-point resolution in the argmax.
pub fn maximize_1d_by_derivative(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if df(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn argmax(g: &[f64], ok: impl Fn(usize) -> bool) -> usize {
    let mut best = usize::MAX;
    for (n, v) in g.iter().enumerate() {
        if ok(n) && (best == usize::MAX || *v > g[best]) {
            best = n;
        }
    }
    best
}

fn argmin(g: &[f64], ok: impl Fn(usize) -> bool) -> usize {
    let mut best = usize::MAX;
    for (n, v) in g.iter().enumerate() {
        if ok(n) && (best == usize::MAX || *v < g[best]) {
            best = n;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::*;
    use crate::partition::{blocks, VariablePartition};

    fn cw_model(q: usize) -> BlockModel {
        let t = make_cw(q, &identity_sigma(q)).unwrap();
        BlockModel::symmetric(&blocks(&t, &cw_partition(q)).unwrap()).unwrap()
    }

    fn cw_closed_form(q: usize) -> f64 {
        let q = q as f64;
        let h = |v: f64| {
            2.0 * (1.0 / 3.0 - v) * q.ln()
                - v * v.ln()
                - (2.0 / 3.0 - 2.0 * v) * (2.0 / 3.0 - 2.0 * v).ln()
                - (1.0 / 3.0 + v) * (1.0 / 3.0 + v).ln()
        };
        let (_, v) = maximize_1d(h, 1e-15, 1.0 / 3.0 - 1e-15);
        v.exp()
    }

    #[test]
    fn cw_symmetric_matches_one_parameter_family() {
        for q in 1..=8 {
            let (_, m) = maximize_symmetric(&cw_model(q)).unwrap();
            assert!((m.value.px() - cw_closed_form(q)).abs() < 1e-8, "q={q}");
        }
        let (_, m) = maximize_symmetric(&cw_model(5)).unwrap();
        assert!((m.value.px() - 5.77629).abs() < 1e-4);
    }

    #[test]
    fn cw_small_uniform() {
        let q = 4;
        let t = make_cw_small(q, &identity_sigma(q)).unwrap();
        let m = BlockModel::symmetric(&blocks(&t, &cw_small_partition(q)).unwrap()).unwrap();
        let v = eval_px(&m, &BlockDistribution::uniform(&m)).px();
        let want = 3.0 / 2f64.powf(2.0 / 3.0) * (q as f64).powf(2.0 / 3.0);
        assert!((v - want).abs() < 1e-12);
    }

    #[test]
    fn point_mass_on_singleton_part() {
        let m = cw_model(2);
        let d = BlockDistribution::point_mass(&m, [0, 0, 2]).unwrap();
        assert!((eval_px(&m, &d).px() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn corner_mass_value() {
        let m = cw_model(3);
        let mut map = BTreeMap::new();
        for id in [[0, 0, 2], [0, 2, 0], [2, 0, 0]] {
            map.insert(id, 1.0 / 3.0);
        }
        let d = BlockDistribution::from_map(&m, &map).unwrap();
        let want = (1.0f64 / 3.0).powf(-1.0 / 3.0) * (2.0f64 / 3.0).powf(-2.0 / 3.0);
        assert!((eval_px(&m, &d).px() - want).abs() < 1e-12);
    }

    #[test]
    fn mass_on_missing_block_rejected() {
        let m = cw_model(1);
        let map = BTreeMap::from([([1, 1, 1], 1.0)]);
        assert!(BlockDistribution::from_map(&m, &map).is_err());
        assert!(BlockDistribution::new(&m, vec![0.5; 6]).is_err());
    }

    #[test]
    fn symmetrize_point_mass() {
        let m = cw_model(2);
        let d = BlockDistribution::point_mass(&m, [0, 0, 2]).unwrap();
        let s = symmetrize(&m, &d).unwrap();
        for id in [[0, 0, 2], [0, 2, 0], [2, 0, 0]] {
            assert!((s.distribution().get(id) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(s.distribution().get([0, 1, 1]), 0.0);
    }

    #[test]
    fn minmax_agrees_with_symmetric() {
        for q in [1, 2, 3] {
            let m = cw_model(q);
            let (_, sym) = maximize_symmetric(&m).unwrap();
            let mm = maximize_minmax(&m, 7).unwrap();
            assert!((mm.min_log.exp() - sym.value.px()).abs() < 1e-6, "q={q}");
            assert!(mm.gap() < 1e-6);
        }
    }

    #[test]
    fn minmax_single_block() {
        let t = make_matmul(2, 3, 4);
        let p = VariablePartition::trivial(t.dims());
        let m = BlockModel::from_blocks(&blocks(&t, &p).unwrap());
        let mm = maximize_minmax(&m, 1).unwrap();
        assert!((mm.min_log.exp() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn minmax_tq_lower_two() {
        let t = make_cyclic_lower(2);
        let m = BlockModel::from_blocks(&blocks(&t, &VariablePartition::singletons(t.dims())).unwrap());
        let mm = maximize_minmax(&m, 0).unwrap();
        assert!((mm.min_log.exp() - 1.88988).abs() < 1e-4);
    }

    #[test]
    fn one_dimensional() {
        let (x, _) = maximize_1d(|v| -(v - 0.1) * (v - 0.1), 0.0, 1.0 / 3.0);
        assert!((x - 0.1).abs() < 1e-9);
        let (x, _) = maximize_1d_by_derivative(|v| -(v - 0.1) * (v - 0.1), |v| -2.0 * (v - 0.1), 0.0, 1.0);
        assert!((x - 0.1).abs() < 1e-14);
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.9, 0.9, -1.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && p[2] == 0.0);
    }

    #[test]
    fn cyclic_product_model_matches_materialized() {
        let t = make_t112(1);
        let p = t112_partition(1);
        let base = BlockModel::from_blocks(&blocks(&t, &p).unwrap());
        let abstract_model = base.cyclic_product().unwrap();
        let ts = crate::tensor::cyclic_symmetrization(&t);
        let bs = blocks(&ts, &p.cyclic_product()).unwrap();
        let mut a: Vec<Index> = abstract_model.ids().to_vec();
        a.sort();
        assert_eq!(a, bs.ids());
        assert_eq!(
            abstract_model.part_sizes(Axis::X),
            &bs.partition().part_sizes(Axis::X)[..]
        );
    }
}
