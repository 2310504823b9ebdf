//! Slice-rank upper bounds, laser lower bounds and the ω lower bounds built on
//! them.

use std::fmt;

use crate::error::{Error, Result};
use crate::families::{make_t112, t112_partition};
use crate::optimizer::{
    eval_px, maximize_1d_by_derivative, maximize_minmax, maximize_symmetric, maximize_weighted, BlockDistribution,
    BlockModel, REPORT_TOL,
};
use crate::partition::{blocks, is_t_symmetric_partition, BlockSet, VariablePartition};
use crate::rank::{m_value, measure, recognize_matmul, x_rank, MatmulShape};
use crate::tensor::{cyclic_symmetrization, AssertedFact, Axis, Index, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    SliceRankUpper,
    SliceRankLower,
    OmegaLower,
    ValueV,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::SliceRankUpper => "slice_rank_upper",
            Quantity::SliceRankLower => "slice_rank_lower",
            Quantity::OmegaLower => "omega_lower",
            Quantity::ValueV => "value_V",
        })
    }
}

/// Data from which a bound was derived.
#[derive(Clone, Debug)]
pub enum Evidence {
    Measures(Vec<u128>),
    Distribution {
        distribution: BlockDistribution,
        kkt_residual: f64,
        /// Dual gap of the max-min solver (log domain), when it was used.
        dual_gap: Option<f64>,
        symmetric: bool,
    },
    RemoveX(RemoveXData),
    Omega {
        r_tilde: f64,
        s_upper: f64,
        symmetric: bool,
    },
    Laser {
        distribution: BlockDistribution,
        rates: LaserRates,
        readiness: LaserReadiness,
    },
    T112(T112Data),
}

impl Evidence {
    pub fn summary(&self) -> String {
        match self {
            Evidence::Measures(m) => {
                let parts: Vec<String> = m.iter().map(|v| v.to_string()).collect();
                format!("measures=[{}]", parts.join(","))
            }
            Evidence::Distribution {
                distribution,
                kkt_residual,
                dual_gap,
                symmetric,
            } => {
                let gap = dual_gap.map(|g| format!(";dual_gap={g:.3e}")).unwrap_or_default();
                format!(
                    "p={{{}}};symmetric={symmetric};kkt={kkt_residual:.3e}{gap}",
                    distribution.summary()
                )
            }
            Evidence::RemoveX(d) => format!(
                "Sx(A)={};m(A)={};Sx(B)={};S~(B)<={};p={:.9};proof_rate={:.9}",
                d.sx_a, d.m_a, d.sx_b, d.s_tilde_b, d.p, d.proof_rate
            ),
            Evidence::Omega {
                r_tilde,
                s_upper,
                symmetric,
            } => format!("R~={r_tilde};S~<={s_upper:.9};symmetric={symmetric}"),
            Evidence::Laser {
                distribution,
                rates,
                readiness,
            } => format!(
                "p={{{}}};ell={};log_multiplicity={:.9};log_side={:.9};log_pX={:.9}",
                distribution.summary(),
                readiness.ell.map_or("-".into(), |l| l.to_string()),
                rates.log_multiplicity,
                rates.log_side,
                rates.log_px
            ),
            Evidence::T112(d) => format!(
                "argmax_v={:.12};one_param={:.9};product={:.9};ts_laser={:.9};closed_form={:.9};ts_checked={}",
                d.argmax_v,
                d.one_param_value,
                d.product_value,
                d.ts_laser_value,
                d.closed_form,
                d.ts_checked.map_or("skipped".into(), |b| b.to_string())
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundReport {
    pub quantity: Quantity,
    pub value: f64,
    pub theorem: &'static str,
    pub evidence: Evidence,
    pub inputs_asserted: Vec<AssertedFact>,
    /// The value is both an upper and a lower bound.
    pub tight: bool,
}

impl BoundReport {
    /// `quantity value theorem certificate-summary citations`, tab separated.
    pub fn to_line(&self) -> String {
        let cites: Vec<String> = self.inputs_asserted.iter().map(|f| f.summary()).collect();
        let cites = if cites.is_empty() {
            "-".to_string()
        } else {
            cites.join("; ")
        };
        format!(
            "{}\t{:.9}\t{}\t{}\t{}",
            self.quantity,
            self.value,
            self.theorem,
            self.evidence.summary(),
            cites
        )
    }
}

/// `S~(T) ≤ Σ μ(T_i)^{1/3}` for an exact decomposition `T = Σ T_i`.
pub fn bound_mu_sum(t: &Tensor, parts: &[Tensor]) -> Result<BoundReport> {
    if parts.is_empty() {
        return Err(Error::input("empty decomposition"));
    }
    let mut sum = Tensor::zero(t.dims());
    for (n, part) in parts.iter().enumerate() {
        if part.dims() != t.dims() {
            return Err(Error::input(format!(
                "part {n} has shape {:?}, tensor has {:?}",
                part.dims(),
                t.dims()
            )));
        }
        sum = sum.add(part)?;
    }
    if let Some(idx) = first_difference(&sum, t) {
        return Err(Error::input(format!(
            "parts do not sum to the tensor: entry {idx:?} is {} in the sum, {} in the tensor",
            sum.coefficient(idx),
            t.coefficient(idx)
        )));
    }
    let measures: Vec<u128> = parts.iter().map(measure).collect();
    let value = measures.iter().map(|m| (*m as f64).cbrt()).sum();
    Ok(BoundReport {
        quantity: Quantity::SliceRankUpper,
        value,
        theorem: "measure-sum",
        evidence: Evidence::Measures(measures),
        inputs_asserted: Vec::new(),
        tight: false,
    })
}

fn first_difference(a: &Tensor, b: &Tensor) -> Option<Index> {
    let mut keys: Vec<Index> = a.support().chain(b.support()).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter().find(|k| a.coefficient(*k) != b.coefficient(*k))
}

/// `S~(T) ≤ sup_p min{p_X, p_Y, p_Z}`; over symmetric distributions when the
/// partition is T-symmetric.
pub fn bound_partition(t: &Tensor, p: &VariablePartition, seed: u64) -> Result<BoundReport> {
    let bs = blocks(t, p)?;
    let symmetric = is_t_symmetric_partition(t, p);
    let (value, evidence) = if symmetric {
        let model = BlockModel::symmetric(&bs)?;
        let (_, m) = maximize_symmetric(&model)?;
        (
            m.value.px(),
            Evidence::Distribution {
                distribution: m.distribution,
                kkt_residual: m.certificate.kkt_residual,
                dual_gap: None,
                symmetric: true,
            },
        )
    } else {
        let model = BlockModel::from_blocks(&bs);
        let mm = maximize_minmax(&model, seed)?;
        if mm.gap() > REPORT_TOL {
            return Err(Error::Convergence(format!(
                "max-min primal/dual gap {:.3e} exceeds {REPORT_TOL:e}",
                mm.gap()
            )));
        }
        (
            mm.min_log.exp(),
            Evidence::Distribution {
                distribution: mm.distribution.clone(),
                kkt_residual: 0.0,
                dual_gap: Some(mm.gap()),
                symmetric: false,
            },
        )
    };
    Ok(BoundReport {
        quantity: Quantity::SliceRankUpper,
        value,
        theorem: if symmetric {
            "partition-symmetric"
        } else {
            "partition-minmax"
        },
        evidence,
        inputs_asserted: t.facts().to_vec(),
        tight: false,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemoveXData {
    pub sx_a: usize,
    pub m_a: usize,
    pub sx_b: usize,
    pub s_tilde_b: f64,
    pub p: f64,
    /// `max_κ H(κ) + min{κ log S_x(A) + (1−κ) log S_x(B), κ log m(A) + (1−κ) log S~(B)}`,
    /// exponentiated: the rate the binomial expansion argument supports.
    pub proof_rate: f64,
}

impl RemoveXData {
    /// The closed form is at least the binomial rate.
    pub fn closed_form_dominates(&self, value: f64) -> bool {
        value >= self.proof_rate * (1.0 - 1e-12)
    }
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn entropy(k: f64) -> f64 {
    -xlogx(k) - xlogx(1.0 - k)
}

/// `S~(A + B) ≤ (m(A)/((1−p)·S_x(A)))^{1−p} / p^p`, with `p` the crossing point
/// of the two binomial estimates. `s_tilde_b` is an asserted upper bound on
/// `S~(B)`.
pub fn bound_remove_x(t: &Tensor, a: &Tensor, b: &Tensor, s_tilde_b: f64) -> Result<BoundReport> {
    if a.dims() != t.dims() || b.dims() != t.dims() {
        return Err(Error::input("A, B and T must share variable sets"));
    }
    let sum = a.add(b)?;
    if let Some(idx) = first_difference(&sum, t) {
        return Err(Error::input(format!("A + B differs from T at entry {idx:?}")));
    }
    let (sx_a, m_a, sx_b) = (x_rank(a), m_value(a), x_rank(b));
    if sx_a == 0 || sx_b == 0 {
        return Err(Error::Inapplicable("A and B must both be nonzero".into()));
    }
    if !(s_tilde_b > 0.0) || s_tilde_b > sx_b as f64 * (1.0 + 1e-12) {
        return Err(Error::input(format!(
            "S~(B) bound {s_tilde_b} must lie in (0, S_x(B) = {sx_b}]"
        )));
    }
    let s_tilde_b = s_tilde_b.min(sx_b as f64);
    let la = (m_a as f64 / sx_a as f64).ln();
    let lb = (sx_b as f64 / s_tilde_b).ln();
    if la + lb <= 0.0 {
        return Err(Error::Inapplicable(
            "m(A) = S_x(A) and S_x(B) = S~(B): the exponent p is 0/0".into(),
        ));
    }
    let p = lb / (la + lb);
    let head = if p >= 1.0 {
        1.0
    } else {
        (m_a as f64 / ((1.0 - p) * sx_a as f64)).powf(1.0 - p)
    };
    let value = head / if p > 0.0 { p.powf(p) } else { 1.0 };

    // Below p the second estimate is the smaller one, above p the first.
    let l1 = |k: f64| entropy(k) + k * (sx_a as f64).ln() + (1.0 - k) * (sx_b as f64).ln();
    let l2 = |k: f64| entropy(k) + k * (m_a as f64).ln() + (1.0 - k) * s_tilde_b.ln();
    let k1 = sx_a as f64 / (sx_a + sx_b) as f64;
    let k2 = m_a as f64 / (m_a as f64 + s_tilde_b);
    let proof_rate = l2(k2.min(p)).max(l1(k1.max(p))).exp();

    Ok(BoundReport {
        quantity: Quantity::SliceRankUpper,
        value,
        theorem: "remove-x",
        evidence: Evidence::RemoveX(RemoveXData {
            sx_a,
            m_a,
            sx_b,
            s_tilde_b,
            p,
            proof_rate,
        }),
        inputs_asserted: t.facts().to_vec(),
        tight: false,
    })
}

/// Lower bound on `ω_u` from an asymptotic-rank value and a slice-rank upper
/// bound: `2 log R~ / log s` for variable-symmetric tensors, otherwise
/// `6 log R~ / (log s + 2 log R~)`. Clamped to at least 2.
pub fn omega_lower(r_tilde: &AssertedFact, s_upper: f64, symmetric: bool) -> Result<BoundReport> {
    let r = r_tilde.value;
    if !(r > 1.0) {
        return Err(Error::input(format!("asymptotic rank {r} must exceed 1")));
    }
    if !(s_upper > 1.0) {
        return Err(Error::input(format!("slice-rank bound {s_upper} must exceed 1")));
    }
    if s_upper > r * (1.0 + 1e-12) {
        return Err(Error::input(format!(
            "slice-rank bound {s_upper} exceeds the asymptotic rank {r}"
        )));
    }
    let s = s_upper.min(r);
    let raw = if symmetric {
        2.0 * r.ln() / s.ln()
    } else {
        6.0 * r.ln() / (s.ln() + 2.0 * r.ln())
    };
    Ok(BoundReport {
        quantity: Quantity::OmegaLower,
        value: raw.max(2.0),
        theorem: if symmetric { "omega-symmetric" } else { "omega-general" },
        evidence: Evidence::Omega {
            r_tilde: r,
            s_upper: s,
            symmetric,
        },
        inputs_asserted: vec![r_tilde.clone()],
        tight: false,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaserReadiness {
    pub ok: bool,
    pub ell: Option<i64>,
    /// Matmul shape recognized for every nonzero block (`None` if not recognized).
    pub shapes: Vec<(Index, Option<(usize, usize, usize)>)>,
    pub diagnostics: Vec<String>,
}

/// Checks the three laser-ready conditions: blocks are maximal matrix
/// multiplication tensors, nonzero blocks lie on a grade hyperplane
/// `g(i) + g(j) + g(k) = ℓ`, and the tensor and partition are symmetric.
///
/// With `assume_degeneration` the first condition is taken as certified by the
/// caller; shapes are still reported when recognized.
pub fn laser_ready(t: &Tensor, p: &VariablePartition, assume_degeneration: bool) -> Result<LaserReadiness> {
    let bs = blocks(t, p)?;
    Ok(laser_ready_blocks(t, &bs, assume_degeneration))
}

fn laser_ready_blocks(t: &Tensor, bs: &BlockSet, assume_degeneration: bool) -> LaserReadiness {
    let p = bs.partition();
    let mut diagnostics = Vec::new();

    if !t.is_variable_symmetric() {
        diagnostics.push("condition (3): tensor is not variable-symmetric".to_string());
    } else if !bs.is_t_symmetric() {
        diagnostics.push("condition (3): partition is not T-symmetric".to_string());
    }

    let grade = |a: Axis, i: usize| p.parts(a)[i].grade;
    let mut ell = None;
    for id in bs.ids() {
        let g = grade(Axis::X, id[0]) + grade(Axis::Y, id[1]) + grade(Axis::Z, id[2]);
        match ell {
            None => ell = Some(g),
            Some(l) if l != g => {
                diagnostics.push(format!(
                    "condition (2): block {} has grade sum {g}, others {l}",
                    bs.name(id)
                ));
                ell = None;
                break;
            }
            _ => {}
        }
    }

    let mut shapes = Vec::new();
    for (id, b) in bs.iter() {
        let shape = recognize_matmul(b).map(|MatmulShape { a, b, c, .. }| (a, b, c));
        if shape.is_none() && !assume_degeneration {
            diagnostics.push(format!(
                "condition (1): block {} is not a maximal matrix multiplication tensor",
                bs.name(*id)
            ));
        }
        shapes.push((*id, shape));
    }

    LaserReadiness {
        ok: diagnostics.is_empty(),
        ell,
        shapes,
        diagnostics,
    }
}

/// Exponential rates of the laser degeneration `(∏ p(X_i)^{-p(X_i)})^n ⊙ ⟨a,a,a⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaserRates {
    /// `−Σ p(X_i) log p(X_i)`.
    pub log_multiplicity: f64,
    /// `(1/2) Σ p(T_ijk) log|X_i|`: per-copy log of the side length `a`.
    pub log_side: f64,
    pub log_px: f64,
}

impl LaserRates {
    pub fn of(model: &BlockModel, d: &BlockDistribution) -> Self {
        let m = model.marginals(d, Axis::X);
        let sizes = model.part_sizes(Axis::X);
        let log_multiplicity = -m.iter().map(|v| xlogx(*v)).sum::<f64>();
        let log_side = 0.5
            * d.ids()
                .iter()
                .zip(d.probs())
                .map(|(id, pb)| pb * (sizes[id[0]] as f64).ln())
                .sum::<f64>();
        LaserRates {
            log_multiplicity,
            log_side,
            log_px: eval_px(model, d).log_of(Axis::X),
        }
    }

    pub fn identity_residual(&self) -> f64 {
        (self.log_multiplicity + 2.0 * self.log_side - self.log_px).abs()
    }
}

const RATE_TOL: f64 = 1e-10;

/// Laser lower bound on a laser-ready partition. Its value is the symmetric
/// maximum of `p_X`, so it coincides with the partition upper bound and is
/// reported as `S~ = Q~`.
pub fn laser_lower_bound(t: &Tensor, p: &VariablePartition, assume_degeneration: bool) -> Result<BoundReport> {
    let bs = blocks(t, p)?;
    let readiness = laser_ready_blocks(t, &bs, assume_degeneration);
    if !readiness.ok {
        return Err(Error::Inapplicable(format!(
            "partition is not laser-ready: {}",
            readiness.diagnostics.join("; ")
        )));
    }
    let model = BlockModel::symmetric(&bs)?;
    let (value, distribution, rates) = laser_on_model(&model)?;
    Ok(BoundReport {
        quantity: Quantity::SliceRankLower,
        value,
        theorem: "laser",
        evidence: Evidence::Laser {
            distribution,
            rates,
            readiness,
        },
        inputs_asserted: t.facts().to_vec(),
        tight: true,
    })
}

fn laser_on_model(model: &BlockModel) -> Result<(f64, BlockDistribution, LaserRates)> {
    let (sym, m) = maximize_symmetric(model)?;
    let distribution = sym.into_distribution();
    let rates = LaserRates::of(model, &distribution);
    if rates.identity_residual() > RATE_TOL {
        return Err(Error::Convergence(format!(
            "laser rates do not recombine to log p_X (residual {:.3e})",
            rates.identity_residual()
        )));
    }
    Ok((m.value.px(), distribution, rates))
}

#[derive(Clone, Debug, PartialEq)]
pub struct T112Data {
    pub q: usize,
    /// Maximizer of the one-parameter family (mass `v` on each of `T_010`, `T_100`).
    pub argmax_v: f64,
    /// `(2q)^2 (q^2)^{2v} / ((2v)^{2v} (1/2 − v)^{1−2v})` at `argmax_v`.
    pub one_param_value: f64,
    /// `sup_{p ∈ P(L)} p_X p_Y p_Z` over all four blocks.
    pub product_value: f64,
    /// Laser value of `t_s` under the product partition.
    pub ts_laser_value: f64,
    /// `4 q^2 (q^2 + 2)`.
    pub closed_form: f64,
    /// Whether the materialized `t_s` was checked to be symmetric and
    /// laser-ready (`None` when above the materialization cap).
    pub ts_checked: Option<bool>,
}

pub const T112_MATERIALIZE_CAP: usize = 2;

/// Log of the one-parameter objective for `S~(t_s)` and its derivative.
pub fn t112_family(q: usize) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let lq2 = (q as f64 * q as f64).ln();
    let l2q = (2.0 * q as f64).ln();
    let f = move |v: f64| 2.0 * l2q + 2.0 * v * lq2 - xlogx(2.0 * v) - (1.0 - 2.0 * v) * (0.5 - v).ln();
    let df = move |v: f64| 2.0 * (lq2 - (2.0 * v).ln() + (0.5 - v).ln());
    (f, df)
}

/// `V_{2/3}(t_112)` through `S~(t_s) = V_{2/3}^3`, with three independent
/// computations of `S~(t_s)`.
pub fn value_t112(q: usize, materialize_cap: usize) -> Result<BoundReport> {
    if q == 0 {
        return Err(Error::input("q must be at least 1"));
    }
    let t = make_t112(q);
    let part = t112_partition(q);
    let bs = blocks(&t, &part)?;
    let base = BlockModel::from_blocks(&bs);

    let (f, df) = t112_family(q);
    let (argmax_v, one_param_log) = maximize_1d_by_derivative(f, df, 0.0, 0.5);

    let prod = maximize_weighted(&base, [1.0, 1.0, 1.0], false)?;
    if !prod.certificate.converged {
        return Err(Error::Convergence("t_112 product maximization stalled".into()));
    }
    let product_log = prod.objective;

    let ts_model = base.cyclic_product()?;
    let (ts_laser_value, _, _) = laser_on_model(&ts_model)?;

    let ts_checked = if q <= materialize_cap {
        let ts = cyclic_symmetrization(&t);
        let r = laser_ready(&ts, &part.cyclic_product(), false)?;
        Some(ts.is_variable_symmetric() && r.ok)
    } else {
        None
    };

    let qf = q as f64;
    let closed_form = 4.0 * qf * qf * (qf * qf + 2.0);
    Ok(BoundReport {
        quantity: Quantity::ValueV,
        value: (product_log / 3.0).exp(),
        theorem: "t112-value",
        evidence: Evidence::T112(T112Data {
            q,
            argmax_v,
            one_param_value: one_param_log.exp(),
            product_value: product_log.exp(),
            ts_laser_value,
            closed_form,
            ts_checked,
        }),
        inputs_asserted: Vec::new(),
        tight: true,
    })
}

/// `2^{2/3} q^{2/3} (q^2 + 2)^{1/3}`.
pub fn t112_value_closed_form(q: usize) -> f64 {
    let q = q as f64;
    2f64.powf(2.0 / 3.0) * q.powf(2.0 / 3.0) * (q * q + 2.0).cbrt()
}

/// Known lower bound `2^{2/3} q^τ (q^{3τ} + 2)^{1/3}` on `V_τ(t_112)`, τ ∈ [2/3, 1].
pub fn t112_value_lower(q: usize, tau: f64) -> f64 {
    let q = q as f64;
    2f64.powf(2.0 / 3.0) * q.powf(tau) * (q.powf(3.0 * tau) + 2.0).cbrt()
}

/// Power-mean upper bound `V_{2/3}^{3τ/2}` on `V_τ(t_112)`, τ ≥ 2/3.
pub fn t112_value_upper(q: usize, tau: f64) -> f64 {
    t112_value_closed_form(q).powf(1.5 * tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::*;
    use crate::tensor::{direct_sum, Relation};

    fn fact(r: f64) -> AssertedFact {
        AssertedFact::asymptotic_rank(Relation::Equal, r, "test")
    }

    #[test]
    fn mu_sum_trivial_and_independent() {
        let t = make_cw(1, &[1]).unwrap();
        let r = bound_mu_sum(&t, &[t.clone()]).unwrap();
        assert!((r.value - 3.0).abs() < 1e-12);
        let two = make_independent(2);
        let a = Tensor::from_support([2, 2, 2], vec![[0, 0, 0]]).unwrap();
        let b = Tensor::from_support([2, 2, 2], vec![[1, 1, 1]]).unwrap();
        assert!((bound_mu_sum(&two, &[a.clone(), b]).unwrap().value - 2.0).abs() < 1e-12);
        let err = bound_mu_sum(&two, &[a]).unwrap_err();
        assert!(err.to_string().contains("[1, 1, 1]"));
    }

    #[test]
    fn partition_cw1() {
        let t = make_cw(1, &[1]).unwrap();
        let r = bound_partition(&t, &cw_partition(1), 0).unwrap();
        assert!((r.value - 2.7551).abs() < 1e-4);
        assert_eq!(r.theorem, "partition-symmetric");
    }

    #[test]
    fn partition_nonsymmetric_uses_minmax() {
        let t = make_t112(1);
        let r = bound_partition(&t, &t112_partition(1), 0).unwrap();
        assert_eq!(r.theorem, "partition-minmax");
        // every distribution has p_X = 2q at the optimum of the t_112 family
        assert!(r.value <= 2.0 + 1e-9);
    }

    #[test]
    fn omega_examples() {
        let w = omega_lower(&fact(3.0), 2.7551046, true).unwrap();
        assert!((w.value - 2.16805).abs() < 1e-4);
        let w = omega_lower(&fact(3.0), 3.0, true).unwrap();
        assert_eq!(w.value, 2.0);
        let w = omega_lower(&fact(2.0), 1.88988, true).unwrap();
        assert!((w.value - 2.17795).abs() < 1e-4);
        assert!(omega_lower(&fact(3.0), 3.1, true).is_err());
        let g = omega_lower(&fact(3.0), 2.7551046, false).unwrap();
        assert!(g.value > 2.0 && g.value < w.value + 1.0);
    }

    #[test]
    fn laser_ready_cases() {
        let q = 3;
        let cw = make_cw(q, &identity_sigma(q)).unwrap();
        let r = laser_ready(&cw, &cw_partition(q), false).unwrap();
        assert!(r.ok, "{:?}", r.diagnostics);
        assert_eq!(r.ell, Some(2));
        let s = make_cw_small(q, &identity_sigma(q)).unwrap();
        let r = laser_ready(&s, &cw_small_partition(q), false).unwrap();
        assert!(r.ok && r.ell == Some(2));
        let t = make_t112(2);
        let r = laser_ready(&t, &t112_partition(2), false).unwrap();
        assert!(!r.ok);
        assert!(r.diagnostics.iter().any(|d| d.contains("condition (3)")));
        assert_eq!(r.ell, Some(2));
    }

    #[test]
    fn laser_equals_partition_cw() {
        for q in 1..=4 {
            let t = make_cw(q, &identity_sigma(q)).unwrap();
            let up = bound_partition(&t, &cw_partition(q), 0).unwrap();
            let low = laser_lower_bound(&t, &cw_partition(q), false).unwrap();
            assert!((up.value - low.value).abs() < 1e-9);
            let Evidence::Laser { rates, .. } = &low.evidence else {
                panic!()
            };
            assert!(rates.identity_residual() < 1e-10);
        }
    }

    #[test]
    fn laser_refuses_unready() {
        let t = make_t112(1);
        assert!(matches!(
            laser_lower_bound(&t, &t112_partition(1), false),
            Err(Error::Inapplicable(_))
        ));
    }

    #[test]
    fn remove_x_cw2() {
        let q = 2;
        let t = make_cw(q, &identity_sigma(q)).unwrap();
        let a = t.restrict_keep_positions(Axis::X, &[0]);
        let b = t.add(&a.scale(&crate::tensor::int(-1))).unwrap();
        let sb = bound_partition(&b, &cw_partition(q), 0).unwrap().value;
        let r = bound_remove_x(&t, &a, &b, sb).unwrap();
        let Evidence::RemoveX(d) = &r.evidence else { panic!() };
        assert_eq!((d.sx_a, d.m_a, d.sx_b), (1, 4, 3));
        assert!(r.value.is_finite() && r.value >= 3.57165);
        assert!(d.proof_rate >= 3.57165 - 1e-9);
    }

    #[test]
    fn remove_x_limit_p_zero() {
        let q = 2;
        let t = make_cw(q, &identity_sigma(q)).unwrap();
        let a = t.restrict_keep_positions(Axis::X, &[0]);
        let b = t.add(&a.scale(&crate::tensor::int(-1))).unwrap();
        let r = bound_remove_x(&t, &a, &b, 3.0).unwrap();
        let Evidence::RemoveX(d) = &r.evidence else { panic!() };
        assert_eq!(d.p, 0.0);
        assert!((r.value - 4.0).abs() < 1e-12);
        // the binomial argument gives S_x(A) + S_x(B) here
        assert!((d.proof_rate - 4.0).abs() < 1e-9);
    }

    #[test]
    fn remove_x_closed_form_can_undershoot() {
        // A = x0y0z0 + x0y1z1, B = ⟨3⟩ on fresh variables: S~(T) >= 3, closed form gives 2
        let a0 = Tensor::from_support([1, 2, 2], vec![[0, 0, 0], [0, 1, 1]]).unwrap();
        let t = direct_sum(&a0, &make_independent(3));
        let a = t.restrict_keep_positions(Axis::X, &[0]);
        let b = t.add(&a.scale(&crate::tensor::int(-1))).unwrap();
        let r = bound_remove_x(&t, &a, &b, 3.0).unwrap();
        let Evidence::RemoveX(d) = &r.evidence else { panic!() };
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!(!d.closed_form_dominates(r.value));
        assert!(d.proof_rate >= 3.0);
    }

    #[test]
    fn remove_x_inapplicable() {
        let t = make_independent(2);
        let a = t.restrict_keep_positions(Axis::X, &[0]);
        let b = t.restrict_keep_positions(Axis::X, &[1]);
        assert!(matches!(bound_remove_x(&t, &a, &b, 1.0), Err(Error::Inapplicable(_))));
    }

    #[test]
    fn t112_small() {
        let r = value_t112(1, T112_MATERIALIZE_CAP).unwrap();
        assert!((r.value - t112_value_closed_form(1)).abs() < 1e-8);
        assert!((r.value - 2.2894).abs() < 1e-4);
        let Evidence::T112(d) = &r.evidence else { panic!() };
        assert!((d.argmax_v - 1.0 / 6.0).abs() < 1e-12);
        assert!((d.ts_laser_value - 12.0).abs() < 1e-7);
        assert_eq!(d.ts_checked, Some(true));
    }

    #[test]
    fn t112_tau_sandwich() {
        for q in 1..=4 {
            assert!((t112_value_lower(q, 2.0 / 3.0) - t112_value_closed_form(q)).abs() < 1e-9);
            for k in 0..=10 {
                let tau = 2.0 / 3.0 + k as f64 / 30.0;
                assert!(t112_value_lower(q, tau) <= t112_value_upper(q, tau) * (1.0 + 1e-12));
            }
        }
    }
}
