//! Slice-rank and ω tables for the CW, small CW and lower-triangular cyclic
//! families, and the all-q floor for CW.

use crate::bounds::{bound_partition, laser_lower_bound, omega_lower};
use crate::error::{Error, Result};
use crate::families::{cw_partition, cw_small_partition, identity_sigma, make_cw, make_cw_small, make_cyclic_lower};
use crate::optimizer::maximize_1d_by_derivative;
use crate::partition::VariablePartition;
use crate::tensor::{AssertedFact, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Cw,
    CwSmall,
    TqLower,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Cw => "cw",
            Family::CwSmall => "cw-small",
            Family::TqLower => "tq-lower",
        }
    }

    pub fn first_q(self) -> usize {
        match self {
            Family::TqLower => 2,
            _ => 1,
        }
    }

    fn instance(self, q: usize) -> Result<(Tensor, VariablePartition)> {
        Ok(match self {
            Family::Cw => (make_cw(q, &identity_sigma(q))?, cw_partition(q)),
            Family::CwSmall => (make_cw_small(q, &identity_sigma(q))?, cw_small_partition(q)),
            Family::TqLower => {
                let t = make_cyclic_lower(q);
                let p = VariablePartition::singletons(t.dims());
                (t, p)
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct TableRow {
    pub q: usize,
    /// Partition upper bound on `S~`.
    pub slice_rank: f64,
    /// Laser lower bound on `S~`.
    pub laser: f64,
    pub omega: f64,
    pub r_tilde: AssertedFact,
}

impl TableRow {
    pub fn tight_within(&self, tol: f64) -> bool {
        (self.slice_rank - self.laser).abs() <= tol
    }
}

pub fn table(family: Family, q_max: usize) -> Result<Vec<TableRow>> {
    if q_max < family.first_q() {
        return Err(Error::input(format!(
            "{} table needs q_max >= {}",
            family.name(),
            family.first_q()
        )));
    }
    (family.first_q()..=q_max).map(|q| row(family, q)).collect()
}

fn row(family: Family, q: usize) -> Result<TableRow> {
    let (t, p) = family.instance(q)?;
    let up = bound_partition(&t, &p, 0)?;
    let low = laser_lower_bound(&t, &p, false)?;
    let r_tilde = t
        .asymptotic_rank()
        .cloned()
        .ok_or_else(|| Error::input("family carries no asymptotic-rank fact"))?;
    let omega = omega_lower(&r_tilde, up.value, true)?;
    Ok(TableRow {
        q,
        slice_rank: up.value,
        laser: low.value,
        omega: omega.value,
        r_tilde,
    })
}

pub fn cw_table(q_max: usize) -> Result<Vec<TableRow>> {
    table(Family::Cw, q_max)
}

pub fn cw_small_table(q_max: usize) -> Result<Vec<TableRow>> {
    table(Family::CwSmall, q_max)
}

pub fn tq_lower_table(q_max: usize) -> Result<Vec<TableRow>> {
    table(Family::TqLower, q_max)
}

/// `(3 / 2^{2/3}) q^{2/3}`: the unique symmetric value for the small CW family.
pub fn cw_small_closed_form(q: usize) -> f64 {
    3.0 / 2f64.powf(2.0 / 3.0) * (q as f64).powf(2.0 / 3.0)
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `log f(v) = −v log v − (2/3 − 2v) log(2/3 − 2v) − (1/3 + v) log(1/3 + v)`.
pub fn cw_log_f(v: f64) -> f64 {
    -xlogx(v) - xlogx(2.0 / 3.0 - 2.0 * v) - xlogx(1.0 / 3.0 + v)
}

/// Log of the CW objective `q^{2(1/3 − v)} f(v)` on `v ∈ [0, 1/3]`.
pub fn cw_log_objective(q: usize, v: f64) -> f64 {
    2.0 * (1.0 / 3.0 - v) * (q as f64).ln() + cw_log_f(v)
}

fn cw_log_objective_slope(q: usize, v: f64) -> f64 {
    -2.0 * (q as f64).ln() - v.ln() + 2.0 * (2.0 / 3.0 - 2.0 * v).ln() - (1.0 / 3.0 + v).ln()
}

/// Maximizer `v_q` of the CW objective and the maximum `S~(CW_q)`.
pub fn cw_optimum(q: usize) -> (f64, f64) {
    let (v, l) = maximize_1d_by_derivative(
        |v| cw_log_objective(q, v),
        |v| cw_log_objective_slope(q, v),
        0.0,
        1.0 / 3.0,
    );
    (v, l.exp())
}

#[derive(Clone, Debug)]
pub struct AppendixReport {
    /// `v_1 .. v_8`.
    pub v: Vec<f64>,
    pub v_nonincreasing: bool,
    /// `ω` lower bounds for `q = 1..8` from the exact optimum.
    pub table_omega: Vec<f64>,
    pub f_v8: f64,
    /// `2 log(q+2) / log(q^{2/3} f(v_8))` for `q = 9..q_max`.
    pub relaxed: Vec<f64>,
    pub relaxed_increasing: bool,
    pub floor: f64,
    pub floor_q: usize,
    pub q_max: usize,
}

impl AppendixReport {
    pub fn relaxed_at(&self, q: usize) -> Option<f64> {
        q.checked_sub(9).and_then(|n| self.relaxed.get(n)).copied()
    }

    pub fn floor_holds(&self, floor: f64) -> bool {
        self.v_nonincreasing && self.relaxed_increasing && self.floor >= floor
    }
}

/// For `q ≥ 9`, `v_q ≤ v_8` and `f` increases on `[0, v_8]`, so
/// `S~(CW_q) ≤ q^{2/3} f(v_8)`; the resulting ω bound is checked on `9..q_max`
/// and combined with the exact values for `q ≤ 8`.
pub fn appendix_floor(q_max: usize) -> Result<AppendixReport> {
    if q_max < 9 {
        return Err(Error::input("q_max must be at least 9"));
    }
    let mut v = Vec::new();
    let mut table_omega = Vec::new();
    for q in 1..=8usize {
        let (vq, s) = cw_optimum(q);
        v.push(vq);
        table_omega.push(2.0 * ((q + 2) as f64).ln() / s.ln());
    }
    let v_nonincreasing = v.windows(2).all(|w| w[1] <= w[0]);
    let v8 = v[7];
    let f_v8 = cw_log_f(v8).exp();
    let relaxed: Vec<f64> = (9..=q_max)
        .map(|q| {
            let qf = q as f64;
            2.0 * (qf + 2.0).ln() / (qf.powf(2.0 / 3.0) * f_v8).ln()
        })
        .collect();
    let relaxed_increasing = relaxed.windows(2).all(|w| w[1] > w[0]);
    let (floor_q, floor) = table_omega
        .iter()
        .chain(&relaxed)
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (n, w)| if *w < acc.1 { (n + 1, *w) } else { acc },
        );
    Ok(AppendixReport {
        v,
        v_nonincreasing,
        table_omega,
        f_v8,
        relaxed,
        relaxed_increasing,
        floor,
        floor_q,
        q_max,
    })
}
