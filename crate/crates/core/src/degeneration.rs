//! Degenerations, monomial degenerations and zeroing outs.
//!
//! A [`DegenerationMap`] substitutes every source variable `x` by
//! `Σ_{x'} α(x, x') x'` with `α(x, x')` a polynomial in `λ`. It verifies
//! `T1 → T2` at order `h` when, after substitution, the coefficient of `λ^h`
//! is exactly `T2` and every lower power of `λ` vanishes.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::partition::BlockSet;
use crate::tensor::{accumulate, tensor_product, Axis, Coeff, Index, Tensor};

/// Sparse polynomial in `λ` with exact coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LambdaPoly {
    terms: BTreeMap<u32, Coeff>,
}

impl LambdaPoly {
    pub fn zero() -> Self {
        LambdaPoly::default()
    }

    pub fn constant(c: Coeff) -> Self {
        LambdaPoly::monomial(0, c)
    }

    pub fn one() -> Self {
        LambdaPoly::constant(Coeff::one())
    }

    pub fn monomial(exp: u32, c: Coeff) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        LambdaPoly { terms }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (u32, Coeff)>) -> Self {
        let mut p = LambdaPoly::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Coeff)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn coeff(&self, exp: u32) -> Coeff {
        self.terms.get(&exp).cloned().unwrap_or_else(Coeff::zero)
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().next().copied()
    }

    fn add_term(&mut self, exp: u32, c: Coeff) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(exp).or_insert_with(Coeff::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn add(&self, other: &LambdaPoly) -> LambdaPoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn mul(&self, other: &LambdaPoly) -> LambdaPoly {
        let mut out = LambdaPoly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &Coeff) -> LambdaPoly {
        LambdaPoly::from_terms(self.terms.iter().map(|(e, v)| (*e, v * c)))
    }

    /// `p(λ^n)`.
    pub fn substitute_power(&self, n: u32) -> LambdaPoly {
        LambdaPoly {
            terms: self.terms.iter().map(|(e, c)| (e * n, c.clone())).collect(),
        }
    }
}

impl fmt::Display for LambdaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(e, c)| format!("{e}:{c}")).collect();
        f.write_str(&parts.join(" "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegenerationKind {
    General,
    Monomial,
    Zeroing,
}

/// Substitution maps `α, β, γ` from the variables of a source tensor to
/// polynomial combinations of the variables of a target tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct DegenerationMap {
    source_dims: [usize; 3],
    target_dims: [usize; 3],
    maps: [Vec<BTreeMap<usize, LambdaPoly>>; 3],
    order: u32,
    kind: DegenerationKind,
}

impl DegenerationMap {
    /// Empty map (every variable sent to zero) of kind `General`.
    pub fn new(source_dims: [usize; 3], target_dims: [usize; 3], order: u32) -> Self {
        DegenerationMap {
            source_dims,
            target_dims,
            maps: source_dims.map(|n| vec![BTreeMap::new(); n]),
            order,
            kind: DegenerationKind::General,
        }
    }

    pub fn identity(dims: [usize; 3]) -> Self {
        let mut d = DegenerationMap::new(dims, dims, 0);
        for a in 0..3 {
            for v in 0..dims[a] {
                d.maps[a][v].insert(v, LambdaPoly::one());
            }
        }
        d.kind = DegenerationKind::Zeroing;
        d
    }

    /// Zeroing out everything except `keep[axis]`; the kept variable
    /// `keep[axis][n]` becomes target variable `n`.
    pub fn zeroing(source_dims: [usize; 3], keep: &[Vec<usize>; 3]) -> Result<Self> {
        let target = [keep[0].len(), keep[1].len(), keep[2].len()];
        let mut d = DegenerationMap::new(source_dims, target, 0);
        for a in 0..3 {
            for (n, &v) in keep[a].iter().enumerate() {
                d.set(Axis::from_index(a), v, n, LambdaPoly::one())?;
            }
        }
        d.with_kind(DegenerationKind::Zeroing)
    }

    /// The zeroing out of a tensor onto one of its blocks.
    pub fn zeroing_to_block(blocks: &BlockSet, id: Index) -> Result<Self> {
        let p = blocks.partition();
        if blocks.get(id).is_none() {
            return Err(Error::input(format!("no nonzero block {id:?}")));
        }
        let keep = [0, 1, 2].map(|a| p.parts(Axis::from_index(a))[id[a]].members.clone());
        DegenerationMap::zeroing(p.dims(), &keep)
    }

    pub fn source_dims(&self) -> [usize; 3] {
        self.source_dims
    }

    pub fn target_dims(&self) -> [usize; 3] {
        self.target_dims
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn kind(&self) -> DegenerationKind {
        self.kind
    }

    pub fn set_order(&mut self, h: u32) {
        self.order = h;
    }

    /// Sets `α(src, dst)` (or `β`, `γ`); a zero polynomial clears the slot.
    pub fn set(&mut self, axis: Axis, src: usize, dst: usize, poly: LambdaPoly) -> Result<()> {
        let a = axis.index();
        if src >= self.source_dims[a] || dst >= self.target_dims[a] {
            return Err(Error::input(format!(
                "{axis}-map entry ({src}, {dst}) out of range for shapes {:?} -> {:?}",
                self.source_dims, self.target_dims
            )));
        }
        if poly.is_zero() {
            self.maps[a][src].remove(&dst);
        } else {
            self.maps[a][src].insert(dst, poly);
        }
        Ok(())
    }

    pub fn get(&self, axis: Axis, src: usize, dst: usize) -> LambdaPoly {
        self.maps[axis.index()][src].get(&dst).cloned().unwrap_or_default()
    }

    /// Images of one source variable.
    pub fn images(&self, axis: Axis, src: usize) -> impl Iterator<Item = (usize, &LambdaPoly)> {
        self.maps[axis.index()][src].iter().map(|(d, p)| (*d, p))
    }

    fn is_monomial(&self) -> bool {
        self.maps
            .iter()
            .flatten()
            .all(|row| row.len() <= 1 && row.values().all(|p| p.num_terms() <= 1))
    }

    fn is_zeroing(&self) -> bool {
        self.is_monomial()
            && self
                .maps
                .iter()
                .flatten()
                .flat_map(|row| row.values())
                .all(|p| *p == LambdaPoly::one())
    }

    /// Strongest kind whose conditions the maps satisfy.
    pub fn inferred_kind(&self) -> DegenerationKind {
        if self.is_zeroing() {
            DegenerationKind::Zeroing
        } else if self.is_monomial() {
            DegenerationKind::Monomial
        } else {
            DegenerationKind::General
        }
    }

    /// Declares the kind, checking its invariants.
    pub fn with_kind(mut self, kind: DegenerationKind) -> Result<Self> {
        let ok = match kind {
            DegenerationKind::General => true,
            DegenerationKind::Monomial => self.is_monomial(),
            DegenerationKind::Zeroing => self.is_zeroing(),
        };
        if !ok {
            return Err(Error::input(format!("maps do not satisfy the {kind:?} conditions")));
        }
        self.kind = kind;
        Ok(self)
    }

    /// Substitutes the maps into `t`, returning the λ-polynomial coefficient of
    /// every target triple.
    pub fn apply(&self, t: &Tensor) -> Result<BTreeMap<Index, LambdaPoly>> {
        if t.dims() != self.source_dims {
            return Err(Error::input(format!(
                "map expects a source of shape {:?}, tensor has {:?}",
                self.source_dims,
                t.dims()
            )));
        }
        let mut out: BTreeMap<Index, LambdaPoly> = BTreeMap::new();
        for (&[i, j, k], c) in t.entries() {
            for (x2, pa) in &self.maps[0][i] {
                let pa = pa.scale(c);
                for (y2, pb) in &self.maps[1][j] {
                    let pab = pa.mul(pb);
                    for (z2, pc) in &self.maps[2][k] {
                        let term = pab.mul(pc);
                        let slot = out.entry([*x2, *y2, *z2]).or_default();
                        *slot = slot.add(&term);
                    }
                }
            }
        }
        out.retain(|_, p| !p.is_zero());
        Ok(out)
    }

    /// Composite of `self: T1 → T2` followed by `next: T2 → T3`.
    ///
    /// With `N = h2 + 1` the composite uses `α(x, x'') = Σ α1(x, x')(λ^N) α2(x', x'')`
    /// and order `N·h1 + h2`: rescaling λ in the first map pushes every
    /// higher-order remainder of `T1 → T2` above degree `N·h1 + h2`.
    pub fn compose(&self, next: &DegenerationMap) -> Result<DegenerationMap> {
        if self.target_dims != next.source_dims {
            return Err(Error::input(format!(
                "cannot compose: first map targets {:?}, second expects {:?}",
                self.target_dims, next.source_dims
            )));
        }
        let n = next.order + 1;
        let mut out = DegenerationMap::new(self.source_dims, next.target_dims, n * self.order + next.order);
        for a in 0..3 {
            for (src, row) in self.maps[a].iter().enumerate() {
                let mut acc: BTreeMap<usize, LambdaPoly> = BTreeMap::new();
                for (mid, p1) in row {
                    let p1 = p1.substitute_power(n);
                    for (dst, p2) in &next.maps[a][*mid] {
                        let slot = acc.entry(*dst).or_default();
                        *slot = slot.add(&p1.mul(p2));
                    }
                }
                acc.retain(|_, p| !p.is_zero());
                out.maps[a][src] = acc;
            }
        }
        out.kind = out.inferred_kind();
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegenerationVerdict {
    pub ok: bool,
    pub order: u32,
    pub diagnostic: Option<String>,
}

/// Checks that `d` degenerates `t1` into `t2` at order `d.order()`.
pub fn verify_degeneration(t1: &Tensor, t2: &Tensor, d: &DegenerationMap) -> Result<DegenerationVerdict> {
    if t2.dims() != d.target_dims {
        return Err(Error::input(format!(
            "map targets shape {:?}, tensor has {:?}",
            d.target_dims,
            t2.dims()
        )));
    }
    let h = d.order;
    let image = d.apply(t1)?;
    let fail = |msg: String| DegenerationVerdict {
        ok: false,
        order: h,
        diagnostic: Some(msg),
    };
    // lowest degree first, then entry order
    let mut low: Option<(u32, Index)> = None;
    for (idx, p) in &image {
        if let Some(e) = p.min_degree() {
            if e < h && low.map_or(true, |(le, _)| e < le) {
                low = Some((e, *idx));
            }
        }
    }
    if let Some((e, idx)) = low {
        return Ok(fail(format!(
            "coefficient of λ^{e} is nonzero at entry {idx:?} (expected zero below λ^{h})"
        )));
    }
    let mut leading: BTreeMap<Index, Coeff> = BTreeMap::new();
    for (idx, p) in &image {
        accumulate(&mut leading, *idx, p.coeff(h));
    }
    if leading.is_empty() && !t2.is_zero() {
        return Ok(fail(format!("λ^{h} coefficient is zero tensor")));
    }
    let mut keys: Vec<Index> = leading
        .keys()
        .chain(t2.support().collect::<Vec<_>>().iter())
        .copied()
        .collect();
    keys.sort_unstable();
    keys.dedup();
    for idx in keys {
        let got = leading.get(&idx).cloned().unwrap_or_else(Coeff::zero);
        let want = t2.coefficient(idx);
        if got != want {
            return Ok(fail(format!(
                "λ^{h} coefficient at entry {idx:?} is {got}, target has {want}"
            )));
        }
    }
    Ok(DegenerationVerdict {
        ok: true,
        order: h,
        diagnostic: None,
    })
}

/// The lowest-order nonzero coefficient tensor of `d` applied to `t`, with its
/// degree. `None` if the substitution annihilates `t`.
pub fn leading_image(t: &Tensor, d: &DegenerationMap) -> Result<Option<(u32, Tensor)>> {
    let image = d.apply(t)?;
    let Some(h) = image.values().filter_map(|p| p.min_degree()).min() else {
        return Ok(None);
    };
    let entries = image.iter().map(|(i, p)| (*i, p.coeff(h)));
    let tensor = Tensor::from_sizes(d.target_dims, entries)?;
    Ok(Some((h, tensor)))
}

/// Largest independent tensor reachable by zeroing out variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroingWitness {
    pub size: usize,
    /// The surviving entries, one per independent term.
    pub entries: Vec<Index>,
    /// Kept variables per axis; `keep[a][s]` belongs to the `s`-th entry.
    pub keep: [Vec<usize>; 3],
}

impl ZeroingWitness {
    pub fn map(&self, source_dims: [usize; 3]) -> Result<DegenerationMap> {
        DegenerationMap::zeroing(source_dims, &self.keep)
    }
}

pub const DEFAULT_SEARCH_CAP: usize = 12;

/// Exhaustive branch-and-bound search over zeroing outs of `T^{⊗n}` (`n ≤ 2`)
/// for the largest restriction that is a diagonal tensor. Coefficients of the
/// surviving terms are whatever `T` carries; for 0/1 tensors the restriction is
/// exactly `⟨q⟩`.
pub fn search_zeroing_independent(t: &Tensor, n: usize, cap: usize) -> Result<ZeroingWitness> {
    if n == 0 || n > 2 {
        return Err(Error::input(format!("power {n} not supported (1 or 2)")));
    }
    let tn = if n == 2 { tensor_product(t, t) } else { t.clone() };
    let dims = tn.dims();
    if dims.iter().any(|&d| d > cap) {
        return Err(Error::TooLarge(format!(
            "T^{n} has axis sizes {dims:?}, cap is {cap} per axis"
        )));
    }
    let entries: Vec<Index> = tn.support().collect();
    let mut search = Search {
        entries: &entries,
        used: dims.map(|d| vec![false; d]),
        chosen: Vec::new(),
        best: Vec::new(),
    };
    search.run(0);
    let best = search.best;
    let keep = [0, 1, 2].map(|a| best.iter().map(|e| e[a]).collect());
    Ok(ZeroingWitness {
        size: best.len(),
        entries: best,
        keep,
    })
}

struct Search<'a> {
    entries: &'a [Index],
    used: [Vec<bool>; 3],
    chosen: Vec<Index>,
    best: Vec<Index>,
}

impl Search<'_> {
    fn free(&self, a: usize) -> usize {
        self.used[a].iter().filter(|u| !**u).count()
    }

    fn can_add(&self, e: Index) -> bool {
        if (0..3).any(|a| self.used[a][e[a]]) {
            return false;
        }
        // no other entry may survive on the enlarged variable sets
        let inside = |a: usize, v: usize| self.used[a][v] || e[a] == v;
        !self
            .entries
            .iter()
            .any(|f| *f != e && (0..3).all(|a| inside(a, f[a])) && !self.chosen.contains(f))
    }

    fn run(&mut self, from: usize) {
        if self.chosen.len() > self.best.len() {
            self.best = self.chosen.clone();
        }
        let bound = (0..3)
            .map(|a| self.free(a))
            .min()
            .unwrap_or(0)
            .min(self.entries.len() - from);
        if self.chosen.len() + bound <= self.best.len() {
            return;
        }
        for i in from..self.entries.len() {
            let e = self.entries[i];
            if !self.can_add(e) {
                continue;
            }
            for a in 0..3 {
                self.used[a][e[a]] = true;
            }
            self.chosen.push(e);
            self.run(i + 1);
            self.chosen.pop();
            for a in 0..3 {
                self.used[a][e[a]] = false;
            }
        }
    }
}
