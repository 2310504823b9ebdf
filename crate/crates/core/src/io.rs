//! Line-oriented text formats for tensors, partitions and degeneration maps.
//!
//! All formats are whitespace separated, `#` starts a comment, and indices are
//! 0-based.
//!
//! Tensor:
//! ```text
//! xvars 3
//! yvars 3
//! zvars 3
//! rtilde eq 3 optional citation text
//! 0 0 2 1
//! 1 1 0 -1/2
//! ```
//! Partition, one part per line (`axis label index...`); an integer label is
//! the part's grade, otherwise the grade is its position on the axis:
//! ```text
//! x 0 0
//! x 1 1 2
//! ```
//! Degeneration map (`alpha`/`beta`/`gamma` for monomial entries, the `P`
//! forms for polynomials written as `exponent:coefficient` terms):
//! ```text
//! order 1
//! kind monomial
//! alpha 0 0 1 1
//! betaP 1 0 0:1 2:-1/3
//! ```

use std::str::FromStr;

use crate::degeneration::{DegenerationKind, DegenerationMap, LambdaPoly};
use crate::error::{Error, Result};
use crate::partition::{Part, VariablePartition};
use crate::tensor::{AssertedFact, Axis, Coeff, Index, Relation, Tensor};

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(n, l)| {
        let body = l.split('#').next().unwrap_or("");
        let words: Vec<&str> = body.split_whitespace().collect();
        (!words.is_empty()).then_some((n + 1, words))
    })
}

fn num<T: FromStr>(line: usize, w: &str, what: &str) -> Result<T> {
    w.parse()
        .map_err(|_| Error::parse(line, format!("expected {what}, found `{w}`")))
}

fn coeff(line: usize, w: &str) -> Result<Coeff> {
    if w.ends_with("/0") || w.contains("/-0") {
        return Err(Error::parse(line, format!("zero denominator in `{w}`")));
    }
    num(line, w, "a rational number")
}

pub fn parse_tensor(text: &str) -> Result<Tensor> {
    let mut dims: [Option<usize>; 3] = [None; 3];
    let mut entries: Vec<(Index, Coeff)> = Vec::new();
    let mut facts = Vec::new();
    let mut entry_lines = Vec::new();
    for (n, w) in lines(text) {
        match w[0] {
            "xvars" | "yvars" | "zvars" => {
                if w.len() != 2 {
                    return Err(Error::parse(n, format!("`{}` takes one count", w[0])));
                }
                let a = ["xvars", "yvars", "zvars"].iter().position(|h| *h == w[0]).unwrap_or(0);
                if dims[a].is_some() {
                    return Err(Error::parse(n, format!("duplicate `{}`", w[0])));
                }
                dims[a] = Some(num(n, w[1], "a variable count")?);
            }
            "rtilde" => {
                if w.len() < 3 {
                    return Err(Error::parse(n, "expected `rtilde eq|ge value [citation]`"));
                }
                let rel = match w[1] {
                    "eq" => Relation::Equal,
                    "ge" => Relation::AtLeast,
                    other => return Err(Error::parse(n, format!("unknown relation `{other}`"))),
                };
                let value: f64 = num(n, w[2], "a number")?;
                let cite = if w.len() > 3 {
                    w[3..].join(" ")
                } else {
                    "user input".to_string()
                };
                facts.push(AssertedFact::asymptotic_rank(rel, value, cite));
            }
            _ => {
                if w.len() != 4 {
                    return Err(Error::parse(n, "expected `i j k coefficient`"));
                }
                let idx = [
                    num(n, w[0], "an index")?,
                    num(n, w[1], "an index")?,
                    num(n, w[2], "an index")?,
                ];
                entries.push((idx, coeff(n, w[3])?));
                entry_lines.push(n);
            }
        }
    }
    let mut d = [0; 3];
    for a in 0..3 {
        d[a] = dims[a].ok_or_else(|| {
            Error::parse(
                text.lines().count(),
                format!("missing `{}` header", ["xvars", "yvars", "zvars"][a]),
            )
        })?;
    }
    for ((idx, _), n) in entries.iter().zip(&entry_lines) {
        if (0..3).any(|a| idx[a] >= d[a]) {
            return Err(Error::parse(*n, format!("index {idx:?} out of range for shape {d:?}")));
        }
    }
    let mut t = Tensor::from_sizes(d, entries)?;
    for f in facts {
        t = t.with_fact(f);
    }
    Ok(t)
}

pub fn write_tensor(t: &Tensor) -> String {
    let [x, y, z] = t.dims();
    let mut s = format!("xvars {x}\nyvars {y}\nzvars {z}\n");
    if let Some(f) = t.asymptotic_rank() {
        let rel = match f.relation {
            Relation::Equal => "eq",
            Relation::AtLeast => "ge",
        };
        s.push_str(&format!("rtilde {rel} {} {}\n", f.value, f.citation));
    }
    for (idx, c) in t.entries() {
        s.push_str(&format!("{} {} {} {c}\n", idx[0], idx[1], idx[2]));
    }
    s
}

pub fn parse_partition(text: &str, dims: [usize; 3]) -> Result<VariablePartition> {
    let mut raw: [Vec<(String, Vec<usize>, usize)>; 3] = Default::default();
    for (n, w) in lines(text) {
        let axis = Axis::parse(w[0]).ok_or_else(|| Error::parse(n, format!("unknown axis `{}`", w[0])))?;
        if w.len() < 3 {
            return Err(Error::parse(n, "expected `axis label index...`"));
        }
        let members = w[2..]
            .iter()
            .map(|m| num(n, m, "a variable index"))
            .collect::<Result<Vec<usize>>>()?;
        if let Some(bad) = members.iter().find(|&&m| m >= dims[axis.index()]) {
            return Err(Error::parse(n, format!("variable {bad} out of range on axis {axis}")));
        }
        raw[axis.index()].push((w[1].to_string(), members, n));
    }
    let parts = raw.map(|list| {
        list.into_iter()
            .enumerate()
            .map(|(pos, (label, members, _))| Part {
                grade: label.parse().unwrap_or(pos as i64),
                label,
                members,
            })
            .collect::<Vec<_>>()
    });
    VariablePartition::new(parts, dims)
}

pub fn write_partition(p: &VariablePartition) -> String {
    let mut s = String::new();
    for a in Axis::ALL {
        for part in p.parts(a) {
            let m: Vec<String> = part.members.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!("{} {} {}\n", a.name().to_lowercase(), part.label, m.join(" ")));
        }
    }
    s
}

fn map_axis(w: &str) -> Option<(Axis, bool)> {
    Some(match w {
        "alpha" => (Axis::X, false),
        "beta" => (Axis::Y, false),
        "gamma" => (Axis::Z, false),
        "alphaP" => (Axis::X, true),
        "betaP" => (Axis::Y, true),
        "gammaP" => (Axis::Z, true),
        _ => return None,
    })
}

pub fn parse_degeneration(text: &str, source: [usize; 3], target: [usize; 3]) -> Result<DegenerationMap> {
    let mut d = DegenerationMap::new(source, target, 0);
    let mut kind = None;
    for (n, w) in lines(text) {
        if w[0] == "order" {
            if w.len() != 2 {
                return Err(Error::parse(n, "expected `order h`"));
            }
            d.set_order(num(n, w[1], "a nonnegative order")?);
            continue;
        }
        if w[0] == "kind" {
            kind = Some(match w.get(1).copied() {
                Some("general") => DegenerationKind::General,
                Some("monomial") => DegenerationKind::Monomial,
                Some("zeroing") => DegenerationKind::Zeroing,
                _ => return Err(Error::parse(n, "expected `kind general|monomial|zeroing`")),
            });
            continue;
        }
        let (axis, poly) = map_axis(w[0]).ok_or_else(|| Error::parse(n, format!("unknown keyword `{}`", w[0])))?;
        if w.len() < 3 {
            return Err(Error::parse(n, "expected source and target indices"));
        }
        let src: usize = num(n, w[1], "a source index")?;
        let dst: usize = num(n, w[2], "a target index")?;
        let p = if poly {
            let mut terms = Vec::new();
            for t in &w[3..] {
                let (e, c) = t
                    .split_once(':')
                    .ok_or_else(|| Error::parse(n, format!("expected `exponent:coefficient`, found `{t}`")))?;
                terms.push((num(n, e, "an exponent")?, coeff(n, c)?));
            }
            LambdaPoly::from_terms(terms)
        } else {
            if w.len() != 5 {
                return Err(Error::parse(n, "expected `src dst exponent coefficient`"));
            }
            LambdaPoly::monomial(num(n, w[3], "an exponent")?, coeff(n, w[4])?)
        };
        let prev = d.get(axis, src, dst);
        d.set(axis, src, dst, prev.add(&p))
            .map_err(|e| Error::parse(n, e.to_string()))?;
    }
    match kind {
        Some(k) => d.with_kind(k),
        None => {
            let k = d.inferred_kind();
            d.with_kind(k)
        }
    }
}

pub fn write_degeneration(d: &DegenerationMap) -> String {
    let mut s = format!("order {}\n", d.order());
    for (a, name) in Axis::ALL.into_iter().zip(["alphaP", "betaP", "gammaP"]) {
        for src in 0..d.source_dims()[a.index()] {
            for (dst, p) in d.images(a, src) {
                let terms: Vec<String> = p.terms().map(|(e, c)| format!("{e}:{c}")).collect();
                s.push_str(&format!("{name} {src} {dst} {}\n", terms.join(" ")));
            }
        }
    }
    s
}
