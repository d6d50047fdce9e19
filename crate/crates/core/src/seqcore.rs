//! Integer sequences `n_0 = 1 < n_1 < n_2 < ...`, their generators, ratio
//! analysis, and exact residue streams `n_k mod q`.
//!
//! Terms are big integers throughout. Residues are produced by iterating the
//! generating recurrence modulo `q`, so `DoubleExp` and `Factorial` terms are
//! never materialized when only residues are needed.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::Fraction;

/// Convention used for the factorial family; echoed in reports.
pub const FACTORIAL_CONVENTION: &str = "factorial: n_k = (k+1)!, so n_0 = 1, n_1 = 2, n_2 = 6";

/// Default number of stored states before cycle detection gives up.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// Largest patch index accepted on a `doubleexp` base (its neighbours must be
/// materialized to check monotonicity).
const DOUBLEEXP_PATCH_LIMIT: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SequenceSpec {
    /// `n_k = c^k`.
    Geometric(u64),
    /// `n_k = k + 1`.
    Affine,
    /// `n_k = (k+1)!`.
    Factorial,
    /// `n_0 = 1`, `n_k = 2^(2^k)` for `k >= 1`.
    DoubleExp,
    /// A finite prefix of an otherwise unknown sequence.
    ExplicitList(Vec<BigUint>),
    /// `base` with the term at `index` replaced by `value`.
    Patch {
        base: Box<SequenceSpec>,
        index: usize,
        value: BigUint,
    },
}

impl SequenceSpec {
    pub fn patch(base: SequenceSpec, index: usize, value: impl Into<BigUint>) -> Self {
        SequenceSpec::Patch {
            base: Box::new(base),
            index,
            value: value.into(),
        }
    }

    pub fn list<I: IntoIterator<Item = u64>>(terms: I) -> Self {
        SequenceSpec::ExplicitList(terms.into_iter().map(BigUint::from).collect())
    }

    /// True when the spec is a finite prefix (directly or through patches).
    pub fn is_prefix_only(&self) -> bool {
        match self {
            SequenceSpec::ExplicitList(_) => true,
            SequenceSpec::Patch { base, .. } => base.is_prefix_only(),
            _ => false,
        }
    }

    /// Number of available terms, `None` for infinite families.
    pub fn available_terms(&self) -> Option<usize> {
        match self {
            SequenceSpec::ExplicitList(v) => Some(v.len()),
            SequenceSpec::Patch { base, .. } => base.available_terms(),
            _ => None,
        }
    }

    /// Human-readable conventions that reports should echo.
    pub fn conventions(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        self.collect_conventions(&mut out);
        out
    }

    fn collect_conventions(&self, out: &mut Vec<&'static str>) {
        match self {
            SequenceSpec::Factorial => out.push(FACTORIAL_CONVENTION),
            SequenceSpec::ExplicitList(_) => {
                out.push("list: finite prefix, tail beyond the last term is unverified")
            }
            SequenceSpec::Patch { base, .. } => base.collect_conventions(out),
            _ => {}
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SequenceSpec::Geometric(c) if *c < 2 => Err(Error::InvalidSpec(format!(
                "geometric ratio must be >= 2, got {c}"
            ))),
            SequenceSpec::Geometric(_)
            | SequenceSpec::Affine
            | SequenceSpec::Factorial
            | SequenceSpec::DoubleExp => Ok(()),
            SequenceSpec::ExplicitList(v) => {
                let Some(first) = v.first() else {
                    return Err(Error::InvalidSpec("empty list".into()));
                };
                if !first.is_one() {
                    return Err(Error::InvalidSpec(format!("list must start with 1, got {first}")));
                }
                for (k, w) in v.windows(2).enumerate() {
                    if w[1] <= w[0] {
                        return Err(Error::InvalidSpec(format!(
                            "list not strictly increasing at index {}: {} after {}",
                            k + 1,
                            w[1],
                            w[0]
                        )));
                    }
                }
                Ok(())
            }
            SequenceSpec::Patch { base, index, value } => {
                base.validate()?;
                if *index == 0 {
                    return Err(Error::InvalidSpec("patch index must be >= 1 (n_0 = 1 is fixed)".into()));
                }
                if matches!(base.as_ref(), SequenceSpec::DoubleExp) && *index > DOUBLEEXP_PATCH_LIMIT {
                    return Err(Error::InvalidSpec(format!(
                        "patch index {index} on doubleexp exceeds {DOUBLEEXP_PATCH_LIMIT}"
                    )));
                }
                let neighbours: Vec<BigUint> = base.terms().take(index + 2).collect();
                if neighbours.len() <= *index {
                    return Err(Error::InvalidSpec(format!(
                        "patch index {index} beyond the {} available terms",
                        neighbours.len()
                    )));
                }
                let prev = &neighbours[index - 1];
                if value <= prev {
                    return Err(Error::InvalidSpec(format!(
                        "patch value {value} at index {index} must exceed n_{} = {prev}",
                        index - 1
                    )));
                }
                if let Some(next) = neighbours.get(index + 1) {
                    if value >= next {
                        return Err(Error::InvalidSpec(format!(
                            "patch value {value} at index {index} must be below n_{} = {next}",
                            index + 1
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// All terms, lazily. Infinite for the rule-based families.
    pub fn terms(&self) -> Box<dyn Iterator<Item = BigUint> + '_> {
        match self {
            SequenceSpec::Geometric(c) => {
                let c = BigUint::from(*c);
                Box::new(std::iter::successors(Some(BigUint::one()), move |r| Some(r * &c)))
            }
            SequenceSpec::Affine => Box::new((1u64..).map(BigUint::from)),
            SequenceSpec::Factorial => {
                let mut acc = BigUint::one();
                Box::new((1u64..).map(move |m| {
                    acc *= m;
                    acc.clone()
                }))
            }
            SequenceSpec::DoubleExp => Box::new(
                std::iter::once(BigUint::one()).chain(std::iter::successors(
                    Some(BigUint::from(4u32)),
                    |r| Some(r * r),
                )),
            ),
            SequenceSpec::ExplicitList(v) => Box::new(v.iter().cloned()),
            SequenceSpec::Patch { base, index, value } => {
                let index = *index;
                let value = value.clone();
                Box::new(
                    base.terms()
                        .enumerate()
                        .map(move |(k, t)| if k == index { value.clone() } else { t }),
                )
            }
        }
    }

    /// Residues `n_k mod q`, lazily, without materializing the terms.
    pub fn residue_iter<'a>(&'a self, q: &BigUint) -> Box<dyn Iterator<Item = BigUint> + 'a> {
        let q = q.clone();
        match self {
            SequenceSpec::Geometric(c) => {
                let c = BigUint::from(*c);
                let start = BigUint::one() % &q;
                Box::new(std::iter::successors(Some(start), move |r| Some((r * &c) % &q)))
            }
            SequenceSpec::Affine => {
                let start = BigUint::one() % &q;
                Box::new(std::iter::successors(Some(start), move |r| {
                    Some((r + 1u32) % &q)
                }))
            }
            SequenceSpec::Factorial => {
                let mut acc = BigUint::one() % &q;
                let mut m = 1u64;
                Box::new(std::iter::from_fn(move || {
                    let out = acc.clone();
                    m += 1;
                    acc = (&acc * m) % &q;
                    Some(out)
                }))
            }
            SequenceSpec::DoubleExp => {
                let first = BigUint::one() % &q;
                let second = BigUint::from(4u32) % &q;
                Box::new(std::iter::once(first).chain(std::iter::successors(
                    Some(second),
                    move |r| Some((r * r) % &q),
                )))
            }
            SequenceSpec::ExplicitList(v) => Box::new(v.iter().map(move |t| t % &q)),
            SequenceSpec::Patch { base, index, value } => {
                let index = *index;
                let pv = value % &q;
                Box::new(
                    base.residue_iter(&q)
                        .enumerate()
                        .map(move |(k, r)| if k == index { pv.clone() } else { r }),
                )
            }
        }
    }

    /// Terms capped at `2^cap_bits`: `Some(n_k)` when `n_k < 2^cap_bits`,
    /// `None` otherwise. Stops after `count` entries or when a list runs out.
    pub fn capped_terms(&self, count: usize, cap_bits: u64) -> Vec<Option<u128>> {
        assert!(cap_bits <= 127);
        let mut out = Vec::with_capacity(count);
        match self {
            SequenceSpec::DoubleExp => {
                for k in 0..count {
                    // n_k = 2^(2^k) has 2^k + 1 bits
                    let v = if k == 0 {
                        Some(1u128)
                    } else if k < 7 && (1u64 << k) < cap_bits {
                        Some(1u128 << (1u32 << k))
                    } else {
                        None
                    };
                    out.push(v);
                }
            }
            SequenceSpec::Patch { base, index, value } => {
                out = base.capped_terms(count, cap_bits);
                if let Some(slot) = out.get_mut(*index) {
                    *slot = if value.bits() < cap_bits { value.to_u128() } else { None };
                }
            }
            _ => {
                for t in self.terms().take(count) {
                    if t.bits() < cap_bits {
                        out.push(t.to_u128());
                    } else {
                        // strictly increasing: every later term is capped too
                        let remaining = match self.available_terms() {
                            Some(n) => n.min(count) - out.len(),
                            None => count - out.len(),
                        };
                        out.extend(std::iter::repeat_n(None, remaining));
                        break;
                    }
                }
            }
        }
        out
    }

    /// Smallest `k` with `n_k >= n`, or `None` if a finite list never reaches it.
    pub fn first_index_at_least(&self, n: &BigUint) -> Option<usize> {
        if n.is_zero() || n.is_one() {
            return Some(0);
        }
        match self {
            SequenceSpec::Affine => (n - 1u32).to_usize(),
            SequenceSpec::Patch { base, index, value } => {
                let k0 = base.first_index_at_least(n);
                match k0 {
                    Some(k0) if k0 < *index => Some(k0),
                    Some(k0) if k0 == *index => {
                        if value >= n {
                            Some(k0)
                        } else {
                            Some(k0 + 1).filter(|k| self.available_terms().is_none_or(|a| *k < a))
                        }
                    }
                    _ if value >= n && k0.is_none_or(|k| *index < k) => Some(*index),
                    other => other,
                }
            }
            _ => self.terms().position(|t| &t >= n),
        }
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceSpec::Geometric(c) => write!(f, "geom:{c}"),
            SequenceSpec::Affine => write!(f, "affine"),
            SequenceSpec::Factorial => write!(f, "factorial"),
            SequenceSpec::DoubleExp => write!(f, "doubleexp"),
            SequenceSpec::ExplicitList(v) => {
                write!(f, "list:")?;
                for (i, t) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
            SequenceSpec::Patch { base, index, value } => write!(f, "patch:{base}@{index}={value}"),
        }
    }
}

impl FromStr for SequenceSpec {
    type Err = Error;

    /// Strict parser for `geom:<c> | affine | factorial | doubleexp |
    /// list:<n0>,<n1>,... | patch:<base>@<k>=<v>`. The result is validated.
    fn from_str(s: &str) -> Result<Self> {
        let spec = parse_unvalidated(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_unvalidated(s: &str) -> Result<SequenceSpec> {
    let tok = |t: &str, why: &str| Error::InvalidSpec(format!("bad token {t:?}: {why}"));
    match s {
        "affine" => return Ok(SequenceSpec::Affine),
        "factorial" => return Ok(SequenceSpec::Factorial),
        "doubleexp" => return Ok(SequenceSpec::DoubleExp),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix("geom:") {
        let c: u64 = rest.parse().map_err(|_| tok(rest, "expected an integer ratio"))?;
        return Ok(SequenceSpec::Geometric(c));
    }
    if let Some(rest) = s.strip_prefix("list:") {
        let terms = rest
            .split(',')
            .map(|t| t.trim().parse::<BigUint>().map_err(|_| tok(t, "expected a nonnegative integer")))
            .collect::<Result<Vec<_>>>()?;
        return Ok(SequenceSpec::ExplicitList(terms));
    }
    if let Some(rest) = s.strip_prefix("patch:") {
        let (base, tail) = rest
            .rsplit_once('@')
            .ok_or_else(|| tok(rest, "expected <base>@<k>=<v>"))?;
        let (k, v) = tail
            .split_once('=')
            .ok_or_else(|| tok(tail, "expected <k>=<v>"))?;
        let index: usize = k.parse().map_err(|_| tok(k, "expected an index"))?;
        let value: BigUint = v.parse().map_err(|_| tok(v, "expected an integer value"))?;
        let base = parse_unvalidated(base)?;
        return Ok(SequenceSpec::patch(base, index, value));
    }
    Err(tok(s, "unknown sequence kind"))
}

impl Serialize for SequenceSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SequenceSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `n_0, ..., n_count` (inclusive).
pub fn generate(spec: &SequenceSpec, count: usize) -> Result<Vec<BigUint>> {
    spec.validate()?;
    let terms: Vec<BigUint> = spec.terms().take(count + 1).collect();
    if terms.len() < count + 1 {
        return Err(Error::ListTooShort {
            available: terms.len(),
            requested: count + 1,
        });
    }
    Ok(terms)
}

/// Up to `count + 1` leading terms; lists are cut at their length.
pub fn prefix(spec: &SequenceSpec, count: usize) -> Vec<BigUint> {
    spec.terms().take(count + 1).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "terms", rename_all = "snake_case")]
pub enum QuotientCertificate {
    ExactForFamily,
    PrefixOnly(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    /// `sup n_{k+1}/n_k`, or `None` when unbounded.
    pub bound: Option<Fraction>,
    pub achieved_at: Option<usize>,
    pub certificate: QuotientCertificate,
}

impl QuotientReport {
    pub fn bound_f64(&self) -> Option<f64> {
        self.bound.as_ref().map(Fraction::to_f64)
    }
}

/// Whether `n_{k+1}/n_k` is non-increasing in `k` for the family (so the sup
/// over a tail is its first quotient).
fn ratios_nonincreasing(spec: &SequenceSpec) -> bool {
    match spec {
        SequenceSpec::Geometric(_) | SequenceSpec::Affine => true,
        SequenceSpec::Patch { base, .. } => ratios_nonincreasing(base),
        _ => false,
    }
}

fn max_patch_index(spec: &SequenceSpec) -> usize {
    match spec {
        SequenceSpec::Patch { base, index, .. } => (*index).max(max_patch_index(base)),
        _ => 0,
    }
}

fn has_unbounded_base(spec: &SequenceSpec) -> bool {
    match spec {
        SequenceSpec::Factorial | SequenceSpec::DoubleExp => true,
        SequenceSpec::Patch { base, .. } => has_unbounded_base(base),
        _ => false,
    }
}

/// `sup_k n_{k+1}/n_k`. Exact for rule-based families, prefix maximum over
/// `k < count` for explicit lists.
pub fn quotient_bound(spec: &SequenceSpec, count: usize) -> QuotientReport {
    if has_unbounded_base(spec) {
        return QuotientReport {
            bound: None,
            achieved_at: None,
            certificate: QuotientCertificate::ExactForFamily,
        };
    }
    let (window, certificate) = if spec.is_prefix_only() {
        let avail = spec.available_terms().unwrap_or(0);
        let terms = count.max(1).min(avail.saturating_sub(1));
        (terms, QuotientCertificate::PrefixOnly(terms))
    } else {
        debug_assert!(ratios_nonincreasing(spec));
        // past the last patched index the quotients are non-increasing, so the
        // sup is attained within the first max_patch_index + 2 ratios
        (max_patch_index(spec) + 2, QuotientCertificate::ExactForFamily)
    };
    let terms = prefix(spec, window);
    let mut best: Option<(Fraction, usize)> = None;
    for (k, w) in terms.windows(2).enumerate() {
        let q = Fraction::new(w[1].clone(), w[0].clone()).expect("positive terms");
        if best.as_ref().is_none_or(|(b, _)| q > *b) {
            best = Some((q, k));
        }
    }
    QuotientReport {
        achieved_at: best.as_ref().map(|b| b.1),
        bound: best.map(|b| b.0),
        certificate,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "last_index", rename_all = "snake_case")]
pub enum StreamExactness {
    Exact,
    /// Residues known for `k <= K` only.
    TruncatedUnverifiedTail(usize),
}

/// Eventually periodic residue sequence `n_k mod q`: the preperiod followed by
/// the cycle repeated forever (when exact).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueStream {
    pub modulus: BigUint,
    pub preperiod: Vec<BigUint>,
    pub cycle: Vec<BigUint>,
    pub exactness: StreamExactness,
}

impl ResidueStream {
    pub fn is_exact(&self) -> bool {
        self.exactness == StreamExactness::Exact
    }

    /// Number of indices after which every residue has been seen.
    pub fn span(&self) -> usize {
        self.preperiod.len() + self.cycle.len()
    }

    /// `n_k mod q`, or `None` beyond a truncated stream.
    pub fn get(&self, k: usize) -> Option<&BigUint> {
        if k < self.preperiod.len() {
            return self.preperiod.get(k);
        }
        match self.exactness {
            StreamExactness::Exact => {
                let j = (k - self.preperiod.len()) % self.cycle.len();
                self.cycle.get(j)
            }
            StreamExactness::TruncatedUnverifiedTail(_) => None,
        }
    }

    /// `(k, residue)` for every index in the preperiod and one cycle pass.
    pub fn indexed(&self) -> impl Iterator<Item = (usize, &BigUint)> {
        self.preperiod.iter().chain(self.cycle.iter()).enumerate()
    }
}

pub fn residues(spec: &SequenceSpec, q: &BigUint) -> Result<ResidueStream> {
    residues_with_cap(spec, q, DEFAULT_STATE_CAP)
}

/// Residue stream with at most `cap` stored states; beyond it the stream is
/// reported as truncated.
pub fn residues_with_cap(spec: &SequenceSpec, q: &BigUint, cap: usize) -> Result<ResidueStream> {
    if q.is_zero() {
        return Err(Error::InvalidArgument("modulus must be >= 1".into()));
    }
    let cap = cap.max(2);
    let stream = match spec {
        SequenceSpec::Geometric(_) | SequenceSpec::Affine => autonomous(spec.residue_iter(q), q, 0, cap),
        // n_0 = 1 sits outside the squaring recurrence, which starts at k = 1
        SequenceSpec::DoubleExp => autonomous(spec.residue_iter(q), q, 1, cap),
        SequenceSpec::Factorial => {
            let mut pre = Vec::new();
            let mut exact = false;
            for r in spec.residue_iter(q).take(cap) {
                if r.is_zero() {
                    exact = true;
                    break;
                }
                pre.push(r);
            }
            if exact {
                ResidueStream {
                    modulus: q.clone(),
                    preperiod: pre,
                    cycle: vec![BigUint::zero()],
                    exactness: StreamExactness::Exact,
                }
            } else {
                let last = pre.len() - 1;
                ResidueStream {
                    modulus: q.clone(),
                    preperiod: pre,
                    cycle: Vec::new(),
                    exactness: StreamExactness::TruncatedUnverifiedTail(last),
                }
            }
        }
        SequenceSpec::ExplicitList(_) => {
            let pre: Vec<BigUint> = spec.residue_iter(q).take(cap).collect();
            let last = pre.len().saturating_sub(1);
            ResidueStream {
                modulus: q.clone(),
                preperiod: pre,
                cycle: Vec::new(),
                exactness: StreamExactness::TruncatedUnverifiedTail(last),
            }
        }
        SequenceSpec::Patch { base, index, value } => {
            let b = residues_with_cap(base, q, cap)?;
            patch_stream(b, *index, value % q)
        }
    };
    Ok(stream)
}

/// Cycle detection for residues generated by `r_{k+1} = f(r_k)` from index
/// `start` on; indices before `start` always go to the preperiod.
fn autonomous(
    iter: Box<dyn Iterator<Item = BigUint> + '_>,
    q: &BigUint,
    start: usize,
    cap: usize,
) -> ResidueStream {
    let mut seen: HashMap<BigUint, usize> = HashMap::new();
    let mut seq: Vec<BigUint> = Vec::new();
    for (k, r) in iter.enumerate() {
        if k >= start {
            if let Some(&j) = seen.get(&r) {
                let cycle = seq.split_off(j);
                return ResidueStream {
                    modulus: q.clone(),
                    preperiod: seq,
                    cycle,
                    exactness: StreamExactness::Exact,
                };
            }
            if seen.len() >= cap {
                let last = seq.len() - 1;
                return ResidueStream {
                    modulus: q.clone(),
                    preperiod: seq,
                    cycle: Vec::new(),
                    exactness: StreamExactness::TruncatedUnverifiedTail(last),
                };
            }
            seen.insert(r.clone(), k);
        }
        seq.push(r);
    }
    unreachable!("rule-based residue iterators are infinite")
}

fn patch_stream(base: ResidueStream, index: usize, value: BigUint) -> ResidueStream {
    match base.exactness {
        StreamExactness::Exact => {
            let unrolled = (base.preperiod.len()).max(index + 1);
            let mut pre: Vec<BigUint> = (0..unrolled)
                .map(|k| base.get(k).expect("exact stream").clone())
                .collect();
            pre[index] = value;
            let shift = (unrolled - base.preperiod.len()) % base.cycle.len();
            let mut cycle = base.cycle.clone();
            cycle.rotate_left(shift);
            ResidueStream {
                modulus: base.modulus,
                preperiod: pre,
                cycle,
                exactness: StreamExactness::Exact,
            }
        }
        StreamExactness::TruncatedUnverifiedTail(last) => {
            let mut pre = base.preperiod;
            if let Some(slot) = pre.get_mut(index) {
                *slot = value;
            }
            ResidueStream {
                modulus: base.modulus,
                preperiod: pre,
                cycle: Vec::new(),
                exactness: StreamExactness::TruncatedUnverifiedTail(last),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    fn spec(s: &str) -> SequenceSpec {
        s.parse().unwrap()
    }

    #[test]
    fn generate_examples() {
        assert_eq!(generate(&spec("geom:2"), 3).unwrap(), big(&[1, 2, 4, 8]));
        assert_eq!(generate(&spec("affine"), 2).unwrap(), big(&[1, 2, 3]));
        assert_eq!(generate(&spec("patch:geom:2@1=3"), 4).unwrap(), big(&[1, 3, 4, 8, 16]));
        assert_eq!(generate(&spec("factorial"), 3).unwrap(), big(&[1, 2, 6, 24]));
        assert_eq!(generate(&spec("doubleexp"), 3).unwrap(), big(&[1, 4, 16, 256]));
        assert_eq!(generate(&spec("list:1,5,7"), 2).unwrap(), big(&[1, 5, 7]));
        assert!(matches!(
            generate(&spec("list:1,5,7"), 3),
            Err(Error::ListTooShort { available: 3, requested: 4 })
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        for bad in [
            "geom:1",
            "geom:x",
            "list:2,3",
            "list:1,3,3",
            "list:",
            "patch:geom:2@1=5",
            "patch:geom:2@1=1",
            "patch:geom:2@0=1",
            "patch:list:1,2@2=7",
            "power:2",
        ] {
            assert!(bad.parse::<SequenceSpec>().is_err(), "{bad} should be rejected");
        }
        let err = "geom:abc".parse::<SequenceSpec>().unwrap_err().to_string();
        assert!(err.contains("abc"), "{err}");
    }

    #[test]
    fn display_round_trips() {
        for s in ["geom:7", "affine", "factorial", "doubleexp", "list:1,4,9", "patch:patch:geom:2@1=3@3=9"] {
            assert_eq!(spec(s).to_string(), s);
        }
    }

    #[test]
    fn quotient_examples() {
        let g = quotient_bound(&spec("geom:2"), 10);
        assert_eq!(g.bound, Some(Fraction::from_u64(2, 1).unwrap()));
        assert_eq!(g.certificate, QuotientCertificate::ExactForFamily);
        let a = quotient_bound(&spec("affine"), 10);
        assert_eq!(a.bound, Some(Fraction::from_u64(2, 1).unwrap()));
        assert_eq!(a.achieved_at, Some(0));
        assert_eq!(quotient_bound(&spec("factorial"), 10).bound, None);
        assert_eq!(quotient_bound(&spec("doubleexp"), 10).bound, None);
        let p = quotient_bound(&spec("patch:geom:2@1=3"), 10);
        assert_eq!(p.bound, Some(Fraction::from_u64(3, 1).unwrap()));
        assert_eq!(p.achieved_at, Some(0));
        let pa = quotient_bound(&spec("patch:affine@1=2"), 10);
        assert_eq!(pa.bound, Some(Fraction::from_u64(2, 1).unwrap()));
        let l = quotient_bound(&spec("list:1,2,7,8"), 10);
        assert_eq!(l.bound, Some(Fraction::from_u64(7, 2).unwrap()));
        assert_eq!(l.certificate, QuotientCertificate::PrefixOnly(3));
    }

    #[test]
    fn quotient_of_geometric_is_its_ratio() {
        for c in 2..=64u64 {
            let r = quotient_bound(&SequenceSpec::Geometric(c), 5);
            assert_eq!(r.bound, Some(Fraction::from_u64(c, 1).unwrap()));
            assert!(r.bound_f64().unwrap() >= 1.0);
        }
    }

    #[test]
    fn residue_examples() {
        let s = residues(&spec("geom:2"), &BigUint::from(3u32)).unwrap();
        assert!(s.preperiod.is_empty());
        assert_eq!(s.cycle, big(&[1, 2]));
        let f = residues(&spec("factorial"), &BigUint::from(6u32)).unwrap();
        assert_eq!(f.preperiod, big(&[1, 2]));
        assert_eq!(f.cycle, big(&[0]));
        let a = residues(&spec("affine"), &BigUint::from(4u32)).unwrap();
        assert!(a.preperiod.is_empty());
        assert_eq!(a.cycle, big(&[1, 2, 3, 0]));
        let d = residues(&spec("doubleexp"), &BigUint::from(1u64 << 32)).unwrap();
        assert_eq!(d.preperiod, big(&[1, 4, 16, 256, 65536]));
        assert_eq!(d.cycle, big(&[0]));
        let l = residues(&spec("list:1,5,9"), &BigUint::from(4u32)).unwrap();
        assert_eq!(l.exactness, StreamExactness::TruncatedUnverifiedTail(2));
        assert_eq!(l.preperiod, big(&[1, 1, 1]));
        let p = residues(&spec("patch:geom:2@1=3"), &BigUint::from(4u32)).unwrap();
        assert_eq!(p.preperiod, big(&[1, 3]));
        assert_eq!(p.cycle, big(&[0]));
    }

    #[test]
    fn cap_degrades_to_truncated() {
        let s = residues_with_cap(&spec("affine"), &BigUint::from(1000u32), 10).unwrap();
        assert!(!s.is_exact());
        assert_eq!(s.preperiod.len(), 10);
    }

    #[test]
    fn first_index_at_least_matches_scan() {
        for s in ["geom:3", "affine", "factorial", "doubleexp", "patch:geom:2@1=3", "patch:geom:3@2=5"] {
            let sp = spec(s);
            let terms = prefix(&sp, 12);
            for n in 1..300u64 {
                let Some(want) = terms.iter().position(|t| *t >= BigUint::from(n)) else {
                    continue;
                };
                let want = Some(want);
                assert_eq!(sp.first_index_at_least(&BigUint::from(n)), want, "{s} n={n}");
            }
        }
        assert_eq!(spec("affine").first_index_at_least(&BigUint::from(10u64.pow(12))), Some(999_999_999_999));
    }

    #[test]
    fn capped_terms_agree_with_terms() {
        for s in ["geom:5", "factorial", "doubleexp", "patch:doubleexp@2=20", "list:1,2,3"] {
            let sp = spec(s);
            let capped = sp.capped_terms(12, 100);
            assert_eq!(capped.len(), sp.available_terms().unwrap_or(12).min(12));
            for (t, c) in sp.terms().take(12).zip(&capped) {
                match c {
                    Some(v) => assert_eq!(BigUint::from(*v), t),
                    None => assert!(t.bits() >= 100),
                }
            }
        }
    }
}
