//! The unit circle: the deviation `sup_k |λ^{n_k} - 1|`, certified two-sided
//! bounds on the Jamison constant, pair decisions, `Λ_ε` exploration and
//! η-density of orbits modulo 1.
//!
//! Points are `λ = e^{2πiθ}`. Every evaluation goes through
//! `|e^{2πinθ} - 1| = 2 sin(π ⟨⟨nθ⟩⟩)`, with `⟨⟨·⟩⟩` the distance to the
//! nearest integer computed exactly: rational `θ = p/q` reduces `p·n_k mod q`
//! through residue streams, and a float `θ` is first converted to its exact
//! dyadic value.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ratio_to_f64, simplest_between, Fraction};
use crate::seqcore::{self, quotient_bound, QuotientCertificate, SequenceSpec, StreamExactness};

/// Default symmetric tolerance for comparisons against algebraic values.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Slack subtracted from (or added to) floating sine evaluations so that
/// lower (upper) enclosures stay on the safe side of rounding.
const ROUNDING_SLACK: f64 = 8.0 * f64::EPSILON;

/// `2 sin(π d)` for a nearest-integer distance `d ∈ [0, 1/2]`.
pub fn chord(d: f64) -> f64 {
    2.0 * (std::f64::consts::PI * d).sin()
}

/// Analytic bounded-quotient bound `2 sin(π/(c+1))`.
pub fn bounded_quotient_bound(c: &Fraction) -> f64 {
    // 1/(c+1) = den/(num+den)
    let x = Fraction::new(c.den().clone(), c.num() + c.den()).expect("positive");
    chord(x.to_f64())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnimodularPoint {
    /// `θ = p/q` in lowest terms with `0 <= p < q`.
    Rational(Fraction),
    /// `θ ∈ [0, 1)`.
    Float(f64),
}

impl UnimodularPoint {
    pub fn rational(p: u64, q: u64) -> Result<Self> {
        Self::from_fraction(Fraction::from_u64(p, q)?)
    }

    pub fn from_fraction(f: Fraction) -> Result<Self> {
        if f.num() >= f.den() {
            return Err(Error::InvalidArgument(format!("θ = {f} is not in [0, 1)")));
        }
        Ok(UnimodularPoint::Rational(f))
    }

    pub fn float(theta: f64) -> Result<Self> {
        if !theta.is_finite() || !(0.0..1.0).contains(&theta) {
            return Err(Error::InvalidArgument(format!("θ = {theta} is not in [0, 1)")));
        }
        Ok(UnimodularPoint::Float(theta))
    }

    pub fn theta(&self) -> f64 {
        match self {
            UnimodularPoint::Rational(f) => f.to_f64(),
            UnimodularPoint::Float(t) => *t,
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            UnimodularPoint::Rational(f) => f.is_zero(),
            UnimodularPoint::Float(t) => *t == 0.0,
        }
    }

    /// The exact value of θ (dyadic for floats).
    pub fn exact_theta(&self) -> Fraction {
        match self {
            UnimodularPoint::Rational(f) => f.clone(),
            UnimodularPoint::Float(t) => Fraction::from_f64(*t).expect("validated float"),
        }
    }

    /// `1 - θ` (mod 1), i.e. the complex conjugate point.
    pub fn conjugate(&self) -> Self {
        match self {
            UnimodularPoint::Rational(f) if f.is_zero() => self.clone(),
            UnimodularPoint::Rational(f) => UnimodularPoint::Rational(
                Fraction::new(f.den() - f.num(), f.den().clone()).expect("positive"),
            ),
            UnimodularPoint::Float(t) if *t == 0.0 => self.clone(),
            UnimodularPoint::Float(t) => UnimodularPoint::Float(1.0 - t),
        }
    }
}

impl fmt::Display for UnimodularPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnimodularPoint::Rational(r) => write!(f, "{r}"),
            UnimodularPoint::Float(t) => write!(f, "{t}"),
        }
    }
}

impl std::str::FromStr for UnimodularPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.contains('/') || !s.contains('.') && !s.contains('e') {
            Self::from_fraction(s.parse()?)
        } else {
            let t: f64 = s
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("not a point: {s:?}")))?;
            Self::float(t)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "k", rename_all = "snake_case")]
pub enum DeviationExactness {
    /// The supremum over all `k >= 0`.
    ExactAlgebraic,
    /// Maximum over `k <= K` only.
    TruncatedAt(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationResult {
    pub value: f64,
    pub argmax_k: Option<usize>,
    pub exactness: DeviationExactness,
    /// Exact nearest-integer distance `d` with `value = 2 sin(π d)`.
    pub peak: Option<Fraction>,
}

impl DeviationResult {
    pub fn is_exact(&self) -> bool {
        self.exactness == DeviationExactness::ExactAlgebraic
    }
}

/// Running maximum of `⟨⟨p·r/q⟩⟩` over residues `r`, kept as an integer
/// numerator over `q`.
struct PeakTracker<'a> {
    p: &'a BigUint,
    q: &'a BigUint,
    best: Option<(BigUint, usize)>,
}

impl<'a> PeakTracker<'a> {
    fn new(p: &'a BigUint, q: &'a BigUint) -> Self {
        PeakTracker { p, q, best: None }
    }

    fn push(&mut self, k: usize, r: &BigUint) {
        let x = (self.p * r) % self.q;
        let y = self.q - &x;
        let d = if x <= y { x } else { y };
        if self.best.as_ref().is_none_or(|(b, _)| d > *b) {
            self.best = Some((d, k));
        }
    }

    fn finish(self, exactness: DeviationExactness) -> DeviationResult {
        match self.best {
            Some((d, k)) => {
                let peak = Fraction::new(d, self.q.clone()).expect("q > 0");
                DeviationResult {
                    value: chord(peak.to_f64()),
                    argmax_k: Some(k),
                    exactness,
                    peak: Some(peak),
                }
            }
            None => DeviationResult {
                value: 0.0,
                argmax_k: None,
                exactness,
                peak: None,
            },
        }
    }
}

/// `max_{0<=k<=K} |λ^{n_k} - 1|`. Reported as exact when θ is rational and
/// the first `K + 1` indices already cover the whole eventually periodic
/// residue stream.
pub fn deviation(point: &UnimodularPoint, spec: &SequenceSpec, k_max: usize) -> DeviationResult {
    let theta = point.exact_theta();
    let (p, q) = (theta.num(), theta.den());
    let mut tracker = PeakTracker::new(p, q);
    let mut last = 0;
    for (k, r) in spec.residue_iter(q).take(k_max + 1).enumerate() {
        tracker.push(k, &r);
        last = k;
    }
    let mut exactness = DeviationExactness::TruncatedAt(last);
    if matches!(point, UnimodularPoint::Rational(_)) {
        if let Ok(stream) = seqcore::residues_with_cap(spec, q, k_max + 2) {
            if stream.is_exact() && stream.span() <= k_max + 1 {
                exactness = DeviationExactness::ExactAlgebraic;
            }
        }
    }
    tracker.finish(exactness)
}

/// `sup_{k>=0} |λ^{n_k} - 1|` at a rational point, via its residue stream.
pub fn exact_deviation(theta: &Fraction, spec: &SequenceSpec) -> Result<DeviationResult> {
    let stream = seqcore::residues(spec, theta.den())?;
    if !stream.is_exact() {
        return Err(Error::InexactTail {
            modulus: theta.den().to_string(),
        });
    }
    let mut tracker = PeakTracker::new(theta.num(), theta.den());
    for (k, r) in stream.indexed() {
        tracker.push(k, r);
    }
    Ok(tracker.finish(DeviationExactness::ExactAlgebraic))
}

/// Distinct residues of `n_k mod q` for a machine-sized modulus, plus the
/// first index at which each residue appears.
struct SmallStream {
    q: u64,
    residues: Vec<(u64, usize)>,
    exact: bool,
}

impl SmallStream {
    fn new(spec: &SequenceSpec, q: u64) -> Option<Self> {
        let stream = seqcore::residues(spec, &BigUint::from(q)).ok()?;
        let exact = stream.is_exact();
        let mut residues: Vec<(u64, usize)> = stream
            .indexed()
            .map(|(k, r)| (r.to_u64().expect("residue < q"), k))
            .collect();
        residues.sort_unstable();
        residues.dedup_by_key(|e| e.0);
        Some(SmallStream { q, residues, exact })
    }

    /// Peak distance numerator for `θ = p/q`; stops early once it reaches
    /// `stop` (a value that can no longer win).
    fn peak(&self, p: u64, stop: Option<(u64, u64)>) -> (u64, usize) {
        let q = self.q as u128;
        let mut best = (0u64, 0usize);
        let mut first = true;
        for &(r, k) in &self.residues {
            let x = (p as u128 * r as u128 % q) as u64;
            let d = x.min(self.q - x);
            if first || d > best.0 || (d == best.0 && k < best.1) {
                best = (d, k);
                first = false;
            }
            if let Some((sd, sq)) = stop {
                // d/q > sd/sq
                if best.0 as u128 * sq as u128 > sd as u128 * q {
                    break;
                }
            }
        }
        best
    }
}

/// Witness families that reach θ = 0 along the rule of the sequence, in
/// increasing denominator. Empty for sequences without such a pattern.
pub fn family_witness_list(spec: &SequenceSpec, limit: usize) -> Vec<(Fraction, String)> {
    let root = base_family(spec);
    let mut out = Vec::new();
    match root {
        SequenceSpec::Factorial => {
            let mut fact = BigUint::one();
            for n in 2..=limit.max(2) {
                fact *= n;
                out.push((
                    Fraction::new(BigUint::one(), fact.clone()).expect("positive"),
                    format!("1/{n}!"),
                ));
            }
        }
        SequenceSpec::DoubleExp => {
            for m in 1..=limit.clamp(1, 16) {
                out.push((
                    Fraction::new(BigUint::one(), BigUint::one() << (1usize << m)).expect("positive"),
                    format!("2^-(2^{m})"),
                ));
            }
        }
        _ => {}
    }
    out
}

fn base_family(spec: &SequenceSpec) -> &SequenceSpec {
    match spec {
        SequenceSpec::Patch { base, .. } => base_family(base),
        other => other,
    }
}

/// Search limits shared by the witness scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Largest denominator in the generic Stern–Brocot scan.
    pub q_max: u64,
    /// Family witnesses: `1/N!` for `N <= family_limit` (factorial),
    /// `2^-(2^m)` for `m <= min(family_limit, 16)` (doubleexp).
    pub family_limit: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            q_max: 64,
            family_limit: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub value: f64,
    pub witness: UnimodularPoint,
    pub witness_label: String,
    /// The witness deviation is the exact sup over all k.
    pub attains: bool,
    pub peak: Option<Fraction>,
}

/// Candidate minimum of the exact deviation over rational witnesses.
#[derive(Clone, Debug)]
struct Candidate {
    peak: Fraction,
    theta: Fraction,
    label: String,
    exact: bool,
}

/// Minimum exact deviation over nontrivial rational witnesses `p/q` with
/// `2 <= q <= q_max`, plus the family witnesses. Ties resolve to the smallest
/// denominator, then the smallest numerator.
pub fn jamison_upper_bound(spec: &SequenceSpec, scan: &ScanOptions) -> UpperBound {
    let q_max = scan.q_max.max(2);
    let per_q: Vec<Option<Candidate>> = (2..=q_max)
        .into_par_iter()
        .map(|q| {
            let stream = SmallStream::new(spec, q)?;
            let mut best: Option<(u64, u64)> = None; // (d, p)
            for p in 1..=q / 2 {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let (d, _) = stream.peak(p, best.map(|(d, _)| (d, q)));
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, p));
                }
            }
            best.map(|(d, p)| Candidate {
                peak: Fraction::from_u64(d, q).expect("q > 0"),
                theta: Fraction::from_u64(p, q).expect("q > 0"),
                label: format!("{p}/{q}"),
                exact: stream.exact,
            })
        })
        .collect();
    let mut best: Option<Candidate> = None;
    let consider = |c: Candidate, best: &mut Option<Candidate>| {
        if best.as_ref().is_none_or(|b| c.peak < b.peak) {
            *best = Some(c);
        }
    };
    for c in per_q.into_iter().flatten() {
        consider(c, &mut best);
    }
    for (theta, label) in family_witness_list(spec, scan.family_limit) {
        if let Ok(dev) = exact_deviation(&theta, spec) {
            let peak = dev.peak.unwrap_or_else(Fraction::zero);
            consider(
                Candidate {
                    peak,
                    theta,
                    label,
                    exact: true,
                },
                &mut best,
            );
        }
    }
    let best = best.expect("q = 2 always yields a candidate");
    UpperBound {
        value: chord(best.peak.to_f64()),
        witness: UnimodularPoint::Rational(best.theta),
        witness_label: best.label,
        attains: best.exact,
        peak: Some(best.peak),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "theta0", rename_all = "snake_case")]
pub enum LowerRegion {
    /// Valid for every `λ ≠ 1`.
    Global,
    /// Valid for `θ ∈ [θ0, 1 - θ0]` only.
    ThetaAtLeast(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBound {
    pub quotient_bound: Fraction,
    pub value: f64,
    /// The quotient bound was read off a finite prefix only.
    pub prefix_only: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchBound {
    /// Left end of the covered region (a dyadic at or below the requested θ0).
    pub theta0: f64,
    pub truncation_k: usize,
    /// Certified lower bound of `min_{θ ∈ [θ0, 1/2]} max_{k<=K} 2|sin(π n_k θ)|`.
    pub lower: f64,
    /// Best value found at an evaluated point.
    pub upper: f64,
    pub upper_at: Option<Fraction>,
    pub nodes: usize,
    /// The lower and upper values met within the gap tolerance.
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    pub region: LowerRegion,
    pub analytic: Option<AnalyticBound>,
    pub branch_and_bound: Option<BranchBound>,
}

/// Options for the two-sided estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub theta0: f64,
    /// Truncation for the branch-and-bound objective; `None` picks the default.
    pub truncation: Option<usize>,
    pub node_budget: usize,
    pub scan: ScanOptions,
    /// Also run branch-and-bound when the analytic certificate exists.
    pub always_branch: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            theta0: 1e-3,
            truncation: None,
            node_budget: 200_000,
            scan: ScanOptions::default(),
            always_branch: false,
        }
    }
}

/// Default truncation: the first `K` with `n_K >= 1/((c+1)θ0)` for bounded
/// quotients, 64 otherwise.
pub fn default_truncation(spec: &SequenceSpec, theta0: f64) -> usize {
    let qb = quotient_bound(spec, 64);
    let k = match qb.bound_f64() {
        Some(c) => {
            let target = (1.0 / ((c + 1.0) * theta0)).ceil();
            let target = BigUint::from(target.min(1e30) as u128);
            spec.first_index_at_least(&target).unwrap_or(64)
        }
        None => 64,
    };
    match spec.available_terms() {
        Some(n) => k.min(n.saturating_sub(1)),
        None => k,
    }
}

pub fn analytic_bound(spec: &SequenceSpec) -> Option<AnalyticBound> {
    let qb = quotient_bound(spec, 64);
    let c = qb.bound?;
    Some(AnalyticBound {
        value: bounded_quotient_bound(&c),
        quotient_bound: c,
        prefix_only: matches!(qb.certificate, QuotientCertificate::PrefixOnly(_)),
    })
}

/// Lower bound on the Jamison constant: the bounded-quotient certificate when
/// the quotients are bounded (valid for all θ), otherwise a branch-and-bound
/// certificate on `θ ∈ [θ0, 1/2]`.
pub fn jamison_lower_bound(
    spec: &SequenceSpec,
    theta0: f64,
    truncation: Option<usize>,
    node_budget: usize,
    always_branch: bool,
) -> Result<LowerBound> {
    if !(theta0 > 0.0 && theta0 <= 0.5) {
        return Err(Error::InvalidArgument(format!("theta0 = {theta0} not in (0, 1/2]")));
    }
    let analytic = analytic_bound(spec);
    let bnb = if analytic.is_none() || always_branch {
        let k = truncation.unwrap_or_else(|| default_truncation(spec, theta0));
        Some(branch_and_bound(spec, theta0, k, node_budget))
    } else {
        None
    };
    if let Some(a) = &analytic {
        return Ok(LowerBound {
            value: a.value,
            region: LowerRegion::Global,
            analytic: analytic.clone(),
            branch_and_bound: bnb,
        });
    }
    let b = bnb.expect("branch-and-bound ran");
    if b.lower <= 0.0 {
        return Err(Error::NoCertificate {
            reason: format!(
                "unbounded quotients and no positive bound on [{}, 1/2] after {} nodes",
                b.theta0, b.nodes
            ),
        });
    }
    Ok(LowerBound {
        value: b.lower,
        region: LowerRegion::ThetaAtLeast(b.theta0),
        analytic: None,
        branch_and_bound: Some(b),
    })
}

/// Fixed-point resolution of the branch-and-bound grid.
const ROOT_BITS: u32 = 24;
const MAX_DEPTH: u32 = 100;
const GRID_BITS: u32 = ROOT_BITS + MAX_DEPTH;
const GAP_TOL: f64 = 1e-11;
const PRUNE_TOL: f64 = 1e-12;

struct Objective {
    /// `n_k mod 2^GRID_BITS`
    residues: Vec<u128>,
    /// `n_k` when below `2^GRID_BITS`
    terms: Vec<Option<u128>>,
    spec: SequenceSpec,
    k_max: usize,
}

fn grid_mask() -> u128 {
    (1u128 << GRID_BITS) - 1
}

fn grid_to_f64(x: u128) -> f64 {
    x as f64 / (1u128 << GRID_BITS) as f64
}

impl Objective {
    fn new(spec: &SequenceSpec, k_max: usize) -> Self {
        let modulus = BigUint::one() << GRID_BITS as usize;
        let residues: Vec<u128> = spec
            .residue_iter(&modulus)
            .take(k_max + 1)
            .map(|r| r.to_u128().expect("below 2^124"))
            .collect();
        let terms = spec.capped_terms(residues.len(), GRID_BITS as u64);
        Objective {
            residues,
            terms,
            spec: spec.clone(),
            k_max,
        }
    }

    /// Certified lower bound of `f_K` on `[a, b]` (grid units).
    fn lower(&self, a: u128, b: u128) -> f64 {
        let width = b - a;
        let full = 1u128 << GRID_BITS;
        let mut best: f64 = 0.0;
        for (r, n) in self.residues.iter().zip(&self.terms) {
            let Some(n) = n else { continue };
            let Some(span) = n.checked_mul(width) else { continue };
            if span >= full {
                continue;
            }
            let fa = r.wrapping_mul(a) & grid_mask();
            if fa == 0 {
                continue;
            }
            let fb = fa + span;
            if fb >= full {
                continue;
            }
            let lo = (std::f64::consts::PI * grid_to_f64(fa))
                .sin()
                .min((std::f64::consts::PI * grid_to_f64(fb)).sin());
            best = best.max(2.0 * lo - ROUNDING_SLACK);
        }
        best
    }

    /// Upper estimate of `f_K` at a grid point.
    fn at_grid(&self, x: u128) -> f64 {
        let full = 1u128 << GRID_BITS;
        let mut best: u128 = 0;
        for r in &self.residues {
            let f = r.wrapping_mul(x) & grid_mask();
            best = best.max(f.min(full - f));
        }
        chord(grid_to_f64(best)) + ROUNDING_SLACK
    }

    /// Upper estimate of `f_K` at a rational point.
    fn at_rational(&self, theta: &Fraction) -> f64 {
        let dev = deviation(&UnimodularPoint::Rational(theta.clone()), &self.spec, self.k_max);
        dev.value + ROUNDING_SLACK
    }
}

#[derive(PartialEq)]
struct Node {
    lower: f64,
    a: u128,
    b: u128,
    depth: u32,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on the lower bound, ties broken by position for determinism
        other
            .lower
            .total_cmp(&self.lower)
            .then_with(|| other.a.cmp(&self.a))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Interval branch-and-bound for `inf_{θ ∈ [θ0, 1/2]} f_K(θ)` with
/// `f_K(θ) = max_{k<=K} 2|sin(π n_k θ)|`.
///
/// Each term is enclosed on a dyadic interval exactly: the interval of
/// `n_k θ` either contains an integer (term bound 0) or lies inside one period,
/// where `|sin(π x)|` is concave and its minimum sits at an endpoint. Upper
/// values come from midpoints and from the simplest rational in each node.
pub fn branch_and_bound(spec: &SequenceSpec, theta0: f64, k_max: usize, node_budget: usize) -> BranchBound {
    let obj = Objective::new(spec, k_max);
    let root_scale = 1u128 << ROOT_BITS;
    let a0 = ((theta0 * root_scale as f64).floor() as u128).max(1);
    let a = a0 << MAX_DEPTH;
    let b = 1u128 << (GRID_BITS - 1);
    let theta0_used = grid_to_f64(a);

    let mut best_upper = obj.at_grid(a).min(obj.at_grid(b));
    let mut best_at = Some(if obj.at_grid(a) <= obj.at_grid(b) {
        Fraction::new(BigUint::from(a), BigUint::one() << GRID_BITS as usize).expect("positive")
    } else {
        Fraction::from_u64(1, 2).expect("positive")
    });
    let mut floor = f64::INFINITY;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        lower: obj.lower(a, b),
        a,
        b,
        depth: 0,
    });
    let mut nodes = 1usize;
    let mut converged = false;

    while let Some(node) = heap.pop() {
        let current = node.lower.min(floor);
        if best_upper - current <= GAP_TOL {
            converged = true;
            floor = current;
            heap.clear();
            break;
        }
        if node.depth >= MAX_DEPTH || nodes >= node_budget {
            floor = floor.min(node.lower);
            if nodes >= node_budget {
                break;
            }
            continue;
        }
        let mid = node.a + (node.b - node.a) / 2;
        let vm = obj.at_grid(mid);
        if vm < best_upper {
            best_upper = vm;
            best_at = Some(
                Fraction::new(BigUint::from(mid), BigUint::one() << GRID_BITS as usize).expect("positive"),
            );
        }
        let lo = Fraction::new(BigUint::from(node.a), BigUint::one() << GRID_BITS as usize).expect("positive");
        let hi = Fraction::new(BigUint::from(node.b), BigUint::one() << GRID_BITS as usize).expect("positive");
        let simple = simplest_between(&lo, &hi);
        if simple.den().bits() <= 96 {
            let vs = obj.at_rational(&simple);
            if vs < best_upper {
                best_upper = vs;
                best_at = Some(simple);
            }
        }
        for (ca, cb) in [(node.a, mid), (mid, node.b)] {
            nodes += 1;
            let lower = obj.lower(ca, cb);
            if lower >= best_upper - PRUNE_TOL {
                floor = floor.min(lower);
                continue;
            }
            heap.push(Node {
                lower,
                a: ca,
                b: cb,
                depth: node.depth + 1,
            });
        }
    }
    let remaining = heap.iter().map(|n| n.lower).fold(f64::INFINITY, f64::min);
    let lower = floor.min(remaining).min(best_upper).max(0.0);
    BranchBound {
        theta0: theta0_used,
        truncation_k: obj.residues.len().saturating_sub(1),
        lower,
        upper: best_upper,
        upper_at: best_at,
        nodes,
        converged,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JamisonEstimate {
    pub spec: SequenceSpec,
    pub lower_bound: f64,
    pub lower_region: LowerRegion,
    pub upper_bound: f64,
    pub witness: UnimodularPoint,
    pub witness_label: String,
    pub witness_attains: bool,
    pub truncation_k: usize,
    pub analytic: Option<AnalyticBound>,
    /// Region certificate on `[θ0, 1/2]` when no global one exists.
    pub region_bound: Option<BranchBound>,
    pub conventions: Vec<String>,
}

/// Two-sided estimate `lower_bound <= J <= upper_bound`.
///
/// `lower_bound` is always a global statement (0 when only a region
/// certificate exists); the region certificate is carried separately.
pub fn jamison_constant(spec: &SequenceSpec, options: &EstimateOptions) -> Result<JamisonEstimate> {
    spec.validate()?;
    let upper = jamison_upper_bound(spec, &options.scan);
    let lower = jamison_lower_bound(
        spec,
        options.theta0,
        options.truncation,
        options.node_budget,
        options.always_branch,
    );
    let (lower_bound, analytic, region_bound) = match lower {
        Ok(lb) => match lb.region {
            LowerRegion::Global => (lb.value, lb.analytic, lb.branch_and_bound),
            LowerRegion::ThetaAtLeast(_) => (0.0, None, lb.branch_and_bound),
        },
        Err(Error::NoCertificate { .. }) => (0.0, None, None),
        Err(e) => return Err(e),
    };
    let truncation_k = options
        .truncation
        .unwrap_or_else(|| default_truncation(spec, options.theta0));
    Ok(JamisonEstimate {
        spec: spec.clone(),
        lower_bound,
        lower_region: LowerRegion::Global,
        upper_bound: upper.value,
        witness: upper.witness,
        witness_label: upper.witness_label,
        witness_attains: upper.attains,
        truncation_k,
        analytic,
        region_bound,
        conventions: spec.conventions().into_iter().map(String::from).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PairVerdict {
    CertifiedYes {
        lower_bound: f64,
    },
    CertifiedNo {
        witness: UnimodularPoint,
        witness_label: String,
        deviation: f64,
    },
    Unknown {
        lower_bound: Option<f64>,
        searched_q_max: u64,
        searched_family_limit: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub spec: SequenceSpec,
    pub epsilon: f64,
    pub strict: bool,
    pub tol: f64,
    #[serde(flatten)]
    pub verdict: PairVerdict,
}

/// Enumerates rational witnesses in search order: Stern–Brocot by
/// denominator (`q <= q_max`, then `p` increasing), then the family pattern.
/// Calls `visit` with each exact deviation; stops at the first `true`.
fn scan_witnesses(
    spec: &SequenceSpec,
    scan: &ScanOptions,
    mut visit: impl FnMut(&Fraction, &str, &DeviationResult) -> bool,
) -> Option<(Fraction, String, DeviationResult)> {
    for q in 2..=scan.q_max.max(2) {
        let Some(stream) = SmallStream::new(spec, q) else {
            continue;
        };
        if !stream.exact {
            continue;
        }
        for p in 1..q {
            if p.gcd(&q) != 1 {
                continue;
            }
            let (d, k) = stream.peak(p, None);
            let peak = Fraction::from_u64(d, q).expect("q > 0");
            let dev = DeviationResult {
                value: chord(peak.to_f64()),
                argmax_k: Some(k),
                exactness: DeviationExactness::ExactAlgebraic,
                peak: Some(peak),
            };
            let theta = Fraction::from_u64(p, q).expect("q > 0");
            let label = theta.to_string();
            if visit(&theta, &label, &dev) {
                return Some((theta, label, dev));
            }
        }
    }
    for (theta, label) in family_witness_list(spec, scan.family_limit) {
        if let Ok(dev) = exact_deviation(&theta, spec) {
            if visit(&theta, &label, &dev) {
                return Some((theta, label, dev));
            }
        }
    }
    None
}

/// Decides whether `((n_k), ε)` is a Jamison pair (`sup >= ε` for all
/// `λ ≠ 1`), or a strict one (`sup > ε`).
pub fn pair_check(
    spec: &SequenceSpec,
    epsilon: f64,
    strict: bool,
    tol: f64,
    options: &EstimateOptions,
) -> Result<PairReport> {
    spec.validate()?;
    if !(epsilon > 0.0 && epsilon <= 2.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} not in (0, 2]")));
    }
    let global = match jamison_lower_bound(spec, options.theta0, options.truncation, options.node_budget, false) {
        Ok(lb) if lb.region == LowerRegion::Global && !lb.analytic.as_ref().is_some_and(|a| a.prefix_only) => {
            Some(lb.value)
        }
        Ok(_) | Err(Error::NoCertificate { .. }) => None,
        Err(e) => return Err(e),
    };
    let report = |verdict| PairReport {
        spec: spec.clone(),
        epsilon,
        strict,
        tol,
        verdict,
    };
    if let Some(lb) = global {
        let yes = if strict { lb > epsilon + tol } else { lb >= epsilon - tol };
        if yes {
            return Ok(report(PairVerdict::CertifiedYes { lower_bound: lb }));
        }
    }
    let hit = scan_witnesses(spec, &options.scan, |_, _, dev| {
        if strict {
            dev.value <= epsilon + tol
        } else {
            dev.value < epsilon - tol
        }
    });
    Ok(report(match hit {
        Some((theta, label, dev)) => PairVerdict::CertifiedNo {
            witness: UnimodularPoint::Rational(theta),
            witness_label: label,
            deviation: dev.value,
        },
        None => PairVerdict::Unknown {
            lower_bound: global,
            searched_q_max: options.scan.q_max,
            searched_family_limit: options.scan.family_limit,
        },
    }))
}

/// First rational witness with exact deviation below `epsilon`, in search order.
pub fn first_witness_below(
    spec: &SequenceSpec,
    epsilon: f64,
    scan: &ScanOptions,
) -> Option<(Fraction, String, DeviationResult)> {
    scan_witnesses(spec, scan, |theta, _, dev| !theta.is_zero() && dev.value < epsilon)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaMember {
    pub theta: Fraction,
    pub label: String,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSet {
    pub epsilon: f64,
    pub denominator_limit: u64,
    pub members: Vec<LambdaMember>,
    /// Members other than θ = 0.
    pub nontrivial: usize,
    /// False when some denominators had truncated residue streams (those
    /// denominators are skipped).
    pub complete: bool,
}

/// All reduced `p/q` with `q <= q_max` whose exact deviation is below `epsilon`.
pub fn lambda_set(spec: &SequenceSpec, epsilon: f64, q_max: u64) -> Result<LambdaSet> {
    spec.validate()?;
    // epsilon above 2 is allowed here: it simply admits every point
    if !(epsilon > 0.0 && epsilon.is_finite()) || q_max < 2 {
        return Err(Error::InvalidArgument("need epsilon > 0 and Q >= 2".into()));
    }
    let mut members = vec![LambdaMember {
        theta: Fraction::zero(),
        label: "0".into(),
        deviation: 0.0,
    }];
    let mut complete = true;
    let per_q: Vec<(bool, Vec<LambdaMember>)> = (2..=q_max)
        .into_par_iter()
        .map(|q| {
            let Some(stream) = SmallStream::new(spec, q) else {
                return (false, Vec::new());
            };
            if !stream.exact {
                return (false, Vec::new());
            }
            let mut out = Vec::new();
            for p in 1..q {
                if p.gcd(&q) != 1 {
                    continue;
                }
                let (d, _) = stream.peak(p, None);
                let value = chord(d as f64 / q as f64);
                if value < epsilon {
                    let theta = Fraction::from_u64(p, q).expect("q > 0");
                    out.push(LambdaMember {
                        label: theta.to_string(),
                        theta,
                        deviation: value,
                    });
                }
            }
            (true, out)
        })
        .collect();
    for (ok, m) in per_q {
        complete &= ok;
        members.extend(m);
    }
    let nontrivial = members.len() - 1;
    Ok(LambdaSet {
        epsilon,
        denominator_limit: q_max,
        members,
        nontrivial,
        complete,
    })
}

/// Members of `Λ_ε` inside the family witness pattern (`1/N!`, `2^-(2^m)`).
pub fn lambda_set_in_family(spec: &SequenceSpec, epsilon: f64, family_limit: usize) -> Result<Vec<LambdaMember>> {
    spec.validate()?;
    let mut out = Vec::new();
    for (theta, label) in family_witness_list(spec, family_limit) {
        let dev = exact_deviation(&theta, spec)?;
        if dev.value < epsilon {
            out.push(LambdaMember {
                theta,
                label,
                deviation: dev.value,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EtaDensity {
    EtaDense { max_gap: f64 },
    /// The open arc `(gap_start, gap_start + gap_length)` modulo 1 holds no
    /// orbit point.
    NotEtaDense { gap_start: f64, gap_length: f64 },
}

/// Checks whether `{n_k θ mod 1 : k <= K}` meets every open interval of length
/// greater than `eta`; the orbit is computed exactly.
pub fn eta_density_scan(point: &UnimodularPoint, spec: &SequenceSpec, k_max: usize, eta: f64) -> Result<EtaDensity> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!("eta = {eta} not in (0, 1)")));
    }
    let theta = point.exact_theta();
    let (p, q) = (theta.num(), theta.den());
    let mut orbit: Vec<BigUint> = spec
        .residue_iter(q)
        .take(k_max + 1)
        .map(|r| (p * r) % q)
        .collect();
    orbit.sort();
    orbit.dedup();
    let mut best_gap = BigUint::zero();
    let mut best_start = BigUint::zero();
    for (i, x) in orbit.iter().enumerate() {
        let next = match orbit.get(i + 1) {
            Some(n) => n.clone(),
            None => &orbit[0] + q,
        };
        let gap = &next - x;
        if gap > best_gap {
            best_gap = gap;
            best_start = x.clone();
        }
    }
    let gap_length = ratio_to_f64(&best_gap, q);
    Ok(if gap_length > eta {
        EtaDensity::NotEtaDense {
            gap_start: ratio_to_f64(&best_start, q),
            gap_length,
        }
    } else {
        EtaDensity::EtaDense { max_gap: gap_length }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub theta: f64,
    pub value: f64,
    pub argmax_k: Option<usize>,
    pub exactness: String,
}

/// Deviation at `θ = j/grid` for `j = 0..grid`, truncated at `K` unless the
/// residue stream closes within `K`.
pub fn deviation_profile(spec: &SequenceSpec, k_max: usize, grid: u64) -> Result<Vec<ProfileRow>> {
    spec.validate()?;
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be >= 1".into()));
    }
    let rows = (0..grid)
        .into_par_iter()
        .map(|j| {
            let point = UnimodularPoint::rational(j, grid).expect("j < grid");
            let dev = deviation(&point, spec, k_max);
            ProfileRow {
                theta: j as f64 / grid as f64,
                value: dev.value,
                argmax_k: dev.argmax_k,
                exactness: match dev.exactness {
                    DeviationExactness::ExactAlgebraic => "exact".to_string(),
                    DeviationExactness::TruncatedAt(k) => format!("truncated_at_{k}"),
                },
            }
        })
        .collect();
    Ok(rows)
}

/// Writes a `DeviationProfile` CSV (columns `theta,value,argmax_k,exactness`).
pub fn write_profile_csv<W: std::io::Write>(rows: &[ProfileRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "value", "argmax_k", "exactness"])
        .map_err(|e| Error::Io(e.to_string()))?;
    for r in rows {
        w.write_record([
            format!("{:.15e}", r.theta),
            format!("{:.15e}", r.value),
            r.argmax_k.map(|k| k.to_string()).unwrap_or_default(),
            r.exactness.clone(),
        ])
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Stream exactness of `spec` modulo `q`, for reports.
pub fn stream_exactness(spec: &SequenceSpec, q: &BigUint) -> Result<StreamExactness> {
    Ok(seqcore::residues(spec, q)?.exactness)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> SequenceSpec {
        s.parse().unwrap()
    }

    fn rat(p: u64, q: u64) -> UnimodularPoint {
        UnimodularPoint::rational(p, q).unwrap()
    }

    const SQRT3: f64 = 1.7320508075688772;

    #[test]
    fn identity_point_has_zero_deviation() {
        for s in ["geom:2", "affine", "factorial", "doubleexp", "list:1,3"] {
            let d = deviation(&rat(0, 1), &spec(s), 10);
            assert_eq!(d.value, 0.0);
        }
        assert_eq!(deviation(&UnimodularPoint::Float(0.0), &spec("geom:3"), 5).value, 0.0);
    }

    #[test]
    fn deviation_examples() {
        let d = deviation(&rat(1, 3), &spec("geom:2"), 8);
        assert!((d.value - SQRT3).abs() < 1e-12);
        assert!(d.is_exact());
        let d = deviation(&rat(1, 4), &spec("patch:geom:2@1=3"), 8);
        assert!((d.value - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(d.argmax_k, Some(0));
        let d = deviation(&UnimodularPoint::Float(0.25), &spec("geom:2"), 3);
        assert_eq!(d.exactness, DeviationExactness::TruncatedAt(3));
    }

    #[test]
    fn exact_deviation_examples() {
        let d = exact_deviation(&Fraction::from_u64(1, 3).unwrap(), &spec("geom:2")).unwrap();
        assert!((d.value - SQRT3).abs() < 1e-12);
        let d = exact_deviation(&Fraction::from_u64(1, 4).unwrap(), &spec("geom:3")).unwrap();
        assert!((d.value - 2f64.sqrt()).abs() < 1e-12);
        // 1/8!: residues (k+1)! for k+1 < 8, then 0; peak 7!/8! = 1/8
        let d = exact_deviation(&Fraction::from_u64(1, 40320).unwrap(), &spec("factorial")).unwrap();
        assert!((d.value - 2.0 * (std::f64::consts::PI / 8.0).sin()).abs() < 1e-12);
        assert_eq!(d.peak, Some(Fraction::from_u64(1, 8).unwrap()));
        assert_eq!(d.argmax_k, Some(6));
        assert!(matches!(
            exact_deviation(&Fraction::from_u64(1, 3).unwrap(), &spec("list:1,2")),
            Err(Error::InexactTail { .. })
        ));
    }

    #[test]
    fn bounded_quotient_lower_bounds() {
        let lb = jamison_lower_bound(&spec("geom:2"), 1e-3, None, 1000, false).unwrap();
        assert_eq!(lb.region, LowerRegion::Global);
        assert!((lb.value - SQRT3).abs() < 1e-12);
        let lb = jamison_lower_bound(&spec("affine"), 1e-3, None, 1000, false).unwrap();
        assert!((lb.value - SQRT3).abs() < 1e-12);
        assert!(jamison_lower_bound(&spec("affine"), 0.0, None, 10, false).is_err());
    }

    #[test]
    fn upper_bound_examples() {
        let scan = ScanOptions {
            q_max: 10,
            family_limit: 0,
        };
        let ub = jamison_upper_bound(&spec("geom:2"), &scan);
        assert!((ub.value - SQRT3).abs() < 1e-12);
        assert_eq!(ub.witness, rat(1, 3));
        assert!(ub.attains);
        let ub = jamison_upper_bound(&spec("geom:3"), &scan);
        assert!((ub.value - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(ub.witness, rat(1, 4));
        let ub = jamison_upper_bound(&spec("patch:geom:2@1=3"), &scan);
        assert!((ub.value - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(ub.witness, rat(1, 4));
    }

    #[test]
    fn branch_and_bound_matches_analytic_value() {
        // independent of the bounded-quotient certificate
        for (s, want) in [("geom:2", SQRT3), ("geom:3", 2f64.sqrt()), ("affine", SQRT3)] {
            let b = branch_and_bound(&spec(s), 0.01, default_truncation(&spec(s), 0.01), 200_000);
            assert!(b.converged, "{s}: {b:?}");
            assert!((b.lower - want).abs() < 1e-9, "{s}: {b:?}");
        }
    }

    #[test]
    fn factorial_has_region_bound_only() {
        let lb = jamison_lower_bound(&spec("factorial"), 1e-3, None, 50_000, false).unwrap();
        assert!(matches!(lb.region, LowerRegion::ThetaAtLeast(t) if t <= 1e-3));
        assert!(lb.value > 0.0 && lb.value <= 1.0 + 1e-12, "{lb:?}");
    }

    #[test]
    fn pair_examples() {
        let o = EstimateOptions::default();
        let r = pair_check(&spec("geom:3"), 2f64.sqrt(), false, DEFAULT_TOL, &o).unwrap();
        assert!(matches!(r.verdict, PairVerdict::CertifiedYes { .. }));
        let r = pair_check(&spec("geom:3"), 2f64.sqrt(), true, DEFAULT_TOL, &o).unwrap();
        match r.verdict {
            PairVerdict::CertifiedNo { witness, .. } => assert_eq!(witness, rat(1, 4)),
            v => panic!("{v:?}"),
        }
        let r = pair_check(&spec("factorial"), 0.1, false, DEFAULT_TOL, &o).unwrap();
        match r.verdict {
            PairVerdict::CertifiedNo { witness_label, deviation, .. } => {
                // 2 sin(π/N) < 0.1 first holds at N = 63
                assert_eq!(witness_label, "1/63!");
                assert!(deviation < 0.1);
            }
            v => panic!("{v:?}"),
        }
        assert!(pair_check(&spec("geom:2"), 0.0, false, DEFAULT_TOL, &o).is_err());
    }

    #[test]
    fn lambda_set_examples() {
        let l = lambda_set(&spec("geom:2"), 1.7, 50).unwrap();
        assert_eq!(l.nontrivial, 0);
        assert_eq!(l.members.len(), 1);
        let l = lambda_set(&spec("affine"), 2.1, 3).unwrap();
        let labels: Vec<_> = l.members.iter().map(|m| m.label.as_str()).collect();
        assert_eq!(labels, ["0", "1/2", "1/3", "2/3"]);
        let fam = lambda_set_in_family(&spec("factorial"), 0.1, 70).unwrap();
        let first = &fam[0];
        assert_eq!(first.label, "1/63!");
        assert_eq!(fam.len(), 70 - 63 + 1);
    }

    #[test]
    fn eta_density_examples() {
        match eta_density_scan(&rat(0, 1), &spec("affine"), 50, 0.5).unwrap() {
            EtaDensity::NotEtaDense { gap_start, gap_length } => {
                assert_eq!(gap_start, 0.0);
                assert_eq!(gap_length, 1.0);
            }
            v => panic!("{v:?}"),
        }
        match eta_density_scan(&rat(1, 3), &spec("geom:2"), 20, 0.5).unwrap() {
            EtaDensity::NotEtaDense { gap_start, gap_length } => {
                assert!((gap_start - 2.0 / 3.0).abs() < 1e-15);
                assert!((gap_length - 2.0 / 3.0).abs() < 1e-15);
            }
            v => panic!("{v:?}"),
        }
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let r = eta_density_scan(&UnimodularPoint::Float(golden), &spec("affine"), 10_000, 0.01).unwrap();
        assert!(matches!(r, EtaDensity::EtaDense { .. }), "{r:?}");
    }

    #[test]
    fn profile_rows() {
        let rows = deviation_profile(&spec("affine"), 64, 4096).unwrap();
        assert_eq!(rows.len(), 4096);
        assert_eq!(rows[0].value, 0.0);
        let mut buf = Vec::new();
        write_profile_csv(&rows[..3], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("theta,value,argmax_k,exactness\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn point_parsing() {
        assert_eq!("1/3".parse::<UnimodularPoint>().unwrap(), rat(1, 3));
        assert_eq!("0".parse::<UnimodularPoint>().unwrap(), rat(0, 1));
        assert_eq!("0.25".parse::<UnimodularPoint>().unwrap(), UnimodularPoint::Float(0.25));
        assert!("4/3".parse::<UnimodularPoint>().is_err());
        assert!("1.5".parse::<UnimodularPoint>().is_err());
    }
}
