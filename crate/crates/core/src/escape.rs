//! Escape experiments: powers of a matrix leaving a ball around `I`, orbits
//! `n_k x` leaving a neighbourhood of a lattice, semigroup rigidity scans and
//! explicit non-Jamison witnesses.

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{self, analytic_bound, exact_deviation, ScanOptions};
use crate::error::{Error, Result};
use crate::exact::Fraction;
use crate::matops::{self, expm, op_norm, ComplexMatrix, C64};
use crate::seqcore::SequenceSpec;

/// Values this close above `epsilon` still count as inside the ball: floating
/// evaluation cannot separate `1 - δ^n` from 1 once `δ^n` drops below 1e-16.
pub const ESCAPE_BAND: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EscapeVerdict {
    EscapedAt { k: usize, value: f64 },
    /// `value` is the maximum over `k <= K`.
    TrappedUpTo { k: usize, value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    #[serde(flatten)]
    pub verdict: EscapeVerdict,
    pub epsilon: f64,
    pub spec: SequenceSpec,
    pub exactness: String,
    pub band: f64,
    /// Per-k deviation or distance.
    pub trace: Vec<f64>,
    pub warning: Option<String>,
    /// Norms of the coordinate projections `P_i` (torus only).
    pub projection_norms: Option<Vec<f64>>,
}

impl EscapeReport {
    pub fn escaped(&self) -> bool {
        matches!(self.verdict, EscapeVerdict::EscapedAt { .. })
    }
}

fn verdict_from_trace(trace: &[f64], epsilon: f64) -> EscapeVerdict {
    match trace.iter().position(|&v| v >= epsilon + ESCAPE_BAND) {
        Some(k) => EscapeVerdict::EscapedAt { k, value: trace[k] },
        None => EscapeVerdict::TrappedUpTo {
            k: trace.len().saturating_sub(1),
            value: trace.iter().copied().fold(0.0, f64::max),
        },
    }
}

/// First `k <= K` with `‖A^{n_k} - I‖ >= epsilon`.
pub fn algebra_escape(a: &ComplexMatrix, spec: &SequenceSpec, epsilon: f64, k_max: usize) -> Result<EscapeReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be positive")));
    }
    let pd = matops::power_deviation(a, spec, k_max)?;
    let verdict = verdict_from_trace(&pd.per_k, epsilon);
    let mut warning = None;
    if let EscapeVerdict::TrappedUpTo { value, .. } = verdict {
        let nontrivial = op_norm(&a.minus_identity()) > 1e-12;
        if let Some(cert) = analytic_bound(spec).filter(|c| !c.prefix_only) {
            let radius = cert.value.min(1.0);
            if nontrivial && value < radius - ESCAPE_BAND {
                warning = Some(format!(
                    "A != I stays within {value:.3e} of I up to k = {}, below the certified radius {radius:.15}; \
                     escape must happen at a larger index",
                    pd.per_k.len() - 1
                ));
            }
        }
    }
    if let (Some(k), false) = (pd.cut_at, matches!(verdict, EscapeVerdict::EscapedAt { .. })) {
        let note = format!("scan stopped at k = {k}: n_k exceeds 2^{}", matops::MAX_POWER_BITS);
        warning = Some(match warning {
            Some(w) => format!("{w}; {note}"),
            None => note,
        });
    }
    Ok(EscapeReport {
        verdict,
        epsilon,
        spec: spec.clone(),
        exactness: if pd.overflow { "float_overflow" } else { "float" }.into(),
        band: ESCAPE_BAND,
        trace: pd.per_k,
        warning,
        projection_norms: None,
    })
}

/// A real number kept exactly when it was given as a rational or decimal
/// literal.
#[derive(Clone, Debug, PartialEq)]
pub struct Real {
    pub value: f64,
    pub exact: Option<BigRational>,
}

impl Real {
    pub fn float(value: f64) -> Self {
        Real { value, exact: None }
    }

    pub fn rational(r: BigRational) -> Self {
        Real {
            value: rational_to_f64(&r),
            exact: Some(r),
        }
    }
}

impl std::str::FromStr for Real {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(r) = parse_exact(s) {
            return Ok(Real::rational(r));
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("not a real number: {s:?}")))?;
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("not finite: {s:?}")));
        }
        Ok(Real::float(v))
    }
}

/// `p/q`, integers and decimal literals (with optional exponent) as exact
/// rationals.
fn parse_exact(s: &str) -> Option<BigRational> {
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        return (!q.is_zero()).then(|| BigRational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let num: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10u32);
    let mut r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

fn rational_to_f64(r: &BigRational) -> f64 {
    let mag = crate::exact::ratio_to_f64(r.numer().magnitude(), r.denom().magnitude());
    if r.is_negative() {
        -mag
    } else {
        mag
    }
}

fn f64_to_rational(x: f64) -> BigRational {
    let mag = Fraction::from_f64(x.abs()).expect("finite");
    let r = BigRational::new(
        BigInt::from_biguint(Sign::Plus, mag.num().clone()),
        BigInt::from_biguint(Sign::Plus, mag.den().clone()),
    );
    if x < 0.0 {
        -r
    } else {
        r
    }
}

/// `Γ = ℤu_1 + ... + ℤu_r` in `ℝ^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeBasis {
    pub ambient: usize,
    pub vectors: Vec<Vec<Real>>,
}

impl LatticeBasis {
    pub fn new(vectors: Vec<Vec<Real>>) -> Result<Self> {
        let r = vectors.len();
        if r == 0 {
            return Err(Error::InvalidBasis("empty basis".into()));
        }
        let n = vectors[0].len();
        if n == 0 || vectors.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidBasis("basis vectors must share one nonzero dimension".into()));
        }
        if r > n {
            return Err(Error::InvalidBasis(format!("rank {r} exceeds ambient dimension {n}")));
        }
        let basis = LatticeBasis { ambient: n, vectors };
        let u = basis.matrix();
        let gram = u.transpose() * &u;
        let scale: f64 = (0..r).map(|i| gram[(i, i)]).product();
        let det = gram.determinant();
        if !(scale > 0.0) || (det / scale).abs() <= 1e-10 {
            return Err(Error::InvalidBasis("basis vectors are (nearly) linearly dependent".into()));
        }
        Ok(basis)
    }

    pub fn from_f64(vectors: &[Vec<f64>]) -> Result<Self> {
        Self::new(vectors.iter().map(|v| v.iter().map(|&x| Real::float(x)).collect()).collect())
    }

    /// The standard lattice `ℤ^n`.
    pub fn standard(n: usize) -> Self {
        let vectors = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Real::rational(BigRational::from_integer(BigInt::from((i == j) as u32))))
                    .collect()
            })
            .collect();
        LatticeBasis { ambient: n, vectors }
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    /// Basis vectors as the columns of an `n × r` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.ambient, self.rank(), |i, j| self.vectors[j][i].value)
    }

    fn exact_matrix(&self) -> Option<Vec<Vec<BigRational>>> {
        // columns
        self.vectors
            .iter()
            .map(|v| v.iter().map(|x| x.exact.clone()).collect::<Option<Vec<_>>>())
            .collect()
    }

    /// `‖P_i‖` for the projections `P_i x = y_i u_i` with `y = U⁺ x`.
    pub fn projection_norms(&self) -> Vec<f64> {
        let u = self.matrix();
        let pinv = (u.transpose() * &u).try_inverse().expect("checked Gram") * u.transpose();
        (0..self.rank())
            .map(|i| u.column(i).norm() * pinv.row(i).norm())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeDistance {
    pub distance: f64,
    pub coefficients: Vec<i64>,
    pub point: Vec<f64>,
}

/// Euclidean distance from `v` to `Γ`: Babai rounding of the least-squares
/// coordinates, then every offset in `{-2..2}^r` around it.
pub fn lattice_dist(v: &[f64], basis: &LatticeBasis) -> Result<LatticeDistance> {
    let r = basis.rank();
    if r > 4 {
        return Err(Error::RankTooLarge(r));
    }
    if v.len() != basis.ambient {
        return Err(Error::InvalidArgument(format!(
            "vector has {} coordinates, lattice lives in dimension {}",
            v.len(),
            basis.ambient
        )));
    }
    let u = basis.matrix();
    let x = nalgebra::DVector::from_column_slice(v);
    let gram = u.transpose() * &u;
    let coords = gram.lu().solve(&(u.transpose() * &x)).ok_or_else(|| Error::InvalidBasis("singular Gram".into()))?;
    let center: Vec<i64> = coords.iter().map(|c| c.round() as i64).collect();
    let mut best: Option<(f64, Vec<i64>)> = None;
    let total = 5usize.pow(r as u32);
    for idx in 0..total {
        let mut rem = idx;
        let m: Vec<i64> = center
            .iter()
            .map(|c| {
                let off = (rem % 5) as i64 - 2;
                rem /= 5;
                c + off
            })
            .collect();
        let mv = nalgebra::DVector::from_iterator(r, m.iter().map(|&c| c as f64));
        let d = (&x - &u * mv).norm();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, m));
        }
    }
    let (distance, coefficients) = best.expect("at least one offset");
    let mv = nalgebra::DVector::from_iterator(r, coefficients.iter().map(|&c| c as f64));
    let point = (&u * mv).iter().copied().collect();
    Ok(LatticeDistance {
        distance,
        coefficients,
        point,
    })
}

/// Solves `A y = b` over the rationals (`A` square); `None` when singular.
fn solve_rational(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&i| !a[i][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        for i in 0..n {
            if i != col && !a[i][col].is_zero() {
                let f = &a[i][col] / &a[col][col];
                for j in col..n {
                    let t = &f * &a[col][j];
                    a[i][j] -= t;
                }
                let t = &f * &b[col];
                b[i] -= t;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Lattice coordinates `y` of the in-span part of `x`, and the orthogonal
/// remainder's norm. Exact when every input is exact.
fn lattice_coordinates(x: &[Real], basis: &LatticeBasis) -> (Vec<BigRational>, f64, &'static str) {
    let r = basis.rank();
    let exact_x: Option<Vec<BigRational>> = x.iter().map(|c| c.exact.clone()).collect();
    if let (Some(xe), Some(cols)) = (exact_x, basis.exact_matrix()) {
        // normal equations UᵀU y = Uᵀx
        let dot = |a: &[BigRational], b: &[BigRational]| a.iter().zip(b).fold(BigRational::zero(), |s, (p, q)| s + p * q);
        let gram: Vec<Vec<BigRational>> = (0..r).map(|i| (0..r).map(|j| dot(&cols[i], &cols[j])).collect()).collect();
        let rhs: Vec<BigRational> = (0..r).map(|i| dot(&cols[i], &xe)).collect();
        if let Some(y) = solve_rational(gram, rhs) {
            let perp: Vec<BigRational> = (0..basis.ambient)
                .map(|i| &xe[i] - (0..r).fold(BigRational::zero(), |s, j| s + &y[j] * &cols[j][i]))
                .collect();
            let perp_norm = perp.iter().map(|p| rational_to_f64(p).powi(2)).sum::<f64>().sqrt();
            return (y, perp_norm, "exact_rational");
        }
    }
    let u = basis.matrix();
    let xv = nalgebra::DVector::from_iterator(x.len(), x.iter().map(|c| c.value));
    let gram = u.transpose() * &u;
    let y = gram.lu().solve(&(u.transpose() * &xv)).expect("checked Gram");
    let perp_norm = (&xv - &u * &y).norm();
    (y.iter().map(|&c| f64_to_rational(c)).collect(), perp_norm, "exact_dyadic_coordinates")
}

/// `{n y}` for rational `y`, from `n mod den(y)`.
fn frac_times(n_mod: &BigUint, y: &BigRational) -> f64 {
    let den = y.denom().magnitude();
    let num = y.numer().mod_floor(y.denom()).magnitude().clone();
    let x = (n_mod * num) % den;
    crate::exact::ratio_to_f64(&x, den)
}

/// First `k <= K` with `dist(n_k x, Γ) >= epsilon`.
///
/// The orbit is reduced in lattice coordinates: `n_k x ≡ U{n_k y} + n_k x_⊥`
/// modulo `Γ`, with `{n_k y}` computed from residues of `n_k` modulo the
/// denominators of `y`. The in-span part is therefore never formed from a
/// huge product.
pub fn torus_escape(
    x: &[Real],
    basis: &LatticeBasis,
    spec: &SequenceSpec,
    epsilon: f64,
    k_max: usize,
) -> Result<EscapeReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be positive")));
    }
    if basis.rank() > 4 {
        return Err(Error::RankTooLarge(basis.rank()));
    }
    if x.len() != basis.ambient {
        return Err(Error::InvalidArgument("point and lattice dimensions differ".into()));
    }
    spec.validate()?;
    let count = match spec.available_terms() {
        Some(n) => (k_max + 1).min(n),
        None => k_max + 1,
    };
    let (y, perp_norm, mut exactness) = lattice_coordinates(x, basis);
    let residue_streams: Vec<Vec<BigUint>> = y
        .iter()
        .map(|yi| spec.residue_iter(yi.denom().magnitude()).take(count).collect())
        .collect();
    let magnitudes: Vec<f64> = if perp_norm > 0.0 {
        exactness = "float_orthogonal_part";
        spec.terms()
            .take(count)
            .map(|n| n.to_f64().unwrap_or(f64::INFINITY) * perp_norm)
            .collect()
    } else {
        vec![0.0; count]
    };
    let u = basis.matrix();
    let trace: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|k| {
            let f = nalgebra::DVector::from_iterator(y.len(), y.iter().enumerate().map(|(i, yi)| frac_times(&residue_streams[i][k], yi)));
            let z: Vec<f64> = (&u * f).iter().copied().collect();
            let d = lattice_dist(&z, basis).expect("rank checked").distance;
            (d * d + magnitudes[k] * magnitudes[k]).sqrt()
        })
        .collect();
    Ok(EscapeReport {
        verdict: verdict_from_trace(&trace, epsilon),
        epsilon,
        spec: spec.clone(),
        exactness: exactness.into(),
        band: ESCAPE_BAND,
        trace,
        warning: None,
        projection_norms: Some(basis.projection_norms()),
    })
}

/// A finite sample of a time set `E ⊃ [0, 1]`: a uniform grid of `[0, 1]`
/// plus extra times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSet {
    pub grid: usize,
    pub extra: Vec<f64>,
}

impl TimeSet {
    pub fn new(grid: usize, extra: Vec<f64>) -> Result<Self> {
        if grid == 0 {
            return Err(Error::InvalidArgument("grid must have at least one interval".into()));
        }
        if extra.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidArgument("times must be finite and nonnegative".into()));
        }
        Ok(TimeSet { grid, extra })
    }

    /// Sorted, deduplicated times; always contains 0 and 1.
    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = (0..=self.grid).map(|j| j as f64 / self.grid as f64).collect();
        t.extend(self.extra.iter().copied());
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }

    /// `F + 1 = {⌊t⌋ + 1 : t ∈ E}` as an increasing list starting at 1.
    pub fn floor_sequence(&self) -> SequenceSpec {
        let mut f: Vec<u64> = self.times().iter().map(|t| t.floor() as u64 + 1).collect();
        f.sort_unstable();
        f.dedup();
        SequenceSpec::list(f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SemigroupVerdict {
    IdentityForced { cross_check_passed: bool, generator_norm: f64 },
    Violation { t: f64, value: f64 },
    /// Every sampled time stays within `epsilon`, but `epsilon` is too large
    /// for the rigidity statement to apply.
    Inconclusive { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemigroupReport {
    #[serde(flatten)]
    pub verdict: SemigroupVerdict,
    pub epsilon: f64,
    pub max_value: f64,
    pub argmax_t: f64,
    /// Certified lower bound for the Jamison constant of `F + 1`.
    pub epsilon_f: f64,
    /// `min(ε_F/3, 1/3)`.
    pub threshold: f64,
    pub floor_sequence: SequenceSpec,
    /// `ε_F` was read off the sampled prefix of `F + 1`.
    pub prefix_only: bool,
    pub grid: usize,
    pub sample_count: usize,
}

/// `max_t ‖exp(tG) - I‖` over the time set, and the rigidity verdict.
pub fn semigroup_scan(g: &ComplexMatrix, times: &TimeSet, epsilon: f64) -> Result<SemigroupReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must be positive")));
    }
    let floor_sequence = times.floor_sequence();
    let cert = analytic_bound(&floor_sequence).ok_or_else(|| Error::NoCertificate {
        reason: "the floor set F + 1 has no bounded-quotient certificate".into(),
    })?;
    let threshold = (cert.value / 3.0).min(1.0 / 3.0);
    let ts = times.times();
    let id = ComplexMatrix::identity(g.dim());
    let values: Vec<f64> = ts.par_iter().map(|&t| op_norm(&expm(g, t).sub(&id))).collect();
    let mut argmax = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[argmax] {
            argmax = i;
        }
    }
    let max_value = values[argmax];
    let verdict = if max_value > epsilon {
        SemigroupVerdict::Violation {
            t: ts[argmax],
            value: max_value,
        }
    } else if epsilon < threshold {
        let generator_norm = op_norm(g);
        SemigroupVerdict::IdentityForced {
            cross_check_passed: generator_norm <= 1e-6,
            generator_norm,
        }
    } else {
        SemigroupVerdict::Inconclusive {
            reason: format!("epsilon {epsilon} is not below min(ε_F/3, 1/3) = {threshold}"),
        }
    };
    Ok(SemigroupReport {
        verdict,
        epsilon,
        max_value,
        argmax_t: ts[argmax],
        epsilon_f: cert.value,
        threshold,
        floor_sequence,
        prefix_only: cert.prefix_only,
        grid: times.grid,
        sample_count: ts.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonJamisonWitness {
    pub theta: Fraction,
    pub label: String,
    /// Eigenphases of the diagonal witness, exactly.
    pub phases: Vec<Fraction>,
    /// `sup_{k>=0} ‖D^{n_k} - I‖`, exact over all k.
    pub deviation: f64,
    /// The witness rounded to floating point; for tiny θ it can round to `I`.
    pub matrix: ComplexMatrix,
    pub rounds_to_identity: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum WitnessOutcome {
    Found(NonJamisonWitness),
    /// The pair is certified: no witness exists.
    NotFound { certified_lower_bound: f64 },
    /// Nothing found within the search budget and no certificate either.
    Exhausted { searched_q_max: u64, searched_family_limit: usize },
}

/// Search budget for [`non_jamison_witness`].
pub fn default_witness_scan(spec: &SequenceSpec) -> ScanOptions {
    let _ = spec;
    ScanOptions {
        q_max: 256,
        family_limit: 2048,
    }
}

/// `diag(e^{2πiθ}, 1, ..., 1)` with `sup_k ‖D^{n_k} - I‖ < epsilon`, θ taken
/// from the witness pattern of the sequence (`1/N!`, `2^-(2^m)`, otherwise
/// `p/q` by increasing denominator).
pub fn non_jamison_witness(spec: &SequenceSpec, epsilon: f64, dim: usize, scan: &ScanOptions) -> Result<WitnessOutcome> {
    spec.validate()?;
    if !(epsilon > 0.0 && epsilon <= 2.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} not in (0, 2]")));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    if let Some(cert) = analytic_bound(spec).filter(|c| !c.prefix_only) {
        if cert.value >= epsilon {
            return Ok(WitnessOutcome::NotFound {
                certified_lower_bound: cert.value,
            });
        }
    }
    let family = circle::family_witness_list(spec, scan.family_limit);
    let hit = if family.is_empty() {
        circle::first_witness_below(spec, epsilon, &ScanOptions {
            q_max: scan.q_max,
            family_limit: 0,
        })
        .map(|(theta, label, dev)| (theta, label, dev.value))
    } else {
        family.into_iter().find_map(|(theta, label)| {
            let dev = exact_deviation(&theta, spec).ok()?;
            (dev.value < epsilon).then_some((theta, label, dev.value))
        })
    };
    let Some((theta, label, deviation)) = hit else {
        return Ok(WitnessOutcome::Exhausted {
            searched_q_max: scan.q_max,
            searched_family_limit: scan.family_limit,
        });
    };
    let mut phases = vec![Fraction::zero(); dim];
    phases[0] = theta.clone();
    let angle = 2.0 * std::f64::consts::PI * theta.to_f64();
    let mut entries = vec![C64::new(1.0, 0.0); dim];
    entries[0] = C64::from_polar(1.0, angle);
    let matrix = ComplexMatrix::diag(&entries);
    let rounds_to_identity = matrix == ComplexMatrix::identity(dim);
    Ok(WitnessOutcome::Found(NonJamisonWitness {
        theta,
        label,
        phases,
        deviation,
        matrix,
        rounds_to_identity,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(s: &str) -> SequenceSpec {
        s.parse().unwrap()
    }

    fn reals(v: &[&str]) -> Vec<Real> {
        v.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn algebra_escape_examples() {
        let delta = ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0));
        let r = algebra_escape(&delta, &spec("geom:2"), 1.0, 30).unwrap();
        assert!(matches!(r.verdict, EscapeVerdict::TrappedUpTo { k: 30, .. }), "{r:?}");
        let w = ComplexMatrix::diag(&[C64::from_polar(1.0, 2.0 * PI / 3.0), C64::new(1.0, 0.0)]);
        let r = algebra_escape(&w, &spec("geom:2"), 1.7, 10).unwrap();
        match r.verdict {
            EscapeVerdict::EscapedAt { k, value } => {
                assert_eq!(k, 0);
                assert!((value - 3f64.sqrt()).abs() < 1e-12);
            }
            v => panic!("{v:?}"),
        }
        let r = algebra_escape(&ComplexMatrix::identity(3), &spec("affine"), 0.5, 12).unwrap();
        assert_eq!(r.verdict, EscapeVerdict::TrappedUpTo { k: 12, value: 0.0 });
        assert!(r.warning.is_none());
    }

    #[test]
    fn trapped_nontrivial_element_warns() {
        // a tiny rotation has not escaped yet at K = 3
        let a = ComplexMatrix::diag(&[C64::from_polar(1.0, 1e-4)]);
        let r = algebra_escape(&a, &spec("geom:2"), 0.5, 3).unwrap();
        assert!(r.warning.is_some());
    }

    #[test]
    fn real_parsing() {
        let r: Real = "1/3".parse().unwrap();
        assert_eq!(r.exact, Some(BigRational::new(1.into(), 3.into())));
        let r: Real = "-0.25".parse().unwrap();
        assert_eq!(r.exact, Some(BigRational::new((-1).into(), 4.into())));
        let r: Real = "1.5e-2".parse().unwrap();
        assert_eq!(r.exact, Some(BigRational::new(3.into(), 200.into())));
        assert!("abc".parse::<Real>().is_err());
    }

    #[test]
    fn lattice_distance_examples() {
        let z1 = LatticeBasis::standard(1);
        assert_eq!(lattice_dist(&[0.0], &z1).unwrap().distance, 0.0);
        assert!((lattice_dist(&[1.0 / 3.0], &z1).unwrap().distance - 1.0 / 3.0).abs() < 1e-15);
        let z2 = LatticeBasis::standard(2);
        let d = lattice_dist(&[0.5, 0.5], &z2).unwrap();
        assert!((d.distance - 0.5f64.sqrt()).abs() < 1e-15);
        let big = LatticeBasis::standard(5);
        assert!(matches!(lattice_dist(&[0.0; 5], &big), Err(Error::RankTooLarge(5))));
        assert!(LatticeBasis::from_f64(&[vec![1.0, 0.0], vec![2.0, 0.0]]).is_err());
        // skewed basis: Babai alone can miss, enumeration fixes it
        let skew = LatticeBasis::from_f64(&[vec![1.0, 0.0], vec![0.9, 0.1]]).unwrap();
        let v = [0.45, 0.05];
        let d = lattice_dist(&v, &skew).unwrap();
        let mut brute = f64::INFINITY;
        for a in -20i64..=20 {
            for b in -20i64..=20 {
                let p = [a as f64 + 0.9 * b as f64, 0.1 * b as f64];
                brute = brute.min(((v[0] - p[0]).powi(2) + (v[1] - p[1]).powi(2)).sqrt());
            }
        }
        assert!((d.distance - brute).abs() < 1e-14);
    }

    #[test]
    fn torus_escape_examples() {
        let z1 = LatticeBasis::standard(1);
        let third = reals(&["1/3"]);
        let r = torus_escape(&third, &z1, &spec("geom:2"), 0.3, 10).unwrap();
        match r.verdict {
            EscapeVerdict::EscapedAt { k, value } => {
                assert_eq!(k, 0);
                assert!((value - 1.0 / 3.0).abs() < 1e-15);
            }
            v => panic!("{v:?}"),
        }
        assert_eq!(r.exactness, "exact_rational");
        let r = torus_escape(&third, &z1, &spec("geom:2"), 0.4, 50).unwrap();
        match r.verdict {
            EscapeVerdict::TrappedUpTo { k, value } => {
                assert_eq!(k, 50);
                assert!((value - 1.0 / 3.0).abs() < 1e-15);
            }
            v => panic!("{v:?}"),
        }
        let r = torus_escape(&reals(&["0", "0"]), &LatticeBasis::standard(2), &spec("affine"), 0.1, 20).unwrap();
        assert_eq!(r.verdict, EscapeVerdict::TrappedUpTo { k: 20, value: 0.0 });
        // 1/2^60 doubles into 1/2 after 59 steps, exactly
        let tiny = reals(&["1/1152921504606846976"]);
        let r = torus_escape(&tiny, &z1, &spec("geom:2"), 0.4, 70).unwrap();
        assert!(matches!(r.verdict, EscapeVerdict::EscapedAt { k: 59, .. }), "{r:?}");
    }

    #[test]
    fn semigroup_examples() {
        let times = TimeSet::new(1000, vec![]).unwrap();
        let r = semigroup_scan(&ComplexMatrix::zeros(2), &times, 0.1).unwrap();
        assert!(matches!(r.verdict, SemigroupVerdict::IdentityForced { cross_check_passed: true, .. }), "{r:?}");
        let g = ComplexMatrix::diag(&[C64::new(0.0, 2.0 * PI)]);
        let r = semigroup_scan(&g, &times, 0.1).unwrap();
        match r.verdict {
            SemigroupVerdict::Violation { t, value } => {
                assert!((t - 0.5).abs() < 1e-12);
                assert!((value - 2.0).abs() < 1e-12);
            }
            v => panic!("{v:?}"),
        }
        let extra: Vec<f64> = (0..=20).map(|j| 2f64.powi(j)).collect();
        let times = TimeSet::new(1000, extra).unwrap();
        let g = ComplexMatrix::diag(&[C64::new(0.0, 2e-3 * PI)]);
        let r = semigroup_scan(&g, &times, 0.1).unwrap();
        match r.verdict {
            SemigroupVerdict::Violation { t, value } => {
                assert!(t >= 2.0 && t.log2().fract() == 0.0);
                assert!((value - 2.0 * (PI * 1e-3 * t).sin().abs()).abs() < 1e-8 && value >= 0.1);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn witness_examples() {
        let scan = default_witness_scan(&spec("factorial"));
        match non_jamison_witness(&spec("factorial"), 0.1, 2, &scan).unwrap() {
            WitnessOutcome::Found(w) => {
                assert_eq!(w.label, "1/63!");
                assert!(w.deviation < 0.1);
                assert_eq!(w.phases[1], Fraction::zero());
            }
            o => panic!("{o:?}"),
        }
        match non_jamison_witness(&spec("geom:2"), 1.0, 2, &scan).unwrap() {
            WitnessOutcome::NotFound { certified_lower_bound } => {
                assert!((certified_lower_bound - 3f64.sqrt()).abs() < 1e-12)
            }
            o => panic!("{o:?}"),
        }
        match non_jamison_witness(&spec("doubleexp"), 0.01, 1, &scan).unwrap() {
            WitnessOutcome::Found(w) => {
                assert_eq!(w.label, "2^-(2^5)");
                assert!(!w.rounds_to_identity);
            }
            o => panic!("{o:?}"),
        }
        assert!(non_jamison_witness(&spec("geom:2"), 0.0, 2, &scan).is_err());
    }
}
