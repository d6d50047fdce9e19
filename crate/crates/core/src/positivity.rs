//! Positivity through accretive powers: scans of `Re A^{n_k}`, positivity
//! tests, the checks tying them to the circle condition at `√2`, sector
//! roots, and the `0 <= A <= I` equivalence.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{pair_check, EstimateOptions, PairVerdict, UnimodularPoint, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::exact::Fraction;
use crate::matops::{
    eig, hermitian_part, numerical_range, op_norm, power_terms, principal_root, ComplexMatrix, PowerTerms, SectorSpec,
    C64,
};
use crate::seqcore::{self, SequenceSpec, StreamExactness};

/// `c = modulus · e^{2πi·angle}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarScalar {
    pub modulus: f64,
    pub angle: UnimodularPoint,
}

impl PolarScalar {
    pub fn new(modulus: f64, angle: UnimodularPoint) -> Result<Self> {
        if !modulus.is_finite() || modulus < 0.0 {
            return Err(Error::InvalidArgument(format!("modulus {modulus} must be finite and >= 0")));
        }
        Ok(PolarScalar { modulus, angle })
    }

    /// Polar form of a complex number; the angle is recognized as a rational
    /// `p/q` with `q <= 1000` when it matches to 1e-14, otherwise kept as a
    /// float. A modulus within 1e-14 of 1 is taken to be 1.
    pub fn from_complex(z: C64) -> Self {
        let mut t = z.arg() / (2.0 * std::f64::consts::PI);
        if t < 0.0 {
            t += 1.0;
        }
        if t >= 1.0 {
            t = 0.0;
        }
        let angle = recognize_rational(t)
            .and_then(|f| UnimodularPoint::from_fraction(f).ok())
            .unwrap_or(UnimodularPoint::Float(t));
        let modulus = z.norm();
        PolarScalar {
            modulus: if (modulus - 1.0).abs() <= 1e-14 { 1.0 } else { modulus },
            angle,
        }
    }
}

fn recognize_rational(t: f64) -> Option<Fraction> {
    for q in 1..=1000u64 {
        let p = (t * q as f64).round();
        if (p / q as f64 - t).abs() <= 1e-14 {
            return Fraction::from_u64((p as u64) % q, q).ok();
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AccretiveVerdict {
    AllAccretive { margin: f64 },
    AllStrictlyAccretive { margin: f64 },
    FailsAt { k: usize, n: String, value: f64 },
}

impl AccretiveVerdict {
    pub fn passed(&self) -> bool {
        !matches!(self, AccretiveVerdict::FailsAt { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarAccretiveResult {
    #[serde(flatten)]
    pub verdict: AccretiveVerdict,
    pub exactness: StreamExactness,
}

/// Sign of `Re c^{n_k}` for every `k`. For a rational angle `p/q` this is
/// decided over all `k` from the residues `r = p·n_k mod q`:
/// `Re c^{n} >= 0` iff `r/q ∈ [0, 1/4] ∪ [3/4, 1)`. Margins are reported as
/// `min cos(2π r/q)`, i.e. for unit modulus.
pub fn scalar_accretive_scan(c: &PolarScalar, spec: &SequenceSpec, strict: bool, k_max: usize) -> Result<ScalarAccretiveResult> {
    spec.validate()?;
    let terms_label = |k: usize| term_label(spec, k);
    if c.modulus == 0.0 {
        let verdict = if strict {
            AccretiveVerdict::FailsAt {
                k: 0,
                n: terms_label(0),
                value: 0.0,
            }
        } else {
            AccretiveVerdict::AllAccretive { margin: 0.0 }
        };
        return Ok(ScalarAccretiveResult {
            verdict,
            exactness: StreamExactness::Exact,
        });
    }
    let theta = c.angle.exact_theta();
    let (p, q) = (theta.num(), theta.den());
    let (indexed, exactness): (Vec<(usize, BigUint)>, StreamExactness) = match &c.angle {
        UnimodularPoint::Rational(_) => {
            let stream = seqcore::residues(spec, q)?;
            if !stream.is_exact() {
                return Err(Error::InexactTail { modulus: q.to_string() });
            }
            (stream.indexed().map(|(k, r)| (k, r.clone())).collect(), StreamExactness::Exact)
        }
        UnimodularPoint::Float(_) => {
            let v: Vec<(usize, BigUint)> = spec.residue_iter(q).take(k_max + 1).enumerate().collect();
            let last = v.len().saturating_sub(1);
            (v, StreamExactness::TruncatedUnverifiedTail(last))
        }
    };
    let four = BigUint::from(4u32);
    let three_q = q * 3u32;
    let mut margin = f64::INFINITY;
    for (k, r) in indexed {
        let x = (p * &r) % q;
        let fx = &four * &x;
        let ok = if strict {
            fx < *q || fx > three_q
        } else {
            fx <= *q || fx >= three_q
        };
        let cos = (2.0 * std::f64::consts::PI * Fraction::new(x.clone(), q.clone()).expect("q > 0").to_f64()).cos();
        // exact zeros at the quarter points
        let cos = if fx == *q || fx == three_q { 0.0 } else { cos };
        if !ok {
            return Ok(ScalarAccretiveResult {
                verdict: AccretiveVerdict::FailsAt {
                    k,
                    n: terms_label(k),
                    value: cos,
                },
                exactness,
            });
        }
        margin = margin.min(cos);
    }
    let verdict = if strict {
        AccretiveVerdict::AllStrictlyAccretive { margin }
    } else {
        AccretiveVerdict::AllAccretive { margin }
    };
    Ok(ScalarAccretiveResult { verdict, exactness })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccretiveRow {
    pub k: usize,
    pub n: String,
    /// Smallest eigenvalue of `Re A^{n_k}`; `±inf` when the power overflows.
    pub min_eig: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccretiveScanResult {
    pub per_k: Vec<AccretiveRow>,
    #[serde(flatten)]
    pub verdict: AccretiveVerdict,
    pub tol: f64,
    pub strict: bool,
    pub overflow: bool,
    /// Set when the scan stopped before K because `n_k` exceeded the exponent cap.
    pub cut_at: Option<usize>,
}

/// Minimum eigenvalue of `Re A^{n_k}` for `k <= K`; non-strict passes at
/// `>= -tol`, strict at `>= +tol`.
pub fn matrix_accretive_scan(a: &ComplexMatrix, spec: &SequenceSpec, k_max: usize, tol: f64, strict: bool) -> Result<AccretiveScanResult> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument("tol must be >= 0".into()));
    }
    let PowerTerms { terms, cut_at } = power_terms(spec, k_max)?;
    let per_k: Vec<AccretiveRow> = terms
        .par_iter()
        .enumerate()
        .map(|(k, n)| AccretiveRow {
            k,
            n: n.to_string(),
            min_eig: re_power_min_eig(a, n),
        })
        .collect();
    let bar = if strict { tol } else { -tol };
    let overflow = per_k.iter().any(|r| r.min_eig.is_infinite());
    let margin = per_k.iter().map(|r| r.min_eig).fold(f64::INFINITY, f64::min);
    let verdict = match per_k.iter().find(|r| !(r.min_eig >= bar)) {
        Some(r) => AccretiveVerdict::FailsAt {
            k: r.k,
            n: r.n.clone(),
            value: r.min_eig,
        },
        None if strict => AccretiveVerdict::AllStrictlyAccretive { margin },
        None => AccretiveVerdict::AllAccretive { margin },
    };
    Ok(AccretiveScanResult {
        per_k,
        verdict,
        tol,
        strict,
        overflow,
        cut_at,
    })
}

/// Smallest eigenvalue of `Re A^n`. For normal `A` this is `min Re λ^n`
/// over the eigenvalues, with the angle residue `θ·n mod 1` taken exactly;
/// repeated squaring would amplify the phase error by `n`. Other matrices
/// are powered directly, and when that overflows the sign is read off
/// `(A/‖A‖)^n`. Values that do not fit in an f64 come back as `±inf`.
fn re_power_min_eig(a: &ComplexMatrix, n: &BigUint) -> f64 {
    let norm = op_norm(a);
    let commutator = op_norm(&a.mul(&a.adjoint()).sub(&a.adjoint().mul(a)));
    if commutator <= 1e-12 * norm * norm {
        if let Ok(spec) = eig(a) {
            return spec
                .eigenvalues
                .iter()
                .map(|&l| re_scalar_power(l, n))
                .fold(f64::INFINITY, f64::min);
        }
    }
    if let Some(p) = a.pow(n) {
        return hermitian_part(&p).min_eig;
    }
    let m = a
        .scale(C64::new(1.0 / norm, 0.0))
        .pow(n)
        .map(|p| hermitian_part(&p).min_eig)
        .unwrap_or(f64::NAN);
    if m > 0.0 {
        f64::INFINITY
    } else if m < 0.0 {
        f64::NEG_INFINITY
    } else {
        m
    }
}

/// `Re λ^n` from the polar form of `λ`.
fn re_scalar_power(l: C64, n: &BigUint) -> f64 {
    let polar = PolarScalar::from_complex(l);
    if polar.modulus == 0.0 {
        return if n.is_zero() { 1.0 } else { 0.0 };
    }
    let theta = polar.angle.exact_theta();
    let q = theta.den();
    let x = (theta.num() * n) % q;
    let four_x = &x * 4u32;
    let cos = if four_x == *q || four_x == q * 3u32 {
        0.0
    } else {
        let t = Fraction::new(x, q.clone()).map(|f| f.to_f64()).unwrap_or(f64::NAN);
        (2.0 * std::f64::consts::PI * t).cos()
    };
    let nf = n.to_f64().unwrap_or(f64::INFINITY);
    let modulus = (nf * polar.modulus.ln()).exp();
    if cos == 0.0 {
        0.0
    } else {
        modulus * cos
    }
}

/// Writes the per-k table of an accretive scan as CSV.
pub fn write_scan_csv<W: std::io::Write>(scan: &AccretiveScanResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["k", "n_k", "min_eig_re"]).map_err(io)?;
    for r in &scan.per_k {
        w.write_record([r.k.to_string(), r.n.clone(), format!("{:.15e}", r.min_eig)])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PositivityVerdict {
    Positive { min_eig: f64 },
    PositiveInvertible { min_eig: f64 },
    NotPositive { reason: String },
}

impl PositivityVerdict {
    pub fn is_positive(&self) -> bool {
        !matches!(self, PositivityVerdict::NotPositive { .. })
    }

    pub fn is_invertible(&self) -> bool {
        matches!(self, PositivityVerdict::PositiveInvertible { .. })
    }
}

/// `A >= 0` (Hermitian with spectrum in `[-tol, ∞)`) or `A >= tol·I`.
pub fn positivity_check(a: &ComplexMatrix, tol: f64) -> PositivityVerdict {
    let skew = op_norm(&a.sub(&a.adjoint()));
    let norm = op_norm(a);
    if skew > tol * norm.max(f64::MIN_POSITIVE) {
        return PositivityVerdict::NotPositive {
            reason: format!("non-Hermitian: ‖A - A*‖ = {skew:.3e}"),
        };
    }
    let min_eig = hermitian_part(a).min_eig;
    if min_eig >= tol {
        PositivityVerdict::PositiveInvertible { min_eig }
    } else if min_eig >= -tol {
        PositivityVerdict::Positive { min_eig }
    } else {
        PositivityVerdict::NotPositive {
            reason: format!("negative eigenvalue {min_eig:.15e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DePrimaOutcome {
    /// The scan passed, the circle condition holds and positivity holds.
    Consistent,
    /// The scan failed within K; nothing to compare.
    ScanFailed { k: usize },
    /// The scan passed up to K but fails further out, so the finite scan
    /// was not conclusive.
    ScanFailsBeyond { k: usize },
    /// The circle condition fails and so does positivity.
    ExpectedCounterexample,
    /// The circle condition fails but this matrix is positive anyway.
    ConsistentWithoutCondition,
    /// Scan passed, circle condition holds, positivity fails.
    TheoremViolation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DePrimaReport {
    pub strict: bool,
    pub scan: AccretiveScanResult,
    /// Exact scalar scan when `A = cI`.
    pub scalar_exact: Option<ScalarAccretiveResult>,
    pub positivity: PositivityVerdict,
    /// Strict variant: `((n_k), √2)` is a Jamison pair; non-strict: it is a
    /// strict one.
    pub circle_condition: bool,
    pub circle_witness: Option<String>,
    #[serde(flatten)]
    pub outcome: DePrimaOutcome,
}

fn scalar_of(a: &ComplexMatrix) -> Option<C64> {
    let c = a.get(0, 0);
    let d = a.dim();
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { c } else { C64::zero() };
            if a.get(i, j) != want {
                return None;
            }
        }
    }
    Some(c)
}

/// Circle condition at `√2`; `Err` when neither certificate is found.
fn circle_condition(spec: &SequenceSpec, strict_pair: bool) -> Result<(bool, Option<String>)> {
    let report = pair_check(spec, std::f64::consts::SQRT_2, strict_pair, DEFAULT_TOL, &EstimateOptions::default())?;
    match report.verdict {
        PairVerdict::CertifiedYes { .. } => Ok((true, None)),
        PairVerdict::CertifiedNo { witness_label, .. } => Ok((false, Some(witness_label))),
        PairVerdict::Unknown { .. } => Err(Error::InconclusiveCertificate(format!(
            "pair ({spec}, √2) could not be decided"
        ))),
    }
}

/// Cross-checks the accretive-power scan, positivity and the circle
/// condition. The strict form (`Re A^{n_k} >= tol` gives `A >= tol·I`) needs
/// `((n_k), √2)` to be a Jamison pair; the non-strict form needs it to be a
/// strict one.
pub fn deprima_test(a: &ComplexMatrix, spec: &SequenceSpec, k_max: usize, tol: f64, strict: bool) -> Result<DePrimaReport> {
    if k_max < 1 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    let scan = matrix_accretive_scan(a, spec, k_max, tol, strict)?;
    let scalar_exact = scalar_of(a)
        .and_then(|c| scalar_accretive_scan(&PolarScalar::from_complex(c), spec, strict, k_max).ok());
    let positivity = positivity_check(a, tol);
    let (condition, circle_witness) = circle_condition(spec, !strict)?;
    let positive = if strict { positivity.is_invertible() } else { positivity.is_positive() };
    let outcome = match (&scan.verdict, condition, positive) {
        (AccretiveVerdict::FailsAt { k, .. }, _, _) => DePrimaOutcome::ScanFailed { k: *k },
        (_, true, true) => DePrimaOutcome::Consistent,
        (_, false, false) => DePrimaOutcome::ExpectedCounterexample,
        (_, false, true) => DePrimaOutcome::ConsistentWithoutCondition,
        (_, true, false) => {
            // a finite scan can pass for a matrix that fails further out
            let k_ext = extended_truncation(k_max);
            let longer = matrix_accretive_scan(a, spec, k_ext, tol, strict)?;
            match longer.verdict {
                AccretiveVerdict::FailsAt { k, .. } => DePrimaOutcome::ScanFailsBeyond { k },
                _ => DePrimaOutcome::TheoremViolation,
            }
        }
    };
    Ok(DePrimaReport {
        strict,
        scan,
        scalar_exact,
        positivity,
        circle_condition: condition,
        circle_witness,
        outcome,
    })
}

fn extended_truncation(k_max: usize) -> usize {
    (2 * k_max).max(64)
}

/// Decimal `n_k`, or a closed form when it would be too long to print.
fn term_label(spec: &SequenceSpec, k: usize) -> String {
    if matches!(spec, SequenceSpec::DoubleExp) && k > 8 {
        return format!("2^(2^{k})");
    }
    spec.terms()
        .nth(k)
        .map(|n| {
            if n.bits() > 4096 {
                format!("n_{k} ({} bits)", n.bits())
            } else {
                n.to_string()
            }
        })
        .unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SectorRootVerdict {
    Verified { root: ComplexMatrix },
    Failed { stage: String, detail: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorRootReport {
    #[serde(flatten)]
    pub verdict: SectorRootVerdict,
    pub m: u32,
    pub angles: usize,
    /// `‖S^m - A‖ / ‖A‖`.
    pub relative_residual: f64,
    /// Largest distance from a boundary point of `W(S)` to `Σ(π/m)`.
    pub sector_excess: f64,
    /// Same, measured on the outer polygon (an upper bound over all of `W(S)`).
    pub outer_sector_excess: f64,
    pub residual_tol: f64,
    pub sector_tol: f64,
}

/// Principal `m`-th root `S` of an `A` whose numerical range avoids the
/// negative reals, with `S^m ≈ A` and `W(S) ⊂ Σ(π/m)` checked.
pub fn sector_root_check(a: &ComplexMatrix, m: u32, angles: usize, residual_tol: f64, sector_tol: f64) -> Result<SectorRootReport> {
    if m < 2 {
        return Err(Error::InvalidArgument("root order must be >= 2".into()));
    }
    let wa = numerical_range(a, angles)?;
    if !wa.excludes_negative_reals(sector_tol) {
        let lo = wa.real_axis_interval().map(|(lo, _)| lo).unwrap_or(f64::NAN);
        return Err(Error::NegativeRealInRange(lo));
    }
    let s = principal_root(a, m)?;
    let sm = s.pow_u64(m as u64).ok_or_else(|| Error::InvalidMatrix("root power overflow".into()))?;
    let relative_residual = op_norm(&sm.sub(a)) / op_norm(a).max(f64::MIN_POSITIVE);
    let sector = SectorSpec::new(std::f64::consts::PI / m as f64)?;
    let ws = numerical_range(&s, angles)?;
    let sector_excess = ws.points.iter().map(|&z| sector.distance(z)).fold(0.0, f64::max);
    let outer_sector_excess = ws.sector_excess(&sector);
    let verdict = if relative_residual > residual_tol {
        SectorRootVerdict::Failed {
            stage: "residual".into(),
            detail: format!("‖S^m - A‖/‖A‖ = {relative_residual:.3e}"),
        }
    } else if sector_excess > sector_tol {
        SectorRootVerdict::Failed {
            stage: "sector".into(),
            detail: format!("W(S) leaves Σ(π/{m}) by {sector_excess:.3e}"),
        }
    } else {
        SectorRootVerdict::Verified { root: s }
    };
    Ok(SectorRootReport {
        verdict,
        m,
        angles,
        relative_residual,
        sector_excess,
        outer_sector_excess,
        residual_tol,
        sector_tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NagisaSideI {
    pub holds: bool,
    /// `max_{k<=K} ‖A^{n_k} - I‖`.
    pub sup: f64,
    pub argmax_k: usize,
    /// Index beyond K where `|λ|^{n_k} - 1 > 1` for an eigenvalue `λ`, which
    /// forces `‖A^{n_k} - I‖ > 1` there.
    pub spectral_escape_k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NagisaSideII {
    pub holds: bool,
    pub positivity: PositivityVerdict,
    pub max_eig: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum NagisaVerdict {
    EquivalenceHolds { both_hold: bool },
    Violation { side_holding: String },
    HypothesisNotCertified { witness: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NagisaReport {
    #[serde(flatten)]
    pub verdict: NagisaVerdict,
    pub side_i: Option<NagisaSideI>,
    pub side_ii: Option<NagisaSideII>,
    pub tol: f64,
}

/// Compares (i) `sup_k ‖A^{n_k} - I‖ <= 1` with (ii) `0 <= A <= I`, for
/// sequences where only `λ = 1` has `sup_k |λ^{n_k} - 1| <= √2`.
pub fn nagisa_check(a: &ComplexMatrix, spec: &SequenceSpec, k_max: usize, tol: f64) -> Result<NagisaReport> {
    let (hypothesis, witness) = circle_condition(spec, true)?;
    if !hypothesis {
        return Ok(NagisaReport {
            verdict: NagisaVerdict::HypothesisNotCertified {
                witness: witness.unwrap_or_default(),
            },
            side_i: None,
            side_ii: None,
            tol,
        });
    }
    let pd = crate::matops::power_deviation(a, spec, k_max)?;
    let radius = eig(a)?.spectral_radius();
    let spectral_escape_k = if radius > 1.0 + tol {
        // |λ|^n > 2 + tol once n > ln(2 + tol)/ln|λ|
        let n = ((2.0 + tol).ln() / radius.ln()).floor() + 1.0;
        if n.is_finite() && n < 1e300 {
            spec.first_index_at_least(&BigUint::from(n as u128))
        } else {
            None
        }
    } else {
        None
    };
    let side_i = NagisaSideI {
        holds: pd.sup <= 1.0 + tol && spectral_escape_k.is_none(),
        sup: pd.sup,
        argmax_k: pd.argmax_k,
        spectral_escape_k,
    };
    let positivity = positivity_check(a, tol);
    let max_eig = hermitian_part(a).max_eig;
    let side_ii = NagisaSideII {
        holds: positivity.is_positive() && max_eig <= 1.0 + tol,
        positivity,
        max_eig,
    };
    let verdict = if side_i.holds == side_ii.holds {
        NagisaVerdict::EquivalenceHolds {
            both_hold: side_i.holds,
        }
    } else {
        NagisaVerdict::Violation {
            side_holding: if side_i.holds { "i" } else { "ii" }.into(),
        }
    };
    Ok(NagisaReport {
        verdict,
        side_i: Some(side_i),
        side_ii: Some(side_ii),
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::jordan_block;

    fn spec(s: &str) -> SequenceSpec {
        s.parse().unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn i_times(d: usize) -> ComplexMatrix {
        ComplexMatrix::identity(d).scale(c(0.0, 1.0))
    }

    #[test]
    fn scalar_scan_examples() {
        let i = PolarScalar::new(1.0, UnimodularPoint::rational(1, 4).unwrap()).unwrap();
        let r = scalar_accretive_scan(&i, &spec("geom:3"), false, 0).unwrap();
        assert_eq!(r.verdict, AccretiveVerdict::AllAccretive { margin: 0.0 });
        assert_eq!(r.exactness, StreamExactness::Exact);
        let r = scalar_accretive_scan(&i, &spec("patch:geom:2@1=3"), false, 0).unwrap();
        assert!(r.verdict.passed());
        let r = scalar_accretive_scan(&i, &spec("geom:3"), true, 0).unwrap();
        assert!(matches!(r.verdict, AccretiveVerdict::FailsAt { k: 0, .. }));
        let r = scalar_accretive_scan(&i, &spec("affine"), false, 0).unwrap();
        assert!(matches!(r.verdict, AccretiveVerdict::FailsAt { k: 1, .. }));
        let two = PolarScalar::from_complex(c(2.0, 0.0));
        let r = scalar_accretive_scan(&two, &spec("factorial"), true, 0).unwrap();
        assert_eq!(r.verdict, AccretiveVerdict::AllStrictlyAccretive { margin: 1.0 });
        assert!(matches!(
            scalar_accretive_scan(&i, &spec("list:1,2"), false, 0),
            Err(Error::InexactTail { .. })
        ));
        let f = PolarScalar::new(1.0, UnimodularPoint::Float(0.01)).unwrap();
        let r = scalar_accretive_scan(&f, &spec("geom:2"), false, 3).unwrap();
        assert_eq!(r.exactness, StreamExactness::TruncatedUnverifiedTail(3));
    }

    #[test]
    fn polar_recognizes_quarter_turns() {
        let p = PolarScalar::from_complex(c(0.0, 1.0));
        assert_eq!(p.angle, UnimodularPoint::rational(1, 4).unwrap());
        let p = PolarScalar::from_complex(c(0.0, -2.0));
        assert_eq!(p.angle, UnimodularPoint::rational(3, 4).unwrap());
        assert_eq!(p.modulus, 2.0);
    }

    #[test]
    fn matrix_scan_examples() {
        let h = ComplexMatrix::diag(&[c(1.0, 0.0), c(1.5, 0.0), c(2.0, 0.0)]);
        for s in ["affine", "geom:2", "factorial", "doubleexp"] {
            let r = matrix_accretive_scan(&h, &spec(s), 32, 1e-9, true).unwrap();
            assert!(matches!(r.verdict, AccretiveVerdict::AllStrictlyAccretive { .. }), "{s}");
        }
        // 0.1^{n} drops below the strict tolerance once n >= 9
        let h = ComplexMatrix::diag(&[c(0.1, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        let r = matrix_accretive_scan(&h, &spec("affine"), 7, 1e-9, true).unwrap();
        assert!(matches!(r.verdict, AccretiveVerdict::AllStrictlyAccretive { .. }));
        let r = matrix_accretive_scan(&h, &spec("affine"), 32, 1e-9, true).unwrap();
        assert!(matches!(r.verdict, AccretiveVerdict::FailsAt { k: 9, .. }));
        let r = matrix_accretive_scan(&h, &spec("affine"), 32, 1e-9, false).unwrap();
        assert!(matches!(r.verdict, AccretiveVerdict::AllAccretive { .. }));
        let r = matrix_accretive_scan(&jordan_block(2, C64::zero()), &spec("geom:2"), 5, 1e-9, false).unwrap();
        match r.verdict {
            AccretiveVerdict::FailsAt { k, value, .. } => {
                assert_eq!(k, 0);
                assert!((value + 0.5).abs() < 1e-14);
            }
            v => panic!("{v:?}"),
        }
        let r = matrix_accretive_scan(&i_times(2), &spec("geom:3"), 32, 1e-9, false).unwrap();
        assert!(matches!(r.verdict, AccretiveVerdict::AllAccretive { margin } if margin.abs() < 1e-12));
        let mut buf = Vec::new();
        write_scan_csv(&r, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 34);
    }

    #[test]
    fn positivity_examples() {
        assert!(matches!(
            positivity_check(&ComplexMatrix::diag(&[c(0.0, 0.0), c(1.0, 0.0)]), 1e-9),
            PositivityVerdict::Positive { .. }
        ));
        assert_eq!(
            positivity_check(&ComplexMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]), 1e-9),
            PositivityVerdict::PositiveInvertible { min_eig: 1.0 }
        );
        assert!(matches!(positivity_check(&i_times(2), 1e-9), PositivityVerdict::NotPositive { .. }));
    }

    #[test]
    fn deprima_examples() {
        let r = deprima_test(&i_times(2), &spec("geom:3"), 32, 1e-9, false).unwrap();
        assert!(r.scan.verdict.passed());
        assert!(!r.positivity.is_positive());
        assert_eq!(r.outcome, DePrimaOutcome::ExpectedCounterexample);
        assert_eq!(r.circle_witness.as_deref(), Some("1/4"));
        let exact = r.scalar_exact.unwrap();
        assert_eq!(exact.verdict, AccretiveVerdict::AllAccretive { margin: 0.0 });
        let r = deprima_test(&i_times(2), &spec("affine"), 32, 1e-9, false).unwrap();
        assert!(matches!(r.outcome, DePrimaOutcome::ScanFailed { k: 1 }));
        let two = ComplexMatrix::identity(3).scale(c(2.0, 0.0));
        let r = deprima_test(&two, &spec("affine"), 8, 1e-9, true).unwrap();
        assert_eq!(r.outcome, DePrimaOutcome::Consistent);
        assert!(r.positivity.is_invertible());
    }

    #[test]
    fn slow_rotation_is_caught_beyond_the_window() {
        // e^{iα}I passes the first few powers of 2 but is not positive
        let a = ComplexMatrix::diag(&[C64::from_polar(1.0, 1e-6), c(1.0, 0.0)]);
        let r = deprima_test(&a, &spec("geom:2"), 8, 1e-9, false).unwrap();
        assert!(matches!(r.outcome, DePrimaOutcome::ScanFailsBeyond { .. }), "{:?}", r.outcome);
    }

    #[test]
    fn sector_root_examples() {
        let r = sector_root_check(&ComplexMatrix::identity(2), 5, 256, 1e-8, 1e-6).unwrap();
        assert!(matches!(r.verdict, SectorRootVerdict::Verified { .. }));
        let r = sector_root_check(&ComplexMatrix::diag(&[c(1.0, 0.0), c(4.0, 0.0)]), 2, 256, 1e-8, 1e-6).unwrap();
        match r.verdict {
            SectorRootVerdict::Verified { root } => {
                assert!((root.get(1, 1) - c(2.0, 0.0)).norm() < 1e-14);
            }
            v => panic!("{v:?}"),
        }
        let neg = ComplexMatrix::diag(&[c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(sector_root_check(&neg, 2, 64, 1e-8, 1e-6), Err(Error::NegativeRealInRange(_))));
    }

    #[test]
    fn nagisa_examples() {
        let a = ComplexMatrix::diag(&[c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0)]);
        let r = nagisa_check(&a, &spec("affine"), 32, 1e-9).unwrap();
        assert_eq!(r.verdict, NagisaVerdict::EquivalenceHolds { both_hold: true });
        let r = nagisa_check(&ComplexMatrix::identity(2).scale(c(1.2, 0.0)), &spec("affine"), 32, 1e-9).unwrap();
        assert_eq!(r.verdict, NagisaVerdict::EquivalenceHolds { both_hold: false });
        let r = nagisa_check(&i_times(2), &spec("affine"), 8, 1e-9).unwrap();
        assert_eq!(r.verdict, NagisaVerdict::EquivalenceHolds { both_hold: false });
        let side_i = r.side_i.unwrap();
        assert_eq!(side_i.argmax_k, 1);
        assert!((side_i.sup - 2.0).abs() < 1e-14);
        // slightly above 1: fails beyond K, caught spectrally
        let a = ComplexMatrix::diag(&[c(1.001, 0.0)]);
        let r = nagisa_check(&a, &spec("affine"), 32, 1e-9).unwrap();
        assert_eq!(r.verdict, NagisaVerdict::EquivalenceHolds { both_hold: false });
        assert!(r.side_i.unwrap().spectral_escape_k.is_some());
        let r = nagisa_check(&a, &spec("geom:3"), 8, 1e-9).unwrap();
        assert!(matches!(r.verdict, NagisaVerdict::HypothesisNotCertified { .. }));
    }
}
