//! Dense complex matrices standing in for operators: spectra, norms,
//! Hermitian parts, numerical ranges, principal logarithms and roots, the
//! exponential, and deviations `‖A^{n_k} - I‖` along a sequence.
//!
//! All norms are spectral (largest singular value).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::seqcore::SequenceSpec;

pub type C64 = Complex64;

/// Threshold on the eigenvector condition number above which a matrix is
/// treated as defective.
pub const DIAGONALIZABLE_CONDITION: f64 = 1e8;

/// Norm above which powering stops and the deviation is reported as infinite.
pub const OVERFLOW_NORM: f64 = 1e300;

const SCHUR_MAX_ITER: usize = 10_000;

/// A square matrix with finite complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Row-major entries.
    pub fn new(dim: usize, entries: &[C64]) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidMatrix("matrix is not square".into()));
        }
        let flat: Vec<C64> = rows.iter().flatten().copied().collect();
        Self::new(d, &flat)
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidMatrix("matrix is not square".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(ComplexMatrix(m))
    }

    pub fn identity(dim: usize) -> Self {
        ComplexMatrix(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn diag(entries: &[C64]) -> Self {
        ComplexMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix(&self.0 * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        ComplexMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        ComplexMatrix(&self.0 - &other.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        ComplexMatrix(&self.0 * &other.0)
    }

    pub fn minus_identity(&self) -> Self {
        self.sub(&Self::identity(self.dim()))
    }

    pub fn inverse(&self) -> Result<Self> {
        self.0
            .clone()
            .try_inverse()
            .map(ComplexMatrix)
            .ok_or_else(|| Error::InvalidMatrix("singular matrix".into()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn op_norm(&self) -> f64 {
        op_norm(self)
    }

    /// `A^n` by binary powering. `None` when an intermediate norm exceeds
    /// [`OVERFLOW_NORM`].
    pub fn pow(&self, n: &BigUint) -> Option<Self> {
        let d = self.dim();
        let mut result = DMatrix::<C64>::identity(d, d);
        let mut base = self.0.clone();
        let bits = n.bits();
        for i in 0..bits {
            if n.bit(i) {
                result = &result * &base;
                if !within_bound(&result) {
                    return None;
                }
            }
            if i + 1 < bits {
                base = &base * &base;
                if !within_bound(&base) {
                    return None;
                }
            }
        }
        Some(ComplexMatrix(result))
    }

    pub fn pow_u64(&self, n: u64) -> Option<Self> {
        self.pow(&BigUint::from(n))
    }

    /// Whitespace text format: `d` then `d²` row-major entries `re,im`.
    pub fn to_text(&self) -> String {
        let mut s = self.dim().to_string();
        for i in 0..self.dim() {
            s.push('\n');
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.0[(i, j)];
                    format!("{:e},{:e}", z.re, z.im)
                })
                .collect();
            s.push_str(&row.join(" "));
        }
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let d: usize = tokens
            .next()
            .ok_or_else(|| Error::InvalidMatrix("empty input".into()))?
            .parse()
            .map_err(|_| Error::InvalidMatrix("first token must be the dimension".into()))?;
        let entries: Vec<C64> = tokens.map(parse_entry).collect::<Result<_>>()?;
        Self::new(d, &entries)
    }

    /// Reads either the JSON or the text format.
    pub fn parse_any(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('[') {
            serde_json::from_str(text).map_err(|e| Error::InvalidMatrix(e.to_string()))
        } else {
            Self::from_text(text)
        }
    }
}

fn within_bound(m: &DMatrix<C64>) -> bool {
    let f = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    f.is_finite() && f <= OVERFLOW_NORM
}

fn parse_entry(tok: &str) -> Result<C64> {
    let bad = || Error::InvalidMatrix(format!("bad entry {tok:?}; expected re,im"));
    let (re, im) = tok.split_once(',').unwrap_or((tok, "0"));
    Ok(C64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?))
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for ComplexMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_any(s)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| [self.0[(i, j)].re, self.0[(i, j)].im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        ComplexMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    #[serde(with = "complex_list")]
    pub eigenvalues: Vec<C64>,
    pub diagonalizable: bool,
    pub eigenvector_condition: f64,
}

impl Spectrum {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Serde helper writing complex numbers as `[re, im]` pairs.
pub mod complex_list {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let v: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Eigenvalues, eigenvector basis and its conditioning.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: DMatrix<C64>,
    pub condition: f64,
}

impl EigenDecomposition {
    pub fn diagonalizable(&self) -> bool {
        self.condition <= DIAGONALIZABLE_CONDITION
    }

    /// `V f(Λ) V⁻¹`.
    pub fn apply(&self, f: impl Fn(C64) -> C64) -> Result<ComplexMatrix> {
        let vinv = self
            .vectors
            .clone()
            .try_inverse()
            .ok_or(Error::NotDiagonalizable(f64::INFINITY))?;
        let fd = DVector::from_iterator(self.values.len(), self.values.iter().map(|&z| f(z)));
        let m = &self.vectors * DMatrix::from_diagonal(&fd) * vinv;
        ComplexMatrix::from_dmatrix(m)
    }
}

/// Complex Schur form followed by back substitution on the triangular factor.
pub fn eigen_decomposition(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    let d = a.dim();
    let schur = Schur::try_new(a.0.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::ConvergenceFailure("eig"))?;
    let (q, t) = schur.unpack();
    let values: Vec<C64> = (0..d).map(|i| t[(i, i)]).collect();
    let tnorm = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mut y = DMatrix::<C64>::zeros(d, d);
    for i in 0..d {
        let lambda = values[i];
        y[(i, i)] = C64::one();
        for j in (0..i).rev() {
            let mut s = C64::zero();
            for l in j + 1..=i {
                s += t[(j, l)] * y[(l, i)];
            }
            let mut den = t[(j, j)] - lambda;
            if den.norm() < small {
                den = C64::new(small, 0.0);
            }
            y[(j, i)] = -s / den;
        }
        let n = y.column(i).norm();
        y.column_mut(i).unscale_mut(n);
    }
    let vectors = q * y;
    let sv = vectors.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    Ok(EigenDecomposition {
        values,
        vectors,
        condition,
    })
}

pub fn eig(a: &ComplexMatrix) -> Result<Spectrum> {
    let e = eigen_decomposition(a)?;
    Ok(Spectrum {
        diagonalizable: e.diagonalizable(),
        eigenvector_condition: e.condition,
        eigenvalues: e.values,
    })
}

pub fn op_norm(a: &ComplexMatrix) -> f64 {
    if a.0.iter().all(|z| z.is_zero()) {
        return 0.0;
    }
    a.0.clone().singular_values().max()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianPart {
    pub h: ComplexMatrix,
    pub min_eig: f64,
    pub max_eig: f64,
}

fn hermitian_of(m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    for i in 0..h.nrows() {
        h[(i, i)].im = 0.0;
        for j in i + 1..h.ncols() {
            h[(j, i)] = h[(i, j)].conj();
        }
    }
    h
}

/// `(A + A*)/2` and its extremal eigenvalues.
pub fn hermitian_part(a: &ComplexMatrix) -> HermitianPart {
    let h = hermitian_of(&a.0);
    let ev = SymmetricEigen::new(h.clone()).eigenvalues;
    HermitianPart {
        min_eig: ev.min(),
        max_eig: ev.max(),
        h: ComplexMatrix(h),
    }
}

/// Half-opening `α` of the sector `Σ(α) = {r e^{iφ} : r >= 0, |φ| <= α}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub half_opening: f64,
}

impl SectorSpec {
    pub fn new(half_opening: f64) -> Result<Self> {
        if !(half_opening > 0.0 && half_opening <= std::f64::consts::PI) {
            return Err(Error::InvalidArgument(format!("half-opening {half_opening} not in (0, π]")));
        }
        Ok(SectorSpec { half_opening })
    }

    pub fn contains(&self, z: C64) -> bool {
        z == C64::zero() || z.arg().abs() <= self.half_opening
    }

    /// Euclidean distance from `z` to the closed sector.
    pub fn distance(&self, z: C64) -> f64 {
        if self.contains(z) {
            return 0.0;
        }
        let a = self.half_opening;
        let phi = z.arg().abs();
        if phi - a >= std::f64::consts::FRAC_PI_2 {
            z.norm()
        } else {
            z.norm() * (phi - a).sin()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericalRangeBoundary {
    pub angles: usize,
    /// `⟨Av, v⟩` for the top eigenvector `v` of `Re(e^{iφ_j} A)`.
    #[serde(with = "complex_list")]
    pub points: Vec<C64>,
    /// `h_j = λ_max(Re(e^{iφ_j} A)) = max_{z ∈ W(A)} Re(e^{iφ_j} z)`.
    pub support: Vec<f64>,
}

impl NumericalRangeBoundary {
    fn angle(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.angles as f64
    }

    /// Membership in the outer polygon cut out by the supporting half-planes.
    pub fn outer_contains(&self, z: C64, tol: f64) -> bool {
        (0..self.angles).all(|j| (C64::from_polar(1.0, self.angle(j)) * z).re <= self.support[j] + tol)
    }

    /// Vertices of the outer polygon (consecutive supporting lines meet).
    pub fn outer_vertices(&self) -> Vec<C64> {
        let m = self.angles;
        (0..m)
            .map(|j| {
                let (p1, p2) = (self.angle(j), self.angle((j + 1) % m));
                let (h1, h2) = (self.support[j], self.support[(j + 1) % m]);
                // Re(e^{iφ} z) = x cos φ - y sin φ
                let (a1, b1) = (p1.cos(), -p1.sin());
                let (a2, b2) = (p2.cos(), -p2.sin());
                let det = a1 * b2 - a2 * b1;
                C64::new((h1 * b2 - h2 * b1) / det, (a1 * h2 - a2 * h1) / det)
            })
            .collect()
    }

    /// The part of the real axis inside the outer polygon, as `[lo, hi]`.
    pub fn real_axis_interval(&self) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for j in 0..self.angles {
            let c = self.angle(j).cos();
            let h = self.support[j];
            if c.abs() < 1e-14 {
                if h < -1e-14 {
                    return None;
                }
            } else if c > 0.0 {
                hi = hi.min(h / c);
            } else {
                lo = lo.max(h / c);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// True when the outer polygon stays clear of `(-∞, -tol]`, so `W(A)`
    /// meets no negative real.
    pub fn excludes_negative_reals(&self, tol: f64) -> bool {
        match self.real_axis_interval() {
            None => true,
            Some((lo, _)) => lo >= -tol,
        }
    }

    /// Largest distance from the outer polygon to the sector; the polygon
    /// contains `W(A)`, so `<= tol` certifies `W(A) ⊂ Σ(α)` up to `tol`.
    pub fn sector_excess(&self, sector: &SectorSpec) -> f64 {
        let verts = self.outer_vertices();
        let mut worst = verts.iter().map(|&z| sector.distance(z)).fold(0.0, f64::max);
        if sector.half_opening > std::f64::consts::FRAC_PI_2 {
            // the sector is not convex; edges can dip into the excluded cone
            for j in 0..verts.len() {
                let (a, b) = (verts[j], verts[(j + 1) % verts.len()]);
                for s in 1..16 {
                    let z = a + (b - a) * (s as f64 / 16.0);
                    worst = worst.max(sector.distance(z));
                }
            }
        }
        worst
    }

    pub fn within_sector(&self, sector: &SectorSpec, tol: f64) -> bool {
        self.sector_excess(sector) <= tol
    }

    pub fn within_half_plane(&self, direction: f64, offset: f64, tol: f64) -> bool {
        // W ⊂ {Re(e^{iφ} z) <= offset} iff the support value at φ is <= offset
        let w = C64::from_polar(1.0, direction);
        let h = numerical_support(self, w);
        h <= offset + tol
    }
}

/// Support value along an arbitrary direction, from the boundary points.
fn numerical_support(b: &NumericalRangeBoundary, w: C64) -> f64 {
    b.points.iter().map(|&z| (w * z).re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn numerical_range(a: &ComplexMatrix, angles: usize) -> Result<NumericalRangeBoundary> {
    if angles < 8 {
        return Err(Error::InvalidArgument("numerical range needs at least 8 angles".into()));
    }
    let results: Vec<Result<(C64, f64)>> = (0..angles)
        .into_par_iter()
        .map(|j| {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / angles as f64;
            let rotated = &a.0 * C64::from_polar(1.0, phi);
            let h = hermitian_of(&rotated);
            let se = SymmetricEigen::try_new(h, f64::EPSILON, SCHUR_MAX_ITER)
                .ok_or(Error::ConvergenceFailure("numerical range"))?;
            let top = se.eigenvalues.imax();
            let v = se.eigenvectors.column(top).into_owned();
            let point = (v.adjoint() * &a.0 * &v)[(0, 0)];
            Ok((point, se.eigenvalues[top]))
        })
        .collect();
    let mut points = Vec::with_capacity(angles);
    let mut support = Vec::with_capacity(angles);
    for r in results {
        let (p, h) = r?;
        points.push(p);
        support.push(h);
    }
    Ok(NumericalRangeBoundary {
        angles,
        points,
        support,
    })
}

/// Absolute tolerance for "eigenvalue on the negative real axis".
const CUT_TOL: f64 = 1e-12;

fn on_cut(z: C64, include_zero: bool) -> bool {
    let scale = z.norm().max(1.0);
    if z.norm() <= CUT_TOL * scale {
        return include_zero;
    }
    z.re < 0.0 && z.im.abs() <= CUT_TOL * scale
}

fn check_cut(values: &[C64], include_zero: bool) -> Result<()> {
    match values.iter().find(|&&z| on_cut(z, include_zero)) {
        Some(z) => Err(Error::SpectrumOnCut(format!("{} + {}i", z.re, z.im))),
        None => Ok(()),
    }
}

/// `N = A - I` when it is nilpotent to working accuracy.
fn unipotent_part(a: &ComplexMatrix) -> Option<DMatrix<C64>> {
    let d = a.dim();
    let n = a.minus_identity().0;
    let scale = n.norm().max(1.0);
    let mut p = n.clone();
    for _ in 1..d {
        p = &p * &n;
    }
    (p.norm() <= 1e-13 * scale.powi(d as i32)).then_some(n)
}

/// `Σ_{j>=1} (-1)^{j-1} (A - I)^j / j` while `‖A - I‖ < 1`.
pub fn log_series(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.minus_identity().0;
    let r = op_norm(&ComplexMatrix(n.clone()));
    if r >= 1.0 {
        return Err(Error::InvalidArgument(format!("series needs ‖A - I‖ < 1, got {r}")));
    }
    let d = a.dim();
    let mut sum = DMatrix::<C64>::zeros(d, d);
    let mut p = n.clone();
    for j in 1..=200_000usize {
        let term = &p * C64::new(if j % 2 == 1 { 1.0 } else { -1.0 } / j as f64, 0.0);
        sum += &term;
        if p.norm() < 1e-17 * j as f64 || r.powi(j as i32) / (1.0 - r) < 1e-17 {
            return ComplexMatrix::from_dmatrix(sum);
        }
        p = &p * &n;
    }
    Err(Error::ConvergenceFailure("log series"))
}

/// `V log(Λ) V⁻¹` with the principal branch.
pub fn log_eigen(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eigen_decomposition(a)?;
    check_cut(&e.values, true)?;
    if !e.diagonalizable() {
        return Err(Error::NotDiagonalizable(e.condition));
    }
    e.apply(|z| z.ln())
}

/// Principal logarithm. Unipotent inputs use the terminating series, other
/// diagonalizable inputs the eigendecomposition, and the remaining inputs with
/// `‖A - I‖ < 1` the convergent series.
pub fn principal_log(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if let Some(n) = unipotent_part(a) {
        let d = a.dim();
        let mut sum = DMatrix::<C64>::zeros(d, d);
        let mut p = n.clone();
        for j in 1..=d {
            sum += &p * C64::new(if j % 2 == 1 { 1.0 } else { -1.0 } / j as f64, 0.0);
            p = &p * &n;
        }
        return ComplexMatrix::from_dmatrix(sum);
    }
    let e = eigen_decomposition(a)?;
    check_cut(&e.values, true)?;
    if e.diagonalizable() {
        return e.apply(|z| z.ln());
    }
    if op_norm(&a.minus_identity()) < 1.0 {
        return log_series(a);
    }
    Err(Error::NotDiagonalizable(e.condition))
}

fn principal_scalar_root(z: C64, m: u32) -> C64 {
    if z.is_zero() {
        return z;
    }
    C64::from_polar(z.norm().powf(1.0 / m as f64), z.arg() / m as f64)
}

/// Principal `m`-th root: eigenvalues `r e^{iφ}` with `|φ| < π` map to
/// `r^{1/m} e^{iφ/m}`, so the spectrum of the root lies in `Σ(π/m)`.
pub fn principal_root(a: &ComplexMatrix, m: u32) -> Result<ComplexMatrix> {
    if m < 2 {
        return Err(Error::InvalidArgument("root order must be >= 2".into()));
    }
    if let Some(n) = unipotent_part(a) {
        // (I + N)^{1/m} = Σ binom(1/m, j) N^j
        let d = a.dim();
        let mut sum = DMatrix::<C64>::identity(d, d);
        let mut p = n.clone();
        let mut c = 1.0;
        for j in 1..d {
            c *= (1.0 / m as f64 - (j - 1) as f64) / j as f64;
            sum += &p * C64::new(c, 0.0);
            p = &p * &n;
        }
        return ComplexMatrix::from_dmatrix(sum);
    }
    let e = eigen_decomposition(a)?;
    check_cut(&e.values, false)?;
    if !e.diagonalizable() {
        return Err(Error::NotDiagonalizable(e.condition));
    }
    e.apply(|z| principal_scalar_root(z, m))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(m: &DMatrix<C64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(tG)` by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(g: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let d = g.dim();
    let a = &g.0 * C64::new(t, 0.0);
    let nrm = norm1(&a);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * C64::new(2f64.powi(-s), 0.0);
    let id = DMatrix::<C64>::identity(d, d);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| C64::new(PADE13[i], 0.0);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9)) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).unwrap_or_else(|| DMatrix::from_element(d, d, C64::new(f64::NAN, 0.0)));
    for _ in 0..s {
        r = &r * &r;
    }
    ComplexMatrix(r)
}

/// Largest exponent size (in bits) powered by repeated squaring.
pub const MAX_POWER_BITS: u64 = 1 << 14;

/// Terms `n_0..n_K` usable as exponents: cut to the available prefix of a
/// list and before the first term longer than [`MAX_POWER_BITS`].
#[derive(Clone, Debug, PartialEq)]
pub struct PowerTerms {
    pub terms: Vec<BigUint>,
    /// First index left out because its term was too large.
    pub cut_at: Option<usize>,
}

pub fn power_terms(spec: &SequenceSpec, k_max: usize) -> Result<PowerTerms> {
    spec.validate()?;
    let k = match spec.available_terms() {
        Some(n) => k_max.min(n.saturating_sub(1)),
        None => k_max,
    };
    let terms: Vec<BigUint> = spec
        .terms()
        .take(k + 1)
        .take_while(|n| n.bits() <= MAX_POWER_BITS)
        .collect();
    let cut_at = (terms.len() < k + 1).then_some(terms.len());
    Ok(PowerTerms { terms, cut_at })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerDeviation {
    /// `sup_{k<=K} ‖A^{n_k} - I‖`, infinite on overflow.
    pub sup: f64,
    pub argmax_k: usize,
    pub per_k: Vec<f64>,
    pub overflow: bool,
    /// Set when the scan stopped before K because `n_k` exceeded the exponent cap.
    pub cut_at: Option<usize>,
}

/// `‖A^{n_k} - I‖` for `k <= K`, each power computed from `A` directly.
pub fn power_deviation(a: &ComplexMatrix, spec: &SequenceSpec, k_max: usize) -> Result<PowerDeviation> {
    let pt = power_terms(spec, k_max)?;
    let mut pd = power_deviation_terms(a, &pt.terms);
    pd.cut_at = pt.cut_at;
    Ok(pd)
}

pub fn power_deviation_terms(a: &ComplexMatrix, terms: &[BigUint]) -> PowerDeviation {
    let id = ComplexMatrix::identity(a.dim());
    let per_k: Vec<f64> = terms
        .par_iter()
        .map(|n| match a.pow(n) {
            Some(p) => op_norm(&p.sub(&id)),
            None => f64::INFINITY,
        })
        .collect();
    let sup = per_k.iter().copied().fold(0.0, f64::max);
    // first index within rounding of the maximum
    let argmax_k = per_k
        .iter()
        .position(|&v| v >= sup - 1e-12 * sup.max(1.0))
        .unwrap_or(0);
    PowerDeviation {
        sup,
        argmax_k,
        overflow: per_k.iter().any(|v| v.is_infinite()),
        per_k,
        cut_at: None,
    }
}

/// The `d × d` Jordan block `λI + N`.
pub fn jordan_block(d: usize, lambda: C64) -> ComplexMatrix {
    let mut m = DMatrix::<C64>::identity(d, d) * lambda;
    for i in 0..d.saturating_sub(1) {
        m[(i, i + 1)] = C64::one();
    }
    ComplexMatrix(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        op_norm(&a.sub(b)) <= tol
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn eig_examples() {
        let s = eig(&ComplexMatrix::identity(3)).unwrap();
        assert!(s.diagonalizable);
        assert!(s.eigenvalues.iter().all(|z| (z - 1.0).norm() < 1e-14));
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let s = eig(&ComplexMatrix::diag(&[w, c(1.0, 0.0)])).unwrap();
        let ev = sorted(s.eigenvalues);
        assert!((ev[0] - w).norm() < 1e-14 && (ev[1] - 1.0).norm() < 1e-14);
        let comp = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let ev = sorted(eig(&comp).unwrap().eigenvalues);
        assert!((ev[0] + 1.0).norm() < 1e-12 && (ev[1] - 1.0).norm() < 1e-12);
        let jordan = jordan_block(2, c(1.0, 0.0));
        assert!(!eig(&jordan).unwrap().diagonalizable);
    }

    #[test]
    fn norms_and_hermitian_parts() {
        assert_eq!(op_norm(&ComplexMatrix::zeros(3)), 0.0);
        assert!((op_norm(&ComplexMatrix::identity(2).scale(c(0.5, 0.0))) - 0.5).abs() < 1e-14);
        let n = jordan_block(2, C64::zero());
        assert!((op_norm(&n) - 1.0).abs() < 1e-14);
        let hp = hermitian_part(&n);
        assert!((hp.min_eig + 0.5).abs() < 1e-14 && (hp.max_eig - 0.5).abs() < 1e-14);
        let hp = hermitian_part(&ComplexMatrix::identity(2).scale(c(0.0, 1.0)));
        assert!(hp.min_eig.abs() < 1e-15 && hp.max_eig.abs() < 1e-15);
    }

    #[test]
    fn numerical_range_examples() {
        let nr = numerical_range(&ComplexMatrix::diag(&[c(0.0, 0.0), c(1.0, 0.0)]), 64).unwrap();
        assert!(nr.points.iter().all(|z| z.im.abs() < 1e-12 && z.re > -1e-12 && z.re < 1.0 + 1e-12));
        let (lo, hi) = nr.real_axis_interval().unwrap();
        assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        let nr = numerical_range(&jordan_block(2, C64::zero()), 256).unwrap();
        assert!(nr.points.iter().all(|z| (z.norm() - 0.5).abs() < 1e-12));
        let nr = numerical_range(&ComplexMatrix::identity(2).scale(c(0.0, 1.0)), 16).unwrap();
        assert!(nr.points.iter().all(|z| (z - c(0.0, 1.0)).norm() < 1e-14));
        assert!(numerical_range(&ComplexMatrix::identity(2), 4).is_err());
    }

    #[test]
    fn log_examples() {
        assert!(close(&principal_log(&ComplexMatrix::identity(3)).unwrap(), &ComplexMatrix::zeros(3), 1e-14));
        let l = principal_log(&ComplexMatrix::diag(&[c(std::f64::consts::E, 0.0), c(1.0, 0.0)])).unwrap();
        assert!(close(&l, &ComplexMatrix::diag(&[c(1.0, 0.0), c(0.0, 0.0)]), 1e-14));
        let l = principal_log(&jordan_block(2, c(1.0, 0.0))).unwrap();
        assert!(close(&l, &jordan_block(2, C64::zero()), 1e-15));
        let neg = ComplexMatrix::diag(&[c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(principal_log(&neg), Err(Error::SpectrumOnCut(_))));
        let defective = jordan_block(2, c(3.0, 0.0));
        assert!(matches!(principal_log(&defective), Err(Error::NotDiagonalizable(_))));
    }

    #[test]
    fn root_examples() {
        assert!(close(&principal_root(&ComplexMatrix::identity(3), 5).unwrap(), &ComplexMatrix::identity(3), 1e-14));
        let r = principal_root(&ComplexMatrix::diag(&[c(1.0, 0.0), c(4.0, 0.0)]), 2).unwrap();
        assert!(close(&r, &ComplexMatrix::diag(&[c(1.0, 0.0), c(2.0, 0.0)]), 1e-14));
        let r = principal_root(&ComplexMatrix::diag(&[C64::from_polar(1.0, PI / 3.0)]), 3).unwrap();
        assert!((r.get(0, 0) - C64::from_polar(1.0, PI / 9.0)).norm() < 1e-14);
        let neg = ComplexMatrix::diag(&[c(-4.0, 0.0)]);
        assert!(matches!(principal_root(&neg, 2), Err(Error::SpectrumOnCut(_))));
    }

    #[test]
    fn expm_examples() {
        assert!(close(&expm(&ComplexMatrix::zeros(2), 1.0), &ComplexMatrix::identity(2), 1e-15));
        let e = expm(&ComplexMatrix::diag(&[c(0.0, 2.0 * PI)]), 0.5);
        assert!((e.get(0, 0) + 1.0).norm() < 1e-13);
        let n = jordan_block(2, C64::zero());
        assert!(close(&expm(&n, 1.0), &jordan_block(2, c(1.0, 0.0)), 1e-15));
        let big = ComplexMatrix::diag(&[c(-300.0, 0.0), c(0.0, 700.0)]);
        let e = expm(&big, 1.0);
        assert!((e.get(1, 1) - C64::from_polar(1.0, 700.0)).norm() < 1e-10);
    }

    #[test]
    fn power_deviation_examples() {
        let half = ComplexMatrix::identity(2).scale(c(0.5, 0.0));
        let pd = power_deviation(&half, &"geom:2".parse().unwrap(), 20).unwrap();
        // ‖(δI)^n - I‖ = 1 - δ^n: below 1 term by term, sup 1 in the limit
        for (k, v) in pd.per_k.iter().enumerate() {
            let want = 1.0 - 0.5f64.powf(2f64.powi(k as i32));
            assert!((v - want).abs() < 1e-15 && *v <= 1.0);
        }
        assert_eq!(pd.per_k[0], 0.5);
        let w = ComplexMatrix::diag(&[C64::from_polar(1.0, 2.0 * PI / 3.0)]);
        let pd = power_deviation(&w, &"geom:2".parse().unwrap(), 4).unwrap();
        assert!((pd.sup - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(pd.argmax_k, 0);
        let pd = power_deviation(&ComplexMatrix::identity(3), &"affine".parse().unwrap(), 10).unwrap();
        assert_eq!(pd.sup, 0.0);
        let big = ComplexMatrix::identity(1).scale(c(1e10, 0.0));
        let pd = power_deviation(&big, &"geom:2".parse().unwrap(), 8).unwrap();
        assert!(pd.overflow && pd.sup.is_infinite());
    }

    #[test]
    fn matrix_io_round_trip() {
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 2.0), c(0.5, -1.0)], vec![c(0.0, 0.0), c(-3.25, 1e-300)]]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[[1.0,2.0],[0.5,-1.0]],[[0.0,0.0],[-3.25,1e-300]]]");
        assert_eq!(ComplexMatrix::parse_any(&json).unwrap(), m);
        assert_eq!(ComplexMatrix::parse_any(&m.to_text()).unwrap(), m);
        assert!(ComplexMatrix::from_text("2 1,0 0,0 1,0").is_err());
        assert!(serde_json::from_str::<ComplexMatrix>("[[[1,0],[0,0]]]").is_err());
    }
}
