//! Oracles and property checks shared by the proptest suite and the
//! acceptance run. Each check returns `Err` with a description on failure.
#![allow(dead_code)]

use std::f64::consts::PI;

use escape_lab::circle::{deviation, exact_deviation, lambda_set, UnimodularPoint};
use escape_lab::exact::Fraction;
use escape_lab::matops::{
    eig, expm, jordan_block, numerical_range, op_norm, power_deviation, principal_log, principal_root, ComplexMatrix,
    C64,
};
use escape_lab::positivity::{matrix_accretive_scan, scalar_accretive_scan, AccretiveVerdict, PolarScalar};
use escape_lab::random;
use escape_lab::seqcore::SequenceSpec;
use nalgebra::DMatrix;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

pub const FAMILIES: &[&str] = &["geom:2", "geom:3", "geom:5", "geom:12", "affine", "factorial", "doubleexp"];

/// `n_k mod q` for `k < len`, straight from the recurrences.
pub fn oracle_residues(family: &str, q: u64, len: usize) -> Vec<u64> {
    let q = q as u128;
    let mut out = Vec::with_capacity(len);
    match family.split_once(':') {
        Some(("geom", c)) => {
            let c: u128 = c.parse().unwrap();
            let mut r = 1 % q;
            for _ in 0..len {
                out.push(r as u64);
                r = r * c % q;
            }
        }
        _ => match family {
            "affine" => out.extend((0..len).map(|k| ((k as u128 + 1) % q) as u64)),
            "factorial" => {
                let mut r = 1 % q;
                for k in 0..len {
                    r = r * (k as u128 + 1) % q;
                    out.push(r as u64);
                }
            }
            "doubleexp" => {
                out.push((1 % q) as u64);
                let mut r = 4 % q;
                for _ in 1..len {
                    out.push(r as u64);
                    r = r * r % q;
                }
            }
            _ => unreachable!("{family}"),
        },
    }
    out
}

fn chord_at(p: u64, r: u64, q: u64) -> f64 {
    let x = (p as u128 * r as u128 % q as u128) as u64;
    2.0 * (PI * x.min(q - x) as f64 / q as f64).sin()
}

/// `max_k 2 sin(π ‖n_k p/q‖)` over enough terms to cover every residue pattern.
pub fn oracle_deviation(family: &str, p: u64, q: u64) -> f64 {
    oracle_residues(family, q, 3 * q as usize + 8)
        .iter()
        .map(|&r| chord_at(p, r, q))
        .fold(0.0, f64::max)
}

fn frac(p: u64, q: u64) -> Fraction {
    Fraction::from_u64(p, q).unwrap()
}

fn spec(f: &str) -> SequenceSpec {
    f.parse().unwrap()
}

pub fn exact_deviation_matches_oracle(f: &str, p: u64, q: u64) -> Check {
    let d = exact_deviation(&frac(p, q), &spec(f)).map_err(|e| e.to_string())?;
    let o = oracle_deviation(f, p, q);
    ensure!((d.value - o).abs() < 1e-12, "{f} at {p}/{q}: {} vs oracle {o}", d.value);
    Ok(())
}

pub fn deviation_is_symmetric(f: &str, p: u64, q: u64) -> Check {
    let a = exact_deviation(&frac(p, q), &spec(f)).map_err(|e| e.to_string())?.value;
    let b = exact_deviation(&frac(q - p, q), &spec(f)).map_err(|e| e.to_string())?.value;
    ensure!((a - b).abs() < 1e-15, "{f}: d({p}/{q}) = {a} but d(1-θ) = {b}");
    Ok(())
}

pub fn truncated_deviation_is_monotone(f: &str, p: u64, q: u64, k1: usize, extra: usize) -> Check {
    let s = spec(f);
    let point = UnimodularPoint::rational(p, q).unwrap();
    let a = deviation(&point, &s, k1).value;
    let b = deviation(&point, &s, k1 + extra).value;
    let full = exact_deviation(&frac(p, q), &s).map_err(|e| e.to_string())?.value;
    ensure!(a <= b + 1e-15 && b <= full + 1e-15, "{f} {p}/{q}: {a} <= {b} <= {full} fails");
    Ok(())
}

pub fn lambda_sets_are_nested(f: &str, lo: f64, hi: f64, q_max: u64) -> Check {
    let s = spec(f);
    let small = lambda_set(&s, lo, q_max).map_err(|e| e.to_string())?;
    let large = lambda_set(&s, hi, q_max).map_err(|e| e.to_string())?;
    for m in &small.members {
        ensure!(
            large.members.iter().any(|n| n.theta == m.theta),
            "{f}: {} in Λ_{lo} but not in Λ_{hi}",
            m.label
        );
    }
    Ok(())
}

/// `X` with `‖X‖ = eps`.
pub fn perturbation(d: usize, eps: f64, seed: u64) -> ComplexMatrix {
    let mut rng = random::rng(seed);
    let x = random::random_hermitian(d, &mut rng).add(&random::random_hermitian(d, &mut rng).scale(C64::new(0.0, 1.0)));
    x.scale(C64::new(eps / op_norm(&x), 0.0))
}

pub fn log_series_bound(d: usize, eps: f64, seed: u64) -> Check {
    let a = ComplexMatrix::identity(d).add(&perturbation(d, eps, seed));
    let l = principal_log(&a).map_err(|e| e.to_string())?;
    let n = op_norm(&l);
    ensure!(n <= eps / (1.0 - eps) + 1e-10, "‖log A‖ = {n} > ε/(1-ε) for ε = {eps}");
    let back = op_norm(&expm(&l, 1.0).sub(&a));
    ensure!(back <= 1e-9, "exp(log A) misses A by {back}");
    Ok(())
}

pub fn inverse_estimate(d: usize, eps: f64, seed: u64) -> Check {
    let a = ComplexMatrix::identity(d).add(&perturbation(d, eps, seed));
    let n = op_norm(&a.inverse().map_err(|e| e.to_string())?);
    ensure!(n <= 1.0 / (1.0 - eps) + 1e-10, "‖A⁻¹‖ = {n} > 1/(1-ε) for ε = {eps}");
    Ok(())
}

pub fn unipotent_log_identity(d: usize, seed: u64) -> Check {
    let mut rng = random::rng(seed);
    let g = random::random_hermitian(d, &mut rng);
    let n = DMatrix::from_fn(d, d, |i, j| if j > i { g.get(i, j) } else { C64::new(0.0, 0.0) });
    let a = ComplexMatrix::from_dmatrix(n + DMatrix::identity(d, d)).unwrap();
    let l = principal_log(&a).map_err(|e| e.to_string())?;
    // the log of a unipotent matrix is nilpotent and exponentiates back
    let scale = (1.0 + a.frobenius_norm()).powi(d as i32);
    let nil = l.pow_u64(d as u64).unwrap().frobenius_norm();
    ensure!(nil <= 1e-9 * scale, "log(I+N)^d has norm {nil}");
    let back = op_norm(&expm(&l, 1.0).sub(&a));
    ensure!(back <= 1e-10 * scale, "exp(log(I+N)) misses by {back}");
    Ok(())
}

pub fn jordan_superdiagonal_counts_powers(p: u64, d: usize) -> Check {
    let j = jordan_block(d, C64::new(1.0, 0.0)).pow_u64(p).unwrap();
    for k in 0..d - 1 {
        ensure!(j.get(k, k + 1) == C64::new(p as f64, 0.0), "J^{p} ({k},{}) = {}", k + 1, j.get(k, k + 1));
    }
    Ok(())
}

pub fn normal_numerical_range_is_the_hull(d: usize, seed: u64) -> Check {
    let mut rng = random::rng(seed);
    let mut lambdas = Vec::new();
    for _ in 0..d {
        let z = random::random_hermitian(2, &mut rng);
        lambdas.push(C64::new(z.get(0, 0).re, z.get(1, 1).re));
    }
    // unitary conjugate of a diagonal matrix
    let h = random::random_hermitian(d, &mut rng);
    let u = expm(&h.scale(C64::new(0.0, 1.0)), 1.0);
    let a = u.mul(&ComplexMatrix::diag(&lambdas)).mul(&u.adjoint());
    let w = numerical_range(&a, 64).map_err(|e| e.to_string())?;
    for (j, h) in w.support.iter().enumerate() {
        let rot = C64::from_polar(1.0, 2.0 * PI * j as f64 / 64.0);
        let hull = lambdas.iter().map(|l| (rot * l).re).fold(f64::NEG_INFINITY, f64::max);
        ensure!((h - hull).abs() < 1e-9, "support at angle {j}: {h} vs hull {hull}");
    }
    Ok(())
}

pub fn powers_dominate_the_spectrum(d: usize, seed: u64, k: usize) -> Check {
    let mut rng = random::rng(seed);
    let a = random::random_accretive(d, 0.0, &mut rng);
    let a = a.scale(C64::new(1.0 / op_norm(&a), 0.0));
    let pd = power_deviation(&a, &SequenceSpec::Affine, k).map_err(|e| e.to_string())?;
    let lambdas = eig(&a).map_err(|e| e.to_string())?.eigenvalues;
    for (i, v) in pd.per_k.iter().enumerate() {
        let n = i as i32 + 1;
        let spectral = lambdas.iter().map(|l| (l.powi(n) - 1.0).norm()).fold(0.0, f64::max);
        ensure!(*v >= spectral - 1e-10, "‖A^{n} - I‖ = {v} < spectral {spectral}");
    }
    Ok(())
}

/// Largest K with `n_K` small enough that repeated squaring keeps phases to 1e-11.
pub fn moderate_truncation(f: &str) -> usize {
    match f {
        "geom:2" => 14,
        "geom:3" => 9,
        "geom:5" => 6,
        "geom:12" => 4,
        "doubleexp" => 4,
        "factorial" => 7,
        _ => 40,
    }
}

pub fn diagonal_escape_matches_circle(f: &str, phases: &[(u64, u64)]) -> Check {
    let s = spec(f);
    let k_max = moderate_truncation(f);
    let d = ComplexMatrix::diag(
        &phases
            .iter()
            .map(|&(p, q)| C64::from_polar(1.0, 2.0 * PI * p as f64 / q as f64))
            .collect::<Vec<_>>(),
    );
    let pd = power_deviation(&d, &s, k_max).map_err(|e| e.to_string())?;
    for (k, v) in pd.per_k.iter().enumerate() {
        let exact = phases
            .iter()
            .map(|&(p, q)| chord_at(p, oracle_residues(f, q, k + 1)[k], q))
            .fold(0.0, f64::max);
        ensure!((v - exact).abs() < 1e-10, "{f} k={k}: {v} vs {exact}");
    }
    let circle = phases
        .iter()
        .map(|&(p, q)| deviation(&UnimodularPoint::rational(p, q).unwrap(), &s, k_max).value)
        .fold(0.0, f64::max);
    ensure!((pd.sup - circle).abs() < 1e-10, "{f}: sup {} vs circle {circle}", pd.sup);
    Ok(())
}

pub fn scalar_and_matrix_scans_agree(f: &str, p: u64, q: u64, k: usize, d: usize) -> Check {
    let s = spec(f);
    let c = PolarScalar::new(1.0, UnimodularPoint::rational(p, q).unwrap()).unwrap();
    let a = ComplexMatrix::identity(d).scale(C64::from_polar(1.0, 2.0 * PI * p as f64 / q as f64));
    let scan = matrix_accretive_scan(&a, &s, k, 1e-9, false).map_err(|e| e.to_string())?;
    let residues = oracle_residues(f, q, k + 1);
    for row in &scan.per_k {
        let x = (p as u128 * residues[row.k] as u128 % q as u128) as f64;
        let want = (2.0 * PI * x / q as f64).cos();
        ensure!((row.min_eig - want).abs() < 1e-10, "{f} {p}/{q} k={}: {} vs {want}", row.k, row.min_eig);
    }
    let scalar = scalar_accretive_scan(&c, &s, false, k).map_err(|e| e.to_string())?;
    match (&scalar.verdict, &scan.verdict) {
        (AccretiveVerdict::FailsAt { k: ks, .. }, AccretiveVerdict::FailsAt { k: km, .. }) => {
            ensure!(ks == km, "scalar fails at {ks}, matrix at {km}")
        }
        (AccretiveVerdict::FailsAt { k: ks, .. }, _) => ensure!(*ks > k, "matrix passes but scalar fails at {ks}"),
        (_, AccretiveVerdict::FailsAt { k: km, .. }) => {
            return Err(format!("matrix fails at {km} where the exact scan passes"))
        }
        _ => {}
    }
    Ok(())
}

pub fn psd_powers_are_accretive(d: usize, seed: u64, k: usize) -> Check {
    let mut rng = random::rng(seed);
    let a = random::random_psd(d, d, &mut rng);
    let scan = matrix_accretive_scan(&a, &SequenceSpec::Affine, k, 1e-9, false).map_err(|e| e.to_string())?;
    ensure!(scan.verdict.passed(), "PSD matrix fails the scan: {:?}", scan.verdict);
    Ok(())
}

/// `S` with spectrum inside the open sector of half-angle `π/m`; then the
/// principal root of `S^m` is `S` itself.
pub fn principal_root_is_unique_in_its_sector(d: usize, m: u32, seed: u64) -> Check {
    let mut rng = random::rng(seed);
    let half = 0.9 * PI / m as f64;
    let mu: Vec<C64> = (0..d)
        .map(|_| {
            let h = random::random_hermitian(2, &mut rng);
            C64::from_polar(0.5 + h.get(0, 0).re.abs(), half * h.get(1, 1).re.tanh())
        })
        .collect();
    let v = ComplexMatrix::identity(d).add(&perturbation(d, 0.5, seed ^ 0x5eed));
    let s = v.mul(&ComplexMatrix::diag(&mu)).mul(&v.inverse().unwrap());
    let a = s.pow_u64(m as u64).unwrap();
    let root = principal_root(&a, m).map_err(|e| e.to_string())?;
    let err = op_norm(&root.sub(&s));
    ensure!(err <= 1e-8 * op_norm(&s), "m = {m}: principal root misses S by {err}");
    Ok(())
}
