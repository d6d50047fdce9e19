//! Seeded generators for the random test families (PSD, accretive,
//! diagonal). Every generator takes an explicit RNG so runs are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use nalgebra::DMatrix;

use crate::matops::{ComplexMatrix, C64};

pub const DEFAULT_SEED: u64 = 20_241_017;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(d: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / 2f64.sqrt()
    })
}

/// `B B* / d` for a complex Gaussian `B`: Hermitian positive semidefinite,
/// singular when `rank < d`.
pub fn random_psd(d: usize, rank: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let b = DMatrix::from_fn(d, rank.max(1), |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / 2f64.sqrt()
    });
    let m = &b * b.adjoint() / C64::new(d as f64, 0.0);
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    ComplexMatrix::from_dmatrix(m).expect("finite")
}

/// Random Hermitian `H`.
pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = gaussian(d, rng);
    ComplexMatrix::from_dmatrix((&g + g.adjoint()) * C64::new(0.5, 0.0)).expect("finite")
}

/// `H + iK` with `H ⪰ margin·I` and `K` Hermitian, so `Re A ⪰ margin·I`.
pub fn random_accretive(d: usize, margin: f64, rng: &mut impl Rng) -> ComplexMatrix {
    let h = random_psd(d, d, rng).add(&ComplexMatrix::identity(d).scale(C64::new(margin, 0.0)));
    let k = random_hermitian(d, rng);
    h.add(&k.scale(C64::new(0.0, 1.0)))
}

/// Real diagonal matrix with entries drawn uniformly from `[lo, hi]`.
pub fn random_real_diagonal(d: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> ComplexMatrix {
    let entries: Vec<C64> = (0..d).map(|_| C64::new(rng.random_range(lo..=hi), 0.0)).collect();
    ComplexMatrix::diag(&entries)
}
