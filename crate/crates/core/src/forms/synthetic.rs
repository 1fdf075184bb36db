//! Seeded synthetic eigenvalue sequences.
//!
//! These are not modular forms. They carry Sato–Tate distributed `λ(p)`,
//! extended to all `n` by the Hecke relations, so they satisfy every invariant
//! that [`Eigenform::new`](super::Eigenform::new) checks and give cheap
//! prime-level families of any size.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Eigenform, FormSource};
use crate::arith::FactorTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub level: u64,
    pub weight: u32,
    pub n_max: usize,
    /// Forced root number; drawn uniformly from `±1` when `None`.
    pub root_number: Option<f64>,
}

fn sato_tate_angle(rng: &mut impl Rng) -> f64 {
    loop {
        let theta = rng.gen::<f64>() * PI;
        if rng.gen::<f64>() < theta.sin().powi(2) {
            return theta;
        }
    }
}

/// One synthetic form drawn from `rng`.
pub fn synthetic_form_with(spec: &SyntheticSpec, id: impl Into<String>, rng: &mut impl Rng) -> Result<Eigenform> {
    if spec.n_max < 1 {
        return Err(Error::domain("n_max must be >= 1"));
    }
    let n_max = spec.n_max;
    let level = spec.level;
    let eps = match spec.root_number {
        Some(e) if e == 1.0 || e == -1.0 => e,
        Some(e) => return Err(Error::domain(format!("root number must be ±1, got {e}"))),
        None => {
            if rng.gen::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
    };
    let ik = if spec.weight % 4 == 0 { 1.0 } else { -1.0 };
    let table = FactorTable::new(n_max);
    let mut c = vec![1.0f64; n_max + 1];
    for n in 2..=n_max {
        let p = table.smallest_prime_factor(n as u64) as usize;
        let mut pe = p;
        while n % (pe * p) == 0 {
            pe *= p;
        }
        c[n] = if pe < n {
            c[pe] * c[n / pe]
        } else if pe == p {
            if level > 1 && p as u64 == level {
                // ε = i^κ μ(N) λ(N) √N with μ(N) = −1
                -eps * ik / (level as f64).sqrt()
            } else {
                2.0 * sato_tate_angle(rng).cos()
            }
        } else {
            let chi = if level > 1 && p as u64 == level { 0.0 } else { 1.0 };
            c[p] * c[n / p] - chi * c[n / (p * p)]
        };
    }
    c.remove(0);
    Eigenform::new(id, level, spec.weight, c, FormSource::Synthetic)
}

/// One synthetic form from a seed.
pub fn synthetic_form(spec: &SyntheticSpec, id: impl Into<String>, seed: u64) -> Result<Eigenform> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    synthetic_form_with(spec, id, &mut rng)
}

/// `count` synthetic forms named `syn<N>_<i>`, all drawn from one seeded stream.
///
/// ```
/// use lmoment::forms::{synthetic_family, SyntheticSpec};
/// let spec = SyntheticSpec { level: 101, weight: 2, n_max: 500, root_number: None };
/// let fam = synthetic_family(&spec, 3, 7).unwrap();
/// assert_eq!(fam.len(), 3);
/// assert!(fam.iter().all(|f| (f.lambda(101).abs() - 101f64.sqrt().recip()).abs() < 1e-15));
/// ```
pub fn synthetic_family(spec: &SyntheticSpec, count: usize, seed: u64) -> Result<Vec<Eigenform>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| synthetic_form_with(spec, format!("syn{}_{i:03}", spec.level), &mut rng))
        .collect()
}
