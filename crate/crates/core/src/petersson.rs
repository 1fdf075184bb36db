//! Unweighted family averages of Hecke eigenvalues.
//!
//! `Δ*(n) = Σ_f λ_f(n)` over a family of newforms of weight `κ` and prime
//! level `N` splits into the explicit part
//!
//! ```text
//! Δ′(n) = (κ−1)N/(12√n) δ_{n,□_Y}
//!       + (κ−1)N/12 Σ_{(m,N)=1, m<=Y} (2π i^κ/m) Σ_{c≡0 (N), c>=N} S(m²,n;c)/c · J_{κ−1}(4π√(m²n)/c)
//! ```
//!
//! and a remainder `Δ∞`, which is only ever measured here, never bounded.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::arith;
use crate::error::{Error, Result};
use crate::forms::Eigenform;
use crate::special::{bessel_j, kloosterman, log_gamma};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeterssonTerm {
    pub kappa: u32,
    pub level: u64,
    pub n: u64,
    pub y: f64,
    pub c_max: u64,
    pub main_term: f64,
    pub kloosterman_tail: f64,
    /// Bound on the part of the c-sum beyond `c_max`.
    pub truncation_estimate: f64,
}

impl PeterssonTerm {
    /// `Δ′(n)` truncated at `c_max`.
    pub fn value(&self) -> f64 {
        self.main_term + self.kloosterman_tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilySizeModel {
    /// `(κ−1)N/12`, the model for the size of the whole newform family.
    pub model: f64,
    /// `(κN)^{5/6}`, the size of the error term.
    pub band: f64,
}

/// `Σ_f λ_f(n)` in family order.
///
/// ```
/// let f = lmoment::forms::builtin_form("delta12", 4).unwrap();
/// let fam = vec![f.clone(), f];
/// assert_eq!(lmoment::petersson::delta_star_empirical(&fam, 1).unwrap(), 2.0);
/// ```
pub fn delta_star_empirical(family: &[Eigenform], n: u64) -> Result<f64> {
    if let Some(first) = family.first() {
        check_family(family, first.weight(), first.level())?;
    }
    family.iter().map(|f| f.try_lambda(n)).sum()
}

fn check_family(family: &[Eigenform], kappa: u32, level: u64) -> Result<()> {
    match family.iter().find(|f| f.weight() != kappa || f.level() != level) {
        Some(f) => Err(Error::domain(format!(
            "family mixes (κ, N) = ({kappa}, {level}) with ({}, {}) from {}",
            f.weight(),
            f.level(),
            f.id()
        ))),
        None => Ok(()),
    }
}

/// `m` with `n = m²` and `m <= y`, if any.
pub fn square_root_below(n: u64, y: f64) -> Option<u64> {
    let m = (n as f64).sqrt().round() as u64;
    (m * m == n && m as f64 <= y).then_some(m)
}

/// `c_max = 100 N ⌈√n⌉ Y`.
pub fn default_c_max(level: u64, n: u64, y: f64) -> u64 {
    let root = (n as f64).sqrt().ceil();
    (100.0 * level as f64 * root * y.max(1.0)).ceil() as u64
}

/// `Π_p max_a (a+1)/p^{a/3}`, so that `d(c) <= D · c^{1/3}` for every `c`.
fn divisor_cube_root_constant() -> f64 {
    // only p < 8 contribute a factor above 1
    [2.0f64, 3.0, 5.0, 7.0]
        .iter()
        .map(|&p| (0..12).map(|a| (a as f64 + 1.0) / p.powf(a as f64 / 3.0)).fold(1.0, f64::max))
        .product()
}

/// Bound on `(κ−1)N/12 Σ_m (2π/m) Σ_{c > c_max} |S(m²,n;c)|/c · |J_{κ−1}(4π m√n/c)|`
/// from `|S(a,b;c)| <= d(c) √(a,b) √c` and `|J_ν(x)| <= (x/2)^ν / ν!`.
fn truncation_bound(kappa: u32, level: u64, n: u64, ms: &[u64], c_max: u64) -> Result<f64> {
    let k = (c_max / level) as f64;
    let kf = kappa as f64;
    let lg = log_gamma(Complex64::new(kf, 0.0))?.re;
    let d = divisor_cube_root_constant();
    let tail = k.powf(11.0 / 6.0 - kf) / (kf - 11.0 / 6.0) * (level as f64).powf(5.0 / 6.0 - kf);
    let mut total = 0.0;
    for &m in ms {
        let g = arith::gcd(m * m, n) as f64;
        let bessel = ((kf - 1.0) * (2.0 * PI * m as f64 * (n as f64).sqrt()).ln() - lg).exp();
        total += 2.0 * PI / m as f64 * d * g.sqrt() * bessel * tail;
    }
    Ok((kf - 1.0) * level as f64 / 12.0 * total)
}

/// `Δ′_{κ,N}(n)` with the c-sum truncated at `c_max`.
pub fn delta_prime(kappa: u32, level: u64, n: u64, y: f64, c_max: u64) -> Result<PeterssonTerm> {
    if kappa < 2 || kappa % 2 != 0 {
        return Err(Error::domain(format!("weight must be even and >= 2, got {kappa}")));
    }
    if level != 1 && !arith::is_prime(level) {
        return Err(Error::domain(format!("level must be 1 or prime, got {level}")));
    }
    if n < 1 {
        return Err(Error::domain("n must be >= 1"));
    }
    if level > 1 && n % (level * level) == 0 {
        return Err(Error::domain(format!("(n, N²) must divide N; N² = {} divides n = {n}", level * level)));
    }
    if c_max < level {
        return Err(Error::domain(format!("c_max = {c_max} below the level {level}")));
    }
    if !(y > 0.0) {
        return Err(Error::domain(format!("Y must be positive, got {y}")));
    }
    let kf = kappa as f64;
    let scale = (kf - 1.0) * level as f64 / 12.0;
    let main_term = match square_root_below(n, y) {
        Some(_) => scale / (n as f64).sqrt(),
        None => 0.0,
    };
    let ms: Vec<u64> = (1..=y.floor() as u64).filter(|&m| level == 1 || m % level != 0).collect();
    let i_kappa = if kappa % 4 == 0 { 1.0 } else { -1.0 };
    let per_m: Vec<f64> = ms
        .par_iter()
        .map(|&m| -> Result<f64> {
            let arg = 4.0 * PI * m as f64 * (n as f64).sqrt();
            let mut sum = 0.0;
            let mut c = level;
            while c <= c_max {
                let s = kloosterman((m * m) as i64, n as i64, c)?;
                if s != 0.0 {
                    sum += s / c as f64 * bessel_j(kappa - 1, arg / c as f64)?;
                }
                c += level;
            }
            Ok(2.0 * PI * i_kappa / m as f64 * sum)
        })
        .collect::<Result<_>>()?;
    let kloosterman_tail = scale * per_m.iter().sum::<f64>();
    Ok(PeterssonTerm {
        kappa,
        level,
        n,
        y,
        c_max,
        main_term,
        kloosterman_tail,
        truncation_estimate: truncation_bound(kappa, level, n, &ms, c_max)?,
    })
}

/// `Δ*(n) − Δ′(n)` for a family of weight `kappa` and level `level`.
pub fn delta_infty_residual(family: &[Eigenform], kappa: u32, level: u64, n: u64, y: f64, c_max: u64) -> Result<f64> {
    check_family(family, kappa, level)?;
    let star = delta_star_empirical(family, n)?;
    Ok(star - delta_prime(kappa, level, n, y, c_max)?.value())
}

/// `|H*| ≈ (κ−1)N/12` with error band `(κN)^{5/6}`.
///
/// ```
/// let m = lmoment::petersson::family_size_model(2, 11).unwrap();
/// assert!((m.model - 11.0 / 12.0).abs() < 1e-15);
/// ```
pub fn family_size_model(kappa: u32, level: u64) -> Result<FamilySizeModel> {
    if level <= 1 {
        return Err(Error::domain(format!("family size model needs N > 1, got {level}")));
    }
    Ok(FamilySizeModel {
        model: (kappa as f64 - 1.0) * level as f64 / 12.0,
        band: (kappa as f64 * level as f64).powf(5.0 / 6.0),
    })
}
