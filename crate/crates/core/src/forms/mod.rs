//! Normalized Hecke eigenvalue sequences.
//!
//! An [`Eigenform`] stores `λ_f(1..=n_max)` for a newform of level `N`
//! (1 or prime) and even weight `κ`, normalized so that `λ_f(1) = 1` and
//! `|λ_f(n)| <= d(n)`. Built-in forms are generated exactly from their
//! q-expansions; other forms come from coefficient files or from the seeded
//! synthetic generator.

pub mod io;
pub mod qexp;
pub mod synthetic;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};

use crate::arith::{self, FactorTable};
use crate::error::{Error, Result};

pub use io::{load_coefficients, parse_coefficients, write_coefficients};
pub use synthetic::{synthetic_family, synthetic_form, SyntheticSpec};

/// Absolute tolerance for identities that hold exactly in exact arithmetic.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Coefficients beyond this index are not validated on ingestion.
pub const VALIDATION_LIMIT: usize = 10_000;

/// Default number of coefficients generated for built-in forms.
pub const DEFAULT_N_MAX: usize = 10_000;

/// Tolerance for accepting a computed root number as a sign.
const ROOT_NUMBER_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormSource {
    Builtin,
    File,
    Synthetic,
}

/// A Hecke newform given by its normalized eigenvalues.
#[derive(Debug, Clone)]
pub struct Eigenform {
    id: String,
    level: u64,
    weight: u32,
    coeffs: Vec<f64>,
    root_number: f64,
    source: FormSource,
}

impl Eigenform {
    /// Builds a form after checking the structural invariants on the first
    /// [`VALIDATION_LIMIT`] coefficients and computing the root number.
    pub fn new(
        id: impl Into<String>,
        level: u64,
        weight: u32,
        coeffs: Vec<f64>,
        source: FormSource,
    ) -> Result<Self> {
        check_level_weight(level, weight)?;
        if coeffs.is_empty() {
            return Err(Error::domain("an eigenform needs at least one coefficient"));
        }
        let mut f = Eigenform { id: id.into(), level, weight, coeffs, root_number: 0.0, source };
        validate(&f)?;
        f.root_number = root_number(&f)?;
        Ok(f)
    }

    /// Builds a form without any validation. Intended for test doubles such
    /// as sequences that deliberately break the Deligne bound.
    pub fn unchecked(
        id: impl Into<String>,
        level: u64,
        weight: u32,
        coeffs: Vec<f64>,
        root_number: f64,
    ) -> Self {
        Eigenform {
            id: id.into(),
            level,
            weight,
            coeffs,
            root_number,
            source: FormSource::Synthetic,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    /// Number of stored coefficients.
    pub fn n_max(&self) -> usize {
        self.coeffs.len()
    }

    /// `λ_f(1..=n_max)`; index 0 holds `λ_f(1)`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn root_number(&self) -> f64 {
        self.root_number
    }

    pub fn source(&self) -> FormSource {
        self.source
    }

    /// `λ_f(n)`.
    ///
    /// # Panics
    /// If `n == 0` or `n > n_max`.
    pub fn lambda(&self, n: u64) -> f64 {
        assert!(n >= 1 && n as usize <= self.coeffs.len(), "λ({n}) not stored (n_max = {})", self.coeffs.len());
        self.coeffs[n as usize - 1]
    }

    pub fn try_lambda(&self, n: u64) -> Result<f64> {
        if n >= 1 && n as usize <= self.coeffs.len() {
            Ok(self.coeffs[n as usize - 1])
        } else {
            Err(Error::range(format!("λ({n}) requested but form {} stores n <= {}", self.id, self.coeffs.len())))
        }
    }

    /// `χ_0(p)`: 0 when `p` divides the level, else 1.
    pub fn principal_character(&self, p: u64) -> f64 {
        if self.level > 1 && p % self.level == 0 {
            0.0
        } else {
            1.0
        }
    }

    /// Same form with the coefficient list cut to `n_max`.
    pub fn truncated(&self, n_max: usize) -> Self {
        let mut f = self.clone();
        f.coeffs.truncate(n_max.max(1));
        f
    }

    /// Same data under another identifier.
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

fn check_level_weight(level: u64, weight: u32) -> Result<()> {
    if level != 1 && !arith::is_prime(level) {
        return Err(Error::domain(format!("level must be 1 or prime, got {level}")));
    }
    if weight < 2 || weight % 2 != 0 {
        return Err(Error::domain(format!("weight must be even and >= 2, got {weight}")));
    }
    Ok(())
}

/// The exact built-in forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BuiltinForm {
    Delta12,
    Level1Weight16,
    Level1Weight18,
    Level1Weight20,
    Level1Weight22,
    Level1Weight26,
    Level11Weight2,
}

impl BuiltinForm {
    pub const ALL: [BuiltinForm; 7] = [
        BuiltinForm::Delta12,
        BuiltinForm::Level1Weight16,
        BuiltinForm::Level1Weight18,
        BuiltinForm::Level1Weight20,
        BuiltinForm::Level1Weight22,
        BuiltinForm::Level1Weight26,
        BuiltinForm::Level11Weight2,
    ];

    /// The level-1 forms spanning one-dimensional cusp spaces.
    pub const LEVEL1: [BuiltinForm; 6] = [
        BuiltinForm::Delta12,
        BuiltinForm::Level1Weight16,
        BuiltinForm::Level1Weight18,
        BuiltinForm::Level1Weight20,
        BuiltinForm::Level1Weight22,
        BuiltinForm::Level1Weight26,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BuiltinForm::Delta12 => "delta12",
            BuiltinForm::Level1Weight16 => "level1_weight16",
            BuiltinForm::Level1Weight18 => "level1_weight18",
            BuiltinForm::Level1Weight20 => "level1_weight20",
            BuiltinForm::Level1Weight22 => "level1_weight22",
            BuiltinForm::Level1Weight26 => "level1_weight26",
            BuiltinForm::Level11Weight2 => "level11_weight2",
        }
    }

    pub fn level(self) -> u64 {
        match self {
            BuiltinForm::Level11Weight2 => 11,
            _ => 1,
        }
    }

    pub fn weight(self) -> u32 {
        match self {
            BuiltinForm::Delta12 => 12,
            BuiltinForm::Level1Weight16 => 16,
            BuiltinForm::Level1Weight18 => 18,
            BuiltinForm::Level1Weight20 => 20,
            BuiltinForm::Level1Weight22 => 22,
            BuiltinForm::Level1Weight26 => 26,
            BuiltinForm::Level11Weight2 => 2,
        }
    }

    /// Generates `λ(1..=n_max)` exactly and normalizes.
    pub fn generate(self, n_max: usize) -> Result<Eigenform> {
        if n_max < 1 {
            return Err(Error::domain("n_max must be >= 1"));
        }
        let weight = self.weight();
        let coeffs: Vec<f64> = match self {
            BuiltinForm::Delta12 => qexp::ramanujan_tau(n_max)
                .iter()
                .enumerate()
                .map(|(i, &t)| t as f64 / ((i + 1) as f64).powf(5.5))
                .collect(),
            BuiltinForm::Level11Weight2 => qexp::level11_weight2(n_max)
                .iter()
                .enumerate()
                .map(|(i, &a)| a as f64 / ((i + 1) as f64).sqrt())
                .collect(),
            _ => level1_coefficients(weight, n_max)
                .iter()
                .enumerate()
                .map(|(i, a)| qexp::normalize_big(a, (i + 1) as u64, weight))
                .collect(),
        };
        let mut f = Eigenform {
            id: self.id().to_string(),
            level: self.level(),
            weight,
            coeffs,
            root_number: 0.0,
            source: FormSource::Builtin,
        };
        f.root_number = root_number(&f)?;
        Ok(f)
    }
}

impl fmt::Display for BuiltinForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BuiltinForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinForm::ALL
            .into_iter()
            .find(|b| b.id() == s)
            .ok_or_else(|| {
                let known: Vec<_> = BuiltinForm::ALL.iter().map(|b| b.id()).collect();
                Error::domain(format!("unknown built-in form `{s}` (known: {})", known.join(", ")))
            })
    }
}

/// Looks up a built-in form by id and generates `n_max` coefficients.
///
/// ```
/// let delta = lmoment::forms::builtin_form("delta12", 10).unwrap();
/// assert!((delta.lambda(2) + 24.0 / 2f64.powf(5.5)).abs() < 1e-15);
/// ```
pub fn builtin_form(id: &str, n_max: usize) -> Result<Eigenform> {
    id.parse::<BuiltinForm>()?.generate(n_max)
}

/// Exact coefficients of the weight-`κ` level-1 eigenform `Δ·E_{κ−12}`.
///
/// Prime coefficients come from the modular convolution; prime powers and
/// composites follow from the integral Hecke relations
/// `a(p^{e+1}) = a(p)a(p^e) − p^{κ−1}a(p^{e−1})` and `a(mn) = a(m)a(n)`.
fn level1_coefficients(weight: u32, n_max: usize) -> Vec<BigInt> {
    let conv = qexp::DeltaEisenstein::new(weight, n_max);
    let table = FactorTable::new(n_max);
    let mut a: Vec<BigInt> = vec![BigInt::one(); n_max + 1];
    for n in 2..=n_max {
        let p = table.smallest_prime_factor(n as u64) as usize;
        let mut pe = p;
        let mut e = 1;
        while n % (pe * p) == 0 {
            pe *= p;
            e += 1;
        }
        a[n] = if pe < n {
            &a[pe] * &a[n / pe]
        } else if e == 1 {
            conv.coefficient(n)
        } else {
            let pk = BigInt::from(p).pow(weight - 1);
            &a[p] * &a[n / p] - pk * &a[n / (p * p)]
        };
    }
    a.remove(0);
    a
}

/// `Σ_{d | (m,n), (d,N)=1} λ(mn/d²)`, which equals `λ(m)λ(n)` for an eigenform.
pub fn hecke_product(f: &Eigenform, m: u64, n: u64) -> Result<f64> {
    if m < 1 || n < 1 {
        return Err(Error::domain("hecke_product needs m, n >= 1"));
    }
    let mn = m.checked_mul(n).ok_or_else(|| Error::range("m·n overflows"))?;
    if mn as usize > f.n_max() {
        return Err(Error::range(format!("m·n = {mn} exceeds n_max = {}", f.n_max())));
    }
    let g = arith::gcd(m, n);
    let mut total = 0.0;
    for d in 1..=g {
        if g % d == 0 && f.principal_character(d) != 0.0 {
            total += f.lambda(mn / (d * d));
        }
    }
    Ok(total)
}

/// Terms `(exponent, coefficient)` of the expansion of `λ(p)^e` in the
/// `λ(p^j)`, ordered by increasing exponent.
///
/// ```
/// // λ(p)^2 = 1 + λ(p^2)
/// assert_eq!(lmoment::forms::expansion_terms(2), vec![(0, 1), (2, 1)]);
/// ```
pub fn expansion_terms(e: u32) -> Vec<(u32, i64)> {
    let m = e / 2;
    (0..=m)
        .rev()
        .map(|j| {
            let c = binomial(e, j) - if j == 0 { 0 } else { binomial(e, j - 1) };
            (e - 2 * j, c)
        })
        .collect()
}

fn binomial(n: u32, k: u32) -> i64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// `λ(p^j)` for `j = 0..=e`, read from storage where available and extended
/// by the Hecke recursion otherwise.
fn prime_power_lambdas(f: &Eigenform, p: u64, e: u32) -> Result<Vec<f64>> {
    let lp = f.try_lambda(p)?;
    let chi = f.principal_character(p);
    let mut out = vec![1.0, lp];
    let mut pk = p;
    for k in 2..=e as usize {
        pk = pk.saturating_mul(p);
        let next = if pk as usize <= f.n_max() {
            f.lambda(pk)
        } else {
            lp * out[k - 1] - chi * out[k - 2]
        };
        out.push(next);
    }
    out.truncate(e as usize + 1);
    Ok(out)
}

/// Evaluates the expansion of `λ(p)^e` as a combination of `λ(p^j)` with
/// `j ≡ e (mod 2)`.
pub fn power_expansion(f: &Eigenform, p: u64, e: u32) -> Result<f64> {
    if !arith::is_prime(p) {
        return Err(Error::domain(format!("{p} is not prime")));
    }
    if f.principal_character(p) == 0.0 {
        return Err(Error::domain(format!("p = {p} divides the level {}", f.level())));
    }
    let powers = prime_power_lambdas(f, p, e)?;
    Ok(expansion_terms(e).iter().map(|&(j, c)| c as f64 * powers[j as usize]).sum())
}

/// Power sums `u_l = α_p^l + β_p^l` of the Satake parameters at `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimeFrame {
    pub p: u64,
    pub values: Vec<f64>,
}

impl PrimeFrame {
    pub fn get(&self, l: usize) -> f64 {
        self.values[l]
    }
}

/// `u_0 = 2`, `u_1 = λ(p)`, `u_l = λ(p)u_{l−1} − χ_0(p)u_{l−2}`.
///
/// At `p | N` one parameter vanishes and the recursion gives `u_l = λ(p)^l`.
pub fn prime_frame(f: &Eigenform, p: u64, max_l: usize) -> Result<PrimeFrame> {
    let lp = f.try_lambda(p)?;
    let chi = f.principal_character(p);
    let mut values = Vec::with_capacity(max_l + 1);
    values.push(2.0);
    if max_l >= 1 {
        values.push(lp);
    }
    for l in 2..=max_l {
        let u = lp * values[l - 1] - chi * values[l - 2];
        values.push(u);
    }
    Ok(PrimeFrame { p, values })
}

/// Raw value of `i^κ μ(N) λ(N) √N` (1 at level 1 up to the sign `i^κ`).
pub fn root_number_raw(f: &Eigenform) -> Result<f64> {
    let ik = if f.weight % 4 == 0 { 1.0 } else { -1.0 };
    if f.level == 1 {
        return Ok(ik);
    }
    let n = f.level;
    let mu = arith::mobius(n) as f64;
    Ok(ik * mu * f.try_lambda(n)? * (n as f64).sqrt())
}

/// Root number `ε_f = i^κ μ(N) λ_f(N) N^{1/2}`, snapped to `±1`.
///
/// ```
/// let f = lmoment::forms::builtin_form("level11_weight2", 20).unwrap();
/// assert_eq!(lmoment::forms::root_number(&f).unwrap(), 1.0);
/// ```
pub fn root_number(f: &Eigenform) -> Result<f64> {
    let raw = root_number_raw(f)?;
    let sign = if raw >= 0.0 { 1.0 } else { -1.0 };
    if (raw - sign).abs() > ROOT_NUMBER_TOL {
        return Err(Error::Data(format!(
            "root number of {} evaluates to {raw}, not ±1",
            f.id
        )));
    }
    Ok(sign)
}

/// Checks `λ(1) = 1`, the Deligne bound, the Hecke relations and
/// `|λ(N)| = N^{−1/2}` on the first [`VALIDATION_LIMIT`] coefficients.
pub fn validate(f: &Eigenform) -> Result<()> {
    let limit = f.n_max().min(VALIDATION_LIMIT);
    let violation = |invariant: &'static str, n: usize, msg: String| Error::Invariant { invariant, n: n as u64, msg };
    if (f.coeffs[0] - 1.0).abs() > IDENTITY_TOL {
        return Err(violation("lambda(1) = 1", 1, format!("λ(1) = {}", f.coeffs[0])));
    }
    let table = FactorTable::new(limit);
    let d = arith::divisor_counts(limit);
    for n in 2..=limit {
        let l = f.coeffs[n - 1];
        if !l.is_finite() {
            return Err(violation("finite", n, format!("λ({n}) = {l}")));
        }
        if l.abs() > d[n] as f64 + IDENTITY_TOL {
            return Err(violation("deligne", n, format!("|λ({n})| = {} > d({n}) = {}", l.abs(), d[n])));
        }
        let p = table.smallest_prime_factor(n as u64) as usize;
        let mut pe = p;
        while n % (pe * p) == 0 {
            pe *= p;
        }
        let expected = if pe < n {
            f.coeffs[pe - 1] * f.coeffs[n / pe - 1]
        } else if pe == p {
            continue;
        } else {
            let chi = f.principal_character(p as u64);
            let prev2 = if n / (p * p) >= 1 { f.coeffs[n / (p * p) - 1] } else { 0.0 };
            f.coeffs[p - 1] * f.coeffs[n / p - 1] - chi * prev2
        };
        if (l - expected).abs() > IDENTITY_TOL {
            return Err(violation("hecke", n, format!("λ({n}) = {l}, Hecke relations give {expected}")));
        }
    }
    if f.level > 1 && f.level as usize <= limit {
        let n = f.level as usize;
        let l = f.coeffs[n - 1];
        let target = 1.0 / (n as f64).sqrt();
        if (l.abs() - target).abs() > IDENTITY_TOL {
            return Err(violation("|lambda(N)| = N^(-1/2)", n, format!("|λ({n})| = {}, expected {target}", l.abs())));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forms(n_max: usize) -> Vec<Eigenform> {
        BuiltinForm::ALL.iter().map(|b| b.generate(n_max).unwrap()).collect()
    }

    #[test]
    fn spec_examples() {
        let d = builtin_form("delta12", 5).unwrap();
        assert_eq!(d.lambda(1), 1.0);
        assert!((d.lambda(2) + 0.530330).abs() < 1e-6);
        let e = builtin_form("level11_weight2", 20).unwrap();
        assert!((e.lambda(2) + std::f64::consts::SQRT_2).abs() < 1e-6);
        assert!(builtin_form("level2_weight8", 5).is_err());
    }

    #[test]
    fn builtins_validate() {
        for f in forms(2000) {
            validate(&f).unwrap_or_else(|e| panic!("{}: {e}", f.id()));
        }
    }

    #[test]
    fn level1_matches_full_convolution() {
        for w in [16u32, 18, 20, 22, 26] {
            let n = 300;
            let conv = qexp::DeltaEisenstein::new(w, n);
            let fast = level1_coefficients(w, n);
            for i in 1..=n {
                assert_eq!(conv.coefficient(i), fast[i - 1], "weight {w}, n = {i}");
            }
        }
    }

    #[test]
    fn root_numbers() {
        let signs: Vec<f64> = forms(20).iter().map(|f| f.root_number()).collect();
        assert_eq!(signs, vec![1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0]);
        let mut c = vec![0.0; 13];
        c[0] = 1.0;
        c[12] = -1.0 / 13f64.sqrt();
        let f = Eigenform::unchecked("s", 13, 6, c, 0.0);
        assert_eq!(root_number(&f).unwrap(), -1.0);
    }

    #[test]
    fn hecke_product_examples() {
        let f = builtin_form("delta12", 50).unwrap();
        assert!((hecke_product(&f, 2, 3).unwrap() - f.lambda(6)).abs() < 1e-15);
        assert!((hecke_product(&f, 4, 2).unwrap() - (f.lambda(8) + f.lambda(2))).abs() < 1e-15);
        assert!((hecke_product(&f, 3, 3).unwrap() - f.lambda(3).powi(2)).abs() < 1e-12);
        assert!(hecke_product(&f, 10, 10).is_err());
    }

    #[test]
    fn expansion_shape() {
        assert_eq!(expansion_terms(1), vec![(1, 1)]);
        assert_eq!(expansion_terms(4), vec![(0, 2), (2, 3), (4, 1)]);
        assert_eq!(expansion_terms(5), vec![(1, 5), (3, 4), (5, 1)]);
        for e in 0..12 {
            assert!(expansion_terms(e).iter().all(|&(j, _)| j % 2 == e % 2));
        }
    }

    #[test]
    fn power_expansion_matches_power() {
        let f = builtin_form("delta12", 10).unwrap();
        let v = power_expansion(&f, 2, 4).unwrap();
        assert!((v - f.lambda(2).powi(4)).abs() < 1e-9);
        let g = builtin_form("level11_weight2", 20).unwrap();
        assert!(power_expansion(&g, 11, 2).is_err());
    }

    #[test]
    fn prime_frame_basics() {
        let f = builtin_form("delta12", 10).unwrap();
        let fr = prime_frame(&f, 2, 4).unwrap();
        assert_eq!(fr.get(0), 2.0);
        assert_eq!(fr.get(1), f.lambda(2));
        assert!((fr.get(2) - (f.lambda(4) - 1.0)).abs() < 1e-12);
        let g = builtin_form("level11_weight2", 20).unwrap();
        let fr = prime_frame(&g, 11, 3).unwrap();
        assert!((fr.get(3) - g.lambda(11).powi(3)).abs() < 1e-15);
    }
}
