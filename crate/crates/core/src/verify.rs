//! Property suites over forms and the special functions, each reporting every
//! check with its margin.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith;
use crate::error::{Error, Result};
use crate::forms::{self, Eigenform};
use crate::lfun;
use crate::special;

pub const HECKE_TOL: f64 = 1e-9;
pub const FE_TOL: f64 = 1e-6;
pub const REAL_TOL: f64 = 1e-10;
pub const BESSEL_TOL: f64 = 1e-8;
pub const METHOD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Hecke,
    Deligne,
    Weil,
    Fe,
    Methods,
    Mertens,
    Bessel,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Hecke,
        Suite::Deligne,
        Suite::Weil,
        Suite::Fe,
        Suite::Methods,
        Suite::Mertens,
        Suite::Bessel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Hecke => "hecke",
            Suite::Deligne => "deligne",
            Suite::Weil => "weil",
            Suite::Fe => "fe",
            Suite::Methods => "methods",
            Suite::Mertens => "mertens",
            Suite::Bessel => "bessel",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown suite `{s}`; known: hecke, deligne, weil, fe, methods, mertens, bessel")))
    }
}

/// `value <= bound`, with `margin = bound − value`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub subject: String,
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
}

impl Check {
    pub fn new(subject: impl Into<String>, name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { subject: subject.into(), name: name.into(), value, bound, margin: bound - value }
    }

    pub fn passed(&self) -> bool {
        self.margin >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn min_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Knobs shared by the suites.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// Hecke relation checked for all `mn` up to this.
    pub hecke_mn: u64,
    pub deligne_limit: usize,
    pub weil_max_prime: u64,
    pub weil_random: usize,
    pub weil_max_modulus: u64,
    pub fe_grid: Vec<f64>,
    pub mertens_xs: Vec<f64>,
    /// Range `[2, x]` over which the constant of the `Σ log p/p` bound is fitted.
    pub mertens_fit: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            hecke_mn: 200,
            deligne_limit: 10_000,
            weil_max_prime: 101,
            weil_random: 200,
            weil_max_modulus: 10_000,
            fe_grid: (0..21).map(|i| -5.0 + 0.5 * i as f64).collect(),
            mertens_xs: vec![1e3, 1e4, 1e5, 1e6],
            mertens_fit: 1e4,
            seed: 0,
        }
    }
}

/// Runs one suite. Suites that do not look at forms ignore `forms`.
pub fn run_suite(suite: Suite, forms: &[Eigenform], cfg: &VerifyConfig) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Hecke => hecke(forms, cfg)?,
        Suite::Deligne => deligne(forms, cfg)?,
        Suite::Weil => weil(cfg)?,
        Suite::Fe => functional_equation(forms, cfg)?,
        Suite::Methods => methods(forms)?,
        Suite::Mertens => mertens(cfg)?,
        Suite::Bessel => bessel()?,
    };
    Ok(SuiteReport { suite, checks })
}

/// Largest `|λ(m)λ(n) − Σ_d λ(mn/d²)|` over `mn <= hecke_mn`, and for `p ∈ {2,3,5,7}`,
/// `e <= 5` the error of the power expansion.
fn hecke(forms: &[Eigenform], cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for f in forms {
        let lim = cfg.hecke_mn.min(f.n_max() as u64);
        let mut worst: f64 = 0.0;
        for m in 1..=lim {
            for n in 1..=lim / m {
                let err = (f.lambda(m) * f.lambda(n) - forms::hecke_product(f, m, n)?).abs();
                worst = worst.max(err);
            }
        }
        out.push(Check::new(f.id(), "multiplicativity", worst, HECKE_TOL));
        let mut worst: f64 = 0.0;
        for p in [2u64, 3, 5, 7] {
            if f.principal_character(p) == 0.0 {
                continue;
            }
            for e in 1..=5 {
                let err = (f.lambda(p).powi(e as i32) - forms::power_expansion(f, p, e)?).abs();
                worst = worst.max(err);
            }
        }
        out.push(Check::new(f.id(), "power expansion", worst, HECKE_TOL));
    }
    Ok(out)
}

/// `max_n (|λ(n)| − d(n))` and `max |u_l|` over `p <= 100`, `p ∤ N`, `l <= 20`.
fn deligne(forms: &[Eigenform], cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for f in forms {
        let lim = cfg.deligne_limit.min(f.n_max());
        let d = arith::divisor_counts(lim);
        let excess = (1..=lim).map(|n| f.lambda(n as u64).abs() - d[n] as f64).fold(f64::NEG_INFINITY, f64::max);
        out.push(Check::new(f.id(), "|λ(n)| − d(n)", excess, 0.0));
        let mut worst: f64 = 0.0;
        for p in arith::primes_up_to(100.min(f.n_max() as u64))?.iter() {
            if f.principal_character(p) == 0.0 {
                continue;
            }
            let frame = forms::prime_frame(f, p, 20)?;
            worst = frame.values[1..].iter().fold(worst, |w, u| w.max(u.abs()));
        }
        out.push(Check::new(f.id(), "|u_l|", worst, 2.0 + HECKE_TOL));
    }
    Ok(out)
}

/// Realness and `(m, n)` symmetry on seeded random triples, and the Weil bound
/// `|S(m, n; p)| <= 2√p` at every prime `p <= weil_max_prime`.
fn weil(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut imag: f64 = 0.0;
    let mut asym: f64 = 0.0;
    for _ in 0..cfg.weil_random {
        let c = rng.gen_range(1..=cfg.weil_max_modulus);
        let m = rng.gen_range(-(c as i64)..=c as i64 * 3);
        let n = rng.gen_range(-(c as i64)..=c as i64 * 3);
        let a = special::kloosterman_value(m, n, c)?;
        let b = special::kloosterman_value(n, m, c)?;
        imag = imag.max(a.imag_residual.abs()).max(b.imag_residual.abs());
        asym = asym.max((a.value - b.value).abs());
    }
    let mut out = vec![
        Check::new("S(m,n;c)", "imaginary part", imag, REAL_TOL),
        Check::new("S(m,n;c)", "asymmetry", asym, REAL_TOL),
    ];
    for p in arith::primes_up_to(cfg.weil_max_prime)?.iter() {
        let mut worst: f64 = 0.0;
        for m in 0..p as i64 {
            for n in 0..p as i64 {
                if m == 0 && n == 0 {
                    continue;
                }
                worst = worst.max(special::kloosterman(m, n, p)?.abs());
            }
        }
        out.push(Check::new(format!("p = {p}"), "Weil bound", worst, 2.0 * (p as f64).sqrt() + REAL_TOL));
    }
    Ok(out)
}

/// `|Λ(½+it) − ε Λ(½−it)| / (1 + |Λ|)` on the grid, and `|ε_raw − ε|`.
fn functional_equation(forms: &[Eigenform], cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for f in forms {
        let raw = forms::root_number_raw(f)?;
        out.push(Check::new(f.id(), "root number", (raw - f.root_number()).abs(), FE_TOL));
        let mut worst: f64 = 0.0;
        for &t in &cfg.fe_grid {
            let (res, left) = lfun::functional_equation_residual(f, Complex64::new(0.5, t))?;
            worst = worst.max(res / (1.0 + left.lambda_value.norm()));
        }
        out.push(Check::new(f.id(), "functional equation", worst, FE_TOL));
    }
    Ok(out)
}

/// Euler product against the Dirichlet series at `s = 2`, and the AFE against
/// the Dirichlet series on `σ = 2`.
fn methods(forms: &[Eigenform]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for f in forms {
        let s = Complex64::new(2.0, 0.0);
        let n = f.n_max();
        let dir = lfun::dirichlet_partial(f, s, n)?.value;
        let euler = lfun::euler_product_log(f, s, n as u64)?.exp();
        out.push(Check::new(f.id(), "euler vs dirichlet", (euler - dir).norm(), METHOD_TOL));
        let mut worst: f64 = 0.0;
        for t in [0.0, 1.0, -2.5] {
            let s = Complex64::new(2.0, t);
            let afe = lfun::afe_value(f, s, &lfun::AfeConfig::default())?.value;
            worst = worst.max((afe - lfun::dirichlet_partial(f, s, n)?.value).norm());
        }
        out.push(Check::new(f.id(), "afe vs dirichlet", worst, METHOD_TOL));
    }
    Ok(out)
}

/// `|Σ 1/p − log log x − b| <= 5/log x` at each `x`, and
/// `sup_{2<=y<=x} |Σ log p/p − log y| <= C` with `C` fitted on `[2, mertens_fit]`
/// and widened by 10%.
fn mertens(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let (b, _) = arith::mertens_constant_estimate(10_000_000)?;
    let fit = 1.1 * arith::logp_deviation_sup(2.0, cfg.mertens_fit)?;
    let sums = arith::mertens_sums_many(&cfg.mertens_xs, arith::Summation::Compensated)?;
    let mut out = Vec::new();
    for s in &sums {
        let lx = s.x.ln();
        out.push(Check::new(format!("x = {}", s.x), "reciprocal sum", (s.recip_sum - lx.ln() - b).abs(), 5.0 / lx));
        out.push(Check::new(format!("x = {}", s.x), "log p / p sum", arith::logp_deviation_sup(2.0, s.x)?, fit));
    }
    Ok(out)
}

/// Power series against Miller recurrence for orders `<= 30` and `x <= 10`.
fn bessel() -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for order in 0..=30u32 {
        for i in 1..=100 {
            let x = 0.1 * i as f64;
            let (series, _) = special::bessel_j_series(order, x);
            worst = worst.max((series - special::bessel_j_recurrence(order, x)).abs());
        }
    }
    Ok(vec![Check::new("J_ν(x)", "series vs recurrence", worst, BESSEL_TOL)])
}
