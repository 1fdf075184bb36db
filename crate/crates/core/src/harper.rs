//! Shifted-moment machinery: the weights `h(n)`, the GRH log-bounds, the
//! α ladder with its windowed prime polynomials `𝓜_{i,j}` and `P_m`, the
//! `S(j)` / `𝒫(m)` classification and the tail counts `𝒩(V)`.
//!
//! Every `O(1)` of the underlying inequalities is replaced by one explicit
//! constant `slack_C`, so each bound becomes a checkable statement with a
//! margin.

use std::f64::consts::E;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{self, PrimeTable};
use crate::error::{Error, Result};
use crate::forms::{self, Eigenform};
use crate::lfun::{self, AfeConfig};
use crate::special::truncated_exp;

/// Default stand-in for the unspecified `O(1)` terms.
pub const DEFAULT_SLACK_C: f64 = 5.0;

/// Smallest `N` accepted by [`HarperConfig`]; below it `log log N` is tiny
/// and the ladder degenerates.
pub const MIN_LEVEL: u64 = 100;

/// The unique positive root of `e^{−λ} = λ + λ²/2`.
pub fn lambda_0() -> f64 {
    let mut l: f64 = 0.5;
    for _ in 0..50 {
        let g = (-l).exp() - l - 0.5 * l * l;
        let dg = -(-l).exp() - 1.0 - l;
        l -= g / dg;
    }
    l
}

/// Exponents `a_j`, shifts `t_j` and the height exponent `A` with `|t_j| <= N^A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSpec {
    a: Vec<f64>,
    t: Vec<f64>,
    big_a: f64,
}

impl ShiftSpec {
    pub fn new(a: Vec<f64>, t: Vec<f64>, big_a: f64) -> Result<Self> {
        if a.is_empty() || a.len() != t.len() {
            return Err(Error::domain(format!(
                "need k >= 1 exponents and as many shifts, got {} and {}",
                a.len(),
                t.len()
            )));
        }
        if a.iter().any(|&x| !(x > 0.0) || !x.is_finite()) || t.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("exponents must be positive and shifts finite"));
        }
        if !(big_a > 0.0) {
            return Err(Error::domain(format!("A must be positive, got {big_a}")));
        }
        Ok(ShiftSpec { a, t, big_a })
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn big_a(&self) -> f64 {
        self.big_a
    }

    /// `a = a_1 + … + a_k`.
    pub fn a_total(&self) -> f64 {
        self.a.iter().sum()
    }

    /// Same shifts with every exponent multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        ShiftSpec::new(self.a.iter().map(|x| x * s).collect(), self.t.clone(), self.big_a)
    }

    /// Checks `|t_j| <= N^A`.
    pub fn check_heights(&self, level: u64) -> Result<()> {
        let cap = (level as f64).powf(self.big_a);
        match self.t.iter().find(|t| t.abs() > cap) {
            Some(t) => Err(Error::domain(format!("shift {t} exceeds N^A = {cap}"))),
            None => Ok(()),
        }
    }
}

/// `h(n) = ½ Σ_m a_m n^{−i t_m}`.
///
/// ```
/// use lmoment::harper::{h_weight, ShiftSpec};
/// let spec = ShiftSpec::new(vec![1.0, 1.0], vec![2.0, -2.0], 1.0).unwrap();
/// let h = h_weight(&spec, 7);
/// assert!((h.re - (2.0 * 7f64.ln()).cos()).abs() < 1e-15 && h.im.abs() < 1e-15);
/// ```
pub fn h_weight(spec: &ShiftSpec, n: u64) -> Complex64 {
    let ln = (n as f64).ln();
    let s: Complex64 = spec.a.iter().zip(&spec.t).map(|(&a, &t)| a * Complex64::from_polar(1.0, -t * ln)).sum();
    0.5 * s
}

/// `λ` and `slack_C` for the log-bounds, which apply at the form's own level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub lambda_smooth: f64,
    pub slack_c: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams { lambda_smooth: lambda_0(), slack_c: DEFAULT_SLACK_C }
    }
}

impl BoundParams {
    fn check(&self) -> Result<()> {
        if self.lambda_smooth < lambda_0() - 1e-12 {
            return Err(Error::domain(format!("λ = {} is below λ_0 = {}", self.lambda_smooth, lambda_0())));
        }
        Ok(())
    }
}

/// The α ladder for a family of level `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarperConfig {
    pub n: u64,
    pub t_cut: f64,
    /// `α_0, …, α_{𝓙}`.
    pub alphas: Vec<f64>,
    pub j_max: usize,
    pub lambda_smooth: f64,
    pub slack_c: f64,
}

impl HarperConfig {
    /// Ladder with cutoff `10^{−T}` and default `λ = λ_0`, `slack_C = 5`.
    ///
    /// `𝓙 = 1 + max{i >= 0 : α_i <= 10^{−T}}`, reading the maximum of an empty
    /// set as 0.
    ///
    /// ```
    /// let cfg = lmoment::harper::HarperConfig::new(1_000_000, 1.0).unwrap();
    /// assert_eq!(cfg.j_max, 1);
    /// assert!((cfg.alpha(0) - 0.05017).abs() < 1e-4);
    /// ```
    pub fn new(n: u64, t_cut: f64) -> Result<Self> {
        if n < MIN_LEVEL {
            return Err(Error::domain(format!("HarperConfig needs N >= {MIN_LEVEL}, got {n}")));
        }
        if !(t_cut > 0.0) || !t_cut.is_finite() {
            return Err(Error::domain(format!("T must be positive, got {t_cut}")));
        }
        let cut = 10f64.powf(-t_cut);
        let alpha = |i: usize| ladder(n, i);
        let mut last = None;
        let mut i = 0;
        while alpha(i) <= cut {
            last = Some(i);
            i += 1;
        }
        let j_max = 1 + last.unwrap_or(0);
        Ok(HarperConfig {
            n,
            t_cut,
            alphas: (0..=j_max).map(alpha).collect(),
            j_max,
            lambda_smooth: lambda_0(),
            slack_c: DEFAULT_SLACK_C,
        })
    }

    pub fn with_lambda(mut self, lambda_smooth: f64) -> Result<Self> {
        self.lambda_smooth = lambda_smooth;
        self.bounds().check()?;
        Ok(self)
    }

    pub fn with_slack(mut self, slack_c: f64) -> Self {
        self.slack_c = slack_c;
        self
    }

    pub fn bounds(&self) -> BoundParams {
        BoundParams { lambda_smooth: self.lambda_smooth, slack_c: self.slack_c }
    }

    /// `α_i` for any `i`, including indices past `𝓙`.
    pub fn alpha(&self, i: usize) -> f64 {
        ladder(self.n, i)
    }

    pub fn log_n(&self) -> f64 {
        (self.n as f64).ln()
    }

    /// `N^{α_i}`.
    pub fn window_edge(&self, i: usize) -> f64 {
        (self.alpha(i) * self.log_n()).exp()
    }

    /// Largest index of `P_m`: `⌊log log N / log 2⌋`.
    pub fn p_max_index(&self) -> u32 {
        (self.log_n().ln() / 2f64.ln()).floor() as u32
    }

    /// Threshold `α_i^{−3/4}`.
    pub fn threshold(&self, i: usize) -> f64 {
        self.alpha(i).powf(-0.75)
    }

    /// Largest prime any `𝓜_{i,j}` or `P_m` touches, and the largest `p²`.
    pub fn coefficient_demand(&self) -> usize {
        let m = self.window_edge(self.j_max).floor() as usize;
        let p = 1usize << (self.p_max_index() + 1);
        m.max(p * p)
    }
}

fn ladder(n: u64, i: usize) -> f64 {
    let ln = (n as f64).ln();
    if i == 0 {
        2f64.ln() / ln
    } else {
        20f64.powi(i as i32 - 1) / (ln.ln() * ln.ln())
    }
}

/// `Σ 1/p` over `N^{α_j} < p <= N^{α_{j+1}}`; a range error when the window
/// reaches past the sieve cap.
pub fn window_mertens(cfg: &HarperConfig, j: usize) -> Result<f64> {
    arith::prime_reciprocal_window(cfg.window_edge(j), cfg.window_edge(j + 1))
}

fn primes_through(x: f64) -> Result<PrimeTable> {
    arith::primes_up_to((x.floor() as u64).max(2))
}

/// Right-hand side of the GRH bound for `log |L(σ+it, f)|`:
///
/// `ℜ Σ_{p^l <= x} u_l / (l p^{l(σ+it+λ/log x)}) · log(x/p^l)/log x
///   + (1+λ)(log √N + log(|t|+2)) + slack_C (λ/log x + 1)`.
pub fn log_l_bound(f: &Eigenform, sigma: f64, t: f64, x: f64, params: &BoundParams) -> Result<f64> {
    if !(x >= 2.0) {
        return Err(Error::domain(format!("x must be >= 2, got {x}")));
    }
    if !(sigma >= 0.5) {
        return Err(Error::domain(format!("σ must be >= 1/2, got {sigma}")));
    }
    params.check()?;
    let lam = params.lambda_smooth;
    let lx = x.ln();
    let s = Complex64::new(sigma + lam / lx, t);
    let mut sum = 0.0;
    for p in primes_through(x)?.iter().take_while(|&p| p as f64 <= x) {
        let lp = (p as f64).ln();
        let top = (lx / lp).floor() as usize;
        let frame = forms::prime_frame(f, p, top)?;
        for l in 1..=top {
            let pl = l as f64 * lp;
            if pl > lx {
                break;
            }
            let term = (-s * pl).exp() * (frame.get(l) / l as f64) * ((lx - pl) / lx);
            sum += term.re;
        }
    }
    let arch = (1.0 + lam) * (0.5 * (f.level() as f64).ln() + (t.abs() + 2.0).ln());
    Ok(sum + arch + params.slack_c * (lam / lx + 1.0))
}

/// Right-hand side of the GRH bound for `Σ_m a_m log |L(σ+it_m, f)|`:
///
/// `2ℜ Σ_{p<=x} h(p)λ(p)/p^{½+max(σ−½, 1/log x)} · log(x/p)/log x
///   − ℜ Σ_{p <= min(√x, log N)} h(p²)(λ(p²)−1)/p + (A+1) a log N / log x + slack_C`,
///
/// with `N` the level of `f`.
pub fn shifted_log_bound(f: &Eigenform, spec: &ShiftSpec, sigma: f64, x: f64, params: &BoundParams) -> Result<f64> {
    if !(x >= 4.0) {
        return Err(Error::domain(format!("x must be >= 4, got {x}")));
    }
    let lx = x.ln();
    if !(sigma >= 0.5 && sigma - 0.5 <= 2.0 / lx) {
        return Err(Error::domain(format!("need 0 <= σ − 1/2 <= 2/log x, got σ = {sigma}")));
    }
    spec.check_heights(f.level())?;
    params.check()?;
    let expo = 0.5 + (sigma - 0.5).max(1.0 / lx);
    let primes = primes_through(x)?;
    let mut first = 0.0;
    for p in primes.iter().take_while(|&p| p as f64 <= x) {
        let lp = (p as f64).ln();
        let term = h_weight(spec, p) * f.try_lambda(p)? * (-expo * lp).exp() * ((lx - lp) / lx);
        first += term.re;
    }
    let log_n = (f.level() as f64).ln();
    let cap = x.sqrt().min(log_n);
    let mut second = 0.0;
    for p in primes.iter().take_while(|&p| p as f64 <= cap) {
        let term = h_weight(spec, p * p) * (f.try_lambda(p * p)? - 1.0) / p as f64;
        second += term.re;
    }
    Ok(2.0 * first - second + (spec.big_a + 1.0) * spec.a_total() * log_n / lx + params.slack_c)
}

/// `𝓜_{i,j}(f) = Σ_{N^{α_{i−1}} < p <= N^{α_i}} 2h(p)λ(p)/p^{½+1/log N^{α_j}} · log(N^{α_j}/p)/log N^{α_j}`.
pub fn m_polynomial(f: &Eigenform, spec: &ShiftSpec, cfg: &HarperConfig, i: usize, j: usize) -> Result<Complex64> {
    if !(1 <= i && i <= j && j <= cfg.j_max) {
        return Err(Error::domain(format!("need 1 <= i <= j <= 𝓙 = {}, got i = {i}, j = {j}", cfg.j_max)));
    }
    let lo = cfg.window_edge(i - 1);
    let hi = cfg.window_edge(i);
    let lxj = cfg.alpha(j) * cfg.log_n();
    let table = primes_through(hi)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for &p in table.window(lo, hi) {
        let lp = (p as f64).ln();
        let w = (-(0.5 + 1.0 / lxj) * lp).exp() * ((lxj - lp) / lxj);
        sum += 2.0 * h_weight(spec, p) * f.try_lambda(p)? * w;
    }
    Ok(sum)
}

/// `P_m(f) = −Σ_{2^m < p <= 2^{m+1}} h(p²)(λ(p²)−1)/p`.
pub fn p_polynomial(f: &Eigenform, spec: &ShiftSpec, cfg: &HarperConfig, m: u32) -> Result<Complex64> {
    if m > cfg.p_max_index() {
        return Err(Error::domain(format!("m = {m} exceeds ⌊log log N / log 2⌋ = {}", cfg.p_max_index())));
    }
    let lo = 2f64.powi(m as i32);
    let table = primes_through(2.0 * lo)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for &p in table.window(lo, 2.0 * lo) {
        sum -= h_weight(spec, p * p) * (f.try_lambda(p * p)? - 1.0) / p as f64;
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BucketKind {
    S,
    P,
}

/// `S(j)` or `𝒫(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BucketLabel {
    pub kind: BucketKind,
    pub index: u32,
}

impl BucketLabel {
    pub fn s(j: usize) -> Self {
        BucketLabel { kind: BucketKind::S, index: j as u32 }
    }

    pub fn p(m: u32) -> Self {
        BucketLabel { kind: BucketKind::P, index: m }
    }
}

impl std::fmt::Display for BucketLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            BucketKind::S => write!(f, "S({})", self.index),
            BucketKind::P => write!(f, "P({})", self.index),
        }
    }
}

/// One comparison `|𝓜_{i,l}| <= α_i^{−3/4}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdCheck {
    pub i: usize,
    pub l: usize,
    pub value: Complex64,
    pub threshold: f64,
    /// `threshold − |value|`; negative when the check fails.
    pub margin: f64,
}

impl ThresholdCheck {
    pub fn passed(&self) -> bool {
        self.margin >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub s_bucket: BucketLabel,
    pub p_bucket: Option<BucketLabel>,
    /// Every `(i, l)` with `1 <= i <= l <= 𝓙`, row by row.
    pub checks: Vec<ThresholdCheck>,
    /// `P_0, …, P_{M}`.
    pub p_values: Vec<Complex64>,
}

/// Places `f` in exactly one `S(j)` and at most one `𝒫(m)`.
///
/// `S(j)` is read off the first ladder row `i` with a failing window: such an
/// `f` lies in `S(i−1)`. When every row passes, `f ∈ S(𝓙)`. The `𝒫` bucket is
/// the largest `m` with `|P_m| > 2^{−m/10}`.
pub fn classify(f: &Eigenform, spec: &ShiftSpec, cfg: &HarperConfig) -> Result<Classification> {
    let mut checks = Vec::new();
    let mut first_fail = None;
    for i in 1..=cfg.j_max {
        let threshold = cfg.threshold(i);
        for l in i..=cfg.j_max {
            let value = m_polynomial(f, spec, cfg, i, l)?;
            let c = ThresholdCheck { i, l, value, threshold, margin: threshold - value.norm() };
            if !c.passed() && first_fail.is_none() {
                first_fail = Some(i);
            }
            checks.push(c);
        }
    }
    let s_bucket = BucketLabel::s(first_fail.map_or(cfg.j_max, |i| i - 1));
    let p_values = (0..=cfg.p_max_index())
        .map(|m| p_polynomial(f, spec, cfg, m))
        .collect::<Result<Vec<_>>>()?;
    let p_bucket = p_values
        .iter()
        .enumerate()
        .rev()
        .find(|(m, v)| v.norm() > 2f64.powf(-(*m as f64) / 10.0))
        .map(|(m, _)| BucketLabel::p(m as u32));
    Ok(Classification { s_bucket, p_bucket, checks, p_values })
}

/// `|E_ℓ(z/2)|²`, the polynomial majorant of `exp(ℜz)`.
///
/// ```
/// use num_complex::Complex64;
/// let v = lmoment::harper::exp_majorant(Complex64::new(1.0, 0.0), 50.0).unwrap();
/// assert!((v - 1f64.exp()).abs() < 1e-14);
/// ```
pub fn exp_majorant(z: Complex64, ell: f64) -> Result<f64> {
    Ok(truncated_exp(ell, 0.5 * z)?.norm_sqr())
}

/// Bucket-restricted majorant of `Π |L(½+it_m, f)|^{a_m}` for `f ∈ S(j)`:
///
/// `exp(slack_C + (A+1)a/α_j + ℜ Σ_m P_m) · Π_{i<=j} |E_{ℓ_i}(½𝓜_{i,j})|²`,
/// with `ℓ_i = e² a α_i^{−3/4}`. Windows above their threshold (possible only
/// for `S(0)`, which is evaluated at `j = 1`) contribute `exp(ℜ𝓜_{i,j})`.
pub fn surrogate(f: &Eigenform, spec: &ShiftSpec, cfg: &HarperConfig, class: &Classification) -> Result<f64> {
    let j = (class.s_bucket.index as usize).max(1);
    let a = spec.a_total();
    let mut log_part = cfg.slack_c + (spec.big_a + 1.0) * a / cfg.alpha(j);
    log_part += class.p_values.iter().map(|p| p.re).sum::<f64>();
    let mut product = 1.0;
    for i in 1..=j {
        let m = m_polynomial(f, spec, cfg, i, j)?;
        if m.norm() <= cfg.threshold(i) {
            product *= exp_majorant(m, E * E * a * cfg.threshold(i))?;
        } else {
            log_part += m.re;
        }
    }
    Ok(log_part.exp() * product)
}

/// `log |L(σ+it, f)|` for every form, in family order.
pub fn log_abs_l(family: &[Eigenform], sigma: f64, t: f64) -> Result<Vec<f64>> {
    family
        .par_iter()
        .map(|f| {
            let v = lfun::afe_value(f, Complex64::new(sigma, t), &AfeConfig::default())?;
            Ok(v.value.norm().ln())
        })
        .collect()
}

/// `𝒩(V) = #{f : log |L(σ+it, f)| >= V}`.
pub fn tail_count(family: &[Eigenform], sigma: f64, t: f64, v: f64) -> Result<usize> {
    Ok(tail_counts(family, sigma, t, &[v])?[0])
}

/// `𝒩(V)` on a grid, evaluating each L-value once.
pub fn tail_counts(family: &[Eigenform], sigma: f64, t: f64, grid: &[f64]) -> Result<Vec<usize>> {
    let logs = log_abs_l(family, sigma, t)?;
    Ok(grid.iter().map(|&v| logs.iter().filter(|&&l| l >= v).count()).collect())
}

/// Outcome of one desk check of a GRH log-bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub form_id: String,
    pub bound: &'static str,
    pub t: Vec<f64>,
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; negative on a violation.
    pub margin: f64,
}

/// Compares `log |L(½+it, f)|` with [`log_l_bound`] at every `(t, x)`.
pub fn log_l_desk_check(f: &Eigenform, ts: &[f64], xs: &[f64], params: &BoundParams) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    for &t in ts {
        let lhs = lfun::central_value(f, t)?.value.norm().ln();
        for &x in xs {
            let rhs = log_l_bound(f, 0.5, t, x, params)?;
            out.push(BoundCheck { form_id: f.id().to_string(), bound: "single", t: vec![t], x, lhs, rhs, margin: rhs - lhs });
        }
    }
    Ok(out)
}

/// Compares `Σ a_m log |L(½+it_m, f)|` with [`shifted_log_bound`] at every `x`.
pub fn shifted_desk_check(f: &Eigenform, spec: &ShiftSpec, xs: &[f64], params: &BoundParams) -> Result<Vec<BoundCheck>> {
    let mut lhs = 0.0;
    for (&a, &t) in spec.a().iter().zip(spec.t()) {
        lhs += a * lfun::central_value(f, t)?.value.norm().ln();
    }
    xs.iter()
        .map(|&x| {
            let rhs = shifted_log_bound(f, spec, 0.5, x, params)?;
            Ok(BoundCheck { form_id: f.id().to_string(), bound: "shifted", t: spec.t().to_vec(), x, lhs, rhs, margin: rhs - lhs })
        })
        .collect()
}
