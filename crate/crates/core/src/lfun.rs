//! Evaluation of `L(s, f) = Σ λ_f(n) n^{−s}`.
//!
//! For `σ > 1` the Dirichlet series and the Euler product converge and are
//! summed directly. Everywhere else (in particular on the critical line) the
//! value comes from the smoothed approximate functional equation
//!
//! ```text
//! L(s) = Σ λ(n) n^{−s} V_s(n) + ε γ(1−s)/γ(s) Σ λ(n) n^{−(1−s)} V_{1−s}(n),
//! V_s(y) = (1/2πi) ∫_(c) γ(s+w)/γ(s) · y^{−w} · G(w) dw/w,
//! ```
//!
//! with `γ(s) = (√N/2π)^s Γ(s + (κ−1)/2)` and the Gaussian cutoff
//! `G(w) = exp(w²/B²)`. The contour integral is a trapezoid sum on a
//! vertical line, which converges geometrically for this entire integrand.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::arith::{Accumulator, Summation};
use crate::error::{Error, Result};
use crate::forms::{self, Eigenform};
use crate::special::log_gamma;

/// Largest `|t|` accepted by [`central_value`].
pub const MAX_HEIGHT: f64 = 1.0e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dirichlet,
    Euler,
    Afe,
}

/// A value of `L(s, f)` with an estimate of its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LValue {
    pub s: Complex64,
    pub value: Complex64,
    pub method: Method,
    pub trunc_error: f64,
    /// Number of Dirichlet coefficients used (per side for the AFE).
    pub terms: usize,
}

/// `Λ(s, f) = γ(s) L(s, f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletedValue {
    pub s: Complex64,
    pub lambda_value: Complex64,
    pub l_value: LValue,
}

/// Knobs of the approximate functional equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfeConfig {
    /// Width `B` of the cutoff `G(w) = exp(w²/B²)`.
    pub cutoff_width: f64,
    /// Trapezoid step on the contour.
    pub step: f64,
    /// Absolute target for the Dirichlet-tail bound.
    pub tail_target: f64,
    pub summation: Summation,
}

impl Default for AfeConfig {
    fn default() -> Self {
        AfeConfig { cutoff_width: 3.0, step: 0.1, tail_target: 1e-15, summation: Summation::Naive }
    }
}

impl AfeConfig {
    /// A second admissible cutoff, used for independent cross-checks.
    pub fn alternative() -> Self {
        AfeConfig { cutoff_width: 4.0, ..AfeConfig::default() }
    }

    fn check(&self) -> Result<()> {
        if !(self.cutoff_width > 0.0 && self.step > 0.0 && self.step <= 0.5 && self.tail_target > 0.0) {
            return Err(Error::domain(format!("invalid AFE configuration {self:?}")));
        }
        Ok(())
    }
}

/// `log γ(s) = s log(√N/2π) + log Γ(s + (κ−1)/2)`.
pub fn log_gamma_factor(f: &Eigenform, s: Complex64) -> Result<Complex64> {
    let conductor = (f.level() as f64).sqrt() / (2.0 * PI);
    let shift = (f.weight() as f64 - 1.0) / 2.0;
    Ok(s * conductor.ln() + log_gamma(s + shift)?)
}

/// Coefficients needed by [`central_value`] at height `t`: `⌈50 √N (1 + |t|)⌉`.
pub fn required_n_max(level: u64, t: f64) -> usize {
    (50.0 * (level as f64).sqrt() * (1.0 + t.abs())).ceil() as usize
}

/// `Σ_{n > m} d(n) n^{−a}` bounded through `Σ_{n <= x} d(n) <= x log x + x`.
fn divisor_tail(m: f64, a: f64) -> f64 {
    let m = m.max(1.0);
    let b = a - 1.0;
    let p = m.powf(-b);
    a * (p * m.ln() / b + p / (b * b) + p / b)
}

fn complex_sum(mode: Summation) -> (Accumulator, Accumulator) {
    (Accumulator::new(mode), Accumulator::new(mode))
}

/// Partial Dirichlet series `Σ_{n <= n_max} λ(n) n^{−s}` for `σ > 1`.
///
/// ```
/// use num_complex::Complex64;
/// let f = lmoment::forms::builtin_form("delta12", 1).unwrap();
/// let v = lmoment::lfun::dirichlet_partial(&f, Complex64::new(2.0, 0.0), 1).unwrap();
/// assert_eq!(v.value, Complex64::new(1.0, 0.0));
/// ```
pub fn dirichlet_partial(f: &Eigenform, s: Complex64, n_max: usize) -> Result<LValue> {
    if s.re <= 1.0 {
        return Err(Error::domain(format!("Dirichlet series needs Re s > 1, got {}", s.re)));
    }
    if n_max < 1 || n_max > f.n_max() {
        return Err(Error::range(format!("n_max = {n_max} outside 1..={}", f.n_max())));
    }
    let (mut re, mut im) = complex_sum(Summation::Compensated);
    let mut abs = 0.0;
    for (i, &l) in f.coeffs()[..n_max].iter().enumerate() {
        let n = (i + 1) as f64;
        let term = l * (-s * n.ln()).exp();
        re.add(term.re);
        im.add(term.im);
        abs += term.norm();
    }
    Ok(LValue {
        s,
        value: Complex64::new(re.value(), im.value()),
        method: Method::Dirichlet,
        trunc_error: divisor_tail(n_max as f64, s.re) + 4.0 * f64::EPSILON * abs,
        terms: n_max,
    })
}

/// `log L_{p <= p_max}(s) = Σ_p Σ_{l >= 1} u_l / (l p^{ls})`, with `u_l` the
/// Satake power sums of [`forms::prime_frame`].
pub fn euler_product_log(f: &Eigenform, s: Complex64, p_max: u64) -> Result<Complex64> {
    if s.re <= 1.0 {
        return Err(Error::domain(format!("Euler product needs Re s > 1, got {}", s.re)));
    }
    if p_max < 2 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if p_max as usize > f.n_max() {
        return Err(Error::range(format!("p_max = {p_max} exceeds n_max = {}", f.n_max())));
    }
    let primes = crate::arith::primes_up_to(p_max)?;
    let (mut re, mut im) = complex_sum(Summation::Compensated);
    for p in primes.iter() {
        let x = (-s * (p as f64).ln()).exp();
        // |u_l| <= 2, so stop once 2|x|^l / l is negligible
        let max_l = ((-40.0) / x.norm().log2()).ceil().max(1.0) as usize;
        let frame = forms::prime_frame(f, p, max_l)?;
        let mut xl = x;
        for l in 1..=max_l {
            let term = xl * (frame.get(l) / l as f64);
            re.add(term.re);
            im.add(term.im);
            xl *= x;
        }
    }
    Ok(Complex64::new(re.value(), im.value()))
}

/// Sampled smoothing kernel `g(y) = γ(s+w)/γ(s) · G(w)/w` on `w = c + iy`.
struct Kernel {
    c: f64,
    step: f64,
    /// `(k, g(kh))` for `k` in a symmetric range.
    nodes: Vec<(i64, Complex64)>,
}

impl Kernel {
    fn new(f: &Eigenform, s: Complex64, c: f64, cfg: &AfeConfig) -> Result<Self> {
        let base = log_gamma_factor(f, s)?;
        let b2 = cfg.cutoff_width * cfg.cutoff_width;
        let eval = |k: i64| -> Result<Complex64> {
            let w = Complex64::new(c, k as f64 * cfg.step);
            Ok((log_gamma_factor(f, s + w)? - base + w * w / b2).exp() / w)
        };
        let mut nodes = vec![(0, eval(0)?)];
        let mut peak = nodes[0].1.norm();
        let min_extent = (2.0 * cfg.cutoff_width / cfg.step).ceil() as i64;
        for dir in [1i64, -1] {
            let mut k = dir;
            loop {
                let g = eval(k)?;
                peak = peak.max(g.norm());
                nodes.push((k, g));
                if k.abs() > min_extent && g.norm() < 1e-24 * peak {
                    break;
                }
                if k.abs() > 100_000 {
                    return Err(Error::Accuracy("AFE kernel does not decay".into()));
                }
                k += dir;
            }
        }
        nodes.sort_by_key(|&(k, _)| k);
        Ok(Kernel { c, step: cfg.step, nodes })
    }

    /// `(1/2π) ∫ |g(y)| dy`, which bounds `|V(y)| y^{c}`.
    fn majorant(&self) -> f64 {
        self.step / (2.0 * PI) * self.nodes.iter().map(|(_, g)| g.norm()).sum::<f64>()
    }
}

/// One side `Σ_{n <= len} λ(n) n^{−s} V_s(n)` together with the difference
/// between the step-`h` and step-`2h` quadratures and `Σ |terms|`.
fn afe_side(f: &Eigenform, s: Complex64, kernel: &Kernel, len: usize, mode: Summation) -> (Complex64, f64, f64) {
    let (mut re, mut im) = complex_sum(mode);
    let (mut re2, mut im2) = complex_sum(mode);
    let mut abs = 0.0;
    let h = kernel.step;
    let k_min = kernel.nodes.first().map(|n| n.0).unwrap_or(0);
    for (i, &l) in f.coeffs()[..len].iter().enumerate() {
        if l == 0.0 {
            continue;
        }
        let ln = ((i + 1) as f64).ln();
        // n^{−iy} at y = k h, advanced by rotation from the first node
        let rot = Complex64::from_polar(1.0, -h * ln);
        let mut z = Complex64::from_polar(1.0, -(k_min as f64) * h * ln);
        let mut all = Complex64::new(0.0, 0.0);
        let mut even = Complex64::new(0.0, 0.0);
        for &(k, g) in &kernel.nodes {
            let v = g * z;
            all += v;
            if k % 2 == 0 {
                even += v;
            }
            z *= rot;
        }
        let scale = l * (-(s + kernel.c) * ln).exp() * (h / (2.0 * PI));
        let t1 = scale * all;
        let t2 = scale * even * 2.0;
        re.add(t1.re);
        im.add(t1.im);
        re2.add(t2.re);
        im2.add(t2.im);
        abs += t1.norm();
    }
    let v1 = Complex64::new(re.value(), im.value());
    let v2 = Complex64::new(re2.value(), im2.value());
    (v1, (v1 - v2).norm(), abs)
}

/// Smallest length `L <= cap` for which the tail bound of one AFE side drops
/// below `target`, and the bound at that length.
fn side_length(f: &Eigenform, s: Complex64, c: f64, factor: f64, cfg: &AfeConfig, cap: usize) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    let mut at_cap = f64::INFINITY;
    for j in 0..40 {
        let cp = c + 1.0 + j as f64;
        let a = s.re + cp;
        if a <= 1.05 {
            continue;
        }
        let m = factor * Kernel::new(f, s, cp, cfg)?.majorant();
        let bound = |len: usize| m * divisor_tail(len as f64, a);
        at_cap = at_cap.min(bound(cap));
        if bound(cap) > cfg.tail_target {
            continue;
        }
        let (mut lo, mut hi) = (0usize, cap);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if bound(mid) <= cfg.tail_target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if best.map_or(true, |(l, _)| hi < l) {
            best = Some((hi, bound(hi)));
        }
    }
    Ok(best.unwrap_or((cap, at_cap)))
}

/// `L(s, f)` from the approximate functional equation. Valid for every `s`
/// away from poles of the Γ-factor.
pub fn afe_value(f: &Eigenform, s: Complex64, cfg: &AfeConfig) -> Result<LValue> {
    cfg.check()?;
    let need = required_n_max(f.level(), s.im);
    if f.n_max() < need {
        return Err(Error::range(format!(
            "form {} stores {} coefficients; evaluating at t = {} needs n_max >= {need}",
            f.id(),
            f.n_max(),
            s.im
        )));
    }
    let eps = f.root_number();
    let dual = Complex64::new(1.0, 0.0) - s;
    let ratio = (log_gamma_factor(f, dual)? - log_gamma_factor(f, s)?).exp();
    let c1 = 1.5f64.max(1.5 - s.re);
    let c2 = 1.5f64.max(s.re + 0.5);

    let (len1, tail1) = side_length(f, s, c1, 1.0, cfg, f.n_max())?;
    let (len2, tail2) = side_length(f, dual, c2, ratio.norm(), cfg, f.n_max())?;
    let k1 = Kernel::new(f, s, c1, cfg)?;
    let k2 = Kernel::new(f, dual, c2, cfg)?;
    let (v1, q1, a1) = afe_side(f, s, &k1, len1, cfg.summation);
    let (v2, q2, a2) = afe_side(f, dual, &k2, len2, cfg.summation);

    let value = v1 + ratio * eps * v2;
    let nodes = k1.nodes.len().max(k2.nodes.len()) as f64;
    let rounding = f64::EPSILON * (nodes / 2.0 + 10.0) * (a1 + ratio.norm() * a2);
    Ok(LValue {
        s,
        value,
        method: Method::Afe,
        trunc_error: tail1 + tail2 + q1 + ratio.norm() * q2 + rounding,
        terms: len1.max(len2),
    })
}

/// `L(½ + it, f)` with the default cutoff.
pub fn central_value(f: &Eigenform, t: f64) -> Result<LValue> {
    central_value_with(f, t, &AfeConfig::default())
}

pub fn central_value_with(f: &Eigenform, t: f64, cfg: &AfeConfig) -> Result<LValue> {
    if !(t.abs() <= MAX_HEIGHT) {
        return Err(Error::domain(format!("|t| must be <= {MAX_HEIGHT}, got {t}")));
    }
    afe_value(f, Complex64::new(0.5, t), cfg)
}

/// `Λ(s, f)`, using the AFE with the default cutoff.
pub fn completed_lambda(f: &Eigenform, s: Complex64) -> Result<CompletedValue> {
    completed_lambda_with(f, s, &AfeConfig::default())
}

pub fn completed_lambda_with(f: &Eigenform, s: Complex64, cfg: &AfeConfig) -> Result<CompletedValue> {
    let l_value = afe_value(f, s, cfg)?;
    let gamma = log_gamma_factor(f, s)?.exp();
    Ok(CompletedValue { s, lambda_value: gamma * l_value.value, l_value })
}

/// `|Λ(s) − ε Λ(1 − s)|`, with the two sides evaluated under different
/// cutoffs so the check does not reduce to an algebraic identity of the AFE.
pub fn functional_equation_residual(f: &Eigenform, s: Complex64) -> Result<(f64, CompletedValue)> {
    let left = completed_lambda_with(f, s, &AfeConfig::default())?;
    let right = completed_lambda_with(f, Complex64::new(1.0, 0.0) - s, &AfeConfig::alternative())?;
    Ok(((left.lambda_value - f.root_number() * right.lambda_value).norm(), left))
}
