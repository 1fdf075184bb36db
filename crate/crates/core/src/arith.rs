//! Integer and prime infrastructure.
//!
//! Everything here is exact integer work apart from the Mertens-type prime
//! sums, which are accumulated in ascending prime order in double precision.

use num_integer::Integer;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Above this limit [`primes_up_to`] switches to a segmented sieve.
pub const SEGMENTED_THRESHOLD: u64 = 10_000_000;

/// Hard cap for sieving, keeps accidental huge requests from exhausting memory.
pub const SIEVE_CAP: u64 = 4_000_000_000;

const SEGMENT_LEN: usize = 1 << 18;

/// Ascending list of all primes up to `limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.primes.iter().copied()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.primes.binary_search(&n).is_ok()
    }

    /// Primes `p` with `lo < p <= hi`, as a subslice.
    pub fn window(&self, lo: f64, hi: f64) -> &[u64] {
        let start = self.primes.partition_point(|&p| (p as f64) <= lo);
        let end = self.primes.partition_point(|&p| (p as f64) <= hi);
        &self.primes[start..end.max(start)]
    }
}

/// Exact list of the primes `<= limit`.
pub fn primes_up_to(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::domain(format!("primes_up_to needs limit >= 2, got {limit}")));
    }
    if limit > SIEVE_CAP {
        return Err(Error::range(format!("sieve limit {limit} exceeds cap {SIEVE_CAP}")));
    }
    let primes = if limit <= SEGMENTED_THRESHOLD {
        simple_sieve(limit as usize)
    } else {
        segmented_sieve(limit)
    };
    Ok(PrimeTable { limit, primes })
}

fn simple_sieve(limit: usize) -> Vec<u64> {
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for n in 2..=limit {
        if composite[n] {
            continue;
        }
        primes.push(n as u64);
        let mut m = n * n;
        while m <= limit {
            composite[m] = true;
            m += n;
        }
    }
    primes
}

fn segmented_sieve(limit: u64) -> Vec<u64> {
    let root = (limit as f64).sqrt() as u64 + 1;
    let base = simple_sieve(root as usize);
    let mut primes: Vec<u64> = base.iter().copied().filter(|&p| p <= limit).collect();
    let mut seg = vec![false; SEGMENT_LEN];
    let mut lo = root + 1;
    while lo <= limit {
        let hi = (lo + SEGMENT_LEN as u64 - 1).min(limit);
        let len = (hi - lo + 1) as usize;
        seg[..len].iter_mut().for_each(|c| *c = false);
        for &p in &base {
            if p * p > hi {
                break;
            }
            let mut m = (lo.div_ceil(p) * p).max(p * p);
            while m <= hi {
                seg[(m - lo) as usize] = true;
                m += p;
            }
        }
        primes.extend((0..len).filter(|&i| !seg[i]).map(|i| lo + i as u64));
        lo = hi + 1;
    }
    primes
}

/// Smallest-prime-factor table for fast factorization of every `n <= limit`.
#[derive(Debug, Clone)]
pub struct FactorTable {
    spf: Vec<u32>,
}

impl FactorTable {
    pub fn new(limit: usize) -> Self {
        let mut spf = vec![0u32; limit + 1];
        for n in 2..=limit {
            if spf[n] == 0 {
                let mut m = n;
                while m <= limit {
                    if spf[m] == 0 {
                        spf[m] = n as u32;
                    }
                    m += n;
                }
            }
        }
        FactorTable { spf }
    }

    pub fn limit(&self) -> usize {
        self.spf.len() - 1
    }

    pub fn smallest_prime_factor(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && self.spf[n as usize] as u64 == n
    }

    /// Prime factorization as `(p, e)` pairs with ascending `p`.
    pub fn factorize(&self, mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        while n > 1 {
            let p = self.smallest_prime_factor(n);
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        out
    }
}

/// Trial-division factorization, used where no table is at hand.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n).first() == Some(&(n, 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplicativeKind {
    DivisorCount,
    EulerPhi,
    Mobius,
}

/// Exact value of `d(n)`, `φ(n)` or `μ(n)`.
pub fn multiplicative_fn(kind: MultiplicativeKind, n: i64) -> Result<i64> {
    if n < 1 {
        return Err(Error::domain(format!("multiplicative function needs n >= 1, got {n}")));
    }
    let fac = factorize(n as u64);
    Ok(match kind {
        MultiplicativeKind::DivisorCount => fac.iter().map(|&(_, e)| e as i64 + 1).product(),
        MultiplicativeKind::EulerPhi => fac
            .iter()
            .map(|&(p, e)| (p as i64 - 1) * (p as i64).pow(e - 1))
            .product(),
        MultiplicativeKind::Mobius => {
            if fac.iter().any(|&(_, e)| e > 1) {
                0
            } else if fac.len() % 2 == 0 {
                1
            } else {
                -1
            }
        }
    })
}

pub fn divisor_count(n: u64) -> u64 {
    factorize(n).iter().map(|&(_, e)| e as u64 + 1).product()
}

pub fn mobius(n: u64) -> i64 {
    multiplicative_fn(MultiplicativeKind::Mobius, n as i64).expect("n >= 1")
}

pub fn euler_phi(n: u64) -> u64 {
    multiplicative_fn(MultiplicativeKind::EulerPhi, n as i64).expect("n >= 1") as u64
}

/// `d(n)` for every `n <= limit`; index 0 is unused.
pub fn divisor_counts(limit: usize) -> Vec<u32> {
    let mut d = vec![0u32; limit + 1];
    for k in 1..=limit {
        let mut m = k;
        while m <= limit {
            d[m] += 1;
            m += k;
        }
    }
    d
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// How a long floating-point sum is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Summation {
    /// Plain left-to-right addition.
    #[default]
    Naive,
    /// Neumaier's compensated summation.
    Compensated,
}

/// Running sum honoring a [`Summation`] mode.
#[derive(Debug, Clone, Copy)]
pub struct Accumulator {
    mode: Summation,
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new(mode: Summation) -> Self {
        Accumulator { mode, sum: 0.0, comp: 0.0 }
    }

    pub fn add(&mut self, x: f64) {
        match self.mode {
            Summation::Naive => self.sum += x,
            Summation::Compensated => {
                let t = self.sum + x;
                if self.sum.abs() >= x.abs() {
                    self.comp += (self.sum - t) + x;
                } else {
                    self.comp += (x - t) + self.sum;
                }
                self.sum = t;
            }
        }
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `Σ 1/p` and `Σ (log p)/p` over the primes `p <= x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MertensSums {
    pub x: f64,
    pub recip_sum: f64,
    pub logp_sum: f64,
}

pub fn mertens_sums(x: f64) -> Result<MertensSums> {
    mertens_sums_with(x, Summation::Naive)
}

pub fn mertens_sums_with(x: f64, mode: Summation) -> Result<MertensSums> {
    if !(x >= 2.0) {
        return Err(Error::domain(format!("Mertens sums need x >= 2, got {x}")));
    }
    let table = primes_up_to(x.floor() as u64)?;
    Ok(mertens_from_primes(x, table.primes(), mode))
}

fn mertens_from_primes(x: f64, primes: &[u64], mode: Summation) -> MertensSums {
    let mut recip = Accumulator::new(mode);
    let mut logp = Accumulator::new(mode);
    for &p in primes.iter().take_while(|&&p| p as f64 <= x) {
        let pf = p as f64;
        recip.add(1.0 / pf);
        logp.add(pf.ln() / pf);
    }
    MertensSums { x, recip_sum: recip.value(), logp_sum: logp.value() }
}

/// Mertens sums at several points from a single sieve.
pub fn mertens_sums_many(xs: &[f64], mode: Summation) -> Result<Vec<MertensSums>> {
    let max = xs.iter().copied().fold(2.0, f64::max);
    if let Some(&bad) = xs.iter().find(|&&x| !(x >= 2.0)) {
        return Err(Error::domain(format!("Mertens sums need x >= 2, got {bad}")));
    }
    let table = primes_up_to(max.floor() as u64)?;
    Ok(xs.iter().map(|&x| mertens_from_primes(x, table.primes(), mode)).collect())
}

/// Estimate of the Mertens constant `b` from the product formula
/// `b = γ + Σ_p (log(1 − 1/p) + 1/p)`, truncated at `limit`.
///
/// The discarded tail is `−Σ_{p > limit} (1/(2p²) + 1/(3p³) + …)`, of size
/// about `1/(2 limit log limit)`; half of that is added back as a correction
/// and the other half returned as the error radius.
pub fn mertens_constant_estimate(limit: u64) -> Result<(f64, f64)> {
    let table = primes_up_to(limit)?;
    let mut acc = Accumulator::new(Summation::Compensated);
    acc.add(EULER_GAMMA);
    for p in table.iter() {
        let inv = 1.0 / p as f64;
        acc.add((-inv).ln_1p() + inv);
    }
    let l = limit as f64;
    let tail = 1.0 / (2.0 * l * l.ln());
    Ok((acc.value() - 0.5 * tail, 0.5 * tail))
}

/// Uniform supremum of `|Σ_{p<=x} (log p)/p − log x|` over `x ∈ [lo, hi]`.
///
/// Between consecutive primes the prime sum is constant while `log x` grows,
/// so the supremum is attained at a prime or just below the next one; both
/// sides are inspected for every gap, making this exact up to rounding.
pub fn logp_deviation_sup(lo: f64, hi: f64) -> Result<f64> {
    if !(lo >= 2.0) || hi < lo {
        return Err(Error::domain(format!("need 2 <= lo <= hi, got [{lo}, {hi}]")));
    }
    let table = primes_up_to(hi.floor() as u64 + 1)?;
    let primes = table.primes();
    let mut sum = 0.0;
    let mut sup: f64 = 0.0;
    let mut idx = 0;
    while idx < primes.len() && (primes[idx] as f64) <= lo {
        let p = primes[idx] as f64;
        sum += p.ln() / p;
        idx += 1;
    }
    // segment starting at lo
    let mut left = lo;
    loop {
        let right = if idx < primes.len() { (primes[idx] as f64).min(hi) } else { hi };
        sup = sup.max((sum - left.ln()).abs()).max((sum - right.ln()).abs());
        if idx >= primes.len() || primes[idx] as f64 > hi {
            break;
        }
        let p = primes[idx] as f64;
        sum += p.ln() / p;
        left = p;
        idx += 1;
    }
    Ok(sup)
}

/// `Σ 1/p` over primes in `(lo, hi]`, by sieving.
pub fn prime_reciprocal_window(lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo || hi < 2.0 {
        return Ok(0.0);
    }
    if hi > SIEVE_CAP as f64 {
        return Err(Error::range(format!(
            "prime window ({lo:.6e}, {hi:.6e}] needs primes beyond the sieve cap {SIEVE_CAP}"
        )));
    }
    let table = primes_up_to(hi.floor() as u64)?;
    let mut acc = Accumulator::new(Summation::Compensated);
    for &p in table.window(lo, hi) {
        acc.add(1.0 / p as f64);
    }
    Ok(acc.value())
}
