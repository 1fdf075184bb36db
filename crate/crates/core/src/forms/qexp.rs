//! Exact q-expansions of the built-in eigenforms.
//!
//! * `Δ = q ∏(1 − qⁿ)^24`, computed as `q (∏(1 − qⁿ)³)^8` from the sparse
//!   Jacobi series of the cube, in `i128`.
//! * `Δ · E_{κ−12}` for the other one-dimensional level-1 spaces. The
//!   coefficients outgrow `i128`, so the convolution runs modulo several
//!   word-sized primes and the integers are rebuilt by CRT.
//! * `(η(z) η(11z))²`, the weight-2 newform of level 11, in `i64`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

/// Coefficients `Σ_{k ∈ Z} (−1)^k q^{k(3k−1)/2}` of `∏(1 − qⁿ)` below `len`,
/// as sparse `(exponent, coefficient)` pairs.
pub fn euler_product_sparse(len: usize) -> Vec<(usize, i64)> {
    let mut out = vec![(0usize, 1i64)];
    for k in 1i64.. {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let a = (k * (3 * k - 1) / 2) as usize;
        let b = (k * (3 * k + 1) / 2) as usize;
        if a >= len {
            break;
        }
        out.push((a, sign));
        if b < len {
            out.push((b, sign));
        }
    }
    out.sort_unstable();
    out
}

/// Jacobi's identity `∏(1 − qⁿ)³ = Σ_{k≥0} (−1)^k (2k+1) q^{k(k+1)/2}`.
fn euler_cube_sparse(len: usize) -> Vec<(usize, i128)> {
    (0u64..)
        .map(|k| ((k * (k + 1) / 2) as usize, if k % 2 == 0 { 2 * k as i128 + 1 } else { -(2 * k as i128 + 1) }))
        .take_while(|&(e, _)| e < len)
        .collect()
}

/// Ramanujan's `τ(n)` for `1 <= n <= n_max`; index 0 holds `τ(1)`.
pub fn ramanujan_tau(n_max: usize) -> Vec<i128> {
    let len = n_max;
    let cube = euler_cube_sparse(len);
    let mut acc = vec![0i128; len];
    for &(e, c) in &cube {
        acc[e] = c;
    }
    for _ in 1..8 {
        let mut next = vec![0i128; len];
        for (i, slot) in next.iter_mut().enumerate() {
            let mut s = 0i128;
            for &(e, c) in &cube {
                if e > i {
                    break;
                }
                s += c * acc[i - e];
            }
            *slot = s;
        }
        acc = next;
    }
    acc
}

/// Coefficients `a(1..=n_max)` of `(η(z) η(11z))²`; index 0 holds `a(1)`.
pub fn level11_weight2(n_max: usize) -> Vec<i64> {
    let len = n_max;
    let p = euler_product_sparse(len);
    // ∏(1 − qⁿ)² as a dense series
    let mut p2 = vec![0i64; len];
    for &(e1, c1) in &p {
        for &(e2, c2) in &p {
            if e1 + e2 >= len {
                break;
            }
            p2[e1 + e2] += c1 * c2;
        }
    }
    // multiply by ∏(1 − q^{11n})², the same series dilated by 11
    let mut out = vec![0i64; len];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut s = 0i64;
        let mut j = 0;
        while 11 * j <= i {
            let c = p2[j];
            if c != 0 {
                s += c * p2[i - 11 * j];
            }
            j += 1;
        }
        *slot = s;
    }
    out
}

/// Exact Bernoulli number `B_n = num/den` (with `B_1 = −1/2`).
pub fn bernoulli(n: usize) -> (i128, i128) {
    let mut b: Vec<(i128, i128)> = Vec::with_capacity(n + 1);
    b.push((1, 1));
    for m in 1..=n {
        // Σ_{j=0}^{m} C(m+1, j) B_j = 0
        let mut num = 0i128;
        let mut den = 1i128;
        let mut binom = 1i128;
        for (j, &(bn, bd)) in b.iter().enumerate() {
            let (tn, td) = (binom * bn, bd);
            let g = den.lcm(&td);
            num = num * (g / den) + tn * (g / td);
            den = g;
            let r = num.gcd(&den);
            num /= r;
            den /= r;
            binom = binom * (m as i128 + 1 - j as i128) / (j as i128 + 1);
        }
        // binom is now C(m+1, m)
        let (mut bn, mut bd) = (-num, den * binom);
        if bd < 0 {
            bn = -bn;
            bd = -bd;
        }
        let r = bn.gcd(&bd).max(1);
        b.push((bn / r, bd / r));
    }
    b[n]
}

/// Eisenstein normalization `E_k = 1 − (2k/B_k) Σ σ_{k−1}(n) qⁿ`; returns the
/// integer `−2k/B_k`.
pub fn eisenstein_constant(k: usize) -> i128 {
    let (num, den) = bernoulli(k);
    let top = -2 * k as i128 * den;
    assert!(top % num == 0, "−2k/B_k is not an integer for k = {k}");
    top / num
}

/// Word-sized primes used for the modular convolution.
pub(crate) const CRT_MODULI: [u64; 7] = [
    (1 << 61) - 1,
    (1 << 62) - 57,
    (1 << 60) - 93,
    (1 << 59) - 55,
    (1 << 58) - 27,
    (1 << 57) - 13,
    (1 << 56) - 5,
];

fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let mm = m as u128;
    let mut r = 1u128 % mm;
    let mut bb = b as u128 % mm;
    while e > 0 {
        if e & 1 == 1 {
            r = r * bb % mm;
        }
        bb = bb * bb % mm;
        e >>= 1;
    }
    r as u64
}

fn to_residue(x: i128, m: u64) -> u64 {
    x.rem_euclid(m as i128) as u64
}

struct Crt {
    moduli: Vec<u64>,
    basis: Vec<BigInt>,
    modulus: BigInt,
    half: BigInt,
}

impl Crt {
    fn new(moduli: &[u64]) -> Self {
        let modulus: BigInt = moduli.iter().map(|&m| BigInt::from(m)).product();
        let basis = moduli
            .iter()
            .map(|&m| {
                let big_m = BigInt::from(m);
                let rest = &modulus / &big_m;
                let r = (&rest % &big_m).to_u64().unwrap();
                // inverse of r modulo prime m
                let inv = pow_mod(r, m - 2, m);
                rest * BigInt::from(inv)
            })
            .collect();
        let half = &modulus >> 1;
        Crt { moduli: moduli.to_vec(), basis, modulus, half }
    }

    fn reconstruct(&self, residues: &[u64]) -> BigInt {
        let mut x = BigInt::zero();
        for (r, b) in residues.iter().zip(&self.basis) {
            x += b * BigInt::from(*r);
        }
        x = x.mod_floor(&self.modulus);
        if x > self.half {
            x - &self.modulus
        } else {
            x
        }
    }
}

/// Ratio `a(n) / n^{(κ−1)/2}` computed from an exact integer.
pub(crate) fn normalize_big(a: &BigInt, n: u64, weight: u32) -> f64 {
    let value = a.to_f64().expect("coefficient within f64 range");
    value / (n as f64).powf((weight as f64 - 1.0) / 2.0)
}

/// Exact coefficients of `Δ · E_k` at the requested indices (`k = weight − 12`),
/// using the modular convolution `a(n) = Σ_{j<n} e_j τ(n − j)`.
pub(crate) struct DeltaEisenstein {
    crt: Crt,
    eis_mod: Vec<Vec<u64>>,
    tau_mod: Vec<Vec<u64>>,
}

impl DeltaEisenstein {
    pub(crate) fn new(weight: u32, n_max: usize) -> Self {
        assert!(weight > 12 && weight % 2 == 0);
        let k = (weight - 12) as usize;
        let tau = ramanujan_tau(n_max);
        // |a(n)| <= d(n) n^{(κ−1)/2} <= 2 n^{κ/2}
        let bits = (weight as f64 / 2.0) * (n_max.max(2) as f64).log2() + 4.0;
        let count = ((bits / 55.0).ceil() as usize).clamp(1, CRT_MODULI.len());
        assert!(
            CRT_MODULI[..count].iter().map(|&m| (m as f64).log2()).sum::<f64>() > bits,
            "n_max too large for the CRT moduli"
        );
        let moduli = &CRT_MODULI[..count];
        let constant = eisenstein_constant(k);
        let eis_mod = moduli
            .iter()
            .map(|&m| {
                let mut sigma = vec![0u64; n_max];
                for d in 1..n_max {
                    let dp = pow_mod(d as u64, (k - 1) as u64, m);
                    let mut j = d;
                    while j < n_max {
                        sigma[j] = ((sigma[j] as u128 + dp as u128) % m as u128) as u64;
                        j += d;
                    }
                }
                let c = to_residue(constant, m) as u128;
                sigma[0] = 1;
                for s in sigma.iter_mut().skip(1) {
                    *s = (*s as u128 * c % m as u128) as u64;
                }
                sigma
            })
            .collect();
        let tau_mod = moduli.iter().map(|&m| tau.iter().map(|&t| to_residue(t, m)).collect()).collect();
        DeltaEisenstein { crt: Crt::new(moduli), eis_mod, tau_mod }
    }

    /// Exact `a(n)`, `1 <= n <= n_max`.
    pub(crate) fn coefficient(&self, n: usize) -> BigInt {
        let residues: Vec<u64> = self
            .crt
            .moduli
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let eis = &self.eis_mod[i];
                let tau = &self.tau_mod[i];
                let mm = m as u128;
                // a multiple of m² just below 2^127; subtracting it keeps acc < 2^128
                let big = (1u128 << 127) / (mm * mm) * (mm * mm);
                let mut acc = 0u128;
                // q·(Δ/q)·E: coefficient of q^n pairs e_j with τ(n − j)
                for j in 0..n {
                    acc += eis[j] as u128 * tau[n - 1 - j] as u128;
                    if acc >= big {
                        acc -= big;
                    }
                }
                (acc % mm) as u64
            })
            .collect();
        self.crt.reconstruct(&residues)
    }
}
