//! Bernoulli numbers: exact rationals, residues modulo `p` for every even
//! index below `p - 3`, generalized Bernoulli numbers of powers of the
//! Teichmüller character, and irregular pairs.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::ntt;
use crate::padic::{
    bigint_mod, check_prime, checked_prime_power, teichmuller_of, ExactRational, PadicError, ResidueInt,
};
use crate::primes::{inv_mod, mul_mod, pow_mod, primitive_root};

/// Default largest index served by [`bernoulli_exact`].
pub const DEFAULT_ORACLE_BOUND: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BernoulliError {
    #[error("B_{n} is above the oracle bound {bound}")]
    AboveBound { n: usize, bound: usize },
    #[error("B_(1, ω^0) is not defined for the conductor-p convention")]
    TrivialWeightOne,
    #[error("generalized Bernoulli number B_({n}, ω^{i}) mod {p} is not {p}-integral; convention bug")]
    NotIntegral { p: u64, i: u64, n: u32 },
    #[error(transparent)]
    Padic(#[from] PadicError),
}

/// Exact Bernoulli numbers `B_0..=B_bound` (with `B_1 = -1/2`) from
/// `sum_{j=0}^{n} C(n+1, j) B_j = 0`.
#[derive(Debug, Clone)]
pub struct BernoulliOracle {
    table: Vec<ExactRational>,
}

impl BernoulliOracle {
    pub fn new(bound: usize) -> Self {
        let mut table: Vec<ExactRational> = Vec::with_capacity(bound + 1);
        table.push(ExactRational::one());
        // binomial row C(n+1, .) kept as big integers
        let mut row: Vec<BigInt> = vec![BigInt::one(), BigInt::one()];
        for n in 1..=bound {
            let mut next = vec![BigInt::one(); n + 2];
            for j in 1..=n {
                next[j] = &row[j - 1] + &row[j];
            }
            row = next;
            if n >= 3 && n % 2 == 1 {
                table.push(ExactRational::zero());
                continue;
            }
            let mut acc = ExactRational::zero();
            for (j, b) in table.iter().enumerate() {
                if !b.is_zero() {
                    acc += b * ExactRational::from_integer(row[j].clone());
                }
            }
            table.push(-acc / ExactRational::from_integer(BigInt::from(n + 1)));
        }
        BernoulliOracle { table }
    }

    pub fn bound(&self) -> usize {
        self.table.len() - 1
    }

    pub fn get(&self, n: usize) -> Result<&ExactRational, BernoulliError> {
        self.table.get(n).ok_or(BernoulliError::AboveBound { n, bound: self.bound() })
    }
}

fn default_oracle() -> &'static BernoulliOracle {
    static ORACLE: OnceLock<BernoulliOracle> = OnceLock::new();
    ORACLE.get_or_init(|| BernoulliOracle::new(DEFAULT_ORACLE_BOUND))
}

/// `B_n` as an exact rational, `n <= 200`.
pub fn bernoulli_exact(n: usize) -> Result<ExactRational, BernoulliError> {
    default_oracle().get(n).cloned()
}

/// Exact even Bernoulli numbers `B_0, B_2, ..., B_{2m}` through the tangent
/// numbers, which only needs integer arithmetic and so reaches indices in
/// the thousands cheaply: `B_{2k} = (-1)^(k-1) 2k T_k / (4^k (4^k - 1))`.
pub fn even_bernoulli_via_tangent(m: usize) -> Vec<ExactRational> {
    let mut tangent: Vec<BigInt> = vec![BigInt::zero(); m + 1];
    if m >= 1 {
        tangent[1] = BigInt::one();
    }
    for k in 2..=m {
        tangent[k] = &tangent[k - 1] * BigInt::from(k - 1);
    }
    for k in 2..=m {
        for j in k..=m {
            tangent[j] = &tangent[j - 1] * BigInt::from(j - k) + &tangent[j] * BigInt::from(j - k + 2);
        }
    }
    let mut out = vec![ExactRational::one()];
    for (k, t) in tangent.iter().enumerate().skip(1) {
        let four_k = BigInt::one() << (2 * k);
        let den = &four_k * (&four_k - 1);
        let mut num = t * BigInt::from(2 * k);
        if k % 2 == 0 {
            num = -num;
        }
        out.push(ExactRational::new(num, den));
    }
    out
}

/// `B_k mod p` for even `k` in `[2, p-3]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernoulliTable {
    p: u64,
    residues: Vec<u64>,
}

impl BernoulliTable {
    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Residue of `B_k`; `None` outside the even range `[2, p-3]`.
    pub fn get(&self, k: u64) -> Option<u64> {
        if k < 2 || k % 2 == 1 || k + 3 > self.p {
            return None;
        }
        self.residues.get((k / 2 - 1) as usize).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.residues.iter().enumerate().map(|(i, &r)| (2 * i as u64 + 2, r))
    }
}

impl std::ops::Index<u64> for BernoulliTable {
    type Output = u64;

    fn index(&self, k: u64) -> &u64 {
        assert!(k >= 2 && k % 2 == 0 && k + 3 <= self.p, "index {k} outside [2, p-3]");
        &self.residues[(k / 2 - 1) as usize]
    }
}

// Below this the O(p^2) half sums beat setting up a transform.
const NAIVE_CUTOFF: u64 = 256;

/// `B_k mod p` for every even `k` in `[2, p-3]`.
///
/// Uses `sum_{j=1}^{(p-1)/2} j^(k-1) ≡ (2^(1-k) - 2) B_k / k (mod p)`; the half
/// sums for all `k` at once are a discrete Fourier transform over `(Z/p)^×`,
/// evaluated with Bluestein's trick and one exact convolution. Indices with
/// `2^k ≡ 1` fall back to `sum_{j<p} j^k ≡ p B_k (mod p^2)`.
pub fn bernoulli_mod_p(p: u64) -> Result<BernoulliTable, BernoulliError> {
    check_prime(p)?;
    let sums = if p < NAIVE_CUTOFF {
        half_power_sums_naive(p)
    } else {
        half_power_sums_bluestein(p)
    };
    Ok(table_from_half_sums(p, &sums))
}

fn table_from_half_sums(p: u64, sums: &[u64]) -> BernoulliTable {
    let inv2 = inv_mod(2, p).expect("p odd");
    let mut residues = Vec::with_capacity(((p - 3) / 2) as usize);
    for k in (2..=p - 3).step_by(2) {
        // 2^(1-k) - 2
        let factor = (pow_mod(inv2, k - 1, p) + p - 2) % p;
        let b = if factor != 0 {
            let s = sums[(k - 1) as usize];
            mul_mod(mul_mod(s, k % p, p), inv_mod(factor, p).expect("nonzero mod p"), p)
        } else {
            full_power_sum_mod_p2(p, k) / p
        };
        residues.push(b);
    }
    BernoulliTable { p, residues }
}

/// `sum_{j=1}^{p-1} j^k mod p^2`; divisible by `p` for even `k` with
/// `(p-1) ∤ k`.
fn full_power_sum_mod_p2(p: u64, k: u64) -> u64 {
    let m = p * p;
    let mut s = 0u64;
    for j in 1..p {
        s = (s + pow_mod(j, k, m)) % m;
    }
    debug_assert_eq!(s % p, 0);
    s
}

/// `sum_{j=1}^{(p-1)/2} j^m mod p` for every `m` in `[0, p-1)`, directly.
pub fn half_power_sums_naive(p: u64) -> Vec<u64> {
    let half = (p - 1) / 2;
    let mut sums = vec![0u64; (p - 1) as usize];
    for j in 1..=half {
        let mut x = 1u64;
        for s in sums.iter_mut() {
            *s += x;
            x = x * j % p;
        }
    }
    sums.iter().map(|s| s % p).collect()
}

/// Same as [`half_power_sums_naive`] in `O(p log p)`.
///
/// With `g` a primitive root and `h_l = [g^l mod p <= (p-1)/2]`, the sum is
/// `S_m = sum_l h_l g^(l m)`. Writing `l m = C(l+m, 2) - C(l, 2) - C(m, 2)`
/// turns it into a correlation of `h_l g^(-C(l,2))` with `g^(C(u,2))`.
pub fn half_power_sums_bluestein(p: u64) -> Vec<u64> {
    let order = (p - 1) as usize;
    let g = primitive_root(p);
    let g_inv = inv_mod(g, p).expect("unit");
    let half = (p - 1) / 2;

    let mut chirp = Vec::with_capacity(2 * order - 1);
    let (mut c, mut step) = (1u64, 1u64);
    for _ in 0..2 * order - 1 {
        chirp.push(c);
        c = c * step % p;
        step = step * g % p;
    }

    // reversed so the correlation becomes a convolution
    let mut weights = vec![0u64; order];
    let (mut gl, mut c, mut step) = (1u64, 1u64, 1u64);
    for l in 0..order {
        if gl <= half {
            weights[order - 1 - l] = c;
        }
        gl = gl * g % p;
        c = c * step % p;
        step = step * g_inv % p;
    }

    let size = (2 * order - 1).next_power_of_two();
    // every output is a sum of at most p - 1 products below p^2
    debug_assert!((p as u128).pow(3) < ntt::MODULUS as u128);
    let conv = ntt::cyclic_convolution(&weights, &chirp, size);

    let mut sums = Vec::with_capacity(order);
    let (mut c, mut step) = (1u64, 1u64);
    for m in 0..order {
        let raw = conv[order - 1 + m] % p;
        sums.push(raw * c % p);
        c = c * step % p;
        step = step * g_inv % p;
    }
    sums
}

/// Even `k` in `[2, p-3]` with `p | B_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrregularPairSet {
    pub p: u64,
    pub indices: Vec<u64>,
}

impl IrregularPairSet {
    pub fn is_regular(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index_of_irregularity(&self) -> usize {
        self.indices.len()
    }
}

pub fn irregular_pairs(p: u64) -> Result<IrregularPairSet, BernoulliError> {
    let table = bernoulli_mod_p(p)?;
    Ok(IrregularPairSet {
        p,
        indices: table.iter().filter(|&(_, r)| r == 0).map(|(k, _)| k).collect(),
    })
}

/// `B_{n, ω^i} mod p^prec`, the generalized Bernoulli number of the
/// Teichmüller power `ω^i` (conductor `p`, or `1` when `i ≡ 0`).
pub fn gen_bernoulli(p: u64, i: u64, n: u32, prec: u32) -> Result<ResidueInt, BernoulliError> {
    check_prime(p)?;
    let i = i % (p - 1);
    if n == 0 {
        // B_{0,χ} vanishes unless χ is trivial
        return Ok(ResidueInt::new(if i == 0 { 1 } else { 0 }, p, prec)?);
    }
    if n == 1 {
        if i == 0 {
            return Err(BernoulliError::TrivialWeightOne);
        }
        return weight_one(p, i, prec);
    }
    // guard digits: one for the final division by p, n for carries
    let work = prec + n + 1;
    checked_prime_power(p, work).ok_or(PadicError::PrecisionOverflow { p, prec: work })?;
    let oracle = default_oracle();
    let n_us = n as usize;
    let bern: Vec<&ExactRational> = (0..=n_us).map(|j| oracle.get(j)).collect::<Result<_, _>>()?;

    // coefficients C(n, j) B_j p^j, p-integral for every j
    let p_big = BigInt::from(p);
    let mut binom = BigInt::one();
    let mut coeffs = Vec::with_capacity(n_us + 1);
    let mut p_pow = BigInt::one();
    for (j, b) in bern.iter().enumerate() {
        let c = ExactRational::from_integer(&binom * &p_pow) * *b;
        coeffs.push(ResidueInt::from_rational(&c, p, work).map_err(|_| BernoulliError::NotIntegral { p, i, n })?);
        binom = binom * BigInt::from(n_us - j) / BigInt::from(j + 1);
        p_pow *= &p_big;
    }

    let zero = ResidueInt::zero(p, work)?;
    let mut total = zero;
    let last = if i == 0 { p } else { p - 1 };
    for a in 1..=last {
        // p^n B_n(a/p) = sum_j C(n,j) B_j p^j a^(n-j)
        let a_res = zero.lift(a as i128);
        let mut value = zero;
        for c in &coeffs {
            value = value * a_res + *c;
        }
        let chi = if a == p {
            zero.lift(1)
        } else {
            teichmuller_of(a_res).pow(i)
        };
        total = total + chi * value;
    }
    let reduced = total.div_p_power(1).ok_or(BernoulliError::NotIntegral { p, i, n })?;
    Ok(reduced.reduce_to(prec))
}

/// `B_{1,χ} = (1/p) sum_{a=1}^{p-1} χ(a) a` for non-trivial `χ = ω^i`.
/// Not `p`-integral for `χ = ω^(-1)`.
pub(crate) fn weight_one(p: u64, i: u64, prec: u32) -> Result<ResidueInt, BernoulliError> {
    let work = prec + 1;
    let zero = ResidueInt::zero(p, work)?;
    let mut total = zero;
    for a in 1..p {
        let a_res = zero.lift(a as i128);
        total = total + teichmuller_of(a_res).pow(i) * a_res;
    }
    let reduced = total
        .div_p_power(1)
        .ok_or(BernoulliError::NotIntegral { p, i, n: 1 })?;
    Ok(reduced.reduce_to(prec))
}

/// Reduces an exact rational modulo `p`, assuming it is `p`-integral.
pub fn rational_mod_p(x: &ExactRational, p: u64) -> Option<u64> {
    let den = bigint_mod(x.denom(), p);
    let inv = inv_mod(den, p)?;
    Some(mul_mod(bigint_mod(x.numer(), p), inv, p))
}

/// Product of the primes `q` with `(q - 1) | n`.
pub fn von_staudt_clausen_denominator(n: u64) -> BigInt {
    (2..=n + 1)
        .filter(|&q| crate::primes::is_prime(q) && n % (q - 1) == 0)
        .fold(BigInt::one(), |acc, q| acc * BigInt::from(q))
}

/// The exact rational `B_k / k` reduced modulo `p`.
pub fn bernoulli_over_k_mod_p(oracle: &[ExactRational], k: usize, p: u64) -> Option<u64> {
    let b = &oracle[k];
    let q = b / ExactRational::from_integer(BigInt::from(k));
    if q.denom().is_multiple_of(&BigInt::from(p)) {
        return None;
    }
    rational_mod_p(&q, p)
}
