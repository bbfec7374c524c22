//! Arithmetic in `Z/p^N Z`, Teichmüller lifts and the decomposition
//! `a = ω(a) · (1+p)^i` of a unit of `Z_p`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::primes::{inv_mod, is_prime, mul_mod, pow_mod};

/// Arbitrary precision rational; always in lowest terms with positive
/// denominator.
pub type ExactRational = BigRational;

/// Largest modulus a [`ResidueInt`] may use. Keeping `p^N < 2^63` lets sums
/// of two residues stay in a `u64` and products go through `u128`.
pub const MAX_MODULUS: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error("p = {0} is not an odd prime >= 5")]
    BadPrime(u64),
    #[error("{a} is divisible by p = {p}")]
    NotAUnit { a: i128, p: u64 },
    #[error("precision must be at least 1")]
    ZeroPrecision,
    #[error("{p}^{prec} does not fit in a machine word")]
    PrecisionOverflow { p: u64, prec: u32 },
    #[error("rational has negative {p}-adic valuation")]
    NotIntegral { p: u64 },
}

/// Rejects anything but an odd prime `p >= 5`.
pub fn check_prime(p: u64) -> Result<(), PadicError> {
    if p < 5 || !is_prime(p) {
        return Err(PadicError::BadPrime(p));
    }
    Ok(())
}

/// `p^e`, or `None` when it does not fit below [`MAX_MODULUS`].
pub fn checked_prime_power(p: u64, e: u32) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..e {
        acc = acc.checked_mul(p)?;
        if acc >= MAX_MODULUS {
            return None;
        }
    }
    Some(acc)
}

/// Largest `e` with `p^e` inside a [`ResidueInt`] modulus.
pub fn max_precision(p: u64) -> u32 {
    let mut e = 0;
    while checked_prime_power(p, e + 1).is_some() {
        e += 1;
    }
    e
}

/// An integer modulo `p^N`, stored as the canonical representative in
/// `[0, p^N)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResidueInt {
    p: u64,
    prec: u32,
    modulus: u64,
    value: u64,
}

impl ResidueInt {
    pub fn new(value: i128, p: u64, prec: u32) -> Result<Self, PadicError> {
        if prec == 0 {
            return Err(PadicError::ZeroPrecision);
        }
        let modulus = checked_prime_power(p, prec).ok_or(PadicError::PrecisionOverflow { p, prec })?;
        Ok(ResidueInt {
            p,
            prec,
            modulus,
            value: value.rem_euclid(modulus as i128) as u64,
        })
    }

    /// Builds from a value already known to be reduced; used on hot paths.
    #[inline]
    pub(crate) fn from_parts(p: u64, prec: u32, modulus: u64, value: u64) -> Self {
        debug_assert!(value < modulus);
        ResidueInt {
            p,
            prec,
            modulus,
            value,
        }
    }

    pub fn zero(p: u64, prec: u32) -> Result<Self, PadicError> {
        Self::new(0, p, prec)
    }

    pub fn one(p: u64, prec: u32) -> Result<Self, PadicError> {
        Self::new(1, p, prec)
    }

    /// Reduces an exact rational with non-negative `p`-adic valuation.
    pub fn from_rational(x: &ExactRational, p: u64, prec: u32) -> Result<Self, PadicError> {
        let modulus = checked_prime_power(p, prec).ok_or(PadicError::PrecisionOverflow { p, prec })?;
        let m = BigInt::from(modulus);
        let den = x.denom().mod_floor(&m);
        let den = u64::try_from(den.magnitude()).expect("reduced below modulus");
        let inv = inv_mod(den, modulus).ok_or(PadicError::NotIntegral { p })?;
        let num = x.numer().mod_floor(&m);
        let num = u64::try_from(num.magnitude()).expect("reduced below modulus");
        Ok(ResidueInt::from_parts(p, prec, modulus, mul_mod(num, inv, modulus)))
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// The representative in `(-p^N/2, p^N/2]`.
    pub fn signed_value(&self) -> i128 {
        let v = self.value as i128;
        if v > (self.modulus / 2) as i128 {
            v - self.modulus as i128
        } else {
            v
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn is_unit(&self) -> bool {
        self.value % self.p != 0
    }

    /// Exponent of `p` dividing the representative; `None` when the residue
    /// is zero, i.e. the valuation is at least the precision.
    pub fn valuation(&self) -> Option<u32> {
        if self.value == 0 {
            return None;
        }
        let mut v = 0;
        let mut x = self.value;
        while x % self.p == 0 {
            x /= self.p;
            v += 1;
        }
        Some(v)
    }

    /// Image under `Z/p^N -> Z/p^M` for `M <= N`.
    pub fn reduce_to(&self, prec: u32) -> Self {
        assert!(prec >= 1 && prec <= self.prec, "cannot raise precision by reduction");
        let modulus = checked_prime_power(self.p, prec).expect("smaller than current modulus");
        ResidueInt::from_parts(self.p, prec, modulus, self.value % modulus)
    }

    /// Exact division by `p^k`; the result loses `k` digits of precision.
    pub fn div_p_power(&self, k: u32) -> Option<Self> {
        if k == 0 {
            return Some(*self);
        }
        if k >= self.prec {
            return None;
        }
        let pk = self.p.pow(k);
        if self.value % pk != 0 {
            return None;
        }
        let prec = self.prec - k;
        let modulus = self.modulus / pk;
        Some(ResidueInt::from_parts(self.p, prec, modulus, self.value / pk))
    }

    pub fn pow(&self, exp: u64) -> Self {
        ResidueInt::from_parts(self.p, self.prec, self.modulus, pow_mod(self.value, exp, self.modulus))
    }

    pub fn inverse(&self) -> Option<Self> {
        let inv = inv_mod(self.value, self.modulus)?;
        Some(ResidueInt::from_parts(self.p, self.prec, self.modulus, inv))
    }

    /// A residue of the same ring holding `value`.
    pub fn lift(&self, value: i128) -> Self {
        ResidueInt::from_parts(
            self.p,
            self.prec,
            self.modulus,
            value.rem_euclid(self.modulus as i128) as u64,
        )
    }

    #[inline]
    fn check_ring(&self, other: &Self) {
        assert!(
            self.p == other.p && self.prec == other.prec,
            "mixed residue rings: {}^{} vs {}^{}",
            self.p,
            self.prec,
            other.p,
            other.prec
        );
    }
}

impl fmt::Debug for ResidueInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}^{}", self.value, self.p, self.prec)
    }
}

impl fmt::Display for ResidueInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for ResidueInt {
    type Output = ResidueInt;

    fn add(self, rhs: Self) -> Self {
        self.check_ring(&rhs);
        let mut v = self.value + rhs.value;
        if v >= self.modulus {
            v -= self.modulus;
        }
        ResidueInt { value: v, ..self }
    }
}

impl Sub for ResidueInt {
    type Output = ResidueInt;

    fn sub(self, rhs: Self) -> Self {
        self.check_ring(&rhs);
        let v = if self.value >= rhs.value {
            self.value - rhs.value
        } else {
            self.value + self.modulus - rhs.value
        };
        ResidueInt { value: v, ..self }
    }
}

impl Mul for ResidueInt {
    type Output = ResidueInt;

    fn mul(self, rhs: Self) -> Self {
        self.check_ring(&rhs);
        ResidueInt {
            value: mul_mod(self.value, rhs.value, self.modulus),
            ..self
        }
    }
}

impl Neg for ResidueInt {
    type Output = ResidueInt;

    fn neg(self) -> Self {
        let v = if self.value == 0 { 0 } else { self.modulus - self.value };
        ResidueInt { value: v, ..self }
    }
}

/// The Teichmüller representative of `a`: the unique `(p-1)`-th root of
/// unity congruent to `a` modulo `p`, at precision `prec`.
pub fn teichmuller(a: i128, p: u64, prec: u32) -> Result<ResidueInt, PadicError> {
    check_prime(p)?;
    if a.rem_euclid(p as i128) == 0 {
        return Err(PadicError::NotAUnit { a, p });
    }
    let x = ResidueInt::new(a, p, prec)?;
    Ok(teichmuller_of(x))
}

/// Iterates `x <- x^p`; each step gains one digit, so `N` steps suffice.
pub(crate) fn teichmuller_of(mut x: ResidueInt) -> ResidueInt {
    for _ in 0..x.precision() {
        let next = x.pow(x.prime());
        if next == x {
            break;
        }
        x = next;
    }
    x
}

/// `a ≡ omega_part · (1+p)^index (mod p^(level+1))` with `0 <= index < p^level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DigitDecomposition {
    pub p: u64,
    pub level: u32,
    pub omega_part: ResidueInt,
    pub index: u64,
}

impl DigitDecomposition {
    pub fn reconstruct(&self) -> ResidueInt {
        let gamma = self.omega_part.lift(1 + self.p as i128);
        self.omega_part * gamma.pow(self.index)
    }
}

pub fn decompose(a: i128, p: u64, level: u32) -> Result<DigitDecomposition, PadicError> {
    if level == 0 {
        return Err(PadicError::ZeroPrecision);
    }
    let omega = teichmuller(a, p, level + 1)?;
    let principal = omega.lift(a) * omega.inverse().expect("roots of unity are units");
    Ok(DigitDecomposition {
        p,
        level,
        omega_part: omega,
        index: log_one_plus_p(principal),
    })
}

/// Discrete logarithm to base `1+p` of a principal unit `u ≡ 1 (mod p)`,
/// read off one base-`p` digit at a time: `(1+p)^(p^j) ≡ 1 + p^(j+1)`
/// modulo `p^(j+2)`.
pub(crate) fn log_one_plus_p(u: ResidueInt) -> u64 {
    let p = u.prime();
    let level = u.precision() - 1;
    debug_assert_eq!(u.value() % p, 1);
    let gamma = u.lift(1 + p as i128);
    let gamma_inv = gamma.inverse().expect("1+p is a unit");
    let mut index = 0u64;
    let mut scale = 1u64;
    let mut rest = u;
    let mut step_inv = gamma_inv;
    for j in 0..level {
        let digit = ((rest.value() - 1) / p.pow(j + 1)) % p;
        index += digit * scale;
        rest = rest * step_inv.pow(digit);
        step_inv = step_inv.pow(p);
        scale *= p;
    }
    debug_assert_eq!(rest.value(), 1);
    index
}

/// `p`-adic valuation of an exact rational; `None` stands for `+∞` at zero.
pub fn valuation(x: &ExactRational, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    Some(int_valuation(x.numer(), p) as i64 - int_valuation(x.denom(), p) as i64)
}

pub(crate) fn int_valuation(n: &BigInt, p: u64) -> u64 {
    if n.is_zero() {
        return u64::MAX;
    }
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// `n mod p` for a big integer, as an unsigned residue.
pub(crate) fn bigint_mod(n: &BigInt, m: u64) -> u64 {
    let r = n.mod_floor(&BigInt::from(m));
    debug_assert!(r.sign() != Sign::Minus);
    u64::try_from(r.magnitude()).expect("remainder below modulus")
}
