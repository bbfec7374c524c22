//! The Iwasawa power series `f(T)` of an even branch `ω^k`, normalized by
//! `f((1+p)^s - 1) = L_p(s, ω^k)`, and its invariants `μ, λ, a, m, c`.
//!
//! At level `n` the series is known modulo `ω_n(T) = (1+T)^(p^n) - 1` as the
//! `ω^k`-part of the Stickelberger element of `Q(ζ_{p^{n+1}})`:
//!
//! ```text
//! f_n(T) = -(1/p^(n+1)) Σ_{a < p^(n+1), p ∤ a} a · ω(a)^(k-1) · (1+T)^(i_n(a))
//! ```
//!
//! with `a ≡ ω(a)(1+p)^(i_n(a))`. The character exponent, the direction of
//! the `(1+T)` twist and the overall sign are fixed once by an interpolation
//! self-test ([`pin_convention`]).
//!
//! Precision bookkeeping: `f_n(0) = f(0)` exactly, the coefficients of `T^j`
//! for `0 < j < p` agree with those of `f` modulo `p^n`, and evaluating at
//! `T = (1+p)^s - 1` is accurate modulo `p^(n+1)`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bernoulli::{self, BernoulliError};
use crate::padic::{check_prime, checked_prime_power, teichmuller_of, ExactRational, PadicError, ResidueInt};
use crate::primes::{inv_mod, mul_mod};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IwasawaError {
    #[error("branch k = {k} is not an even index in [2, p-3] for p = {p}")]
    BadBranch { p: u64, k: u64 },
    #[error("truncation {trunc} exceeds p^level = {max}")]
    BadTruncation { trunc: usize, max: u64 },
    #[error("Stickelberger sum for (p={p}, k={k}, level {level}) is not p-integral; convention error")]
    NonIntegral { p: u64, k: u64, level: u32 },
    #[error("no orientation reproduces the interpolation values at (p={p}, k={k})")]
    NoOrientation { p: u64, k: u64 },
    #[error("{count} orientations reproduce the interpolation values at (p={p}, k={k})")]
    AmbiguousOrientation { p: u64, k: u64, count: usize },
    #[error("calibration points disagree on the orientation")]
    InconsistentCalibration,
    #[error("precision insufficient: {0}")]
    Escalate(EscalationReason),
    #[error("escalation exhausted for (p={p}, k={k}) at level {level}, precision {prec}: {reason}")]
    EscalationExhausted {
        p: u64,
        k: u64,
        level: u32,
        prec: u32,
        reason: EscalationReason,
    },
    #[error("invariant cross-check failed: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Bernoulli(#[from] BernoulliError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EscalationReason {
    /// every visible coefficient is divisible by `p`
    NoUnitCoefficient,
    /// `f(0) ≡ 0` at the working precision
    ConstantTermVanishes,
    /// `f(p) ≡ 0` at the working precision
    SpecialValueVanishes,
    /// the Newton root is not known to enough digits to read off `c`
    RootPrecision,
}

impl std::fmt::Display for EscalationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EscalationReason::NoUnitCoefficient => "all visible coefficients divisible by p",
            EscalationReason::ConstantTermVanishes => "a >= N",
            EscalationReason::SpecialValueVanishes => "m >= effective precision",
            EscalationReason::RootPrecision => "root precision below a + 1",
        };
        f.write_str(s)
    }
}

/// Which power of `ω` weights `a` in the Stickelberger sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CharacterWeight {
    /// `a · ω(a)^(k-1)`
    KMinusOne,
    /// `a · ω(a)^(-k)`
    MinusK,
}

/// The free choices in turning a Stickelberger sum into `f(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Orientation {
    pub weight: CharacterWeight,
    /// `+1`: `a ↦ (1+T)^(i(a))`, `-1`: `a ↦ (1+T)^(-i(a))`
    pub direction: i8,
    /// global sign applied after the `-1/p^(n+1)` normalization
    pub sign: i8,
}

impl Orientation {
    pub fn candidates() -> Vec<Orientation> {
        let mut out = Vec::with_capacity(8);
        for weight in [CharacterWeight::MinusK, CharacterWeight::KMinusOne] {
            for direction in [1, -1] {
                for sign in [1, -1] {
                    out.push(Orientation {
                        weight,
                        direction,
                        sign,
                    });
                }
            }
        }
        out
    }
}

/// `f(T)` of branch `ω^k` at level `n`, reduced modulo `(p^N, T^M)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedSeries {
    p: u64,
    k: u64,
    level: u32,
    prec: u32,
    orientation: Orientation,
    coefficients: Vec<ResidueInt>,
    /// coordinates of `f_n` in the basis `(1+T)^i`, `0 <= i < p^n`
    group_ring: Vec<ResidueInt>,
}

impl TruncatedSeries {
    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn branch(&self) -> u64 {
        self.k
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn truncation(&self) -> usize {
        self.coefficients.len()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn coefficients(&self) -> &[ResidueInt] {
        &self.coefficients
    }

    pub fn group_ring(&self) -> &[ResidueInt] {
        &self.group_ring
    }

    /// Digits to which `f(x)` is known for `v_p(x) >= 1`.
    pub fn effective_precision(&self) -> u32 {
        self.prec.min(self.truncation() as u32).min(self.level + 1)
    }

    /// Whether `self` reduced modulo `(1+T)^(p^n) - 1` equals `lower`, with
    /// `n = lower.level()`. Compared in the `(1+T)^i` basis, where the
    /// reduction folds exponents modulo `p^n`.
    pub fn agrees_modulo_level(&self, lower: &TruncatedSeries) -> bool {
        if self.p != lower.p || self.k != lower.k || lower.level > self.level {
            return false;
        }
        let prec = self.prec.min(lower.prec);
        let size = lower.group_ring.len();
        let zero = ResidueInt::zero(self.p, prec).expect("valid precision");
        let mut folded = vec![zero; size];
        for (i, c) in self.group_ring.iter().enumerate() {
            folded[i % size] = folded[i % size] + c.reduce_to(prec);
        }
        folded.iter().zip(&lower.group_ring).all(|(a, b)| *a == b.reduce_to(prec))
    }
}

/// Largest working precision for sums at `level` keeping `p^(N+level+1)`
/// inside a machine word.
pub fn max_series_precision(p: u64, level: u32) -> u32 {
    crate::padic::max_precision(p).saturating_sub(level + 1)
}

/// Builds `f_n(T) mod (p^N, T^M)` with the pinned orientation.
pub fn build_series(p: u64, k: u64, level: u32, prec: u32, trunc: usize) -> Result<TruncatedSeries, IwasawaError> {
    let orientation = pinned_orientation()?;
    build_series_with(p, k, level, prec, trunc, orientation)
}

pub fn build_series_with(
    p: u64,
    k: u64,
    level: u32,
    prec: u32,
    trunc: usize,
    orientation: Orientation,
) -> Result<TruncatedSeries, IwasawaError> {
    check_prime(p)?;
    if k % 2 == 1 || k < 2 || k + 3 > p {
        return Err(IwasawaError::BadBranch { p, k });
    }
    if level == 0 || prec == 0 {
        return Err(PadicError::ZeroPrecision.into());
    }
    let size = p
        .checked_pow(level)
        .filter(|s| *s <= 1 << 34)
        .ok_or(PadicError::PrecisionOverflow { p, prec: level })?;
    if trunc == 0 || trunc as u64 > size {
        return Err(IwasawaError::BadTruncation { trunc, max: size });
    }
    let work = prec + level + 1;
    let modulus = checked_prime_power(p, work).ok_or(PadicError::PrecisionOverflow { p, prec: work })?;
    let exponent = match orientation.weight {
        CharacterWeight::KMinusOne => k - 1,
        CharacterWeight::MinusK => p - 1 - k,
    };
    let raw = if level == 1 {
        stickelberger_level_one(p, exponent, modulus)
    } else {
        stickelberger_generic(p, exponent, level, modulus)
    };

    // W[i] -> -sign/p^(n+1) W[±i]
    let size = size as usize;
    let divisor = p.pow(level + 1);
    let out_modulus = modulus / divisor;
    let mut group = vec![0u64; size];
    for (i, w) in raw.iter().enumerate() {
        if w % divisor != 0 {
            return Err(IwasawaError::NonIntegral { p, k, level });
        }
        let j = if orientation.direction == 1 { i } else { (size - i) % size };
        let q = w / divisor;
        group[j] = if orientation.sign == 1 { (out_modulus - q) % out_modulus } else { q };
    }

    let coefficients = group_ring_to_coefficients(&group, trunc, out_modulus);
    let lift = |v: u64| ResidueInt::new(v as i128, p, prec);
    Ok(TruncatedSeries {
        p,
        k,
        level,
        prec,
        orientation,
        coefficients: coefficients.into_iter().map(lift).collect::<Result<_, _>>()?,
        group_ring: group.into_iter().map(lift).collect::<Result<_, _>>()?,
    })
}

/// `c_j = Σ_i G[i] C(i, j)` for `j < trunc`, i.e. `Σ G[i] (1+T)^i` expanded.
fn group_ring_to_coefficients(group: &[u64], trunc: usize, modulus: u64) -> Vec<u64> {
    let mut binom = vec![0u64; trunc];
    binom[0] = 1;
    let mut acc = vec![0u64; trunc];
    for &g in group {
        if g != 0 {
            for (a, &b) in acc.iter_mut().zip(&binom) {
                *a = (*a + mul_mod(g, b, modulus)) % modulus;
            }
        }
        // C(i+1, j) = C(i, j) + C(i, j-1)
        for j in (1..trunc).rev() {
            binom[j] = (binom[j] + binom[j - 1]) % modulus;
        }
    }
    acc
}

/// Teichmüller representatives `ω(u)` of `u = 1..p-1` modulo `modulus`,
/// a power of `p`.
fn teichmuller_table(p: u64, modulus: u64) -> Vec<u64> {
    let prec = modulus.ilog(p);
    (1..p)
        .map(|u| {
            let x = ResidueInt::new(u as i128, p, prec).expect("fits");
            teichmuller_of(x).value()
        })
        .collect()
}

/// `W[i] = Σ_{i(a) = i} a ω(a)^e mod p^work` over `a < p^(n+1)`, `p ∤ a`,
/// enumerating `a = ω · (1+p)^i` for each root of unity `ω`.
pub(crate) fn stickelberger_generic(p: u64, exponent: u64, level: u32, modulus: u64) -> Vec<u64> {
    let size = p.pow(level) as usize;
    let a_modulus = p.pow(level + 1);
    let omegas = teichmuller_table(p, modulus);
    let mut acc = vec![0u128; size];
    // a < p^(n+1), weight < 2^63: rows that can be added before reducing
    let per_row = (a_modulus as u128) << 63;
    let rows_before_reduce = (u128::MAX / per_row).max(1) as usize;
    for (row, &omega) in omegas.iter().enumerate() {
        let weight = crate::primes::pow_mod(omega, exponent, modulus) as u128;
        let mut a = omega % a_modulus;
        for slot in acc.iter_mut() {
            *slot += a as u128 * weight;
            a = a * (1 + p) % a_modulus;
        }
        if (row + 1) % rows_before_reduce == 0 {
            for slot in acc.iter_mut() {
                *slot %= modulus as u128;
            }
        }
    }
    acc.into_iter().map(|x| (x % modulus as u128) as u64).collect()
}

/// Level-one specialization of [`stickelberger_generic`].
///
/// For `a = u + p v` with `0 < u < p`: `ω(a) = ω(u)` and
/// `i(a) ≡ i(u) + v u^(-1) (mod p)`, so `v ≡ (i - i(u)) u` is linear in the
/// target index and `W[i] = Σ_u ω(u)^e u + p Σ_u ω(u)^e ((i - i(u)) u mod p)`.
pub(crate) fn stickelberger_level_one(p: u64, exponent: u64, modulus: u64) -> Vec<u64> {
    let size = p as usize;
    let p2 = p * p;
    let omegas = teichmuller_table(p, modulus);
    let mut base = 0u128;
    let mut acc = vec![0u128; size];
    for (idx, &omega) in omegas.iter().enumerate() {
        let u = idx as u64 + 1;
        let weight = crate::primes::pow_mod(omega, exponent, modulus);
        base += u as u128 * weight as u128;
        // ⟨u⟩ = u ω(u)^(-1) ≡ 1 + i(u) p (mod p^2)
        let omega_inv = inv_mod(omega % p2, p2).expect("unit");
        let principal = mul_mod(u, omega_inv, p2);
        let iu = (principal - 1) / p;
        // r(i) = (i - i(u)) u mod p, starting at i = 0
        let mut r = (p - iu) % p * u % p;
        let w = weight as u128;
        for slot in acc.iter_mut() {
            *slot += r as u128 * w;
            r += u;
            if r >= p {
                r -= p;
            }
        }
    }
    let m = modulus as u128;
    let base = base % m;
    acc.into_iter()
        .map(|x| ((base + (x % m) * p as u128) % m) as u64)
        .collect()
}

/// `f((1+p)^s - 1)`, i.e. `L_p(s, ω^k)`, modulo `p` to the
/// [`TruncatedSeries::effective_precision`].
pub fn lp_eval(series: &TruncatedSeries, s: i64) -> ResidueInt {
    let zero = series.coefficients[0].lift(0);
    let gamma = zero.lift(1 + series.p as i128);
    let gamma_s = if s >= 0 {
        gamma.pow(s as u64)
    } else {
        gamma.inverse().expect("unit").pow(s.unsigned_abs())
    };
    let x = gamma_s - zero.lift(1);
    evaluate(&series.coefficients, x).reduce_to(series.effective_precision())
}

fn evaluate(coefficients: &[ResidueInt], x: ResidueInt) -> ResidueInt {
    coefficients.iter().rev().fold(x.lift(0), |acc, c| acc * x + *c)
}

fn derivative_at(coefficients: &[ResidueInt], x: ResidueInt) -> ResidueInt {
    coefficients
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(x.lift(0), |acc, (j, c)| acc * x + c.lift(j as i128) * *c)
}

/// `-(1 - p^(n-1)) B_n / n`, the value of `L_p(1-n, ω^k)` for `n ≡ k (mod p-1)`.
pub fn interpolation_target(p: u64, weight: usize, prec: u32) -> Result<ResidueInt, IwasawaError> {
    let b = bernoulli::bernoulli_exact(weight)?;
    let euler = ExactRational::from_integer(BigInt::from(1) - BigInt::from(p).pow(weight as u32 - 1));
    let value = -(euler * b / ExactRational::from_integer(BigInt::from(weight)));
    Ok(ResidueInt::from_rational(&value, p, prec)?)
}

/// The orientation for which the level-one series of `(p, k)` reproduces
/// `L_p(1-n, ω^k)` at the two weights `n = k` and `n = k + p - 1`.
pub fn pin_convention(p: u64, k: u64) -> Result<Orientation, IwasawaError> {
    check_prime(p)?;
    if k % 2 == 1 || k < 2 || k + 3 > p {
        return Err(IwasawaError::BadBranch { p, k });
    }
    let weights = [k as usize, (k + p - 1) as usize];
    let targets: Vec<ResidueInt> = weights
        .iter()
        .map(|&w| interpolation_target(p, w, 2))
        .collect::<Result<_, _>>()?;
    let mut passing = Vec::new();
    for orientation in Orientation::candidates() {
        let series = match build_series_with(p, k, 1, 2, p as usize, orientation) {
            Ok(s) => s,
            Err(IwasawaError::NonIntegral { .. }) => continue,
            Err(e) => return Err(e),
        };
        let ok = weights
            .iter()
            .zip(&targets)
            .all(|(&w, t)| lp_eval(&series, 1 - w as i64) == *t);
        if ok {
            passing.push(orientation);
        }
    }
    match passing.len() {
        0 => Err(IwasawaError::NoOrientation { p, k }),
        1 => Ok(passing[0]),
        count => Err(IwasawaError::AmbiguousOrientation { p, k, count }),
    }
}

/// Branches used to pin the orientation once per process.
pub const CALIBRATION_SET: [(u64, u64); 7] = [(5, 2), (7, 2), (7, 4), (11, 4), (13, 6), (37, 32), (59, 44)];

/// The orientation shared by every calibration branch; computed on first
/// use and fixed for the life of the process.
pub fn pinned_orientation() -> Result<Orientation, IwasawaError> {
    static PINNED: OnceLock<Result<Orientation, IwasawaError>> = OnceLock::new();
    PINNED
        .get_or_init(|| {
            let mut found: Option<Orientation> = None;
            for &(p, k) in CALIBRATION_SET.iter() {
                let o = pin_convention(p, k)?;
                match found {
                    None => found = Some(o),
                    Some(prev) if prev != o => return Err(IwasawaError::InconsistentCalibration),
                    _ => {}
                }
            }
            found.ok_or(IwasawaError::InconsistentCalibration)
        })
        .clone()
}

/// Invariants of one branch read from its power series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchInvariants {
    pub mu: u32,
    pub lambda: u32,
    pub a: u32,
    pub m: u32,
    /// `m` is only a lower bound: `f(p)` vanished at the highest precision
    /// the escalation policy could afford.
    pub m_is_lower_bound: bool,
    pub c_mod_p: Option<u64>,
    pub precision_used: u32,
    pub level_used: u32,
}

/// Reads `μ, λ, a, m` and, when `λ = 1`, `c mod p` from `f = (T + c p^a) u`.
pub fn invariants(series: &TruncatedSeries) -> Result<BranchInvariants, IwasawaError> {
    let p = series.p;
    let coeffs = &series.coefficients;
    // c_0 is exact to p^N, higher coefficients to p^min(N, level)
    let visible = |j: usize| if j == 0 { series.prec } else { series.prec.min(series.level) };
    let (mu, lambda) = coeffs
        .iter()
        .enumerate()
        .take(p as usize)
        .filter_map(|(j, c)| c.valuation().filter(|v| *v < visible(j)).map(|v| (v, j)))
        .min_by_key(|&(v, j)| (v, j))
        .map(|(v, j)| (v, j as u32))
        .ok_or(IwasawaError::Escalate(EscalationReason::NoUnitCoefficient))?;

    let a = coeffs[0]
        .valuation()
        .ok_or(IwasawaError::Escalate(EscalationReason::ConstantTermVanishes))?;
    let special = lp_eval(series, 1);
    let m = special
        .valuation()
        .ok_or(IwasawaError::Escalate(EscalationReason::SpecialValueVanishes))?;

    let c_mod_p = if mu == 0 && lambda == 1 {
        let theta = newton_root(series)?;
        let known = theta.precision();
        if known < a + 1 {
            return Err(IwasawaError::Escalate(EscalationReason::RootPrecision));
        }
        let shifted = (-theta).div_p_power(a).ok_or_else(|| {
            IwasawaError::Inconsistent(format!("root {theta:?} not divisible by p^{a}"))
        })?;
        Some(shifted.value() % p)
    } else {
        None
    };

    let inv = BranchInvariants {
        mu,
        lambda,
        a,
        m,
        m_is_lower_bound: false,
        c_mod_p,
        precision_used: series.prec,
        level_used: series.level,
    };
    check_triangle(&inv, p)?;
    Ok(inv)
}

/// `v_p(p + c p^a)` from `(a, c mod p)` must match `m`.
fn check_triangle(inv: &BranchInvariants, p: u64) -> Result<(), IwasawaError> {
    let Some(c) = inv.c_mod_p else { return Ok(()) };
    let consistent = match inv.a {
        0 => true,
        1 if c == p - 1 => inv.m >= 2,
        _ => inv.m == 1,
    };
    if consistent {
        Ok(())
    } else {
        Err(IwasawaError::Inconsistent(format!(
            "m = {} but a = {}, c ≡ {} (mod {})",
            inv.m, inv.a, c, p
        )))
    }
}

/// The root `θ ≡ 0 (mod p)` of `f` when `λ = 1`, by Newton iteration on the
/// truncated series. The result carries the number of digits that are
/// meaningful for the true `f`.
pub fn newton_root(series: &TruncatedSeries) -> Result<ResidueInt, IwasawaError> {
    let coeffs = &series.coefficients;
    if coeffs.len() < 2 || !coeffs[1].is_unit() {
        return Err(IwasawaError::Escalate(EscalationReason::NoUnitCoefficient));
    }
    let a = coeffs[0].valuation().unwrap_or(series.prec);
    // agreement of f_n with f at θ is p^(n+a); truncation costs p^M
    let prec = series
        .prec
        .min(coeffs.len() as u32)
        .min(series.level + a.max(1));
    let coeffs: Vec<ResidueInt> = coeffs.iter().map(|c| c.reduce_to(prec)).collect();
    let mut theta = coeffs[0].lift(0);
    for _ in 0..64 {
        let value = evaluate(&coeffs, theta);
        if value.is_zero() {
            return Ok(theta);
        }
        let slope = derivative_at(&coeffs, theta).inverse().ok_or_else(|| {
            IwasawaError::Inconsistent("derivative at the root is not a unit".into())
        })?;
        theta = theta - value * slope;
    }
    Err(IwasawaError::Inconsistent("Newton iteration did not converge".into()))
}

/// Starting point and limits of the precision/level escalation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EscalationPolicy {
    pub level: u32,
    pub prec: u32,
    pub max_trunc: usize,
    pub max_escalations: u32,
    /// upper bound on `p^(level+1)`, the number of Stickelberger terms
    pub work_ceiling: u64,
}

impl Default for EscalationPolicy {
    fn default() -> Self {
        EscalationPolicy {
            level: 1,
            prec: 8,
            max_trunc: 32,
            max_escalations: 2,
            work_ceiling: 1 << 31,
        }
    }
}

/// Builds the branch series and extracts its invariants, doubling the
/// precision and raising the level on each escalation request.
pub fn branch_invariants(p: u64, k: u64, policy: &EscalationPolicy) -> Result<BranchInvariants, IwasawaError> {
    let mut level = policy.level;
    let mut prec = policy.prec;
    let mut last_bound: Option<BranchInvariants> = None;
    let mut attempt = 0;
    loop {
        let capped = prec.min(max_series_precision(p, level)).max(1);
        let trunc = (p.pow(level) as usize).min(policy.max_trunc);
        let series = build_series(p, k, level, capped, trunc)?;
        match invariants(&series) {
            Ok(inv) => return Ok(inv),
            Err(IwasawaError::Escalate(reason)) => {
                if reason == EscalationReason::SpecialValueVanishes {
                    last_bound = Some(lower_bound_for_m(&series)?);
                }
                // f(0) is exact at every level: only precision helps
                let precision_only =
                    reason == EscalationReason::ConstantTermVanishes && capped < max_series_precision(p, level);
                let next_level = if precision_only { level } else { level + 1 };
                let affordable = p
                    .checked_pow(next_level + 1)
                    .is_some_and(|w| w <= policy.work_ceiling)
                    && max_series_precision(p, next_level) >= 1;
                if attempt >= policy.max_escalations || !affordable {
                    if let Some(bound) = last_bound {
                        return Ok(bound);
                    }
                    return Err(IwasawaError::EscalationExhausted {
                        p,
                        k,
                        level,
                        prec: capped,
                        reason,
                    });
                }
                attempt += 1;
                level = next_level;
                prec *= 2;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Invariants when only `f(p)` is out of reach: `m` is reported as the
/// precision at which it vanished.
fn lower_bound_for_m(series: &TruncatedSeries) -> Result<BranchInvariants, IwasawaError> {
    let coeffs = &series.coefficients;
    let a = coeffs[0]
        .valuation()
        .ok_or(IwasawaError::Escalate(EscalationReason::ConstantTermVanishes))?;
    let lambda = coeffs
        .iter()
        .position(|c| c.is_unit())
        .ok_or(IwasawaError::Escalate(EscalationReason::NoUnitCoefficient))? as u32;
    let c_mod_p = if lambda == 1 {
        let theta = newton_root(series)?;
        if theta.precision() < a + 1 {
            return Err(IwasawaError::Escalate(EscalationReason::RootPrecision));
        }
        (-theta).div_p_power(a).map(|t| t.value() % series.p)
    } else {
        None
    };
    let inv = BranchInvariants {
        mu: 0,
        lambda,
        a,
        m: series.effective_precision(),
        m_is_lower_bound: true,
        c_mod_p,
        precision_used: series.prec,
        level_used: series.level,
    };
    check_triangle(&inv, series.p)?;
    Ok(inv)
}
