//! Word-size modular arithmetic, deterministic Miller-Rabin and a segmented
//! sieve of Eratosthenes.

/// `a * b mod m` through a 128-bit intermediate.
#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m` by the extended Euclidean algorithm; `None` when
/// `gcd(a, m) != 1`.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

// Witness set valid for every n < 3.3 * 10^24, in particular all of u64.
const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &b in &MR_BASES {
        if n == b {
            return true;
        }
        if n % b == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Distinct prime factors of `n` by trial division (small `n` only).
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Smallest primitive root modulo the odd prime `p`.
pub fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let factors = prime_factors(p - 1);
    (2..p)
        .find(|&g| factors.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("every prime has a primitive root")
}

/// Plain sieve of Eratosthenes, primes `<= limit`.
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

const SEGMENT: u64 = 1 << 16;

/// Primes in `[from, to)` produced segment by segment, so memory stays
/// bounded by the segment size plus the base primes up to `sqrt(to)`.
pub struct SegmentedPrimes {
    base: Vec<u64>,
    lo: u64,
    to: u64,
    buffer: Vec<u64>,
    cursor: usize,
}

impl SegmentedPrimes {
    pub fn new(from: u64, to: u64) -> Self {
        let root = (to as f64).sqrt() as u64 + 1;
        SegmentedPrimes {
            base: small_primes(root),
            lo: from,
            to,
            buffer: Vec::new(),
            cursor: 0,
        }
    }

    fn fill(&mut self) {
        self.buffer.clear();
        self.cursor = 0;
        while self.buffer.is_empty() && self.lo < self.to {
            let lo = self.lo;
            let hi = (lo + SEGMENT).min(self.to);
            let mut composite = vec![false; (hi - lo) as usize];
            for &q in &self.base {
                if q * q >= hi {
                    break;
                }
                let mut start = lo.div_ceil(q) * q;
                if start < q * q {
                    start = q * q;
                }
                let mut m = start;
                while m < hi {
                    composite[(m - lo) as usize] = true;
                    m += q;
                }
            }
            for (idx, &c) in composite.iter().enumerate() {
                let n = lo + idx as u64;
                if !c && n >= 2 {
                    self.buffer.push(n);
                }
            }
            self.lo = hi;
        }
    }
}

impl Iterator for SegmentedPrimes {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.cursor >= self.buffer.len() {
            self.fill();
            if self.buffer.is_empty() {
                return None;
            }
        }
        let p = self.buffer[self.cursor];
        self.cursor += 1;
        Some(p)
    }
}
