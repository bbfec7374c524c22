//! Number-theoretic transform over the prime `2^64 - 2^32 + 1`, used for
//! exact convolutions of small non-negative integer sequences.

pub const MODULUS: u64 = 0xFFFF_FFFF_0000_0001;
const EPSILON: u64 = 0xFFFF_FFFF;
const GENERATOR: u64 = 7;
const TWO_ADICITY: u32 = 32;

#[inline]
fn reduce128(x: u128) -> u64 {
    let lo = x as u64;
    let hi = (x >> 64) as u64;
    let hi_hi = hi >> 32;
    let hi_lo = hi & EPSILON;
    // 2^64 ≡ 2^32 - 1 and 2^96 ≡ -1
    let (mut t0, borrow) = lo.overflowing_sub(hi_hi);
    if borrow {
        t0 = t0.wrapping_sub(EPSILON);
    }
    let t1 = hi_lo * EPSILON;
    let (mut res, carry) = t0.overflowing_add(t1);
    if carry {
        res = res.wrapping_add(EPSILON);
    }
    if res >= MODULUS {
        res - MODULUS
    } else {
        res
    }
}

#[inline]
fn mul(a: u64, b: u64) -> u64 {
    reduce128(a as u128 * b as u128)
}

#[inline]
fn add(a: u64, b: u64) -> u64 {
    let (s, carry) = a.overflowing_add(b);
    let s = if carry { s.wrapping_add(EPSILON) } else { s };
    if s >= MODULUS {
        s - MODULUS
    } else {
        s
    }
}

#[inline]
fn sub(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a.wrapping_sub(b).wrapping_add(MODULUS)
    }
}

fn pow(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul(acc, base);
        }
        base = mul(base, base);
        exp >>= 1;
    }
    acc
}

fn transform(values: &mut [u64], invert: bool) {
    let n = values.len();
    assert!(n.is_power_of_two() && n.trailing_zeros() <= TWO_ADICITY);
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            values.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut root = pow(GENERATOR, (MODULUS - 1) / len as u64);
        if invert {
            root = pow(root, MODULUS - 2);
        }
        let half = len / 2;
        let mut twiddles = Vec::with_capacity(half);
        let mut w = 1;
        for _ in 0..half {
            twiddles.push(w);
            w = mul(w, root);
        }
        for chunk in values.chunks_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((x, y), &w) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let u = *x;
                let v = mul(*y, w);
                *x = add(u, v);
                *y = sub(u, v);
            }
        }
        len <<= 1;
    }
    if invert {
        let n_inv = pow(n as u64, MODULUS - 2);
        for x in values.iter_mut() {
            *x = mul(*x, n_inv);
        }
    }
}

/// Cyclic convolution of length `size` (a power of two). The result is
/// exact as long as every true output is below [`MODULUS`].
pub fn cyclic_convolution(a: &[u64], b: &[u64], size: usize) -> Vec<u64> {
    assert!(a.len() <= size && b.len() <= size);
    let mut fa = vec![0u64; size];
    let mut fb = vec![0u64; size];
    fa[..a.len()].copy_from_slice(a);
    fb[..b.len()].copy_from_slice(b);
    transform(&mut fa, false);
    transform(&mut fb, false);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = mul(*x, *y);
    }
    transform(&mut fa, true);
    fa
}
