//! Baillie–PSW probable-prime test.
//!
//! Composition: trial division by the primes below 1000, a strong Fermat test
//! to base 2, then a strong Lucas test with Selfridge's method A parameters
//! (D the first of 5, −7, 9, −11, … with Jacobi(D/n) = −1, P = 1, Q = (1 − D)/4).
//! Values below 2⁶⁴ take a machine-word path; the result is exact there.

use rug::{Assign, Integer};

/// Primes below 1000 used for trial division.
pub const TRIAL_PRIMES: [u32; 168] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307,
    311, 313, 317, 331, 337, 347, 349, 353, 359, 367, 373, 379, 383, 389, 397, 401, 409, 419, 421,
    431, 433, 439, 443, 449, 457, 461, 463, 467, 479, 487, 491, 499, 503, 509, 521, 523, 541, 547,
    557, 563, 569, 571, 577, 587, 593, 599, 601, 607, 613, 617, 619, 631, 641, 643, 647, 653, 659,
    661, 673, 677, 683, 691, 701, 709, 719, 727, 733, 739, 743, 751, 757, 761, 769, 773, 787, 797,
    809, 811, 821, 823, 827, 829, 839, 853, 857, 859, 863, 877, 881, 883, 887, 907, 911, 919, 929,
    937, 941, 947, 953, 967, 971, 977, 983, 991, 997,
];

// Stop searching for D and check for a square after this many tries.
const SQUARE_CHECK_AFTER: usize = 30;

/// BPSW probable-prime test on an arbitrary-precision natural.
pub fn is_probable_prime(n: &Integer) -> bool {
    if *n < 2 {
        return false;
    }
    if let Some(small) = n.to_u64() {
        return is_probable_prime_u64(small);
    }
    for &b in TRIAL_PRIMES.iter() {
        if n.is_divisible_u(b) {
            return false;
        }
    }
    strong_fermat_base2(n) && strong_lucas_selfridge(n)
}

/// Same composition on a machine word; exact for every u64.
pub fn is_probable_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &b in TRIAL_PRIMES.iter() {
        let b = b as u64;
        if n == b {
            return true;
        }
        if n.is_multiple_of(b) {
            return false;
        }
    }
    if n < 1_000_000 {
        return true;
    }
    strong_fermat_base2_u64(n) && strong_lucas_selfridge_u64(n)
}

/// Strong probable-prime test to base 2 for odd n > 2.
pub fn strong_fermat_base2(n: &Integer) -> bool {
    let n_minus_1 = Integer::from(n - 1u32);
    let s = n_minus_1.find_one(0).unwrap_or(0);
    let d = Integer::from(&n_minus_1 >> s);
    let mut x = Integer::from(2);
    x.pow_mod_mut(&d, n).expect("modulus is positive");
    if x == 1 || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x.square_mut();
        x %= n;
        if x == n_minus_1 {
            return true;
        }
        if x == 1 {
            return false;
        }
    }
    false
}

/// Selfridge method A: returns D, or `None` when n is shown composite
/// (a nontrivial gcd with D, or n a perfect square).
fn selfridge_d(n: &Integer) -> Option<i64> {
    let mut d: i64 = 5;
    let mut tries = 0;
    loop {
        let j = Integer::from(d).jacobi(n);
        if j == -1 {
            return Some(d);
        }
        if j == 0 && *n != d.unsigned_abs() {
            return None;
        }
        tries += 1;
        if tries == SQUARE_CHECK_AFTER && n.is_perfect_square() {
            return None;
        }
        d = if d > 0 { -(d + 2) } else { -d + 2 };
    }
}

fn halve_mod(x: &mut Integer, n: &Integer) {
    if x.is_odd() {
        *x += n;
    }
    *x >>= 1;
}

/// Strong Lucas probable-prime test with Selfridge parameters, odd n > 2.
pub fn strong_lucas_selfridge(n: &Integer) -> bool {
    let Some(d) = selfridge_d(n) else {
        return false;
    };
    // P = 1, Q = (1 − D)/4.
    let q = (1 - d) / 4;
    let n_plus_1 = Integer::from(n + 1u32);
    let s = n_plus_1.find_one(0).unwrap_or(0);
    let k = Integer::from(&n_plus_1 >> s);

    let big_d = Integer::from(d);
    let mut u = Integer::from(1); // U_1
    let mut v = Integer::from(1); // V_1 = P
    let mut qk = Integer::from(q); // Q^1
    qk %= n;
    if qk < 0 {
        qk += n;
    }
    let q_mod = qk.clone();
    let mut tmp = Integer::new();

    let bits = k.significant_bits();
    for i in (0..bits - 1).rev() {
        // Doubling: U_2k = U_k V_k, V_2k = V_k² − 2Q^k.
        u *= &v;
        u %= n;
        v.square_mut();
        tmp.assign(&qk << 1);
        v -= &tmp;
        v %= n;
        qk.square_mut();
        qk %= n;
        if k.get_bit(i) {
            // U_{k+1} = (U + V)/2, V_{k+1} = (D U + V)/2 with P = 1.
            tmp.assign(&big_d * &u);
            u += &v;
            halve_mod(&mut u, n);
            v += &tmp;
            halve_mod(&mut v, n);
            qk *= &q_mod;
            qk %= n;
        }
        if u < 0 {
            u += n;
        }
        if v < 0 {
            v += n;
        }
    }
    u %= n;
    v %= n;
    if u == 0 || v == 0 {
        return true;
    }
    for _ in 1..s {
        v.square_mut();
        tmp.assign(&qk << 1);
        v -= &tmp;
        v %= n;
        if v < 0 {
            v += n;
        }
        if v == 0 {
            return true;
        }
        qk.square_mut();
        qk %= n;
    }
    false
}

#[inline]
fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, n: u64) -> u64 {
    let mut acc = 1 % n;
    base %= n;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, n);
        }
        base = mul_mod(base, base, n);
        exp >>= 1;
    }
    acc
}

fn strong_fermat_base2_u64(n: u64) -> bool {
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let mut x = pow_mod(2, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
        if x == 1 {
            return false;
        }
    }
    false
}

/// Jacobi symbol (d/n) for odd positive n.
fn jacobi_small(d: i64, n: u64) -> i32 {
    let mut a = (d as i128).rem_euclid(n as i128) as u64;
    let mut m = n;
    let mut result = 1;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if matches!(m % 8, 3 | 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            result = -result;
        }
        a %= m;
    }
    if m == 1 {
        result
    } else {
        0
    }
}

fn is_square_u64(n: u64) -> bool {
    let r = super::tables::integer_sqrt(n);
    r * r == n
}

fn strong_lucas_selfridge_u64(n: u64) -> bool {
    let mut d: i64 = 5;
    let mut tries = 0;
    loop {
        let j = jacobi_small(d, n);
        if j == -1 {
            break;
        }
        if j == 0 && d.unsigned_abs() != n {
            return false;
        }
        tries += 1;
        if tries == SQUARE_CHECK_AFTER && is_square_u64(n) {
            return false;
        }
        d = if d > 0 { -(d + 2) } else { -d + 2 };
    }
    let to_mod = |x: i64| -> u64 { (x as i128).rem_euclid(n as i128) as u64 };
    let q_mod = to_mod((1 - d) / 4);
    let d_mod = to_mod(d);
    let half = |x: u64| -> u64 {
        if x.is_multiple_of(2) {
            x / 2
        } else {
            ((x as u128 + n as u128) / 2) as u64
        }
    };
    let add = |a: u64, b: u64| -> u64 { ((a as u128 + b as u128) % n as u128) as u64 };
    let sub = |a: u64, b: u64| -> u64 {
        if a >= b {
            a - b
        } else {
            (a as u128 + n as u128 - b as u128) as u64
        }
    };

    let n1 = n as u128 + 1;
    let s = n1.trailing_zeros();
    let k = n1 >> s;
    let bits = 128 - k.leading_zeros();
    let (mut u, mut v, mut qk) = (1u64, 1u64, q_mod);
    for i in (0..bits - 1).rev() {
        u = mul_mod(u, v, n);
        v = sub(mul_mod(v, v, n), add(qk, qk));
        qk = mul_mod(qk, qk, n);
        if (k >> i) & 1 == 1 {
            let du = mul_mod(d_mod, u, n);
            u = half(add(u, v));
            v = half(add(du, v));
            qk = mul_mod(qk, q_mod, n);
        }
    }
    if u == 0 || v == 0 {
        return true;
    }
    for _ in 1..s {
        v = sub(mul_mod(v, v, n), add(qk, qk));
        if v == 0 {
            return true;
        }
        qk = mul_mod(qk, qk, n);
    }
    false
}
