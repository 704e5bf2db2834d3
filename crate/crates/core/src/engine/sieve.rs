//! Window sieve for one stage: residue stepping for primes below the next
//! stage prime P and single-hit marking for primes in (P, P²).

use std::sync::Arc;

use gmp_mpfr_sys::gmp;
use rug::Integer;

use crate::ntcore::{is_probable_prime, tables_covering, CachedPrimeTables};

/// Remainder of a non-negative integer by a word-sized modulus.
pub(crate) fn mod_word(n: &Integer, m: u64) -> u64 {
    debug_assert!(*n >= 0 && m > 0);
    // SAFETY: `n` is a valid initialized mpz and m is nonzero.
    unsafe { gmp::mpz_fdiv_ui(n.as_raw(), m as _) as u64 }
}

/// Sieving primes for windows belonging to the stage with prime `p`.
#[derive(Debug, Clone)]
pub struct StageSieve {
    p: u64,
    tables: Arc<CachedPrimeTables>,
    // Index range of the sieving primes inside `tables.primes()`.
    count: usize,
    skip: Option<usize>,
}

impl StageSieve {
    /// Sieve for child windows at stage prime `p` (every prime b < p², b ≠ p).
    pub fn new(p: u64) -> Self {
        let bound = p.saturating_mul(p);
        let tables = tables_covering(bound);
        let count = tables.pi(bound.saturating_sub(1));
        let skip = tables.primes()[..count].binary_search(&p).ok();
        StageSieve {
            p,
            tables,
            count,
            skip,
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.tables.primes()[..self.count]
            .iter()
            .enumerate()
            .filter(move |&(i, _)| Some(i) != self.skip)
            .map(|(_, &b)| b)
    }

    /// Marks `keep[r] = false` for every r with b | lo + r and lo + r ≠ b.
    pub fn sieve(&self, lo: &Integer, keep: &mut [bool]) {
        let len = keep.len() as u64;
        let lo_small = lo.to_u64();
        let mut it = self.primes().peekable();
        while let Some(b1) = it.next() {
            // Two primes below 2³² share one multi-limb reduction.
            let b2 = match it.peek() {
                Some(&b2) if b1 < (1 << 32) && b2 < (1 << 32) => it.next(),
                _ => None,
            };
            let m = mod_word(lo, b1 * b2.unwrap_or(1));
            for b in std::iter::once(b1).chain(b2) {
                let first = (b - m % b) % b;
                let own = lo_small.and_then(|l| b.checked_sub(l));
                let mut r = first;
                while r < len {
                    if Some(r) != own {
                        keep[r as usize] = false;
                    }
                    r += b;
                }
            }
        }
    }

    /// Probable primes in [lo, lo + len) apart from the offsets in `exclude`.
    pub fn primes_in(&self, lo: &Integer, len: usize, exclude: Option<usize>) -> Vec<Integer> {
        let mut keep = vec![true; len];
        if let Some(e) = exclude {
            keep[e] = false;
        }
        self.sieve(lo, &mut keep);
        keep.iter()
            .enumerate()
            .filter(|&(_, &k)| k)
            .map(|(r, _)| Integer::from(lo + r as u64))
            .filter(is_probable_prime)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_remainder() {
        let n = Integer::from(Integer::u_pow_u(10, 40));
        let m = 4_294_967_291u64 * 4_294_967_279;
        assert_eq!(mod_word(&n, m), Integer::from(&n % m).to_u64().unwrap());
        assert_eq!(mod_word(&Integer::from(17), 5), 2);
    }

    #[test]
    fn small_windows_keep_the_sieving_primes() {
        let s = StageSieve::new(5);
        // [1, 25) holds every prime below 25; 5 itself is not a sieving prime.
        let got: Vec<u64> = s
            .primes_in(&Integer::from(1), 24, None)
            .iter()
            .map(|q| q.to_u64().unwrap())
            .collect();
        assert_eq!(got, vec![2, 3, 5, 7, 11, 13, 17, 19, 23]);
    }

    #[test]
    fn sieve_never_removes_a_prime() {
        for p in [3u64, 7, 23, 101] {
            let s = StageSieve::new(p);
            for lo in [1u64, 2, 17, 1000, 99_991] {
                let len = (p - 1) as usize;
                let lo_big = Integer::from(lo);
                let mut keep = vec![true; len];
                s.sieve(&lo_big, &mut keep);
                for r in 0..len {
                    let x = Integer::from(lo + r as u64);
                    if is_probable_prime(&x) {
                        assert!(keep[r], "{x} removed at p = {p}");
                    }
                }
            }
        }
    }
}
