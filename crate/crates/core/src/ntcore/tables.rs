//! Cached prime tables grown by segmented sieving.
//!
//! A [`CachedPrimeTables`] value is an immutable snapshot. Growing the table
//! produces a new snapshot; the process-wide registry swaps it in under a write
//! lock so readers holding an older `Arc` keep a consistent view.

use std::sync::{Arc, OnceLock, RwLock};

use rug::Float;

/// Working precision (bits) for the running θ and Li* sums.
pub const SUM_PRECISION: u32 = 192;

const SEGMENT: u64 = 1 << 18;

/// Primes up to `limit` with prefix data for π, θ and Li*.
#[derive(Debug, Clone)]
pub struct CachedPrimeTables {
    limit: u64,
    primes: Vec<u64>,
    /// θ(primes[i]) as an extended-precision running sum.
    theta_prefix: Vec<Float>,
    /// Li*(primes[i]) = Σ_{x=2}^{primes[i]} 1/log x.
    listar_prefix: Vec<Float>,
    // Sums carried up to `limit` so that extension resumes without rescanning.
    theta_tail: Float,
    listar_tail: Float,
}

impl CachedPrimeTables {
    /// Build a table complete up to `limit` (at least 2).
    pub fn new(limit: u64) -> Self {
        let mut t = CachedPrimeTables {
            limit: 1,
            primes: Vec::new(),
            theta_prefix: Vec::new(),
            listar_prefix: Vec::new(),
            theta_tail: Float::with_val(SUM_PRECISION, 0),
            listar_tail: Float::with_val(SUM_PRECISION, 0),
        };
        t.grow_to(limit.max(2));
        t
    }

    /// A new snapshot covering `limit`, sharing nothing mutable with `self`.
    pub fn extended(&self, limit: u64) -> Self {
        let mut t = self.clone();
        t.grow_to(limit);
        t
    }

    fn grow_to(&mut self, limit: u64) {
        if limit <= self.limit {
            return;
        }
        let base = simple_sieve(integer_sqrt(limit) + 1);
        let mut lo = self.limit + 1;
        while lo <= limit {
            let hi = (lo + SEGMENT - 1).min(limit);
            let seg = sieve_segment(lo, hi, &base);
            // Walk every integer for Li*, primes for θ.
            let mut next = seg.iter().copied().peekable();
            for x in lo..=hi {
                if x >= 2 {
                    let lx = Float::with_val(SUM_PRECISION, x).ln();
                    self.listar_tail += lx.recip();
                }
                if next.peek() == Some(&x) {
                    next.next();
                    self.theta_tail += Float::with_val(SUM_PRECISION, x).ln();
                    self.primes.push(x);
                    self.theta_prefix.push(self.theta_tail.clone());
                    self.listar_prefix.push(self.listar_tail.clone());
                }
            }
            lo = hi + 1;
        }
        self.limit = limit;
    }

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

    /// π(x) for x ≤ limit.
    pub fn pi(&self, x: u64) -> usize {
        assert!(x <= self.limit, "pi({x}) beyond table limit {}", self.limit);
        self.primes.partition_point(|&p| p <= x)
    }

    /// p_s with p_1 = 2, if the table holds it.
    pub fn nth(&self, s: usize) -> Option<u64> {
        s.checked_sub(1).and_then(|i| self.primes.get(i).copied())
    }

    /// Index (1-based) of the prime `p`, if `p` is a tabulated prime.
    pub fn index_of(&self, p: u64) -> Option<usize> {
        self.primes.binary_search(&p).ok().map(|i| i + 1)
    }

    /// θ(x) = Σ_{p ≤ x} log p.
    pub fn theta(&self, x: u64) -> Float {
        match self.pi(x) {
            0 => Float::with_val(SUM_PRECISION, 0),
            k => self.theta_prefix[k - 1].clone(),
        }
    }

    /// Li*(p) at a tabulated prime.
    pub fn listar_at_prime(&self, p: u64) -> Option<&Float> {
        self.primes
            .binary_search(&p)
            .ok()
            .map(|i| &self.listar_prefix[i])
    }
}

/// Largest r with r² ≤ n.
pub fn integer_sqrt(n: u64) -> u64 {
    let n = n as u128;
    let mut r = (n as f64).sqrt() as u128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r as u64
}

/// Plain Eratosthenes up to `n` inclusive.
pub fn simple_sieve(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j <= n {
            composite[j] = true;
            j += i;
        }
    }
    out
}

/// Primes in `[lo, hi]`, given all primes up to √hi.
pub fn sieve_segment(lo: u64, hi: u64, base: &[u64]) -> Vec<u64> {
    if hi < lo {
        return Vec::new();
    }
    let len = (hi - lo + 1) as usize;
    let mut composite = vec![false; len];
    for &b in base {
        if b * b > hi {
            break;
        }
        let start = (b * b).max(lo.div_ceil(b) * b);
        let mut j = start;
        while j <= hi {
            composite[(j - lo) as usize] = true;
            j += b;
        }
    }
    (0..len)
        .filter(|&i| !composite[i])
        .map(|i| lo + i as u64)
        .filter(|&x| x >= 2)
        .collect()
}

fn registry() -> &'static RwLock<Arc<CachedPrimeTables>> {
    static TABLES: OnceLock<RwLock<Arc<CachedPrimeTables>>> = OnceLock::new();
    TABLES.get_or_init(|| RwLock::new(Arc::new(CachedPrimeTables::new(1 << 16))))
}

/// Shared snapshot complete up to at least `limit`.
pub fn tables_covering(limit: u64) -> Arc<CachedPrimeTables> {
    {
        let current = registry().read().expect("prime table lock poisoned");
        if current.limit() >= limit {
            return Arc::clone(&current);
        }
    }
    let mut slot = registry().write().expect("prime table lock poisoned");
    if slot.limit() < limit {
        // Grow geometrically so repeated small requests do not resieve.
        let target = limit.max(slot.limit().saturating_mul(2));
        *slot = Arc::new(slot.extended(target));
    }
    Arc::clone(&slot)
}

/// Shared snapshot holding at least `count` primes.
pub fn tables_with_count(count: usize) -> Arc<CachedPrimeTables> {
    let mut t = tables_covering(0);
    while t.len() < count {
        let guess = estimate_nth_prime_bound(count).max(t.limit() * 2);
        t = tables_covering(guess);
    }
    t
}

fn estimate_nth_prime_bound(n: usize) -> u64 {
    if n < 6 {
        return 16;
    }
    let n = n as f64;
    (n * (n.ln() + n.ln().ln())).ceil() as u64 + 16
}
