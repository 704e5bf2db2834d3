//! Primality and the elementary prime functions: π, θ, Li*, W and primorials.

mod bpsw;
mod tables;

pub use bpsw::{
    is_probable_prime, is_probable_prime_u64, strong_fermat_base2, strong_lucas_selfridge,
    TRIAL_PRIMES,
};
pub use tables::{
    integer_sqrt, sieve_segment, simple_sieve, tables_covering, tables_with_count,
    CachedPrimeTables, SUM_PRECISION,
};

use rug::{Float, Integer, Rational};

/// The constants tied to log y ≈ 0.23 that appear in the size estimate
/// log q ≈ θ(p) + 0.23 and the survival inequality θ(p) − 0.77.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogYOffset(pub f64);

impl LogYOffset {
    /// The rounded constant 0.23.
    pub const ROUNDED: LogYOffset = LogYOffset(0.23);

    /// log of the limiting constant 1.2541961015780119…
    pub fn precise() -> LogYOffset {
        LogYOffset(1.254_196_101_578_011_9_f64.ln())
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// 1 − log y.
    pub fn complement(self) -> f64 {
        1.0 - self.0
    }
}

impl Default for LogYOffset {
    fn default() -> Self {
        LogYOffset::ROUNDED
    }
}

/// Product of all primes ≤ p; 1 for p < 2.
pub fn primorial(p: u64) -> Integer {
    let t = tables_covering(p);
    let mut acc = Integer::from(1);
    for &q in t.primes().iter().take_while(|&&q| q <= p) {
        acc *= q;
    }
    acc
}

/// p_s, with p_1 = 2.
///
/// # Panics
/// If `s` is zero.
pub fn nth_prime(s: usize) -> u64 {
    assert!(s >= 1, "stage indices start at 1");
    tables_with_count(s)
        .nth(s)
        .expect("table grown to hold p_s")
}

/// 1-based index of a prime, i.e. π(p) for prime p.
pub fn prime_index(p: u64) -> Option<usize> {
    tables_covering(p).index_of(p)
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime_after(n: u64) -> u64 {
    let mut limit = n.saturating_mul(2).max(16);
    loop {
        let t = tables_covering(limit);
        let i = t.pi(n);
        if let Some(&p) = t.primes().get(i) {
            return p;
        }
        limit *= 2;
    }
}

/// Largest prime strictly less than `n`, if any.
pub fn prev_prime_before(n: u64) -> Option<u64> {
    if n <= 2 {
        return None;
    }
    let t = tables_covering(n);
    let i = t.pi(n - 1);
    i.checked_sub(1).map(|k| t.primes()[k])
}

/// θ(p) = Σ_{q ≤ p} log q in extended precision.
pub fn theta(p: u64) -> Float {
    tables_covering(p).theta(p)
}

/// θ(p) rounded to double precision.
pub fn theta_f64(p: u64) -> f64 {
    theta(p).to_f64()
}

/// Li*(p) = Σ_{x=2}^{p} 1/log x, for any p ≥ 2.
pub fn li_star(p: u64) -> Float {
    let t = tables_covering(p);
    // Start from the nearest tabulated prime at or below p.
    let k = t.pi(p);
    let (mut acc, from) = match k {
        0 => (Float::with_val(SUM_PRECISION, 0), 2),
        _ => {
            let q = t.primes()[k - 1];
            (t.listar_at_prime(q).cloned().expect("tabulated"), q + 1)
        }
    };
    for x in from..=p {
        acc += Float::with_val(SUM_PRECISION, x).ln().recip();
    }
    acc
}

/// One evaluation of the Li*/π expression for p − θ(p):
/// (log p)(Li*(p) − π(p)) + 1 − Σ_{x=2}^{p−1} log((x+1)/x)(Li*(x) − π(x)).
pub fn theta_gap_from_li_pi(p: u64) -> Float {
    assert!(p >= 3, "defined for p >= 3");
    theta_gap_series(p)
        .pop()
        .map(|(_, v)| v)
        .expect("series reaches p")
}

/// The same expression evaluated at every x in 3..=limit in one pass.
pub fn theta_gap_series(limit: u64) -> Vec<(u64, Float)> {
    let prec = SUM_PRECISION;
    let t = tables_covering(limit);
    let mut out = Vec::with_capacity(limit.saturating_sub(2) as usize);
    let mut listar = Float::with_val(prec, 0);
    let mut pi: u64 = 0;
    // Σ_{x=2}^{n−1} log((x+1)/x)(Li*(x) − π(x)), built as n advances.
    let mut tail = Float::with_val(prec, 0);
    let mut prime_iter = t.primes().iter().copied().peekable();
    for x in 2..=limit {
        let log_x = Float::with_val(prec, x).ln();
        listar += log_x.clone().recip();
        if prime_iter.peek() == Some(&x) {
            prime_iter.next();
            pi += 1;
        }
        let gap = Float::with_val(prec, &listar - pi);
        if x >= 3 {
            let rhs = Float::with_val(prec, &log_x * &gap) + 1u32 - &tail;
            out.push((x, rhs));
        }
        // log((x+1)/x) = log(x+1) − log x
        let log_next = Float::with_val(prec, x + 1).ln();
        tail += Float::with_val(prec, &log_next - &log_x) * gap;
    }
    out
}

/// W(k) = Π_{u prime ≤ k} (1 − 1/u), exact.
pub fn w_density(k: u64) -> Rational {
    let t = tables_covering(k);
    let mut num = Integer::from(1);
    let mut den = Integer::from(1);
    for &u in t.primes().iter().take_while(|&&u| u <= k) {
        num *= u - 1;
        den *= u;
    }
    Rational::from((num, den))
}

/// W(k) · k#, the numerator before reduction: Π (u − 1).
pub fn w_density_numerator(k: u64) -> Integer {
    let t = tables_covering(k);
    t.primes()
        .iter()
        .take_while(|&&u| u <= k)
        .fold(Integer::from(1), |acc, &u| acc * (u - 1))
}

/// (p − 1)/(θ(p) − (1 − log y)) > 1, the break-even condition for one
/// child on average.
pub fn survival_inequality(p: u64) -> bool {
    survival_inequality_with(p, LogYOffset::default())
}

pub fn survival_inequality_with(p: u64, offset: LogYOffset) -> bool {
    let denom = theta_f64(p) - offset.complement();
    denom <= 0.0 || (p as f64 - 1.0) / denom > 1.0
}
