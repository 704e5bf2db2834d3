//! Densities of integers coprime to k# in the short interval that follows a
//! number coprime to k#, and the correction factor ψ(p) they induce.
//!
//! For a window (t, t + len] with gcd(t, k#) = 1 the residue of t modulo each
//! odd prime b ≤ k is uniform over the nonzero classes, so position t + j is
//! divisible by b with probability 1/(b − 1) unless b | j (then never), and
//! t + j is even exactly when j is odd. Summing over even j and expanding the
//! product over squarefree odd v gives
//!
//! Φ(len, k) = Π_{3 ≤ u ≤ k} (1 − 1/(u − 1)) · Σ_v ⌊len / 2v⌋ / Π_{r | v} (r − 2).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{OnceLock, RwLock};

use rug::{Integer, Rational};

use crate::decimal::{to_fixed, Rounding};
use crate::error::{Error, Result};
use crate::ntcore::{
    is_probable_prime_u64, next_prime_after, prev_prime_before, simple_sieve, tables_covering,
    w_density,
};

fn odd_primes_up_to(k: u64) -> Vec<u64> {
    tables_covering(k)
        .primes()
        .iter()
        .copied()
        .filter(|&u| u >= 3 && u <= k)
        .collect()
}

/// Expected number of integers coprime to k# among the `len` integers that
/// follow a number coprime to k#. Exact.
pub fn phi_after_coprime(len: u64, k: u64) -> Result<Rational> {
    if !is_probable_prime_u64(k) {
        return Err(Error::NotPrime(k));
    }
    if k <= 2 || k > len {
        return Err(Error::CutoffOutOfRange { k, upper: len + 1 });
    }
    Ok(phi_unchecked(len, k))
}

fn phi_unchecked(len: u64, k: u64) -> Rational {
    let odd = odd_primes_up_to(k);
    let half = len / 2;
    let mut factor = Rational::from(1);
    for &u in &odd {
        factor *= Rational::from((u - 2, u - 1));
    }
    let mut sum = Rational::new();
    squarefree_sum(&odd, 0, 1, &Integer::from(1), half, &mut sum);
    factor * sum
}

// Adds ⌊half / v⌋ / Π(r − 2) for v = current · (products of odd[start..]).
fn squarefree_sum(
    odd: &[u64],
    start: usize,
    v: u64,
    weight: &Integer,
    half: u64,
    acc: &mut Rational,
) {
    *acc += Rational::from((Integer::from(half / v), weight.clone()));
    for i in start..odd.len() {
        let u = odd[i];
        let next = match v.checked_mul(u) {
            Some(n) if n <= half => n,
            _ => break,
        };
        let w = Integer::from(weight * (u - 2));
        squarefree_sum(odd, i + 1, next, &w, half, acc);
    }
}

/// The Hardy–Littlewood offset a for an interval of `len` = p − 1 integers:
/// a = 2 Σ_{x=1}^{len/2} (Π_{r odd prime | x} (r − 1)/(r − 2) − 1). Exact.
///
/// Takes the interval length rather than p so that even lengths whose
/// successor is composite (20, 50, …) can be tabulated too.
pub fn hl_offset_a(len: u64) -> Rational {
    let half = len / 2;
    let mut sum = Rational::new();
    for x in 1..=half {
        let mut f = Rational::from(1);
        for r in odd_prime_factors(x) {
            f *= Rational::from((r - 1, r - 2));
        }
        sum += f - 1u32;
    }
    sum * 2u32
}

fn odd_prime_factors(mut x: u64) -> Vec<u64> {
    let mut out = Vec::new();
    while x.is_multiple_of(2) && x > 0 {
        x /= 2;
    }
    let mut f = 3;
    while f * f <= x {
        if x.is_multiple_of(f) {
            out.push(f);
            while x.is_multiple_of(f) {
                x /= f;
            }
        }
        f += 2;
    }
    if x > 1 {
        out.push(x);
    }
    out
}

/// Floating-point a(len) for all even lengths up to a bound, from a
/// smallest-prime-factor sieve.
#[derive(Debug, Clone)]
pub struct HlOffsetTable {
    // prefix[h] = Σ_{x=1}^{h} (Π (r−1)/(r−2) − 1)
    prefix: Vec<f64>,
}

impl HlOffsetTable {
    pub fn new(max_len: u64) -> Self {
        let half = (max_len / 2) as usize;
        let mut mult = vec![1.0f64; half + 1];
        let mut composite = vec![false; half + 1];
        for r in 3..=half {
            if composite[r] || r % 2 == 0 {
                continue;
            }
            let f = (r as f64 - 1.0) / (r as f64 - 2.0);
            let mut m = r;
            while m <= half {
                if m != r {
                    composite[m] = true;
                }
                mult[m] *= f;
                m += r;
            }
        }
        let mut prefix = vec![0.0; half + 1];
        let mut comp = 0.0f64;
        let mut acc = 0.0f64;
        for x in 1..=half {
            // Kahan summation
            let y = (mult[x] - 1.0) - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            prefix[x] = acc;
        }
        HlOffsetTable { prefix }
    }

    pub fn max_len(&self) -> u64 {
        2 * (self.prefix.len() as u64 - 1)
    }

    pub fn a(&self, len: u64) -> f64 {
        2.0 * self.prefix[(len / 2) as usize]
    }
}

fn shared_offset_table(min_len: u64) -> std::sync::Arc<HlOffsetTable> {
    static TABLE: OnceLock<RwLock<std::sync::Arc<HlOffsetTable>>> = OnceLock::new();
    let slot = TABLE.get_or_init(|| RwLock::new(std::sync::Arc::new(HlOffsetTable::new(1 << 16))));
    {
        let t = slot.read().expect("offset table lock");
        if t.max_len() >= min_len {
            return t.clone();
        }
    }
    let mut w = slot.write().expect("offset table lock");
    if w.max_len() < min_len {
        *w = std::sync::Arc::new(HlOffsetTable::new(min_len.max(2 * w.max_len())));
    }
    w.clone()
}

/// a(len) in double precision, from the shared table.
pub fn hl_offset_a_f64(len: u64) -> f64 {
    shared_offset_table(len).a(len)
}

/// ψ(p) = Φ(p − 1, k) / (W(k) (p − 2)) at a finite cutoff.
pub fn psi(p: u64, k: u64) -> Result<f64> {
    if !is_probable_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    let phi = phi_after_coprime(p - 1, k)?;
    let ratio = phi / (w_density(k) * Integer::from(p - 2));
    Ok(ratio.to_f64())
}

/// The k → ∞ value C₂ (p − 1 + a) / (p − 2).
pub fn psi_limit(p: u64) -> f64 {
    assert!(p >= 3, "psi_limit needs p >= 3");
    let c2 = twin_prime_constant();
    c2 * ((p - 1) as f64 + hl_offset_a_f64(p - 1)) / (p - 2) as f64
}

/// Large-p approximation 1 − log p / (2p).
pub fn psi_asymptotic(p: u64) -> f64 {
    let p = p as f64;
    1.0 - p.ln() / (2.0 * p)
}

/// Smallest prime above max(log p, 13), pulled below p when p is small.
/// `None` for p ≤ 3 where no admissible cutoff exists.
pub fn default_cutoff(p: u64) -> Option<u64> {
    let floor = (p as f64).ln().max(13.0);
    let k = next_prime_after(floor.floor() as u64);
    if k < p {
        return Some(k);
    }
    prev_prime_before(p).filter(|&k| k > 2)
}

/// Which ψ a heuristic uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsiPolicy {
    /// ψ = 1: no correction.
    Unity,
    /// Fixed cutoff k (clamped below p when needed).
    Cutoff(u64),
    /// [`default_cutoff`].
    DefaultCutoff,
    /// The k → ∞ value [`psi_limit`].
    #[default]
    Limit,
}

impl PsiPolicy {
    pub fn eval(self, p: u64) -> f64 {
        match self {
            PsiPolicy::Unity => 1.0,
            PsiPolicy::Limit => psi_limit(p),
            PsiPolicy::DefaultCutoff => match default_cutoff(p) {
                Some(k) => cached_psi(p, k),
                None => psi_limit(p),
            },
            PsiPolicy::Cutoff(k) => {
                let k = if k < p {
                    Some(k)
                } else {
                    prev_prime_before(p).filter(|&k| k > 2)
                };
                match k {
                    Some(k) => cached_psi(p, k),
                    None => psi_limit(p),
                }
            }
        }
    }
}

fn cached_psi(p: u64, k: u64) -> f64 {
    static CACHE: OnceLock<RwLock<HashMap<(u64, u64), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(&v) = cache.read().expect("psi cache").get(&(p, k)) {
        return v;
    }
    let v = psi(p, k).expect("cutoff validated by caller");
    cache.write().expect("psi cache").insert((p, k), v);
    v
}

/// Density parameters at a fixed cutoff, with a cache of ψ values.
#[derive(Debug)]
pub struct DensityModel {
    k: u64,
    w_k: Rational,
    c2: f64,
    cache: RwLock<HashMap<u64, f64>>,
}

impl DensityModel {
    pub fn new(k: u64) -> Result<Self> {
        if k < 3 {
            return Err(Error::CutoffOutOfRange { k, upper: u64::MAX });
        }
        if !is_probable_prime_u64(k) {
            return Err(Error::NotPrime(k));
        }
        Ok(DensityModel {
            k,
            w_k: w_density(k),
            c2: twin_prime_constant(),
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn w_k(&self) -> &Rational {
        &self.w_k
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn phi(&self, len: u64) -> Result<Rational> {
        phi_after_coprime(len, self.k)
    }

    /// ψ(p) at this model's cutoff. Cached.
    pub fn psi(&self, p: u64) -> Result<f64> {
        if let Some(&v) = self.cache.read().expect("psi cache").get(&p) {
            return Ok(v);
        }
        let phi = self.phi(p - 1)?;
        let v = (phi / (self.w_k.clone() * Integer::from(p - 2))).to_f64();
        self.cache.write().expect("psi cache").insert(p, v);
        Ok(v)
    }

    /// Adjusted interval length C₂ (p − 1 + a).
    pub fn adjusted_length_limit(&self, p: u64) -> f64 {
        self.c2 * ((p - 1) as f64 + hl_offset_a_f64(p - 1))
    }
}

/// One row of the divisibility table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table4Row {
    /// `None` for the random-start row.
    pub offset: Option<u64>,
    pub primes: Vec<u64>,
    /// Probability that the position is divisible by each prime.
    pub divisible: Vec<Rational>,
    pub coprime: Rational,
    pub cumulative: Rational,
}

/// The random-start row followed by rows j = 1..=j_max after a number
/// coprime to k#.
pub fn table4(j_max: u64, k: u64) -> Vec<Table4Row> {
    let primes: Vec<u64> = tables_covering(k)
        .primes()
        .iter()
        .copied()
        .take_while(|&b| b <= k)
        .collect();
    let mut rows = Vec::with_capacity(j_max as usize + 1);
    let w = w_density(k);
    rows.push(Table4Row {
        offset: None,
        primes: primes.clone(),
        divisible: primes.iter().map(|&b| Rational::from((1, b))).collect(),
        cumulative: w.clone() * Integer::from(j_max),
        coprime: w,
    });
    let mut cumulative = Rational::new();
    for j in 1..=j_max {
        let divisible: Vec<Rational> = primes
            .iter()
            .map(|&b| {
                if b == 2 {
                    Rational::from(u32::from(j % 2 == 1))
                } else if j % b == 0 {
                    Rational::new()
                } else {
                    Rational::from((1, b - 1))
                }
            })
            .collect();
        let coprime = divisible
            .iter()
            .fold(Rational::from(1), |acc, d| acc * (Rational::from(1) - d));
        cumulative += &coprime;
        rows.push(Table4Row {
            offset: Some(j),
            primes: primes.clone(),
            divisible,
            coprime,
            cumulative: cumulative.clone(),
        });
    }
    rows
}

fn percent(r: &Rational) -> String {
    to_fixed(&(r.clone() * 100u32), 0, Rounding::HalfUp) + "%"
}

/// CSV with the divisibility table's columns.
pub fn table4_csv(rows: &[Table4Row]) -> String {
    let mut out = String::from("number");
    if let Some(first) = rows.first() {
        for b in &first.primes {
            let _ = write!(out, ",div_{b}");
        }
    }
    out.push_str(",not_divisible,interval_sum\n");
    for row in rows {
        match row.offset {
            Some(j) => {
                let _ = write!(out, "prime +{j}");
            }
            None => {
                let _ = write!(out, "random +[1..{}]", rows.len() - 1);
            }
        }
        for d in &row.divisible {
            let _ = write!(out, ",{}", percent(d));
        }
        let _ = writeln!(
            out,
            ",{},{}",
            percent(&row.coprime),
            to_fixed(&row.cumulative, 2, Rounding::HalfUp)
        );
    }
    out
}

/// CSV `p_minus_1,a` for the given even lengths.
pub fn table5_csv(lengths: &[u64]) -> String {
    let mut out = String::from("p_minus_1,a\n");
    for &len in lengths {
        let _ = writeln!(out, "{len},{}", hl_offset_a(len));
    }
    out
}

/// The even lengths tabulated for a.
pub const TABLE5_LENGTHS: [u64; 12] = [2, 4, 6, 8, 10, 12, 20, 30, 40, 50, 100, 150];

/// Π over odd primes u ≤ cutoff of (1 − 1/(u − 1)²), exact; for small cutoffs.
pub fn twin_prime_partial_exact(cutoff: u64) -> Rational {
    odd_primes_up_to(cutoff)
        .iter()
        .fold(Rational::from(1), |acc, &u| {
            let d = Integer::from((u - 1) * (u - 1));
            acc * Rational::from((Integer::from(&d - 1u32), d))
        })
}

/// Π over odd primes u ≤ cutoff of (1 − 1/(u − 1)²) in double precision.
pub fn twin_prime_partial(cutoff: u64) -> f64 {
    let mut log_sum = 0.0f64;
    let mut comp = 0.0f64;
    for u in simple_sieve(cutoff).into_iter().skip(1) {
        let x = 1.0 / ((u - 1) as f64 * (u - 1) as f64);
        let y = (-x).ln_1p() - comp;
        let t = log_sum + y;
        comp = (t - log_sum) - y;
        log_sum = t;
    }
    log_sum.exp()
}

/// Partial product up to `cutoff` times an estimate of the tail.
///
/// log(1 − 1/(u − 1)²) = −Σ_{n≥2} (2ⁿ − 2)/n · u⁻ⁿ, and the prime sum
/// Σ_{u > X} u⁻ⁿ is replaced by ∫_X^∞ t⁻ⁿ / log t dt = E₁((n − 1) log X).
pub fn twin_prime_constant_with(cutoff: u64) -> f64 {
    let partial = twin_prime_partial(cutoff);
    let lx = (cutoff as f64).ln();
    let mut tail = 0.0;
    for n in 2..12 {
        let coeff = (2f64.powi(n) - 2.0) / n as f64;
        let term = coeff * exp_integral_e1((n - 1) as f64 * lx);
        tail += term;
        if term < 1e-22 {
            break;
        }
    }
    partial * (-tail).exp()
}

/// C₂ = 0.6601618158…, computed once.
pub fn twin_prime_constant() -> f64 {
    static C2: OnceLock<f64> = OnceLock::new();
    *C2.get_or_init(|| twin_prime_constant_with(10_000_000))
}

/// Exponential integral E₁(x) for x > 0.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0);
    if x <= 1.0 {
        // Power series: −γ − ln x − Σ (−x)^k / (k·k!)
        let euler_gamma = 0.577_215_664_901_532_9;
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        -euler_gamma - x.ln() - sum
    } else {
        // Continued fraction, modified Lentz.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}
