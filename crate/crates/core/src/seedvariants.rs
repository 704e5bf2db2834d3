//! Side games: primorial chains p#·m − 1, semi-sequence scans and
//! power-tower seeds ⌊A^(cⁿ)⌋.

use std::cmp::Ordering;

use rayon::prelude::*;
use rug::float::Round;
use rug::ops::MulAssignRound;
use rug::{Float, Integer, Rational};

use crate::decimal::{parse_decimal, to_fixed, Rounding};
use crate::engine::{
    children, seed, Engine, NullSink, RunOutcome, StageSieve, StageState, VariantRule,
};
use crate::ntcore::{is_probable_prime, is_probable_prime_u64, next_prime_after, simple_sieve};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Primorial chains

/// Smallest multiplier `m` making p#·m − 1 prime for every prime p ≤ r.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainRecord {
    pub r: u64,
    pub m: u64,
}

impl ChainRecord {
    /// f(0) = m − 1, f(s + 1) = (f(s) + 1)·p_s − 1, for p_s ≤ r.
    pub fn chain(&self) -> Vec<Integer> {
        let mut f = Integer::from(self.m) - 1u32;
        let mut out = vec![f.clone()];
        let mut p = 2;
        while p <= self.r {
            f = (f + 1u32) * p - 1u32;
            out.push(f.clone());
            p = next_prime_after(p);
        }
        out
    }

    /// Every chain member after f(0) is a probable prime.
    pub fn verify(&self) -> bool {
        self.chain()[1..].iter().all(is_probable_prime)
    }
}

/// Result of a capped chain search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSearch {
    pub records: Vec<ChainRecord>,
    /// False when the cap was hit before every r ≤ r_max was resolved.
    pub complete: bool,
    /// First multiplier not yet examined.
    pub next_m: u64,
}

impl ChainSearch {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,m\n");
        for rec in &self.records {
            s.push_str(&format!("{},{}\n", rec.r, rec.m));
        }
        s
    }
}

const CHAIN_SIEVE_BOUND: u64 = 1 << 16;
const CHAIN_BLOCK: u64 = 1 << 16;

fn inverse_mod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| t0.rem_euclid(m as i128) as u64)
}

// One excluded residue class: m ≡ residue (mod b) makes P·m − 1 divisible by b,
// except at m = spare where P·m − 1 = b itself.
struct Exclusion {
    b: u64,
    residue: u64,
    spare: Option<u64>,
}

struct ChainPlan {
    primorials: Vec<u128>,
    exclusions: Vec<Exclusion>,
}

impl ChainPlan {
    fn new(primes: &[u64], sieve_primes: &[u64]) -> Self {
        let mut primorials = Vec::with_capacity(primes.len());
        let mut acc: u128 = 1;
        for &p in primes {
            acc = acc.saturating_mul(p as u128);
            primorials.push(acc);
        }
        let mut exclusions = Vec::new();
        for &b in sieve_primes {
            let mut pm = 1u64;
            for (&p, &full) in primes.iter().zip(&primorials) {
                if p >= b {
                    break;
                }
                pm = pm * (p % b) % b;
                let residue = inverse_mod(pm, b).expect("b is coprime to p#");
                let spare = (full < u128::MAX && (b as u128 + 1).is_multiple_of(full))
                    .then(|| ((b as u128 + 1) / full) as u64);
                exclusions.push(Exclusion { b, residue, spare });
            }
        }
        ChainPlan {
            primorials,
            exclusions,
        }
    }

    fn passes(&self, m: u64) -> bool {
        self.primorials
            .iter()
            .all(|&pp| match pp.checked_mul(m as u128) {
                Some(v) if v - 1 <= u64::MAX as u128 => is_probable_prime_u64((v - 1) as u64),
                _ => {
                    let v = Integer::from(pp) * m - 1u32;
                    is_probable_prime(&v)
                }
            })
    }

    fn first_in_block(&self, lo: u64, len: u64) -> Option<u64> {
        let mut keep = vec![true; len as usize];
        for e in &self.exclusions {
            let mut i = (e.residue + e.b - lo % e.b) % e.b;
            while i < len {
                if e.spare != Some(lo + i) {
                    keep[i as usize] = false;
                }
                i += e.b;
            }
        }
        keep.iter()
            .enumerate()
            .filter(|&(_, &k)| k)
            .map(|(i, _)| lo + i as u64)
            .find(|&m| m >= 1 && self.passes(m))
    }
}

/// For every prime r ≤ `r_max` (from 5), the smallest m ≥ `m_start` with
/// p#·m − 1 probable-prime for all primes p ≤ r. Stops early once the
/// search passes `m_cap`.
pub fn chain_search(r_max: u64, m_start: u64, m_cap: Option<u64>) -> Result<ChainSearch> {
    if r_max < 5 {
        return Err(Error::InvalidParameter(format!(
            "r_max = {r_max} must be at least 5"
        )));
    }
    let sieve_primes: Vec<u64> = simple_sieve(CHAIN_SIEVE_BOUND)
        .into_iter()
        .filter(|&b| b > 2)
        .collect();
    let all: Vec<u64> = simple_sieve(r_max);
    let cap = m_cap.unwrap_or(u64::MAX);
    let batch = rayon::current_num_threads() as u64 * 4;

    let mut records = Vec::new();
    let mut m = m_start.max(1);
    let mut r_idx = all.iter().position(|&p| p >= 5).expect("r_max ≥ 5");
    while r_idx < all.len() {
        let plan = ChainPlan::new(&all[..=r_idx], &sieve_primes);
        let mut found = None;
        while found.is_none() && m <= cap {
            let span = (cap - m).saturating_add(1);
            let blocks = span.div_ceil(CHAIN_BLOCK).min(batch);
            found = (0..blocks).into_par_iter().find_map_first(|i| {
                let lo = m + i * CHAIN_BLOCK;
                let len = CHAIN_BLOCK.min(cap - lo + 1);
                plan.first_in_block(lo, len)
            });
            if found.is_none() {
                m = m.saturating_add(blocks * CHAIN_BLOCK);
            }
        }
        match found {
            Some(hit) => {
                records.push(ChainRecord {
                    r: all[r_idx],
                    m: hit,
                });
                m = hit;
                r_idx += 1;
            }
            None => {
                return Ok(ChainSearch {
                    records,
                    complete: false,
                    next_m: m.min(cap.saturating_add(1)),
                })
            }
        }
    }
    Ok(ChainSearch {
        records,
        complete: true,
        next_m: m,
    })
}

// ---------------------------------------------------------------------------
// Semi-sequences

#[derive(Debug, Clone)]
pub enum SemiOutcome {
    Alive(StageState),
    Extinct(usize),
}

impl SemiOutcome {
    pub fn extinct_at(&self) -> Option<usize> {
        match self {
            SemiOutcome::Extinct(s) => Some(*s),
            SemiOutcome::Alive(_) => None,
        }
    }
}

/// Runs the semi-sequence with ⌊y⌋ = `base` up to `to_stage`.
pub fn semi_scan(base: u64, to_stage: usize, engine: &Engine) -> Result<SemiOutcome> {
    Ok(
        match engine.run(seed(VariantRule::semi(base)), to_stage, &mut NullSink)? {
            RunOutcome::Completed(state) => SemiOutcome::Alive(state),
            RunOutcome::Extinct { stage, .. } => SemiOutcome::Extinct(stage),
        },
    )
}

/// An integer part whose semi-sequence dies later than for every smaller one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemiRecord {
    pub base: u64,
    pub extinct_stage: usize,
}

pub fn semi_records_csv(records: &[SemiRecord]) -> String {
    let mut s = String::from("B,extinct_stage\n");
    for r in records {
        s.push_str(&format!("{},{}\n", r.base, r.extinct_stage));
    }
    s
}

// Single-threaded run used inside the parallel scan.
fn semi_extinction(base: u64, horizon: usize, sieves: &[StageSieve]) -> Option<usize> {
    let variant = VariantRule::semi(base);
    let mut members = seed(variant).members();
    for s in 2..=horizon {
        let sieve = &sieves[s - 2];
        let require = s >= variant.primality_from_stage;
        let mut next = Vec::new();
        for q in &members {
            if require {
                let (lo, len, exclude) = variant.window(q, sieve.p());
                next.extend(sieve.primes_in(&lo, len, exclude));
            } else {
                next.extend(children(q, sieve.p(), variant, false));
            }
        }
        if next.is_empty() {
            return Some(s);
        }
        members = next;
    }
    None
}

/// Scans ⌊y⌋ = 2..=`b_max` and keeps the successive extinction records.
/// Sequences still alive at `horizon` are not records.
pub fn semi_record_scan(b_max: u64, horizon: usize) -> Result<Vec<SemiRecord>> {
    if b_max < 2 || horizon < 2 {
        return Err(Error::InvalidParameter(format!(
            "need b_max ≥ 2 and horizon ≥ 2, got {b_max} and {horizon}"
        )));
    }
    let mut sieves = Vec::with_capacity(horizon - 1);
    let mut p = 2;
    for _ in 2..=horizon {
        p = next_prime_after(p);
        sieves.push(StageSieve::new(p));
    }
    let stages: Vec<Option<usize>> = (2..=b_max)
        .into_par_iter()
        .map(|b| semi_extinction(b, horizon, &sieves))
        .collect();
    let mut best = 0;
    let mut out = Vec::new();
    for (b, stage) in (2..=b_max).zip(stages) {
        if let Some(st) = stage {
            if st > best {
                best = st;
                out.push(SemiRecord {
                    base: b,
                    extinct_stage: st,
                });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Power-tower seeds

/// Nested interval [a_lo, a_hi] of constants A with ⌊A^(cⁿ)⌋ = chain[n].
/// Both ends lie inside the exact set, so the interval may be read as closed.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTowerSeed {
    pub c: Rational,
    pub a_lo: Rational,
    pub a_hi: Rational,
    pub chain: Vec<Integer>,
    /// Decimal places kept in `a_lo` and `a_hi`.
    pub precision: usize,
}

impl PowerTowerSeed {
    pub fn render(&self) -> (String, String) {
        (
            to_fixed(&self.a_lo, self.precision, Rounding::Floor),
            to_fixed(&self.a_hi, self.precision, Rounding::Floor),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerVerdict {
    pub n: usize,
    pub floor: Integer,
    pub prp: bool,
}

fn approx_log2(a: &Rational) -> f64 {
    a.numer().significant_bits() as f64 - a.denom().significant_bits() as f64
}

// a^e with every operation rounded in direction `round`; a > 0, e > 0.
fn pow_directed(a: &Rational, e: &Rational, prec: u32, round: Round) -> Float {
    let (mut x, _) = Float::with_val_round(prec, a, round);
    x.ln_round(round);
    x.mul_assign_round(e, round);
    x.exp_round(round);
    x
}

fn bits_for(a: &Rational, e: &Rational, extra: u32) -> u32 {
    let mag = (approx_log2(a).abs() + 2.0) * e.to_f64().max(1.0);
    (mag.ceil() as u32).saturating_add(extra).max(64)
}

// Exact floors of lo^e and hi^e for small integer exponents.
fn exact_floors(lo: &Rational, hi: &Rational, e: &Rational) -> Option<(Integer, Integer)> {
    if *e.denom() != 1 {
        return None;
    }
    let k = e.numer().to_u32().filter(|&k| k <= 1024)?;
    let f = |a: &Rational| {
        let p = Rational::from(rug::ops::Pow::pow(a, k));
        p.numer().clone().div_rem_floor(p.denom().clone()).0
    };
    Some((f(lo), f(hi)))
}

fn float_floor(f: Float) -> Integer {
    f.floor().to_integer().expect("finite")
}

fn check_c(c: &Rational) -> Result<()> {
    if *c <= 1 {
        return Err(Error::InvalidParameter(format!(
            "exponent base c = {c} must exceed 1"
        )));
    }
    Ok(())
}

/// Floors ⌊A^(cⁿ)⌋ for n = 0..=n_max and every A in [lo, hi], with a PRP
/// verdict for each. Fails when the interval does not pin a floor.
pub fn verify_power_seed_interval(
    lo: &Rational,
    hi: &Rational,
    c: &Rational,
    n_max: usize,
) -> Result<Vec<PowerVerdict>> {
    check_c(c)?;
    if *lo <= 0 || lo > hi {
        return Err(Error::InvalidParameter("need 0 < lo ≤ hi".into()));
    }
    let width = Rational::from(hi - lo);
    let width_bits = if width == 0 {
        64
    } else {
        (-approx_log2(&width)).max(0.0) as u32 + 64
    };
    let mut out = Vec::with_capacity(n_max + 1);
    let mut e = Rational::from(1);
    for n in 0..=n_max {
        let mut prec = bits_for(hi, &e, width_bits);
        let mut floor = exact_floors(lo, hi, &e)
            .filter(|(a, b)| a == b)
            .map(|(a, _)| a);
        for _ in 0..3 {
            if floor.is_some() {
                break;
            }
            let a = float_floor(pow_directed(lo, &e, prec, Round::Down));
            let b = float_floor(pow_directed(hi, &e, prec, Round::Up));
            if a == b {
                floor = Some(a);
                break;
            }
            prec = prec.saturating_mul(2);
        }
        let floor = floor.ok_or(Error::InsufficientPrecision(n as u32))?;
        let prp = is_probable_prime(&floor);
        out.push(PowerVerdict { n, floor, prp });
        e *= c;
    }
    Ok(out)
}

/// Same as [`verify_power_seed_interval`] for a truncated decimal expansion:
/// A lies in [d, d + 10^(−places)].
pub fn verify_power_seed(a_digits: &str, c: &Rational, n_max: usize) -> Result<Vec<PowerVerdict>> {
    let d = parse_decimal(a_digits)
        .ok_or_else(|| Error::Parse(format!("not a decimal: {a_digits:.40}")))?;
    let places = a_digits.trim().split_once('.').map_or(0, |(_, f)| f.len());
    let ulp = Rational::from((1, Integer::from(Integer::u_pow_u(10, places as u32))));
    let hi = Rational::from(&d + &ulp);
    verify_power_seed_interval(&d, &hi, c, n_max)
}

fn decimal_ulp(places: usize) -> Rational {
    Rational::from((1, Integer::from(Integer::u_pow_u(10, places as u32))))
}

fn round_places(f: &Float, places: usize, mode: Rounding) -> Rational {
    let r = Rational::try_from(f).expect("finite");
    parse_decimal(&to_fixed(&r, places, mode)).expect("fixed rendering parses")
}

/// Greedy nested-interval construction: q_(n+1) is the smallest probable
/// prime x whose slice {A : ⌊A^(c^(n+1))⌋ = x} meets the current interval.
/// Interval ends are rounded inward to `precision` decimal places.
pub fn construct_power_seed(
    c: &Rational,
    q0: &Integer,
    depth: usize,
    precision: usize,
) -> Result<PowerTowerSeed> {
    check_c(c)?;
    if !is_probable_prime(q0) {
        return Err(Error::InvalidParameter(format!("q0 = {q0} is not prime")));
    }
    let ulp = decimal_ulp(precision);
    let guard = (precision as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 64;
    let mut lo = Rational::from(q0.clone());
    let mut hi = Rational::from(q0.clone() + 1u32) - &ulp;
    let mut chain = vec![q0.clone()];
    let mut e = Rational::from(1);
    for n in 1..=depth {
        e *= c;
        let inv = Rational::from(e.recip_ref());
        let prec = bits_for(&hi, &e, guard);
        let (x_min, x_max) = exact_floors(&lo, &hi, &e).unwrap_or_else(|| {
            (
                float_floor(pow_directed(&lo, &e, prec, Round::Down)),
                float_floor(pow_directed(&hi, &e, prec, Round::Up)),
            )
        });
        let mut x = x_min;
        let mut next = None;
        while x <= x_max {
            if is_probable_prime(&x) {
                let root_prec = bits_for(&Rational::from(&x + 1u32), &inv, guard);
                let slice_lo = round_places(
                    &pow_directed(&Rational::from(x.clone()), &inv, root_prec, Round::Up),
                    precision,
                    Rounding::Ceil,
                );
                let slice_hi = round_places(
                    &pow_directed(&Rational::from(&x + 1u32), &inv, root_prec, Round::Down),
                    precision,
                    Rounding::Floor,
                ) - &ulp;
                let new_lo = if slice_lo > lo { slice_lo } else { lo.clone() };
                let new_hi = if slice_hi < hi { slice_hi } else { hi.clone() };
                if new_lo.cmp(&new_hi) == Ordering::Less {
                    next = Some((x.clone(), new_lo, new_hi));
                    break;
                }
            }
            x += 1u32;
        }
        let (q, new_lo, new_hi) = next.ok_or(Error::EmptyWindow(n))?;
        chain.push(q);
        lo = new_lo;
        hi = new_hi;
    }
    Ok(PowerTowerSeed {
        c: c.clone(),
        a_lo: lo,
        a_hi: hi,
        chain,
        precision,
    })
}
