//! Branching-process estimates: the ω recursion, per-window child counts,
//! growth predictions and their deviations, split probabilities and
//! long-range projections.
//!
//! Throughout, log q is taken as θ(p) + 0.23 for the stage prime p, and a
//! child window of p − 1 integers holds each prime with probability ψ(p)/log q.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::density::{psi_asymptotic, PsiPolicy};
use crate::error::{Error, Result};
use crate::ntcore::{nth_prime, tables_covering, theta_f64, w_density, LogYOffset};

/// Where log q comes from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum LogQ {
    /// θ(p) + offset.
    #[default]
    Theta,
    /// Measured log q_{s,1} from a run, keyed by stage; θ(p) + offset elsewhere.
    Measured(BTreeMap<usize, f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub offset: LogYOffset,
    pub psi: PsiPolicy,
    pub log_q: LogQ,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            offset: LogYOffset::default(),
            psi: PsiPolicy::default(),
            log_q: LogQ::Theta,
        }
    }
}

impl ModelParams {
    pub fn with_psi(psi: PsiPolicy) -> Self {
        ModelParams {
            psi,
            ..Self::default()
        }
    }

    pub fn log_q(&self, s: usize) -> f64 {
        match &self.log_q {
            LogQ::Measured(m) if m.contains_key(&s) => m[&s],
            _ => theta_f64(nth_prime(s)) + self.offset.value(),
        }
    }
}

/// Window-size throttle: k = 1 means none, otherwise a prime whose W(k)
/// scales both the number of slots and the per-slot probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throttle {
    pub k: u64,
    pub w: f64,
}

impl Throttle {
    pub fn new(k: u64) -> Result<Self> {
        if k == 1 {
            return Ok(Throttle { k, w: 1.0 });
        }
        if k < 2 || !crate::ntcore::is_probable_prime_u64(k) {
            return Err(Error::InvalidParameter(format!(
                "throttle k = {k} must be 1 or a prime"
            )));
        }
        Ok(Throttle {
            k,
            w: w_density(k).to_f64(),
        })
    }

    pub fn none() -> Self {
        Throttle { k: 1, w: 1.0 }
    }
}

/// Slot count N and per-slot probability x for the windows opened at stage s.
fn window_model(s: usize, throttle: Throttle, params: &ModelParams) -> (f64, f64) {
    let p = nth_prime(s);
    let n = throttle.w * (p - 1) as f64;
    let x = params.psi.eval(p) / (throttle.w * params.log_q(s));
    (n, x)
}

/// One application of the recursion: ω(s − 1) from ω(s).
pub fn omega_step(s: usize, omega: f64, throttle: Throttle, params: &ModelParams) -> f64 {
    let (n, x) = window_model(s, throttle, params);
    let lead = n * (-x).ln_1p();
    let r = x / (1.0 - x);
    // Σ_{j ≤ ⌊N⌋} C(N, j) (ω r)^j, generalized for fractional N.
    let top = n.floor() as u64;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for j in 1..=top {
        term *= (n - j as f64 + 1.0) / j as f64 * omega * r;
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    (lead + sum.ln()).exp()
}

/// ω(s) for s_min ≤ s ≤ t, computed downward from ω(t).
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSeries {
    pub throttle: Throttle,
    pub t: usize,
    pub omega_t: f64,
    pub s_min: usize,
    pub params: ModelParams,
    values: Vec<f64>,
}

impl OmegaSeries {
    pub fn get(&self, s: usize) -> Option<f64> {
        s.checked_sub(self.s_min)
            .and_then(|i| self.values.get(i))
            .copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.s_min + i, w))
    }

    /// `s,p,omega`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,p,omega\n");
        for (s, w) in self.iter() {
            let _ = writeln!(out, "{s},{},{w:.12}", nth_prime(s));
        }
        out
    }
}

/// 1 − 1/√(2 p_t).
pub fn default_omega_start(t: usize) -> f64 {
    1.0 - 1.0 / (2.0 * nth_prime(t) as f64).sqrt()
}

/// s + 1900, capped where p_t passes 2·10⁴.
pub fn default_start_stage(s: usize) -> usize {
    let cap = tables_covering(20_000).pi(20_000);
    (s + 1900).min(cap).max(s + 1)
}

pub fn omega_series(
    s_min: usize,
    t: usize,
    omega_t: f64,
    throttle: Throttle,
    params: &ModelParams,
) -> Result<OmegaSeries> {
    if s_min >= t || s_min == 0 {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= s_min < t, got {s_min}, {t}"
        )));
    }
    if !(0.0..1.0).contains(&omega_t) {
        return Err(Error::InvalidParameter(format!(
            "omega_t = {omega_t} outside [0, 1)"
        )));
    }
    let mut values = vec![0.0; t - s_min + 1];
    values[t - s_min] = omega_t;
    let mut w = omega_t;
    for s in (s_min + 1..=t).rev() {
        w = omega_step(s, w, throttle, params);
        values[s - 1 - s_min] = w;
    }
    Ok(OmegaSeries {
        throttle,
        t,
        omega_t,
        s_min,
        params: params.clone(),
        values,
    })
}

/// ω(s) with the default start stage and value.
pub fn omega_at(s: usize, throttle: Throttle, params: &ModelParams) -> Result<f64> {
    let t = default_start_stage(s);
    let series = omega_series(s, t, default_omega_start(t), throttle, params)?;
    Ok(series.get(s).expect("in range"))
}

/// A probability carried as log₁₀ so that ω^n never underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogProb {
    pub log10: f64,
}

impl LogProb {
    pub fn value(self) -> f64 {
        10f64.powf(self.log10)
    }

    /// (mantissa, exponent) with 1 ≤ mantissa < 10.
    pub fn scientific(self) -> (f64, i64) {
        let e = self.log10.floor();
        (10f64.powf(self.log10 - e), e as i64)
    }

    pub fn render(self, digits: usize) -> String {
        let (m, e) = self.scientific();
        format!("{m:.digits$}e{e}")
    }
}

/// ωⁿ.
pub fn failure_probability(omega: f64, n: u64) -> LogProb {
    assert!((0.0..=1.0).contains(&omega));
    if n == 0 {
        return LogProb { log10: 0.0 };
    }
    LogProb {
        log10: n as f64 * omega.log10(),
    }
}

fn ln_choose(n: f64, j: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(j + 1.0) - ln_gamma(n - j + 1.0)
}

/// log Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// P(n children) for one member opening a window at stage s, n = 0..=⌊N⌋.
pub fn child_count_distribution(s: usize, throttle: Throttle, params: &ModelParams) -> Vec<f64> {
    let (n, x) = window_model(s, throttle, params);
    let top = n.floor() as usize;
    (0..=top)
        .map(|j| {
            let j = j as f64;
            (ln_choose(n, j) + j * x.ln() + (n - j) * (-x).ln_1p()).exp()
        })
        .collect()
}

/// Number of columns kept explicitly in compound distributions.
pub const DIST_WIDTH: usize = 8;

/// P(0..7 descendants) and P(more) at `to_stage` for one member at `from_stage`.
#[derive(Debug, Clone, PartialEq)]
pub struct NDistribution {
    pub from_stage: usize,
    pub to_stage: usize,
    pub probs: [f64; DIST_WIDTH],
    pub more: f64,
}

// (a + b(z))^N mod z^8 where b has no constant term.
fn binomial_series(n: f64, a: f64, b: &[f64; DIST_WIDTH]) -> [f64; DIST_WIDTH] {
    let mut out = [0.0; DIST_WIDTH];
    let mut b_pow = [0.0; DIST_WIDTH];
    b_pow[0] = 1.0;
    let mut coeff = 1.0;
    for j in 0..DIST_WIDTH {
        if j > 0 {
            coeff *= (n - j as f64 + 1.0) / j as f64;
            let mut next = [0.0; DIST_WIDTH];
            for (i, &u) in b_pow.iter().enumerate() {
                for (k, &v) in b.iter().enumerate().skip(1) {
                    if i + k < DIST_WIDTH {
                        next[i + k] += u * v;
                    }
                }
            }
            b_pow = next;
        }
        if coeff == 0.0 {
            break;
        }
        let scale = coeff * a.powf(n - j as f64);
        for (o, &v) in out.iter_mut().zip(b_pow.iter()) {
            *o += scale * v;
        }
    }
    out
}

/// Composes the per-stage child distributions from `from_stage + 1` to `to_stage`.
pub fn n_distribution(
    from_stage: usize,
    to_stage: usize,
    throttle: Throttle,
    params: &ModelParams,
) -> Result<NDistribution> {
    if to_stage <= from_stage {
        return Err(Error::InvalidParameter(
            "to_stage must follow from_stage".into(),
        ));
    }
    // Generating function of the descendants of one member opening a window at
    // stage s, truncated to z^7, built from the top down.
    let mut h = [0.0; DIST_WIDTH];
    h[1] = 1.0;
    for s in (from_stage + 1..=to_stage).rev() {
        let (n, x) = window_model(s, throttle, params);
        let mut b = [0.0; DIST_WIDTH];
        for k in 1..DIST_WIDTH {
            b[k] = x * h[k];
        }
        h = binomial_series(n, 1.0 - x + x * h[0], &b);
    }
    let more = (1.0 - h.iter().sum::<f64>()).max(0.0);
    Ok(NDistribution {
        from_stage,
        to_stage,
        probs: h,
        more,
    })
}

/// Rows of the descendant table for one stage-`from` member.
pub fn table6(
    from_stage: usize,
    rows: &[usize],
    params: &ModelParams,
) -> Result<Vec<NDistribution>> {
    rows.iter()
        .map(|&s| n_distribution(from_stage, s, Throttle::none(), params))
        .collect()
}

/// `s,p,P0,…,P7,Pgt7` in percent.
pub fn table6_csv(rows: &[NDistribution]) -> String {
    let mut out = String::from("s,p");
    for j in 0..DIST_WIDTH {
        let _ = write!(out, ",P{j}");
    }
    out.push_str(",Pgt7\n");
    for r in rows {
        let _ = write!(out, "{},{}", r.to_stage, nth_prime(r.to_stage));
        for v in r.probs.iter().chain(std::iter::once(&r.more)) {
            let _ = write!(out, ",{:.2}", 100.0 * v);
        }
        out.push('\n');
    }
    out
}

/// Expected members at stage s + 1 given n at stage s.
pub fn predict_next_n(n: f64, s: usize, params: &ModelParams) -> f64 {
    let s1 = s + 1;
    let p = nth_prime(s1);
    n * params.psi.eval(p) * (p - 1) as f64 / params.log_q(s1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub s: usize,
    pub predicted_n: f64,
    pub actual_n: u64,
    /// (actual − predicted)/√predicted.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub records: Vec<PredictionRecord>,
    /// Count of records per ⌊σ⌋ bucket.
    pub histogram: BTreeMap<i64, usize>,
}

impl DeviationReport {
    pub fn fraction_within(&self, k: f64) -> f64 {
        let hits = self.records.iter().filter(|r| r.sigma.abs() <= k).count();
        hits as f64 / self.records.len().max(1) as f64
    }

    pub fn max_abs_sigma(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.sigma.abs())
            .fold(0.0, f64::max)
    }

    /// `s,predicted,actual,sigma`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,predicted,actual,sigma\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:.3},{},{:.4}",
                r.s, r.predicted_n, r.actual_n, r.sigma
            );
        }
        out
    }
}

/// Builds records from consecutive stage counts `(s, n)`, predicting each
/// stage from the previous one.
pub fn deviation_series(actuals: &[(usize, u64)], params: &ModelParams) -> Result<DeviationReport> {
    deviation_series_with(actuals, |n, s| predict_next_n(n, s, params))
}

/// As [`deviation_series`] with an arbitrary predictor `f(n_prev, s_prev)`.
pub fn deviation_series_with(
    actuals: &[(usize, u64)],
    predict: impl Fn(f64, usize) -> f64,
) -> Result<DeviationReport> {
    if actuals.len() < 2 {
        return Err(Error::InvalidParameter("need at least two stages".into()));
    }
    let mut records = Vec::with_capacity(actuals.len() - 1);
    let mut histogram = BTreeMap::new();
    for w in actuals.windows(2) {
        let ((s0, n0), (s1, n1)) = (w[0], w[1]);
        if s1 != s0 + 1 {
            return Err(Error::InvalidParameter(format!(
                "stages {s0} and {s1} are not consecutive"
            )));
        }
        let predicted = predict(n0 as f64, s0);
        let sigma = if predicted > 0.0 {
            (n1 as f64 - predicted) / predicted.sqrt()
        } else {
            0.0
        };
        *histogram.entry(sigma.floor() as i64).or_insert(0) += 1;
        records.push(PredictionRecord {
            s: s1,
            predicted_n: predicted,
            actual_n: n1,
            sigma,
        });
    }
    Ok(DeviationReport { records, histogram })
}

/// √(e^{√(3s)})/8.
pub fn approx_n(s: f64) -> f64 {
    (0.5 * (3.0 * s).sqrt()).exp() / 8.0
}

/// Probability that one member at stage s − 1 has at least `fold` children
/// that each found an infinite branch, weighted by C(x, fold); the window
/// model uses p = p_s and no ψ.
pub fn split_probability(s: usize, fold: u64, omega_prev: f64, params: &ModelParams) -> f64 {
    let p = nth_prime(s);
    let n = p - 1;
    if fold > n {
        return 0.0;
    }
    let lq = params.log_q(s);
    let x = 1.0 / lq;
    let keep = 1.0 - omega_prev;
    let mut total = 0.0;
    for j in fold..=n {
        let jf = j as f64;
        let log_term = ln_choose(n as f64, jf)
            + jf * x.ln()
            + (n as f64 - jf) * (-x).ln_1p()
            + jf * keep.ln()
            + ln_choose(jf, fold as f64);
        let term = log_term.exp();
        total += term;
        if term < 1e-30 && j > fold + 10 {
            break;
        }
    }
    total
}

/// 1 − (1 − v)ⁿ.
pub fn aggregate_probability(v: f64, n: u64) -> f64 {
    -((n as f64) * (-v).ln_1p()).exp_m1()
}

/// ψ used by the long-range projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionPsi {
    /// The model's ψ policy at every stage.
    #[default]
    Model,
    /// 1 − log p/(2p).
    Asymptotic,
}

/// First stage at which the projected count exceeds each target, starting
/// from n0 members at s0.
pub fn project_stage_targets(
    s0: usize,
    n0: f64,
    targets: &[f64],
    mode: ProjectionPsi,
    params: &ModelParams,
) -> Result<Vec<(f64, usize)>> {
    if n0 <= 0.0 {
        return Err(Error::InvalidParameter("n0 must be positive".into()));
    }
    let mut pending: Vec<(usize, f64)> = targets.iter().copied().enumerate().collect();
    pending.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut out = vec![(0.0, 0usize); targets.len()];
    let mut log_n = n0.ln();
    let mut s = s0;
    let mut next = 0;
    while next < pending.len() && pending[next].1 <= n0 {
        out[pending[next].0] = (pending[next].1, s0);
        next += 1;
    }
    // Let the prime table grow in large chunks.
    let mut covered = 0;
    while next < pending.len() {
        s += 1;
        if s > covered {
            covered = tables_covering(0).len().max(s * 2);
            crate::ntcore::tables_with_count(covered);
        }
        let p = nth_prime(s);
        let psi = match mode {
            ProjectionPsi::Model => params.psi.eval(p),
            ProjectionPsi::Asymptotic => psi_asymptotic(p),
        };
        log_n += (psi * (p - 1) as f64 / params.log_q(s)).ln();
        while next < pending.len() && log_n > pending[next].1.ln() {
            out[pending[next].0] = (pending[next].1, s);
            next += 1;
        }
        if s > 10_000_000 {
            return Err(Error::InvalidParameter(
                "projection did not reach the targets".into(),
            ));
        }
    }
    Ok(out)
}

/// Limit of f ← e^{z(f − 1)} from f = 0.
pub fn extinction_fixed_point(z: f64) -> f64 {
    assert!(z >= 0.0);
    if z <= 1.0 {
        return 1.0;
    }
    let mut f = 0.0f64;
    for _ in 0..100_000 {
        let next = (z * (f - 1.0)).exp();
        if (next - f).abs() < 1e-16 {
            return next;
        }
        f = next;
    }
    f
}

/// (ω − 1)(m/√p + 1/p + (1 − ω)/2).
pub fn omega_delta_estimate(m: f64, p: f64, omega: f64) -> f64 {
    (omega - 1.0) * (m / p.sqrt() + 1.0 / p + (1.0 - omega) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stability {
    /// n > p.
    pub stable: bool,
    /// n > ½√p·log p.
    pub above_branch_bound: bool,
}

pub fn stability(n: u64, p: u64) -> Stability {
    let pf = p as f64;
    Stability {
        stable: n > p,
        above_branch_bound: n as f64 > 0.5 * pf.sqrt() * pf.ln(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
        assert!((ln_choose(10.0, 3.0) - 120f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn fixed_point_values() {
        assert_eq!(extinction_fixed_point(1.0), 1.0);
        assert_eq!(extinction_fixed_point(0.5), 1.0);
        assert!((extinction_fixed_point(2.0) - 0.203_187_869_979_979_7).abs() < 1e-9);
    }

    #[test]
    fn fixed_point_expansion_near_critical() {
        // 1 − f = 2(z − 1) + O((z − 1)²)
        for z in [1.001, 1.01, 1.03] {
            let e = z - 1.0;
            let gap = (1.0 - extinction_fixed_point(z)) - 2.0 * e;
            assert!(gap.abs() <= 3.0 * e * e, "{z}: {gap}");
        }
    }

    #[test]
    fn delta_estimate_arithmetic() {
        assert_eq!(omega_delta_estimate(0.3, 100.0, 1.0), 0.0);
        let v = omega_delta_estimate(-1.0, 1e4, 0.995);
        assert!((v - 3.7e-5).abs() < 1e-6, "{v}");
    }

    #[test]
    fn stability_flags() {
        assert!(stability(559, 521).stable);
        assert!(!stability(490, 509).stable);
        assert_eq!(
            stability(0, 2),
            Stability {
                stable: false,
                above_branch_bound: false
            }
        );
    }

    #[test]
    fn approx_formula() {
        assert_eq!(approx_n(0.0), 0.125);
        assert!((approx_n(61.0) - 108.0).abs() < 1.0);
    }

    #[test]
    fn failure_probability_log_space() {
        assert_eq!(failure_probability(0.3, 0).value(), 1.0);
        let (m, e) = failure_probability(0.91476, 594).scientific();
        assert_eq!(e, -23);
        assert!((m - 1.039).abs() < 0.0104, "{m}");
        let (m, e) = failure_probability(0.954_088_84, 592_642 - 61_642).scientific();
        assert_eq!(e, -10839);
        assert!((m - 4.59).abs() < 0.05, "{m}");
    }

    #[test]
    fn constant_predictions_have_zero_sigma() {
        let actual = [(1usize, 5u64), (2, 5), (3, 5)];
        let r = deviation_series_with(&actual, |n, _| n).unwrap();
        assert!(r.records.iter().all(|x| x.sigma == 0.0));
        assert_eq!(r.histogram.get(&0), Some(&2));
        assert!(deviation_series_with(&actual[..1], |n, _| n).is_err());
    }

    #[test]
    fn split_probability_edges() {
        let params = ModelParams::default();
        assert_eq!(split_probability(3, 5, 0.5, &params), 0.0);
        assert_eq!(aggregate_probability(0.0, 100), 0.0);
        assert!((aggregate_probability(0.5, 2) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn throttle_validation() {
        assert!(Throttle::new(4).is_err());
        assert_eq!(Throttle::new(7).unwrap().w, 48.0 / 210.0);
    }
}
