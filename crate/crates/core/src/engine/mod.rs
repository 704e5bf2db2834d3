//! Stage evolution: sieve each member's child window, keep the probable
//! primes, and carry the population to the next stage prime.

mod checkpoint;
mod sieve;
mod ybounds;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use rug::Integer;

use crate::error::{Error, Result};
use crate::ntcore::{is_probable_prime, next_prime_after, nth_prime};

pub use checkpoint::{
    export_checkpoint, import_checkpoint, infer_floor_stage, read_parents_csv, write_parents_csv,
    CheckpointDir, MemorySink, NullSink, StageLogRow,
};
pub use sieve::StageSieve;
pub use ybounds::{split_offsets, y_bounds, YBounds, YInterval};

/// Which sequence is being grown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    /// ⌊y·p#⌋ prime at every stage.
    Floor,
    /// y·p# rounded to the nearest integer.
    Round,
    /// ⌊y·p#⌋ prime for p ≥ 3 with free integer part `base`.
    Semi { base: u64 },
}

/// Restriction on the stage-1 values of a semi-sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SemiStart {
    /// Any ⌊2y⌋ allowed.
    #[default]
    Unrestricted,
    /// ⌊2y⌋ must be prime or a product of two primes.
    PrimeOrSemiprime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariantRule {
    pub kind: VariantKind,
    /// First stage whose members must be probable primes.
    pub primality_from_stage: usize,
    pub semi_start: SemiStart,
}

impl VariantRule {
    pub fn floor() -> Self {
        VariantRule {
            kind: VariantKind::Floor,
            primality_from_stage: 1,
            semi_start: SemiStart::Unrestricted,
        }
    }

    pub fn round() -> Self {
        VariantRule {
            kind: VariantKind::Round,
            primality_from_stage: 1,
            semi_start: SemiStart::Unrestricted,
        }
    }

    pub fn semi(base: u64) -> Self {
        VariantRule {
            kind: VariantKind::Semi { base },
            primality_from_stage: 2,
            semi_start: SemiStart::Unrestricted,
        }
    }

    pub fn with_semi_start(mut self, start: SemiStart) -> Self {
        self.semi_start = start;
        self
    }

    /// Child window of `q` at the next stage prime: first integer, length,
    /// and the offset of an excluded multiple of `p_next` if any.
    pub fn window(&self, q: &Integer, p_next: u64) -> (Integer, usize, Option<usize>) {
        let qp = Integer::from(q * p_next);
        match self.kind {
            // q·p is composite unless q = 1, which only a semi start can reach.
            VariantKind::Floor | VariantKind::Semi { .. } if *q == 1 => (qp, p_next as usize, None),
            VariantKind::Floor | VariantKind::Semi { .. } => {
                (qp + 1u32, (p_next - 1) as usize, None)
            }
            VariantKind::Round => {
                let half = (p_next - 1) / 2;
                let center = if *q > 1 { Some(half as usize) } else { None };
                (qp - half, p_next as usize, center)
            }
        }
    }

    /// Label used in file names and the command line.
    pub fn label(&self) -> String {
        match self.kind {
            VariantKind::Floor => "floor".into(),
            VariantKind::Round => "round".into(),
            VariantKind::Semi { base } => format!("semi:{base}"),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "floor" => Ok(Self::floor()),
            "round" => Ok(Self::round()),
            _ => text
                .strip_prefix("semi:")
                .and_then(|b| b.parse().ok())
                .map(Self::semi)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown variant {text:?}"))),
        }
    }
}

/// The population at one stage, stored as the smallest member and deltas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageState {
    pub variant: VariantRule,
    pub s: usize,
    pub p: u64,
    /// Smallest member q_{s,1}.
    pub a: Integer,
    /// d[0] = 0, d[i] = q_{s,i+1} − q_{s,i}.
    pub d: Vec<Integer>,
}

impl StageState {
    pub fn from_members(variant: VariantRule, s: usize, members: &[Integer]) -> Self {
        assert!(!members.is_empty(), "a stage needs at least one member");
        let mut d = Vec::with_capacity(members.len());
        d.push(Integer::new());
        for w in members.windows(2) {
            d.push(Integer::from(&w[1] - &w[0]));
        }
        StageState {
            variant,
            s,
            p: nth_prime(s),
            a: members[0].clone(),
            d,
        }
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn members(&self) -> Vec<Integer> {
        let mut out = Vec::with_capacity(self.d.len());
        let mut q = self.a.clone();
        for delta in &self.d {
            q += delta;
            out.push(q.clone());
        }
        out
    }

    pub fn max(&self) -> Integer {
        self.d.iter().fold(self.a.clone(), |acc, x| acc + x)
    }

    /// Checks ordering and, if `prp` is set, primality of every member.
    pub fn validate(&self, prp: bool) -> Result<()> {
        if self.d.first().is_none_or(|d0| *d0 != 0) {
            return Err(Error::Invariant {
                index: 1,
                reason: "first delta must be 0".into(),
            });
        }
        if let Some(i) = self.d.iter().skip(1).position(|x| *x <= 0) {
            return Err(Error::Invariant {
                index: i + 2,
                reason: "members not strictly increasing".into(),
            });
        }
        if prp && self.s >= self.variant.primality_from_stage {
            if let Some(i) = self.members().iter().position(|q| !is_probable_prime(q)) {
                return Err(Error::Invariant {
                    index: i + 1,
                    reason: "member is not a probable prime".into(),
                });
            }
        }
        Ok(())
    }
}

fn is_prime_or_semiprime(x: u64) -> bool {
    let mut factors = 0;
    let mut n = x;
    let mut f = 2;
    while f * f <= n {
        while n.is_multiple_of(f) {
            n /= f;
            factors += 1;
        }
        f += 1;
    }
    if n > 1 {
        factors += 1;
    }
    factors == 1 || factors == 2
}

/// Stage-1 population.
///
/// # Panics
/// If a restricted semi start leaves no admissible value.
pub fn seed(variant: VariantRule) -> StageState {
    let members: Vec<Integer> = match variant.kind {
        VariantKind::Floor => vec![Integer::from(2)],
        VariantKind::Round => vec![Integer::from(2), Integer::from(3)],
        VariantKind::Semi { base } => [2 * base, 2 * base + 1]
            .into_iter()
            .filter(|&v| match variant.semi_start {
                SemiStart::Unrestricted => true,
                SemiStart::PrimeOrSemiprime => is_prime_or_semiprime(v),
            })
            .map(Integer::from)
            .collect(),
    };
    StageState::from_members(variant, 1, &members)
}

/// Children of `q` at the stage whose prime is `p_next`.
pub fn children(
    q: &Integer,
    p_next: u64,
    variant: VariantRule,
    require_prime: bool,
) -> Vec<Integer> {
    let (lo, len, exclude) = variant.window(q, p_next);
    if !require_prime {
        return (0..len)
            .filter(|&r| Some(r) != exclude)
            .map(|r| Integer::from(&lo + r as u64))
            .collect();
    }
    StageSieve::new(p_next).primes_in(&lo, len, exclude)
}

/// Result of advancing one stage.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    Advanced {
        state: StageState,
        /// 0-based parent index for every new member.
        parents: Vec<usize>,
    },
    /// No member has a child at stage `stage`.
    Extinct { stage: usize },
}

/// Result of a multi-stage run.
#[derive(Debug, Clone)]
pub enum RunOutcome {
    Completed(StageState),
    Extinct { last: StageState, stage: usize },
}

impl RunOutcome {
    pub fn last(&self) -> &StageState {
        match self {
            RunOutcome::Completed(s) => s,
            RunOutcome::Extinct { last, .. } => last,
        }
    }

    pub fn extinct_at(&self) -> Option<usize> {
        match self {
            RunOutcome::Completed(_) => None,
            RunOutcome::Extinct { stage, .. } => Some(*stage),
        }
    }
}

/// Receives every stage a run produces.
pub trait CheckpointSink {
    fn on_stage(
        &mut self,
        state: &StageState,
        parents: Option<&[usize]>,
        elapsed: Duration,
    ) -> Result<()>;

    fn on_extinct(&mut self, _last: &StageState, _stage: usize) -> Result<()> {
        Ok(())
    }
}

/// Runs steps on a dedicated worker pool.
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    /// `threads == 0` lets the pool pick the number of cores.
    pub fn new(threads: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Engine { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn step(&self, state: &StageState) -> StepOutcome {
        let p_next = next_prime_after(state.p);
        let s_next = state.s + 1;
        let require = s_next >= state.variant.primality_from_stage;
        let variant = state.variant;
        let sieve = StageSieve::new(p_next);
        let members = state.members();
        let per_parent: Vec<Vec<Integer>> = self.pool.install(|| {
            members
                .par_iter()
                .map(|q| {
                    let (lo, len, exclude) = variant.window(q, p_next);
                    if require {
                        sieve.primes_in(&lo, len, exclude)
                    } else {
                        children(q, p_next, variant, false)
                    }
                })
                .collect()
        });
        // Windows are disjoint and ordered with their parents, so the
        // concatenation is already sorted.
        let mut next = Vec::new();
        let mut parents = Vec::new();
        for (i, kids) in per_parent.into_iter().enumerate() {
            parents.extend(std::iter::repeat_n(i, kids.len()));
            next.extend(kids);
        }
        if next.is_empty() {
            return StepOutcome::Extinct { stage: s_next };
        }
        StepOutcome::Advanced {
            state: StageState::from_members(variant, s_next, &next),
            parents,
        }
    }

    /// Steps until `to_stage`, reporting each stage to `sink`.
    pub fn run(
        &self,
        state: StageState,
        to_stage: usize,
        sink: &mut dyn CheckpointSink,
    ) -> Result<RunOutcome> {
        if to_stage < state.s {
            return Err(Error::InvalidParameter(format!(
                "target stage {to_stage} is before the current stage {}",
                state.s
            )));
        }
        let mut cur = state;
        while cur.s < to_stage {
            let t0 = Instant::now();
            match self.step(&cur) {
                StepOutcome::Advanced { state, parents } => {
                    sink.on_stage(&state, Some(&parents), t0.elapsed())?;
                    cur = state;
                }
                StepOutcome::Extinct { stage } => {
                    sink.on_extinct(&cur, stage)?;
                    return Ok(RunOutcome::Extinct { last: cur, stage });
                }
            }
        }
        Ok(RunOutcome::Completed(cur))
    }
}
