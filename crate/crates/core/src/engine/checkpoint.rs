//! Checkpoint text, per-stage files, the stage log and parent maps.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rug::Integer;

use super::{CheckpointSink, StageState, VariantRule};
use crate::error::{Error, Result};
use crate::ntcore::{next_prime_after, nth_prime};

/// `a=<digits>; d=[0, d2, …]` followed by a newline.
pub fn export_checkpoint(state: &StageState) -> String {
    let mut out = String::with_capacity(32 + 4 * state.d.len());
    out.push_str("a=");
    out.push_str(&state.a.to_string());
    out.push_str("; d=[");
    for (i, d) in state.d.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&d.to_string());
    }
    out.push_str("]\n");
    out
}

/// Parses a checkpoint line. Without `stage` the stage is inferred, which
/// only works for the floor variant. `prp` re-runs the primality tests.
pub fn import_checkpoint(
    text: &str,
    variant: VariantRule,
    stage: Option<usize>,
    prp: bool,
) -> Result<StageState> {
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or_else(|| Error::Parse("empty checkpoint".into()))?;
    let rest = line
        .strip_prefix("a=")
        .ok_or_else(|| Error::Parse("expected `a=`".into()))?;
    let (a_text, rest) = rest
        .split_once(';')
        .ok_or_else(|| Error::Parse("expected `;` after a".into()))?;
    let a: Integer = a_text
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer {:?}", a_text.trim())))?;
    let body = rest
        .trim()
        .strip_prefix("d=")
        .and_then(|r| r.trim().strip_prefix('['))
        .and_then(|r| r.trim_end().strip_suffix(']'))
        .ok_or_else(|| Error::Parse("expected `d=[…]`".into()))?;
    let d = body
        .split(',')
        .enumerate()
        .map(|(i, t)| {
            t.trim()
                .parse::<Integer>()
                .map_err(|_| Error::Parse(format!("bad delta {} {:?}", i + 1, t.trim())))
        })
        .collect::<Result<Vec<_>>>()?;
    let s = match stage {
        Some(s) => s,
        None if variant == VariantRule::floor() => {
            infer_floor_stage(&a).ok_or_else(|| Error::Parse("cannot infer stage from a".into()))?
        }
        None => return Err(Error::Parse("stage must be given for this variant".into())),
    };
    if s == 0 {
        return Err(Error::Parse("stages start at 1".into()));
    }
    let state = StageState {
        variant,
        s,
        p: nth_prime(s),
        a,
        d,
    };
    state.validate(prp)?;
    Ok(state)
}

/// Stage s with p_s# ≤ a < p_{s+1}#, the only one compatible with y ∈ [1, 1.5).
pub fn infer_floor_stage(a: &Integer) -> Option<usize> {
    if *a < 2 {
        return None;
    }
    let mut rest = a.clone();
    let mut p = 2;
    let mut s = 0;
    while rest >= p {
        rest /= p;
        s += 1;
        p = next_prime_after(p);
    }
    Some(s)
}

/// Parent map as CSV `child,parent` with 1-based ordinals.
pub fn write_parents_csv(parents: &[usize]) -> String {
    let mut out = String::from("child,parent\n");
    for (i, p) in parents.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, p + 1));
    }
    out
}

/// Inverse of [`write_parents_csv`]; returns 0-based parent indices.
pub fn read_parents_csv(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let (c, p) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("parents line {}", lineno + 1)))?;
        let c: usize = c
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("parents line {}", lineno + 1)))?;
        let p: usize = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("parents line {}", lineno + 1)))?;
        if c != out.len() + 1 || p == 0 {
            return Err(Error::Parse(format!(
                "parents line {} out of order",
                lineno + 1
            )));
        }
        out.push(p - 1);
    }
    Ok(out)
}

/// One line of `stagelog.csv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageLogRow {
    pub s: usize,
    pub p: u64,
    pub n: usize,
    pub q_digits: usize,
    pub elapsed_ms: u128,
}

impl StageLogRow {
    pub const HEADER: &'static str = "s,p,n,q_digits,elapsed_ms";

    pub fn new(state: &StageState, elapsed: Duration) -> Self {
        StageLogRow {
            s: state.s,
            p: state.p,
            n: state.n(),
            q_digits: state.a.to_string().len(),
            elapsed_ms: elapsed.as_millis(),
        }
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.s, self.p, self.n, self.q_digits, self.elapsed_ms
        )
    }
}

/// Discards everything.
#[derive(Debug, Default)]
pub struct NullSink;

impl CheckpointSink for NullSink {
    fn on_stage(&mut self, _: &StageState, _: Option<&[usize]>, _: Duration) -> Result<()> {
        Ok(())
    }
}

/// Keeps every stage and parent map in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub states: Vec<StageState>,
    /// `parents[i]` links `states[i]` to `states[i - 1]`; empty for the first.
    pub parents: Vec<Vec<usize>>,
    pub extinct_at: Option<usize>,
}

impl MemorySink {
    pub fn starting_at(state: &StageState) -> Self {
        MemorySink {
            states: vec![state.clone()],
            parents: vec![Vec::new()],
            extinct_at: None,
        }
    }
}

impl CheckpointSink for MemorySink {
    fn on_stage(
        &mut self,
        state: &StageState,
        parents: Option<&[usize]>,
        _: Duration,
    ) -> Result<()> {
        self.states.push(state.clone());
        self.parents
            .push(parents.map(<[usize]>::to_vec).unwrap_or_default());
        Ok(())
    }

    fn on_extinct(&mut self, _: &StageState, stage: usize) -> Result<()> {
        self.extinct_at = Some(stage);
        Ok(())
    }
}

/// Directory of `stage_<s>.pgy`, optional `parents_<s>.csv`, and `stagelog.csv`.
#[derive(Debug, Clone)]
pub struct CheckpointDir {
    dir: PathBuf,
    write_parents: bool,
}

impl CheckpointDir {
    pub fn new(dir: impl Into<PathBuf>, write_parents: bool) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(CheckpointDir { dir, write_parents })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn stage_path(&self, s: usize) -> PathBuf {
        self.dir.join(format!("stage_{s}.pgy"))
    }

    pub fn parents_path(&self, s: usize) -> PathBuf {
        self.dir.join(format!("parents_{s}.csv"))
    }

    pub fn log_path(&self) -> PathBuf {
        self.dir.join("stagelog.csv")
    }

    pub fn save_stage(&self, state: &StageState) -> Result<()> {
        // Write then rename so an interrupted run never leaves half a file.
        let tmp = self.dir.join(format!("stage_{}.pgy.tmp", state.s));
        fs::write(&tmp, export_checkpoint(state))?;
        fs::rename(tmp, self.stage_path(state.s))?;
        Ok(())
    }

    pub fn load_stage(&self, s: usize, variant: VariantRule, prp: bool) -> Result<StageState> {
        let text = fs::read_to_string(self.stage_path(s))?;
        import_checkpoint(&text, variant, Some(s), prp)
    }

    /// 0-based parent indices linking stage `s` to stage `s − 1`.
    pub fn load_parents(&self, s: usize) -> Result<Vec<usize>> {
        match fs::read_to_string(self.parents_path(s)) {
            Ok(text) => read_parents_csv(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingParents(s)),
            Err(e) => Err(e.into()),
        }
    }

    /// Highest stage with a checkpoint file.
    pub fn latest_stage(&self) -> Result<Option<usize>> {
        let mut best = None;
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            let name = name.to_string_lossy();
            if let Some(s) = name
                .strip_prefix("stage_")
                .and_then(|r| r.strip_suffix(".pgy"))
                .and_then(|r| r.parse::<usize>().ok())
            {
                best = best.max(Some(s));
            }
        }
        Ok(best)
    }

    pub fn read_log(&self) -> Result<Vec<StageLogRow>> {
        let text = match fs::read_to_string(self.log_path()) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        text.lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                let bad = || Error::Parse(format!("stage log line {l:?}"));
                if f.len() != 5 {
                    return Err(bad());
                }
                Ok(StageLogRow {
                    s: f[0].parse().map_err(|_| bad())?,
                    p: f[1].parse().map_err(|_| bad())?,
                    n: f[2].parse().map_err(|_| bad())?,
                    q_digits: f[3].parse().map_err(|_| bad())?,
                    elapsed_ms: f[4].parse().map_err(|_| bad())?,
                })
            })
            .collect()
    }

    fn append_log(&self, row: &StageLogRow) -> Result<()> {
        let path = self.log_path();
        let fresh = !path.exists();
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        if fresh {
            writeln!(f, "{}", StageLogRow::HEADER)?;
        }
        writeln!(f, "{}", row.to_csv())?;
        Ok(())
    }
}

impl CheckpointSink for CheckpointDir {
    fn on_stage(
        &mut self,
        state: &StageState,
        parents: Option<&[usize]>,
        elapsed: Duration,
    ) -> Result<()> {
        self.save_stage(state)?;
        if let (true, Some(parents)) = (self.write_parents, parents) {
            fs::write(self.parents_path(state.s), write_parents_csv(parents))?;
        }
        self.append_log(&StageLogRow::new(state, elapsed))
    }
}
