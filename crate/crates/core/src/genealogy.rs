//! Parent links across stages: survivors, common ancestors, tuplets,
//! higher-order descendants and branch statistics.

use std::fmt::Write as _;

use rug::Integer;

use crate::engine::{CheckpointDir, MemorySink, VariantRule};
use crate::error::{Error, Result};
use crate::ntcore::nth_prime;

/// Parent maps for stages `first..=horizon`, optionally with member values.
#[derive(Debug, Clone)]
pub struct GenealogyForest {
    first: usize,
    counts: Vec<usize>,
    // parents[i] maps stage first + i to stage first + i − 1; parents[0] is empty.
    parents: Vec<Vec<usize>>,
    members: Option<Vec<Vec<Integer>>>,
}

impl GenealogyForest {
    /// Builds from explicit per-stage parent maps, checking them.
    pub fn new(first: usize, counts: Vec<usize>, parents: Vec<Vec<usize>>) -> Result<Self> {
        if counts.is_empty() || counts.len() != parents.len() || first == 0 {
            return Err(Error::InvalidParameter(
                "counts and parent maps disagree".into(),
            ));
        }
        for i in 1..counts.len() {
            let map = &parents[i];
            if map.len() != counts[i] {
                return Err(Error::Invariant {
                    index: first + i,
                    reason: "parent map length differs from n".into(),
                });
            }
            if map.windows(2).any(|w| w[0] > w[1]) || map.iter().any(|&p| p >= counts[i - 1]) {
                return Err(Error::Invariant {
                    index: first + i,
                    reason: "parent indices out of range or decreasing".into(),
                });
            }
        }
        Ok(GenealogyForest {
            first,
            counts,
            parents,
            members: None,
        })
    }

    pub fn from_sink(sink: &MemorySink) -> Result<Self> {
        let first = sink
            .states
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty run".into()))?
            .s;
        let counts = sink.states.iter().map(|s| s.n()).collect();
        let mut f = Self::new(first, counts, sink.parents.clone())?;
        f.members = Some(sink.states.iter().map(|s| s.members()).collect());
        Ok(f)
    }

    /// Loads stages `first..=horizon` from checkpoint files and parent maps.
    pub fn from_dir(
        dir: &CheckpointDir,
        variant: VariantRule,
        first: usize,
        horizon: usize,
    ) -> Result<Self> {
        let mut counts = Vec::new();
        let mut parents = Vec::new();
        let mut members = Vec::new();
        for s in first..=horizon {
            let st = dir.load_stage(s, variant, false)?;
            counts.push(st.n());
            members.push(st.members());
            parents.push(if s == first {
                Vec::new()
            } else {
                dir.load_parents(s)?
            });
        }
        let mut f = Self::new(first, counts, parents)?;
        f.members = Some(members);
        Ok(f)
    }

    pub fn first_stage(&self) -> usize {
        self.first
    }

    pub fn horizon(&self) -> usize {
        self.first + self.counts.len() - 1
    }

    pub fn n(&self, s: usize) -> usize {
        self.counts[s - self.first]
    }

    /// 0-based parent index of member `i` of stage `s`.
    pub fn parent(&self, s: usize, i: usize) -> usize {
        self.parents[s - self.first][i]
    }

    pub fn member(&self, s: usize, i: usize) -> Option<&Integer> {
        self.members.as_ref().map(|m| &m[s - self.first][i])
    }

    fn values(&self) -> Result<&Vec<Vec<Integer>>> {
        self.members
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("forest was built without member values".into()))
    }

    fn check(&self, s: usize, horizon: usize) -> Result<()> {
        if s < self.first || s > horizon || horizon > self.horizon() {
            return Err(Error::InvalidParameter(format!(
                "need {} <= s = {s} <= horizon = {horizon} <= {}",
                self.first,
                self.horizon()
            )));
        }
        Ok(())
    }

    /// Number of horizon descendants of every member of every stage ≤ horizon.
    /// `out[s − first][i]`.
    pub fn horizon_descendants(&self, horizon: usize) -> Vec<Vec<usize>> {
        let top = horizon - self.first;
        let mut out: Vec<Vec<usize>> = self.counts[..=top].iter().map(|&n| vec![0; n]).collect();
        out[top].iter_mut().for_each(|x| *x = 1);
        for i in (1..=top).rev() {
            let (lower, upper) = out.split_at_mut(i);
            for (c, &k) in upper[0].iter().enumerate() {
                lower[i - 1][self.parents[i][c]] += k;
            }
        }
        out
    }

    /// Stage-s members with at least one descendant at `horizon`.
    pub fn survivors(&self, s: usize, horizon: usize) -> Result<usize> {
        self.check(s, horizon)?;
        let d = self.horizon_descendants(horizon);
        Ok(d[s - self.first].iter().filter(|&&k| k > 0).count())
    }

    /// n*(s) for every stage up to `horizon`.
    pub fn survivor_series(&self, horizon: usize) -> Result<Vec<(usize, usize)>> {
        self.check(horizon, horizon)?;
        let d = self.horizon_descendants(horizon);
        Ok(d.iter()
            .enumerate()
            .map(|(i, v)| (self.first + i, v.iter().filter(|&&k| k > 0).count()))
            .collect())
    }

    /// Deepest stage ≥ s_from where every horizon member has one shared
    /// ancestor, with that ancestor's ordinal (0-based) and value if known.
    pub fn common_ancestor(&self, s_from: usize, horizon: usize) -> Result<Option<CommonAncestor>> {
        self.check(s_from, horizon)?;
        let d = self.horizon_descendants(horizon);
        for s in (s_from..=horizon).rev() {
            let alive: Vec<usize> = d[s - self.first]
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, _)| i)
                .collect();
            if alive.len() == 1 {
                let index = alive[0];
                return Ok(Some(CommonAncestor {
                    stage: s,
                    index,
                    value: self.member(s, index).cloned(),
                }));
            }
        }
        Ok(None)
    }

    /// Earliest parent window holding at least `k` children.
    pub fn find_tuplets(&self, k: usize) -> Result<Option<Instance>> {
        assert!(k >= 2, "tuplets need k >= 2");
        self.descendants_first(1, |n| n >= k)
    }

    /// Earliest member with exactly `c` descendants `order` stages later.
    pub fn descendants_of_order(&self, order: usize, c: usize) -> Result<Option<Instance>> {
        assert!(order >= 1 && c >= 1);
        self.descendants_first(order, |n| n == c)
    }

    fn descendants_first(
        &self,
        order: usize,
        accept: impl Fn(usize) -> bool,
    ) -> Result<Option<Instance>> {
        let values = self.values()?;
        for s in self.first..=self.horizon().saturating_sub(order) {
            let top = s + order;
            // Ancestor at stage s of every member of stage top.
            let mut anc: Vec<usize> = (0..self.n(top)).collect();
            for t in (s + 1..=top).rev() {
                for a in anc.iter_mut() {
                    *a = self.parent(t, *a);
                }
            }
            let mut start = 0;
            while start < anc.len() {
                let mut end = start;
                while end < anc.len() && anc[end] == anc[start] {
                    end += 1;
                }
                if accept(end - start) {
                    let parent = anc[start];
                    let multipliers: Vec<u64> = (s + 1..=top).map(nth_prime).collect();
                    let base = multipliers
                        .iter()
                        .fold(values[s - self.first][parent].clone(), |acc, &p| acc * p);
                    let offsets = values[top - self.first][start..end]
                        .iter()
                        .map(|q| Integer::from(q - &base))
                        .collect();
                    return Ok(Some(Instance {
                        stage: s,
                        index: parent,
                        multipliers,
                        offsets,
                    }));
                }
                start = end;
            }
        }
        Ok(None)
    }

    /// Horizon members grouped by their ancestor at `split_stage`.
    pub fn branch_strength(&self, split_stage: usize, horizon: usize) -> Result<Vec<BranchGroup>> {
        self.check(split_stage, horizon)?;
        let d = self.horizon_descendants(horizon);
        let total = self.n(horizon) as f64;
        Ok(d[split_stage - self.first]
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(index, &size)| BranchGroup {
                index,
                size,
                percent: 100.0 * size as f64 / total,
            })
            .collect())
    }

    /// Members at `stage` with at least `k` children that each reach the horizon.
    pub fn surviving_splits(
        &self,
        stage: usize,
        k: usize,
        horizon: usize,
    ) -> Result<Vec<(usize, usize)>> {
        self.check(stage, horizon)?;
        if stage == horizon {
            return Ok(Vec::new());
        }
        let d = self.horizon_descendants(horizon);
        let mut counts = vec![0usize; self.n(stage)];
        for (c, &alive) in d[stage + 1 - self.first].iter().enumerate() {
            if alive > 0 {
                counts[self.parent(stage + 1, c)] += 1;
            }
        }
        Ok(counts
            .into_iter()
            .enumerate()
            .filter(|&(_, n)| n >= k)
            .collect())
    }

    /// Largest n_b(s)/(½√p_s log p_s) over branches extinct before the horizon.
    pub fn branch_bound_c(&self, horizon: usize) -> Result<BranchBound> {
        self.check(horizon, horizon)?;
        let d = self.horizon_descendants(horizon);
        let mut best = BranchBound::default();
        // Roots of maximal extinct subtrees: dead members whose parent lives.
        for s in self.first..horizon {
            for (root, _) in d[s - self.first]
                .iter()
                .enumerate()
                .filter(|(_, &k)| k == 0)
            {
                if s > self.first && d[s - 1 - self.first][self.parent(s, root)] == 0 {
                    continue;
                }
                // Walk the subtree stage by stage; members of one subtree are contiguous.
                let (mut lo, mut hi) = (root, root + 1);
                let mut t = s;
                while lo < hi {
                    let p = nth_prime(t) as f64;
                    let value = (hi - lo) as f64 / (0.5 * p.sqrt() * p.ln());
                    if value > best.c {
                        best = BranchBound {
                            c: value,
                            witness: Some(BranchWitness {
                                root_stage: s,
                                root_index: root,
                                peak_stage: t,
                                peak_size: hi - lo,
                                extinct_at: 0,
                            }),
                        };
                    }
                    if t == horizon {
                        break;
                    }
                    t += 1;
                    let map = &self.parents[t - self.first];
                    lo = map.partition_point(|&p| p < lo);
                    hi = map.partition_point(|&p| p < hi);
                }
                if let Some(w) = best.witness.as_mut() {
                    if w.root_stage == s && w.root_index == root {
                        w.extinct_at = t;
                    }
                }
            }
        }
        Ok(best)
    }

    /// Stages s in (first, horizon] with n*(s) = n*(s − 1).
    pub fn no_split_stages(&self, horizon: usize) -> Result<Vec<usize>> {
        let series = self.survivor_series(horizon)?;
        Ok(series
            .windows(2)
            .filter(|w| w[0].1 == w[1].1)
            .map(|w| w[1].0)
            .collect())
    }

    /// `s,p,n,n_star` rows up to `horizon`.
    pub fn survivors_csv(&self, horizon: usize) -> Result<String> {
        let mut out = String::from("s,p,n,n_star\n");
        for (s, n_star) in self.survivor_series(horizon)? {
            let _ = writeln!(out, "{s},{},{},{n_star}", nth_prime(s), self.n(s));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonAncestor {
    pub stage: usize,
    /// 0-based ordinal within the stage.
    pub index: usize,
    pub value: Option<Integer>,
}

/// A member at `stage` and the offsets of its descendants relative to
/// member × Π multipliers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub stage: usize,
    /// 0-based ordinal within the stage.
    pub index: usize,
    pub multipliers: Vec<u64>,
    pub offsets: Vec<Integer>,
}

impl Instance {
    /// `(4th prime of stage 12)*43*47+ {102, 108, …}`.
    pub fn notation(&self) -> String {
        let mut out = format!(
            "({} prime of stage {})",
            ordinal(self.index + 1),
            self.stage
        );
        for m in &self.multipliers {
            let _ = write!(out, "*{m}");
        }
        out.push_str("+ {");
        for (i, o) in self.offsets.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "{o}");
        }
        out.push('}');
        out
    }

    pub fn offsets_u64(&self) -> Vec<u64> {
        self.offsets
            .iter()
            .map(|o| o.to_u64().expect("offset fits"))
            .collect()
    }
}

/// 1st, 2nd, 3rd, 4th, 11th, 21st, …
pub fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchGroup {
    /// 0-based ordinal of the ancestor at the split stage.
    pub index: usize,
    pub size: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BranchBound {
    pub c: f64,
    pub witness: Option<BranchWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchWitness {
    pub root_stage: usize,
    pub root_index: usize,
    pub peak_stage: usize,
    pub peak_size: usize,
    /// First stage with no member left.
    pub extinct_at: usize,
}
