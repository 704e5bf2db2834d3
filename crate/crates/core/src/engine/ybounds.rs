//! Bounds on y implied by a stage population.

use rug::{Integer, Rational};

use super::StageState;
use crate::decimal::{to_fixed, Rounding};
use crate::ntcore::primorial;

/// [q/p#, (q + 1)/p#).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YInterval {
    pub numerator: Integer,
    pub modulus: Integer,
}

impl YInterval {
    pub fn lower(&self) -> Rational {
        Rational::from((self.numerator.clone(), self.modulus.clone()))
    }

    pub fn upper(&self) -> Rational {
        Rational::from((Integer::from(&self.numerator + 1u32), self.modulus.clone()))
    }

    pub fn contains(&self, y: &Rational) -> bool {
        *y >= self.lower() && *y < self.upper()
    }

    /// Lower end rounded down and upper end rounded up.
    pub fn render(&self, places: usize) -> (String, String) {
        (
            to_fixed(&self.lower(), places, Rounding::Floor),
            to_fixed(&self.upper(), places, Rounding::Ceil),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YBounds {
    /// Interval of the smallest member.
    pub min: YInterval,
    /// Interval of the largest member.
    pub max: YInterval,
}

impl YBounds {
    pub fn y_min(&self) -> Rational {
        self.min.lower()
    }

    pub fn y_max(&self) -> Rational {
        self.max.upper()
    }

    pub fn gap(&self) -> Rational {
        self.y_max() - self.y_min()
    }
}

pub fn y_bounds(state: &StageState) -> YBounds {
    let modulus = primorial(state.p);
    YBounds {
        min: YInterval {
            numerator: state.a.clone(),
            modulus: modulus.clone(),
        },
        max: YInterval {
            numerator: state.max(),
            modulus,
        },
    }
}

/// (q_j − q_first)/p# for the given members of one stage, in the order given
/// after the first.
pub fn split_offsets(state: &StageState, members: &[usize]) -> Vec<Rational> {
    let all = state.members();
    let modulus = primorial(state.p);
    let Some(&first) = members.first() else {
        return Vec::new();
    };
    members[1..]
        .iter()
        .map(|&j| Rational::from((Integer::from(&all[j] - &all[first]), modulus.clone())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::VariantRule;

    fn state(members: &[u64], s: usize) -> StageState {
        let m: Vec<Integer> = members.iter().map(|&x| Integer::from(x)).collect();
        StageState::from_members(VariantRule::floor(), s, &m)
    }

    #[test]
    fn early_stage_bounds() {
        let b = y_bounds(&state(&[7], 2));
        assert_eq!(b.y_min(), Rational::from((7, 6)));
        assert_eq!(b.y_max(), Rational::from((8, 6)));
        let b = y_bounds(&state(&[263], 4));
        assert_eq!(
            (b.y_min(), b.y_max()),
            (Rational::from((263, 210)), Rational::from((264, 210)))
        );
        assert_eq!(
            b.min.render(4),
            ("1.2523".to_string(), "1.2572".to_string())
        );
    }

    #[test]
    fn sibling_offsets() {
        let st = state(&[2897, 2903], 5);
        assert_eq!(split_offsets(&st, &[0, 1]), vec![Rational::from((6, 2310))]);
        assert_eq!(split_offsets(&st, &[1, 1]), vec![Rational::new()]);
    }
}
