//! Literal finite instances of the infinitary n-step schema.
//!
//! Level `n+1` is rebuilt from level `n` by binning worlds `y` by the largest
//! `i/k` with `y` in the level-`n` extension, summing the bins with one-step
//! weights, and intersecting over the slack `1/l`. The conjunction runs over
//! `ls` and the disjunction over `ks`.

use super::{EvalError, Evaluator};
use crate::formula::{monus, Rational};
use crate::process::StateSet;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Which reading of the recursion to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Outer operator is the one-step `L`; the top bin `T = 1` is included.
    Repaired,
    /// Outer operator is the level-`n` operator; bins stop at `(k-1)/k`.
    AsPrinted,
}

pub struct LiteralNStep<'e, 'p> {
    ev: &'e Evaluator<'p>,
    variant: Variant,
    ls: Vec<u32>,
    ks: Vec<u32>,
    grid: Vec<Rational>,
    // (level, E) -> per-world best weighted sum over ks
    sums: BTreeMap<(u32, u64), Vec<Rational>>,
    // (level, r, E) -> extension
    sets: BTreeMap<(u32, Rational, u64), StateSet>,
}

impl<'e, 'p> LiteralNStep<'e, 'p> {
    pub fn new(ev: &'e Evaluator<'p>, variant: Variant, ls: Vec<u32>, ks: Vec<u32>, mut grid: Vec<Rational>) -> Self {
        grid.sort();
        grid.dedup();
        LiteralNStep { ev, variant, ls, ks, grid, sums: BTreeMap::new(), sets: BTreeMap::new() }
    }

    /// Largest grid value `<= x`, or zero.
    fn floor_grid(&self, x: &Rational) -> Rational {
        let i = self.grid.partition_point(|g| g <= x);
        if i == 0 {
            Rational::zero()
        } else {
            self.grid[i - 1].clone()
        }
    }

    /// Extension of the literal level-`level` operator at threshold `r`.
    pub fn eval(&mut self, level: u32, r: &Rational, e: StateSet) -> Result<StateSet, EvalError> {
        if level <= 1 {
            return self.ev.level_at_least(level, e, r);
        }
        let key = (level, r.clone(), e.0);
        if let Some(s) = self.sets.get(&key) {
            return Ok(*s);
        }
        let best = self.best_sums(level, e)?;
        let mut out = StateSet::EMPTY;
        for (w, b) in best.iter().enumerate() {
            let ok = self.ls.iter().all(|&l| *b >= monus(r, &Rational::new(1.into(), l.into())));
            if ok {
                out = out.union(StateSet::singleton(w));
            }
        }
        self.sets.insert(key, out);
        Ok(out)
    }

    /// Per-world value deciding membership at `level`, with its slack:
    /// `y` is in the extension at `r` iff `r <= value + slack`.
    fn membership(&mut self, level: u32, e: StateSet) -> Result<(Vec<Rational>, Rational), EvalError> {
        if level == 1 {
            let vals = (0..self.ev.n()).map(|y| self.ev.level_value(1, y, e)).collect::<Result<_, _>>()?;
            return Ok((vals, Rational::zero()));
        }
        let big_l = *self.ls.iter().max().expect("nonempty ls");
        Ok((self.best_sums(level, e)?, Rational::new(1.into(), big_l.into())))
    }

    fn best_sums(&mut self, level: u32, e: StateSet) -> Result<Vec<Rational>, EvalError> {
        if let Some(b) = self.sums.get(&(level, e.0)) {
            return Ok(b.clone());
        }
        let n = self.ev.n();
        let (vals, slack) = self.membership(level - 1, e)?;
        let mut best: Option<Vec<Rational>> = None;
        for k in self.ks.clone() {
            let kr = Rational::from_integer(k.into());
            // bin index: the largest i <= k with y in the level-(n-1) set at i/k
            let mut bins: BTreeMap<u32, StateSet> = BTreeMap::new();
            for (y, v) in vals.iter().enumerate() {
                let i = ((v + &slack) * &kr).floor().to_integer();
                let i = if i > k.into() { k } else { u32::try_from(i).unwrap_or(0) };
                let slot = bins.entry(i).or_insert(StateSet::EMPTY);
                *slot = slot.union(StateSet::singleton(y));
            }
            let top = match self.variant {
                Variant::Repaired => k,
                Variant::AsPrinted => k - 1,
            };
            let mut sum = vec![Rational::zero(); n];
            for (&i, &bin) in bins.range(1..=top) {
                let weight = Rational::new(i.into(), k.into());
                for (w, s) in sum.iter_mut().enumerate() {
                    let m = match self.variant {
                        Variant::Repaired => self.floor_grid(&self.ev.level_value(1, w, bin)?),
                        Variant::AsPrinted => self.outer_level(level - 1, w, bin)?,
                    };
                    *s += &weight * m;
                }
            }
            best = Some(match best {
                None => sum,
                Some(b) => b.into_iter().zip(sum).map(|(x, y)| if y > x { y } else { x }).collect(),
            });
        }
        let best = best.unwrap_or_else(|| vec![Rational::zero(); n]);
        self.sums.insert((level, e.0), best.clone());
        Ok(best)
    }

    /// Largest grid `c` with `w` in the level-`level` extension of `bin` at `c`.
    fn outer_level(&mut self, level: u32, w: usize, bin: StateSet) -> Result<Rational, EvalError> {
        let mut out = Rational::zero();
        for c in self.grid.clone() {
            if self.eval(level, &c, bin)?.contains(w) {
                out = c;
            } else {
                break;
            }
        }
        Ok(out)
    }
}

/// Common denominator of every value attained by levels `1..=max_level`.
/// With this bin width every bin boundary lands on an attained value.
pub fn critical_k(ev: &Evaluator, max_level: u32) -> Result<u32, EvalError> {
    let mut acc = num_bigint::BigInt::one();
    for level in 1..=max_level {
        for v in ev.attained(level)? {
            acc = acc.lcm(v.denom());
        }
    }
    u32::try_from(acc).map_err(|_| EvalError::Unsupported("bin width too fine".into()))
}

/// Smallest `l` whose slack `1/l` is below the gap between each queried
/// threshold and the attained values under it.
pub fn critical_l(ev: &Evaluator, thresholds: &BTreeSet<Rational>, max_level: u32) -> Result<u32, EvalError> {
    let mut values = BTreeSet::new();
    for level in 1..=max_level {
        values.extend(ev.attained(level)?);
    }
    let mut gap: Option<Rational> = None;
    for q in thresholds {
        if let Some(v) = values.range(..q.clone()).next_back() {
            let d = q - v;
            if gap.as_ref().map_or(true, |g| d < *g) {
                gap = Some(d);
            }
        }
    }
    Ok(match gap {
        None => 1,
        Some(g) => {
            let l = (Rational::one() / g).floor().to_integer() + 1;
            u32::try_from(l).map_err(|_| EvalError::Unsupported("slack too fine".into()))?
        }
    })
}
