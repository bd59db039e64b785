//! Per-row lookup tables for `T(w, E)` over every subset `E`.
//!
//! For small state counts each row stores the sorted distinct values it
//! attains and, per subset mask, the rank of its value. A threshold query is
//! then one binary search per row (cached) plus integer comparisons.

use crate::formula::Rational;
use crate::process::{dist_measure, StateSet};
use num_traits::Zero;
use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

/// Rows above this width are evaluated directly.
pub const FULL_TABLE_LIMIT: usize = 16;

#[derive(Debug)]
struct Ranked {
    values: Vec<Rational>,
    rank: Vec<u32>,
}

#[derive(Debug)]
pub struct Table {
    n: usize,
    dists: Vec<Vec<Rational>>,
    ranked: Option<Vec<Ranked>>,
    cuts: RefCell<HashMap<Rational, Rc<Vec<u32>>>>,
}

impl Table {
    pub fn new(dists: Vec<Vec<Rational>>) -> Table {
        let n = dists.first().map_or(0, |d| d.len());
        let ranked = (n <= FULL_TABLE_LIMIT).then(|| dists.iter().map(|d| rank_row(d)).collect());
        Table { n, dists, ranked, cuts: RefCell::new(HashMap::new()) }
    }

    pub fn rows(&self) -> usize {
        self.dists.len()
    }

    pub fn value(&self, w: usize, set: StateSet) -> Rational {
        match &self.ranked {
            Some(r) => r[w].values[r[w].rank[set.0 as usize] as usize].clone(),
            None => dist_measure(&self.dists[w], set),
        }
    }

    pub fn dist(&self, w: usize) -> &[Rational] {
        &self.dists[w]
    }

    fn cut(&self, r: &Rational) -> Rc<Vec<u32>> {
        if let Some(c) = self.cuts.borrow().get(r) {
            return c.clone();
        }
        let ranked = self.ranked.as_ref().expect("cut needs ranked rows");
        let c: Rc<Vec<u32>> = Rc::new(ranked.iter().map(|row| row.values.partition_point(|v| v < r) as u32).collect());
        self.cuts.borrow_mut().insert(r.clone(), c.clone());
        c
    }

    /// `{w : row_w(set) >= r}` as a mask over row indices.
    pub fn at_least(&self, set: StateSet, r: &Rational) -> StateSet {
        match &self.ranked {
            Some(ranked) => {
                let cut = self.cut(r);
                let mut bits = 0u64;
                for (w, row) in ranked.iter().enumerate() {
                    if row.rank[set.0 as usize] >= cut[w] {
                        bits |= 1 << w;
                    }
                }
                StateSet(bits)
            }
            None => StateSet::from_states((0..self.dists.len()).filter(|&w| dist_measure(&self.dists[w], set) >= *r)),
        }
    }

    /// `{w : row_w(set) <= r}`
    pub fn at_most(&self, set: StateSet, r: &Rational) -> StateSet {
        let comp = set.complement(self.n);
        let one_minus = Rational::from_integer(1.into()) - r;
        self.at_least(comp, &one_minus)
    }

    /// Every value `row_w(E)` over all rows and subsets.
    pub fn attained(&self) -> BTreeSet<Rational> {
        match &self.ranked {
            Some(ranked) => ranked.iter().flat_map(|r| r.values.iter().cloned()).collect(),
            None => {
                let mut out = BTreeSet::new();
                for d in &self.dists {
                    for bits in 0..1u64 << self.n {
                        out.insert(dist_measure(d, StateSet(bits)));
                    }
                }
                out
            }
        }
    }
}

fn rank_row(d: &[Rational]) -> Ranked {
    let n = d.len();
    let mut vals = vec![Rational::zero(); 1 << n];
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        vals[mask] = &vals[mask & (mask - 1)] + &d[low];
    }
    let values: Vec<Rational> = vals.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let rank = vals.iter().map(|v| values.binary_search(v).unwrap() as u32).collect();
    Ranked { values, rank }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::rat;

    #[test]
    fn ranks_match_direct_sums() {
        let d = vec![rat(1, 2), rat(1, 3), rat(1, 6)];
        let t = Table::new(vec![d.clone()]);
        for bits in 0..8 {
            let s = StateSet(bits);
            assert_eq!(t.value(0, s), dist_measure(&d, s));
            for r in [rat(0, 1), rat(1, 3), rat(1, 2), rat(2, 3), rat(1, 1)] {
                assert_eq!(t.at_least(s, &r).contains(0), dist_measure(&d, s) >= r);
                assert_eq!(t.at_most(s, &r).contains(0), dist_measure(&d, s) <= r);
            }
        }
        assert_eq!(t.attained().len(), 7);
    }
}
