//! Propositional validity of a formula's boolean skeleton.
//!
//! Every maximal subformula that is not a negation or finite conjunction is
//! treated as an atom, identified by syntax. Up to `TABLE_LIMIT` skeleton
//! atoms are checked by a full truth table; beyond that by case splitting on
//! a three-valued evaluation.

use crate::formula::{Family, Formula};
use std::collections::BTreeMap;

pub const TABLE_LIMIT: usize = 20;

enum Skel {
    Var(usize),
    Not(Box<Skel>),
    All(Vec<Skel>),
}

fn skeleton(f: &Formula, atoms: &mut BTreeMap<Formula, usize>) -> Skel {
    match f {
        Formula::Neg(b) => Skel::Not(Box::new(skeleton(b, atoms))),
        Formula::And(fs) | Formula::BigAnd(Family::Finite(fs)) => {
            Skel::All(fs.iter().map(|g| skeleton(g, atoms)).collect())
        }
        Formula::BigOr(Family::Finite(fs)) => {
            Skel::Not(Box::new(Skel::All(fs.iter().map(|g| Skel::Not(Box::new(skeleton(g, atoms)))).collect())))
        }
        other => {
            let n = atoms.len();
            Skel::Var(*atoms.entry(other.clone()).or_insert(n))
        }
    }
}

fn eval(s: &Skel, bits: u64) -> bool {
    match s {
        Skel::Var(i) => bits >> i & 1 == 1,
        Skel::Not(b) => !eval(b, bits),
        Skel::All(fs) => fs.iter().all(|g| eval(g, bits)),
    }
}

fn eval3(s: &Skel, assign: &[Option<bool>]) -> Option<bool> {
    match s {
        Skel::Var(i) => assign[*i],
        Skel::Not(b) => eval3(b, assign).map(|v| !v),
        Skel::All(fs) => {
            let mut unknown = false;
            for g in fs {
                match eval3(g, assign) {
                    Some(false) => return Some(false),
                    None => unknown = true,
                    Some(true) => {}
                }
            }
            if unknown {
                None
            } else {
                Some(true)
            }
        }
    }
}

fn split(s: &Skel, assign: &mut Vec<Option<bool>>, next: usize) -> bool {
    match eval3(s, assign) {
        Some(v) => v,
        None => {
            let i = (next..assign.len()).find(|&i| assign[i].is_none()).expect("an unassigned atom");
            let mut ok = true;
            for v in [false, true] {
                assign[i] = Some(v);
                if !split(s, assign, i + 1) {
                    ok = false;
                    break;
                }
            }
            assign[i] = None;
            ok
        }
    }
}

/// Is `f` true under every assignment to its skeleton atoms?
pub fn is_tautology(f: &Formula) -> bool {
    let mut atoms = BTreeMap::new();
    let s = skeleton(f, &mut atoms);
    let n = atoms.len();
    if n <= TABLE_LIMIT {
        (0..1u64 << n).all(|bits| eval(&s, bits))
    } else {
        split(&s, &mut vec![None; n], 0)
    }
}
