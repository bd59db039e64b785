//! Linear side conditions over threshold metavariables.
//!
//! Satisfiability is decided exactly by Fourier-Motzkin elimination over the
//! rationals, keeping track of strictness. Entailment is refutation of the
//! negated goal.

use crate::formula::{parse_comparison, Affine, Cmp, Rational};
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Ge,
    Gt,
    Eq,
}

/// `expr rel 0`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Linear {
    pub expr: Affine,
    pub rel: Rel,
}

impl Linear {
    pub fn ge(a: &Affine, b: &Affine) -> Linear {
        Linear { expr: a.sub(b), rel: Rel::Ge }
    }

    pub fn gt(a: &Affine, b: &Affine) -> Linear {
        Linear { expr: a.sub(b), rel: Rel::Gt }
    }

    pub fn eq(a: &Affine, b: &Affine) -> Linear {
        Linear { expr: a.sub(b), rel: Rel::Eq }
    }

    pub fn from_cmp(a: &Affine, op: Cmp, b: &Affine) -> Linear {
        match op {
            Cmp::Lt => Linear::gt(b, a),
            Cmp::Le => Linear::ge(b, a),
            Cmp::Eq => Linear::eq(a, b),
            Cmp::Ge => Linear::ge(a, b),
            Cmp::Gt => Linear::gt(a, b),
        }
    }

    pub fn parse(text: &str) -> Result<Linear, crate::formula::ParseError> {
        let (a, op, b) = parse_comparison(text)?;
        Ok(Linear::from_cmp(&a, op, &b))
    }

    pub fn substitute(&self, map: &BTreeMap<String, Affine>) -> Linear {
        Linear { expr: self.expr.substitute(map), rel: self.rel }
    }

    /// Negations as a disjunction of constraints.
    fn negated(&self) -> Vec<Linear> {
        let minus = self.expr.scale(&-Rational::from_integer(1.into()));
        match self.rel {
            Rel::Ge => vec![Linear { expr: minus, rel: Rel::Gt }],
            Rel::Gt => vec![Linear { expr: minus, rel: Rel::Ge }],
            Rel::Eq => vec![
                Linear { expr: self.expr.clone(), rel: Rel::Gt },
                Linear { expr: minus, rel: Rel::Gt },
            ],
        }
    }

    fn holds_ground(&self) -> bool {
        let c = &self.expr.constant;
        match self.rel {
            Rel::Ge => !c.is_negative(),
            Rel::Gt => c.is_positive(),
            Rel::Eq => c.is_zero(),
        }
    }
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.rel {
            Rel::Ge => ">=",
            Rel::Gt => ">",
            Rel::Eq => "=",
        };
        write!(f, "{} {} 0", self.expr, op)
    }
}

/// Is the conjunction of `cs` satisfiable over the rationals?
pub fn satisfiable(cs: &[Linear]) -> bool {
    let mut cs: Vec<Linear> = cs.to_vec();
    // equalities: solve and substitute
    while let Some(i) = cs.iter().position(|c| c.rel == Rel::Eq && !c.expr.terms.is_empty()) {
        let c = cs.swap_remove(i);
        let (x, a) = c.expr.terms.iter().next().map(|(k, v)| (k.clone(), v.clone())).unwrap();
        let mut rest = c.expr.clone();
        rest.terms.remove(&x);
        let value = rest.scale(&(-Rational::from_integer(1.into()) / a));
        let map = BTreeMap::from([(x, value)]);
        cs = cs.iter().map(|c| c.substitute(&map)).collect();
    }
    let mut set: BTreeSet<Linear> = BTreeSet::new();
    for c in cs {
        if c.expr.terms.is_empty() {
            if !c.holds_ground() {
                return false;
            }
        } else {
            set.insert(normalize(c));
        }
    }
    loop {
        let Some(x) = set.iter().flat_map(|c| c.expr.terms.keys()).next().cloned() else {
            return true;
        };
        let (mut pos, mut negs, mut rest) = (vec![], vec![], BTreeSet::new());
        for c in set {
            match c.expr.terms.get(&x) {
                Some(a) if a.is_positive() => pos.push(c),
                Some(_) => negs.push(c),
                None => {
                    rest.insert(c);
                }
            }
        }
        for p in &pos {
            for n in &negs {
                let a = p.expr.terms[&x].clone();
                let b = -n.expr.terms[&x].clone();
                let expr = p.expr.scale(&b).add(&n.expr.scale(&a));
                let rel = if p.rel == Rel::Gt || n.rel == Rel::Gt { Rel::Gt } else { Rel::Ge };
                let c = Linear { expr, rel };
                if c.expr.terms.is_empty() {
                    if !c.holds_ground() {
                        return false;
                    }
                } else {
                    rest.insert(normalize(c));
                }
            }
        }
        set = rest;
    }
}

/// Scale so the largest absolute coefficient is one; keeps the working set small.
fn normalize(c: Linear) -> Linear {
    let m = c.expr.terms.values().map(|v| v.abs()).max().unwrap_or_else(Rational::zero);
    if m.is_zero() {
        return c;
    }
    Linear { expr: c.expr.scale(&(Rational::from_integer(1.into()) / m)), rel: c.rel }
}

/// A conjunction of side conditions over named metavariables, each of which
/// ranges over `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Constraints {
    pub vars: BTreeSet<String>,
    pub items: Vec<Linear>,
}

impl Constraints {
    pub fn new(vars: impl IntoIterator<Item = String>, items: Vec<Linear>) -> Constraints {
        Constraints { vars: vars.into_iter().collect(), items }
    }

    pub fn with(&self, var: Option<&str>, extra: Vec<Linear>) -> Constraints {
        let mut out = self.clone();
        if let Some(v) = var {
            out.vars.insert(v.to_string());
        }
        out.items.extend(extra);
        out
    }

    fn all(&self) -> Vec<Linear> {
        let zero = Affine::constant(Rational::zero());
        let one = Affine::constant(Rational::from_integer(1.into()));
        let mut out = self.items.clone();
        for v in &self.vars {
            out.push(Linear::ge(&Affine::var(v), &zero));
            out.push(Linear::ge(&one, &Affine::var(v)));
        }
        out
    }

    pub fn satisfiable(&self) -> bool {
        satisfiable(&self.all())
    }

    /// Does every assignment meeting these constraints meet `goal`?
    pub fn entails(&self, goal: &Linear) -> bool {
        let base = self.all();
        goal.negated().into_iter().all(|n| {
            let mut cs = base.clone();
            cs.push(n);
            !satisfiable(&cs)
        })
    }

    /// `0 <= t <= 1` under these constraints.
    pub fn in_unit(&self, t: &Affine) -> bool {
        let zero = Affine::constant(Rational::zero());
        let one = Affine::constant(Rational::from_integer(1.into()));
        self.entails(&Linear::ge(t, &zero)) && self.entails(&Linear::ge(&one, t))
    }
}
