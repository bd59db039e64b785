//! Formula AST, thresholds, derived connectives and structural operations.
//!
//! Thresholds are affine expressions over named metavariables. Ground
//! thresholds (no variables) are what the evaluator works with; symbolic ones
//! show up in proof schemas and as the hole of a threshold family.

mod parse;
mod print;

pub use parse::{parse, parse_affine, parse_comparison, parse_rational, Cmp, ParseError};
pub use print::print;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `a ∸ b` clamped at zero.
pub fn monus(a: &Rational, b: &Rational) -> Rational {
    let d = a - b;
    if d.is_negative() {
        Rational::zero()
    } else {
        d
    }
}

pub fn in_unit(q: &Rational) -> bool {
    !q.is_negative() && *q <= Rational::one()
}

/// `constant + Σ coeff·var`, kept normalized (no zero coefficients) so that
/// derived equality is semantic equality.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Affine {
    pub constant: Rational,
    pub terms: BTreeMap<String, Rational>,
}

impl Affine {
    pub fn constant(q: Rational) -> Self {
        Affine { constant: q, terms: BTreeMap::new() }
    }

    pub fn var(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.to_string(), Rational::one());
        Affine { constant: Rational::zero(), terms }
    }

    pub fn ground(&self) -> Option<&Rational> {
        if self.terms.is_empty() {
            Some(&self.constant)
        } else {
            None
        }
    }

    pub fn is_var(&self) -> Option<&str> {
        if self.constant.is_zero() && self.terms.len() == 1 {
            let (k, v) = self.terms.iter().next().unwrap();
            if v.is_one() {
                return Some(k);
            }
        }
        None
    }

    pub fn add(&self, other: &Affine) -> Affine {
        let mut out = self.clone();
        out.constant += &other.constant;
        for (k, v) in &other.terms {
            let e = out.terms.entry(k.clone()).or_insert_with(Rational::zero);
            *e += v;
        }
        out.terms.retain(|_, v| !v.is_zero());
        out
    }

    pub fn scale(&self, c: &Rational) -> Affine {
        let mut out = Affine::constant(&self.constant * c);
        if !c.is_zero() {
            for (k, v) in &self.terms {
                out.terms.insert(k.clone(), v * c);
            }
        }
        out
    }

    pub fn sub(&self, other: &Affine) -> Affine {
        self.add(&other.scale(&-Rational::one()))
    }

    /// `1 - self`
    pub fn complement(&self) -> Affine {
        Affine::constant(Rational::one()).sub(self)
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.terms.keys()
    }

    pub fn substitute(&self, map: &BTreeMap<String, Affine>) -> Affine {
        let mut out = Affine::constant(self.constant.clone());
        for (k, c) in &self.terms {
            match map.get(k) {
                Some(a) => out = out.add(&a.scale(c)),
                None => {
                    out = out.add(&Affine::var(k).scale(c));
                }
            }
        }
        out
    }
}

impl From<Rational> for Affine {
    fn from(q: Rational) -> Self {
        Affine::constant(q)
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::affine(self))
    }
}

/// Threshold slots hold affine expressions.
pub type Thr = Affine;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(String),
    Neg(Box<Formula>),
    /// Nonempty by construction; single conjuncts are never built.
    And(Vec<Formula>),
    BigAnd(Family),
    BigOr(Family),
    L(Thr, Box<Formula>),
    Next(Box<Formula>),
    InitL(Thr, Box<Formula>),
    NStepL(u32, Thr, Box<Formula>),
    /// liminf_k T(w, [[body with Iter(ψ) := O^k ψ]]) >= t
    LimL(Thr, Box<Formula>),
    /// limsup_k T(w, [[...]]) <= t
    LimM(Thr, Box<Formula>),
    /// Marker inside a LimL/LimM template.
    Iter(Box<Formula>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Finite(Vec<Formula>),
    /// φ_i = prefix[i] for i < len, tail afterwards.
    Nat { prefix: Vec<Formula>, tail: Box<Formula> },
    /// { template[var := s] : s < bound } (or s <= bound when not strict)
    Threshold { var: String, template: Box<Formula>, bound: Thr, strict: bool },
    /// { ⋀_j template_j[var := c_j] : c_j ∈ grid_j, Σ_j weight_j·c_j >= bound }
    WeightedSum { var: String, parts: Vec<SumPart>, bound: Thr },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SumPart {
    pub weight: Rational,
    pub grid: Vec<Rational>,
    pub template: Formula,
}

/// LimL/LimM body wrapper.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NatTemplate(pub Formula);

impl NatTemplate {
    pub fn new(body: Formula) -> Result<Self, FormulaError> {
        let mut count = 0;
        check_iters(&body, false, &mut count)?;
        if count == 0 {
            return Err(FormulaError::Template("no Iter marker".into()));
        }
        Ok(NatTemplate(body))
    }

    pub fn instantiate(&self, k: u32) -> Formula {
        instantiate(&self.0, k)
    }
}

fn check_iters(f: &Formula, inside: bool, count: &mut usize) -> Result<(), FormulaError> {
    if let Formula::Iter(b) = f {
        if inside {
            return Err(FormulaError::Template("nested Iter markers".into()));
        }
        *count += 1;
        return check_iters(b, true, count);
    }
    for c in f.children() {
        check_iters(c, inside, count)?;
    }
    Ok(())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("formal negation is undefined for {0} nodes")]
    Unsupported(&'static str),
    #[error("bad template: {0}")]
    Template(String),
}

pub fn atom(p: &str) -> Formula {
    Formula::Atom(p.to_string())
}

pub fn neg(f: Formula) -> Formula {
    Formula::Neg(Box::new(f))
}

pub fn and(mut fs: Vec<Formula>) -> Formula {
    assert!(!fs.is_empty(), "empty conjunction; use top()");
    if fs.len() == 1 {
        fs.pop().unwrap()
    } else {
        Formula::And(fs)
    }
}

pub fn and2(a: Formula, b: Formula) -> Formula {
    Formula::And(vec![a, b])
}

pub fn top() -> Formula {
    Formula::BigAnd(Family::Finite(vec![]))
}

pub fn bot() -> Formula {
    neg(top())
}

pub fn or(fs: Vec<Formula>) -> Formula {
    neg(and(fs.into_iter().map(neg).collect()))
}

pub fn or2(a: Formula, b: Formula) -> Formula {
    or(vec![a, b])
}

pub fn implies(a: Formula, b: Formula) -> Formula {
    neg(and2(a, neg(b)))
}

pub fn iff(a: Formula, b: Formula) -> Formula {
    and2(implies(a.clone(), b.clone()), implies(b, a))
}

pub fn l(r: impl Into<Thr>, f: Formula) -> Formula {
    Formula::L(r.into(), Box::new(f))
}

/// `M_r φ := L_{1-r} ¬φ`
pub fn m(r: impl Into<Thr>, f: Formula) -> Formula {
    Formula::L(r.into().complement(), Box::new(neg(f)))
}

/// `L_{r1 ... rk} φ := L_{r1} ... L_{rk} φ`
pub fn l_chain(rs: &[Thr], f: Formula) -> Formula {
    rs.iter().rev().fold(f, |acc, r| l(r.clone(), acc))
}

pub fn next(f: Formula) -> Formula {
    Formula::Next(Box::new(f))
}

pub fn next_n(n: u32, f: Formula) -> Formula {
    (0..n).fold(f, |acc, _| next(acc))
}

pub fn init_l(r: impl Into<Thr>, f: Formula) -> Formula {
    Formula::InitL(r.into(), Box::new(f))
}

pub fn nstep_l(n: u32, r: impl Into<Thr>, f: Formula) -> Formula {
    Formula::NStepL(n, r.into(), Box::new(f))
}

pub fn iter(f: Formula) -> Formula {
    Formula::Iter(Box::new(f))
}

impl Formula {
    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            Atom(_) => vec![],
            Neg(b) | L(_, b) | Next(b) | InitL(_, b) | NStepL(_, _, b) | LimL(_, b) | LimM(_, b)
            | Iter(b) => vec![b],
            And(fs) => fs.iter().collect(),
            BigAnd(fam) | BigOr(fam) => fam.members(),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        if let Formula::Atom(p) = self {
            out.insert(p.clone());
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    /// Thresholds appearing directly on this node.
    pub fn own_thresholds(&self) -> Vec<&Thr> {
        use Formula::*;
        match self {
            L(t, _) | InitL(t, _) | NStepL(_, t, _) | LimL(t, _) | LimM(t, _) => vec![t],
            BigAnd(Family::Threshold { bound, .. })
            | BigOr(Family::Threshold { bound, .. })
            | BigAnd(Family::WeightedSum { bound, .. })
            | BigOr(Family::WeightedSum { bound, .. }) => vec![bound],
            _ => vec![],
        }
    }

    /// Metavariables occurring free in threshold slots (family holes are bound).
    pub fn threshold_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        for t in self.own_thresholds() {
            out.extend(t.vars().cloned());
        }
        match self {
            Formula::BigAnd(Family::Threshold { var, template, .. })
            | Formula::BigOr(Family::Threshold { var, template, .. }) => {
                let mut inner = BTreeSet::new();
                template.collect_vars(&mut inner);
                inner.remove(var);
                out.extend(inner);
            }
            Formula::BigAnd(Family::WeightedSum { var, parts, .. })
            | Formula::BigOr(Family::WeightedSum { var, parts, .. }) => {
                let mut inner = BTreeSet::new();
                for p in parts {
                    p.template.collect_vars(&mut inner);
                }
                inner.remove(var);
                out.extend(inner);
            }
            _ => {
                for c in self.children() {
                    c.collect_vars(out);
                }
            }
        }
    }

    /// Rebuild with every threshold mapped through `g`.
    pub fn map_thresholds(&self, g: &dyn Fn(&Thr) -> Thr) -> Formula {
        use Formula::*;
        let bx = |b: &Formula| Box::new(b.map_thresholds(g));
        match self {
            Atom(p) => Atom(p.clone()),
            Neg(b) => Neg(bx(b)),
            And(fs) => And(fs.iter().map(|f| f.map_thresholds(g)).collect()),
            BigAnd(fam) => BigAnd(fam.map_thresholds(g)),
            BigOr(fam) => BigOr(fam.map_thresholds(g)),
            L(t, b) => L(g(t), bx(b)),
            Next(b) => Next(bx(b)),
            InitL(t, b) => InitL(g(t), bx(b)),
            NStepL(n, t, b) => NStepL(*n, g(t), bx(b)),
            LimL(t, b) => LimL(g(t), bx(b)),
            LimM(t, b) => LimM(g(t), bx(b)),
            Iter(b) => Iter(bx(b)),
        }
    }

    /// Substitute metavariables in thresholds (family holes shadow).
    pub fn subst_thresholds(&self, map: &BTreeMap<String, Affine>) -> Formula {
        use Formula::*;
        match self {
            BigAnd(Family::Threshold { var, .. })
            | BigOr(Family::Threshold { var, .. })
            | BigAnd(Family::WeightedSum { var, .. })
            | BigOr(Family::WeightedSum { var, .. })
                if map.contains_key(var) =>
            {
                let mut inner = map.clone();
                inner.remove(var);
                self.subst_thresholds(&inner)
            }
            _ => self.map_thresholds_shallow(map),
        }
    }

    fn map_thresholds_shallow(&self, map: &BTreeMap<String, Affine>) -> Formula {
        use Formula::*;
        let s = |t: &Thr| t.substitute(map);
        let bx = |b: &Formula| Box::new(b.subst_thresholds(map));
        match self {
            Atom(p) => Atom(p.clone()),
            Neg(b) => Neg(bx(b)),
            And(fs) => And(fs.iter().map(|f| f.subst_thresholds(map)).collect()),
            BigAnd(fam) => BigAnd(fam.subst(map)),
            BigOr(fam) => BigOr(fam.subst(map)),
            L(t, b) => L(s(t), bx(b)),
            Next(b) => Next(bx(b)),
            InitL(t, b) => InitL(s(t), bx(b)),
            NStepL(n, t, b) => NStepL(*n, s(t), bx(b)),
            LimL(t, b) => LimL(s(t), bx(b)),
            LimM(t, b) => LimM(s(t), bx(b)),
            Iter(b) => Iter(bx(b)),
        }
    }

    /// Uniform substitution of formulas for atoms.
    pub fn subst_atoms(&self, map: &BTreeMap<String, Formula>) -> Formula {
        use Formula::*;
        let bx = |b: &Formula| Box::new(b.subst_atoms(map));
        match self {
            Atom(p) => map.get(p).cloned().unwrap_or_else(|| Atom(p.clone())),
            Neg(b) => Neg(bx(b)),
            And(fs) => And(fs.iter().map(|f| f.subst_atoms(map)).collect()),
            BigAnd(fam) => BigAnd(fam.map_members(&|f| f.subst_atoms(map))),
            BigOr(fam) => BigOr(fam.map_members(&|f| f.subst_atoms(map))),
            L(t, b) => L(t.clone(), bx(b)),
            Next(b) => Next(bx(b)),
            InitL(t, b) => InitL(t.clone(), bx(b)),
            NStepL(n, t, b) => NStepL(*n, t.clone(), bx(b)),
            LimL(t, b) => LimL(t.clone(), bx(b)),
            LimM(t, b) => LimM(t.clone(), bx(b)),
            Iter(b) => Iter(bx(b)),
        }
    }

    /// Largest number of nested Next nodes on any path.
    pub fn next_depth(&self) -> u32 {
        let inner = self.children().iter().map(|c| c.next_depth()).max().unwrap_or(0);
        match self {
            Formula::Next(_) => inner + 1,
            _ => inner,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn kind(&self) -> &'static str {
        use Formula::*;
        match self {
            Atom(_) => "Atom",
            Neg(_) => "Neg",
            And(_) => "And",
            BigAnd(_) => "BigAnd",
            BigOr(_) => "BigOr",
            L(..) => "L",
            Next(_) => "Next",
            InitL(..) => "InitL",
            NStepL(..) => "NStepL",
            LimL(..) => "LimL",
            LimM(..) => "LimM",
            Iter(_) => "Iter",
        }
    }

    /// If this is `a -> b` in desugared form, return `(a, b)`.
    pub fn as_implication(&self) -> Option<(&Formula, &Formula)> {
        if let Formula::Neg(inner) = self {
            if let Formula::And(fs) = inner.as_ref() {
                if fs.len() == 2 {
                    if let Formula::Neg(b) = &fs[1] {
                        return Some((&fs[0], b));
                    }
                }
            }
        }
        None
    }
}

impl Family {
    pub fn members(&self) -> Vec<&Formula> {
        match self {
            Family::Finite(fs) => fs.iter().collect(),
            Family::Nat { prefix, tail } => prefix.iter().chain(std::iter::once(tail.as_ref())).collect(),
            Family::Threshold { template, .. } => vec![template],
            Family::WeightedSum { parts, .. } => parts.iter().map(|p| &p.template).collect(),
        }
    }

    fn map_members(&self, g: &dyn Fn(&Formula) -> Formula) -> Family {
        match self {
            Family::Finite(fs) => Family::Finite(fs.iter().map(g).collect()),
            Family::Nat { prefix, tail } => Family::Nat {
                prefix: prefix.iter().map(g).collect(),
                tail: Box::new(g(tail)),
            },
            Family::Threshold { var, template, bound, strict } => Family::Threshold {
                var: var.clone(),
                template: Box::new(g(template)),
                bound: bound.clone(),
                strict: *strict,
            },
            Family::WeightedSum { var, parts, bound } => Family::WeightedSum {
                var: var.clone(),
                parts: parts
                    .iter()
                    .map(|p| SumPart { weight: p.weight.clone(), grid: p.grid.clone(), template: g(&p.template) })
                    .collect(),
                bound: bound.clone(),
            },
        }
    }

    fn map_thresholds(&self, g: &dyn Fn(&Thr) -> Thr) -> Family {
        let mut out = self.map_members(&|f| f.map_thresholds(g));
        match &mut out {
            Family::Threshold { bound, .. } | Family::WeightedSum { bound, .. } => *bound = g(bound),
            _ => {}
        }
        out
    }

    fn subst(&self, map: &BTreeMap<String, Affine>) -> Family {
        let mut out = self.map_members(&|f| f.subst_thresholds(map));
        match &mut out {
            Family::Threshold { bound, .. } | Family::WeightedSum { bound, .. } => *bound = bound.substitute(map),
            _ => {}
        }
        out
    }
}

/// Replace every `Iter(ψ)` by `O^k ψ`.
pub fn instantiate(f: &Formula, k: u32) -> Formula {
    use Formula::*;
    let bx = |b: &Formula| Box::new(instantiate(b, k));
    match f {
        Iter(b) => next_n(k, (**b).clone()),
        Atom(p) => Atom(p.clone()),
        Neg(b) => Neg(bx(b)),
        And(fs) => And(fs.iter().map(|g| instantiate(g, k)).collect()),
        BigAnd(fam) => BigAnd(fam.map_members(&|g| instantiate(g, k))),
        BigOr(fam) => BigOr(fam.map_members(&|g| instantiate(g, k))),
        L(t, b) => L(t.clone(), bx(b)),
        Next(b) => Next(bx(b)),
        InitL(t, b) => InitL(t.clone(), bx(b)),
        NStepL(n, t, b) => NStepL(*n, t.clone(), bx(b)),
        LimL(t, b) => LimL(t.clone(), bx(b)),
        LimM(t, b) => LimM(t.clone(), bx(b)),
    }
}

/// `∼φ`, the negation pushed through conjunctions, L and O.
pub fn formal_negation(f: &Formula) -> Result<Formula, FormulaError> {
    use Formula::*;
    Ok(match f {
        Atom(_) => neg(f.clone()),
        Neg(b) => (**b).clone(),
        And(fs) => or(fs.iter().map(formal_negation).collect::<Result<_, _>>()?),
        BigAnd(fam) => BigOr(neg_family(fam)?),
        BigOr(fam) => BigAnd(neg_family(fam)?),
        // ∼L_r φ = ¬M_{1-r}∼φ = ¬L_{1-(1-r)}¬∼φ
        L(r, b) => neg(m(r.complement(), formal_negation(b)?)),
        Next(b) => next(formal_negation(b)?),
        InitL(..) | NStepL(..) | LimL(..) | LimM(..) | Iter(_) => {
            return Err(FormulaError::Unsupported(f.kind()))
        }
    })
}

fn neg_family(fam: &Family) -> Result<Family, FormulaError> {
    Ok(match fam {
        Family::Finite(fs) => Family::Finite(fs.iter().map(formal_negation).collect::<Result<_, _>>()?),
        Family::Nat { prefix, tail } => Family::Nat {
            prefix: prefix.iter().map(formal_negation).collect::<Result<_, _>>()?,
            tail: Box::new(formal_negation(tail)?),
        },
        Family::Threshold { var, template, bound, strict } => Family::Threshold {
            var: var.clone(),
            template: Box::new(formal_negation(template)?),
            bound: bound.clone(),
            strict: *strict,
        },
        Family::WeightedSum { .. } => return Err(FormulaError::Unsupported("WeightedSum")),
    })
}

/// Subformula closure: the formula itself, bodies of unary operators and
/// members of conjunctions and families.
pub fn subformulas(f: &Formula) -> BTreeSet<Formula> {
    let mut out = BTreeSet::new();
    let mut stack = vec![f];
    while let Some(g) = stack.pop() {
        if out.insert(g.clone()) {
            stack.extend(g.children());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        atom("p")
    }

    #[test]
    fn formal_negation_clauses() {
        assert_eq!(formal_negation(&neg(p())).unwrap(), p());
        assert_eq!(formal_negation(&next(p())).unwrap(), next(neg(p())));
        let half = Affine::constant(rat(1, 2));
        assert_eq!(
            formal_negation(&l(half.clone(), p())).unwrap(),
            neg(l(half, neg(neg(p()))))
        );
        assert!(formal_negation(&init_l(int(1), p())).is_err());
    }

    #[test]
    fn instantiate_examples() {
        let t = and2(iter(p()), atom("q"));
        assert_eq!(instantiate(&t, 0), and2(p(), atom("q")));
        assert_eq!(instantiate(&t, 2), and2(next(next(p())), atom("q")));
        let t = l(rat(1, 2), iter(p()));
        assert_eq!(instantiate(&t, 1), l(rat(1, 2), next(p())));
    }

    #[test]
    fn template_checks() {
        assert!(NatTemplate::new(p()).is_err());
        assert!(NatTemplate::new(iter(iter(p()))).is_err());
        assert!(NatTemplate::new(and2(iter(p()), iter(atom("q")))).is_ok());
    }

    #[test]
    fn subformula_examples() {
        assert_eq!(subformulas(&p()), [p()].into_iter().collect());
        let f = next(neg(p()));
        assert_eq!(subformulas(&f), [f.clone(), neg(p()), p()].into_iter().collect());
        let g = l(rat(1, 3), p());
        let s = subformulas(&g);
        assert!(s.contains(&g) && s.contains(&p()));
        let nat = Formula::BigAnd(Family::Nat { prefix: vec![atom("a")], tail: Box::new(atom("b")) });
        assert_eq!(subformulas(&nat).len(), 3);
    }

    #[test]
    fn desugaring() {
        assert_eq!(m(rat(1, 4), p()), l(rat(3, 4), neg(p())));
        assert_eq!(
            l_chain(&[Affine::constant(rat(1, 2)), Affine::constant(rat(1, 3))], p()),
            l(rat(1, 2), l(rat(1, 3), p()))
        );
        let (a, b) = implies(p(), atom("q")).as_implication().map(|(a, b)| (a.clone(), b.clone())).unwrap();
        assert_eq!((a, b), (p(), atom("q")));
    }

    #[test]
    fn affine_normalizes() {
        let r = Affine::var("r");
        let s = Affine::var("s");
        assert_eq!(r.add(&s).sub(&s), r);
        assert_eq!(r.complement().complement(), r);
        let mut map = BTreeMap::new();
        map.insert("r".to_string(), Affine::constant(rat(1, 4)));
        assert_eq!(r.add(&s).substitute(&map), s.add(&Affine::constant(rat(1, 4))));
    }
}
