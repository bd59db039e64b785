//! Exact model checking over finite dynamic Markov processes, frame validity,
//! finite consequence, and a literal-truncation evaluator for cross-checks.

mod literal;
mod table;

pub use literal::{critical_k, critical_l, LiteralNStep, Variant};
pub use table::{Table, FULL_TABLE_LIMIT};

use crate::formula::{monus, Affine, Family, Formula, Rational, SumPart, Thr};
use crate::process::{DynamicMarkovProcess, StateSet, Valuation};
use crate::stochastic::NStepKernel;
use num_traits::{Signed, Zero};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

/// Default bound on valuations enumerated by one frame-validity call.
pub const DEFAULT_MODEL_CAP: u128 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no valuation for atom {0}")]
    MissingAtom(String),
    #[error("formula uses the initial distribution but the process has none")]
    MissingInit,
    #[error("unbound threshold variable {0}")]
    Unbound(String),
    #[error("Iter marker outside a LimL/LimM template")]
    IterOutside,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("valuation for {0} exceeds the process width")]
    Width(String),
    #[error("{needed} models exceed the enumeration cap {cap}")]
    ResourceCap { needed: String, cap: u128 },
}

/// A process with a valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub process: DynamicMarkovProcess,
    pub valuation: Valuation,
}

impl Model {
    pub fn new(process: DynamicMarkovProcess, valuation: Valuation) -> Result<Model, EvalError> {
        let full = process.full();
        for (k, s) in &valuation {
            if s.inter(full) != *s {
                return Err(EvalError::Width(k.clone()));
            }
        }
        Ok(Model { process, valuation })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Counterexample { valuation: Valuation, world: usize, formula: Formula },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Finite caps for literal truncation of infinitary schemas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncBounds {
    pub nat_cap: u32,
    pub rational_grid: Vec<Rational>,
    pub k_cap: u32,
}

#[derive(Clone)]
struct Env<'a> {
    val: &'a Valuation,
    holes: BTreeMap<String, Rational>,
    iters: Vec<(Formula, StateSet)>,
    trunc: Option<&'a TruncBounds>,
}

impl<'a> Env<'a> {
    fn new(val: &'a Valuation) -> Self {
        Env { val, holes: BTreeMap::new(), iters: Vec::new(), trunc: None }
    }

    fn bind(&self, var: &str, q: Rational) -> Env<'a> {
        let mut e = self.clone();
        e.holes.insert(var.to_string(), q);
        e
    }
}

/// Evaluator bound to one process; tables are built once and shared across
/// valuations.
pub struct Evaluator<'p> {
    pub process: &'p DynamicMarkovProcess,
    t: Rc<Table>,
    pi: Option<Table>,
    powers: RefCell<BTreeMap<u32, Rc<Table>>>,
    kernel: RefCell<NStepKernel>,
    pre: Option<Vec<u64>>,
}

impl<'p> Evaluator<'p> {
    pub fn new(p: &'p DynamicMarkovProcess) -> Self {
        let pre = (p.n_states <= FULL_TABLE_LIMIT).then(|| {
            let mut table = vec![0u64; 1 << p.n_states];
            for mask in 1usize..1 << p.n_states {
                let low = mask.trailing_zeros() as usize;
                table[mask] = table[mask & (mask - 1)] | p.preimage(StateSet::singleton(low)).0;
            }
            table
        });
        Evaluator {
            process: p,
            t: Rc::new(Table::new(p.kernel.clone())),
            pi: p.init.as_ref().map(|pi| Table::new(vec![pi.clone()])),
            powers: RefCell::new(BTreeMap::new()),
            kernel: RefCell::new(NStepKernel::new(p)),
            pre,
        }
    }

    pub fn n(&self) -> usize {
        self.process.n_states
    }

    pub fn full(&self) -> StateSet {
        self.process.full()
    }

    pub fn preimage(&self, s: StateSet) -> StateSet {
        match &self.pre {
            Some(t) => StateSet(t[s.0 as usize]),
            None => self.process.preimage(s),
        }
    }

    /// Table of `Tⁿ` rows for `n >= 1`.
    pub fn power(&self, n: u32) -> Rc<Table> {
        assert!(n >= 1);
        if n == 1 {
            return self.t.clone();
        }
        if let Some(t) = self.powers.borrow().get(&n) {
            return t.clone();
        }
        let m = self.kernel.borrow_mut().power(n).clone();
        let t = Rc::new(Table::new(m));
        self.powers.borrow_mut().insert(n, t.clone());
        t
    }

    pub fn init_table(&self) -> Result<&Table, EvalError> {
        self.pi.as_ref().ok_or(EvalError::MissingInit)
    }

    /// `{w : Tⁿ(w, set) >= r}` with `T⁰ := π` (world-independent).
    pub fn level_at_least(&self, level: u32, set: StateSet, r: &Rational) -> Result<StateSet, EvalError> {
        if level == 0 {
            let pi = self.init_table()?;
            return Ok(if pi.at_least(set, r).contains(0) { self.full() } else { StateSet::EMPTY });
        }
        Ok(self.power(level).at_least(set, r))
    }

    /// `Tⁿ(w, set)` with `T⁰ := π`.
    pub fn level_value(&self, level: u32, w: usize, set: StateSet) -> Result<Rational, EvalError> {
        if level == 0 {
            return Ok(self.init_table()?.value(0, set));
        }
        Ok(self.power(level).value(w, set))
    }

    /// All values attained by `Tⁿ` (or `π` at level 0) over rows and subsets.
    pub fn attained(&self, level: u32) -> Result<BTreeSet<Rational>, EvalError> {
        if level == 0 {
            return Ok(self.init_table()?.attained());
        }
        Ok(self.power(level).attained())
    }

    pub fn extension(&self, f: &Formula, val: &Valuation) -> Result<StateSet, EvalError> {
        self.eval(f, &Env::new(val))
    }

    pub fn satisfies(&self, w: usize, f: &Formula, val: &Valuation) -> Result<bool, EvalError> {
        Ok(self.extension(f, val)?.contains(w))
    }

    /// Literal finite truncation of every infinitary schema.
    pub fn truncated_extension(&self, f: &Formula, val: &Valuation, bounds: &TruncBounds) -> Result<StateSet, EvalError> {
        let mut env = Env::new(val);
        env.trunc = Some(bounds);
        self.eval(f, &env)
    }

    fn resolve(&self, t: &Thr, env: &Env) -> Result<Rational, EvalError> {
        if let Some(q) = t.ground() {
            return Ok(q.clone());
        }
        let mut acc = t.constant.clone();
        for (v, c) in &t.terms {
            let q = env.holes.get(v).ok_or_else(|| EvalError::Unbound(v.clone()))?;
            acc += c * q;
        }
        Ok(acc)
    }

    fn eval(&self, f: &Formula, env: &Env) -> Result<StateSet, EvalError> {
        let full = self.full();
        Ok(match f {
            Formula::Atom(p) => {
                let s = *env.val.get(p).ok_or_else(|| EvalError::MissingAtom(p.clone()))?;
                if s.inter(full) != s {
                    return Err(EvalError::Width(p.clone()));
                }
                s
            }
            Formula::Neg(b) => self.eval(b, env)?.complement(self.n()),
            Formula::And(fs) => {
                let mut acc = full;
                for g in fs {
                    acc = acc.inter(self.eval(g, env)?);
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
            Formula::BigAnd(fam) => self.family(fam, true, env)?,
            Formula::BigOr(fam) => self.family(fam, false, env)?,
            Formula::L(t, b) => {
                let r = self.resolve(t, env)?;
                self.t.at_least(self.eval(b, env)?, &r)
            }
            Formula::Next(b) => self.preimage(self.eval(b, env)?),
            Formula::InitL(t, b) => {
                let r = self.resolve(t, env)?;
                self.level_at_least(0, self.eval(b, env)?, &r)?
            }
            Formula::NStepL(n, t, b) => {
                let r = self.resolve(t, env)?;
                let body = self.eval(b, env)?;
                match env.trunc {
                    Some(bounds) if *n >= 2 => {
                        let grid: BTreeSet<Rational> = self.attained(1)?;
                        let mut lit = LiteralNStep::new(self, Variant::Repaired, (1..=bounds.nat_cap).collect(), (1..=bounds.k_cap).collect(), grid.into_iter().collect());
                        lit.eval(*n, &r, body)?
                    }
                    _ => self.level_at_least(*n, body, &r)?,
                }
            }
            Formula::LimL(t, body) | Formula::LimM(t, body) => {
                let lower = matches!(f, Formula::LimL(..));
                let t = self.resolve(t, env)?;
                self.lim(lower, &t, body, env)?
            }
            Formula::Iter(psi) => env
                .iters
                .iter()
                .find(|(g, _)| *g == **psi)
                .map(|(_, s)| *s)
                .ok_or(EvalError::IterOutside)?,
        })
    }

    fn family(&self, fam: &Family, conj: bool, env: &Env) -> Result<StateSet, EvalError> {
        let full = self.full();
        let fold = |sets: &mut dyn Iterator<Item = Result<StateSet, EvalError>>| -> Result<StateSet, EvalError> {
            let mut acc = if conj { full } else { StateSet::EMPTY };
            for s in sets {
                let s = s?;
                acc = if conj { acc.inter(s) } else { acc.union(s) };
            }
            Ok(acc)
        };
        match fam {
            Family::Finite(fs) => fold(&mut fs.iter().map(|g| self.eval(g, env))),
            Family::Nat { prefix, tail } => match env.trunc {
                Some(b) => {
                    let members: Vec<&Formula> =
                        (0..b.nat_cap as usize).map(|i| prefix.get(i).unwrap_or(tail)).collect();
                    fold(&mut members.into_iter().map(|g| self.eval(g, env)))
                }
                None => fold(&mut prefix.iter().chain(std::iter::once(tail.as_ref())).map(|g| self.eval(g, env))),
            },
            Family::Threshold { var, template, bound, strict } => {
                let bound = self.resolve(bound, env)?;
                let cands = match env.trunc {
                    Some(b) => b
                        .rational_grid
                        .iter()
                        .filter(|s| !s.is_negative() && (if *strict { **s < bound } else { **s <= bound }))
                        .cloned()
                        .collect(),
                    None => self.threshold_candidates(template, var, &bound, *strict, env)?,
                };
                fold(&mut cands.into_iter().map(|s| self.eval(template, &env.bind(var, s))))
            }
            Family::WeightedSum { var, parts, bound } => {
                let bound = self.resolve(bound, env)?;
                self.weighted_sum(var, parts, &bound, conj, env)
            }
        }
    }

    /// Values of the hole at which the template's truth can change, plus a
    /// point inside every open interval between them, restricted to the
    /// family's domain `[0, bound)` or `[0, bound]`.
    pub fn threshold_candidates_for(
        &self,
        template: &Formula,
        var: &str,
        bound: &Rational,
        strict: bool,
        val: &Valuation,
    ) -> Result<Vec<Rational>, EvalError> {
        self.threshold_candidates(template, var, bound, strict, &Env::new(val))
    }

    fn threshold_candidates(
        &self,
        template: &Formula,
        var: &str,
        bound: &Rational,
        strict: bool,
        env: &Env,
    ) -> Result<Vec<Rational>, EvalError> {
        let zero = Rational::zero();
        if bound.is_negative() || (strict && bound.is_zero()) {
            return Ok(Vec::new());
        }
        let mut slots = Vec::new();
        collect_slots(template, var, &mut slots)?;
        let mut points: BTreeSet<Rational> = BTreeSet::new();
        points.insert(zero.clone());
        let in_domain = |s: &Rational| !s.is_negative() && (if strict { s < bound } else { s <= bound });
        for (t, level) in slots {
            // t = a·var + rest
            let a = t.terms.get(var).cloned().unwrap_or_else(Rational::zero);
            let mut rest = t.clone();
            rest.terms.remove(var);
            let b = self.resolve(&rest, env)?;
            for v in self.attained(level)? {
                let s = (v - &b) / &a;
                if in_domain(&s) {
                    points.insert(s);
                }
            }
        }
        let pts: Vec<Rational> = points.into_iter().collect();
        let mut out = pts.clone();
        let two = Rational::from_integer(2.into());
        for w in pts.windows(2) {
            out.push((&w[0] + &w[1]) / &two);
        }
        let last = pts.last().unwrap();
        if last < bound {
            out.push((last + bound) / &two);
        }
        if !strict {
            out.push(bound.clone());
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn weighted_sum(&self, var: &str, parts: &[SumPart], bound: &Rational, conj: bool, env: &Env) -> Result<StateSet, EvalError> {
        if parts.iter().any(|p| p.grid.is_empty()) {
            // empty index set
            return Ok(if conj { self.full() } else { StateSet::EMPTY });
        }
        // feasible[j][w]: grid values c with w in ext(template_j[c])
        let mut feasible: Vec<Vec<Vec<Rational>>> = Vec::new();
        for part in parts {
            let mut grid = part.grid.clone();
            grid.sort();
            grid.dedup();
            let mut per_world = vec![Vec::new(); self.n()];
            match self.measured_template(&part.template, var, env)? {
                Some((level, body)) => {
                    for (w, slot) in per_world.iter_mut().enumerate() {
                        let m = self.level_value(level, w, body)?;
                        *slot = grid.iter().filter(|c| **c <= m).cloned().collect();
                    }
                }
                None => {
                    for c in &grid {
                        let ext = self.eval(&part.template, &env.bind(var, c.clone()))?;
                        for w in ext.states() {
                            per_world[w].push(c.clone());
                        }
                    }
                }
            }
            feasible.push(per_world);
        }
        let best = |j: usize, cs: &[Rational]| -> Option<Rational> {
            let w = &parts[j].weight;
            let pick = if w.is_negative() { cs.iter().min() } else { cs.iter().max() };
            pick.map(|c| c * w)
        };
        let mut out = StateSet::EMPTY;
        if conj {
            // tuples meeting the bound; c participates iff it can be completed
            let maxes: Vec<Rational> = (0..parts.len()).map(|j| best(j, &parts[j].grid).unwrap()).collect();
            let total_max: Rational = maxes.iter().sum();
            for w in 0..self.n() {
                let ok = parts.iter().enumerate().all(|(j, part)| {
                    part.grid.iter().all(|c| {
                        let reach = &total_max - &maxes[j] + c * &part.weight;
                        reach < *bound || feasible[j][w].contains(c)
                    })
                });
                if ok {
                    out = out.union(StateSet::singleton(w));
                }
            }
        } else {
            for w in 0..self.n() {
                let mut sum = Rational::zero();
                let mut ok = true;
                for j in 0..parts.len() {
                    match best(j, &feasible[j][w]) {
                        Some(x) => sum += x,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok && sum >= *bound {
                    out = out.union(StateSet::singleton(w));
                }
            }
        }
        Ok(out)
    }

    /// `L[var] ψ`, `I[var] ψ` or `LN[n, var] ψ` with `ψ` free of `var`:
    /// returns the operator level and the extension of `ψ`.
    fn measured_template(&self, f: &Formula, var: &str, env: &Env) -> Result<Option<(u32, StateSet)>, EvalError> {
        let (level, t, body) = match f {
            Formula::L(t, b) => (1, t, b),
            Formula::InitL(t, b) => (0, t, b),
            Formula::NStepL(n, t, b) if env.trunc.is_none() || *n < 2 => (*n, t, b),
            _ => return Ok(None),
        };
        if t.is_var() != Some(var) || body.threshold_vars().contains(var) {
            return Ok(None);
        }
        Ok(Some((level, self.eval(body, env)?)))
    }

    fn lim(&self, lower: bool, t: &Rational, body: &Formula, env: &Env) -> Result<StateSet, EvalError> {
        let mut psis: Vec<Formula> = Vec::new();
        collect_iters(body, &mut psis);
        let mut base = Vec::new();
        for psi in &psis {
            base.push(self.eval(psi, env)?);
        }
        let ext_at = |sets: &[StateSet]| -> Result<StateSet, EvalError> {
            let mut e = env.clone();
            e.iters = psis.iter().cloned().zip(sets.iter().copied()).collect();
            self.eval(body, &e)
        };
        if let Some(bounds) = env.trunc {
            // ⋀_{n<=N} ⋁_{m<=K} ⋀_{m<=k<=K} L_{t∸1/n} / M_{t+1/n}
            let mut seq = Vec::new();
            let mut cur = base.clone();
            for _ in 0..=bounds.k_cap {
                seq.push(ext_at(&cur)?);
                cur = cur.iter().map(|s| self.preimage(*s)).collect();
            }
            let mut acc = self.full();
            for n in 1..=bounds.nat_cap {
                let slack = Rational::new(1.into(), n.into());
                let mut some_m = StateSet::EMPTY;
                for m in 0..seq.len() {
                    let mut all_k = self.full();
                    for e in &seq[m..] {
                        all_k = all_k.inter(if lower {
                            self.t.at_least(*e, &monus(t, &slack))
                        } else {
                            self.t.at_most(*e, &(t + &slack))
                        });
                    }
                    some_m = some_m.union(all_k);
                }
                acc = acc.inter(some_m);
            }
            return Ok(acc);
        }
        // exact: the tuple of preimage sets is eventually periodic
        let mut seen: BTreeMap<Vec<StateSet>, usize> = BTreeMap::new();
        let mut tuples: Vec<Vec<StateSet>> = Vec::new();
        let mut cur = base;
        let start = loop {
            if let Some(&i) = seen.get(&cur) {
                break i;
            }
            seen.insert(cur.clone(), tuples.len());
            tuples.push(cur.clone());
            cur = cur.iter().map(|s| self.preimage(*s)).collect();
        };
        let mut acc = self.full();
        for tuple in &tuples[start..] {
            let e = ext_at(tuple)?;
            acc = acc.inter(if lower { self.t.at_least(e, t) } else { self.t.at_most(e, t) });
        }
        Ok(acc)
    }

    /// Validity at every world under every valuation of the formula's atoms.
    pub fn frame_valid(&self, f: &Formula, cap: u128) -> Result<Verdict, EvalError> {
        self.consequence(&[], f, cap)
    }

    /// Local consequence from a finite premise list: at every world of every
    /// model on this process, the premises jointly force the conclusion.
    pub fn consequence(&self, premises: &[Formula], f: &Formula, cap: u128) -> Result<Verdict, EvalError> {
        self.consequence_all(premises, std::slice::from_ref(f), cap)
    }

    /// Frame validity of every formula in a list. Valuations are enumerated
    /// once; the first failing valuation wins, then the first failing formula.
    pub fn frame_valid_all(&self, fs: &[Formula], cap: u128) -> Result<Verdict, EvalError> {
        self.consequence_all(&[], fs, cap)
    }

    fn consequence_all(&self, premises: &[Formula], conclusions: &[Formula], cap: u128) -> Result<Verdict, EvalError> {
        let mut atoms: BTreeSet<String> = BTreeSet::new();
        for g in premises.iter().chain(conclusions) {
            atoms.extend(g.atoms());
        }
        let atoms: Vec<String> = atoms.into_iter().collect();
        let n = self.n() as u32;
        let needed = (n as u128).checked_mul(atoms.len() as u128).filter(|&bits| bits < 128).map(|bits| 1u128 << bits);
        match needed {
            Some(k) if k <= cap => {}
            _ => {
                return Err(EvalError::ResourceCap {
                    needed: format!("2^{}", n as usize * atoms.len()),
                    cap,
                })
            }
        }
        let mut val: Valuation = atoms.iter().map(|a| (a.clone(), StateSet::EMPTY)).collect();
        let limit = 1u64 << n;
        let mut digits = vec![0u64; atoms.len()];
        loop {
            let mut holds = self.full();
            for g in premises {
                holds = holds.inter(self.extension(g, &val)?);
            }
            if !holds.is_empty() {
                for f in conclusions {
                    let ext = self.extension(f, &val)?;
                    let bad = holds.inter(ext.complement(self.n()));
                    if let Some(w) = bad.states().next() {
                        return Ok(Verdict::Counterexample { valuation: val, world: w, formula: f.clone() });
                    }
                }
            }
            // odometer, last atom fastest
            let mut i = atoms.len();
            loop {
                if i == 0 {
                    return Ok(Verdict::Valid);
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < limit {
                    val.insert(atoms[i].clone(), StateSet(digits[i]));
                    break;
                }
                digits[i] = 0;
                val.insert(atoms[i].clone(), StateSet::EMPTY);
            }
        }
    }
}

fn collect_iters(f: &Formula, out: &mut Vec<Formula>) {
    if let Formula::Iter(psi) = f {
        if !out.contains(&**psi) {
            out.push((**psi).clone());
        }
        return;
    }
    for c in f.children() {
        collect_iters(c, out);
    }
}

/// Threshold slots mentioning `var`, with the operator level whose values
/// decide them (0 = initial distribution).
fn collect_slots(f: &Formula, var: &str, out: &mut Vec<(Affine, u32)>) -> Result<(), EvalError> {
    let mentions = |t: &Thr| t.terms.contains_key(var);
    match f {
        Formula::L(t, _) | Formula::LimL(t, _) | Formula::LimM(t, _) if mentions(t) => out.push((t.clone(), 1)),
        Formula::InitL(t, _) if mentions(t) => out.push((t.clone(), 0)),
        Formula::NStepL(n, t, _) if mentions(t) => out.push((t.clone(), *n)),
        Formula::BigAnd(fam) | Formula::BigOr(fam) => match fam {
            Family::Threshold { var: v, bound, .. } | Family::WeightedSum { var: v, bound, .. } => {
                if mentions(bound) {
                    return Err(EvalError::Unsupported(format!("hole {} in a nested family bound", var)));
                }
                if v == var {
                    // shadowed
                    return Ok(());
                }
            }
            _ => {}
        },
        _ => {}
    }
    for c in f.children() {
        collect_slots(c, var, out)?;
    }
    Ok(())
}

/// Closed-form extension in a model.
pub fn extension(m: &Model, f: &Formula) -> Result<StateSet, EvalError> {
    Evaluator::new(&m.process).extension(f, &m.valuation)
}

pub fn satisfies(m: &Model, w: usize, f: &Formula) -> Result<bool, EvalError> {
    Ok(extension(m, f)?.contains(w))
}

pub fn frame_valid(p: &DynamicMarkovProcess, f: &Formula) -> Result<Verdict, EvalError> {
    Evaluator::new(p).frame_valid(f, DEFAULT_MODEL_CAP)
}

pub fn truncated_eval(m: &Model, f: &Formula, bounds: &TruncBounds) -> Result<StateSet, EvalError> {
    Evaluator::new(&m.process).truncated_extension(f, &m.valuation, bounds)
}

/// Γ ⊨ φ on one process, for finite Γ.
pub fn consequence(p: &DynamicMarkovProcess, premises: &[Formula], f: &Formula) -> Result<Verdict, EvalError> {
    Evaluator::new(p).consequence(premises, f, DEFAULT_MODEL_CAP)
}

/// Replays a counterexample: the formula must fail at the reported world.
pub fn replays(p: &DynamicMarkovProcess, v: &Verdict) -> bool {
    match v {
        Verdict::Valid => true,
        Verdict::Counterexample { valuation, world, formula } => {
            matches!(Evaluator::new(p).satisfies(*world, formula, valuation), Ok(false))
        }
    }
}
