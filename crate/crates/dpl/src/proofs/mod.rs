//! Checking derivations in the Hilbert systems for the logic.
//!
//! A proof file is a list of lemmas. Each lemma names its system, its
//! threshold metavariables with linear side conditions, an optional set of
//! assumptions, and numbered steps. The conclusion is the last step. Lemmas
//! that check become citable by later ones.

pub mod catalog;
pub mod linear;
pub mod taut;

pub use catalog::System;
pub use linear::{Constraints, Linear};

use crate::formula::{implies, l, l_chain, next, next_n, parse, parse_affine, print, Affine, Formula, Rational};
use crate::process::{self, DynamicMarkovProcess};
use crate::semantics::{EvalError, Evaluator, Verdict, DEFAULT_MODEL_CAP};
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofFile {
    pub lemmas: Vec<LemmaFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaFile {
    pub name: String,
    pub system: System,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub metavars: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub assumptions: Vec<String>,
    /// Optional restatement of the last step, checked if present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conclusion: Option<String>,
    pub steps: Vec<StepFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepFile {
    pub id: u32,
    pub formula: String,
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axiom: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub premises: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chain: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sub: Vec<StepFile>,
}

impl StepFile {
    pub fn new(id: u32, formula: &str, rule: &str) -> StepFile {
        StepFile {
            id,
            formula: formula.to_string(),
            rule: rule.to_string(),
            axiom: None,
            premises: vec![],
            index: None,
            lemma: None,
            param: None,
            exponent: None,
            chain: vec![],
            target: None,
            sub: vec![],
        }
    }
}

pub fn load(text: &str) -> Result<ProofFile, serde_json::Error> {
    serde_json::from_str(text)
}

/// A rejection: the lemma, the path of step ids into nested sub-derivations,
/// the rule, and the violated condition.
#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
pub struct CheckError {
    pub lemma: String,
    pub path: Vec<u32>,
    pub rule: String,
    pub reason: String,
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "lemma `{}`: {}", self.lemma, self.reason)
        } else {
            let p: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
            write!(f, "lemma `{}`, step {} ({}): {}", self.lemma, p.join(" > "), self.rule, self.reason)
        }
    }
}

/// A lemma that passed the checker.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma {
    pub name: String,
    pub system: System,
    pub constraints: Constraints,
    pub assumptions: Vec<Formula>,
    pub conclusion: Formula,
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub name: String,
    pub system: System,
    pub conclusion: Option<String>,
    pub error: Option<CheckError>,
}

impl Outcome {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Check every lemma in order. Only accepted lemmas may be cited later.
pub fn check_file(file: &ProofFile) -> (Vec<Outcome>, BTreeMap<String, Lemma>) {
    let mut lib = BTreeMap::new();
    let mut out = vec![];
    for lf in &file.lemmas {
        match check_lemma(lf, &lib) {
            Ok(lemma) => {
                out.push(Outcome {
                    name: lf.name.clone(),
                    system: lf.system,
                    conclusion: Some(print(&lemma.conclusion)),
                    error: None,
                });
                lib.insert(lf.name.clone(), lemma);
            }
            Err(e) => out.push(Outcome { name: lf.name.clone(), system: lf.system, conclusion: None, error: Some(e) }),
        }
    }
    (out, lib)
}

struct Ctx<'a> {
    system: System,
    assumptions: &'a [Formula],
    lib: &'a BTreeMap<String, Lemma>,
}

struct Fail {
    path: Vec<u32>,
    rule: String,
    reason: String,
}

fn fail<T>(id: u32, rule: &str, reason: impl Into<String>) -> Result<T, Fail> {
    Err(Fail { path: vec![id], rule: rule.to_string(), reason: reason.into() })
}

pub fn check_lemma(lf: &LemmaFile, lib: &BTreeMap<String, Lemma>) -> Result<Lemma, CheckError> {
    let top = |reason: String| CheckError { lemma: lf.name.clone(), path: vec![], rule: "lemma".into(), reason };
    if lib.contains_key(&lf.name) {
        return Err(top("duplicate lemma name".into()));
    }
    let vars: BTreeSet<String> = lf.metavars.iter().cloned().collect();
    let mut items = vec![];
    for c in &lf.constraints {
        let lin = Linear::parse(c).map_err(|e| top(format!("constraint `{}`: {}", c, e)))?;
        if let Some(v) = lin.expr.vars().find(|v| !vars.contains(*v)) {
            return Err(top(format!("constraint `{}` uses undeclared `{}`", c, v)));
        }
        items.push(lin);
    }
    let cs = Constraints::new(vars, items);
    if !cs.satisfiable() {
        return Err(top("side conditions are unsatisfiable".into()));
    }
    let mut assumptions = vec![];
    for a in &lf.assumptions {
        let f = parse(a).map_err(|e| top(format!("assumption `{}`: {}", a, e)))?;
        if let Some(v) = f.threshold_vars().into_iter().find(|v| !cs.vars.contains(v)) {
            return Err(top(format!("assumption `{}` uses undeclared `{}`", a, v)));
        }
        assumptions.push(f);
    }
    let ctx = Ctx { system: lf.system, assumptions: &assumptions, lib };
    let conclusion = check_steps(&ctx, &cs, &lf.steps)
        .map_err(|f| CheckError { lemma: lf.name.clone(), path: f.path, rule: f.rule, reason: f.reason })?;
    if let Some(text) = &lf.conclusion {
        let stated = parse(text).map_err(|e| top(format!("conclusion: {}", e)))?;
        if stated != conclusion {
            return Err(top(format!("stated conclusion differs from the last step `{}`", print(&conclusion))));
        }
    }
    Ok(Lemma { name: lf.name.clone(), system: lf.system, constraints: cs, assumptions, conclusion })
}

fn check_steps(ctx: &Ctx, cs: &Constraints, steps: &[StepFile]) -> Result<Formula, Fail> {
    let mut done: BTreeMap<u32, Formula> = BTreeMap::new();
    let mut last = None;
    for s in steps {
        if done.contains_key(&s.id) {
            return fail(s.id, &s.rule, "duplicate step id");
        }
        let f = check_step(ctx, cs, &done, s)?;
        done.insert(s.id, f.clone());
        last = Some(f);
    }
    match last {
        Some(f) => Ok(f),
        None => Err(Fail { path: vec![], rule: "lemma".into(), reason: "no steps".into() }),
    }
}

// Family templates mention their bound hole, so only finite families are entered.
fn thresholds(f: &Formula, out: &mut Vec<Affine>) {
    use crate::formula::Family;
    out.extend(f.own_thresholds().into_iter().cloned());
    if let Formula::BigAnd(fam) | Formula::BigOr(fam) = f {
        if !matches!(fam, Family::Finite(_)) {
            return;
        }
    }
    for c in f.children() {
        thresholds(c, out);
    }
}

fn premise<'d>(done: &'d BTreeMap<u32, Formula>, s: &StepFile, i: usize, want: usize) -> Result<&'d Formula, Fail> {
    if s.premises.len() != want {
        return fail(s.id, &s.rule, format!("expects {} premise(s), got {}", want, s.premises.len()));
    }
    let p = s.premises[i];
    match done.get(&p) {
        Some(f) => Ok(f),
        None => fail(s.id, &s.rule, format!("premise {} is not an earlier step", p)),
    }
}

fn check_step(ctx: &Ctx, cs: &Constraints, done: &BTreeMap<u32, Formula>, s: &StepFile) -> Result<Formula, Fail> {
    let rule = s.rule.as_str();
    let f = match parse(&s.formula) {
        Ok(f) => f,
        Err(e) => return fail(s.id, rule, format!("formula: {}", e)),
    };
    if let Some(v) = f.threshold_vars().into_iter().find(|v| !cs.vars.contains(v)) {
        return fail(s.id, rule, format!("undeclared metavariable `{}`", v));
    }
    let mut ts = vec![];
    thresholds(&f, &mut ts);
    if let Some(t) = ts.iter().find(|t| !cs.in_unit(t)) {
        return fail(s.id, rule, format!("threshold {} is not provably in [0, 1]", t));
    }
    match rule {
        "Axiom" => {
            let Some(name) = s.axiom.as_deref() else {
                return fail(s.id, rule, "missing axiom name");
            };
            if !ctx.system.axioms().contains(&name) {
                return fail(s.id, rule, format!("{} is not an axiom of {}", name, ctx.system));
            }
            if name == "Taut" {
                if !taut::is_tautology(&f) {
                    return fail(s.id, rule, "not a propositional tautology");
                }
            } else {
                let sch = catalog::schema(name).expect("catalogued axiom");
                let b = match catalog::matches(&sch.pattern, &f) {
                    Ok(b) => b,
                    Err(e) => return fail(s.id, rule, format!("not an instance of {}: {}", name, e)),
                };
                for side in &sch.side {
                    let need = side.substitute(&b.thresholds);
                    if !cs.entails(&need) {
                        return fail(s.id, rule, format!("side condition of {} not entailed: {}", name, need));
                    }
                }
            }
        }
        "Assumption" => {
            let Some(i) = s.index else {
                return fail(s.id, rule, "missing assumption index");
            };
            match ctx.assumptions.get(i) {
                Some(a) if *a == f => {}
                Some(_) => return fail(s.id, rule, format!("formula differs from assumption {}", i)),
                None => return fail(s.id, rule, format!("no assumption {}", i)),
            }
        }
        "Theorem" => {
            let Some(name) = s.lemma.as_deref() else {
                return fail(s.id, rule, "missing lemma name");
            };
            let Some(lem) = ctx.lib.get(name) else {
                return fail(s.id, rule, format!("`{}` is not an accepted earlier lemma", name));
            };
            if !lem.assumptions.is_empty() {
                return fail(s.id, rule, format!("`{}` depends on assumptions", name));
            }
            if !ctx.system.extends(lem.system) {
                return fail(s.id, rule, format!("`{}` is a theorem of {}, not of {}", name, lem.system, ctx.system));
            }
            let atoms: Vec<String> = lem.conclusion.atoms().into_iter().collect();
            let vars: Vec<String> = lem.constraints.vars.iter().cloned().collect();
            let pat = catalog::to_pattern(&lem.conclusion, &atoms, &vars);
            let b = match catalog::matches(&pat, &f) {
                Ok(b) => b,
                Err(e) => return fail(s.id, rule, format!("not an instance of `{}`: {}", name, e)),
            };
            let map = b.plain_thresholds();
            for v in &vars {
                match map.get(v) {
                    Some(t) if cs.in_unit(t) => {}
                    Some(t) => return fail(s.id, rule, format!("{} := {} is not provably in [0, 1]", v, t)),
                    None => return fail(s.id, rule, format!("metavariable `{}` of `{}` is not determined", v, name)),
                }
            }
            for c in &lem.constraints.items {
                let need = c.substitute(&map);
                if !cs.entails(&need) {
                    return fail(s.id, rule, format!("side condition of `{}` not entailed: {}", name, need));
                }
            }
        }
        "MP" => {
            let imp = premise(done, s, 0, 2)?;
            let ante = premise(done, s, 1, 2)?;
            match imp.as_implication() {
                Some((a, b)) if a == ante && *b == f => {}
                Some((a, _)) if a != ante => return fail(s.id, rule, "second premise is not the antecedent of the first"),
                Some(_) => return fail(s.id, rule, "formula is not the consequent of the first premise"),
                None => return fail(s.id, rule, "first premise is not an implication"),
            }
        }
        "NecL1" | "NecNext" => {
            if !ctx.assumptions.is_empty() {
                return fail(s.id, rule, "necessitation is not allowed in a derivation from assumptions");
            }
            let p = premise(done, s, 0, 1)?.clone();
            let want = if rule == "NecL1" { l(Rational::one(), p) } else { next(p) };
            if want != f {
                return fail(s.id, rule, format!("expected `{}`", print(&want)));
            }
        }
        "GArch" => check_garch(ctx, cs, s, &f)?,
        other => return fail(s.id, other, format!("unknown rule `{}`", other)),
    }
    Ok(f)
}

fn check_garch(ctx: &Ctx, cs: &Constraints, s: &StepFile, f: &Formula) -> Result<(), Fail> {
    let rule = "GArch";
    let n = s.exponent.unwrap_or(0);
    if n > 0 && !ctx.system.nexted_archimedean() {
        return fail(s.id, rule, format!("{} only has the Archimedean rule without a Next prefix", ctx.system));
    }
    let Some(sigma) = s.param.as_deref() else {
        return fail(s.id, rule, "missing parameter");
    };
    if cs.vars.contains(sigma) {
        return fail(s.id, rule, format!("parameter `{}` is not fresh", sigma));
    }
    if f.threshold_vars().contains(sigma) {
        return fail(s.id, rule, format!("parameter `{}` occurs in the conclusion", sigma));
    }
    let parse_thr = |t: &str| parse_affine(t).map_err(|e| format!("threshold `{}`: {}", t, e));
    let Some(target) = s.target.as_deref() else {
        return fail(s.id, rule, "missing target threshold");
    };
    let target = parse_thr(target).or_else(|e| fail(s.id, rule, e))?;
    let chain: Vec<Affine> = s.chain.iter().map(|t| parse_thr(t)).collect::<Result<_, _>>().or_else(|e| fail(s.id, rule, e))?;
    let Some((psi, rhs)) = f.as_implication() else {
        return fail(s.id, rule, "conclusion is not an implication");
    };
    // peel ○ⁿ L_{chain} L_target to find φ
    let mut body = rhs;
    for _ in 0..n {
        match body {
            Formula::Next(b) => body = b,
            _ => return fail(s.id, rule, format!("consequent does not start with {} Next operator(s)", n)),
        }
    }
    let mut rs = chain.clone();
    rs.push(target.clone());
    for r in &rs {
        match body {
            Formula::L(t, b) if t == r => body = b,
            _ => return fail(s.id, rule, format!("consequent does not continue with L[{}]", r)),
        }
    }
    let phi = body.clone();
    let mut sub_rs = chain;
    sub_rs.push(Affine::var(sigma));
    let want = implies(psi.clone(), next_n(n, l_chain(&sub_rs, phi)));
    let sub_cs = cs.with(Some(sigma), vec![Linear::gt(&target, &Affine::var(sigma))]);
    let got = check_steps(ctx, &sub_cs, &s.sub).map_err(|mut e| {
        e.path.insert(0, s.id);
        e
    })?;
    if got != want {
        return fail(s.id, rule, format!("sub-derivation ends in `{}`, expected `{}`", print(&got), print(&want)));
    }
    Ok(())
}

/// Random processes in the frame class matching a system.
pub fn sample_frame(system: System, seed: u64, n: usize, bound: u32) -> DynamicMarkovProcess {
    let mut rng = process::rng(seed);
    match system {
        System::Dpl => process::random_process_with(&mut rng, n, bound, false),
        System::M => process::random_measure_preserving(&mut rng, n, bound, false),
        System::Pure => process::random_pure(&mut rng, n, bound),
        System::Ads => process::random_ads(&mut rng, n, bound),
    }
}

/// Ground instances of the metavariables on a small grid that meet the side
/// conditions.
pub fn ground_instances(cs: &Constraints, grid: &[Rational]) -> Vec<BTreeMap<String, Affine>> {
    let vars: Vec<&String> = cs.vars.iter().collect();
    let mut out = vec![];
    let mut idx = vec![0usize; vars.len()];
    loop {
        let map: BTreeMap<String, Affine> =
            vars.iter().zip(&idx).map(|(v, &i)| ((*v).clone(), Affine::constant(grid[i].clone()))).collect();
        if cs.items.iter().all(|c| Constraints::default().entails(&c.substitute(&map))) {
            out.push(map);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < grid.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Semantic cross-check of an accepted lemma: every ground instance on the
/// grid is a local consequence of its assumptions on every sampled frame of
/// the system's class. Returns a description of the first failure.
pub fn cross_check(lemma: &Lemma, frames: &[DynamicMarkovProcess], grid: &[Rational]) -> Result<Option<String>, EvalError> {
    let insts = ground_instances(&lemma.constraints, grid);
    for (i, p) in frames.iter().enumerate() {
        let ev = Evaluator::new(p);
        for map in &insts {
            let prem: Vec<Formula> = lemma.assumptions.iter().map(|a| a.subst_thresholds(map)).collect();
            let concl = lemma.conclusion.subst_thresholds(map);
            if let Verdict::Counterexample { world, .. } = ev.consequence(&prem, &concl, DEFAULT_MODEL_CAP)? {
                return Ok(Some(format!("frame {} world {}: `{}` fails", i, world, print(&concl))));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::rat;

    fn lemma(system: System, vars: &[&str], cs: &[&str], steps: Vec<StepFile>) -> LemmaFile {
        LemmaFile {
            name: "t".into(),
            system,
            metavars: vars.iter().map(|s| s.to_string()).collect(),
            constraints: cs.iter().map(|s| s.to_string()).collect(),
            assumptions: vec![],
            conclusion: None,
            steps,
        }
    }

    fn axiom(id: u32, f: &str, name: &str) -> StepFile {
        let mut s = StepFile::new(id, f, "Axiom");
        s.axiom = Some(name.into());
        s
    }

    #[test]
    fn fa2_side_condition() {
        let lib = BTreeMap::new();
        let ok = lemma(System::Dpl, &[], &[], vec![axiom(1, "L[3/5] !p -> !L[3/5] p", "FA2")]);
        assert!(check_lemma(&ok, &lib).is_ok());
        let bad = lemma(System::Dpl, &[], &[], vec![axiom(1, "L[2/5] !p -> !L[3/5] p", "FA2")]);
        let e = check_lemma(&bad, &lib).unwrap_err();
        assert_eq!(e.path, vec![1]);
        assert!(e.reason.contains("side condition"), "{}", e);
        let sym = lemma(System::Dpl, &["r", "s"], &["s >= 1/2", "r >= 3/5"], vec![axiom(1, "L[r] !p -> !L[s] p", "FA2")]);
        assert!(check_lemma(&sym, &lib).is_ok());
    }

    #[test]
    fn system_gates_axioms_and_archimedean_prefix() {
        let lib = BTreeMap::new();
        let m = lemma(System::Dpl, &[], &[], vec![axiom(1, "L[1/2] O p <-> O L[1/2] p", "M")]);
        assert!(check_lemma(&m, &lib).unwrap_err().reason.contains("not an axiom"));
        let mut g = StepFile::new(2, "O L[1] p -> O L[1] p", "GArch");
        g.param = Some("t".into());
        g.exponent = Some(1);
        g.target = Some("1".into());
        let l = lemma(System::M, &[], &[], vec![g]);
        assert!(check_lemma(&l, &lib).unwrap_err().reason.contains("without a Next prefix"));
    }

    #[test]
    fn necessitation_under_assumptions() {
        let mut l = lemma(System::Dpl, &[], &[], vec![]);
        l.assumptions = vec!["p".into()];
        let mut a = StepFile::new(1, "p", "Assumption");
        a.index = Some(0);
        let mut n = StepFile::new(2, "O p", "NecNext");
        n.premises = vec![1];
        l.steps = vec![a, n];
        let e = check_lemma(&l, &BTreeMap::new()).unwrap_err();
        assert_eq!((e.path.clone(), e.rule.as_str()), (vec![2], "NecNext"));
    }

    #[test]
    fn grid_instances_respect_constraints() {
        let cs = Constraints::new(["r".to_string(), "s".to_string()], vec![Linear::parse("s < r").unwrap()]);
        let grid = [rat(0, 1), rat(1, 2), rat(1, 1)];
        assert_eq!(ground_instances(&cs, &grid).len(), 3);
    }
}
