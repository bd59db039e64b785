//! Axiom schemas per system and the matcher that recognises their instances.
//!
//! Patterns are ordinary formulas whose atoms and threshold variables carry a
//! `$` prefix. Atoms bind to whole formulas, threshold variables to affine
//! expressions over the caller's metavariables. Thresholds that are not a
//! bare variable (such as `$r + $s`) are checked after all bindings are known.

use super::linear::Linear;
use crate::formula::{parse, Affine, Family, Formula};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum System {
    #[serde(rename = "H_DPL")]
    Dpl,
    #[serde(rename = "H_M")]
    M,
    #[serde(rename = "H_Pure")]
    Pure,
    #[serde(rename = "H_ADS")]
    Ads,
}

impl System {
    pub const ALL: [System; 4] = [System::Dpl, System::M, System::Pure, System::Ads];

    pub fn name(self) -> &'static str {
        match self {
            System::Dpl => "H_DPL",
            System::M => "H_M",
            System::Pure => "H_Pure",
            System::Ads => "H_ADS",
        }
    }

    /// Does every theorem of `other` belong to this system?
    pub fn extends(self, other: System) -> bool {
        use System::*;
        matches!((self, other), (a, b) if a == b) || matches!((self, other), (M | Pure | Ads, Dpl) | (Pure | Ads, M))
    }

    /// Axiom names available in this system, in catalog order.
    pub fn axioms(self) -> Vec<&'static str> {
        let mut out = vec!["Taut", "FA1", "FA2", "FA3", "FA4", "Mono", "FuncNext", "ConjNext"];
        if self != System::Dpl {
            out.push("M");
        }
        match self {
            System::Pure => out.push("Id"),
            System::Ads => out.extend(["H1", "H2"]),
            _ => {}
        }
        out
    }

    /// The Archimedean rule may prefix `○ⁿ` only in the base system.
    pub fn nexted_archimedean(self) -> bool {
        self == System::Dpl
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for System {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        System::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s) || x.name()[2..].eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown system `{}`", s))
    }
}

pub struct Schema {
    pub name: String,
    pub pattern: Formula,
    pub side: Vec<Linear>,
}

fn schema_text(name: &str) -> Option<(&'static str, &'static [&'static str])> {
    Some(match name {
        "FA1" => ("L[0] false", &[]),
        "FA2" => ("L[r] !phi -> !L[s] phi", &["r + s > 1"]),
        "FA3" => ("L[r] (phi & psi) & L[s] (phi & !psi) -> L[r + s] phi", &["r + s <= 1"]),
        "FA4" => ("!L[r] (phi & psi) & !L[s] (phi & !psi) -> !L[r + s] phi", &["r + s <= 1"]),
        "Mono" => ("L[1] (phi -> psi) -> (L[r] phi -> L[r] psi)", &[]),
        "FuncNext" => ("O !phi <-> !O phi", &[]),
        "ConjNext" => ("O (phi & psi) <-> (O phi & O psi)", &[]),
        "M" => ("L[r] O phi <-> O L[r] phi", &[]),
        "Id" => ("O phi <-> phi", &[]),
        "H1" => ("L[r] phi -> L[1] L[r] phi", &[]),
        "H2" => ("!L[r] phi -> L[1] !L[r] phi", &[]),
        _ => return None,
    })
}

/// The schema behind an axiom name (`Taut` has none).
pub fn schema(name: &str) -> Option<Schema> {
    let (text, side) = schema_text(name)?;
    let f = parse(text).expect("catalog pattern parses");
    let vars: Vec<String> = f.threshold_vars().into_iter().collect();
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    let side = side
        .iter()
        .map(|s| Linear::parse(s).expect("catalog side condition parses").substitute(&dollar_vars(&vars)))
        .collect();
    Some(Schema { name: name.to_string(), pattern: to_pattern(&f, &atoms, &vars), side })
}

fn dollar_vars(vars: &[String]) -> BTreeMap<String, Affine> {
    vars.iter().map(|v| (v.clone(), Affine::var(&format!("${}", v)))).collect()
}

/// Turn `atoms` and threshold `vars` of `f` into pattern metavariables.
pub fn to_pattern(f: &Formula, atoms: &[String], vars: &[String]) -> Formula {
    let amap = atoms.iter().map(|a| (a.clone(), Formula::Atom(format!("${}", a)))).collect();
    f.subst_atoms(&amap).subst_thresholds(&dollar_vars(vars))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bindings {
    pub formulas: BTreeMap<String, Formula>,
    pub thresholds: BTreeMap<String, Affine>,
}

impl Bindings {
    /// Threshold bindings keyed without the `$` prefix.
    pub fn plain_thresholds(&self) -> BTreeMap<String, Affine> {
        self.thresholds.iter().map(|(k, v)| (k[1..].to_string(), v.clone())).collect()
    }
}

/// Match `cand` against `pat`, returning the bindings or why it failed.
pub fn matches(pat: &Formula, cand: &Formula) -> Result<Bindings, String> {
    let mut b = Bindings::default();
    let mut deferred = vec![];
    unify(pat, cand, &mut b, &mut deferred)?;
    for (p, c) in deferred {
        if let Some(v) = p.vars().find(|v| v.starts_with('$') && !b.thresholds.contains_key(*v)) {
            return Err(format!("threshold `{}` is not determined", &v[1..]));
        }
        let got = p.substitute(&b.thresholds);
        if got != c {
            return Err(format!("threshold {} should be {}", c, got));
        }
    }
    Ok(b)
}

fn unify(pat: &Formula, cand: &Formula, b: &mut Bindings, deferred: &mut Vec<(Affine, Affine)>) -> Result<(), String> {
    use Formula::*;
    let mut thr = |p: &Affine, c: &Affine, b: &mut Bindings| -> Result<(), String> {
        match p.is_var() {
            Some(v) if v.starts_with('$') => match b.thresholds.get(v) {
                Some(old) if old != c => Err(format!("threshold `{}` bound to both {} and {}", &v[1..], old, c)),
                Some(_) => Ok(()),
                None => {
                    b.thresholds.insert(v.to_string(), c.clone());
                    Ok(())
                }
            },
            _ => {
                deferred.push((p.clone(), c.clone()));
                Ok(())
            }
        }
    };
    match (pat, cand) {
        (Atom(v), _) if v.starts_with('$') => match b.formulas.get(v) {
            Some(old) if old != cand => Err(format!("`{}` stands for two different formulas", &v[1..])),
            Some(_) => Ok(()),
            None => {
                b.formulas.insert(v.clone(), cand.clone());
                Ok(())
            }
        },
        (Atom(a), Atom(c)) if a == c => Ok(()),
        (Neg(p), Neg(c)) | (Next(p), Next(c)) | (Iter(p), Iter(c)) => unify(p, c, b, deferred),
        (And(ps), And(cs)) | (BigAnd(Family::Finite(ps)), BigAnd(Family::Finite(cs))) | (BigOr(Family::Finite(ps)), BigOr(Family::Finite(cs)))
            if ps.len() == cs.len() =>
        {
            ps.iter().zip(cs).try_for_each(|(p, c)| unify(p, c, b, deferred))
        }
        (L(tp, p), L(tc, c)) | (InitL(tp, p), InitL(tc, c)) | (LimL(tp, p), LimL(tc, c)) | (LimM(tp, p), LimM(tc, c)) => {
            thr(tp, tc, b)?;
            unify(p, c, b, deferred)
        }
        (NStepL(np, tp, p), NStepL(nc, tc, c)) if np == nc => {
            thr(tp, tc, b)?;
            unify(p, c, b, deferred)
        }
        (BigAnd(_), BigAnd(_)) | (BigOr(_), BigOr(_)) if pat == cand => Ok(()),
        _ => Err(format!("expected the shape of `{}`, found {}", crate::formula::print(pat), cand.kind())),
    }
}
