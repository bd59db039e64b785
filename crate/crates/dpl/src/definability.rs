//! Defining formulas for stochastic properties and the harness that compares
//! their frame validity against the exact oracles.

use crate::formula::{
    and, and2, iff, implies, init_l, iter, l, m, monus, neg, next, next_n, nstep_l, or, print, Affine, Family,
    Formula, Rational, SumPart,
};
use crate::process::{self, DynamicMarkovProcess, StateSet};
use crate::semantics::{critical_k, Evaluator, EvalError, Table, Variant, Verdict, DEFAULT_MODEL_CAP};
use crate::stochastic::{self, StochasticError};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

/// Largest horizon searched when sizing the visit-count disjunction.
pub const RECURRENCE_HORIZON_CAP: u32 = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropertyId {
    MeasurePreserving,
    Ergodic,
    Mixing,
    Stationary,
    Irreducible,
    Recurrent,
    PurelyProbabilistic,
    Harsanyi,
}

impl PropertyId {
    pub const ALL: [PropertyId; 8] = [
        PropertyId::MeasurePreserving,
        PropertyId::Ergodic,
        PropertyId::Mixing,
        PropertyId::Stationary,
        PropertyId::Irreducible,
        PropertyId::Recurrent,
        PropertyId::PurelyProbabilistic,
        PropertyId::Harsanyi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropertyId::MeasurePreserving => "measure-preserving",
            PropertyId::Ergodic => "ergodic",
            PropertyId::Mixing => "mixing",
            PropertyId::Stationary => "stationary",
            PropertyId::Irreducible => "irreducible",
            PropertyId::Recurrent => "recurrent",
            PropertyId::PurelyProbabilistic => "purely-probabilistic",
            PropertyId::Harsanyi => "harsanyi",
        }
    }

    /// Frame class on which the correspondence is claimed.
    pub fn admissible(self, p: &DynamicMarkovProcess) -> Result<(), DefError> {
        let fail = |what: &str| Err(DefError::FrameClass(format!("{} needs {}", self.name(), what)));
        match self {
            PropertyId::Ergodic if !p.is_dps() => fail("a dynamic probability space"),
            PropertyId::Mixing if !(p.is_dps() && p.measure_preserving()) => fail("an abstract dynamical system"),
            PropertyId::Stationary | PropertyId::Irreducible | PropertyId::Recurrent if p.init.is_none() => {
                fail("an initial distribution")
            }
            _ => Ok(()),
        }
    }

    pub fn oracle(self, p: &DynamicMarkovProcess) -> Result<bool, DefError> {
        self.admissible(p)?;
        Ok(match self {
            PropertyId::MeasurePreserving => p.measure_preserving(),
            PropertyId::Ergodic => stochastic::is_ergodic(p)?,
            PropertyId::Mixing => stochastic::is_mixing(p)?,
            PropertyId::Stationary => stochastic::is_stationary(p)?,
            PropertyId::Irreducible => stochastic::is_irreducible(p)?,
            PropertyId::Recurrent => stochastic::is_recurrent(p)?,
            PropertyId::PurelyProbabilistic => p.is_pure(),
            PropertyId::Harsanyi => stochastic::harsanyi_holds(p),
        })
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PropertyId {
    type Err = DefError;
    fn from_str(s: &str) -> Result<Self, DefError> {
        PropertyId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| DefError::Params(format!("unknown property {:?}", s)))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DefError {
    #[error("frame class: {0}")]
    FrameClass(String),
    #[error("parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error("resource cap: {0}")]
    Resource(String),
}

/// Finite instantiation data for the rational- and natural-indexed parts of
/// the defining formulas.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Params {
    /// Indices `r` (and `s` for mixing).
    pub thresholds: Vec<Rational>,
    /// Values a `c` in a weighted-sum family may take (stationarity).
    pub grid: Vec<Rational>,
    /// Slack indices `l` and bin counts `k` (stationarity).
    pub ls: Vec<u32>,
    pub ks: Vec<u32>,
    /// Length of the natural-indexed disjunctions (frame size).
    pub horizon: u32,
    /// Visit-count disjunction for recurrence.
    pub visits: Option<Visits>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Visits {
    /// Number of steps `K` summed (`m = 0..=K`).
    pub steps: u32,
    /// Bound the sum must reach.
    pub bound: Rational,
    /// Per step `m`, the values `T^m` attains (`π` at `m = 0`).
    pub grids: Vec<Vec<Rational>>,
}

/// `𝕃⁽ⁿ⁾_r` as a closed-form node: `I` at 0, `L` at 1, `LN` above.
pub fn nstep(n: u32, r: impl Into<Affine>, f: Formula) -> Formula {
    match n {
        0 => init_l(r, f),
        1 => l(r, f),
        _ => nstep_l(n, r, f),
    }
}

/// `𝕄⁽ⁿ⁾_r φ := 𝕃⁽ⁿ⁾_{1-r} ¬φ`
pub fn nstep_m(n: u32, r: Rational, f: Formula) -> Formula {
    nstep(n, Rational::one() - r, neg(f))
}

fn p() -> Formula {
    Formula::Atom("p".into())
}

fn q() -> Formula {
    Formula::Atom("q".into())
}

/// `⋁_{n=1..N} ¬𝕄⁽ⁿ⁾₀ p`: some `n`-step transition reaches `p`.
fn reaches(horizon: u32) -> Formula {
    or((1..=horizon.max(1)).map(|n| neg(nstep_m(n, Rational::zero(), p()))).collect())
}

/// The defining formulas of `id` under the given instantiation. The
/// conjunction of the list defines the property.
pub fn defining_formulas(id: PropertyId, params: &Params, variant: Variant) -> Result<Vec<Formula>, DefError> {
    let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(DefError::Params(format!("{} needs {}", id, what))) };
    Ok(match id {
        PropertyId::MeasurePreserving => {
            need(!params.thresholds.is_empty(), "thresholds")?;
            params.thresholds.iter().map(|r| iff(l(r.clone(), next(p())), next(l(r.clone(), p())))).collect()
        }
        PropertyId::Ergodic => match variant {
            Variant::AsPrinted => vec![implies(iff(next(p()), p()), or(vec![l(Rational::zero(), p()), l(Rational::one(), p())]))],
            Variant::Repaired => {
                need(params.horizon >= 1, "a horizon")?;
                let invariant = and(
                    (0..params.horizon).map(|k| l(Rational::one(), next_n(k, iff(next(p()), p())))).collect(),
                );
                vec![implies(invariant, or(vec![m(Rational::zero(), p()), l(Rational::one(), p())]))]
            }
        },
        PropertyId::Mixing => {
            need(!params.thresholds.is_empty(), "thresholds")?;
            let body = crate::formula::NatTemplate::new(and2(iter(p()), q())).expect("one marker").0;
            let mut out = Vec::new();
            for r in &params.thresholds {
                for s in &params.thresholds {
                    let rs = r * s;
                    out.push(implies(
                        and2(l(r.clone(), p()), l(s.clone(), q())),
                        Formula::LimL(rs.clone().into(), Box::new(body.clone())),
                    ));
                    out.push(implies(
                        and2(m(r.clone(), p()), m(s.clone(), q())),
                        Formula::LimM(rs.into(), Box::new(body.clone())),
                    ));
                }
            }
            out
        }
        PropertyId::Stationary => {
            need(!params.thresholds.is_empty() && !params.ls.is_empty() && !params.ks.is_empty(), "thresholds, ls and ks")?;
            params.thresholds.iter().map(|r| iff(init_l(r.clone(), p()), stationary_rhs(r, params, variant))).collect()
        }
        PropertyId::Irreducible => {
            need(params.horizon >= 1, "a horizon")?;
            vec![implies(neg(nstep_m(0, Rational::zero(), p())), reaches(params.horizon))]
        }
        PropertyId::Recurrent => {
            need(params.horizon >= 1, "a horizon")?;
            let v = params.visits.as_ref().ok_or_else(|| DefError::Params("recurrent needs visit data".into()))?;
            let parts = (0..=v.steps)
                .map(|step| SumPart {
                    weight: Rational::one(),
                    grid: v.grids[step as usize].clone(),
                    template: nstep(step, Affine::var("c"), p()),
                })
                .collect();
            let visits = Formula::BigOr(Family::WeightedSum { var: "c".into(), parts, bound: v.bound.clone().into() });
            let acc = reaches(params.horizon);
            let antecedent = match variant {
                Variant::AsPrinted => acc,
                Variant::Repaired => {
                    // every state reachable from here reaches p
                    let mut cs = vec![acc.clone()];
                    cs.extend((1..=params.horizon).map(|j| nstep(j, Rational::one(), acc.clone())));
                    and(cs)
                }
            };
            vec![
                defining_formulas(PropertyId::Irreducible, params, variant)?.remove(0),
                implies(antecedent, implies(p(), visits)),
            ]
        }
        PropertyId::PurelyProbabilistic => vec![iff(next(p()), p())],
        PropertyId::Harsanyi => {
            need(!params.thresholds.is_empty(), "thresholds")?;
            let mut out = Vec::new();
            for r in &params.thresholds {
                let lr = l(r.clone(), p());
                out.push(implies(lr.clone(), l(Rational::one(), lr.clone())));
                out.push(implies(neg(lr.clone()), l(Rational::one(), neg(lr))));
            }
            out
        }
    })
}

/// `⋀_l ⋁_k` (repaired) or `⋁_l ⋀_k` (as printed) over the binned
/// initial-probability sums of `L_{i/k} p ∧ ¬L_{(i+1)/k} p`.
fn stationary_rhs(r: &Rational, params: &Params, variant: Variant) -> Formula {
    let bin = |i: u32, k: u32| {
        let lo = l(Rational::new(i.into(), k.into()), p());
        match (variant, i == k) {
            (Variant::Repaired, true) => lo,
            _ => and2(lo, neg(l(Rational::new((i + 1).into(), k.into()), p()))),
        }
    };
    let sum = |lv: u32, k: u32| {
        let top_i = if variant == Variant::Repaired { k } else { k - 1 };
        let parts = (1..=top_i)
            .map(|i| SumPart {
                weight: Rational::new(i.into(), k.into()),
                grid: params.grid.clone(),
                template: init_l(Affine::var("c"), bin(i, k)),
            })
            .collect();
        let bound = monus(r, &Rational::new(1.into(), lv.into()));
        Formula::BigOr(Family::WeightedSum { var: "c".into(), parts, bound: bound.into() })
    };
    let fam = |fs: Vec<Formula>, conj: bool| if conj { Formula::BigAnd(Family::Finite(fs)) } else { Formula::BigOr(Family::Finite(fs)) };
    let outer_conj = variant == Variant::Repaired;
    fam(
        params.ls.iter().map(|&lv| fam(params.ks.iter().map(|&k| sum(lv, k)).collect(), !outer_conj)).collect(),
        outer_conj,
    )
}

/// Literal expansion of `𝕃⁽ⁿ⁾_r φ` with `l <= l_cap`, `k <= k_cap`; the
/// weighted-sum families range over `grid`.
pub fn expand_nstep_literal(
    n: u32,
    r: &Rational,
    body: &Formula,
    l_cap: u32,
    k_cap: u32,
    grid: &[Rational],
    variant: Variant,
) -> Result<Formula, DefError> {
    if l_cap == 0 || k_cap == 0 {
        return Err(DefError::Params("caps must be positive".into()));
    }
    if n <= 1 {
        return Ok(nstep(n, r.clone(), body.clone()));
    }
    if variant == Variant::AsPrinted && n >= 3 {
        return Err(DefError::Params("the as-printed outer operator needs a symbolic threshold below level 2".into()));
    }
    let mut conj = Vec::new();
    for lv in 1..=l_cap {
        let mut disj = Vec::new();
        for k in 1..=k_cap {
            let top_i = if variant == Variant::Repaired { k } else { k - 1 };
            let mut parts = Vec::new();
            for i in 1..=top_i {
                let lo = expand_nstep_literal(n - 1, &Rational::new(i.into(), k.into()), body, l_cap, k_cap, grid, variant)?;
                let bin = if i == k {
                    lo
                } else {
                    let hi = expand_nstep_literal(n - 1, &Rational::new((i + 1).into(), k.into()), body, l_cap, k_cap, grid, variant)?;
                    and2(lo, neg(hi))
                };
                let template = match variant {
                    Variant::Repaired => l(Affine::var("c"), bin),
                    Variant::AsPrinted => nstep(n - 1, Affine::var("c"), bin),
                };
                parts.push(SumPart { weight: Rational::new(i.into(), k.into()), grid: grid.to_vec(), template });
            }
            let bound = monus(r, &Rational::new(1.into(), lv.into()));
            disj.push(Formula::BigOr(Family::WeightedSum { var: "c".into(), parts, bound: bound.into() }));
        }
        conj.push(Formula::BigOr(Family::Finite(disj)));
    }
    Ok(Formula::BigAnd(Family::Finite(conj)))
}

fn with_midpoints(vals: &BTreeSet<Rational>) -> Vec<Rational> {
    let mut out: BTreeSet<Rational> = vals.clone();
    out.insert(Rational::zero());
    out.insert(Rational::one());
    let sorted: Vec<Rational> = out.iter().cloned().collect();
    let two = Rational::from_integer(2.into());
    for w in sorted.windows(2) {
        out.insert((&w[0] + &w[1]) / &two);
    }
    out.into_iter().collect()
}

/// Instantiation at the critical values of `p`: attained measure values (with
/// midpoints and endpoints where cheap), frame-size horizons, and the bin and
/// slack indices that make the truncated sums exact.
pub fn critical_params(id: PropertyId, p: &DynamicMarkovProcess) -> Result<Params, DefError> {
    id.admissible(p)?;
    let ev = Evaluator::new(p);
    let horizon = p.n_states as u32;
    let mut params = Params { horizon, ..Params::default() };
    match id {
        PropertyId::MeasurePreserving | PropertyId::Harsanyi => params.thresholds = with_midpoints(&ev.attained(1)?),
        PropertyId::Mixing => params.thresholds = ev.attained(1)?.into_iter().collect(),
        PropertyId::Stationary => {
            let pi = p.init.as_ref().unwrap();
            let pit = stochastic::vec_mul(pi, &p.kernel);
            let pi_vals = Table::new(vec![pi.clone()]).attained();
            let pit_vals = Table::new(vec![pit]).attained();
            let thresholds: BTreeSet<Rational> = pi_vals.union(&pit_vals).cloned().collect();
            // slack below the gap between each threshold and the πT values under it
            let mut gap: Option<Rational> = None;
            for r in &thresholds {
                if let Some(v) = pit_vals.range(..r.clone()).next_back() {
                    let d = r - v;
                    if gap.as_ref().map_or(true, |g| d < *g) {
                        gap = Some(d);
                    }
                }
            }
            let l_star = gap.map_or(1, |g| (Rational::one() / g).floor().to_integer().try_into().unwrap_or(u32::MAX) + 1);
            let k_star = critical_k(&ev, 1)?;
            params.thresholds = thresholds.into_iter().collect();
            params.grid = pi_vals.into_iter().collect();
            params.ls = if l_star == 1 { vec![1] } else { vec![1, l_star] };
            params.ks = if k_star == 1 { vec![1] } else { vec![1, k_star] };
        }
        PropertyId::Recurrent => params.visits = Some(visits(p, &ev)?),
        _ => {}
    }
    Ok(params)
}

/// Sizes the visit-count disjunction: the bound exceeds every finite
/// potential, and `K` steps bring every divergent sum up to it.
fn visits(p: &DynamicMarkovProcess, ev: &Evaluator) -> Result<Visits, DefError> {
    let n = p.n_states;
    let mut bound = Rational::zero();
    let mut divergent = Vec::new();
    for bits in 1..1u64 << n {
        let a = StateSet(bits);
        for w in a.states() {
            match stochastic::potential(p, w, a) {
                Some(u) => {
                    if u > bound {
                        bound = u;
                    }
                }
                None => divergent.push((w, a)),
            }
        }
    }
    bound += Rational::one();
    let mut grids = vec![ev.attained(0)?.into_iter().collect::<Vec<_>>()];
    let mut sums: Vec<Rational> = divergent.iter().map(|(_, a)| ev.level_value(0, 0, *a)).collect::<Result<_, _>>()?;
    let mut steps = 0;
    while sums.iter().any(|s| *s < bound) {
        steps += 1;
        if steps > RECURRENCE_HORIZON_CAP {
            return Err(DefError::Resource(format!("visit sums need more than {} steps", RECURRENCE_HORIZON_CAP)));
        }
        for (s, (w, a)) in sums.iter_mut().zip(&divergent) {
            *s += ev.level_value(steps, *w, *a)?;
        }
        grids.push(ev.attained(steps)?.into_iter().collect());
    }
    Ok(Visits { steps, bound, grids })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub valuation: BTreeMap<String, Vec<usize>>,
    pub world: usize,
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrespondenceReport {
    pub property: PropertyId,
    pub label: String,
    pub frame_verdict: bool,
    pub oracle_verdict: bool,
    pub agree: bool,
    pub witness: Option<Witness>,
}

/// Frame validity of the defining formulas at critical values, against the
/// oracle.
pub fn correspondence_check(id: PropertyId, p: &DynamicMarkovProcess, variant: Variant) -> Result<CorrespondenceReport, DefError> {
    let params = critical_params(id, p)?;
    let formulas = defining_formulas(id, &params, variant)?;
    let oracle_verdict = id.oracle(p)?;
    let ev = Evaluator::new(p);
    let witness = match ev.frame_valid_all(&formulas, DEFAULT_MODEL_CAP)? {
        Verdict::Valid => None,
        Verdict::Counterexample { valuation, world, formula } => Some(Witness {
            valuation: valuation.iter().map(|(k, s)| (k.clone(), s.states().collect())).collect(),
            world,
            formula: print(&formula),
        }),
    };
    let frame_verdict = witness.is_none();
    Ok(CorrespondenceReport {
        property: id,
        label: String::new(),
        frame_verdict,
        oracle_verdict,
        agree: frame_verdict == oracle_verdict,
        witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exhaustive,
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Exact state count (exhaustive) or the largest one sampled (random).
    pub n_states: usize,
    pub denom_bound: u32,
    pub samples: usize,
    pub seed: u64,
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub property: PropertyId,
    pub mode: Mode,
    pub total: usize,
    pub agree: usize,
    pub disagree: usize,
    pub witnesses: Vec<CorrespondenceReport>,
}

/// Witnesses kept in a summary.
pub const MAX_WITNESSES: usize = 10;

/// Every frame of the property's class over `n` states and the grid.
pub fn enumerate_class(id: PropertyId, n: usize, denom_bound: u32) -> Vec<DynamicMarkovProcess> {
    let dists = process::all_distributions(n, denom_bound);
    let maps = process::all_maps(n);
    let identity: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    match id {
        PropertyId::MeasurePreserving | PropertyId::Ergodic | PropertyId::Mixing => {
            for mu in &dists {
                for f in &maps {
                    let p = DynamicMarkovProcess::new(vec![mu.clone(); n], f.clone(), None);
                    if id != PropertyId::Mixing || p.measure_preserving() {
                        out.push(p);
                    }
                }
            }
        }
        PropertyId::Stationary | PropertyId::Irreducible | PropertyId::Recurrent => {
            for_each_kernel(&dists, n, &mut |k| {
                for pi in &dists {
                    out.push(DynamicMarkovProcess::new(k.to_vec(), identity.clone(), Some(pi.clone())));
                }
            });
        }
        PropertyId::PurelyProbabilistic | PropertyId::Harsanyi => {
            for_each_kernel(&dists, n, &mut |k| {
                for f in &maps {
                    out.push(DynamicMarkovProcess::new(k.to_vec(), f.clone(), None));
                }
            });
        }
    }
    out
}

fn for_each_kernel(dists: &[Vec<Rational>], n: usize, emit: &mut dyn FnMut(&[Vec<Rational>])) {
    let mut idx = vec![0usize; n];
    loop {
        let k: Vec<Vec<Rational>> = idx.iter().map(|&i| dists[i].clone()).collect();
        emit(&k);
        let mut j = n;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < dists.len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// A random frame of the property's class; odd samples come from a generator
/// biased towards the property.
pub fn sample_class(id: PropertyId, seed: u64, index: u64, max_states: usize, bound: u32) -> DynamicMarkovProcess {
    use rand::Rng;
    let mut rng = process::rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index));
    let n = rng.gen_range(2..=max_states.max(2));
    let biased = index % 2 == 1;
    match id {
        PropertyId::MeasurePreserving if biased => process::random_measure_preserving(&mut rng, n, bound, false),
        PropertyId::MeasurePreserving => process::random_process_with(&mut rng, n, bound, false),
        PropertyId::Ergodic if biased => process::random_ads(&mut rng, n, bound),
        PropertyId::Ergodic => process::random_dps(&mut rng, n, bound),
        PropertyId::Mixing => process::random_ads(&mut rng, n, bound),
        PropertyId::Stationary if biased => {
            // make π stationary by construction: a row of a power-limit is
            // not exact, so take π from a kernel with identical rows
            let mut p = process::random_process_with(&mut rng, n, bound, true);
            let mu = p.kernel[0].clone();
            p.kernel = vec![mu.clone(); n];
            p.init = Some(mu);
            p
        }
        PropertyId::Stationary | PropertyId::Irreducible | PropertyId::Recurrent => {
            let mut p = process::random_process_with(&mut rng, n, bound, true);
            p.map = (0..n).collect();
            p
        }
        PropertyId::PurelyProbabilistic if biased => process::random_pure(&mut rng, n, bound),
        PropertyId::PurelyProbabilistic => process::random_process_with(&mut rng, n, bound, false),
        PropertyId::Harsanyi if biased => process::random_harsanyi(&mut rng, n, bound),
        PropertyId::Harsanyi => process::random_process_with(&mut rng, n, bound, false),
    }
}

pub fn run_experiment(id: PropertyId, config: &ExperimentConfig) -> Result<(Vec<CorrespondenceReport>, Summary), DefError> {
    let frames: Vec<(String, DynamicMarkovProcess)> = match config.mode {
        Mode::Exhaustive => enumerate_class(id, config.n_states, config.denom_bound)
            .into_iter()
            .enumerate()
            .map(|(i, p)| (format!("frame {}", i), p))
            .collect(),
        Mode::Random => (0..config.samples as u64)
            .map(|i| (format!("seed {} sample {}", config.seed, i), sample_class(id, config.seed, i, config.n_states, config.denom_bound)))
            .collect(),
    };
    let mut reports = Vec::with_capacity(frames.len());
    for (label, p) in frames {
        let mut r = correspondence_check(id, &p, config.variant)?;
        r.label = label;
        reports.push(r);
    }
    let agree = reports.iter().filter(|r| r.agree).count();
    let summary = Summary {
        property: id,
        mode: config.mode,
        total: reports.len(),
        agree,
        disagree: reports.len() - agree,
        witnesses: reports.iter().filter(|r| !r.agree).take(MAX_WITNESSES).cloned().collect(),
    };
    Ok((reports, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{int, parse, rat};

    fn dps(mu: Vec<Rational>, map: Vec<usize>) -> DynamicMarkovProcess {
        let n = mu.len();
        DynamicMarkovProcess::new(vec![mu; n], map, None)
    }

    #[test]
    fn printed_shapes() {
        let f = defining_formulas(PropertyId::Ergodic, &Params::default(), Variant::AsPrinted).unwrap();
        assert_eq!(f, vec![parse("(O p <-> p) -> (L[0] p | L[1] p)").unwrap()]);
        let params = Params { thresholds: vec![rat(1, 2)], ..Params::default() };
        let f = defining_formulas(PropertyId::MeasurePreserving, &params, Variant::Repaired).unwrap();
        assert_eq!(f, vec![parse("L[1/2] O p <-> O L[1/2] p").unwrap()]);
        let f = defining_formulas(PropertyId::PurelyProbabilistic, &Params::default(), Variant::Repaired).unwrap();
        assert_eq!(f, vec![parse("O p <-> p").unwrap()]);
    }

    #[test]
    fn correspondence_examples() {
        let half = vec![rat(1, 2), rat(1, 2)];
        let r = correspondence_check(PropertyId::MeasurePreserving, &dps(half.clone(), vec![1, 0]), Variant::Repaired).unwrap();
        assert!(r.frame_verdict && r.oracle_verdict);
        let r = correspondence_check(PropertyId::MeasurePreserving, &dps(half.clone(), vec![0, 0]), Variant::Repaired).unwrap();
        assert!(!r.frame_verdict && !r.oracle_verdict);
        assert_eq!(r.witness.unwrap().valuation["p"], vec![0]);
        let r = correspondence_check(PropertyId::Ergodic, &dps(half, vec![0, 1]), Variant::Repaired).unwrap();
        assert!(!r.frame_verdict && !r.oracle_verdict);
    }

    #[test]
    fn as_printed_ergodic_formula_is_trivial() {
        let p = dps(vec![rat(1, 2), rat(1, 2)], vec![0, 1]);
        let r = correspondence_check(PropertyId::Ergodic, &p, Variant::AsPrinted).unwrap();
        assert!(r.frame_verdict && !r.oracle_verdict);
    }

    #[test]
    fn per_world_ergodic_antecedent_rejects_a_cycle() {
        // uniform 3-cycle is ergodic, yet A = {0,1} satisfies O p <-> p at 0
        let p = dps(vec![rat(1, 3); 3], vec![1, 2, 0]);
        assert!(stochastic::is_ergodic(&p).unwrap());
        let f = parse("(O p <-> p) -> (M[0] p | L[1] p)").unwrap();
        assert!(!crate::semantics::frame_valid(&p, &f).unwrap().is_valid());
        assert!(correspondence_check(PropertyId::Ergodic, &p, Variant::Repaired).unwrap().agree);
    }

    #[test]
    fn per_world_recurrence_antecedent_counterexample() {
        let p = DynamicMarkovProcess::new(
            vec![vec![int(0), int(1), int(0)], vec![rat(1, 2), int(0), rat(1, 2)], vec![int(0), int(0), int(1)]],
            vec![0, 1, 2],
            Some(vec![int(0), int(0), int(1)]),
        );
        assert!(stochastic::is_recurrent(&p).unwrap());
        let printed = correspondence_check(PropertyId::Recurrent, &p, Variant::AsPrinted).unwrap();
        assert!(!printed.frame_verdict);
        assert_eq!(printed.witness.unwrap().valuation["p"], vec![0]);
        assert!(correspondence_check(PropertyId::Recurrent, &p, Variant::Repaired).unwrap().agree);
    }

    #[test]
    fn expansion_base_cases() {
        let body = parse("p").unwrap();
        let grid = vec![int(0), int(1)];
        assert_eq!(expand_nstep_literal(1, &rat(1, 2), &body, 4, 4, &grid, Variant::Repaired).unwrap(), parse("L[1/2] p").unwrap());
        assert_eq!(expand_nstep_literal(0, &rat(1, 2), &body, 4, 4, &grid, Variant::Repaired).unwrap(), parse("I[1/2] p").unwrap());
        assert!(expand_nstep_literal(2, &rat(1, 2), &body, 0, 4, &grid, Variant::Repaired).is_err());
    }

    #[test]
    fn expansion_on_swap_chain() {
        let p = DynamicMarkovProcess::new(vec![vec![int(0), int(1)], vec![int(1), int(0)]], vec![0, 1], None);
        let ev = Evaluator::new(&p);
        let grid: Vec<Rational> = ev.attained(1).unwrap().into_iter().collect();
        let f = expand_nstep_literal(2, &int(1), &parse("p").unwrap(), 4, 4, &grid, Variant::Repaired).unwrap();
        let v: crate::process::Valuation = [("p".to_string(), StateSet(1))].into_iter().collect();
        assert!(ev.satisfies(0, &f, &v).unwrap());
        assert!(ev.satisfies(0, &parse("LN[2, 1] p").unwrap(), &v).unwrap());
    }

    #[test]
    fn small_exhaustive_runs_agree() {
        for id in PropertyId::ALL {
            let cfg = ExperimentConfig { mode: Mode::Exhaustive, n_states: 2, denom_bound: 2, samples: 0, seed: 0, variant: Variant::Repaired };
            let (_, s) = run_experiment(id, &cfg).unwrap();
            assert_eq!(s.disagree, 0, "{} {:?}", id, s.witnesses);
        }
    }

    #[test]
    fn pure_enumeration_matches_identity() {
        let cfg = ExperimentConfig { mode: Mode::Exhaustive, n_states: 2, denom_bound: 1, samples: 0, seed: 0, variant: Variant::Repaired };
        let (reports, _) = run_experiment(PropertyId::PurelyProbabilistic, &cfg).unwrap();
        let frames = enumerate_class(PropertyId::PurelyProbabilistic, 2, 1);
        for (r, p) in reports.iter().zip(&frames) {
            assert_eq!(r.frame_verdict, p.map == vec![0, 1]);
        }
    }
}
