//! Exact oracles for the stochastic and dynamical properties: n-step
//! kernels, stationarity, ergodicity, mixing, irreducibility, recurrence and
//! the potential kernel.

use crate::formula::Rational;
use crate::process::{dist_measure, DynamicMarkovProcess, StateSet};
use num_traits::{One, Zero};

pub type Matrix = Vec<Vec<Rational>>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StochasticError {
    #[error("process has no initial distribution")]
    MissingInit,
    #[error("process is not a dynamic probability space")]
    NotDps,
    #[error("process is not an abstract dynamical system")]
    NotAds,
}

/// How `n = 0` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroStep {
    /// `T⁰ := π`, one world-independent distribution.
    WithInit,
    /// `T⁰ := I`.
    Dirac,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NStep {
    Matrix(Matrix),
    Vector(Vec<Rational>),
}

pub fn identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()).collect()
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let m = b.first().map_or(0, |r| r.len());
    let mut out = vec![vec![Rational::zero(); m]; n];
    for i in 0..n {
        for (k, aik) in a[i].iter().enumerate() {
            if aik.is_zero() {
                continue;
            }
            for j in 0..m {
                if !b[k][j].is_zero() {
                    out[i][j] += aik * &b[k][j];
                }
            }
        }
    }
    out
}

pub fn vec_mul(v: &[Rational], a: &Matrix) -> Vec<Rational> {
    let m = a.first().map_or(0, |r| r.len());
    let mut out = vec![Rational::zero(); m];
    for (k, vk) in v.iter().enumerate() {
        if vk.is_zero() {
            continue;
        }
        for j in 0..m {
            out[j] += vk * &a[k][j];
        }
    }
    out
}

/// `Tⁿ`, with `n = 0` read per `mode`.
pub fn n_step(p: &DynamicMarkovProcess, n: u32, mode: ZeroStep) -> Result<NStep, StochasticError> {
    if n == 0 {
        return match mode {
            ZeroStep::WithInit => p.init.clone().map(NStep::Vector).ok_or(StochasticError::MissingInit),
            ZeroStep::Dirac => Ok(NStep::Matrix(identity(p.n_states))),
        };
    }
    let mut k = NStepKernel::new(p);
    Ok(NStep::Matrix(k.power(n).clone()))
}

/// Memo of matrix powers `T¹, T², ...` for one process.
#[derive(Debug, Clone)]
pub struct NStepKernel {
    powers: Vec<Matrix>,
}

impl NStepKernel {
    pub fn new(p: &DynamicMarkovProcess) -> Self {
        NStepKernel { powers: vec![p.kernel.clone()] }
    }

    /// `Tⁿ` for `n >= 1`.
    pub fn power(&mut self, n: u32) -> &Matrix {
        assert!(n >= 1, "power needs n >= 1");
        while self.powers.len() < n as usize {
            let next = mat_mul(self.powers.last().unwrap(), &self.powers[0]);
            self.powers.push(next);
        }
        &self.powers[n as usize - 1]
    }
}

pub fn is_stationary(p: &DynamicMarkovProcess) -> Result<bool, StochasticError> {
    let pi = p.init.as_ref().ok_or(StochasticError::MissingInit)?;
    Ok(vec_mul(pi, &p.kernel) == *pi)
}

/// Sets with `f⁻¹(A) = A` are unions of the weakly connected components of
/// the functional graph of `f`.
pub fn invariant_components(p: &DynamicMarkovProcess) -> Vec<StateSet> {
    let n = p.n_states;
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while c[r] != r {
            r = c[r];
        }
        c[x] = r;
        r
    }
    for w in 0..n {
        let (a, b) = (find(&mut comp, w), find(&mut comp, p.map[w]));
        if a != b {
            comp[a.max(b)] = a.min(b);
        }
    }
    let mut out: Vec<StateSet> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for w in 0..n {
        let r = find(&mut comp, w);
        match roots.iter().position(|&x| x == r) {
            Some(i) => out[i] = out[i].union(StateSet::singleton(w)),
            None => {
                roots.push(r);
                out.push(StateSet::singleton(w));
            }
        }
    }
    out
}

pub fn is_ergodic(p: &DynamicMarkovProcess) -> Result<bool, StochasticError> {
    if !p.is_dps() {
        return Err(StochasticError::NotDps);
    }
    if p.n_states <= 12 {
        return Ok(is_ergodic_exhaustive(p));
    }
    // a union of components is trivial for every choice iff at most one
    // component carries mass
    let mu = &p.kernel[0];
    let charged = invariant_components(p).into_iter().filter(|c| !dist_measure(mu, *c).is_zero()).count();
    Ok(charged <= 1)
}

/// Every invariant set has measure 0 or 1, by enumeration of all subsets.
pub fn is_ergodic_exhaustive(p: &DynamicMarkovProcess) -> bool {
    let mu = &p.kernel[0];
    (0..1u64 << p.n_states).all(|bits| {
        let a = StateSet(bits);
        p.preimage(a) != a || {
            let m = dist_measure(mu, a);
            m.is_zero() || m.is_one()
        }
    })
}

/// `μ(f⁻ᵏ(A) ∩ B) → μ(A)μ(B)` for every pair, exactly.
pub fn is_mixing(p: &DynamicMarkovProcess) -> Result<bool, StochasticError> {
    if !p.classify().abstract_dynamical_system {
        return Err(StochasticError::NotAds);
    }
    let mu = &p.kernel[0];
    let all = 1u64 << p.n_states;
    for a in 0..all {
        let a = StateSet(a);
        let (_, cycle) = p.preimage_orbit(a);
        let ma = dist_measure(mu, a);
        for b in 0..all {
            let b = StateSet(b);
            let target = &ma * dist_measure(mu, b);
            if cycle.iter().any(|c| dist_measure(mu, c.inter(b)) != target) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `reach[w]`: states reachable from `w` in one or more positive steps.
pub fn reachability(p: &DynamicMarkovProcess) -> Vec<StateSet> {
    let n = p.n_states;
    let succ: Vec<StateSet> = (0..n)
        .map(|w| StateSet::from_states((0..n).filter(|&v| !p.kernel[w][v].is_zero())))
        .collect();
    let mut reach = succ.clone();
    loop {
        let mut changed = false;
        for w in 0..n {
            let mut acc = reach[w];
            for v in reach[w].states() {
                acc = acc.union(succ[v]);
            }
            if acc != reach[w] {
                reach[w] = acc;
                changed = true;
            }
        }
        if !changed {
            return reach;
        }
    }
}

/// States in closed strongly connected components of the positive-transition
/// graph.
pub fn recurrent_states(p: &DynamicMarkovProcess) -> StateSet {
    let reach = reachability(p);
    StateSet::from_states((0..p.n_states).filter(|&w| reach[w].states().all(|v| reach[v].contains(w))))
}

pub fn is_irreducible(p: &DynamicMarkovProcess) -> Result<bool, StochasticError> {
    let pi = p.init.as_ref().ok_or(StochasticError::MissingInit)?;
    let reach = reachability(p);
    Ok((0..p.n_states).filter(|&a| !pi[a].is_zero()).all(|a| reach.iter().all(|r| r.contains(a))))
}

/// The subset definition read literally: every `A` with `π(A) > 0` gets
/// `Tⁿ(w, A) > 0` for some `1 <= n <= n_states`, from every `w`.
pub fn is_irreducible_literal(p: &DynamicMarkovProcess) -> Result<bool, StochasticError> {
    let pi = p.init.as_ref().ok_or(StochasticError::MissingInit)?;
    let mut k = NStepKernel::new(p);
    let powers: Vec<Matrix> = (1..=p.n_states as u32).map(|m| k.power(m).clone()).collect();
    Ok((1..1u64 << p.n_states).map(StateSet).filter(|&a| !dist_measure(pi, a).is_zero()).all(|a| {
        (0..p.n_states).all(|w| powers.iter().any(|t| !dist_measure(&t[w], a).is_zero()))
    }))
}

/// `A` is reached in one or more steps from every state.
pub fn is_accessible(reach: &[StateSet], a: StateSet) -> bool {
    reach.iter().all(|r| !r.inter(a).is_empty())
}

/// `U(w, A) = ∞` iff some recurrent state of `A` is reachable from `w` in
/// zero or more steps.
pub fn potential_diverges(reach: &[StateSet], recurrent: StateSet, w: usize, a: StateSet) -> bool {
    let from_w = reach[w].union(StateSet::singleton(w));
    !from_w.inter(a).inter(recurrent).is_empty()
}

pub fn is_recurrent(p: &DynamicMarkovProcess) -> Result<bool, StochasticError> {
    if !is_irreducible(p)? {
        return Ok(false);
    }
    let reach = reachability(p);
    let rec = recurrent_states(p);
    Ok((1..1u64 << p.n_states)
        .map(StateSet)
        .filter(|&a| is_accessible(&reach, a))
        .all(|a| a.states().all(|w| potential_diverges(&reach, rec, w, a))))
}

/// `U(w, A) = Σ_{n>=0} Tⁿ(w, A)` with `T⁰ = I`; `None` when it diverges.
/// The finite case solves with the fundamental matrix of the transient part
/// that cannot reach a recurrent state of `A`.
pub fn potential(p: &DynamicMarkovProcess, w: usize, a: StateSet) -> Option<Rational> {
    let reach = reachability(p);
    let rec = recurrent_states(p);
    if potential_diverges(&reach, rec, w, a) {
        return None;
    }
    // states reachable from w; none of them reaches a recurrent A-state
    let zone: Vec<usize> = reach[w].union(StateSet::singleton(w)).states().filter(|&v| !rec.contains(v)).collect();
    if !zone.contains(&w) {
        // w is recurrent and its class avoids A
        return Some(Rational::zero());
    }
    // (I - Q) x = 1_A on the transient zone
    let m = zone.len();
    let mut aug: Vec<Vec<Rational>> = vec![vec![Rational::zero(); m + 1]; m];
    for (i, &u) in zone.iter().enumerate() {
        for (j, &v) in zone.iter().enumerate() {
            aug[i][j] = if i == j { Rational::one() } else { Rational::zero() } - &p.kernel[u][v];
        }
        aug[i][m] = if a.contains(u) { Rational::one() } else { Rational::zero() };
    }
    let x = solve(aug)?;
    let i = zone.iter().position(|&u| u == w).unwrap();
    Some(x[i].clone())
}

/// Gauss–Jordan elimination on an augmented square system.
pub fn solve(mut aug: Vec<Vec<Rational>>) -> Option<Vec<Rational>> {
    let m = aug.len();
    for col in 0..m {
        let piv = (col..m).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, piv);
        let inv = Rational::one() / &aug[col][col];
        for x in aug[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..m {
            if r != col && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                for c in col..=m {
                    let delta = &f * &aug[col][c];
                    aug[r][c] -= delta;
                }
            }
        }
    }
    Some(aug.into_iter().map(|row| row[m].clone()).collect())
}

pub fn harsanyi_holds(p: &DynamicMarkovProcess) -> bool {
    p.harsanyi()
}
