//! Finite dynamic Markov processes: kernel, dynamic map, optional initial
//! distribution. States are `0..n` and every subset is measurable.

use crate::formula::{parse_rational, Rational};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Largest supported state count (state sets are 64-bit masks).
pub const MAX_STATES: usize = 63;

/// A subset of `0..n` as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateSet(pub u64);

impl StateSet {
    pub const EMPTY: StateSet = StateSet(0);

    pub fn full(n: usize) -> StateSet {
        StateSet(if n >= 64 { u64::MAX } else { (1u64 << n) - 1 })
    }

    pub fn singleton(w: usize) -> StateSet {
        StateSet(1 << w)
    }

    pub fn from_states(states: impl IntoIterator<Item = usize>) -> StateSet {
        StateSet(states.into_iter().fold(0, |acc, w| acc | (1 << w)))
    }

    pub fn contains(self, w: usize) -> bool {
        self.0 >> w & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, o: StateSet) -> StateSet {
        StateSet(self.0 | o.0)
    }

    pub fn inter(self, o: StateSet) -> StateSet {
        StateSet(self.0 & o.0)
    }

    pub fn complement(self, n: usize) -> StateSet {
        StateSet(!self.0 & StateSet::full(n).0)
    }

    pub fn states(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..64).filter(move |w| bits >> w & 1 == 1)
    }
}

impl fmt::Display for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.states().map(|w| w.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// Proposition name to extension.
pub type Valuation = BTreeMap<String, StateSet>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DynamicMarkovProcess {
    pub n_states: usize,
    /// `kernel[w][v] = T(w, {v})`
    pub kernel: Vec<Vec<Rational>>,
    pub map: Vec<usize>,
    pub init: Option<Vec<Rational>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessClassification {
    pub measure_preserving: bool,
    pub purely_probabilistic: bool,
    #[serde(rename = "dps")]
    pub dynamic_probability_space: bool,
    #[serde(rename = "ads")]
    pub abstract_dynamical_system: bool,
    pub harsanyi: bool,
}

impl DynamicMarkovProcess {
    pub fn new(kernel: Vec<Vec<Rational>>, map: Vec<usize>, init: Option<Vec<Rational>>) -> Self {
        DynamicMarkovProcess { n_states: kernel.len(), kernel, map, init }
    }

    /// All type invariants, checked exactly.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let n = self.n_states;
        let mut errs = Vec::new();
        if n == 0 {
            errs.push("no states".to_string());
        }
        if n > MAX_STATES {
            errs.push(format!("{} states exceed the supported maximum of {}", n, MAX_STATES));
        }
        if self.kernel.len() != n {
            errs.push(format!("kernel has {} rows, expected {}", self.kernel.len(), n));
        }
        for (w, row) in self.kernel.iter().enumerate() {
            if row.len() != n {
                errs.push(format!("row {} has {} entries, expected {}", w, row.len(), n));
                continue;
            }
            check_distribution(row, &format!("row {}", w), &mut errs);
        }
        if self.map.len() != n {
            errs.push(format!("map has {} entries, expected {}", self.map.len(), n));
        }
        for (w, &v) in self.map.iter().enumerate() {
            if v >= n {
                errs.push(format!("map out of range: f({}) = {}", w, v));
            }
        }
        if let Some(pi) = &self.init {
            if pi.len() != n {
                errs.push(format!("init has {} entries, expected {}", pi.len(), n));
            } else {
                check_distribution(pi, "init", &mut errs);
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn full(&self) -> StateSet {
        StateSet::full(self.n_states)
    }

    /// `T(w, A)`
    pub fn measure(&self, w: usize, a: StateSet) -> Rational {
        dist_measure(&self.kernel[w], a)
    }

    /// `f⁻¹(A)`
    pub fn preimage(&self, a: StateSet) -> StateSet {
        StateSet(
            self.map
                .iter()
                .enumerate()
                .filter(|(_, &v)| a.contains(v))
                .fold(0, |acc, (w, _)| acc | (1 << w)),
        )
    }

    pub fn preimage_k(&self, a: StateSet, k: usize) -> StateSet {
        (0..k).fold(a, |s, _| self.preimage(s))
    }

    /// Eventually periodic decomposition of `k ↦ f⁻ᵏ(A)`.
    pub fn preimage_orbit(&self, a: StateSet) -> (Vec<StateSet>, Vec<StateSet>) {
        let mut seq = vec![a];
        let mut seen = BTreeMap::new();
        seen.insert(a, 0usize);
        loop {
            let next = self.preimage(*seq.last().unwrap());
            if let Some(&start) = seen.get(&next) {
                let cycle = seq.split_off(start);
                return (seq, cycle);
            }
            seen.insert(next, seq.len());
            seq.push(next);
        }
    }

    /// Singleton form: `T(w, f⁻¹{a}) = T(f(w), {a})` for all `w, a`. By finite
    /// additivity this is equivalent to the condition over all subsets.
    pub fn measure_preserving_singletons(&self) -> bool {
        (0..self.n_states).all(|w| {
            (0..self.n_states).all(|a| {
                self.measure(w, self.preimage(StateSet::singleton(a))) == self.kernel[self.map[w]][a]
            })
        })
    }

    /// `T(w, f⁻¹(A)) = T(f(w), A)` for every subset `A`.
    pub fn measure_preserving_exhaustive(&self) -> bool {
        let n = self.n_states;
        (0..1u64 << n).all(|bits| {
            let a = StateSet(bits);
            let pre = self.preimage(a);
            (0..n).all(|w| self.measure(w, pre) == self.measure(self.map[w], a))
        })
    }

    pub fn measure_preserving(&self) -> bool {
        if self.n_states <= 12 {
            self.measure_preserving_exhaustive()
        } else {
            self.measure_preserving_singletons()
        }
    }

    pub fn is_dps(&self) -> bool {
        self.kernel.iter().all(|row| *row == self.kernel[0])
    }

    pub fn is_pure(&self) -> bool {
        self.map.iter().enumerate().all(|(w, &v)| w == v)
    }

    /// Every world gives zero mass to worlds whose row differs from its own.
    pub fn harsanyi(&self) -> bool {
        (0..self.n_states).all(|w| {
            (0..self.n_states).all(|v| self.kernel[v] == self.kernel[w] || self.kernel[w][v].is_zero())
        })
    }

    pub fn classify(&self) -> ProcessClassification {
        let mp = self.measure_preserving();
        let dps = self.is_dps();
        ProcessClassification {
            measure_preserving: mp,
            purely_probabilistic: self.is_pure(),
            dynamic_probability_space: dps,
            abstract_dynamical_system: dps && mp,
            harsanyi: self.harsanyi(),
        }
    }

    /// `π(A)`, when an initial distribution is present.
    pub fn init_measure(&self, a: StateSet) -> Option<Rational> {
        self.init.as_ref().map(|pi| dist_measure(pi, a))
    }

    /// Relabel states: state `w` becomes `perm[w]`.
    pub fn permute(&self, perm: &[usize]) -> DynamicMarkovProcess {
        let n = self.n_states;
        let mut kernel = vec![vec![Rational::zero(); n]; n];
        let mut map = vec![0; n];
        for w in 0..n {
            for v in 0..n {
                kernel[perm[w]][perm[v]] = self.kernel[w][v].clone();
            }
            map[perm[w]] = perm[self.map[w]];
        }
        let init = self.init.as_ref().map(|pi| {
            let mut out = vec![Rational::zero(); n];
            for w in 0..n {
                out[perm[w]] = pi[w].clone();
            }
            out
        });
        DynamicMarkovProcess { n_states: n, kernel, map, init }
    }

    /// Cycles of the functional graph of `f`, each listed from its least state.
    pub fn map_cycles(&self) -> Vec<Vec<usize>> {
        map_cycles(&self.map)
    }
}

pub fn dist_measure(dist: &[Rational], a: StateSet) -> Rational {
    let mut acc = Rational::zero();
    for v in a.states() {
        if v >= dist.len() {
            break;
        }
        acc += &dist[v];
    }
    acc
}

fn check_distribution(d: &[Rational], what: &str, errs: &mut Vec<String>) {
    for (i, x) in d.iter().enumerate() {
        if *x < Rational::zero() || *x > Rational::one() {
            errs.push(format!("{} entry {} = {} outside [0,1]", what, i, x));
        }
    }
    let s: Rational = d.iter().fold(Rational::zero(), |a, b| a + b);
    if !s.is_one() {
        errs.push(format!("{} sums to {}", what, s));
    }
}

pub fn map_cycles(map: &[usize]) -> Vec<Vec<usize>> {
    let n = map.len();
    let mut on_cycle = vec![false; n];
    for start in 0..n {
        // after n steps every point sits on a cycle
        let mut w = start;
        for _ in 0..n {
            w = map[w];
        }
        on_cycle[w] = true;
    }
    let mut done = vec![false; n];
    let mut cycles = Vec::new();
    for s in 0..n {
        if !on_cycle[s] || done[s] {
            continue;
        }
        let mut cyc = vec![s];
        done[s] = true;
        let mut w = map[s];
        while w != s {
            done[w] = true;
            cyc.push(w);
            w = map[w];
        }
        cycles.push(cyc);
    }
    cycles
}

// ---------------------------------------------------------------- generation

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonzero integer weights in `0..=bound`, normalized exactly.
pub fn random_distribution<R: Rng>(rng: &mut R, n: usize, bound: u32) -> Vec<Rational> {
    loop {
        let w: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=bound.max(1))).collect();
        let total: u32 = w.iter().sum();
        if total > 0 {
            return w.iter().map(|&x| Rational::new(x.into(), total.into())).collect();
        }
    }
}

/// Weights over the listed states only.
fn random_distribution_on<R: Rng>(rng: &mut R, n: usize, support: &[usize], bound: u32) -> Vec<Rational> {
    let d = random_distribution(rng, support.len(), bound);
    let mut out = vec![Rational::zero(); n];
    for (i, &s) in support.iter().enumerate() {
        out[s] = d[i].clone();
    }
    out
}

pub fn random_map<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

/// Deterministic in `seed`; every output validates.
pub fn random_process(seed: u64, n: usize, denom_bound: u32, with_init: bool) -> DynamicMarkovProcess {
    let mut r = rng(seed);
    random_process_with(&mut r, n, denom_bound, with_init)
}

pub fn random_process_with<R: Rng>(rng: &mut R, n: usize, bound: u32, with_init: bool) -> DynamicMarkovProcess {
    let kernel = (0..n).map(|_| random_distribution(rng, n, bound)).collect();
    let map = random_map(rng, n);
    let init = with_init.then(|| random_distribution(rng, n, bound));
    DynamicMarkovProcess::new(kernel, map, init)
}

/// Uniform measure on each orbit of `g` within `cycles`, where `g` rotates a
/// cycle of length `c` by `step`.
fn rotation_orbits(cycles: &[Vec<usize>], step: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for cyc in cycles {
        let c = cyc.len();
        // orbits of rotation by `step` on Z_c are the residue classes mod gcd(step, c)
        let g = num_integer::gcd(step % c, c);
        for r in 0..g {
            out.push((r..c).step_by(g).map(|i| cyc[i]).collect());
        }
    }
    out
}

fn mixture<R: Rng>(rng: &mut R, n: usize, blocks: &[Vec<usize>], bound: u32) -> Vec<Rational> {
    let weights = random_distribution(rng, blocks.len(), bound);
    let mut out = vec![Rational::zero(); n];
    for (b, w) in blocks.iter().zip(weights) {
        let share = w / Rational::from_integer((b.len() as i64).into());
        for &s in b {
            out[s] += &share;
        }
    }
    out
}

fn push_forward(map: &[usize], d: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); d.len()];
    for (w, x) in d.iter().enumerate() {
        out[map[w]] += x;
    }
    out
}

/// A random process whose map is measure-preserving for the kernel.
///
/// Rows on a cycle of length `L` are `f^L`-invariant, so they are mixtures of
/// uniform measures on `f^L`-orbits; the other cycle rows are pushforwards.
/// A transient state splits each target mass of its image's row among
/// preimages.
pub fn random_measure_preserving<R: Rng>(rng: &mut R, n: usize, bound: u32, with_init: bool) -> DynamicMarkovProcess {
    let map = random_map(rng, n);
    let cycles = map_cycles(&map);
    let mut rows: Vec<Option<Vec<Rational>>> = vec![None; n];
    for cyc in &cycles {
        let orbits = rotation_orbits(&cycles, cyc.len());
        let mut row = mixture(rng, n, &orbits, bound);
        for &s in cyc {
            rows[s] = Some(row.clone());
            row = push_forward(&map, &row);
        }
    }
    let mut preimages = vec![Vec::new(); n];
    for (w, &v) in map.iter().enumerate() {
        preimages[v].push(w);
    }
    // Longest backward chain into each state (unbounded on cycles). Mass for
    // a row at height h goes only to states of height >= h, so every deeper
    // row can still be split.
    let mut height = vec![0usize; n];
    for cyc in &cycles {
        for &s in cyc {
            height[s] = usize::MAX;
        }
    }
    for _ in 0..n {
        for v in 0..n {
            if height[v] != usize::MAX {
                height[v] = preimages[v].iter().map(|&u| height[u].saturating_add(1)).max().unwrap_or(0);
            }
        }
    }
    while rows.iter().any(|r| r.is_none()) {
        for w in 0..n {
            if rows[w].is_some() {
                continue;
            }
            let Some(target) = rows[map[w]].clone() else { continue };
            let mut row = vec![Rational::zero(); n];
            for (a, mass) in target.iter().enumerate() {
                if mass.is_zero() {
                    continue;
                }
                let tall: Vec<usize> = preimages[a].iter().copied().filter(|&b| height[b] >= height[w]).collect();
                let split = random_distribution(rng, tall.len(), bound);
                for (i, &b) in tall.iter().enumerate() {
                    row[b] += mass * &split[i];
                }
            }
            rows[w] = Some(row);
        }
    }
    let init = with_init.then(|| random_distribution(rng, n, bound));
    DynamicMarkovProcess::new(rows.into_iter().map(Option::unwrap).collect(), map, init)
}

/// A random abstract dynamical system: one row, uniform on each `f`-cycle
/// with random cycle weights.
pub fn random_ads<R: Rng>(rng: &mut R, n: usize, bound: u32) -> DynamicMarkovProcess {
    let map = random_map(rng, n);
    let mu = mixture(rng, n, &map_cycles(&map), bound);
    DynamicMarkovProcess::new(vec![mu; n], map, None)
}

/// A random dynamic probability space with an arbitrary map.
pub fn random_dps<R: Rng>(rng: &mut R, n: usize, bound: u32) -> DynamicMarkovProcess {
    let mu = random_distribution(rng, n, bound);
    let map = random_map(rng, n);
    DynamicMarkovProcess::new(vec![mu; n], map, None)
}

/// A random purely probabilistic process (identity map).
pub fn random_pure<R: Rng>(rng: &mut R, n: usize, bound: u32) -> DynamicMarkovProcess {
    let mut p = random_process_with(rng, n, bound, false);
    p.map = (0..n).collect();
    p
}

/// States split into blocks sharing one row supported inside the block.
pub fn random_harsanyi<R: Rng>(rng: &mut R, n: usize, bound: u32) -> DynamicMarkovProcess {
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let blocks: BTreeSet<usize> = labels.iter().copied().collect();
    let mut kernel = vec![Vec::new(); n];
    for b in blocks {
        let members: Vec<usize> = (0..n).filter(|&w| labels[w] == b).collect();
        let row = random_distribution_on(rng, n, &members, bound);
        for &w in &members {
            kernel[w] = row.clone();
        }
    }
    DynamicMarkovProcess::new(kernel, random_map(rng, n), None)
}

// --------------------------------------------------------------- enumeration

/// Every distribution on `n` points whose entries have denominator dividing
/// some `q <= denom_bound`, without repeats, in a fixed order.
pub fn all_distributions(n: usize, denom_bound: u32) -> Vec<Vec<Rational>> {
    let mut seen = BTreeSet::new();
    for q in 1..=denom_bound.max(1) {
        let mut parts = vec![0u32; n];
        compositions(q, 0, &mut parts, &mut |c| {
            let d: Vec<Rational> = c.iter().map(|&x| Rational::new(x.into(), q.into())).collect();
            seen.insert(d);
        });
    }
    seen.into_iter().collect()
}

fn compositions(rest: u32, i: usize, parts: &mut Vec<u32>, emit: &mut dyn FnMut(&[u32])) {
    if i + 1 == parts.len() {
        parts[i] = rest;
        emit(parts);
        return;
    }
    for x in 0..=rest {
        parts[i] = x;
        compositions(rest - x, i + 1, parts, emit);
    }
}

/// All `nⁿ` maps, lexicographically.
pub fn all_maps(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total = n.pow(n as u32);
    for mut code in 0..total {
        let mut m = vec![0; n];
        for slot in m.iter_mut().rev() {
            *slot = code % n;
            code /= n;
        }
        out.push(m);
    }
    out
}

// ---------------------------------------------------------------------- JSON

#[derive(Debug, thiserror::Error)]
pub enum ProcessError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed rational {0:?}")]
    Rational(String),
    #[error("invalid process: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("valuation for {0} mentions state {1} outside the process")]
    Valuation(String, usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessFile {
    pub states: usize,
    pub kernel: Vec<Vec<String>>,
    pub map: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuation: Option<BTreeMap<String, Vec<usize>>>,
}

fn rational_of(s: &str) -> Result<Rational, ProcessError> {
    parse_rational(s.trim()).map_err(|_| ProcessError::Rational(s.to_string()))
}

/// Parse and validate a process document, returning any valuation it carries.
pub fn from_json(text: &str) -> Result<(DynamicMarkovProcess, Option<Valuation>), ProcessError> {
    let file: ProcessFile = serde_json::from_str(text)?;
    let kernel = file
        .kernel
        .iter()
        .map(|row| row.iter().map(|s| rational_of(s)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let init = match &file.init {
        Some(v) => Some(v.iter().map(|s| rational_of(s)).collect::<Result<Vec<_>, _>>()?),
        None => None,
    };
    let p = DynamicMarkovProcess { n_states: file.states, kernel, map: file.map.clone(), init };
    p.validate().map_err(ProcessError::Invalid)?;
    let valuation = match file.valuation {
        Some(v) => {
            let mut out = Valuation::new();
            for (name, states) in v {
                if let Some(&bad) = states.iter().find(|&&s| s >= p.n_states) {
                    return Err(ProcessError::Valuation(name, bad));
                }
                out.insert(name, StateSet::from_states(states));
            }
            Some(out)
        }
        None => None,
    };
    Ok((p, valuation))
}

pub fn to_file(p: &DynamicMarkovProcess, valuation: Option<&Valuation>) -> ProcessFile {
    ProcessFile {
        states: p.n_states,
        kernel: p.kernel.iter().map(|row| row.iter().map(|x| x.to_string()).collect()).collect(),
        map: p.map.clone(),
        init: p.init.as_ref().map(|pi| pi.iter().map(|x| x.to_string()).collect()),
        valuation: valuation.map(|v| v.iter().map(|(k, s)| (k.clone(), s.states().collect())).collect()),
    }
}

pub fn to_json(p: &DynamicMarkovProcess, valuation: Option<&Valuation>) -> String {
    serde_json::to_string_pretty(&to_file(p, valuation)).expect("serializable")
}
