//! Ground truth by exhaustive search: fixed-size reachability, a bounded
//! coverability check, and brute-force one-step predecessors of a net.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use fixedbitset::FixedBitSet;

use crate::combin::{Compositions, Odometer};
use crate::model::TemplateAutomaton;
use crate::net::{ExtendedNet, Marking};
use crate::par::{self, Parallelism};
use crate::semantics::{Config, Semantics, SemanticsError, Step, Witness};

pub const DEFAULT_CONFIG_BUDGET: usize = 1_000_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("crowd size {n} is smaller than the {required} processes fixed by init")]
    TooFewProcesses { n: u32, required: u32 },
    #[error("configuration budget of {0} exceeded")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Configurations reachable at a fixed crowd size.
#[derive(Clone, Debug)]
pub struct ReachSet {
    pub n: u32,
    pub configs: BTreeSet<Config>,
    pub edges: Option<BTreeMap<Config, Vec<(Step, Config)>>>,
}

#[derive(Clone, Copy, Debug)]
pub struct ExploreOptions {
    pub budget: usize,
    pub record_edges: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            budget: DEFAULT_CONFIG_BUDGET,
            record_edges: false,
        }
    }
}

/// Every initial configuration with exactly `n` processes: finite init entries
/// are fixed, the remaining processes are split over the ω entries in all ways.
pub fn initial_configs(t: &TemplateAutomaton, n: u32) -> Result<Vec<Config>, OracleError> {
    let required = t.init.finite_total();
    if n < required {
        return Err(OracleError::TooFewProcesses { n, required });
    }
    let omega: Vec<usize> = t
        .init
        .counts
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_omega())
        .map(|(q, _)| q)
        .collect();
    let base: Vec<u32> = t.init.counts.iter().map(|c| c.finite().unwrap_or(0)).collect();
    let mut out: Vec<Config> = Compositions::new(n - required, omega.len())
        .map(|split| {
            let mut counts = base.clone();
            for (&q, k) in omega.iter().zip(split) {
                counts[q] += k;
            }
            Config::new(counts, t.init.store0)
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Breadth-first exploration from all initial configurations of size `n`.
pub fn explore(t: &TemplateAutomaton, n: u32, opts: ExploreOptions) -> Result<ReachSet, OracleError> {
    let sem = Semantics::new(t);
    let inits = initial_configs(t, n)?;
    let mut configs: BTreeSet<Config> = BTreeSet::new();
    let mut edges = opts.record_edges.then(BTreeMap::new);
    let mut queue = VecDeque::new();
    for c in inits {
        if configs.insert(c.clone()) {
            queue.push_back(c);
        }
    }
    if configs.len() > opts.budget {
        return Err(OracleError::BudgetExceeded(opts.budget));
    }
    while let Some(c) = queue.pop_front() {
        let mut out = Vec::new();
        for step in sem.enabled_steps(&c)? {
            let next = sem.apply_step(&c, &step)?;
            if !configs.contains(&next) {
                if configs.len() >= opts.budget {
                    return Err(OracleError::BudgetExceeded(opts.budget));
                }
                configs.insert(next.clone());
                queue.push_back(next.clone());
            }
            if edges.is_some() {
                out.push((step, next));
            }
        }
        if let Some(e) = edges.as_mut() {
            e.insert(c, out);
        }
    }
    Ok(ReachSet { n, configs, edges })
}

/// Outcome of the bounded search. Never an unconditional safety verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    Coverable(Witness),
    SafeUpTo(u32),
    BudgetExceeded { n: u32, budget: usize },
}

/// Tries every crowd size up to `nmax` in increasing order; for the first that
/// reaches the target returns a shortest witness.
pub fn oracle_coverable(t: &TemplateAutomaton, nmax: u32, budget: usize) -> Result<OracleVerdict, OracleError> {
    let sem = Semantics::new(t);
    let nmin = t.init.finite_total();
    let sizes: Vec<u32> = if t.init.has_omega() {
        (nmin..=nmax).collect()
    } else {
        (nmin..=nmax.min(nmin)).collect()
    };
    for n in sizes {
        let inits = initial_configs(t, n)?;
        let mut parent: HashMap<Config, Option<(Config, Step)>> = HashMap::new();
        let mut queue = VecDeque::new();
        let mut found = None;
        for c in inits {
            if parent.contains_key(&c) {
                continue;
            }
            parent.insert(c.clone(), None);
            if found.is_none() && t.target.is_met_by(&c.counts) {
                found = Some(c.clone());
            }
            queue.push_back(c);
        }
        'bfs: while found.is_none() {
            let Some(c) = queue.pop_front() else { break };
            for step in sem.enabled_steps(&c)? {
                let next = sem.apply_step(&c, &step)?;
                if parent.contains_key(&next) {
                    continue;
                }
                if parent.len() >= budget {
                    return Ok(OracleVerdict::BudgetExceeded { n, budget });
                }
                parent.insert(next.clone(), Some((c.clone(), step)));
                if t.target.is_met_by(&next.counts) {
                    found = Some(next);
                    break 'bfs;
                }
                queue.push_back(next);
            }
        }
        if let Some(end) = found {
            let mut steps = Vec::new();
            let mut cur = end;
            while let Some(Some((prev, step))) = parent.get(&cur) {
                steps.push(step.clone());
                cur = prev.clone();
            }
            steps.reverse();
            return Ok(OracleVerdict::Coverable(Witness { n, init: cur, steps }));
        }
    }
    Ok(OracleVerdict::SafeUpTo(nmax))
}

const LANE: u32 = 4;
const MAX_LANES: usize = 16;

fn pack(v: &[u32]) -> u64 {
    v.iter()
        .enumerate()
        .fold(0, |acc, (i, &k)| acc | (u64::from(k) << (LANE as usize * i)))
}

fn unpack(code: u64, places: usize) -> Marking {
    (0..places)
        .map(|i| ((code >> (LANE as usize * i)) & 0xf) as u32)
        .collect()
}

fn lane(code: u64, i: usize) -> u32 {
    ((code >> (LANE as usize * i)) & 0xf) as u32
}

/// Brute-force predecessor table of a net over the box `[0, cap]^places`.
///
/// Successors of each point are stored truncated at `demand_cap`, which is
/// exact for queries whose entries do not exceed it. Markings are packed four
/// bits per place, so `cap + demand_cap` must stay below 8.
pub struct PredTable {
    places: usize,
    cap: u32,
    demand_cap: u32,
    guard: u64,
    points: Vec<u64>,
    successors: Vec<Vec<u64>>,
    /// `at_least[p][k]`: points with at least `k` tokens on `p`.
    at_least: Vec<Vec<FixedBitSet>>,
}

impl PredTable {
    pub fn new(net: &ExtendedNet, cap: u32, demand_cap: u32, mode: Parallelism) -> Self {
        let places = net.num_places();
        assert!(places <= MAX_LANES, "too many places for the brute-force table");
        assert!(cap < 8 && demand_cap < 8);
        let points: Vec<u64> = Odometer::new(vec![cap as usize + 1; places])
            .map(|d| pack(&d.iter().map(|&k| k as u32).collect::<Vec<_>>()))
            .collect();
        let successors = par::map(mode, &points, |&d| {
            capped_successors(net, &unpack(d, places), demand_cap)
        });
        let guard = (0..places).fold(0u64, |g, i| g | (0x8u64 << (LANE as usize * i)));
        let at_least = (0..places)
            .map(|p| {
                (0..=cap)
                    .map(|k| {
                        let mut set = FixedBitSet::with_capacity(points.len());
                        for (j, &d) in points.iter().enumerate() {
                            set.set(j, lane(d, p) >= k);
                        }
                        set
                    })
                    .collect()
            })
            .collect();
        PredTable {
            places,
            cap,
            demand_cap,
            guard,
            points,
            successors,
            at_least,
        }
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn points(&self) -> impl Iterator<Item = Marking> + '_ {
        self.points.iter().map(|&c| unpack(c, self.places))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn geq(&self, a: u64, b: u64) -> bool {
        ((a | self.guard) - b) & self.guard == self.guard
    }

    /// Membership flags, aligned with [`PredTable::points`], of the points from
    /// which one step covers `m`.
    pub fn pred_flags(&self, m: &[u32]) -> Vec<bool> {
        assert!(m.iter().all(|&k| k <= self.demand_cap));
        let code = pack(m);
        self.successors
            .iter()
            .map(|succ| succ.iter().any(|&s| self.geq(s, code)))
            .collect()
    }

    /// Flags of the points lying above some element of `basis`.
    pub fn upward_flags(&self, basis: &[Marking]) -> Vec<bool> {
        let elems: Vec<u64> = basis
            .iter()
            .filter(|e| e.iter().all(|&k| k <= self.cap))
            .map(|e| pack(e))
            .collect();
        self.points
            .iter()
            .map(|&d| elems.iter().any(|&e| self.geq(d, e)))
            .collect()
    }

    /// Predecessor sets of every demand in `[0, demand_cap]^places`, indexed
    /// like [`PredTable::demand_index`]: exact successor hits first, then each
    /// demand inherits the sets of the demands one unit above it.
    pub fn all_pred_sets(&self) -> Vec<FixedBitSet> {
        let radix = self.demand_cap as usize + 1;
        let total = radix.pow(self.places as u32);
        let mut sets = vec![FixedBitSet::with_capacity(self.points.len()); total];
        for (j, succ) in self.successors.iter().enumerate() {
            for &s in succ {
                sets[self.demand_index(&unpack(s, self.places))].insert(j);
            }
        }
        let strides: Vec<usize> = (0..self.places)
            .map(|i| radix.pow((self.places - 1 - i) as u32))
            .collect();
        for idx in (0..total).rev() {
            for &stride in &strides {
                if (idx / stride) % radix < self.demand_cap as usize {
                    let (lo, hi) = sets.split_at_mut(idx + stride);
                    lo[idx].union_with(&hi[0]);
                }
            }
        }
        sets
    }

    /// Mixed-radix index of a demand, first place most significant.
    pub fn demand_index(&self, m: &[u32]) -> usize {
        let radix = self.demand_cap as usize + 1;
        m.iter().fold(0, |acc, &k| acc * radix + k as usize)
    }

    /// Points lying above some element of `basis`, as a set over point indices.
    pub fn upward_set(&self, basis: &[Marking]) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.points.len());
        for e in basis.iter().filter(|e| e.iter().all(|&k| k <= self.cap)) {
            let mut acc = FixedBitSet::with_capacity(self.points.len());
            acc.insert_range(..);
            for (p, &k) in e.iter().enumerate() {
                if k > 0 {
                    acc.intersect_with(&self.at_least[p][k as usize]);
                }
            }
            out.union_with(&acc);
        }
        out
    }

    pub fn pred(&self, m: &[u32]) -> BTreeSet<Marking> {
        self.pred_flags(m)
            .into_iter()
            .zip(&self.points)
            .filter(|(f, _)| *f)
            .map(|(_, &d)| unpack(d, self.places))
            .collect()
    }
}

fn capped_successors(net: &ExtendedNet, d: &[u32], cap: u32) -> Vec<u64> {
    let clamp = |v: Vec<u32>| pack(&v.into_iter().map(|k| k.min(cap)).collect::<Vec<_>>());
    let mut out: BTreeSet<u64> = BTreeSet::new();
    for t in 0..net.ordinary.len() {
        if let Ok(next) = net.fire_ordinary_marking(d, t) {
            out.insert(clamp(next));
        }
    }
    for b in &net.broadcasts {
        if d[b.sender_pre] == 0 {
            continue;
        }
        let mut base: Vec<u32> = d.to_vec();
        for k in base.iter_mut().take(net.num_states) {
            *k = 0;
        }
        base[b.sender_post] += 1;
        let mut partial: BTreeSet<u64> = BTreeSet::from([clamp(base)]);
        for p in 0..net.num_states {
            let k = d[p] - u32::from(p == b.sender_pre);
            let image = b.image(p);
            if k > 0 && image.is_empty() {
                partial.clear();
                break;
            }
            // one token at a time; truncation commutes with addition
            for _ in 0..k {
                partial = partial
                    .iter()
                    .flat_map(|&code| {
                        image.iter().map(move |&to| {
                            if lane(code, to) < cap {
                                code + (1u64 << (LANE as usize * to))
                            } else {
                                code
                            }
                        })
                    })
                    .collect();
            }
        }
        out.extend(partial);
    }
    out.into_iter().collect()
}

/// All `d` in `[0, cap]^places` from which a single net step reaches a marking `>= m`.
pub fn brute_pred(net: &ExtendedNet, m: &[u32], cap: u32) -> BTreeSet<Marking> {
    let demand_cap = m.iter().copied().max().unwrap_or(0);
    PredTable::new(net, cap, demand_cap, Parallelism::Sequential).pred(m)
}
