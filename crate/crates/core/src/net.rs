//! Compilation of templates into extended Petri nets: ordinary transitions with
//! pre/post vectors, plus transfer transitions for broadcasts.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::combin::Compositions;
use crate::count::Count;
use crate::model::{
    lock_status, validate, Label, SemanticsKind, StateId, TemplateAutomaton, ValidationReport, ValueId,
};
use crate::semantics::{Config, Step};

/// A finite marking, one entry per place.
pub type Marking = Vec<u32>;

/// A marking whose entries may be ω.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GenConfig(pub Vec<Count>);

impl GenConfig {
    pub fn from_marking(m: &[u32]) -> Self {
        GenConfig(m.iter().map(|&k| Count::Fin(k)).collect())
    }

    /// `m <= self` componentwise.
    pub fn covers(&self, m: &[u32]) -> bool {
        self.0.iter().zip(m).all(|(c, &k)| c.covers(k))
    }

    /// Componentwise order over ℕ ∪ {ω}.
    pub fn leq(&self, other: &GenConfig) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn omega_places(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, c)| c.is_omega()).map(|(p, _)| p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Place {
    State(StateId),
    Value(ValueId),
    LockFree,
}

/// Template transition(s) an ordinary net transition came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrdinaryTag {
    Tau(usize),
    RendezVous {
        send: usize,
        recv: usize,
    },
    /// One copy per possible current store value.
    Write {
        transition: usize,
        overwrites: ValueId,
    },
    Read(usize),
    Lock(usize),
    Unlock(usize),
}

impl OrdinaryTag {
    pub fn step(self) -> Step {
        match self {
            OrdinaryTag::Tau(i) => Step::Tau(i),
            OrdinaryTag::RendezVous { send, recv } => Step::RendezVous { send, recv },
            OrdinaryTag::Write { transition, .. } => Step::StoreOp(transition),
            OrdinaryTag::Read(i) => Step::StoreOp(i),
            OrdinaryTag::Lock(i) | OrdinaryTag::Unlock(i) => Step::LockOp(i),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrdinaryTransition {
    pub pre: Marking,
    pub post: Marking,
    pub tag: OrdinaryTag,
}

/// One receive transition of the template viewed as a transfer edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransferEdge {
    pub from: usize,
    pub to: usize,
    pub recv: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BroadcastTransition {
    /// Template index of the `v!!` transition.
    pub send: usize,
    pub sender_pre: usize,
    pub sender_post: usize,
    /// In template order; several edges may share endpoints.
    pub edges: Vec<TransferEdge>,
}

impl BroadcastTransition {
    /// The transfer relation as sorted, distinct place pairs.
    pub fn transfer(&self) -> Vec<(usize, usize)> {
        let set: BTreeSet<(usize, usize)> = self.edges.iter().map(|e| (e.from, e.to)).collect();
        set.into_iter().collect()
    }

    /// Places whose tokens may be transferred into `p`, ascending.
    pub fn preimage(&self, p: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self.edges.iter().filter(|e| e.to == p).map(|e| e.from).collect();
        set.into_iter().collect()
    }

    /// Distinct destinations of tokens in `p`, ascending.
    pub fn image(&self, p: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self.edges.iter().filter(|e| e.from == p).map(|e| e.to).collect();
        set.into_iter().collect()
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&TransferEdge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    pub fn first_edge_from(&self, from: usize) -> Option<&TransferEdge> {
        self.edges.iter().find(|e| e.from == from)
    }
}

/// Routing of a broadcast: `((from, to), count)` entries over the transfer relation.
pub type Routing = [((usize, usize), u32)];

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("template is invalid ({0})")]
    InvalidTemplate(ValidationReport),
    #[error("transition not enabled")]
    NotEnabled,
    #[error("broadcast routing is not a full assignment: {0}")]
    BadRouting(String),
    #[error("reachable marking budget of {0} exceeded")]
    BudgetExceeded(usize),
}

#[derive(Clone, Debug)]
pub struct ExtendedNet {
    pub kind: SemanticsKind,
    pub places: Vec<Place>,
    pub names: Vec<String>,
    pub num_states: usize,
    pub ordinary: Vec<OrdinaryTransition>,
    pub broadcasts: Vec<BroadcastTransition>,
    pub init: GenConfig,
    pub target: Marking,
    /// Places on lock-holding states.
    held: Vec<bool>,
    value_places: Vec<usize>,
    lockfree: Option<usize>,
}

pub fn compile(t: &TemplateAutomaton) -> Result<ExtendedNet, NetError> {
    let report = validate(t);
    if !report.is_valid() {
        return Err(NetError::InvalidTemplate(report));
    }
    let ns = t.states.len();
    let mut places: Vec<Place> = (0..ns).map(Place::State).collect();
    let mut names = t.states.clone();
    let mut value_places = Vec::new();
    if t.kind.has_store() {
        for (v, name) in t.values.iter().enumerate() {
            value_places.push(places.len());
            places.push(Place::Value(v));
            names.push(format!("val_{name}"));
        }
    }
    let lockfree = (t.kind == SemanticsKind::LockStore).then(|| {
        places.push(Place::LockFree);
        names.push("lockfree".into());
        places.len() - 1
    });
    let np = places.len();
    let unit = |entries: &[usize]| {
        let mut m = vec![0u32; np];
        for &p in entries {
            m[p] += 1;
        }
        m
    };

    let mut ordinary = Vec::new();
    let mut broadcasts = Vec::new();
    for (i, tr) in t.transitions.iter().enumerate() {
        let (q, q2) = (tr.source, tr.target);
        match tr.label {
            Label::Tau => ordinary.push(OrdinaryTransition {
                pre: unit(&[q]),
                post: unit(&[q2]),
                tag: OrdinaryTag::Tau(i),
            }),
            Label::Send(v) => {
                for (j, rt) in t.transitions.iter().enumerate() {
                    if rt.label == Label::Recv(v) {
                        ordinary.push(OrdinaryTransition {
                            pre: unit(&[q, rt.source]),
                            post: unit(&[q2, rt.target]),
                            tag: OrdinaryTag::RendezVous { send: i, recv: j },
                        });
                    }
                }
            }
            Label::Recv(_) | Label::BcastRecv(_) => {}
            Label::BcastSend(v) => {
                let edges = t
                    .transitions
                    .iter()
                    .enumerate()
                    .filter(|(_, rt)| rt.label == Label::BcastRecv(v))
                    .map(|(j, rt)| TransferEdge {
                        from: rt.source,
                        to: rt.target,
                        recv: j,
                    })
                    .collect();
                broadcasts.push(BroadcastTransition {
                    send: i,
                    sender_pre: q,
                    sender_post: q2,
                    edges,
                });
            }
            Label::Write(v) => {
                for (g, &vp) in value_places.iter().enumerate() {
                    ordinary.push(OrdinaryTransition {
                        pre: unit(&[q, vp]),
                        post: unit(&[q2, value_places[v]]),
                        tag: OrdinaryTag::Write {
                            transition: i,
                            overwrites: g,
                        },
                    });
                }
            }
            Label::Read(v) => ordinary.push(OrdinaryTransition {
                pre: unit(&[q, value_places[v]]),
                post: unit(&[q2, value_places[v]]),
                tag: OrdinaryTag::Read(i),
            }),
            Label::Lock => {
                let lf = lockfree.expect("lock transitions only in lockstore");
                ordinary.push(OrdinaryTransition {
                    pre: unit(&[q, lf]),
                    post: unit(&[q2]),
                    tag: OrdinaryTag::Lock(i),
                })
            }
            Label::Unlock => {
                let lf = lockfree.expect("unlock transitions only in lockstore");
                ordinary.push(OrdinaryTransition {
                    pre: unit(&[q]),
                    post: unit(&[q2, lf]),
                    tag: OrdinaryTag::Unlock(i),
                })
            }
        }
    }

    let mut init = vec![Count::ZERO; np];
    init[..ns].copy_from_slice(&t.init.counts);
    if let Some(v) = t.init.store0 {
        init[value_places[v]] = Count::Fin(1);
    }
    if let Some(lf) = lockfree {
        init[lf] = Count::Fin(1);
    }
    let mut target = vec![0; np];
    target[..ns].copy_from_slice(&t.target.demand);
    let mut held = vec![false; np];
    if t.kind == SemanticsKind::LockStore {
        for (q, s) in lock_status(t).iter().enumerate() {
            held[q] = s.held;
        }
    }

    Ok(ExtendedNet {
        kind: t.kind,
        places,
        names,
        num_states: ns,
        ordinary,
        broadcasts,
        init: GenConfig(init),
        target,
        held,
        value_places,
        lockfree,
    })
}

impl ExtendedNet {
    pub fn num_places(&self) -> usize {
        self.places.len()
    }

    pub fn value_places(&self) -> &[usize] {
        &self.value_places
    }

    pub fn lockfree_place(&self) -> Option<usize> {
        self.lockfree
    }

    /// True when `m` breaks an upward-closed consequence of the store/lock
    /// invariants: more than one store token, or the lock both free and held
    /// (or held twice). No marking reachable from `init` does.
    pub fn exceeds_invariants(&self, m: &[u32]) -> bool {
        let values: u32 = self.value_places.iter().map(|&p| m[p]).sum();
        if values > 1 {
            return true;
        }
        if let Some(lf) = self.lockfree {
            let holders: u32 = m.iter().zip(&self.held).filter(|(_, &h)| h).map(|(k, _)| k).sum();
            if m[lf] + holders > 1 {
                return true;
            }
        }
        false
    }

    pub fn marking_of_config(&self, c: &Config) -> Marking {
        let mut m = vec![0; self.num_places()];
        m[..self.num_states].copy_from_slice(&c.counts);
        if let Some(v) = c.store {
            m[self.value_places[v]] = 1;
        }
        if let Some(lf) = self.lockfree {
            let holders: u32 = c
                .counts
                .iter()
                .zip(&self.held)
                .filter(|(_, &h)| h)
                .map(|(k, _)| k)
                .sum();
            m[lf] = u32::from(holders == 0);
        }
        m
    }

    pub fn config_of_marking(&self, m: &[u32]) -> Config {
        let store = self.value_places.iter().position(|&p| m[p] > 0);
        Config::new(m[..self.num_states].to_vec(), store)
    }

    pub fn is_enabled(&self, m: &[u32], t: usize) -> bool {
        self.ordinary[t].pre.iter().zip(m).all(|(&need, &have)| have >= need)
    }

    /// Fire an ordinary transition on a generalized configuration (ω − k = ω + k = ω).
    pub fn fire_ordinary(&self, m: &GenConfig, t: usize) -> Result<GenConfig, NetError> {
        let tr = &self.ordinary[t];
        let mut out = Vec::with_capacity(m.0.len());
        for ((&c, &pre), &post) in m.0.iter().zip(&tr.pre).zip(&tr.post) {
            out.push(c.minus(pre).ok_or(NetError::NotEnabled)?.plus(post));
        }
        Ok(GenConfig(out))
    }

    /// Finite-marking variant of [`ExtendedNet::fire_ordinary`].
    pub fn fire_ordinary_marking(&self, m: &[u32], t: usize) -> Result<Marking, NetError> {
        let tr = &self.ordinary[t];
        m.iter()
            .zip(&tr.pre)
            .zip(&tr.post)
            .map(|((&c, &pre), &post)| c.checked_sub(pre).map(|x| x + post).ok_or(NetError::NotEnabled))
            .collect()
    }

    /// Fire broadcast `b` with an explicit routing of every non-sender token
    /// on the template-state places.
    pub fn fire_broadcast(&self, m: &[u32], b: usize, routing: &Routing) -> Result<Marking, NetError> {
        let bt = &self.broadcasts[b];
        if m[bt.sender_pre] == 0 {
            return Err(NetError::NotEnabled);
        }
        let relation = bt.transfer();
        let mut out = m.to_vec();
        let mut routed = vec![0u32; self.num_places()];
        for p in 0..self.num_states {
            out[p] = 0;
        }
        for &((from, to), k) in routing {
            if relation.binary_search(&(from, to)).is_err() {
                return Err(NetError::BadRouting(format!(
                    "{} -> {} is not a transfer edge",
                    self.names[from], self.names[to]
                )));
            }
            routed[from] += k;
            out[to] += k;
        }
        for p in 0..self.num_states {
            let expected = m[p] - u32::from(p == bt.sender_pre);
            if routed[p] != expected {
                return Err(NetError::BadRouting(format!(
                    "{} of {} tokens routed from {}",
                    routed[p], expected, self.names[p]
                )));
            }
        }
        out[bt.sender_post] += 1;
        Ok(out)
    }

    /// All distinct results of firing broadcast `b` at `m`.
    pub fn broadcast_successors(&self, m: &[u32], b: usize) -> BTreeSet<Marking> {
        let bt = &self.broadcasts[b];
        if m[bt.sender_pre] == 0 {
            return BTreeSet::new();
        }
        let mut base = m.to_vec();
        for p in 0..self.num_states {
            base[p] = 0;
        }
        base[bt.sender_post] += 1;
        let mut partial = BTreeSet::from([base]);
        for p in 0..self.num_states {
            let k = m[p] - u32::from(p == bt.sender_pre);
            if k == 0 {
                continue;
            }
            let image = bt.image(p);
            if image.is_empty() {
                return BTreeSet::new();
            }
            let comps: Vec<Vec<u32>> = Compositions::new(k, image.len()).collect();
            let mut next = BTreeSet::new();
            for base in &partial {
                for comp in &comps {
                    let mut r = base.clone();
                    for (&to, &c) in image.iter().zip(comp) {
                        r[to] += c;
                    }
                    next.insert(r);
                }
            }
            partial = next;
        }
        partial
    }

    /// Distinct one-step successors over all transitions.
    pub fn successors(&self, m: &[u32]) -> BTreeSet<Marking> {
        let mut out = BTreeSet::new();
        for t in 0..self.ordinary.len() {
            if let Ok(next) = self.fire_ordinary_marking(m, t) {
                out.insert(next);
            }
        }
        for b in 0..self.broadcasts.len() {
            out.extend(self.broadcast_successors(m, b));
        }
        out
    }

    /// Explicit reachability from a set of finite initial markings.
    pub fn reachable_markings(&self, inits: &[Marking], budget: usize) -> Result<BTreeSet<Marking>, NetError> {
        let mut seen: BTreeSet<Marking> = inits.iter().cloned().collect();
        let mut queue: VecDeque<Marking> = seen.iter().cloned().collect();
        while let Some(m) = queue.pop_front() {
            for next in self.successors(&m) {
                if !seen.contains(&next) {
                    if seen.len() >= budget {
                        return Err(NetError::BudgetExceeded(budget));
                    }
                    seen.insert(next.clone());
                    queue.push_back(next);
                }
            }
        }
        Ok(seen)
    }

    fn multiset(&self, m: &[u32]) -> String {
        let parts: Vec<String> = m
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(p, &k)| {
                if k == 1 {
                    self.names[p].clone()
                } else {
                    format!("{}*{}", k, self.names[p])
                }
            })
            .collect();
        if parts.is_empty() {
            "-".into()
        } else {
            parts.join(" ")
        }
    }

    /// Human-readable dump: places, initial and target vectors, then one line per transition.
    pub fn dump(&self, t: &TemplateAutomaton) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "places {}", self.names.join(" "));
        let init: Vec<String> = self
            .init
            .0
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(p, c)| format!("{}={}", self.names[p], c))
            .collect();
        let _ = writeln!(out, "init {}", init.join(" "));
        let target: Vec<String> = self
            .target
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(p, k)| format!("{}>={}", self.names[p], k))
            .collect();
        let _ = writeln!(out, "target {}", target.join(" "));
        for (i, tr) in self.ordinary.iter().enumerate() {
            let origin = match tr.tag {
                OrdinaryTag::RendezVous { send, recv } => format!(
                    "{} | {}",
                    t.render_transition(&t.transitions[send]),
                    t.render_transition(&t.transitions[recv])
                ),
                OrdinaryTag::Write { transition, .. }
                | OrdinaryTag::Tau(transition)
                | OrdinaryTag::Read(transition)
                | OrdinaryTag::Lock(transition)
                | OrdinaryTag::Unlock(transition) => t.render_transition(&t.transitions[transition]),
            };
            let _ = writeln!(
                out,
                "transition t{i} [{origin}] pre {} post {}",
                self.multiset(&tr.pre),
                self.multiset(&tr.post)
            );
        }
        for (i, b) in self.broadcasts.iter().enumerate() {
            let edges: Vec<String> = b
                .transfer()
                .iter()
                .map(|&(f, to)| format!("{}->{}", self.names[f], self.names[to]))
                .collect();
            let _ = writeln!(
                out,
                "broadcast b{i} [{}] sender {}->{} transfer {}",
                t.render_transition(&t.transitions[b.send]),
                self.names[b.sender_pre],
                self.names[b.sender_post],
                edges.join(" ")
            );
        }
        out
    }
}
