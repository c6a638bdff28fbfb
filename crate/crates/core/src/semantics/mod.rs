//! One-step operational semantics over the counting abstraction.

mod witness;

use std::fmt;

use crate::combin::{Compositions, Odometer};
use crate::model::{lock_status, Label, SemanticsKind, StateId, TemplateAutomaton, ValueId};

pub use witness::{replay_witness, ReplayError, Witness, WitnessParseError};

/// Per-state process counts plus the store value for store kinds.
///
/// The derived order (counts first, then store) is the canonical exploration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub counts: Vec<u32>,
    pub store: Option<ValueId>,
}

impl Config {
    pub fn new(counts: Vec<u32>, store: Option<ValueId>) -> Self {
        Config { counts, store }
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn render(&self, t: &TemplateAutomaton) -> String {
        let mut parts: Vec<String> = self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(q, k)| format!("{}:{}", t.states[q], k))
            .collect();
        if let Some(v) = self.store {
            parts.push(format!("store={}", t.values[v]));
        }
        format!("{{{}}}", parts.join(", "))
    }
}

/// A single move of the crowd. Transitions are indices into the template.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Tau(usize),
    RendezVous {
        send: usize,
        recv: usize,
    },
    /// `assignment` lists (receive transition, number of processes taking it),
    /// sorted by transition, zero entries omitted.
    Broadcast {
        send: usize,
        assignment: Vec<(usize, u32)>,
    },
    /// A read or a write.
    StoreOp(usize),
    /// A lock or an unlock.
    LockOp(usize),
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("step not enabled: {0}")]
    NotEnabled(String),
}

fn not_enabled(msg: impl Into<String>) -> SemanticsError {
    SemanticsError::NotEnabled(msg.into())
}

/// Semantics of one template, with the per-template lookups precomputed.
pub struct Semantics<'a> {
    t: &'a TemplateAutomaton,
    held: Vec<bool>,
    /// `bcast_recv[v][q]`: receive transitions for value `v` out of `q`.
    bcast_recv: Vec<Vec<Vec<usize>>>,
}

impl<'a> Semantics<'a> {
    pub fn new(t: &'a TemplateAutomaton) -> Self {
        let held = lock_status(t).into_iter().map(|s| s.held).collect();
        let mut bcast_recv = vec![vec![Vec::new(); t.states.len()]; t.values.len()];
        for (i, tr) in t.transitions.iter().enumerate() {
            if let Label::BcastRecv(v) = tr.label {
                bcast_recv[v][tr.source].push(i);
            }
        }
        Semantics { t, held, bcast_recv }
    }

    pub fn template(&self) -> &'a TemplateAutomaton {
        self.t
    }

    /// Lock-holding states (always empty outside LockStore).
    pub fn is_held(&self, q: StateId) -> bool {
        self.held[q]
    }

    fn held_count(&self, c: &Config) -> u32 {
        c.counts
            .iter()
            .zip(&self.held)
            .filter(|(_, &h)| h)
            .map(|(k, _)| k)
            .sum()
    }

    pub fn is_lock_free(&self, c: &Config) -> bool {
        self.held_count(c) == 0
    }

    pub fn check_config(&self, c: &Config) -> Result<(), SemanticsError> {
        let t = self.t;
        if c.counts.len() != t.states.len() {
            return Err(SemanticsError::InvalidConfig(format!(
                "expected {} counts, got {}",
                t.states.len(),
                c.counts.len()
            )));
        }
        match (t.kind.has_store(), c.store) {
            (true, Some(v)) if v < t.values.len() => {}
            (false, None) => {}
            _ => {
                return Err(SemanticsError::InvalidConfig(
                    "store component does not match the semantics".into(),
                ))
            }
        }
        if t.kind == SemanticsKind::LockStore && self.held_count(c) > 1 {
            return Err(SemanticsError::InvalidConfig(
                "more than one process holds the lock".into(),
            ));
        }
        Ok(())
    }

    /// Every way to route the non-sender processes of `c` through receive
    /// transitions for the value of broadcast `send`, in canonical order.
    /// Empty when some process has no receive available.
    pub fn broadcast_assignments(&self, c: &Config, send: usize) -> impl Iterator<Item = Vec<(usize, u32)>> + '_ {
        let tr = self.t.transitions[send];
        let v = tr.label.value().expect("broadcast send carries a value");
        let mut groups: Vec<(&[usize], Vec<Vec<u32>>)> = Vec::new();
        let mut blocked = false;
        for (q, &k) in c.counts.iter().enumerate() {
            let receivers = k.saturating_sub(u32::from(q == tr.source));
            if receivers == 0 {
                continue;
            }
            let options = &self.bcast_recv[v][q];
            if options.is_empty() {
                blocked = true;
                break;
            }
            groups.push((
                options.as_slice(),
                Compositions::new(receivers, options.len()).collect(),
            ));
        }
        let sizes = if blocked {
            vec![0]
        } else {
            groups.iter().map(|(_, comps)| comps.len()).collect()
        };
        Odometer::new(sizes).map(move |choice| {
            let mut assignment: Vec<(usize, u32)> = Vec::new();
            for ((options, comps), &ci) in groups.iter().zip(&choice) {
                for (&tr, &k) in options.iter().zip(&comps[ci]) {
                    if k > 0 {
                        assignment.push((tr, k));
                    }
                }
            }
            assignment.sort_unstable();
            assignment
        })
    }

    /// Calls `f` on every step enabled at `c`, in canonical order.
    pub fn for_each_enabled(&self, c: &Config, mut f: impl FnMut(Step)) -> Result<(), SemanticsError> {
        self.check_config(c)?;
        let t = self.t;
        let has = |q: StateId, k: u32| c.counts[q] >= k;
        for (i, tr) in t.transitions.iter().enumerate() {
            let src = tr.source;
            match tr.label {
                Label::Tau if has(src, 1) => f(Step::Tau(i)),
                Label::Send(v) if has(src, 1) => {
                    for (j, rt) in t.transitions.iter().enumerate() {
                        if rt.label != Label::Recv(v) {
                            continue;
                        }
                        let ok = if rt.source == src {
                            has(src, 2)
                        } else {
                            has(rt.source, 1)
                        };
                        if ok {
                            f(Step::RendezVous { send: i, recv: j });
                        }
                    }
                }
                Label::BcastSend(_) if has(src, 1) => {
                    for assignment in self.broadcast_assignments(c, i) {
                        f(Step::Broadcast { send: i, assignment });
                    }
                }
                Label::Write(_) if has(src, 1) => f(Step::StoreOp(i)),
                Label::Read(v) if has(src, 1) && c.store == Some(v) => f(Step::StoreOp(i)),
                Label::Lock if has(src, 1) && self.is_lock_free(c) => f(Step::LockOp(i)),
                Label::Unlock if has(src, 1) => f(Step::LockOp(i)),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn enabled_steps(&self, c: &Config) -> Result<Vec<Step>, SemanticsError> {
        let mut out = Vec::new();
        self.for_each_enabled(c, |s| out.push(s))?;
        Ok(out)
    }

    fn transition(&self, i: usize) -> Result<&crate::model::Transition, SemanticsError> {
        self.t
            .transitions
            .get(i)
            .ok_or_else(|| not_enabled(format!("no transition {i}")))
    }

    /// Successor of `c` under `s`, checking enabledness directly.
    pub fn apply_step(&self, c: &Config, s: &Step) -> Result<Config, SemanticsError> {
        self.check_config(c)?;
        let mut next = c.clone();
        let take = |next: &mut Config, q: StateId, what: &str| {
            if next.counts[q] == 0 {
                return Err(not_enabled(format!("no process in {} for {what}", self.t.states[q])));
            }
            next.counts[q] -= 1;
            Ok(())
        };
        match *s {
            Step::Tau(i) => {
                let tr = self.transition(i)?;
                if tr.label != Label::Tau {
                    return Err(not_enabled(format!("transition {i} is not internal")));
                }
                take(&mut next, tr.source, "tau")?;
                next.counts[tr.target] += 1;
            }
            Step::RendezVous { send, recv } => {
                let (st, rt) = (self.transition(send)?, self.transition(recv)?);
                match (st.label, rt.label) {
                    (Label::Send(a), Label::Recv(b)) if a == b => {}
                    _ => return Err(not_enabled("not a matching send/receive pair")),
                }
                take(&mut next, st.source, "send")?;
                take(&mut next, rt.source, "receive")?;
                next.counts[st.target] += 1;
                next.counts[rt.target] += 1;
            }
            Step::Broadcast { send, ref assignment } => {
                let st = self.transition(send)?;
                let Label::BcastSend(v) = st.label else {
                    return Err(not_enabled(format!("transition {send} is not a broadcast")));
                };
                if c.counts[st.source] == 0 {
                    return Err(not_enabled("no broadcast sender"));
                }
                let mut routed = vec![0u32; c.counts.len()];
                let mut moved = vec![0u32; c.counts.len()];
                for &(j, k) in assignment {
                    let rt = self.transition(j)?;
                    if rt.label != Label::BcastRecv(v) {
                        return Err(not_enabled(format!("transition {j} does not receive the broadcast")));
                    }
                    routed[rt.source] += k;
                    moved[rt.target] += k;
                }
                for (q, &k) in c.counts.iter().enumerate() {
                    let receivers = k - u32::from(q == st.source);
                    if routed[q] != receivers {
                        return Err(not_enabled(format!(
                            "assignment routes {} of {} receivers in {}",
                            routed[q], receivers, self.t.states[q]
                        )));
                    }
                }
                moved[st.target] += 1;
                next.counts = moved;
            }
            Step::StoreOp(i) => {
                let tr = self.transition(i)?;
                match tr.label {
                    Label::Write(v) => {
                        take(&mut next, tr.source, "write")?;
                        next.store = Some(v);
                    }
                    Label::Read(v) => {
                        if c.store != Some(v) {
                            return Err(not_enabled(format!("read of {} but store differs", self.t.values[v])));
                        }
                        take(&mut next, tr.source, "read")?;
                    }
                    _ => return Err(not_enabled(format!("transition {i} is not a store access"))),
                }
                next.counts[tr.target] += 1;
            }
            Step::LockOp(i) => {
                let tr = self.transition(i)?;
                match tr.label {
                    Label::Lock if !self.is_lock_free(c) => return Err(not_enabled("lock is already held")),
                    Label::Lock | Label::Unlock => {}
                    _ => return Err(not_enabled(format!("transition {i} is not a lock operation"))),
                }
                take(&mut next, tr.source, "lock operation")?;
                next.counts[tr.target] += 1;
            }
        }
        Ok(next)
    }

    pub fn render_step(&self, s: &Step) -> String {
        let t = self.t;
        let tr = |i: usize| t.render_transition(&t.transitions[i]);
        match s {
            Step::Tau(i) | Step::StoreOp(i) | Step::LockOp(i) => tr(*i),
            Step::RendezVous { send, recv } => format!("{} | {}", tr(*send), tr(*recv)),
            Step::Broadcast { send, assignment } => {
                let mut out = tr(*send);
                for (j, k) in assignment {
                    out.push_str(&format!(" | {} x{}", tr(*j), k));
                }
                out
            }
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}
