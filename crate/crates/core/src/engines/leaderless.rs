//! Polynomial engines for crowds without a distinguished process: the set of
//! states that can hold arbitrarily many processes only grows.

use std::collections::{BTreeSet, VecDeque};
use std::time::Instant;

use super::{Outcome, Stats, Verdict};
use crate::model::{Label, SemanticsKind, StateId, TemplateAutomaton, ValueId};

pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LeaderlessError {
    #[error("needs semantics {expected}, got {found}")]
    WrongKind {
        expected: SemanticsKind,
        found: SemanticsKind,
    },
    #[error("initial configuration has a finite nonzero entry")]
    HasLeader,
    #[error("abstract node budget of {0} exceeded")]
    BudgetExceeded(usize),
}

fn check_shape(t: &TemplateAutomaton, kind: SemanticsKind) -> Result<(), LeaderlessError> {
    if t.kind != kind {
        return Err(LeaderlessError::WrongKind {
            expected: kind,
            found: t.kind,
        });
    }
    if !t.init.is_leaderless() {
        return Err(LeaderlessError::HasLeader);
    }
    Ok(())
}

fn demand_within(t: &TemplateAutomaton, omega: &[bool]) -> bool {
    t.target.demand.iter().zip(omega).all(|(&d, &w)| d == 0 || w)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RvClosure {
    /// States populated by ω processes at the fixed point.
    pub omega: Vec<bool>,
    /// Rounds that added at least one state.
    pub iterations: usize,
}

impl RvClosure {
    pub fn states(&self) -> Vec<StateId> {
        self.omega
            .iter()
            .enumerate()
            .filter(|(_, &w)| w)
            .map(|(q, _)| q)
            .collect()
    }
}

/// Saturate Ω: each round adds the targets of internal moves out of Ω and of
/// send/receive pairs whose sources both lie in Ω.
pub fn rv_closure(t: &TemplateAutomaton) -> Result<RvClosure, LeaderlessError> {
    check_shape(t, SemanticsKind::RendezVous)?;
    let mut omega: Vec<bool> = t.init.counts.iter().map(|c| c.is_omega()).collect();
    let mut iterations = 0;
    loop {
        let mut add = Vec::new();
        for tr in &t.transitions {
            if !omega[tr.source] {
                continue;
            }
            match tr.label {
                Label::Tau => add.push(tr.target),
                Label::Send(v) => {
                    for rt in t.transitions.iter().filter(|rt| rt.label == Label::Recv(v)) {
                        if omega[rt.source] {
                            add.push(tr.target);
                            add.push(rt.target);
                        }
                    }
                }
                _ => {}
            }
        }
        let mut grew = false;
        for q in add {
            if !omega[q] {
                omega[q] = true;
                grew = true;
            }
        }
        if !grew {
            return Ok(RvClosure { omega, iterations });
        }
        iterations += 1;
    }
}

pub fn leaderless_rv(t: &TemplateAutomaton) -> Result<Verdict, LeaderlessError> {
    let start = Instant::now();
    let closure = rv_closure(t)?;
    let outcome = if demand_within(t, &closure.omega) {
        Outcome::Coverable
    } else {
        Outcome::Safe
    };
    let mut stats = Stats::default();
    stats.set("iterations", closure.iterations as u64);
    stats.set("omega_states", closure.states().len() as u64);
    stats.wall = start.elapsed();
    Ok(Verdict {
        outcome,
        witness: None,
        stats,
    })
}

/// Abstract node of the store engine: ω-populated states and the store value.
pub type StoreNode = (BTreeSet<StateId>, ValueId);

#[derive(Clone, Debug)]
pub struct StoreExploration {
    pub nodes: BTreeSet<StoreNode>,
}

pub fn store_exploration(t: &TemplateAutomaton, budget: usize) -> Result<StoreExploration, LeaderlessError> {
    check_shape(t, SemanticsKind::Store)?;
    let omega0: BTreeSet<StateId> = t
        .init
        .counts
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_omega())
        .map(|(q, _)| q)
        .collect();
    let root = (omega0, t.init.store0.expect("store templates carry store_init"));
    let mut nodes = BTreeSet::from([root.clone()]);
    let mut queue = VecDeque::from([root]);
    while let Some((omega, v)) = queue.pop_front() {
        for tr in &t.transitions {
            if !omega.contains(&tr.source) {
                continue;
            }
            let store = match tr.label {
                Label::Tau => v,
                Label::Read(u) if u == v => v,
                Label::Write(u) => u,
                _ => continue,
            };
            let mut next = omega.clone();
            next.insert(tr.target);
            let node = (next, store);
            if !nodes.contains(&node) {
                if nodes.len() >= budget {
                    return Err(LeaderlessError::BudgetExceeded(budget));
                }
                nodes.insert(node.clone());
                queue.push_back(node);
            }
        }
    }
    Ok(StoreExploration { nodes })
}

pub fn leaderless_store(t: &TemplateAutomaton, budget: usize) -> Result<Verdict, LeaderlessError> {
    let start = Instant::now();
    let explored = store_exploration(t, budget)?;
    let covered = explored.nodes.iter().any(|(omega, _)| {
        t.target
            .demand
            .iter()
            .enumerate()
            .all(|(q, &d)| d == 0 || omega.contains(&q))
    });
    let mut stats = Stats::default();
    stats.set("nodes", explored.nodes.len() as u64);
    stats.wall = start.elapsed();
    Ok(Verdict {
        outcome: if covered { Outcome::Coverable } else { Outcome::Safe },
        witness: None,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_template;

    #[test]
    fn rendezvous_fixed_point() {
        let t = parse_template(
            "semantics rendezvous\nvalues v\nstates q1 q2 q3 q4\ninit q1=omega\ntarget q4\n\
             trans q1 v! q3\ntrans q1 v? q4\n",
        )
        .unwrap();
        let c = rv_closure(&t).unwrap();
        assert_eq!(c.states(), vec![0, 2, 3]);
        assert_eq!(c.iterations, 1);
        assert_eq!(leaderless_rv(&t).unwrap().outcome, Outcome::Coverable);
    }

    #[test]
    fn rendezvous_without_transitions_or_partner() {
        let t = parse_template("semantics rendezvous\nstates q1 q2\ninit q1=omega\ntarget q2\n").unwrap();
        assert_eq!(rv_closure(&t).unwrap().states(), vec![0]);
        assert_eq!(leaderless_rv(&t).unwrap().outcome, Outcome::Safe);
        let lone =
            parse_template("semantics rendezvous\nvalues v\nstates q1 q2\ninit q1=omega\ntarget q2\ntrans q1 v! q2\n")
                .unwrap();
        assert_eq!(rv_closure(&lone).unwrap().states(), vec![0]);
        assert_eq!(leaderless_rv(&lone).unwrap().outcome, Outcome::Safe);
    }

    #[test]
    fn rendezvous_preconditions() {
        let t = parse_template("semantics rendezvous\nstates q1 q2\ninit q1=1 q2=omega\ntarget q2\n").unwrap();
        assert_eq!(rv_closure(&t), Err(LeaderlessError::HasLeader));
        let s =
            parse_template("semantics store\nvalues f\nstates q1\ninit q1=omega\nstore_init f\ntarget q1\n").unwrap();
        assert!(matches!(rv_closure(&s), Err(LeaderlessError::WrongKind { .. })));
    }

    #[test]
    fn store_write_enables_read() {
        let t = parse_template(
            "semantics store\nvalues f v\nstates q1 q2 q3\ninit q1=omega\nstore_init f\ntarget q3\n\
             trans q1 w(v) q2\ntrans q1 r(v) q3\n",
        )
        .unwrap();
        let e = store_exploration(&t, DEFAULT_NODE_BUDGET).unwrap();
        assert!(e.nodes.contains(&(BTreeSet::from([0, 1, 2]), 1)));
        assert_eq!(
            leaderless_store(&t, DEFAULT_NODE_BUDGET).unwrap().outcome,
            Outcome::Coverable
        );
    }

    #[test]
    fn store_read_guard_blocks() {
        let t = parse_template(
            "semantics store\nvalues f v\nstates q1 q2\ninit q1=omega\nstore_init f\ntarget q2\ntrans q1 r(v) q2\n",
        )
        .unwrap();
        assert_eq!(
            leaderless_store(&t, DEFAULT_NODE_BUDGET).unwrap().outcome,
            Outcome::Safe
        );
        let empty = parse_template("semantics store\nvalues f\nstates q1 q2\ninit q1=omega\nstore_init f\ntarget q2\n")
            .unwrap();
        let e = store_exploration(&empty, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(e.nodes, BTreeSet::from([(BTreeSet::from([0]), 0)]));
    }

    #[test]
    fn store_budget_is_explicit() {
        let t = parse_template(
            "semantics store\nvalues f v\nstates q1 q2\ninit q1=omega\nstore_init f\ntarget q2\ntrans q1 w(v) q2\n",
        )
        .unwrap();
        assert_eq!(
            store_exploration(&t, 1).unwrap_err(),
            LeaderlessError::BudgetExceeded(1)
        );
    }
}
