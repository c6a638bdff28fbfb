//! Backward saturation over upward-closed sets, with predecessor links kept
//! for witness extraction.

use std::time::Instant;

use tracing::debug;

use super::{EngineError, Outcome, Stats, Verdict};
use crate::count::Count;
use crate::net::{ExtendedNet, Marking};
use crate::par::{self, Parallelism};
use crate::semantics::{Step, Witness};
use crate::ucs::{
    broadcast_pred_candidates, intersects_initial, leq, minimize, minimize_tagged, pred_basis_ordinary, Basis,
    Designation,
};

#[derive(Clone, Copy, Debug)]
pub struct BackwardOptions {
    pub parallelism: Parallelism,
    /// Drop candidates that break the store/lock token invariants.
    pub prune_invariants: bool,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        BackwardOptions {
            parallelism: Parallelism::default(),
            prune_invariants: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Via {
    Ordinary(usize),
    Broadcast { index: usize, designation: Designation },
}

/// `marking` fires `via` into something covering node `parent`.
#[derive(Clone, Debug)]
pub struct Link {
    pub via: Via,
    pub parent: usize,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub marking: Marking,
    pub link: Option<Link>,
}

#[derive(Clone, Debug)]
pub struct BackwardRun {
    pub verdict: Verdict,
    /// Final basis of the backward-reachable set.
    pub basis: Basis,
    /// Every element ever added, including ones later subsumed.
    pub nodes: Vec<Node>,
    /// Node whose upward closure meets the initial family.
    pub cover: Option<usize>,
}

fn predecessors(net: &ExtendedNet, m: &[u32]) -> Vec<(Marking, Via)> {
    let mut out: Vec<(Marking, Via)> = net
        .ordinary
        .iter()
        .enumerate()
        .map(|(t, tr)| (pred_basis_ordinary(tr, m), Via::Ordinary(t)))
        .collect();
    for b in 0..net.broadcasts.len() {
        let cands = broadcast_pred_candidates(net, b, m).expect("dimension matches the net");
        out.extend(
            minimize_tagged(cands)
                .into_iter()
                .map(|(d, designation)| (d, Via::Broadcast { index: b, designation })),
        );
    }
    out
}

pub fn backward_check(net: &ExtendedNet, opts: &BackwardOptions) -> Result<BackwardRun, EngineError> {
    let start = Instant::now();
    let mut nodes = vec![Node {
        marking: net.target.clone(),
        link: None,
    }];
    let mut alive = vec![true];
    let mut basis: Vec<usize> = vec![0];
    let mut frontier: Vec<usize> = vec![0];
    let (mut iterations, mut candidates, mut pruned, mut max_frontier) = (0u64, 0u64, 0u64, 0u64);

    while !frontier.is_empty() {
        iterations += 1;
        let live: Vec<usize> = frontier.iter().copied().filter(|&i| alive[i]).collect();
        max_frontier = max_frontier.max(live.len() as u64);
        let preds = par::map(opts.parallelism, &live, |&i| predecessors(net, &nodes[i].marking));
        let mut next = Vec::new();
        for (&parent, cands) in live.iter().zip(preds) {
            for (d, via) in cands {
                candidates += 1;
                if opts.prune_invariants && net.exceeds_invariants(&d) {
                    pruned += 1;
                    continue;
                }
                if basis.iter().any(|&b| alive[b] && leq(&nodes[b].marking, &d)) {
                    continue;
                }
                for &b in &basis {
                    if alive[b] && leq(&d, &nodes[b].marking) {
                        alive[b] = false;
                    }
                }
                let id = nodes.len();
                nodes.push(Node {
                    marking: d,
                    link: Some(Link { via, parent }),
                });
                alive.push(true);
                basis.push(id);
                next.push(id);
            }
        }
        basis.retain(|&b| alive[b]);
        debug!(
            iteration = iterations,
            basis = basis.len(),
            frontier = next.len(),
            "backward round"
        );
        frontier = next;
    }

    let final_basis = minimize(basis.iter().map(|&b| nodes[b].marking.clone()));
    let cover = intersects_initial(&final_basis, &net.init).map(|e| {
        *basis
            .iter()
            .find(|&&b| &nodes[b].marking == e)
            .expect("basis element has a node")
    });

    let mut stats = Stats::default();
    stats.set("iterations", iterations);
    stats.set("basis_size", final_basis.len() as u64);
    stats.set("elements", nodes.len() as u64);
    stats.set("candidates", candidates);
    stats.set("pruned", pruned);
    stats.set("max_frontier", max_frontier);

    let (outcome, witness) = match cover {
        Some(id) => (Outcome::Coverable, Some(extract_witness(net, &nodes, id)?)),
        None => (Outcome::Safe, None),
    };
    stats.wall = start.elapsed();
    Ok(BackwardRun {
        verdict: Verdict {
            outcome,
            witness,
            stats,
        },
        basis: final_basis,
        nodes,
        cover,
    })
}

/// Concretize the chain below `cover`: start from the initial family with each
/// ω entry set to the covering element's demand there, then replay the recorded
/// transitions forward. Broadcasts route designated tokens as recorded and
/// surplus tokens along the first transfer edge of their place.
pub fn extract_witness(net: &ExtendedNet, nodes: &[Node], cover: usize) -> Result<Witness, EngineError> {
    let internal = |msg: String| EngineError::Internal(msg);
    let e = &nodes[cover].marking;
    let mut cur: Marking = net
        .init
        .0
        .iter()
        .zip(e)
        .map(|(c, &need)| match *c {
            Count::Fin(k) => k,
            Count::Omega => need,
        })
        .collect();
    if !leq(e, &cur) {
        return Err(internal("covering element exceeds the initial configuration".into()));
    }
    let init = net.config_of_marking(&cur);
    let mut steps = Vec::new();
    let mut id = cover;
    while let Some(link) = &nodes[id].link {
        match &link.via {
            Via::Ordinary(t) => {
                cur = net
                    .fire_ordinary_marking(&cur, *t)
                    .map_err(|e| internal(format!("replaying transition {t}: {e}")))?;
                steps.push(net.ordinary[*t].tag.step());
            }
            Via::Broadcast { index, designation } => {
                let bt = &net.broadcasts[*index];
                let mut routing: Vec<((usize, usize), u32)> = Vec::new();
                let mut assignment: Vec<(usize, u32)> = Vec::new();
                for s in 0..net.num_states {
                    let receivers = cur[s] - u32::from(s == bt.sender_pre);
                    let mut used = 0;
                    for &((from, to), k) in designation.iter().filter(|((from, _), _)| *from == s) {
                        let edge = bt
                            .edge(from, to)
                            .ok_or_else(|| internal(format!("no transfer edge {from}->{to}")))?;
                        routing.push(((from, to), k));
                        assignment.push((edge.recv, k));
                        used += k;
                    }
                    if used > receivers {
                        return Err(internal(format!("designation uses {used} of {receivers} tokens")));
                    }
                    if receivers > used {
                        let edge = bt
                            .first_edge_from(s)
                            .ok_or_else(|| internal(format!("place {s} has no transfer edge")))?;
                        routing.push(((edge.from, edge.to), receivers - used));
                        assignment.push((edge.recv, receivers - used));
                    }
                }
                cur = net
                    .fire_broadcast(&cur, *index, &routing)
                    .map_err(|e| internal(format!("replaying broadcast {index}: {e}")))?;
                assignment.sort_unstable();
                let mut merged: Vec<(usize, u32)> = Vec::new();
                for (tr, k) in assignment {
                    match merged.last_mut() {
                        Some((last, total)) if *last == tr => *total += k,
                        _ => merged.push((tr, k)),
                    }
                }
                steps.push(Step::Broadcast {
                    send: bt.send,
                    assignment: merged,
                });
            }
        }
        if !leq(&nodes[link.parent].marking, &cur) {
            return Err(internal(
                "replayed marking does not cover the recorded successor".into(),
            ));
        }
        id = link.parent;
    }
    Ok(Witness {
        n: init.total(),
        init,
        steps,
    })
}
