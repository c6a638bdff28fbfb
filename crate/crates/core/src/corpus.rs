//! Seeded random templates for cross-checking the engines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::count::Count;
use crate::model::{InitialSpec, Label, SemanticsKind, TargetSpec, TemplateAutomaton, Transition};

#[derive(Clone, Copy, Debug)]
pub struct CorpusParams {
    pub min_states: usize,
    pub max_states: usize,
    pub max_values: usize,
    /// Bound on generated transitions; broadcast completion adds self-loops on top.
    pub max_transitions: usize,
    pub max_demand: u32,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            min_states: 2,
            max_states: 5,
            max_values: 2,
            max_transitions: 8,
            max_demand: 2,
        }
    }
}

pub const ALL_KINDS: [SemanticsKind; 4] = [
    SemanticsKind::Broadcast,
    SemanticsKind::RendezVous,
    SemanticsKind::Store,
    SemanticsKind::LockStore,
];

fn random_label<R: Rng>(rng: &mut R, kind: SemanticsKind, nv: usize) -> Label {
    let v = rng.random_range(0..nv);
    match (kind, rng.random_range(0..3)) {
        (_, 0) => Label::Tau,
        (SemanticsKind::Broadcast, 1) => Label::BcastSend(v),
        (SemanticsKind::Broadcast, _) => Label::BcastRecv(v),
        (SemanticsKind::RendezVous, 1) => Label::Send(v),
        (SemanticsKind::RendezVous, _) => Label::Recv(v),
        (_, 1) => Label::Write(v),
        (_, _) => Label::Read(v),
    }
}

/// Lock-store transitions respect a fixed free/held assignment, so the
/// propagated lock status can never be inconsistent.
fn random_lock_transition<R: Rng>(rng: &mut R, held: &[bool], nv: usize) -> Transition {
    let nq = held.len();
    let source = rng.random_range(0..nq);
    let pick = |rng: &mut R, want_held: bool| -> Option<usize> {
        let cands: Vec<usize> = (0..nq).filter(|&q| held[q] == want_held).collect();
        (!cands.is_empty()).then(|| cands[rng.random_range(0..cands.len())])
    };
    let fallback = Transition {
        source,
        label: Label::Tau,
        target: source,
    };
    if held[source] {
        let v = rng.random_range(0..nv);
        let (label, to_held) = match rng.random_range(0..4) {
            0 => (Label::Tau, true),
            1 => (Label::Write(v), true),
            2 => (Label::Read(v), true),
            _ => (Label::Unlock, false),
        };
        pick(rng, to_held).map_or(fallback, |target| Transition { source, label, target })
    } else {
        let (label, to_held) = if rng.random_bool(0.6) {
            (Label::Lock, true)
        } else {
            (Label::Tau, false)
        };
        pick(rng, to_held).map_or(fallback, |target| Transition { source, label, target })
    }
}

/// A valid template of `kind`; the same seed always yields the same template.
pub fn random_template(kind: SemanticsKind, seed: u64, p: &CorpusParams) -> TemplateAutomaton {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((kind as u64) << 56));
    let nq = rng.random_range(p.min_states..=p.max_states);
    let nv = rng.random_range(1..=p.max_values);
    let states: Vec<String> = (1..=nq).map(|i| format!("q{i}")).collect();
    let values: Vec<String> = (0..nv).map(|i| ((b'a' + i as u8) as char).to_string()).collect();

    // In lock-store templates state 0 and 1 are free so init has room.
    let held: Vec<bool> = (0..nq)
        .map(|q| kind == SemanticsKind::LockStore && q >= 2 && rng.random_bool(0.5))
        .collect();
    let free: Vec<usize> = (0..nq).filter(|&q| !held[q]).collect();

    let ntrans = rng.random_range(1..=p.max_transitions);
    let mut transitions = Vec::with_capacity(ntrans);
    for _ in 0..ntrans {
        let t = if kind == SemanticsKind::LockStore {
            random_lock_transition(&mut rng, &held, nv)
        } else {
            Transition {
                source: rng.random_range(0..nq),
                label: random_label(&mut rng, kind, nv),
                target: rng.random_range(0..nq),
            }
        };
        transitions.push(t);
    }

    let mut counts = vec![Count::ZERO; nq];
    let omega_state = free[rng.random_range(0..free.len())];
    match rng.random_range(0..10) {
        0..=4 => {
            counts[omega_state] = Count::Omega;
            if rng.random_bool(0.3) {
                counts[free[rng.random_range(0..free.len())]] = Count::Omega;
            }
        }
        5..=8 => {
            let leader = free[rng.random_range(0..free.len())];
            counts[omega_state] = Count::Omega;
            if leader != omega_state {
                counts[leader] = Count::Fin(1);
            }
        }
        _ => counts[omega_state] = Count::Fin(rng.random_range(1..=2)),
    }
    let store0 = kind.has_store().then(|| rng.random_range(0..nv));

    let mut demand = vec![0; nq];
    for _ in 0..rng.random_range(1..=2) {
        demand[rng.random_range(0..nq)] = rng.random_range(1..=p.max_demand);
    }

    let t = TemplateAutomaton {
        kind,
        states,
        values,
        transitions,
        init: InitialSpec { counts, store0 },
        target: TargetSpec { demand },
    };
    if kind == SemanticsKind::Broadcast {
        t.complete_receives().expect("broadcast template")
    } else {
        t
    }
}

/// `count` templates of `kind` drawn from consecutive seeds.
pub fn random_corpus(kind: SemanticsKind, count: usize, base_seed: u64, p: &CorpusParams) -> Vec<TemplateAutomaton> {
    (0..count as u64)
        .map(|i| random_template(kind, base_seed + i, p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_template, validate};

    #[test]
    fn generated_templates_are_valid_and_round_trip() {
        let p = CorpusParams::default();
        for kind in ALL_KINDS {
            for t in random_corpus(kind, 300, 7, &p) {
                let r = validate(&t);
                assert!(r.is_valid(), "{}\n{}", t, r.render(&t));
                assert_eq!(parse_template(&t.to_string()).unwrap(), t);
                assert!(t.states.len() <= p.max_states && t.values.len() <= p.max_values);
            }
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let p = CorpusParams::default();
        assert_eq!(
            random_template(SemanticsKind::Store, 42, &p),
            random_template(SemanticsKind::Store, 42, &p)
        );
    }
}
